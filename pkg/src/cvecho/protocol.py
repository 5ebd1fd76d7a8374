"""Decoupling groups and intervention schedules.

All corrections used here are number-basis rotations diag(exp(-i theta n))
for angles that are rational multiples of pi (parity is the half turn).
Angles are tracked as exact fractions of pi so that cumulative products,
closing corrections and per-segment conjugation weights come out exact for
the quarter-turn schedules instead of accumulating float error.

A schedule interleaves corrections with the noisy segments: the boundary op
at index 0 acts before the first segment, the op at index j acts right after
segment j, and one closing correction restores the identity frame at the
end. Conjugating segment k's noise through the corrections applied so far
multiplies a displacement generator by exp(i pi t) and a squeeze generator
by exp(2 i pi t), where t is the accumulated turn fraction; for the
schedules built here these weights alternate in sign, which is what cancels
slowly drifting noise.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fock import FockSpace

# exp(-i pi/2 * j) for j = 0..3; these are exact complex literals
_QUARTER = (1 + 0j, -1j, -1 + 0j, 1j)


@dataclass(frozen=True)
class ControlOp:
    """Rotation by `turns` * pi, with turns kept as an exact fraction mod 2."""

    turns: Fraction = Fraction(0)

    @staticmethod
    def from_turns(t) -> "ControlOp":
        return ControlOp(Fraction(t) % 2)

    @property
    def angle(self) -> float:
        return float(self.turns) * math.pi

    @property
    def is_identity(self) -> bool:
        return self.turns == 0

    @property
    def label(self) -> str:
        if self.turns == 0:
            return "identity"
        if self.turns == 1:
            return "parity"
        return "rotation"

    def compose(self, other: "ControlOp") -> "ControlOp":
        return ControlOp((self.turns + other.turns) % 2)

    def inverse(self) -> "ControlOp":
        return ControlOp((-self.turns) % 2)

    def _unit(self, half_steps: Fraction) -> complex:
        """exp(-i pi half_steps), exact when half_steps is a multiple of 1/2."""
        q = half_steps * 2
        if q.denominator == 1:
            return _QUARTER[q.numerator % 4]
        return cmath.exp(-1j * math.pi * float(half_steps))

    def phases(self, space: FockSpace) -> np.ndarray:
        """Diagonal of the rotation in the number basis."""
        if self.turns.denominator <= 2:
            # quarter-turn multiples cycle through {1, -i, -1, i} exactly
            q = self.turns * 2
            idx = (q.numerator * np.arange(space.dim)) % 4
            return np.array(_QUARTER)[idx]
        return np.exp(-1j * self.angle * space.levels)

    def matrix(self, space: FockSpace) -> np.ndarray:
        return np.diag(self.phases(space))

    def displacement_weight(self) -> complex:
        """Factor picked up by a displacement amplitude conjugated through
        this accumulated rotation: alpha -> alpha * exp(i pi turns)."""
        return np.conj(self._unit(self.turns))

    def squeeze_weight(self) -> complex:
        """Factor picked up by a squeeze parameter: z -> z * exp(2 i pi turns)."""
        return np.conj(self._unit(2 * self.turns))


IDENTITY_OP = ControlOp()
PARITY_OP = ControlOp(Fraction(1))


@dataclass(frozen=True)
class ControlGroup:
    """A finite set of rotations whose average kills target generators."""

    name: str
    elements: tuple[ControlOp, ...]


def parity_group() -> ControlGroup:
    return ControlGroup("parity", (IDENTITY_OP, PARITY_OP))


def squeeze_set() -> ControlGroup:
    return ControlGroup("squeeze", (IDENTITY_OP, ControlOp(Fraction(1, 2))))


def gaussian_group() -> ControlGroup:
    return ControlGroup(
        "gaussian",
        tuple(ControlOp(Fraction(j, 2)) for j in range(4)),
    )


def cyclic_group(m: int) -> ControlGroup:
    """Order-2m rotation group; averages away a^p for every p = 1..2m-1."""
    if m < 1:
        raise ValueError(f"cyclic group order parameter must be >= 1, got {m}")
    return ControlGroup(
        f"cyclic-{m}",
        tuple(ControlOp(Fraction(j, m)) for j in range(2 * m)),
    )


def group_average_residual(group: ControlGroup, op: np.ndarray, space: FockSpace) -> float:
    """Largest matrix element magnitude of the group-averaged operator.

    Zero residual means the group decouples that generator completely.
    """
    avg = np.zeros_like(op, dtype=complex)
    for g in group.elements:
        d = g.phases(space)
        avg += np.conj(d)[:, None] * op * d[None, :]
    avg /= len(group.elements)
    return float(np.max(np.abs(avg)))


@dataclass
class InterventionSchedule:
    """Corrections pinned to segment boundaries, plus the closing op.

    boundary_ops has segments + 1 entries; entry j acts after segment j
    (entry 0 before the first segment). When segments > interventions the
    non-trivial ops sit every segments/interventions boundaries and the rest
    are identities. The closing correction is chosen so the product of every
    correction is exactly the identity.
    """

    kind: str
    interventions: int
    segments: int
    boundary_ops: list[ControlOp]
    closing: ControlOp

    def __post_init__(self):
        if len(self.boundary_ops) != self.segments + 1:
            raise ValueError(
                f"expected {self.segments + 1} boundary ops, got {len(self.boundary_ops)}"
            )
        total = IDENTITY_OP
        for op in self.boundary_ops:
            total = total.compose(op)
        if not total.compose(self.closing).is_identity:
            raise ValueError("closing correction does not restore the identity")

    def cumulative(self, j: int) -> ControlOp:
        """Product of boundary ops 0..j (the frame after segment j's op)."""
        if not 0 <= j <= self.segments:
            raise ValueError(f"boundary index {j} out of range")
        return self._cumulative[j]

    @property
    def _cumulative(self) -> list[ControlOp]:
        cache = self.__dict__.get("_cumulative_cache")
        if cache is None:
            cache = []
            cur = IDENTITY_OP
            for op in self.boundary_ops:
                cur = cur.compose(op)
                cache.append(cur)
            self.__dict__["_cumulative_cache"] = cache
        return cache

    def displacement_weights(self) -> np.ndarray:
        """Per-segment factors the displacement noise picks up.

        The composed channel displaces by sum_k alpha_k * weight_k; for the
        parity schedule the weights alternate as (-1)^k with k starting at 1.
        """
        return np.array(
            [self.cumulative(k - 1).displacement_weight() for k in range(1, self.segments + 1)]
        )

    def squeeze_weights(self) -> np.ndarray:
        """Per-segment factors the squeeze noise picks up."""
        return np.array(
            [self.cumulative(k - 1).squeeze_weight() for k in range(1, self.segments + 1)]
        )

    def effective_displacement(self, alphas: np.ndarray) -> complex:
        return complex(np.sum(np.asarray(alphas) * self.displacement_weights()))

    def effective_squeeze(self, zs: np.ndarray) -> complex:
        return complex(np.sum(np.asarray(zs) * self.squeeze_weights()))


def _build(kind: str, base_ops: list[ControlOp], n: int, segments: int | None) -> InterventionSchedule:
    if n < 1:
        raise ValueError(f"need at least one intervention, got {n}")
    if segments is None:
        segments = n
    if segments < n or segments % n != 0:
        raise ValueError(
            f"segments ({segments}) must be a positive multiple of interventions ({n})"
        )
    stride = segments // n
    ops = [IDENTITY_OP] * (segments + 1)
    for i, op in enumerate(base_ops):
        ops[i * stride] = op
    total = IDENTITY_OP
    for op in ops:
        total = total.compose(op)
    return InterventionSchedule(kind, n, segments, ops, total.inverse())


def schedule_displacement(n: int, segments: int | None = None) -> InterventionSchedule:
    """Parity echo: a half turn at every intervention point.

    Conjugation flips the sign of the displacement noise on every other
    stretch, so a static drift cancels pairwise.
    """
    return _build("parity", [PARITY_OP] * (n + 1), n, segments)


def schedule_squeezing(n: int, segments: int | None = None) -> InterventionSchedule:
    """Quarter-turn echo that flips the sign of squeeze generators.

    The opening op is a quarter turn, after odd segments it is undone and
    after even segments reapplied, so the accumulated frame alternates
    between a quarter turn and none.
    """
    quarter = ControlOp(Fraction(1, 2))
    ops = [quarter]
    for k in range(1, n + 1):
        ops.append(quarter.inverse() if k % 2 == 1 else quarter)
    return _build("squeeze", ops, n, segments)


def schedule_combined(n: int, segments: int | None = None) -> InterventionSchedule:
    """Quarter-turn ladder that decouples displacement and squeezing at once.

    Equivalent to the cyclic schedule with m = 2: the accumulated frame
    walks through all four quarter turns, so displacement weights cycle
    through 1, i, -1, -i and squeeze weights through 1, -1.
    """
    sched = schedule_cyclic(2, n, segments)
    return InterventionSchedule(
        "combined", sched.interventions, sched.segments, sched.boundary_ops, sched.closing
    )


def schedule_cyclic(m: int, n: int, segments: int | None = None) -> InterventionSchedule:
    """Repeated 1/m turns; decouples generators up to degree 2m - 1.

    No opening op: the k-th intervention advances the frame to k/m turns.
    """
    if m < 1:
        raise ValueError(f"cyclic schedule needs m >= 1, got {m}")
    step = ControlOp(Fraction(1, m))
    ops = [IDENTITY_OP] + [step] * n
    return _build(f"cyclic-{m}", ops, n, segments)


def write_schedule_csv(schedule: InterventionSchedule, path) -> None:
    """Dump a schedule as k,op,angle rows.

    Rows 0..segments are the boundary ops (k is the boundary index); the
    final row, k = segments + 1, is the closing correction.
    """
    with open(path, "w") as fh:
        fh.write("k,op,angle\n")
        for j, op in enumerate(schedule.boundary_ops):
            fh.write(f"{j},{op.label},{float(op.angle)!r}\n")
        fh.write(
            f"{schedule.segments + 1},{schedule.closing.label},{float(schedule.closing.angle)!r}\n"
        )
