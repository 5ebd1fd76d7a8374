"""Gaussian filter predictions for ensemble-averaged Wigner fields.

For displacement-type noise the ensemble average of the decoupled channel is
a convolution of the initial Wigner field with a Gaussian whose 2x2
covariance comes from a quadratic form: the per-segment sign pattern of the
intervention schedule (the switching function) sandwiching the noise
covariance kernel. Squeeze-type noise has no such convolution form, so its
average is taken directly over sampled residual squeeze parameters.

Kernel tables are expressed per unit path length squared: cell (k, k') holds
the kick-component covariance between segments k and k' divided by
delta_ell^2, so the quadratic form sum_kk' s_k s_k' K[k,k'] dl_k dl_k'
reduces to n s^2 dl^2 for i.i.d. segments of variance s^2 dl^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .noise import CovarianceTables
from .protocol import InterventionSchedule
from .wigner import PhaseSpaceGrid, scale


class DegenerateFilterError(ValueError):
    """The predicted smearing collapses onto a line in phase space."""


@dataclass(eq=False)
class SwitchingFunction:
    """Piecewise-constant +-1 weight of the noise along the path."""

    boundaries: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        self.boundaries = np.asarray(self.boundaries, dtype=float)
        self.signs = np.asarray(self.signs, dtype=float)
        if self.boundaries.ndim != 1 or self.boundaries.size < 2:
            raise ValueError("need at least one segment")
        if self.boundaries[0] != 0.0 or np.any(np.diff(self.boundaries) <= 0):
            raise ValueError("boundaries must start at 0 and increase")
        if self.signs.shape != (self.boundaries.size - 1,):
            raise ValueError("need exactly one sign per segment")
        if not np.all(np.isin(self.signs, (-1.0, 1.0))):
            raise ValueError("signs must be +-1")

    @property
    def n(self) -> int:
        return self.signs.size

    @property
    def delta_ells(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @classmethod
    def alternating(cls, n: int, delta_ell: float = 1.0) -> "SwitchingFunction":
        """The echo pattern: segment k carries sign (-1)^k, k starting at 1."""
        bounds = np.arange(n + 1) * delta_ell
        signs = np.array([(-1.0) ** k for k in range(1, n + 1)])
        return cls(bounds, signs)

    @classmethod
    def from_schedule(
        cls,
        schedule: InterventionSchedule,
        channel: str = "displacement",
        delta_ell: float = 1.0,
    ) -> "SwitchingFunction":
        """Sign pattern a schedule imprints on one noise channel.

        Only defined when the conjugation weights are real; the combined
        schedule rotates displacement noise through complex phases, which a
        scalar switching function cannot represent.
        """
        if channel == "displacement":
            w = schedule.displacement_weights()
        elif channel == "squeeze":
            w = schedule.squeeze_weights()
        else:
            raise ValueError(f"unknown channel {channel!r}")
        if np.max(np.abs(w.imag)) > 1e-12:
            raise ValueError(
                f"schedule {schedule.kind!r} gives complex {channel} weights; "
                "no scalar switching function exists"
            )
        bounds = np.arange(schedule.segments + 1) * delta_ell
        return cls(bounds, np.sign(w.real))


def quadratic_form(switching: SwitchingFunction, table: np.ndarray) -> float:
    """sum_kk' s_k s_k' table[k, k'] over the raw per-segment table."""
    s = switching.signs
    return float(s @ np.asarray(table) @ s)


@dataclass(eq=False)
class SegmentKernel:
    """Per-unit-length^2 covariance tables of the phase-space kicks."""

    xx: np.ndarray
    pp: np.ndarray
    xp: np.ndarray

    @classmethod
    def iid(cls, n: int, s2: float) -> "SegmentKernel":
        eye = np.eye(n)
        return cls(s2 * eye, s2 * eye, np.zeros((n, n)))

    @classmethod
    def from_alpha_covariance(
        cls, tables: CovarianceTables, delta_ell: float = 1.0
    ) -> "SegmentKernel":
        """Convert complex-amplitude covariances to phase-space kernels.

        A kick alpha moves the field by sqrt(2) (Re alpha, Im alpha), so each
        component covariance doubles on the way to phase space.
        """
        if tables.rr is None:
            raise ValueError("covariance tables carry no displacement channel")
        f = 2.0 / delta_ell**2
        return cls(f * tables.rr, f * tables.ii, f * tables.ri)


def sigma_matrix(switching: SwitchingFunction, kernel: SegmentKernel) -> np.ndarray:
    """2x2 covariance of the residual phase-space kick under the switching.

    Entries are quadratic forms with the segment lengths folded in:
    Sigma_xx = sum_kk' s_k s_k' K_xx[k,k'] dl_k dl_k', and likewise for pp
    and the cross term. For i.i.d. segments of per-unit variance s^2 and the
    alternating pattern this is n s^2 dl^2 on the diagonal, zero off it.
    """
    w = switching.signs * switching.delta_ells
    a = float(w @ kernel.xx @ w)
    b = float(w @ kernel.pp @ w)
    c = float(w @ kernel.xp @ w)
    return np.array([[a, c], [c, b]])


def sigma_matrix_from_kernel(
    switching: SwitchingFunction, kernel_fn, subdiv: int = 8
) -> np.ndarray:
    """Like sigma_matrix but for a continuum kernel callable.

    kernel_fn(l, l') must return the (xx, pp, xp) kernel values; each
    segment-pair cell is integrated with subdiv-point Gauss-Legendre
    quadrature per axis, weighted by the segment signs. The nodes stay in
    the open cells, so kernels with jumps at the boundaries (the
    piecewise-constant case) integrate exactly.
    """
    nodes, weights = np.polynomial.legendre.leggauss(subdiv)
    bounds = switching.boundaries
    n = switching.n

    def cell_rule(k):
        half = 0.5 * (bounds[k + 1] - bounds[k])
        mid = 0.5 * (bounds[k + 1] + bounds[k])
        return mid + half * nodes, half * weights

    acc = np.zeros(3)
    for k in range(n):
        xs, wx = cell_rule(k)
        for kp in range(n):
            ys, wy = cell_rule(kp)
            sgn = switching.signs[k] * switching.signs[kp]
            for xv, wxv in zip(xs, wx):
                vals = np.array([kernel_fn(xv, yv) for yv in ys])
                acc += sgn * wxv * (wy @ vals)
    return np.array([[acc[0], acc[2]], [acc[2], acc[1]]])


def gaussian_filter(sigma: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """Unit-mass Gaussian field with covariance sigma, sampled on the grid.

    Raises DegenerateFilterError when the covariance collapses (determinant
    below 1e-12): the average is then a line distribution the grid cannot
    represent, and the caller should fall back to direct sampling.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2):
        raise ValueError(f"sigma must be 2x2, got {sigma.shape}")
    det = float(np.linalg.det(sigma))
    if det <= 1e-12:
        w, v = np.linalg.eigh(sigma)
        soft = v[:, 0]
        raise DegenerateFilterError(
            f"filter covariance is degenerate (det={det:.3e}); no spread "
            f"along direction (x, p) ~ ({soft[0]:+.3f}, {soft[1]:+.3f})"
        )
    inv = np.linalg.inv(sigma)
    X, P = grid.mesh()
    quad = inv[0, 0] * X**2 + 2 * inv[0, 1] * X * P + inv[1, 1] * P**2
    return np.exp(-0.5 * quad) / (2 * np.pi * np.sqrt(det))


@dataclass(frozen=True)
class IdentityFilter:
    """Marker for a perfectly cancelled kick: convolution is a no-op."""


def cpp_static_filter(
    n: int, delta_ell: float, sigma_jump: float, grid: PhaseSpaceGrid
):
    """Filter for a static displacement drift under the alternating echo.

    With an even number of segments the signed lengths cancel exactly and
    the channel transmits the state untouched (IdentityFilter). With an odd
    count one segment survives, leaving an isotropic Gaussian of variance
    (delta_ell * sigma_jump)^2 per axis. sigma_jump is the per-unit-length
    standard deviation of each phase-space kick component.
    """
    if n < 1:
        raise ValueError(f"need at least one segment, got {n}")
    if n % 2 == 0:
        return IdentityFilter()
    var = (delta_ell * sigma_jump) ** 2
    return gaussian_filter(np.diag([var, var]), grid)


def convolve(filt, field_vals: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """Mass-preserving convolution of a field with a filter on the grid.

    Zero-padded linear convolution scaled by the cell area; accurate when
    both factors decay inside the grid. Odd-sized symmetric grids (the
    default) keep the result exactly centered.
    """
    if isinstance(filt, IdentityFilter):
        return field_vals.copy()
    filt = np.asarray(filt)
    if filt.shape != field_vals.shape or field_vals.shape != grid.shape():
        raise ValueError("filter, field and grid shapes must all match")
    return fftconvolve(field_vals, filt, mode="same") * grid.dx * grid.dp


def squeeze_average(
    field_vals: np.ndarray, grid: PhaseSpaceGrid, gammas
) -> np.ndarray:
    """Average of the field over sampled residual squeeze parameters.

    This is the Monte-Carlo stand-in for a closed-form filter: squeeze noise
    deforms rather than shifts the field, so the ensemble average is taken
    by resampling per draw. Fewer than 100 samples triggers a warning since
    the average is then dominated by sampling noise.
    """
    gammas = np.asarray(gammas, dtype=float)
    if gammas.ndim != 1 or gammas.size == 0:
        raise ValueError("need a 1d, nonempty list of squeeze parameters")
    if gammas.size < 100:
        warnings.warn(
            f"averaging over only {gammas.size} squeeze samples; "
            "expect visible Monte-Carlo noise",
            stacklevel=2,
        )
    if np.all(gammas == 0.0):
        return field_vals.copy()
    out = np.zeros_like(field_vals)
    for g in gammas:
        if g == 0.0:
            out += field_vals
        else:
            out += scale(field_vals, grid, g)
    return out / gammas.size
