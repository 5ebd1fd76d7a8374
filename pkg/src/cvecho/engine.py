"""Monte-Carlo transfer simulations: noisy segments with interleaved
corrections, fidelity tracking and ensemble-averaged Wigner fields.

Evolution of one trajectory: the opening correction, then for each segment
the noise unitary D(alpha_k) S(z_k) followed by that boundary's correction,
then the closing correction. Recorded intermediate states are expressed in
the corrected frame (the accumulated correction is undone before recording)
so that a noise-free run reports the unchanged input after every segment;
the final recorded state coincides with the literal post-closing state
because the closing op is exactly the inverse of the accumulated frame.

Determinism: trajectory t draws its noise from stream t of the config seed,
workers never share accumulators, and reductions run in trajectory order,
so results are bit-identical for any thread count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import curve_fit

from .fock import (
    DensityMatrix,
    FockSpace,
    MixtureComponent,
    TruncationLeakError,
    coherent_state,
    displacement,
    gaussian_mixture_state,
    squeeze,
    vacuum_state,
)
from .noise import NoiseConfig, NoiseTrajectory, sample_trajectory
from .protocol import (
    InterventionSchedule,
    schedule_combined,
    schedule_cyclic,
    schedule_displacement,
    schedule_squeezing,
)
from .wigner import PhaseSpaceGrid, wigner_of_state

logger = logging.getLogger(__name__)

PROTOCOL_KINDS = ("none", "displacement", "squeezing", "combined", "cyclic")


class SimulationError(RuntimeError):
    """A simulation could not be run as configured."""


@dataclass(frozen=True)
class GridSpec:
    extent: float = 5.0
    points: int = 101

    def build(self) -> PhaseSpaceGrid:
        return PhaseSpaceGrid.default(self.extent, self.points)


@dataclass(frozen=True)
class ProtocolSpec:
    """Which decoupling schedule to run, named after the noise it targets."""

    kind: str = "none"
    interventions: int | None = None
    m: int = 2

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(
                f"unknown protocol kind {self.kind!r}, expected one of {PROTOCOL_KINDS}"
            )
        if self.interventions is not None and self.interventions < 1:
            raise ValueError("interventions must be positive when given")

    def build_schedule(self, segments: int) -> InterventionSchedule | None:
        if self.kind == "none":
            return None
        n = self.interventions if self.interventions is not None else segments
        if segments % n != 0:
            raise SimulationError(
                f"{n} interventions cannot be placed evenly on {segments} segments"
            )
        if self.kind == "displacement":
            return schedule_displacement(n, segments)
        if self.kind == "squeezing":
            return schedule_squeezing(n, segments)
        if self.kind == "combined":
            return schedule_combined(n, segments)
        return schedule_cyclic(self.m, n, segments)


@dataclass(frozen=True)
class InitialStateSpec:
    kind: str = "vacuum"
    alpha: complex = 0j
    components: tuple[MixtureComponent, ...] = ()

    def build(self, space: FockSpace) -> DensityMatrix:
        if self.kind == "vacuum":
            return vacuum_state(space)
        if self.kind == "coherent":
            return coherent_state(space, self.alpha)
        if self.kind == "mixture":
            return gaussian_mixture_state(space, list(self.components))
        raise ValueError(f"unknown initial state kind {self.kind!r}")


@dataclass(frozen=True)
class SimConfig:
    noise: NoiseConfig
    protocol: ProtocolSpec = ProtocolSpec()
    trajectories: int = 100
    fock_dim: int = 60
    leak_threshold: float = 1e-6
    grid: GridSpec = GridSpec()
    initial: InitialStateSpec = InitialStateSpec()
    compute_wigner: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    def space(self) -> FockSpace:
        return FockSpace(dim=self.fock_dim, leak_threshold=self.leak_threshold)


def _protocol_covers(protocol: ProtocolSpec, noise_kind: str) -> bool:
    if protocol.kind == "none":
        return True
    covers = {
        "displacement": {"displacement"},
        "squeezing": {"squeezing"},
        "combined": {"displacement", "squeezing", "combined"},
        "cyclic": {"displacement"} if protocol.m == 1 else {"displacement", "squeezing", "combined"},
    }
    return noise_kind in covers[protocol.kind]


class _SegmentUnitaries:
    """Per-trajectory cache of segment unitaries D(alpha) S(z).

    The jump process repeats values across segments, so most segments reuse
    a previously built matrix.
    """

    def __init__(self, space: FockSpace):
        self.space = space
        self._cache: dict[tuple[complex, complex], np.ndarray | None] = {}

    def get(self, alpha: complex, z: complex) -> np.ndarray | None:
        key = (complex(alpha), complex(z))
        if key not in self._cache:
            if alpha == 0 and z == 0:
                self._cache[key] = None  # identity, skip the matmul
            else:
                u = None
                if z != 0:
                    u = squeeze(self.space, z)
                if alpha != 0:
                    d = displacement(self.space, alpha)
                    u = d if u is None else d @ u
                self._cache[key] = u
        return self._cache[key]


def _evolve_vector(
    psi0: np.ndarray,
    trajectory: NoiseTrajectory,
    schedule: InterventionSchedule | None,
    space: FockSpace,
    unitaries: _SegmentUnitaries,
) -> tuple[np.ndarray, float]:
    """Evolve a pure state, returning frame-corrected recorded vectors.

    The result has segments + 1 rows; row 0 is the input. Raises
    TruncationLeakError as soon as the guard band exceeds the threshold.
    """
    n = len(trajectory)
    guard = space.guard_start
    recorded = np.empty((n + 1, space.dim), dtype=complex)
    recorded[0] = psi0
    psi = psi0.copy()
    max_leak = 0.0
    if schedule is not None:
        psi = schedule.boundary_ops[0].phases(space) * psi
    for k in range(1, n + 1):
        u = unitaries.get(trajectory.alphas[k - 1], trajectory.zs[k - 1])
        if u is not None:
            psi = u @ psi
        if schedule is not None:
            op = schedule.boundary_ops[k]
            if not op.is_identity:
                psi = op.phases(space) * psi
        leak = float(np.sum(np.abs(psi[guard:]) ** 2))
        max_leak = max(max_leak, leak)
        if leak > space.leak_threshold:
            raise TruncationLeakError(
                f"guard-band population {leak:.3e} exceeded threshold "
                f"{space.leak_threshold:.3e} after segment {k}",
                leak=leak,
            )
        if k == n and schedule is not None:
            psi = schedule.closing.phases(space) * psi
            recorded[k] = psi
        elif schedule is not None:
            recorded[k] = np.conj(schedule.cumulative(k).phases(space)) * psi
        else:
            recorded[k] = psi
    return recorded, max_leak


def _evolve_matrix(
    rho0: np.ndarray,
    trajectory: NoiseTrajectory,
    schedule: InterventionSchedule | None,
    space: FockSpace,
    unitaries: _SegmentUnitaries,
) -> tuple[list[np.ndarray], float]:
    """Density-matrix twin of _evolve_vector for mixed inputs."""

    def conj_diag(m, phases):
        return phases[:, None] * m * np.conj(phases)[None, :]

    n = len(trajectory)
    guard = space.guard_start
    recorded = [rho0.copy()]
    rho = rho0.copy()
    max_leak = 0.0
    if schedule is not None:
        rho = conj_diag(rho, schedule.boundary_ops[0].phases(space))
    for k in range(1, n + 1):
        u = unitaries.get(trajectory.alphas[k - 1], trajectory.zs[k - 1])
        if u is not None:
            rho = u @ rho @ u.conj().T
            rho = 0.5 * (rho + rho.conj().T)
        if schedule is not None:
            op = schedule.boundary_ops[k]
            if not op.is_identity:
                rho = conj_diag(rho, op.phases(space))
        leak = float(np.sum(np.real(np.diagonal(rho)[guard:])))
        max_leak = max(max_leak, leak)
        if leak > space.leak_threshold:
            raise TruncationLeakError(
                f"guard-band population {leak:.3e} exceeded threshold "
                f"{space.leak_threshold:.3e} after segment {k}",
                leak=leak,
            )
        if k == n and schedule is not None:
            recorded.append(conj_diag(rho, schedule.closing.phases(space)))
        elif schedule is not None:
            recorded.append(conj_diag(rho, np.conj(schedule.cumulative(k).phases(space))))
        else:
            recorded.append(rho.copy())
    return recorded, max_leak


def evolve_trajectory(
    config: SimConfig,
    trajectory: NoiseTrajectory,
    schedule: InterventionSchedule | None = None,
) -> list[DensityMatrix]:
    """All segments + 1 recorded states of one noise realization, in the
    corrected frame (see the module docstring)."""
    if config.noise.kind == "polynomial":
        raise SimulationError(
            "polynomial noise has no segment unitary in this simulator; "
            "use the control-group residual tools instead"
        )
    if schedule is None:
        schedule = config.protocol.build_schedule(config.noise.segments)
    if schedule is not None and schedule.segments != len(trajectory):
        raise SimulationError(
            f"schedule spans {schedule.segments} segments but the trajectory "
            f"has {len(trajectory)}"
        )
    space = config.space()
    rho0 = config.initial.build(space)
    unitaries = _SegmentUnitaries(space)
    psi0 = rho0.pure_vector()
    if psi0 is not None:
        recorded, _ = _evolve_vector(psi0, trajectory, schedule, space, unitaries)
        return [DensityMatrix.from_vector(space, row) for row in recorded]
    mats, _ = _evolve_matrix(rho0.matrix, trajectory, schedule, space, unitaries)
    return [DensityMatrix(space, m) for m in mats]


@dataclass
class SimResult:
    config: SimConfig
    schedule: InterventionSchedule | None
    fidelity: np.ndarray                 # (trajectories, segments + 1)
    averaged_state: DensityMatrix
    noise_trajectories: list[NoiseTrajectory]
    max_leak: float
    elapsed_seconds: float
    grid: PhaseSpaceGrid | None = None
    wigner_initial: np.ndarray | None = None
    wigner_final: np.ndarray | None = None

    @property
    def mean_fidelity(self) -> np.ndarray:
        return self.fidelity.mean(axis=0)

    @property
    def final_fidelities(self) -> np.ndarray:
        return self.fidelity[:, -1]

    @property
    def mean_final_fidelity(self) -> float:
        return float(self.final_fidelities.mean())

    @property
    def stderr_final(self) -> float:
        m = self.final_fidelities.size
        if m < 2:
            return 0.0
        return float(self.final_fidelities.std(ddof=1) / np.sqrt(m))


def _uhlmann_curve(sqrt_rho0: np.ndarray, mats: list[np.ndarray]) -> np.ndarray:
    fids = np.empty(len(mats))
    for i, m in enumerate(mats):
        inner = sqrt_rho0 @ m @ sqrt_rho0
        inner = 0.5 * (inner + inner.conj().T)
        lam = np.linalg.eigvalsh(inner)
        fids[i] = min(max(float(np.sum(np.sqrt(np.clip(lam, 0.0, None))) ** 2), 0.0), 1.0)
    return fids


def run_ensemble(config: SimConfig) -> SimResult:
    """Monte-Carlo ensemble over independent noise streams.

    The ensemble average of the final states uses the uniform 1/M weight.
    """
    if config.noise.kind == "polynomial":
        raise SimulationError(
            "polynomial noise has no segment unitary in this simulator; "
            "use the control-group residual tools instead"
        )
    start = time.perf_counter()
    space = config.space()
    schedule = config.protocol.build_schedule(config.noise.segments)
    if not _protocol_covers(config.protocol, config.noise.kind):
        logger.warning(
            "protocol %r does not decouple %s noise; running anyway",
            config.protocol.kind,
            config.noise.kind,
        )
    rho0 = config.initial.build(space)
    psi0 = rho0.pure_vector()
    sqrt_rho0 = None
    if psi0 is None:
        w, v = np.linalg.eigh(rho0.matrix)
        sqrt_rho0 = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T

    def worker(tid: int):
        trajectory = sample_trajectory(config.noise, tid)
        unitaries = _SegmentUnitaries(space)
        try:
            if psi0 is not None:
                recorded, leak = _evolve_vector(psi0, trajectory, schedule, space, unitaries)
                fids = np.clip(np.abs(recorded @ psi0.conj()) ** 2, 0.0, 1.0)
                final = recorded[-1]
            else:
                mats, leak = _evolve_matrix(rho0.matrix, trajectory, schedule, space, unitaries)
                fids = _uhlmann_curve(sqrt_rho0, mats)
                final = mats[-1]
        except TruncationLeakError as err:
            raise TruncationLeakError(
                f"trajectory {tid}: {err}", leak=err.leak
            ) from err
        return fids, final, leak, trajectory

    m = config.trajectories
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outputs = list(pool.map(worker, range(m)))
    else:
        outputs = [worker(tid) for tid in range(m)]

    # ordered reduction keeps results bit-identical across thread counts
    fidelity = np.stack([out[0] for out in outputs])
    avg = np.zeros((space.dim, space.dim), dtype=complex)
    for out in outputs:
        final = out[1]
        if final.ndim == 1:
            avg += np.outer(final, final.conj())
        else:
            avg += final
    avg /= m
    avg = 0.5 * (avg + avg.conj().T)
    averaged = DensityMatrix(space, avg / float(np.real(np.trace(avg))))
    max_leak = max(out[2] for out in outputs)

    grid = wig_init = wig_final = None
    if config.compute_wigner:
        grid = config.grid.build()
        wig_init = wigner_of_state(rho0, grid)
        wig_final = wigner_of_state(averaged, grid)

    return SimResult(
        config=config,
        schedule=schedule,
        fidelity=fidelity,
        averaged_state=averaged,
        noise_trajectories=[out[3] for out in outputs],
        max_leak=max_leak,
        elapsed_seconds=time.perf_counter() - start,
        grid=grid,
        wigner_initial=wig_init,
        wigner_final=wig_final,
    )


def sweep_point_config(config: SimConfig, n: int, trajectories: int | None = None) -> SimConfig:
    """Config for one sweep point: n interventions on the fixed noise grid.

    The noise process keeps the config's segmentation; only the intervention
    density changes. Each point gets its own seed derived deterministically
    from the base seed and n, so points are statistically independent but
    fully reproducible.
    """
    if config.noise.segments % n != 0:
        raise SimulationError(
            f"sweep point n={n} does not divide the {config.noise.segments} noise segments"
        )
    derived = int(
        np.random.SeedSequence(entropy=config.noise.seed, spawn_key=(n,)).generate_state(
            1, dtype=np.uint64
        )[0]
    )
    return replace(
        config,
        noise=replace(config.noise, seed=derived),
        protocol=replace(config.protocol, interventions=n),
        trajectories=trajectories if trajectories is not None else config.trajectories,
        compute_wigner=False,
    )


@dataclass
class SweepResult:
    n_values: list[int]
    mean_final: np.ndarray
    stderr_final: np.ndarray
    final_fidelities: list[np.ndarray]

    def rows(self):
        return [
            (n, float(self.mean_final[i]), float(self.stderr_final[i]))
            for i, n in enumerate(self.n_values)
        ]


def sweep_interventions(
    config: SimConfig, n_values, trajectories_per_point: int | None = None
) -> SweepResult:
    """Mean final fidelity as a function of intervention count.

    The noise statistics are held fixed (same segmentation, same jump rate);
    schedules with fewer interventions than segments act at every
    segments/n-th boundary. More interventions track the noise better, so
    the mean fidelity should climb toward 1.
    """
    n_values = list(n_values)
    if len(n_values) == 0:
        raise ValueError("sweep needs at least one intervention count")
    if config.protocol.kind == "none":
        raise SimulationError("sweeping interventions needs a protocol")
    means, errs, finals = [], [], []
    for n in n_values:
        res = run_ensemble(sweep_point_config(config, n, trajectories_per_point))
        means.append(res.mean_final_fidelity)
        errs.append(res.stderr_final)
        finals.append(res.final_fidelities)
        logger.info("sweep n=%d: mean final fidelity %.4f", n, means[-1])
    return SweepResult(n_values, np.array(means), np.array(errs), finals)


@dataclass
class LogisticFit:
    floor: float
    ceiling: float
    midpoint: float
    width: float
    converged: bool


def logistic_fit(n_values, fidelities) -> LogisticFit:
    """Fit a saturating logistic to fidelity-vs-interventions data.

    Descriptive only; a failed or degenerate fit (flat data, no curvature)
    comes back with converged=False and the raw data's floor and ceiling.
    """
    ns = np.asarray(n_values, dtype=float)
    fs = np.asarray(fidelities, dtype=float)
    lo, hi = float(fs.min()), float(fs.max())
    fallback = LogisticFit(lo, hi, float(np.median(ns)), max(ns.max() / 4, 1.0), False)
    if ns.size < 4 or hi - lo < 1e-3:
        return fallback

    def model(n, floor, ceiling, midpoint, width):
        return floor + (ceiling - floor) / (1.0 + np.exp(-(n - midpoint) / width))

    try:
        popt, pcov = curve_fit(
            model,
            ns,
            fs,
            p0=(lo, hi, float(np.median(ns)), max(ns.max() / 4, 1.0)),
            bounds=([0.0, 0.0, 0.0, 1e-3], [1.05, 1.05, 2 * ns.max(), 10 * ns.max()]),
            maxfev=10_000,
        )
    except (RuntimeError, ValueError):
        return fallback
    if not np.all(np.isfinite(pcov)):
        return fallback
    return LogisticFit(float(popt[0]), float(popt[1]), float(popt[2]), float(popt[3]), True)
