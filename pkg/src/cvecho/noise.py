"""Piecewise-constant random noise processes along the transfer path.

The path is split into `segments` equal pieces. The noise parameter is
constant on each piece and refreshes at segment boundaries according to a
compound-Poisson-style jump clock: at every interior boundary it is redrawn
with probability eta, otherwise it carries over. Fresh values are always
zero-mean Gaussians. A static process draws once and holds.

Draw order is part of the reproducibility contract. Per trajectory:

1. initial values, displacement channel first (Re then Im, each
   N(0, sigma_disp^2)), then the squeeze channel (N(0, sigma_sqz^2));
2. one uniform per interior boundary, in order; on a jump the affected
   channels are redrawn immediately, same order as the initial draw.

For the combined kind both channels share one jump clock: a single uniform
decides the boundary, and both values are redrawn together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOISE_KINDS = ("displacement", "squeezing", "combined", "polynomial")

_HAS_DISPLACEMENT = {"displacement", "combined", "polynomial"}
_HAS_SQUEEZE = {"squeezing", "combined"}


@dataclass(frozen=True)
class NoiseConfig:
    """Parameters of the piecewise-constant jump process.

    For the polynomial kind, the complex coefficient of the degree-m
    generator is sampled exactly like a displacement amplitude and stored in
    the alpha slot of the trajectory; `degree` records m.
    """

    kind: str
    segments: int
    eta: float
    sigma_disp: float = 0.0
    sigma_sqz: float = 0.0
    seed: int = 0
    static: bool = False
    degree: int = 1

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}, expected one of {NOISE_KINDS}")
        if self.segments < 1:
            raise ValueError(f"segments must be at least 1, got {self.segments}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must be in [0, 1], got {self.eta}")
        if self.sigma_disp < 0 or self.sigma_sqz < 0:
            raise ValueError("noise amplitudes must be nonnegative")
        if self.degree < 1:
            raise ValueError(f"degree must be at least 1, got {self.degree}")

    @property
    def has_displacement(self) -> bool:
        return self.kind in _HAS_DISPLACEMENT

    @property
    def has_squeeze(self) -> bool:
        return self.kind in _HAS_SQUEEZE


@dataclass
class NoiseTrajectory:
    """One realization: per-segment values plus the jump pattern.

    alphas holds the complex displacement (or polynomial coefficient) per
    segment, zs the squeeze parameter (real-valued, stored complex). jumps[k]
    is True when the value entering segment k was freshly drawn; jumps[0] is
    always True.
    """

    kind: str
    alphas: np.ndarray
    zs: np.ndarray
    jumps: np.ndarray
    degree: int = 1

    def __len__(self) -> int:
        return self.alphas.size


def _rng_for(cfg: NoiseConfig, stream_id: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(stream_id,))
    return np.random.default_rng(ss)


def sample_trajectory(cfg: NoiseConfig, stream_id: int) -> NoiseTrajectory:
    """Draw one noise realization for the given independent stream."""
    rng = _rng_for(cfg, stream_id)
    n = cfg.segments
    alphas = np.zeros(n, dtype=complex)
    zs = np.zeros(n, dtype=complex)
    jumps = np.zeros(n, dtype=bool)
    jumps[0] = True

    def draw():
        a = 0.0 + 0.0j
        z = 0.0 + 0.0j
        if cfg.has_displacement:
            a = complex(rng.normal(0.0, cfg.sigma_disp), rng.normal(0.0, cfg.sigma_disp))
        if cfg.has_squeeze:
            z = complex(rng.normal(0.0, cfg.sigma_sqz), 0.0)
        return a, z

    cur_a, cur_z = draw()
    alphas[0], zs[0] = cur_a, cur_z
    if not cfg.static:
        for k in range(1, n):
            if rng.uniform() < cfg.eta:
                cur_a, cur_z = draw()
                jumps[k] = True
            alphas[k], zs[k] = cur_a, cur_z
    else:
        alphas[:] = cur_a
        zs[:] = cur_z
    return NoiseTrajectory(cfg.kind, alphas, zs, jumps, degree=cfg.degree)


def sample_ensemble(cfg: NoiseConfig, n_traj: int) -> list[NoiseTrajectory]:
    return [sample_trajectory(cfg, i) for i in range(n_traj)]


@dataclass
class CovarianceTables:
    """Segment-by-segment second moments of the process.

    rr, ii, ri cover the displacement components (Re/Re, Im/Im, Re/Im);
    ss covers the squeeze channel. Entries are None for channels the noise
    kind does not carry.
    """

    rr: np.ndarray | None
    ii: np.ndarray | None
    ri: np.ndarray | None
    ss: np.ndarray | None
    samples: int


def empirical_covariance(cfg: NoiseConfig, n_traj: int) -> CovarianceTables:
    """Sample covariance tables across freshly drawn trajectories.

    Uses streams 0..n_traj-1 of the config's seed. Requires at least 100
    trajectories so the tables are meaningful.
    """
    if n_traj < 100:
        raise ValueError(f"need at least 100 trajectories for covariance tables, got {n_traj}")
    n = cfg.segments
    res = np.zeros((n_traj, n))
    ims = np.zeros((n_traj, n))
    sqs = np.zeros((n_traj, n))
    for i in range(n_traj):
        t = sample_trajectory(cfg, i)
        res[i] = t.alphas.real
        ims[i] = t.alphas.imag
        sqs[i] = t.zs.real

    def cov(a, b):
        am = a - a.mean(axis=0)
        bm = b - b.mean(axis=0)
        return (am.T @ bm) / (n_traj - 1)

    rr = ii = ri = ss = None
    if cfg.has_displacement:
        rr = cov(res, res)
        ii = cov(ims, ims)
        ri = cov(res, ims)
    if cfg.has_squeeze:
        ss = cov(sqs, sqs)
    return CovarianceTables(rr, ii, ri, ss, n_traj)


def cpp_covariance(cfg: NoiseConfig) -> CovarianceTables:
    """Exact covariance tables of the jump process.

    Two segments share their value exactly when no jump fell between them,
    which happens with probability (1 - eta)^|k - k'|, so each channel has
    Cov[k, k'] = sigma^2 (1 - eta)^|k - k'|. Re and Im displacement
    components are drawn independently, hence the cross table vanishes. A
    static process is fully correlated.
    """
    n = cfg.segments
    ks = np.arange(n)
    lag = np.abs(ks[:, None] - ks[None, :])
    base = np.ones((n, n)) if cfg.static else (1.0 - cfg.eta) ** lag
    rr = ii = ri = ss = None
    if cfg.has_displacement:
        rr = cfg.sigma_disp**2 * base
        ii = rr.copy()
        ri = np.zeros((n, n))
    if cfg.has_squeeze:
        ss = cfg.sigma_sqz**2 * base
    return CovarianceTables(rr, ii, ri, ss, 0)


def write_trajectories_csv(trajectories: list[NoiseTrajectory], path) -> None:
    """Dump noise draws as traj_id,segment,alpha_re,alpha_im,z_re,z_im rows."""
    with open(path, "w") as fh:
        fh.write("traj_id,segment,alpha_re,alpha_im,z_re,z_im\n")
        for tid, traj in enumerate(trajectories):
            for k in range(len(traj)):
                a = traj.alphas[k]
                z = traj.zs[k]
                fh.write(
                    f"{tid},{k},{float(a.real)!r},{float(a.imag)!r},"
                    f"{float(z.real)!r},{float(z.imag)!r}\n"
                )
