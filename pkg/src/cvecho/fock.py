"""Truncated Fock-space states and operators for a single bosonic mode.

Everything works on dense numpy arrays in the number basis |0>, ..., |d-1>.
Conventions: hbar = 1 and a = (x + i p) / sqrt(2), so the vacuum has
Var(x) = Var(p) = 1/2.

Truncation is handled with a guard band: the top 10 percent of levels are
treated as a canary region. Population accumulating there means the physical
state no longer fits in the simulated space, and operations that detect it
raise TruncationLeakError instead of silently returning garbage.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.special import gammaln

logger = logging.getLogger(__name__)


class TruncationLeakError(RuntimeError):
    """Population escaped into the guard band of the truncated space."""

    def __init__(self, message: str, leak: float | None = None):
        super().__init__(message)
        self.leak = leak


@dataclass(frozen=True)
class FockSpace:
    """A finite number-basis Hilbert space with a truncation guard band.

    dim is the number of retained levels. leak_threshold is the guard-band
    population above which operations refuse to continue; it can be relaxed
    (up to 1.0) for runs that only need leak monitoring, not enforcement.
    """

    dim: int = 60
    leak_threshold: float = 1e-6

    def __post_init__(self):
        if self.dim < 4:
            raise ValueError(f"dim must be at least 4, got {self.dim}")
        if not 0.0 < self.leak_threshold <= 1.0:
            raise ValueError(
                f"leak_threshold must be in (0, 1], got {self.leak_threshold}"
            )

    @property
    def guard_start(self) -> int:
        """First level of the guard band (top 10 percent of the space)."""
        return self.dim - max(1, self.dim // 10)

    @cached_property
    def levels(self) -> np.ndarray:
        return np.arange(self.dim)

    @cached_property
    def annihilation(self) -> np.ndarray:
        a = np.zeros((self.dim, self.dim), dtype=complex)
        ns = np.arange(1, self.dim)
        a[ns - 1, ns] = np.sqrt(ns)
        return a

    @cached_property
    def creation(self) -> np.ndarray:
        return self.annihilation.conj().T.copy()

    @cached_property
    def number(self) -> np.ndarray:
        return np.diag(self.levels.astype(complex))


def quadrature_x(space: FockSpace) -> np.ndarray:
    """Position quadrature x = (a + a†) / sqrt(2)."""
    return (space.annihilation + space.creation) / math.sqrt(2)


def quadrature_p(space: FockSpace) -> np.ndarray:
    """Momentum quadrature p = -i (a - a†) / sqrt(2)."""
    return -1j * (space.annihilation - space.creation) / math.sqrt(2)


def _required_dim_displacement(alpha: complex, threshold: float) -> int:
    """Smallest dim whose guard band stays below threshold for D(alpha)|0>."""
    mu = abs(alpha) ** 2
    # Poisson tail of the displaced vacuum; walk the pmf until the
    # remaining mass drops under the threshold.
    term = math.exp(-mu)
    cum = term
    n = 0
    while 1.0 - cum > threshold and n < 100_000:
        n += 1
        term *= mu / n
        cum += term
    # guard band is the top 10 percent, so dim must put level n below it
    return max(4, math.ceil((n + 1) / 0.9) + 1)


def _required_dim_squeeze(z: complex, threshold: float) -> int:
    """Smallest dim whose guard band stays below threshold for S(z)|0>."""
    r = abs(z)
    if r == 0.0:
        return 4
    t2 = math.tanh(r) ** 2
    # Even-level populations of the squeezed vacuum obey
    # p_{2(m+1)} / p_{2m} = ((2m+1)/(2m+2)) tanh^2 r.
    p = 1.0 / math.cosh(r)
    cum = p
    m = 0
    while 1.0 - cum > threshold and m < 100_000:
        p *= (2 * m + 1) / (2 * m + 2) * t2
        cum += p
        m += 1
    top_level = 2 * m
    return max(4, math.ceil((top_level + 1) / 0.9) + 1)


def displacement(space: FockSpace, alpha: complex) -> np.ndarray:
    """Displacement unitary exp(alpha a† - alpha* a).

    Refuses amplitudes whose action on the vacuum would already leak past
    the guard band, since larger input states only make that worse.
    """
    need = _required_dim_displacement(alpha, space.leak_threshold)
    if need > space.dim:
        raise TruncationLeakError(
            f"displacement with |alpha|={abs(alpha):.4g} needs dim >= {need}, "
            f"space has dim={space.dim}"
        )
    gen = alpha * space.creation - np.conj(alpha) * space.annihilation
    return scipy.linalg.expm(gen)


def squeeze(space: FockSpace, z: complex) -> np.ndarray:
    """Squeeze unitary exp((z* a a - z a† a†) / 2).

    For real z > 0 this shrinks x and stretches p: the squeezed vacuum has
    Var(x) = exp(-2 z) / 2.
    """
    need = _required_dim_squeeze(z, space.leak_threshold)
    if need > space.dim:
        raise TruncationLeakError(
            f"squeeze with |z|={abs(z):.4g} needs dim >= {need}, "
            f"space has dim={space.dim}"
        )
    a = space.annihilation
    ad = space.creation
    gen = 0.5 * (np.conj(z) * (a @ a) - z * (ad @ ad))
    return scipy.linalg.expm(gen)


def rotation(space: FockSpace, theta: float) -> np.ndarray:
    """Phase-space rotation diag(exp(-i theta n)).

    Conjugation acts as R† a R = exp(-i theta) a.
    """
    return np.diag(np.exp(-1j * theta * space.levels))


def parity(space: FockSpace) -> np.ndarray:
    """Photon-number parity diag(+1, -1, +1, ...), exact to the bit."""
    signs = np.where(space.levels % 2 == 0, 1.0, -1.0)
    return np.diag(signs.astype(complex))


@dataclass
class DensityMatrix:
    """A density matrix bound to its Fock space."""

    space: FockSpace
    matrix: np.ndarray

    @classmethod
    def from_vector(cls, space: FockSpace, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        norm = np.linalg.norm(psi)
        if norm == 0.0:
            raise ValueError("cannot build a state from the zero vector")
        psi = psi / norm
        return cls(space, np.outer(psi, psi.conj()))

    def validate(self, atol: float = 1e-8) -> "DensityMatrix":
        m = self.matrix
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.space.dim}")
        if not np.allclose(m, m.conj().T, atol=atol):
            raise ValueError("density matrix is not Hermitian")
        tr = float(np.real(np.trace(m)))
        if abs(tr - 1.0) > atol:
            raise ValueError(f"trace is {tr}, expected 1")
        wmin = float(np.linalg.eigvalsh(m)[0])
        if wmin < -atol:
            raise ValueError(f"negative eigenvalue {wmin}")
        return self

    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.matrix)).copy()

    def guard_band_population(self) -> float:
        return float(np.sum(self.populations()[self.space.guard_start:]))

    def purity(self) -> float:
        return float(np.real(np.einsum("ij,ji->", self.matrix, self.matrix)))

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.einsum("ij,ji->", self.matrix, op))

    def pure_vector(self, tol: float = 1e-10) -> np.ndarray | None:
        """Top eigenvector if the state is numerically pure, else None."""
        if self.purity() < 1.0 - tol:
            return None
        w, v = np.linalg.eigh(self.matrix)
        return v[:, -1].copy()


def conjugate(state: DensityMatrix, u: np.ndarray, check_leak: bool = True) -> DensityMatrix:
    """Apply a unitary channel rho -> u rho u†.

    The result is re-Hermitized and renormalized to absorb floating-point
    drift, and the guard band is checked against the space's leak threshold.
    """
    m = u @ state.matrix @ u.conj().T
    m = 0.5 * (m + m.conj().T)
    tr = float(np.real(np.trace(m)))
    if abs(tr - 1.0) > 1e-6:
        logger.warning("trace drifted to %.3e during conjugation, renormalizing", tr)
    m /= tr
    out = DensityMatrix(state.space, m)
    if check_leak:
        leak = out.guard_band_population()
        if leak > state.space.leak_threshold:
            raise TruncationLeakError(
                f"guard-band population {leak:.3e} exceeds threshold "
                f"{state.space.leak_threshold:.3e} (dim={state.space.dim})",
                leak=leak,
            )
    return out


def vacuum_state(space: FockSpace) -> DensityMatrix:
    return fock_state(space, 0)


def fock_state(space: FockSpace, n: int) -> DensityMatrix:
    if not 0 <= n < space.dim:
        raise ValueError(f"level {n} outside space of dim {space.dim}")
    psi = np.zeros(space.dim, dtype=complex)
    psi[n] = 1.0
    return DensityMatrix.from_vector(space, psi)


def coherent_state(space: FockSpace, alpha: complex) -> DensityMatrix:
    """Coherent state |alpha> from its closed-form number-basis amplitudes."""
    if alpha == 0:
        return vacuum_state(space)
    ns = space.levels
    # amplitude exp(-|a|^2/2) a^n / sqrt(n!), assembled in log space so the
    # factorial stays finite for large n
    logmag = -0.5 * abs(alpha) ** 2 + ns * math.log(abs(alpha)) - 0.5 * gammaln(ns + 1)
    phase = np.exp(1j * ns * np.angle(alpha))
    amp = np.exp(logmag) * phase
    tail = 1.0 - float(np.sum(np.abs(amp) ** 2))
    if tail > space.leak_threshold:
        need = _required_dim_displacement(alpha, space.leak_threshold)
        raise TruncationLeakError(
            f"coherent amplitude |alpha|={abs(alpha):.4g} needs dim >= {need}, "
            f"space has dim={space.dim}",
            leak=tail,
        )
    return DensityMatrix.from_vector(space, amp)


@dataclass(frozen=True)
class MixtureComponent:
    """One Gaussian blob: weight, complex center in alpha units, x-width sigma."""

    weight: float
    center: complex
    width: float


def gaussian_mixture_state(space: FockSpace, components: list[MixtureComponent]) -> DensityMatrix:
    """Mixture of displaced squeezed vacua with prescribed centers and widths.

    Each component is D(center) S(g) |0> with g = -ln(width * sqrt(2)), which
    gives exactly Var(x) = width^2 and Var(p) = 1 / (4 width^2). width =
    1/sqrt(2) reproduces a coherent state.
    """
    if not components:
        raise ValueError("mixture needs at least one component")
    weights = np.array([c.weight for c in components], dtype=float)
    if np.any(weights < 0):
        raise ValueError("mixture weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights sum to {weights.sum()}, expected 1")
    vac = np.zeros(space.dim, dtype=complex)
    vac[0] = 1.0
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    for comp in components:
        if comp.width <= 0:
            raise ValueError("component width must be positive")
        g = -math.log(comp.width * math.sqrt(2.0))
        psi = vac
        if g != 0.0:
            psi = squeeze(space, g) @ psi
        if comp.center != 0:
            psi = displacement(space, comp.center) @ psi
        rho += comp.weight * np.outer(psi, psi.conj())
    out = DensityMatrix(space, rho)
    leak = out.guard_band_population()
    if leak > space.leak_threshold:
        raise TruncationLeakError(
            f"mixture leaks {leak:.3e} into the guard band (dim={space.dim})",
            leak=leak,
        )
    return out


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Takes the overlap shortcut when one argument is numerically pure; the
    general branch goes through two Hermitian eigendecompositions with
    eigenvalue clamping, and the result is clipped into [0, 1].
    """
    if rho.space.dim != sigma.space.dim:
        raise ValueError("states live in different spaces")
    psi = rho.pure_vector()
    if psi is None:
        psi = sigma.pure_vector()
        other = rho
    else:
        other = sigma
    if psi is not None:
        f = float(np.real(psi.conj() @ other.matrix @ psi))
        return min(max(f, 0.0), 1.0)
    w, v = np.linalg.eigh(rho.matrix)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    m = sqrt_rho @ sigma.matrix @ sqrt_rho
    m = 0.5 * (m + m.conj().T)
    lam = np.linalg.eigvalsh(m)
    f = float(np.sum(np.sqrt(np.clip(lam, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)
