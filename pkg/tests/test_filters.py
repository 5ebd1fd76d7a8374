"""Tests for the filter-function module.

Oracles: the i.i.d. and fully-static quadratic forms have closed answers
(n s^2 dl^2 and 0 / s^2 dl^2 for even / odd n); a Gaussian convolved with a
Gaussian is again Gaussian with added covariance; and the empirical kernel
route must agree with the exact jump-process covariance.
"""

import math
import warnings

import numpy as np
import pytest

from cvecho.filters import (
    DegenerateFilterError,
    IdentityFilter,
    SegmentKernel,
    SwitchingFunction,
    convolve,
    cpp_static_filter,
    gaussian_filter,
    quadratic_form,
    sigma_matrix,
    sigma_matrix_from_kernel,
    squeeze_average,
)
from cvecho.fock import FockSpace, vacuum_state
from cvecho.noise import NoiseConfig, cpp_covariance, empirical_covariance
from cvecho.protocol import schedule_combined, schedule_displacement, schedule_squeezing
from cvecho.wigner import PhaseSpaceGrid, field_mass, wigner_of_state

GRID = PhaseSpaceGrid.default()


def test_alternating_switching():
    sw = SwitchingFunction.alternating(4, delta_ell=0.5)
    assert np.array_equal(sw.boundaries, [0, 0.5, 1.0, 1.5, 2.0])
    assert np.array_equal(sw.signs, [-1, 1, -1, 1])
    assert sw.n == 4


def test_switching_from_parity_schedule_matches_alternating():
    sw = SwitchingFunction.from_schedule(schedule_displacement(6))
    ref = SwitchingFunction.alternating(6)
    assert np.array_equal(sw.signs, ref.signs)
    assert np.array_equal(sw.boundaries, ref.boundaries)


def test_switching_from_squeeze_schedule():
    sw = SwitchingFunction.from_schedule(schedule_squeezing(5), channel="squeeze")
    assert np.array_equal(sw.signs, [-1, 1, -1, 1, -1])


def test_combined_schedule_has_no_scalar_switching():
    with pytest.raises(ValueError, match="complex"):
        SwitchingFunction.from_schedule(schedule_combined(4))


def test_switching_validation():
    with pytest.raises(ValueError, match="signs"):
        SwitchingFunction(np.array([0.0, 1.0]), np.array([0.5]))
    with pytest.raises(ValueError, match="start at 0"):
        SwitchingFunction(np.array([1.0, 2.0]), np.array([1.0]))


def test_iid_sigma_matrix_closed_form():
    """Alternating echo over n i.i.d. segments: Sigma = n s^2 dl^2 times I."""
    n, s2, dl = 7, 0.3, 0.5
    sw = SwitchingFunction.alternating(n, delta_ell=dl)
    sig = sigma_matrix(sw, SegmentKernel.iid(n, s2))
    want = n * s2 * dl**2
    assert sig[0, 0] == pytest.approx(want, rel=1e-12)
    assert sig[1, 1] == pytest.approx(want, rel=1e-12)
    assert sig[0, 1] == 0.0


def test_static_kernel_parity_of_segment_count():
    """A fully correlated kernel cancels for even n, leaves one cell for odd."""
    s2, dl = 0.4, 1.0
    for n, want in [(4, 0.0), (5, s2 * dl**2)]:
        sw = SwitchingFunction.alternating(n, delta_ell=dl)
        ones = np.full((n, n), s2)
        kern = SegmentKernel(ones, ones, np.zeros((n, n)))
        sig = sigma_matrix(sw, kern)
        assert sig[0, 0] == pytest.approx(want, abs=1e-13)


def test_quadratic_form_small_case():
    sw = SwitchingFunction.alternating(2)
    table = np.array([[1.0, 0.5], [0.5, 2.0]])
    # signs (-1, +1): 1 - 0.5 - 0.5 + 2
    assert quadratic_form(sw, table) == pytest.approx(2.0)


def test_callable_kernel_matches_segment_tables():
    """Piecewise-constant continuum kernel integrates to the table result."""
    n = 3
    sw = SwitchingFunction.alternating(n)
    rng = np.random.default_rng(2)
    base = rng.normal(size=(n, n))
    xx = base @ base.T  # symmetric
    kern = SegmentKernel(xx, 2 * xx, 0.3 * xx)

    def kernel_fn(l1, l2):
        i = min(int(l1), n - 1)
        j = min(int(l2), n - 1)
        return (xx[i, j], 2 * xx[i, j], 0.3 * xx[i, j])

    direct = sigma_matrix(sw, kern)
    integrated = sigma_matrix_from_kernel(sw, kernel_fn, subdiv=4)
    assert np.max(np.abs(direct - integrated)) < 1e-12


def test_empirical_kernel_route_matches_analytic():
    cfg = NoiseConfig(kind="displacement", segments=8, eta=0.25, sigma_disp=0.3, seed=21)
    sw = SwitchingFunction.alternating(8)
    emp = sigma_matrix(sw, SegmentKernel.from_alpha_covariance(empirical_covariance(cfg, 4000)))
    ana = sigma_matrix(sw, SegmentKernel.from_alpha_covariance(cpp_covariance(cfg)))
    assert np.max(np.abs(emp - ana)) < 0.08
    assert ana[0, 0] == pytest.approx(ana[1, 1], rel=1e-12)
    assert ana[0, 1] == 0.0


def test_gaussian_filter_mass_and_moments():
    sig = np.array([[0.4, 0.1], [0.1, 0.3]])
    f = gaussian_filter(sig, GRID)
    X, P = GRID.mesh()
    assert abs(field_mass(f, GRID) - 1.0) < 1e-6
    assert abs(field_mass(X**2 * f, GRID) - 0.4) < 1e-3
    assert abs(field_mass(P**2 * f, GRID) - 0.3) < 1e-3
    assert abs(field_mass(X * P * f, GRID) - 0.1) < 1e-3


def test_degenerate_filter_raises_with_direction():
    sig = np.diag([1e-14, 0.5])
    with pytest.raises(DegenerateFilterError, match="degenerate"):
        gaussian_filter(sig, GRID)


def test_cpp_static_filter_parity_dichotomy():
    assert isinstance(cpp_static_filter(4, 1.0, 0.3, GRID), IdentityFilter)
    f = cpp_static_filter(5, 1.0, 0.3, GRID)
    X, _ = GRID.mesh()
    assert abs(field_mass(X**2 * f, GRID) - 0.09) < 1e-3


def test_convolve_identity_marker_is_noop():
    space = FockSpace(dim=40)
    w = wigner_of_state(vacuum_state(space), GRID)
    out = convolve(IdentityFilter(), w, GRID)
    assert np.array_equal(out, w)
    assert out is not w


def test_convolve_gaussians_adds_covariance():
    """Vacuum Wigner (variance 1/2 per axis) against a v-variance filter
    gives a Gaussian of variance 1/2 + v. Closed-form oracle."""
    space = FockSpace(dim=40)
    w = wigner_of_state(vacuum_state(space), GRID)
    v = 0.4
    out = convolve(gaussian_filter(np.diag([v, v]), GRID), w, GRID)
    X, P = GRID.mesh()
    tot = 0.5 + v
    want = np.exp(-(X**2 + P**2) / (2 * tot)) / (2 * math.pi * tot)
    assert np.max(np.abs(out - want)) < 1e-4
    assert abs(field_mass(out, GRID) - 1.0) < 2e-3


def test_convolve_shape_mismatch():
    w = np.zeros((5, 5))
    with pytest.raises(ValueError, match="shape"):
        convolve(np.zeros((3, 3)), w, GRID)


def test_squeeze_average_zero_samples_is_identity():
    space = FockSpace(dim=40)
    w = wigner_of_state(vacuum_state(space), GRID)
    out = squeeze_average(w, GRID, np.zeros(128))
    assert np.array_equal(out, w)


def test_squeeze_average_symmetric_pair():
    space = FockSpace(dim=40)
    w = wigner_of_state(vacuum_state(space), GRID)
    gammas = np.concatenate([np.full(64, 0.2), np.full(64, -0.2)])
    from cvecho.wigner import scale

    want = 0.5 * (scale(w, GRID, 0.2) + scale(w, GRID, -0.2))
    out = squeeze_average(w, GRID, gammas)
    assert np.max(np.abs(out - want)) < 1e-12


def test_squeeze_average_warns_on_few_samples():
    space = FockSpace(dim=40)
    w = wigner_of_state(vacuum_state(space), GRID)
    with pytest.warns(UserWarning, match="100|samples"):
        squeeze_average(w, GRID, np.array([0.1, -0.1]))


def test_squeeze_average_needs_samples():
    with pytest.raises(ValueError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            squeeze_average(np.zeros(GRID.shape()), GRID, np.array([]))
