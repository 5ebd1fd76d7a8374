"""Tests for control groups and intervention schedules.

The matrix-level oracle is direct operator algebra in the Fock layer: a
schedule's claimed effective displacement must match the literal product of
displacement and correction unitaries up to a global phase. Group averages
of odd generators under the quarter-turn groups cancel exactly in floating
point (the phases are exact complex units), so those residuals are asserted
to be literal zeros.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from cvecho.fock import FockSpace, displacement, parity, quadrature_x, rotation
from cvecho.protocol import (
    IDENTITY_OP,
    PARITY_OP,
    ControlOp,
    InterventionSchedule,
    cyclic_group,
    gaussian_group,
    group_average_residual,
    parity_group,
    schedule_combined,
    schedule_cyclic,
    schedule_displacement,
    schedule_squeezing,
    squeeze_set,
    write_schedule_csv,
)

SPACE = FockSpace(dim=40)


def test_control_op_algebra():
    q = ControlOp(Fraction(1, 2))
    assert q.compose(q) == PARITY_OP
    assert q.compose(q.inverse()) == IDENTITY_OP
    assert q.inverse().turns == Fraction(3, 2)
    assert ControlOp.from_turns(Fraction(5, 2)) == q
    assert PARITY_OP.label == "parity"
    assert IDENTITY_OP.label == "identity"
    assert q.label == "rotation"
    assert q.angle == pytest.approx(math.pi / 2)


def test_parity_phases_are_exact():
    ph = PARITY_OP.phases(SPACE)
    assert np.array_equal(ph, np.where(SPACE.levels % 2 == 0, 1.0 + 0j, -1.0 + 0j))
    assert np.array_equal(PARITY_OP.matrix(SPACE), parity(SPACE))


def test_quarter_phases_are_exact_units():
    ph = ControlOp(Fraction(1, 2)).phases(SPACE)
    # exp(-i pi n / 2) cycles 1, -i, -1, i
    assert ph[0] == 1 and ph[1] == -1j and ph[2] == -1 and ph[3] == 1j
    assert np.all(np.isin(ph, [1, -1j, -1, 1j]))


def test_generic_rotation_matches_fock_rotation():
    op = ControlOp(Fraction(1, 3))
    assert np.max(np.abs(op.matrix(SPACE) - rotation(SPACE, math.pi / 3))) < 1e-12


def test_group_sizes():
    assert len(parity_group().elements) == 2
    assert len(squeeze_set().elements) == 2
    assert len(gaussian_group().elements) == 4
    assert len(cyclic_group(3).elements) == 6
    assert cyclic_group(1).elements == parity_group().elements


def test_parity_group_kills_position_exactly():
    res = group_average_residual(parity_group(), quadrature_x(SPACE), SPACE)
    assert res == 0.0


def test_squeeze_set_kills_quadratic_exactly_but_not_linear():
    a = SPACE.annihilation
    assert group_average_residual(squeeze_set(), a @ a, SPACE) == 0.0
    assert group_average_residual(squeeze_set(), a, SPACE) > 0.4


def test_gaussian_group_kills_all_gaussian_generators_exactly():
    a = SPACE.annihilation
    assert group_average_residual(gaussian_group(), a, SPACE) == 0.0
    assert group_average_residual(gaussian_group(), a @ a, SPACE) == 0.0
    assert group_average_residual(gaussian_group(), a.conj().T, SPACE) == 0.0


def test_cyclic_group_kills_powers_up_to_bound():
    a = SPACE.annihilation
    g = cyclic_group(3)
    mono = np.eye(SPACE.dim, dtype=complex)
    for p in range(1, 6):
        mono = mono @ a
        # normalize so the residual measures relative suppression; the raw
        # entries of a^p grow like dim^(p/2)
        unit = mono / np.max(np.abs(mono))
        assert group_average_residual(g, unit, SPACE) < 1e-12, f"power {p}"
    # p = 2m survives the average
    a6 = np.linalg.matrix_power(a, 6)
    assert group_average_residual(g, a6 / np.max(np.abs(a6)), SPACE) > 0.5


def test_displacement_schedule_structure():
    s = schedule_displacement(4)
    assert all(op == PARITY_OP for op in s.boundary_ops)
    assert s.closing == PARITY_OP  # five half turns need one more
    s3 = schedule_displacement(3)
    assert s3.closing == IDENTITY_OP  # four half turns already close


def test_displacement_weights_alternate():
    s = schedule_displacement(5)
    w = s.displacement_weights()
    want = np.array([(-1.0) ** k for k in range(1, 6)], dtype=complex)
    assert np.array_equal(w, want)


def test_squeezing_schedule_weights_and_closing():
    s = schedule_squeezing(3)
    w = s.squeeze_weights()
    assert np.array_equal(w, np.array([-1, 1, -1], dtype=complex))
    assert s.closing == IDENTITY_OP
    s2 = schedule_squeezing(2)
    assert s2.closing == ControlOp(Fraction(3, 2))
    # the stated cancellation example: opposite drifts around a middle segment
    assert s.effective_squeeze(np.array([0.1, 0.2, 0.1])) == 0


def test_combined_schedule_weights():
    s = schedule_combined(4)
    wd = s.displacement_weights()
    assert np.array_equal(wd, np.array([1, 1j, -1, -1j]))
    wz = s.squeeze_weights()
    assert np.array_equal(wz, np.array([1, -1, 1, -1], dtype=complex))
    assert s.closing == IDENTITY_OP
    assert s.kind == "combined"


def test_cyclic_schedule_closing():
    assert schedule_cyclic(3, 6).closing == IDENTITY_OP
    assert schedule_cyclic(3, 3).closing == PARITY_OP


def test_cumulative_product_closes_exactly():
    for sched in [
        schedule_displacement(4),
        schedule_squeezing(3),
        schedule_combined(5),
    ]:
        prod = np.eye(SPACE.dim, dtype=complex)
        for op in sched.boundary_ops:
            prod = op.matrix(SPACE) @ prod
        prod = sched.closing.matrix(SPACE) @ prod
        assert np.array_equal(prod, np.eye(SPACE.dim, dtype=complex)), sched.kind


def test_cumulative_product_closes_for_general_angles():
    sched = schedule_cyclic(3, 4)
    prod = np.eye(SPACE.dim, dtype=complex)
    for op in sched.boundary_ops:
        prod = op.matrix(SPACE) @ prod
    prod = sched.closing.matrix(SPACE) @ prod
    assert np.max(np.abs(prod - np.eye(SPACE.dim))) < 1e-12


def test_effective_displacement_matches_operator_product():
    """Interleaving corrections with displacements equals one effective
    displacement, up to a global phase."""
    space = FockSpace(dim=60)
    rng = np.random.default_rng(5)
    alphas = rng.normal(0, 0.2, 4) + 1j * rng.normal(0, 0.2, 4)
    sched = schedule_displacement(4)
    u = sched.boundary_ops[0].matrix(space)
    for k in range(1, 5):
        u = sched.boundary_ops[k].matrix(space) @ displacement(space, alphas[k - 1]) @ u
    u = sched.closing.matrix(space) @ u
    beta = sched.effective_displacement(alphas)
    target = displacement(space, beta)
    phase = u[0, 0] / target[0, 0]
    assert abs(abs(phase) - 1.0) < 1e-10
    cols = slice(0, space.dim // 2)
    assert np.max(np.abs(u[:, cols] - phase * target[:, cols])) < 1e-10


def test_dilated_schedule_places_ops_on_coarse_boundaries():
    s = schedule_displacement(2, segments=6)
    non_trivial = [j for j, op in enumerate(s.boundary_ops) if not op.is_identity]
    assert non_trivial == [0, 3, 6]
    w = s.displacement_weights()
    assert np.array_equal(w, np.array([-1, -1, -1, 1, 1, 1], dtype=complex))
    assert s.closing == PARITY_OP


def test_schedule_validation():
    with pytest.raises(ValueError, match="multiple"):
        schedule_displacement(3, segments=7)
    with pytest.raises(ValueError, match="intervention"):
        schedule_displacement(0)
    with pytest.raises(ValueError, match="closing"):
        InterventionSchedule("parity", 1, 1, [PARITY_OP, PARITY_OP], PARITY_OP)
    with pytest.raises(ValueError, match="boundary"):
        InterventionSchedule("parity", 1, 1, [PARITY_OP], IDENTITY_OP)


def test_schedule_csv(tmp_path):
    s = schedule_squeezing(2)
    path = tmp_path / "schedule.csv"
    write_schedule_csv(s, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,op,angle"
    assert len(lines) == 1 + (s.segments + 1) + 1
    assert lines[1].startswith("0,rotation,")
    last = lines[-1].split(",")
    assert last[0] == str(s.segments + 1)
    assert float(last[2]) == pytest.approx(3 * math.pi / 2)
