import math

import numpy as np
import pytest

from cornerindex import oracles
from cornerindex.oracles import CapacityParams, QuadratureRule

GRID = [(a, e, b) for a in (0.05, 0.1, 0.5) for e in (1e-4, 1e-2, 0.25) for b in (math.pi / 4, 3 * math.pi / 4)]


def test_gauss_legendre_exactness():
    rule = QuadratureRule(points=4)
    assert rule.exactness == 7
    assert oracles.gauss_legendre(lambda x: x**7 + 1, 0.0, 1.0, 4) == pytest.approx(1.125, abs=1e-15)


def test_converged_gauss_legendre_raises():
    with pytest.raises(oracles.OracleError):
        oracles.converged_gauss_legendre(lambda x: np.abs(x - 0.3) ** 0.5, 0.0, 1.0, max_doublings=1)


def test_params_validation():
    for bad in ((0.0, 0.5, 1.0), (0.5, 1.0, 1.0), (0.5, 0.5, 4.0)):
        with pytest.raises(ValueError):
            CapacityParams(*bad)


def test_cutoff_shape():
    p = CapacityParams(0.5, 0.25, 1.0)
    r = np.array([0.1, 0.25, 1.0])
    assert np.allclose(oracles.cutoff(p, r), [0.0, 0.0, 0.5])


def test_energy_example():
    closed, quad = oracles.capacity_energy(CapacityParams(0.1, 0.01, math.pi / 4))
    assert closed == pytest.approx(0.0472726, abs=5e-8)
    assert quad == pytest.approx(closed, rel=1e-8)


def test_energy_limits():
    closed, quad = oracles.capacity_energy(CapacityParams(0.5, 1 - 1e-12, 1.0))
    assert abs(closed) < 1e-11 and abs(quad) < 1e-11
    closed, _ = oracles.capacity_energy(CapacityParams(0.5, 1e-300, 1.0))
    assert closed == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("a, e, b", GRID)
def test_energy_grid(a, e, b):
    closed, quad = oracles.capacity_energy(CapacityParams(a, e, b))
    assert abs(closed - quad) <= 1e-8 * abs(closed)


@pytest.mark.parametrize("a, e, b", GRID)
def test_defect_below_bound(a, e, b):
    p = CapacityParams(a, e, b)
    quad, bound = oracles.l2_defect(p)
    assert quad < bound
    assert quad == pytest.approx(oracles.l2_defect_exact(p), rel=1e-10)


def test_defect_example():
    _, bound = oracles.l2_defect(CapacityParams(0.5, 0.25, math.pi / 4))
    assert bound == pytest.approx(0.589049, abs=1e-6)


def test_defect_linear_in_beta():
    q1, b1 = oracles.l2_defect(CapacityParams(0.1, 0.01, math.pi / 4))
    q3, b3 = oracles.l2_defect(CapacityParams(0.1, 0.01, 3 * math.pi / 4))
    assert q3 == pytest.approx(3 * q1, rel=1e-12) and b3 == pytest.approx(3 * b1, rel=1e-14)


def test_defect_vanishes_as_eps_shrinks():
    vals = [oracles.l2_defect(CapacityParams(0.5, e, 1.0)) for e in (1e-2, 1e-4, 1e-8)]
    assert vals[-1][0] < 1e-3 and vals[-1][1] < 1e-3


def test_schedule_examples():
    assert oracles.capacity_schedule(0.5).eps == pytest.approx(0.25, rel=1e-15)
    s = oracles.capacity_schedule(0.1)
    assert s.eps == pytest.approx(1e-10, rel=1e-12)
    assert s.eps_pow_alpha == pytest.approx(0.1, rel=1e-12)


def test_schedule_underflow():
    s = oracles.capacity_schedule(0.001)
    assert s.eps == 0.0 and math.isfinite(s.h1_defect_sq)
    assert s.eps_pow_alpha == pytest.approx(0.001, rel=1e-10)


def test_schedule_decreasing_and_bounded():
    beta = math.pi / 4
    alphas = (0.4, 0.2, 0.1, 0.05)
    vals = [oracles.capacity_schedule(a, beta) for a in alphas]
    sq = [v.h1_defect_sq for v in vals]
    assert all(x > y for x, y in zip(sq, sq[1:]))
    for a, v in zip(alphas, vals):
        assert v.h1_defect_sq <= beta * a + beta * a ** (1 / a) + beta * a


def test_discrete_capacity_bridge():
    p = CapacityParams(0.5, 0.25, math.pi / 4)
    closed = oracles.energy_closed_form(p)
    errs = [abs(oracles.discrete_capacity_energy(p, h) - closed) for h in (0.1, 0.05)]
    assert errs[1] < errs[0] / 2  # observed order >= 1


def test_bochner_zero_form():
    zero = lambda x, y: np.zeros_like(x)
    form = oracles.closed_form_test_form("zero", *([zero] * 6), bc_compliant=True)
    assert oracles.bochner_identity(form) == (0.0, 0.0, 0.0)


def test_bump_forms_compliant():
    for form in oracles.random_bump_forms(10, seed=0):
        assert form.bc_compliant
        assert oracles.trace_residual(form) <= 1e-12
        lhs, rhs, res = oracles.bochner_identity(form)
        assert rhs > 0 and abs(res) <= 1e-8 * (1 + rhs)


def test_bump_forms_seeded():
    a = oracles.random_bump_forms(3, seed=5)
    b = oracles.random_bump_forms(3, seed=5)
    assert a == b


@pytest.mark.parametrize("form, expected", list(zip(oracles.violation_forms(), (-24.0, 24.0, 40.0))))
def test_violations(form, expected):
    assert not form.bc_compliant
    assert oracles.trace_residual(form) > 0.5
    lhs, rhs, res = oracles.bochner_identity(form)
    assert res == pytest.approx(expected, abs=1e-9)


def test_violation_y_x():
    lhs, rhs, res = oracles.bochner_identity(oracles.violation_forms()[0])
    assert abs(lhs) <= 1e-12 and rhs == pytest.approx(24.0, abs=1e-9)


def test_quadrature_rule_cell_must_divide():
    with pytest.raises(ValueError):
        oracles.quadrature_points_A(QuadratureRule(cell=0.3))


def test_quadrature_area_of_A():
    _, w = oracles.quadrature_points_A(QuadratureRule(points=2, cell=0.5))
    assert w.sum() == pytest.approx(12.0, abs=1e-12)
