"""Mean-field analysis tests: flow, conditions, equilibria, classification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stackedcp.meanfield import (
    Outcome,
    basin_scan,
    classify,
    conditions,
    dulac_divergence,
    equilibria,
    integrate,
    jacobian,
    rhs,
)
from stackedcp.model import INFINITE, Params


def mk(l10, l20, l21=0.0, delta=0.0):
    return Params(lambda10=l10, lambda20=l20, lambda21=l21, delta=delta)


# ------------------------------------------------------------------------ rhs


def test_rhs_fixed_points():
    assert rhs((0.0, 0.0), mk(2.0, 1.0, 0.5, 0.3)) == (0.0, 0.0)
    du1, du2 = rhs((0.5, 0.0), mk(2.0, 1.0))
    assert du1 == pytest.approx(0.0, abs=1e-15)
    assert du2 == 0.0
    du1, du2 = rhs((0.0, 0.5), mk(1.0, 2.0))
    assert du1 == 0.0
    assert du2 == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(
    u1=st.floats(0.0, 1.0),
    frac=st.floats(0.0, 1.0),
    l10=st.floats(0.0, 10.0),
    l20=st.floats(0.0, 10.0),
    l21=st.floats(0.0, 10.0),
    delta=st.floats(0.0, 5.0),
)
def test_total_density_identity(u1, frac, l10, l20, l21, delta):
    # (u1+u2)' must equal (l10 u1 + l20 u2)(1-u1-u2) - (u1+u2): the infection
    # and recovery exchange terms cancel exactly
    u2 = (1.0 - u1) * frac
    p = mk(l10, l20, l21, delta)
    du1, du2 = rhs((u1, u2), p)
    expect = (l10 * u1 + l20 * u2) * (1 - u1 - u2) - (u1 + u2)
    assert du1 + du2 == pytest.approx(expect, abs=1e-12)


def test_rhs_rejects_infinite_rate():
    with pytest.raises(ValueError):
        rhs((0.1, 0.1), Params(2.0, 1.0, lambda21=INFINITE, dim=1, side=3))


def test_jacobian_matches_finite_differences():
    p = mk(2.3, 1.7, 0.9, 0.4)
    u = (0.21, 0.34)
    j = jacobian(u, p)
    h = 1e-7
    for col, e in enumerate(((h, 0.0), (0.0, h))):
        plus = np.array(rhs((u[0] + e[0], u[1] + e[1]), p))
        minus = np.array(rhs((u[0] - e[0], u[1] - e[1]), p))
        fd = (plus - minus) / (2 * h)
        assert np.allclose(fd, j[:, col], atol=1e-6)


# ------------------------------------------------------------------ integrate


def test_integrate_constant_at_origin():
    tr = integrate((0.0, 0.0), mk(3.0, 2.0, 1.0, 0.5), 10.0)
    assert np.all(tr.u1 == 0.0)
    assert np.all(tr.u2 == 0.0)


def test_integrate_subcritical_extinction():
    tr = integrate((0.4, 0.4), mk(0.5, 0.5, 1.0, 0.2), 500.0)
    assert tr.u1[-1] < 1e-6 and tr.u2[-1] < 1e-6


def test_integrate_logistic_limit():
    tr = integrate((0.1, 0.0), mk(2.0, 0.0), 300.0)
    assert tr.u1[-1] == pytest.approx(0.5, abs=1e-7)


def test_integrate_stays_in_triangle():
    p = mk(4.0, 3.0, 2.0, 0.7)
    for s0 in [(0.99, 0.01), (0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]:
        tr = integrate(s0, p, 50.0)
        assert tr.u1.min() >= 0.0 and tr.u2.min() >= 0.0
        assert (tr.u1 + tr.u2).max() <= 1.0 + 1e-12


def test_integrate_flow_gradient_check():
    p = mk(2.0, 1.5, 0.8, 0.3)
    s0 = (0.3, 0.2)
    h = 1e-6
    tr = integrate(s0, p, h, tol=(1e-12, 1e-11))
    fd = (np.array([tr.u1[-1], tr.u2[-1]]) - np.array(s0)) / h
    du = np.array(rhs(s0, p))
    assert np.abs((fd - du) / du).max() < 1e-4


def test_integrate_argument_errors():
    with pytest.raises(ValueError):
        integrate((0.7, 0.7), mk(1.0, 1.0), 1.0)  # outside triangle
    with pytest.raises(ValueError):
        integrate((0.1, 0.1), mk(1.0, 1.0), 0.0)


# ----------------------------------------------------------------- conditions


def test_conditions_worked_examples():
    c = conditions(mk(2.0, 0.5, 0.1, 0.0))
    assert c.lhs_2in1 == pytest.approx(0.3)
    assert c.symbiont_invades is False
    assert c.lhs_1in2 == pytest.approx(4.1)
    assert c.host_invades is True

    c = conditions(mk(1.7, 1.7, 0.0, 0.25))
    assert c.lhs_2in1 == pytest.approx(1.0)
    assert c.symbiont_invades is False  # 1 <= 1 + delta

    c = conditions(mk(2.0, 2.0, 4.0, 0.0))
    assert c.lhs_2in1 == pytest.approx(3.0)
    assert c.symbiont_invades is True


def test_conditions_inapplicable_on_zero_rates():
    c = conditions(mk(0.0, 2.0, 1.0))
    assert c.lhs_2in1 is None and c.symbiont_invades is None
    c = conditions(mk(2.0, 0.0, 1.0))
    assert c.lhs_1in2 is None and c.host_invades is None


def test_conditions_infinite_infection():
    c = conditions(Params(2.0, 0.5, lambda21=INFINITE, dim=1, side=3))
    assert c.lhs_2in1 == math.inf and c.symbiont_invades is True
    assert c.lhs_1in2 == math.inf  # lambda20 < 1 makes the factor negative
    c = conditions(Params(2.0, 4.0, lambda21=INFINITE, dim=1, side=3))
    assert c.lhs_1in2 == -math.inf and c.host_invades is False


# ----------------------------------------------------------------- equilibria


def test_equilibria_boundary_membership():
    eqs = {e.kind: e for e in equilibria(mk(2.0, 0.5))}
    assert set(eqs) == {"p0", "p1"}
    assert eqs["p1"].point == (0.5, 0.0)

    eqs = {e.kind: e for e in equilibria(mk(0.5, 2.0))}
    assert set(eqs) == {"p0", "p2"}
    assert eqs["p2"].point == (0.0, 0.5)

    # delta > 0 removes p2 regardless of lambda20
    kinds = {e.kind for e in equilibria(mk(0.5, 2.0, 1.0, 0.5))}
    assert "p2" not in kinds


def test_equilibria_interior_residual_and_uniqueness():
    p = mk(0.9, 2.0, 1.0, 0.5)
    eqs = equilibria(p)
    inner = [e for e in eqs if e.kind == "interior"]
    assert len(inner) == 1
    resid = rhs(inner[0].point, p)
    assert max(abs(v) for v in resid) < 1e-10
    # independent route: the flow converges to the same point
    tr = integrate((0.3, 0.3), p, 2000.0, stop_near=inner[0].point, stop_eps=1e-9)
    assert math.hypot(tr.u1[-1] - inner[0].u1, tr.u2[-1] - inner[0].u2) < 1e-6


def test_equilibria_degenerate_rates():
    eqs = equilibria(mk(0.0, 0.0, 0.0, 0.0))
    assert [e.kind for e in eqs] == ["p0"]


def test_equilibria_rejects_infinite():
    with pytest.raises(ValueError):
        equilibria(Params(2.0, 1.0, lambda21=INFINITE, dim=1, side=3))


@settings(max_examples=60, deadline=None)
@given(
    l10=st.floats(0.1, 6.0),
    l20=st.floats(0.1, 6.0),
    l21=st.floats(0.0, 6.0),
    delta=st.floats(0.0, 2.0),
)
def test_equilibria_residuals_always_gate(l10, l20, l21, delta):
    for e in equilibria(mk(l10, l20, l21, delta)):
        assert max(abs(v) for v in rhs(e.point, mk(l10, l20, l21, delta))) < 1e-10
        assert e.u1 >= 0 and e.u2 >= 0 and e.u1 + e.u2 <= 1


# ------------------------------------------------------------- classification


def test_classify_each_clause():
    cases = [
        (mk(0.8, 0.9), Outcome.EXTINCTION, "1", (0.0, 0.0)),
        (mk(1.0, 1.0, 5.0, 0.0), Outcome.EXTINCTION, "1", (0.0, 0.0)),
        (mk(0.9, 2.0, 1.0, 0.5), Outcome.COEXISTENCE, "2a", None),
        (mk(2.0, 2.0, 4.0, 0.5), Outcome.COEXISTENCE, "2b", None),
        (mk(2.0, 0.5, 2.0, 0.0), Outcome.COEXISTENCE, "2c", None),
        (mk(2.0, 0.5, 0.1, 0.0), Outcome.HOSTS_WIN, "3", (0.5, 0.0)),
        (mk(1.5, 2.0, 3.0, 0.0), Outcome.SYMBIONTS_WIN, "4", (0.0, 0.5)),
    ]
    for p, outcome, clause, point in cases:
        cls = classify(p)
        assert cls.outcome is outcome, (p, cls)
        assert cls.clause == clause
        if point is not None:
            assert cls.point == point
        else:
            assert cls.point is not None  # interior, residual-gated
            assert max(abs(v) for v in rhs(cls.point, p)) < 1e-10


def test_classify_unclassified_gaps():
    # delta > 0, lambda10 > 1, invasion condition failing: no clause speaks
    cls = classify(mk(2.0, 0.5, 0.0, 0.5))
    assert cls.outcome is Outcome.UNCLASSIFIED
    assert cls.clause is None and cls.point is None
    # lambda20 = 0 makes the host-invasion condition inapplicable: clause 3
    # cannot be consulted, so the classifier declines to extrapolate
    cls = classify(mk(2.0, 0.0, 0.1, 0.0))
    assert cls.outcome is Outcome.UNCLASSIFIED


def test_classify_exact_boundary_is_unclassified():
    # lhs_2in1 = 0.5 + 0.5 = 1.0 exactly equals 1 + delta = 1: clause 3 would
    # otherwise fire on the negation, but the boundary is not addressed
    p = mk(2.0, 1.0, 1.0, 0.0)
    c = conditions(p)
    assert c.lhs_2in1 == c.threshold_2in1
    assert classify(p).outcome is Outcome.UNCLASSIFIED


def test_classify_infinite_infection_has_no_point():
    cls = classify(Params(2.0, 1.5, lambda21=INFINITE, delta=0.5, dim=1, side=3))
    assert cls.outcome is Outcome.COEXISTENCE and cls.clause == "2b"
    assert cls.point is None


# ---------------------------------------------------------------------- dulac


def test_dulac_worked_examples():
    assert dulac_divergence((0.5, 0.25), mk(1.0, 1.0, 0.0, 1.0)) == pytest.approx(-10.0)
    assert dulac_divergence((0.5, 0.5), mk(1.0, 0.0, 0.0, 0.0)) == pytest.approx(-2.0)


def test_dulac_boundary_is_domain_error():
    with pytest.raises(ValueError):
        dulac_divergence((0.0, 0.5), mk(1.0, 1.0))
    with pytest.raises(ValueError):
        dulac_divergence((0.5, 0.0), mk(1.0, 1.0))


def test_dulac_negative_on_random_interior():
    rng = np.random.default_rng(0)
    for _ in range(50):
        l10, l20, l21, d = rng.uniform(0.01, 10, size=4)
        p = mk(l10, l20, l21, d)
        u1 = rng.uniform(1e-6, 1.0)
        u2 = rng.uniform(1e-6, 1.0 - u1) * 0.999999
        if u1 + u2 >= 1:
            continue
        assert dulac_divergence((u1, u2), p) < 0.0


# ----------------------------------------------------------------- basin scan


def test_basin_scan_extinction_covers_whole_triangle():
    rep = basin_scan(mk(0.8, 0.9, 1.0, 0.2), 7, t_end=1e4)
    assert rep.outcome is Outcome.EXTINCTION
    assert rep.n_skipped == 0  # clause 1 is stable on the whole triangle
    assert rep.max_distance < 1e-6


def test_basin_scan_coexistence_skips_boundary():
    rep = basin_scan(mk(0.9, 2.0, 1.0, 0.5), 6, t_end=1e4)
    assert rep.n_skipped > 0  # u2 = 0 row excluded when delta > 0
    assert rep.max_distance < 1e-6


def test_basin_scan_hosts_win_quadrant():
    rep = basin_scan(mk(2.0, 0.5, 0.1, 0.0), 6, t_end=1e4)
    assert rep.target == (0.5, 0.0)
    assert rep.max_distance < 1e-6


def test_basin_scan_requires_classified():
    with pytest.raises(ValueError):
        basin_scan(mk(2.0, 0.5, 0.0, 0.5), 5)
