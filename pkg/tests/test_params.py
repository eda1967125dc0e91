import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixvi import certify as cert
from fixvi import operators as op
from fixvi import space as sp
from fixvi.params import (Gains, Schedule, averaging_threshold, derive_tau, mu_upper_bound,
                          validate_gains, validate_schedule, validate_yamada_gains)

from conftest import SUITE, suite_problem


def test_mu_upper_bound_examples():
    assert mu_upper_bound(1, 1, 2, 1) == 2.0
    assert mu_upper_bound(1, 2, 2, 1) == 0.5
    # scaling L by c divides the bound by c^(q/(q-1))
    assert mu_upper_bound(1, 1, 2, 1) / mu_upper_bound(1, 2, 2, 1) == pytest.approx(2 ** 2)
    assert mu_upper_bound(1, 1, 3, 2) == pytest.approx(math.sqrt(1.5))
    for bad in ((0, 1, 2, 1), (1, -1, 2, 1), (1, 1, 2, 0), (1, 1, 1, 1)):
        with pytest.raises(ValueError):
            mu_upper_bound(*bad)


def test_derive_tau_examples():
    assert derive_tau(1, 1, 1, 2, 1) == 0.5
    assert derive_tau(0.25, 1, 2, 2, 1) == 0.125
    assert derive_tau(0.5, 1, 1, 2, 1) == 0.375  # frozen: derive.py
    assert derive_tau(1e-12, 1, 1, 2, 1) == pytest.approx(1e-12)
    for mu in (0.0, 2.0, 3.0, -1.0):
        with pytest.raises(ValueError):
            derive_tau(mu, 1, 1, 2, 1)


def test_averaging_threshold_examples():
    assert averaging_threshold(0.5, 2, 1) == 0.0
    assert averaging_threshold(0.25, 2, 1) == 0.5
    assert averaging_threshold(0.8, 2, 1) == 0.0
    assert averaging_threshold(2 / 3, 2, 1) == 0.0
    assert averaging_threshold(0.25, 2, 2) == pytest.approx(0.75)
    for lam in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            averaging_threshold(lam, 2, 1)


def test_validate_gains_examples():
    g = Gains(mu=1, gamma=1, beta=0.1, eta=1, L=1)
    rep = validate_gains(g)
    assert rep.ok
    assert g.tau == 0.5 and g.mu_bound == 2.0 and g.gamma_bound == pytest.approx(5.0)
    edge = Gains(mu=1, gamma=0.5 / 0.1, beta=0.1, eta=1, L=1)
    assert edge.gamma == edge.gamma_bound
    r = validate_gains(edge)
    assert not r.ok and not r["gamma_range"].ok and "strict inequality" in r["gamma_range"].message
    top = Gains(mu=2, gamma=1, beta=0.1, eta=1, L=1)
    r = validate_gains(top)
    assert not r["mu_range"].ok and top.tau == 0.0 and not r["tau_positive"].ok
    r = validate_gains(Gains(mu=1, gamma=7.5, beta=0.1, eta=1, L=1))
    assert [c.name for c in r.failures()] == ["gamma_range"]
    assert r["gamma_range"].margin == pytest.approx(-2.5)


def test_validate_yamada_gains():
    assert validate_yamada_gains(Gains(mu=1, gamma=0, beta=0.1, eta=1, L=1)).ok
    assert not validate_yamada_gains(Gains(mu=1, gamma=1, beta=0.1, eta=1, L=1)).ok


def test_gains_auto_and_for_problem(canonical):
    g = Gains.for_problem(canonical, 1, 1)
    assert (g.beta, g.eta, g.L) == (0.1, 1.0, 1.0)
    a = Gains.auto(canonical)
    assert a.mu == 1.0 and a.gamma == pytest.approx(2.5)
    assert validate_gains(a).ok
    with pytest.raises(ValueError):
        Gains.auto(canonical, mu_ratio=1.0)


def test_schedule_terms():
    p = Schedule.power()
    np.testing.assert_allclose(p.terms(0, 4), [_one_minus(), 0.5, 1 / 3, 0.25])
    c = Schedule.constant(0.5)
    assert np.all(c.terms(0, 10) == 0.5)
    z = Schedule.constant(0.0)
    assert np.all(z.terms(0, 5) == 0.0)
    f = Schedule.formula("1/sqrt(n+2)")
    assert f.term(2) == pytest.approx(0.5)
    for s in (p, c, f, Schedule.power(3, 0.5), Schedule.formula("2 - n")):
        t = s.terms(0, 1000)
        assert np.all((t > 0) & (t < 1))
    with pytest.raises(ValueError):
        Schedule.formula("__import__('os')")
    with pytest.raises(ValueError):
        Schedule.constant(1.0)
    with pytest.raises(ValueError):
        Schedule.power(1, 0)
    with pytest.raises(ValueError):
        Schedule("geometric", {})


def _one_minus():
    return float(np.nextafter(1.0, 0.0))


def test_validate_schedule_examples():
    rep = validate_schedule(Schedule.power(), Schedule.constant(0.5), "synchronal", [0.4], 2, 1)
    assert rep.ok
    assert {c.name for c in rep.checks} == {"K1", "K2", "K3", "K4"}
    assert all(c.status == "holds" for c in rep.checks)
    assert rep.data["alpha_partial_sum"] == pytest.approx(sum(1 / (n + 1) for n in range(1, 10_000)) + 1, abs=1e-12)
    rep = validate_schedule(Schedule.power(1, 2), Schedule.constant(0.5), "synchronal", [0.4], 2, 1)
    assert rep["K1"].status == "fails" and not rep.ok
    rep = validate_schedule(Schedule.power(), Schedule.constant(0.3), "synchronal", [0.4], 2, 1)
    assert rep["K3"].status == "fails"


def test_validate_schedule_cyclic_and_warnings():
    rep = validate_schedule(Schedule.power(), Schedule.constant(0.5), "cyclic", [0.4, 0.3], 2, 1)
    assert {c.name for c in rep.checks} == {"K1'", "K2'", "K3'", "K4'"} and rep.ok
    rep = validate_schedule(Schedule.power(), Schedule.constant(0.5), "cyclic", [0.4, 0.2], 2, 1)
    assert not rep["K4'"].ok  # threshold 0.6 for the operator with k = 0.2
    rep = validate_schedule(Schedule.power(), Schedule.constant(0.3), "synchronal", [0.4, 0.2], 2, 1)
    assert not rep["K3"].ok and any("weaker form" in w for w in rep.warnings)
    assert any("K4 is applied to beta only" in w for w in rep.warnings)
    rep = validate_schedule(Schedule.formula("1/(n+1)"), Schedule.constant(0.5), "synchronal", [0.4], 2, 1)
    assert rep["K1"].status == "unknown" and rep["K2"].status == "unknown" and rep.ok
    # threshold 0.5 for k = 0.25 in Hilbert: beta 0.4 fails K4 although K3 holds
    rep = validate_schedule(Schedule.power(), Schedule.constant(0.4), "synchronal", [0.25], 2, 1)
    assert rep["K3"].ok and not rep["K4"].ok
    with pytest.raises(ValueError):
        validate_schedule(Schedule.power(), Schedule.constant(0.5), "synchronal", [0.4], 2, 1, horizon=0)


@settings(max_examples=1000, deadline=None)
@given(eta=st.floats(1e-3, 1e3), ratio=st.floats(1.0, 1e3), q=st.floats(1.1, 4.0),
       d_q=st.floats(0.1, 10.0), frac=st.floats(1e-6, 1 - 1e-6))
def test_tau_positive_inside_bound(eta, ratio, q, d_q, frac):
    L = eta * ratio  # L >= eta for any accretive Lipschitz map
    mu = frac * mu_upper_bound(eta, L, q, d_q)
    assert derive_tau(mu, eta, L, q, d_q) > 0


@settings(max_examples=300, deadline=None)
@given(mu_r=st.floats(0.01, 0.99), g_r=st.floats(0.01, 0.99), alpha=st.floats(1e-9, 1.0))
def test_valid_gains_give_convex_weight(mu_r, g_r, alpha):
    g = Gains.auto(_H_PROB, mu_r, g_r)
    assert validate_gains(g).ok
    a = min(alpha, np.nextafter(min(1.0, 1.0 / g.tau), 0.0))
    w = 1 - a * (g.tau - g.gamma * g.beta)
    assert 0 < w < 1


_H_PROB = op.generate_problem(11, 4, 2, sp.SpaceSpec.hilbert(4))


@pytest.mark.parametrize("seed,dim,N", SUITE[::4])
def test_valid_gains_imply_step_contraction(seed, dim, N):
    prob = suite_problem(seed, dim, N)
    for mu_r in (0.2, 0.5, 0.9):
        g = Gains.auto(prob, mu_r)
        assert validate_gains(g).ok
        t_max = min(1.0, 1.0 / g.tau)
        rep = cert.certify_step_contraction(prob.G, g.mu, [t_max * f for f in (0.01, 0.5, 1.0)], g.tau,
                                            prob.space, cert.SamplePlan(seed=seed, count=300))
        assert rep.passed, rep
