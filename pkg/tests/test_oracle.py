import dataclasses

import numpy as np
import pytest

from fixvi import oracle as orc
from fixvi import operators as op
from fixvi import space as sp
from fixvi.params import Gains

from conftest import CANONICAL_LIMIT, SUITE, suite_problem


def test_affine_direct_canonical(canonical):
    g = Gains.for_problem(canonical, 1, 1)
    r = orc.solve_vi_affine(canonical, g)
    np.testing.assert_allclose(r.x, CANONICAL_LIMIT, rtol=0, atol=1e-15)
    assert r.method == "affine-direct" and r.vi_residual <= r.tolerance


def test_affine_direct_without_f(canonical):
    g = Gains.for_problem(canonical, 1, 1)
    r = orc.solve_vi_affine(canonical, dataclasses.replace(g, gamma=0.0))
    np.testing.assert_allclose(r.x, [0.0, 0.0], atol=1e-15)


def test_affine_direct_whole_space():
    s = sp.SpaceSpec.hilbert(3)
    ident = op.Affine.identity(3).with_claims(strict=0.5)
    c = np.array([1.0, -2.0, 0.5])
    f = op.Affine(np.zeros((3, 3)), c, op.Claims(contraction=0.1))
    G = op.Affine.identity(3)
    prob = op.ProblemInstance(s, (ident,), f, G, (1.0,), op.FixedSet(np.zeros(3), np.eye(3)), "whole")
    r = orc.solve_vi_affine(prob, Gains.for_problem(prob, 1, 1))
    np.testing.assert_allclose(r.x, c, atol=1e-15)


def test_projected_canonical(canonical):
    g = Gains.for_problem(canonical, 1, 1)
    r = orc.solve_vi_projected(canonical, g, tol=1e-12)
    np.testing.assert_allclose(r.x, CANONICAL_LIMIT, rtol=0, atol=1e-11)
    start = orc.solve_vi_projected(canonical, g, x0=CANONICAL_LIMIT)
    assert start.iterations == 0
    zero = orc.solve_vi_projected(canonical, dataclasses.replace(g, gamma=0.0))
    np.testing.assert_allclose(zero.x, [0.0, 0.0], atol=1e-11)
    with pytest.raises(ValueError):
        orc.solve_vi_projected(canonical, g, step=10.0)
    with pytest.raises(RuntimeError):
        orc.solve_vi_projected(canonical, g, x0=[100.0, 0.0], max_iter=2)


def test_direct_solvers_need_hilbert():
    prob = op.generate_problem(0, 4, 2, sp.SpaceSpec(4, 3.0, 2.0))
    g = Gains.auto(prob)
    with pytest.raises(ValueError, match="Hilbert"):
        orc.solve_vi_affine(prob, g)
    with pytest.raises(ValueError, match="Hilbert"):
        orc.solve_vi_projected(prob, g)


def test_vi_residual_examples(canonical):
    g = Gains.for_problem(canonical, 1, 1)
    probes = orc.probe_set(canonical.fixed_set, count=1000)
    assert orc.vi_residual(CANONICAL_LIMIT, canonical, g, probes) <= 1e-9
    assert orc.vi_residual(CANONICAL_LIMIT + [1.0, 0.0], canonical, g, probes) > 0
    assert orc.vi_residual(CANONICAL_LIMIT, canonical, g, [CANONICAL_LIMIT]) == 0.0
    with pytest.raises(ValueError):
        orc.vi_residual(CANONICAL_LIMIT, canonical, g, np.zeros((0, 2)))


def test_vi_residuals_vectorized(canonical):
    g = Gains.for_problem(canonical, 1, 1)
    probes = orc.probe_set(canonical.fixed_set, count=50)
    X = np.random.default_rng(0).normal(size=(7, 2))
    many = orc.vi_residuals(X, canonical, g, probes, chunk=3)
    one = [orc.vi_residual(x, canonical, g, probes) for x in X]
    np.testing.assert_allclose(many, one, rtol=1e-14, atol=1e-14)


def test_probe_set_layout(canonical):
    fs = canonical.fixed_set
    pts = orc.probe_set(fs, count=10, seed=4)
    assert pts.shape == (1 + 2 * 2 * fs.rank + 10, 2)
    assert np.all(fs.distance(pts) <= 1e-12)
    np.testing.assert_array_equal(pts, orc.probe_set(fs, count=10, seed=4))


@pytest.mark.parametrize("seed,dim,N", SUITE)
def test_oracle_contract_on_suite(seed, dim, N):
    prob = suite_problem(seed, dim, N)
    g = Gains.auto(prob)
    fs = prob.common_fixed_set()
    probes = orc.probe_set(fs, count=1000, seed=seed)
    a = orc.solve_vi_affine(prob, g, probes)
    b = orc.solve_vi_projected(prob, g, tol=1e-13, probes=probes)
    assert np.linalg.norm(a.x - b.x) <= 1e-9
    assert a.vi_residual <= 1e-8 and b.vi_residual <= 1e-8
    assert fs.distance(a.x) <= 1e-10
    # uniqueness probe: moving along the fixed set strictly raises the residual
    base = orc.vi_residual(a.x, prob, g, probes)
    for j in range(fs.rank):
        for d in (1e-2, 1e-1):
            for sgn in (1.0, -1.0):
                assert orc.vi_residual(a.x + sgn * d * fs.basis[:, j], prob, g, probes) > base
