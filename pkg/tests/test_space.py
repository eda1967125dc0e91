import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fixvi import space as sp

H2 = sp.SpaceSpec.hilbert(2)
L3 = sp.SpaceSpec(2, 3.0, 2.0)


def test_norm_examples():
    assert sp.norm([0.0, 0.0], H2) == 0.0
    assert sp.norm([3.0, 4.0], H2) == 5.0
    assert sp.norm([1.0, -2.0], sp.SpaceSpec(2, 3.0, 3.0, 1.0)) == pytest.approx(9 ** (1 / 3), rel=1e-15)


def test_norm_rejects_bad_input():
    with pytest.raises(ValueError):
        sp.norm([1.0, 2.0, 3.0], H2)
    with pytest.raises(ValueError):
        sp.norm([1.0, np.nan], H2)


def test_dual_pair_examples():
    assert sp.dual_pair([1.0, 0.0], [0.0, 1.0], H2) == 0.0
    assert sp.dual_pair([1.0, -4.0], [1.0, -2.0], H2) == 9.0
    assert sp.dual_pair([0.0, 0.0], [7.0, -3.0], H2) == 0.0


def test_duality_map_examples():
    np.testing.assert_array_equal(sp.duality_map([3.0, 4.0], H2), [3.0, 4.0])
    s33 = sp.SpaceSpec(2, 3.0, 3.0, 1.0)
    np.testing.assert_allclose(sp.duality_map([1.0, -2.0], s33), [1.0, -4.0], rtol=1e-15)
    assert sp.dual_pair(sp.duality_map([1.0, -2.0], s33), [1.0, -2.0], s33) == pytest.approx(9.0)
    for s in (H2, L3, sp.SpaceSpec(2, 1.5, 1.5, 1.5)):
        np.testing.assert_array_equal(sp.duality_map([0.0, 0.0], s), [0.0, 0.0])


def test_default_dq():
    assert sp.SpaceSpec(3).d_q == 1.0
    assert sp.SpaceSpec(3, 3.0, 2.0).d_q == 2.0
    with pytest.raises(ValueError, match="supply d_q"):
        sp.SpaceSpec(3, 1.5, 1.5)
    assert sp.SpaceSpec(3, 1.5, 1.5, 1.5).d_q == 1.5


@pytest.mark.parametrize("kw", [dict(dim=0), dict(dim=2, p=1.0), dict(dim=2, q=1.0), dict(dim=2, d_q=-1.0),
                                dict(dim=2, p=math.inf)])
def test_space_invariants(kw):
    with pytest.raises(ValueError):
        sp.SpaceSpec(**kw)


def test_validate_space_examples():
    assert sp.validate_space(H2).ok
    rep = sp.validate_space(sp.SpaceSpec(2, 3.0, 2.0, 2.0))
    assert rep.ok and not rep.warnings
    bad = sp.validate_space(sp.SpaceSpec(2, 3.0, 3.0, 1.0))
    assert not bad.ok and "unsupported" in bad["smoothness_pair"].message
    warned = sp.validate_space(sp.SpaceSpec(2, 3.0, 2.0, 5.0))
    assert warned.ok and warned.warnings
    assert sp.validate_space(sp.SpaceSpec(2, 1.5, 1.5, 1.5)).warnings


SPACES = [H2, sp.SpaceSpec(4, 3.0, 2.0), sp.SpaceSpec(4, 1.5, 1.5, 1.5), sp.SpaceSpec(3, 4.0, 2.0),
          sp.SpaceSpec(3, 1.2, 1.2, 1.0)]
# normal floats or exact zeros; subnormal inputs carry too few bits for relative checks
_entry = st.one_of(st.just(0.0), st.floats(1e-150, 1e3), st.floats(-1e3, -1e-150))
vec = arrays(np.float64, 4, elements=_entry)


@settings(max_examples=300, deadline=None)
@given(v=vec, i=st.integers(0, len(SPACES) - 1))
def test_duality_identities(v, i):
    s = SPACES[i]
    x = v[: s.dim]
    nx = sp.norm(x, s)
    j = sp.duality_map(x, s)
    assert abs(sp.dual_pair(j, x, s) - nx**s.q) <= 1e-10 * max(1.0, nx**s.q)
    assert abs(sp.dual_norm(j, s) - nx ** (s.q - 1)) <= 1e-10 * max(1.0, nx ** (s.q - 1))


@settings(max_examples=200, deadline=None)
@given(v=vec, c=st.floats(1e-3, 1e3), i=st.integers(0, len(SPACES) - 1))
def test_duality_homogeneity(v, c, i):
    s = SPACES[i]
    x = v[: s.dim]
    lhs = sp.duality_map(c * x, s)
    rhs = c ** (s.q - 1) * sp.duality_map(x, s)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-300)


def test_hilbert_duality_is_identity():
    x = np.random.default_rng(0).standard_normal((1000, 5))
    np.testing.assert_array_equal(sp.duality_map(x, sp.SpaceSpec.hilbert(5)), x)


def test_batched_norm_matches_rows():
    s = sp.SpaceSpec(3, 3.0, 2.0)
    x = np.random.default_rng(1).standard_normal((10, 3))
    np.testing.assert_allclose(sp.norm(x, s), [sp.norm(r, s) for r in x], rtol=1e-15)
