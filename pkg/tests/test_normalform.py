import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorfhn.model import I_STAR, ModelParams, PhaseState, k_slope, n0_star, v0_star, vector_field
from mirrorfhn.normalform import (
    NormalCoords,
    center_dynamics,
    center_roots,
    degeneracy_report,
    from_normal,
    to_normal,
    v_dot_normal,
)

params = st.builds(
    ModelParams,
    epsilon=st.floats(1e-3, 0.5),
    i_app=st.floats(-1, 3),
    v0=st.floats(-2.5, 0.5),
    n0=st.floats(-2.5, 1),
)
states = st.builds(PhaseState, st.floats(-3, 3), st.floats(-3, 3))


def test_organizing_point_maps_to_origin():
    p = ModelParams(0.02, I_STAR, -0.3, -0.1586)
    c = to_normal(p, PhaseState(-1.0, p.delta0))
    assert (c.v, c.u, c.w_tilde) == pytest.approx((0.0, 0.0, 0.0), abs=1e-15)


def test_substitution_example():
    p = ModelParams(0.02, I_STAR, -1.0, -1.0)
    c = to_normal(p, PhaseState(-0.9, 0.1))
    assert c.v == pytest.approx(0.1) and c.w_tilde == pytest.approx(0.1)
    assert c.u == pytest.approx(0.06)


@given(params, states)
def test_affine_inverse(p, s):
    back = from_normal(p, to_normal(p, s))
    assert back.v == pytest.approx(s.v, abs=1e-14)
    assert back.n == pytest.approx(s.n, abs=1e-13)


@settings(max_examples=1000)
@given(params, states)
def test_conjugacy_with_model(p, s):
    exact = vector_field(p, s)[0]
    got = v_dot_normal(p, to_normal(p, s))
    assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_center_dynamics_examples():
    p = ModelParams(0.02, I_STAR, -1.0, -1.0)
    assert center_dynamics(p, 0.0) == 0.0
    vs = v0_star()
    q = ModelParams(0.02, I_STAR, vs, n0_star(vs))
    grid = np.linspace(-2, 2, 41)
    assert np.allclose(center_dynamics(q, grid), -grid**3 / 3, atol=1e-9)


@given(params, st.floats(-2, 2))
def test_center_dynamics_is_u_zero_slice(p, v):
    assert center_dynamics(p, v) == pytest.approx(v_dot_normal(p, NormalCoords(v, 0.0, 0.0)), rel=1e-12, abs=1e-12)


def test_center_roots_transcritical():
    for v0 in (-1.0, -0.3, 0.0):
        p = ModelParams(0.02, I_STAR, v0, n0_star(v0))
        k = k_slope(v0)
        r = center_roots(p)
        assert np.sum(np.abs(r) < 1e-6) == 2
        assert np.min(np.abs(r - 3 * (1 - k * k))) < 1e-9


def test_degeneracy_report_examples():
    rep = degeneracy_report(ModelParams(0.05, I_STAR, -1.0, -1.0))
    assert rep.residuals == pytest.approx((0, 0, 0), abs=1e-15)
    assert rep.coeff_quadratic == pytest.approx(-10.5)
    assert rep.coeff_cross == pytest.approx(5.0)
    assert rep.transcritical and not rep.pitchfork
    vs = v0_star()
    rep = degeneracy_report(ModelParams(0.3, I_STAR, vs, n0_star(vs)))
    assert max(map(abs, rep.residuals)) < 1e-12
    assert abs(rep.coeff_quadratic) < 1e-9 and rep.coeff_cross == pytest.approx(2.0)
    assert rep.pitchfork
    off = degeneracy_report(ModelParams(0.02, I_STAR, -0.3, -0.1586))
    assert off.residuals[0] == pytest.approx(-off.residuals[2] ** 2 / 4)
    assert not off.transcritical
