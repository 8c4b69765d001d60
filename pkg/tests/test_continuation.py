import numpy as np
import pytest

from mirrorfhn.classify import _far_side
from mirrorfhn.continuation import (
    BracketInvalid,
    bifurcation_diagram,
    branch_current,
    branch_folds,
    branch_hopfs,
    branch_slope,
    default_rho,
    detect_snic,
    equilibrium_branch,
    find_homoclinic,
    find_limit_cycle,
    gap_sign,
    homoclinic_loop,
    section_gap,
)
from mirrorfhn.equilibria import find_equilibria
from mirrorfhn.model import I_STAR, ModelParams, PhaseState

from conftest import REGION_I, REGION_IV, REGION_V, TYPE_II, at_istar


@pytest.fixture(scope="module")
def sh_iv():
    return find_homoclinic(at_istar(REGION_IV))


@pytest.fixture(scope="module")
def sn_iv():
    return [f for f in branch_folds(at_istar(REGION_IV)) if f.i_crit > I_STAR][0]


def test_branch_slope_finite_difference():
    for v0, n0 in (REGION_IV, REGION_V, REGION_I):
        vs = np.linspace(-3, 2.5, 23)
        h = 1e-6
        fd = (branch_current(vs + h, v0, n0) - branch_current(vs - h, v0, n0)) / (2 * h)
        assert np.allclose(branch_slope(vs, v0, n0), fd, atol=1e-7)


def test_branch_points_are_equilibria():
    p = at_istar(REGION_IV)
    br = equilibrium_branch(p)
    for i, eq in br.points[::400]:
        q = p.with_current(i)
        assert any(abs(e.state.v - eq.state.v) < 1e-8 for e in find_equilibria(q))


def test_region_iv_fold(sn_iv):
    assert sn_iv.kind == "SN" and sn_iv.i_crit > I_STAR
    assert sn_iv.location.n < 0 and sn_iv.location.v < -1
    assert sn_iv.i_crit == pytest.approx(0.6774207416, abs=1e-9)


def test_region_v_folds():
    p = at_istar(REGION_V)
    rel = [f.i_crit for f in branch_folds(p) if abs(f.i_crit - I_STAR) > 0.01]
    up, down = min(rel), max(rel)
    assert up < I_STAR < down
    assert up == pytest.approx(-0.6492974, abs=1e-6) and down == pytest.approx(2.2926817, abs=1e-6)


def test_type_ii_hopf():
    hopfs = branch_hopfs(at_istar(TYPE_II))
    assert len(hopfs) >= 1
    h = min(hopfs, key=lambda b: b.i_crit)
    assert h.location.v == pytest.approx(-np.sqrt(1 - 0.02), abs=1e-9)
    assert h.i_crit == pytest.approx(1.19237, abs=1e-4)


def test_snic_detection(sn_iv):
    p1 = at_istar(REGION_I)
    f1 = [f for f in branch_folds(p1) if abs(f.location.v + 1) < 0.05][0]
    assert detect_snic(p1, f1)
    assert not detect_snic(at_istar(REGION_IV), sn_iv)
    pv = at_istar(REGION_V)
    down = max(branch_folds(pv), key=lambda f: f.i_crit)
    assert not detect_snic(pv, down)


def test_cycle_bistable_window(sh_iv, sn_iv):
    i_mid = 0.5 * (sh_iv.i_crit + sn_iv.i_crit)
    p = at_istar(REGION_IV, i_app=i_mid)
    cyc = find_limit_cycle(p, launch=_far_side(p))
    assert cyc is not None and cyc.closure < 1e-3 and cyc.v_max > 1.5
    assert any(e.stable for e in find_equilibria(p))
    assert find_limit_cycle(at_istar(REGION_IV, i_app=sh_iv.i_crit - 5e-3), launch=_far_side(p)) is None


def test_period_scaling_with_epsilon():
    a = find_limit_cycle(ModelParams(0.02, 0.8, *REGION_IV))
    b = find_limit_cycle(ModelParams(0.01, 0.8, *REGION_IV))
    assert 1.6 <= b.period / a.period <= 2.4


def test_homoclinic_region_iv(sh_iv, sn_iv):
    assert I_STAR < sh_iv.i_crit < sn_iv.i_crit
    assert sh_iv.i_crit == pytest.approx(0.6685534166, abs=1e-8)
    p = at_istar(REGION_IV, i_app=sh_iv.i_crit)
    assert abs(section_gap(p).gap) < 1e-6
    assert gap_sign(p.with_current(sh_iv.i_crit - 1e-3)) < 0
    assert gap_sign(p.with_current(sh_iv.i_crit + 1e-3)) > 0
    g = section_gap(p.with_current(sh_iv.i_crit - 1e-3))
    assert g.gap < 0


def test_homoclinic_rho_insensitive(sh_iv):
    p = at_istar(REGION_IV)
    half = find_homoclinic(p, rho=0.5 * default_rho(p))
    assert abs(half.i_crit - sh_iv.i_crit) < 1e-4


def test_homoclinic_loop_closure(sh_iv):
    loop = homoclinic_loop(at_istar(REGION_IV, i_app=sh_iv.i_crit))
    assert loop.closure < 1e-6
    assert loop.stitch < 1e-5


def test_region_i_bracket_invalid():
    for eps in (0.05, 0.02):
        with pytest.raises(BracketInvalid):
            find_homoclinic(at_istar(REGION_I, eps=eps))


def test_section_validation():
    p = at_istar(REGION_IV)
    with pytest.raises(ValueError):
        section_gap(p, rho=0.1)


def test_region_iv_diagram(sh_iv, sn_iv):
    d = bifurcation_diagram(at_istar(REGION_IV), (0.6, 0.75), cycle_grid=16)
    kinds = d.kinds()
    assert "SN" in kinds and "homoclinic" in kinds
    sh = [b for b in d.points if b.kind == "homoclinic"][0]
    sn = [b for b in d.points if b.kind == "SN" and b.i_crit > I_STAR][0]
    assert sh.i_crit < sn.i_crit
    rows = d.cycle_rows()
    present = [r["i_app"] for r in rows if r["present"]]
    assert min(present) >= sh.i_crit - 1e-9
    assert max(present) > sn.i_crit
    assert all(r["present"] for r in rows if r["i_app"] > sn.i_crit)
