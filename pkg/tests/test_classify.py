import numpy as np
import pytest

from mirrorfhn.classify import (
    REGIONS,
    Unclassifiable,
    bistable_range,
    chart,
    coherence_evidence,
    detect_adp,
    fi_curve,
    latency_curve,
    loglog_slope,
    measure_latency,
    region_at,
    resting_state,
    subthreshold_response,
)
from mirrorfhn.continuation import branch_folds, branch_hopfs, find_homoclinic
from mirrorfhn.model import I_STAR, ModelParams, n0_star, v0_star

from conftest import REGION_I, REGION_IV, REGION_V, TYPE_II, TYPE_III, at_istar


def test_region_examples():
    assert region_at(*REGION_I, 0.02).region == "I"
    assert region_at(*REGION_IV, 0.02).region == "IV"
    assert region_at(*REGION_V, 0.02).region == "V"
    assert region_at(*TYPE_II, 0.02).region == "II"
    # stability is lost only beyond I* + 2, so the Type III rule applies
    lab = region_at(*TYPE_III, 0.02)
    assert lab.region == "III" and lab.evidence["resting_loss_current"] > I_STAR + 2


def test_pitchfork_neighbourhood():
    vs = v0_star()
    ns = n0_star(vs)
    assert region_at(vs, ns + 0.1, 0.02, cycle_scan=False).region == "II"
    assert region_at(vs, ns - 0.1, 0.02, cycle_scan=False).region in ("IV", "V")
    assert region_at(vs, ns, 0.02).region == "boundary"


def test_tc_line_is_boundary():
    for v0 in (-1.5, -0.3, 0.1):
        assert region_at(v0, n0_star(v0), 0.02).region == "boundary"


def test_coherence_evidence():
    ev = coherence_evidence(region_at(*REGION_I, 0.02), *REGION_I, 0.02)
    assert ev["snic"] is True
    ev = coherence_evidence(region_at(*REGION_IV, 0.02), *REGION_IV, 0.02)
    assert I_STAR < ev["homoclinic_current"]
    ev = coherence_evidence(region_at(*REGION_V, 0.02), *REGION_V, 0.02)
    assert ev["i_sn_up"] < I_STAR < ev["i_sn_down"]


@pytest.fixture(scope="module")
def small_chart():
    return chart(grid=24, epsilon=0.02)


def test_chart_flips_across_tc_line(small_chart):
    ch = small_chart
    vs = v0_star()
    for j, v0 in enumerate(ch.v0):
        line = n0_star(v0)
        i_above = int(np.searchsorted(ch.n0, line))
        if i_above == 0 or i_above >= len(ch.n0):
            continue
        below, above = ch.labels[i_above - 1, j], ch.labels[i_above, j]
        if below == above == "unclassified":
            # five-equilibrium censuses on both sides; outside the region rules
            continue
        assert below != above
        # saddle-node wedges leaving the pitchfork make the exact pair V0-dependent
        if v0 > vs + 0.3:
            assert (below, above) == ("IV", "I")


def test_chart_row_count_and_pitchfork(small_chart):
    assert len(list(small_chart.rows())) == 24 * 24
    assert small_chart.pitchfork == pytest.approx((v0_star(), n0_star(v0_star())))


def test_chart_epsilon_stability(small_chart):
    other = chart(grid=24, epsilon=0.01)
    diff = small_chart.labels != other.labels
    pairs = {frozenset((a, b)) for a, b in zip(small_chart.labels[diff], other.labels[diff])}
    assert pairs <= {frozenset(("II", "III"))}


def test_latency_decreasing_region_iv():
    p = at_istar(REGION_IV)
    fold = [f for f in branch_folds(p) if f.i_crit > I_STAR][0]
    curve = latency_curve(p, fold.i_crit, np.logspace(-4, -1, 7))
    lat = [t for _, t in curve]
    assert all(np.isfinite(lat)) and all(b < a for a, b in zip(lat, lat[1:]))


def test_latency_below_fold_is_infinite():
    p = at_istar(REGION_IV)
    fold = [f for f in branch_folds(p) if f.i_crit > I_STAR][0]
    assert measure_latency(p, fold.i_crit - 1e-3).infinite


def test_loglog_slope_exact():
    x = np.logspace(-4, -1, 7)
    slope, rms = loglog_slope(x, 3.0 * x**-0.5)
    assert slope == pytest.approx(-0.5) and rms < 1e-12


def test_adp_dichotomy():
    sh = find_homoclinic(at_istar(REGION_IV)).i_crit
    rec = detect_adp(at_istar(REGION_IV, i_app=sh - 0.01))
    assert rec.present and rec.robust and rec.bump_height > 1e-3
    assert not detect_adp(at_istar(REGION_I)).present


def test_bistable_ranges():
    p = at_istar(REGION_IV)
    sh = find_homoclinic(p).i_crit
    sn = [f for f in branch_folds(p) if f.i_crit > I_STAR][0].i_crit
    grid = np.concatenate([np.linspace(0.6, 0.75, 16), [sh + 1e-3, sn - 1e-3]])
    lo, hi = bistable_range(p, grid)
    assert lo == pytest.approx(sh, abs=1e-4) and hi == pytest.approx(sn, abs=1e-4)
    assert bistable_range(at_istar(REGION_I), np.linspace(I_STAR - 0.1, I_STAR + 0.1, 21)) is None


def test_fi_curves():
    p1 = at_istar(REGION_I)
    fold = [f for f in branch_folds(p1) if abs(f.location.v + 1) < 0.05][0].i_crit
    fi = fi_curve(p1, [fold + d for d in (1e-3, 1e-4, 1e-5)], slow_budget=2000)
    f = [x for _, x in fi]
    assert f[0] > f[1] > f[2] > 0
    p2 = at_istar(TYPE_II)
    h = min(branch_hopfs(p2), key=lambda b: b.i_crit).i_crit
    fi2 = fi_curve(p2, np.linspace(h, h + 0.1, 11))
    onset = next((i, x) for i, x in fi2 if x > 0)
    assert onset[1] >= 0.5 * fi_curve(p2, [onset[0] + 0.1])[0][1]
    grid3 = np.linspace(I_STAR, I_STAR + 2, 17)[1:]
    assert all(x == 0.0 for _, x in fi_curve(at_istar(TYPE_III), grid3))


def test_subthreshold_ringing():
    p2 = at_istar(TYPE_II)
    h = min(branch_hopfs(p2), key=lambda b: b.i_crit).i_crit
    recs = [subthreshold_response(p2.with_current(h - d)) for d in (0.3, 0.1, 0.03)]
    for r in recs:
        assert r.damped_oscillation
        assert r.fitted_frequency == pytest.approx(r.natural_frequency, rel=0.2)
    fitted = [r.fitted_frequency for r in recs]
    assert fitted[0] < fitted[1] < fitted[2]
    assert subthreshold_response(at_istar(REGION_IV)).reason == "node"


def test_resting_state_is_lowest_stable():
    rest = resting_state(at_istar(REGION_V))
    assert rest.stable and rest.state.v < -1
