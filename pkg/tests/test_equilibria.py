import numpy as np
import pytest

from mirrorfhn.continuation import find_homoclinic
from mirrorfhn.dynamics import IntegratorOptions, Section, integrate
from mirrorfhn.equilibria import (
    ManifoldSeed,
    branch_of,
    classify_equilibrium,
    find_equilibria,
    find_saddle,
    manifold_arc,
)
from mirrorfhn.model import I_STAR, ModelParams, PhaseState, jacobian, n0_star, vector_field

from conftest import REGION_IV, REGION_V, TYPE_III, at_istar


def grid_newton_oracle(p, nv=400, nn=40):
    """Independent census: vectorised 2-D Newton from a grid of seeds over the strip."""
    V, N = np.meshgrid(np.linspace(-4, 3, nv), np.linspace(p.n0, p.n0 + 2, nn))
    y = np.stack([V.ravel(), N.ravel()])
    for _ in range(60):
        v, n = y
        f1 = v - v**3 / 3 - n * n + p.i_app
        s = 1 / (1 + np.exp(-5 * (v - p.v0)))
        f2 = p.epsilon * (2 * s + p.n0 - n)
        a, b = 1 - v * v, -2 * n
        c, d = p.epsilon * 10 * s * (1 - s), -p.epsilon * np.ones_like(v)
        det = a * d - b * c
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        dv = (d * f1 - b * f2) / det
        dn = (-c * f1 + a * f2) / det
        step = np.clip(np.hypot(dv, dn), 1.0, None)
        y = y - np.stack([dv, dn]) / step
        y[0] = np.clip(y[0], -6, 5)
    v, n = y
    res = np.hypot(v - v**3 / 3 - n * n + p.i_app, p.epsilon * (2 / (1 + np.exp(-5 * (v - p.v0))) + p.n0 - n))
    keep = (v >= -4) & (v <= 3) & (res < 1e-11)
    roots = []
    for vi, ni in sorted(zip(v[keep], n[keep])):
        if not roots or vi - roots[-1][0] > 1e-6:
            roots.append((vi, ni))
    return roots


def test_oracle_equivalence_random_draws():
    rng = np.random.default_rng(20240611)
    checked = 0
    while checked < 200:
        p = ModelParams(rng.uniform(0.005, 0.1), rng.uniform(-1, 3), rng.uniform(-2, 0.5), rng.uniform(-2.2, 0.8))
        ours = find_equilibria(p)
        # skip near-tangent draws where two roots are closer than the location tolerance
        if any(e.kind == "degenerate" for e in ours):
            continue
        ref = grid_newton_oracle(p)
        assert len(ours) == len(ref), (p, [e.state for e in ours], ref)
        for e, (v, n) in zip(ours, ref):
            assert abs(e.state.v - v) < 1e-6 and abs(e.state.n - n) < 1e-6
        checked += 1


def test_transcritical_census():
    p = ModelParams(0.05, I_STAR, -1.0, -1.0)
    eqs = find_equilibria(p)
    # the pinch is one of four equilibria here (see notes on the example)
    assert [round(e.state.v, 3) for e in eqs] == [-1.858, -1.0, 0.342, 1.532]
    tc = eqs[1]
    assert abs(tc.state.n) < 1e-12 and tc.kind == "degenerate" and tc.branch == "pinch"


def test_region_iv_census():
    eqs = find_equilibria(at_istar(REGION_IV, eps=0.05))
    assert len(eqs) == 3
    node, sad, third = eqs
    assert node.kind == "stable_node" and node.state.v == pytest.approx(-1.14, abs=0.02)
    assert node.state.n == pytest.approx(-0.14, abs=0.02)
    assert sad.kind == "saddle" and sad.state.v == pytest.approx(-0.92, abs=0.02)
    assert sad.state.n == pytest.approx(-0.08, abs=0.02)
    assert third.kind in ("unstable_node", "unstable_focus") and third.state.v == pytest.approx(-0.45, abs=0.02)
    assert node.interaction == sad.interaction == "cooperative"


def test_type_iii_single_equilibrium():
    eqs = find_equilibria(at_istar(TYPE_III, eps=0.05))
    assert len(eqs) == 1 and eqs[0].stable and eqs[0].branch == "upper_left"


def test_region_v_up_state():
    eqs = find_equilibria(at_istar(REGION_V))
    up = eqs[-1]
    assert up.state.v == pytest.approx(1.97, abs=0.03)
    assert up.stable and up.branch == "upper_right"


def test_degenerate_and_saddle_kinds():
    for v0 in (-1.0, -0.3, 0.2):
        p = ModelParams(0.03, I_STAR, v0, n0_star(v0))
        assert classify_equilibrium(p, PhaseState(-1.0, 0.0)).kind == "degenerate"
    sad = find_saddle(at_istar(REGION_IV))
    ev = np.real(sad.eigenvalues)
    assert np.linalg.det(jacobian(at_istar(REGION_IV), sad.state)) < 0
    assert ev[0] < 0 < ev[1] and np.all(np.imag(sad.eigenvalues) == 0)


def test_not_an_equilibrium_raises():
    with pytest.raises(ValueError):
        classify_equilibrium(at_istar(REGION_IV), PhaseState(0.0, 0.0))


def test_branch_labels():
    assert branch_of(PhaseState(-2, -0.1)) == "lower_left"
    assert branch_of(PhaseState(0, -0.1)) == "lower_right"
    assert branch_of(PhaseState(-2, 0.1)) == "upper_left"
    assert branch_of(PhaseState(0.5, 0.1)) == "upper_middle"
    assert branch_of(PhaseState(1.5, 0.1)) == "upper_right"


def test_seed_validation():
    p = at_istar(REGION_IV)
    node = find_equilibria(p)[0]
    with pytest.raises(ValueError):
        ManifoldSeed(node, "unstable_plus")
    with pytest.raises(ValueError):
        ManifoldSeed(find_saddle(p), "unstable_plus", offset=1e-2)


def _first_crossing(p, seed, rho):
    opts = IntegratorOptions(
        t_end=40 / p.epsilon, rel_tol=1e-10, abs_tol=1e-12, stop_on_convergence=False,
        section=Section(rho, (-2.5, 0.5), direction=-1 if seed.direction.startswith("unstable") else 1),
        max_section_crossings=1,
    )
    tr = manifold_arc(p, seed, opts)
    return tr.events_of("section_cross")[0].payload["v"]


def test_offset_insensitivity():
    p = at_istar(REGION_IV)
    sad = find_saddle(p)
    rho = 0.4 * sad.state.n
    a = _first_crossing(p, ManifoldSeed(sad, "stable_minus", 1e-6), rho)
    b = _first_crossing(p, ManifoldSeed(sad, "stable_minus", 5e-7), rho)
    assert abs(a - b) < 1e-4


@pytest.fixture(scope="module")
def i_sh():
    return find_homoclinic(at_istar(REGION_IV)).i_crit


def test_unstable_arc_below_homoclinic_returns(i_sh):
    p = at_istar(REGION_IV, i_app=i_sh - 2e-3)
    node = find_equilibria(p)[0]
    tr = manifold_arc(p, ManifoldSeed(find_saddle(p), "unstable_plus"), IntegratorOptions(t_end=200 / p.epsilon))
    assert tr.status == "converged"
    assert np.allclose(tr.final_state.as_array(), node.state.as_array(), atol=1e-6)
    assert len(tr.spike_times) == 1


def test_unstable_arc_above_homoclinic_escapes(i_sh):
    p = at_istar(REGION_IV, i_app=i_sh + 2e-3)
    tr = manifold_arc(p, ManifoldSeed(find_saddle(p), "unstable_plus"), IntegratorOptions(t_end=200 / p.epsilon))
    assert tr.status != "converged"
    assert len(tr.spike_times) >= 2
