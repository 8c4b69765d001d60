import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorfhn.classify import resting_state, slope_detection
from mirrorfhn.continuation import find_limit_cycle
from mirrorfhn.dynamics import (
    IntegrationError,
    IntegratorOptions,
    Section,
    StimulusProtocol,
    detect_spikes,
    integrate,
    integrate_layer,
    integrate_protocol,
)
from mirrorfhn.equilibria import find_equilibria
from mirrorfhn.model import I_STAR, ModelParams, PhaseState

from conftest import REGION_IV, TYPE_II, TYPE_III, at_istar


def below_sh():
    return at_istar(REGION_IV, i_app=0.66)


def test_equilibrium_start_converges_immediately():
    p = below_sh()
    node = find_equilibria(p)[0]
    tr = integrate(p, node.state)
    assert tr.status == "converged"
    # convergence is confirmed after one slow time unit
    assert p.epsilon * tr.events_of("converged")[0].t <= 1.0 + p.epsilon * IntegratorOptions().max_step
    assert np.allclose(tr.y, node.state.as_array(), atol=1e-10)


def test_region_iv_single_spike_then_rest():
    p = below_sh()
    node = find_equilibria(p)[0]
    tr = integrate(p, PhaseState(-0.5, -0.05), IntegratorOptions(t_end=5000))
    assert len(tr.spike_times) == 1
    assert detect_spikes(tr) == pytest.approx(tr.spike_times)
    assert tr.status == "converged"
    assert np.allclose(tr.final_state.as_array(), node.state.as_array(), atol=1e-6)


def test_self_convergence_in_tolerance():
    p = at_istar(REGION_IV, eps=0.05)
    s0 = PhaseState(0.5, 0.3)
    a = integrate(p, s0, IntegratorOptions(t_end=100, rel_tol=1e-6, abs_tol=1e-8, stop_on_convergence=False))
    b = integrate(p, s0, IntegratorOptions(t_end=100, rel_tol=1e-9, abs_tol=1e-11, stop_on_convergence=False))
    assert np.linalg.norm(a.y[-1] - b.y[-1]) < 1e-4


def test_dense_output_hits_samples():
    p = below_sh()
    tr = integrate(p, PhaseState(-0.5, -0.05), IntegratorOptions(t_end=50, stop_on_convergence=False))
    assert np.allclose(tr.at(tr.t), tr.y, atol=1e-12)
    assert tr.at(3.0).shape == (2,)


def test_single_segment_protocol_matches_integrate():
    p = below_sh()
    s0 = PhaseState(-0.5, -0.05)
    opts = IntegratorOptions(t_end=300.0, stop_on_convergence=False)
    a = integrate(p, s0, opts)
    b = integrate_protocol(p, s0, StimulusProtocol(((300.0, p.i_app),)), opts)
    assert np.array_equal(a.t, b.t) and np.array_equal(a.y, b.y)


def test_type_iii_slope_detection():
    rec = slope_detection(at_istar(TYPE_III), 2.0)
    assert rec.staircase_spikes == 0
    assert rec.step_spikes >= 1
    assert rec.protocol["n_steps"] == 20 and rec.protocol["step_duration"] == pytest.approx(50 / 0.02)


def test_type_ii_post_inhibitory_spike():
    p = at_istar(TYPE_II, i_app=0.9)
    rest = resting_state(p).state
    control = integrate_protocol(p, rest, StimulusProtocol(((10.0, 0.9), (3000.0, 0.9))))
    assert control.spike_times == []
    tr = integrate_protocol(p, rest, StimulusProtocol.pulse(0.9, 0.6, 10.0, 5.0, 3000.0))
    assert len(tr.spike_times) >= 1 and tr.spike_times[0] > 15.0


def test_no_spikes_below_threshold():
    p = below_sh()
    node = find_equilibria(p)[0].state
    tr = integrate(p, PhaseState(node.v + 0.01, node.n), IntegratorOptions(t_end=500))
    assert detect_spikes(tr) == []


def test_spike_train_matches_cycle_period():
    p = at_istar(REGION_IV, i_app=0.8)
    cyc = find_limit_cycle(p)
    tr = integrate(p, PhaseState(-2.5, 1.0), IntegratorOptions(t_end=8 * cyc.period + 500, stop_on_convergence=False))
    dt = np.diff(tr.spike_times)[2:]
    assert dt.size >= 3
    assert np.all(np.abs(dt - cyc.period) < 1e-3 * cyc.period)


def test_section_events_and_limits():
    p = below_sh()
    opts = IntegratorOptions(t_end=5000, section=Section(rho=-0.03, direction=-1), max_section_crossings=1)
    tr = integrate(p, PhaseState(-0.5, 0.5), opts)
    ev = tr.events_of("section_cross")
    assert len(ev) == 1
    assert tr.at(ev[0].t)[1] == pytest.approx(-0.03, abs=1e-9)


def test_large_max_step_on_stiff_branch_still_converges():
    # fast eigenvalue near -6.7: an uncapped h = 0.5 sits on the stability edge and stalls
    p = ModelParams(0.02, -0.84, -1.5, -1.8682)
    rest = find_equilibria(p)[0]
    tr = integrate(p, PhaseState(rest.state.v + 1e-3, rest.state.n), IntegratorOptions(t_end=20000, max_step=0.5))
    assert tr.status == "converged"
    assert np.hypot(*(tr.final_state.as_array() - rest.state.as_array())) < 1e-6


def test_layer_flow_freezes_n():
    tr = integrate_layer(I_STAR, PhaseState(-2.5, 0.5), IntegratorOptions(t_end=100))
    assert np.all(tr.n == 0.5)
    with pytest.raises(ValueError):
        tr.tau


def test_protocol_validation():
    with pytest.raises(ValueError):
        StimulusProtocol(())
    with pytest.raises(ValueError):
        StimulusProtocol(((0.0, 1.0),))
    with pytest.raises(ValueError):
        IntegratorOptions(rel_tol=0.0)


def test_step_budget_raises():
    with pytest.raises(IntegrationError):
        integrate(below_sh(), PhaseState(-0.5, 0.5), IntegratorOptions(t_end=1e6, max_steps=10, stop_on_convergence=False))


def test_determinism():
    p = below_sh()
    a = integrate(p, PhaseState(-0.5, -0.05), IntegratorOptions(t_end=400))
    b = integrate(p, PhaseState(-0.5, -0.05), IntegratorOptions(t_end=400))
    assert a.to_csv() == b.to_csv()


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.005, 0.2),
    st.floats(-1.0, 2.0),
    st.floats(-2.0, 0.5),
    st.floats(-2.0, 1.0),
    st.floats(-3.0, 2.0),
    st.floats(0.01, 0.99),
)
def test_invariant_strip(eps, i_app, v0, n0, v_start, frac):
    p = ModelParams(eps, i_app, v0, n0)
    opts = IntegratorOptions(t_end=min(20.0 / eps, 2000.0), stop_on_convergence=False)
    tr = integrate(p, PhaseState(v_start, n0 + 2.0 * frac), opts)
    slack = 10 * (opts.abs_tol + opts.rel_tol * 2.0)
    if tr.status == "window_exit":
        pytest.skip("trajectory left the voltage window")
    assert tr.n.min() > n0 - slack and tr.n.max() < n0 + 2.0 + slack
