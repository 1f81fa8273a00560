import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvlif.neurons import (
    NEURON_KINDS,
    LayerState,
    NeuronParams,
    StepError,
    kvlif_step,
    lif_hard_step,
    lif_soft_step,
    paper_params,
    run_sequence,
)


def state(u=0.0, k=0.0) -> LayerState:
    return LayerState(np.array([u], dtype=np.float64), np.array([k], dtype=np.float64))


def sig(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


# --- LIF soft reset -------------------------------------------------------


def test_soft_single_spike(p):
    out = lif_soft_step(np.array([1.5]), state(), p)
    assert out.spike[0] == 1.0
    assert out.state.u[0] == pytest.approx(0.5)


def test_soft_zero_case(p):
    out = lif_soft_step(np.array([0.0]), state(), p)
    assert out.spike[0] == 0.0 and out.state.u[0] == 0.0


def test_soft_three_steps(p):
    tr = run_sequence("lif-s", np.full((3, 1), 0.8), p)
    np.testing.assert_allclose(tr.u_pre[:, 0], [0.8, 1.2, 0.9])
    np.testing.assert_array_equal(tr.spike[:, 0], [0, 1, 0])
    assert tr.u_post[1, 0] == pytest.approx(0.2)


def test_threshold_is_inclusive(p):
    assert lif_soft_step(np.array([1.0]), state(), p).spike[0] == 1.0
    assert lif_soft_step(np.array([np.nextafter(1.0, 0.0)]), state(), p).spike[0] == 0.0


def test_soft_constant_overload_fires_after_first(p):
    # 1.2 per step: the residual keeps the neuron above threshold every step
    tr = run_sequence("lif-s", np.full((20, 1), 1.2), p)
    assert tr.spike.all()


# --- LIF hard reset -------------------------------------------------------


@pytest.mark.parametrize(
    "i, u0, spike, u_pre, u_next",
    [
        (1.5, 0.0, 1, 1.5, 0.0),
        (0.4, 0.4, 0, 0.6, 0.6),
        (2.7, 0.9, 1, 3.15, 0.0),
    ],
)
def test_hard_examples(p, i, u0, spike, u_pre, u_next):
    out = lif_hard_step(np.array([i]), state(u0), p)
    assert out.spike[0] == spike
    assert out.u_pre_reset[0] == pytest.approx(u_pre)
    assert out.state.u[0] == pytest.approx(u_next)


# --- KvLIF ----------------------------------------------------------------


def test_kvlif_worked_example(p):
    out = kvlif_step(np.array([2.0]), state(), p)
    assert out.shunt[0] == pytest.approx(0.975)
    assert out.u_pre_reset[0] == pytest.approx(1.95)
    assert out.spike[0] == 1.0
    assert out.state.k[0] == pytest.approx(1.585)
    assert sig(1.585) == pytest.approx(0.830, abs=5e-4)
    assert out.state.u[0] == pytest.approx(0.120, abs=5e-4)
    assert out.state.u[0] == pytest.approx(1.95 - 1.0 - sig(1.585), abs=1e-15)


def test_kvlif_zero_fixed_point(p):
    out = kvlif_step(np.array([0.0]), state(), p)
    assert (out.spike[0], out.state.u[0], out.state.k[0]) == (0.0, 0.0, 0.0)


def test_kvlif_subthreshold(p):
    out = kvlif_step(np.array([0.5]), state(), p)
    assert out.u_pre_reset[0] == pytest.approx(0.4875)
    assert out.spike[0] == 0.0
    assert out.state.k[0] == pytest.approx(0.14625)
    assert out.state.u[0] == pytest.approx(0.4875)


def test_kvlif_zero_drive_trace(p):
    tr = run_sequence("kvlif", np.zeros((40, 1)), p)
    for arr in (tr.u_pre, tr.u_post, tr.k, tr.spike):
        assert not arr.any()


def test_trace_rate_is_count_over_steps(p):
    rng = np.random.default_rng(3)
    drive = (rng.random((40, 1)) < 0.5) * 1.2
    tr = run_sequence("kvlif", drive, p)
    assert tr.firing_rate == tr.spike.sum() / 40
    assert len(tr) == 40


# --- properties -----------------------------------------------------------

finite_k = st.floats(-50, 50, allow_nan=False)
currents = st.floats(0, 10, allow_nan=False)


@given(i=st.floats(1.0, 10.0), u=st.floats(-2, 2), k=st.floats(0, 20))
def test_kvlif_post_spike_below_soft_residual(i, u, k):
    p = paper_params()
    out = kvlif_step(np.array([i]), state(u, k), p)
    if out.spike[0]:
        residual = out.u_pre_reset[0] - p.v_th
        assert out.state.u[0] < residual
        if out.state.k[0] > 0:
            assert out.state.u[0] < out.u_pre_reset[0] - p.v_th - 0.5


@given(k=finite_k, gamma=st.floats(0.0, 1.0))
def test_shunt_gate_range(k, gamma):
    p = paper_params().with_(gamma=gamma)
    out = kvlif_step(np.array([1.0]), state(0.0, k), p)
    g = out.shunt[0]
    assert 1.0 - gamma - 1e-12 <= g <= 1.0
    if gamma > 1e-6 and -30 < k < 30:
        assert 1.0 - gamma < g < 1.0


@given(i=currents, k=finite_k)
def test_gamma_zero_shunt_is_identity(i, k):
    p = paper_params().with_(gamma=0.0)
    out = kvlif_step(np.array([i]), state(0.0, k), p)
    assert out.u_pre_reset[0] == i


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 0.45), min_size=1, max_size=30))
def test_subthreshold_equivalence_with_soft_lif(xs):
    # with inputs below 0.5 and lambda=0.5 the potential never reaches 1
    p = paper_params().with_(gamma=0.0)
    drive = np.array(xs)[:, None]
    kv = run_sequence("kvlif", drive, p)
    ls = run_sequence("lif-s", drive, p)
    assert not kv.spike.any()
    np.testing.assert_array_equal(kv.u_post, ls.u_post)
    np.testing.assert_array_equal(kv.u_pre, ls.u_pre)


@pytest.mark.parametrize("kind", NEURON_KINDS)
def test_run_sequence_deterministic(kind, p):
    drive = np.random.default_rng(0).random((25, 4)) * 2
    a, b = run_sequence(kind, drive, p), run_sequence(kind, drive, p)
    for x, y in zip((a.u_pre, a.u_post, a.k, a.spike), (b.u_pre, b.u_post, b.k, b.spike)):
        np.testing.assert_array_equal(x, y)


def test_kvlif_nonnegative_k_before_hyperpolarization(p):
    # before the first spike u stays >= 0 under nonnegative drive, so k does too
    tr = run_sequence("kvlif", np.full((10, 1), 0.3), p)
    assert not tr.spike.any()
    assert (tr.k >= 0).all()


@pytest.mark.parametrize("drive", [1.0, 1.05, 1.1, 1.15, 1.2])
def test_kvlif_spike_frequency_adaptation(p, drive):
    tr = run_sequence("kvlif", np.full((60, 1), drive), p)
    times = np.flatnonzero(tr.spike[:, 0])
    assert len(times) >= 3
    isi = np.diff(times)
    assert (np.diff(isi) >= 0).all()
    # potassium at spike times never decreases
    assert (np.diff(tr.k[times, 0]) >= 0).all()


def test_kvlif_phase_locking_at_stronger_drive(p):
    # integer spike times lock into a 1-2 pattern: the interval is not monotone
    # here, although the neuron still fires less than every step
    tr = run_sequence("kvlif", np.full((60, 1), 1.4), p)
    isi = np.diff(np.flatnonzero(tr.spike[:, 0]))
    np.testing.assert_array_equal(isi[:6], [1, 2, 1, 2, 1, 2])
    assert tr.firing_rate < run_sequence("lif-s", np.full((60, 1), 1.4), p).firing_rate


@pytest.mark.parametrize("drive", np.linspace(1.0, 1.55, 12))
def test_kvlif_fires_below_saturated_lif(p, drive):
    lif = run_sequence("lif-s", np.full((40, 1), drive), p)
    kv = run_sequence("kvlif", np.full((40, 1), drive), p)
    assert lif.firing_rate == 1.0
    assert kv.firing_rate < 1.0


@pytest.mark.parametrize("step", [lif_soft_step, lif_hard_step, kvlif_step])
def test_non_finite_input_reports_index(p, step):
    i = np.array([0.1, 0.2, np.nan, 0.3])
    with pytest.raises(StepError) as exc:
        step(i, LayerState.zeros(4), p)
    assert exc.value.index == (2,)


def test_non_finite_state_rejected(p):
    bad = LayerState(np.array([0.0, np.inf]), np.zeros(2))
    with pytest.raises(StepError):
        kvlif_step(np.zeros(2), bad, p)


def test_run_sequence_rejects_empty(p):
    with pytest.raises(ValueError):
        run_sequence("lif-s", np.zeros((0, 1)), p)


def test_run_sequence_unknown_kind(p):
    with pytest.raises(ValueError, match="unknown neuron kind"):
        run_sequence("izhikevich", np.zeros((3, 1)), p)


# --- parameters -----------------------------------------------------------


def test_paper_defaults():
    p = paper_params()
    assert (p.lam, p.v_th, p.sg_width, p.alpha, p.gamma, p.beta) == (0.5, 1.0, 1.0, 0.8, 0.05, 0.3)
    assert paper_params(0.1).beta == 0.1


@pytest.mark.parametrize(
    "bad",
    [
        {"lam": 0.0},
        {"lam": 1.0},
        {"lam": -0.2},
        {"v_th": 0.0},
        {"alpha": 1.0},
        {"beta": -0.1},
        {"gamma": 1.5},
        {"gamma": -0.01},
        {"sg_width": 0.0},
        {"lam": float("nan")},
    ],
)
def test_invalid_params_rejected(bad):
    with pytest.raises(ValueError):
        NeuronParams(**bad)


def test_params_dict_round_trip():
    p = paper_params(0.1).with_(lam=0.25)
    assert NeuronParams.from_dict(p.to_dict()) == p
    assert p.to_dict()["lambda"] == 0.25
