import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netsync import dynamics as dy
from netsync import graph as gr
from netsync import simulator as sim


def zero_model(d=1):
    return dy.custom_model(d, lambda X, t, p: np.zeros(np.shape(X)), name="zero")


def consensus(eps=1.0):
    return sim.assemble(gr.path(2), zero_model(), dy.linear_coupling(1), [1.0], eps)


class Scalar:
    """Single ODE x' = f(t, x), for integrator checks with n = 1."""

    def __init__(self, f):
        self.rhs = f
        self.weights = np.ones(1)


# ---------------------------------------------------------------- assembly


def test_consensus_rhs():
    s = consensus()
    np.testing.assert_array_equal(s.rhs(0.0, np.array([[3.0], [1.0]])), [[-2.0], [2.0]])


def test_decoupled_rhs_equals_field():
    model = dy.fhn_field(0.3, 0.1, 0.05, 0, overrides={2: {"a": 0.7}})
    s = sim.assemble(gr.complete(3), model, dy.fhn_coupling(), dy.fhn_weights(0.1), 0.0)
    X = np.random.default_rng(0).normal(size=(3, 2))
    for i in range(3):
        np.testing.assert_array_equal(s.rhs(0.0, X)[i], model.field(i + 1, X[i]))


def test_synchronized_state_rhs_is_field():
    model = dy.chua_field(9, 14, 0.01, 1, 3)
    s = sim.assemble(gr.star(4), model, dy.chua_coupling(9, 1), dy.chua_weights(9, 14), 2.0)
    X = np.tile([0.3, -0.2, 0.9], (4, 1))
    np.testing.assert_array_equal(s.rhs(0.0, X), np.tile(model.field(1, X[0]), (4, 1)))


def test_rhs_sums_over_neighbors_with_minus_sign():
    g = gr.build_graph("custom", 4, [(1, 2), (2, 3), (2, 4)])
    s = sim.assemble(g, zero_model(), dy.linear_coupling(1), [1.0], 0.5)
    X = np.array([[1.0], [2.0], [4.0], [8.0]])
    expected = -0.5 * np.array([[1 - 2], [(2 - 1) + (2 - 4) + (2 - 8)], [4 - 2], [8 - 2]], dtype=float)
    np.testing.assert_array_equal(s.rhs(0.0, X), expected)


def test_assemble_rejects_mismatch():
    with pytest.raises(dy.ModelError):
        sim.assemble(gr.star(3), dy.chua_field(9, 14, 0.01, 1, 3), dy.fhn_coupling(), [1, 1, 1], 1)
    with pytest.raises(dy.ModelError):
        sim.assemble(gr.star(3), dy.fhn_field(), dy.fhn_coupling(), [1, 1, 1], 1)
    with pytest.raises(dy.ModelError):
        sim.assemble(gr.star(3), dy.fhn_field(), dy.fhn_coupling(), [1, 1], -1)
    with pytest.raises(dy.ModelError):
        sim.assemble(gr.star(3), dy.fhn_field(overrides={5: {"a": 1}}), dy.fhn_coupling(), [1, 1], 1)


# ---------------------------------------------------------------- integration


def test_exponential_decay():
    traj = sim.integrate(Scalar(lambda t, x: -x), [1.0], 0, 1, 1e-3, 1)
    assert abs(traj.final[0, 0] - math.exp(-1)) < 1e-9
    assert traj.times[-1] == 1.0


def test_zero_field_constant():
    x0 = np.array([[1.5, -2.0], [0.25, 3.0]])
    s = sim.assemble(gr.path(2), zero_model(2), dy.linear_coupling(2), [1, 1], 0.0)
    traj = sim.integrate(s, x0, 0, 3, 0.01, 7)
    assert np.all(traj.states == x0)


def test_constant_field_exact():
    traj = sim.integrate(Scalar(lambda t, x: np.ones_like(x)), [0.0], 0, 2, 1e-3, 10)
    assert traj.final[0, 0] == pytest.approx(2.0, abs=1e-12)


def test_shortened_last_step():
    traj = sim.integrate(Scalar(lambda t, x: np.full_like(x, 2 * t)), [0.0], 0, 1.0, 0.3, 1)
    np.testing.assert_allclose(traj.times, [0, 0.3, 0.6, 0.9, 1.0], rtol=0, atol=1e-15)
    assert traj.final[0, 0] == pytest.approx(1.0, abs=1e-14)


def test_record_every_includes_endpoint():
    traj = sim.integrate(Scalar(lambda t, x: -x), [1.0], 0, 1, 0.01, 30)
    assert len(traj.times) == 1 + 3 + 1
    assert traj.times[-1] == 1.0


def test_rk4_fourth_order():
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        traj = sim.integrate(Scalar(lambda t, x: -x), [1.0], 0, 1, dt, 1000)
        errs.append(abs(traj.final[0, 0] - math.exp(-1)))
    for a, b in zip(errs, errs[1:]):
        assert 16 / 2 <= a / b <= 16 * 2


def test_blowup_reports_time():
    with pytest.raises(sim.IntegrationBlowUp) as exc:
        sim.integrate(Scalar(lambda t, x: x * x), [1.0], 0, 5, 1e-2, 1)
    assert 0.9 < exc.value.time < 1.2


def test_bad_arguments():
    f = Scalar(lambda t, x: x)
    for kwargs in [dict(dt=0), dict(t_end=0), dict(record_every=0)]:
        args = dict(t0=0, t_end=1, dt=0.1, record_every=1) | kwargs
        with pytest.raises(ValueError):
            sim.integrate(f, [1.0], **args)


def test_manifold_invariance():
    model = dy.chua_field(9, 14, 0.01, 1, 3)
    s = sim.assemble(gr.cycle(4), model, dy.chua_coupling(9, 1), dy.chua_weights(9, 14), 0.3)
    x0 = np.tile([0.1, 0.2, -0.3], (4, 1))
    traj = sim.integrate(s, x0, 0, 100, 1e-2, 50)
    spread = np.max(np.ptp(traj.states, axis=1))
    assert spread < 1e-12


# ---------------------------------------------------------------- delta and V


def test_delta_examples():
    np.testing.assert_array_equal(sim.delta_vector([1, 2, 3]), [-1, -2, -1])
    np.testing.assert_array_equal(sim.delta_vector(np.ones((4, 2))), np.zeros(12))
    np.testing.assert_array_equal(sim.delta_vector([[1, 0], [0, 1]]), [1, -1])


@pytest.mark.parametrize("n", range(2, 7))
def test_delta_lexicographic_order(n):
    X = np.random.default_rng(n).normal(size=(n, 2))
    ref = np.concatenate([X[i] - X[j] for i, j in itertools.combinations(range(n), 2)])
    np.testing.assert_array_equal(sim.delta_vector(X), ref)


def test_lyapunov_examples():
    assert sim.lyapunov_v(np.ones((3, 2)), [1, 2]) == 0
    assert sim.lyapunov_v([[1], [0]], [1]) == 0.5
    assert sim.lyapunov_v([[1], [0], [0]], [2]) == 2.0


@settings(max_examples=50)
@given(n=st.integers(2, 6), d=st.integers(1, 3), seed=st.integers(0, 10**6))
def test_v_equals_squared_delta_norm(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = rng.uniform(0.1, 3, d)
    v = sim.lyapunov_v(X, w)
    assert v == pytest.approx(sim.v_norm(sim.delta_vector(X), w) ** 2, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------- reports


def test_consensus_sync_report():
    traj = sim.integrate(consensus(), [[1.0], [-1.0]], 0, 20, 1e-3, 10)
    rep = sim.sync_report(traj)
    assert rep.synced and rep.final_residual < 1e-8
    assert rep.v_violations == 0
    k = np.searchsorted(traj.times, 5.0)
    assert traj.times[k] == pytest.approx(5.0)
    assert abs(traj.states[k, 0, 0] - traj.states[k, 1, 0] - 2 * math.exp(-10)) < 1e-8
    # t_sync: first sample after which the residual stays below 1e-6, 2 e^{-2t} = 1e-6
    assert rep.t_sync == pytest.approx(math.log(2e6) / 2, abs=0.02)


def test_decoupled_heterogeneous_fhn_not_synced():
    model = dy.fhn_field(0.3, 0.1, 0.05, 0, overrides={2: {"a": 0.6}})
    s = sim.assemble(gr.path(2), model, dy.fhn_coupling(), dy.fhn_weights(0.1), 0.0)
    traj = sim.integrate(s, [[0.5, 0.1], [0.5, 0.1]], 0, 100, 2e-3, 10)
    assert not sim.sync_report(traj).synced


def test_identical_start_synced_at_t0():
    model = dy.fhn_field(0.3, 0.1, 0.05, 0)
    s = sim.assemble(gr.star(3), model, dy.fhn_coupling(), dy.fhn_weights(0.1), 1.0)
    traj = sim.integrate(s, np.tile([0.2, -0.3], (3, 1)), 0, 20, 1e-2, 5)
    rep = sim.sync_report(traj)
    assert rep.synced and rep.t_sync == 0.0
    assert np.all(traj.V == 0)


def test_sync_report_window_checks():
    traj = sim.integrate(consensus(), [[1.0], [-1.0]], 0, 5, 1e-2, 1)
    with pytest.raises(ValueError):
        sim.sync_report(traj, trailing_window=10)
    with pytest.raises(ValueError):
        sim.sync_report(traj, tol=0, trailing_window=1)


def test_transient_crossing_is_not_sync():
    # residual dips below tol then returns: synced needs the whole trailing window
    t = np.linspace(0, 20, 201)
    resid = np.where((t > 5) & (t < 8), 1e-9, 1.0)
    states = np.zeros((201, 2, 1))
    states[:, 0, 0] = resid
    traj = sim.Trajectory(t, states, np.ones(1))
    rep = sim.sync_report(traj)
    assert not rep.synced and rep.t_sync is None


def test_v_slope_violation_detected():
    t = np.linspace(0, 1, 11)
    states = np.zeros((11, 2, 1))
    states[:, 0, 0] = np.where(t < 0.5, 1.0, 1.5)
    traj = sim.Trajectory(t, states, np.ones(1))
    count, worst = sim.v_slope_violations(traj)
    assert count == 1 and worst > 0


def test_ball_containment_examples():
    traj = sim.integrate(consensus(), [[0.0], [0.0]], 0, 1, 0.1, 1)
    c = sim.ball_containment(traj, [1.0], 0.5)
    assert c.contained and c.max_norm == 0 and c.initial_interior
    model = dy.fhn_field(0.3, 0.1, 0.05, 0, overrides={2: {"a": 0.6}})
    s = sim.assemble(gr.path(2), model, dy.fhn_coupling(), dy.fhn_weights(0.1), 0.0)
    traj = sim.integrate(s, [[0.5, 0.1], [0.5, 0.1]], 0, 50, 2e-3, 10)
    c = sim.ball_containment(traj, dy.fhn_weights(0.1), 0.05)
    assert not c.contained and c.first_exit_time > 0
    with pytest.raises(ValueError):
        sim.ball_containment(traj, [1, 1], 0)


def test_initial_on_sphere_exact_radius():
    rng = np.random.default_rng(0)
    w = dy.chua_weights(9, 14)
    X = sim.initial_on_v_sphere([0.5, 0.1, -0.5], 5, w, 0.7, rng)
    np.testing.assert_array_equal(X[0], [0.5, 0.1, -0.5])
    assert math.sqrt(sim.lyapunov_v(X, w)) == pytest.approx(0.7, rel=1e-14)


def test_csv_format():
    traj = sim.integrate(consensus(), [[1.0], [-1.0]], 0, 0.02, 0.01, 1)
    text = traj.to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,x_1_1,x_2_1,V,delta_inf"
    assert len(lines) == 4
    row = [float(v) for v in lines[-1].split(",")]
    assert row[1] == traj.final[0, 0]  # 17 significant digits round-trip
    buf = io.StringIO()
    traj.to_csv(buf)
    assert buf.getvalue() == text
