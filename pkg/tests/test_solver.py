import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ohbk.linalg import DimensionError
from ohbk.solver import SolverState, init, run, run_paired, step
from ohbk.sources import Measurement, MeasurementSource, SourceSpec

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def vec(n):
    return st.lists(finite, min_size=n, max_size=n).map(np.array)


def state_and_measurement(n=5):
    return st.tuples(vec(n), vec(n), vec(n).filter(lambda v: v @ v > 1e-6), finite,
                     st.floats(0, 0.99))


def test_init():
    s = init(np.zeros(3), 0.5)
    assert np.array_equal(s.x_curr, np.zeros(3)) and np.array_equal(s.x_prev, np.zeros(3))
    assert s.t == 0
    with pytest.raises(ValueError):
        init(np.zeros(3), 1.2)
    with pytest.raises(ValueError):
        init(np.zeros(3), -0.1)


def test_first_step_has_no_momentum():
    s = step(init([0.0, 0.0], 0.5), Measurement(np.array([1.0, 0.0]), 2.0))
    np.testing.assert_array_equal(s.x_curr, [2.0, 0.0])


def test_step_hand_example():
    s = SolverState(np.array([1.0, 0.0]), np.array([0.0, 0.0]), 0.5)
    s = step(s, Measurement(np.array([0.0, 1.0]), 3.0))
    np.testing.assert_allclose(s.x_curr, [1.5, 3.0], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(s.x_prev, [1.0, 0.0])
    assert s.t == 1


def test_step_errors():
    s = init(np.zeros(3), 0.1)
    with pytest.raises(DimensionError):
        step(s, Measurement(np.ones(2), 1.0))
    with pytest.raises(ValueError):
        step(s, Measurement(np.array([1.0, np.nan, 0.0]), 1.0))
    with pytest.raises(ValueError):
        step(s, Measurement(np.ones(3), np.inf))


def test_degenerate_measurement_is_skipped():
    s = SolverState(np.array([1.0, 2.0]), np.array([0.0, 0.0]), 0.5, t=4)
    out = step(s, Measurement(np.array([1e-13, 0.0]), 0.0))
    assert out.skipped == 1 and out.t == 4
    assert np.array_equal(out.x_curr, s.x_curr) and np.array_equal(out.x_prev, s.x_prev)


@settings(max_examples=200, deadline=None)
@given(state_and_measurement())
def test_projection_exact_without_momentum(data):
    x, xp, phi, y, _ = data
    out = step(SolverState(x, xp, 0.0), Measurement(phi, y))
    # relative to the larger iterate: an exact projection onto a plane through
    # (nearly) the origin legitimately lands on x_{t+1} ~ 0
    scale = np.linalg.norm(phi) * max(np.linalg.norm(out.x_curr), np.linalg.norm(x))
    assert abs(phi @ out.x_curr - y) <= 1e-10 * scale


@settings(max_examples=200, deadline=None)
@given(state_and_measurement())
def test_momentum_decomposition(data):
    x, xp, phi, y, beta = data
    m = Measurement(phi, y)
    with_mom = step(SolverState(x, xp, beta), m).x_curr
    without = step(SolverState(x, xp, 0.0), m).x_curr
    np.testing.assert_allclose(with_mom, without + beta * (x - xp), rtol=0,
                               atol=1e-14 * (1 + np.linalg.norm(x)) * (1 + np.linalg.norm(with_mom)))


@settings(max_examples=200, deadline=None)
@given(state_and_measurement(), st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3))
def test_measurement_scale_invariance(data, c):
    x, xp, phi, y, beta = data
    a = step(SolverState(x, xp, beta), Measurement(phi, y)).x_curr
    b = step(SolverState(x, xp, beta), Measurement(c * phi, c * y)).x_curr
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-12 * (1 + np.abs(a).max()))


@settings(max_examples=200, deadline=None)
@given(state_and_measurement())
def test_projection_idempotent(data):
    x, xp, phi, y, _ = data
    m = Measurement(phi, y)
    once = step(SolverState(x, xp, 0.0), m)
    twice = step(SolverState(once.x_curr, once.x_curr, 0.0), m)
    np.testing.assert_allclose(twice.x_curr, once.x_curr, rtol=1e-12, atol=1e-12 * (1 + np.abs(once.x_curr).max()))


@settings(max_examples=50, deadline=None)
@given(vec(6), vec(6).filter(lambda v: v @ v > 1e-6), st.floats(0, 0.99))
def test_consistency_fixed_point(x_star, phi, beta):
    s = SolverState(x_star.copy(), x_star.copy(), beta)
    # y formed with the solver's own reduction, as the sources do
    out = step(s, Measurement(phi, float((phi * x_star).sum())))
    np.testing.assert_array_equal(out.x_curr, x_star)


def test_run_from_truth_stays_at_zero_error():
    spec = SourceSpec("gaussian", 8, seed=1)
    x_star = MeasurementSource(spec).x_star
    traj = run(spec, x0=x_star, beta=0.3, T=50)
    assert np.all(traj.errors == 0.0)


def test_one_dimensional_recovery_is_immediate():
    traj = run(SourceSpec("gaussian", 1, seed=4), beta=0.0, T=3)
    assert traj.errors[0] > 0
    # exact up to the rounding of y = phi * x_star and of the division
    assert traj.errors[1] <= 4 * np.finfo(float).eps * traj.errors[0]


def test_trajectory_shape_and_start():
    spec = SourceSpec("uniform", 10, seed=2)
    traj = run(spec, beta=0.2, T=40)
    assert len(traj.errors) == 41
    assert traj.errors[0] == pytest.approx(np.linalg.norm(MeasurementSource(spec).x_star), rel=1e-15)
    assert np.all(np.isfinite(traj.errors)) and np.all(traj.errors >= 0)
    assert traj.error_at(40) == traj.final_error


def test_run_matches_repeated_step():
    spec = SourceSpec("uniform", 12, seed=6)
    src = MeasurementSource(spec)
    s = init(np.zeros(12), 0.35)
    def err(x):
        return np.sqrt(((x - src.x_star) ** 2).sum())

    errs = [err(s.x_curr)]
    for _ in range(300):
        s = step(s, src.next_measurement())
        errs.append(err(s.x_curr))
    traj = run(spec, beta=0.35, T=300)
    np.testing.assert_array_equal(traj.errors, errs)


def test_gaussian_baseline_reduces_error():
    finals, starts = [], []
    for seed in range(10):
        traj = run(SourceSpec("gaussian", 50, seed=seed), beta=0.0, T=2000)
        finals.append(traj.final_error)
        starts.append(traj.errors[0])
    assert np.median(finals) < np.median(starts)


def test_run_is_deterministic():
    spec = SourceSpec("sphere", 9, seed=77)
    a = run(spec, beta=0.1, T=500)
    b = run(spec, beta=0.1, T=500)
    assert np.array_equal(a.errors, b.errors)


def test_paired_run_is_independent_of_companions():
    spec = SourceSpec("uniform", 20, seed=3)
    alone = run_paired(MeasurementSource(spec), [0.0], 200)[0]
    grouped = run_paired(MeasurementSource(spec), [0.4, 0.0, 0.2], 200)[1]
    assert np.array_equal(alone.errors, grouped.errors)


def test_record_stride_keeps_final_point():
    traj = run(SourceSpec("uniform", 5, seed=1), beta=0.1, T=10, record_every=4)
    assert list(traj.steps) == [0, 4, 8, 10]
    full = run(SourceSpec("uniform", 5, seed=1), beta=0.1, T=10)
    np.testing.assert_array_equal(traj.errors, full.errors[[0, 4, 8, 10]])


def test_stream_once_stops_at_end():
    rows = np.random.default_rng(0).uniform(1, 2, (30, 4))
    spec = SourceSpec("dataset", 4, rows=rows, row_mode="once")
    traj = run(spec, beta=0.2, T=100)
    assert traj.steps[-1] == 30
    assert len(traj.errors) == 31


def test_run_rejects_bad_arguments():
    spec = SourceSpec("uniform", 3)
    with pytest.raises(ValueError):
        run(spec, T=0)
    with pytest.raises(DimensionError):
        run(spec, x0=np.zeros(4), T=3)
