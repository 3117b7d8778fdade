import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qspec import simulate
from qspec.arfit import ar_roots
from qspec.errors import TooShort
from qspec.qperiodogram import QuantileGrid, quantile_periodogram
from qspec.simulate import ModelSpec, generate, ground_truth, pairwise_sum, w1, w2

GRID3 = QuantileGrid([0.1, 0.5, 0.9])


@pytest.mark.parametrize("kind", simulate.MODEL_KINDS)
def test_same_seed_same_series(kind):
    a = generate(ModelSpec(kind, 300, 7))
    b = generate(ModelSpec(kind, 300, 7))
    assert a.tobytes() == b.tobytes()
    assert a.shape == (300,) and np.all(np.isfinite(a))
    assert generate(ModelSpec(kind, 300, 8)).tobytes() != a.tobytes()


def test_replications_are_independent_of_each_other():
    spec = ModelSpec("ar2", 100, 3)
    a = generate(spec, rep=5, purpose=simulate.TRUTH)
    assert a.tobytes() == generate(spec, rep=5, purpose=simulate.TRUTH).tobytes()
    assert a.tobytes() != generate(spec, rep=5, purpose=simulate.RUN).tobytes()
    assert a.tobytes() != generate(spec, rep=6, purpose=simulate.TRUTH).tobytes()


def test_invalid_specs():
    with pytest.raises(ValueError, match="ar2, arma22, garch11, mixture"):
        ModelSpec("arma11", 100)
    with pytest.raises(TooShort):
        ModelSpec("ar2", 4)


def test_model_polynomials_causal():
    for phi in (simulate.AR2, simulate.ARMA22_AR):
        assert np.all(np.abs(ar_roots(phi)) > 1)


def test_garch_unconditional_variance():
    y = generate(ModelSpec("garch11", 10**6, 11))
    target = 1e-6 / (1 - 0.7)
    assert abs(y.var() / target - 1) < 0.10


def test_garch_variance_positive():
    z = np.random.default_rng(0).standard_normal(5000)
    y = simulate._garch(z)
    s2 = (y / z) ** 2
    assert np.all(np.isfinite(s2)) and np.all(s2 >= 1e-6)


def test_ar2_matches_direct_recursion():
    spec = ModelSpec("ar2", 50, 9)
    w = simulate.rng(9, simulate.SINGLE, 0, 0).standard_normal(50 + simulate.BURN_IN)
    y = np.zeros_like(w)
    for t in range(w.size):
        y[t] = w[t] + (0.9 * y[t - 1] if t >= 1 else 0) - (0.9 * y[t - 2] if t >= 2 else 0)
    np.testing.assert_allclose(generate(spec), y[simulate.BURN_IN:], rtol=1e-12, atol=1e-12)


def test_mixture_weights():
    assert w1(-0.8) == pytest.approx(0.9)
    assert w1(0.8) == pytest.approx(0.25)
    assert w1(0.0) == pytest.approx(0.575)
    assert w1(-5) == 0.9 and w1(5) == 0.25
    assert w2(-0.4) == pytest.approx(0.5)
    assert w2(0.0) == pytest.approx(1.0)
    assert w2(-0.2) == pytest.approx(0.75)
    assert w2(-3) == 0.5 and w2(2) == 1.0


@settings(max_examples=100)
@given(x=st.floats(-1e6, 1e6))
def test_mixture_weights_in_unit_interval(x):
    assert 0 <= w1(x) <= 1 and 0 <= w2(x) <= 1


def test_pairwise_sum():
    rng = np.random.default_rng(1)
    arrs = [rng.standard_normal((4, 3)) for _ in range(37)]
    np.testing.assert_allclose(pairwise_sum(arrs), np.sum(arrs, axis=0), rtol=1e-13, atol=1e-13)
    with pytest.raises(ValueError):
        pairwise_sum([])


def test_truth_single_rep_is_raw_periodogram():
    gt = ground_truth("arma22", 64, GRID3, reps=1, seed=4)
    y = generate(ModelSpec("arma22", 64, 4), rep=0, purpose=simulate.TRUTH)
    raw = quantile_periodogram(y, GRID3).ordinates[1:32]
    np.testing.assert_array_equal(gt.values, raw)
    assert np.all(gt.values >= 0)


def test_truth_thread_independent():
    a = ground_truth("mixture", 80, GRID3, reps=40, seed=2, threads=1)
    b = ground_truth("mixture", 80, GRID3, reps=40, seed=2, threads=3)
    assert a.values.tobytes() == b.values.tobytes()


def test_truth_normalized_columns():
    gt = ground_truth("ar2", 64, GRID3, reps=5, seed=1)
    N = gt.normalized()
    np.testing.assert_allclose(N.sum(axis=0), 1.0, atol=1e-15)
    assert gt.normalized(rows=6).shape == (6, 3)


@pytest.mark.slow
def test_truth_two_sample_consistency():
    # exponential ordinates: the Monte-Carlo SE of a cell mean is about mean / sqrt(R)
    R = 200
    a = ground_truth("ar2", 500, GRID3, reps=R, seed=100).normalized()
    b = ground_truth("ar2", 500, GRID3, reps=R, seed=200).normalized()
    for i in range(3):
        se = np.sqrt(np.mean(((a[:, i] + b[:, i]) / 2) ** 2) / R)
        assert np.sqrt(np.mean((a[:, i] - b[:, i]) ** 2)) < 2 * se


@pytest.mark.slow
def test_white_noise_truth_is_flat():
    R = 200
    T = ground_truth("white", 500, GRID3, reps=R, seed=3).normalized()
    L = T.shape[0]
    for i in range(3):
        assert np.sqrt(np.mean((T[:, i] - 1 / L) ** 2)) < 3 * (1 / L) / np.sqrt(R)
