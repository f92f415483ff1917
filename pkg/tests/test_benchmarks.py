import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize
from scipy.stats import qmc

from s3bo.benchmarks import (
    HARTMANN_ARGMIN,
    HARTMANN_MIN_VALUE,
    BenchmarkSpec,
    effective_subspace,
    evaluate,
    sample_delay,
    value,
)
from s3bo.errors import InputError


def unit(D, i=0):
    x = np.zeros(D)
    x[i] = 1.0
    return x


def test_zdt1_optimum():
    assert value(BenchmarkSpec("zdt1", 10), unit(10)) == 0.0
    assert value(BenchmarkSpec("zdt1", 10), -unit(10)) == 0.0


def test_zdt2_hand_value():
    x = 0.5 * unit(7)
    assert value(BenchmarkSpec("zdt2", 7), x) == pytest.approx(0.75, abs=1e-15)


def test_zdt_g_as_printed():
    x = np.array([0.0, 0.5, 0.5])  # x1 = 0 removes the shape term, so f = g
    assert value(BenchmarkSpec("zdt1", 3), x) == pytest.approx(1 + 9 * (1.0 / 2) ** 2)
    assert value(BenchmarkSpec("zdt2", 3), x) == pytest.approx(1 + 81.0)
    assert value(BenchmarkSpec("zdt3", 3), x) == pytest.approx(1 + 9.0)
    assert value(BenchmarkSpec("zdt2", 3, normalize_g=True), x) == pytest.approx(1 + 9 * 0.25)


def test_zdt3_plug_in():
    x = np.array([0.3, 0.1, -0.2, 0.4])
    g = 1 + 9 * 0.3**2
    r = 0.09 / g
    expected = g * (1 - np.sqrt(r) - r * np.sin(10 * np.pi * 0.09))
    assert value(BenchmarkSpec("zdt3", 4), x) == pytest.approx(expected, rel=1e-14)


def test_sphere_plug_ins():
    spec = BenchmarkSpec("sphere", 100)
    assert value(spec, np.zeros(100)) == 0.0
    assert value(spec, np.ones(100)) == 10000.0


def test_sphere_general_product_of_squares():
    W = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, -1.0]])
    spec = BenchmarkSpec("sphere_general", 3, weights=W)
    x = np.array([0.5, 2.0, 1.0])
    assert value(spec, x) == pytest.approx((0.5 + 2.0) ** 2 * (2.0 - 1.0) ** 2)


def hartmann_oracle(n_starts=300, seed=0):
    spec = BenchmarkSpec("hartmann4")
    starts = qmc.LatinHypercube(d=4, seed=seed).random(n_starts)
    best = min((minimize(lambda x: value(spec, x), s, method="L-BFGS-B", bounds=[(0, 1)] * 4)
                for s in starts), key=lambda r: r.fun)
    return best.fun, best.x


def test_hartmann_minimum_matches_independent_multistart():
    fun, x = hartmann_oracle()
    assert fun == pytest.approx(HARTMANN_MIN_VALUE, abs=1e-6)
    np.testing.assert_allclose(x, HARTMANN_ARGMIN, atol=1e-4)
    assert value(BenchmarkSpec("hartmann4"), HARTMANN_ARGMIN) == pytest.approx(HARTMANN_MIN_VALUE, abs=1e-8)


def test_effective_subspaces():
    zdt = effective_subspace(BenchmarkSpec("zdt1", 6))
    assert zdt.shape == (2, 6)
    np.testing.assert_allclose(zdt @ zdt.T, np.eye(2), atol=1e-15)
    sphere = effective_subspace(BenchmarkSpec("sphere", 5))
    np.testing.assert_allclose(sphere, np.ones((1, 5)) / np.sqrt(5))
    W = np.random.default_rng(0).normal(size=(3, 8))
    np.testing.assert_array_equal(effective_subspace(BenchmarkSpec("sphere_general", 8, weights=W)), W)
    with pytest.raises(InputError):
        effective_subspace(BenchmarkSpec("hartmann4"))


@pytest.mark.parametrize("name", ["zdt1", "zdt2", "zdt3", "sphere", "sphere_general"])
def test_orthogonal_perturbations_leave_the_value_unchanged(name):
    D = 12
    rng = np.random.default_rng(1)
    W = rng.normal(size=(3, D)) if name == "sphere_general" else None
    spec = BenchmarkSpec(name, D, weights=W)
    Q, _ = np.linalg.qr(effective_subspace(spec).T)
    for _ in range(100):
        x = rng.uniform(-1, 1, D)
        p = rng.normal(size=D)
        p -= Q @ (Q.T @ p)
        assert abs(value(spec, x + 0.1 * p) - value(spec, x)) <= 1e-9 * max(1.0, abs(value(spec, x)))


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 6, elements=st.floats(-10, 10)))
def test_spheres_are_nonnegative(x):
    W = np.arange(12.0).reshape(2, 6) - 5
    assert value(BenchmarkSpec("sphere", 6), x) >= 0
    assert value(BenchmarkSpec("sphere_general", 6, weights=W), x) >= 0


def test_mean_delay_over_a_thousand_draws():
    spec = BenchmarkSpec("sphere", 2, delay=(0.010, 0.050))
    rng = np.random.default_rng(0)
    mean = np.mean([sample_delay(spec, rng) for _ in range(1000)])
    assert 0.028 <= mean <= 0.032


def test_evaluate_sleeps_for_the_delay():
    import time

    spec = BenchmarkSpec("sphere", 2, delay=(0.02, 0.02))
    t = time.perf_counter()
    assert evaluate(spec, [1.0, 1.0]) == 4.0
    assert time.perf_counter() - t >= 0.02


def test_invalid_specs():
    with pytest.raises(InputError):
        BenchmarkSpec("rosenbrock")
    with pytest.raises(InputError):
        BenchmarkSpec("hartmann4", 6)
    with pytest.raises(InputError):
        BenchmarkSpec("zdt1", 1)
    with pytest.raises(InputError):
        BenchmarkSpec("sphere_general", 3)
    with pytest.raises(InputError):
        BenchmarkSpec("sphere", 2, delay=(0.5, 0.1))
    with pytest.raises(InputError):
        value(BenchmarkSpec("sphere", 3), [0.0, 1.0])
    assert BenchmarkSpec("hartmann4").bounds[0].tolist() == [0.0] * 4
    assert BenchmarkSpec("sphere", 3).bounds[1].tolist() == [1.0] * 3
