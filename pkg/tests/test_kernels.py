import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from s3bo.errors import InputError
from s3bo.kernels import FAMILIES, KernelSpec, kernel_eval, kernel_matrix, kernel_matrix_and_grads


def mp_kernel(family, r, amp=1):
    """High-precision closed forms, written independently of the library."""
    r = mpmath.mpf(r)
    if family == "matern12":
        k = mpmath.exp(-r)
    elif family == "matern32":
        k = (1 + mpmath.sqrt(3) * r) * mpmath.exp(-mpmath.sqrt(3) * r)
    elif family == "matern52":
        k = (1 + mpmath.sqrt(5) * r + mpmath.mpf(5) / 3 * r**2) * mpmath.exp(-mpmath.sqrt(5) * r)
    else:
        k = mpmath.exp(-r**2 / 2)
    return mpmath.mpf(amp) ** 2 * k


def test_sqexp_at_zero_distance_is_amplitude_squared():
    spec = KernelSpec("sqexp", amplitude=2.0, lengthscales=(0.7,))
    assert kernel_eval(spec, [0.3, -1.0], [0.3, -1.0]) == 4.0


def test_matern52_unit_distance_matches_high_precision():
    mpmath.mp.dps = 30
    expected = mpmath.exp(-mpmath.sqrt(5)) * (1 + mpmath.sqrt(5) + mpmath.mpf(5) / 3)
    got = kernel_eval(KernelSpec("matern52"), [0.0], [1.0])
    assert got == pytest.approx(float(expected), rel=1e-14)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("r", [0.0, 0.1, 0.5, 1.0, 2.5, 7.0])
def test_every_family_matches_mpmath(family, r):
    mpmath.mp.dps = 30
    ls = np.array([0.5, 2.0])
    direction = np.array([0.6, 0.8])
    x2 = r * direction * ls  # scaled distance exactly r
    got = kernel_eval(KernelSpec(family, 1.7, tuple(ls)), [0.0, 0.0], x2)
    assert got == pytest.approx(float(mp_kernel(family, r, 1.7)), rel=1e-12, abs=1e-300)


def test_matern32_vanishes_far_away():
    assert kernel_eval(KernelSpec("matern32"), [0.0], [41.0]) < 1e-12


def test_aliases_resolve():
    assert KernelSpec("rbf").family == "sqexp"
    assert KernelSpec("Matern5").family == "matern52"


@pytest.mark.parametrize("bad", [dict(family="cosine"), dict(amplitude=0.0), dict(lengthscales=(1.0, -1.0))])
def test_invalid_specs_rejected(bad):
    with pytest.raises(InputError):
        KernelSpec(**bad)


def test_dimension_mismatch_and_nonfinite_rejected():
    spec = KernelSpec("matern32")
    with pytest.raises(InputError):
        kernel_eval(spec, [0.0, 1.0], [0.0])
    with pytest.raises(InputError):
        kernel_eval(spec, [np.nan], [0.0])
    with pytest.raises(InputError):
        kernel_matrix(KernelSpec("matern32", 1.0, (1.0, 1.0)), np.zeros((2, 3)))


def test_single_row_matrix():
    K = kernel_matrix(KernelSpec("sqexp", 3.0), np.array([[0.2, 0.4]]))
    assert K.shape == (1, 1) and K[0, 0] == 9.0


def test_matrix_matches_entrywise_loop():
    rng = np.random.default_rng(4)
    X, X2 = rng.normal(size=(5, 2)), rng.normal(size=(4, 2))
    spec = KernelSpec("matern52", 1.3, (0.4, 1.1))
    loop = np.array([[kernel_eval(spec, a, b) for b in X2] for a in X])
    np.testing.assert_allclose(kernel_matrix(spec, X, X2), loop, rtol=1e-13)


@pytest.mark.parametrize("family", FAMILIES)
def test_three_point_matrix_symmetric_psd(family):
    X = np.array([[0.0, 0.0], [0.3, 0.1], [1.0, -0.5]])
    K = kernel_matrix(KernelSpec(family, 1.5, (0.8,)), X)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_allclose(np.diag(K), 1.5**2)
    assert np.linalg.eigvalsh(K + 1e-10 * np.eye(3)).min() >= -1e-8


points = arrays(np.float64, st.tuples(st.integers(1, 20), st.just(3)),
                elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False))


@settings(max_examples=60, deadline=None)
@given(points, st.sampled_from(FAMILIES), st.floats(0.1, 10.0), st.floats(0.05, 5.0))
def test_kernel_matrix_properties(X, family, amp, ls):
    spec = KernelSpec(family, amp, (ls,))
    K = kernel_matrix(spec, X)
    np.testing.assert_allclose(K, K.T, rtol=0, atol=1e-15 * amp**2)
    assert np.all(K > -1e-300) and np.all(K <= amp**2 * (1 + 1e-12))
    # distinct points can still coincide numerically; PSD is up to the documented jitter
    np.linalg.cholesky(K + 1e-10 * amp**2 * np.eye(len(X)) + 1e-12 * amp**2 * len(X) * np.eye(len(X)))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0.01, 3.0), st.floats(0.1, 3.0), st.floats(1.01, 3.0))
def test_longer_lengthscales_raise_correlation(family, r, ls, factor):
    x, x2 = [0.0], [r]
    short = kernel_eval(KernelSpec(family, 1.0, (ls,)), x, x2)
    long = kernel_eval(KernelSpec(family, 1.0, (ls * factor,)), x, x2)
    assert long > short


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("ard", [False, True])
def test_log_hyper_gradients_match_central_differences(family, ard):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(6, 2))
    ls = (0.7, 1.4) if ard else (0.9,)
    spec = KernelSpec(family, 1.2, ls)
    _, grads = kernel_matrix_and_grads(spec, X)
    h = 1e-6
    theta = np.log([spec.amplitude, *spec.lengthscales])
    for i, G in enumerate(grads):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        mk = lambda t: kernel_matrix(KernelSpec(family, np.exp(t[0]), tuple(np.exp(t[1:]))), X)  # noqa: E731
        np.testing.assert_allclose(G, (mk(up) - mk(dn)) / (2 * h), rtol=1e-5, atol=1e-8)
