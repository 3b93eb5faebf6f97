import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from satrx.preprocessor import (
    Beamformer,
    apply_preprocessor,
    build_preprocessor,
    received_covariance,
    stream_sinr,
    whitening_filter,
)


def _scenario(seed, m, n):
    rng = np.random.default_rng(seed)
    a = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)
    b = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    k = b @ b.conj().T + 0.1 * np.eye(m)
    d = np.sqrt(np.real(np.diag(k)))
    return a, k / np.outer(d, d), 10 ** rng.uniform(-2, 0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 3), extra=st.integers(1, 3))
def test_truncated_whitener_gives_identity(seed, m, extra):
    a, k, sigma2 = _scenario(seed, m, m + extra)
    for mode in Beamformer:
        state = build_preprocessor(a, k, sigma2, mode)
        f = state.filter()
        np.testing.assert_allclose(f @ k @ f.conj().T, np.eye(m), atol=1e-9)
        assert state.h.shape == (m, m + extra)
        assert state.h_full.shape == (m + extra, m + extra)


def test_full_whitener_is_zero_beyond_rank():
    a, k, sigma2 = _scenario(0, 2, 4)
    f, t = whitening_filter(np.linalg.solve(received_covariance(a, k, sigma2), a), k)
    assert f.shape == (4, 4) and t.shape == (4, 2)
    np.testing.assert_array_equal(f[:, 2:], 0)


def test_sinr_beamformer_matches_generalised_eigenvector():
    a, k, sigma2 = _scenario(1, 3, 5)
    state = build_preprocessor(a, k, sigma2)
    for s in range(5):
        rs = np.outer(a[:, s], a[:, s].conj())
        best = scipy.linalg.eigh(rs, state.r - rs, eigvals_only=True)[-1]
        assert stream_sinr(state.w, a, state.r, s) == pytest.approx(best, rel=1e-8)
        mrc = build_preprocessor(a, k, sigma2, "mrc")
        assert stream_sinr(mrc.w, a, state.r, s) <= best * (1 + 1e-12)


def test_apply_matches_model():
    a, k, sigma2 = _scenario(2, 3, 5)
    state = build_preprocessor(a, k, sigma2)
    s = np.exp(2j * np.pi * np.arange(5) / 5)
    r = a @ s
    np.testing.assert_allclose(apply_preprocessor(state, r), state.h @ s, atol=1e-12)
    np.testing.assert_allclose(apply_preprocessor(state, r, full=True), state.h_full @ s, atol=1e-12)
    np.testing.assert_allclose(apply_preprocessor(state, r, whiten=False), state.h_raw @ s, atol=1e-12)
    batch = np.stack([r, 2 * r])
    assert apply_preprocessor(state, batch).shape == (2, 3)


def test_input_validation():
    a, k, _ = _scenario(3, 2, 3)
    with pytest.raises(ValueError):
        received_covariance(a, k, 0.0)
    with pytest.raises(ValueError):
        received_covariance(a, np.eye(3), 1.0)
    state = build_preprocessor(a, k, 0.1)
    with pytest.raises(ValueError):
        apply_preprocessor(state, np.ones(3))


def test_singular_covariance_rejected():
    a = np.ones((2, 3))
    knn = np.ones((2, 2))
    with pytest.raises(np.linalg.LinAlgError):
        build_preprocessor(a, knn, 1e-3)


def test_state_arrays_are_read_only():
    a, k, sigma2 = _scenario(4, 2, 3)
    state = build_preprocessor(a, k, sigma2)
    with pytest.raises(ValueError):
        state.h[0, 0] = 0
