"""Linear front end: beamforming, noise whitening and truncation.

The receiver model is ``r = A s + n`` with ``E[n n^H] = sigma2 * K``. The
front end produces ``y = T^H W^H r = H s + z`` where the retained noise
``z`` has covariance ``sigma2 * I``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Eigenvalues of G below this fraction of the largest are treated as zero.
RANK_TOL = 1e-10
MAX_CONDITION = 1e12


class Beamformer(str, enum.Enum):
    MRC = "mrc"
    SINR = "sinr"


def received_covariance(a: np.ndarray, knn: np.ndarray, sigma2: float) -> np.ndarray:
    a = np.atleast_2d(a)
    knn = np.atleast_2d(knn)
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    if knn.shape != (a.shape[0], a.shape[0]):
        raise ValueError(f"K_nn shape {knn.shape} does not match {a.shape[0]} LNBs")
    return a @ a.conj().T + sigma2 * knn


def mrc_beamformer(a: np.ndarray) -> np.ndarray:
    return np.array(a, dtype=complex)


def sinr_beamformer(a: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Wiener-Hopf weights ``R^-1 a_m`` for every stream."""
    if np.linalg.cond(r) > MAX_CONDITION:
        raise np.linalg.LinAlgError("received covariance is numerically singular")
    return np.linalg.solve(r, np.asarray(a, dtype=complex))


def stream_sinr(w: np.ndarray, a: np.ndarray, r: np.ndarray, m: int) -> float:
    """Output SINR of stream ``m`` for beamformer column(s) ``w``."""
    w = np.asarray(w)
    if w.ndim == 2:
        w = w[:, m]
    rm = np.outer(a[:, m], a[:, m].conj())
    num = np.real(w.conj() @ rm @ w)
    den = np.real(w.conj() @ (r - rm) @ w)
    return float(num / den)


def _fix_phase(u: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column becomes real positive
    pivot = u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])]
    return u * (np.abs(pivot) / pivot)


def whitening_filter(w: np.ndarray, knn: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return the full whitener F and its truncation T.

    ``G = W^H K W = U L U^H`` with eigenvalues in descending order and
    ``F = U (L^+)^(1/2)``. Columns of F tied to eigenvalues below the rank
    tolerance are zero; T keeps the leading ``min(M, N)`` columns.
    """
    g = w.conj().T @ knn @ w
    g = (g + g.conj().T) / 2
    lam, u = np.linalg.eigh(g)
    lam, u = lam[::-1], _fix_phase(u[:, ::-1])
    m, n = w.shape
    keep = lam > RANK_TOL * max(lam[0], 0.0)
    if keep.sum() < min(m, n):
        raise np.linalg.LinAlgError(
            f"beamformer output covariance has rank {keep.sum()} < {min(m, n)}"
        )
    scale = np.zeros_like(lam)
    scale[keep] = 1.0 / np.sqrt(lam[keep])
    f = u * scale
    return f, f[:, : min(m, n)]


@dataclass(frozen=True)
class PreprocessorState:
    a: np.ndarray
    knn: np.ndarray
    sigma2: float
    mode: Beamformer
    r: np.ndarray
    w: np.ndarray
    f: np.ndarray
    t: np.ndarray
    h: np.ndarray
    h_full: np.ndarray
    h_raw: np.ndarray

    @property
    def rows(self) -> int:
        return self.h.shape[0]

    def filter(self, full: bool = False) -> np.ndarray:
        """Combined front-end matrix ``T^H W^H`` (or ``F^H W^H``)."""
        return (self.f if full else self.t).conj().T @ self.w.conj().T


def build_preprocessor(a, knn, sigma2: float, mode=Beamformer.SINR) -> PreprocessorState:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    knn = np.atleast_2d(np.asarray(knn, dtype=complex))
    mode = Beamformer(mode)
    r = received_covariance(a, knn, sigma2)
    w = mrc_beamformer(a) if mode is Beamformer.MRC else sinr_beamformer(a, r)
    f, t = whitening_filter(w, knn)
    h = t.conj().T @ w.conj().T @ a
    h_full = f.conj().T @ w.conj().T @ a
    h_raw = w.conj().T @ a
    for arr in (a, knn, r, w, f, t, h, h_full, h_raw):
        arr.setflags(write=False)
    return PreprocessorState(a, knn, float(sigma2), mode, r, w, f, t, h, h_full, h_raw)


def apply_preprocessor(
    state: PreprocessorState, r, full: bool = False, whiten: bool = True
) -> np.ndarray:
    """Map received vectors to the detector model.

    ``r`` is one M-vector or a ``(B, M)`` batch; the result has the same
    leading shape with ``M`` (or ``N`` when ``full``) trailing entries. With
    ``whiten=False`` the raw beamformer outputs ``W^H r`` are returned (N
    entries, matching ``state.h_raw``).
    """
    r = np.asarray(r, dtype=complex)
    if r.shape[-1] != state.a.shape[0]:
        raise ValueError(f"received vector length {r.shape[-1]} != {state.a.shape[0]}")
    if not whiten:
        return r @ state.w.conj()
    return r @ state.filter(full).T
