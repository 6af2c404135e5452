"""Dense complex linear algebra and reproducible random number generation.

Matrices are plain ``numpy.ndarray`` objects (complex128, two-dimensional,
row major); no wrapper type is used.  Haar sampling follows the phase-fixed
QR construction; Hermitian eigenproblems and pivoted LU factorizations are
delegated to LAPACK through numpy/scipy behind the contracts below.

Randomness contract: every stochastic routine takes a ``numpy.random
.Generator``.  Child generators for task grids are derived from a 64-bit
root seed through ``numpy.random.SeedSequence`` spawn keys, which is a
published, stable mixing function; see :func:`child_rng`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

__all__ = [
    "child_rng",
    "is_hermitian",
    "haar_unitary",
    "haar_orthogonal",
    "HermitianSpectrum",
    "hermitian_eigensystem",
    "log_abs_det",
    "hessenberg_form",
    "shifted_log_abs_det",
]

HERMITIAN_TOL = 1e-10


def child_rng(seed: int, *path: int) -> np.random.Generator:
    """Deterministic child generator for task index tuple ``path``.

    mix(seed, path) = SeedSequence(entropy=seed, spawn_key=path); distinct
    paths give statistically independent streams, and the derivation is
    reproducible across runs and thread schedules.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


def is_hermitian(M: np.ndarray, tol: float = 1e-12) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 0.0)
    return bool(np.max(np.abs(M - M.conj().T)) <= tol * scale)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of U(n).

    QR of an iid standard complex Gaussian matrix, with each column of Q
    rephased so that the corresponding diagonal entry of R is positive;
    this makes the factorization unique and the Q factor exactly Haar.
    """
    if n < 1:
        raise ValueError("n must be positive")
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    phases = np.where(np.abs(d) > 0, d / np.abs(np.where(np.abs(d) > 0, d, 1.0)), 1.0)
    return Q * phases


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of O(n); real entries, returned as complex."""
    if n < 1:
        raise ValueError("n must be positive")
    Z = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    signs = np.where(d >= 0, 1.0, -1.0)
    return (Q * signs).astype(np.complex128)


@dataclass(frozen=True)
class HermitianSpectrum:
    """Ascending eigenvalues, optional orthonormal eigenvectors, and the
    attained residual max_k ||M v_k - lambda_k v_k||_2 (None without
    vectors)."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    residual: Optional[float]

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(ev) < 0):
            raise ValueError("eigenvalues must be ascending")
        object.__setattr__(self, "eigenvalues", ev)

    def __len__(self):
        return len(self.eigenvalues)


def hermitian_eigensystem(M: np.ndarray, want_vectors: bool = False) -> HermitianSpectrum:
    """Full eigensystem of a Hermitian matrix (LAPACK divide and conquer)."""
    M = np.asarray(M, dtype=np.complex128)
    if not is_hermitian(M, HERMITIAN_TOL):
        raise ValueError(f"matrix is not Hermitian to {HERMITIAN_TOL:g}")
    if want_vectors:
        vals, vecs = np.linalg.eigh(M)
        resid = float(np.max(np.linalg.norm(M @ vecs - vecs * vals, axis=0)))
        return HermitianSpectrum(vals, vecs, resid)
    vals = np.linalg.eigvalsh(M)
    return HermitianSpectrum(vals, None, None)


def log_abs_det(M: np.ndarray) -> float:
    """log |det M| by LU with partial pivoting; -inf for a singular matrix.

    An estimated reciprocal condition number below 1e-12 triggers a
    RuntimeWarning: the returned value then carries few reliable digits.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("log_abs_det needs a square matrix")
    anorm = float(np.max(np.sum(np.abs(M), axis=0))) if M.size else 0.0
    with warnings.catch_warnings():
        # an exactly singular factorization is a supported outcome (-inf)
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    diag = np.abs(np.diagonal(lu))
    if np.any(diag == 0.0):
        return -np.inf
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    rcond, _ = gecon(lu, anorm)
    if rcond < 1e-12:
        warnings.warn(
            f"log_abs_det: matrix nearly singular (rcond ~ {rcond:.2e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return float(np.sum(np.log(diag)))


def hessenberg_form(M: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form of M under a unitary similarity.

    Shift-invariant: hess(M) - w I is similar to M - w I, so log |det(M - w)|
    can be read off the Hessenberg matrix for every shift w at O(n^2) cost.
    """
    M = np.asarray(M, dtype=np.complex128)
    return scipy.linalg.hessenberg(M)


def shifted_log_abs_det(hess: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """log |det(H - w I)| for a batch of shifts w, H upper Hessenberg.

    Gaussian elimination on a Hessenberg matrix only ever combines two
    adjacent rows, so the whole batch advances one column per step with two
    live rows per shift; row swaps change det only by sign, which |det|
    ignores.  Singular shifts yield -inf.
    """
    H = np.asarray(hess, dtype=np.complex128)
    n = H.shape[0]
    w_all = np.asarray(shifts, dtype=np.complex128).reshape(-1)
    if n == 0 or len(w_all) == 0:
        return np.zeros(len(w_all))

    out_all = np.empty(len(w_all))
    # chunk the shift batch so the two live rows stay cache-resident
    chunk = max(1, min(len(w_all), (1 << 21) // (16 * max(n, 1))))
    for start in range(0, len(w_all), chunk):
        w = w_all[start : start + chunk]
        nw = len(w)
        out = np.zeros(nw)
        # live pivot row per shift: row 0 of H - wI, columns 0..n-1
        cur = np.broadcast_to(H[0], (nw, n)).copy()
        cur[:, 0] -= w
        for j in range(n - 1):
            m = n - j  # live tail length
            nxt = np.broadcast_to(H[j + 1, j:], (nw, m)).copy()
            nxt[:, 1] -= w

            swap = np.abs(nxt[:, 0]) > np.abs(cur[:, 0])
            if np.any(swap):
                tmp = cur[swap].copy()
                cur[swap] = nxt[swap]
                nxt[swap] = tmp

            piv = cur[:, 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                out += np.where(piv != 0, np.log(np.abs(np.where(piv != 0, piv, 1.0))), -np.inf)
                mult = np.where(piv != 0, nxt[:, 0] / np.where(piv != 0, piv, 1.0), 0.0)
            tail = cur[:, 1:]
            tail *= mult[:, None]
            nxt2 = nxt[:, 1:]
            nxt2 -= tail
            cur = nxt2
        last = np.abs(cur[:, 0])
        with np.errstate(divide="ignore"):
            out += np.where(last > 0, np.log(np.where(last > 0, last, 1.0)), -np.inf)
        out_all[start : start + chunk] = out
    return out_all
