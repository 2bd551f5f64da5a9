"""Hot loops: fixed-step RK4 propagation and per-frequency resolvent sweeps.

Every kernel exists twice, a numba ``@njit`` version and a plain numpy one.
The numba path is used when numba imports and ``CASCADE_SPECTRUM_NUMBA`` is not
set to ``0``/``false``/``off``. :func:`set_backend` switches at runtime (tests
and the benchmark run both paths and compare).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

__all__ = [
    "HAVE_NUMBA",
    "backend",
    "set_backend",
    "rk4_propagator",
    "propagate",
    "resolvent_sweep",
]

HAVE_NUMBA = numba is not None


def _env_wants_numba() -> bool:
    flag = os.environ.get("CASCADE_SPECTRUM_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


_backend = "numba" if (HAVE_NUMBA and _env_wants_numba()) else "numpy"


def backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    old, _backend = _backend, name
    return old


def rk4_propagator(M: np.ndarray, dt: float) -> np.ndarray:
    """One classic RK4 step for ``y' = M y`` written as a matrix.

    For an autonomous linear system the four stages collapse to
    ``I + hM + (hM)^2/2 + (hM)^3/6 + (hM)^4/24``.
    """
    hM = dt * np.asarray(M, dtype=np.complex128)
    eye = np.eye(hM.shape[0], dtype=np.complex128)
    P = eye.copy()
    term = eye
    for k in range(1, 5):
        term = term @ hM / k
        P = P + term
    return P


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def _propagate_numpy(P, Y0, n_steps, stride):
    n_out = n_steps // stride + 1
    out = np.empty((n_out,) + Y0.shape, dtype=np.complex128)
    Y = Y0.copy()
    out[0] = Y
    j = 1
    for step in range(1, n_steps + 1):
        Y = P @ Y
        if step % stride == 0:
            out[j] = Y
            j += 1
    return out


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _propagate_numba(P, Y0, n_steps, stride):
        n_out = n_steps // stride + 1
        N, K = Y0.shape
        out = np.empty((n_out, N, K), dtype=np.complex128)
        Y = Y0.copy()
        out[0] = Y
        j = 1
        for step in range(1, n_steps + 1):
            Y = np.dot(P, Y)
            if step % stride == 0:
                out[j] = Y
                j += 1
        return out


def propagate(P: np.ndarray, Y0: np.ndarray, n_steps: int, stride: int = 1) -> np.ndarray:
    """Apply ``P`` ``n_steps`` times to ``Y0`` (vector or matrix), sampling every ``stride``.

    Returns an array of shape ``(n_steps // stride + 1,) + Y0.shape``.
    """
    P = np.ascontiguousarray(P, dtype=np.complex128)
    Y0 = np.asarray(Y0, dtype=np.complex128)
    vector = Y0.ndim == 1
    Y = np.ascontiguousarray(Y0.reshape(Y0.shape[0], -1))
    if _backend == "numba":
        out = _propagate_numba(P, Y, int(n_steps), int(stride))
    else:
        out = _propagate_numpy(P, Y, int(n_steps), int(stride))
    return out[:, :, 0] if vector else out


# ---------------------------------------------------------------------------
# resolvent sweep
#
# For each frequency w the kernel forms s = -i w and
#   U10 = (s + i A10)^-1,  U21 = (s + i A21)^-1,  U1021 = U10 (i B10) U21
# and contracts them with fixed coefficient matrices:
#   z(w) = sum(C10 * U10) + sum(C21 * U21) + sum(C1021 * U1021)
# The 1-norm condition number of each solved matrix is returned alongside.
# ---------------------------------------------------------------------------

def _sweep_numpy(A10, A21, iB10, C10, C21, C1021, omegas):
    s = -1j * omegas
    M10 = 1j * A10[None] + s[:, None, None] * np.eye(A10.shape[0])[None]
    M21 = 1j * A21[None] + s[:, None, None] * np.eye(A21.shape[0])[None]
    U10 = np.linalg.inv(M10)
    U21 = np.linalg.inv(M21)
    U1021 = U10 @ iB10[None] @ U21
    z = (np.einsum("ij,wij->w", C10, U10)
         + np.einsum("ij,wij->w", C21, U21)
         + np.einsum("ij,wij->w", C1021, U1021))
    k10 = np.abs(M10).sum(axis=1).max(axis=1) * np.abs(U10).sum(axis=1).max(axis=1)
    k21 = np.abs(M21).sum(axis=1).max(axis=1) * np.abs(U21).sum(axis=1).max(axis=1)
    return z, np.maximum(k10, k21)


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _norm1(M):
        best = 0.0
        for c in range(M.shape[1]):
            acc = 0.0
            for r in range(M.shape[0]):
                acc += abs(M[r, c])
            if acc > best:
                best = acc
        return best

    @numba.njit(cache=True, nogil=True)
    def _invert(M, out, work):
        # Gauss-Jordan with partial pivoting; False if a pivot is exactly zero.
        # LAPACK call overhead dominates for the 2x2 and 6x6 systems here.
        n = M.shape[0]
        for r in range(n):
            for c in range(n):
                work[r, c] = M[r, c]
                out[r, c] = 1.0 if r == c else 0.0
        for k in range(n):
            p = k
            best = abs(work[k, k])
            for r in range(k + 1, n):
                if abs(work[r, k]) > best:
                    best = abs(work[r, k])
                    p = r
            if best == 0.0:
                return False
            if p != k:
                for c in range(n):
                    work[k, c], work[p, c] = work[p, c], work[k, c]
                    out[k, c], out[p, c] = out[p, c], out[k, c]
            inv = 1.0 / work[k, k]
            for c in range(n):
                work[k, c] *= inv
                out[k, c] *= inv
            for r in range(n):
                if r != k:
                    f = work[r, k]
                    if f != 0:
                        for c in range(n):
                            work[r, c] -= f * work[k, c]
                            out[r, c] -= f * out[k, c]
        return True

    @numba.njit(cache=True, nogil=True)
    def _sweep_numba(A10, A21, iB10, C10, C21, C1021, omegas):
        n = omegas.shape[0]
        d10 = A10.shape[0]
        d21 = A21.shape[0]
        z = np.empty(n, dtype=np.complex128)
        kappa = np.empty(n, dtype=np.float64)
        M10 = np.empty((d10, d10), dtype=np.complex128)
        M21 = np.empty((d21, d21), dtype=np.complex128)
        U10 = np.empty((d10, d10), dtype=np.complex128)
        U21 = np.empty((d21, d21), dtype=np.complex128)
        W10 = np.empty((d10, d10), dtype=np.complex128)
        W21 = np.empty((d21, d21), dtype=np.complex128)
        T = np.empty((d10, d21), dtype=np.complex128)
        for w in range(n):
            s = -1j * omegas[w]
            for r in range(d10):
                for c in range(d10):
                    M10[r, c] = 1j * A10[r, c]
                M10[r, r] += s
            for r in range(d21):
                for c in range(d21):
                    M21[r, c] = 1j * A21[r, c]
                M21[r, r] += s
            if not (_invert(M10, U10, W10) and _invert(M21, U21, W21)):
                z[w] = np.nan
                kappa[w] = np.inf
                return z, kappa, w
            # U1021 = U10 (iB10) U21, contracted with C1021 on the fly
            for r in range(d10):
                for c in range(d21):
                    acc = 0j
                    for q in range(d10):
                        acc += U10[r, q] * iB10[q, c]
                    T[r, c] = acc
            acc = 0j
            for r in range(d10):
                for c in range(d21):
                    u = 0j
                    for q in range(d21):
                        u += T[r, q] * U21[q, c]
                    acc += C1021[r, c] * u
                for c in range(d10):
                    acc += C10[r, c] * U10[r, c]
            for r in range(d21):
                for c in range(d21):
                    acc += C21[r, c] * U21[r, c]
            z[w] = acc
            kappa[w] = max(_norm1(M10) * _norm1(U10), _norm1(M21) * _norm1(U21))
        return z, kappa, -1


def resolvent_sweep(A10, A21, iB10, C10, C21, C1021, omegas):
    """Contracted resolvent values ``z(w)`` and condition numbers over ``omegas``.

    Raises ``numpy.linalg.LinAlgError`` if a matrix is exactly singular.
    """
    args = [np.ascontiguousarray(x, dtype=np.complex128) for x in (A10, A21, iB10, C10, C21, C1021)]
    omegas = np.ascontiguousarray(omegas, dtype=np.float64)
    if _backend == "numba":
        z, kappa, failed = _sweep_numba(*args, omegas)
        if failed >= 0:
            raise np.linalg.LinAlgError(f"singular matrix at omega={omegas[failed]!r}")
        return z, kappa
    return _sweep_numpy(*args, omegas)
