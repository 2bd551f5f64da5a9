"""Coefficient matrices of the coupled-set equations and the full Liouvillian.

Each coupled set obeys ``d rho(n,m)/dt = -i A(n,m) rho(n,m) + i B(n,m) rho(n+1,m+1)``.
Everything is expressed in the frame rotating at the cavity frequency, so the
``omega_c (n - m)`` identity shift of the lab-frame matrices is absent.

The rotating-frame Hamiltonian has level energies ``-(delta + delta_bar)`` for
the upper state, ``0`` for the middle state and ``delta - delta_bar`` for the
lower state, independent of photon number. With that choice the projection of
the full Liouvillian onto any coupled set reproduces ``A`` and ``B`` exactly
(see :func:`validate_blocks`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    SetId,
    SystemParams,
    UnknownSetError,
    ParameterError,
    BUILDER_SETS,
    element_ordering,
    is_builder_set,
    set_dimension,
)

__all__ = [
    "BlockMatrix",
    "FullLiouvillian",
    "ERRATA",
    "build_A",
    "build_B",
    "build_A_general",
    "build_B_general",
    "build_full_liouvillian",
    "rotating_hamiltonian",
    "annihilation",
    "state_index",
    "set_vec_indices",
    "validate_blocks",
    "projected_block",
]

SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)
SQ6 = np.sqrt(6.0)


@dataclass(frozen=True)
class BlockMatrix:
    source_set: SetId
    target_set: SetId
    entries: np.ndarray

    def __post_init__(self):
        shape = (set_dimension(self.source_set), set_dimension(self.target_set))
        if self.entries.shape != shape:
            raise ValueError(f"block shape {self.entries.shape} != {shape}")
        self.entries.setflags(write=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


# Entries of the commonly quoted explicit matrices that disagree with the
# projected master equation. Entries are
# (set, row, col, printed expression, expression consistent with the master equation).
ERRATA = (
    (SetId(2, 1), 0, 0, "-delta + delta_bar", "-(delta + delta_bar)"),
)


def _printed_A(s: SetId, p: SystemParams) -> np.ndarray:
    g1, g2, G, d, db = p.g1, p.g2, p.gamma, p.delta, p.delta_bar
    h = 0.5j * G
    if s == (0, 0):
        return np.zeros((1, 1), complex)
    if s == (1, 0):
        return np.array([[-d + db, g1],
                         [g1, -h]], complex)
    if s == (1, 1):
        return np.array([
            [0, -g1, g1, 0],
            [-g1, -d + db - h, 0, g1],
            [g1, 0, d - db - h, -g1],
            [0, g1, -g1, -2 * h],
        ], complex)
    if s == (2, 1):
        return np.array([
            [-d + db, -g1, g2, 0, 0, 0],
            [-g1, -2 * d - h, 0, g2, 0, 0],
            [g2, 0, -h, -g1, SQ2 * g1, 0],
            [0, g2, -g1, -d + db - 2 * h, 0, SQ2 * g1],
            [0, 0, SQ2 * g1, 0, d - db - 2 * h, -g1],
            [0, 0, 0, SQ2 * g1, -g1, -3 * h],
        ], complex)
    if s == (2, 2):
        a = SQ2 * g1
        return np.array([
            [0, -g2, 0, g2, 0, 0, 0, 0, 0],
            [-g2, -(d + db) - h, -a, 0, g2, 0, 0, 0, 0],
            [0, -a, -2 * d - 2 * h, 0, 0, g2, 0, 0, 0],
            [g2, 0, 0, (d + db) - h, -g2, 0, a, 0, 0],
            [0, g2, 0, -g2, -2 * h, -a, 0, a, 0],
            [0, 0, g2, 0, -a, (-d + db) - 3 * h, 0, 0, a],
            [0, 0, 0, a, 0, 0, 2 * d - 2 * h, -g2, 0],
            [0, 0, 0, 0, a, 0, -g2, -(-d + db) - 3 * h, -a],
            [0, 0, 0, 0, 0, a, 0, -a, -4 * h],
        ], complex)
    raise UnknownSetError(f"unknown set {s}")


def build_A_general(s, params: SystemParams) -> np.ndarray:
    """The 9x9 intra-set matrix valid for ``n, m >= 2``."""
    n, m = SetId(*s)
    if n < 2 or m < 2:
        raise UnknownSetError(f"general form needs n, m >= 2, got {SetId(n, m)}")
    g1, g2, G, d, db = params.g1, params.g2, params.gamma, params.delta, params.delta_bar
    p = n + m
    h = 0.5j * G
    a2n, a2m = g2 * np.sqrt(n - 1), g2 * np.sqrt(m - 1)
    a1n, a1m = g1 * np.sqrt(n), g1 * np.sqrt(m)
    return np.array([
        [-h * (p - 4), -a2m, 0, a2n, 0, 0, 0, 0, 0],
        [-a2m, -(d + db) - h * (p - 3), -a1m, 0, a2n, 0, 0, 0, 0],
        [0, -a1m, -2 * d - h * (p - 2), 0, 0, a2n, 0, 0, 0],
        [a2n, 0, 0, (d + db) - h * (p - 3), -a2m, 0, a1n, 0, 0],
        [0, a2n, 0, -a2m, -h * (p - 2), -a1m, 0, a1n, 0],
        [0, 0, a2n, 0, -a1m, (-d + db) - h * (p - 1), 0, 0, a1n],
        [0, 0, 0, a1n, 0, 0, 2 * d - h * (p - 2), -a2m, 0],
        [0, 0, 0, 0, a1n, 0, -a2m, -(-d + db) - h * (p - 1), -a1m],
        [0, 0, 0, 0, 0, a1n, 0, -a1m, -h * p],
    ], complex)


def build_B_general(s, params: SystemParams) -> np.ndarray:
    n, m = SetId(*s)
    if n < 2 or m < 2:
        raise UnknownSetError(f"general form needs n, m >= 2, got {SetId(n, m)}")
    diag = [np.sqrt(a * b) for a in (n - 1, n, n + 1) for b in (m - 1, m, m + 1)]
    return -1j * params.gamma * np.diag(np.asarray(diag, complex))


def build_A(s, params: SystemParams, as_printed: bool = False) -> BlockMatrix:
    """Intra-set matrix ``A(n,m)`` in the rotating frame.

    ``as_printed=True`` returns the commonly quoted form, including
    the entries listed in :data:`ERRATA`; the default applies the corrections.
    """
    s = SetId(*s)
    if not is_builder_set(s):
        raise UnknownSetError(f"unknown set {s}")
    if s in BUILDER_SETS:
        a = _printed_A(s, params)
        if not as_printed:
            for es, r, c, _, _ in ERRATA:
                if es == s:
                    a[r, c] = _corrected_entry(es, r, c, params)
    else:
        a = build_A_general(s, params)
    return BlockMatrix(s, s, a)


def _corrected_entry(s, r, c, p: SystemParams) -> complex:
    if (s, r, c) == ((2, 1), 0, 0):
        return complex(-(p.delta + p.delta_bar))
    raise KeyError((s, r, c))


def build_B(s, params: SystemParams) -> BlockMatrix:
    """Coupling ``B(n,m)`` from set ``(n+1, m+1)`` into set ``(n, m)``."""
    s = SetId(*s)
    if not is_builder_set(s):
        raise UnknownSetError(f"unknown set {s}")
    target = SetId(s.n + 1, s.m + 1)
    G = params.gamma
    if s == (0, 0):
        b = np.zeros((1, 4), complex)
        b[0, 3] = -1j * G
    elif s == (1, 0):
        b = np.zeros((2, 6), complex)
        b[0, 3] = -1j * G
        b[1, 5] = -1j * SQ2 * G
    elif s == (1, 1):
        b = np.zeros((4, 9), complex)
        b[0, 4] = -1j * G
        b[1, 5] = -1j * SQ2 * G
        b[2, 7] = -1j * SQ2 * G
        b[3, 8] = -2j * G
    elif s == (2, 1):
        b = np.zeros((6, 9), complex)
        b[0, 1] = -1j * G
        b[1, 2] = -1j * SQ2 * G
        b[2, 4] = -1j * SQ2 * G
        b[3, 5] = -2j * G
        b[4, 7] = -1j * SQ3 * G
        b[5, 8] = -1j * SQ6 * G
    else:
        b = build_B_general(s, params)
    return BlockMatrix(s, target, b)


# ---------------------------------------------------------------------------
# full atom x cavity space
# ---------------------------------------------------------------------------

def state_index(k: int, nu: int) -> int:
    """Position of ``|k; nu>`` in the product basis (photon-major)."""
    return 3 * k + nu


def annihilation(n_max: int) -> np.ndarray:
    """Cavity ``a`` on the truncated atom x cavity space."""
    dim = 3 * (n_max + 1)
    a = np.zeros((dim, dim), complex)
    for k in range(1, n_max + 1):
        for nu in range(3):
            a[state_index(k - 1, nu), state_index(k, nu)] = np.sqrt(k)
    return a


def atomic_lowering(n_max: int, upper: int) -> np.ndarray:
    """``|upper-1><upper|`` tensored with the cavity identity (upper = 1 or 2)."""
    dim = 3 * (n_max + 1)
    op = np.zeros((dim, dim), complex)
    for k in range(n_max + 1):
        op[state_index(k, upper - 1), state_index(k, upper)] = 1.0
    return op


def rotating_hamiltonian(n_max: int, params: SystemParams) -> np.ndarray:
    dim = 3 * (n_max + 1)
    energies = {2: -(params.delta + params.delta_bar), 1: 0.0, 0: params.delta - params.delta_bar}
    H = np.zeros((dim, dim), complex)
    for k in range(n_max + 1):
        for nu in range(3):
            H[state_index(k, nu), state_index(k, nu)] = energies[nu]
    for k in range(n_max):
        # a^dag sigma_2^- : |k;2> -> |k+1;1>,  a^dag sigma_1^- : |k;1> -> |k+1;0>
        for nu, g in ((2, params.g2), (1, params.g1)):
            i, j = state_index(k + 1, nu - 1), state_index(k, nu)
            H[i, j] = g * np.sqrt(k + 1)
            H[j, i] = g * np.sqrt(k + 1)
    return H


@dataclass(frozen=True)
class FullLiouvillian:
    """Superoperator on row-major ``vec(rho)``: ``vec(rho)[i*D + j] = rho[i, j]``."""

    n_max: int
    params: SystemParams
    entries: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 3 * (self.n_max + 1)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def build_full_liouvillian(n_max: int, params: SystemParams) -> FullLiouvillian:
    """Lindblad generator with cavity loss ``(G/2)([a, rho a^+] + [a rho, a^+])``."""
    if n_max < 2:
        raise ParameterError(f"n_max must be >= 2 (initial state reaches two photons), got {n_max}")
    H = rotating_hamiltonian(n_max, params)
    a = annihilation(n_max)
    eye = np.eye(H.shape[0])
    ada = a.conj().T @ a
    # row-major: vec(X rho Y) = kron(X, Y.T) vec(rho)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    L += params.gamma * (np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T))
    return FullLiouvillian(n_max, params, L)


def set_vec_indices(s, n_max: int) -> np.ndarray:
    """Row-major vec positions of the elements of set ``s`` in canonical order."""
    dim = 3 * (n_max + 1)
    out = []
    for lab in element_ordering(s):
        (k, nu), (l, lam) = lab
        if k > n_max or l > n_max:
            raise ParameterError(f"set {SetId(*s)} exceeds truncation n_max={n_max}")
        out.append(state_index(k, nu) * dim + state_index(l, lam))
    return np.asarray(out, dtype=np.int64)


def validate_blocks(params: SystemParams, n_max: int = 3, sets=None) -> dict:
    """Compare every block against the projection of the full Liouvillian.

    Returns a report with, per set, the maximum deviation of ``-iA`` and ``iB``
    from the projected generator, the deviation of the commonly quoted
    matrix, and the leakage of the set into any other coupled set.
    """
    L = build_full_liouvillian(n_max, params).entries
    if sets is None:
        sets = list(BUILDER_SETS) + [SetId(3, 2), SetId(2, 3), SetId(3, 3)]
    report = {"params": params.to_dict(), "n_max": n_max, "errata": [], "sets": {}}
    for es, r, c, printed, corrected in ERRATA:
        report["errata"].append(
            {"set": list(es), "row": r, "col": c, "printed": printed, "used": corrected}
        )
    for s in sets:
        s = SetId(*s)
        try:
            rows = set_vec_indices(s, n_max)
        except ParameterError:
            continue
        A = build_A(s, params).entries
        proj_A = L[np.ix_(rows, rows)]
        entry = {
            "A_dev": float(np.max(np.abs(proj_A - (-1j) * A))),
        }
        if s in BUILDER_SETS:
            entry["A_printed_dev"] = float(
                np.max(np.abs(proj_A - (-1j) * build_A(s, params, as_printed=True).entries))
            )
        cols_used = set(rows.tolist())
        target = SetId(s.n + 1, s.m + 1)
        if target.n <= n_max and target.m <= n_max:
            tcols = set_vec_indices(target, n_max)
            entry["B_dev"] = float(np.max(np.abs(L[np.ix_(rows, tcols)] - 1j * build_B(s, params).entries)))
            cols_used |= set(tcols.tolist())
            other = np.setdiff1d(np.arange(L.shape[1]), np.fromiter(cols_used, int))
            entry["leakage"] = float(np.max(np.abs(L[np.ix_(rows, other)]))) if other.size else 0.0
        report["sets"][str(s)] = entry
    devs = [v for e in report["sets"].values() for k, v in e.items() if k in ("A_dev", "B_dev", "leakage")]
    report["max_dev"] = max(devs) if devs else 0.0
    return report


def projected_block(s, params: SystemParams, n_max: int = 2) -> tuple:
    """``(A, B)`` for set ``s`` read off the full Liouvillian.

    Works for any set with a defined ordering, including the conjugate sets
    that have no literal builder. ``B`` is ``None`` when the target set
    ``(n+1, m+1)`` lies beyond the truncation.
    """
    s = SetId(*s)
    L = build_full_liouvillian(n_max, params).entries
    rows = set_vec_indices(s, n_max)
    A = 1j * L[np.ix_(rows, rows)]
    B = None
    try:
        cols = set_vec_indices((s.n + 1, s.m + 1), n_max)
    except (ParameterError, UnknownSetError):
        cols = None
    if cols is not None:
        B = -1j * L[np.ix_(rows, cols)]
    return A, B
