"""Laplace-domain solutions of the coupled-set equations.

With the atom initially in the upper state only the chains
``(2,2) -> (1,1) -> (0,0)`` (populations and coherences) and
``(2,1) -> (1,0)`` (evolution operators used by the regression theorem)
carry any weight. Their transforms follow from dense solves of
``(s + i A) x = rhs``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import build_A, build_B
from .model import ParameterError, SetId, SystemParams

__all__ = [
    "COND_LIMIT",
    "ResolventPoleError",
    "ResolventBundle",
    "shifted_matrix",
    "resolvent_apply",
    "resolvent_matrix",
    "rho_tilde",
    "u_tilde",
    "resolvent_bundle",
    "initial_rho22",
]

COND_LIMIT = 1e12


class ResolventPoleError(ArithmeticError):
    """``s + iA`` is singular (or numerically so) for the requested set."""

    def __init__(self, s_set, s, cond):
        self.set = s_set if isinstance(s_set, str) else SetId(*s_set)
        self.s = complex(s)
        self.cond = cond
        super().__init__(
            f"resolvent pole: set {self.set} at s={self.s!r} (condition estimate {cond:.3g})"
        )


def initial_rho22() -> np.ndarray:
    """Set (2,2) at t = 0: the atom in the upper state, cavity empty."""
    v = np.zeros(9, dtype=np.complex128)
    v[0] = 1.0
    return v


def shifted_matrix(s_set, s: complex, params: SystemParams) -> np.ndarray:
    """``s I + i A(set)``."""
    A = np.asarray(build_A(s_set, params))
    return s * np.eye(A.shape[0]) + 1j * A


def _condition(M: np.ndarray, Minv: np.ndarray) -> float:
    return float(np.linalg.norm(M, 1) * np.linalg.norm(Minv, 1))


def resolvent_matrix(s_set, s: complex, params: SystemParams) -> np.ndarray:
    """``(s I + i A(set))^-1`` with a condition guard at :data:`COND_LIMIT`."""
    M = shifted_matrix(s_set, s, params)
    try:
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        raise ResolventPoleError(s_set, s, np.inf) from None
    cond = _condition(M, Minv)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ResolventPoleError(s_set, s, cond)
    return Minv


def resolvent_apply(s_set, s: complex, rhs, params: SystemParams) -> np.ndarray:
    """Solve ``(s + i A(set)) x = rhs`` by LU with partial pivoting.

    Parameters
    ----------
    s_set : SetId or tuple
        Coupled set.
    s : complex
        Laplace variable.
    rhs : array_like
        Vector of length ``set_dimension(s_set)``, or a matrix with that many rows.
    params : SystemParams

    Raises
    ------
    ResolventPoleError
        If the system is singular or its 1-norm condition estimate exceeds 1e12.
    """
    M = shifted_matrix(s_set, s, params)
    rhs = np.asarray(rhs, dtype=np.complex128)
    if rhs.shape[0] != M.shape[0]:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, set {SetId(*s_set)} needs {M.shape[0]}")
    try:
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        raise ResolventPoleError(s_set, s, np.inf) from None
    cond = _condition(M, Minv)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ResolventPoleError(s_set, s, cond)
    return np.linalg.solve(M, rhs)


def _check_chain(params: SystemParams, s: complex):
    if params.gamma <= 0:
        raise ParameterError(f"gamma must be > 0, got {params.gamma}")
    if s == 0:
        params.validate_spectral()


def rho_tilde(params: SystemParams, s: complex = 0.0) -> dict:
    """Transforms of the (2,2) and (1,1) sets for the upper-state initial condition.

    Returns ``{"rho22": 9-vector, "rho11": 4-vector}``. Set (0,0) is left out:
    its matrix vanishes, so ``s = 0`` is a true pole there.
    """
    _check_chain(params, s)
    rho22 = resolvent_apply((2, 2), s, initial_rho22(), params)
    B11 = np.asarray(build_B((1, 1), params))
    rho11 = resolvent_apply((1, 1), s, 1j * B11 @ rho22, params)
    return {"rho22": rho22, "rho11": rho11}


def u_tilde(params: SystemParams, s: complex) -> dict:
    """Transformed evolution matrices of the (2,1) -> (1,0) chain.

    Returns ``u1010`` (2x2), ``u2121`` (6x6) and ``u1021`` (2x6).
    """
    u1010 = resolvent_matrix((1, 0), s, params)
    u2121 = resolvent_matrix((2, 1), s, params)
    B10 = np.asarray(build_B((1, 0), params))
    u1021 = u1010 @ (1j * B10) @ u2121
    return {"u1010": u1010, "u2121": u2121, "u1021": u1021}


@dataclass(frozen=True)
class ResolventBundle:
    """Everything the spectrum formulas consume at one frequency."""

    rho22: np.ndarray
    rho11: np.ndarray
    u1010: np.ndarray
    u2121: np.ndarray
    u1021: np.ndarray

    _SHAPES = {"rho22": (9,), "rho11": (4,), "u1010": (2, 2), "u2121": (6, 6), "u1021": (2, 6)}

    def __post_init__(self):
        for name, shape in self._SHAPES.items():
            arr = np.array(getattr(self, name), dtype=np.complex128)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def resolvent_bundle(params: SystemParams, delta_omega: float) -> ResolventBundle:
    """``rho_tilde`` at ``s = 0`` and ``u_tilde`` at ``s = -i * delta_omega``."""
    return ResolventBundle(**rho_tilde(params, 0.0), **u_tilde(params, -1j * delta_omega))

