"""Parameters, coupled-set identities and element orderings.

Density-matrix elements are written ``rho_{k nu; l lam}`` where ``k``/``l`` are
cavity photon numbers and ``nu``/``lam`` are atomic levels (2 upper, 1 middle,
0 lower). The coupled set ``(n, m)`` is anchored at ``rho_{n0; m0}`` and holds
every element reachable from it through the reversible atom-cavity coupling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "SystemParams",
    "DetectorParams",
    "SetId",
    "ElementLabel",
    "UnknownSetError",
    "LabelSetMismatchError",
    "ParameterError",
    "BUILDER_SETS",
    "LABEL_ONLY_SETS",
    "manifold",
    "set_dimension",
    "element_ordering",
    "label_to_index",
    "is_builder_set",
    "check_detector_ratio",
]


class ParameterError(ValueError):
    """Raised when physical parameters violate a precondition."""


class UnknownSetError(ValueError):
    """Raised for a coupled set that has no defined ordering or builder."""


class LabelSetMismatchError(KeyError):
    """Raised when an element label does not belong to the requested set."""


@dataclass(frozen=True)
class SystemParams:
    """Atom-cavity constants in the cavity rotating frame (hbar = 1).

    Attributes
    ----------
    g1, g2 : float
        One-photon Rabi frequencies of the 1<->0 and 2<->1 transitions.
    gamma : float
        Cavity decay rate.
    delta : float
        Cavity detuning from the mean atomic transition frequency.
    delta_bar : float
        Half the difference lower minus upper transition frequency.
    """

    g1: float = 1.0
    g2: float = 1.0
    gamma: float = 0.1
    delta: float = 0.0
    delta_bar: float = 0.0

    def __post_init__(self):
        for name in ("g1", "g2", "gamma", "delta", "delta_bar"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))

    def validate_spectral(self):
        """Check the strict positivity needed on the spectral (s = 0) path."""
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if self.g1 <= 0 or self.g2 <= 0:
            raise ParameterError(
                f"g1 and g2 must be > 0 on the spectral path, got g1={self.g1}, g2={self.g2}"
            )

    def scaled(self, factor: float) -> "SystemParams":
        return SystemParams(
            g1=self.g1 * factor,
            g2=self.g2 * factor,
            gamma=self.gamma * factor,
            delta=self.delta * factor,
            delta_bar=self.delta_bar * factor,
        )

    def to_dict(self) -> dict:
        return {
            "g1": self.g1,
            "g2": self.g2,
            "gamma": self.gamma,
            "delta": self.delta,
            "delta_bar": self.delta_bar,
        }


@dataclass(frozen=True)
class DetectorParams:
    """Detector couplings: ``mu`` (case A), ``m_eff`` (case B), ``r1``/``r2`` (case C)."""

    mu: float = 1.0
    m_eff: float = 1.0
    r1: float = 1.0
    r2: float = 1.0

    def __post_init__(self):
        for name in ("mu", "m_eff", "r1", "r2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, float(value))

    def to_dict(self) -> dict:
        return {"mu": self.mu, "m_eff": self.m_eff, "r1": self.r1, "r2": self.r2}


def check_detector_ratio(params: SystemParams, detector: DetectorParams,
                         strict: bool = False, rtol: float = 1e-9) -> bool:
    """Check ``r2 / r1 == g2 / g1`` (both dipole couplings share one matrix element).

    Returns True when the ratio holds (or is undefined). Otherwise warns, or
    raises ParameterError when ``strict``.
    """
    if detector.r1 == 0 or params.g1 == 0:
        return True
    lhs = detector.r2 / detector.r1
    rhs = params.g2 / params.g1
    if math.isclose(lhs, rhs, rel_tol=rtol):
        return True
    msg = f"detector ratio r2/r1={lhs:.6g} differs from g2/g1={rhs:.6g}"
    if strict:
        raise ParameterError(msg)
    warnings.warn(msg, stacklevel=2)
    return False


class SetId(NamedTuple):
    n: int
    m: int

    def __str__(self):
        return f"({self.n},{self.m})"


State = tuple  # (photon number, atomic level)


class ElementLabel(NamedTuple):
    """One density-matrix element ``rho_{row; col}``; each side is (photons, level)."""

    row: State
    col: State

    @classmethod
    def parse(cls, text: str) -> "ElementLabel":
        """Parse compact notation such as ``"02,11"`` or ``"02;11"``.

        Each side is two digits: photon number then atomic level.
        """
        left, right = text.replace(";", ",").replace(" ", "").split(",")
        if len(left) != 2 or len(right) != 2:
            raise ValueError(f"cannot parse element label {text!r}")
        return cls((int(left[0]), int(left[1])), (int(right[0]), int(right[1])))

    def swapped(self) -> "ElementLabel":
        return ElementLabel(self.col, self.row)

    def __str__(self):
        return f"{self.row[0]}{self.row[1]},{self.col[0]}{self.col[1]}"


BUILDER_SETS = (SetId(0, 0), SetId(1, 0), SetId(1, 1), SetId(2, 1), SetId(2, 2))
# conjugates of builder sets; orderings exist for hermiticity checks only
LABEL_ONLY_SETS = (SetId(0, 1), SetId(0, 2), SetId(2, 0), SetId(1, 2))


def manifold(k: int) -> tuple:
    """States coupled reversibly to ``|k;0>``: ``|k-2;2>, |k-1;1>, |k;0>`` (k-j >= 0)."""
    if k < 0:
        raise UnknownSetError(f"negative photon index {k}")
    return tuple((k - 2 + j, 2 - j) for j in range(3) if k - 2 + j >= 0)


def is_builder_set(s) -> bool:
    s = SetId(*s)
    return s in BUILDER_SETS or (s.n >= 2 and s.m >= 2)


def _check_known(s) -> SetId:
    try:
        s = SetId(int(s[0]), int(s[1]))
    except (TypeError, ValueError, IndexError):
        raise UnknownSetError(f"unknown set {s!r}") from None
    if not (is_builder_set(s) or s in LABEL_ONLY_SETS):
        raise UnknownSetError(f"unknown set {s}")
    return s


def set_dimension(s) -> int:
    s = _check_known(s)
    return len(manifold(s.n)) * len(manifold(s.m))


_ORDER_CACHE: dict = {}


def element_ordering(s) -> list:
    """Elements of set ``s`` in the canonical order (row state major, column minor)."""
    s = _check_known(s)
    if s not in _ORDER_CACHE:
        _ORDER_CACHE[s] = tuple(
            ElementLabel(r, c) for r in manifold(s.n) for c in manifold(s.m)
        )
    return list(_ORDER_CACHE[s])


def label_to_index(s, label) -> int:
    """Zero-based position of ``label`` inside set ``s``; accepts ``"11,01"`` strings."""
    if isinstance(label, str):
        label = ElementLabel.parse(label)
    label = ElementLabel(tuple(label[0]), tuple(label[1]))
    order = element_ordering(s)
    try:
        return order.index(label)
    except ValueError:
        raise LabelSetMismatchError(f"label/set mismatch: {label} is not in set {SetId(*s)}") from None
