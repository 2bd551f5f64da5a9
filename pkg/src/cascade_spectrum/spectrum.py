"""Operational spectrum of the cascade emitter for the three detector placements.

The spectrum is ``2 Re z(dw)`` with

    z(dw) = sum_{r,c} T[r] * U~(r, c; s=-i dw) * X[c]

where ``X = rho~(s=0) V+`` is the detector raising operator applied from the
right to the transformed density matrix, ``U~`` propagates that coherence in
the ``(2,1) -> (1,0)`` chain and ``T`` takes the trace against the detector
lowering operator. ``X`` and ``T`` are spelled out below as wiring tables keyed
by element labels, which :func:`~cascade_spectrum.model.label_to_index` turns
into matrix slots.

Case A
    Detector on the cavity axis, sensitive to the field: ``V- = mu a``.
Case B
    Detector beside the cavity in a field-like mode; same kernel as Case A
    scaled by ``m_eff**2``.
Case C
    Detector beside the cavity coupled to the atomic dipole:
    ``V- = r2 |1><2| + r1 |0><1|``.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .blocks import build_A, build_B, projected_block
from .model import DetectorParams, ElementLabel, SystemParams, label_to_index
from .resolvent import COND_LIMIT, ResolventPoleError, rho_tilde, u_tilde

__all__ = [
    "SpectrumCase",
    "WiringTable",
    "CASE_A_WIRING",
    "CASE_A_WIRING_AS_PRINTED",
    "CASE_C_WIRING",
    "SpectrumTable",
    "PeakList",
    "SweepError",
    "coefficient_matrices",
    "spectrum_case_a",
    "spectrum_case_b",
    "spectrum_case_c",
    "spectrum_point",
    "sweep",
    "find_peaks",
    "default_grid",
    "DEFAULT_POINTS",
    "DEFAULT_PROMINENCE",
    "REALNESS_TOL",
    "REALNESS_FLOOR",
]

DEFAULT_POINTS = 4001
DEFAULT_PROMINENCE = 1e-2
REALNESS_TOL = 1e-10
# Floor for the realness ratio, relative to the largest |S| of the sweep.
# Without it, points deep inside a spectral hole (|S| ~ 1e-10 of the peak)
# compare pure rounding noise against a value near zero.
REALNESS_FLOOR = 1e-3


class SpectrumCase(enum.Enum):
    A = "A"
    B = "B"
    C = "C"

    @classmethod
    def parse(cls, value) -> "SpectrumCase":
        if isinstance(value, cls):
            return value
        text = str(value).strip().upper()
        if text.startswith("CASE"):
            text = text[4:].strip()
        return cls(text)


class SweepError(RuntimeError):
    """A point of a sweep failed; ``delta_omega`` names it."""

    def __init__(self, delta_omega, cause):
        self.delta_omega = float(delta_omega)
        super().__init__(f"spectrum evaluation failed at delta_omega={self.delta_omega!r}: {cause}")


# ---------------------------------------------------------------------------
# wiring tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WiringTable:
    """Detector operators written as element-label tables.

    ``trace21``/``trace10`` list ``(label, weight)`` pairs: the element of the
    propagated coherence in set (2,1) or (1,0) picked up by ``Tr[V- X]``.
    ``feed21``/``feed10`` list ``(target, source, weight)``: the coherence
    element ``target`` of ``rho V+`` equals ``weight * rho[source]``, with the
    source in set (2,2) or (1,1). Weights are ``*``-separated products of
    ``1``, ``sqrt2``, ``r1`` and ``r2``.
    """

    trace21: tuple
    trace10: tuple
    feed21: tuple
    feed10: tuple


# V- = a: Tr[a X] picks X_{k+1 nu; k nu} sqrt(k+1); (rho a^+)_{x; k nu} = sqrt(k+1) rho_{x; k+1 nu}
CASE_A_WIRING = WiringTable(
    trace21=(("11,01", "1"), ("20,10", "sqrt2")),
    trace10=(("10,00", "1"),),
    feed21=(
        ("02,01", "02,11", "1"),
        ("02,10", "02,20", "sqrt2"),
        ("11,01", "11,11", "1"),
        ("11,10", "11,20", "sqrt2"),
        ("20,01", "20,11", "1"),
        ("20,10", "20,20", "sqrt2"),
    ),
    feed10=(
        ("01,00", "01,10", "1"),
        ("10,00", "10,10", "1"),
    ),
)

# Alternative pairing of the two (1,1) sources, as found in the commonly quoted closed form.
# Kept for comparison only; the two-time quadrature rejects it.
CASE_A_WIRING_AS_PRINTED = WiringTable(
    trace21=CASE_A_WIRING.trace21,
    trace10=CASE_A_WIRING.trace10,
    feed21=CASE_A_WIRING.feed21,
    feed10=(
        ("01,00", "10,10", "1"),
        ("10,00", "01,10", "1"),
    ),
)

# V- = r2 |1><2| + r1 |0><1|, diagonal in photon number
CASE_C_WIRING = WiringTable(
    trace21=(("02,01", "r2"), ("11,10", "r1")),
    trace10=(("01,00", "r1"),),
    feed21=(
        ("02,01", "02,02", "r2"),
        ("11,01", "11,02", "r2"),
        ("20,01", "20,02", "r2"),
        ("02,10", "02,11", "r1"),
        ("11,10", "11,11", "r1"),
        ("20,10", "20,11", "r1"),
    ),
    feed10=(
        ("01,00", "01,01", "r1"),
        ("10,00", "10,01", "r1"),
    ),
)


def _weight(expr: str, detector: DetectorParams) -> float:
    values = {"1": 1.0, "sqrt2": math.sqrt(2.0), "r1": detector.r1, "r2": detector.r2}
    out = 1.0
    for token in expr.split("*"):
        out *= values[token.strip()]
    return out


def _swap(label: str) -> ElementLabel:
    return ElementLabel.parse(label).swapped()


def coefficient_matrices(wiring: WiringTable, rho22, rho11, detector: DetectorParams,
                         conjugate: bool = False) -> tuple:
    """Contract the wiring table with density-matrix data.

    Returns ``(C10, C21, C1021)`` such that
    ``z = sum(C10*U1010) + sum(C21*U2121) + sum(C1021*U1021)``.

    With ``conjugate=True`` every label is swapped, giving the coefficients
    for the mirror-image chain ``(1,2) -> (0,1)`` that carries ``Tr[V+ X]``
    with ``X = V- rho``.
    """
    s21, s10, s22, s11 = ((1, 2), (0, 1), (2, 2), (1, 1)) if conjugate else ((2, 1), (1, 0), (2, 2), (1, 1))
    lab = _swap if conjugate else ElementLabel.parse
    T21 = np.zeros(6, complex)
    T10 = np.zeros(2, complex)
    X21 = np.zeros(6, complex)
    X10 = np.zeros(2, complex)
    for target, w in wiring.trace21:
        T21[label_to_index(s21, lab(target))] += _weight(w, detector)
    for target, w in wiring.trace10:
        T10[label_to_index(s10, lab(target))] += _weight(w, detector)
    for target, source, w in wiring.feed21:
        X21[label_to_index(s21, lab(target))] += _weight(w, detector) * rho22[label_to_index(s22, lab(source))]
    for target, source, w in wiring.feed10:
        X10[label_to_index(s10, lab(target))] += _weight(w, detector) * rho11[label_to_index(s11, lab(source))]
    return np.outer(T10, X10), np.outer(T21, X21), np.outer(T10, X21)


def _wiring_and_scale(case: SpectrumCase, detector: DetectorParams, printed: bool = False):
    if case is SpectrumCase.A:
        return (CASE_A_WIRING_AS_PRINTED if printed else CASE_A_WIRING), detector.mu ** 2
    if case is SpectrumCase.B:
        return (CASE_A_WIRING_AS_PRINTED if printed else CASE_A_WIRING), detector.m_eff ** 2
    return CASE_C_WIRING, 1.0


# ---------------------------------------------------------------------------
# single-point evaluation (numpy, via the resolvent module)
# ---------------------------------------------------------------------------

def _z_point(case, delta_omega, params, detector, printed=False):
    wiring, scale = _wiring_and_scale(case, detector, printed)
    rho = rho_tilde(params, 0.0)
    u = u_tilde(params, -1j * float(delta_omega))
    C10, C21, C1021 = coefficient_matrices(wiring, rho["rho22"], rho["rho11"], detector)
    z = np.sum(C10 * u["u1010"]) + np.sum(C21 * u["u2121"]) + np.sum(C1021 * u["u1021"])
    return scale * z


def spectrum_point(case, delta_omega: float, params: SystemParams, detector: DetectorParams,
                   printed: bool = False) -> float:
    """``S(delta_omega)`` for any case by direct resolvent solves."""
    case = SpectrumCase.parse(case)
    params.validate_spectral()
    return float(2.0 * _z_point(case, delta_omega, params, detector, printed).real)


def spectrum_case_a(delta_omega: float, params: SystemParams, detector: DetectorParams = DetectorParams(),
                    printed: bool = False) -> float:
    """Field-sensitive detector on the cavity axis.

    ``printed=True`` swaps the two (1,1) sources of the one-photon term, which
    reproduces the commonly quoted closed form instead of the regression-theorem
    result; it exists only to document the difference.
    """
    return spectrum_point(SpectrumCase.A, delta_omega, params, detector, printed)


def spectrum_case_b(delta_omega: float, params: SystemParams, detector: DetectorParams = DetectorParams()) -> float:
    """Side detector coupled to a field-like mode: Case A scaled by ``m_eff**2``."""
    return spectrum_point(SpectrumCase.B, delta_omega, params, detector)


def spectrum_case_c(delta_omega: float, params: SystemParams, detector: DetectorParams = DetectorParams()) -> float:
    """Side detector coupled to the atomic dipole with strengths ``r1``, ``r2``."""
    return spectrum_point(SpectrumCase.C, delta_omega, params, detector)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumTable:
    """Spectrum values on an ascending grid of detector detunings."""

    grid: np.ndarray
    values: np.ndarray
    params: SystemParams
    detector: DetectorParams
    case: SpectrumCase
    imag_residue: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a nonempty 1-d array")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if np.iscomplexobj(values):
            raise TypeError("spectrum values must be real")
        values = values.astype(float)
        if values.shape != grid.shape:
            raise ValueError("values and grid differ in length")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "case", SpectrumCase.parse(self.case))

    def __len__(self):
        return self.grid.size

    def negativity(self) -> float:
        """``min(values) / max(values)``; mildly negative values flag numerical trouble."""
        top = float(np.max(self.values))
        return float(np.min(self.values)) / top if top > 0 else 0.0


def default_grid(params: SystemParams, points: int = DEFAULT_POINTS) -> np.ndarray:
    """``points`` uniform detunings over ``[-4 g2, 4 g2]``."""
    if points < 2:
        raise ValueError("a grid needs at least 2 points")
    return np.linspace(-4.0 * params.g2, 4.0 * params.g2, int(points))


def _chain_matrices(params: SystemParams, conjugate: bool):
    if not conjugate:
        A10 = build_A((1, 0), params).entries
        A21 = build_A((2, 1), params).entries
        iB10 = 1j * build_B((1, 0), params).entries
    else:
        A10, B01 = projected_block((0, 1), params)
        A21, _ = projected_block((1, 2), params)
        iB10 = 1j * B01
    return A10, A21, iB10


def _run_kernel(mats, coeffs, omegas, workers):
    if workers <= 1 or omegas.size < 2 * workers:
        return _kernels.resolvent_sweep(*mats, *coeffs, omegas)
    chunks = np.array_split(omegas, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: _kernels.resolvent_sweep(*mats, *coeffs, c), chunks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _guarded_kernel(mats, coeffs, omegas, workers, grid, chain):
    try:
        z, kappa = _run_kernel(mats, coeffs, omegas, workers)
    except np.linalg.LinAlgError as exc:
        for i in range(omegas.size):
            try:
                _kernels.resolvent_sweep(*mats, *coeffs, omegas[i:i + 1])
            except np.linalg.LinAlgError:
                raise SweepError(grid[i], ResolventPoleError(chain, -1j * grid[i], np.inf)) from exc
        raise
    bad = np.flatnonzero(~np.isfinite(kappa) | (kappa > COND_LIMIT))
    if bad.size:
        i = int(bad[0])
        raise SweepError(grid[i], ResolventPoleError(chain, -1j * grid[i], float(kappa[i])))
    return z


def sweep(case, grid, params: SystemParams, detector: DetectorParams = DetectorParams(),
          workers: int = 1, check_real: bool = True, printed: bool = False) -> SpectrumTable:
    """Evaluate the spectrum on ``grid``.

    Parameters
    ----------
    case : SpectrumCase or str
    grid : array_like
        Strictly increasing detector detunings.
    params, detector
        Physical and detector constants.
    workers : int
        Number of threads splitting the grid. Output does not depend on it.
    check_real : bool
        Also evaluate the mirror-image time ordering through the conjugate
        coupled sets and verify the imaginary parts cancel to
        :data:`REALNESS_TOL`, measured against ``|Re| + REALNESS_FLOOR * max|Re|``.

    Raises
    ------
    SweepError
        Naming the first detuning at which a resolvent is singular or the
        realness check fails.
    """
    case = SpectrumCase.parse(case)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    params.validate_spectral()
    wiring, scale = _wiring_and_scale(case, detector, printed)
    try:
        rho = rho_tilde(params, 0.0)
    except ResolventPoleError as exc:
        raise SweepError(grid[0], exc) from exc

    coeffs = coefficient_matrices(wiring, rho["rho22"], rho["rho11"], detector)
    z = scale * _guarded_kernel(_chain_matrices(params, False), coeffs, grid, workers,
                                grid, "(2,1)->(1,0)")
    residue = 0.0
    if check_real:
        coeffs_c = coefficient_matrices(wiring, rho["rho22"], rho["rho11"], detector, conjugate=True)
        # mirror ordering is evaluated at s = +i dw, i.e. kernel frequency -dw
        w = scale * _guarded_kernel(_chain_matrices(params, True), coeffs_c, -grid, workers,
                                    grid, "(1,2)->(0,1)")
        total = z + w
        tiny = REALNESS_FLOOR * float(np.max(np.abs(total.real))) + 1e-300
        ratio = np.abs(total.imag) / (np.abs(total.real) + tiny)
        residue = float(np.max(ratio))
        if residue > REALNESS_TOL:
            i = int(np.argmax(ratio))
            raise SweepError(grid[i], f"imaginary residue {ratio[i]:.3g} exceeds {REALNESS_TOL:g}")
    values = 2.0 * z.real
    table = SpectrumTable(grid, values, params, detector, case, residue,
                          meta={"backend": _kernels.backend(), "printed_wiring": printed})
    neg = table.negativity()
    if neg < -1e-8:
        warnings.warn(f"spectrum dips below zero: min/max = {neg:.3g}", RuntimeWarning, stacklevel=2)
    return table


# ---------------------------------------------------------------------------
# peaks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeakList:
    positions: np.ndarray
    heights: np.ndarray

    @property
    def count(self) -> int:
        return int(self.positions.size)

    def __len__(self):
        return self.count


def find_peaks(table: SpectrumTable, prominence: float = DEFAULT_PROMINENCE) -> PeakList:
    """Interior local maxima higher than ``prominence * max(values)``.

    Each maximum is refined with the vertex of the parabola through it and
    its two neighbours.
    """
    x = np.asarray(table.grid, float)
    y = np.asarray(table.values, float)
    if y.size < 3:
        raise ValueError("peak search needs at least 3 points")
    threshold = prominence * float(np.max(y))
    idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > threshold)) + 1
    positions, heights = [], []
    for i in idx:
        coef = np.polyfit(x[i - 1:i + 2] - x[i], y[i - 1:i + 2], 2)
        if coef[0] < 0:
            xv = -coef[1] / (2 * coef[0])
            positions.append(x[i] + xv)
            heights.append(np.polyval(coef, xv))
        else:
            positions.append(x[i])
            heights.append(y[i])
    order = np.argsort(positions)
    return PeakList(np.asarray(positions, float)[order], np.asarray(heights, float)[order])
