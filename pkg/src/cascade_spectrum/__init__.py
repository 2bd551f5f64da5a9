"""Spontaneous-emission spectrum of a three-level cascade atom in a damped cavity.

The atom starts in its upper state with the cavity empty. The spectrum seen by
a weakly coupled two-level detector is obtained from Laplace transforms of the
coupled density-matrix equations (see :mod:`cascade_spectrum.spectrum`), with
a brute-force time-domain oracle in :mod:`cascade_spectrum.oracle`.
"""

from .model import (
    DetectorParams,
    ElementLabel,
    LabelSetMismatchError,
    ParameterError,
    SetId,
    SystemParams,
    UnknownSetError,
    element_ordering,
    label_to_index,
    set_dimension,
)
from .blocks import build_A, build_B, build_full_liouvillian, validate_blocks
from .resolvent import ResolventBundle, ResolventPoleError, resolvent_apply, rho_tilde, u_tilde
from .spectrum import (
    PeakList,
    SpectrumCase,
    SpectrumTable,
    default_grid,
    find_peaks,
    spectrum_case_a,
    spectrum_case_b,
    spectrum_case_c,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "DetectorParams",
    "ElementLabel",
    "LabelSetMismatchError",
    "ParameterError",
    "SetId",
    "SystemParams",
    "UnknownSetError",
    "element_ordering",
    "label_to_index",
    "set_dimension",
    "build_A",
    "build_B",
    "build_full_liouvillian",
    "validate_blocks",
    "ResolventBundle",
    "ResolventPoleError",
    "resolvent_apply",
    "rho_tilde",
    "u_tilde",
    "PeakList",
    "SpectrumCase",
    "SpectrumTable",
    "default_grid",
    "find_peaks",
    "spectrum_case_a",
    "spectrum_case_b",
    "spectrum_case_c",
    "sweep",
]
