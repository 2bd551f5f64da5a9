"""Time-domain ground truth for the Laplace-domain machinery.

Nothing here is needed to compute a spectrum. It exists so the resolvent
formulas can be checked against brute-force integration:

* fixed-step RK4 trajectories of the coupled sets and of the full
  vectorized density matrix,
* Simpson quadrature of Laplace transforms,
* the operational spectrum as an explicit double time integral,
* dressed-state energies that predict where the lines sit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm

from . import _kernels
from .blocks import (
    annihilation,
    atomic_lowering,
    build_A,
    build_B,
    build_full_liouvillian,
    set_vec_indices,
    state_index,
)
from .model import DetectorParams, ParameterError, SystemParams, element_ordering
from .spectrum import SpectrumCase, _wiring_and_scale, coefficient_matrices

__all__ = [
    "OracleError",
    "Trajectory",
    "BlockTrajectories",
    "LaplaceResult",
    "DressedSpectrumPrediction",
    "default_dt",
    "max_dt",
    "integrate_blocks",
    "numeric_laplace",
    "full_space_evolve",
    "project",
    "two_time_spectrum",
    "dressed_energies",
    "predicted_transition_frequencies",
    "block_correlation",
    "full_space_correlation",
    "detector_lowering",
]

MAX_SAMPLES = 20000


class OracleError(RuntimeError):
    """Step size, horizon or decay precondition of an oracle run violated."""


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled solution of a linear ODE.

    ``samples[k]`` is the state at ``times[k]``; it may be a vector or, for
    evolution operators, a matrix.
    """

    times: np.ndarray
    samples: np.ndarray
    name: str = ""
    labels: tuple = field(default=(), compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, float)
        x = np.asarray(self.samples)
        if t.ndim != 1 or x.shape[0] != t.size:
            raise ValueError("times and samples disagree in length")
        if t.size > 2:
            steps = np.diff(t)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ValueError("trajectory step is not uniform")
        if not np.all(np.isfinite(x)):
            raise ValueError(f"trajectory {self.name!r} has non-finite samples")
        t.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "samples", x)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def component(self, label) -> np.ndarray:
        """Time series of one labelled element (vector trajectories only)."""
        key = str(label)
        names = [str(x) for x in self.labels]
        return self.samples[:, names.index(key)]

    def to_csv(self, path) -> None:
        """Write ``time, re_<c>, im_<c>, ...`` with one row per sample."""
        flat = self.samples.reshape(self.samples.shape[0], -1)
        if self.labels and len(self.labels) == flat.shape[1]:
            names = [str(x).replace(",", ";") for x in self.labels]
        else:
            names = [str(i) for i in range(flat.shape[1])]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time"] + [f"{p}_{n}" for n in names for p in ("re", "im")])
            for t, row in zip(self.times, flat):
                cells = [repr(float(t))]
                for z in row:
                    cells += [repr(float(z.real)), repr(float(z.imag))]
                w.writerow(cells)


@dataclass(frozen=True)
class BlockTrajectories:
    rho22: Trajectory
    rho11: Trajectory
    rho00: Trajectory
    u2121: Trajectory
    u1021: Trajectory
    u1010: Trajectory

    def trace(self) -> np.ndarray:
        """``Tr rho(t)`` summed over the diagonal elements of the three sets."""
        total = self.rho00.samples[:, 0].copy()
        for traj, s in ((self.rho22, (2, 2)), (self.rho11, (1, 1))):
            for i, lab in enumerate(element_ordering(s)):
                if lab.row == lab.col:
                    total = total + traj.samples[:, i]
        return total


def default_dt(params: SystemParams) -> float:
    return 0.005 / max(params.g2, params.gamma, abs(params.delta) + abs(params.delta_bar) + 1e-12)


def max_dt(params: SystemParams) -> float:
    """Largest step accepted by the integrators."""
    limits = [0.01 / (abs(params.delta) + abs(params.delta_bar) + params.g2)
              if (abs(params.delta) + abs(params.delta_bar) + params.g2) > 0 else math.inf]
    if params.g2 > 0:
        limits.append(0.01 / params.g2)
    if params.gamma > 0:
        limits.append(0.01 / params.gamma)
    return min(limits)


def _grid(params, t_max, dt, stride):
    if not (t_max > 0 and math.isfinite(t_max)):
        raise OracleError(f"t_max must be positive and finite, got {t_max}")
    if dt is None:
        dt = default_dt(params)
    if dt <= 0 or dt > max_dt(params) * (1 + 1e-12):
        raise OracleError(f"step dt={dt} exceeds the stability limit {max_dt(params):.6g}")
    n_steps = int(math.ceil(t_max / dt - 1e-9))
    if stride is None:
        stride = max(1, n_steps // MAX_SAMPLES)
    n_steps = int(math.ceil(n_steps / stride)) * stride
    return t_max / n_steps, n_steps, int(stride)


def _run(M, Y0, dt, n_steps, stride):
    P = _kernels.rk4_propagator(M, dt)
    return _kernels.propagate(P, Y0, n_steps, stride)


def integrate_blocks(params: SystemParams, t_max: float, dt: float | None = None,
                     stride: int | None = None) -> BlockTrajectories:
    """RK4 solution of the density-matrix chain and the evolution-operator chain.

    The chain ``(2,2) -> (1,1) -> (0,0)`` starts from the atom in the upper
    state with no photons. The chain ``(2,1) -> (1,0)`` starts from the
    identity, giving ``U(2,1::2,1)``, ``U(1,0::2,1)`` and ``U(1,0::1,0)``.
    Both chains are lower block-triangular; each is stepped as one system so
    the later sets see the RK4 stages of the earlier ones.

    Parameters
    ----------
    params : SystemParams
    t_max : float
        Final time.
    dt : float, optional
        Step; defaults to :func:`default_dt` and must not exceed :func:`max_dt`.
    stride : int, optional
        Keep every ``stride``-th step. The default keeps about 20000 samples.
    """
    dt, n_steps, stride = _grid(params, t_max, dt, stride)
    A = {s: build_A(s, params).entries for s in ((2, 2), (1, 1), (0, 0), (2, 1), (1, 0))}
    B = {s: build_B(s, params).entries for s in ((1, 1), (0, 0), (1, 0))}

    M = np.zeros((14, 14), complex)
    M[:9, :9] = -1j * A[(2, 2)]
    M[9:13, 9:13] = -1j * A[(1, 1)]
    M[9:13, :9] = 1j * B[(1, 1)]
    M[13:, 13:] = -1j * A[(0, 0)]
    M[13:, 9:13] = 1j * B[(0, 0)]
    y0 = np.zeros(14, complex)
    y0[0] = 1.0
    ys = _run(M, y0, dt, n_steps, stride)

    N = np.zeros((8, 8), complex)
    N[:6, :6] = -1j * A[(2, 1)]
    N[6:, 6:] = -1j * A[(1, 0)]
    N[6:, :6] = 1j * B[(1, 0)]
    us = _run(N, np.eye(8), dt, n_steps, stride)

    times = np.arange(ys.shape[0]) * dt * stride
    lab = lambda s: tuple(str(x) for x in element_ordering(s))
    return BlockTrajectories(
        rho22=Trajectory(times, ys[:, :9], "rho22", lab((2, 2))),
        rho11=Trajectory(times, ys[:, 9:13], "rho11", lab((1, 1))),
        rho00=Trajectory(times, ys[:, 13:], "rho00", lab((0, 0))),
        u2121=Trajectory(times, us[:, :6, :6], "u2121"),
        u1021=Trajectory(times, us[:, 6:, :6], "u1021"),
        u1010=Trajectory(times, us[:, 6:, 6:], "u1010"),
    )


# ---------------------------------------------------------------------------
# Laplace quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaplaceResult:
    value: np.ndarray
    tail_bound: float


def numeric_laplace(traj: Trajectory, s: complex, decay_tol: float = 1e-10,
                    full_output: bool = False):
    """Composite Simpson estimate of ``int_0^T exp(-s t) x(t) dt``.

    The damped integrand must have fallen below ``decay_tol`` times the
    largest ``|x|`` over the last 2% of the record; otherwise the truncation
    at ``T`` is not negligible and :class:`OracleError` is raised. The
    neglected tail is bounded assuming the envelope keeps decaying at the rate
    observed over the last 10% of the record.

    Returns the transform (same shape as one sample), or a
    :class:`LaplaceResult` when ``full_output`` is set.
    """
    if complex(s).real < 0:
        raise ValueError("Re(s) must be >= 0")
    t = traj.times
    if t.size < 3:
        raise OracleError("need at least 3 samples")
    damp = np.exp(-complex(s) * t).reshape((-1,) + (1,) * (traj.samples.ndim - 1))
    f = damp * traj.samples
    value = simpson(f, x=t, axis=0)

    ref = float(np.max(np.abs(traj.samples)))
    env = np.max(np.abs(f.reshape(t.size, -1)), axis=1)
    w = max(1, t.size // 50)
    end = float(np.max(env[-w:]))
    if ref == 0.0:
        return LaplaceResult(value, 0.0) if full_output else value
    if end > decay_tol * ref:
        raise OracleError(
            f"integrand of {traj.name or 'trajectory'} has only decayed to "
            f"{end / ref:.3g} of its maximum by t={t[-1]:.6g} (need {decay_tol:g})"
        )
    k = max(2, t.size // 10)
    earlier = float(np.max(env[-k - w:-k])) if t.size > k + w else ref
    span = t[-1] - t[-k]
    rate = math.log(earlier / end) / span if end > 0 and earlier > end else 0.0
    tail = end / rate if rate > 0 else (0.0 if end == 0 else math.inf)
    return LaplaceResult(value, tail) if full_output else value


# ---------------------------------------------------------------------------
# full space
# ---------------------------------------------------------------------------

def _initial_full(n_max: int) -> np.ndarray:
    D = 3 * (n_max + 1)
    rho = np.zeros((D, D), complex)
    i = state_index(0, 2)
    rho[i, i] = 1.0
    return rho


def full_space_evolve(params: SystemParams, n_max: int = 2, t_max: float | None = None,
                      dt: float | None = None, stride: int | None = None,
                      rho0=None) -> Trajectory:
    """RK4 solution of ``d vec(rho)/dt = L vec(rho)`` on the truncated space.

    ``rho0`` defaults to ``|0;2><0;2|``. Samples are row-major ``vec(rho)``.
    """
    L = build_full_liouvillian(n_max, params).entries
    if t_max is None:
        if params.gamma <= 0:
            raise OracleError("t_max needed when gamma = 0")
        t_max = 40.0 / params.gamma
    dt, n_steps, stride = _grid(params, t_max, dt, stride)
    r0 = _initial_full(n_max) if rho0 is None else np.asarray(rho0, complex)
    ys = _run(L, r0.reshape(-1), dt, n_steps, stride)
    times = np.arange(ys.shape[0]) * dt * stride
    return Trajectory(times, ys, f"full(n_max={n_max})")


def project(traj: Trajectory, s, n_max: int = 2) -> Trajectory:
    """Pick the elements of coupled set ``s`` out of a full-space trajectory."""
    idx = set_vec_indices(s, n_max)
    labels = tuple(str(x) for x in element_ordering(s))
    return Trajectory(traj.times, traj.samples[:, idx], f"proj{tuple(s)}", labels)


def detector_lowering(case, detector: DetectorParams, n_max: int = 2) -> np.ndarray:
    """Operator ``V-`` through which the detector absorbs: ``a`` or the dipole."""
    case = SpectrumCase.parse(case)
    if case is SpectrumCase.C:
        return detector.r2 * atomic_lowering(n_max, 2) + detector.r1 * atomic_lowering(n_max, 1)
    mu = detector.mu if case is SpectrumCase.A else detector.m_eff
    return mu * annihilation(n_max)


def two_time_spectrum(case, delta_omega, params: SystemParams,
                      detector: DetectorParams = DetectorParams(),
                      t_max: float | None = None, dt: float | None = None,
                      n_max: int = 2, stride: int | None = None):
    """Operational spectrum as an explicit double time integral.

    Splits the square ``0 <= t1, t2 <= T`` along the diagonal. With
    ``R = int_0^T rho(t) dt`` the region ``t2 = t1 + tau`` contributes
    ``int_0^T e^{i dw tau} Tr[V- e^{L tau}(R V+)] dtau`` and the mirror
    region the same with ``V- R`` and ``e^{-i dw tau}``. Both are evaluated
    by RK4 on the full Liouvillian and Simpson quadrature; they are added
    without assuming they are complex conjugates.

    Parameters
    ----------
    delta_omega : float or array_like
        One or more detunings; the trajectories are shared.
    t_max : float, optional
        Horizon ``T``; must be at least ``40 / gamma`` (the default).

    Returns
    -------
    float or ndarray
    """
    case = SpectrumCase.parse(case)
    if params.gamma <= 0:
        raise ParameterError("gamma must be > 0")
    t_min = 40.0 / params.gamma
    if t_max is None:
        t_max = t_min
    if t_max < t_min * (1 - 1e-12):
        raise OracleError(f"t_max={t_max} is shorter than 40/gamma={t_min}")
    dws = np.atleast_1d(np.asarray(delta_omega, float))

    Vm = detector_lowering(case, detector, n_max)
    Vp = Vm.conj().T
    if not np.any(Vm):
        out = np.zeros(dws.shape)
        return out if np.ndim(delta_omega) else float(out[0])

    L = build_full_liouvillian(n_max, params).entries
    D = Vm.shape[0]
    dt, n_steps, stride = _grid(params, t_max, dt, stride)
    P = _kernels.rk4_propagator(L, dt)

    rho_t = _kernels.propagate(P, _initial_full(n_max).reshape(-1), n_steps, stride)
    times = np.arange(rho_t.shape[0]) * dt * stride
    R = simpson(rho_t, x=times, axis=0).reshape(D, D)

    X0 = (R @ Vp).reshape(-1)
    Y0 = (Vm @ R).reshape(-1)
    XY = _kernels.propagate(P, np.stack([X0, Y0], axis=1), n_steps, stride)
    c1 = XY[:, :, 0] @ Vm.T.reshape(-1)   # Tr[V- X(tau)]
    c2 = XY[:, :, 1] @ Vp.T.reshape(-1)   # Tr[V+ Y(tau)]
    ref = max(np.max(np.abs(c1)), np.max(np.abs(c2)))
    if max(abs(c1[-1]), abs(c2[-1])) > 1e-3 * ref:
        raise OracleError("correlation has not decayed by t_max")

    phase = np.exp(1j * np.outer(dws, times))
    total = simpson(phase * c1[None, :], x=times, axis=1) + simpson(phase.conj() * c2[None, :], x=times, axis=1)
    out = total.real
    return out if np.ndim(delta_omega) else float(out[0])


# ---------------------------------------------------------------------------
# regression-theorem cross-check
# ---------------------------------------------------------------------------

def _rho_chain_generator(params):
    A22, A11 = build_A((2, 2), params).entries, build_A((1, 1), params).entries
    B11 = build_B((1, 1), params).entries
    M = np.zeros((13, 13), complex)
    M[:9, :9] = -1j * A22
    M[9:, 9:] = -1j * A11
    M[9:, :9] = 1j * B11
    return M


def _u_chain_generator(params):
    N = np.zeros((8, 8), complex)
    N[:6, :6] = -1j * build_A((2, 1), params).entries
    N[6:, 6:] = -1j * build_A((1, 0), params).entries
    N[6:, :6] = 1j * build_B((1, 0), params).entries
    return N


def block_correlation(case, t: float, tau: float, params: SystemParams,
                      detector: DetectorParams = DetectorParams()) -> complex:
    """``<V+(t) V-(t+tau)>`` assembled from block ``rho(t)`` and ``U(tau)``.

    Uses the same wiring tables as the spectrum, so agreement with
    :func:`full_space_correlation` validates those tables in the time domain.
    """
    case = SpectrumCase.parse(case)
    wiring, scale = _wiring_and_scale(case, detector)
    y0 = np.zeros(13, complex)
    y0[0] = 1.0
    y = expm(_rho_chain_generator(params) * t) @ y0
    U = expm(_u_chain_generator(params) * tau)
    C10, C21, C1021 = coefficient_matrices(wiring, y[:9], y[9:], detector)
    z = np.sum(C21 * U[:6, :6]) + np.sum(C1021 * U[6:, :6]) + np.sum(C10 * U[6:, 6:])
    return complex(scale * z)


def full_space_correlation(case, t: float, tau: float, params: SystemParams,
                           detector: DetectorParams = DetectorParams(), n_max: int = 2) -> complex:
    """``Tr[V- e^{L tau}(rho(t) V+)]`` with the operator propagated by ``L^T``.

    ``Tr[V X] = vec(V^T) . vec(X)`` in row-major order, so moving the
    propagator onto the observable turns it into ``exp(L^T tau) vec(V-^T)``.
    """
    L = build_full_liouvillian(n_max, params).entries
    Vm = detector_lowering(case, detector, n_max)
    D = Vm.shape[0]
    rho_t = (expm(L * t) @ _initial_full(n_max).reshape(-1)).reshape(D, D)
    obs = expm(L.T * tau) @ Vm.T.reshape(-1)
    return complex(obs @ (rho_t @ Vm.conj().T).reshape(-1))


# ---------------------------------------------------------------------------
# dressed states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DressedSpectrumPrediction:
    triplet: np.ndarray
    doublet: np.ndarray
    singlet: np.ndarray
    lines: np.ndarray


def _dedupe(values, tol=1e-9):
    out = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol:
            out.append(v)
    return np.asarray(out, float)


def dressed_energies(params: SystemParams) -> DressedSpectrumPrediction:
    """Eigenvalues of the lossless Hamiltonian in the 2-, 1- and 0-excitation manifolds.

    Bases are ``|0;2>, |1;1>, |2;0>`` (triplet), ``|0;1>, |1;0>``
    (doublet) and ``|0;0>`` (singlet). Energies are returned in descending
    order; ``lines`` holds every triplet-to-doublet and doublet-to-singlet
    difference, ascending and de-duplicated.
    """
    e2 = -(params.delta + params.delta_bar)
    e0 = params.delta - params.delta_bar
    r2 = math.sqrt(2.0)
    H3 = np.array([[e2, params.g2, 0.0],
                   [params.g2, 0.0, r2 * params.g1],
                   [0.0, r2 * params.g1, e0]])
    H2 = np.array([[0.0, params.g1], [params.g1, e0]])
    triplet = np.sort(np.linalg.eigvalsh(H3))[::-1]
    doublet = np.sort(np.linalg.eigvalsh(H2))[::-1]
    singlet = np.array([e0])
    lines = [t - d for t in triplet for d in doublet] + [d - singlet[0] for d in doublet]
    return DressedSpectrumPrediction(triplet, doublet, singlet, _dedupe(lines))


def predicted_transition_frequencies(params: SystemParams) -> np.ndarray:
    return dressed_energies(params).lines
