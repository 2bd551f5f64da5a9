import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_spectrum.blocks import set_vec_indices
from cascade_spectrum.model import DetectorParams, ParameterError, SystemParams, label_to_index
from cascade_spectrum.oracle import (
    MAX_SAMPLES,
    OracleError,
    Trajectory,
    block_correlation,
    default_dt,
    dressed_energies,
    full_space_correlation,
    full_space_evolve,
    integrate_blocks,
    max_dt,
    numeric_laplace,
    predicted_transition_frequencies,
    project,
    two_time_spectrum,
)
from cascade_spectrum.resolvent import rho_tilde
from cascade_spectrum.spectrum import default_grid, find_peaks, sweep

from strategies import system_params

FIG3 = SystemParams()
UNIT = DetectorParams(mu=1.0, m_eff=1.0, r1=1.0, r2=1.0)


@pytest.fixture(scope="module")
def blocks40():
    return integrate_blocks(FIG3, 40.0 / FIG3.gamma)


@pytest.fixture(scope="module")
def full40():
    return full_space_evolve(FIG3, n_max=2)


# --- Trajectory and Laplace quadrature --------------------------------------

def test_laplace_of_exponential():
    t = np.linspace(0, 40, 40001)
    r = numeric_laplace(Trajectory(t, np.exp(-t)), 1.0, full_output=True)
    assert abs(r.value - 0.5) / 0.5 < 1e-8
    assert 0 <= r.tail_bound < 1e-15


def test_laplace_of_constant_via_damping():
    t = np.linspace(0, 20, 20001)
    assert numeric_laplace(Trajectory(t, np.ones_like(t)), 2.0) == pytest.approx(0.5, rel=1e-8)


def test_laplace_refuses_undecayed_record():
    t = np.linspace(0, 5, 501)
    with pytest.raises(OracleError, match="decayed"):
        numeric_laplace(Trajectory(t, np.exp(-t)), 0.0)


def test_laplace_domain():
    t = np.linspace(0, 5, 501)
    with pytest.raises(ValueError):
        numeric_laplace(Trajectory(t, np.exp(-t)), -0.1)


def test_trajectory_invariants():
    with pytest.raises(ValueError, match="uniform"):
        Trajectory(np.array([0.0, 1.0, 3.0]), np.zeros(3))
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), np.array([0.0, np.nan]))


def test_trajectory_csv(tmp_path, blocks40):
    short = Trajectory(blocks40.rho11.times[:5], blocks40.rho11.samples[:5], "rho11", blocks40.rho11.labels)
    path = tmp_path / "rho11.csv"
    short.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0][:3] == ["time", "re_01;01", "im_01;01"]
    assert len(rows) == 6 and len(rows[1]) == 1 + 2 * 4
    assert complex(float(rows[3][1]), float(rows[3][2])) == short.samples[2, 0]


def test_rho0202_transform_matches_resolvent():
    run = integrate_blocks(FIG3, 1000.0)
    want = rho_tilde(FIG3)["rho22"][0]
    got = numeric_laplace(run.rho22, 0.0)[0]
    assert abs(got - want) / abs(want) < 1e-4


# --- block integration -----------------------------------------------------------

def test_step_precondition():
    with pytest.raises(OracleError, match="stability"):
        integrate_blocks(FIG3, 10.0, dt=2 * max_dt(FIG3))
    with pytest.raises(OracleError):
        integrate_blocks(FIG3, 0.0)
    assert default_dt(FIG3) <= max_dt(FIG3)


def test_initial_conditions(blocks40):
    assert blocks40.rho22.samples[0, 0] == 1
    assert np.count_nonzero(blocks40.rho22.samples[0]) == 1
    assert not np.any(blocks40.rho11.samples[0]) and not np.any(blocks40.rho00.samples[0])
    for u, n in ((blocks40.u2121, 6), (blocks40.u1010, 2)):
        np.testing.assert_array_equal(u.samples[0], np.eye(n))
    assert not np.any(blocks40.u1021.samples[0])


def test_trace_is_one(blocks40):
    assert np.max(np.abs(blocks40.trace() - 1)) < 1e-9


def test_ground_state_reached(blocks40):
    assert blocks40.rho00.samples[-1, 0].real > 1 - 1e-4


def test_sample_budget(blocks40):
    assert blocks40.rho22.times.size <= MAX_SAMPLES + 1


def test_blocks_agree_with_full_space():
    p = FIG3
    t_max = 20.0 / p.g2
    blk = integrate_blocks(p, t_max, stride=1)
    full = full_space_evolve(p, 2, t_max, stride=1)
    for traj, s in ((blk.rho22, (2, 2)), (blk.rho11, (1, 1)), (blk.rho00, (0, 0))):
        assert np.max(np.abs(project(full, s).samples - traj.samples)) < 1e-9


# --- full-space evolution ------------------------------------------------------------

def test_full_trace_and_hermiticity(full40):
    D = 9
    rho = full40.samples.reshape(-1, D, D)
    assert np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1)) < 1e-9
    assert np.max(np.abs(rho - rho.conj().transpose(0, 2, 1))) < 1e-12


def test_population_bounds(full40):
    rho = full40.samples.reshape(-1, 9, 9)
    diag = np.diagonal(rho, axis1=1, axis2=2)
    assert np.max(np.abs(diag.imag)) < 1e-12
    assert diag.real.min() >= -1e-10 and diag.real.max() <= 1 + 1e-10


def test_no_flow_into_higher_sets():
    p = SystemParams(g1=0.8, g2=1.2, gamma=0.5, delta=0.3, delta_bar=-0.2)
    full = full_space_evolve(p, n_max=3, t_max=20.0)
    for s in ((3, 3), (3, 2), (2, 3)):
        assert not np.any(full.samples[:, set_vec_indices(s, 3)]), s


def test_full_space_needs_horizon_without_decay():
    with pytest.raises(OracleError):
        full_space_evolve(SystemParams(gamma=0.0))


# --- regression theorem ----------------------------------------------------------------

@pytest.mark.parametrize("case", ["A", "C"])
def test_block_correlation_matches_full_space(case):
    rng = np.random.default_rng(2024)
    p = SystemParams(g1=0.9, g2=1.1, gamma=0.3, delta=-0.5, delta_bar=0.25)
    d = DetectorParams(mu=1.0, r1=0.7, r2=1.3)
    for t, tau in rng.uniform(0.0, 8.0, size=(5, 2)):
        a = block_correlation(case, t, tau, p, d)
        b = full_space_correlation(case, t, tau, p, d)
        assert abs(a - b) <= 1e-6 * abs(b) + 1e-14, (t, tau)


# --- two-time spectrum ---------------------------------------------------------------------

def test_two_time_mu_zero():
    assert two_time_spectrum("A", 0.0, FIG3, DetectorParams(mu=0.0)) == 0.0


def test_two_time_horizon_precondition():
    with pytest.raises(OracleError):
        two_time_spectrum("A", 0.0, FIG3, UNIT, t_max=10.0)
    with pytest.raises(ParameterError):
        two_time_spectrum("A", 0.0, SystemParams(gamma=0.0), UNIT)


@pytest.mark.parametrize("case", ["A", "C"])
def test_two_time_matches_closed_form_at_line_centre(case):
    from cascade_spectrum.spectrum import spectrum_point
    got = two_time_spectrum(case, 0.0, FIG3, UNIT, t_max=100.0 / FIG3.gamma)
    assert got == pytest.approx(spectrum_point(case, 0.0, FIG3, UNIT), rel=1e-3)


def test_two_time_vector_input():
    out = two_time_spectrum("A", [-1.0, 1.0], FIG3, UNIT)
    assert out.shape == (2,) and out[0] == pytest.approx(out[1], rel=1e-9)


@pytest.mark.slow
def test_two_time_reproduces_central_hole():
    p = SystemParams(gamma=0.01)
    table = sweep("C", default_grid(p), p, UNIT)
    peak = table.grid[np.argmax(table.values)]
    s0, smax = two_time_spectrum("C", [0.0, peak], p, UNIT)
    assert s0 < 1e-3 * smax


# --- dressed states ---------------------------------------------------------------------------

def test_dressed_energies_at_resonance():
    e = dressed_energies(FIG3)
    np.testing.assert_allclose(e.triplet, [np.sqrt(3), 0, -np.sqrt(3)], atol=1e-12)
    np.testing.assert_allclose(e.doublet, [1, -1], atol=1e-12)
    np.testing.assert_allclose(e.singlet, [0], atol=0)


def test_triplet_splitting_formula():
    p = SystemParams(g1=0.4, g2=1.7)
    top = np.sqrt(2 * p.g1 ** 2 + p.g2 ** 2)
    np.testing.assert_allclose(dressed_energies(p).triplet, [top, 0, -top], atol=1e-12)


def test_doublet_degenerates_without_lower_coupling():
    np.testing.assert_allclose(dressed_energies(SystemParams(g1=0.0)).doublet, [0, 0], atol=0)


def test_detuned_energies_against_characteristic_polynomial():
    p = SystemParams(delta=-1.0)
    e = dressed_energies(p)
    # rotating-frame energies: |0;2> at -(d+db), |1;1> at 0, |2;0> at d-db
    a, b = -(p.delta + p.delta_bar), p.delta - p.delta_bar
    g1, g2 = p.g1, p.g2
    # det(x - H3) = (x-a) x (x-b) - 2 g1^2 (x-a) - g2^2 (x-b)
    cubic = np.polysub(np.polymul(np.polymul([1, -a], [1, 0]), [1, -b]),
                       np.polyadd(np.polymul([2 * g1 ** 2], [1, -a]), np.polymul([g2 ** 2], [1, -b])))
    np.testing.assert_allclose(e.triplet, np.sort(np.roots(cubic).real)[::-1], atol=1e-10)
    quad = np.polysub(np.polymul([1, 0], [1, -b]), [g1 ** 2])
    np.testing.assert_allclose(e.doublet, np.sort(np.roots(quad).real)[::-1], atol=1e-10)


def test_six_lines_at_resonance():
    r3 = np.sqrt(3)
    want = np.sort([-(r3 + 1), -(r3 - 1), -1, 1, r3 - 1, r3 + 1])
    np.testing.assert_allclose(predicted_transition_frequencies(FIG3), want, atol=1e-12)


def test_eight_lines_when_detuned():
    assert predicted_transition_frequencies(SystemParams(delta=-1.0)).size == 8


def test_single_line_without_coupling():
    np.testing.assert_allclose(predicted_transition_frequencies(SystemParams(g1=0.0, g2=0.0)), [0.0])


@settings(max_examples=40)
@given(system_params())
def test_lines_are_sorted_and_distinct(p):
    lines = predicted_transition_frequencies(p)
    assert 1 <= lines.size <= 8
    assert np.all(np.diff(lines) > 1e-9)
