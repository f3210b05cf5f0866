import math

import numpy as np
import pytest

from nhcavity.errors import DimensionMismatch, UndefinedPhase, ZeroTrace
from nhcavity.model import SystemConfig, validate_config
from nhcavity.observables import (
    Pipeline,
    TIME_COLUMNS,
    atom_reduced,
    concurrence,
    dem_sum,
    oracle_time_series,
    pancharatnam,
    phase_jump_scan,
    phi_sweep,
    time_series,
)
from nhcavity.state import ReducedDensity
from oracles import random_density, random_hermitian_unit_trace


def _cfg(**kw):
    kw.setdefault("theta", math.pi / 4)
    return validate_config(SystemConfig.symmetric(**kw))


def _pure(vec):
    v = np.asarray(vec, dtype=complex)
    return np.outer(v, v.conj())


# concurrence ---------------------------------------------------------------

def test_bell_state_is_maximally_entangled():
    assert concurrence(_pure([1, 0, 0, 1]) / 2) == pytest.approx(1.0, abs=1e-15)
    assert concurrence(_pure([0, 1, 1j, 0]) / 2) == pytest.approx(1.0, abs=1e-15)


def test_product_state_is_not_entangled():
    a = np.array([0.6, 0.8j])
    b = np.array([1.0, 1.0]) / math.sqrt(2)
    assert concurrence(_pure(np.kron(a, b))) == pytest.approx(0.0, abs=1e-7)


@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4, 1.2])
def test_superposition_concurrence_is_sin_two_theta(theta):
    rho = _pure([math.cos(theta), 0, 0, math.sin(theta) * 1j])
    assert concurrence(rho) == pytest.approx(abs(math.sin(2 * theta)), abs=1e-7)


def test_concurrence_ignores_positive_scaling():
    rho = random_density(np.random.default_rng(0))
    base = concurrence(rho)
    for s in (1e-9, 0.37, 5.0):
        assert concurrence(s * rho) == pytest.approx(base, rel=1e-12)


def test_concurrence_accepts_reduced_density_and_stacks():
    rng = np.random.default_rng(1)
    stack = np.array([random_density(rng) for _ in range(5)])
    vals = concurrence(stack)
    assert vals.shape == (5,)
    rd = ReducedDensity(matrix=2 * stack[3], raw_trace=2.0)
    assert concurrence(rd) == pytest.approx(vals[3], rel=1e-13)


def test_zero_trace_rejected():
    with pytest.raises(ZeroTrace):
        concurrence(np.zeros((4, 4)))


def test_wrong_shape_rejected():
    with pytest.raises(DimensionMismatch):
        concurrence(np.eye(3))


def test_sum_formula_equals_purity_form():
    rng = np.random.default_rng(2)
    h = np.array([random_hermitian_unit_trace(rng) for _ in range(2000)])
    direct = np.sqrt(2 * np.maximum(0, 1 - np.real(np.einsum("nij,nji->n", h, h))))
    np.testing.assert_allclose(dem_sum(h), direct, atol=1e-12)


def test_atom_reduced_traces_second_atom():
    a = random_density(np.random.default_rng(3), 2)
    b = random_density(np.random.default_rng(4), 2)
    np.testing.assert_allclose(atom_reduced(np.kron(a, b)), a, atol=1e-15)


# Pancharatnam phase --------------------------------------------------------

def test_phase_at_start_is_zero():
    psi = np.random.default_rng(5).normal(size=8) + 0j
    assert pancharatnam(psi, psi) == 0.0


@pytest.mark.parametrize("chi", [0.4, -2.5, math.pi, 3 * math.pi / 2])
def test_global_phase_is_recovered(chi):
    psi = np.random.default_rng(6).normal(size=8) * (1 + 0.5j)
    got = pancharatnam(psi, np.exp(1j * chi) * psi)
    assert -math.pi < got <= math.pi
    assert math.remainder(got - chi, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


def test_phase_ignores_positive_scaling():
    rng = np.random.default_rng(7)
    a = rng.normal(size=6) + 1j * rng.normal(size=6)
    b = rng.normal(size=6) + 1j * rng.normal(size=6)
    assert pancharatnam(a, 1e-6 * b) == pytest.approx(pancharatnam(a, b), abs=1e-13)


def test_phase_undefined_at_node():
    with pytest.raises(UndefinedPhase):
        pancharatnam(np.array([1.0, 0.0]), np.array([0.0, 1.0]))


# phase-jump detector -------------------------------------------------------

def test_constant_phase_has_no_jumps():
    x = np.linspace(0, 1, 50)
    assert phase_jump_scan(x, np.full(50, 0.3)) == []


def test_sawtooth_jumps_found_at_their_cells():
    x = np.linspace(0, 3, 301)
    phase = np.where(x < 1.005, 0.2, np.where(x < 2.005, 2.0, 0.1))
    jumps = phase_jump_scan(x, phase)
    assert [j.index for j in jumps] == [100, 200]
    assert jumps[0].location == pytest.approx(1.005)
    assert jumps[1].magnitude == pytest.approx(1.9)


def test_branch_cut_crossing_is_not_a_jump():
    x = np.linspace(0, 1, 101)
    wound = np.angle(np.exp(1j * (3.0 + 0.6 * x)))  # crosses pi smoothly
    assert np.ptp(wound) > 6
    assert phase_jump_scan(x, wound) == []


def test_jump_scan_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        phase_jump_scan([0.0, 2.0, 1.0], [0.0, 0.0, 0.0])


# time series ---------------------------------------------------------------

def test_start_of_series_matches_initial_state():
    cfg = _cfg(theta=0.3)
    ts = time_series(cfg, [0.0])
    # the lower-level component cannot carry fewer than kappa photons, so its
    # kept weight is 1 - P(N < kappa) per mode
    upper = 1.0
    lower = (1 - math.exp(-10.0)) ** 2
    c2, s2 = math.cos(0.3) ** 2 * upper, math.sin(0.3) ** 2 * lower
    p = c2 / (c2 + s2)
    assert ts.concurrence[0] == pytest.approx(2 * math.sqrt(p * (1 - p)), abs=1e-9)
    assert ts.concurrence[0] == pytest.approx(math.sin(0.6), abs=1e-4)
    assert ts.pancharatnam[0] == 0.0
    assert ts.norm2[0] == pytest.approx(1 - ts.initial_tail, abs=1e-12)
    np.testing.assert_allclose(ts.populations[0], [p, 0, 0, 1 - p], atol=1e-9)


def test_lossless_norm_is_constant():
    ts = time_series(_cfg(varpi=math.pi), np.linspace(0, 20 * math.pi, 300))
    assert np.ptp(ts.norm2) < 1e-8


def test_columns_and_records_follow_fixed_order():
    ts = time_series(_cfg(gamma=1e-3), np.linspace(0, 1, 3))
    assert tuple(ts.columns()) == TIME_COLUMNS
    rec = ts.records()[2]
    assert rec.t == 1.0 and rec.norm2 == ts.norm2[2]
    assert np.all(np.isfinite(np.column_stack(list(ts.columns().values()))))


def test_populations_sum_to_one():
    ts = time_series(_cfg(gamma=1e-3, varpi=math.pi), np.linspace(0, 30, 40))
    np.testing.assert_allclose(ts.populations.sum(axis=1), 1.0, atol=1e-12)


def test_parallel_chunks_give_identical_bytes():
    cfg = _cfg(gamma=1e-4, varpi=math.pi)
    times = np.linspace(0, 10, 200)
    pipe = Pipeline(cfg)
    a = time_series(cfg, times, jobs=1, pipeline=pipe)
    b = time_series(cfg, times, jobs=4, pipeline=pipe)
    for key in TIME_COLUMNS:
        assert a.columns()[key].tobytes() == b.columns()[key].tobytes()


def test_time_grid_must_increase():
    with pytest.raises(ValueError):
        time_series(_cfg(), [1.0, 0.5])


def test_oracle_series_agrees():
    cfg = _cfg(gamma=1e-3, varpi=math.pi, n_max=20, nbar=(2.0, 2.0))
    times = np.linspace(0, 3 * math.pi, 7)
    pipe = Pipeline(cfg)
    fast = time_series(cfg, times, pipeline=pipe)
    slow, amps = oracle_time_series(cfg, times, pipeline=pipe)
    assert amps.shape == (7, len(pipe.table), 4)
    assert np.max(np.abs(fast.concurrence - slow.concurrence)) < 1e-7
    assert np.max(np.abs(fast.norm2 - slow.norm2)) < 1e-8


# phi sweep -----------------------------------------------------------------

def test_phi_sweep_matches_per_phi_runs():
    base = _cfg(gamma=1e-3, n_max=25, nbar=(3.0, 3.0))
    t_values = [math.pi / 3, math.pi / 2]
    phis = np.linspace(0, 2 * math.pi, 9)
    grid = phi_sweep(base, t_values, phis)
    assert grid.shape == (2, 9)
    for j, phi in enumerate(phis):
        cfg = validate_config(SystemConfig.symmetric(gamma=1e-3, n_max=25, nbar=(3.0, 3.0),
                                                     theta=math.pi / 4, phi=phi))
        direct = time_series(cfg, t_values).pancharatnam
        diff = np.remainder(grid[:, j] - direct + math.pi, 2 * math.pi) - math.pi
        assert np.max(np.abs(diff)) < 1e-10


def test_phi_sweep_at_zero_time_is_flat():
    grid = phi_sweep(_cfg(), [0.0], np.linspace(0, 4 * math.pi, 17))
    np.testing.assert_allclose(grid, 0.0, atol=1e-15)
