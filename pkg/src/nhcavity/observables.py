"""Concurrence, Pancharatnam phase, populations and phase-jump detection.

Entanglement is measured with the sum formula
``C = sqrt(2 max(0, sum_{i != j} (r_ii r_jj - r_ij r_ji)))``, which for a
unit-trace matrix equals ``sqrt(2 (1 - Tr r^2))``. It is evaluated on the
state of atom 1 after tracing atom 2 out of the normalised two-atom matrix:
that reading gives 1 for a Bell state, 0 for a product state and
``sin(2 theta)`` for the initial superposition. :func:`dem_sum` exposes the
bare formula for any square matrix.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionMismatch, TruncationTooSmall, UndefinedPhase, ZeroTrace
from .model import SystemConfig, block_table
from .propagator import BlockEvolver, reference_integrate
from .state import (
    TAIL_TOL,
    ReducedDensity,
    atomic_components,
    dense_indices,
    initial_block_amplitudes,
    initial_tail_mass,
    overlap,
    truncation_tail,
)

JUMP_THRESHOLD = 1.0
PHASE_FLOOR = 1e-14
TRACE_FLOOR = 1e-300
# fixed number of time points per work unit; results never depend on --jobs
CHUNK = 64

TIME_COLUMNS = ("t", "concurrence", "pancharatnam", "norm2", "p11", "p12", "p21", "p22")


def dem_sum(rho):
    """``sqrt(2 max(0, sum_{i != j} (r_ii r_jj - r_ij r_ji)))`` over the last two axes."""
    r = np.asarray(rho)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    total = np.sum(diag, axis=-1) ** 2 - np.sum(diag * diag, axis=-1)
    cross = np.sum(r * np.swapaxes(r, -1, -2), axis=(-2, -1)) - np.sum(diag * diag, axis=-1)
    radicand = np.real(total - cross)
    return np.sqrt(2.0 * np.maximum(radicand, 0.0))


def atom_reduced(rho):
    """Trace atom 2 out of a two-atom matrix (last two axes of size 4)."""
    r = np.asarray(rho)
    r = r.reshape(r.shape[:-2] + (2, 2, 2, 2))
    return np.einsum("...ajbj->...ab", r)


def _matrix_and_trace(rho):
    if isinstance(rho, ReducedDensity):
        return rho.matrix, np.asarray(rho.raw_trace)
    m = np.asarray(rho)
    if m.shape[-2:] != (4, 4):
        raise DimensionMismatch(f"expected a two-atom 4x4 matrix, got shape {m.shape}")
    return m, np.real(np.trace(m, axis1=-2, axis2=-1))


def concurrence(rho):
    """Entanglement of the two atoms from their reduced density matrix.

    Accepts a :class:`ReducedDensity` or an array of 4x4 matrices; the trace is
    normalised away first, so any positive rescaling gives the same value.
    """
    m, trace = _matrix_and_trace(rho)
    if np.any(~np.isfinite(trace)) or np.any(trace <= TRACE_FLOOR):
        raise ZeroTrace(f"reduced density has trace {np.min(trace)!r}; state has decayed away")
    normed = m / np.asarray(trace)[..., None, None]
    out = dem_sum(atom_reduced(normed))
    return float(out) if np.ndim(out) == 0 else out


def _principal_angle(z):
    ang = np.angle(z)
    return np.where(ang <= -math.pi, math.pi, ang)


def pancharatnam(psi0, psit):
    """``arg <psi(0)|psi(t)>`` in ``(-pi, pi]``."""
    ov = overlap(psi0, psit)
    if abs(ov) < PHASE_FLOOR:
        raise UndefinedPhase(f"overlap magnitude {abs(ov):.3e} below {PHASE_FLOOR:g}")
    return float(_principal_angle(ov))


@dataclass(frozen=True)
class PhaseJump:
    location: float
    magnitude: float
    index: int


def phase_jump_scan(x, phase, threshold=JUMP_THRESHOLD):
    """Neighbouring samples whose phase differs by more than ``threshold``.

    Differences are first reduced modulo ``2 pi`` into ``(-pi, pi]``, so a
    branch-cut crossing of the principal argument is not a jump. The
    location is the midpoint of the offending grid cell; ``index`` is its
    left end.
    """
    x = np.asarray(x, dtype=float)
    phase = np.asarray(phase, dtype=float)
    if x.shape != phase.shape or x.ndim != 1:
        raise DimensionMismatch("x and phase must be 1-d arrays of equal length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x grid must be strictly increasing")
    step = -np.remainder(-(np.diff(phase) + math.pi), 2 * math.pi) + math.pi
    hits = np.flatnonzero(np.abs(step) > threshold)
    return [
        PhaseJump(location=0.5 * (x[i] + x[i + 1]), magnitude=float(abs(step[i])), index=int(i))
        for i in hits
    ]


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    concurrence: float
    pancharatnam: float
    norm2: float
    p11: float
    p12: float
    p21: float
    p22: float


@dataclass(frozen=True)
class TimeSeries:
    """Column arrays of a time sweep plus the evolution diagnostics."""

    t: np.ndarray
    concurrence: np.ndarray
    pancharatnam: np.ndarray
    norm2: np.ndarray
    populations: np.ndarray
    rho: np.ndarray
    initial_tail: float

    def records(self):
        return [
            ObservableRecord(
                float(t), float(c), float(f), float(n), *(float(p) for p in pops)
            )
            for t, c, f, n, pops in zip(
                self.t, self.concurrence, self.pancharatnam, self.norm2, self.populations
            )
        ]

    def columns(self):
        pops = self.populations
        return {
            "t": self.t,
            "concurrence": self.concurrence,
            "pancharatnam": self.pancharatnam,
            "norm2": self.norm2,
            "p11": pops[:, 0],
            "p12": pops[:, 1],
            "p21": pops[:, 2],
            "p22": pops[:, 3],
        }


assert tuple(f.name for f in fields(ObservableRecord)) == TIME_COLUMNS


class Pipeline:
    """Everything that does not depend on time, built once per configuration.

    ``strict`` rejects truncations whose initial tail exceeds ``TAIL_TOL``;
    tiny-truncation checks switch it off.
    """

    def __init__(self, cfg: SystemConfig, strict=True):
        self.cfg = cfg
        self.table = block_table(cfg)
        self.tail = initial_tail_mass(cfg)
        cut = truncation_tail(cfg)
        if strict and cut > TAIL_TOL:
            raise TruncationTooSmall(
                f"n_max={cfg.n_max} leaves coherent tail {cut:.3e} above {TAIL_TOL:g}"
            )
        self.a0 = initial_block_amplitudes(cfg, self.table, check=False)
        self.size = cfg.n_max + cfg.kappa + 1
        self.index = dense_indices(cfg, self.table).ravel()
        self._evolver = None

    @property
    def evolver(self):
        if self._evolver is None:
            self._evolver = BlockEvolver(self.cfg, self.table)
        return self._evolver

    def dense(self, amps, times):
        """Flat dense vectors ``(nt, F*F*4)`` from block amplitudes ``(nt, nb, 4)``."""
        times = np.asarray(times, dtype=float)
        phases = np.exp(-1j * self.table.alpha[None] * times[:, None, None])
        flat = np.zeros((len(times), self.size * self.size * 4), dtype=complex)
        flat[:, self.index] = (amps * phases).reshape(len(times), -1)
        return flat

    def initial_dense(self):
        return self.dense(self.a0[None], np.zeros(1))[0]

    def observe(self, flat, psi0):
        """Reduced matrices, raw norms and overlaps for a stack of dense vectors."""
        psi = flat.reshape(len(flat), -1, 4)
        rho = np.einsum("tfi,tfj->tij", psi, psi.conj())
        ov = np.einsum("d,td->t", psi0.conj(), flat)
        return rho, ov


def _summarise(times, rho, ov, tail):
    norm2 = np.real(np.trace(rho, axis1=-2, axis2=-1))
    if np.any(np.abs(ov) < PHASE_FLOOR):
        bad = float(times[np.argmin(np.abs(ov))])
        raise UndefinedPhase(f"overlap with the initial state vanishes at t={bad:.6g}")
    conc = concurrence(rho)
    pops = np.real(np.diagonal(rho, axis1=-2, axis2=-1)) / norm2[:, None]
    return TimeSeries(
        t=np.asarray(times, dtype=float),
        concurrence=np.atleast_1d(conc),
        pancharatnam=_principal_angle(ov),
        norm2=norm2,
        populations=pops,
        rho=rho,
        initial_tail=tail,
    )


def _chunks(n, size=CHUNK):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def _run_chunks(work, n, jobs):
    parts = _chunks(n)
    if jobs <= 1 or len(parts) == 1:
        return [work(s) for s in parts]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(work, parts))


def time_series(cfg: SystemConfig, times, jobs=1, strict=True, pipeline=None) -> TimeSeries:
    """Observables on an increasing time grid via the Newton propagator.

    The grid is cut into fixed chunks of ``CHUNK`` points; ``jobs`` only
    decides how many chunks run at once, so the numbers are the same for any
    degree of parallelism.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("times must be a non-empty 1-d grid")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    pipe = Pipeline(cfg, strict) if pipeline is None else pipeline
    evolver = pipe.evolver
    psi0 = pipe.initial_dense()

    def work(s):
        amps = evolver.evolve(pipe.a0, times[s])
        return pipe.observe(pipe.dense(amps, times[s]), psi0)

    parts = _run_chunks(work, len(times), jobs)
    rho = np.concatenate([p[0] for p in parts])
    ov = np.concatenate([p[1] for p in parts])
    return _summarise(times, rho, ov, pipe.tail)


def oracle_time_series(
    cfg: SystemConfig, times, include_counter_rotating=False, strict=True, pipeline=None
):
    """Same observables with amplitudes from the reference integrator.

    Returns ``(series, amplitudes)`` so callers can compare raw amplitudes too.
    """
    times = np.asarray(times, dtype=float)
    pipe = Pipeline(cfg, strict) if pipeline is None else pipeline
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    amps = reference_integrate(
        cfg, pipe.table, pipe.a0, times, include_counter_rotating=include_counter_rotating
    )
    rho, ov = pipe.observe(pipe.dense(amps, times), pipe.initial_dense())
    return _summarise(times, rho, ov, pipe.tail), amps


def phi_sweep(cfg: SystemConfig, t_values, phis, strict=True, pipeline=None):
    """Pancharatnam phase on a ``(len(t_values), len(phis))`` grid.

    The state is linear in ``exp(-i phi)``: ``psi = cos(theta) X + exp(-i phi)
    sin(theta) Y`` with ``X``, ``Y`` evolved from the upper and lower atomic
    components. Four overlaps per time therefore give every ``phi`` exactly.
    Entries where the overlap vanishes are NaN.
    """
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    phis = np.asarray(phis, dtype=float)
    pipe = Pipeline(cfg, strict) if pipeline is None else pipeline
    c, s = math.cos(cfg.theta), math.sin(cfg.theta)
    ax, ay = atomic_components(cfg, pipe.table, check=False)
    zero = np.zeros(1)
    x0 = pipe.dense(ax[None], zero)[0]
    y0 = pipe.dense(ay[None], zero)[0]
    xt = pipe.dense(pipe.evolver.evolve(ax, t_values), t_values)
    yt = pipe.dense(pipe.evolver.evolve(ay, t_values), t_values)
    xx, yy = xt @ x0.conj(), yt @ y0.conj()
    xy, yx = yt @ x0.conj(), xt @ y0.conj()
    rot = np.exp(-1j * phis)[None, :]
    ov = (
        (c * c) * xx[:, None]
        + (s * s) * yy[:, None]
        + (c * s) * (rot * xy[:, None] + yx[:, None] / rot)
    )
    return np.where(np.abs(ov) < PHASE_FLOOR, np.nan, _principal_angle(ov))
