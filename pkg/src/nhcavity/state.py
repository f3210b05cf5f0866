"""Initial state, dense assembly and the reduced two-atom density matrix.

The dense basis is ``|f1, f2> (x) |a1, a2>`` stored as an array of shape
``(F, F, 2, 2)`` with ``F = n_max + kappa + 1`` photon numbers per mode and
atomic index 0 for the upper level, 1 for the lower one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, pdtrc

from .errors import DimensionMismatch, TruncationTooSmall
from .model import BLOCK_SLOTS, BlockAmplitudes, BlockTable, SystemConfig, block_table

__all__ = [
    "TAIL_TOL",
    "BlockAmplitudes",
    "CoherentExpansion",
    "DenseState",
    "ReducedDensity",
    "assemble_dense",
    "atomic_components",
    "coherent_coefficients",
    "dense_indices",
    "initial_block_amplitudes",
    "initial_tail_mass",
    "overlap",
    "partial_trace_atoms",
    "truncation_tail",
]

TAIL_TOL = 1e-10


@dataclass(frozen=True)
class CoherentExpansion:
    """Fock amplitudes ``q_0..q_n_cut`` of a coherent state with real ``alpha``."""

    nbar: float
    coefficients: np.ndarray
    tail_mass: float

    @property
    def n_cut(self):
        return len(self.coefficients) - 1


def _poisson_amplitudes(nbar, n_cut):
    n = np.arange(n_cut + 1)
    if nbar == 0:
        return (n == 0).astype(complex)
    log_q = 0.5 * (-nbar + n * np.log(nbar) - gammaln(n + 1))
    return np.exp(log_q).astype(complex)


def coherent_coefficients(nbar: float, n_cut: int, check=True) -> CoherentExpansion:
    """Truncated coherent-state amplitudes and the probability left out.

    The tail ``P(N > n_cut)`` comes from the Poisson survival function rather
    than ``1 - sum``, which would lose everything below machine epsilon.
    """
    if nbar < 0:
        raise ValueError(f"nbar must be non-negative, got {nbar}")
    if n_cut < 0:
        raise ValueError(f"n_cut must be non-negative, got {n_cut}")
    q = _poisson_amplitudes(float(nbar), int(n_cut))
    tail = 0.0 if nbar == 0 else float(pdtrc(int(n_cut), float(nbar)))
    if check and tail > TAIL_TOL:
        raise TruncationTooSmall(
            f"coherent tail {tail:.3e} above {TAIL_TOL:g} for nbar={nbar}, n_cut={n_cut}"
        )
    return CoherentExpansion(nbar=float(nbar), coefficients=q, tail_mass=tail)


def _mode_expansions(cfg, check=True):
    cut = cfg.n_max + cfg.kappa
    return [coherent_coefficients(cfg.nbar[j], cut, check=check) for j in range(2)]


def atomic_components(cfg: SystemConfig, table: BlockTable | None = None, check=True):
    """Block amplitudes of ``|1,1>|a>|a>`` and ``|2,2>|a>|a>``, each ``(nb, 4)``."""
    table = block_table(cfg) if table is None else table
    q1, q2 = (e.coefficients for e in _mode_expansions(cfg, check))
    kap = cfg.kappa
    upper = np.zeros((len(table), 4), dtype=complex)
    lower = np.zeros((len(table), 4), dtype=complex)
    upper[:, 0] = q1[table.n1] * q2[table.n2]
    lower[:, 3] = q1[table.n1 + kap] * q2[table.n2 + kap]
    return upper, lower


def initial_block_amplitudes(cfg: SystemConfig, table: BlockTable | None = None, check=True):
    """Initial ``A_1..A_4`` of every block, shape ``(nb, 4)`` in table order.

    The product state ``(cos(theta)|1,1> + exp(-i phi) sin(theta)|2,2>)|a>|a>``
    projected onto the block kets: ``A_1 = cos(theta) q_n1 q_n2`` and
    ``A_4 = exp(-i phi) sin(theta) q_{n1+k} q_{n2+k}``.
    """
    upper, lower = atomic_components(cfg, table, check)
    return np.cos(cfg.theta) * upper + np.exp(-1j * cfg.phi) * np.sin(cfg.theta) * lower


def initial_tail_mass(cfg: SystemConfig) -> float:
    """Norm missing from the initial block amplitudes.

    Block labels run over ``0..n_max``, so the upper-level component keeps
    photon numbers ``0..n_max`` of each mode and the lower-level component
    keeps ``kappa..n_max + kappa``. Everything else is the combined tail.
    """
    n_max, kap = cfg.n_max, cfg.kappa
    p = [np.abs(e.coefficients) ** 2 for e in _mode_expansions(cfg, check=False)]
    kept_upper = np.sum(p[0][: n_max + 1]) * np.sum(p[1][: n_max + 1])
    kept_lower = np.sum(p[0][kap:]) * np.sum(p[1][kap:])
    c2, s2 = np.cos(cfg.theta) ** 2, np.sin(cfg.theta) ** 2
    return float(c2 * (1.0 - kept_upper) + s2 * (1.0 - kept_lower))


def truncation_tail(cfg: SystemConfig) -> float:
    """Largest per-mode coherent probability beyond photon number ``n_max``.

    Unlike :func:`initial_tail_mass` this excludes the photon numbers below
    ``kappa`` that the lower-level kets cannot carry, which no truncation
    can recover.
    """
    return max(coherent_coefficients(nb, cfg.n_max, check=False).tail_mass for nb in cfg.nbar)


def dense_indices(cfg: SystemConfig, table: BlockTable) -> np.ndarray:
    """Flat dense index of every block slot, shape ``(nb, 4)``."""
    size = cfg.n_max + cfg.kappa + 1
    idx = np.empty((len(table), 4), dtype=np.intp)
    for m, (s1, s2, a1, a2) in enumerate(BLOCK_SLOTS):
        f1 = table.n1 + s1 * cfg.kappa
        f2 = table.n2 + s2 * cfg.kappa
        idx[:, m] = np.ravel_multi_index((f1, f2, a1 - 1, a2 - 1), (size, size, 2, 2))
    return idx


@dataclass(frozen=True)
class DenseState:
    """State vector on ``|f1, f2, a1, a2>`` at time ``t`` (shape ``(F, F, 2, 2)``)."""

    amplitudes: np.ndarray
    t: float

    @property
    def shape(self):
        return self.amplitudes.shape

    def norm2(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def assemble_dense(amplitudes, cfg: SystemConfig, t, table: BlockTable | None = None):
    """Scatter evolved block amplitudes into the dense basis.

    ``amplitudes`` has shape ``(nb, 4)`` for one time or ``(nt, nb, 4)`` for a
    grid ``t``; component ``m`` picks up ``exp(-i alpha_m t)``. Returns a
    :class:`DenseState` or a list of them.
    """
    table = block_table(cfg) if table is None else table
    amps = np.asarray(amplitudes, dtype=complex)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    single = amps.ndim == 2
    if single:
        amps = amps[None]
    if amps.shape[1:] != (len(table), 4) or amps.shape[0] != len(times):
        raise DimensionMismatch(
            f"amplitudes of shape {np.shape(amplitudes)} do not match {len(table)} blocks"
        )
    size = cfg.n_max + cfg.kappa + 1
    idx = dense_indices(cfg, table)
    phases = np.exp(-1j * table.alpha[None] * times[:, None, None])
    flat = np.zeros((len(times), size * size * 4), dtype=complex)
    flat[:, idx.ravel()] = (amps * phases).reshape(len(times), -1)
    states = [
        DenseState(amplitudes=row.reshape(size, size, 2, 2), t=float(tt))
        for row, tt in zip(flat, times)
    ]
    return states[0] if single else states


@dataclass(frozen=True)
class ReducedDensity:
    """Two-atom density matrix over ``|1,1>, |1,2>, |2,1>, |2,2>``.

    ``matrix`` is the raw partial trace; ``raw_trace`` is its trace, which
    shrinks under the non-Hermitian evolution.
    """

    matrix: np.ndarray
    raw_trace: float

    def normalized(self):
        return self.matrix / self.raw_trace

    def populations(self):
        return np.real(np.diag(self.normalized()))


def _trace_fields(psi):
    """``rho[..., i, j] = sum_f psi[..., f, i] conj(psi[..., f, j])`` in a fixed order."""
    return np.einsum("...fi,...fj->...ij", psi, psi.conj())


def partial_trace_atoms(state) -> ReducedDensity:
    """Trace both field modes out of a :class:`DenseState`."""
    amps = state.amplitudes if isinstance(state, DenseState) else np.asarray(state)
    psi = amps.reshape(-1, 4)
    rho = _trace_fields(psi)
    return ReducedDensity(matrix=rho, raw_trace=float(np.real(np.trace(rho))))


def overlap(a, b) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    va = a.amplitudes if isinstance(a, DenseState) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, DenseState) else np.asarray(b)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"cannot overlap shapes {va.shape} and {vb.shape}")
    return complex(np.vdot(va.ravel(), vb.ravel()))
