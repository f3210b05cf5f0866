"""Block evolution.

Two independent routes:

* :func:`expm_newton` builds ``exp(-i M t)`` from the quartic eigenvalues with
  a Newton divided-difference chain, then undoes the rotating frame.
* :func:`reference_integrate` integrates the time-dependent amplitude
  equations directly with a step-doubling Runge-Kutta scheme.

Eigenvalue bookkeeping: if ``E_m`` are roots of ``det(E I - M)``, the
exponent nodes are ``-i E_m`` so that ``exp(-i M t)`` is literal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, StepUnderflow
from .model import (
    BlockAmplitudes,
    BlockCoefficients,
    BlockTable,
    SystemConfig,
    block_table,
    build_generator,
)
from .quartic import CONFLUENT_REL, RootSet, generator_roots, generator_roots_batch

REFERENCE_TOL = 1e-10
MIN_STEP = 1e-12


def order_nodes(nodes):
    """Sort nodes by real part (descending) keeping confluent clusters contiguous.

    Returns ``(ordered_nodes, cluster_ids)``. Ties in the real part within the
    confluence threshold are broken by the imaginary part, descending.
    """
    nodes = np.asarray(nodes, dtype=complex)
    scale = CONFLUENT_REL * (1.0 + np.max(np.abs(nodes), initial=0.0))
    n = len(nodes)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(nodes[i] - nodes[j]) < scale:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = list(groups.values())

    def key(members):
        centre = np.mean(nodes[members])
        # quantise the real part so noise below the threshold cannot reorder ties
        return (-round(centre.real / scale), -centre.imag)

    clusters.sort(key=key)
    order, ids = [], []
    for cid, members in enumerate(clusters):
        members = sorted(members, key=lambda i: -nodes[i].imag)
        order.extend(members)
        ids.extend([cid] * len(members))
    return nodes[order], np.array(ids)


@dataclass(frozen=True)
class DividedDifferenceTable:
    """Newton coefficients ``[x_1], [x_1, x_2], ...`` of ``exp(x t)``.

    ``entries[..., j]`` holds ``[x_1, ..., x_{j+1}]``; leading axes follow ``t``.
    """

    nodes: np.ndarray
    t: np.ndarray
    entries: np.ndarray


def _dd_batch(nodes, clusters, t):
    """Divided differences for stacked node sets.

    ``nodes`` and ``clusters`` have shape ``(nb, n)`` and must already be
    ordered with clusters contiguous; ``t`` has shape ``(nt,)``. Returns an
    array of shape ``(nt, nb, n)`` with the first row of the table.
    """
    nb, n = nodes.shape
    t = np.asarray(t, dtype=float)[:, None]
    x = [nodes[:, i][None, :] for i in range(n)]
    expo = [np.exp(xi * t) for xi in x]
    table = {(i, i): expo[i] for i in range(n)}
    for gap in range(1, n):
        for i in range(n - gap):
            j = i + gap
            same = (clusters[:, i] == clusters[:, j])[None, :]
            limit = t**gap / math.factorial(gap) * expo[i]
            diff = x[j] - x[i]
            safe = np.where(same, 1.0, diff)
            if gap == 1:
                quotient = expo[j] * np.expm1((x[i] - x[j]) * t) / (-safe)
            else:
                quotient = (table[i + 1, j] - table[i, j - 1]) / safe
            table[i, j] = np.where(same, limit, quotient)
    return np.stack([np.broadcast_to(table[0, j], (len(t), nb)) for j in range(n)], axis=-1)


def divided_differences(nodes, t) -> DividedDifferenceTable:
    """Divided differences of ``x -> exp(x t)`` at the exponent ``nodes``.

    ``nodes`` are the exponents themselves (a :class:`RootSet` is converted
    with ``-i E``). Confluent nodes use the derivative limit
    ``t^k exp(x t) / k!``. ``t`` may be a scalar or a 1-d array.
    """
    if isinstance(nodes, RootSet):
        nodes = -1j * nodes.roots
    ordered, clusters = order_nodes(nodes)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    entries = _dd_batch(ordered[None, :], clusters[None, :], tt)[:, 0, :]
    if np.ndim(t) == 0:
        entries = entries[0]
        tt = tt[0]
    return DividedDifferenceTable(nodes=ordered, t=tt, entries=entries)


def _newton_products(a, nodes):
    """``[I, (A - x1), (A - x1)(A - x2), ...]`` stacked on axis -3."""
    nb, n, _ = a.shape
    eye = np.broadcast_to(np.eye(n, dtype=complex), a.shape)
    prods = [eye.copy()]
    for j in range(n - 1):
        factor = a - nodes[:, j, None, None] * np.eye(n)
        prods.append(prods[-1] @ factor)
    return np.stack(prods, axis=1)


@dataclass(frozen=True)
class BlockPropagator:
    """``U = exp(-i M t)`` in the rotating frame plus the frame factors.

    ``frame`` multiplies rotating-frame amplitudes to give the original
    ones: ``(exp(i delta t), 1, 1, exp(-i delta t))``.
    """

    t: float
    matrix: np.ndarray
    frame: np.ndarray

    def apply(self, initial):
        a0 = initial.as_array() if isinstance(initial, BlockAmplitudes) else np.asarray(initial)
        return self.frame * (self.matrix @ a0)


def frame_factors(delta, t):
    t = np.asarray(t, dtype=float)
    ones = np.ones_like(t, dtype=complex)
    return np.stack([np.exp(1j * delta * t), ones, ones, np.exp(-1j * delta * t)], axis=-1)


def expm_newton(m, roots: RootSet, t: float, delta: float = 0.0) -> BlockPropagator:
    """Newton-form ``exp(-i M t)`` from the eigenvalues of ``M``."""
    m = np.asarray(m, dtype=complex)
    nodes, clusters = order_nodes(-1j * np.asarray(roots.roots))
    prods = _newton_products((-1j * m)[None], nodes[None])[0]
    dd = _dd_batch(nodes[None], clusters[None], np.array([t], dtype=float))[0, 0]
    u = np.tensordot(dd, prods, axes=(0, 0))
    return BlockPropagator(t=float(t), matrix=u, frame=frame_factors(delta, t))


def evolve_block(cfg: SystemConfig, block: BlockCoefficients, initial, t: float) -> BlockAmplitudes:
    """Amplitudes ``A_1..A_4`` of one block at time ``t`` (original frame)."""
    m = build_generator(block)
    roots = generator_roots(m)
    prop = expm_newton(m, roots, t, block.delta)
    return BlockAmplitudes.from_array(prop.apply(initial))


class BlockEvolver:
    """Newton-form evolution of every block of a configuration at once.

    Roots come from the batched closed-form quartic; the divided
    differences and the final contraction are vectorised over blocks and
    times. The result depends only on the inputs, never on how callers
    chunk the time grid.
    """

    def __init__(self, cfg: SystemConfig, table: BlockTable | None = None):
        self.cfg = cfg
        self.table = block_table(cfg) if table is None else table
        gens = self.table.generators()
        roots, residuals, fallback = generator_roots_batch(gens)
        bad = ~np.all(np.isfinite(roots), axis=-1)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise SolverError(
                f"block index {i} = ({self.table.n1[i]}, {self.table.n2[i]}): non-finite eigenvalues"
            )
        self.roots = roots
        self.residuals = residuals
        self.fallback = fallback
        nodes = np.empty_like(roots)
        clusters = np.empty(roots.shape, dtype=int)
        for i in range(len(roots)):
            nodes[i], clusters[i] = order_nodes(-1j * roots[i])
        self.generators = gens
        self.nodes = nodes
        self.clusters = clusters
        self.products = _newton_products(-1j * gens, nodes)

    def matrices(self, t):
        """Rotating-frame propagators, shape ``(nt, nb, 4, 4)``."""
        dd = _dd_batch(self.nodes, self.clusters, np.atleast_1d(t))
        return np.einsum("tbk,bkij->tbij", dd, self.products)

    def evolve(self, a0, times):
        """Original-frame amplitudes for initial data ``a0`` (nb, 4); shape (nt, nb, 4)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        w = np.einsum("bkij,bj->bki", self.products, a0)
        dd = _dd_batch(self.nodes, self.clusters, times)
        b = np.einsum("tbk,bki->tbi", dd, w)
        return b * frame_factors(self.table.delta, times)[:, None, :]


# ---------------------------------------------------------------------------
# reference integrator

# Butcher's seven-stage sixth-order explicit method
_RK_C = np.array([0.0, 1 / 3, 2 / 3, 1 / 3, 1 / 2, 1 / 2, 1.0])
_RK_A = (
    (),
    (1 / 3,),
    (0.0, 2 / 3),
    (1 / 12, 1 / 3, -1 / 12),
    (-1 / 16, 9 / 8, -3 / 16, -3 / 8),
    (0.0, 9 / 8, -3 / 8, -3 / 4, 1 / 2),
    (9 / 44, -9 / 11, 63 / 44, 18 / 11, 0.0, -16 / 11),
)
_RK_B = np.array([11 / 120, 0.0, 27 / 40, 27 / 40, -4 / 15, -4 / 15, 11 / 120])
_RK_ORDER = 6


def _rk_step(rhs, t, y, h, k0=None):
    ks = [rhs(t, y) if k0 is None else k0]
    for i in range(1, 7):
        yi = y
        for j, aij in enumerate(_RK_A[i]):
            if aij:
                yi = yi + (h * aij) * ks[j]
        ks.append(rhs(t + _RK_C[i] * h, yi))
    out = y
    for bi, ki in zip(_RK_B, ks):
        if bi:
            out = out + (h * bi) * ki
    return out


def _amplitude_rhs(k, g1, g2, delta, counter_freq=None):
    k = np.asarray(k)
    k1, k2, k3, k4 = (k[..., i] for i in range(4))

    def rhs(t, a):
        up = np.exp(1j * delta * t)
        down = np.exp(-1j * delta * t)
        if counter_freq is not None:
            up = up + np.exp(1j * counter_freq * t)
            down = down + np.exp(-1j * counter_freq * t)
        a1, a2, a3, a4 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
        out = np.empty_like(a)
        out[..., 0] = k1 * a1 + up * (g2 * a2 + g1 * a3)
        out[..., 1] = k2 * a2 + g2 * down * a1 + g1 * up * a4
        out[..., 2] = k3 * a3 + g1 * down * a1 + g2 * up * a4
        out[..., 3] = k4 * a4 + down * (g1 * a2 + g2 * a3)
        return -1j * out

    return rhs


def integrate_adaptive(rhs, y0, times, tol=REFERENCE_TOL, h0=1e-2):
    """Step-doubling integration of ``y' = rhs(t, y)`` to each of ``times``.

    The local error estimate ``|y_half - y_full| / (2^6 - 1)`` is kept below
    ``tol * h`` (error per unit time). Returns an array ``(nt,) + y0.shape``.
    """
    times = np.asarray(times, dtype=float)
    y = np.array(y0, dtype=complex)
    out = np.empty((len(times),) + y.shape, dtype=complex)
    t, h = 0.0, h0
    for idx, target in enumerate(times):
        while t < target:
            step = min(h, target - t)
            k0 = rhs(t, y)
            full = _rk_step(rhs, t, y, step, k0)
            half = _rk_step(rhs, t, y, step / 2, k0)
            half = _rk_step(rhs, t + step / 2, half, step / 2)
            err = np.max(np.abs(half - full)) / (2**_RK_ORDER - 1)
            allowed = tol * step
            factor = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (allowed / err) ** (1 / _RK_ORDER)))
            if err <= allowed:
                t = target if step == target - t else t + step
                y = half
                if step == h:
                    h = step * factor
            else:
                h = step * factor
            if h < MIN_STEP:
                raise StepUnderflow(f"step size {h:.3e} below {MIN_STEP:g} at t={t:.6g}")
        out[idx] = y
    return out


def reference_integrate(
    cfg: SystemConfig,
    block,
    initial,
    t,
    include_counter_rotating: bool = False,
    tol: float = REFERENCE_TOL,
):
    """Direct integration of the time-dependent amplitude equations.

    ``block`` is a :class:`BlockCoefficients` (``initial`` then a
    :class:`BlockAmplitudes` or length-4 array) or a :class:`BlockTable`
    (``initial`` of shape ``(nb, 4)``). With a scalar ``t`` the state at that
    time is returned; with an increasing array, one state per entry.

    ``include_counter_rotating`` restores the ``exp(+-i(Delta + varpi) t)``
    couplings dropped by the rotating-wave approximation.
    """
    if isinstance(block, BlockCoefficients):
        k, g1, g2 = block.k, block.g1, block.g2
        a0 = initial.as_array() if isinstance(initial, BlockAmplitudes) else np.asarray(initial)
    else:
        k, g1, g2 = block.k, block.g1, block.g2
        a0 = np.asarray(initial)
    counter = cfg.detuning + cfg.varpi if include_counter_rotating else None
    rhs = _amplitude_rhs(k, g1, g2, cfg.delta, counter)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("times must be non-negative and increasing")
    out = integrate_adaptive(rhs, a0.astype(complex), times, tol=tol)
    if np.ndim(t) == 0:
        out = out[0]
        if isinstance(block, BlockCoefficients):
            return BlockAmplitudes.from_array(out)
    return out
