"""Eigenvalues of 4x4 generators through the closed-form quartic.

The characteristic polynomial is ``det(E I - M) = E^4 + b E^3 + c E^2 + d E + e``.
:func:`solve_quartic` follows the resolvent route (depressed quartic, cubic
resolvent through ``Delta0``/``Delta1``/``Q``, then ``S``) and lets the
characteristic residual pick among cube-root branches and sign pairings.
:func:`companion_roots` is the dense-eigenvalue oracle and the fallback.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

RESIDUAL_TOL = 1e-9
CONFLUENT_REL = 1e-8

_CUBE_ROOTS_OF_UNITY = (1.0, complex(-0.5, 3**0.5 / 2), complex(-0.5, -(3**0.5) / 2))


@dataclass(frozen=True)
class QuarticCoeffs:
    b: complex
    c: complex
    d: complex
    e: complex

    @cached_property
    def p(self):
        b, c = self.b, self.c
        return (8 * c - 3 * b * b) / 8

    @cached_property
    def q(self):
        b, c, d = self.b, self.c, self.d
        return (b**3 - 4 * b * c + 8 * d) / 8

    @cached_property
    def delta0(self):
        b, c, d, e = self.b, self.c, self.d, self.e
        return c * c - 3 * b * d + 12 * e

    @cached_property
    def delta1(self):
        b, c, d, e = self.b, self.c, self.d, self.e
        return 2 * c**3 - 9 * b * c * d + 27 * (b * b * e + d * d) - 72 * c * e

    @cached_property
    def big_q(self):
        """Principal ``Q``; the radical sign is chosen to avoid cancellation."""
        return complex(_principal_q(self.delta0, self.delta1))

    @cached_property
    def s(self):
        """``S`` of the principal branch (may be zero for degenerate inputs)."""
        return complex(_s_from_q(self.p, self.delta0, self.big_q))

    def as_array(self):
        return np.array([1.0, self.b, self.c, self.d, self.e], dtype=complex)

    def __call__(self, x):
        """Evaluate the monic polynomial (Horner)."""
        return (((x + self.b) * x + self.c) * x + self.d) * x + self.e


@dataclass(frozen=True)
class RootSet:
    """Four roots with relative characteristic residuals."""

    roots: np.ndarray
    residuals: np.ndarray
    method: str = "closed-form"
    confluent: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.confluent is None:
            object.__setattr__(self, "confluent", confluent_pairs(self.roots))

    @property
    def worst_residual(self):
        return float(np.max(self.residuals))


def char_coeffs_batch(m):
    """Arrays ``(b, c, d, e)`` of ``det(E I - M)`` for a stack of 4x4 matrices."""
    m = np.asarray(m, dtype=complex)
    if m.shape[-2:] != (4, 4):
        raise ValueError(f"expected 4x4 matrices, got shape {m.shape}")
    a = [[m[..., i, j] for j in range(4)] for i in range(4)]
    trace = a[0][0] + a[1][1] + a[2][2] + a[3][3]

    def minor2(i, j):
        return a[i][i] * a[j][j] - a[i][j] * a[j][i]

    def minor3(i, j, k):
        return (
            a[i][i] * (a[j][j] * a[k][k] - a[j][k] * a[k][j])
            - a[i][j] * (a[j][i] * a[k][k] - a[j][k] * a[k][i])
            + a[i][k] * (a[j][i] * a[k][j] - a[j][j] * a[k][i])
        )

    sum2 = sum(minor2(i, j) for i, j in itertools.combinations(range(4), 2))
    sum3 = sum(minor3(*idx) for idx in itertools.combinations(range(4), 3))

    # Laplace expansion along the first two rows
    def cross(r0, r1, c0, c1):
        return a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]

    det = 0j
    cols = range(4)
    for c0, c1 in itertools.combinations(cols, 2):
        rest = [c for c in cols if c not in (c0, c1)]
        sign = (-1) ** (1 + c0 + c1)
        det = det + sign * cross(0, 1, c0, c1) * cross(2, 3, rest[0], rest[1])
    return -trace, sum2, -sum3, det


def char_coeffs(m) -> QuarticCoeffs:
    """Coefficients of ``det(E I - M)`` from traces of principal minors."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    return QuarticCoeffs(*(complex(v) for v in char_coeffs_batch(m)))


def _horner(coeffs, x):
    b, c, d, e = coeffs
    return (((x + b) * x + c) * x + d) * x + e


def _relative_residuals(coeffs, roots):
    mags = [np.abs(v)[..., None] for v in coeffs]
    r = np.abs(roots)
    scale = ((((r + mags[0]) * r + mags[1]) * r + mags[2]) * r) + mags[3]
    value = np.abs(_horner([v[..., None] for v in coeffs], roots))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(value == 0, 0.0, value / np.where(scale == 0, 1.0, scale))


def relative_residuals(coeffs: QuarticCoeffs, roots) -> np.ndarray:
    """``|P(E)| / sum_k |a_k| |E|^k`` for each root (zero when both vanish)."""
    parts = [np.asarray(v, dtype=complex) for v in (coeffs.b, coeffs.c, coeffs.d, coeffs.e)]
    return _relative_residuals(parts, np.asarray(roots, dtype=complex))


def confluent_pairs(roots) -> np.ndarray:
    """Boolean matrix of root pairs closer than the confluence threshold."""
    roots = np.asarray(roots, dtype=complex)
    scale = CONFLUENT_REL * (1.0 + np.max(np.abs(roots)))
    return np.abs(roots[:, None] - roots[None, :]) < scale


def _cbrt(z):
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(np.log(np.where(z == 0, 1.0, z)) / 3)
    return np.where(z == 0, 0j, out)


def _principal_q(delta0, delta1):
    rad = np.sqrt(delta1 * delta1 - 4 * delta0**3 + 0j)
    num = np.where(np.abs(delta1 + rad) >= np.abs(delta1 - rad), delta1 + rad, delta1 - rad)
    return _cbrt(num / 2)


def _s_from_q(p, delta0, q_big):
    """``S`` of the resolvent; ``Q = 0`` (triple-root resolvent) drops the ``Q`` terms."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = -2 * p / 3 + np.where(q_big == 0, 0j, (q_big + delta0 / q_big) / 3)
    return 0.5 * np.sqrt(inner + 0j)


def _intermediates(b, c, d, e):
    p = (8 * c - 3 * b * b) / 8
    q = (b**3 - 4 * b * c + 8 * d) / 8
    delta0 = c * c - 3 * b * d + 12 * e
    delta1 = 2 * c**3 - 9 * b * c * d + 27 * (b * b * e + d * d) - 72 * c * e
    return p, q, delta0, delta1


def _candidates(b, c, d, e):
    """Closed-form root sets for every cube-root branch and sign pairing, ``(..., 6, 4)``.

    Branches whose ``S`` vanishes are returned as NaN.
    """
    p, q, delta0, delta1 = _intermediates(b, c, d, e)
    q0 = _principal_q(delta0, delta1)
    shift = -b / 4
    out = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for w in _CUBE_ROOTS_OF_UNITY:
            s = _s_from_q(p, delta0, q0 * w)
            dead = s == 0
            for flip in (1, -1):
                r_plus = 0.5 * np.sqrt(-4 * s * s - 2 * p - flip * q / s)
                r_minus = 0.5 * np.sqrt(-4 * s * s - 2 * p + flip * q / s)
                cand = np.stack(
                    [shift + s + r_plus, shift + s - r_plus, shift - s + r_minus, shift - s - r_minus],
                    axis=-1,
                )
                out.append(np.where(dead[..., None], np.nan, cand))
    return np.stack(out, axis=-2)


def _polish(coeffs, roots, steps=2):
    """Guarded Newton steps: a step is kept only where the residual drops."""
    b, c, d, e = (v[..., None] for v in coeffs)
    x = roots.copy()
    fx = _horner((b, c, d, e), x)
    for _ in range(steps):
        dfx = ((4 * x + 3 * b) * x + 2 * c) * x + d
        with np.errstate(divide="ignore", invalid="ignore"):
            y = x - fx / dfx
        fy = _horner((b, c, d, e), y)
        better = np.isfinite(y) & (np.abs(fy) < np.abs(fx))
        x = np.where(better, y, x)
        fx = np.where(better, fy, fx)
    return x


_PARTITIONS = ((0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2))
CLUSTER_REL = 1e-4


def _refine_pairs(coeffs, roots):
    """Re-solve tight root pairs from the better-conditioned Vieta relations.

    A pair ``(r_i, r_j)`` whose partners ``r_k, r_l`` are well separated has
    ``r_i + r_j = -b - r_k - r_l`` and ``r_i r_j = e / (r_k r_l)``; the
    quadratic through those reproduces the split far better than the
    closed form, which subtracts quantities of the size of the large roots.
    """
    b, e = coeffs[0], coeffs[3]
    scale = 1.0 + np.max(np.abs(roots), axis=-1)
    out = roots.copy()
    for ia, ib, ic, id_ in _PARTITIONS:
        for (i, j), (k, l) in (((ia, ib), (ic, id_)), ((ic, id_), (ia, ib))):
            ri, rj, rk, rl = out[:, i], out[:, j], out[:, k], out[:, l]
            gap = np.abs(ri - rj)
            centre = 0.5 * (ri + rj)
            apart = np.minimum(np.abs(centre - rk), np.abs(centre - rl))
            partner = np.abs(rk * rl)
            use = (gap < CLUSTER_REL * scale) & (apart > 100 * gap) & (partner > 1e-8 * scale**2)
            if not np.any(use):
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                total = -b - rk - rl
                prod = e / np.where(use, rk * rl, 1.0)
                half = 0.5 * total
                root = np.sqrt(half * half - prod)
            # keep the labelling closest to the previous estimates
            a1, a2 = half + root, half - root
            keep = np.abs(a1 - ri) + np.abs(a2 - rj) <= np.abs(a2 - ri) + np.abs(a1 - rj)
            new_i = np.where(keep, a1, a2)
            new_j = np.where(keep, a2, a1)
            good = use & np.isfinite(new_i) & np.isfinite(new_j)
            out[:, i] = np.where(good, new_i, ri)
            out[:, j] = np.where(good, new_j, rj)
    return out


def _improve(coeffs, roots, polish):
    if not polish:
        return roots
    roots = _polish(coeffs, roots)
    refined = _refine_pairs(coeffs, roots)
    before = np.max(_relative_residuals(coeffs, roots), axis=-1)
    after = np.max(_relative_residuals(coeffs, refined), axis=-1)
    accept = np.isfinite(after) & (after <= np.maximum(10 * before, 1e-12))
    return np.where(accept[:, None], refined, roots)


def _companion_stack(b, c, d, e):
    n = np.shape(b)
    comp = np.zeros(n + (4, 4), dtype=complex)
    comp[..., 1, 0] = comp[..., 2, 1] = comp[..., 3, 2] = 1.0
    comp[..., 0, 3] = -e
    comp[..., 1, 3] = -d
    comp[..., 2, 3] = -c
    comp[..., 3, 3] = -b
    return comp


def solve_quartic_batch(b, c, d, e, polish=True):
    """Closed-form roots for arrays of coefficients.

    Returns ``(roots, residuals, fallback)`` with shapes ``(n, 4)``, ``(n, 4)``
    and ``(n,)``; ``fallback`` marks rows taken from the companion matrix
    because no closed-form candidate reached ``RESIDUAL_TOL``.
    """
    coeffs = [np.atleast_1d(np.asarray(v, dtype=complex)) for v in (b, c, d, e)]
    cands = _candidates(*coeffs)
    worst = np.max(_relative_residuals([v[..., None] for v in coeffs], cands), axis=-1)
    worst = np.where(np.all(np.isfinite(cands), axis=-1), worst, np.inf)
    pick = np.argmin(worst, axis=-1)
    roots = np.take_along_axis(cands, pick[:, None, None], axis=1)[:, 0]
    usable = np.isfinite(np.take_along_axis(worst, pick[:, None], axis=1)[:, 0])
    roots = np.where(usable[:, None], roots, 0j)
    roots = _improve(coeffs, roots, polish)
    res = _relative_residuals(coeffs, roots)
    fallback = ~usable | (np.max(res, axis=-1) > RESIDUAL_TOL)
    if np.any(fallback):
        sub = [v[fallback] for v in coeffs]
        roots[fallback] = _improve(sub, np.linalg.eigvals(_companion_stack(*sub)), polish)
        res[fallback] = _relative_residuals(sub, roots[fallback])
    return roots, res, fallback


def companion_roots_batch(b, c, d, e):
    """Companion-matrix eigenvalues for arrays of coefficients, ``(n, 4)``."""
    coeffs = [np.atleast_1d(np.asarray(v, dtype=complex)) for v in (b, c, d, e)]
    return np.linalg.eigvals(_companion_stack(*coeffs))


def solve_quartic(coeffs: QuarticCoeffs, polish=True) -> RootSet:
    """Closed-form roots, falling back to the companion matrix when needed."""
    roots, res, fallback = solve_quartic_batch(coeffs.b, coeffs.c, coeffs.d, coeffs.e, polish)
    method = "companion" if fallback[0] else "closed-form"
    return RootSet(roots=roots[0], residuals=res[0], method=method)


def companion_matrix(coeffs: QuarticCoeffs) -> np.ndarray:
    return _companion_stack(coeffs.b, coeffs.c, coeffs.d, coeffs.e)


def companion_roots(coeffs: QuarticCoeffs) -> RootSet:
    roots = np.linalg.eigvals(companion_matrix(coeffs))
    return RootSet(roots=roots, residuals=relative_residuals(coeffs, roots), method="companion")


def generator_roots(m, polish=True) -> RootSet:
    """Eigenvalues of a 4x4 generator via its characteristic quartic."""
    return solve_quartic(char_coeffs(m), polish=polish)


def generator_roots_batch(m, polish=True):
    """Batched :func:`generator_roots`; returns ``(roots, residuals, fallback)``."""
    return solve_quartic_batch(*char_coeffs_batch(m), polish=polish)


_PERMUTATIONS = np.array(list(itertools.permutations(range(4))))


def pair_roots_batch(a, b):
    """Optimal pairing for stacks of four roots; returns ``(b_sorted, max_gap)`` per row."""
    a = np.asarray(a)
    b = np.asarray(b)
    perm_b = b[:, _PERMUTATIONS]  # (n, 24, 4)
    cost = np.sum(np.abs(a[:, None, :] - perm_b), axis=-1)
    best = np.argmin(cost, axis=-1)
    chosen = perm_b[np.arange(len(b)), best]
    return chosen, np.max(np.abs(a - chosen), axis=-1)


def pair_roots(a, b):
    """Reorder ``b`` to minimise total distance to ``a``; returns (b_sorted, max_gap)."""
    a = np.asarray(a)
    b = np.asarray(b)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(len(b))):
        cand = b[list(perm)]
        cost = np.sum(np.abs(a - cand))
        if cost < best_cost:
            best, best_cost = cand, cost
    return best, float(np.max(np.abs(a - best)))
