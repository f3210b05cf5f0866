"""Physical parameters and per-block generators.

The Hilbert space splits into independent four-dimensional blocks labelled
by ``(n1, n2)``. Block ``(n1, n2)`` spans the kets

    1: |n1,      n2,      1, 1>
    2: |n1,      n2 + k,  1, 2>
    3: |n1 + k,  n2,      2, 1>
    4: |n1 + k,  n2 + k,  2, 2>

with ``k`` the photon multiplicity, atomic level 1 the upper level and 2 the
lower one. All frequencies and rates are in units of the coupling amplitude
``lambda`` so that time is the dimensionless ``lambda * t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import (
    BadTruncation,
    ConfigError,
    DetuningMismatch,
    IndexOutOfRange,
    NegativeRate,
    RegimeWarning,
)

DETUNING_TOL = 1e-12
# ratio below which "Omega >> Gamma" is considered violated
REGIME_RATIO = 10.0

# (field-1 shift, field-2 shift, atom-1 level, atom-2 level) of the four block kets
BLOCK_SLOTS = ((0, 0, 1, 1), (0, 1, 1, 2), (1, 0, 2, 1), (1, 1, 2, 2))


def _pair(value, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (2,))
    return tuple(float(v) for v in arr)


def _levels(value, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (2, 2))
    return tuple(tuple(float(v) for v in row) for row in arr)


def default_truncation(nbar, kappa):
    """Smallest block label range keeping the coherent tail below 1e-10."""
    top = max(_pair(nbar, "nbar"))
    return math.ceil(top + 10.0 * math.sqrt(top)) + int(kappa)


@dataclass(frozen=True)
class SystemConfig:
    """Full parameter set of the two-atom, two-mode model.

    ``omega_atom[j][l]`` and ``gamma_atom[j][l]`` are the frequency and decay
    rate of level ``j + 1`` of atom ``l + 1``. Per-mode quantities are pairs.
    ``n_max`` is the inclusive upper block label; ``None`` means "pick the
    default from ``nbar``" and is resolved by :func:`validate_config`.
    """

    omega_atom: tuple = ((0.1, 0.1), (0.1, 0.1))
    gamma_atom: tuple = ((0.0, 0.0), (0.0, 0.0))
    omega_field: tuple = (0.1, 0.1)
    gamma_field: tuple = (0.0, 0.0)
    lambda_coupling: tuple = (1.0, 1.0)
    varpi: float = 0.0
    kappa: int = 1
    theta: float = math.pi / 4
    phi: float = math.pi / 2
    nbar: tuple = (10.0, 10.0)
    n_max: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega_atom", _levels(self.omega_atom, "omega_atom"))
        object.__setattr__(self, "gamma_atom", _levels(self.gamma_atom, "gamma_atom"))
        for name in ("omega_field", "gamma_field", "lambda_coupling", "nbar"):
            object.__setattr__(self, name, _pair(getattr(self, name), name))

    @classmethod
    def symmetric(cls, *, Omega=0.1, omega=0.1, Gamma=0.0, gamma=0.0, lam=1.0, **kw):
        """Both atoms and both modes share the same frequencies and rates."""
        return cls(
            omega_atom=Omega,
            gamma_atom=Gamma,
            omega_field=omega,
            gamma_field=gamma,
            lambda_coupling=lam,
            **kw,
        )

    def atom_detunings(self):
        """Transition frequency of each atom minus ``kappa`` times its mode frequency."""
        out = []
        for atom in range(2):
            transition = 0.5 * (self.omega_atom[0][atom] + self.omega_atom[1][atom])
            out.append(transition - self.kappa * self.omega_field[atom])
        return tuple(out)

    @property
    def detuning(self):
        return self.atom_detunings()[0]

    @property
    def delta(self):
        return self.detuning - self.varpi

    @property
    def field_cutoff(self):
        """Highest photon number present in the dense basis."""
        return self.n_max + self.kappa

    def to_dict(self):
        return asdict(self)


def validate_config(raw: SystemConfig) -> SystemConfig:
    """Check hard invariants, warn on soft ones, resolve the default truncation."""
    values = [
        *np.ravel(raw.omega_atom), *np.ravel(raw.gamma_atom), *raw.omega_field,
        *raw.gamma_field, *raw.lambda_coupling, *raw.nbar, raw.varpi, raw.theta, raw.phi,
    ]
    if not all(math.isfinite(v) for v in values):
        raise ConfigError("all parameters must be finite")
    if int(raw.kappa) != raw.kappa or raw.kappa < 1:
        raise ConfigError(f"kappa must be a positive integer, got {raw.kappa!r}")
    rates = {
        "gamma_atom": np.ravel(raw.gamma_atom),
        "gamma_field": raw.gamma_field,
        "lambda_coupling": raw.lambda_coupling,
    }
    for name, vals in rates.items():
        if min(vals) < 0:
            raise NegativeRate(f"{name} must be non-negative, got {tuple(vals)}")
    if min(raw.nbar) < 0:
        raise ConfigError(f"nbar must be non-negative, got {raw.nbar}")

    cfg = replace(raw, kappa=int(raw.kappa))
    if cfg.n_max is None:
        cfg = replace(cfg, n_max=default_truncation(cfg.nbar, cfg.kappa))
    if int(cfg.n_max) != cfg.n_max or cfg.n_max < cfg.kappa:
        raise BadTruncation(f"n_max={cfg.n_max} must be an integer >= kappa={cfg.kappa}")
    cfg = replace(cfg, n_max=int(cfg.n_max))

    d1, d2 = cfg.atom_detunings()
    if abs(d1 - d2) > DETUNING_TOL:
        raise DetuningMismatch(f"atom detunings differ: {d1!r} vs {d2!r}")

    for j in range(2):
        for atom in range(2):
            if cfg.gamma_atom[j][atom] * REGIME_RATIO > cfg.omega_atom[j][atom]:
                warnings.warn(
                    f"Gamma[{j + 1}][{atom + 1}]={cfg.gamma_atom[j][atom]} is not "
                    f"small against Omega={cfg.omega_atom[j][atom]}",
                    RegimeWarning,
                    stacklevel=2,
                )
    for mode in range(2):
        if cfg.gamma_field[mode] * REGIME_RATIO > cfg.omega_field[mode]:
            warnings.warn(
                f"gamma[{mode + 1}]={cfg.gamma_field[mode]} is not small against "
                f"omega={cfg.omega_field[mode]}",
                RegimeWarning,
                stacklevel=2,
            )
    return cfg


def coupling_strength(lam, n, kappa):
    """``lam / 2 * sqrt((n + kappa)! / n!)`` accumulated in the log domain."""
    n = np.asarray(n, dtype=float)
    log_ratio = np.zeros_like(n)
    for j in range(1, int(kappa) + 1):
        log_ratio = log_ratio + np.log(n + j)
    return 0.5 * lam * np.exp(0.5 * log_ratio)


def _sign(level):
    return 1.0 if level == 1 else -1.0


def slot_energy(cfg, f1, f2, a1, a2):
    """Real diagonal energy of the dense ket ``|f1, f2, a1, a2>``."""
    atoms = 0.5 * (
        _sign(a1) * cfg.omega_atom[a1 - 1][0] + _sign(a2) * cfg.omega_atom[a2 - 1][1]
    )
    return atoms + np.asarray(f1) * cfg.omega_field[0] + np.asarray(f2) * cfg.omega_field[1]


def slot_loss(cfg, f1, f2, a1, a2):
    """Amplitude damping rate of the ket ``|f1, f2, a1, a2>``.

    Negative for lower-level atoms: the sign pattern of the atomic terms
    gives the lower level a gain, exactly as in the model Hamiltonian.
    """
    atoms = _sign(a1) * cfg.gamma_atom[a1 - 1][0] + _sign(a2) * cfg.gamma_atom[a2 - 1][1]
    fields = np.asarray(f1) * cfg.gamma_field[0] + np.asarray(f2) * cfg.gamma_field[1]
    return 0.5 * (atoms + fields)


@dataclass(frozen=True)
class BlockCoefficients:
    n1: int
    n2: int
    delta: float
    bigdelta: float
    k1: complex
    k2: complex
    k3: complex
    k4: complex
    g1: float
    g2: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float

    @property
    def k(self):
        return np.array([self.k1, self.k2, self.k3, self.k4])

    @property
    def alpha(self):
        return np.array([self.alpha1, self.alpha2, self.alpha3, self.alpha4])


def _check_block(cfg, n1, n2):
    for n in (n1, n2):
        if int(n) != n or not 0 <= n <= cfg.n_max:
            raise IndexOutOfRange(f"block label {n!r} outside [0, {cfg.n_max}]")


def block_coefficients(cfg: SystemConfig, n1: int, n2: int) -> BlockCoefficients:
    _check_block(cfg, n1, n2)
    n1, n2 = int(n1), int(n2)
    kap = cfg.kappa
    ks, alphas = [], []
    for s1, s2, a1, a2 in BLOCK_SLOTS:
        f1, f2 = n1 + s1 * kap, n2 + s2 * kap
        ks.append(-1j * float(slot_loss(cfg, f1, f2, a1, a2)))
        alphas.append(float(slot_energy(cfg, f1, f2, a1, a2)))
    return BlockCoefficients(
        n1=n1,
        n2=n2,
        delta=cfg.delta,
        bigdelta=cfg.detuning,
        k1=ks[0], k2=ks[1], k3=ks[2], k4=ks[3],
        g1=float(coupling_strength(cfg.lambda_coupling[0], n1, kap)),
        g2=float(coupling_strength(cfg.lambda_coupling[1], n2, kap)),
        alpha1=alphas[0], alpha2=alphas[1], alpha3=alphas[2], alpha4=alphas[3],
    )


def _assemble(diag, g1, g2):
    m = np.zeros(np.shape(g1) + (4, 4), dtype=complex)
    for i in range(4):
        m[..., i, i] = diag[..., i]
    m[..., 0, 1] = m[..., 1, 0] = g2
    m[..., 0, 2] = m[..., 2, 0] = g1
    m[..., 1, 3] = m[..., 3, 1] = g1
    m[..., 2, 3] = m[..., 3, 2] = g2
    return m


def build_generator(coeffs: BlockCoefficients) -> np.ndarray:
    """Time-independent 4x4 generator in the rotating frame.

    Complex symmetric; diagonal ``(k1 + delta, k2, k3, k4 - delta)``.
    """
    shift = np.array([coeffs.delta, 0.0, 0.0, -coeffs.delta])
    return _assemble(coeffs.k + shift, coeffs.g1, coeffs.g2)


@dataclass(frozen=True)
class BlockTable:
    """Coefficients of every block, stacked along the first axis.

    Blocks are ordered with ``n1`` as the slow index.
    """

    n1: np.ndarray
    n2: np.ndarray
    k: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    alpha: np.ndarray
    delta: float
    bigdelta: float

    def __len__(self):
        return len(self.n1)

    def generators(self):
        shift = np.array([self.delta, 0.0, 0.0, -self.delta])
        return _assemble(self.k + shift, self.g1, self.g2)

    def block(self, i):
        return BlockCoefficients(
            n1=int(self.n1[i]), n2=int(self.n2[i]), delta=self.delta, bigdelta=self.bigdelta,
            k1=complex(self.k[i, 0]), k2=complex(self.k[i, 1]),
            k3=complex(self.k[i, 2]), k4=complex(self.k[i, 3]),
            g1=float(self.g1[i]), g2=float(self.g2[i]),
            alpha1=float(self.alpha[i, 0]), alpha2=float(self.alpha[i, 1]),
            alpha3=float(self.alpha[i, 2]), alpha4=float(self.alpha[i, 3]),
        )


def block_table(cfg: SystemConfig) -> BlockTable:
    labels = np.arange(cfg.n_max + 1)
    n1, n2 = (a.ravel() for a in np.meshgrid(labels, labels, indexing="ij"))
    kap = cfg.kappa
    k = np.empty((len(n1), 4), dtype=complex)
    alpha = np.empty((len(n1), 4))
    for m, (s1, s2, a1, a2) in enumerate(BLOCK_SLOTS):
        f1, f2 = n1 + s1 * kap, n2 + s2 * kap
        k[:, m] = -1j * slot_loss(cfg, f1, f2, a1, a2)
        alpha[:, m] = slot_energy(cfg, f1, f2, a1, a2)
    return BlockTable(
        n1=n1,
        n2=n2,
        k=k,
        g1=coupling_strength(cfg.lambda_coupling[0], n1, kap),
        g2=coupling_strength(cfg.lambda_coupling[1], n2, kap),
        alpha=alpha,
        delta=cfg.delta,
        bigdelta=cfg.detuning,
    )


@dataclass(frozen=True)
class BlockAmplitudes:
    """The four complex amplitudes of one block at one instant."""

    a1: complex
    a2: complex
    a3: complex
    a4: complex

    @classmethod
    def from_array(cls, values):
        v = np.asarray(values, dtype=complex)
        return cls(complex(v[0]), complex(v[1]), complex(v[2]), complex(v[3]))

    def as_array(self):
        return np.array([self.a1, self.a2, self.a3, self.a4], dtype=complex)

    def norm2(self):
        return float(np.sum(np.abs(self.as_array()) ** 2))
