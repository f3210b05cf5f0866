"""Named parameter sets for the standard sweeps.

Every preset shares ``kappa = 1``, ``omega_j = Omega_j = 0.1``, ``nbar_j = 10``
and ``phi = pi / 2`` and may hold several variants (one curve each).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import UnknownPreset
from .model import SystemConfig

RATE_SET = (0.0, 1e-4, 1e-3)


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    sweep: str
    variants: tuple  # ((label, SystemConfig), ...)
    t_values: tuple = ()  # phi sweeps only: the fixed times


def _base(**kw):
    return SystemConfig.symmetric(Omega=0.1, omega=0.1, phi=math.pi / 2, nbar=10.0, kappa=1, **kw)


def _rate_label(name, value):
    return f"{name}={value:g}"


def _field_decay_set(**kw):
    return tuple((_rate_label("gamma", g), _base(gamma=g, **kw)) for g in RATE_SET)


def _atom_decay_set(**kw):
    return tuple((_rate_label("Gamma", g), _base(Gamma=g, **kw)) for g in RATE_SET)


def _build():
    quarter = math.pi / 4
    table = [
        Preset(
            "fig2",
            "Pancharatnam phase against phi at three fixed times, lossless",
            "phi",
            (("lossless", _base(theta=quarter, varpi=0.0)),),
            t_values=(math.pi / 3, math.pi / 4, math.pi / 2),
        ),
        Preset("fig3a", "concurrence, excited atoms, varpi=pi", "time",
               _field_decay_set(theta=0.0, varpi=math.pi)),
        Preset("fig3b", "concurrence, superposed atoms, varpi=0", "time",
               _field_decay_set(theta=quarter, varpi=0.0)),
        Preset("fig3c", "concurrence, superposed atoms, varpi=pi", "time",
               _field_decay_set(theta=quarter, varpi=math.pi)),
        Preset("fig4a", "concurrence under atomic decay, varpi=0", "time",
               _atom_decay_set(theta=quarter, varpi=0.0)),
        Preset("fig4b", "concurrence under atomic decay, varpi=pi", "time",
               _atom_decay_set(theta=quarter, varpi=math.pi)),
        Preset("fig5a", "Pancharatnam phase against time, field decay", "time",
               (("gamma=0.001", _base(theta=quarter, varpi=math.pi, gamma=1e-3)),)),
        Preset("fig5b", "Pancharatnam phase against time, atomic decay", "time",
               (("Gamma=0.0001", _base(theta=quarter, varpi=math.pi, Gamma=1e-4)),)),
    ]
    return {p.name: p for p in table}


PRESETS = _build()


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise UnknownPreset(f"unknown preset {name!r}; choose from {known}") from None


def variant(name: str, label: str | None = None, **overrides) -> SystemConfig:
    """One configuration of a preset (the first variant by default)."""
    preset = get_preset(name)
    for lab, cfg in preset.variants:
        if label is None or lab == label:
            return replace(cfg, **overrides)
    raise UnknownPreset(f"preset {name!r} has no variant {label!r}")
