"""Scanning the initial relative phase.

The Pancharatnam phase arg<psi(0)|psi(t)> is evaluated at a few fixed
times while the relative phase phi of the atomic superposition sweeps
over [0, 4 pi]. The state is linear in exp(-i phi), so the whole scan
costs two propagations per time. Abrupt changes, if any, show up in the
jump detector.

    python demos/03_phase_control.py
"""

import math

import numpy as np

from nhcavity import get_preset, phase_jump_scan, phi_sweep, validate_config

preset = get_preset("fig2")
cfg = validate_config(preset.variants[0][1])
phis = np.linspace(0, 4 * math.pi, 1600)
phases = phi_sweep(cfg, preset.t_values, phis)

for t, row in zip(preset.t_values, phases):
    steps = np.abs(np.remainder(np.diff(row) + math.pi, 2 * math.pi) - math.pi)
    jumps = phase_jump_scan(phis, row)
    print(f"lambda t = {t / math.pi:.3f} pi: phase in [{row.min():+.3f}, {row.max():+.3f}], "
          f"largest step {steps.max():.3f} rad, {len(jumps)} jumps")
    for phi in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
        k = int(np.argmin(np.abs(phis - phi)))
        print(f"    phi = {phis[k] / math.pi:.2f} pi -> Phi = {row[k]:+.4f}")

# a lossy, modulated variant for comparison
lossy = validate_config(get_preset("fig3c").variants[2][1])
row = phi_sweep(lossy, [math.pi / 2], phis)[0]
print(f"\nfig3c gamma=1e-3 at lambda t = pi/2: {len(phase_jump_scan(phis, row))} jumps")
