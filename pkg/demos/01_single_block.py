"""One photon-number block, three ways.

A block couples four kets and evolves under a 4x4 non-Hermitian generator.
Here the same block is propagated with the closed-form Newton exponential,
with scipy's general-purpose expm and with the adaptive Runge-Kutta
integrator on the original time-dependent equations. All three agree.

    python demos/01_single_block.py
"""

import math

import numpy as np
import scipy.linalg as sl

from nhcavity import SystemConfig, block_coefficients, build_generator, validate_config
from nhcavity.model import BlockAmplitudes
from nhcavity.propagator import evolve_block, reference_integrate
from nhcavity.quartic import generator_roots

cfg = validate_config(SystemConfig.symmetric(gamma=1e-3, varpi=math.pi, theta=math.pi / 4))
block = block_coefficients(cfg, 10, 10)
m = build_generator(block)

print("block (10, 10)")
print(f"  couplings g1 = {block.g1:.6f}, g2 = {block.g2:.6f}, detuning delta = {block.delta:+.6f}")
print("  generator:")
with np.printoptions(precision=4, suppress=True):
    print(m)

roots = generator_roots(m)
print(f"\nquartic roots via {roots.method}, worst relative residual {roots.worst_residual:.1e}")
for r in np.sort_complex(roots.roots):
    print(f"  {r.real:+.10f} {r.imag:+.3e}i")

a0 = BlockAmplitudes(1 / math.sqrt(2), 0, 0, -1j / math.sqrt(2))
print("\n  t/pi   |Newton - expm|   |Newton - RK6|   norm^2")
for t in (0.5 * math.pi, 3 * math.pi, 10 * math.pi, 20 * math.pi):
    newton = evolve_block(cfg, block, a0, t).as_array()
    frame = np.array([np.exp(1j * block.delta * t), 1, 1, np.exp(-1j * block.delta * t)])
    dense = frame * (sl.expm(-1j * m * t) @ a0.as_array())
    rk = reference_integrate(cfg, block, a0, t).as_array()
    print(f"  {t / math.pi:5.1f}   {np.abs(newton - dense).max():.2e}         "
          f"{np.abs(newton - rk).max():.2e}         {np.sum(np.abs(newton) ** 2):.8f}")
