"""
Fields, Sobolev norms, and spectral calculus
============================================

A walk through the core field representation: coefficient cubes on the
torus, weighted-l2 norms, derivatives, and the divergence-free projection.
"""

import numpy as np

from tsflow import (
    divergence,
    gradient,
    grid_transform,
    leray_project,
    make_lattice,
    random_scalar_field,
    random_vector_field,
    seminorm,
    sobolev_norm,
)

############################################################
# A lattice is the cube of integer modes |xi_j| <= m. Fields store one
# complex coefficient per mode; real fields keep conjugate symmetry.

lattice = make_lattice(n=2, m=8)
print(f"lattice: n={lattice.n}, m={lattice.m}, active modes={lattice.size}")

g = random_scalar_field(seed=1, lattice=lattice, decay=3.0)
for s in (-1.0, 0.0, 1.0, 2.0):
    print(f"  |g|_H^{s:+.0f} = {sobolev_norm(g, s):.6f}")

############################################################
# The norm is monotone in the smoothness index, and for zero-mean fields
# it coincides with the seminorm that drops the zero mode.

print(f"norm equals seminorm for zero-mean g: "
      f"{np.isclose(sobolev_norm(g, 1.0), seminorm(g, 1.0))}")

############################################################
# Derivatives act mode by mode. The gradient norm of a zero-mean field is
# pinched between 2*pi^2 and 4*pi^2 times its H^1 norm squared.

grad_g = gradient(g)
ratio = sobolev_norm(grad_g, 0.0) ** 2 / sobolev_norm(g, 1.0) ** 2
print(f"|grad g|^2 / |g|_H1^2 = {ratio:.4f}  "
      f"(bracket [{2 * np.pi**2:.4f}, {4 * np.pi**2:.4f}])")

############################################################
# The divergence-free projection removes the along-mode component. It is
# idempotent and never increases a Sobolev norm.

u = random_vector_field(seed=2, lattice=lattice, decay=2.0)
u_sol = leray_project(u)
print(f"divergence before/after projection: "
      f"{sobolev_norm(divergence(u), 0.0):.3e} -> "
      f"{sobolev_norm(divergence(u_sol), 0.0):.3e}")
print(f"projection is norm-nonincreasing: "
      f"{sobolev_norm(u_sol, 1.0) <= sobolev_norm(u, 1.0)}")

############################################################
# Sampling the truncated series on a uniform grid is exact, and the grid
# mean square reproduces the spectral H^0 norm (Parseval).

N = 2 * lattice.m + 1
samples = grid_transform(g, N)
grid_ms = np.sum(np.abs(samples) ** 2) / N**2
print(f"Parseval check: grid mean square {grid_ms:.12f} vs "
      f"spectral {sobolev_norm(g, 0.0) ** 2:.12f}")
