"""
Viscosity tensors and relaxed ellipticity
=========================================

Fourth-order constant viscosity tensors, their symmetry relations, and the
ellipticity constant measured only on symmetric trace-free matrices.
"""

import numpy as np

from tsflow import (
    check_symmetry,
    ellipticity_constant,
    make_isotropic,
    symmetrize,
    tensor_norm,
)
from tsflow.harness import random_elliptic_tensor

############################################################
# The two-parameter isotropic family. Note that the ellipticity constant
# depends only on the shear parameter mu: the lambda part acts on the
# matrix trace, which the relaxed condition never sees.

for lam in (-7.0, 0.0, 3.0):
    A = make_isotropic(lam, 1.0, n=2)
    print(f"lam={lam:+.1f}, mu=1: C_A = {ellipticity_constant(A):.6f}, "
          f"norm = {tensor_norm(A):.3f}, violations = {len(check_symmetry(A))}")

############################################################
# mu = 0 leaves the trace-free subspace with no control at all.

try:
    ellipticity_constant(make_isotropic(1.0, 0.0, 2))
except Exception as exc:
    print(f"mu = 0 rejected: {exc}")

############################################################
# Anisotropic tensors: symmetrize a raw perturbation over the symmetry
# group, then shift until the restricted form is positive definite.

rng = np.random.default_rng(0)
raw = symmetrize(2, 0.3 * rng.standard_normal((2, 2, 2, 2)))
print(f"symmetrized random tensor: violations = {len(check_symmetry(raw))}")

A = random_elliptic_tensor(seed=42, n=3)
print(f"seeded anisotropic n=3 tensor: C_A = {ellipticity_constant(A):.6f}, "
      f"norm = {tensor_norm(A):.4f}")
