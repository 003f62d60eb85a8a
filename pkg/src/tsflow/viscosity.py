"""Constant fourth-order viscosity tensors and the viscous operator.

A tensor holds real entries a[k, j, alpha, beta] with the pair symmetries

    a[k, j, alpha, beta] == a[j, k, beta, alpha] == a[k, beta, alpha, j],

which make the divergence-form operator on velocities equal to its
symmetric-gradient form and make the per-mode velocity blocks symmetric.
Ellipticity is required only on symmetric trace-free matrices: the smallest
eigenvalue of the quadratic form restricted to that subspace must be positive,
and its reciprocal is the stored ellipticity constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralVectorField, gradient, index_grids

__all__ = [
    "NotElliptic",
    "ViscosityTensor",
    "make_isotropic",
    "make_tensor",
    "check_symmetry",
    "symmetrize",
    "tensor_norm",
    "ellipticity_constant",
    "trace_free_symmetric_basis",
    "restricted_form_matrix",
    "apply_viscosity",
    "stokes_operator",
]

# Index permutations generating the adopted symmetry group, as position maps
# on (k, j, alpha, beta).
_GENERATORS = ((1, 0, 3, 2), (0, 3, 2, 1))


class NotElliptic(ValueError):
    """The restricted quadratic form has a non-positive eigenvalue."""


@dataclass(eq=False)
class ViscosityTensor:
    n: int
    entries: np.ndarray  # float64, shape (n, n, n, n), indexed [k, j, alpha, beta]
    ellipticity: float | None = field(default=None)  # cached by ellipticity_constant

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def norm(self):
        return tensor_norm(self)


def make_tensor(n, entries):
    e = np.array(entries, dtype=float)
    if e.shape != (n, n, n, n):
        raise ValueError(f"entries must have shape {(n,) * 4}, got {e.shape}")
    return ViscosityTensor(n, e)


def make_isotropic(lam, mu, n):
    """Two-parameter isotropic tensor.

    Entry (k, j, alpha, beta) is
    lam*d(k,alpha)*d(j,beta) + mu*(d(alpha,j)*d(beta,k) + d(alpha,beta)*d(k,j)).
    """
    eye = np.eye(n)
    e = (
        lam * np.einsum("ka,jb->kjab", eye, eye)
        + mu * np.einsum("aj,bk->kjab", eye, eye)
        + mu * np.einsum("ab,kj->kjab", eye, eye)
    )
    return ViscosityTensor(n, e)


def _symmetry_group():
    group = {(0, 1, 2, 3)}
    frontier = list(group)
    while frontier:
        p = frontier.pop()
        for g in _GENERATORS:
            q = tuple(p[i] for i in g)
            if q not in group:
                group.add(q)
                frontier.append(q)
    return sorted(group)


_GROUP = _symmetry_group()


def check_symmetry(tensor, tol=1e-14):
    """Return the index quadruples violating either pair symmetry.

    Quadruples are 0-based (k, j, alpha, beta) positions; an empty list means
    the tensor satisfies both relations entrywise to within tol.
    """
    bad = np.zeros((tensor.n,) * 4, dtype=bool)
    for g in _GENERATORS:
        bad |= np.abs(tensor.entries - np.transpose(tensor.entries, g)) > tol
    return [tuple(int(i) for i in q) for q in np.argwhere(bad)]


def symmetrize(n, entries):
    """Average raw entries over the symmetry group and wrap the result."""
    e = np.array(entries, dtype=float)
    if e.shape != (n, n, n, n):
        raise ValueError(f"entries must have shape {(n,) * 4}, got {e.shape}")
    out = np.zeros_like(e)
    for p in _GROUP:
        out += np.transpose(e, p)
    return ViscosityTensor(n, out / len(_GROUP))


def tensor_norm(tensor):
    """Largest entry magnitude."""
    return float(np.max(np.abs(tensor.entries)))


def trace_free_symmetric_basis(n):
    """Orthonormal basis of symmetric trace-free n x n matrices.

    Off-diagonal pairs (e_ka + e_ak)/sqrt(2) followed by Helmert-style
    diagonal differences; dimension n*(n+1)/2 - 1.
    """
    mats = []
    for k in range(n):
        for a in range(k + 1, n):
            b = np.zeros((n, n))
            b[k, a] = b[a, k] = 1.0 / np.sqrt(2.0)
            mats.append(b)
    for i in range(1, n):
        d = np.zeros(n)
        d[:i] = 1.0
        d[i] = -float(i)
        mats.append(np.diag(d / np.linalg.norm(d)))
    return np.stack(mats)


def restricted_form_matrix(tensor):
    """Gram matrix of the viscosity form on the trace-free symmetric basis."""
    basis = trace_free_symmetric_basis(tensor.n)
    return np.einsum("kjab,pka,qjb->pq", tensor.entries, basis, basis)


def ellipticity_constant(tensor, tol=1e-12):
    """Reciprocal of the smallest restricted-form eigenvalue; cached.

    Raises NotElliptic when the form is not positive definite on symmetric
    trace-free matrices.
    """
    if tensor.ellipticity is not None:
        return tensor.ellipticity
    form = restricted_form_matrix(tensor)
    form = 0.5 * (form + form.T)
    lam_min = float(np.linalg.eigvalsh(form)[0])
    if lam_min <= tol:
        raise NotElliptic(
            f"restricted form eigenvalue {lam_min:.3e} is not positive; "
            "the tensor is not elliptic on trace-free symmetric matrices"
        )
    tensor.ellipticity = 1.0 / lam_min
    return tensor.ellipticity


def mode_blocks(tensor, lattice):
    """Velocity-block contraction xi_alpha * a[k,j,alpha,beta] * xi_beta.

    Returns an (n, n) + lattice.shape array, one symmetric real block per mode.
    """
    x = np.stack(index_grids(lattice)).astype(float)
    return np.einsum("ap,kjab,bp->kjp", x.reshape(lattice.n, -1), tensor.entries,
                     x.reshape(lattice.n, -1)).reshape((lattice.n, lattice.n) + lattice.shape)


def apply_viscosity(tensor, u):
    """Viscous term of the momentum equation, mode by mode.

    Component k picks up -4*pi^2 * xi_alpha * a[k,j,alpha,beta] * xi_beta * uhat_j.
    """
    if tensor.n != u.lattice.n:
        raise ValueError(f"tensor dimension {tensor.n} does not match field n={u.lattice.n}")
    blocks = mode_blocks(tensor, u.lattice)
    out = -4.0 * np.pi**2 * np.einsum("kj...,j...->k...", blocks, u.coeffs)
    return SpectralVectorField(u.lattice, out, u.is_real, True, False)


def stokes_operator(tensor, u, p):
    """Momentum operator: viscous term minus the pressure gradient."""
    if u.lattice != p.lattice:
        raise ValueError("velocity and pressure must share a lattice")
    visc = apply_viscosity(tensor, u)
    grad_p = gradient(p)
    return SpectralVectorField(
        u.lattice,
        visc.coeffs - grad_p.coeffs,
        u.is_real and p.is_real,
        True,
        False,
    )
