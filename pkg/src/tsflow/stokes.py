"""Per-mode inversion of the anisotropic Stokes symbol.

For every nonzero mode xi the velocity-pressure pair solves the complex
(n+1) x (n+1) system

    [ 4*pi^2 * xi_a * a[k,j,a,b] * xi_b    2*pi*i*xi_k ] [uhat]   [fhat]
    [ 2*pi*i*xi_j                          0           ] [phat] = [ghat]

by Gaussian elimination with partial pivoting, batched over the whole mode
cube. The isotropic closed forms and the per-mode / summed a-priori bounds
with constants

    C_uf = 2*C_A,  C_ug = C_pf = 1 + 2*C_A*||A||,  C_pg = ||A|| * (1 + 2*C_A*||A||)

are provided as cross-checks; every solve can verify its own estimates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    TWO_PI,
    NonzeroMeanWarning,
    SpectralScalarField,
    SpectralVectorField,
    divergence,
    index_grids,
    seminorm,
    zero_scalar_field,
)
from .viscosity import ellipticity_constant, mode_blocks, tensor_norm

__all__ = [
    "ZeroMode",
    "SingularSymbol",
    "NonPositiveMu",
    "StokesSymbol",
    "StokesSolveReport",
    "assemble_symbol",
    "solve_mode",
    "solve_isotropic_mode",
    "solve_stokes",
    "solve_stokes_incompressible",
    "mode_estimate_slack",
    "global_estimate_slack",
    "estimate_constants",
]

PIVOT_RTOL = 1e-13


class ZeroMode(ValueError):
    """The symbol is only defined for nonzero modes."""


class NonPositiveMu(ValueError):
    """Isotropic closed forms require a positive shear viscosity."""


class SingularSymbol(ArithmeticError):
    def __init__(self, message, xi=None):
        super().__init__(message)
        self.xi = xi


@dataclass(frozen=True)
class StokesSymbol:
    xi: tuple
    mat: np.ndarray  # complex, (n+1, n+1)


@dataclass
class StokesSolveReport:
    """Residuals, estimate margins, and constants for one linear solve."""

    s: float
    n_modes: int
    residual: float  # max per-mode defect relative to the data magnitude
    constants: dict = field(default_factory=dict)
    slack_u: np.ndarray | None = None  # per nonzero mode, canonical order
    slack_p: np.ndarray | None = None
    min_slack_u: float = np.inf
    min_slack_p: float = np.inf
    estimates_ok: bool = True
    global_bound: dict = field(default_factory=dict)
    mean_removed_f: bool = False
    mean_removed_g: bool = False

    def flat_items(self):
        """Scalar summary as (key, value) pairs for text reports."""
        items = [
            ("s", self.s),
            ("modes", self.n_modes),
            ("residual", self.residual),
            ("min_slack_u", self.min_slack_u),
            ("min_slack_p", self.min_slack_p),
            ("estimates_ok", int(self.estimates_ok)),
            ("mean_removed_f", int(self.mean_removed_f)),
            ("mean_removed_g", int(self.mean_removed_g)),
        ]
        items += [(f"constant_{k}", v) for k, v in self.constants.items()]
        items += [(f"global_{k}", v) for k, v in self.global_bound.items()]
        return items


def estimate_constants(tensor):
    """Estimate constants derived from C_A and the tensor norm."""
    c_a = ellipticity_constant(tensor)
    norm_a = tensor_norm(tensor)
    c_uf = 2.0 * c_a
    c_ug = 1.0 + 2.0 * c_a * norm_a
    return {
        "C_A": c_a,
        "norm_A": norm_a,
        "C_uf": c_uf,
        "C_ug": c_ug,
        "C_pf": c_ug,
        "C_pg": norm_a * c_ug,
    }


def assemble_symbol(tensor, xi):
    """Build the (n+1) x (n+1) symbol matrix at one nonzero mode."""
    xi = np.asarray(xi, dtype=float)
    n = tensor.n
    if xi.shape != (n,):
        raise ValueError(f"mode must have {n} components, got {xi.shape}")
    if np.all(xi == 0):
        raise ZeroMode("the Stokes symbol is singular by construction at xi = 0")
    mat = np.zeros((n + 1, n + 1), np.complex128)
    mat[:n, :n] = 4.0 * np.pi**2 * np.einsum("a,kjab,b->kj", xi, tensor.entries, xi)
    mat[:n, n] = TWO_PI * 1j * xi
    mat[n, :n] = TWO_PI * 1j * xi
    return StokesSymbol(tuple(int(x) for x in xi), mat)


def _solve_batched(mats, rhs, xis=None):
    """Gaussian elimination with partial pivoting over a stack of systems.

    mats has shape (B, d, d), rhs (B, d). Raises SingularSymbol when any
    pivot falls below PIVOT_RTOL times that system's magnitude.
    """
    a = np.array(mats, dtype=np.complex128)
    b = np.array(rhs, dtype=np.complex128)
    B, d, _ = a.shape
    scale = np.max(np.abs(a), axis=(1, 2))
    rows = np.arange(B)
    for k in range(d):
        p = np.argmax(np.abs(a[:, k:, k]), axis=1) + k
        piv = np.abs(a[rows, p, k])
        bad = piv <= PIVOT_RTOL * scale
        if np.any(bad):
            i = int(np.argmax(bad))
            xi = None if xis is None else tuple(int(x) for x in xis[i])
            raise SingularSymbol(f"pivot {piv[i]:.3e} below tolerance at mode {xi}", xi)
        swap = p != k
        if np.any(swap):
            ak = a[rows, k, :].copy()
            a[rows, k, :] = a[rows, p, :]
            a[rows, p, :] = ak
            bk = b[rows, k].copy()
            b[rows, k] = b[rows, p]
            b[rows, p] = bk
        if k + 1 < d:
            lam = a[:, k + 1 :, k] / a[:, k, k][:, None]
            a[:, k + 1 :, k:] -= lam[:, :, None] * a[:, k, k:][:, None, :]
            b[:, k + 1 :] -= lam * b[:, k][:, None]
    x = np.zeros_like(b)
    for k in range(d - 1, -1, -1):
        x[:, k] = (b[:, k] - np.einsum("bj,bj->b", a[:, k, k + 1 :], x[:, k + 1 :])) / a[:, k, k]
    return x


def solve_mode(symbol, fhat, ghat):
    """Invert one symbol for data (fhat, ghat); returns (uhat, phat)."""
    n = symbol.mat.shape[0] - 1
    rhs = np.empty(n + 1, np.complex128)
    rhs[:n] = fhat
    rhs[n] = ghat
    z = _solve_batched(symbol.mat[None], rhs[None], xis=[symbol.xi])[0]
    return z[:n], complex(z[n])


def solve_isotropic_mode(lam, mu, xi, fhat, ghat):
    """Closed-form per-mode solution for the two-parameter isotropic tensor.

    phat = xi.fhat / (2*pi*i*|xi|^2) + (lam + 2*mu) * ghat
    uhat = [fhat - xi*(xi.fhat)/|xi|^2] / (4*pi^2*mu*|xi|^2)
           + xi * ghat / (2*pi*i*|xi|^2)
    """
    if mu <= 0:
        raise NonPositiveMu(f"shear viscosity must be positive, got mu={mu}")
    xi = np.asarray(xi, dtype=float)
    a2 = float(xi @ xi)
    if a2 == 0:
        raise ZeroMode("closed forms hold only away from xi = 0")
    fhat = np.asarray(fhat, dtype=np.complex128)
    xdotf = complex(xi @ fhat)
    phat = xdotf / (TWO_PI * 1j * a2) + (lam + 2.0 * mu) * ghat
    uhat = (fhat - xi * (xdotf / a2)) / (4.0 * np.pi**2 * mu * a2) + xi * (
        ghat / (TWO_PI * 1j * a2)
    )
    return uhat, phat


def _gather_nonzero(lattice, coeffs):
    flat = coeffs.reshape(coeffs.shape[: coeffs.ndim - lattice.n] + (-1,))
    zero_flat = np.ravel_multi_index(lattice.zero_index, lattice.shape)
    keep = np.arange(lattice.size) != zero_flat
    return flat[..., keep], keep


def _project_mean(fld, what):
    zero = (slice(None),) * (fld.coeffs.ndim - fld.lattice.n) + fld.lattice.zero_index
    removed = bool(np.max(np.abs(np.atleast_1d(fld.coeffs[zero]))) > 1e-14)
    if removed:
        warnings.warn(
            f"{what} has a nonzero mean; projecting onto the zero-mean subspace",
            NonzeroMeanWarning,
            stacklevel=3,
        )
        c = fld.coeffs.copy()
        c[zero] = 0.0
        if isinstance(fld, SpectralVectorField):
            fld = SpectralVectorField(fld.lattice, c, fld.is_real, True, fld.divergence_free)
        else:
            fld = SpectralScalarField(fld.lattice, c, fld.is_real, True)
    return fld, removed


def solve_stokes(tensor, f, g=None, s=1.0, check_estimates=True):
    """Solve the compressible Stokes system on the whole mode cube.

    Inputs are the forcing f (vector field) and divergence target g (scalar
    field, or None for zero). Nonzero means are projected away with a
    warning. Returns (u, p, report); u and p are zero-mean, and the zero
    mode of both is exactly zero.
    """
    lat = f.lattice
    if tensor.n != lat.n:
        raise ValueError(f"tensor dimension {tensor.n} does not match field n={lat.n}")
    constants = estimate_constants(tensor)  # validates ellipticity up front
    if g is None:
        g = zero_scalar_field(lat)
    if g.lattice != lat:
        raise ValueError("f and g must share a lattice")
    f, removed_f = _project_mean(f, "stokes forcing")
    g, removed_g = _project_mean(g, "divergence data")

    xis, keep = _gather_nonzero(lat, np.stack(
        [grid.astype(float) for grid in index_grids(lat)]
    ))
    xis = xis.T  # (B, n)
    B = xis.shape[0]
    n = lat.n

    blocks, _ = _gather_nonzero(lat, mode_blocks(tensor, lat))  # (n, n, B)
    mats = np.zeros((B, n + 1, n + 1), np.complex128)
    mats[:, :n, :n] = 4.0 * np.pi**2 * np.moveaxis(blocks, 2, 0)
    mats[:, :n, n] = TWO_PI * 1j * xis
    mats[:, n, :n] = TWO_PI * 1j * xis

    fk, _ = _gather_nonzero(lat, f.coeffs)
    gk, _ = _gather_nonzero(lat, g.coeffs)
    rhs = np.concatenate([fk.T, gk[:, None]], axis=1)  # (B, n+1)

    z = _solve_batched(mats, rhs, xis=xis)

    u_coeffs = np.zeros((n,) + lat.shape, np.complex128)
    p_coeffs = np.zeros(lat.shape, np.complex128)
    u_flat = u_coeffs.reshape(n, -1)
    u_flat[:, keep] = z[:, :n].T
    p_flat = p_coeffs.reshape(-1)
    p_flat[keep] = z[:, n]

    is_real = f.is_real and g.is_real
    u = SpectralVectorField(lat, u_coeffs, is_real, True, False)
    p = SpectralScalarField(lat, p_coeffs, is_real, True)

    defect = np.einsum("bij,bj->bi", mats, z) - rhs
    data_scale = max(float(np.max(np.abs(rhs))), 1e-300)
    report = StokesSolveReport(
        s=s,
        n_modes=B,
        residual=float(np.max(np.abs(defect))) / data_scale,
        constants=constants,
        mean_removed_f=removed_f,
        mean_removed_g=removed_g,
    )
    if check_estimates:
        _attach_estimates(report, constants, xis, rhs, z)
        report.global_bound = global_estimate_slack(tensor, u, p, f, g, s)
    return u, p, report


def _attach_estimates(report, constants, xis, rhs, z):
    n = xis.shape[1]
    abs_xi = np.sqrt(np.sum(xis**2, axis=1))
    abs_f = np.sqrt(np.sum(np.abs(rhs[:, :n]) ** 2, axis=1))
    abs_g = np.abs(rhs[:, n])
    abs_u = np.sqrt(np.sum(np.abs(z[:, :n]) ** 2, axis=1))
    abs_p = np.abs(z[:, n])
    bound_u = (
        constants["C_uf"] * abs_f / (TWO_PI * abs_xi) ** 2
        + constants["C_ug"] * abs_g / (TWO_PI * abs_xi)
    )
    bound_p = constants["C_pf"] * abs_f / (TWO_PI * abs_xi) + constants["C_pg"] * abs_g
    report.slack_u = bound_u - abs_u
    report.slack_p = bound_p - abs_p
    report.min_slack_u = float(np.min(report.slack_u))
    report.min_slack_p = float(np.min(report.slack_p))
    report.estimates_ok = report.min_slack_u >= -1e-12 and report.min_slack_p >= -1e-12


def solve_stokes_incompressible(tensor, f, s=1.0, check_estimates=True):
    """Solve with zero divergence target; the velocity comes out solenoidal."""
    u, p, report = solve_stokes(tensor, f, None, s=s, check_estimates=check_estimates)
    div = divergence(u)
    scale = max(TWO_PI * u.lattice.m * float(np.max(np.abs(u.coeffs))), 1e-300)
    assert float(np.max(np.abs(div.coeffs))) <= 1e-12 * max(scale, 1.0)
    u = SpectralVectorField(u.lattice, u.coeffs, u.is_real, True, True)
    return u, p, report


def mode_estimate_slack(tensor, xi, fhat, ghat, uhat, phat):
    """Slack of the two per-mode bounds (nonnegative when they hold).

    Velocity: |uhat| <= C_uf*|fhat|/(2*pi*|xi|)^2 + C_ug*|ghat|/(2*pi*|xi|).
    Pressure: |phat| <= C_pf*|fhat|/(2*pi*|xi|) + C_pg*|ghat|.
    """
    constants = estimate_constants(tensor)
    xi = np.asarray(xi, dtype=float)
    abs_xi = float(np.linalg.norm(xi))
    if abs_xi == 0:
        raise ZeroMode("estimates hold only away from xi = 0")
    abs_f = float(np.linalg.norm(np.atleast_1d(fhat)))
    abs_g = abs(ghat)
    slack_u = (
        constants["C_uf"] * abs_f / (TWO_PI * abs_xi) ** 2
        + constants["C_ug"] * abs_g / (TWO_PI * abs_xi)
        - float(np.linalg.norm(np.atleast_1d(uhat)))
    )
    slack_p = (
        constants["C_pf"] * abs_f / (TWO_PI * abs_xi)
        + constants["C_pg"] * abs_g
        - abs(phat)
    )
    return slack_u, slack_p


def global_estimate_slack(tensor, u, p, f, g, s):
    """Summed a-priori bounds at Sobolev index s.

    Velocity: |u|_s <= C_uf/(2*pi^2) * |f|_{s-2} + sqrt(2)*C_ug/(2*pi) * |g|_{s-1}.
    Pressure: |p|_{s-1} <= C_pf/(sqrt(2)*pi) * |f|_{s-2} + sqrt(2)*C_pg * |g|_{s-1}.

    The extra sqrt(2) factors absorb the mode-weight ratio rho^2/|xi|^2 <= 2.
    """
    constants = estimate_constants(tensor)
    norm_u = seminorm(u, s)
    norm_p = seminorm(p, s - 1.0)
    norm_f = seminorm(f, s - 2.0)
    norm_g = seminorm(g, s - 1.0)
    rhs_u = constants["C_uf"] / (2.0 * np.pi**2) * norm_f + (
        np.sqrt(2.0) * constants["C_ug"] / TWO_PI
    ) * norm_g
    rhs_p = constants["C_pf"] / (np.sqrt(2.0) * np.pi) * norm_f + np.sqrt(2.0) * constants[
        "C_pg"
    ] * norm_g
    return {
        "s": s,
        "lhs_u": norm_u,
        "rhs_u": rhs_u,
        "slack_u": rhs_u - norm_u,
        "lhs_p": norm_p,
        "rhs_p": rhs_p,
        "slack_p": rhs_p - norm_p,
    }
