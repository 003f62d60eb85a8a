"""Stationary Navier-Stokes on the torus via damped fixed-point iteration.

The nonlinear term is the convective form (w . grad) w, evaluated
pseudospectrally on a grid of at least 3m+1 points per axis so that the
retained modes agree exactly with the lattice convolution (quadratic products
of cube-truncated fields live on the doubled cube; 3m+1 points leave the
inner cube alias-free). A direct convolution oracle is kept alongside.

The solver iterates

    u_next = (1 - omega) * u + omega * StokesSolve(f - (u . grad) u)

with adaptive halving of omega whenever the defect grows, and stops when the
defect of the momentum equation, measured in the H^{-1} norm, drops below the
requested tolerance. Converged velocities are checked against the a-priori
bound M0 = C_A * |f|_{H^{-1}} / pi^2 that any true solution satisfies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .spectral import (
    SpectralScalarField,
    SpectralVectorField,
    grid_transform,
    index_grids,
    inner,
    mode_abs2,
    sampling_transform,
    seminorm,
    sobolev_norm,
)
from .stokes import solve_stokes_incompressible
from .viscosity import apply_viscosity, ellipticity_constant

__all__ = [
    "Diverged",
    "MaxIterationsExceeded",
    "NSSolveOptions",
    "NSSolveReport",
    "advection",
    "advection_bruteforce",
    "advection_bound_ratio",
    "apriori_velocity_bound",
    "picard_solve",
    "residual",
    "regularity_slope",
    "RegularityFit",
]

OMEGA_FLOOR = 1.0 / 64.0


class IterationFailure(RuntimeError):
    """Fixed-point iteration ended without meeting the tolerance."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class Diverged(IterationFailure):
    pass


class MaxIterationsExceeded(IterationFailure):
    pass


@dataclass
class NSSolveOptions:
    relaxation: float = 1.0
    max_iterations: int = 100
    tol: float = 1e-10
    dealias: bool = True
    initial_guess: str = "stokes"  # "stokes" or "zero"

    def __post_init__(self):
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError(f"relaxation must be in (0, 1], got {self.relaxation}")
        if self.tol <= 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.initial_guess not in ("stokes", "zero"):
            raise ValueError(f"unknown initial guess policy {self.initial_guess!r}")


@dataclass
class NSSolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    final_residual: float = np.inf
    converged: bool = False
    diverged: bool = False
    m0: float = np.inf
    velocity_norm: float = 0.0
    bound_satisfied: bool = True
    energy_check: float = 0.0
    omega_final: float = 1.0

    def flat_items(self):
        return [
            ("iterations", self.iterations),
            ("final_residual", self.final_residual),
            ("converged", int(self.converged)),
            ("diverged", int(self.diverged)),
            ("m0", self.m0),
            ("velocity_norm", self.velocity_norm),
            ("bound_satisfied", int(self.bound_satisfied)),
            ("energy_check", self.energy_check),
            ("omega_final", self.omega_final),
        ]


def advection(w, dealias=True):
    """Convective term (w . grad) w, computed on a product grid.

    Requires a real field. With dealias the grid has 3m+1 points per axis
    and the retained modes are exact; without it the products alias back
    into the cube. The output mean is removed when w is divergence-free
    (it vanishes analytically in that case) and kept otherwise.
    """
    if not w.is_real:
        raise ValueError("advection of complex fields is not supported")
    lat = w.lattice
    n = lat.n
    N = (3 * lat.m + 1) if dealias else (2 * lat.m + 1)
    w_grid = grid_transform(w, N)  # (n, N, ..., N) real samples
    grids = index_grids(lat)
    out_grid = np.zeros_like(w_grid)
    for k in range(n):
        for j in range(n):
            dj_wk = SpectralScalarField(lat, 2j * np.pi * grids[j] * w.coeffs[k], True, True)
            out_grid[k] += w_grid[j] * grid_transform(dj_wk, N)
    out = sampling_transform(out_grid, lat, is_real=True)
    coeffs = out.coeffs.copy()
    if w.divergence_free:
        coeffs[(slice(None),) + lat.zero_index] = 0.0
    return SpectralVectorField(lat, coeffs, True, w.divergence_free, False)


def advection_bruteforce(w, out_m=None):
    """Direct lattice convolution of (w . grad) w; oracle for `advection`.

    Exact on the output cube up to 2m. By default the result is truncated to
    the input cube; pass out_m (<= 2m) to keep a larger band.
    """
    if not w.is_real:
        raise ValueError("advection of complex fields is not supported")
    lat = w.lattice
    n, m = lat.n, lat.m
    out_m = lat.m if out_m is None else int(out_m)
    if out_m > 2 * m:
        raise ValueError(f"output band {out_m} exceeds the exact range 2m={2 * m}")
    from .spectral import LatticeSpec, restrict_field

    big = LatticeSpec(n, 2 * m)
    acc = np.zeros((n,) + big.shape, np.complex128)
    grids = index_grids(lat)
    # d[j, k] holds the gradient coefficients 2*pi*i*eta_j*what_k(eta)
    d = np.empty((n, n) + lat.shape, np.complex128)
    for j in range(n):
        for k in range(n):
            d[j, k] = 2j * np.pi * grids[j] * w.coeffs[k]
    width = 2 * m + 1
    for flat_eta, eta in enumerate(lat.indices()):
        pos = np.unravel_index(flat_eta, lat.shape)
        window = tuple(slice(p, p + width) for p in pos)
        for k in range(n):
            # sum_j what_j(xi - eta) * d[j,k](eta), accumulated as a shifted block
            block = np.zeros(lat.shape, np.complex128)
            for j in range(n):
                block += w.coeffs[j] * d[j, k][pos]
            acc[(k,) + window] += block
    result = SpectralVectorField(big, acc, True, False, False)
    out = restrict_field(result, out_m)
    coeffs = out.coeffs.copy()
    if w.divergence_free:
        coeffs[(slice(None),) + out.lattice.zero_index] = 0.0
    return SpectralVectorField(out.lattice, coeffs, True, w.divergence_free, False)


def advection_bound_ratio(w, s):
    """Empirical quadratic-bound ratio |Bw|_t / |w|_s^2.

    The target index t is 2s-1-n/2 below the critical index, s-1 above it,
    and s-3/2 at (or below) the boundary of those ranges.
    """
    n = w.lattice.n
    if 0.0 < s < n / 2.0:
        t = 2.0 * s - 1.0 - n / 2.0
    elif s > n / 2.0:
        t = s - 1.0
    else:
        t = s - 1.5
    denom = sobolev_norm(w, s) ** 2
    if denom == 0.0:
        return 0.0, t
    return sobolev_norm(advection(w), t) / denom, t


def apriori_velocity_bound(tensor, f):
    """Bound M0 = C_A * |f|_{H^{-1}} / pi^2 on any solution velocity."""
    c_a = ellipticity_constant(tensor)
    return c_a * sobolev_norm(f, -1.0) / np.pi**2


def residual(tensor, u, p, f, dealias=True):
    """H^{-1} norm of the momentum defect for the nonlinear system."""
    from .viscosity import stokes_operator

    r = -1.0 * stokes_operator(tensor, u, p) + advection(u, dealias=dealias) - f
    return sobolev_norm(r, -1.0)


def picard_solve(tensor, f, opts=None):
    """Damped fixed-point solve of the incompressible nonlinear system.

    Each pass evaluates the convective term at the current iterate, solves
    the linear system with forcing f - (u . grad) u, measures the momentum
    defect in H^{-1}, and relaxes toward the linear solution. The step
    omega halves whenever the defect grows; Diverged is raised if it grows
    at the floor, MaxIterationsExceeded if the budget runs out. On success
    the returned velocity is divergence-free, the pressure is the one
    induced by the final velocity, and the report records whether the
    a-priori bound held.
    """
    opts = opts or NSSolveOptions()
    lat = f.lattice
    if lat.n not in (2, 3):
        raise ValueError(f"nonlinear solves support n in {{2, 3}}, got n={lat.n}")
    if not f.is_real:
        raise ValueError("forcing must be a real field")
    report = NSSolveReport(m0=apriori_velocity_bound(tensor, f))
    omega = opts.relaxation
    if opts.initial_guess == "stokes":
        u, _, _ = solve_stokes_incompressible(tensor, f, check_estimates=False)
    else:
        from .spectral import zero_vector_field

        u = zero_vector_field(lat)
    prev = np.inf
    for iteration in range(1, opts.max_iterations + 1):
        report.iterations = iteration
        bu = advection(u, dealias=opts.dealias)
        u_lin, p_lin, _ = solve_stokes_incompressible(tensor, f - bu, check_estimates=False)
        # the pressure gradient cancels in the defect, leaving the viscous
        # operator applied to the gap between u and the linear solution
        defect = apply_viscosity(tensor, u - u_lin)
        res = sobolev_norm(defect, -1.0)
        report.residual_history.append(res)
        report.final_residual = res
        report.omega_final = omega
        if not np.isfinite(res):
            report.diverged = True
            raise Diverged("iteration produced a non-finite defect", report)
        if res <= opts.tol:
            report.converged = True
            report.velocity_norm = seminorm(u, 1.0)
            report.bound_satisfied = report.velocity_norm <= report.m0 + 1e-9
            report.energy_check = inner(bu, u).real
            return u, p_lin, report
        if res > prev:
            if omega <= OMEGA_FLOOR:
                report.diverged = True
                raise Diverged(
                    f"defect grew to {res:.3e} with omega at the floor {OMEGA_FLOOR}", report
                )
            omega = max(0.5 * omega, OMEGA_FLOOR)
        u = (1.0 - omega) * u + omega * u_lin
        prev = res
    raise MaxIterationsExceeded(
        f"no convergence within {opts.max_iterations} iterations "
        f"(last defect {report.final_residual:.3e})",
        report,
    )


class RegularityFit(NamedTuple):
    slope: float
    sobolev_index: float
    shells: int


def regularity_slope(u, max_shells=None):
    """Fit the spectral decay exponent over dyadic mode shells.

    Shell j collects modes with 2^j <= |xi| < 2^(j+1); the fit regresses
    log(shell max |uhat|) on log rho at the maximizing mode. Returns the
    decay slope a, the surrogate Sobolev index a - n/2, and the shell
    count. A field whose outer shells are empty reports an infinite slope.
    """
    lat = u.lattice
    mags = np.abs(u.coeffs)
    if mags.ndim > lat.n:
        mags = np.max(mags, axis=0)
    if float(np.max(mags)) == 0.0:
        raise ValueError("cannot fit a decay slope to the zero field")
    abs_xi = np.sqrt(mode_abs2(lat))
    rho = np.sqrt(1.0 + abs_xi**2)
    xs, ys = [], []
    tail_empty = False
    j = 0
    while 2 ** (j + 1) <= lat.m + 1:
        if max_shells is not None and j >= max_shells:
            break
        shell = (abs_xi >= 2**j) & (abs_xi < 2 ** (j + 1))
        peak = float(np.max(mags[shell]))
        if peak <= 0.0:
            tail_empty = True
        elif tail_empty:
            raise ValueError("empty shell inside the occupied band; cannot fit a slope")
        else:
            flat = np.where(shell.ravel(), mags.ravel(), -1.0)
            at = int(np.argmax(flat))
            xs.append(np.log(rho.ravel()[at]))
            ys.append(np.log(peak))
        j += 1
    if tail_empty:
        return RegularityFit(np.inf, np.inf, len(xs))
    if len(xs) < 3:
        raise ValueError(f"need at least 3 occupied shells to fit, found {len(xs)}")
    slope = -np.polyfit(xs, ys, 1)[0]
    return RegularityFit(float(slope), float(slope - lat.n / 2.0), len(xs))
