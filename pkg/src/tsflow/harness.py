"""Manufactured problems and property-check suites.

Everything here turns an analytic identity or inequality into a
machine-checkable statement on band-limited fields: trilinear forms are
evaluated by alias-free quadrature, manufactured forcings are computed by
applying the forward operators to a chosen solution, and each named suite
sweeps a seeded ensemble and reports margins.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .navier_stokes import advection, advection_bruteforce, picard_solve
from .spectral import (
    divergence,
    embed_field,
    gradient,
    grid_transform,
    index_grids,
    make_lattice,
    random_scalar_field,
    random_vector_field,
    rho2,
    scalar_field,
    seminorm,
    sobolev_norm,
    symmetric_gradient,
    vector_field,
)
from .stokes import solve_isotropic_mode, solve_mode, assemble_symbol, solve_stokes
from .viscosity import make_isotropic, make_tensor, symmetrize

__all__ = [
    "ManufacturedProblem",
    "manufacture",
    "trilinear_form",
    "advection_identity_defects",
    "korn_ratio",
    "gradient_norm_bracket",
    "random_elliptic_tensor",
    "SuiteResult",
    "HarnessReport",
    "run_suite",
    "suite_names",
]


@dataclass(frozen=True)
class ManufacturedProblem:
    """A solution pair with the forcing that reproduces it exactly."""

    u_star: object
    p_star: object
    tensor: object
    f: object
    g: object
    nonlinear: bool


def manufacture(u_star, p_star, tensor, include_nonlinear=False):
    """Derive forcing and divergence data from a chosen solution pair.

    Linear problems keep the input lattice. Nonlinear problems require a
    solenoidal velocity and move everything to the doubled cube so the
    quadratic term is represented without truncation.
    """
    if not (u_star.is_real and p_star.is_real):
        raise ValueError("manufactured solutions must be real fields")
    if u_star.lattice != p_star.lattice:
        raise ValueError("velocity and pressure must share a lattice")
    from .viscosity import stokes_operator

    if include_nonlinear:
        if not u_star.divergence_free:
            raise ValueError("nonlinear manufacture requires a divergence-free velocity")
        u_star = embed_field(u_star, 2 * u_star.lattice.m)
        p_star = embed_field(p_star, 2 * p_star.lattice.m)
    g = divergence(u_star)
    f = -1.0 * stokes_operator(tensor, u_star, p_star)
    if include_nonlinear:
        f = f + advection(u_star)
    return ManufacturedProblem(u_star, p_star, tensor, f, g, include_nonlinear)


def trilinear_form(v1, v2, v3):
    """Quadrature of the advection pairing ((v1 . grad) v2, v3).

    Uses a 3m+1 grid, which integrates triple products of cube-limited
    fields exactly.
    """
    if not (v1.is_real and v2.is_real and v3.is_real):
        raise ValueError("trilinear forms are taken over real fields")
    lat = v1.lattice
    if v2.lattice != lat or v3.lattice != lat:
        raise ValueError("all three fields must share a lattice")
    N = 3 * lat.m + 1
    s1 = grid_transform(v1, N)
    s3 = grid_transform(v3, N)
    total = 0.0
    for b in range(lat.n):
        grad_b = grid_transform(gradient(v2[b]), N)
        directional = np.zeros_like(s1[0])
        for j in range(lat.n):
            directional += s1[j] * grad_b[j]
        total += float(np.sum(directional * s3[b]))
    return total / float(N) ** lat.n


def advection_identity_defects(v1, v2, v3):
    """Defects of the integration-by-parts identities for the advection form.

    Returns (general_defect, energy_value): the first is
    T(v1,v2,v3) + T(v1,v3,v2) + ((div v1) v3, v2) and vanishes for any real
    fields; the second is T(v1,v2,v2), which vanishes when v1 is solenoidal.
    """
    lat = v1.lattice
    N = 3 * lat.m + 1
    t_123 = trilinear_form(v1, v2, v3)
    t_132 = trilinear_form(v1, v3, v2)
    div1 = grid_transform(divergence(v1), N)
    s2 = grid_transform(v2, N)
    s3 = grid_transform(v3, N)
    correction = float(np.sum(div1 * np.sum(s2 * s3, axis=0))) / float(N) ** lat.n
    general = t_123 + t_132 + correction
    energy = trilinear_form(v1, v2, v2)
    return general, energy


def korn_ratio(v):
    """|grad v|^2 / |E(v)|^2 in the mean-square norm; at most 2.

    Shear flows attain the bound, potential flows sit at 1. Returns nan for
    the zero field.
    """
    E = symmetric_gradient(v)
    denom = float(np.sum(np.abs(E) ** 2))
    if denom == 0.0:
        return float("nan")
    grad2 = 0.0
    for comp in v.components:
        grad2 += sobolev_norm(gradient(comp), 0.0) ** 2
    return grad2 / denom


def gradient_norm_bracket(fld):
    """Ratio |grad .|^2 / |.|_{H^1}^2 for a zero-mean field.

    Lands in [2*pi^2, 4*pi^2]; |xi| = 1 modes attain the lower end, the
    upper end is approached as the spectrum concentrates at large |xi|.
    Returns nan for the zero field.
    """
    h1 = seminorm(fld, 1.0) ** 2
    if h1 == 0.0:
        return float("nan")
    comps = fld.components if hasattr(fld, "components") else (fld,)
    grad2 = 0.0
    for comp in comps:
        grad2 += seminorm(gradient(comp), 0.0) ** 2
    return grad2 / h1


def random_elliptic_tensor(seed, n, scale=0.3, target=0.5):
    """Seeded anisotropic tensor with a prescribed restricted eigenvalue.

    Symmetrizes a random perturbation and shifts it with the trace-free
    identity part of an isotropic tensor until the smallest restricted
    eigenvalue equals target.
    """
    rng = np.random.default_rng(seed)
    raw = symmetrize(n, scale * rng.standard_normal((n,) * 4))
    from .viscosity import restricted_form_matrix

    lam_min = float(np.linalg.eigvalsh(restricted_form_matrix(raw))[0])
    # the mu-part contributes 2*mu to every restricted eigenvalue
    mu_shift = (target - lam_min) / 2.0
    iso = make_isotropic(0.0, mu_shift, n)
    return make_tensor(n, raw.entries + iso.entries)


# ---------------------------------------------------------------------------
# suites


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: int
    worst_margin: float
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.failures == 0


@dataclass
class HarnessReport:
    results: list

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def flat_items(self):
        items = []
        for r in self.results:
            items.append((f"{r.name}.cases", r.cases))
            items.append((f"{r.name}.failures", r.failures))
            items.append((f"{r.name}.worst_margin", r.worst_margin))
        items.append(("passed", int(self.passed)))
        return items


def _worker_count():
    raw = os.environ.get("TSF_THREADS", "0")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"TSF_THREADS must be an integer, got {raw!r}")
    if count < 0:
        raise ValueError(f"TSF_THREADS must be >= 0, got {count}")
    return count if count > 0 else (os.cpu_count() or 1)


def _map_cases(fn, args_list):
    """Run independent cases, recombining results in submission order."""
    workers = _worker_count()
    if workers == 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list))


def _suite_rho_bound(seed, m, n, draws):
    lat = make_lattice(n, m)
    a2 = sum(g.astype(float) ** 2 for g in index_grids(lat))
    r2 = rho2(lat)
    nz = a2 > 0
    lower = float(np.min(a2[nz] - 0.5 * r2[nz]))
    upper = float(np.min(r2[nz] - a2[nz]))
    margin = min(lower, upper)
    return SuiteResult("rho-bound", int(np.sum(nz)), int(margin < 0), margin)


def _suite_norm_equivalence(seed, m, n, draws):
    lat = make_lattice(n, m)

    def case(i):
        fld = random_vector_field(seed + i, lat, decay=3.0)
        ratio = gradient_norm_bracket(fld)
        return min(ratio - 2 * np.pi**2, 4 * np.pi**2 - ratio)

    margins = _map_cases(case, list(range(draws)))
    # unit-mode tightness
    tight = np.zeros(lat.shape, np.complex128)
    tight[tuple(np.array(lat.zero_index) + np.eye(n, dtype=int)[0])] = 1.0
    ratio = gradient_norm_bracket(scalar_field(lat, tight))
    margins.append(1e-12 - abs(ratio - 2 * np.pi**2))
    worst = float(np.min(margins))
    failures = int(np.sum(np.array(margins) < -1e-12))
    return SuiteResult("norm-equivalence", len(margins), failures, worst)


def _suite_korn(seed, m, n, draws):
    lat = make_lattice(n, m)

    def case(i):
        v = random_vector_field(seed + i, lat, decay=3.0)
        return 2.0 + 1e-12 - korn_ratio(v)

    margins = _map_cases(case, list(range(draws)))
    # shear attains the bound
    shear = np.zeros((n,) + lat.shape, np.complex128)
    pos = list(lat.zero_index)
    pos[1] += 1
    shear[tuple([0] + pos)] = 0.5 / 1j
    pos[1] -= 2
    shear[tuple([0] + pos)] = -0.5 / 1j
    ratio = korn_ratio(vector_field(lat, shear, is_real=True))
    margins.append(1e-9 - abs(ratio - 2.0))
    worst = float(np.min(margins))
    return SuiteResult("korn", len(margins), int(np.sum(np.array(margins) < 0)), worst)


def _suite_trilinear(seed, m, n, draws):
    lat = make_lattice(n, m)

    def case(i):
        v1 = random_vector_field(seed + 3 * i, lat, decay=3.0, divergence_free=True)
        v2 = random_vector_field(seed + 3 * i + 1, lat, decay=3.0)
        v3 = random_vector_field(seed + 3 * i + 2, lat, decay=3.0)
        scale = (
            sobolev_norm(v1, 1.0) * sobolev_norm(v2, 1.0) * (sobolev_norm(v3, 1.0) + 1.0)
        )
        general, energy = advection_identity_defects(v1, v2, v3)
        return 1e-11 - max(abs(general), abs(energy)) / scale

    margins = _map_cases(case, list(range(draws)))
    worst = float(np.min(margins))
    return SuiteResult("trilinear", len(margins), int(np.sum(np.array(margins) < 0)), worst)


def _suite_mode_estimates(seed, m, n, draws):
    from .stokes import mode_estimate_slack

    rng = np.random.default_rng(seed)

    def case(i):
        tensor = random_elliptic_tensor(seed + 1000 + i, n)
        worst = np.inf
        for _ in range(50):
            xi = rng.integers(-m, m + 1, size=n)
            if np.all(xi == 0):
                xi[0] = 1
            fhat = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            ghat = complex(rng.standard_normal() + 1j * rng.standard_normal())
            sym = assemble_symbol(tensor, xi)
            uhat, phat = solve_mode(sym, fhat, ghat)
            su, sp = mode_estimate_slack(tensor, xi, fhat, ghat, uhat, phat)
            worst = min(worst, su, sp)
        return worst + 1e-12

    margins = [case(i) for i in range(draws)]  # rng shared: keep sequential
    worst = float(np.min(margins))
    return SuiteResult("mode-estimates", len(margins), int(np.sum(np.array(margins) < 0)), worst)


def _suite_isotropic(seed, m, n, draws):
    rng = np.random.default_rng(seed)
    margins = []
    for _ in range(draws):
        lam = float(rng.uniform(-5.0, 5.0))
        mu = float(rng.uniform(0.1, 5.0))
        xi = rng.integers(-m, m + 1, size=n)
        if np.all(xi == 0):
            xi[0] = 1
        fhat = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ghat = complex(rng.standard_normal() + 1j * rng.standard_normal())
        tensor = make_isotropic(lam, mu, n)
        uhat, phat = solve_mode(assemble_symbol(tensor, xi), fhat, ghat)
        uref, pref = solve_isotropic_mode(lam, mu, xi, fhat, ghat)
        scale = max(np.max(np.abs(uref)), abs(pref), 1.0)
        err = max(float(np.max(np.abs(uhat - uref))), abs(phat - pref)) / scale
        margins.append(1e-12 - err)
    worst = float(np.min(margins))
    return SuiteResult("isotropic", len(margins), int(np.sum(np.array(margins) < 0)), worst)


def _suite_stokes_roundtrip(seed, m, n, draws):
    lat = make_lattice(n, m)

    def case(i):
        tensor = (
            make_isotropic(0.0, 1.0, n)
            if i % 2 == 0
            else random_elliptic_tensor(seed + 500 + i, n)
        )
        u_star = random_vector_field(seed + 2 * i, lat, decay=3.0)
        p_star = random_scalar_field(seed + 2 * i + 1, lat, decay=3.0)
        prob = manufacture(u_star, p_star, tensor)
        u, p, report = solve_stokes(tensor, prob.f, prob.g)
        err = np.sqrt(
            sobolev_norm(u - u_star, 1.0) ** 2 + sobolev_norm(p - p_star, 0.0) ** 2
        )
        rel = err / np.sqrt(sobolev_norm(u_star, 1.0) ** 2 + sobolev_norm(p_star, 0.0) ** 2)
        margin = min(1e-10 - rel, report.min_slack_u + 1e-12, report.min_slack_p + 1e-12)
        for s in (0.0, 1.0, 2.0):
            from .stokes import global_estimate_slack

            gb = global_estimate_slack(tensor, u, p, prob.f, prob.g, s)
            margin = min(margin, gb["slack_u"], gb["slack_p"])
        return margin

    margins = _map_cases(case, list(range(draws)))
    worst = float(np.min(margins))
    return SuiteResult("stokes-roundtrip", len(margins), int(np.sum(np.array(margins) < 0)), worst)


def _suite_advection_oracle(seed, m, n, draws):
    # the direct convolution is quadratic in the mode count; keep it desk-sized
    lat = make_lattice(n, min(m, 8 if n == 2 else 4))

    def case(i):
        w = random_vector_field(seed + i, lat, decay=3.0, divergence_free=True)
        fast = advection(w)
        slow = advection_bruteforce(w)
        scale = max(float(np.max(np.abs(slow.coeffs))), 1e-300)
        return 1e-11 - float(np.max(np.abs(fast.coeffs - slow.coeffs))) / scale

    margins = _map_cases(case, list(range(draws)))
    worst = float(np.min(margins))
    return SuiteResult("advection-oracle", len(margins), int(np.sum(np.array(margins) < 0)), worst)


def _suite_navier_stokes(seed, m, n, draws):
    lat = make_lattice(n, m)
    cases = min(draws, 3)

    def case(i):
        tensor = (
            make_isotropic(0.0, 1.0, n) if i == 0 else random_elliptic_tensor(seed + 900 + i, n)
        )
        u_star = random_vector_field(seed + 7 * i, lat, decay=3.0, divergence_free=True)
        u_star = (0.05 / max(sobolev_norm(u_star, 1.0), 1e-300)) * u_star
        p_star = 0.05 * random_scalar_field(seed + 7 * i + 1, lat, decay=3.0)
        prob = manufacture(u_star, p_star, tensor, include_nonlinear=True)
        u, p, report = picard_solve(tensor, prob.f)
        rel = sobolev_norm(u - prob.u_star, 1.0) / sobolev_norm(prob.u_star, 1.0)
        div_norm = sobolev_norm(divergence(u), 0.0)
        margin = min(1e-8 - rel, 1e-12 - div_norm)
        if not report.bound_satisfied:
            margin = min(margin, -1.0)
        return margin

    margins = _map_cases(case, list(range(cases)))
    worst = float(np.min(margins))
    return SuiteResult("navier-stokes", len(margins), int(np.sum(np.array(margins) < 0)), worst)


def _suite_quadratic_ratio(seed, m, n, draws):
    # reported, not asserted: the product-estimate constant is not explicit
    lat = make_lattice(n, m)
    from .navier_stokes import advection_bound_ratio

    def case(i):
        w = random_vector_field(seed + i, lat, decay=3.0, divergence_free=True)
        ratio, _ = advection_bound_ratio(w, 1.0)
        return ratio

    ratios = _map_cases(case, list(range(draws)))
    worst = float(np.max(ratios))
    result = SuiteResult("quadratic-ratio", len(ratios), 0, worst)
    result.notes.append(f"max empirical ratio {worst:.6g} (informational)")
    return result


_SUITES = {
    "rho-bound": _suite_rho_bound,
    "norm-equivalence": _suite_norm_equivalence,
    "korn": _suite_korn,
    "trilinear": _suite_trilinear,
    "mode-estimates": _suite_mode_estimates,
    "isotropic": _suite_isotropic,
    "stokes-roundtrip": _suite_stokes_roundtrip,
    "advection-oracle": _suite_advection_oracle,
    "navier-stokes": _suite_navier_stokes,
    "quadratic-ratio": _suite_quadratic_ratio,
}


def suite_names():
    return list(_SUITES)


def run_suite(names="all", seed=0, m=8, n=2, draws=50):
    """Execute named property suites over seeded ensembles.

    names is "all", one suite name, or a list of names. Unknown names raise
    ValueError listing the valid suites.
    """
    if names == "all":
        selected = list(_SUITES)
    elif isinstance(names, str):
        selected = [names]
    else:
        selected = list(names)
    for name in selected:
        if name not in _SUITES:
            raise ValueError(f"unknown suite {name!r}; valid suites: {', '.join(_SUITES)}")
    results = [_SUITES[name](seed, m, n, draws) for name in selected]
    return HarnessReport(results)
