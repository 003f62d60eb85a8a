"""Command line front end.

Commands: tensor-check, stokes-solve, ns-solve, verify, export-grid,
manufacture, residual. Every option can also come from a line-oriented
`key = value` config file (--config); explicit flags win over file values.
Exit status: 0 success, 1 solver or I/O error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import io as tio
from .harness import manufacture, run_suite, suite_names
from .navier_stokes import (
    IterationFailure,
    NSSolveOptions,
    picard_solve,
    residual as ns_residual,
)
from .spectral import (
    SpectralScalarField,
    SpectralVectorField,
    make_lattice,
    random_scalar_field,
    random_vector_field,
    sobolev_norm,
)
from .stokes import SingularSymbol, solve_stokes
from .viscosity import (
    NotElliptic,
    check_symmetry,
    ellipticity_constant,
    stokes_operator,
    tensor_norm,
)

__all__ = ["main", "parse_config", "dispatch", "RunConfig", "UsageError"]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None

    def echo_items(self):
        items = [("command", self.command)]
        items += [(k, v) for k, v in sorted(self.options.items()) if v is not None]
        return items


# name, type, default, help; default None + required=True means "must be given"
_COMMANDS = {
    "tensor-check": [
        ("tensor", str, None, True, "tensor file to inspect"),
    ],
    "stokes-solve": [
        ("tensor", str, None, True, "viscosity tensor file"),
        ("f", str, None, True, "forcing field dump"),
        ("g", str, "none", False, "divergence data dump, or 'none'"),
        ("s", float, 1.0, False, "Sobolev index used in the report"),
        ("project-mean", bool, False, False, "remove nonzero input means without warning"),
        ("out", str, None, True, "output dump holding velocity components then pressure"),
        ("report", str, None, False, "flat key-value report file"),
    ],
    "ns-solve": [
        ("tensor", str, None, True, "viscosity tensor file"),
        ("f", str, None, True, "forcing field dump"),
        ("omega", float, 1.0, False, "initial relaxation factor in (0, 1]"),
        ("tol", float, 1e-10, False, "defect tolerance in the H^-1 norm"),
        ("max-iter", int, 100, False, "iteration budget"),
        ("initial", str, "stokes", False, "initial guess policy: stokes or zero"),
        ("no-dealias", bool, False, False, "evaluate products on the small grid"),
        ("project-mean", bool, False, False, "remove a nonzero forcing mean without warning"),
        ("out-u", str, None, True, "velocity output dump"),
        ("out-p", str, None, True, "pressure output dump"),
        ("report", str, None, False, "report file (includes residual history)"),
    ],
    "verify": [
        ("suite", str, "all", False, "suite name or 'all'"),
        ("seed", int, 0, False, "ensemble seed"),
        ("m", int, 8, False, "truncation bound"),
        ("n", int, 2, False, "spatial dimension"),
        ("draws", int, 50, False, "cases per suite"),
        ("report", str, None, False, "report file"),
    ],
    "export-grid": [
        ("in", str, None, True, "field dump to sample"),
        ("N", int, None, True, "grid points per axis"),
        ("out", str, None, True, "CSV output path"),
    ],
    "manufacture": [
        ("tensor", str, None, True, "viscosity tensor file"),
        ("n", int, 2, False, "spatial dimension"),
        ("m", int, 8, False, "truncation bound"),
        ("seed", int, 0, False, "random seed"),
        ("amplitude", float, 0.05, False, "H^1 size of the manufactured velocity"),
        ("nonlinear", bool, False, False, "include the convective term in the forcing"),
        ("out-u", str, None, True, "manufactured velocity dump"),
        ("out-p", str, None, True, "manufactured pressure dump"),
        ("out-f", str, None, True, "derived forcing dump"),
        ("out-g", str, None, True, "derived divergence dump"),
    ],
    "residual": [
        ("tensor", str, None, True, "viscosity tensor file"),
        ("f", str, None, True, "forcing field dump"),
        ("g", str, "none", False, "divergence data dump, or 'none'"),
        ("solution", str, None, False, "combined velocity+pressure dump from stokes-solve"),
        ("u", str, None, False, "velocity dump (alternative to --solution)"),
        ("p", str, None, False, "pressure dump (alternative to --solution)"),
        ("nonlinear", bool, False, False, "include the convective term"),
        ("report", str, None, False, "report file"),
    ],
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tsflow",
        description="Spectral Stokes and Navier-Stokes solves on the periodic torus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, options in _COMMANDS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="key = value option file")
        for name, typ, _default, _required, help_text in options:
            dest = name.replace("-", "_")
            if typ is bool:
                p.add_argument(f"--{name}", dest=dest, action="store_const", const=True,
                               default=None, help=help_text)
            else:
                p.add_argument(f"--{name}", dest=dest, type=typ, default=None, help=help_text)
    return parser


def _load_config_file(path, option_table):
    known = {name.replace("-", "_"): typ for name, typ, _, _, _ in option_table}
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in known:
                raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
            typ = known[key]
            if typ is bool:
                if value.lower() not in ("0", "1", "true", "false"):
                    raise UsageError(f"{path}:{lineno}: boolean option {key!r} got {value!r}")
                values[key] = value.lower() in ("1", "true")
            else:
                try:
                    values[key] = typ(value)
                except ValueError:
                    raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {value!r}")
    return values


def parse_config(argv=None):
    ns = _build_parser().parse_args(argv)
    option_table = _COMMANDS[ns.command]
    options = {}
    file_values = _load_config_file(ns.config, option_table) if ns.config else {}
    for name, typ, default, required, _help in option_table:
        dest = name.replace("-", "_")
        value = getattr(ns, dest)
        if value is None:
            value = file_values.get(dest, default)
        if value is None and required:
            raise UsageError(f"{ns.command}: missing required option --{name}")
        options[dest] = value
    _validate(ns.command, options)
    return RunConfig(ns.command, options)


def _validate(command, options):
    if command == "ns-solve":
        if not 0.0 < options["omega"] <= 1.0:
            raise UsageError(f"--omega must be in (0, 1], got {options['omega']}")
        if options["tol"] <= 0:
            raise UsageError(f"--tol must be positive, got {options['tol']}")
        if options["max_iter"] < 1:
            raise UsageError(f"--max-iter must be >= 1, got {options['max_iter']}")
        if options["initial"] not in ("stokes", "zero"):
            raise UsageError(f"--initial must be 'stokes' or 'zero', got {options['initial']!r}")
    if command == "verify":
        if options["suite"] != "all" and options["suite"] not in suite_names():
            raise UsageError(
                f"unknown suite {options['suite']!r}; valid: all, {', '.join(suite_names())}"
            )
        if options["n"] not in (2, 3):
            raise UsageError(f"--n must be 2 or 3, got {options['n']}")
    if command == "manufacture" and options["n"] not in (2, 3):
        raise UsageError(f"--n must be 2 or 3, got {options['n']}")
    if command == "export-grid" and options["N"] < 2:
        raise UsageError(f"--N must be >= 2, got {options['N']}")
    if command == "residual":
        have_pair = options["u"] is not None and options["p"] is not None
        if (options["solution"] is None) == (not have_pair):
            raise UsageError("residual needs either --solution or both --u and --p")


def _read_scalar(path):
    fld = tio.read_field(path)
    if not isinstance(fld, SpectralScalarField):
        raise UsageError(f"{path}: expected a scalar field dump")
    return fld


def _read_vector(path):
    fld = tio.read_field(path)
    if not isinstance(fld, SpectralVectorField):
        raise UsageError(f"{path}: expected a vector field dump")
    return fld


def _drop_mean(fld):
    zero = (slice(None),) * (fld.coeffs.ndim - fld.lattice.n) + fld.lattice.zero_index
    coeffs = fld.coeffs.copy()
    coeffs[zero] = 0.0
    if isinstance(fld, SpectralVectorField):
        return SpectralVectorField(fld.lattice, coeffs, fld.is_real, True, fld.divergence_free)
    return SpectralScalarField(fld.lattice, coeffs, fld.is_real, True)


def _write_solution(path, u, p):
    combined = np.concatenate([u.coeffs, p.coeffs[None]], axis=0)
    blob = (
        b"SPF1\n"
        + f"n={u.lattice.n}\nm={u.lattice.m}\ncomponents={u.lattice.n + 1}\n"
        f"real={int(u.is_real and p.is_real)}\n".encode("ascii")
        + np.ascontiguousarray(combined, dtype="<c16").tobytes()
    )
    tio.atomic_write_bytes(path, blob)


def _read_solution(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    lines = blob.split(b"\n", 5)
    if len(lines) < 6 or lines[0] != b"SPF1":
        raise UsageError(f"{path}: not an SPF1 dump")
    header = dict(ln.decode("ascii").split("=", 1) for ln in lines[1:5])
    n, m = int(header["n"]), int(header["m"])
    comps = int(header["components"])
    if comps != n + 1:
        raise UsageError(f"{path}: expected a combined dump with {n + 1} components")
    lat = make_lattice(n, m)
    coeffs = np.frombuffer(lines[5], dtype="<c16").reshape((comps,) + lat.shape)
    is_real = bool(int(header["real"]))
    u = SpectralVectorField(lat, coeffs[:n].copy(), is_real, True, False)
    p = SpectralScalarField(lat, coeffs[n].copy(), is_real, True)
    return u, p


def _cmd_tensor_check(config):
    tensor = tio.read_tensor(config.tensor)
    violations = check_symmetry(tensor)
    print(f"n = {tensor.n}")
    print(f"tensor_norm = {tensor_norm(tensor):.17g}")
    print(f"symmetry_violations = {len(violations)}")
    for q in violations[:10]:
        print("violation at (k, j, alpha, beta) =", tuple(i + 1 for i in q))
    elliptic = True
    try:
        c_a = ellipticity_constant(tensor)
        print(f"ellipticity_constant = {c_a:.17g}")
    except NotElliptic as exc:
        elliptic = False
        print(f"not elliptic: {exc}")
    return 0 if elliptic and not violations else 2


def _cmd_stokes_solve(config):
    tensor = tio.read_tensor(config.tensor)
    f = _read_vector(config.f)
    g = None if config.g in (None, "none") else _read_scalar(config.g)
    if config.project_mean:
        f = _drop_mean(f)
        g = None if g is None else _drop_mean(g)
    u, p, report = solve_stokes(tensor, f, g, s=config.s)
    _write_solution(config.out, u, p)
    if config.report:
        tio.write_report(config.report, report.flat_items(), config.echo_items())
    print(f"residual = {report.residual:.3e}  min_slack_u = {report.min_slack_u:.3e}")
    return 0


def _cmd_ns_solve(config):
    tensor = tio.read_tensor(config.tensor)
    f = _read_vector(config.f)
    if config.project_mean:
        f = _drop_mean(f)
    opts = NSSolveOptions(
        relaxation=config.omega,
        max_iterations=config.max_iter,
        tol=config.tol,
        dealias=not config.no_dealias,
        initial_guess=config.initial,
    )
    try:
        u, p, report = picard_solve(tensor, f, opts)
    except IterationFailure as exc:
        if config.report:
            tio.write_report(
                config.report,
                exc.report.flat_items(),
                config.echo_items(),
                history=exc.report.residual_history,
            )
        print(f"error: {exc}", file=sys.stderr)
        return 1
    tio.write_field(config.out_u, u)
    tio.write_field(config.out_p, p)
    if config.report:
        tio.write_report(
            config.report, report.flat_items(), config.echo_items(),
            history=report.residual_history,
        )
    print(
        f"converged in {report.iterations} iterations, "
        f"residual = {report.final_residual:.3e}, bound_satisfied = {report.bound_satisfied}"
    )
    return 0


def _cmd_verify(config):
    names = "all" if config.suite == "all" else [config.suite]
    report = run_suite(names, seed=config.seed, m=config.m, n=config.n, draws=config.draws)
    for r in report.results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name}: {status}  cases={r.cases}  worst_margin={r.worst_margin:.3e}")
        for note in r.notes:
            print(f"  {note}")
    if config.report:
        tio.write_report(config.report, report.flat_items(), config.echo_items())
    return 0 if report.passed else 2


def _cmd_export_grid(config):
    path = getattr(config, "in")
    try:
        payload = tio.read_field(path)
    except ValueError:
        payload = list(_read_solution(path))  # combined velocity+pressure dump
    tio.export_grid_csv(config.out, payload, config.N)
    return 0


def _cmd_manufacture(config):
    tensor = tio.read_tensor(config.tensor)
    lat = make_lattice(config.n, config.m)
    u_star = random_vector_field(config.seed, lat, decay=3.0, divergence_free=True)
    norm = sobolev_norm(u_star, 1.0)
    if norm > 0:
        u_star = (config.amplitude / norm) * u_star
    p_star = config.amplitude * random_scalar_field(config.seed + 1, lat, decay=3.0)
    problem = manufacture(u_star, p_star, tensor, include_nonlinear=config.nonlinear)
    tio.write_field(config.out_u, problem.u_star)
    tio.write_field(config.out_p, problem.p_star)
    tio.write_field(config.out_f, problem.f)
    tio.write_field(config.out_g, problem.g)
    return 0


def _cmd_residual(config):
    tensor = tio.read_tensor(config.tensor)
    f = _read_vector(config.f)
    if config.solution is not None:
        u, p = _read_solution(config.solution)
    else:
        u, p = _read_vector(config.u), _read_scalar(config.p)
    items = []
    if config.nonlinear:
        defect = ns_residual(tensor, u, p, f)
        items.append(("momentum_defect_hm1", defect))
    else:
        r = -1.0 * stokes_operator(tensor, u, p) - f
        scale = max(sobolev_norm(f, -1.0), 1e-300)
        defect = sobolev_norm(r, -1.0) / scale
        items.append(("momentum_defect_rel_hm1", defect))
        g = None if config.g in (None, "none") else _read_scalar(config.g)
        from .spectral import divergence

        div_defect = divergence(u) if g is None else divergence(u) - g
        gscale = max(sobolev_norm(g, 0.0), 1.0) if g is not None else 1.0
        items.append(("divergence_defect_rel", sobolev_norm(div_defect, 0.0) / gscale))
    for key, value in items:
        print(f"{key} = {value:.17g}")
    if config.report:
        tio.write_report(config.report, items, config.echo_items())
    return 0


_DISPATCH = {
    "tensor-check": _cmd_tensor_check,
    "stokes-solve": _cmd_stokes_solve,
    "ns-solve": _cmd_ns_solve,
    "verify": _cmd_verify,
    "export-grid": _cmd_export_grid,
    "manufacture": _cmd_manufacture,
    "residual": _cmd_residual,
}


def dispatch(config):
    return _DISPATCH[config.command](config)


def main(argv=None):
    try:
        config = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        return dispatch(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (NotElliptic, SingularSymbol, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
