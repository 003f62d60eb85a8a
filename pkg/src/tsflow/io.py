"""File formats: spectral dumps, tensor files, grid CSV export.

Spectral dump (.spf): the magic line "SPF1" followed by ASCII header lines
`n=<int>`, `m=<int>`, `components=<int>`, `real=<0|1>`, then little-endian
float64 (re, im) pairs, one per coefficient, component by component, each
component in canonical C order over the mode cube. components == 1 encodes
a scalar field; otherwise components must equal n.

Tensor file: ASCII, a header `n=<int>` followed by lines
`k j alpha beta value` with 1-based indices; omitted entries are zero.

All writers go through a temp file and an atomic rename.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .spectral import (
    LatticeSpec,
    SpectralScalarField,
    SpectralVectorField,
    grid_transform,
)
from .viscosity import ViscosityTensor

__all__ = [
    "write_field",
    "read_field",
    "write_tensor",
    "read_tensor",
    "export_grid_csv",
    "write_report",
    "atomic_write_bytes",
    "atomic_write_text",
]

_MAGIC = b"SPF1"


def atomic_write_bytes(path, data):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tsflow-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_field(path, field):
    """Dump a scalar or vector field in the SPF1 format."""
    if isinstance(field, SpectralVectorField):
        components = field.lattice.n
        data = field.coeffs
    elif isinstance(field, SpectralScalarField):
        components = 1
        data = field.coeffs[None]
    else:
        raise TypeError(f"cannot dump object of type {type(field).__name__}")
    header = (
        _MAGIC
        + b"\n"
        + f"n={field.lattice.n}\nm={field.lattice.m}\n"
        f"components={components}\nreal={int(field.is_real)}\n".encode("ascii")
    )
    payload = np.ascontiguousarray(data, dtype="<c16").tobytes()
    atomic_write_bytes(path, header + payload)


def read_field(path):
    """Read an SPF1 dump back into a field."""
    with open(path, "rb") as fh:
        blob = fh.read()
    lines = blob.split(b"\n", 5)
    if len(lines) < 6 or lines[0] != _MAGIC:
        raise ValueError(f"{path}: not an SPF1 spectral dump")
    header = {}
    for raw in lines[1:5]:
        key, _, value = raw.decode("ascii").partition("=")
        header[key] = int(value)
    for key in ("n", "m", "components", "real"):
        if key not in header:
            raise ValueError(f"{path}: missing header field {key!r}")
    lattice = LatticeSpec(header["n"], header["m"])
    components = header["components"]
    if components not in (1, lattice.n):
        raise ValueError(f"{path}: components={components} does not fit n={lattice.n}")
    expected = components * lattice.size
    coeffs = np.frombuffer(lines[5], dtype="<c16", count=-1)
    if coeffs.size != expected:
        raise ValueError(f"{path}: expected {expected} coefficients, found {coeffs.size}")
    coeffs = coeffs.reshape((components,) + lattice.shape).astype(np.complex128)
    is_real = bool(header["real"])
    zero_mean = bool(
        np.max(np.abs(coeffs[(slice(None),) + lattice.zero_index])) == 0.0
    )
    if components == 1:
        return SpectralScalarField(lattice, coeffs[0].copy(), is_real, zero_mean)
    return SpectralVectorField(lattice, coeffs.copy(), is_real, zero_mean, False)


def write_tensor(path, tensor):
    """Write nonzero tensor entries as `k j alpha beta value` lines."""
    lines = [f"n={tensor.n}"]
    it = np.nditer(tensor.entries, flags=["multi_index"])
    for value in it:
        if value != 0.0:
            k, j, a, b = it.multi_index
            lines.append(f"{k + 1} {j + 1} {a + 1} {b + 1} {_fmt(float(value))}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_tensor(path):
    """Parse a tensor file; unlisted entries are zero."""
    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = [ln.strip() for ln in fh]
    lines = [ln for ln in raw_lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise ValueError(f"{path}: tensor file must start with an n=<int> header")
    n = int(lines[0][2:])
    entries = np.zeros((n, n, n, n))
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 5:
            raise ValueError(f"{path}: malformed entry line {ln!r}")
        k, j, a, b = (int(p) - 1 for p in parts[:4])
        for idx in (k, j, a, b):
            if not 0 <= idx < n:
                raise ValueError(f"{path}: index out of range in line {ln!r}")
        entries[k, j, a, b] = float(parts[4])
    return ViscosityTensor(n, entries)


def export_grid_csv(path, field, N):
    """Sample fields on the uniform N^n grid and write one row per point.

    Accepts one field or a sequence of fields on a shared lattice. Columns
    are the coordinates x1..xn followed by the component values;
    complex-valued fields get a (re, im) column pair per component.
    """
    fields = list(field) if isinstance(field, (list, tuple)) else [field]
    lat = fields[0].lattice
    if any(f.lattice != lat for f in fields):
        raise ValueError("all exported fields must share a lattice")
    parts = []
    for f in fields:
        s = grid_transform(f, N)
        parts.append(s[None] if s.ndim == lat.n else s)
    if all(not np.iscomplexobj(p) for p in parts):
        samples = np.concatenate(parts, axis=0)
    else:
        samples = np.concatenate([p.astype(np.complex128) for p in parts], axis=0)
    ncomp = samples.shape[0]
    is_real = not np.iscomplexobj(samples)
    cols = [f"x{i + 1}" for i in range(lat.n)]
    for c in range(ncomp):
        if is_real:
            cols.append(f"v{c + 1}")
        else:
            cols += [f"v{c + 1}_re", f"v{c + 1}_im"]
    out = [",".join(cols)]
    for flat in range(N**lat.n):
        idx = np.unravel_index(flat, (N,) * lat.n)
        row = [_fmt(i / N) for i in idx]
        for c in range(ncomp):
            val = samples[(c,) + idx]
            if is_real:
                row.append(_fmt(float(val)))
            else:
                row += [_fmt(float(val.real)), _fmt(float(val.imag))]
        out.append(",".join(row))
    atomic_write_text(path, "\n".join(out) + "\n")


def write_report(path, items, config_echo=None, history=None):
    """Flat `key = value` report with an embedded config echo.

    history, when given, is appended as CSV rows under a `residual_history`
    section.
    """
    lines = []
    if config_echo:
        for key, value in config_echo:
            lines.append(f"config.{key} = {_fmt(value)}")
    for key, value in items:
        lines.append(f"{key} = {_fmt(value)}")
    if history is not None:
        lines.append("residual_history:")
        lines.append("iteration,residual")
        for i, r in enumerate(history, start=1):
            lines.append(f"{i},{_fmt(r)}")
    atomic_write_text(path, "\n".join(lines) + "\n")
