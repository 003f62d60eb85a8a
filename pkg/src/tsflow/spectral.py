"""Truncated Fourier representation of periodic fields on the unit torus.

Fields live on the n-dimensional torus [0,1)^n and are stored as dense
complex coefficient arrays over the cube of integer modes {xi : |xi_j| <= m}.
This module provides the weighted-l2 Sobolev norms, spectral calculus
(gradient, divergence, symmetric gradient), the divergence-free projection,
uniform-grid transforms, and seeded random field generators used by the
solvers and the verification suites.

Conventions:
    - weight rho(xi) = (1 + |xi|^2)^(1/2), |xi| the Euclidean norm,
    - a field is "real" when ghat(-xi) = conj(ghat(xi)) on the whole cube,
    - a field is "zero-mean" when ghat(0) = 0,
    - all reductions run in canonical C order over the coefficient cube, so
      results are reproducible bit for bit.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "AliasingWarning",
    "NonzeroMeanWarning",
    "LatticeSpec",
    "SpectralScalarField",
    "SpectralVectorField",
    "make_lattice",
    "scalar_field",
    "vector_field",
    "zero_scalar_field",
    "zero_vector_field",
    "sobolev_norm",
    "seminorm",
    "inner",
    "gradient",
    "divergence",
    "leray_project",
    "symmetric_gradient",
    "grid_transform",
    "sampling_transform",
    "random_scalar_field",
    "random_vector_field",
    "embed_field",
    "restrict_field",
    "ball_mask",
    "ball_filter",
]


class AliasingWarning(UserWarning):
    """Grid too coarse for the stored band limit; samples are aliased."""


class NonzeroMeanWarning(UserWarning):
    """A zero-mean field was constructed from data with a nonzero mean."""


@dataclass(frozen=True)
class LatticeSpec:
    """Mode cube {xi in Z^n : |xi_j| <= m}, enumerated in C order."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got n={self.n}")
        if self.m < 1:
            raise ValueError(f"truncation bound must be >= 1, got m={self.m}")

    @property
    def shape(self):
        return (2 * self.m + 1,) * self.n

    @property
    def size(self):
        return (2 * self.m + 1) ** self.n

    @property
    def zero_index(self):
        return (self.m,) * self.n

    def indices(self):
        """All active modes as an (size, n) int array in canonical order."""
        return np.stack(index_grids(self), axis=-1).reshape(-1, self.n)


def make_lattice(n, m):
    return LatticeSpec(int(n), int(m))


@functools.lru_cache(maxsize=128)
def index_grids(lattice):
    """Tuple of n int arrays; entry j holds xi_j at each cube position."""
    ax = np.arange(-lattice.m, lattice.m + 1)
    grids = np.meshgrid(*([ax] * lattice.n), indexing="ij")
    for g in grids:
        g.setflags(write=False)
    return tuple(grids)


@functools.lru_cache(maxsize=128)
def mode_abs2(lattice):
    """|xi|^2 over the cube."""
    out = np.zeros(lattice.shape)
    for g in index_grids(lattice):
        out += g.astype(float) ** 2
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=128)
def rho2(lattice):
    """(1 + |xi|^2) over the cube."""
    out = 1.0 + mode_abs2(lattice)
    out.setflags(write=False)
    return out


def _flip(coeffs, lattice, component_axis=False):
    # Index negation xi -> -xi is a full reversal of every lattice axis.
    axes = tuple(range(1, lattice.n + 1)) if component_axis else tuple(range(lattice.n))
    return np.flip(coeffs, axis=axes)


@dataclass(frozen=True, eq=False)
class SpectralScalarField:
    lattice: LatticeSpec
    coeffs: np.ndarray  # complex128, shape lattice.shape
    is_real: bool = False
    zero_mean: bool = False

    def __post_init__(self):
        self.coeffs.setflags(write=False)

    def __add__(self, other):
        _check_same_lattice(self, other)
        return SpectralScalarField(
            self.lattice,
            self.coeffs + other.coeffs,
            self.is_real and other.is_real,
            self.zero_mean and other.zero_mean,
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, c):
        real = self.is_real and (not isinstance(c, complex) or c.imag == 0.0)
        return SpectralScalarField(self.lattice, c * self.coeffs, real, self.zero_mean)

    __mul__ = __rmul__

    def __neg__(self):
        return (-1.0) * self

    @property
    def mean(self):
        return self.coeffs[self.lattice.zero_index]


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    lattice: LatticeSpec
    coeffs: np.ndarray  # complex128, shape (n,) + lattice.shape
    is_real: bool = False
    zero_mean: bool = False
    divergence_free: bool = False

    def __post_init__(self):
        self.coeffs.setflags(write=False)

    @property
    def components(self):
        return tuple(
            SpectralScalarField(self.lattice, self.coeffs[j], self.is_real, self.zero_mean)
            for j in range(self.lattice.n)
        )

    def __getitem__(self, j):
        return SpectralScalarField(self.lattice, self.coeffs[j], self.is_real, self.zero_mean)

    def __add__(self, other):
        _check_same_lattice(self, other)
        return SpectralVectorField(
            self.lattice,
            self.coeffs + other.coeffs,
            self.is_real and other.is_real,
            self.zero_mean and other.zero_mean,
            self.divergence_free and other.divergence_free,
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, c):
        real = self.is_real and (not isinstance(c, complex) or c.imag == 0.0)
        return SpectralVectorField(
            self.lattice, c * self.coeffs, real, self.zero_mean, self.divergence_free
        )

    __mul__ = __rmul__

    def __neg__(self):
        return (-1.0) * self


def _check_same_lattice(a, b):
    if a.lattice != b.lattice:
        raise ValueError(f"lattice mismatch: {a.lattice} vs {b.lattice}")


def _enforce_zero_mean(coeffs, lattice, what):
    zero = (slice(None),) * (coeffs.ndim - lattice.n) + lattice.zero_index
    if np.max(np.abs(np.atleast_1d(coeffs[zero]))) > 1e-14:
        warnings.warn(
            f"{what}: removed nonzero mean {coeffs[zero]!r}", NonzeroMeanWarning, stacklevel=3
        )
    coeffs[zero] = 0.0


def _check_hermitian(coeffs, lattice, component_axis=False):
    defect = np.max(np.abs(coeffs - np.conj(_flip(coeffs, lattice, component_axis))))
    scale = max(np.max(np.abs(coeffs)), 1e-300)
    if defect > 1e-12 * scale:
        raise ValueError(f"coefficients are not Hermitian-symmetric (defect {defect:.3e})")


def scalar_field(lattice, coeffs, is_real=False, zero_mean=False):
    """Validating constructor; copies the coefficient array."""
    c = np.array(coeffs, dtype=np.complex128)
    if c.shape != lattice.shape:
        raise ValueError(f"coefficient shape {c.shape} does not match lattice {lattice.shape}")
    if is_real:
        _check_hermitian(c, lattice)
    if zero_mean:
        _enforce_zero_mean(c, lattice, "scalar field")
    return SpectralScalarField(lattice, c, is_real, zero_mean)


def vector_field(lattice, coeffs, is_real=False, zero_mean=False, divergence_free=False):
    """Validating constructor for an n-component field on one lattice."""
    c = np.array(coeffs, dtype=np.complex128)
    if c.shape != (lattice.n,) + lattice.shape:
        raise ValueError(f"coefficient shape {c.shape} does not match lattice {lattice.shape}")
    if is_real:
        _check_hermitian(c, lattice, component_axis=True)
    if zero_mean:
        _enforce_zero_mean(c, lattice, "vector field")
    if divergence_free:
        div = _divergence_coeffs(lattice, c)
        scale = TWO_PI * lattice.m * max(float(np.max(np.abs(c))), 1e-300)
        if np.max(np.abs(div)) > 1e-13 * scale:
            raise ValueError("divergence_free flag requires solenoidal coefficients; project first")
    return SpectralVectorField(lattice, c, is_real, zero_mean, divergence_free)


def zero_scalar_field(lattice, is_real=True):
    return SpectralScalarField(lattice, np.zeros(lattice.shape, np.complex128), is_real, True)


def zero_vector_field(lattice, is_real=True):
    return SpectralVectorField(
        lattice, np.zeros((lattice.n,) + lattice.shape, np.complex128), is_real, True, True
    )


# ---------------------------------------------------------------------------
# norms and inner products


def _abs2_scalarized(field):
    a = np.abs(field.coeffs) ** 2
    if isinstance(field, SpectralVectorField):
        a = np.sum(a, axis=0)
    return a


def sobolev_norm(field, s):
    """Weighted-l2 norm (sum over modes of rho^(2s) |ghat|^2)^(1/2)."""
    w = rho2(field.lattice) ** s
    return float(np.sqrt(np.sum(w * _abs2_scalarized(field))))


def seminorm(field, s):
    """Same sum as sobolev_norm but excluding the zero mode."""
    w = rho2(field.lattice) ** s
    a = w * _abs2_scalarized(field)
    total = np.sum(a) - a[field.lattice.zero_index]
    return float(np.sqrt(max(total, 0.0)))


def inner(a, b):
    """l2 pairing sum over modes (and components) of ahat * conj(bhat)."""
    _check_same_lattice(a, b)
    return complex(np.sum(a.coeffs * np.conj(b.coeffs)))


# ---------------------------------------------------------------------------
# spectral calculus


def gradient(g):
    """Componentwise 2*pi*i*xi_j*ghat; the zero mode maps to zero."""
    lat = g.lattice
    out = np.empty((lat.n,) + lat.shape, np.complex128)
    for j, xi_j in enumerate(index_grids(lat)):
        out[j] = TWO_PI * 1j * xi_j * g.coeffs
    return SpectralVectorField(lat, out, g.is_real, True, False)


def _divergence_coeffs(lattice, coeffs):
    out = np.zeros(lattice.shape, np.complex128)
    for j, xi_j in enumerate(index_grids(lattice)):
        out += xi_j * coeffs[j]
    return TWO_PI * 1j * out


def divergence(u):
    return SpectralScalarField(u.lattice, _divergence_coeffs(u.lattice, u.coeffs), u.is_real, True)


def leray_project(u):
    """Remove the along-xi part of every coefficient; zero mode set to 0.

    The result is divergence-free and zero-mean, and the projection never
    increases any Sobolev norm.
    """
    lat = u.lattice
    xdotu = np.zeros(lat.shape, np.complex128)
    for j, xi_j in enumerate(index_grids(lat)):
        xdotu += xi_j * u.coeffs[j]
    a2 = mode_abs2(lat).copy()
    a2[lat.zero_index] = 1.0  # keep the division defined; mode is zeroed below
    out = np.empty_like(u.coeffs)
    for j, xi_j in enumerate(index_grids(lat)):
        out[j] = u.coeffs[j] - xi_j * xdotu / a2
    out[(slice(None),) + lat.zero_index] = 0.0
    return SpectralVectorField(lat, out, u.is_real, True, True)


def symmetric_gradient(u):
    """Coefficients of the symmetric part of the velocity gradient.

    Returns an array of shape (n, n) + lattice.shape whose (j, b) entry at
    mode xi is pi*i*(xi_j*uhat_b + xi_b*uhat_j).
    """
    lat = u.lattice
    grids = index_grids(lat)
    out = np.empty((lat.n, lat.n) + lat.shape, np.complex128)
    for j in range(lat.n):
        for b in range(lat.n):
            out[j, b] = np.pi * 1j * (grids[j] * u.coeffs[b] + grids[b] * u.coeffs[j])
    return out


# ---------------------------------------------------------------------------
# grid transforms


def _embed_offsets(lattice, N):
    return np.arange(-lattice.m, lattice.m + 1) % N


def grid_transform(field, N):
    """Evaluate the truncated series on the uniform grid x = k/N.

    Exact sampling of the stored trigonometric polynomial for any N >= 2;
    when N < 2m+1 distinct modes collapse onto shared grid frequencies and
    an AliasingWarning is issued. Real-flagged fields return real samples.
    """
    lat = field.lattice
    if N < 2 * lat.m + 1:
        warnings.warn(
            f"grid of {N} points per axis aliases a band limit of m={lat.m}",
            AliasingWarning,
            stacklevel=2,
        )
    offs = _embed_offsets(lat, N)
    ix = np.ix_(*([offs] * lat.n))

    def one(coeffs):
        spec = np.zeros((N,) * lat.n, np.complex128)
        np.add.at(spec, ix, coeffs)
        samples = np.fft.ifftn(spec) * float(N) ** lat.n
        return samples.real if field.is_real else samples

    if isinstance(field, SpectralVectorField):
        return np.stack([one(field.coeffs[j]) for j in range(lat.n)])
    return one(field.coeffs)


def sampling_transform(samples, lattice, is_real=None, zero_mean=False):
    """Recover cube coefficients from uniform grid samples.

    The inverse of grid_transform: exact whenever the grid has N >= 2m+1
    points per axis and the sampled function is band-limited to the cube.
    """
    samples = np.asarray(samples)
    vector = samples.ndim == lattice.n + 1
    if vector and samples.shape[0] != lattice.n:
        raise ValueError(f"expected {lattice.n} components, got {samples.shape[0]}")
    if not vector and samples.ndim != lattice.n:
        raise ValueError(f"sample array rank {samples.ndim} does not fit lattice n={lattice.n}")
    N = samples.shape[-1]
    if any(sz != N for sz in samples.shape[-lattice.n:]):
        raise ValueError("grid must have the same number of points on every axis")
    if N < 2 * lattice.m + 1:
        warnings.warn(
            f"recovering m={lattice.m} coefficients from {N} points aliases the tail",
            AliasingWarning,
            stacklevel=2,
        )
    if is_real is None:
        is_real = not np.iscomplexobj(samples)
    offs = _embed_offsets(lattice, N)
    ix = np.ix_(*([offs] * lattice.n))

    def one(grid):
        spec = np.fft.fftn(grid) / float(N) ** lattice.n
        c = spec[ix]
        if is_real:
            c = 0.5 * (c + np.conj(_flip(c, lattice)))
        return c

    if vector:
        coeffs = np.stack([one(samples[j]) for j in range(lattice.n)])
        if zero_mean:
            _enforce_zero_mean(coeffs, lattice, "sampled vector field")
        return SpectralVectorField(lattice, coeffs, is_real, zero_mean, False)
    coeffs = one(samples)
    if zero_mean:
        _enforce_zero_mean(coeffs, lattice, "sampled scalar field")
    return SpectralScalarField(lattice, coeffs, is_real, zero_mean)


# ---------------------------------------------------------------------------
# random fields and resizing


@functools.lru_cache(maxsize=128)
def _positive_half_mask(lattice):
    # True where the first nonzero component of xi is positive, so that each
    # conjugate pair {xi, -xi} has exactly one marked member; xi = 0 is False.
    mask = np.zeros(lattice.shape, dtype=bool)
    undecided = np.ones(lattice.shape, dtype=bool)
    for g in index_grids(lattice):
        mask |= undecided & (g > 0)
        undecided &= g == 0
    mask.setflags(write=False)
    return mask


def _hermitianize_half(lattice, coeffs):
    # Keep draws on the positive half, define the other half by conjugation.
    mirrored = np.conj(_flip(coeffs, lattice))
    out = np.where(_positive_half_mask(lattice), coeffs, mirrored)
    out[lattice.zero_index] = coeffs[lattice.zero_index].real
    return out


def random_scalar_field(seed, lattice, decay=3.0, zero_mean=True):
    """Seeded random real field with |ghat(xi)| = rho(xi)^(-decay)."""
    if decay < 0:
        raise ValueError(f"decay exponent must be >= 0, got {decay}")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 1.0, lattice.shape)
    c = rho2(lattice) ** (-decay / 2.0) * np.exp(TWO_PI * 1j * phases)
    c = _hermitianize_half(lattice, c)
    if zero_mean:
        c[lattice.zero_index] = 0.0
    return SpectralScalarField(lattice, c, True, zero_mean)


def random_vector_field(seed, lattice, decay=3.0, zero_mean=True, divergence_free=False):
    """Seeded random real vector field with per-mode magnitude rho^(-decay).

    With divergence_free the per-mode direction is drawn transverse to xi and
    renormalized, so the magnitude law survives the solenoidal constraint.
    """
    if decay < 0:
        raise ValueError(f"decay exponent must be >= 0, got {decay}")
    rng = np.random.default_rng(seed)
    n = lattice.n
    z = rng.standard_normal((n,) + lattice.shape) + 1j * rng.standard_normal((n,) + lattice.shape)
    if divergence_free:
        xdotz = np.zeros(lattice.shape, np.complex128)
        for j, xi_j in enumerate(index_grids(lattice)):
            xdotz += xi_j * z[j]
        a2 = mode_abs2(lattice).copy()
        a2[lattice.zero_index] = 1.0
        for j, xi_j in enumerate(index_grids(lattice)):
            z[j] = z[j] - xi_j * xdotz / a2
    norm = np.sqrt(np.sum(np.abs(z) ** 2, axis=0))
    degenerate = norm < 1e-12
    if np.any(degenerate):
        # vanishing draw after projection: fall back to a fixed transverse axis
        fb = np.zeros((n,) + lattice.shape, np.complex128)
        fb[-1] = 1.0
        if divergence_free:
            fb = _project_transverse(lattice, fb)
        z = np.where(degenerate, fb, z)
        norm = np.sqrt(np.sum(np.abs(z) ** 2, axis=0))
        norm[norm == 0.0] = 1.0
    amp = rho2(lattice) ** (-decay / 2.0)
    coeffs = np.empty_like(z)
    for j in range(n):
        coeffs[j] = _hermitianize_half(lattice, amp * z[j] / norm)
    zero = (slice(None),) + lattice.zero_index
    if zero_mean or divergence_free:
        coeffs[zero] = 0.0
    return SpectralVectorField(lattice, coeffs, True, zero_mean or divergence_free, divergence_free)


def _project_transverse(lattice, coeffs):
    xdotc = np.zeros(lattice.shape, np.complex128)
    for j, xi_j in enumerate(index_grids(lattice)):
        xdotc += xi_j * coeffs[j]
    a2 = mode_abs2(lattice).copy()
    a2[lattice.zero_index] = 1.0
    out = np.empty_like(coeffs)
    for j, xi_j in enumerate(index_grids(lattice)):
        out[j] = coeffs[j] - xi_j * xdotc / a2
    return out


def ball_mask(lattice, radius):
    """Boolean cube marking the modes with |xi| <= radius."""
    return mode_abs2(lattice) <= float(radius) ** 2


def ball_filter(field, radius):
    """Zero every coefficient outside the closed mode ball |xi| <= radius.

    The cube storage is unchanged; this is the ball-truncation view of a
    cube-truncated field. All flags survive (the mask is symmetric under
    index negation and always keeps the zero mode).
    """
    mask = ball_mask(field.lattice, radius)
    if isinstance(field, SpectralVectorField):
        return SpectralVectorField(
            field.lattice,
            field.coeffs * mask,
            field.is_real,
            field.zero_mean,
            field.divergence_free,
        )
    return SpectralScalarField(field.lattice, field.coeffs * mask, field.is_real, field.zero_mean)


def _center_slices(big, small):
    lo = big.m - small.m
    hi = lo + 2 * small.m + 1
    return (slice(lo, hi),) * big.n


def embed_field(field, m):
    """Zero-pad a field onto the larger cube with truncation bound m."""
    lat = field.lattice
    if m < lat.m:
        raise ValueError(f"embed target m={m} is smaller than source m={lat.m}")
    big = LatticeSpec(lat.n, m)
    sl = _center_slices(big, lat)
    if isinstance(field, SpectralVectorField):
        out = np.zeros((lat.n,) + big.shape, np.complex128)
        out[(slice(None),) + sl] = field.coeffs
        return SpectralVectorField(big, out, field.is_real, field.zero_mean, field.divergence_free)
    out = np.zeros(big.shape, np.complex128)
    out[sl] = field.coeffs
    return SpectralScalarField(big, out, field.is_real, field.zero_mean)


def restrict_field(field, m):
    """Crop a field to the smaller cube with truncation bound m."""
    lat = field.lattice
    if m > lat.m:
        raise ValueError(f"restrict target m={m} exceeds source m={lat.m}")
    small = LatticeSpec(lat.n, m)
    sl = _center_slices(lat, small)
    if isinstance(field, SpectralVectorField):
        return SpectralVectorField(
            small,
            field.coeffs[(slice(None),) + sl].copy(),
            field.is_real,
            field.zero_mean,
            field.divergence_free,
        )
    return SpectralScalarField(small, field.coeffs[sl].copy(), field.is_real, field.zero_mean)
