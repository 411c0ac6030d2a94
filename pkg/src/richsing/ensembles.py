"""Gaussian ensembles of homogeneous polynomial maps on spheres.

Two laws are provided: the harmonic L^2 ensemble (i.i.d. standard normals
on an orthonormal spherical-harmonic basis of degrees ell <= d, ell = d
mod 2) and the Kostlan / Bombieri-Weyl ensemble (normals on the multinomial-
weighted monomial basis).  Sampling is a pure function of (spec, index):
each draw owns a Philox stream keyed by (seed, index), so batches are
reproducible bit-for-bit and order-independent under parallel generation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import harmonics
from .errors import UnsupportedEnsembleError
from .harmonics import QuadratureGrid, as_unit_points, basis_dimension, sphere_volume
from .polynomials import DensePolynomial, homogeneous_exponents

SAMPLE_FORMAT = "richsing.sample/1"

HARMONIC = "harmonic"
KOSTLAN = "kostlan"


@dataclass(frozen=True)
class EnsembleSpec:
    """Which Gaussian measure to draw from."""

    kind: str
    n: int
    d: int
    k: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (HARMONIC, KOSTLAN):
            raise UnsupportedEnsembleError(f"unknown ensemble kind {self.kind!r}")
        harmonics._check_dim(self.n)
        if self.d < 1:
            raise ValueError("degree must be >= 1")
        if self.k < 1:
            raise ValueError("codomain dimension must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def coefficient_count(self) -> int:
        if self.kind == HARMONIC:
            return basis_dimension(self.n, self.d)
        return homogeneous_exponents(self.n + 1, self.d).shape[0]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "d": self.d, "k": self.k, "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleSpec":
        return cls(kind=data["kind"], n=int(data["n"]), d=int(data["d"]),
                   k=int(data["k"]), seed=int(data["seed"]))


@dataclass(frozen=True)
class PolynomialSample:
    """One draw: a (k, n_coefficients) table of basis coefficients.

    For the harmonic kind the columns follow ``harmonics.harmonic_indices``;
    for Kostlan they follow ``polynomials.homogeneous_exponents`` and store
    the raw standard normals (the multinomial weights are applied at
    evaluation time).
    """

    spec: EnsembleSpec
    coefficients: np.ndarray
    index: int | None = None

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.float64)
        if c.ndim == 1:
            c = c[None, :]
        expected = (self.spec.k, self.spec.coefficient_count)
        if c.shape != expected:
            raise ValueError(f"coefficient table shape {c.shape}, expected {expected}")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        return self.spec.d

    def to_json(self) -> str:
        return json.dumps({
            "format": SAMPLE_FORMAT,
            "spec": self.spec.to_dict(),
            "index": self.index,
            "coefficients": self.coefficients.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "PolynomialSample":
        data = json.loads(text)
        if data.get("format") != SAMPLE_FORMAT:
            raise ValueError(f"unknown sample format {data.get('format')!r}")
        return cls(EnsembleSpec.from_dict(data["spec"]),
                   np.asarray(data["coefficients"], dtype=np.float64),
                   data.get("index"))


def sample(spec: EnsembleSpec, index: int = 0) -> PolynomialSample:
    """Draw sample ``index`` of the ensemble; pure in (spec, index)."""
    if index < 0 or index >= 2 ** 64:
        raise ValueError("sample index must fit in 64 bits")
    key = np.array([spec.seed, index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    coeffs = gen.standard_normal((spec.k, spec.coefficient_count))
    return PolynomialSample(spec, coeffs, index)


@lru_cache(maxsize=None)
def kostlan_weights(n: int, d: int) -> np.ndarray:
    """sqrt(d! / prod(alpha_i!)) for every degree-d exponent alpha, in
    ``homogeneous_exponents`` order."""
    expo = homogeneous_exponents(n + 1, d)
    logs = math.lgamma(d + 1) - np.sum(
        np.vectorize(math.lgamma)(expo + 1.0), axis=1
    )
    w = np.exp(0.5 * logs)
    w.setflags(write=False)
    return w


def basis_value_matrix(spec: EnsembleSpec, points) -> np.ndarray:
    """(n_coefficients, N) matrix of basis values at unit points, in the
    same column order as the sample coefficient table."""
    pts = as_unit_points(points, spec.n)
    if spec.kind == HARMONIC:
        return harmonics.basis_values(spec.n, spec.d, pts)
    expo = homogeneous_exponents(spec.n + 1, spec.d)
    vals = harmonics._monomial_values(pts, np.asarray(expo))
    return (vals * kostlan_weights(spec.n, spec.d)[None, :]).T


def sample_values(p: PolynomialSample, points) -> np.ndarray:
    """Values of the polynomial map at unit points: shape (k, N), squeezed
    to (N,) when k == 1."""
    spec = p.spec
    pts = as_unit_points(points, spec.n)
    out = np.zeros((spec.k, pts.shape[0]))
    if spec.kind == HARMONIC:
        for pos, row in harmonics.iter_basis_values(spec.n, spec.d, pts):
            out += p.coefficients[:, pos, None] * row[None, :]
    else:
        phi = basis_value_matrix(spec, pts)
        out = p.coefficients @ phi
    return out[0] if spec.k == 1 else out


def to_polynomials(p: PolynomialSample) -> list[DensePolynomial]:
    """Exact monomial representation of each component."""
    spec = p.spec
    if spec.kind == KOSTLAN:
        expo = homogeneous_exponents(spec.n + 1, spec.d)
        w = kostlan_weights(spec.n, spec.d)
        return [DensePolynomial(np.asarray(expo), w * p.coefficients[i])
                for i in range(spec.k)]
    ids = harmonics.harmonic_indices(spec.n, spec.d)
    out = []
    for i in range(spec.k):
        total = DensePolynomial.constant(0.0, spec.n + 1)
        for pos, idx in enumerate(ids):
            c = p.coefficients[i, pos]
            if c != 0.0:
                ext = harmonics.homogeneous_extension(spec.n, idx.ell, idx.j, spec.d)
                total = total + c * ext
        out.append(total)
    return out


def sample_jet(p: PolynomialSample, points):
    """(values, gradients, Hessians) of the map at unit points:
    shapes (k, N), (k, N, n+1), (k, N, n+1, n+1)."""
    spec = p.spec
    pts = as_unit_points(points, spec.n)
    npts, dim = pts.shape
    val = np.zeros((spec.k, npts))
    grad = np.zeros((spec.k, npts, dim))
    hess = np.zeros((spec.k, npts, dim, dim))
    if spec.kind == HARMONIC:
        for pos, (v, g, h) in harmonics.iter_basis_jets(spec.n, spec.d, pts):
            c = p.coefficients[:, pos]
            val += c[:, None] * v[None, :]
            grad += c[:, None, None] * g[None, :, :]
            hess += c[:, None, None, None] * h[None, :, :, :]
    else:
        for i, poly in enumerate(to_polynomials(p)):
            v, g, h = poly.jet(pts)
            val[i], grad[i], hess[i] = v, g, h
    return val, grad, hess


def evaluate(p, points) -> np.ndarray:
    """Values at sphere points of either a PolynomialSample or a plain
    DensePolynomial (scalar)."""
    if isinstance(p, PolynomialSample):
        return sample_values(p, points)
    if isinstance(p, DensePolynomial):
        return p(np.atleast_2d(points))
    raise TypeError(f"cannot evaluate object of type {type(p).__name__}")


def evaluate_jet(p, points):
    """Ambient (values, gradients, Hessians) of a scalar sample or
    polynomial, shapes (N,), (N, dim), (N, dim, dim)."""
    if isinstance(p, PolynomialSample):
        if p.spec.k != 1:
            raise ValueError("jet evaluation is defined per scalar component")
        v, g, h = sample_jet(p, points)
        return v[0], g[0], h[0]
    if isinstance(p, DensePolynomial):
        return p.jet(np.atleast_2d(points))
    raise TypeError(f"cannot evaluate object of type {type(p).__name__}")


def degree_of(p) -> int:
    if isinstance(p, PolynomialSample):
        return p.spec.d
    if isinstance(p, DensePolynomial):
        return p.degree
    raise TypeError(f"no degree for object of type {type(p).__name__}")


def l2_norm(p: PolynomialSample, grid: QuadratureGrid) -> float:
    """L^2(S^n) norm of the map, by quadrature exact to degree 2d."""
    spec = p.spec
    if grid.n != spec.n:
        raise UnsupportedEnsembleError("grid sphere dimension mismatch")
    grid.require_exactness(2 * spec.d)
    vals = sample_values(p, grid.points)
    if spec.k == 1:
        vals = vals[None, :]
    sq = np.einsum("kn,kn->n", vals, vals)
    return float(math.sqrt(grid.integrate(sq)))


def zonal_value(n: int, ell: int, t) -> np.ndarray:
    """Degree-ell zonal function normalized to 1 at t = 1 (Chebyshev T on
    S^1, Legendre on S^2, Chebyshev U / (ell+1) on S^3)."""
    harmonics._check_dim(n)
    t = np.asarray(t, dtype=np.float64)
    if ell == 0:
        return np.ones_like(t)
    if n == 1:
        prev, cur = np.ones_like(t), t.copy()
        for _ in range(ell - 1):
            prev, cur = cur, 2.0 * t * cur - prev
        return cur
    if n == 2:
        prev, cur = np.ones_like(t), t.copy()
        for k in range(1, ell):
            prev, cur = cur, ((2 * k + 1) * t * cur - k * prev) / (k + 1)
        return cur
    prev, cur = np.ones_like(t), 2.0 * t
    for _ in range(ell - 1):
        prev, cur = cur, 2.0 * t * cur - prev
    return cur / (ell + 1)


def ensemble_kernel_scalar(spec: EnsembleSpec, t) -> np.ndarray:
    """Scalar covariance E p_i(x) p_i(y) of one component of the harmonic
    ensemble at cos(angle) = t, via the addition theorem."""
    if spec.kind != HARMONIC:
        raise UnsupportedEnsembleError(
            "covariance sum is defined for the harmonic ensemble; the Kostlan "
            "kernel is t**d, see kostlan_kernel")
    t = np.asarray(t, dtype=np.float64)
    if np.any(np.abs(t) > 1.0 + 1e-12):
        raise ValueError("|t| must be <= 1")
    t = np.clip(t, -1.0, 1.0)
    vol = sphere_volume(spec.n)
    out = np.zeros_like(t)
    for ell in harmonics.ensemble_degrees(spec.d):
        out += harmonics.eigenspace_dimension(spec.n, ell) / vol * zonal_value(spec.n, ell, t)
    return out


def ensemble_kernel(spec: EnsembleSpec, t: float) -> np.ndarray:
    """k x k covariance matrix E p(x) p(y)^T at cos(angle) = t."""
    return float(ensemble_kernel_scalar(spec, t)) * np.eye(spec.k)


def kostlan_kernel(spec: EnsembleSpec, t) -> np.ndarray:
    """Kostlan covariance of one component: t**d (constant-time formula)."""
    if spec.kind != KOSTLAN:
        raise UnsupportedEnsembleError("kostlan_kernel applies to the Kostlan kind")
    return np.asarray(t, dtype=np.float64) ** spec.d
