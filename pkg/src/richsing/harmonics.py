"""Real spherical-harmonic bases on S^1, S^2, S^3 with ambient jets.

Harmonics are built inductively: the circle contributes the trigonometric
pair Re/Im (x0 + i x1)^m, each higher sphere adds a Gegenbauer-type radial
factor in (axis coordinate, squared norm).  Every basis element is a
harmonic homogeneous polynomial; values, gradients and Hessians are
evaluated on the ambient polynomial, so no chart is involved at this level.

Batch evaluation of a whole degree-d basis at one point costs O(d^2) per
point on S^1/S^2 via the three-term degree recurrences; S^3 (used only at
small degree) goes through explicit monomial tables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GridExactnessError, SphereDomainError, UnsupportedDimensionError
from .polynomials import DensePolynomial, homogeneous_exponents

UNIT_NORM_TOL = 1e-12       # points are considered on-sphere below this
UNIT_RENORM_TOL = 1e-9      # renormalized if within this, rejected beyond

_SPHERE_VOLUMES = {1: 2.0 * math.pi, 2: 4.0 * math.pi, 3: 2.0 * math.pi ** 2}


def sphere_volume(n: int) -> float:
    _check_dim(n)
    return _SPHERE_VOLUMES[n]


def _check_dim(n: int) -> None:
    if n not in (1, 2, 3):
        raise UnsupportedDimensionError(f"sphere dimension must be 1, 2 or 3, got {n}")


def as_unit_points(points, n: int) -> np.ndarray:
    """Validate/renormalize an (N, n+1) array of sphere points.

    Points within 1e-9 of unit norm are renormalized; anything farther is
    rejected, since grids and Newton iterates accumulate only rounding-level
    drift.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != n + 1:
        raise SphereDomainError(f"expected points in R^{n + 1}, got shape {pts.shape}")
    norms = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    err = np.abs(norms - 1.0)
    worst = err.max() if err.size else 0.0
    if worst > UNIT_RENORM_TOL:
        raise SphereDomainError(f"point off the unit sphere by {worst:.3e}")
    if worst > UNIT_NORM_TOL:
        pts = pts / norms[:, None]
    return pts


# ---------------------------------------------------------------------------
# index bookkeeping


@dataclass(frozen=True)
class HarmonicIndex:
    """Basis label: sphere dimension n, harmonic degree ell, position j
    inside the degree-ell eigenspace."""

    n: int
    ell: int
    j: int

    def __post_init__(self):
        _check_dim(self.n)
        if self.ell < 0:
            raise ValueError("harmonic degree must be nonnegative")
        if not 0 <= self.j < eigenspace_dimension(self.n, self.ell):
            raise ValueError(
                f"index {self.j} outside eigenspace of dimension "
                f"{eigenspace_dimension(self.n, self.ell)}"
            )


def eigenspace_dimension(n: int, ell: int) -> int:
    """dim of the space of degree-ell harmonics on S^n."""
    _check_dim(n)
    if ell == 0:
        return 1
    if n == 1:
        return 2
    if n == 2:
        return 2 * ell + 1
    return (ell + 1) ** 2


def ensemble_degrees(d: int) -> range:
    """Harmonic degrees entering a degree-d homogeneous polynomial:
    ell <= d with d - ell even."""
    return range(d % 2, d + 1, 2)


def basis_dimension(n: int, d: int) -> int:
    """Number of basis functions of the degree-d ensemble on S^n.

    Equals the number of degree-d monomials in n + 1 variables.
    """
    _check_dim(n)
    if d < 0:
        raise ValueError("degree must be nonnegative")
    return sum(eigenspace_dimension(n, ell) for ell in ensemble_degrees(d))


def harmonic_indices(n: int, d: int) -> list[HarmonicIndex]:
    """Canonical enumeration of the degree-d ensemble basis."""
    out = []
    for ell in ensemble_degrees(d):
        for j in range(eigenspace_dimension(n, ell)):
            out.append(HarmonicIndex(n, ell, j))
    return out


def _degree_offsets(n: int, d: int) -> dict[int, int]:
    off, pos = {}, 0
    for ell in ensemble_degrees(d):
        off[ell] = pos
        pos += eigenspace_dimension(n, ell)
    return off


# ---------------------------------------------------------------------------
# quadrature grids


@dataclass(frozen=True)
class QuadratureGrid:
    """Positive-weight grid on S^n, exact for polynomial integrands up to
    ``exact_degree``.  Weights sum to vol(S^n)."""

    n: int
    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def integrate(self, values: np.ndarray) -> float | np.ndarray:
        return np.tensordot(np.asarray(values), self.weights, axes=([-1], [0]))

    def require_exactness(self, degree: int) -> None:
        if self.exact_degree < degree:
            raise GridExactnessError(
                f"grid exact to degree {self.exact_degree}, need {degree}"
            )


def circle_grid(n_points: int) -> QuadratureGrid:
    """Uniform (trapezoid) rule on S^1; exact for trig degree n_points - 1."""
    theta = 2.0 * math.pi * np.arange(n_points) / n_points
    pts = np.column_stack([np.cos(theta), np.sin(theta)])
    w = np.full(n_points, 2.0 * math.pi / n_points)
    return QuadratureGrid(1, pts, w, n_points - 1)


def sphere2_grid(n_polar: int, n_azimuth: int) -> QuadratureGrid:
    """Gauss-Legendre x uniform-azimuth product grid on S^2."""
    t, wt = np.polynomial.legendre.leggauss(n_polar)
    theta = 2.0 * math.pi * np.arange(n_azimuth) / n_azimuth
    rho = np.sqrt(1.0 - t ** 2)
    pts = np.empty((n_polar * n_azimuth, 3))
    pts[:, 0] = np.outer(rho, np.cos(theta)).ravel()
    pts[:, 1] = np.outer(rho, np.sin(theta)).ravel()
    pts[:, 2] = np.repeat(t, n_azimuth)
    w = np.repeat(wt, n_azimuth) * (2.0 * math.pi / n_azimuth)
    return QuadratureGrid(2, pts, w, min(2 * n_polar - 1, n_azimuth - 1))


def sphere3_grid(n_chi: int, n_polar: int, n_azimuth: int) -> QuadratureGrid:
    """Chebyshev-U (weight sqrt(1-t^2)) x S^2 product grid on S^3."""
    k = np.arange(1, n_chi + 1)
    t = np.cos(k * math.pi / (n_chi + 1))
    wt = (math.pi / (n_chi + 1)) * np.sin(k * math.pi / (n_chi + 1)) ** 2
    inner = sphere2_grid(n_polar, n_azimuth)
    rho = np.sqrt(1.0 - t ** 2)
    npts = n_chi * inner.points.shape[0]
    pts = np.empty((npts, 4))
    pts[:, :3] = (rho[:, None, None] * inner.points[None, :, :]).reshape(-1, 3)
    pts[:, 3] = np.repeat(t, inner.points.shape[0])
    w = (wt[:, None] * inner.weights[None, :]).ravel()
    return QuadratureGrid(3, pts, w, min(2 * n_chi - 1, inner.exact_degree))


def quadrature_grid(n: int, exact_degree: int) -> QuadratureGrid:
    """Grid on S^n exact for polynomial integrands up to ``exact_degree``."""
    _check_dim(n)
    if n == 1:
        return circle_grid(max(8, exact_degree + 1))
    if n == 2:
        half = exact_degree // 2 + 1
        return sphere2_grid(half, exact_degree + 1)
    half = exact_degree // 2 + 1
    return sphere3_grid(half, half, exact_degree + 1)


# ---------------------------------------------------------------------------
# coefficient tables (Legendre derivatives and Gegenbauer polynomials)


@lru_cache(maxsize=None)
def _legendre_coeff_table(lmax: int) -> tuple[np.ndarray, ...]:
    """Coefficient arrays (low-to-high in t) of the Legendre polynomials."""
    polys = [np.array([1.0]), np.array([0.0, 1.0])]
    for ell in range(1, lmax):
        nxt = np.zeros(ell + 2)
        nxt[1:] += (2 * ell + 1) * polys[ell]
        nxt[: ell] -= ell * polys[ell - 1]
        polys.append(nxt / (ell + 1))
    return tuple(polys[: lmax + 1])


@lru_cache(maxsize=None)
def legendre_derivative_coeffs(ell: int, m: int) -> np.ndarray:
    """Coefficients of d^m/dt^m P_ell, the polynomial part of the
    (Condon-Shortley-free) associated Legendre function."""
    if m > ell:
        return np.zeros(1)
    c = _legendre_coeff_table(ell)[ell]
    for _ in range(m):
        c = np.polynomial.polynomial.polyder(c)
    return c


@lru_cache(maxsize=None)
def gegenbauer_coeffs(alpha: float, nn: int) -> np.ndarray:
    """Coefficients of the Gegenbauer polynomial C_nn^(alpha)."""
    if nn == 0:
        return np.array([1.0])
    prev, cur = np.array([1.0]), np.array([0.0, 2.0 * alpha])
    for k in range(2, nn + 1):
        nxt = np.zeros(k + 1)
        nxt[1:] += 2.0 * (k + alpha - 1.0) * cur
        nxt[: k - 1] -= (k + 2.0 * alpha - 2.0) * prev
        prev, cur = cur, nxt / k
    return cur


def _double_factorial_odd(m: int) -> float:
    # (2m - 1)!!
    out = 1.0
    for k in range(1, 2 * m, 2):
        out *= k
    return out


def _s2_norm(ell: int, m: int) -> float:
    """L^2(S^2) normalization for A_m * (d^m P_ell): the classical real
    spherical-harmonic constant, Condon-Shortley-free."""
    base = (2 * ell + 1) / (4.0 * math.pi)
    logratio = math.lgamma(ell - m + 1) - math.lgamma(ell + m + 1)
    norm = math.sqrt(base * math.exp(logratio))
    if m > 0:
        norm *= math.sqrt(2.0)
    return norm


def _s3_norm(ell: int, lam: int) -> float:
    """Normalization of the Gegenbauer radial factor on S^3:
    1 / sqrt(int_{-1}^{1} (1-t^2)^{lam+1/2} C_{ell-lam}^{(lam+1)}(t)^2 dt)."""
    alpha = lam + 1.0
    nn = ell - lam
    logh = (
        math.log(math.pi)
        + (1.0 - 2.0 * alpha) * math.log(2.0)
        + math.lgamma(nn + 2.0 * alpha)
        - math.lgamma(nn + 1.0)
        - math.log(nn + alpha)
        - 2.0 * math.lgamma(alpha)
    )
    return math.exp(-0.5 * logh)


# ---------------------------------------------------------------------------
# solid harmonics as explicit polynomials (exact monomial tables)


def _complex_pair_polys(m: int, n_vars: int) -> tuple[DensePolynomial, DensePolynomial]:
    """(Re, Im) of (x0 + i x1)^m as polynomials in n_vars variables."""
    re = DensePolynomial.constant(1.0, n_vars)
    im = DensePolynomial.constant(0.0, n_vars)
    x0 = DensePolynomial.variable(0, n_vars)
    x1 = DensePolynomial.variable(1, n_vars)
    for _ in range(m):
        re, im = re * x0 - im * x1, re * x1 + im * x0
    return re, im


def _bivariate_poly(coeffs: np.ndarray, v: int, axis: int, mask, n_vars: int) -> DensePolynomial:
    """sum_k c_k * s^k * u^((v-k)/2) with s = x_axis, u = sum of squares over
    ``mask``; only parity-matching k contribute, so this is a polynomial."""
    u = DensePolynomial.constant(0.0, n_vars)
    for i in mask:
        xi = DensePolynomial.variable(i, n_vars)
        u = u + xi * xi
    s = DensePolynomial.variable(axis, n_vars)
    out = DensePolynomial.constant(0.0, n_vars)
    for k, ck in enumerate(coeffs):
        if ck == 0.0 or (v - k) % 2 != 0 or v - k < 0:
            continue
        out = out + ck * s.pow(k) * u.pow((v - k) // 2)
    return out


@lru_cache(maxsize=None)
def solid_harmonic(n: int, ell: int, j: int) -> DensePolynomial:
    """The degree-ell harmonic polynomial h_{ell,j} on R^{n+1}, normalized to
    unit L^2(S^n) norm."""
    idx = HarmonicIndex(n, ell, j)
    n_vars = n + 1
    if n == 1:
        if ell == 0:
            return DensePolynomial.constant(1.0 / math.sqrt(2.0 * math.pi), n_vars)
        re, im = _complex_pair_polys(ell, n_vars)
        pick = re if j == 0 else im
        return pick * (1.0 / math.sqrt(math.pi))
    if n == 2:
        m, kind = _s2_index_to_order(ell, j)
        coeffs = legendre_derivative_coeffs(ell, m)
        w = _bivariate_poly(coeffs, ell - m, axis=2, mask=(0, 1, 2), n_vars=n_vars)
        if m == 0:
            return w * _s2_norm(ell, 0)
        re, im = _complex_pair_polys(m, n_vars)
        a = re if kind == 0 else im
        return a * w * _s2_norm(ell, m)
    lam, k = _s3_index_split(idx.j)
    inner = solid_harmonic(2, lam, k)
    inner4 = DensePolynomial(
        np.hstack([inner.exponents, np.zeros((inner.exponents.shape[0], 1), dtype=np.int64)]),
        inner.coeffs,
        n_vars,
    )
    gcoeffs = gegenbauer_coeffs(lam + 1.0, ell - lam)
    g = _bivariate_poly(gcoeffs, ell - lam, axis=3, mask=(0, 1, 2, 3), n_vars=n_vars)
    return inner4 * g * _s3_norm(ell, lam)


def _s2_index_to_order(ell: int, j: int) -> tuple[int, int]:
    """j -> (m, kind) with kind 0 = cosine-type, 1 = sine-type."""
    if j == 0:
        return 0, 0
    m = (j + 1) // 2
    return m, (j + 1) % 2


def _s3_index_split(j: int) -> tuple[int, int]:
    """j -> (lambda, inner index) using the (lam+1)^2 block layout."""
    lam = int(math.isqrt(j))
    return lam, j - lam * lam


def homogeneous_extension(n: int, ell: int, j: int, d: int) -> DensePolynomial:
    """Degree-d homogeneous extension |x|^(d-ell) h_{ell,j}(x/|x|)."""
    if (d - ell) % 2 or d < ell:
        raise ValueError("extension requires d >= ell with d - ell even")
    h = solid_harmonic(n, ell, j)
    if d == ell:
        return h
    u = DensePolynomial.constant(0.0, n + 1)
    for i in range(n + 1):
        xi = DensePolynomial.variable(i, n + 1)
        u = u + xi * xi
    return h * u.pow((d - ell) // 2)


# ---------------------------------------------------------------------------
# jet algebra helpers


def _combine_jets(a, b):
    """Product rule for (value, gradient, Hessian) triples, vectorized over
    the leading point axis."""
    va, ga, ha = a
    vb, gb, hb = b
    v = va * vb
    g = ga * vb[:, None] + gb * va[:, None]
    h = (
        ha * vb[:, None, None]
        + hb * va[:, None, None]
        + ga[:, :, None] * gb[:, None, :]
        + gb[:, :, None] * ga[:, None, :]
    )
    return v, g, h


def _a_factor_jets(points: np.ndarray, m: int, kind: int):
    """Jets of Re/Im (x0 + i x1)^m embedded in the ambient dimension."""
    npts, dim = points.shape
    z = points[:, 0] + 1j * points[:, 1]
    if m == 0:
        return (
            np.ones(npts),
            np.zeros((npts, dim)),
            np.zeros((npts, dim, dim)),
        )
    zm = z ** m
    zm1 = z ** (m - 1)
    val = zm.real if kind == 0 else zm.imag
    grad = np.zeros((npts, dim))
    if kind == 0:
        grad[:, 0] = m * zm1.real
        grad[:, 1] = -m * zm1.imag
    else:
        grad[:, 0] = m * zm1.imag
        grad[:, 1] = m * zm1.real
    hess = np.zeros((npts, dim, dim))
    if m >= 2:
        zm2 = z ** (m - 2)
        c = m * (m - 1)
        if kind == 0:
            hess[:, 0, 0] = c * zm2.real
            hess[:, 0, 1] = hess[:, 1, 0] = -c * zm2.imag
            hess[:, 1, 1] = -c * zm2.real
        else:
            hess[:, 0, 0] = c * zm2.imag
            hess[:, 0, 1] = hess[:, 1, 0] = c * zm2.real
            hess[:, 1, 1] = -c * zm2.imag
    return val, grad, hess


def _bivariate_jets_unit(points, w, ws, wss, v: int, axis: int):
    """Ambient jets of a bivariate factor at unit points (u = |x|^2 = 1),
    given pointwise W, dW/ds, d2W/ds2 and the joint homogeneity degree v."""
    npts, dim = points.shape
    s = points[:, axis]
    wu = 0.5 * (v * w - s * ws)
    wsu = 0.5 * ((v - 1) * ws - s * wss)
    wuu = 0.5 * ((v - 2) * wu - s * wsu)
    grad = 2.0 * points * wu[:, None]
    grad[:, axis] += ws
    hess = 4.0 * points[:, :, None] * points[:, None, :] * wuu[:, None, None]
    hess[:, axis, :] += 2.0 * points * wsu[:, None]
    hess[:, :, axis] += 2.0 * points * wsu[:, None]
    hess[:, axis, axis] += wss
    idx = np.arange(dim)
    hess[:, idx, idx] += 2.0 * wu[:, None]
    return w, grad, hess


def _extension_jets(points: np.ndarray, mtilde: int):
    """Jets of |x|^(2 mtilde) at unit points."""
    npts, dim = points.shape
    val = np.ones(npts)
    if mtilde == 0:
        return val, np.zeros((npts, dim)), np.zeros((npts, dim, dim))
    grad = 2.0 * mtilde * points
    hess = 4.0 * mtilde * (mtilde - 1) * points[:, :, None] * points[:, None, :]
    idx = np.arange(dim)
    hess[:, idx, idx] += 2.0 * mtilde
    return val, grad, hess


# ---------------------------------------------------------------------------
# streaming basis evaluation (values and degree-d extension jets)


def _legendre_value_column(t: np.ndarray, m: int, lmax: int) -> np.ndarray:
    """Rows ell = 0..lmax of d^m/dt^m P_ell(t); rows below m are zero.
    Three-term recurrence in ell for fixed m, vectorized over points."""
    out = np.zeros((lmax + 1, t.shape[0]))
    if m > lmax:
        return out
    out[m] = _double_factorial_odd(m)
    if m + 1 <= lmax:
        out[m + 1] = (2 * m + 1) * out[m] * t
    for ell in range(m + 2, lmax + 1):
        out[ell] = ((2 * ell - 1) * t * out[ell - 1] - (ell + m - 1) * out[ell - 2]) / (ell - m)
    return out


def _iter_s1_rows(d: int, points: np.ndarray, jets: bool):
    off = _degree_offsets(1, d)
    z = points[:, 0] + 1j * points[:, 1]
    inv_sqrt_pi = 1.0 / math.sqrt(math.pi)
    for ell in ensemble_degrees(d):
        mt = (d - ell) // 2
        if ell == 0:
            c = 1.0 / math.sqrt(2.0 * math.pi)
            if jets:
                ext = _extension_jets(points, mt)
                yield off[0], (c * ext[0], c * ext[1], c * ext[2])
            else:
                yield off[0], np.full(points.shape[0], c)
            continue
        if jets:
            ext = _extension_jets(points, mt)
            for kind in (0, 1):
                jet = _a_factor_jets(points, ell, kind)
                v, g, h = _combine_jets(jet, ext)
                yield off[ell] + kind, (inv_sqrt_pi * v, inv_sqrt_pi * g, inv_sqrt_pi * h)
        else:
            zl = z ** ell
            yield off[ell], inv_sqrt_pi * zl.real
            yield off[ell] + 1, inv_sqrt_pi * zl.imag


def _iter_s2_value_rows(d: int, points: np.ndarray):
    off = _degree_offsets(2, d)
    t = points[:, 2]
    z = points[:, 0] + 1j * points[:, 1]
    parity = d % 2
    zpow = np.ones_like(z)
    for m in range(0, d + 1):
        if m > 0:
            zpow = zpow * z
        col = _legendre_value_column(t, m, d)
        start = max(m, parity)
        if (start - parity) % 2:
            start += 1
        for ell in range(start, d + 1, 2):
            norm = _s2_norm(ell, m)
            if m == 0:
                yield off[ell], norm * col[ell]
            else:
                base = norm * col[ell]
                yield off[ell] + 2 * m - 1, base * zpow.real
                yield off[ell] + 2 * m, base * zpow.imag


def _iter_s2_jet_rows(d: int, points: np.ndarray):
    off = _degree_offsets(2, d)
    t = points[:, 2]
    parity = d % 2
    cols: dict[int, np.ndarray] = {}
    for m in range(d, -1, -1):
        cols[m] = _legendre_value_column(t, m, d)
        cols.pop(m + 3, None)
        cm1 = cols.get(m + 1)
        cm2 = cols.get(m + 2)
        start = max(m, parity)
        if (start - parity) % 2:
            start += 1
        for ell in range(start, d + 1, 2):
            w = cols[m][ell]
            ws = cm1[ell] if cm1 is not None else np.zeros_like(w)
            wss = cm2[ell] if cm2 is not None else np.zeros_like(w)
            wjet = _bivariate_jets_unit(points, w, ws, wss, ell - m, axis=2)
            norm = _s2_norm(ell, m)
            ext = _extension_jets(points, (d - ell) // 2)
            if m == 0:
                v, g, h = _combine_jets(wjet, ext)
                yield off[ell], (norm * v, norm * g, norm * h)
            else:
                for kind in (0, 1):
                    ajet = _a_factor_jets(points, m, kind)
                    v, g, h = _combine_jets(_combine_jets(ajet, wjet), ext)
                    pos = off[ell] + 2 * m - 1 + kind
                    yield pos, (norm * v, norm * g, norm * h)


@lru_cache(maxsize=8)
def _s3_monomial_tables(d: int):
    """Per harmonic degree ell: (exponent table, coefficient matrix) mapping
    monomial values to the degree-ell basis block."""
    tables = {}
    for ell in ensemble_degrees(d):
        expo = homogeneous_exponents(4, ell)
        lookup = {tuple(row): i for i, row in enumerate(np.asarray(expo))}
        dim = eigenspace_dimension(3, ell)
        mat = np.zeros((expo.shape[0], dim))
        for j in range(dim):
            poly = solid_harmonic(3, ell, j)
            for row, c in zip(poly.exponents, poly.coeffs):
                mat[lookup[tuple(row)], j] = c
        tables[ell] = (np.asarray(expo), mat)
    return tables


def _monomial_values(points: np.ndarray, expo: np.ndarray) -> np.ndarray:
    maxdeg = int(expo.max()) if expo.size else 0
    powers = np.ones((points.shape[1], points.shape[0], maxdeg + 1))
    for i in range(points.shape[1]):
        for a in range(1, maxdeg + 1):
            powers[i, :, a] = powers[i, :, a - 1] * points[:, i]
    vals = np.ones((points.shape[0], expo.shape[0]))
    for i in range(points.shape[1]):
        vals *= powers[i][:, expo[:, i]]
    return vals


def _iter_s3_rows(d: int, points: np.ndarray, jets: bool):
    off = _degree_offsets(3, d)
    tables = _s3_monomial_tables(d)
    for ell in ensemble_degrees(d):
        expo, mat = tables[ell]
        if not jets:
            block = _monomial_values(points, expo) @ mat
            for j in range(mat.shape[1]):
                yield off[ell] + j, block[:, j]
        else:
            ext = _extension_jets(points, (d - ell) // 2)
            for j in range(mat.shape[1]):
                poly = solid_harmonic(3, ell, j)
                v, g, h = poly.jet(points)
                yield off[ell] + j, _combine_jets((v, g, h), ext)


def iter_basis_values(n: int, d: int, points: np.ndarray):
    """Yield (position, value row) for every degree-d ensemble basis function.

    Rows arrive in recurrence order, not position order; ``position`` is the
    index in the canonical ``harmonic_indices(n, d)`` enumeration.  At unit
    points the homogeneous extension does not change values, so these are
    also the harmonic values.
    """
    pts = as_unit_points(points, n)
    if n == 1:
        yield from _iter_s1_rows(d, pts, jets=False)
    elif n == 2:
        yield from _iter_s2_value_rows(d, pts)
    else:
        yield from _iter_s3_rows(d, pts, jets=False)


def iter_basis_jets(n: int, d: int, points: np.ndarray):
    """Yield (position, (value, gradient, Hessian)) of the degree-d
    homogeneous extensions of the ensemble basis at unit points."""
    pts = as_unit_points(points, n)
    if n == 1:
        yield from _iter_s1_rows(d, pts, jets=True)
    elif n == 2:
        yield from _iter_s2_jet_rows(d, pts)
    else:
        yield from _iter_s3_rows(d, pts, jets=True)


def basis_values(n: int, d: int, points: np.ndarray) -> np.ndarray:
    """Dense (B, N) matrix of ensemble basis values at unit points."""
    pts = as_unit_points(points, n)
    out = np.empty((basis_dimension(n, d), pts.shape[0]))
    for pos, row in iter_basis_values(n, d, pts):
        out[pos] = row
    return out


def eval_harmonic_jet(idx: HarmonicIndex, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value, ambient gradient and ambient Hessian of the degree-ell harmonic
    h_{ell,j} at a unit point (or batch of unit points)."""
    single = np.asarray(x).ndim == 1
    pts = as_unit_points(x, idx.n)
    v, g, h = solid_harmonic(idx.n, idx.ell, idx.j).jet(pts)
    if single:
        return v[0], g[0], h[0]
    return v, g, h


def orthonormality_check(n: int, d: int, grid: QuadratureGrid) -> float:
    """Max |<h_a, h_b> - delta_ab| over the degree-d ensemble basis,
    integrated on ``grid`` (must be exact to degree 2d)."""
    _check_dim(n)
    if grid.n != n:
        raise GridExactnessError("grid sphere dimension mismatch")
    grid.require_exactness(2 * d)
    phi = basis_values(n, d, grid.points)
    gram = (phi * grid.weights[None, :]) @ phi.T
    return float(np.abs(gram - np.eye(gram.shape[0])).max())
