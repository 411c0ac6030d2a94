"""Dense multivariate polynomials over exponent tables.

Small utility layer used for monomial representations of harmonic basis
elements, Kostlan samples, implicit-surface oracles and rotation tests.
Not meant to scale past the low degrees this package works at.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


class DensePolynomial:
    """Polynomial stored as an exponent matrix plus a coefficient vector.

    ``exponents`` has shape (n_terms, n_vars) with nonnegative integer
    entries; ``coeffs`` has shape (n_terms,).  Duplicate exponent rows are
    merged and zero coefficients dropped on construction.
    """

    __slots__ = ("exponents", "coeffs", "n_vars")

    def __init__(self, exponents, coeffs, n_vars=None):
        exponents = np.atleast_2d(np.asarray(exponents, dtype=np.int64))
        coeffs = np.asarray(coeffs, dtype=np.float64).ravel()
        if exponents.shape[0] != coeffs.shape[0]:
            raise ValueError("exponent/coefficient length mismatch")
        if n_vars is None:
            n_vars = exponents.shape[1]
        if exponents.size == 0:
            exponents = np.zeros((0, n_vars), dtype=np.int64)
        uniq, inverse = np.unique(exponents, axis=0, return_inverse=True)
        merged = np.bincount(inverse, weights=coeffs, minlength=uniq.shape[0])
        keep = merged != 0.0
        self.exponents = uniq[keep]
        self.coeffs = merged[keep]
        self.n_vars = int(n_vars)

    @classmethod
    def constant(cls, value, n_vars):
        return cls(np.zeros((1, n_vars), dtype=np.int64), [value], n_vars)

    @classmethod
    def variable(cls, i, n_vars):
        e = np.zeros((1, n_vars), dtype=np.int64)
        e[0, i] = 1
        return cls(e, [1.0], n_vars)

    @classmethod
    def linear_form(cls, weights):
        weights = np.asarray(weights, dtype=np.float64)
        e = np.eye(weights.size, dtype=np.int64)
        return cls(e, weights, weights.size)

    @property
    def degree(self):
        if self.exponents.shape[0] == 0:
            return 0
        return int(self.exponents.sum(axis=1).max())

    def is_homogeneous(self):
        if self.exponents.shape[0] == 0:
            return True
        degs = self.exponents.sum(axis=1)
        return bool(np.all(degs == degs[0]))

    def __call__(self, points):
        """Evaluate at ``points`` of shape (n_vars,) or (N, n_vars)."""
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.shape[1] != self.n_vars:
            raise ValueError("point dimension mismatch")
        if self.exponents.shape[0] == 0:
            out = np.zeros(pts.shape[0])
            return out[0] if single else out
        maxdeg = int(self.exponents.max())
        # powers[i][:, a] = x_i ** a
        npts = pts.shape[0]
        out = np.zeros(npts)
        powers = np.ones((self.n_vars, npts, maxdeg + 1))
        for i in range(self.n_vars):
            for a in range(1, maxdeg + 1):
                powers[i, :, a] = powers[i, :, a - 1] * pts[:, i]
        for m in range(self.exponents.shape[0]):
            term = np.full(npts, self.coeffs[m])
            for i in range(self.n_vars):
                a = self.exponents[m, i]
                if a:
                    term = term * powers[i, :, a]
            out += term
        return out[0] if single else out

    def derivative(self, i):
        mask = self.exponents[:, i] > 0
        if not mask.any():
            return DensePolynomial.constant(0.0, self.n_vars)
        e = self.exponents[mask].copy()
        c = self.coeffs[mask] * e[:, i]
        e[:, i] -= 1
        return DensePolynomial(e, c, self.n_vars)

    def __mul__(self, other):
        if np.isscalar(other):
            return DensePolynomial(self.exponents, self.coeffs * other, self.n_vars)
        if other.n_vars != self.n_vars:
            raise ValueError("variable count mismatch")
        if self.exponents.shape[0] == 0 or other.exponents.shape[0] == 0:
            return DensePolynomial.constant(0.0, self.n_vars)
        e = (self.exponents[:, None, :] + other.exponents[None, :, :]).reshape(-1, self.n_vars)
        c = (self.coeffs[:, None] * other.coeffs[None, :]).ravel()
        return DensePolynomial(e, c, self.n_vars)

    __rmul__ = __mul__

    def __add__(self, other):
        if np.isscalar(other):
            other = DensePolynomial.constant(other, self.n_vars)
        return DensePolynomial(
            np.vstack([self.exponents, other.exponents]),
            np.concatenate([self.coeffs, other.coeffs]),
            self.n_vars,
        )

    def __sub__(self, other):
        if np.isscalar(other):
            other = DensePolynomial.constant(other, self.n_vars)
        return self + (other * -1.0)

    def __neg__(self):
        return self * -1.0

    def pow(self, k):
        out = DensePolynomial.constant(1.0, self.n_vars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def compose_linear(self, matrix):
        """Return q(y) = p(A y) for A of shape (n_vars, n_new)."""
        A = np.asarray(matrix, dtype=np.float64)
        if A.shape[0] != self.n_vars:
            raise ValueError("matrix row count must match variable count")
        n_new = A.shape[1]
        maxdeg = self.degree
        # cache powers of each substituted coordinate linear form
        linpows = []
        for i in range(self.n_vars):
            lp = [DensePolynomial.constant(1.0, n_new)]
            form = DensePolynomial.linear_form(A[i])
            for _ in range(maxdeg):
                lp.append(lp[-1] * form)
            linpows.append(lp)
        total = DensePolynomial.constant(0.0, n_new)
        for m in range(self.exponents.shape[0]):
            term = DensePolynomial.constant(self.coeffs[m], n_new)
            for i in range(self.n_vars):
                a = self.exponents[m, i]
                if a:
                    term = term * linpows[i][a]
            total = total + term
        return total

    def jet(self, points):
        """Value, gradient and Hessian arrays at ``points`` (N, n_vars)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = self.n_vars
        val = self(pts)
        grad = np.empty((pts.shape[0], n))
        hess = np.empty((pts.shape[0], n, n))
        derivs = [self.derivative(i) for i in range(n)]
        for i in range(n):
            grad[:, i] = derivs[i](pts)
        for i in range(n):
            for j in range(i, n):
                hij = derivs[i].derivative(j)(pts)
                hess[:, i, j] = hij
                hess[:, j, i] = hij
        return val, grad, hess


class PolyJetEvaluator:
    """Value/gradient/Hessian of one polynomial through a single stacked
    monomial table, so repeated (particularly single-point) jet evaluations
    stay cheap inside Newton loops."""

    def __init__(self, poly: DensePolynomial):
        self.n_vars = n = poly.n_vars
        cols = [poly]
        for i in range(n):
            cols.append(poly.derivative(i))
        self._hess_slots = []
        for i in range(n):
            for j in range(i, n):
                cols.append(cols[1 + i].derivative(j))
                self._hess_slots.append((i, j))
        expo = np.vstack([c.exponents for c in cols if c.exponents.size]
                         or [np.zeros((1, n), dtype=np.int64)])
        expo = np.unique(expo, axis=0)
        lookup = {tuple(r): k for k, r in enumerate(expo)}
        mat = np.zeros((expo.shape[0], len(cols)))
        for ci, c in enumerate(cols):
            for row, coef in zip(c.exponents, c.coeffs):
                mat[lookup[tuple(row)], ci] = coef
        self.exponents = expo
        self.matrix = mat
        self.maxdeg = int(expo.max()) if expo.size else 0

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        npts, n = pts.shape
        powers = np.ones((n, npts, self.maxdeg + 1))
        for i in range(n):
            for a in range(1, self.maxdeg + 1):
                powers[i, :, a] = powers[i, :, a - 1] * pts[:, i]
        mono = np.ones((npts, self.exponents.shape[0]))
        for i in range(n):
            mono *= powers[i][:, self.exponents[:, i]]
        allvals = mono @ self.matrix
        val = allvals[:, 0]
        grad = allvals[:, 1:1 + n]
        hess = np.empty((npts, n, n))
        for k, (i, j) in enumerate(self._hess_slots):
            hess[:, i, j] = allvals[:, 1 + n + k]
            hess[:, j, i] = allvals[:, 1 + n + k]
        return val, grad, hess


@lru_cache(maxsize=None)
def homogeneous_exponents(n_vars: int, degree: int) -> np.ndarray:
    """All exponent vectors of total degree ``degree`` in ``n_vars`` variables,
    in lexicographic order.  Shape (C(degree + n_vars - 1, n_vars - 1), n_vars)."""
    if n_vars == 1:
        return np.array([[degree]], dtype=np.int64)
    rows = []
    for a in range(degree, -1, -1):
        rest = homogeneous_exponents(n_vars - 1, degree - a)
        block = np.empty((rest.shape[0], n_vars), dtype=np.int64)
        block[:, 0] = a
        block[:, 1:] = rest
        rows.append(block)
    out = np.vstack(rows)
    out.setflags(write=False)
    return out
