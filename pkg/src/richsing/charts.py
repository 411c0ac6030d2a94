"""Charts and covariant calculus on S^n.

Provides the Riemannian exponential chart, the half-scaled stereographic
chart (a conformal map of R^n onto the sphere minus the base point, fixing
-z and isometric at the origin), the comparison map between the two, the
local rescaled fields built from a polynomial sample, and the covariant
gradient / Hessian / second fundamental form of level sets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ensembles
from .errors import NonRegularPointError, SphereDomainError
from .harmonics import as_unit_points


@dataclass(frozen=True)
class ChartPoint:
    """Base point z on S^n with an orthonormal frame of T_z S^n.

    ``frame`` has shape (n+1, n); columns are the frame vectors.  The frame
    fixes the identification T_z S^n = R^n used by every chart; it is built
    deterministically so runs are reproducible.
    """

    z: np.ndarray
    frame: np.ndarray

    @property
    def n(self) -> int:
        return self.z.shape[0] - 1

    @classmethod
    def at(cls, z) -> "ChartPoint":
        """Deterministic frame: Gram-Schmidt of the coordinate axes sorted by
        increasing |z_i| (the axes least aligned with z), against z."""
        z = np.asarray(z, dtype=np.float64)
        z = as_unit_points(z, z.shape[0] - 1)[0]
        dim = z.shape[0]
        order = np.argsort(np.abs(z), kind="stable")
        cols = []
        for axis in order:
            v = np.zeros(dim)
            v[axis] = 1.0
            v = v - np.dot(v, z) * z
            for c in cols:
                v = v - np.dot(v, c) * c
            norm = np.linalg.norm(v)
            if norm > 1e-8:
                cols.append(v / norm)
            if len(cols) == dim - 1:
                break
        frame = np.column_stack(cols)
        frame.setflags(write=False)
        zc = z.copy()
        zc.setflags(write=False)
        return cls(zc, frame)

    def antipode(self) -> "ChartPoint":
        """Chart at -z sharing the same frame vectors (they stay tangent)."""
        return ChartPoint(-self.z, self.frame)


def exp_map(c: ChartPoint, v) -> np.ndarray:
    """Riemannian exponential: frame coordinates v (|v| < pi) to the sphere."""
    v = np.asarray(v, dtype=np.float64)
    single = v.ndim == 1
    vv = np.atleast_2d(v)
    if vv.shape[1] != c.n:
        raise SphereDomainError(f"tangent vectors must have {c.n} components")
    r = np.linalg.norm(vv, axis=1)
    if np.any(r >= math.pi):
        raise SphereDomainError("tangent vector outside the injectivity radius pi")
    amb = vv @ c.frame.T
    out = np.empty((vv.shape[0], c.n + 1))
    small = r < 1e-300
    safe = np.where(small, 1.0, r)
    out[:] = np.cos(r)[:, None] * c.z[None, :] + (np.sin(r) / safe)[:, None] * amb
    out[small] = c.z
    return out[0] if single else out


def log_map(c: ChartPoint, y) -> np.ndarray:
    """Inverse of exp_map, in frame coordinates; errors at the cut locus."""
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    pts = as_unit_points(y, c.n)
    ct = pts @ c.z
    tang = pts - ct[:, None] * c.z[None, :]
    s = np.linalg.norm(tang, axis=1)
    ang = np.arctan2(s, ct)
    if np.any(ang > math.pi - 1e-9):
        raise SphereDomainError("point at or beyond the cut locus of the chart")
    safe = np.where(s < 1e-300, 1.0, s)
    v = (ang / safe)[:, None] * (tang @ c.frame)
    v[s < 1e-300] = 0.0
    return v[0] if single else v


def stereo_map(c: ChartPoint, y) -> np.ndarray:
    """Half-scaled inverse stereographic chart R^n -> S^n \\ {z}.

    Sends 0 to -z, is an isometry at 0 and conformal everywhere with
    pullback metric (1 + |y|^2/4)^(-2) times Euclidean.
    """
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    yy = np.atleast_2d(y)
    if yy.shape[1] != c.n:
        raise SphereDomainError(f"chart points must have {c.n} components")
    q = 0.25 * np.einsum("ij,ij->i", yy, yy)
    denom = 1.0 + q
    out = ((q - 1.0)[:, None] * c.z[None, :] + yy @ c.frame.T) / denom[:, None]
    return out[0] if single else out


def stereo_jet(c: ChartPoint, y):
    """Value, Jacobian and per-component Hessian of stereo_map.

    Shapes (N, n+1), (N, n+1, n), (N, n+1, n, n).
    """
    yy = np.atleast_2d(np.asarray(y, dtype=np.float64))
    npts, n = yy.shape
    q = 0.25 * np.einsum("ij,ij->i", yy, yy)
    beta = 1.0 / (1.0 + q)
    fy = yy @ c.frame.T                      # (N, n+1)
    val = beta[:, None] * ((q - 1.0)[:, None] * c.z[None, :] + fy)
    b2 = beta ** 2
    b3 = beta ** 3
    jac = (
        b2[:, None, None] * c.z[None, :, None] * yy[:, None, :]
        + beta[:, None, None] * c.frame[None, :, :]
        - 0.5 * b2[:, None, None] * fy[:, :, None] * yy[:, None, :]
    )
    eye = np.eye(n)
    yyt = yy[:, :, None] * yy[:, None, :]    # (N, n, n)
    hess = (
        (b2[:, None, None, None] * eye[None, None, :, :]
         - b3[:, None, None, None] * yyt[:, None, :, :]) * c.z[None, :, None, None]
        - 0.5 * b2[:, None, None, None] * (
            c.frame[None, :, :, None] * yy[:, None, None, :]
            + c.frame[None, :, None, :] * yy[:, None, :, None])
        + 0.5 * b3[:, None, None, None] * yyt[:, None, :, :] * fy[:, :, None, None]
        - 0.5 * b2[:, None, None, None] * eye[None, None, :, :] * fy[:, :, None, None]
    )
    return val, jac, hess


def tau_map(c: ChartPoint, u) -> np.ndarray:
    """Comparison map between the stereographic and exponential charts.

    tau = exp^{-1} o stereo, with the exponential chart based at the image
    point stereo(0) = -z and carrying the same frame, so that tau(0) = 0 and
    the Jacobian at 0 is the identity.  Errors past the cut locus of -z.
    """
    return log_map(c.antipode(), stereo_map(c, u))


def rescaled_field(p, c: ChartPoint, v, which: str = "exp", d: int | None = None) -> np.ndarray:
    """Local rescaled field at base chart c.

    ``exp``:    d^(-n/2) p(exp_z(v / d)), centered at z.
    ``stereo``: d^(-n/2) p(stereo_z(v / d)), centered at stereo_z(0) = -z; at
    v = 0 the two variants agree up to the antipodal sign (-1)^d of the
    sample.

    ``d`` defaults to the sample degree.
    """
    if which not in ("exp", "stereo"):
        raise ValueError("which must be 'exp' or 'stereo'")
    if d is None:
        d = ensembles.degree_of(p)
    vv = np.atleast_2d(np.asarray(v, dtype=np.float64))
    pts = exp_map(c, vv / d) if which == "exp" else stereo_map(c, vv / d)
    vals = ensembles.evaluate(p, pts)
    scale = d ** (-c.n / 2.0)
    out = scale * vals
    return out if np.asarray(v).ndim > 1 else np.squeeze(out, axis=-1) if out.ndim else out


@dataclass(frozen=True)
class JetSample:
    """Covariant 2-jet of a scalar function at a sphere point.

    ``u`` is the covariant (tangential) gradient in ambient coordinates and
    ``q`` the covariant Hessian expressed in the columns of ``frame``.
    """

    x: np.ndarray
    a: float
    u: np.ndarray
    q: np.ndarray
    frame: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[0] - 1

    @property
    def gradient_norm(self) -> float:
        return float(np.linalg.norm(self.u))


def covariant_jet(p, x) -> JetSample:
    """Covariant gradient and Hessian of a scalar sample at a unit point.

    The Hessian follows from differentiating along great circles:
    q(v, v) = v^T (ambient Hessian) v - <grad p, x> |v|^2, and <grad p, x>
    equals d * p(x) for a degree-d homogeneous p (Euler identity).
    """
    x = np.asarray(x, dtype=np.float64)
    pt = as_unit_points(x, x.shape[0] - 1)[0]
    vals, grads, hesss = ensembles.evaluate_jet(p, pt[None, :])
    val, grad, hess = float(vals[0]), grads[0], hesss[0]
    c = ChartPoint.at(pt)
    u = grad - np.dot(grad, pt) * pt
    radial = np.dot(grad, pt)
    q = c.frame.T @ hess @ c.frame - radial * np.eye(c.n)
    return JetSample(pt, val, u, q, c.frame)


def tangent_basis_perp(jet: JetSample, align_to: np.ndarray | None = None) -> np.ndarray:
    """Orthonormal basis of u-perp inside T_x S^n, shape (n+1, n-1).

    With ``align_to`` (columns of a previous basis), the new basis is the
    Gram-Schmidt projection of those columns, which keeps the frame varying
    continuously along Newton paths.
    """
    x, u = jet.x, jet.u
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise NonRegularPointError("zero covariant gradient")
    nu = u / norm
    dim = x.shape[0]
    cols = []
    candidates = []
    if align_to is not None:
        candidates.extend(align_to.T)
    candidates.extend(jet.frame.T)
    for cand in candidates:
        v = cand - np.dot(cand, x) * x - np.dot(cand, nu) * nu
        for c in cols:
            v = v - np.dot(v, c) * c
        nv = np.linalg.norm(v)
        if nv > 1e-10:
            cols.append(v / nv)
        if len(cols) == dim - 2:
            break
    if len(cols) < dim - 2:
        raise NonRegularPointError("could not build a tangent basis of u-perp")
    return np.column_stack(cols)


def second_fundamental_form(
    jet: JetSample,
    *,
    grad_scale: float = 1.0,
    threshold_rel: float = 1e-8,
    value_tol: float | None = None,
    align_to: np.ndarray | None = None,
):
    """Second fundamental form of the level set through jet.x, w.r.t. the
    unit normal u/|u| (overall sign depends on that choice).

    Returns (h, basis): h is the (n-1) x (n-1) symmetric matrix of
    -q|_{u-perp} / |u| in an orthonormal basis of u-perp, and basis holds
    those ambient vectors as columns.  ``grad_scale`` sets the regularity
    threshold |u| > threshold_rel * grad_scale; ``value_tol`` additionally
    requires |p(x)| below it (zero-set points).
    """
    norm = jet.gradient_norm
    if norm <= threshold_rel * grad_scale:
        raise NonRegularPointError(
            f"gradient norm {norm:.3e} below regularity threshold "
            f"{threshold_rel * grad_scale:.3e}")
    if value_tol is not None and abs(jet.a) > value_tol:
        raise NonRegularPointError(f"|p(x)| = {abs(jet.a):.3e} exceeds {value_tol:.3e}")
    basis = tangent_basis_perp(jet, align_to=align_to)
    amb_q = jet.frame @ jet.q @ jet.frame.T
    h = -(basis.T @ amb_q @ basis) / norm
    h = 0.5 * (h + h.T)
    return h, basis
