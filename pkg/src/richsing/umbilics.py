"""Eigenvalue-multiplicity strata and umbilic points of implicit surfaces.

The supported singularity is the classical umbilic: points of a surface
(zero set of a scalar on S^3, or an implicit surface in R^3) where the two
principal curvatures coincide, i.e. the shape-operator discriminant
(h11 - h22)^2 + 4 h12^2 vanishes.  Detection runs in two interchangeable
ways: in a stereographic chart with the flat metric (legitimate because the
umbilic set only depends on the conformal class of the metric), or directly
on the sphere with the covariant Hessian.  Agreement of the two counts is a
hard cross-check, not a statistic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ensembles
from .charts import ChartPoint, exp_map, stereo_jet, stereo_map
from .errors import DegenerateStratumError, InvalidPatternError
from .polynomials import DensePolynomial, PolyJetEvaluator

DEFAULT_GAP_TOL = 1e-6
MERGE_DISTANCE = 1e-5          # refined points closer than this are one umbilic
DEGENERATE_DELTA = 1e-8        # normalized discriminant below this is "in stratum"
DEGENERATE_FRACTION = 0.10     # surface fraction above which transversality fails
VALUE_TOL = 1e-11              # |p| / scale at accepted umbilics
TRACE_TOL = 1e-8               # traceless part / curvature scale at accepted umbilics


# ---------------------------------------------------------------------------
# multiplicity patterns


@dataclass(frozen=True)
class MultiplicityPattern:
    """Vector w = (w_1, ..., w_m): w_i eigenvalues of multiplicity i of an
    m x m symmetric matrix, with sum(i * w_i) = m."""

    w: tuple[int, ...]
    gap_tol: float | None = field(default=None, compare=False)

    def __post_init__(self):
        w = tuple(int(x) for x in self.w)
        object.__setattr__(self, "w", w)
        if len(w) == 0 or any(x < 0 for x in w):
            raise InvalidPatternError("pattern entries must be nonnegative")
        if self.mu != self.m:
            raise InvalidPatternError(
                f"sum(i * w_i) = {self.mu} must equal the matrix size {self.m}")

    @property
    def m(self) -> int:
        return len(self.w)

    @property
    def mu(self) -> int:
        return sum((i + 1) * wi for i, wi in enumerate(self.w))


def codim(pattern: MultiplicityPattern) -> int:
    """Codimension of the stratum of symmetric matrices with eigenvalue
    multiplicities w: sum_i (i-1)(i+2)/2 * w_i."""
    return sum((i * (i + 3)) // 2 * wi for i, wi in enumerate(pattern.w))


def classify_spectrum(matrix, gap_tol: float = DEFAULT_GAP_TOL) -> MultiplicityPattern:
    """Cluster the eigenvalues of a symmetric matrix into multiplicity groups.

    Consecutive eigenvalue gaps below gap_tol times the spectral range merge;
    the tolerance used is recorded on the returned pattern (stratum
    membership is tolerance-defined in floating point).
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("need a square matrix")
    if np.abs(m - m.T).max() > 1e-10 * max(1.0, np.abs(m).max()):
        raise ValueError("matrix is not symmetric")
    lam = np.linalg.eigvalsh(0.5 * (m + m.T))
    size = m.shape[0]
    spread = float(lam[-1] - lam[0])
    scale = max(spread, 1e-300)
    sizes = []
    run = 1
    for i in range(1, size):
        if lam[i] - lam[i - 1] <= gap_tol * scale or spread == 0.0:
            run += 1
        else:
            sizes.append(run)
            run = 1
    sizes.append(run)
    w = [0] * size
    for s in sizes:
        w[s - 1] += 1
    return MultiplicityPattern(tuple(w), gap_tol=gap_tol)


# ---------------------------------------------------------------------------
# marching tetrahedra over a box grid

# corner bit layout: c = 4*dx + 2*dy + dz; the six tetrahedra of the Kuhn
# subdivision share the main diagonal 0-7, so faces match across cubes
_TETS = np.array([
    [0, 4, 6, 7], [0, 4, 5, 7], [0, 2, 6, 7],
    [0, 2, 3, 7], [0, 1, 5, 7], [0, 1, 3, 7],
], dtype=np.int64)

_TET_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]], dtype=np.int64)

# case -> triangles as triples of tet-edge slots (bit set = positive corner)
_TET_TRIS = {
    1: [(0, 1, 2)], 2: [(0, 3, 4)], 4: [(1, 3, 5)], 8: [(2, 4, 5)],
    3: [(1, 3, 4), (1, 4, 2)],
    5: [(0, 3, 5), (0, 5, 2)],
    9: [(0, 4, 5), (0, 5, 1)],
    6: [(0, 1, 5), (0, 5, 4)],
    10: [(0, 2, 5), (0, 5, 3)],
    12: [(1, 2, 4), (1, 4, 3)],
    7: [(2, 4, 5)], 11: [(1, 3, 5)], 13: [(0, 3, 4)], 14: [(0, 1, 2)],
}


def marching_tetrahedra(axes, values):
    """Extract the zero surface of grid ``values`` on the box grid given by
    ``axes = (xs, ys, zs)``.

    Returns (vertices, triangles): crossing points on grid-tetrahedron edges
    (linear interpolation) and their triangle connectivity.
    """
    xs, ys, zs = (np.asarray(a, dtype=np.float64) for a in axes)
    vals = np.asarray(values, dtype=np.float64)
    nx, ny, nz = vals.shape
    if (nx, ny, nz) != (xs.size, ys.size, zs.size):
        raise ValueError("values shape must match the axes")
    flat = vals.ravel()
    sign = flat > 0

    ii, jj, kk = np.meshgrid(
        np.arange(nx - 1), np.arange(ny - 1), np.arange(nz - 1), indexing="ij")
    base = ((ii * ny + jj) * nz + kk).ravel()
    corner_offsets = np.array([(dx * ny + dy) * nz + dz
                               for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)])
    corners = base[:, None] + corner_offsets[None, :]          # (C, 8)

    csign = sign[corners]
    mixed = ~(np.all(csign, axis=1) | np.all(~csign, axis=1))
    corners = corners[mixed]
    if corners.size == 0:
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)

    tets = corners[:, _TETS.reshape(-1)].reshape(-1, 4)        # (T, 4)
    tsign = sign[tets]
    case = (tsign * np.array([1, 2, 4, 8])).sum(axis=1)

    tri_edge_slots = []
    tri_tets = []
    for c, tris in _TET_TRIS.items():
        rows = np.flatnonzero(case == c)
        if rows.size == 0:
            continue
        for tri in tris:
            tri_edge_slots.append(np.broadcast_to(np.array(tri), (rows.size, 3)))
            tri_tets.append(rows)
    if not tri_tets:
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)
    tri_edge_slots = np.concatenate(tri_edge_slots)            # (T3, 3)
    tri_tets = np.concatenate(tri_tets)

    slot_pairs = _TET_EDGES[tri_edge_slots]                    # (T3, 3, 2)
    ga = tets[tri_tets[:, None], slot_pairs[:, :, 0]]
    gb = tets[tri_tets[:, None], slot_pairs[:, :, 1]]
    lo = np.minimum(ga, gb)
    hi = np.maximum(ga, gb)
    keys = lo.astype(np.int64) * flat.size + hi
    uniq, inverse = np.unique(keys, return_inverse=True)
    tris = inverse.reshape(-1, 3)

    ua = (uniq // flat.size).astype(np.int64)
    ub = (uniq % flat.size).astype(np.int64)
    va, vb = flat[ua], flat[ub]
    t = va / (va - vb)
    grid_pts = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    verts = (1.0 - t)[:, None] * grid_pts[ua] + t[:, None] * grid_pts[ub]
    return verts, tris


def _surface_adjacency(n_verts: int, tris: np.ndarray):
    src = np.concatenate([tris[:, 0], tris[:, 1], tris[:, 2],
                          tris[:, 1], tris[:, 2], tris[:, 0]])
    dst = np.concatenate([tris[:, 1], tris[:, 2], tris[:, 0],
                          tris[:, 0], tris[:, 1], tris[:, 2]])
    order = np.argsort(src, kind="stable")
    src, dst = src[order], dst[order]
    indptr = np.zeros(n_verts + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst


def _local_minima(indptr, nbr, score) -> np.ndarray:
    out = []
    for i in range(score.shape[0]):
        js = nbr[indptr[i]:indptr[i + 1]]
        if js.size and score[i] <= score[js].min():
            out.append(i)
    return np.asarray(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# shape-operator fields


def _frames_perp(normals: np.ndarray, tangent_to: np.ndarray | None = None):
    """Per-point orthonormal pairs spanning the complement of the unit
    ``normals`` (and of ``tangent_to`` rows when given, for the S^3 case)."""
    npts, dim = normals.shape
    b1 = np.zeros((npts, dim))
    b2 = np.zeros((npts, dim))
    penalty = np.abs(normals)
    if tangent_to is not None:
        penalty = penalty + np.abs(tangent_to)
    order = np.argsort(penalty, axis=1)

    def fill(target, col_order, avoid_list):
        for rank in col_order:
            todo = np.linalg.norm(target, axis=1) < 0.5
            if not todo.any():
                break
            axes = order[todo, rank]
            cand = np.zeros((int(todo.sum()), dim))
            cand[np.arange(axes.size), axes] = 1.0
            for av in avoid_list:
                avs = av[todo]
                cand -= np.einsum("ni,ni->n", cand, avs)[:, None] * avs
            norms = np.linalg.norm(cand, axis=1)
            good = norms > 1e-6
            rows = np.flatnonzero(todo)[good]
            target[rows] = cand[good] / norms[good, None]

    avoid = [normals] + ([tangent_to] if tangent_to is not None else [])
    fill(b1, range(dim), avoid)
    fill(b2, range(dim), avoid + [b1])
    return b1, b2


def _euclidean_h(jets, b1=None, b2=None):
    """(h11, h12, h22, grad_norm, b1, b2) of an implicit surface in R^3 from
    ambient jets (val, grad, hess); sign relative to the normal grad/|grad|."""
    _, grad, hess = jets
    gn = np.linalg.norm(grad, axis=1)
    gn_safe = np.where(gn == 0.0, 1.0, gn)
    nu = grad / gn_safe[:, None]
    if b1 is None:
        b1, b2 = _frames_perp(nu)
    h11 = -np.einsum("ni,nij,nj->n", b1, hess, b1) / gn_safe
    h22 = -np.einsum("ni,nij,nj->n", b2, hess, b2) / gn_safe
    h12 = -np.einsum("ni,nij,nj->n", b1, hess, b2) / gn_safe
    return h11, h12, h22, gn, b1, b2


def _spherical_h(x, jets, b1=None, b2=None):
    """Shape components of the zero set of a scalar on S^3 with the round
    metric: the covariant Hessian is v^T H v - <grad, x> |v|^2."""
    _, grad, hess = jets
    radial = np.einsum("ni,ni->n", grad, x)
    u = grad - radial[:, None] * x
    un = np.linalg.norm(u, axis=1)
    un_safe = np.where(un == 0.0, 1.0, un)
    nu = u / un_safe[:, None]
    if b1 is None:
        b1, b2 = _frames_perp(nu, tangent_to=x)
    q11 = np.einsum("ni,nij,nj->n", b1, hess, b1) - radial
    q22 = np.einsum("ni,nij,nj->n", b2, hess, b2) - radial
    q12 = np.einsum("ni,nij,nj->n", b1, hess, b2)
    return -q11 / un_safe, -q12 / un_safe, -q22 / un_safe, un, b1, b2


def _delta_stats(h11, h12, h22):
    """Discriminant, normalized discriminant, and the median curvature scale
    used as an absolute floor (so totally geodesic surfaces read as inside
    the stratum rather than as 0/0 noise)."""
    delta = (h11 - h22) ** 2 + 4.0 * h12 ** 2
    sq = h11 ** 2 + h22 ** 2 + 2.0 * h12 ** 2
    med = float(np.sqrt(np.median(sq))) if sq.size else 0.0
    floor = (1e-8 * (1.0 + med)) ** 2
    return delta, delta / (sq + floor), med


# ---------------------------------------------------------------------------
# reports


@dataclass
class UmbilicReport:
    """Isolated umbilics found on one surface."""

    degree: int
    chart: str
    points: np.ndarray             # ambient S^3 points, or chart coordinates
                                   # for the plain euclidean pipeline
    residual_value: np.ndarray     # |p| / value scale at the refined points
    residual_traceless: np.ndarray  # traceless norm / curvature scale
    gap_tol: float
    degenerate_fraction: float
    surface_samples: int
    failed_seeds: int
    antipodal_pairs: int | None = None

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "chart": self.chart,
            "count": self.count,
            "points": self.points.tolist(),
            "residual_value": self.residual_value.tolist(),
            "residual_traceless": self.residual_traceless.tolist(),
            "gap_tol": self.gap_tol,
            "degenerate_fraction": self.degenerate_fraction,
            "surface_samples": self.surface_samples,
            "failed_seeds": self.failed_seeds,
            "antipodal_pairs": self.antipodal_pairs,
        }


@dataclass(frozen=True)
class BoundCheck:
    """Count against the C * d^3 envelope (C is fitted, not asserted)."""

    count: int
    bound: float
    constant: float
    passed: bool
    skipped: bool = False


def umbilic_count_bound_check(report: UmbilicReport, d: int,
                              envelope_constant: float = 1.0) -> BoundCheck:
    """Flag reports whose count exceeds envelope_constant * d^3; degenerate
    reports are skipped."""
    if report.degenerate_fraction >= DEGENERATE_FRACTION:
        return BoundCheck(report.count, math.nan, envelope_constant, True, skipped=True)
    bound = envelope_constant * d ** 3
    return BoundCheck(report.count, bound, envelope_constant, report.count <= bound)


# ---------------------------------------------------------------------------
# Newton refinement on the system (surface = 0, h11 - h22 = 0, h12 = 0)


def _newton_traceless(f_system, y0, *, max_iterations=50, fd_step=1e-6,
                      step_limit=1.0):
    """Damped Newton with a finite-difference Jacobian.

    ``f_system(y, frame)`` must be pure and return (fvec, res_value,
    res_trace, new_frame); the frame (tangent direction continuation) is
    frozen while the Jacobian is formed and advanced only on accepted steps.
    Returns (y, res_value, res_trace) or None.
    """
    y = np.asarray(y0, dtype=np.float64).copy()
    fy, rv, rt, frame = f_system(y, None)
    for _ in range(max_iterations):
        if rv <= VALUE_TOL and rt <= TRACE_TOL:
            return y, rv, rt
        if not np.all(np.isfinite(fy)):
            return None
        jac = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = fd_step
            fp = f_system(y + e, frame)[0]
            fm = f_system(y - e, frame)[0]
            jac[:, j] = (fp - fm) / (2.0 * fd_step)
        try:
            step = np.linalg.solve(jac, -fy)
        except np.linalg.LinAlgError:
            return None
        slen = np.linalg.norm(step)
        if slen > step_limit:
            step *= step_limit / slen
        norm0 = np.linalg.norm(fy)
        lam, accepted = 1.0, False
        for _ in range(10):
            yn = y + lam * step
            fn, rvn, rtn, fr = f_system(yn, frame)
            if np.all(np.isfinite(fn)) and np.linalg.norm(fn) < norm0:
                y, fy, rv, rt, frame = yn, fn, rvn, rtn, fr
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return None
    if rv <= VALUE_TOL and rt <= TRACE_TOL:
        return y, rv, rt
    return None


_BAD = (np.array([np.inf, np.inf, np.inf]), np.inf, np.inf, None)


def _pack(val, h11, h12, h22, value_scale, med):
    hscale = math.sqrt(h11 ** 2 + h22 ** 2 + 2 * h12 ** 2) + 1e-8 * (1.0 + med)
    fvec = np.array([val / max(value_scale, 1e-300),
                     (h11 - h22) / hscale, 2.0 * h12 / hscale])
    rv = abs(val) / max(value_scale, 1e-300)
    rt = math.sqrt((h11 - h22) ** 2 + 4.0 * h12 ** 2) / hscale
    return fvec, rv, rt


def _continued_b1(prev, nu, extra=None):
    """Project the previous tangent direction onto the current complement;
    fall back to the deterministic axis frame when it degenerates."""
    if prev is not None:
        b1 = prev - np.dot(prev, nu) * nu
        if extra is not None:
            b1 = b1 - np.dot(b1, extra) * extra
        nb = np.linalg.norm(b1)
        if nb > 1e-8:
            return b1 / nb
    tang = None if extra is None else extra[None, :]
    return _frames_perp(nu[None, :], tangent_to=tang)[0][0]


def _make_euclidean_system(jets_at, value_scale, med, grad_floor):
    """System in chart coordinates y of R^3 with the flat metric."""

    def f_system(y, frame):
        val, grad, hess = jets_at(y[None, :])
        gn = np.linalg.norm(grad[0])
        if gn <= grad_floor:
            return _BAD
        nu = grad[0] / gn
        b1 = _continued_b1(frame, nu)
        b2 = np.cross(nu, b1)
        h11 = -b1 @ hess[0] @ b1 / gn
        h22 = -b2 @ hess[0] @ b2 / gn
        h12 = -b1 @ hess[0] @ b2 / gn
        fvec, rv, rt = _pack(float(val[0]), h11, h12, h22, value_scale, med)
        return fvec, rv, rt, b1

    return f_system


def _make_sphere_system(jet, x_ref, value_scale, med, grad_floor):
    """System in exponential-chart coordinates at the seed, with the round
    metric of S^3 (covariant Hessian)."""
    chart = ChartPoint.at(x_ref)

    def f_system(v, frame):
        if np.linalg.norm(v) >= math.pi:
            return _BAD
        x = exp_map(chart, v)
        val, grad, hess = jet(x[None, :])
        radial = float(grad[0] @ x)
        u = grad[0] - radial * x
        un = np.linalg.norm(u)
        if un <= grad_floor:
            return _BAD
        nu = u / un
        b1 = _continued_b1(frame, nu, extra=x)
        b2 = _complete_sphere_frame(x, nu, b1)
        h11 = -(b1 @ hess[0] @ b1 - radial) / un
        h22 = -(b2 @ hess[0] @ b2 - radial) / un
        h12 = -(b1 @ hess[0] @ b2) / un
        fvec, rv, rt = _pack(float(val[0]), h11, h12, h22, value_scale, med)
        return fvec, rv, rt, b1

    return f_system, chart


def _complete_sphere_frame(x, nu, b1):
    # 4D orthogonal complement of (x, nu, b1) via the generalized cross product
    mat = np.vstack([x, nu, b1])
    b2 = np.array([
        np.linalg.det(mat[:, [1, 2, 3]]),
        -np.linalg.det(mat[:, [0, 2, 3]]),
        np.linalg.det(mat[:, [0, 1, 3]]),
        -np.linalg.det(mat[:, [0, 1, 2]]),
    ])
    return b2 / np.linalg.norm(b2)


def _merge_points(points, residuals_v, residuals_t, distance, dim=3):
    kept, rv, rt = [], [], []
    for p, a, b in sorted(zip(points, residuals_v, residuals_t),
                          key=lambda row: (row[1], row[2])):
        if any(np.linalg.norm(p - q) < distance for q in kept):
            continue
        kept.append(p)
        rv.append(a)
        rt.append(b)
    if not kept:
        return np.zeros((0, dim)), np.zeros(0), np.zeros(0)
    return np.asarray(kept), np.asarray(rv), np.asarray(rt)


# ---------------------------------------------------------------------------
# euclidean pipeline (also the ellipsoid oracle entry point)


def find_umbilics_euclidean(
    surface: DensePolynomial,
    *,
    box,
    cell: float,
    gap_tol: float = DEFAULT_GAP_TOL,
    seed_cap: int = 400,
    _collect: dict | None = None,
) -> UmbilicReport:
    """Umbilics of the implicit surface {surface = 0} inside a box of R^3
    with the Euclidean metric.

    ``box`` is a scalar half-width or ((x0,x1),(y0,y1),(z0,z1)).  Raises
    DegenerateStratumError when the surface is umbilical on more than 10%
    of its samples (e.g. spheres), where isolated-point counting is
    meaningless.
    """
    jet = PolyJetEvaluator(surface)
    axes = _box_axes(box, cell)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    gvals = jet(grid)[0].reshape(len(axes[0]), len(axes[1]), len(axes[2]))
    value_scale = float(np.abs(gvals).max())
    verts, tris = marching_tetrahedra(axes, gvals)
    if verts.shape[0] == 0:
        raise DegenerateStratumError("no surface found inside the box")
    h11, h12, h22, gn, _, _ = _euclidean_h(jet(verts))
    delta, delta_hat, med = _delta_stats(h11, h12, h22)
    degenerate_fraction = float(np.mean(delta_hat < DEGENERATE_DELTA))
    if degenerate_fraction > DEGENERATE_FRACTION:
        raise DegenerateStratumError(
            f"{degenerate_fraction:.1%} of surface samples sit in the "
            "umbilical stratum; the jet is not transversal to it")
    indptr, nbr = _surface_adjacency(verts.shape[0], tris)
    seeds = _local_minima(indptr, nbr, delta_hat)
    if seeds.size > seed_cap:
        seeds = seeds[np.argsort(delta_hat[seeds], kind="stable")[:seed_cap]]
    grad_floor = float(np.median(gn)) * 1e-8
    f_system = _make_euclidean_system(jet, value_scale, med, grad_floor)

    found, rvs, rts, failed = [], [], [], 0
    for s in seeds:
        res = _newton_traceless(f_system, verts[s], step_limit=8.0 * cell)
        if res is None:
            failed += 1
            continue
        found.append(res[0])
        rvs.append(res[1])
        rts.append(res[2])
    pts, rv, rt = _merge_points(found, rvs, rts, MERGE_DISTANCE)
    if _collect is not None:
        _collect.update(verts=verts, tris=tris, delta_hat=delta_hat)
    return UmbilicReport(
        degree=surface.degree, chart="euclidean", points=pts,
        residual_value=rv, residual_traceless=rt, gap_tol=gap_tol,
        degenerate_fraction=degenerate_fraction,
        surface_samples=verts.shape[0], failed_seeds=failed)


def _box_axes(box, cell):
    if np.isscalar(box):
        box = ((-box, box),) * 3
    axes = []
    for lo, hi in box:
        n = max(2, int(math.ceil((hi - lo) / cell)) + 1)
        axes.append(np.linspace(lo, hi, n))
    return axes


# ---------------------------------------------------------------------------
# spherical pipeline (stereographic chart atlas on S^3)


_CHART_ALIASES = {
    "stereo": "stereo",
    "sphere": "sphere",
    "ambient-sphere": "sphere",
    # the exponential chart is not conformal, so it can only parametrize the
    # spherical-metric computation; treat it as that path
    "exp": "sphere",
}


def find_umbilics(
    p,
    w: MultiplicityPattern | None = None,
    chart: str = "stereo",
    *,
    cells_per_wavelength: int = 10,
    box_radius: float = 2.4,
    gap_tol: float = DEFAULT_GAP_TOL,
    seed_cap: int = 400,
    _collect: dict | None = None,
) -> UmbilicReport:
    """Locate the isolated umbilics of the zero surface of a scalar sample
    on S^3.

    The surface is extracted by marching tetrahedra in two opposite
    stereographic chart boxes (an atlas covering the sphere with overlap:
    |y| <= 2 maps onto a closed hemisphere).  chart='stereo' computes
    curvature in the flat chart metric, valid because w-umbilics depend only
    on the conformal class; chart='sphere' (alias 'ambient-sphere') uses the
    covariant Hessian of the round metric at ambient points.  Counts from
    the two paths agree on non-degenerate samples.
    """
    if w is None:
        w = MultiplicityPattern((0, 1))
    if w.w != (0, 1):
        raise InvalidPatternError(
            "only the surface pattern w = (0, 1) (one double eigenvalue of a "
            "2x2 form, codimension 2 <= n-1 = 2) is supported on S^3")
    mode = _CHART_ALIASES.get(chart)
    if mode is None:
        raise ValueError(f"chart must be one of {sorted(_CHART_ALIASES)}")
    if isinstance(p, ensembles.PolynomialSample):
        if p.spec.n != 3 or p.spec.k != 1:
            raise ValueError("umbilic detection needs a scalar sample on S^3")
        poly = ensembles.to_polynomials(p)[0]
    else:
        poly = p
        if poly.n_vars != 4:
            raise ValueError("need a polynomial on R^4")
    d = ensembles.degree_of(p)
    jet = PolyJetEvaluator(poly)
    cell = 2.0 * math.pi / (d * cells_per_wavelength)

    bases = [ChartPoint.at([1.0, 0.0, 0.0, 0.0]),
             ChartPoint.at([-1.0, 0.0, 0.0, 0.0])]
    all_pts, all_rv, all_rt = [], [], []
    failed = 0
    fractions, n_samples = [], 0
    for c in bases:
        res = _chart_umbilics(jet, c, mode, cell, box_radius, seed_cap, _collect)
        all_pts.extend(res["points"])
        all_rv.extend(res["rv"])
        all_rt.extend(res["rt"])
        failed += res["failed"]
        fractions.append(res["degenerate_fraction"])
        n_samples += res["surface_samples"]
    degenerate_fraction = max(fractions)
    if degenerate_fraction > DEGENERATE_FRACTION:
        raise DegenerateStratumError(
            f"{degenerate_fraction:.1%} of surface samples sit in the "
            "umbilical stratum; the jet is not transversal to it")
    pts, rv, rt = _merge_points(all_pts, all_rv, all_rt, MERGE_DISTANCE, dim=4)
    pairs = 0
    for i in range(pts.shape[0]):
        for j in range(i + 1, pts.shape[0]):
            if np.linalg.norm(pts[i] + pts[j]) < MERGE_DISTANCE:
                pairs += 1
    return UmbilicReport(
        degree=d, chart=chart, points=pts, residual_value=rv,
        residual_traceless=rt, gap_tol=gap_tol,
        degenerate_fraction=degenerate_fraction,
        surface_samples=n_samples, failed_seeds=failed,
        antipodal_pairs=pairs)


_COVERAGE_DELTA = 0.25   # candidate threshold for re-seeding rounds
_COVERAGE_ROUNDS = 3


def _chart_umbilics(jet, c, mode, cell, box_radius, seed_cap, _collect=None):
    axes = _box_axes(box_radius, cell)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    gvals = jet(stereo_map(c, grid))[0].reshape(
        len(axes[0]), len(axes[1]), len(axes[2]))
    value_scale = float(np.abs(gvals).max())
    verts, tris = marching_tetrahedra(axes, gvals)
    out = {"points": [], "rv": [], "rt": [], "failed": 0,
           "degenerate_fraction": 0.0, "surface_samples": verts.shape[0]}
    if verts.shape[0] == 0:
        return out
    surf_amb = stereo_map(c, verts)
    # both metrics' discriminant fields share their zero set (conformal
    # invariance); seeding from the union of their discrete minima makes the
    # two counting paths equally well initialized, while refinement and
    # residual checks stay metric-specific
    ejets = _chart_jets(jet, c, verts)
    eh11, eh12, eh22, egn, _, _ = _euclidean_h(ejets)
    _, e_hat, e_med = _delta_stats(eh11, eh12, eh22)
    sjets = jet(surf_amb)
    sh11, sh12, sh22, sgn, _, _ = _spherical_h(surf_amb, sjets)
    _, s_hat, s_med = _delta_stats(sh11, sh12, sh22)
    if mode == "stereo":
        delta_hat, med, gn = e_hat, e_med, egn
    else:
        delta_hat, med, gn = s_hat, s_med, sgn
    out["degenerate_fraction"] = float(np.mean(delta_hat < DEGENERATE_DELTA))
    if _collect is not None:
        key = "plus" if c.z[0] > 0 else "minus"
        _collect[key] = {"verts": verts, "tris": tris, "delta_hat": delta_hat,
                         "chart": c}
    if out["degenerate_fraction"] > DEGENERATE_FRACTION:
        return out
    indptr, nbr = _surface_adjacency(verts.shape[0], tris)
    seeds = np.union1d(_local_minima(indptr, nbr, e_hat),
                       _local_minima(indptr, nbr, s_hat))
    if seeds.size > seed_cap:
        seeds = seeds[np.argsort(delta_hat[seeds], kind="stable")[:seed_cap]]
    grad_floor = float(np.median(gn)) * 1e-8

    if mode == "stereo":
        f_system = _make_euclidean_system(
            lambda ys: _chart_jets(jet, c, ys), value_scale, med, grad_floor)

        def refine(start):
            res = _newton_traceless(f_system, verts[start], step_limit=8.0 * cell)
            if res is None:
                return None
            return res[0], stereo_map(c, res[0]), res[1], res[2]
    else:
        def refine(start):
            f_system, chart = _make_sphere_system(
                jet, surf_amb[start], value_scale, med, grad_floor)
            res = _newton_traceless(f_system, np.zeros(3), step_limit=8.0 * cell)
            if res is None:
                return None
            amb = exp_map(chart, res[0])
            return verts[start], amb, res[1], res[2]

    found_chart = []

    def run_seeds(idx_list):
        for s in idx_list:
            res = refine(s)
            if res is None:
                out["failed"] += 1
                continue
            found_chart.append(res[0])
            out["points"].append(res[1])
            out["rv"].append(res[2])
            out["rt"].append(res[3])

    run_seeds(seeds)
    # coverage re-seeding: low-discriminant pockets with no nearby refined
    # point get their own seeds (discrete minima can merge adjacent basins)
    score = np.minimum(e_hat, s_hat)
    for _ in range(_COVERAGE_ROUNDS):
        cand = np.flatnonzero(score < _COVERAGE_DELTA)
        if cand.size == 0:
            break
        if found_chart:
            fc = np.asarray(found_chart)
            dmin = np.min(np.linalg.norm(
                verts[cand][:, None, :] - fc[None, :, :], axis=2), axis=1)
            cand = cand[dmin > 1.5 * cell]
        if cand.size == 0:
            break
        cand = cand[np.argsort(score[cand], kind="stable")]
        picked, taken = [], []
        for v in cand:
            if len(picked) >= 100:
                break
            if all(np.linalg.norm(verts[v] - verts[t]) > cell for t in taken):
                picked.append(v)
                taken.append(v)
        before = len(found_chart)
        run_seeds(picked)
        if len(found_chart) == before:
            break
    return out


def _chart_jets(jet, c, ys):
    """Jets of g = p o stereo at chart points, by the chain rule."""
    phi, jac, hphi = stereo_jet(c, ys)
    val, grad, hess = jet(phi)
    g_grad = np.einsum("naj,na->nj", jac, grad)
    g_hess = (np.einsum("nai,nab,nbj->nij", jac, hess, jac)
              + np.einsum("na,naij->nij", grad, hphi))
    return val, g_grad, g_hess
