"""Topological features of zero sets: circle zeros, nodal domains and ovals
on S^2, critical points, with resolution-refinement safeguards.

Components are counted through nodal domains (union-find over same-sign
vertex pairs); the zero set itself is counted independently on the crossing
graph (one node per sign-change edge, linked inside each triangle), and on a
regular level set of S^2 the two satisfy components = domains - 1, which the
refinement ladder uses as a consistency check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import ensembles
from .charts import ChartPoint, covariant_jet, exp_map
from .errors import (
    BelowResolutionError,
    UnreliableCountError,
    UnresolvedTopologyError,
)
from .meshes import SphereMesh, icosphere, level_for_degree

# value used for sign purposes when a vertex value is exactly 0.0 (a
# probability-zero event made possible by floating point); deterministic
_ZERO_NUDGE_SIGN = True  # exact zeros count as positive


@njit(cache=True)
def _uf_roots(n: int, eu: np.ndarray, ev: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Path-halving union-find over the kept edges; returns root labels."""
    parent = np.arange(n)
    for k in range(eu.shape[0]):
        if not keep[k]:
            continue
        a = eu[k]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ev[k]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            parent[b] = a
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        parent[i] = r
    return parent


def _signs(values: np.ndarray) -> np.ndarray:
    s = values > 0.0
    if _ZERO_NUDGE_SIGN:
        s = s | (values == 0.0)
    return s


def domain_counts(mesh: SphereMesh, signs: np.ndarray) -> tuple[int, int]:
    """(number of nodal domains, number of zero-curve components) from vertex
    signs alone."""
    eu, ev = mesh.edges[:, 0], mesh.edges[:, 1]
    same = signs[eu] == signs[ev]
    roots = _uf_roots(mesh.n_vertices, eu, ev, same)
    domains = np.unique(roots).size
    curve = _curve_components(mesh, ~same)
    return int(domains), int(curve)


def _curve_components(mesh: SphereMesh, crossing: np.ndarray) -> int:
    ce = np.flatnonzero(crossing)
    if ce.size == 0:
        return 0
    node_of_edge = np.full(mesh.n_edges, -1, dtype=np.int64)
    node_of_edge[ce] = np.arange(ce.size)
    fe = mesh.face_edge_ids
    cross_per_face = crossing[fe]
    n_cross = cross_per_face.sum(axis=1)
    active = np.flatnonzero(n_cross == 2)
    pair_rows = fe[active]
    pair_mask = cross_per_face[active]
    flat = pair_rows[pair_mask].reshape(-1, 2)
    pu = node_of_edge[flat[:, 0]]
    pv = node_of_edge[flat[:, 1]]
    keep = np.ones(pu.shape[0], dtype=np.bool_)
    roots = _uf_roots(ce.size, pu, pv, keep)
    return int(np.unique(roots).size)


def _projective_curve_components(mesh: SphereMesh, crossing: np.ndarray) -> int:
    """Curve components after identifying antipodal points (homogeneous
    samples have antipodally symmetric zero sets)."""
    ce = np.flatnonzero(crossing)
    if ce.size == 0:
        return 0
    node_of_edge = np.full(mesh.n_edges, -1, dtype=np.int64)
    node_of_edge[ce] = np.arange(ce.size)
    fe = mesh.face_edge_ids
    cross_per_face = crossing[fe]
    active = np.flatnonzero(cross_per_face.sum(axis=1) == 2)
    flat = fe[active][cross_per_face[active]].reshape(-1, 2)
    pu = list(node_of_edge[flat[:, 0]])
    pv = list(node_of_edge[flat[:, 1]])
    anti_e = mesh.antipodal_edge_index
    for e in ce:
        ae = anti_e[e]
        if node_of_edge[ae] >= 0:
            pu.append(node_of_edge[e])
            pv.append(node_of_edge[ae])
    pu = np.asarray(pu, dtype=np.int64)
    pv = np.asarray(pv, dtype=np.int64)
    roots = _uf_roots(ce.size, pu, pv, np.ones(pu.shape[0], dtype=np.bool_))
    return int(np.unique(roots).size)


def harnack_bound(d: int) -> int:
    """Maximal number of ovals of a plane projective curve of degree d."""
    return (d - 1) * (d - 2) // 2 + 1


@dataclass
class NodalReport:
    """Counts and diagnostics of one nodal-domain analysis."""

    degree: int
    level: int
    domains: int
    b0: int                       # zero-set components = domains - 1
    curve_components: int         # independent count on the crossing graph
    projective_b0: int            # components after antipodal identification
    ambiguous_cells: int          # triangles with an edge whose midpoint sign
                                  # cannot come from one regular crossing
    suspect_cells: int            # triangles with a parabola-dip edge
    n_faces: int
    stable: bool | None = None
    confirmed_level: int | None = None
    b1_per_component: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.b1_per_component:
            # every component of a regular zero curve on S^2 is a circle
            self.b1_per_component = [1] * self.b0

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "level": self.level,
            "domains": self.domains,
            "b0": self.b0,
            "curve_components": self.curve_components,
            "projective_b0": self.projective_b0,
            "ambiguous_cells": self.ambiguous_cells,
            "suspect_cells": self.suspect_cells,
            "n_faces": self.n_faces,
            "stable": self.stable,
            "confirmed_level": self.confirmed_level,
            "b1_per_component": self.b1_per_component,
        }


def _edge_flags(mesh: SphereMesh, values: np.ndarray, signs: np.ndarray):
    """Hard and soft ambiguity flags per edge.

    Hard: endpoints share a sign but the midpoint does not (a hidden double
    crossing).  Soft: all three agree but the parabola through the three
    values dips through zero inside the edge (a crossing the vertices cannot
    see).  Midpoint values are the entries of ``values`` past the vertex
    block, in edge order.
    """
    nv = mesh.n_vertices
    eu, ev = mesh.edges[:, 0], mesh.edges[:, 1]
    vm = values[nv:nv + mesh.n_edges]
    sm = _signs(vm)
    same = signs[eu] == signs[ev]
    hard = same & (sm != signs[eu])
    uniform = same & (sm == signs[eu])
    w = np.where(signs[eu], 1.0, -1.0)
    f0 = w * values[eu]
    f1 = w * values[ev]
    fm = w * vm
    a2 = 2.0 * (f0 + f1 - 2.0 * fm)
    b1 = -3.0 * f0 + 4.0 * fm - f1
    with np.errstate(divide="ignore", invalid="ignore"):
        tstar = -b1 / (2.0 * a2)
        qmin = f0 - b1 * b1 / (4.0 * a2)
    soft = uniform & (a2 > 0.0) & (tstar > 0.0) & (tstar < 1.0) & (qmin < 0.0)
    return hard, soft


def nodal_domains(
    p,
    mesh: SphereMesh,
    *,
    values: np.ndarray | None = None,
    hard_cell_limit: int = 0,
    suspect_fraction_limit: float = 1e-3,
) -> NodalReport:
    """Count nodal domains and zero-set components of a scalar sample on S^2.

    ``values`` may inject precomputed values at the mesh vertices followed by
    the normalized edge midpoints (the next level's vertex array); otherwise
    the sample is evaluated here.  Raises UnreliableCountError (carrying the
    report in ``.report``) when ambiguity flags exceed the limits.
    """
    if values is None:
        pts = np.vstack([mesh.vertices, mesh.midpoints()])
        values = ensembles.evaluate(p, pts)
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != mesh.n_vertices + mesh.n_edges:
        raise ValueError("values must cover mesh vertices plus edge midpoints")
    signs = _signs(values[: mesh.n_vertices])
    domains, curve = domain_counts(mesh, signs)
    eu, ev = mesh.edges[:, 0], mesh.edges[:, 1]
    crossing = signs[eu] != signs[ev]
    proj = _projective_curve_components(mesh, crossing)
    hard, soft = _edge_flags(mesh, values, signs)
    fe = mesh.face_edge_ids
    ambiguous_cells = int(np.count_nonzero(hard[fe].any(axis=1)))
    suspect_cells = int(np.count_nonzero(soft[fe].any(axis=1)))
    degree = ensembles.degree_of(p) if p is not None else -1
    report = NodalReport(
        degree=degree,
        level=mesh.level,
        domains=domains,
        b0=domains - 1,
        curve_components=curve,
        projective_b0=proj,
        ambiguous_cells=ambiguous_cells,
        suspect_cells=suspect_cells,
        n_faces=mesh.n_faces,
    )
    too_ambiguous = ambiguous_cells > hard_cell_limit
    too_suspect = suspect_cells > suspect_fraction_limit * mesh.n_faces
    if too_ambiguous or too_suspect:
        err = UnreliableCountError(
            f"level {mesh.level}: {ambiguous_cells} ambiguous and "
            f"{suspect_cells} suspect cells of {mesh.n_faces}")
        err.report = report
        raise err
    return report


def refine_until_stable(
    p,
    start_level: int | None = None,
    max_level: int | None = None,
    *,
    values_provider=None,
    hard_cell_limit: int = 0,
    suspect_fraction_limit: float = 1e-3,
) -> NodalReport:
    """Walk the refinement ladder until a clean report's counts agree with the
    next level; error if that never happens.

    ``values_provider(level)`` must return sample values at the vertices of
    ``icosphere(level)`` (used by the batched pipelines to share evaluations);
    by default the sample is evaluated directly.
    """
    degree = ensembles.degree_of(p) if p is not None else 1
    if start_level is None:
        start_level = level_for_degree(degree)
    if max_level is None:
        max_level = start_level + 2
    if max_level < start_level:
        raise ValueError("levels must increase")
    if values_provider is None:
        cache: dict[int, np.ndarray] = {}

        def values_provider(level: int) -> np.ndarray:
            if level not in cache:
                cache[level] = ensembles.evaluate(p, icosphere(level).vertices)
            return cache[level]

    last_error = None
    for level in range(start_level, max_level + 1):
        mesh = icosphere(level)
        vals = values_provider(level + 1)
        try:
            report = nodal_domains(
                p, mesh, values=vals,
                hard_cell_limit=hard_cell_limit,
                suspect_fraction_limit=suspect_fraction_limit)
        except UnreliableCountError as err:
            last_error = err
            continue
        next_mesh = icosphere(level + 1)
        next_signs = _signs(np.asarray(vals)[: next_mesh.n_vertices])
        next_domains, next_curve = domain_counts(next_mesh, next_signs)
        if report.domains == next_domains and report.curve_components == next_curve:
            report.stable = True
            report.confirmed_level = level + 1
            return report
        last_error = None
    raise UnresolvedTopologyError(
        f"counts never stabilized up to level {max_level}"
        + (f" ({last_error})" if last_error else ""))


# ---------------------------------------------------------------------------
# zeros on the circle


def circle_zeros(p, *, points_per_degree: int = 64, bisection_steps: int = 50):
    """Count the zeros of a scalar sample on S^1.

    Signs are read on a uniform grid of 64 points per unit of degree, each
    sign-change interval is narrowed by bisection, and the count is the
    number of crossings.  Degenerate (identically tiny) samples and exact
    grid zeros that survive re-evaluation raise BelowResolutionError.
    """
    spec = getattr(p, "spec", None)
    n = spec.n if spec is not None else p.n_vars - 1
    if n != 1:
        raise ValueError("circle_zeros needs a sample on S^1")
    if spec is not None and spec.k != 1:
        raise ValueError("circle_zeros needs a scalar sample")
    d = ensembles.degree_of(p)
    m = max(64, points_per_degree * d)
    theta = 2.0 * math.pi * np.arange(m) / m
    pts = np.column_stack([np.cos(theta), np.sin(theta)])
    vals = ensembles.evaluate(p, pts)
    scale = np.abs(vals).max()
    if scale < 1e-12 * max(1.0, _coefficient_scale(p)):
        raise BelowResolutionError("sample is identically small on the grid")
    exact = np.flatnonzero(vals == 0.0)
    if exact.size:
        shift = math.pi / (m * 1013.0)
        theta2 = theta[exact] + shift
        redo = ensembles.evaluate(
            p, np.column_stack([np.cos(theta2), np.sin(theta2)]))
        if np.any(redo == 0.0):
            raise BelowResolutionError("grid values exactly zero after re-evaluation")
        vals = vals.copy()
        vals[exact] = redo
    s = vals > 0.0
    change = s != np.roll(s, -1)
    intervals = np.flatnonzero(change)
    zeros = []
    for i in intervals:
        lo, hi = theta[i], theta[i] + 2.0 * math.pi / m
        flo = vals[i]
        for _ in range(bisection_steps):
            mid = 0.5 * (lo + hi)
            fm = ensembles.evaluate(p, np.array([[math.cos(mid), math.sin(mid)]]))[0]
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0.0) == (flo > 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
        zeros.append(0.5 * (lo + hi))
    return len(zeros), np.asarray(zeros)


def _coefficient_scale(p) -> float:
    coeffs = getattr(p, "coefficients", None)
    if coeffs is not None:
        return float(np.abs(coeffs).max())
    return float(np.abs(p.coeffs).max()) if p.coeffs.size else 0.0


# ---------------------------------------------------------------------------
# critical points on S^2


@dataclass
class CriticalPointReport:
    """Converged critical points of a scalar sample on S^2."""

    degree: int
    level: int
    points: np.ndarray           # (M, 3)
    kinds: list[str]             # 'max' | 'min' | 'saddle' | 'degenerate'
    failed_seeds: int
    gradient_scale: float

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def morse_sum(self) -> int | None:
        """maxima - saddles + minima; None when any seed failed or a point
        could not be classified."""
        if self.failed_seeds or "degenerate" in self.kinds:
            return None
        return (self.kinds.count("max") - self.kinds.count("saddle")
                + self.kinds.count("min"))

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "level": self.level,
            "count": self.count,
            "points": self.points.tolist(),
            "kinds": self.kinds,
            "failed_seeds": self.failed_seeds,
        }


def _face_frames(mesh: SphereMesh) -> tuple[np.ndarray, np.ndarray]:
    v = mesh.vertices
    f = mesh.faces
    e1 = v[f[:, 1]] - v[f[:, 0]]
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    nrm = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    e2 = np.cross(nrm, e1)
    return e1, e2


def critical_points(
    p,
    *,
    level: int | None = None,
    max_iterations: int = 50,
    merge_distance: float = 1e-6,
) -> CriticalPointReport:
    """Locate the critical points of a scalar sample on S^2.

    Seeds come from mesh triangles where both components of the covariant
    gradient (in the triangle's own frame) change sign, plus vertices that
    are local minima of |grad|; each seed is polished by damped Riemannian
    Newton on the gradient system and converged points are merged within
    ``merge_distance`` geodesic distance.
    """
    d = ensembles.degree_of(p)
    if level is None:
        level = level_for_degree(d)
    mesh = icosphere(level)
    vals, grads, _ = _sphere_jet_arrays(p, mesh.vertices)
    u = grads - (np.einsum("ni,ni->n", grads, mesh.vertices))[:, None] * mesh.vertices
    unorm = np.linalg.norm(u, axis=1)
    grad_scale = float(unorm.max())

    e1, e2 = _face_frames(mesh)
    f = mesh.faces
    c1 = np.einsum("fi,fvi->fv", e1, u[f])
    c2 = np.einsum("fi,fvi->fv", e2, u[f])
    sign_change = lambda c: ~(np.all(c > 0, axis=1) | np.all(c < 0, axis=1))
    seed_faces = np.flatnonzero(sign_change(c1) & sign_change(c2))
    centroids = mesh.vertices[f[seed_faces]].mean(axis=1)
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)

    indptr, nbr = mesh.vertex_adjacency
    local_min = []
    for i in range(mesh.n_vertices):
        js = nbr[indptr[i]:indptr[i + 1]]
        if unorm[i] <= unorm[js].min():
            local_min.append(i)
    seeds = np.vstack([centroids, mesh.vertices[local_min]]) if local_min else centroids

    tol = 1e-12 * max(grad_scale, 1e-300)
    converged, kinds, failed = [], [], 0
    for seed in seeds:
        x = seed / np.linalg.norm(seed)
        ok = False
        for _ in range(max_iterations):
            jet = covariant_jet(p, x)
            r = np.linalg.norm(jet.u)
            if r <= tol:
                ok = True
                break
            try:
                step = np.linalg.solve(jet.q, -(jet.frame.T @ jet.u))
            except np.linalg.LinAlgError:
                break
            ch = ChartPoint(jet.x, jet.frame)
            lam, accepted = 1.0, False
            for _ in range(10):
                s = lam * step
                if np.linalg.norm(s) >= math.pi:
                    lam *= 0.5
                    continue
                xn = exp_map(ch, s)
                if np.linalg.norm(covariant_jet(p, xn).u) < r:
                    x, accepted = xn, True
                    break
                lam *= 0.5
            if not accepted:
                break
        if not ok:
            failed += 1
            continue
        converged.append(x)

    points, out_kinds = [], []
    for x in converged:
        dup = any(
            math.acos(min(1.0, max(-1.0, float(np.dot(x, q))))) < merge_distance
            for q in points)
        if dup:
            continue
        jet = covariant_jet(p, x)
        lam = np.linalg.eigvalsh(jet.q)
        spread = max(np.abs(lam).max(), 1e-300)
        if np.abs(lam).min() < 1e-6 * spread:
            kind = "degenerate"
        elif lam[0] > 0:
            kind = "min"
        elif lam[-1] < 0:
            kind = "max"
        else:
            kind = "saddle"
        points.append(x)
        out_kinds.append(kind)

    pts = np.asarray(points) if points else np.zeros((0, 3))
    return CriticalPointReport(d, level, pts, out_kinds, failed, grad_scale)


def _sphere_jet_arrays(p, points):
    """Values, ambient gradients and Hessians of a scalar sample at points."""
    if isinstance(p, ensembles.PolynomialSample):
        v, g, h = ensembles.sample_jet(p, points)
        return v[0], g[0], h[0]
    v, g, h = p.jet(np.atleast_2d(points))
    return v, g, h
