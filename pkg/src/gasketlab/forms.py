"""Discrete carriers of the canonical energy form on a gasket.

Two discretizations are built from the same cell complex:

* the exact trace form on the tangency vertex set V_m, a weighted graph
  whose per-cell conductances are (kappa^2 + a_j^2) / (2 kappa a_j);
* a one-dimensional finite element network living on the circular arcs
  (outer boundary arcs plus inscribed circles), with per-segment stiffness
  rad/len and lumped mass rad*len.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import HalfPlanePresent, QuadratureUnstable
from .gasket import GasketComplex, build_complex
from .geom import DiskTriple, Point, circumscribed_disk

TWO_PI = 2.0 * math.pi


def cell_conductances(t: DiskTriple) -> tuple[float, float, float]:
    """Edge conductances of a single cell; edge j joins q_{j+1} and q_{j+2}."""
    if not t.is_bounded:
        raise HalfPlanePresent("trace conductances need three bounded disks")
    a, b, c, kappa = t.quad
    k2 = kappa * kappa
    return tuple((k2 + x * x) / (2.0 * kappa * x) for x in (a, b, c))


def _merge_edges(edge_map: dict, i: int, j: int, c: float):
    key = (i, j) if i < j else (j, i)
    edge_map[key] = edge_map.get(key, 0.0) + c


@dataclass
class TraceForm:
    """Graph energy sum over depth-m cells of the per-cell conductance form."""

    points: list[Point]
    edges: list[tuple[int, int, float]]
    depth: int

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    def stiffness(self) -> sp.csr_matrix:
        return graph_laplacian(self.n_vertices, self.edges)

    def energy(self, u) -> float:
        u = np.asarray(u, dtype=float)
        total = 0.0
        for i, j, c in self.edges:
            d = u[i] - u[j]
            total += c * d * d
        return total

    def laplacian_residual(self, u) -> np.ndarray:
        """(L u)(x) = sum_y c_xy (u(x) - u(y)) at every vertex."""
        u = np.asarray(u, dtype=float)
        out = np.zeros(self.n_vertices)
        for i, j, c in self.edges:
            d = u[i] - u[j]
            out[i] += c * d
            out[j] -= c * d
        return out

    def vertex_conductance_scale(self) -> np.ndarray:
        out = np.zeros(self.n_vertices)
        for i, j, c in self.edges:
            out[i] += c
            out[j] += c
        return out


def graph_laplacian(n: int, edges) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for i, j, c in edges:
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-c, -c, c, c]
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def assemble_trace_form(t: DiskTriple, m: int, cx: GasketComplex | None = None) -> TraceForm:
    if not t.is_bounded:
        raise HalfPlanePresent("trace form needs three bounded disks")
    if cx is None or cx.depth < m:
        cx = build_complex(t, m)
    edge_map: dict[tuple[int, int], float] = {}
    for cell in cx.cells(m):
        a, b, c, kappa = cell.quad
        k2 = kappa * kappa
        v = cell.vertex_ids
        for j, alpha in enumerate((a, b, c)):
            cond = (k2 + alpha * alpha) / (2.0 * kappa * alpha)
            _merge_edges(edge_map, v[(j + 1) % 3], v[(j + 2) % 3], cond)
    n_m = cx.num_vertices_at(m)
    edges = [(i, j, c) for (i, j), c in sorted(edge_map.items())]
    return TraceForm(points=cx.points[:n_m], edges=edges, depth=m)


@dataclass
class MassVector:
    values: np.ndarray
    scheme: str

    @property
    def total(self) -> float:
        return float(self.values.sum())


def assemble_mass_trace(
    t: DiskTriple, m: int, cx: GasketComplex | None = None, scheme: str = "thirds"
) -> MassVector:
    """Lump a discrete volume measure onto the tangency vertex set V_m.

    ``thirds`` splits each cell measure 2*vol2(center triangle) equally over
    its three vertices and ``arclen`` splits it in proportion to the boundary
    arc lengths meeting at each vertex; child center triangles tile the
    parent one, so both totals equal 2*vol2 of the root center triangle at
    every depth.  ``mu`` instead lumps the arc measure rad*length of the
    depth-m arc family itself, half a piece to each piece endpoint; its
    total is the truncated arc measure (slightly below 2*vol2) but it keeps
    the local mass-to-stiffness ratios of the continuum, which the cell
    lumpings distort badly high in the spectrum.
    """
    if not t.is_bounded:
        raise HalfPlanePresent("trace mass needs three bounded disks")
    if cx is None or cx.depth < m:
        cx = build_complex(t, m)
    n_m = cx.num_vertices_at(m)
    if scheme == "mu":
        return MassVector(values=_mu_vertex_masses(t, m, cx), scheme="mu")
    if scheme == "mufull":
        # mu pieces plus, per cell, the measure of the arcs deeper than the
        # truncation (equal thirds); restores the exact total 2*vol2
        masses = _mu_vertex_masses(t, m, cx)
        for cell in cx.cells(m):
            lens = _cell_arc_lengths(cx, cell)
            boundary_mu = sum(
                cx.circles[cell.circle_ids[j]].disk.radius * lens[j] for j in range(3)
            )
            resid = max(2.0 * cell.area - boundary_mu, 0.0)
            for vid in cell.vertex_ids:
                masses[vid] += resid / 3.0
        return MassVector(values=masses, scheme="mufull")
    masses = np.zeros(n_m)
    for cell in cx.cells(m):
        cell_mass = 2.0 * cell.area
        v = cell.vertex_ids
        if scheme == "thirds":
            w = (cell_mass / 3.0, cell_mass / 3.0, cell_mass / 3.0)
        elif scheme == "arclen":
            lens = _cell_arc_lengths(cx, cell)
            tot = lens[0] + lens[1] + lens[2]
            w = tuple(
                cell_mass * (lens[(j + 1) % 3] + lens[(j + 2) % 3]) / (2.0 * tot)
                for j in range(3)
            )
        else:
            raise ValueError(f"unknown mass scheme {scheme!r}")
        for j in range(3):
            masses[v[j]] += w[j]
    return MassVector(values=masses, scheme=scheme)


def _mu_vertex_masses(t: DiskTriple, m: int, cx: GasketComplex) -> np.ndarray:
    n_m = cx.num_vertices_at(m)
    if m >= 1:
        return assemble_arc_fem(t, m, 1, cx).mass_vector().values[:n_m]
    # V_0 carries only the three outer arcs
    cir = circumscribed_disk(t)
    masses = np.zeros(3)
    for j in range(3):
        d = t.disks[j]
        pa, pb = t.q[(j + 1) % 3], t.q[(j + 2) % 3]
        ta = math.atan2(pa[1] - d.center[1], pa[0] - d.center[0])
        tb = math.atan2(pb[1] - d.center[1], pb[0] - d.center[0])
        sweep = _pick_arc(d.center, d.radius, ta, tb, cir.center, cir.radius)[1]
        half = 0.5 * d.radius * (d.radius * sweep)
        masses[(j + 1) % 3] += half
        masses[(j + 2) % 3] += half
    return masses


def _cell_arc_lengths(cx: GasketComplex, cell) -> tuple[float, float, float]:
    """Length of the cell boundary arc on each member circle."""
    qp = [cx.points[i] for i in cell.vertex_ids]
    cir_center, cir_r = _cell_circumcircle(qp)
    out = []
    for j in range(3):
        d = cx.circles[cell.circle_ids[j]].disk
        cxy = d.center
        a = math.atan2(qp[(j + 1) % 3][1] - cxy[1], qp[(j + 1) % 3][0] - cxy[0])
        b = math.atan2(qp[(j + 2) % 3][1] - cxy[1], qp[(j + 2) % 3][0] - cxy[0])
        sweep = _pick_arc(cxy, d.radius, a, b, cir_center, cir_r)[1]
        out.append(d.radius * sweep)
    return tuple(out)


def _cell_circumcircle(qp):
    from .geom import _circumcircle

    return _circumcircle(*qp)


def _pick_arc(center, radius, theta_a, theta_b, sel_center, sel_radius):
    """Of the two arcs between two boundary angles, pick the one whose
    midpoint lies inside the selection circle (the cell's circumdisk)."""
    sweep1 = (theta_b - theta_a) % TWO_PI
    for start, sweep in ((theta_a, sweep1), (theta_b, TWO_PI - sweep1)):
        mid = start + 0.5 * sweep
        mx = center[0] + radius * math.cos(mid)
        my = center[1] + radius * math.sin(mid)
        if math.hypot(mx - sel_center[0], my - sel_center[1]) < sel_radius:
            return start, sweep
    raise ValueError("neither candidate arc faces the ideal triangle")


# ---------------------------------------------------------------------------
# arc finite element network


@dataclass
class ArcNetwork:
    """P1 network on the truncated arc family (outer arcs + inscribed circles).

    Edge stiffness is rad/len and edge mass rad*len with len the arc length,
    half of the mass lumped to each endpoint.  ``arc_ids[k]`` is the circle
    id (into the complex's circle table) that edge k lies on.
    """

    points: list[Point]
    edges: list[tuple[int, int, float, float]]  # (i, j, radius, arc length)
    depth: int
    refine: int
    n_vm: int  # leading ids are the V_m tangency points
    arc_ids: list[int]

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def total_mass(self) -> float:
        return sum(r * l for _, _, r, l in self.edges)

    def conductance_edges(self):
        return [(i, j, r / l) for i, j, r, l in self.edges]

    def stiffness(self) -> sp.csr_matrix:
        return graph_laplacian(self.n_vertices, self.conductance_edges())

    def mass_vector(self) -> MassVector:
        masses = np.zeros(self.n_vertices)
        for i, j, r, l in self.edges:
            half = 0.5 * r * l
            masses[i] += half
            masses[j] += half
        return MassVector(values=masses, scheme="arc-lumped")

    def energy(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(
            sum((r / l) * (u[i] - u[j]) ** 2 for i, j, r, l in self.edges)
        )


def assemble_arc_fem(
    t: DiskTriple, m: int, refine: int, cx: GasketComplex | None = None
) -> ArcNetwork:
    """Arc network truncated at depth m: every arc is split at the V_m points
    on it, then each piece is subdivided into ``refine`` equal-angle segments."""
    if not t.is_bounded:
        raise HalfPlanePresent("arc network needs three bounded disks")
    if m < 1 or refine < 1:
        raise ValueError("need depth >= 1 and refine >= 1")
    if cx is None or cx.depth < m:
        cx = build_complex(t, m)
    n_vm = cx.num_vertices_at(m)

    incident: dict[int, list[int]] = {}
    for vid in range(n_vm):
        for cid in cx.vertex_pairs[vid]:
            incident.setdefault(cid, []).append(vid)

    cir = circumscribed_disk(t)
    points = list(cx.points[:n_vm])
    edges: list[tuple[int, int, float, float]] = []
    arc_ids: list[int] = []

    def _angle(cid, vid):
        c = cx.circles[cid].disk.center
        p = cx.points[vid]
        return math.atan2(p[1] - c[1], p[0] - c[0])

    def _emit(cid, vid_a, vid_b, theta_a, sweep):
        d = cx.circles[cid].disk
        dt = sweep / refine
        prev = vid_a
        for s in range(1, refine + 1):
            if s == refine:
                cur = vid_b
            else:
                th = theta_a + s * dt
                points.append(
                    (d.center[0] + d.radius * math.cos(th), d.center[1] + d.radius * math.sin(th))
                )
                cur = len(points) - 1
            edges.append((prev, cur, d.radius, d.radius * dt))
            arc_ids.append(cid)
            prev = cur

    # outer arcs: on member j between the root tangency points q_{j+1}, q_{j+2}
    for j in range(3):
        d = cx.circles[j].disk
        va, vb = (j + 1) % 3, (j + 2) % 3
        start, sweep = _pick_arc(
            d.center, d.radius, _angle(j, va), _angle(j, vb), cir.center, cir.radius
        )
        vid_start = va if abs((_angle(j, va) - start) % TWO_PI) < 1e-9 else vb
        vid_end = vb if vid_start == va else va
        interior = [v for v in incident.get(j, []) if v not in (va, vb)]
        interior.sort(key=lambda v: (_angle(j, v) - start) % TWO_PI)
        chain = [vid_start] + interior + [vid_end]
        prev_off = 0.0
        for a_v, b_v in zip(chain[:-1], chain[1:]):
            off_b = sweep if b_v == vid_end else (_angle(j, b_v) - start) % TWO_PI
            _emit(j, a_v, b_v, start + prev_off, off_b - prev_off)
            prev_off = off_b

    # inscribed circles created strictly above depth m are full circles
    for cid in range(3, len(cx.circles)):
        if len(cx.circles[cid].word) >= m:
            continue
        vids = incident.get(cid, [])
        vids.sort(key=lambda v: _angle(cid, v))
        k = len(vids)
        for idx in range(k):
            a_v = vids[idx]
            b_v = vids[(idx + 1) % k]
            th_a = _angle(cid, a_v)
            sweep = (_angle(cid, b_v) - th_a) % TWO_PI
            if idx == k - 1 and sweep == 0.0:
                sweep = TWO_PI
            _emit(cid, a_v, b_v, th_a, sweep)

    return ArcNetwork(
        points=points, edges=edges, depth=m, refine=refine, n_vm=n_vm, arc_ids=arc_ids
    )


def stiffness_to_text(K: sp.spmatrix) -> str:
    """Coordinate-format text (row, col, value), one entry per line."""
    coo = K.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [
        f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}"
        for i in order
        if coo.data[i] != 0.0
    ]
    return "\n".join(lines) + "\n"


def mass_to_text(values) -> str:
    """One mass entry per line, 17 significant digits."""
    return "\n".join(f"{float(v):.17g}" for v in values) + "\n"


def constrained_minimum_energy(form: TraceForm, boundary_ids, u_boundary) -> float:
    """min { E(v) : v equals the given data on the boundary ids }."""
    n = form.n_vertices
    boundary_ids = np.asarray(boundary_ids, dtype=int)
    u = np.zeros(n)
    u[boundary_ids] = np.asarray(u_boundary, dtype=float)
    free = np.setdiff1d(np.arange(n), boundary_ids)
    K = form.stiffness().tocsc()
    if free.size:
        rhs = -K[free][:, boundary_ids] @ u[boundary_ids]
        u[free] = spla.spsolve(K[free][:, free], rhs)
    return form.energy(u)


# ---------------------------------------------------------------------------
# sector extension inequalities on a single circular arc


@dataclass(frozen=True)
class ArcSegmentFunction:
    """Piecewise-linear function on an arc, sampled on a uniform angle grid."""

    center: Point
    radius: float
    theta0: float
    theta1: float
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) < 16:
            raise ValueError("need at least 16 samples on the arc")
        if not (self.theta1 > self.theta0 and self.theta1 - self.theta0 <= TWO_PI + 1e-12):
            raise ValueError("angle interval must be increasing and at most a full turn")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("samples must be finite")

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(self.theta0, self.theta1, len(self.values))


def sample_arc_function(center, radius, theta0, theta1, fn, n=64) -> ArcSegmentFunction:
    """Sample a callable of the plane point z = center + radius*e^{i theta}."""
    th = np.linspace(theta0, theta1, n)
    vals = tuple(
        float(fn(center[0] + radius * math.cos(a), center[1] + radius * math.sin(a)))
        for a in th
    )
    return ArcSegmentFunction(center, radius, theta0, theta1, vals)


@dataclass
class SectorCheckReport:
    arc_gradient: float  # integral of |grad_C u|^2 rad dH^1
    arc_l2: float  # integral of u^2 rad dH^1
    sector_gradient: float  # integral over the sector of |grad I_a u|^2
    sector_l2: dict  # a -> integral over the sector of (I_a u)^2
    a_w12: float
    mean: float
    w12_ok: bool
    l2_ok: dict
    quad_rel_change: float

    @property
    def all_ok(self) -> bool:
        return self.w12_ok and all(self.l2_ok.values())


def _sector_integrals(f: ArcSegmentFunction, a_list, n_theta, n_t):
    """Tensor-product midpoint quadrature over the sector.

    The integrands factor between the radial and angular variables, so the
    double sum is accumulated as radial moments times angular sums; the
    result is identical to the full product-grid sum.
    """
    th_nodes = f.thetas
    vals = np.asarray(f.values)
    dth = th_nodes[1] - th_nodes[0]
    slopes = np.diff(vals) / dth

    length = f.theta1 - f.theta0
    tm = (np.arange(n_t) + 0.5) / n_t
    thm = f.theta0 + (np.arange(n_theta) + 0.5) * (length / n_theta)
    um = np.interp(thm, th_nodes, vals)
    idx = np.minimum(((thm - f.theta0) / dth).astype(int), len(slopes) - 1)
    dum = slopes[idx]

    w_theta = length / n_theta
    w_t = 1.0 / n_t
    r2 = f.radius * f.radius

    mom_t = float(np.sum(tm) * w_t)  # integral of t dt
    mom_a2 = float(np.sum((1.0 - tm) ** 2 * tm) * w_t)  # (1-t)^2 t
    mom_au = float(np.sum((1.0 - tm) * tm * tm) * w_t)  # (1-t) t^2
    mom_u2 = float(np.sum(tm**3) * w_t)  # t^3
    sum_1 = n_theta * w_theta
    sum_u = float(np.sum(um) * w_theta)
    sum_u2 = float(np.sum(um * um) * w_theta)
    sum_du2 = float(np.sum(dum * dum) * w_theta)

    grad_by_a = {}
    l2_by_a = {}
    for a in a_list:
        dev2 = float(np.sum((um - a) ** 2) * w_theta)  # unexpanded, exact at u == a
        grad_by_a[a] = (dev2 + sum_du2) * mom_t
        l2_by_a[a] = r2 * (
            a * a * mom_a2 * sum_1 + 2.0 * a * mom_au * sum_u + mom_u2 * sum_u2
        )
    return grad_by_a, l2_by_a


def sector_extension_check(
    f: ArcSegmentFunction, a: float, rel_slack: float = 1e-6, stability_tol: float = 1e-4
) -> SectorCheckReport:
    """Numerically verify the cone-extension energy and L2 comparison bounds.

    The linear extension I_a u((1-t)c + tz) = (1-t)a + t u(z) over the sector
    is integrated by tensor-product midpoint quadrature (radial x angular),
    doubled until stable.  The gradient comparison requires a in the range
    of u; the L2 comparison is checked for a = 0 and a = mean(u).
    """
    vals = np.asarray(f.values)
    if not (vals.min() - 1e-12 <= a <= vals.max() + 1e-12):
        raise ValueError("W12 check needs a within [min u, max u]")
    th = f.thetas
    dth = th[1] - th[0]
    length = f.theta1 - f.theta0
    du = np.diff(vals)

    arc_gradient = float(np.sum(du * du) / dth)
    arc_l2 = float(
        f.radius**2 * np.sum(dth * (vals[:-1] ** 2 + vals[:-1] * vals[1:] + vals[1:] ** 2) / 3.0)
    )
    mean = float(np.sum(dth * (vals[:-1] + vals[1:]) * 0.5) / length)

    a_list = [a, 0.0, mean]
    n_theta = max(64, 4 * (len(vals) - 1))
    n_t = 64
    prev = None
    rel_change = math.inf
    for _ in range(10):
        grad_by_a, l2_by_a = _sector_integrals(f, a_list, n_theta, n_t)
        cur = np.array([grad_by_a[a], l2_by_a[0.0], l2_by_a[mean]])
        if prev is not None:
            denom = np.maximum(np.abs(cur), 1e-30)
            rel_change = float(np.max(np.abs(cur - prev) / denom))
            if rel_change <= 0.01 * rel_slack:
                break
        prev = cur
        n_theta *= 2
        n_t *= 2
    if rel_change > stability_tol:
        raise QuadratureUnstable(f"sector quadrature still changing by {rel_change:.2e}")

    sector_gradient = grad_by_a[a]
    slack = rel_slack

    def _leq(lhs, rhs):
        return lhs <= rhs * (1.0 + slack) + slack * max(abs(lhs), 1.0e-30)

    w12_ok = _leq((2.0 / 21.0) * sector_gradient, arc_gradient) and _leq(
        arc_gradient, 2.0 * sector_gradient
    )
    l2_ok = {}
    sector_l2 = {}
    for aa in (0.0, mean):
        s = l2_by_a[aa]
        sector_l2[aa] = s
        l2_ok[aa] = _leq(2.0 * s, arc_l2) and _leq(arc_l2, 4.0 * s)

    return SectorCheckReport(
        arc_gradient=arc_gradient,
        arc_l2=arc_l2,
        sector_gradient=sector_gradient,
        sector_l2=sector_l2,
        a_w12=a,
        mean=mean,
        w12_ok=w12_ok,
        l2_ok=l2_ok,
        quad_rel_change=rel_change,
    )
