"""Generalized eigenproblems K u = lambda M u for the discrete energy forms.

Small problems go through a dense full tridiagonalization.  Above the dense
threshold a shift-invert Lanczos path computes spectrum slices whose
completeness is certified by Sylvester inertia counts of K - sigma M, and
every reported pair carries a residual certificate.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .errors import (
    AboveTrustCeiling,
    Disconnected,
    InsufficientSpectrum,
    InterlacingViolation,
    NotConverged,
)
from .forms import assemble_arc_fem, assemble_mass_trace, assemble_trace_form
from .gasket import apply_word, build_complex, index_set_I
from .geom import DiskTriple, transform_triple

DENSE_THRESHOLD = 3000
INERTIA_DENSE_LIMIT = 4000
RESIDUAL_RTOL = 1e-8


@dataclass
class GeneralizedEVP:
    stiffness: sp.csr_matrix
    mass: np.ndarray
    boundary: tuple[int, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.stiffness.shape[0]
        if self.stiffness.shape != (n, n):
            raise ValueError("stiffness must be square")
        if self.mass.shape != (n,):
            raise ValueError("mass must be a diagonal vector")
        if any(i < 0 or i >= n for i in self.boundary):
            raise ValueError("boundary indices out of range")

    @property
    def n_total(self) -> int:
        return self.stiffness.shape[0]

    @property
    def n_free(self) -> int:
        return self.n_total - len(self.boundary)


def evp_from_trace(t: DiskTriple, m: int, dirichlet="v0", mass_scheme="mu", cx=None):
    if cx is None:
        cx = build_complex(t, m)
    form = assemble_trace_form(t, m, cx)
    mass = assemble_mass_trace(t, m, cx, scheme=mass_scheme)
    boundary = _resolve_boundary(dirichlet, form.n_vertices)
    return GeneralizedEVP(
        stiffness=form.stiffness(),
        mass=mass.values,
        boundary=boundary,
        meta={"scheme": "trace", "depth": m, "mass_scheme": mass_scheme},
    )


def evp_from_arc_fem(t: DiskTriple, m: int, refine: int, dirichlet="v0", cx=None):
    net = assemble_arc_fem(t, m, refine, cx)
    boundary = _resolve_boundary(dirichlet, net.n_vertices)
    return GeneralizedEVP(
        stiffness=net.stiffness(),
        mass=net.mass_vector().values,
        boundary=boundary,
        meta={"scheme": "arcfem", "depth": m, "refine": refine},
    )


def _resolve_boundary(dirichlet, n) -> tuple[int, ...]:
    if dirichlet is None or dirichlet == "none":
        return ()
    if dirichlet == "v0":
        return (0, 1, 2)
    return tuple(sorted(int(i) for i in dirichlet))


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    meta: dict

    def __len__(self):
        return len(self.eigenvalues)

    def to_json(self) -> dict:
        return {
            "scheme": self.meta.get("scheme", "custom"),
            "depth": self.meta.get("depth"),
            "boundary": list(self.meta.get("boundary", ())),
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "normalization": "laplacian",  # plain eigenvalues, not square roots
            "n_free": self.meta.get("n_free"),
            "method": self.meta.get("method"),
            "residual_max": self.meta.get("residual_max"),
            "inertia_verified": self.meta.get("inertia_verified"),
        }


def _free_pencil(evp: GeneralizedEVP, allow_disconnected: bool):
    n = evp.n_total
    free = np.setdiff1d(np.arange(n), np.asarray(evp.boundary, dtype=int))
    K = evp.stiffness.tocsr()[free][:, free].tocsr()
    d = evp.mass[free]
    if np.any(d <= 0.0):
        raise ValueError("mass must be strictly positive on free vertices")
    n_comp = csgraph.connected_components(K, directed=False)[0]
    if n_comp > 1 and not allow_disconnected:
        raise Disconnected(f"free graph splits into {n_comp} components", n_comp)
    s = 1.0 / np.sqrt(d)
    A = sp.diags(s) @ K @ sp.diags(s)
    A = ((A + A.T) * 0.5).tocsr()
    return free, K, d, A


def _gershgorin_upper(A: sp.csr_matrix) -> float:
    if A.shape[0] == 0:
        return 0.0
    absA = abs(A)
    return float(absA.sum(axis=1).max())


def _residual_max(K, d, lams, Y, s):
    """max over pairs of ||K v - lam M v|| / ||v|| with v = D^{-1/2} y."""
    if len(lams) == 0:
        return 0.0
    V = Y * s[:, None]
    R = K @ V - (d[:, None] * V) * lams[None, :]
    return float(np.max(np.linalg.norm(R, axis=0) / np.linalg.norm(V, axis=0)))


def ldl_inertia(A_dense: np.ndarray) -> tuple[int, int, int]:
    """(below, zero, above) eigenvalue counts via a Bunch-Kaufman LDL factorization."""
    lu, dmat, perm = sla.ldl(A_dense, lower=True)
    n = dmat.shape[0]
    neg = zero = pos = 0
    i = 0
    while i < n:
        if i + 1 < n and dmat[i, i + 1] != 0.0:
            a, b, c = dmat[i, i], dmat[i, i + 1], dmat[i + 1, i + 1]
            mid = 0.5 * (a + c)
            disc = math.hypot(0.5 * (a - c), b)
            for lam in (mid - disc, mid + disc):
                if lam < 0:
                    neg += 1
                elif lam > 0:
                    pos += 1
                else:
                    zero += 1
            i += 2
        else:
            v = dmat[i, i]
            if v < 0:
                neg += 1
            elif v > 0:
                pos += 1
            else:
                zero += 1
            i += 1
    return neg, zero, pos


def count_below(A: sp.csr_matrix, sigma: float) -> int:
    """Number of eigenvalues of A strictly below sigma (Sylvester inertia)."""
    B = A.toarray()
    B[np.diag_indices_from(B)] -= sigma
    neg, zero, _ = ldl_inertia(B)
    return neg


def solve(
    evp: GeneralizedEVP,
    how_many: int | None = None,
    dense_threshold: int = DENSE_THRESHOLD,
    inertia_dense_limit: int = INERTIA_DENSE_LIMIT,
    allow_disconnected: bool = False,
    seed: int = 0,
) -> Spectrum:
    """Lowest eigenvalues of the pencil (K, diag(mass)) on the free vertices.

    ``how_many=None`` returns the full spectrum.  Problems with at most
    ``dense_threshold`` free vertices, and any full-spectrum request, are
    solved by dense tridiagonalization; larger partial requests go through
    shift-invert Lanczos slices whose completeness is verified by inertia
    counts (up to ``inertia_dense_limit``, above which the meta flag
    ``inertia_verified`` reports False).
    """
    free, K, d, A = _free_pencil(evp, allow_disconnected)
    n = len(free)
    s = 1.0 / np.sqrt(d)
    k = n if how_many is None else min(int(how_many), n)

    meta = dict(evp.meta)
    meta.update({"boundary": tuple(evp.boundary), "n_free": n})

    if n <= dense_threshold or k == n:
        lams, Y = sla.eigh(A.toarray())
        lams = lams[:k]
        Y = Y[:, :k]
        meta["method"] = "dense"
        meta["inertia_verified"] = True  # full tridiagonalization, nothing to miss
    else:
        lams, Y, verified = _sliced_lanczos(A, k, inertia_dense_limit, seed)
        meta["method"] = "lanczos-shift-invert"
        meta["inertia_verified"] = verified

    lam_scale = _gershgorin_upper(A)
    res = _residual_max(K, d, lams, Y, s)
    meta["residual_max"] = res
    meta["lambda_scale"] = lam_scale
    if res > RESIDUAL_RTOL * max(lam_scale, 1e-300):
        raise NotConverged(
            f"residual {res:.3e} exceeds {RESIDUAL_RTOL:g} * lambda_max",
            partial=lams,
        )

    # snap the roundoff neighborhood of zero (the PSD pencil cannot dip below)
    tiny = 1e-12 * lam_scale
    if len(lams) and lams[0] < -tiny:
        raise NotConverged(f"negative eigenvalue {lams[0]:.3e} beyond roundoff", partial=lams)
    lams = np.where(np.abs(lams) <= tiny, 0.0, np.clip(lams, 0.0, None))
    return Spectrum(eigenvalues=np.sort(lams), meta=meta)


def _sliced_lanczos(A: sp.csr_matrix, k: int, inertia_dense_limit: int, seed: int):
    """Shift-invert ARPACK slices covering the k lowest eigenvalues.

    Slice boundaries are placed from a low-order fit of the counting
    function; when the matrix is small enough for a dense factorization the
    count inside every slice is certified with LDL inertia.
    """
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    v0 = np.ones(n) + 0.01 * rng.standard_normal(n)
    verify = n <= inertia_dense_limit

    if not verify and k > 2000:
        raise NotConverged(
            f"n={n} too large for certified slicing and k={k} too large for ARPACK",
            partial=None,
        )
    if not verify:
        lams, Y = spla.eigsh(A, k=k, sigma=-1e-9, which="LM", v0=v0, maxiter=5000)
        order = np.argsort(lams)
        return lams[order], Y[:, order], False

    # probe the counting function to place boundaries
    probe_k = min(max(32, k // 20), k, n - 1)
    lam_probe, _ = spla.eigsh(A, k=probe_k, sigma=-1e-9, which="LM", v0=v0, maxiter=5000)
    lam_probe = np.sort(lam_probe)
    top_probe = lam_probe[-1]
    growth = (k / probe_k) ** 1.6  # generic superlinear growth of lambda_j
    b_top = top_probe * max(growth, 1.2) + 1e-9
    while count_below(A, b_top) < k + 1:
        b_top *= 1.6
        if not math.isfinite(b_top):
            raise NotConverged("failed to bracket the requested spectrum", partial=None)

    n_slices = max(1, math.ceil(k / 220))
    bounds = [b_top * ((i / n_slices) ** 1.6) for i in range(n_slices + 1)]
    bounds[0] = -1e-12 * b_top
    counts = [0] + [count_below(A, b) for b in bounds[1:]]

    lams_all = []
    vecs_all = []
    got = 0
    for i in range(n_slices):
        want = counts[i + 1] - counts[i]
        if want <= 0:
            continue
        lo, hi = bounds[i], bounds[i + 1]
        sigma = 0.5 * (lo + hi)
        pad = 8
        for attempt in range(4):
            k_req = min(want + pad, n - 1)
            lam_i, y_i = spla.eigsh(A, k=k_req, sigma=sigma, which="LM", v0=v0, maxiter=5000)
            # half-open window matching the inertia difference #[lo, hi)
            sel = (lam_i >= lo) & (lam_i < hi)
            if int(sel.sum()) == want:
                break
            pad *= 4
        else:
            raise NotConverged(
                f"slice ({lo:.3e}, {hi:.3e}] kept missing eigenvalues", partial=None
            )
        lams_all.append(lam_i[sel])
        vecs_all.append(y_i[:, sel])
        got += want
        if got >= k:
            break

    lams = np.concatenate(lams_all) if lams_all else np.empty(0)
    if len(lams) < k:
        raise NotConverged(
            f"slices delivered {len(lams)} of {k} requested eigenvalues", partial=lams
        )
    Y = np.hstack(vecs_all)
    order = np.argsort(lams)[:k]
    return lams[order], Y[:, order], True


# ---------------------------------------------------------------------------
# counting and Weyl fit


def counting(s: Spectrum, lam: float) -> int:
    """#{n : lambda_n <= lam} in the computed list (ties included)."""
    ceiling = trust_ceiling(s)
    if lam > ceiling:
        warnings.warn(
            f"counting at {lam:.4g} above the trust ceiling {ceiling:.4g}",
            AboveTrustCeiling,
        )
    return int(bisect_right(list(s.eigenvalues), lam))


def trust_ceiling(s: Spectrum) -> float:
    """Largest lambda at which the discrete counting is trusted.

    Only the lower half of a discrete spectrum approximates the continuum;
    with a partial solve the ceiling is the top computed eigenvalue if that
    comes first.
    """
    n_free = s.meta.get("n_free", len(s))
    idx = min(len(s) - 1, max(0, n_free // 2 - 1))
    return float(s.eigenvalues[idx])


@dataclass
class WeylFit:
    slope: float
    prefactor: float
    window: tuple[float, float]
    residual: float
    n_points: int


def weyl_fit(s: Spectrum) -> WeylFit:
    """Log-log slope of the eigenvalue counting function.

    Fits N(lambda_i) = i+1 against lambda_i for indices between 10% and 50%
    of the computed spectrum; the upper half is discarded because the
    discretization corrupts the top of the list, and the bottom decade is
    pre-asymptotic.
    """
    if len(s) < 200:
        raise InsufficientSpectrum("need at least 200 eigenvalues")
    n_max = len(s)
    i_lo = max(int(0.1 * n_max), 1)
    i_hi = int(0.5 * n_max)
    lam = s.eigenvalues[i_lo - 1 : i_hi]
    if lam[0] <= 0:
        raise InsufficientSpectrum("window reaches nonpositive eigenvalues")
    x = np.log(lam)
    y = np.log(np.arange(i_lo, i_hi + 1, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return WeylFit(
        slope=float(slope),
        prefactor=float(np.exp(intercept)),
        window=(float(lam[0]), float(lam[-1])),
        residual=resid,
        n_points=len(lam),
    )


# ---------------------------------------------------------------------------
# structural checks


@dataclass
class InterlacingReport:
    n_checked: int
    max_low_violation: float
    max_high_violation: float
    ok: bool


def interlacing_check(evp: GeneralizedEVP, V, rtol: float = 1e-9) -> InterlacingReport:
    """lambda_n <= lambda_n^V <= lambda_{n+#V} on a fixed discretization."""
    base = GeneralizedEVP(evp.stiffness, evp.mass, boundary=(), meta=dict(evp.meta))
    v_sorted = tuple(sorted(set(int(i) for i in V)))
    cons = GeneralizedEVP(evp.stiffness, evp.mass, boundary=v_sorted, meta=dict(evp.meta))
    # constraining V may split the graph; min-max interlacing still applies
    lam_free = solve(base, allow_disconnected=True).eigenvalues
    lam_v = solve(cons, allow_disconnected=True).eigenvalues
    nv = len(v_sorted)
    n = len(lam_v)
    scale = max(lam_free[-1], 1e-300)
    worst_lo = worst_hi = 0.0
    for i in range(n):
        worst_lo = max(worst_lo, lam_free[i] - lam_v[i])
        worst_hi = max(worst_hi, lam_v[i] - lam_free[i + nv])
        if lam_free[i] - lam_v[i] > rtol * max(lam_v[i], scale * 1e-6):
            raise InterlacingViolation(f"lower interlacing fails at n={i + 1}", i + 1)
        if lam_v[i] - lam_free[i + nv] > rtol * max(lam_free[i + nv], scale * 1e-6):
            raise InterlacingViolation(f"upper interlacing fails at n={i + 1}", i + 1)
    return InterlacingReport(
        n_checked=n, max_low_violation=worst_lo, max_high_violation=worst_hi, ok=True
    )


@dataclass
class ScalingReport:
    scale: float
    expected_ratio: float
    max_rel_error: float
    n_compared: int
    ok: bool


def scaling_check(
    t: DiskTriple,
    s: float,
    m: int = 4,
    scheme: str = "trace",
    refine: int = 4,
    n_eigs: int = 50,
    rtol: float = 1e-9,
) -> ScalingReport:
    """Spatial dilation by s must scale every eigenvalue by s^-2."""
    t2 = transform_triple(t, scale=s)
    if scheme == "trace":
        e1 = evp_from_trace(t, m)
        e2 = evp_from_trace(t2, m)
    else:
        e1 = evp_from_arc_fem(t, m, refine)
        e2 = evp_from_arc_fem(t2, m, refine)
    lam1 = solve(e1).eigenvalues
    lam2 = solve(e2).eigenvalues
    k = min(n_eigs, len(lam1), len(lam2))
    lam1, lam2 = lam1[:k], lam2[:k]
    expected = s ** (-2.0)
    denom = np.maximum(np.abs(lam1) * expected, 1e-300)
    err = float(np.max(np.abs(lam2 - lam1 * expected) / denom))
    return ScalingReport(
        scale=s, expected_ratio=expected, max_rel_error=err, n_compared=k, ok=err <= rtol
    )


# ---------------------------------------------------------------------------
# subdivision census (cell decomposition bound on the counting function)


def n_lambda_of(quad, lam: float) -> int:
    """Smallest n with (min pairwise curvature sum)^2 n^2 >= 40 lam."""
    a, b, c, _ = quad
    cg = min(b + c, c + a, a + b)
    n = max(1, math.ceil(math.sqrt(40.0 * lam) / cg))
    while n > 1 and cg * cg * (n - 1) * (n - 1) >= 40.0 * lam:
        n -= 1
    while cg * cg * n * n < 40.0 * lam:
        n += 1
    return n


def census_index_set(truncation: int) -> list[str]:
    """Pairwise non-nested cell addresses covering the gasket minus V_0."""
    words = [w for w in index_set_I(truncation - 1) if len(w) <= truncation]
    words += [j * truncation for j in "123"]
    return sorted(words)


@dataclass
class CensusRow:
    word: str
    child_depth: int
    n_free: int
    count: int


@dataclass
class CensusReport:
    lam: float
    n_lambda: int
    truncation: int
    effective_truncation: int
    tail_is_zero_certified: bool
    parent_count: int
    parent_vlambda_count: int
    child_sum: int
    vertex_count: int
    vertex_count_formula: int
    lower_bound_ok: bool
    upper_gap: int
    rows: list[CensusRow]

    def to_csv(self) -> str:
        lines = ["word,child_depth,n_free,count"]
        for r in self.rows:
            lines.append(f"{r.word},{r.child_depth},{r.n_free},{r.count}")
        lines.append(f"TOTAL,,,{self.child_sum}")
        lines.append(f"PARENT,,,{self.parent_count}")
        return "\n".join(lines) + "\n"


def census_vertices(t: DiskTriple, n: int):
    """Distinct tangency vertices of the census cells at tail depth n."""
    cx = build_complex(t, n)
    cells_by_word = {}
    for depth in range(n + 1):
        for cell in cx.cells(depth):
            cells_by_word[cell.word] = cell
    ids = set()
    for w in census_index_set(n):
        ids.update(cells_by_word[w].vertex_ids)
    return sorted(ids)


def subdivision_census(
    t: DiskTriple,
    lam: float,
    truncation: int,
    depth: int | None = None,
    slack: int = 2,
) -> CensusReport:
    """Compare the parent eigenvalue count with the sum over census cells.

    Children are assembled at matched depth (parent depth minus the word
    length) so the constrained parent problem decomposes exactly; the lower
    bound sum <= parent count is asserted up to ``slack`` tie counts.  The
    remainder-term upper bound has a non-constructive constant and is
    reported as the observed gap only.
    """
    n_lam = n_lambda_of(t.quad, lam)
    T = min(truncation, n_lam)
    if depth is None:
        depth = T
    if depth < T:
        raise ValueError(f"depth {depth} must be at least the effective truncation {T}")

    cx = build_complex(t, depth)
    cells_by_word = {}
    for d in range(depth + 1):
        for cell in cx.cells(d):
            cells_by_word[cell.word] = cell

    words = census_index_set(T)
    v_ids = set()
    for w in words:
        v_ids.update(cells_by_word[w].vertex_ids)

    parent = solve(evp_from_trace(t, depth, dirichlet="v0", cx=cx))
    parent_count = int(np.sum(parent.eigenvalues <= lam))
    # constraining all census vertices decouples the cells by construction
    parent_vl = solve(
        evp_from_trace(t, depth, dirichlet=tuple(sorted(v_ids)), cx=cx),
        allow_disconnected=True,
    )
    parent_vl_count = int(np.sum(parent_vl.eigenvalues <= lam))

    rows = []
    child_sum = 0
    for w in words:
        child_depth = depth - len(w)
        child = apply_word(t, w)
        evp = evp_from_trace(child, child_depth, dirichlet="v0")
        if evp.n_free == 0:
            rows.append(CensusRow(w, child_depth, 0, 0))
            continue
        spec = solve(evp)
        cnt = int(np.sum(spec.eigenvalues <= lam))
        child_sum += cnt
        rows.append(CensusRow(w, child_depth, evp.n_free, cnt))

    return CensusReport(
        lam=lam,
        n_lambda=n_lam,
        truncation=truncation,
        effective_truncation=T,
        tail_is_zero_certified=truncation >= n_lam,
        parent_count=parent_count,
        parent_vlambda_count=parent_vl_count,
        child_sum=child_sum,
        vertex_count=len(v_ids),
        vertex_count_formula=9 * T - 3,
        lower_bound_ok=child_sum <= parent_count + slack,
        upper_gap=parent_count - child_sum,
        rows=rows,
    )
