"""Frequency-support geometry: base shells, induced covers, intersection tests.

Cover elements are images of a base shell under the frequency-side group
action.  For the supported construction every element is a "gauge shell"
{xi : |N xi| in [r0, r1]} for an invertible matrix N, which admits an exact
pairwise intersection test through the singular interval of the transfer
matrix.  The generic sampled protocol (exact convex prechecks plus
low-discrepancy shell sampling) is kept for geometries outside that class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from . import matgroup as mg

COVERAGE_MIN_BUDGET = 256
INTERSECT_MIN_BUDGET = 64
# shells are open for intersection purposes: overlaps within this relative
# margin of exact touching count as empty
OPEN_MARGIN = 1e-9


class CoverConstructionError(RuntimeError):
    """Cover invariants failed; carries a witness point when available."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class RegionDisconnectedOrTooTight(RuntimeError):
    """Path search for the connected hull failed within the grid budget."""


# ---------------------------------------------------------------------------
# convex bodies and shells


def _check_shape(m):
    # geometry shapes may be extremely anisotropic (deep-window elements);
    # reject only genuine rank loss
    sv = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    if not np.all(np.isfinite(sv)) or sv[-1] <= 0.0:
        raise ValueError("geometry shape matrix is singular")


@dataclass(frozen=True)
class Ellipsoid:
    """Body {xi : |shape @ (xi - center)| <= 1}."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        _check_shape(self.shape)

    @property
    def dim(self) -> int:
        return len(self.center)

    def gauge(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.linalg.norm((pts - self.center) @ np.asarray(self.shape).T, axis=1)

    def support(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(self.center @ u
                     + np.linalg.norm(np.linalg.solve(np.asarray(self.shape).T, u)))

    def transformed(self, T) -> "Ellipsoid":
        T = np.asarray(T, dtype=float)
        return Ellipsoid(center=T @ self.center,
                         shape=np.asarray(self.shape) @ np.linalg.inv(T))


@dataclass(frozen=True)
class Parallelotope:
    """Body {center + edges @ u : |u|_inf <= 1}; columns are half-edges."""

    center: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        _check_shape(self.edges)

    @property
    def dim(self) -> int:
        return len(self.center)

    def gauge(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        u = np.linalg.solve(np.asarray(self.edges), (pts - self.center).T)
        return np.max(np.abs(u), axis=0)

    def support(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(self.center @ u + np.sum(np.abs(np.asarray(self.edges).T @ u)))

    def transformed(self, T) -> "Parallelotope":
        T = np.asarray(T, dtype=float)
        return Parallelotope(center=T @ self.center, edges=T @ np.asarray(self.edges))


ConvexBody = (Ellipsoid, Parallelotope)


def body_contains(body, pts) -> np.ndarray:
    return body.gauge(pts) <= 1.0


@dataclass(frozen=True)
class Shell:
    """closure(outer) minus interior(inner); inner must sit inside outer.

    ``trusted`` skips the nesting validation; it is set by constructors
    whose geometry guarantees nesting (concentric gauge shells).
    """

    outer: object
    inner: object
    trusted: bool = False

    def __post_init__(self):
        if not self.trusted:
            _check_nested(self.inner, self.outer)

    @property
    def dim(self) -> int:
        return self.outer.dim

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (self.outer.gauge(pts) <= 1.0) & (self.inner.gauge(pts) >= 1.0)


def _check_nested(inner, outer, n_dirs: int = 64):
    d = inner.dim
    dirs = sphere_directions(d, max(n_dirs, 64))
    for u in dirs:
        if inner.support(u) > outer.support(u) + 1e-12:
            raise CoverConstructionError(
                "shell inner body is not contained in the outer body", witness=u)
    # containment of sampled inner boundary points
    if isinstance(inner, Ellipsoid):
        bnd = inner.center + dirs @ np.linalg.inv(np.asarray(inner.shape)).T
    else:
        bnd = inner.center + np.sign(dirs) @ np.asarray(inner.edges).T
    if np.any(outer.gauge(bnd) > 1.0 + 1e-9):
        raise CoverConstructionError("inner boundary point escapes the outer body")


@dataclass(frozen=True)
class BaseSet:
    """Base geometry Q together with a reference point inside it."""

    geometry: object  # Shell or convex body
    ref_point: np.ndarray

    def __post_init__(self):
        if not bool(set_contains(self.geometry, self.ref_point)[0]):
            raise CoverConstructionError("reference point is outside the base set")


def set_contains(geom, pts) -> np.ndarray:
    if isinstance(geom, Shell):
        return geom.contains(pts)
    return body_contains(geom, pts)


def membership(obj, xi) -> bool:
    """Exact membership predicate for bodies, shells, and cover elements."""
    geom = obj.geometry if isinstance(obj, (BaseSet, CoverElement)) else obj
    return bool(set_contains(geom, np.atleast_2d(np.asarray(xi, dtype=float)))[0])


# ---------------------------------------------------------------------------
# low-discrepancy sampling

_PRIMES = (2, 3, 5, 7, 11, 13)


def halton(n: int, dims: int, skip: int = 20) -> np.ndarray:
    out = np.empty((n, dims))
    for j in range(dims):
        base = _PRIMES[j]
        ix = np.arange(skip + 1, skip + n + 1)
        res = np.zeros(n)
        f = 1.0
        i = ix.astype(np.int64)
        while np.any(i > 0):
            f /= base
            res += f * (i % base)
            i //= base
        out[:, j] = res
    return out


def sphere_directions(d: int, n: int) -> np.ndarray:
    """Low-discrepancy net on the unit sphere S^{d-1} (cached)."""
    return _sphere_directions_cached(d, n)


@lru_cache(maxsize=64)
def _sphere_directions_cached(d: int, n: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]] * ((n + 1) // 2))[:n]
    u = halton(n, d - 1)
    if d == 2:
        ang = 2.0 * math.pi * u[:, 0]
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if d == 3:
        z = 2.0 * u[:, 0] - 1.0
        phi = 2.0 * math.pi * u[:, 1]
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    # d == 4: Hopf parametrization
    eta = np.arcsin(np.sqrt(u[:, 0]))
    a = 2.0 * math.pi * u[:, 1]
    b = 2.0 * math.pi * u[:, 2]
    return np.stack([np.cos(eta) * np.cos(a), np.cos(eta) * np.sin(a),
                     np.sin(eta) * np.cos(b), np.sin(eta) * np.sin(b)], axis=1)


def gauge_shell_points(N: np.ndarray, interval, n: int) -> np.ndarray:
    """Points inside {xi : |N xi| in [r0, r1]} via sphere x radius parametrization."""
    r0, r1 = interval
    d = N.shape[0]
    n_dirs = max(8, int(math.sqrt(n)))
    n_rad = max(2, n // n_dirs)
    dirs = sphere_directions(d, n_dirs)
    fr = (np.arange(n_rad) + 0.5) / n_rad
    radii = r0 + (r1 - r0) * fr
    pts = (dirs[:, None, :] * radii[None, :, None]).reshape(-1, d)
    return np.linalg.solve(np.asarray(N), pts.T).T


# ---------------------------------------------------------------------------
# cover element and cover


@dataclass(frozen=True)
class CoverElement:
    """One transformed copy of the base set.

    ``gauge`` is the matrix N with element = {xi : |N xi| in interval} when
    the element is a gauge shell (None otherwise); ``geometry`` is always
    the explicit transformed Shell/body for export and generic predicates.
    """

    index: tuple
    element: mg.GroupElement
    geometry: object
    gauge: np.ndarray | None = None
    interval: tuple | None = None
    rho_min: float = 0.0
    rho_max: float = math.inf

    @property
    def dim(self) -> int:
        return self.geometry.dim


def _gauge_element(index, gelem, N, interval) -> CoverElement:
    r0, r1 = interval
    sv = np.linalg.svd(np.asarray(N), compute_uv=False)
    geometry = Shell(outer=Ellipsoid(np.zeros(N.shape[0]), np.asarray(N) / r1),
                     inner=Ellipsoid(np.zeros(N.shape[0]), np.asarray(N) / r0),
                     trusted=True)
    return CoverElement(index=tuple(index), element=gelem, geometry=geometry,
                        gauge=np.asarray(N), interval=(float(r0), float(r1)),
                        rho_min=float(r0 / sv[0]), rho_max=float(r1 / sv[-1]))


@dataclass(frozen=True)
class CoverParams:
    """Knobs for the induced-cover construction."""

    step: float | None = None          # chart lattice step (None: per-kind default)
    inner_radius: float = 1.0          # inner radius of the compact base C
    ratio: float | None = None         # outer/inner ratio of the transformed set Q
    inflate: float = 2.0 ** 0.125      # Q inflates C by this factor on both sides
    coverage_budget: int = 4096
    sample_budget: int = 512
    rotation_count: int = 8
    direction_net: int = 128
    check_coverage: bool = True


def default_step(spec: mg.GroupSpec) -> float:
    return 1.0 if spec.kind == mg.CYCLIC else math.log(2.0)


def _per_step_norm(spec: mg.GroupSpec, step: float) -> float:
    """Largest operator norm among one-step transforms and their inverses."""
    if spec.kind == mg.CYCLIC:
        mats = [np.asarray(spec.matrix)]
    elif spec.kind == mg.ONE_PARAMETER:
        mats = [mg.mat_exp(step * spec.generator)]
    elif spec.kind == mg.ABELIAN_FLOW:
        mats = [mg.mat_exp(step * X) for X in spec.generators]
    elif spec.kind in (mg.SCALAR_SIMILITUDE, mg.SIMILITUDE):
        mats = [math.exp(step) * np.eye(spec.dim)]
    elif spec.kind == mg.DISCRETE_FG:
        mats = [np.asarray(M) for M in spec.generators]
    else:
        raise mg.GroupError(f"unsupported kind {spec.kind!r}")
    worst = 1.0
    for m in mats:
        worst = max(worst, mg.operator_norm(m), mg.operator_norm(np.linalg.inv(m)))
    return worst


@dataclass(frozen=True)
class InducedCover:
    """Finite window of the induced cover, with its construction metadata."""

    spec: mg.GroupSpec
    family: mg.WellSpreadFamily
    elements: tuple
    base: BaseSet
    params: CoverParams
    window: int
    c_interval: tuple
    q_interval: tuple
    freq_basis: np.ndarray
    r_min: float
    r_max: float
    max_transfer_norm: float

    def __len__(self) -> int:
        return len(self.elements)

    def gauges(self) -> np.ndarray:
        return np.stack([e.gauge for e in self.elements])

    def containing_indices(self, xi, interval=None) -> list:
        """Positions (enumeration order) of elements containing xi."""
        xi = np.asarray(xi, dtype=float)
        r0, r1 = interval if interval is not None else self.q_interval
        norms = np.linalg.norm(np.einsum("kij,j->ki", self.gauges(), xi), axis=1)
        hits = np.nonzero((norms >= r0) & (norms <= r1))[0]
        return [int(i) for i in hits]

    def covers_points(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r0, r1 = self.q_interval
        norms = np.linalg.norm(np.einsum("kij,nj->nki", self.gauges(), pts), axis=2)
        return np.any((norms >= r0) & (norms <= r1), axis=1)


def build_induced_cover(spec: mg.GroupSpec, window: int,
                        params: CoverParams | None = None) -> InducedCover:
    """Materialize the induced cover of the frequency support on a window.

    The base compact set C is a centered shell (mapped through the spec's
    frequency basis); the transformed set Q inflates C so that Q strictly
    contains C.  The ratio default guarantees consecutive-scale overlap:
    twice the worst one-step operator norm.  Invariants checked here:
    origin exclusion, adjacent-index intersection, and sampled coverage of
    the guaranteed window annulus.
    """
    params = params or CoverParams()
    if params.coverage_budget < COVERAGE_MIN_BUDGET:
        raise ValueError("coverage budget too small")
    pre = mg.admissibility_precheck(spec)
    if not pre.admissible:
        raise CoverConstructionError(
            f"spec fails its admissibility precheck (witness {pre.witness})")
    if spec.dim == 1:
        raise CoverConstructionError(
            "d = 1 shells are disconnected; one-dimensional covers need the "
            "two-sided convex-body construction, which this builder does not "
            "automate")

    step = params.step if params.step is not None else default_step(spec)
    alpha = _per_step_norm(spec, step)
    q_ratio = params.ratio if params.ratio is not None else max(2.0 * alpha, 2.5)
    iota = params.inflate
    if iota < 1.0:
        raise ValueError("inflate must be >= 1")
    r0c = params.inner_radius
    r1c = r0c * q_ratio / (iota * iota)
    if r1c <= r0c:
        raise CoverConstructionError("shell ratio too small for an inflated base")
    c_interval = (r0c, r1c)
    q_interval = (r0c / iota, r1c * iota)

    F = (np.asarray(spec.freq_basis) if spec.freq_basis is not None
         else np.eye(spec.dim))
    F_inv = np.linalg.inv(F)

    family = mg.enumerate_family(spec, window, step=step,
                                 rotation_count=params.rotation_count)
    elements = []
    for idx, gelem in zip(family.indices, family.elements):
        N = F_inv @ np.asarray(gelem.matrix).T
        elements.append(_gauge_element(idx, gelem, N, q_interval))

    for el in elements:
        if not el.rho_min > 0.0:
            raise CoverConstructionError("element geometry reaches the origin",
                                         witness=np.zeros(spec.dim))

    _check_adjacency(spec, elements, params.sample_budget)

    ref = F @ (np.eye(spec.dim)[0] * 0.5 * (r0c + r1c))
    geometry = Shell(outer=Ellipsoid(np.zeros(spec.dim), F_inv / q_interval[1]),
                     inner=Ellipsoid(np.zeros(spec.dim), F_inv / q_interval[0]))
    base = BaseSet(geometry=geometry, ref_point=ref)

    gauges = np.stack([e.gauge for e in elements])
    r_min, r_max = _window_annulus(gauges, q_interval, params.direction_net)

    max_transfer = _transfer_norm_report(elements, F)

    cover = InducedCover(spec=spec, family=family, elements=tuple(elements),
                         base=base, params=params, window=window,
                         c_interval=c_interval, q_interval=q_interval,
                         freq_basis=F, r_min=r_min, r_max=r_max,
                         max_transfer_norm=float(max_transfer))
    if params.check_coverage:
        _check_coverage(cover, params.coverage_budget)
    return cover


def _check_adjacency(spec, elements, budget):
    by_index = {el.index: el for el in elements}
    for el in elements:
        idx = el.index
        if not idx or not isinstance(idx[0], (int, np.integer)):
            continue
        nxt = (idx[0] + 1,) + idx[1:]
        other = by_index.get(nxt)
        if other is None:
            continue
        if not intersects(el, other, budget).intersecting:
            raise CoverConstructionError(
                f"adjacent cover elements {idx} and {nxt} do not overlap; "
                "increase the shell ratio")


def _window_annulus(gauges, interval, n_dirs):
    """Guaranteed covered annulus [r_min, r_max], plus a per-direction gap check.

    The bounds come from singular values: along any direction some element
    reaches gauge depth at least max_k sigma_min(N_k), and some element
    reaches out at least to 1/min_k sigma_max(N_k); these hold uniformly
    over directions.  A net of directions then verifies radial contiguity.
    """
    d = gauges.shape[1]
    r0, r1 = interval
    sv = np.linalg.svd(gauges, compute_uv=False)   # (k, d), descending
    r_min = float(r0 / np.max(sv[:, -1]))
    r_max = float(r1 / np.min(sv[:, 0]))
    if r_min >= r_max:
        raise CoverConstructionError("window annulus is empty; enlarge the window")
    dirs = sphere_directions(d, n_dirs)
    norms = np.linalg.norm(np.einsum("kij,nj->nki", gauges, dirs), axis=2)  # (n, k)
    slack = 1.0 + 1e-12
    for i in range(dirs.shape[0]):
        ivs = sorted(zip(r0 / norms[i], r1 / norms[i]))
        reach = r_min
        for s, e in ivs:
            if s > reach * slack:
                if reach >= r_max:
                    break
                raise CoverConstructionError(
                    "radial gap in the cover along a sampled direction",
                    witness=dirs[i] * 0.5 * (s + reach))
            reach = max(reach, e)
            if reach >= r_max:
                break
        if reach < r_max * (1.0 - 1e-9):
            raise CoverConstructionError(
                "cover does not reach the window annulus along a direction",
                witness=dirs[i] * r_max)
    return r_min, r_max


def _check_coverage(cover: InducedCover, budget: int):
    pts = annulus_samples(cover, budget)
    covered = cover.covers_points(pts)
    if not np.all(covered):
        witness = pts[int(np.nonzero(~covered)[0][0])]
        raise CoverConstructionError("uncovered point in the window annulus",
                                     witness=witness)


def annulus_samples(cover: InducedCover, n: int) -> np.ndarray:
    """Log-radially stratified sample of the cover's guaranteed annulus."""
    d = cover.spec.dim
    u = halton(n, d)
    dirs = sphere_directions(d, n)
    lo, hi = math.log(cover.r_min), math.log(cover.r_max)
    radii = np.exp(lo + (hi - lo) * u[:, -1])
    return dirs * radii[:, None]


# ---------------------------------------------------------------------------
# intersection tests


class IntersectStatus(Enum):
    DISJOINT = "Disjoint"
    INTERSECTING = "Intersecting"
    INTERSECTING_SAMPLED = "IntersectingSampled"
    DISJOINT_SAMPLED = "DisjointSampled"

    @property
    def intersecting(self) -> bool:
        return self in (IntersectStatus.INTERSECTING,
                        IntersectStatus.INTERSECTING_SAMPLED)

    @property
    def exact(self) -> bool:
        return self in (IntersectStatus.DISJOINT, IntersectStatus.INTERSECTING)


def gauge_shells_intersect(N1, interval1, N2, interval2,
                           closed: bool = False) -> bool:
    """Exact overlap test for two concentric gauge shells.

    The transfer matrix g = N2 @ N1^{-1} maps shell-1 gauge coordinates to
    shell-2 gauge coordinates; the open shells meet iff the singular
    interval of g crosses (a2/b1, b2/a1).  Cover semantics treat shells as
    open (touching does not count); ``closed`` flips to compact-set
    semantics, used by the properness diagnostics.
    """
    a1, b1 = interval1
    a2, b2 = interval2
    g = np.asarray(N2) @ np.linalg.inv(np.asarray(N1))
    sv = np.linalg.svd(g, compute_uv=False)
    if closed:
        return (bool(sv[-1] <= (b2 / a1) * (1.0 + OPEN_MARGIN))
                and bool(sv[0] >= (a2 / b1) * (1.0 - OPEN_MARGIN)))
    return (bool(sv[-1] < (b2 / a1) * (1.0 - OPEN_MARGIN))
            and bool(sv[0] > (a2 / b1) * (1.0 + OPEN_MARGIN)))


def intersects(a, b, budget: int = 512,
               force_sampled: bool = False) -> IntersectStatus:
    """Decide whether two cover elements (or raw sets) overlap.

    Exact routes: separating-axis test for parallelotope pairs, Lagrange
    bisection for ellipsoid pairs, active-set minimization for the mixed
    convex pair, and the singular-interval test for concentric gauge
    shells.  Remaining shell pairs run the sampled protocol: exact tests
    on the outer bodies first, then low-discrepancy shell samples checked
    against the other set.
    """
    if budget < INTERSECT_MIN_BUDGET:
        raise ValueError("intersection budget must be >= %d" % INTERSECT_MIN_BUDGET)
    ga = a.geometry if isinstance(a, (CoverElement, BaseSet)) else a
    gb = b.geometry if isinstance(b, (CoverElement, BaseSet)) else b
    if ga.dim != gb.dim:
        raise ValueError("dimension mismatch")

    if (not force_sampled and isinstance(a, CoverElement)
            and isinstance(b, CoverElement)
            and a.gauge is not None and b.gauge is not None):
        hit = gauge_shells_intersect(a.gauge, a.interval, b.gauge, b.interval)
        return IntersectStatus.INTERSECTING if hit else IntersectStatus.DISJOINT

    a_shell = isinstance(ga, Shell)
    b_shell = isinstance(gb, Shell)
    if not a_shell and not b_shell:
        hit = _convex_intersect(ga, gb)
        return IntersectStatus.INTERSECTING if hit else IntersectStatus.DISJOINT

    outer_a = ga.outer if a_shell else ga
    outer_b = gb.outer if b_shell else gb
    if not _convex_intersect(outer_a, outer_b):
        return IntersectStatus.DISJOINT

    for first, second in ((ga, gb), (gb, ga)):
        pts = _sample_in_set(first, budget)
        if pts is not None and np.any(set_contains(second, pts)):
            return IntersectStatus.INTERSECTING_SAMPLED
    return IntersectStatus.DISJOINT_SAMPLED


def _sample_in_set(geom, budget):
    if isinstance(geom, Shell):
        out, inn = geom.outer, geom.inner
        if isinstance(out, Ellipsoid) and isinstance(inn, Ellipsoid) \
                and np.allclose(out.center, inn.center):
            d = out.dim
            dirs = sphere_directions(d, max(16, int(math.sqrt(budget))))
            n_rad = max(2, budget // dirs.shape[0])
            fr = (np.arange(n_rad) + 0.5) / n_rad
            Mo = np.linalg.inv(np.asarray(out.shape))
            pts = []
            for v in dirs:
                # radial extent along v in ambient coordinates
                t_hi = 1.0 / float(np.linalg.norm(np.asarray(out.shape) @ v))
                t_lo = 1.0 / float(np.linalg.norm(np.asarray(inn.shape) @ v))
                if t_lo >= t_hi:
                    continue
                for s in fr:
                    pts.append(out.center + (t_lo + s * (t_hi - t_lo)) * v)
            return np.asarray(pts) if pts else None
        return None
    # convex body: gauge-uniform fill
    d = geom.dim
    dirs = sphere_directions(d, max(16, int(math.sqrt(budget))))
    n_rad = max(2, budget // dirs.shape[0])
    fr = ((np.arange(n_rad) + 0.5) / n_rad) ** (1.0 / d)
    if isinstance(geom, Ellipsoid):
        Minv = np.linalg.inv(np.asarray(geom.shape))
        return (geom.center
                + (dirs[:, None, :] * fr[None, :, None]).reshape(-1, d) @ Minv.T)
    u = 2.0 * halton(budget, d) - 1.0
    return geom.center + u @ np.asarray(geom.edges).T


def _convex_intersect(ga, gb) -> bool:
    if isinstance(ga, Parallelotope) and isinstance(gb, Parallelotope):
        return _sat_parallelotopes(ga, gb)
    if isinstance(ga, Ellipsoid) and isinstance(gb, Ellipsoid):
        return _ellipsoids_intersect(ga, gb)
    if isinstance(ga, Ellipsoid):
        return _ellipsoid_parallelotope_intersect(ga, gb)
    return _ellipsoid_parallelotope_intersect(gb, ga)


def _sat_parallelotopes(pa: Parallelotope, pb: Parallelotope) -> bool:
    """Separating-axis test over face normals and 3-D edge cross products."""
    d = pa.dim
    Ea, Eb = np.asarray(pa.edges), np.asarray(pb.edges)
    axes = [np.linalg.inv(Ea).T[:, i] for i in range(d)]
    axes += [np.linalg.inv(Eb).T[:, i] for i in range(d)]
    if d == 3:
        for i in range(3):
            for j in range(3):
                cr = np.cross(Ea[:, i], Eb[:, j])
                if np.linalg.norm(cr) > 1e-12:
                    axes.append(cr)
    delta = pb.center - pa.center
    for u in axes:
        nrm = np.linalg.norm(u)
        if nrm < 1e-14:
            continue
        u = u / nrm
        lhs = abs(float(delta @ u))
        rhs = float(np.sum(np.abs(Ea.T @ u)) + np.sum(np.abs(Eb.T @ u)))
        if lhs > rhs + 1e-12:
            return False
    return True


def _ellipsoids_intersect(ea: Ellipsoid, eb: Ellipsoid,
                          tol: float = 1e-10) -> bool:
    """Exact test via bisection on the Lagrange multiplier.

    Minimizes the b-gauge over the closed body a: the stationary point
    x(mu) of |Mb (x-cb)|^2 + mu |Ma (x-ca)|^2 traces a monotone path from
    cb (mu=0) to ca (mu->inf); bisection finds the point of a's boundary
    along it, whose b-gauge decides the intersection.
    """
    if float(ea.gauge(eb.center)[0]) <= 1.0 or float(eb.gauge(ea.center)[0]) <= 1.0:
        return True
    Qa = np.asarray(ea.shape).T @ np.asarray(ea.shape)
    Qb = np.asarray(eb.shape).T @ np.asarray(eb.shape)
    ca, cb = np.asarray(ea.center), np.asarray(eb.center)

    def x_of(mu):
        return np.linalg.solve(Qb + mu * Qa, Qb @ cb + mu * Qa @ ca)

    def phi(mu):
        return float(ea.gauge(x_of(mu))[0]) - 1.0

    lo, hi = 0.0, 1.0
    # phi(0) > 0 since cb is outside a; grow hi until x(hi) is inside a
    while phi(hi) > 0.0:
        hi *= 2.0
        if hi > 1e16:
            return False
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, hi):
            break
    x_star = x_of(hi)
    return float(eb.gauge(x_star)[0]) <= 1.0 + 1e-9


def _ellipsoid_parallelotope_intersect(e: Ellipsoid, p: Parallelotope) -> bool:
    """Exact min of the ellipsoid gauge over the box, by active-set enumeration."""
    M = np.asarray(e.shape)
    A = M @ np.asarray(p.edges)
    b = M @ (np.asarray(e.center) - np.asarray(p.center))
    d = A.shape[1]
    best = math.inf
    for code in range(3 ** d):
        fixed = []
        free = []
        c = code
        for i in range(d):
            s = c % 3
            c //= 3
            fixed.append(0 if s == 0 else (1 if s == 1 else -1))
            if s == 0:
                free.append(i)
        u = np.array(fixed, dtype=float)
        rhs = b - A @ u
        if free:
            Af = A[:, free]
            sol, *_ = np.linalg.lstsq(Af, rhs, rcond=None)
            if np.any(np.abs(sol) > 1.0 + 1e-12):
                continue
            u[free] = sol
        val = float(np.linalg.norm(A @ u - b))
        best = min(best, val)
        if best <= 1.0:
            return True
    return best <= 1.0


# ---------------------------------------------------------------------------
# neighbor counts


@dataclass(frozen=True)
class NeighborTable:
    """Directed intersection counts between two covers, with edge flags."""

    counts_ab: np.ndarray          # per index of cover A: #{j in B}
    counts_ba: np.ndarray
    interior_a: np.ndarray         # bool: element annulus inside B's window annulus
    interior_b: np.ndarray
    sampled_fraction: float
    matrix: np.ndarray             # full boolean intersection matrix (nA x nB)

    @property
    def max_interior_ab(self) -> int:
        vals = self.counts_ab[self.interior_a]
        return int(vals.max()) if vals.size else 0

    @property
    def max_interior_ba(self) -> int:
        vals = self.counts_ba[self.interior_b]
        return int(vals.max()) if vals.size else 0


def neighbor_counts(cover_a: InducedCover, cover_b: InducedCover,
                    budget: int = 512) -> NeighborTable:
    """Count pairwise element intersections in both directions.

    Gauge-shell covers use the exact singular-interval test, fully
    vectorized; other geometries fall back to the per-pair protocol.
    Elements whose radial annulus is not contained in the other cover's
    guaranteed window annulus are flagged as edge elements so consumers
    can discard boundary truncation effects.
    """
    if cover_a.spec.dim != cover_b.spec.dim:
        raise ValueError("dimension mismatch")
    na, nb = len(cover_a), len(cover_b)
    all_gauge = all(e.gauge is not None for e in cover_a.elements) and \
        all(e.gauge is not None for e in cover_b.elements)
    if all_gauge:
        Na = cover_a.gauges()
        Nb = cover_b.gauges()
        a1, b1 = cover_a.q_interval
        a2, b2 = cover_b.q_interval
        mat = np.zeros((na, nb), dtype=bool)
        inv_a = np.linalg.inv(Na)
        for i in range(na):
            g = Nb @ inv_a[i]
            sv = np.linalg.svd(g, compute_uv=False)
            mat[i] = (sv[:, -1] < (b2 / a1) * (1.0 - OPEN_MARGIN)) & \
                     (sv[:, 0] > (a2 / b1) * (1.0 + OPEN_MARGIN))
        sampled_fraction = 0.0
    else:
        mat = np.zeros((na, nb), dtype=bool)
        sampled = 0
        for i, ea in enumerate(cover_a.elements):
            for j, eb in enumerate(cover_b.elements):
                st = intersects(ea, eb, budget)
                mat[i, j] = st.intersecting
                sampled += 0 if st.exact else 1
        sampled_fraction = sampled / float(na * nb)

    interior_a = _interior_mask(cover_a, cover_b)
    interior_b = _interior_mask(cover_b, cover_a)
    return NeighborTable(counts_ab=mat.sum(axis=1), counts_ba=mat.sum(axis=0),
                         interior_a=interior_a, interior_b=interior_b,
                         sampled_fraction=sampled_fraction, matrix=mat)


def _transfer_norm_report(elements, F, max_rows: int = 200) -> float:
    """max ||h_i^T h_j^{-T}|| over intersecting pairs (row-subsampled when large)."""
    n = len(elements)
    if not all(e.gauge is not None for e in elements):
        worst = 0.0
        for i in range(n):
            for j in range(n):
                if intersects(elements[i], elements[j], 512).intersecting:
                    m = np.asarray(elements[i].element.matrix).T @ \
                        np.linalg.inv(np.asarray(elements[j].element.matrix)).T
                    worst = max(worst, mg.operator_norm(m))
        return worst
    N = np.stack([e.gauge for e in elements])
    inv_N = np.linalg.inv(N)
    F_inv = np.linalg.inv(F)
    intervals = np.array([e.interval for e in elements])
    stride = max(1, n // max_rows)
    worst = 0.0
    for i in range(0, n, stride):
        a1, b1 = elements[i].interval
        g = N @ inv_N[i]                     # g[j] = N_j N_i^{-1}
        sv = np.linalg.svd(g, compute_uv=False)
        hit = (sv[:, -1] < (intervals[:, 1] / a1) * (1.0 - OPEN_MARGIN)) & \
              (sv[:, 0] > (intervals[:, 0] / b1) * (1.0 + OPEN_MARGIN))
        if not hit.any():
            continue
        # h_j^T h_i^{-T} = F g_j F^{-1}
        t = np.einsum("ab,nbc,cd->nad", F, g[hit], F_inv)
        worst = max(worst, float(np.max(np.linalg.svd(t, compute_uv=False)[:, 0])))
    return worst


def _interior_mask(cover: InducedCover, other: InducedCover) -> np.ndarray:
    """Flag elements whose neighbor set in the other cover cannot be truncated.

    Any element of the other family meeting this one has its radial annulus
    inside this element's annulus padded by the other elements' worst radial
    thickness; requiring the padded annulus to sit inside the other window's
    covered annulus therefore rules out missing neighbors.
    """
    pad = max((e.rho_max / e.rho_min for e in other.elements), default=1.0)
    lo = other.r_min * (1.0 - 1e-9)
    hi = other.r_max * (1.0 + 1e-9)
    return np.array([e.rho_min / pad >= lo and e.rho_max * pad <= hi
                     for e in cover.elements])


def _intersection_matrix(elements) -> np.ndarray:
    n = len(elements)
    if all(e.gauge is not None for e in elements):
        N = np.stack([e.gauge for e in elements])
        mat = np.zeros((n, n), dtype=bool)
        inv_n = np.linalg.inv(N)
        for i in range(n):
            a1, b1 = elements[i].interval
            g = N @ inv_n[i]
            sv = np.linalg.svd(g, compute_uv=False)
            lohi = np.array([e.interval for e in elements])
            mat[i] = (sv[:, -1] < (lohi[:, 1] / a1) * (1.0 - OPEN_MARGIN)) & \
                     (sv[:, 0] > (lohi[:, 0] / b1) * (1.0 + OPEN_MARGIN))
        return mat
    mat = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i, n):
            hit = intersects(elements[i], elements[j], 512).intersecting
            mat[i, j] = mat[j, i] = hit
    return mat


# ---------------------------------------------------------------------------
# properness and support diagnostics


@dataclass(frozen=True)
class PropernessResult:
    bounded: bool
    max_norm: float = 0.0
    member_indices: tuple = ()
    growth: tuple = ()   # member count per expanding window


def properness_check(spec: mg.GroupSpec, c_interval=(1.0, 4.0),
                     max_window: int = 12, step: float | None = None) -> PropernessResult:
    """Record {h : h^T C cap C != empty} over expanding coordinate windows.

    Bounded when the member set stabilizes (no new members in the outer
    half of the largest window); otherwise reports the growth trend.
    """
    step = step if step is not None else default_step(spec)
    family = mg.enumerate_family(spec, max_window, step=step)
    F = (np.asarray(spec.freq_basis) if spec.freq_basis is not None
         else np.eye(spec.dim))
    F_inv = np.linalg.inv(F)
    r0, r1 = c_interval
    members = []
    for idx, el in zip(family.indices, family.elements):
        # h^T C is the gauge shell with N = F^{-1} h^{-T}; C is compact,
        # so touching counts
        N = F_inv @ np.linalg.inv(np.asarray(el.matrix)).T
        if gauge_shells_intersect(N, c_interval, F_inv, c_interval, closed=True):
            members.append((idx, mg.operator_norm(np.asarray(el.matrix))))
    if not members:
        return PropernessResult(bounded=True, max_norm=0.0)
    radius = lambda idx: max(abs(i) for i in idx) if idx else 0
    counts = []
    for w in range(1, max_window + 1):
        counts.append(sum(1 for idx, _ in members if radius(idx) <= w))
    new_outer = counts[-1] - counts[max_window // 2 - 1]
    if new_outer == 0:
        return PropernessResult(bounded=True,
                                max_norm=max(n for _, n in members),
                                member_indices=tuple(idx for idx, _ in members),
                                growth=tuple(counts))
    return PropernessResult(bounded=False, max_norm=max(n for _, n in members),
                            member_indices=tuple(idx for idx, _ in members),
                            growth=tuple(counts))


@dataclass(frozen=True)
class BumpFunction:
    """Continuous compactly supported bump amp * (1 - |x-c|^2/r^2)^3."""

    center: np.ndarray
    radius: float
    amplitude: float = 1.0

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        q = 1.0 - np.sum((pts - self.center) ** 2, axis=1) / self.radius ** 2
        return self.amplitude * np.clip(q, 0.0, None) ** 3


@dataclass(frozen=True)
class DivergenceResult:
    divergent: bool
    value: float
    partials: tuple


def support_divergence_test(spec: mg.GroupSpec, c_interval, f,
                            max_window: int = 24, step: float | None = None,
                            net_size: int = 512) -> DivergenceResult:
    """Integrate sup_{xi in C} f(h^T xi) over expanding group windows.

    A divergent trend (last-quarter increment above 10% of the total)
    falsifies a wrong support candidate; bumps supported inside the true
    support integrate to a finite value.
    """
    step = step if step is not None else default_step(spec)
    family = mg.enumerate_family(spec, max_window, step=step)
    F = (np.asarray(spec.freq_basis) if spec.freq_basis is not None
         else np.eye(spec.dim))
    net = gauge_shell_points(np.linalg.inv(F), c_interval, net_size)
    radius = lambda idx: max(abs(i) for i in idx) if idx else 0
    cell = step ** spec.n_params if spec.kind != mg.CYCLIC else 1.0
    if spec.kind == mg.CYCLIC:
        cell = 1.0
    contributions = {}
    for idx, el in zip(family.indices, family.elements):
        vals = f(net @ np.asarray(el.matrix))  # h^T xi for xi in net (row form)
        contributions[idx] = float(np.max(vals)) * cell
    partials = []
    total = 0.0
    for w in range(1, max_window + 1):
        total = sum(v for idx, v in contributions.items() if radius(idx) <= w)
        partials.append(total)
    if total <= 0.0:
        return DivergenceResult(divergent=False, value=0.0,
                                partials=tuple(partials))
    q3 = partials[3 * max_window // 4 - 1]
    divergent = (partials[-1] - q3) > 0.10 * partials[-1]
    return DivergenceResult(divergent=divergent, value=float(partials[-1]),
                            partials=tuple(partials))


# ---------------------------------------------------------------------------
# connected hull (compact connected superset inside an open region)


@dataclass(frozen=True)
class ConnectedHull:
    balls: tuple      # (center, radius) pairs
    paths: tuple      # polylines (arrays of points)


def connected_hull(points, region, ball_radius: float | None = None,
                   grid_size: int = 48, pad: float | None = None) -> ConnectedHull:
    """Balls around the points joined by grid paths staying in the region."""
    pts = [np.asarray(p, dtype=float) for p in points]
    if not pts:
        raise ValueError("need at least one point")
    d = pts[0].size
    for p in pts:
        if not region(p):
            raise RegionDisconnectedOrTooTight("input point outside the region")
    if ball_radius is None:
        ball_radius = _auto_ball_radius(pts, region)
    balls = tuple((p, ball_radius) for p in pts)
    if len(pts) == 1:
        return ConnectedHull(balls=balls, paths=())

    if pad is None:
        # leave room for detours comparable to the configuration size
        diameter = max(float(np.linalg.norm(a - b))
                       for a in pts for b in pts)
        pad = 0.6 * diameter + 0.5
    lo = np.min(np.stack(pts), axis=0) - pad
    hi = np.max(np.stack(pts), axis=0) + pad
    shape = (grid_size,) * d
    axes = [np.linspace(lo[i], hi[i], grid_size) for i in range(d)]

    def to_cell(p):
        return tuple(int(np.clip(np.searchsorted(axes[i], p[i]) - 1, 0,
                                 grid_size - 1)) for i in range(d))

    def center(cell):
        return np.array([axes[i][cell[i]] for i in range(d)])

    def passable(cell):
        return bool(region(center(cell)))

    from collections import deque
    paths = []
    start = to_cell(pts[0])
    if not passable(start):
        raise RegionDisconnectedOrTooTight("start cell falls outside the region")
    for target_pt in pts[1:]:
        goal = to_cell(target_pt)
        prev = {start: None}
        q = deque([start])
        found = False
        while q:
            cur = q.popleft()
            if cur == goal:
                found = True
                break
            for axis in range(d):
                for delta in (-1, 1):
                    nxt = list(cur)
                    nxt[axis] += delta
                    if not 0 <= nxt[axis] < grid_size:
                        continue
                    nxt = tuple(nxt)
                    if nxt in prev or not passable(nxt):
                        continue
                    prev[nxt] = cur
                    q.append(nxt)
        if not found:
            raise RegionDisconnectedOrTooTight(
                "no in-region grid path between hull points")
        chain = [goal]
        while prev[chain[-1]] is not None:
            chain.append(prev[chain[-1]])
        poly = np.stack([pts[0]] + [center(c) for c in reversed(chain)]
                        + [target_pt])
        paths.append(poly)
    return ConnectedHull(balls=balls, paths=tuple(paths))


def _auto_ball_radius(pts, region, n_dirs: int = 32):
    d = pts[0].size
    dirs = sphere_directions(d, n_dirs)
    r = 0.25
    for _ in range(20):
        ok = all(all(region(p + r * u) for u in dirs) for p in pts)
        if ok:
            return r
        r *= 0.5
    raise RegionDisconnectedOrTooTight("no ball radius fits inside the region")


# ---------------------------------------------------------------------------
# support equality


@dataclass(frozen=True)
class SupportComparison:
    equal: bool
    witness: np.ndarray | None = None
    witness_side: str = ""
    samples: int = 0
    initial_misses_a: int = 0
    initial_misses_b: int = 0


def support_equality_test(spec_a: mg.GroupSpec, spec_b: mg.GroupSpec,
                          window: int = 8, budget: int = 256,
                          params_a: CoverParams | None = None,
                          params_b: CoverParams | None = None) -> SupportComparison:
    """Compare the covered frequency regions of two groups by sampling.

    A point counts as a genuine miss only if it stays uncovered after the
    miss side's window is grown twice while the other side covers it.
    """
    ca = build_induced_cover(spec_a, window, params_a)
    cb = build_induced_cover(spec_b, window, params_b)
    pts = np.vstack([annulus_samples(ca, budget // 2),
                     annulus_samples(cb, budget // 2)])
    r_lo = max(ca.r_min, cb.r_min)
    r_hi = min(ca.r_max, cb.r_max)
    norms = np.linalg.norm(pts, axis=1)
    pts = pts[(norms >= r_lo) & (norms <= r_hi)]
    # claimed supports disagreeing on a sample point is an immediate witness
    for p in pts:
        sa, sb = spec_a.support_contains(p), spec_b.support_contains(p)
        if sa != sb:
            return SupportComparison(equal=False, witness=np.asarray(p),
                                     witness_side="second" if sa else "first",
                                     samples=len(pts))
    in_a = ca.covers_points(pts)
    in_b = cb.covers_points(pts)
    miss_a = int(np.sum(in_b & ~in_a))
    miss_b = int(np.sum(in_a & ~in_b))

    for side, cover, spec, par, other_hits, own_hits in (
            ("first", ca, spec_a, params_a, in_b, in_a),
            ("second", cb, spec_b, params_b, in_a, in_b)):
        suspects = pts[other_hits & ~own_hits]
        if suspects.size == 0:
            continue
        grown = cover
        still = suspects
        for factor in (2, 4):
            grown = build_induced_cover(spec, window * factor, par)
            still = still[~grown.covers_points(still)]
            if still.size == 0:
                break
        if still.size > 0:
            return SupportComparison(equal=False, witness=still[0],
                                     witness_side=side, samples=len(pts),
                                     initial_misses_a=miss_a,
                                     initial_misses_b=miss_b)
    return SupportComparison(equal=True, samples=len(pts),
                             initial_misses_a=miss_a, initial_misses_b=miss_b)
