"""FFT-based norms: decomposition norms over induced covers, anisotropic
Besov norms for expansive matrices, discrete Calderon windows, and direct
coorbit norms for grid functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import cover as cv
from . import matgroup as mg
from .config import RunConfig

GRID_MAX = 256


class GridError(ValueError):
    pass


class TruncationError(RuntimeError):
    """Quadrature window too small for the function's frequency content."""


class InadmissibleWindow(RuntimeError):
    """Calderon sum vanishes somewhere on the test annulus."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------------------
# grid functions


@dataclass
class GridFunction:
    """Complex samples on a regular grid over [-L, L)^d.

    ``layout`` is "spatial" or "frequency"; frequency samples live on the
    unshifted FFT grid with angular frequencies 2*pi*fftfreq(N, dx).
    Quadrature weights are chosen so that the two layouts satisfy the
    Parseval identity exactly.
    """

    dim: int
    size: int
    extent: float
    values: np.ndarray
    layout: str = "spatial"

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise GridError("grid functions support d <= 3")
        if self.size & (self.size - 1) or not 8 <= self.size <= GRID_MAX:
            raise GridError("grid size must be a power of two in [8, %d]" % GRID_MAX)
        if self.values.shape != (self.size,) * self.dim:
            raise GridError("value array shape does not match the grid")
        if self.layout not in ("spatial", "frequency"):
            raise GridError("layout must be 'spatial' or 'frequency'")

    @property
    def dx(self) -> float:
        return 2.0 * self.extent / self.size

    @property
    def dxi(self) -> float:
        return math.pi / self.extent

    def spatial_weight(self) -> float:
        return self.dx ** self.dim

    def frequency_weight(self) -> float:
        return (1.0 / (2.0 * self.extent)) ** self.dim


def frequency_axes(size: int, extent: float) -> np.ndarray:
    return 2.0 * math.pi * np.fft.fftfreq(size, d=2.0 * extent / size)


@lru_cache(maxsize=8)
def _frequency_points_cached(dim: int, size: int, extent: float):
    ax = frequency_axes(size, extent)
    grids = np.meshgrid(*([ax] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    pts.setflags(write=False)
    norms = np.linalg.norm(pts, axis=1)
    norms.setflags(write=False)
    return pts, norms


def frequency_points(gf_or_dim, size=None, extent=None):
    """Flat (N^d, d) array of frequency coordinates, plus their norms."""
    if isinstance(gf_or_dim, GridFunction):
        g = gf_or_dim
        return _frequency_points_cached(g.dim, g.size, float(g.extent))
    return _frequency_points_cached(int(gf_or_dim), int(size), float(extent))


def to_frequency(g: GridFunction) -> GridFunction:
    if g.layout == "frequency":
        return g
    vals = np.fft.fftn(g.values) * g.spatial_weight()
    return GridFunction(g.dim, g.size, g.extent, vals, "frequency")


def to_spatial(g: GridFunction) -> GridFunction:
    if g.layout == "spatial":
        return g
    vals = np.fft.ifftn(g.values) / g.spatial_weight()
    return GridFunction(g.dim, g.size, g.extent, vals, "spatial")


def l2_norm(g: GridFunction) -> float:
    w = g.spatial_weight() if g.layout == "spatial" else g.frequency_weight()
    return float(math.sqrt(np.sum(np.abs(g.values) ** 2) * w))


def lp_norm(values: np.ndarray, weight: float, p) -> float:
    if p == math.inf:
        return float(np.max(np.abs(values)))
    return float((np.sum(np.abs(values) ** p) * weight) ** (1.0 / p))


def parseval_defect(g: GridFunction) -> float:
    """Relative defect between spatial and frequency L2 quadratures."""
    a = l2_norm(to_spatial(g))
    b = l2_norm(to_frequency(g))
    return abs(a - b) / max(a, b, 1e-300)


def packet(dim: int, size: int, extent: float, center, sigma,
           modulation=None) -> GridFunction:
    """Band-limited Gaussian packet defined directly in frequency."""
    pts, _ = frequency_points(dim, size, extent)
    center = np.asarray(center, dtype=float)
    vals = np.exp(-np.sum((pts - center) ** 2, axis=1) / (2.0 * float(sigma) ** 2))
    if modulation is not None:
        vals = vals * np.exp(1j * (pts @ np.asarray(modulation, dtype=float)))
    return GridFunction(dim, size, extent,
                        vals.reshape((size,) * dim).astype(complex), "frequency")


# ---------------------------------------------------------------------------
# partition of unity


def smoothstep(t: np.ndarray) -> np.ndarray:
    """C^2 polynomial step: 0 below 0, 1 above 1."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@dataclass
class PartitionOfUnity:
    """Smooth bumps subordinate to a cover, normalized to sum to one.

    Raw bumps are smoothsteps of the membership margin measured in each
    element's own gauge coordinates, so the construction is covariant
    under the group translates; supports match the elements exactly.
    """

    cover: cv.InducedCover
    width: float = 0.25
    _cache: dict = field(default_factory=dict, repr=False)

    def raw_bumps(self, pts: np.ndarray) -> np.ndarray:
        """(n_elements, n_pts) raw bump values."""
        gauges = self.cover.gauges()
        r0, r1 = self.cover.q_interval
        norms = np.linalg.norm(np.einsum("kij,nj->kni", gauges, pts), axis=2)
        margin = np.minimum(1.0 - norms / r1, norms / r0 - 1.0)
        # normalize the margin scale: full height reached `width` into the shell
        peak = 0.5 * (r1 / r0 - 1.0) / (r1 / r0 + 1.0) * 2.0
        return smoothstep(margin / (self.width * peak))

    def values_at(self, pts: np.ndarray) -> np.ndarray:
        """(n_elements, n_pts) normalized partition values."""
        b = self.raw_bumps(pts)
        s = b.sum(axis=0)
        out = np.zeros_like(b)
        hit = s > 0.0
        out[:, hit] = b[:, hit] / s[hit]
        return out

    def grid_data(self, g: GridFunction):
        """Cached (raw bump stack, bump sum, region mask) on a grid."""
        key = (g.dim, g.size, float(g.extent))
        if key not in self._cache:
            pts, norms = frequency_points(g)
            b = self.raw_bumps(pts)
            s = b.sum(axis=0)
            reach = 0.5 * g.size * g.dxi
            region = (norms >= self.cover.r_min) & \
                     (norms <= min(self.cover.r_max, reach))
            gap = region & (s <= 0.0)
            if np.any(gap):
                witness = pts[int(np.nonzero(gap)[0][0])]
                raise cv.CoverConstructionError(
                    "partition coverage gap inside the normalization region",
                    witness=witness)
            self._cache[key] = (b, s, region)
        return self._cache[key]

    def member_grid(self, g: GridFunction, i: int) -> np.ndarray:
        """Normalized member i evaluated on the grid of g (flat array)."""
        b, s, _ = self.grid_data(g)
        out = np.zeros_like(s)
        hit = s > 0.0
        out[hit] = b[i, hit] / s[hit]
        return out


def build_partition(cover: cv.InducedCover, width: float = 0.25) -> PartitionOfUnity:
    if not 0.0 < width <= 1.0:
        raise ValueError("width must lie in (0, 1]")
    return PartitionOfUnity(cover=cover, width=width)


# ---------------------------------------------------------------------------
# norm reports


@dataclass(frozen=True)
class NormReport:
    indices: tuple
    magnitudes: tuple          # per-element ||F^{-1}(phi_i fhat)||_p
    weights: tuple             # u_i
    p: float
    q: float
    value: float
    tail_fraction: float
    tail_warning: bool

    def aggregate(self, q=None) -> float:
        q = self.q if q is None else q
        terms = np.asarray(self.magnitudes) * np.asarray(self.weights)
        if q == math.inf:
            return float(np.max(terms, initial=0.0))
        return float(np.sum(terms ** q) ** (1.0 / q))

    def to_json(self) -> dict:
        return {"indices": [list(map(int, i)) for i in self.indices],
                "magnitudes": list(self.magnitudes), "weights": list(self.weights),
                "p": self.p, "q": self.q, "value": self.value,
                "tailFraction": self.tail_fraction,
                "tailWarning": self.tail_warning}


def _check_pq(p, q):
    for v in (p, q):
        if v != math.inf and not 1.0 <= v:
            raise ValueError("exponents must lie in [1, inf]")


def _tail_fraction(fhat_flat: np.ndarray, region: np.ndarray, w: float) -> float:
    total = float(np.sum(np.abs(fhat_flat) ** 2) * w)
    if total == 0.0:
        return 0.0
    inside = float(np.sum(np.abs(fhat_flat[region]) ** 2) * w)
    return math.sqrt(max(total - inside, 0.0) / total)


def decomposition_norm(f: GridFunction, pou: PartitionOfUnity, p, q,
                       weight_exponent=None) -> NormReport:
    """Weighted decomposition norm of f over the partition's cover.

    Per element: multiply the frequency data by the partition member,
    transform back, take the grid L^p norm, and weight by
    u_i = |det h_i|^(1/2 - 1/p); aggregation is l^q (max for q = inf).
    """
    _check_pq(p, q)
    fhat = to_frequency(f)
    flat = fhat.values.ravel()
    b, s, region = pou.grid_data(fhat)
    tail = _tail_fraction(flat, region, fhat.frequency_weight())
    shape = (f.size,) * f.dim
    sw = fhat.spatial_weight()
    exponent = (0.5 - (0.0 if p == math.inf else 1.0 / p)) \
        if weight_exponent is None else weight_exponent
    hit = s > 0.0
    mags, weights, indices = [], [], []
    for i, el in enumerate(pou.cover.elements):
        phi = np.zeros_like(s)
        phi[hit] = b[i, hit] / s[hit]
        piece = np.fft.ifftn((phi * flat).reshape(shape)) / sw
        mags.append(lp_norm(piece, sw, p))
        weights.append(abs(np.linalg.det(np.asarray(el.element.matrix))) ** exponent)
        indices.append(el.index)
    terms = np.asarray(mags) * np.asarray(weights)
    if q == math.inf:
        value = float(np.max(terms, initial=0.0))
    else:
        value = float(np.sum(terms ** q) ** (1.0 / q))
    return NormReport(indices=tuple(indices), magnitudes=tuple(mags),
                      weights=tuple(weights), p=p, q=q, value=value,
                      tail_fraction=tail, tail_warning=tail > 0.10)


def anisotropic_besov_norm(f: GridFunction, A, alpha: float, p, q,
                           window: int = 10,
                           params: cv.CoverParams | None = None) -> NormReport:
    """Besov-type norm built from the dilates of one window function.

    The convolution against the j-th dilate is realized in frequency as
    multiplication by the 0-th partition member of the cyclic cover of
    <A>, composed with the j-th dual power; the aggregation weights are
    |det A|^(alpha j).  Requires A expansive.
    """
    A = mg.as_matrix(A)
    if np.min(np.abs(np.linalg.eigvals(np.asarray(A)))) <= 1.0 + 1e-9:
        raise ValueError("dilation matrix must be expansive")
    spec = mg.cyclic(A)
    cover = cv.build_induced_cover(spec, window, params)
    pou = build_partition(cover)
    det = abs(np.linalg.det(np.asarray(A)))
    # cover index k corresponds to dilation index j = -k
    report = decomposition_norm(f, pou, p, q, weight_exponent=0.0)
    weights = tuple(det ** (alpha * (-idx[0])) for idx in report.indices)
    terms = np.asarray(report.magnitudes) * np.asarray(weights)
    if q == math.inf:
        value = float(np.max(terms, initial=0.0))
    else:
        value = float(np.sum(terms ** q) ** (1.0 / q))
    return NormReport(indices=report.indices, magnitudes=report.magnitudes,
                      weights=weights, p=report.p, q=report.q, value=value,
                      tail_fraction=report.tail_fraction,
                      tail_warning=report.tail_warning)


# ---------------------------------------------------------------------------
# analyzing windows and the discrete Calderon condition


@dataclass
class AnalyzingWindow:
    """Radial frequency profile normalized against the discrete dilation sum.

    ``profile`` maps radii to amplitudes and is zero outside ``support``;
    ``scale`` is the conformal dilation factor of the generating matrix,
    so the Calderon sum telescopes radially.
    """

    profile: object            # callable radii -> amplitudes (normalized)
    support: tuple             # radial support (s0, s1)
    matrix: np.ndarray
    scale: float
    deviation: float = 0.0

    def values(self, pts_or_norms: np.ndarray) -> np.ndarray:
        arr = np.asarray(pts_or_norms, dtype=float)
        radii = arr if arr.ndim == 1 else np.linalg.norm(arr, axis=1)
        return self.profile(radii)


def _conformal_scale(A) -> float:
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    c = abs(np.linalg.det(A)) ** (1.0 / d)
    if mg.operator_norm(A.T @ A - c * c * np.eye(d)) > 1e-9 * c * c:
        raise ValueError("analyzing windows require a conformal dilation "
                         "(scalar times orthogonal)")
    return c


def make_analyzing_window(raw_profile, support, A) -> AnalyzingWindow:
    """Normalize a raw radial profile to unit discrete Calderon sum.

    Divides by the square root of S(r) = sum_j raw(c^j r)^2, which is
    invariant under r -> c r, so the normalized sum telescopes to one
    wherever S is positive.
    """
    A = mg.as_matrix(A)
    if np.min(np.abs(np.linalg.eigvals(np.asarray(A)))) <= 1.0 + 1e-9:
        raise ValueError("dilation matrix must be expansive")
    c = _conformal_scale(A)
    s0, s1 = float(support[0]), float(support[1])
    if not 0.0 < s0 < s1:
        raise ValueError("invalid radial support")
    j_span = int(math.ceil(math.log(s1 / s0) / math.log(c))) + 1

    def calderon_sum(radii):
        radii = np.asarray(radii, dtype=float)
        out = np.zeros_like(radii)
        for j in range(-j_span, j_span + 1):
            out = out + np.asarray(raw_profile(radii * c ** j),
                                   dtype=float) ** 2
        return out

    def normalized(radii):
        radii = np.asarray(radii, dtype=float)
        s = calderon_sum(radii)
        vals = np.asarray(raw_profile(radii), dtype=float)
        out = np.zeros_like(vals)
        ok = s > 0.0
        out[ok] = vals[ok] / np.sqrt(s[ok])
        return out

    # admissibility needs S > 0 on a fundamental radial cell
    probe = np.geomspace(s0, s0 * c, 512)
    svals = calderon_sum(probe)
    if np.any(svals <= 0.0):
        witness = float(probe[int(np.argmin(svals))])
        raise InadmissibleWindow("Calderon sum vanishes on the annulus",
                                 witness=witness)

    # tabulate the normalized profile (log-radial interpolation) so that
    # repeated grid evaluations stay cheap; the reported deviation is
    # measured on the tabulated profile
    r_tab = np.geomspace(s0, s1, 16384)
    log_tab = np.log(r_tab)
    v_tab = normalized(r_tab)

    def tabulated(radii):
        radii = np.asarray(radii, dtype=float)
        safe = np.maximum(radii, 1e-300)
        return np.interp(np.log(safe), log_tab, v_tab, left=0.0, right=0.0)

    win = AnalyzingWindow(profile=tabulated, support=(s0, s1),
                          matrix=np.asarray(A), scale=c)
    dev = calderon_check(win, A, annulus=(s0, s0 * c))
    return AnalyzingWindow(profile=tabulated, support=(s0, s1),
                           matrix=np.asarray(A), scale=c, deviation=dev)


def calderon_check(psi: AnalyzingWindow, A, annulus=None, n_points: int = 4096
                   ) -> float:
    """Max deviation of the discrete dilation square-sum from one."""
    A = mg.as_matrix(A)
    c = _conformal_scale(A)
    s0, s1 = psi.support
    lo, hi = annulus if annulus is not None else (s0, s1)
    radii = np.geomspace(lo, hi, n_points)
    j_span = int(math.ceil(math.log(s1 / s0) / math.log(c))) + 2
    total = np.zeros_like(radii)
    for j in range(-j_span, j_span + 1):
        total = total + psi.values(radii * c ** j) ** 2
    if np.any(total <= 0.0):
        witness = float(radii[int(np.argmin(total))])
        raise InadmissibleWindow("Calderon sum vanishes on the annulus",
                                 witness=witness)
    return float(np.max(np.abs(total - 1.0)))


def partition_member_window(pou: PartitionOfUnity, A) -> AnalyzingWindow:
    """Analyzing window with |psi_hat|^2 equal to the central partition member.

    The partition sums to one over the dilation orbit, so the square sum
    of the window telescopes exactly.
    """
    cover = pou.cover
    center = [i for i, el in enumerate(cover.elements) if el.index == (0,)]
    if not center:
        raise ValueError("cover has no central element")
    i0 = center[0]
    r0, r1 = cover.q_interval
    width = pou.width

    def raw(radii):
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        pts = np.zeros((radii.size, cover.spec.dim))
        pts[:, 0] = radii
        return np.sqrt(pou.values_at(pts)[i0])

    return make_analyzing_window(raw, (r0, r1), A)


# ---------------------------------------------------------------------------
# direct coorbit norm


@dataclass(frozen=True)
class QuadratureSpec:
    window: int = 8
    step: float | None = None


def coorbit_norm_direct(f: GridFunction, spec: mg.GroupSpec,
                        psi: AnalyzingWindow, p, q,
                        quadrature: QuadratureSpec | None = None) -> float:
    """Mixed-norm aggregation of the analyzed transform over group nodes.

    For each node h, the transform slice is the inverse FFT of
    fhat * conj(psi_hat(h^T .)) * |det h|^(1/2); slices are aggregated in
    L^p over the grid and l^q over nodes with Haar weights and the
    1/|det h| left-measure factor.
    """
    _check_pq(p, q)
    if spec.kind not in (mg.CYCLIC, mg.ONE_PARAMETER, mg.SCALAR_SIMILITUDE):
        raise ValueError("direct coorbit quadrature supports cyclic, "
                         "one-parameter, and scalar similitude groups")
    quadrature = quadrature or QuadratureSpec()
    step = quadrature.step if quadrature.step is not None \
        else cv.default_step(spec)
    family = mg.enumerate_family(spec, quadrature.window, step=step)
    fhat = to_frequency(f)
    flat = fhat.values.ravel()
    pts, norms = frequency_points(fhat)
    shape = (f.size,) * f.dim
    sw = fhat.spatial_weight()

    partial = np.zeros(flat.size)
    cell = 1.0 if spec.kind == mg.CYCLIC else step
    total = 0.0
    vmax = 0.0
    for el in family.elements:
        h = np.asarray(el.matrix)
        det = abs(np.linalg.det(h))
        hnorms = np.linalg.norm(pts @ h, axis=1)
        vals = psi.values(hnorms)
        partial += vals ** 2
        piece = np.fft.ifftn((vals * math.sqrt(det) * flat).reshape(shape)) / sw
        slice_norm = lp_norm(piece, sw, p)
        w = cell * mg.haar_weight(spec, el) / det
        if q == math.inf:
            vmax = max(vmax, slice_norm)
        else:
            total += w * slice_norm ** q
    # quadrature must capture essentially all of f's frequency mass
    plateau = max(float(np.max(partial)), 1e-300)
    mass = np.abs(flat) ** 2
    captured = float(np.sum(mass * np.minimum(partial / plateau, 1.0)))
    if captured < 0.99 * float(np.sum(mass)):
        raise TruncationError("quadrature window misses frequency content; "
                              "enlarge the window")
    return vmax if q == math.inf else float(total ** (1.0 / q))


# ---------------------------------------------------------------------------
# norm comparison batteries


@dataclass(frozen=True)
class PacketSpec:
    label: float
    center: tuple
    sigma: float
    modulation: tuple | None = None

    def build(self, size: int, extent: float) -> GridFunction:
        return packet(len(self.center), size, extent, self.center, self.sigma,
                      self.modulation)

    def to_json(self) -> dict:
        out = {"label": self.label, "center": list(self.center),
               "widths": self.sigma}
        if self.modulation is not None:
            out["modulation"] = list(self.modulation)
        return out


def default_battery(dim: int, cfg: RunConfig | None = None, n: int = 20,
                    seed: int | None = None) -> list:
    """Seeded band-limited packets at assorted radii and directions."""
    cfg = cfg or RunConfig()
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    reach = 0.5 * cfg.grid_size * math.pi / cfg.grid_extent
    radii = np.geomspace(0.06 * reach, 0.55 * reach, n)
    packs = []
    for j, r in enumerate(radii):
        u = rng.normal(size=dim)
        u /= np.linalg.norm(u)
        sigma = max(0.6 * math.pi / cfg.grid_extent, 0.1 * r)
        packs.append(PacketSpec(label=float(j), center=tuple(r * u),
                                sigma=float(sigma)))
    return packs


def scale_packets(dim: int, ratio: float, count: int, base_radius: float,
                  direction=None, sigma_fraction: float = 0.25,
                  sigma_min: float = 0.55, sigma_max: float = 2.8) -> list:
    """Packets along one direction at geometrically growing radii."""
    direction = np.asarray(direction if direction is not None
                           else np.eye(dim)[0], dtype=float)
    direction = direction / np.linalg.norm(direction)
    packs = []
    for j in range(1, count + 1):
        r = base_radius * ratio ** j
        sigma = min(max(sigma_fraction * r, sigma_min), sigma_max)
        packs.append(PacketSpec(label=float(j), center=tuple(r * direction),
                                sigma=float(sigma)))
    return packs


@dataclass(frozen=True)
class RatioStats:
    labels: tuple
    ratios: tuple
    norms_a: tuple
    norms_b: tuple
    spread: float
    spread_trend: tuple
    tail_warnings: int

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "ratios": list(self.ratios),
                "normsA": list(self.norms_a), "normsB": list(self.norms_b),
                "spread": self.spread, "spreadTrend": list(self.spread_trend),
                "tailWarnings": self.tail_warnings}


def compare_norms(spec_a: mg.GroupSpec, spec_b: mg.GroupSpec, battery, p, q,
                  cfg: RunConfig | None = None,
                  params_a: cv.CoverParams | None = None,
                  params_b: cv.CoverParams | None = None,
                  size: int | None = None, extent: float | None = None,
                  window: int | None = None) -> RatioStats:
    """Decomposition-norm ratio statistics over a packet battery.

    For equivalent groups the ratio spread stays window-stable; for a
    non-equivalent pair with packets along the mismatch direction the
    cumulative spread grows with the packet scale.
    """
    cfg = cfg or RunConfig()
    size = size or cfg.grid_size
    extent = extent if extent is not None else cfg.grid_extent
    window = window or cfg.window
    cover_a = cv.build_induced_cover(spec_a, window, params_a)
    cover_b = cv.build_induced_cover(spec_b, window, params_b)
    pou_a = build_partition(cover_a)
    pou_b = build_partition(cover_b)
    labels, ratios, norms_a, norms_b = [], [], [], []
    warnings = 0
    for spec in battery:
        f = spec.build(size, extent)
        ra = decomposition_norm(f, pou_a, p, q)
        rb = decomposition_norm(f, pou_b, p, q)
        warnings += int(ra.tail_warning) + int(rb.tail_warning)
        labels.append(spec.label)
        norms_a.append(ra.value)
        norms_b.append(rb.value)
        ratios.append(ra.value / rb.value if rb.value > 0 else math.inf)
    order = np.argsort(labels)
    ratios_sorted = [ratios[i] for i in order]
    trend = []
    for k in range(1, len(ratios_sorted) + 1):
        head = ratios_sorted[:k]
        trend.append(max(head) / min(head))
    return RatioStats(labels=tuple(labels[i] for i in order),
                      ratios=tuple(ratios_sorted),
                      norms_a=tuple(norms_a[i] for i in order),
                      norms_b=tuple(norms_b[i] for i in order),
                      spread=trend[-1] if trend else 1.0,
                      spread_trend=tuple(trend), tail_warnings=warnings)
