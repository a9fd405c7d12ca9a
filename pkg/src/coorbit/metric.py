"""Chain metrics on covers, orbit maps, and quasi-isometry certificate fitting."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import cover as cv
from . import matgroup as mg

R1_GRID_MAX = 64.0
R1_GRID_STEP = 2.0 ** 0.125


class PointNotCovered(RuntimeError):
    """A query point lies in no cover element (distinct from distance inf)."""


@dataclass(frozen=True)
class ChainGraph:
    """Intersection graph of cover elements; self-loops are implicit."""

    n_nodes: int
    adjacency: tuple          # tuple of sorted neighbor tuples
    exact: np.ndarray         # per-edge exactness summary (bool matrix)

    def neighbors(self, i: int):
        return self.adjacency[i]


def build_chain_graph(cover: cv.InducedCover, budget: int = 512) -> ChainGraph:
    n = len(cover)
    all_gauge = all(e.gauge is not None for e in cover.elements)
    exact = np.ones((n, n), dtype=bool)
    if all_gauge:
        mat = cv._intersection_matrix(cover.elements)
    else:
        mat = np.zeros((n, n), dtype=bool)
        for i in range(n):
            for j in range(i, n):
                st = cv.intersects(cover.elements[i], cover.elements[j], budget)
                mat[i, j] = mat[j, i] = st.intersecting
                exact[i, j] = exact[j, i] = st.exact
    np.fill_diagonal(mat, True)
    adjacency = tuple(tuple(int(j) for j in np.nonzero(mat[i])[0]) for i in range(n))
    return ChainGraph(n_nodes=n, adjacency=adjacency, exact=exact)


@dataclass(frozen=True)
class DistanceTable:
    """BFS hop counts from a source node set."""

    source: tuple
    distances: np.ndarray

    def to_rows(self):
        return [(int(i), float(d)) for i, d in enumerate(self.distances)]


def distance_table(graph: ChainGraph, sources) -> DistanceTable:
    dist = np.full(graph.n_nodes, math.inf)
    q = deque()
    for s in sorted(set(int(s) for s in sources)):
        dist[s] = 0.0
        q.append(s)
    while q:
        u = q.popleft()
        for v in graph.neighbors(u):
            if dist[v] == math.inf:
                dist[v] = dist[u] + 1.0
                q.append(v)
    return DistanceTable(source=tuple(sorted(set(int(s) for s in sources))),
                         distances=dist)


def chain_distance(cover: cv.InducedCover, xi, eta, maxlen: int = 10 ** 6,
                   graph: ChainGraph | None = None) -> float:
    """Least number of overlapping cover sets joining xi to eta.

    Two distinct points sharing one element have distance 1; equal points
    have distance 0.  Points contained in no element raise PointNotCovered.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.array_equal(xi, eta):
        return 0.0
    src = cover.containing_indices(xi)
    dst = cover.containing_indices(eta)
    if not src:
        raise PointNotCovered(f"point {xi.tolist()} lies in no cover element")
    if not dst:
        raise PointNotCovered(f"point {eta.tolist()} lies in no cover element")
    if set(src) & set(dst):
        return 1.0
    graph = graph or build_chain_graph(cover)
    table = distance_table(graph, src)
    hops = min(table.distances[j] for j in dst)
    m = hops + 1.0
    return m if m <= maxlen else math.inf


def orbit_map(h, xi) -> np.ndarray:
    """Frequency-side orbit map (h, xi) -> h^{-T} xi."""
    return mg.dual_action(h, xi)


def quasi_inverse_orbit(cover: cv.InducedCover, eta):
    """Deterministic right inverse of the orbit map.

    Picks the lowest containing index, preferring elements whose pullback
    lands in the compact base shell C; returns (h_i, h_i^T eta), which the
    orbit map sends back to eta exactly.
    """
    eta = np.asarray(eta, dtype=float)
    hits = cover.containing_indices(eta, interval=cover.c_interval)
    if not hits:
        hits = cover.containing_indices(eta)
    if not hits:
        raise PointNotCovered(f"point {eta.tolist()} lies in no cover element")
    i = hits[0]
    h = cover.elements[i].element
    return h, np.asarray(h.matrix).T @ eta


@dataclass(frozen=True)
class QICertificate:
    """Two-sided affine distance bounds plus a density constant.

    Certified requires zero violations of r1^{-1} d - r2 <= d' <= r1 d + r2
    on every sampled pair of the largest window, with the constants fitted
    on the smallest window.
    """

    r1: float
    r2: float
    r3: float
    verdict: str                    # "Certified" | "ViolatedTrend"
    residuals: tuple                # (window, max violation of fitted bounds)
    r2_by_window: tuple
    witness: tuple | None = None    # (d_x, d_y) of the worst violating pair

    @property
    def certified(self) -> bool:
        return self.verdict == "Certified"

    def to_json(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "r3": self.r3,
                "verdict": self.verdict,
                "residuals": [{"window": int(w), "maxViolation": float(v)}
                              for w, v in self.residuals]}


def _required_r2(r1: float, dx: np.ndarray, dy: np.ndarray) -> float:
    upper = np.max(dy - r1 * dx, initial=0.0)
    lower = np.max(dx / r1 - dy, initial=0.0)
    return float(max(upper, lower, 0.0))


def fit_quasi_isometry(pairs_by_window: dict, density_by_window: dict | None = None,
                       min_pairs: int = 100, growth_threshold: float = 0.25
                       ) -> QICertificate:
    """Fit quasi-isometry constants from paired finite distance samples.

    ``pairs_by_window`` maps window size -> (d_domain, d_codomain) arrays;
    ``density_by_window`` maps window -> distances from a codomain net to
    the image (r3 is their maximum).  r1 ranges over a geometric grid on
    [1, 64]; given r1, the minimal r2 is exact.  Constants are fitted on
    the smallest window and the verdict reports whether they survive the
    larger ones unchanged.
    """
    windows = sorted(pairs_by_window)
    if not windows:
        raise ValueError("need at least one window of distance pairs")
    cleaned = {}
    for w in windows:
        dx, dy = pairs_by_window[w]
        dx = np.asarray(dx, dtype=float)
        dy = np.asarray(dy, dtype=float)
        keep = np.isfinite(dx) & np.isfinite(dy)
        if keep.sum() < min_pairs:
            raise ValueError(f"window {w}: fewer than {min_pairs} finite pairs")
        cleaned[w] = (dx[keep], dy[keep])

    grid = [1.0]
    while grid[-1] < R1_GRID_MAX:
        grid.append(min(grid[-1] * R1_GRID_STEP, R1_GRID_MAX))

    base_dx, base_dy = cleaned[windows[0]]
    best = None
    for r1 in grid:
        r2 = _required_r2(r1, base_dx, base_dy)
        if best is None or r2 < best[1] - 1e-12:
            best = (r1, r2)
    r1, r2 = best

    r2_by_window = []
    residuals = []
    witness = None
    worst = 0.0
    for w in windows:
        dx, dy = cleaned[w]
        r2_by_window.append((w, _required_r2(r1, dx, dy)))
        viol = np.maximum(dy - (r1 * dx + r2), (dx / r1 - r2) - dy)
        vmax = float(np.max(viol, initial=0.0))
        residuals.append((w, max(vmax, 0.0)))
        if vmax > worst:
            worst = vmax
            k = int(np.argmax(viol))
            witness = (float(dx[k]), float(dy[k]))

    r3 = 0.0
    if density_by_window:
        r3 = float(max(np.max(np.asarray(v, dtype=float), initial=0.0)
                       for v in density_by_window.values()))

    certified = all(v <= 1e-9 for _, v in residuals)
    if certified:
        verdict = "Certified"
        witness = None
    else:
        verdict = "ViolatedTrend"
    # report the per-doubling growth of the required r2 alongside
    growth_flag = False
    for (w0, a), (w1, b) in zip(r2_by_window, r2_by_window[1:]):
        if a > 0 and b > a * (1.0 + growth_threshold):
            growth_flag = True
        if a == 0 and b > max(1.0, growth_threshold):
            growth_flag = True
    if growth_flag and not certified:
        verdict = "ViolatedTrend"
    return QICertificate(r1=float(r1), r2=float(r2), r3=r3, verdict=verdict,
                         residuals=tuple(residuals),
                         r2_by_window=tuple(r2_by_window), witness=witness)


@dataclass(frozen=True)
class SandwichReport:
    """Empirical constants for the two-sided word/chain distance bounds."""

    word_from_chain: tuple   # per window: min R with d_W <= R d_Q + R
    chain_from_word: tuple   # per window: min R with d_Q <= R d_W + R
    stable: bool


def sandwich_check(spec: mg.GroupSpec, cover: cv.InducedCover,
                   xi, eta, windows=(4, 8), w: mg.GeneratingSet | None = None,
                   graph: ChainGraph | None = None) -> SandwichReport:
    """Measure the minimal constants in both orbit-map distance estimates.

    Samples pairs (g, h) from the family window, compares the word metric
    with the chain distance of the mapped points p_xi(g), p_eta(h), and
    reports whether the fitted constants are window-stable.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if not cv.membership(cover.base, xi) or not cv.membership(cover.base, eta):
        raise ValueError("base points must lie inside the base set")
    w = w or mg.box_generating_set(cover.family.step)
    graph = graph or build_chain_graph(cover)
    elems = list(zip(cover.family.indices, cover.family.elements))
    r_lower = []
    r_upper = []
    for win in windows:
        sub = [(i, e) for i, e in elems
               if max(abs(c) for c in i) <= win] if elems[0][0] else elems
        need_lo, need_hi = 1.0, 1.0
        for i_g, g in sub:
            pg = orbit_map(g, xi)
            try:
                src = cover.containing_indices(pg)
                if not src:
                    continue
                table = distance_table(graph, src)
            except PointNotCovered:
                continue
            for i_h, h in sub:
                dw = mg.word_distance(cover.spec, w, g, h)
                ph = orbit_map(h, eta)
                dst = cover.containing_indices(ph)
                if not dst:
                    continue
                if np.array_equal(pg, ph):
                    dq = 0.0
                elif set(src) & set(dst):
                    dq = 1.0
                else:
                    dq = min(table.distances[j] for j in dst) + 1.0
                if not math.isfinite(dq) or not math.isfinite(dw):
                    continue
                need_lo = max(need_lo, dw / (dq + 1.0))
                need_hi = max(need_hi, dq / (dw + 1.0))
        r_lower.append((win, need_lo))
        r_upper.append((win, need_hi))
    stable = all(b <= a * 1.25 + 1e-9 for (_, a), (_, b) in zip(r_lower, r_lower[1:])) \
        and all(b <= a * 1.25 + 1e-9 for (_, a), (_, b) in zip(r_upper, r_upper[1:]))
    return SandwichReport(word_from_chain=tuple(r_lower),
                          chain_from_word=tuple(r_upper), stable=stable)
