"""Word-ball growth functions and the linear-growth test."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import matgroup as mg


@dataclass(frozen=True)
class GrowthReport:
    radii: tuple
    volumes: tuple
    exponent: float
    residual: float
    verdict: str          # Linear | PolynomialDegree(k) | SuperPolynomialTrend
    truncated: bool = False

    def to_json(self) -> dict:
        return {"radii": list(self.radii), "volumes": list(self.volumes),
                "exponent": self.exponent, "residual": self.residual,
                "verdict": self.verdict, "truncated": self.truncated}


def _ball_volume(spec: mg.GroupSpec, W: mg.GeneratingSet, r: float) -> float:
    """Chart volume of the closed word ball of radius r."""
    if spec.kind == mg.CYCLIC:
        return 2.0 * math.floor(r) + 1.0
    if spec.kind in (mg.ONE_PARAMETER, mg.SCALAR_SIMILITUDE):
        (d,) = W.half_widths(1)
        return 2.0 * r * d
    if spec.kind == mg.ABELIAN_FLOW:
        b = W.half_widths(len(spec.generators))
        return float(np.prod(2.0 * r * b))
    if spec.kind == mg.SIMILITUDE:
        b = W.half_widths(2)
        scale = 2.0 * r * b[0]
        if spec.dim == 2:
            rot = min(2.0 * math.pi, 2.0 * r * b[1])
        else:
            # normalized rotation chart saturates at total measure 1
            rot = min(1.0, (2.0 * r * b[1] / (2.0 * math.pi)) ** 3)
        return scale * rot
    raise mg.GroupError(f"no chart volume for kind {spec.kind!r}")


def _bfs_ball_counts(spec: mg.GroupSpec, W: mg.GeneratingSet, radii):
    cap = int(math.ceil(max(radii)))
    gens = [np.asarray(e.matrix) for e in W.elements]
    if not gens:
        raise mg.GroupError("discrete growth needs an explicit generating set")
    seen = {mg.quantize_key(np.eye(spec.dim)): 0}
    frontier = deque([(np.eye(spec.dim), 0)])
    truncated = False
    while frontier:
        m, depth = frontier.popleft()
        if depth >= cap:
            truncated = truncated or depth >= W.bfs_cap
            continue
        if depth >= W.bfs_cap:
            truncated = True
            continue
        for s in gens:
            nxt = m @ s
            key = mg.quantize_key(nxt)
            if key not in seen:
                seen[key] = depth + 1
                frontier.append((nxt, depth + 1))
    depths = np.array(sorted(seen.values()))
    counts = [float(np.sum(depths <= math.floor(r))) for r in radii]
    return counts, truncated


def growth_function(spec: mg.GroupSpec, W: mg.GeneratingSet, radii) -> GrowthReport:
    """Haar volume of word balls over the given radii, with a log-log fit.

    Structured families use exact chart volumes; discrete groups count BFS
    balls with quantized matrix hashing.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 5 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("need >= 5 strictly increasing radii")
    if max(radii) < 10.0 * min(radii):
        raise ValueError("radii should span at least a decade")
    truncated = False
    if spec.kind == mg.DISCRETE_FG:
        volumes, truncated = _bfs_ball_counts(spec, W, radii)
    else:
        volumes = [_ball_volume(spec, W, r) for r in radii]
    if any(v <= 0 for v in volumes):
        raise ValueError("degenerate ball volumes")
    logs_r = np.log(np.asarray(radii))
    logs_v = np.log(np.asarray(volumes))
    slope, intercept = np.polyfit(logs_r, logs_v, 1)
    fit = slope * logs_r + intercept
    residual = float(np.max(np.abs(fit - logs_v)))
    if residual < 0.1:
        if 0.8 <= slope <= 1.2:
            verdict = "Linear"
        else:
            verdict = f"PolynomialDegree({int(round(slope))})"
    else:
        verdict = "SuperPolynomialTrend"
    return GrowthReport(radii=tuple(radii), volumes=tuple(volumes),
                        exponent=float(slope), residual=residual,
                        verdict=verdict, truncated=truncated)


@dataclass(frozen=True)
class LinearGrowthResult:
    linear: bool
    exponent: float
    subgroup_direction: np.ndarray | None = None
    note: str = ""

    @property
    def status(self) -> str:
        return "Linear" if self.linear else f"NotLinear({self.exponent:.2f})"


def default_radii():
    # large enough that counting-measure quantization and compact-factor
    # saturation do not bias the log-log fit
    return tuple(np.geomspace(10.0, 200.0, 8))


def linear_growth_test(spec: mg.GroupSpec, W: mg.GeneratingSet | None = None,
                       radii=None) -> LinearGrowthResult:
    """Linear iff the fitted exponent sits in [0.8, 1.2] with small residual.

    A linear verdict licenses a search for a cocompact one-parameter
    subgroup among chart directions; the infinitesimal direction is
    reported when found.
    """
    W = W or (mg.box_generating_set([1.0] * spec.n_params)
              if spec.kind != mg.DISCRETE_FG
              else mg.list_generating_set(spec, spec.generators))
    report = growth_function(spec, W, radii or default_radii())
    linear = report.verdict == "Linear"
    if not linear:
        return LinearGrowthResult(linear=False, exponent=report.exponent)
    direction = None
    note = ""
    if spec.kind == mg.ONE_PARAMETER:
        direction = np.asarray(spec.generator)
    elif spec.kind in (mg.SCALAR_SIMILITUDE, mg.SIMILITUDE):
        direction = np.eye(spec.dim)
        note = "scalar flow direction; rotation factor is compact"
    elif spec.kind == mg.CYCLIC:
        try:
            import scipy.linalg
            L = scipy.linalg.logm(np.asarray(spec.matrix))
            if np.linalg.norm(L.imag) < 1e-8:
                direction = L.real
            else:
                note = "generator has no real logarithm; direction NotFound"
        except Exception:
            note = "direction NotFound"
    elif spec.kind == mg.ABELIAN_FLOW and len(spec.generators) == 1:
        direction = np.asarray(spec.generators[0])
    else:
        note = "no chart direction search for this family; NotFound"
    return LinearGrowthResult(linear=True, exponent=report.exponent,
                              subgroup_direction=direction, note=note)
