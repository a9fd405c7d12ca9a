"""Verdict engine: weak equivalence of covers, the full comparison pipeline,
subgroup cocompactness, conjugation transport, and the scalar criteria for
one-parameter groups."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import cover as cv
from . import matgroup as mg
from . import metric as mt
from .config import RunConfig


class DomainError(ValueError):
    """Inputs violate an operation's mathematical preconditions."""


class NotSupported(RuntimeError):
    """Family combination outside the supported enumeration (not a verdict)."""


class Outcome(Enum):
    EQUIVALENT = "Equivalent"
    NOT_EQUIVALENT = "NotEquivalent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Evidence:
    """Everything a verdict rests on, each sequence tagged by its window."""

    support: cv.SupportComparison | None = None
    count_trends: tuple = ()          # (window, max_ab, max_ba)
    witness: dict | None = None
    epsilon: "EpsilonCriterion | None" = None
    qi: mt.QICertificate | None = None
    norm_ratios: dict | None = None
    notes: tuple = ()

    def to_json(self) -> dict:
        out = {
            "supportTest": None if self.support is None else {
                "equal": self.support.equal,
                "samples": self.support.samples,
                "witness": None if self.support.witness is None
                else [float(x) for x in self.support.witness],
            },
            "countTrends": [{"window": int(w), "maxAB": int(a), "maxBA": int(b)}
                            for w, a, b in self.count_trends],
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon.to_json()
        if self.qi is not None:
            out["qi"] = self.qi.to_json()
        if self.norm_ratios is not None:
            out["normRatios"] = self.norm_ratios
        if self.notes:
            out["notes"] = list(self.notes)
        return out


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    evidence: Evidence
    config: dict

    def to_json(self) -> dict:
        witnesses = []
        if self.evidence.witness is not None:
            witnesses.append(self.evidence.witness)
        if self.evidence.support is not None and not self.evidence.support.equal:
            witnesses.append({
                "kind": "support",
                "point": [float(x) for x in self.evidence.support.witness],
                "side": self.evidence.support.witness_side,
            })
        return {"outcome": self.outcome.value,
                "witnesses": witnesses,
                "evidence": self.evidence.to_json(),
                "config": self.config}


# ---------------------------------------------------------------------------
# weak equivalence


@dataclass(frozen=True)
class WeakEquivalenceResult:
    status: str                  # WeaklyEquivalent | NotWeaklyEquivalent | Inconclusive
    trends: tuple                # (window, max_ab, max_ba)
    max_count: int = 0
    witness: dict | None = None


def weak_equivalence_test(spec_a: mg.GroupSpec, spec_b: mg.GroupSpec,
                          windows, budget: int = 512,
                          params_a: cv.CoverParams | None = None,
                          params_b: cv.CoverParams | None = None
                          ) -> WeakEquivalenceResult:
    """Directed interior neighbor-count maxima over nested windows.

    Identical maxima over every window in both directions certify weak
    equivalence at desk scale; a strict increase across all windows in
    either direction is the non-equivalence witness; anything in between
    stays inconclusive.
    """
    trends = []
    growth_indices = []
    for w in windows:
        ca = cv.build_induced_cover(spec_a, w, params_a)
        cb = cv.build_induced_cover(spec_b, w, params_b)
        tab = cv.neighbor_counts(ca, cb, budget)
        if not tab.interior_a.any() or not tab.interior_b.any():
            raise ValueError(f"window {w} too small to contain interior indices")
        trends.append((w, tab.max_interior_ab, tab.max_interior_ba))
        masked = np.where(tab.interior_a, tab.counts_ab, -1)
        growth_indices.append(ca.elements[int(np.argmax(masked))].index)
    ab = [t[1] for t in trends]
    ba = [t[2] for t in trends]
    if all(x == ab[0] for x in ab) and all(x == ba[0] for x in ba):
        return WeakEquivalenceResult(status="WeaklyEquivalent",
                                     trends=tuple(trends),
                                     max_count=max(ab[-1], ba[-1]))
    grew_ab = all(x < y for x, y in zip(ab, ab[1:]))
    grew_ba = all(x < y for x, y in zip(ba, ba[1:]))
    if grew_ab or grew_ba:
        witness = {"kind": "count_growth",
                   "direction": "ab" if grew_ab else "ba",
                   "maxima": ab if grew_ab else ba,
                   "windows": [int(t[0]) for t in trends],
                   "indices": [list(map(int, idx)) for idx in growth_indices]}
        return WeakEquivalenceResult(status="NotWeaklyEquivalent",
                                     trends=tuple(trends), witness=witness)
    return WeakEquivalenceResult(status="Inconclusive", trends=tuple(trends))


# ---------------------------------------------------------------------------
# scalar criteria


@dataclass(frozen=True)
class EpsilonCriterion:
    """Boundedness data for the determinant-matched power comparison."""

    epsilon: float
    k_max: int
    log_norms: tuple             # log ||A^{-k} B^{floor(eps k)}||, k = -K..K
    bounded: bool
    rate: float                  # fitted exponential growth rate (0 when bounded)

    def norm_at(self, k: int) -> float:
        return math.exp(self.log_norms[k + self.k_max])

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "kMax": self.k_max,
                "bounded": self.bounded, "rate": self.rate,
                "logNorms": [float(x) for x in self.log_norms]}


def _eig_moduli_side(M) -> int:
    mod = np.abs(np.linalg.eigvals(np.asarray(M, dtype=float)))
    if np.all(mod > 1.0 + 1e-9):
        return +1
    if np.all(mod < 1.0 - 1e-9):
        return -1
    return 0


def epsilon_criterion(A, B, k_max: int = 40) -> EpsilonCriterion:
    """Track s_k = ||A^{-k} B^{floor(eps k)}|| with eps = ln|det A|/ln|det B|.

    Products are accumulated with periodic renormalization and logarithmic
    bookkeeping so large windows cannot overflow.  Bounded verdict: the
    maximum over the outer half of the window exceeds the inner-half
    maximum by at most 1%.
    """
    A = mg.as_matrix(A)
    B = mg.as_matrix(B, A.shape[0])
    det_a, det_b = abs(np.linalg.det(A)), abs(np.linalg.det(B))
    if abs(math.log(det_a)) < 1e-12 or abs(math.log(det_b)) < 1e-12:
        raise DomainError("both determinants must have modulus != 1")
    side_a, side_b = _eig_moduli_side(A), _eig_moduli_side(B)
    if side_a == 0 or side_b == 0 or side_a != side_b:
        raise DomainError("matrices must be both expansive or both contractive")
    eps = math.log(det_a) / math.log(det_b)

    A_inv = np.linalg.inv(np.asarray(A))
    B_inv = np.linalg.inv(np.asarray(B))

    # walk k = 1..K and k = -1..-K separately, keeping exact products
    logs_pos = _epsilon_walk(A_inv, np.asarray(B), B_inv, eps, k_max, +1)
    logs_neg = _epsilon_walk(A_inv, np.asarray(B), B_inv, eps, k_max, -1)
    log_norms = tuple(list(reversed(logs_neg)) + [0.0] + logs_pos)

    ks = np.arange(-k_max, k_max + 1)
    inner = np.abs(ks) <= k_max // 2
    outer = ~inner
    arr = np.array(log_norms)
    max_inner = float(np.max(arr[inner]))
    max_outer = float(np.max(arr[outer]))
    bounded = max_outer <= max_inner + math.log(1.01)
    rate = 0.0
    if not bounded:
        sel = np.abs(ks) >= k_max // 2
        rate = float(np.polyfit(np.abs(ks[sel]), arr[sel], 1)[0])
    return EpsilonCriterion(epsilon=float(eps), k_max=k_max,
                            log_norms=log_norms, bounded=bounded, rate=rate)


def _epsilon_walk(A_inv, B, B_inv, eps, k_max, direction):
    d = A_inv.shape[0]
    M = np.eye(d)
    log_scale = 0.0
    m_prev = 0
    logs = []
    A_step = A_inv if direction > 0 else np.linalg.inv(A_inv)
    for step in range(1, k_max + 1):
        k = direction * step
        M = A_step @ M
        m_new = math.floor(eps * k + 1e-12)
        delta, m_prev = m_new - m_prev, m_new
        step_mat = B if delta > 0 else B_inv
        for _ in range(abs(delta)):
            M = M @ step_mat
        nrm = mg.operator_norm(M)
        if nrm > 1e100 or nrm < 1e-100:
            log_scale += math.log(nrm)
            M = M / nrm
            nrm = 1.0
        logs.append(log_scale + math.log(mg.operator_norm(M)))
    return logs


@dataclass(frozen=True)
class IsotropyResult:
    equivalent_to_scalar: bool
    scale: float
    max_norm: float
    rate: float
    ts: tuple
    norms: tuple


def one_param_isotropy_test(X, t_max: float = 50.0, n_samples: int = 48
                            ) -> IsotropyResult:
    """Split X = s*I + Y and test whether exp(R*Y) stays bounded.

    The norm profile max(||exp(tY)||, ||exp(-tY)||) is evaluated on
    log-spaced times; stabilization under the 1% window rule certifies
    equivalence to the scalar flow, otherwise the exponential growth rate
    is fitted from the upper half of the profile.
    """
    X = mg.as_matrix(X)
    pre = mg.check_one_parameter_admissible(X)
    if not pre.admissible:
        raise DomainError(f"generator is not admissible (witness {pre.witness})")
    d = X.shape[0]
    s = float(np.trace(X)) / d
    Y = np.asarray(X) - s * np.eye(d)
    ts = np.logspace(-1.0, math.log10(t_max), n_samples)
    norms = np.array([max(mg.operator_norm(mg.mat_exp(t * Y)),
                          mg.operator_norm(mg.mat_exp(-t * Y))) for t in ts])
    half = n_samples // 2
    max_inner = float(np.max(norms[:half]))
    max_outer = float(np.max(norms[half:]))
    bounded = max_outer <= max_inner * 1.01
    rate = 0.0
    if not bounded:
        rate = float(np.polyfit(ts[half:], np.log(norms[half:]), 1)[0])
    return IsotropyResult(equivalent_to_scalar=bounded, scale=s,
                          max_norm=float(np.max(norms)), rate=rate,
                          ts=tuple(float(t) for t in ts),
                          norms=tuple(float(v) for v in norms))


@dataclass(frozen=True)
class IrreduciblePartnerResult:
    possible: bool
    reason: str = ""
    invariant_subspace: np.ndarray | None = None
    eigenvalue: complex | None = None
    isotropy: IsotropyResult | None = None


def irreducible_partner_test(X) -> IrreduciblePartnerResult:
    """Decide whether any irreducibly acting group could share the scale.

    A one-parameter group not equivalent to the scalar flow admits no
    irreducibly admissible partner; for diagonalizable generators the
    eigenspace of a deficient eigenvalue is reported as the invariant
    proper subspace obstructing transitivity.
    """
    iso = one_param_isotropy_test(X)
    if iso.equivalent_to_scalar:
        return IrreduciblePartnerResult(possible=True,
                                        reason="scalar-equivalent flow",
                                        isotropy=iso)
    X = np.asarray(mg.as_matrix(X))
    vals, vecs = np.linalg.eig(X)
    subspace = None
    eigenvalue = None
    if np.linalg.matrix_rank(vecs, tol=1e-10) == X.shape[0]:
        groups: list[list[int]] = []
        for i, lam in enumerate(vals):
            for grp in groups:
                if abs(vals[grp[0]] - lam) < 1e-8:
                    grp.append(i)
                    break
            else:
                groups.append([i])
        proper = [g for g in groups if len(g) < X.shape[0]]
        if proper:
            grp = min(proper, key=len)
            eigenvalue = complex(vals[grp[0]])
            basis = vecs[:, grp]
            real_basis = np.hstack([basis.real, basis.imag])
            q, r = np.linalg.qr(real_basis)
            keep = np.abs(np.diag(r)) > 1e-10
            subspace = q[:, keep]
    return IrreduciblePartnerResult(possible=False,
                                    reason="not equivalent to the scalar flow",
                                    invariant_subspace=subspace,
                                    eigenvalue=eigenvalue, isotropy=iso)


# ---------------------------------------------------------------------------
# subgroup cocompactness


@dataclass(frozen=True)
class CocompactResult:
    status: str            # Cocompact | NotCocompact | NotSubgroup
    witness: object = None
    detail: str = ""


def _flow_generators(spec: mg.GroupSpec):
    if spec.kind == mg.ONE_PARAMETER:
        return [np.asarray(spec.generator)]
    if spec.kind == mg.SCALAR_SIMILITUDE:
        return [np.eye(spec.dim)]
    if spec.kind == mg.ABELIAN_FLOW:
        return [np.asarray(X) for X in spec.generators]
    return None


def _in_span(target, basis, tol=1e-8):
    A = np.stack([b.ravel() for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(A, target.ravel(), rcond=None)
    residual = np.linalg.norm(A @ coef - target.ravel())
    return (coef, residual <= tol * max(1.0, np.linalg.norm(target)))


def _log_in_flow(M, basis, tol=1e-8):
    """Coefficients t with exp(sum t_i X_i) = M, or None."""
    try:
        L = _principal_log(M)
    except ValueError:
        return None
    coef, ok = _in_span(L, basis, tol)
    if not ok:
        return None
    acc = sum(c * b for c, b in zip(coef, basis))
    if mg.operator_norm(mg.mat_exp(acc) - M) > tol * max(1.0, mg.operator_norm(M)):
        return None
    return coef


def _principal_log(M):
    import scipy.linalg
    M = np.asarray(M, dtype=float)
    eig = np.linalg.eigvals(M)
    if np.any(eig.real <= 0) and np.any(np.abs(eig.imag) < 1e-12):
        raise ValueError("principal logarithm undefined")
    L = scipy.linalg.logm(M)
    if np.linalg.norm(L.imag) > 1e-8:
        raise ValueError("logarithm is not real")
    return L.real


def subgroup_cocompact_test(spec_sub: mg.GroupSpec, spec_sup: mg.GroupSpec
                            ) -> CocompactResult:
    """Containment plus compact-quotient test for structured families.

    Containment requires every generator of the candidate subgroup to be
    expressible in the supergroup's chart (1e-8); cocompactness holds when
    the sub-chart spans the super-chart up to a bounded fundamental domain.
    """
    if spec_sub.dim != spec_sup.dim:
        raise NotSupported("dimension mismatch")
    sup_flow = _flow_generators(spec_sup)
    sub_flow = _flow_generators(spec_sub)

    if spec_sup.kind == mg.CYCLIC:
        B = np.asarray(spec_sup.matrix)
        if spec_sub.kind == mg.CYCLIC:
            A = np.asarray(spec_sub.matrix)
            det_b = abs(np.linalg.det(B))
            if abs(math.log(det_b)) > 1e-12:
                m_guess = math.log(abs(np.linalg.det(A))) / math.log(det_b)
                candidates = {int(round(m_guess))}
            else:
                candidates = set(range(-24, 25))
            for m in candidates:
                if mg.operator_norm(mg.mat_power(B, m) - A) <= 1e-8:
                    if m == 0:
                        return CocompactResult("NotCocompact",
                                               witness="scale direction",
                                               detail="trivial subgroup of an "
                                                      "unbounded cyclic group")
                    return CocompactResult("Cocompact",
                                           detail=f"index {abs(m)} sublattice")
            return CocompactResult("NotSubgroup", witness=A,
                                   detail="generator is no power of the "
                                          "supergroup generator")
        raise NotSupported(f"{spec_sub.kind} inside cyclic is not supported")

    if spec_sup.kind == mg.SIMILITUDE:
        # scale factor is the only noncompact direction
        if spec_sub.kind == mg.CYCLIC:
            A = np.asarray(spec_sub.matrix)
            t0 = math.log(abs(np.linalg.det(A))) / spec_sup.dim
            R = math.exp(-t0) * A
            if mg.operator_norm(R.T @ R - np.eye(spec_sup.dim)) > 1e-8:
                return CocompactResult("NotSubgroup", witness=A,
                                       detail="generator is not scale-rotation")
            return (CocompactResult("Cocompact") if abs(t0) > 1e-9
                    else CocompactResult("NotCocompact", witness="scale direction"))
        if sub_flow is not None and len(sub_flow) == 1:
            X = sub_flow[0]
            s = float(np.trace(X)) / spec_sup.dim
            Y = np.asarray(X) - s * np.eye(spec_sup.dim)
            if mg.operator_norm(Y + Y.T) > 1e-8:
                return CocompactResult("NotSubgroup", witness=X,
                                       detail="generator is not scale+skew")
            return (CocompactResult("Cocompact") if abs(s) > 1e-9
                    else CocompactResult("NotCocompact", witness="scale direction"))
        if spec_sub.kind == mg.SIMILITUDE:
            return CocompactResult("Cocompact", detail="same group")
        raise NotSupported(f"{spec_sub.kind} inside similitude is not supported")

    if sup_flow is None:
        raise NotSupported(f"unsupported supergroup kind {spec_sup.kind}")

    k = len(sup_flow)
    if spec_sub.kind == mg.CYCLIC:
        coef = _log_in_flow(np.asarray(spec_sub.matrix), sup_flow)
        if coef is None:
            return CocompactResult("NotSubgroup", witness=spec_sub.matrix,
                                   detail="generator is outside the flow chart")
        if k == 1:
            return (CocompactResult("Cocompact", detail="lattice in a line")
                    if abs(coef[0]) > 1e-9 else
                    CocompactResult("NotCocompact", witness="flow direction"))
        witness = _complement_direction(np.atleast_2d(coef), k)
        return CocompactResult("NotCocompact", witness=witness,
                               detail="rank-one lattice in a higher flow")
    if sub_flow is not None:
        coefs = []
        for X in sub_flow:
            coef, ok = _in_span(np.asarray(X), sup_flow)
            if not ok:
                return CocompactResult("NotSubgroup", witness=X,
                                       detail="generator is outside the flow span")
            coefs.append(coef)
        C = np.stack(coefs)
        rank = np.linalg.matrix_rank(C, tol=1e-10)
        if rank == k:
            return CocompactResult("Cocompact", detail="sub-chart spans the chart")
        witness = _complement_direction(C, k)
        return CocompactResult("NotCocompact", witness=witness,
                               detail=f"quotient has {k - rank} unbounded "
                                      "coordinate directions")
    raise NotSupported(f"unsupported subgroup kind {spec_sub.kind}")


def _complement_direction(C, k):
    """Unit chart direction orthogonal to the rows of C."""
    _, _, vt = np.linalg.svd(np.vstack([C, np.zeros((1, k))]))
    rank = np.linalg.matrix_rank(C, tol=1e-10)
    return vt[rank]


# ---------------------------------------------------------------------------
# full comparison pipeline


def _canonical_matrix(spec: mg.GroupSpec):
    """Expansive generator of a cocompact cyclic subgroup, when one exists."""
    if spec.kind == mg.CYCLIC:
        return np.asarray(spec.matrix)
    if spec.kind == mg.ONE_PARAMETER:
        pre = mg.check_one_parameter_admissible(spec.generator)
        if pre.admissible:
            return np.asarray(mg.mat_exp(pre.sign * np.asarray(spec.generator)))
    if spec.kind == mg.SCALAR_SIMILITUDE:
        return math.e * np.eye(spec.dim)
    return None


def coorbit_equivalence(spec_a: mg.GroupSpec, spec_b: mg.GroupSpec,
                        cfg: RunConfig | None = None,
                        params_a: cv.CoverParams | None = None,
                        params_b: cv.CoverParams | None = None) -> Verdict:
    """Full comparison pipeline.

    Support equality gates the run; the weak-equivalence count trend sets
    the outcome; scalar-criterion, quasi-isometry, and norm-ratio evidence
    are attached as corroboration and never override the cover verdict.
    """
    cfg = cfg or RunConfig()
    notes = []
    for spec in (spec_a, spec_b):
        pre = mg.admissibility_precheck(spec)
        if not pre.admissible:
            raise DomainError(f"spec fails admissibility precheck: {pre}")
        if pre.note:
            notes.append(pre.note)

    support = cv.support_equality_test(spec_a, spec_b, window=cfg.window,
                                       budget=cfg.support_samples,
                                       params_a=params_a, params_b=params_b)
    if not support.equal:
        ev = Evidence(support=support, notes=tuple(notes))
        return Verdict(outcome=Outcome.NOT_EQUIVALENT, evidence=ev,
                       config=cfg.snapshot())

    weak = weak_equivalence_test(spec_a, spec_b, cfg.windows,
                                 budget=cfg.sample_budget,
                                 params_a=params_a, params_b=params_b)
    outcome = {"WeaklyEquivalent": Outcome.EQUIVALENT,
               "NotWeaklyEquivalent": Outcome.NOT_EQUIVALENT,
               "Inconclusive": Outcome.INCONCLUSIVE}[weak.status]

    eps = None
    A_mat, B_mat = _canonical_matrix(spec_a), _canonical_matrix(spec_b)
    if A_mat is not None and B_mat is not None:
        try:
            eps = epsilon_criterion(A_mat, B_mat, k_max=max(20, cfg.window))
        except DomainError:
            eps = None

    qi = None
    if cfg.with_qi:
        try:
            qi = transition_map_certificate(spec_a, spec_b, cfg,
                                            params_a=params_a, params_b=params_b)
        except (mt.PointNotCovered, ValueError) as exc:
            notes.append(f"qi certificate unavailable: {exc}")

    norm_ratios = None
    if cfg.with_norms:
        from . import besov
        try:
            stats = besov.compare_norms(spec_a, spec_b,
                                        besov.default_battery(spec_a.dim, cfg),
                                        p=1, q=1, cfg=cfg,
                                        params_a=params_a, params_b=params_b)
            norm_ratios = stats.to_json()
        except Exception as exc:  # corroboration must not break the verdict
            notes.append(f"norm ratios unavailable: {exc}")

    ev = Evidence(support=support, count_trends=weak.trends, witness=weak.witness,
                  epsilon=eps, qi=qi, norm_ratios=norm_ratios, notes=tuple(notes))
    return Verdict(outcome=outcome, evidence=ev, config=cfg.snapshot())


def transition_map_certificate(spec_a: mg.GroupSpec, spec_b: mg.GroupSpec,
                               cfg: RunConfig,
                               params_a: cv.CoverParams | None = None,
                               params_b: cv.CoverParams | None = None
                               ) -> mt.QICertificate:
    """Fit a certificate for the constructed transition map between groups.

    Maps h -> quasi-inverse of the orbit-map image of h in the second
    cover, then compares word distances on both sides over nested windows.
    """
    rng = np.random.default_rng(cfg.seed)
    windows = (cfg.window, 2 * cfg.window)
    pairs = {}
    density = {}
    for w in windows:
        ca = cv.build_induced_cover(spec_a, w, params_a)
        cb = cv.build_induced_cover(spec_b, 2 * w, params_b)
        wa = mg.box_generating_set(ca.family.step)
        wb = mg.box_generating_set(cb.family.step)
        xi = ca.base.ref_point
        images = []
        for el in ca.family.elements:
            eta = mt.orbit_map(el, xi)
            g, _ = mt.quasi_inverse_orbit(cb, eta)
            images.append(g)
        n = len(images)
        n_pairs = min(600, n * (n - 1) // 2) if n > 2 else n
        idx = rng.integers(0, n, size=(max(n_pairs, 100), 2))
        dx, dy = [], []
        for i, j in idx:
            dx.append(mg.word_distance(spec_a, wa, ca.family.elements[i],
                                       ca.family.elements[j]))
            dy.append(mg.word_distance(spec_b, wb, images[i], images[j]))
        pairs[w] = (np.asarray(dx), np.asarray(dy))
        # density of the image inside the codomain window
        dens = []
        for el in cb.family.elements[:: max(1, len(cb.family) // 64)]:
            dens.append(min(mg.word_distance(spec_b, wb, el, g) for g in images))
        density[w] = np.asarray(dens, dtype=float)
    return mt.fit_quasi_isometry(pairs, density_by_window=density)


@dataclass(frozen=True)
class TransportResult:
    plain: Verdict
    conjugated: Verdict
    consistent: bool


def conjugation_transport(spec_a: mg.GroupSpec, spec_b: mg.GroupSpec, M,
                          cfg: RunConfig | None = None) -> TransportResult:
    """Compare verdicts before and after conjugating both groups by M.

    Disagreement flags an internal consistency failure of the pipeline
    (conjugation is verdict-preserving), not a mathematical finding.
    """
    cfg = cfg or RunConfig()
    plain = coorbit_equivalence(spec_a, spec_b, cfg)
    conj = coorbit_equivalence(mg.conjugate_spec(spec_a, M),
                               mg.conjugate_spec(spec_b, M), cfg)
    return TransportResult(plain=plain, conjugated=conj,
                           consistent=plain.outcome == conj.outcome)
