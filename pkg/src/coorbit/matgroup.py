"""Matrix dilation groups: charts, exponentials, word metrics, Haar weights.

Supported families are a closed enumeration: one-parameter groups exp(R*X),
cyclic groups <A>, abelian multi-parameter flows, scalar similitudes, full
similitude groups (dimension 2 and 3), and finitely generated discrete
groups given by explicit generator lists.  All values are immutable after
construction and every operation is pure.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

MAX_DIM = 4

ONE_PARAMETER = "one_parameter"
CYCLIC = "cyclic"
ABELIAN_FLOW = "abelian_flow"
SCALAR_SIMILITUDE = "scalar_similitude"
SIMILITUDE = "similitude"
DISCRETE_FG = "discrete_fg"

COORDINATE_KINDS = (ONE_PARAMETER, CYCLIC, ABELIAN_FLOW, SCALAR_SIMILITUDE, SIMILITUDE)
ALL_KINDS = COORDINATE_KINDS + (DISCRETE_FG,)

SINGULAR_DET_TOL = 1e-12
COMMUTATOR_TOL = 1e-10
CHART_TOL = 1e-9
EIG_SIGN_TOL = 1e-9
QUANTIZE_STEP = 1e-8


class GroupError(ValueError):
    """Invalid group data, or an operation outside a family's domain."""


def as_matrix(entries, dim: int | None = None) -> np.ndarray:
    """Validate and freeze a square real matrix with finite entries."""
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise GroupError(f"expected a square matrix, got shape {m.shape}")
    d = m.shape[0]
    if not 1 <= d <= MAX_DIM:
        raise GroupError(f"dimension {d} outside supported range 1..{MAX_DIM}")
    if dim is not None and d != dim:
        raise GroupError(f"expected dimension {dim}, got {d}")
    if not np.all(np.isfinite(m)):
        raise GroupError("matrix entries must be finite")
    m.setflags(write=False)
    return m


def require_invertible(m: np.ndarray, tol: float = SINGULAR_DET_TOL) -> np.ndarray:
    """Reject numerically singular matrices.

    The test is relative (smallest vs largest singular value) so that
    well-conditioned matrices of very small overall scale, which arise as
    deep-window cover transforms, are not rejected.
    """
    sv = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    if not np.all(np.isfinite(sv)) or sv[0] == 0.0 or sv[-1] <= tol * float(sv[0]):
        raise GroupError("matrix is numerically singular")
    return m


def mat_exp(X) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring Pade, via scipy)."""
    X = as_matrix(X)
    out = scipy.linalg.expm(np.asarray(X))
    out.setflags(write=False)
    return out


def mat_power(A: np.ndarray, k: int) -> np.ndarray:
    if k >= 0:
        return np.linalg.matrix_power(A, k)
    require_invertible(A)
    return np.linalg.matrix_power(np.linalg.inv(A), -k)


def operator_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def rotation_2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _skew_3d(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


@dataclass(frozen=True)
class GroupSpec:
    """A parametrized closed matrix group H <= GL(d, R).

    ``support`` is an optional membership predicate for the claimed
    frequency support (default: the punctured space R^d minus {0}).
    ``freq_basis`` transforms the base sets used for induced covers; it is
    composed by :func:`conjugate_spec` so that conjugated groups carry the
    matching transformed frequency geometry.
    """

    kind: str
    dim: int
    generator: np.ndarray | None = None
    matrix: np.ndarray | None = None
    generators: tuple = ()
    support: object = None
    freq_basis: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise GroupError(f"unknown group kind {self.kind!r}")
        if not 1 <= self.dim <= MAX_DIM:
            raise GroupError(f"dimension {self.dim} outside 1..{MAX_DIM}")
        if self.kind == ONE_PARAMETER and self.generator is None:
            raise GroupError("one-parameter spec needs a generator")
        if self.kind == CYCLIC:
            if self.matrix is None:
                raise GroupError("cyclic spec needs a matrix")
            require_invertible(self.matrix)
        if self.kind == ABELIAN_FLOW:
            if len(self.generators) < 1:
                raise GroupError("abelian flow needs at least one generator")
            for i, Xi in enumerate(self.generators):
                for Xj in self.generators[i + 1:]:
                    comm = Xi @ Xj - Xj @ Xi
                    if operator_norm(comm) > COMMUTATOR_TOL:
                        raise GroupError(
                            "abelian flow generators do not commute "
                            f"(commutator norm {operator_norm(comm):.2e})")
        if self.kind == SIMILITUDE and self.dim not in (2, 3):
            raise GroupError("similitude groups are supported for d in {2, 3}")
        if self.kind == DISCRETE_FG and len(self.generators) < 1:
            raise GroupError("discrete group needs at least one generator")

    @property
    def n_params(self) -> int:
        """Number of chart coordinates."""
        if self.kind in (ONE_PARAMETER, CYCLIC, SCALAR_SIMILITUDE):
            return 1
        if self.kind == ABELIAN_FLOW:
            return len(self.generators)
        if self.kind == SIMILITUDE:
            return 2 if self.dim == 2 else 4
        raise GroupError("discrete groups have no coordinate chart")

    def support_contains(self, xi) -> bool:
        xi = np.asarray(xi, dtype=float)
        if self.support is not None:
            return bool(self.support(xi))
        return bool(np.linalg.norm(xi) > 0.0)


def one_parameter(X, **kw) -> GroupSpec:
    X = as_matrix(X)
    return GroupSpec(kind=ONE_PARAMETER, dim=X.shape[0], generator=X, **kw)


def cyclic(A, **kw) -> GroupSpec:
    A = as_matrix(A)
    return GroupSpec(kind=CYCLIC, dim=A.shape[0], matrix=A, **kw)


def abelian_flow(Xs, **kw) -> GroupSpec:
    mats = tuple(as_matrix(X) for X in Xs)
    return GroupSpec(kind=ABELIAN_FLOW, dim=mats[0].shape[0], generators=mats, **kw)


def scalar_similitude(dim: int, **kw) -> GroupSpec:
    return GroupSpec(kind=SCALAR_SIMILITUDE, dim=dim, **kw)


def similitude(dim: int, **kw) -> GroupSpec:
    return GroupSpec(kind=SIMILITUDE, dim=dim, **kw)


def discrete_fg(mats, **kw) -> GroupSpec:
    gens = tuple(require_invertible(as_matrix(m)) for m in mats)
    return GroupSpec(kind=DISCRETE_FG, dim=gens[0].shape[0], generators=gens, **kw)


@dataclass(frozen=True)
class GroupElement:
    """A group member with optional chart coordinates."""

    matrix: np.ndarray
    coords: tuple | None = None

    def __post_init__(self):
        as_matrix(self.matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def chart_matrix(spec: GroupSpec, coords) -> np.ndarray:
    """Evaluate the coordinate chart of a structured family."""
    coords = tuple(float(c) for c in np.atleast_1d(coords))
    if spec.kind == ONE_PARAMETER:
        (t,) = coords
        return mat_exp(t * spec.generator)
    if spec.kind == CYCLIC:
        (k,) = coords
        if abs(k - round(k)) > 1e-9:
            raise GroupError("cyclic chart takes integer coordinates")
        return mat_power(np.asarray(spec.matrix), int(round(k)))
    if spec.kind == ABELIAN_FLOW:
        if len(coords) != len(spec.generators):
            raise GroupError("coordinate count does not match generator count")
        acc = sum(t * X for t, X in zip(coords, spec.generators))
        return mat_exp(acc)
    if spec.kind == SCALAR_SIMILITUDE:
        (t,) = coords
        return math.exp(t) * np.eye(spec.dim)
    if spec.kind == SIMILITUDE:
        if spec.dim == 2:
            t, theta = coords
            return math.exp(t) * rotation_2d(theta)
        t, w1, w2, w3 = coords
        return math.exp(t) * mat_exp(_skew_3d((w1, w2, w3)))
    raise GroupError(f"no coordinate chart for kind {spec.kind!r}")


def group_element(spec: GroupSpec, coords) -> GroupElement:
    coords = tuple(float(c) for c in np.atleast_1d(coords))
    m = chart_matrix(spec, coords)
    return GroupElement(matrix=m, coords=coords)


def identity_element(spec: GroupSpec) -> GroupElement:
    if spec.kind == DISCRETE_FG:
        return GroupElement(matrix=np.eye(spec.dim), coords=())
    return group_element(spec, (0.0,) * spec.n_params)


def element_from_matrix(spec: GroupSpec, matrix, coords=None) -> GroupElement:
    """Wrap a matrix as a group element, verifying coords when given."""
    m = as_matrix(matrix, spec.dim)
    if coords is not None:
        ref = chart_matrix(spec, coords)
        if operator_norm(m - ref) > CHART_TOL * max(1.0, operator_norm(ref)):
            raise GroupError("matrix does not match its chart coordinates")
        coords = tuple(float(c) for c in np.atleast_1d(coords))
    return GroupElement(matrix=m, coords=coords)


def dual_action(h, xi) -> np.ndarray:
    """Apply the frequency-side action: xi -> h^{-T} xi (via LU solve)."""
    m = h.matrix if isinstance(h, GroupElement) else np.asarray(h, dtype=float)
    require_invertible(m)
    return np.linalg.solve(m.T, np.asarray(xi, dtype=float))


@dataclass(frozen=True)
class AdmissibilityResult:
    admissible: bool
    sign: int | None = None
    witness: complex | None = None
    note: str = ""


def check_one_parameter_admissible(X, tol: float = EIG_SIGN_TOL) -> AdmissibilityResult:
    """Eigenvalue real-part sign test for exp(R*X)."""
    X = as_matrix(X)
    eig = np.linalg.eigvals(np.asarray(X))
    re = eig.real
    if np.all(re > tol):
        return AdmissibilityResult(True, sign=+1)
    if np.all(re < -tol):
        return AdmissibilityResult(True, sign=-1)
    offending = eig[int(np.argmin(np.abs(re)))] if np.any(np.abs(re) <= tol) \
        else eig[int(np.argmin(re))] if np.any(re > 0) else eig[int(np.argmax(re))]
    # mixed signs: return an eigenvalue from the minority side for the report
    if np.any(re > tol) and np.any(re < -tol):
        offending = eig[int(np.argmin(re))]
    return AdmissibilityResult(False, witness=complex(offending))


def check_cyclic_admissible(A, tol: float = EIG_SIGN_TOL) -> AdmissibilityResult:
    """Eigenvalue modulus test for the cyclic group <A>."""
    A = as_matrix(A)
    require_invertible(A)
    eig = np.linalg.eigvals(np.asarray(A))
    mod = np.abs(eig)
    if np.all(mod > 1.0 + tol):
        return AdmissibilityResult(True, sign=+1)
    if np.all(mod < 1.0 - tol):
        return AdmissibilityResult(True, sign=-1)
    offending = eig[int(np.argmin(np.abs(mod - 1.0)))]
    return AdmissibilityResult(False, witness=complex(offending))


def admissibility_precheck(spec: GroupSpec) -> AdmissibilityResult:
    """Family-specific admissibility gate used before cover construction."""
    if spec.kind == ONE_PARAMETER:
        return check_one_parameter_admissible(spec.generator)
    if spec.kind == CYCLIC:
        return check_cyclic_admissible(spec.matrix)
    if spec.kind in (SCALAR_SIMILITUDE, SIMILITUDE):
        return AdmissibilityResult(True, sign=+1)
    if spec.kind == ABELIAN_FLOW:
        return AdmissibilityResult(True, note="flow admissibility assumed, not verified")
    return AdmissibilityResult(
        True, note="discrete group: compact generation of stabilizers is an "
                   "unchecked assumption")


@dataclass(frozen=True)
class GeneratingSet:
    """Symmetric unit neighborhood W for the word metric.

    Coordinate families use a box of half-width ``box`` per coordinate
    (a scalar applies to every coordinate).  Discrete groups use the
    explicit element list, closed under inversion.
    """

    box: tuple | None = None
    elements: tuple = ()
    bfs_cap: int = 16

    def half_widths(self, n_params: int) -> np.ndarray:
        if self.box is None:
            raise GroupError("coordinate word metric needs a box half-width")
        b = np.atleast_1d(np.asarray(self.box, dtype=float))
        if b.size == 1:
            b = np.full(n_params, float(b[0]))
        if b.size != n_params or np.any(b <= 0):
            raise GroupError("invalid box half-widths")
        return b


def box_generating_set(delta, bfs_cap: int = 16) -> GeneratingSet:
    if np.isscalar(delta):
        delta = (float(delta),)
    return GeneratingSet(box=tuple(float(d) for d in delta), bfs_cap=bfs_cap)


def list_generating_set(spec: GroupSpec, mats, bfs_cap: int = 16) -> GeneratingSet:
    """Explicit generating set, closed under inversion and including id."""
    elems = [np.eye(spec.dim)]
    for m in mats:
        m = require_invertible(as_matrix(m, spec.dim))
        elems.append(np.asarray(m))
        elems.append(np.linalg.inv(m))
    uniq, seen = [], set()
    for m in elems:
        key = quantize_key(m)
        if key not in seen:
            seen.add(key)
            uniq.append(GroupElement(matrix=m))
    return GeneratingSet(elements=tuple(uniq), bfs_cap=bfs_cap)


def quantize_key(m: np.ndarray, step: float = QUANTIZE_STEP) -> tuple:
    """Hashable key for a matrix, quantized to absorb roundoff."""
    return tuple(int(round(x / step)) for x in np.asarray(m, dtype=float).ravel())


def _require_coords(g: GroupElement) -> np.ndarray:
    if g.coords is None:
        raise GroupError("element carries no chart coordinates")
    return np.asarray(g.coords, dtype=float)


def _angle_distance(a: float, b: float) -> float:
    d = (a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def word_distance(spec: GroupSpec, W: GeneratingSet, g: GroupElement,
                  h: GroupElement) -> float:
    """Word-metric distance: least m with g^{-1} h in W^m (0 when g == h).

    Coordinate families evaluate the box metric exactly; discrete groups
    run a BFS over the Cayley graph with quantized matrix hashing, and
    return inf once the configured cap is exceeded.
    """
    if spec.kind in COORDINATE_KINDS:
        cg, ch = _require_coords(g), _require_coords(h)
        if spec.kind == CYCLIC:
            return float(abs(int(round(ch[0])) - int(round(cg[0]))))
        if spec.kind == SIMILITUDE:
            b = W.half_widths(2)
            scale = math.ceil(abs(ch[0] - cg[0]) / b[0] - 1e-12)
            if spec.dim == 2:
                rot = math.ceil(_angle_distance(ch[1], cg[1]) / b[1] - 1e-12)
            else:
                rot = math.ceil(float(np.linalg.norm(ch[1:] - cg[1:])) / b[1] - 1e-12)
            return float(max(scale, rot, 0))
        b = W.half_widths(spec.n_params)
        steps = np.ceil(np.abs(ch - cg) / b - 1e-12)
        return float(max(steps.max(), 0.0))
    return _cayley_distance(spec, W, g, h)


def _cayley_distance(spec: GroupSpec, W: GeneratingSet, g: GroupElement,
                     h: GroupElement) -> float:
    if not W.elements:
        raise GroupError("discrete word metric needs an explicit generating set")
    target = np.linalg.solve(np.asarray(g.matrix), np.asarray(h.matrix))
    start_key = quantize_key(np.eye(spec.dim))
    if quantize_key(target) == start_key:
        return 0.0
    gens = [np.asarray(e.matrix) for e in W.elements]
    seen = {start_key}
    frontier = deque([(np.eye(spec.dim), 0)])
    target_key = quantize_key(target)
    while frontier:
        m, depth = frontier.popleft()
        if depth >= W.bfs_cap:
            continue
        for s in gens:
            nxt = m @ s
            key = quantize_key(nxt)
            if key == target_key:
                return float(depth + 1)
            if key not in seen:
                seen.add(key)
                frontier.append((nxt, depth + 1))
    return math.inf


@dataclass(frozen=True)
class WellSpreadFamily:
    """Lattice samples of a group chart inside a finite index window."""

    spec: GroupSpec
    elements: tuple
    indices: tuple
    window: int
    step: float
    discreteness: float
    density: float

    def __len__(self) -> int:
        return len(self.elements)


def _rotation_net_2d(n: int):
    return [(2.0 * math.pi * j / n,) for j in range(n)]


def _rotation_net_3d(n: int):
    # axis-angle net: coordinate axes plus diagonals, angles on a lattice
    axes = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]
    net = [(0.0, 0.0, 0.0)]
    for ax in axes:
        v = np.asarray(ax, dtype=float)
        v /= np.linalg.norm(v)
        for j in range(1, n):
            ang = 2.0 * math.pi * j / n
            net.append(tuple(ang * v))
    return net


def enumerate_family(spec: GroupSpec, window: int, step: float = 1.0,
                     rotation_count: int = 8) -> WellSpreadFamily:
    """Enumerate a well-spread family over the index window.

    One-parameter groups sample exp(i*step*X) for |i| <= window; cyclic
    groups take powers A^k; abelian flows use the tensor lattice; the
    similitude family combines the scale lattice with a rotation net.
    Discrete groups enumerate BFS balls of radius ``window``.
    """
    if window < 1:
        raise GroupError("window must be >= 1")
    if step <= 0:
        raise GroupError("step must be positive")
    idx_range = range(-window, window + 1)
    elements, indices = [], []
    if spec.kind == CYCLIC:
        for k in idx_range:
            elements.append(group_element(spec, (k,)))
            indices.append((k,))
        step = 1.0
    elif spec.kind in (ONE_PARAMETER, SCALAR_SIMILITUDE):
        for i in idx_range:
            elements.append(group_element(spec, (i * step,)))
            indices.append((i,))
    elif spec.kind == ABELIAN_FLOW:
        k = len(spec.generators)
        # commuting generators: assemble elements from per-axis power tables
        axis_pows = []
        for X in spec.generators:
            G = np.asarray(mat_exp(step * X))
            G_inv = np.linalg.inv(G)
            pows = {0: np.eye(spec.dim)}
            for i in range(1, window + 1):
                pows[i] = pows[i - 1] @ G
                pows[-i] = pows[-(i - 1)] @ G_inv
            axis_pows.append(pows)
        grids = np.meshgrid(*([list(idx_range)] * k), indexing="ij")
        for idx in zip(*(g.ravel() for g in grids)):
            m = axis_pows[0][int(idx[0])]
            for ax in range(1, k):
                m = m @ axis_pows[ax][int(idx[ax])]
            elements.append(GroupElement(matrix=m,
                                         coords=tuple(i * step for i in idx)))
            indices.append(tuple(int(i) for i in idx))
    elif spec.kind == SIMILITUDE:
        net = (_rotation_net_2d(rotation_count) if spec.dim == 2
               else _rotation_net_3d(rotation_count))
        for i in idx_range:
            for j, rot in enumerate(net):
                elements.append(group_element(spec, (i * step, *rot)))
                indices.append((i, j))
    elif spec.kind == DISCRETE_FG:
        W = list_generating_set(spec, spec.generators, bfs_cap=window)
        seen = {quantize_key(np.eye(spec.dim)): ()}
        frontier = deque([(np.eye(spec.dim), (), 0)])
        elements.append(GroupElement(matrix=np.eye(spec.dim), coords=()))
        indices.append(())
        while frontier:
            m, word, depth = frontier.popleft()
            if depth >= window:
                continue
            for gi, s in enumerate(W.elements):
                nxt = m @ np.asarray(s.matrix)
                key = quantize_key(nxt)
                if key not in seen:
                    w = word + (gi,)
                    seen[key] = w
                    elements.append(GroupElement(matrix=nxt, coords=w))
                    indices.append(w)
                    frontier.append((nxt, w, depth + 1))
    else:
        raise GroupError(f"cannot enumerate family for kind {spec.kind!r}")
    return WellSpreadFamily(spec=spec, elements=tuple(elements),
                            indices=tuple(indices), window=window, step=step,
                            discreteness=step, density=step)


def conjugate_spec(spec: GroupSpec, A) -> GroupSpec:
    """Spec of the conjugated group A^{-1} H A.

    Generators are conjugated exactly; the support oracle is composed with
    xi -> A^{-T} xi so the conjugated support is the transformed one, and
    the frequency basis picks up A^T so induced covers transform along.
    """
    A = require_invertible(as_matrix(A, spec.dim))
    A_arr = np.asarray(A)
    A_inv = np.linalg.inv(A_arr)

    old_support = spec.support
    if old_support is not None:
        def support(xi, _f=old_support, _At=A_arr.T):
            return _f(np.linalg.solve(_At, np.asarray(xi, dtype=float)))
    else:
        support = None

    basis = A_arr.T @ (np.asarray(spec.freq_basis) if spec.freq_basis is not None
                       else np.eye(spec.dim))
    basis.setflags(write=False)

    kw = dict(support=support, freq_basis=basis, label=spec.label)
    if spec.kind == ONE_PARAMETER:
        return one_parameter(A_inv @ spec.generator @ A_arr, **kw)
    if spec.kind == CYCLIC:
        return cyclic(A_inv @ spec.matrix @ A_arr, **kw)
    if spec.kind == ABELIAN_FLOW:
        return abelian_flow([A_inv @ X @ A_arr for X in spec.generators], **kw)
    if spec.kind == DISCRETE_FG:
        return discrete_fg([A_inv @ M @ A_arr for M in spec.generators], **kw)
    if spec.kind == SCALAR_SIMILITUDE:
        # scalars commute with everything; only the frequency basis moves
        return GroupSpec(kind=SCALAR_SIMILITUDE, dim=spec.dim, **kw)
    if spec.kind == SIMILITUDE:
        raise GroupError("conjugated similitude groups are not representable "
                         "in the supported enumeration")
    raise GroupError(f"cannot conjugate kind {spec.kind!r}")


def haar_weight(spec: GroupSpec, h: GroupElement) -> float:
    """Haar density at h relative to the chart Lebesgue/counting measure.

    All supported charts are unimodular product charts: the density is the
    constant 1.  For the similitude family this is the (log-scale, rotation)
    chart with normalized rotation Haar measure.
    """
    if spec.kind == DISCRETE_FG:
        if h.coords is None:
            raise GroupError("element carries no word coordinates")
        return 1.0
    _require_coords(h)
    return 1.0
