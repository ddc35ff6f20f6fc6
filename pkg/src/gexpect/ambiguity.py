"""Exact sub-linear expectation engine for lattice-supported random vectors.

The law of a random vector is an ambiguity set: a finite family of discrete
distributions on a shared lattice.  The upper expectation maximises the
classical mean over the family, the lower expectation is its conjugate, and
the induced capacity pair bounds event probabilities.  Because every support
point sits on one lattice, partial sums of independent draws stay on a
lattice, so sums, nested expectations and running maxima are integrated
exactly by dynamic programming with no binning error.

Independence is order-sensitive nesting: the last variable of a list is
integrated out first, with earlier variables frozen.  The list order is the
independence order and is never symmetrised.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ResourceCapError

DEFAULT_NESTING_CAP = 12
DEFAULT_MAX_SUM_NODES = 20_000_000
DEFAULT_MAX_STATES = 400_000

LATTICE_RTOL = 1e-12
PROB_TOL = 1e-12


@dataclass(frozen=True)
class LatticeSpec:
    """Uniform lattice origin + step * Z^d that carries all support points."""

    dimension: int
    step: float
    origin: tuple[float, ...]

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError("lattice dimension must be positive")
        if not (self.step > 0.0) or not np.isfinite(self.step):
            raise DomainError("lattice step must be positive and finite")
        if len(self.origin) != self.dimension:
            raise DomainError("origin length does not match dimension")
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    def to_integer(self, points: np.ndarray) -> np.ndarray:
        """Map physical points to integer coordinates, verifying lattice membership."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        q = (pts - np.asarray(self.origin)) / self.step
        r = np.rint(q)
        tol = LATTICE_RTOL * np.maximum(1.0, np.abs(q))
        if np.any(np.abs(q - r) > tol):
            bad = pts[np.any(np.abs(q - r) > tol, axis=1)][0]
            raise DomainError(f"point off lattice: {bad.tolist()}")
        return r.astype(np.int64)

    def to_physical(self, coords: np.ndarray, copies: int = 1) -> np.ndarray:
        """Physical position of integer coordinates in a `copies`-fold sum."""
        return copies * np.asarray(self.origin) + self.step * np.asarray(coords, dtype=float)

@dataclass(eq=False)
class DiscreteDistribution:
    """One classical measure inside an ambiguity family."""

    support: np.ndarray  # (m, d) physical points
    probs: np.ndarray  # (m,)

    def __post_init__(self):
        self.support = np.atleast_2d(np.asarray(self.support, dtype=float))
        self.probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if self.support.shape[0] != self.probs.shape[0]:
            raise DomainError("support and probs length mismatch")
        if self.support.shape[0] == 0:
            raise DomainError("empty support")
        if not np.all(np.isfinite(self.support)):
            raise DomainError("non-finite support point")
        if np.any(self.probs < 0.0):
            raise DomainError("negative probability")
        if abs(float(self.probs.sum()) - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities sum to {self.probs.sum()!r}, not 1")

    @property
    def dim(self) -> int:
        return self.support.shape[1]


class AmbiguitySet:
    """A random vector's law: finitely many distributions on one lattice."""

    def __init__(self, lattice: LatticeSpec, members: Sequence[DiscreteDistribution]):
        if len(members) == 0:
            raise DomainError("ambiguity set needs at least one member")
        self.lattice = lattice
        self.members = tuple(members)
        coords = []
        for dist in self.members:
            if dist.dim != lattice.dimension:
                raise DomainError("member dimension does not match lattice")
            c = lattice.to_integer(dist.support)
            if np.unique(c, axis=0).shape[0] != c.shape[0]:
                raise DomainError("support points not pairwise distinct")
            coords.append(c)
        self._coords = tuple(coords)

    @property
    def dim(self) -> int:
        return self.lattice.dimension

    def member_coords(self, i: int) -> np.ndarray:
        return self._coords[i]

    def __repr__(self):
        return f"AmbiguitySet(d={self.dim}, members={len(self.members)})"


@dataclass(frozen=True)
class TestFunction:
    """A deterministic functional of one or more lattice vectors.

    The growth tag ("bounded", "quadratic" or "power" with `exponent`) is
    metadata: experiment drivers use it to size PDE domains and to gate
    unbounded functionals behind verified moment conditions.
    """

    fn: Callable
    arity: int = 1
    growth: str = "bounded"
    exponent: float | None = None
    name: str = ""

    def __call__(self, *args):
        return self.fn(*args)


def _as_callable(f, expected_arity: int | None = None) -> Callable:
    if isinstance(f, TestFunction):
        if expected_arity is not None and f.arity != expected_arity:
            raise DomainError(f"arity mismatch: expected {expected_arity}, got {f.arity}")
        return f.fn
    return f


def _eval_on_points(fn: Callable, support: np.ndarray) -> np.ndarray:
    """Evaluate fn on (m, d) points; vectorised call first, scalar fallback."""
    d = support.shape[1]
    if d == 1:
        xs = support[:, 0]
        try:
            out = np.asarray(fn(xs), dtype=float)
            if out.shape != xs.shape:
                raise ValueError
        except Exception:
            out = np.array([float(fn(float(x))) for x in xs])
    else:
        try:
            out = np.asarray(fn(support), dtype=float)
            if out.shape != (support.shape[0],):
                raise ValueError
        except Exception:
            out = np.array([float(fn(support[i])) for i in range(support.shape[0])])
    if not np.all(np.isfinite(out)):
        raise DomainError("non-finite test value")
    return out


def expect_upper_member(X: AmbiguitySet, f) -> tuple[float, int]:
    """Upper expectation plus the attaining member index (lowest on ties)."""
    fn = _as_callable(f, 1)
    vals = np.empty(len(X.members))
    for i, dist in enumerate(X.members):
        vals[i] = float(np.dot(dist.probs, _eval_on_points(fn, dist.support)))
    idx = int(np.argmax(vals))
    return float(vals[idx]), idx


def expect_upper(X: AmbiguitySet, f) -> float:
    """max over members P of sum_z P(z) f(z)."""
    return expect_upper_member(X, f)[0]


def expect_lower(X: AmbiguitySet, f) -> float:
    """Conjugate expectation -E[-f]; always <= expect_upper(X, f)."""
    fn = _as_callable(f, 1)
    return -expect_upper(X, lambda *a: -np.asarray(fn(*a), dtype=float))


def _event_mask(event: Callable, support: np.ndarray) -> np.ndarray:
    d = support.shape[1]
    if d == 1:
        return np.array([bool(event(float(z))) for z in support[:, 0]])
    return np.array([bool(event(support[i])) for i in range(support.shape[0])])


def capacity_upper(X: AmbiguitySet, event: Callable) -> float:
    """max over members of P(event)."""
    best = 0.0
    for dist in X.members:
        mask = _event_mask(event, dist.support)
        best = max(best, float(dist.probs[mask].sum()))
    return min(best, 1.0)


def capacity_lower(X: AmbiguitySet, event: Callable) -> float:
    """1 - capacity_upper(complement) = min over members of P(event)."""
    return 1.0 - capacity_upper(X, lambda z: not event(z))


def truncate(X: AmbiguitySet, c: float) -> AmbiguitySet:
    """Componentwise clamp of every support point to [-c, c].

    Both clamp points must sit on the lattice so that the result keeps the
    exact-DP contract; probabilities of collided points are merged.
    """
    if not c > 0:
        raise DomainError("truncation level must be positive")
    lat = X.lattice
    los = np.empty(X.dim, dtype=np.int64)
    his = np.empty(X.dim, dtype=np.int64)
    for j in range(X.dim):
        for sign, tgt in ((1.0, his), (-1.0, los)):
            q = (sign * c - lat.origin[j]) / lat.step
            r = np.rint(q)
            if abs(q - r) > LATTICE_RTOL * max(1.0, abs(q)):
                raise DomainError("truncation off-lattice")
            tgt[j] = int(r)
    members = []
    for i, dist in enumerate(X.members):
        coords = np.clip(X.member_coords(i), los, his)
        uniq, inverse = np.unique(coords, axis=0, return_inverse=True)
        probs = np.zeros(uniq.shape[0])
        np.add.at(probs, inverse, dist.probs)
        members.append(DiscreteDistribution(lat.to_physical(uniq), probs))
    return AmbiguitySet(lat, members)


def nested_expect(Xs: Sequence[AmbiguitySet], f, cap: int = DEFAULT_NESTING_CAP) -> float:
    """Nested upper expectation with the last variable integrated innermost.

    Realises order-sensitive independence: X_k independent of (X_1..X_{k-1}),
    so the recursion freezes a prefix and integrates the deepest variable
    first via expect_upper.
    """
    k = len(Xs)
    if k == 0:
        raise DomainError("need at least one variable")
    if k > cap:
        raise ResourceCapError("nesting too deep")
    fn = _as_callable(f, k)

    def level(prefix: tuple, i: int) -> float:
        X = Xs[i]
        if i == k - 1:
            return expect_upper(X, lambda z: fn(*prefix, z))
        return expect_upper(X, lambda z: level(prefix + (z,), i + 1))

    return level((), 0)


def _shared_lattice(laws: Sequence[AmbiguitySet]) -> LatticeSpec:
    lat = laws[0].lattice
    for law in laws[1:]:
        if law.lattice != lat:
            raise DomainError("laws do not share a lattice")
    return lat


def _positive_rows(law: AmbiguitySet):
    """(coords, probs) per member, restricted to positive-probability points."""
    rows = []
    for i, dist in enumerate(law.members):
        keep = dist.probs > 0.0
        rows.append((law.member_coords(i)[keep], dist.probs[keep]))
    return rows


def _eval_sum_grid(fn: Callable, lat: LatticeSpec, lo: np.ndarray, hi: np.ndarray,
                   copies: int, scale: float) -> np.ndarray:
    """Evaluate fn(scale * physical sum) on the integer box [lo, hi]."""
    d = lat.dimension
    shape = tuple(int(h - l + 1) for l, h in zip(lo, hi))
    if d == 1:
        xs = scale * (copies * lat.origin[0] + lat.step * np.arange(lo[0], hi[0] + 1, dtype=float))
        try:
            vals = np.asarray(fn(xs), dtype=float)
            if vals.shape != xs.shape:
                raise ValueError
        except Exception:
            vals = np.array([float(fn(float(x))) for x in xs])
    else:
        axes = [np.arange(lo[j], hi[j] + 1, dtype=float) for j in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack(mesh, axis=-1) * lat.step + copies * np.asarray(lat.origin)
        pts = scale * pts
        try:
            vals = np.asarray(fn(pts), dtype=float)
            if vals.shape != shape:
                raise ValueError
        except Exception:
            flat = pts.reshape(-1, d)
            vals = np.array([float(fn(flat[i])) for i in range(flat.shape[0])]).reshape(shape)
    if not np.all(np.isfinite(vals)):
        raise DomainError("non-finite test value")
    return vals


def independent_sum_expect(laws: Sequence[AmbiguitySet], g, scale: float = 1.0,
                           max_nodes: int = DEFAULT_MAX_SUM_NODES) -> float:
    """Exact E[g(scale * (X_1 + ... + X_n))] for independent lattice laws.

    Backward dynamic programming over the partial-sum lattice: the value at
    level k-1 is the member maximum of the member mean of level-k values.
    Member maxima break ties at the lowest index; reductions run in ascending
    lattice order, so results are deterministic.
    """
    if len(laws) == 0:
        raise DomainError("need at least one law")
    if not scale > 0:
        raise DomainError("scale must be positive")
    lat = _shared_lattice(laws)
    d = lat.dimension
    n = len(laws)
    fn = _as_callable(g, 1)

    per_law = [_positive_rows(law) for law in laws]
    lo = np.zeros((n + 1, d), dtype=np.int64)
    hi = np.zeros((n + 1, d), dtype=np.int64)
    for k, rows in enumerate(per_law, start=1):
        zmin = np.min([coords.min(axis=0) for coords, _ in rows], axis=0)
        zmax = np.max([coords.max(axis=0) for coords, _ in rows], axis=0)
        lo[k] = lo[k - 1] + zmin
        hi[k] = hi[k - 1] + zmax
    size = int(np.prod(hi[n] - lo[n] + 1))
    if size > max_nodes:
        raise ResourceCapError(f"lattice blowup: {size} sum nodes at level {n}")

    v = _eval_sum_grid(fn, lat, lo[n], hi[n], n, scale)
    for k in range(n, 0, -1):
        prev_shape = tuple(int(h - l + 1) for l, h in zip(lo[k - 1], hi[k - 1]))
        best = None
        for coords, probs in per_law[k - 1]:
            acc = np.zeros(prev_shape)
            for z, p in zip(coords, probs):
                shift = z + lo[k - 1] - lo[k]
                idx = tuple(slice(int(s), int(s) + prev_shape[j]) for j, s in enumerate(shift))
                acc += p * v[idx]
            best = acc if best is None else np.maximum(best, acc)
        v = best
    return float(v.reshape(-1)[0])


def iid_sum_expect(X: AmbiguitySet, n: int, g, scale: float = 1.0,
                   max_nodes: int = DEFAULT_MAX_SUM_NODES) -> float:
    """Exact E[g(scale * S_n)] for n iid copies of X (see independent_sum_expect)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return independent_sum_expect([X] * n, g, scale=scale, max_nodes=max_nodes)


def running_max_expect(X: AmbiguitySet, n: int, scale: float = 1.0,
                       max_states: int = DEFAULT_MAX_STATES) -> float:
    """Exact E[max_{i<=n} |scale * S_i|] by DP on (sum, running max) states."""
    if X.dim != 1:
        raise DomainError("1-d only")
    if n < 1:
        raise DomainError("n must be >= 1")
    if not scale > 0:
        raise DomainError("scale must be positive")
    lat = X.lattice
    rows = _positive_rows(X)

    def phys(level: int, s: int) -> float:
        return level * lat.origin[0] + s * lat.step

    levels: list[set] = [{(0, 0.0)}]
    total = 1
    for k in range(1, n + 1):
        nxt = set()
        for s, m in levels[-1]:
            for coords, _ in rows:
                for z in coords[:, 0]:
                    s2 = s + int(z)
                    nxt.add((s2, max(m, abs(phys(k, s2)))))
        total += len(nxt)
        if total > max_states:
            raise ResourceCapError(f"state blowup: {total} states at level {k}")
        levels.append(nxt)

    values = {st: scale * st[1] for st in levels[n]}
    for k in range(n - 1, -1, -1):
        prev = {}
        for s, m in levels[k]:
            best = None
            for coords, probs in rows:
                acc = 0.0
                for z, p in zip(coords[:, 0], probs):
                    s2 = s + int(z)
                    acc += p * values[(s2, max(m, abs(phys(k + 1, s2))))]
                best = acc if best is None else max(best, acc)
            prev[(s, m)] = best
        values = prev
    return values[(0, 0.0)]


def symmetric_bernoulli_family(variances: Sequence[float], step: float = 1.0) -> AmbiguitySet:
    """Family on {-step, 0, +step}: one member per v with P(+-step) = v/2.

    With step = 1 the member variances are exactly `variances`.
    """
    if len(variances) == 0:
        raise DomainError("need at least one variance")
    lat = LatticeSpec(1, step, (0.0,))
    support = np.array([[-step], [0.0], [step]])
    members = []
    for v in variances:
        if not 0.0 <= v <= 1.0:
            raise DomainError("variances must lie in [0, 1] for this family")
        members.append(DiscreteDistribution(support, np.array([v / 2, 1 - v, v / 2])))
    return AmbiguitySet(lat, members)


def point_mass(value: Sequence[float] | float, step: float = 1.0) -> AmbiguitySet:
    """Degenerate one-member family concentrated at a single lattice point."""
    vec = np.atleast_1d(np.asarray(value, dtype=float))
    lat = LatticeSpec(len(vec), step, tuple(vec))
    dist = DiscreteDistribution(vec.reshape(1, -1), np.array([1.0]))
    return AmbiguitySet(lat, [dist])


def nested_product(X: AmbiguitySet, Y: AmbiguitySet) -> AmbiguitySet:
    """Joint law of (X, Y) with Y independent of X in the order-sensitive sense.

    The joint family enumerates every map from positive-probability points of
    an X-member to Y-members, so the joint upper expectation of any functional
    equals the nested expectation.  Member counts grow fast; intended for
    small supports.
    """
    if X.lattice.step != Y.lattice.step:
        raise DomainError("component lattices must share the step")
    lat = LatticeSpec(X.dim + Y.dim, X.lattice.step, X.lattice.origin + Y.lattice.origin)
    members = []
    for dist in X.members:
        keep = dist.probs > 0.0
        zs = dist.support[keep]
        ps = dist.probs[keep]
        choices = [range(len(Y.members))] * len(zs)
        for pick in itertools.product(*choices):
            pts = []
            pr = []
            for (z, p, j) in zip(zs, ps, pick):
                ydist = Y.members[j]
                for w, q in zip(ydist.support, ydist.probs):
                    pts.append(np.concatenate([z, w]))
                    pr.append(p * q)
            pts = np.asarray(pts)
            pr = np.asarray(pr)
            uniq, inverse = np.unique(lat.to_integer(pts), axis=0, return_inverse=True)
            probs = np.zeros(uniq.shape[0])
            np.add.at(probs, inverse, pr)
            members.append(DiscreteDistribution(lat.to_physical(uniq), probs))
    return AmbiguitySet(lat, members)
