"""Conditioned Galton-Watson samplers for cylinder skeletons.

A skeleton is an ordered forest of plane trees rooted on the outer cycle of
a cylinder, grown downward for at most height_cap generations, with p >= 1
vertices at the last generation.  The offspring law is the critical theta
from exactlaws; the samplers realize three conditionings of GW(theta):

* extinct trees -- no vertex at generation m; the offspring law of a vertex
  with d generations left is the tilt theta(c) pi_{d-1}^c / pi_d,
* spine trees -- exactly one vertex at generation m; spine vertices use the
  size-biased tilt theta(c) c pi_{d-1}^{c-1} / (phi_d(1)/phi_{d-1}(1)) with
  a uniform spine child, off-spine subtrees extinct,
* hull skeletons -- q trees with q drawn from the radius-r perimeter law,
  one spine tree at a uniform position, the rest extinct.  Annulus
  skeletons are hull skeletons truncated at generation w - u.

Every discrete draw inverts a CDF at a 53-bit dyadic uniform.  The CDF is
tabulated in float64 from the high-precision coefficient streams (relative
error ~1e-13); draws landing within a 1e-9 guard band of a mass boundary
are re-decided with exact rational cumulative sums, so sampling follows the
exact law whenever the table's exact lane covers the boundary in question.
A separate numpy lane (annulus_batch / hull_volume_scores) vectorizes the
same per-generation laws for large Monte Carlo runs.
"""

import bisect
import hashlib
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import exactlaws as laws
from .exactlaws import ONE, ZERO, Rat

_MASK64 = (1 << 64) - 1
_U53 = float(2**53)
GUARD = 1e-9
TAIL_EPS = 1e-12
EXACT_LANE_LIMIT = 4096


class CutoffExceededError(RuntimeError):
    """A draw fell beyond the tabulated support (probability < 1e-12)."""


# ---------------------------------------------------------------------------
# Deterministic randomness
# ---------------------------------------------------------------------------


class RngStream:
    """Seeded Mersenne-Twister stream with a draw counter.

    Identical (seed, call sequence) gives identical output on every
    platform; spawn(i) derives statistically independent child streams by
    hashing (seed, i), so parallel shards can merge associatively.
    """

    def __init__(self, seed):
        self.seed = int(seed) & _MASK64
        self.counter = 0
        self._rng = random.Random(self.seed)

    def bits53(self):
        """A uniform 53-bit integer (the dyadic numerator of a uniform)."""
        self.counter += 1
        return self._rng.getrandbits(53)

    def uniform(self):
        return self.bits53() / _U53

    def randrange(self, n):
        self.counter += 1
        return self._rng.randrange(n)

    def spawn(self, i):
        digest = hashlib.blake2b(
            f"{self.seed}:{int(i)}".encode(), digest_size=8
        ).digest()
        return RngStream(int.from_bytes(digest, "big"))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, counter={self.counter})"


def _spawn_seed(seed, i):
    digest = hashlib.blake2b(f"{int(seed)}:{int(i)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


# ---------------------------------------------------------------------------
# Plane trees and forests
# ---------------------------------------------------------------------------


def _lukasiewicz_ok(counts):
    """True iff counts is the DFS child-count sequence of exactly one tree."""
    pending = 1
    for i, c in enumerate(counts):
        pending += c - 1
        if pending <= 0 and i != len(counts) - 1:
            return False
    return pending == 0


def tree_depths(counts):
    """Depth of each vertex in DFS order."""
    depths = []
    stack = []
    for c in counts:
        depths.append(len(stack))
        stack.append(c)
        while stack and stack[-1] == 0:
            stack.pop()
            if stack:
                stack[-1] -= 1
    return depths


@dataclass(frozen=True)
class PlaneTree:
    """Plane tree as its depth-first child-count sequence.

    spine, when present, lists the DFS indices of a root-to-leaf marked
    path (one vertex per generation, used by the conditioned samplers).
    """

    child_counts: tuple
    spine: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "child_counts", tuple(self.child_counts))
        if not _lukasiewicz_ok(self.child_counts):
            raise ValueError("child counts do not encode exactly one tree")
        if self.spine is not None:
            object.__setattr__(self, "spine", tuple(self.spine))

    @property
    def size(self):
        return len(self.child_counts)

    def depths(self):
        return tree_depths(self.child_counts)

    def height(self):
        return max(self.depths())

    def parents(self):
        """Parent DFS index of each vertex (-1 for the root)."""
        par = [-1] * self.size
        stack = []
        for i, c in enumerate(self.child_counts):
            if stack:
                par[i] = stack[-1][0]
            stack.append([i, c])
            while stack and stack[-1][1] == 0:
                stack.pop()
                if stack:
                    stack[-1][1] -= 1
        return par

    def vertices_at(self, g):
        """DFS indices of the generation-g vertices, left to right."""
        return [i for i, d in enumerate(self.depths()) if d == g]

    def count_at(self, g):
        return sum(1 for d in self.depths() if d == g)


@dataclass(frozen=True)
class PlaneForest:
    """Ordered forest under a height cap.

    p is the total last-generation population, q the number of trees;
    distinguished, when present, is (tree_index, dfs_index) of a marked
    generation-height_cap vertex and must sit in tree 0 (the centered
    convention for hull skeletons and their truncations).
    """

    trees: tuple
    height_cap: int
    distinguished: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        if self.distinguished is not None:
            object.__setattr__(self, "distinguished", tuple(self.distinguished))
        self.validate()

    @property
    def q(self):
        return len(self.trees)

    @property
    def p(self):
        return sum(t.count_at(self.height_cap) for t in self.trees)

    def validate(self):
        if self.height_cap < 1:
            raise ValueError("height_cap must be >= 1")
        if not self.trees:
            raise ValueError("a forest needs at least one tree")
        for t in self.trees:
            if t.height() > self.height_cap:
                raise ValueError("tree exceeds the height cap")
        if self.p < 1:
            raise ValueError("no vertex at the last generation")
        if self.distinguished is not None:
            ti, vi = self.distinguished
            if ti != 0:
                raise ValueError("distinguished vertex must lie in tree 0")
            tree = self.trees[0]
            if not (0 <= vi < tree.size) or tree.depths()[vi] != self.height_cap:
                raise ValueError("distinguished vertex not at the last generation")
        return True


def forest_to_json(f):
    """Canonical JSON encoding; byte-exact round-trip with forest_from_json."""
    obj = {
        "height_cap": f.height_cap,
        "trees": [list(t.child_counts) for t in f.trees],
        "distinguished": list(f.distinguished) if f.distinguished else None,
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def forest_from_json(text):
    obj = json.loads(text)
    distinguished = obj["distinguished"]
    trees = []
    for i, counts in enumerate(obj["trees"]):
        spine = None
        if distinguished is not None and i == distinguished[0]:
            spine = _path_to_root(counts, distinguished[1])
        trees.append(PlaneTree(tuple(counts), spine))
    return PlaneForest(
        tuple(trees),
        obj["height_cap"],
        tuple(distinguished) if distinguished is not None else None,
    )


def _path_to_root(counts, vi):
    """DFS indices from the root down to vertex vi (the derived spine)."""
    par = PlaneTree(tuple(counts)).parents()
    path = [vi]
    while par[path[-1]] != -1:
        path.append(par[path[-1]])
    return tuple(reversed(path))


# ---------------------------------------------------------------------------
# Guarded inverse-CDF tables
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _theta_floats(nmax):
    return np.asarray(laws.theta_float(nmax), dtype=float)


def _theta_floats_pow2(n):
    return _theta_floats(1 << max(8, n).bit_length())


class _GuardedTable:
    """Inverse-CDF sampler with a float fast path and exact escalation.

    float_masses(L) must return the first L masses with ~1e-13 relative
    accuracy; exact_mass(k), when given, returns the exact rational mass.
    Draws within GUARD of a float boundary re-run the comparison against
    exact cumulative sums, provided the boundary index is inside the exact
    lane; the support is extended on demand until the tail drops below
    TAIL_EPS, after which out-of-range draws raise CutoffExceededError.
    """

    def __init__(
        self,
        float_masses,
        exact_mass=None,
        start=64,
        exact_limit=EXACT_LANE_LIMIT,
        max_length=None,
    ):
        self._float_masses = float_masses
        self._exact_mass = exact_mass
        self._exact_limit = exact_limit
        self._max_length = max_length
        self._exact_cum = []
        self._exact_run = ZERO
        self.cum = []
        self._rebuild(start)

    def _rebuild(self, length):
        if self._max_length is not None:
            length = min(length, self._max_length)
        masses = self._float_masses(length)
        self.cum = list(np.cumsum(np.asarray(masses, dtype=float)))

    @property
    def tail(self):
        return 1.0 - self.cum[-1]

    def _exhausted(self):
        return self._max_length is not None and len(self.cum) >= self._max_length

    def extend_to_tail(self, eps):
        while self.tail >= eps and not self._exhausted():
            self._rebuild(2 * len(self.cum))

    def _exact_cum_upto(self, k):
        while len(self._exact_cum) <= k:
            self._exact_run += self._exact_mass(len(self._exact_cum))
            self._exact_cum.append(self._exact_run)
        return self._exact_cum

    def sample(self, rng):
        u_bits = rng.bits53()
        uf = u_bits / _U53
        while uf + GUARD >= self.cum[-1]:
            if self.tail < TAIL_EPS or self._exhausted():
                if uf >= self.cum[-1]:
                    raise CutoffExceededError(
                        "draw beyond tabulated support (tail < 1e-12)"
                    )
                break
            self._rebuild(2 * len(self.cum))
        k = bisect.bisect_right(self.cum, uf)
        k = min(k, len(self.cum) - 1)
        near = (self.cum[k] - uf < GUARD) or (k > 0 and uf - self.cum[k - 1] < GUARD)
        if near and self._exact_mass is not None and k + 1 < self._exact_limit:
            ue = Rat(u_bits, 1 << 53)
            cum = self._exact_cum_upto(k + 1)
            j = 0
            while cum[j] <= ue:
                j += 1
                if j >= len(cum):
                    cum = self._exact_cum_upto(len(cum) + 1)
            return j
        return k


def _tilt_key(x):
    """Canonical exact key for a tilt parameter in [0, 1]."""
    if laws.is_rational(x):
        return Rat(x)
    if isinstance(x, (int, Fraction)):
        return Rat(x)
    return Rat(Fraction(float(x)))


@lru_cache(maxsize=None)
def _tilted_table(x_num, x_den):
    x = Rat(x_num, x_den)
    if x == 0:
        return _GuardedTable(lambda L: [1.0] + [0.0] * (L - 1), lambda k: ONE if k == 0 else ZERO)
    norm = ONE if x == 1 else laws.g_theta(x)
    exact = None
    if laws.is_rational(norm):
        exact = lambda k: laws.theta(k) * x**k / norm
    xf, nf = float(x), float(norm)

    def floats(L):
        th = _theta_floats_pow2(L)[:L]
        return th * np.power(xf, np.arange(L)) / nf

    return _GuardedTable(floats, exact)


def sample_offspring_tilted(x, rng):
    """One draw from the tilted offspring law theta(c) x^c / g_theta(x).

    x = pi_{d-1} gives the extinct-tree offspring law at remaining depth d
    (g_theta(pi_{d-1}) = pi_d); x = 1 is plain theta.  Exact for the
    rational tilts the samplers use; beyond the exact lane (deep theta
    tail) the float table decides alone.
    """
    xk = _tilt_key(x)
    if not (0 <= xk <= 1):
        raise ValueError("x must lie in [0, 1]")
    return _tilted_table(xk.numerator, xk.denominator).sample(rng)


def extinct_offspring_mass(d, c):
    """Exact P(offspring = c) for an extinct-tree vertex with d generations
    left: theta(c) pi_{d-1}^c / pi_d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return laws.theta(c) * laws.pi(d - 1) ** c / laws.pi(d)


@lru_cache(maxsize=None)
def _spine_norm(d):
    """Exact g_theta'(pi_{d-1}) = phi_d(1) / phi_{d-1}(1)."""
    return laws.phi(d, 1) / laws.phi(d - 1, 1)


def spine_offspring_mass(d, c):
    """Exact P(offspring = c) for a spine vertex with d generations left:
    theta(c) c pi_{d-1}^{c-1} / g_theta'(pi_{d-1})."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if c < 1:
        return ZERO
    x = laws.pi(d - 1)
    return laws.theta(c) * c * x ** (c - 1) / _spine_norm(d)


@lru_cache(maxsize=None)
def _spine_table(d):
    x = laws.pi(d - 1)
    xf, nf = float(x), float(_spine_norm(d))

    def floats(L):
        th = _theta_floats_pow2(L)[:L]
        cs = np.arange(L, dtype=float)
        pw = np.ones(L) if L == 1 else np.concatenate(([1.0], np.power(xf, np.arange(L - 1))))
        return th * cs * pw / nf

    return _GuardedTable(floats, lambda c: spine_offspring_mass(d, c))


@lru_cache(maxsize=None)
def _hull_table(r):
    # fixed support in both lanes: the construction already reached a tail
    # below 1e-12 (exact tables) or 1e-14 (float tables)
    if r <= laws.EXACT_HULL_RADIUS_MAX:
        law = laws.hull_perimeter_law(r)
        floats = lambda L: [float(m) for m in law.masses[:L]]
        n = len(law.masses)
        return _GuardedTable(floats, law.mass, start=n, max_length=n)
    masses = laws.hull_perimeter_masses_float(r)
    return _GuardedTable(
        lambda L: masses[:L], None, start=len(masses), max_length=len(masses)
    )


def hull_mass(r, q):
    """Exact P(perimeter = q) at radius r (r within the exact-table range)."""
    return laws.hull_perimeter_law(r).mass(q)


# ---------------------------------------------------------------------------
# Tree samplers
# ---------------------------------------------------------------------------


def _grow_extinct(d, rng, out):
    """Append the DFS child counts of an extinct subtree rooted with d
    generations left."""
    x = laws.pi(d - 1)
    c = _tilted_table(x.numerator, x.denominator).sample(rng)
    out.append(c)
    for _ in range(c):
        _grow_extinct(d - 1, rng, out)


def _grow_spine(d, rng, out, spine):
    spine.append(len(out))
    if d == 0:
        out.append(0)
        return
    c = _spine_table(d).sample(rng)
    out.append(c)
    j = rng.randrange(c)
    for i in range(c):
        if i == j:
            _grow_spine(d - 1, rng, out, spine)
        else:
            _grow_extinct(d - 1, rng, out)


def sample_extinct_tree(m, rng):
    """GW(theta) conditioned on zero vertices at generation m (height <= m-1)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    out = []
    _grow_extinct(m, rng, out)
    return PlaneTree(tuple(out))


def sample_spine_tree(m, rng):
    """GW(theta) conditioned on exactly one vertex at generation m.

    The spine marks the unique surviving line; off-spine subtrees are
    extinct-conditioned at their remaining depths.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    out, spine = [], []
    _grow_spine(m, rng, out, spine)
    return PlaneTree(tuple(out), tuple(spine))


def sample_hull_skeleton(r, rng, uniform_rotation=False):
    """Skeleton of the radius-r hull: q ~ perimeter law, one spine tree at a
    uniform position, extinct trees elsewhere; p = 1.

    Default output is centered (rotated so the spine tree is tree 0, its
    generation-r vertex distinguished); uniform_rotation=True keeps the
    uniform position and drops the marks, giving each ordered rotation of a
    forest equal probability.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    q = _hull_table(r).sample(rng)
    j = rng.randrange(q)
    trees = []
    spine_tree = None
    for i in range(q):
        if i == j:
            out, spine = [], []
            _grow_spine(r, rng, out, spine)
            spine_tree = PlaneTree(tuple(out), tuple(spine))
            trees.append(spine_tree)
        else:
            out = []
            _grow_extinct(r, rng, out)
            trees.append(PlaneTree(tuple(out)))
    if uniform_rotation:
        stripped = tuple(PlaneTree(t.child_counts) for t in trees)
        return PlaneForest(stripped, r, None)
    rotated = tuple(trees[j:] + trees[:j])
    return PlaneForest(rotated, r, (0, spine_tree.spine[-1]))


def truncate_forest(f, cap):
    """The forest of the first `cap` generations of f.

    Tree order and count are preserved; the distinguished mark moves to the
    spine vertex at the new last generation when the spine is available.
    """
    if not (1 <= cap <= f.height_cap):
        raise ValueError("cap must lie in 1..height_cap")
    if cap == f.height_cap:
        return f
    new_trees = []
    distinguished = None
    for idx, t in enumerate(f.trees):
        depths = t.depths()
        counts = []
        idx_map = {}
        for i, c in enumerate(t.child_counts):
            if depths[i] <= cap:
                idx_map[i] = len(counts)
                counts.append(0 if depths[i] == cap else c)
        spine = None
        if t.spine is not None:
            kept = [idx_map[i] for i in t.spine if i in idx_map]
            spine = tuple(kept)
            if idx == 0 and f.distinguished is not None and len(kept) == cap + 1:
                distinguished = (0, kept[-1])
        new_trees.append(PlaneTree(tuple(counts), spine))
    return PlaneForest(tuple(new_trees), cap, distinguished)


def sample_annulus_skeleton(u, w, rng):
    """Skeleton between radii u and w: the radius-w hull skeleton truncated
    at generation w - u.  q is perimeter-law(w) distributed, the truncated
    population p is perimeter-law(u) distributed (u >= 1)."""
    if not (0 <= u < w):
        raise ValueError("need 0 <= u < w")
    hull = sample_hull_skeleton(w, rng)
    return truncate_forest(hull, w - u)


# ---------------------------------------------------------------------------
# Forest statistics
# ---------------------------------------------------------------------------


def count_max_height_trees(f):
    """Number of trees attaining the forest's height cap (>= 1)."""
    return sum(1 for t in f.trees if t.height() == f.height_cap)


def count_property_P(f, c0, r):
    """Number of trees with at least c0 r^2 vertices at generation 2r - 1
    that have a child at generation 2r.  Requires height_cap == 2r."""
    if f.height_cap != 2 * r:
        raise ValueError("forest height cap must equal 2r")
    threshold = Fraction(c0) * r * r
    if threshold <= 0:
        raise ValueError("c0 must be positive")
    hits = 0
    for t in f.trees:
        depths = t.depths()
        fertile = sum(
            1
            for i, c in enumerate(t.child_counts)
            if depths[i] == 2 * r - 1 and c >= 1
        )
        if fertile >= threshold:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# Vectorized Monte Carlo lane
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _np_cdf_tilted(d):
    """Extinct-offspring CDF at remaining depth d, tail < 1e-13."""
    x = laws.pi(d - 1)
    table = _tilted_table(x.numerator, x.denominator)
    table.extend_to_tail(1e-13)
    return np.asarray(table.cum)


@lru_cache(maxsize=None)
def _np_cdf_spine(d):
    table = _spine_table(d)
    table.extend_to_tail(1e-13)
    return np.asarray(table.cum)


@lru_cache(maxsize=None)
def _np_cdf_hull(r):
    table = _hull_table(r)
    table.extend_to_tail(1e-12)
    return np.asarray(table.cum)


def _np_draw(rng, cdf, size):
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1).astype(np.int64)


def annulus_batch(u, w, n, seed, shard_size=20000):
    """Vectorized annulus-skeleton marginals: n forests between radii u, w.

    Returns {"q", "p", "n_max_height"} as int64 arrays of length n.  Same
    per-generation laws as sample_annulus_skeleton, drawn with numpy
    (PCG64(seed)); shards of shard_size forests use spawned seeds and
    concatenate, so results are independent of shard boundaries only
    through the seed schedule (fixed by n and shard_size).
    """
    if not (0 <= u < w):
        raise ValueError("need 0 <= u < w")
    outs = []
    for s, start in enumerate(range(0, n, shard_size)):
        cnt = min(shard_size, n - start)
        outs.append(_annulus_shard(u, w, cnt, _spawn_seed(seed, s)))
    return {
        key: np.concatenate([o[key] for o in outs]) for key in ("q", "p", "n_max_height")
    }


def _annulus_shard(u, w, n, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    h = w - u
    q = _np_draw(rng, _np_cdf_hull(w), n)
    forest_of_tree = np.repeat(np.arange(n), q - 1)
    T = int(forest_of_tree.size)
    tree_pop = np.ones(T, dtype=np.int64)
    spine_off = np.zeros(n, dtype=np.int64)
    for j in range(h):
        d = w - j  # generations left below the current one
        ext_cdf = _np_cdf_tilted(d)
        rep = np.repeat(np.arange(T), tree_pop)
        c = _np_draw(rng, ext_cdf, rep.size)
        tree_pop = np.bincount(rep, weights=c, minlength=T).astype(np.int64)
        repf = np.repeat(np.arange(n), spine_off)
        c2 = _np_draw(rng, ext_cdf, repf.size)
        new_off = np.bincount(repf, weights=c2, minlength=n).astype(np.int64)
        cs = _np_draw(rng, _np_cdf_spine(d), n)
        spine_off = new_off + (cs - 1)
    ext_p = np.bincount(forest_of_tree, weights=tree_pop, minlength=n).astype(np.int64)
    surv = np.bincount(
        forest_of_tree, weights=(tree_pop > 0), minlength=n
    ).astype(np.int64)
    return {"q": q, "p": 1 + spine_off + ext_p, "n_max_height": 1 + surv}


def hull_volume_scores(r, n, seed, shard_size=2000):
    """Conditional-mean hull volumes of n sampled radius-r hull skeletons.

    Given a skeleton, the expected quadrangulation volume (inner faces of
    the hull) is p + sum over vertices v above the last generation of
    (slot_mean_volume(c_v + 1) - c_v); here p = 1.  Returns a float array
    of length n, vectorized per generation like annulus_batch.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    outs = []
    for s, start in enumerate(range(0, n, shard_size)):
        cnt = min(shard_size, n - start)
        outs.append(_volume_shard(r, cnt, _spawn_seed(seed, s)))
    return np.concatenate(outs)


@lru_cache(maxsize=None)
def _slot_mean_array(pmax):
    return np.asarray(laws.slot_mean_float(pmax), dtype=float)


def _volume_shard(r, n, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    spine_cdfs = {d: _np_cdf_spine(d) for d in range(1, r + 1)}
    ext_cdfs = {d: _np_cdf_tilted(d) for d in range(1, r + 1)}
    cmax = max(
        max(len(c) for c in spine_cdfs.values()),
        max(len(c) for c in ext_cdfs.values()),
    )
    slot = _slot_mean_array(cmax + 1)
    # score[c] = slot_mean(c + 1) - c, the expected face surplus of a
    # vertex with c children, for c = 0..cmax-1
    score = slot[1 : cmax + 1] - np.arange(cmax, dtype=float)
    q = _np_draw(rng, _np_cdf_hull(r), n)
    forest_of_tree = np.repeat(np.arange(n), q - 1)
    T = int(forest_of_tree.size)
    tree_pop = np.ones(T, dtype=np.int64)
    spine_off = np.zeros(n, dtype=np.int64)
    vol = np.ones(n, dtype=float)  # p = 1
    for j in range(r):
        d = r - j
        rep = np.repeat(forest_of_tree, tree_pop)
        rep_tree = np.repeat(np.arange(T), tree_pop)
        c = _np_draw(rng, ext_cdfs[d], rep_tree.size)
        vol += np.bincount(rep, weights=score[c], minlength=n)
        tree_pop = np.bincount(rep_tree, weights=c, minlength=T).astype(np.int64)
        repf = np.repeat(np.arange(n), spine_off)
        c2 = _np_draw(rng, ext_cdfs[d], repf.size)
        vol += np.bincount(repf, weights=score[c2], minlength=n)
        new_off = np.bincount(repf, weights=c2, minlength=n).astype(np.int64)
        cs = _np_draw(rng, spine_cdfs[d], n)
        vol += score[cs]
        spine_off = new_off + (cs - 1)
    return vol
