"""Exact laws for truncated quadrangulations and their hull skeletons.

Everything here is driven by two generating functions evaluated at the
critical weight 12^{-1} per inner face:

    U(y)  = (1/24) * sqrt((18-y)(2-y)^3) - 1/2 + y/2 - y^2/24,

whose coefficient of y^p is Z(p) = sum_n 12^{-n} #Q(n,p), the Boltzmann
partition function of truncated quadrangulations with boundary size p, and

    sum_p kappa_p y^p = (128*sqrt(3)/sqrt(pi)) * y / sqrt((18-y)(2-y)^3),

which fixes the polynomial-growth constants kappa_p of the counts
#Q(n,p) ~ kappa_p n^{-5/2} 12^n.  The offspring law of the branching
process embedded in hull boundaries is theta(k) = 6 * 2^k * Z(k+1), with
probability generating function

    g(y) = 1 - 8/((sqrt((9-y)/(1-y)) + 2)^2 - 1),

whose r-fold iterate replaces 2 by 2r.  All distributions exposed here
(theta, the hull perimeter law, the law of the number of tallest trees in
an annulus skeleton, Boltzmann volume laws) are exactly rational: the
single irrational scale kappa_1 = 32/sqrt(3*pi) always cancels.  Rational
arithmetic uses gmpy2.mpq when available and fractions.Fraction otherwise.

Coefficient extraction has two independent engines: a truncated-series
engine (Newton iteration for square roots and reciprocals) and linear
recurrences with polynomial coefficients derived from the algebraic
equations satisfied by the three square-root kernels.  The recurrences are
the fast path; the series engine is retained as a cross-check oracle and
both must agree exactly on overlapping ranges.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

try:
    from gmpy2 import mpq as _mpq

    def Rat(num, den=1):
        return _mpq(num, den)

    _RAT_TYPES = (type(_mpq(1)), Fraction, int)
except ImportError:  # pragma: no cover - exercised only without gmpy2
    def Rat(num, den=1):
        return Fraction(num, den)

    _RAT_TYPES = (Fraction, int)

ZERO = Rat(0)
ONE = Rat(1)

#: kappa_1 = 32/sqrt(3*pi), the single irrational scale factor of the
#: kappa_p family.  Exposed for display only; every downstream law is
#: arranged so that kappa_1 cancels.
KAPPA1 = 32.0 / math.sqrt(3.0 * math.pi)

#: leading constant of theta(k) ~ THETA_TAIL_CONST * k^{-5/2}
THETA_TAIL_CONST = 3.0 * math.sqrt(2.0) / (4.0 * math.sqrt(math.pi))


def is_rational(x):
    return isinstance(x, _RAT_TYPES)


def rat_sqrt(x):
    """Exact square root of a rational, or None if it is not a perfect square."""
    num, den = x.numerator, x.denominator
    if num < 0:
        return None
    rn = math.isqrt(num)
    rd = math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Rat(rn, rd)
    return None


# ---------------------------------------------------------------------------
# Truncated power series with exact rational coefficients
# ---------------------------------------------------------------------------


class TruncatedSeries:
    """Power series truncated at a fixed order, with exact coefficients.

    Operations never look past the declared order; square roots use Newton
    iteration and require the constant term to be a perfect rational square.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order=None):
        if order is None:
            order = len(coeffs) - 1
        cs = [Rat(c) for c in coeffs[: order + 1]]
        cs.extend(ZERO for _ in range(order + 1 - len(cs)))
        self.coeffs = cs
        self.order = order

    def __getitem__(self, n):
        if 0 <= n <= self.order:
            return self.coeffs[n]
        raise IndexError(f"coefficient {n} beyond order {self.order}")

    def __eq__(self, other):
        return (
            isinstance(other, TruncatedSeries)
            and self.order == other.order
            and self.coeffs == other.coeffs
        )

    def __add__(self, other):
        other = _coerce(other, self.order)
        n = min(self.order, other.order)
        return TruncatedSeries(
            [self.coeffs[i] + other.coeffs[i] for i in range(n + 1)], n
        )

    def __sub__(self, other):
        other = _coerce(other, self.order)
        n = min(self.order, other.order)
        return TruncatedSeries(
            [self.coeffs[i] - other.coeffs[i] for i in range(n + 1)], n
        )

    def __mul__(self, other):
        if is_rational(other):
            return TruncatedSeries([c * other for c in self.coeffs], self.order)
        n = min(self.order, other.order)
        out = [ZERO] * (n + 1)
        for i, a in enumerate(self.coeffs[: n + 1]):
            if a == 0:
                continue
            for j in range(n + 1 - i):
                b = other.coeffs[j]
                if b != 0:
                    out[i + j] += a * b
        return TruncatedSeries(out, n)

    __rmul__ = __mul__

    def scalar_div(self, c):
        inv = ONE / Rat(c)
        return TruncatedSeries([a * inv for a in self.coeffs], self.order)

    def truncate(self, order):
        return TruncatedSeries(self.coeffs[: order + 1], min(order, self.order))

    def reciprocal(self):
        """1/self by Newton iteration x -> x(2 - self*x); needs coeffs[0] != 0."""
        if self.coeffs[0] == 0:
            raise ZeroDivisionError("reciprocal of series with zero constant term")
        n = self.order
        x = TruncatedSeries([ONE / self.coeffs[0]], 0)
        prec = 1
        while prec <= n:
            prec = min(2 * prec, n + 1)
            a = self.truncate(prec - 1)
            x = TruncatedSeries(x.coeffs, prec - 1)
            x = x * (TruncatedSeries([Rat(2)], prec - 1) - a * x)
        return x.truncate(n)

    def sqrt(self):
        """Square root by Newton iteration x -> (x + self/x)/2.

        Defined only when the constant term is a perfect rational square.
        """
        c0 = rat_sqrt(self.coeffs[0])
        if c0 is None or c0 == 0:
            raise ValueError("series sqrt needs a nonzero perfect-square constant term")
        n = self.order
        x = TruncatedSeries([c0], 0)
        prec = 1
        half = Rat(1, 2)
        while prec <= n:
            prec = min(2 * prec, n + 1)
            a = self.truncate(prec - 1)
            x = TruncatedSeries(x.coeffs, prec - 1)
            x = (x + a * x.reciprocal()) * half
        return x.truncate(n)


def _coerce(x, order):
    if is_rational(x):
        return TruncatedSeries([Rat(x)], order)
    return x


def poly_W(order):
    """(18-y)(2-y)^3 = 144 - 224y + 120y^2 - 24y^3 + y^4 as a TruncatedSeries."""
    base = [Rat(144), Rat(-224), Rat(120), Rat(-24), Rat(1)]
    return TruncatedSeries(base[: order + 1] + [ZERO] * max(0, order - 4), order)


def poly_W1(order):
    """(18-y)(2-y) = 36 - 20y + y^2 as a TruncatedSeries."""
    base = [Rat(36), Rat(-20), Rat(1)]
    return TruncatedSeries(base[: order + 1] + [ZERO] * max(0, order - 2), order)


# ---------------------------------------------------------------------------
# Exact coefficient streams via P-finite recurrences
#
# W = (18-y)(2-y)^3 satisfies W' / W = (-240 + 240y - 72y^2 + 4y^3) / W, so
# sqrt(W), 1/sqrt(W) and 1/sqrt((18-y)(2-y)) satisfy first-order linear ODEs
# with polynomial coefficients, giving 4-term recurrences for their
# coefficients.  Seeds were computed by hand and the whole streams are
# cross-checked against the Newton series engine in the tests.
# ---------------------------------------------------------------------------


def sqrtW_stream(nmax):
    """Exact coefficients of sqrt((18-y)(2-y)^3) up to order nmax."""
    w = [Rat(12), Rat(-28, 3), Rat(37, 27), Rat(16, 243)]
    if nmax < 3:
        return w[: nmax + 1]
    for n in range(3, nmax):
        nxt = (
            Rat(448 * n - 224) * w[n]
            - Rat(240 * (n - 2)) * w[n - 1]
            + Rat(48 * n - 168) * w[n - 2]
            - Rat(2 * (n - 5)) * w[n - 3]
        ) / Rat(288 * (n + 1))
        w.append(nxt)
    return w


def invsqrtW_stream(nmax):
    """Exact coefficients of 1/sqrt((18-y)(2-y)^3) up to order nmax."""
    v = [Rat(1, 12), Rat(7, 108), Rat(53, 1296)]
    if nmax < 2:
        return v[: nmax + 1]
    for n in range(2, nmax):
        back3 = v[n - 3] if n >= 3 else ZERO
        nxt = (
            Rat(448 * n + 224) * v[n]
            - Rat(240 * n) * v[n - 1]
            + Rat(48 * n - 24) * v[n - 2]
            - Rat(2 * (n - 1)) * back3
        ) / Rat(288 * (n + 1))
        v.append(nxt)
    return v


def invsqrtW1_stream(nmax):
    """Exact coefficients of 1/sqrt((18-y)(2-y)) up to order nmax."""
    t = [Rat(1, 6), Rat(5, 108)]
    if nmax < 1:
        return t[: nmax + 1]
    for n in range(1, nmax):
        nxt = (Rat(20 * n + 10) * t[n] - Rat(n) * t[n - 1]) / Rat(36 * (n + 1))
        t.append(nxt)
    return t


try:
    import gmpy2 as _gmpy2

    def _highprec_stream(seeds, step, nmax):
        """Run a scaled 4-term recurrence in 120-bit floats, return float64s.

        The 2^n scaling keeps the true solution polynomially decaying, but
        the recurrence carries a spurious mode that grows polynomially
        relative to it, so plain float64 loses ~n^3 ulps; 120 bits keeps
        the relative error below 1e-18 out to n = 10^7.
        """
        with _gmpy2.context(precision=120):
            vals = [_gmpy2.mpfr(s.numerator) / _gmpy2.mpfr(s.denominator) for s in seeds]
            for n in range(len(seeds) - 1, nmax):
                vals.append(step(n, vals))
            return [float(x) for x in vals[: nmax + 1]]

except ImportError:  # pragma: no cover
    def _highprec_stream(seeds, step, nmax):
        vals = [s.numerator / s.denominator for s in seeds]
        for n in range(len(seeds) - 1, nmax):
            vals.append(step(n, vals))
        return vals[: nmax + 1]


def sqrtW_float_stream(nmax):
    """Float coefficients 2^n [y^n] sqrt(W), via the scaled recurrence."""
    seeds = [Fraction(12), Fraction(-56, 3), Fraction(148, 27), Fraction(128, 243)]

    def step(n, w):
        return (
            (896 * n - 448) * w[n]
            - (960 * (n - 2)) * w[n - 1]
            + (384 * n - 1344) * w[n - 2]
            - (32 * n - 160) * w[n - 3]
        ) / (288 * (n + 1))

    return _highprec_stream(seeds, step, nmax)


def invsqrtW_float_stream(nmax):
    """Float coefficients 2^n [y^n] (1/sqrt(W)), via the scaled recurrence."""
    seeds = [Fraction(1, 12), Fraction(7, 54), Fraction(53, 324)]

    def step(n, v):
        back3 = v[n - 3] if n >= 3 else 0
        return (
            (896 * n + 448) * v[n]
            - (960 * n) * v[n - 1]
            + (384 * n - 192) * v[n - 2]
            - (32 * (n - 1)) * back3
        ) / (288 * (n + 1))

    return _highprec_stream(seeds, step, nmax)


def invsqrtW1_float_stream(nmax):
    """Float coefficients 2^n [y^n] 1/sqrt((18-y)(2-y)), scaled recurrence."""
    seeds = [Fraction(1, 6), Fraction(5, 54)]

    def step(n, t):
        return ((40 * n + 20) * t[n] - (4 * n) * t[n - 1]) / (36 * (n + 1))

    return _highprec_stream(seeds, step, nmax)


# ---------------------------------------------------------------------------
# Z(p), kappa ratios, theta
# ---------------------------------------------------------------------------


def _pow2ceil(n):
    """Round up to a power of two so cached streams get reused."""
    return 1 << max(n, 4).bit_length()


@lru_cache(maxsize=None)
def _sqrtW_cached(nmax):
    return tuple(sqrtW_stream(nmax))


@lru_cache(maxsize=None)
def _invsqrtW_cached(nmax):
    return tuple(invsqrtW_stream(nmax))


@lru_cache(maxsize=None)
def _invsqrtW1_cached(nmax):
    return tuple(invsqrtW1_stream(nmax))


def series_U(order):
    """U at the critical weight: coefficient of y^p is Z(p); constant term 0."""
    if order < 1:
        raise ValueError("order must be >= 1")
    s = poly_W(order).sqrt().scalar_div(24)
    corr = [Rat(-1, 2), Rat(1, 2), Rat(-1, 24)]
    u = s + TruncatedSeries(corr[: order + 1] + [ZERO] * max(0, order - 2), order)
    return u


def Z(p):
    """Partition function Z(p) = sum_n 12^{-n} #Q(n,p), exactly."""
    if p < 1:
        raise ValueError("p must be >= 1")
    w = _sqrtW_cached(_pow2ceil(p))
    base = w[p] / 24
    if p == 1:
        return base + Rat(1, 2)
    if p == 2:
        return base - Rat(1, 24)
    return base


def kappa_ratios(pmax):
    """kappa_p / kappa_1 for p = 1..pmax; entry [p] indexes p, entry [0] unused.

    Ratios of coefficients of y / sqrt((18-y)(2-y)^3); the prefactor
    128*sqrt(3/pi) cancels.  kappa_1 itself is the module constant KAPPA1.
    """
    if pmax < 1:
        raise ValueError("pmax must be >= 1")
    v = _invsqrtW_cached(_pow2ceil(pmax))
    inv_v0 = ONE / v[0]
    return [ZERO] + [v[p - 1] * inv_v0 for p in range(1, pmax + 1)]


def theta(k):
    """Offspring mass theta(k) = 6 * 2^k * Z(k+1), exactly."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return Rat(6) * Rat(2) ** k * Z(k + 1)


def theta_float(kmax):
    """Float theta(0..kmax) via the scaled recurrence; O(kmax) time."""
    w = sqrtW_float_stream(kmax + 1)
    out = [2.0 / 3.0, 5.0 / 27.0]
    for k in range(2, kmax + 1):
        out.append(w[k + 1] / 8.0)
    return out[: kmax + 1]


# ---------------------------------------------------------------------------
# Law tables
# ---------------------------------------------------------------------------


@dataclass
class LawTable:
    """Probability law on {0,...,cutoff} with exact masses and a tail bound.

    sum(masses) + tail_bound == 1 exactly; cumulative is the prefix sum.
    """

    masses: list
    tail_bound: object
    description: str = ""
    cumulative: list = field(default=None)

    def __post_init__(self):
        if self.cumulative is None:
            run = ZERO
            cum = []
            for m in self.masses:
                run = run + m
                cum.append(run)
            self.cumulative = cum

    @property
    def cutoff(self):
        return len(self.masses) - 1

    def check_normalized(self):
        total = sum(self.masses, ZERO) + self.tail_bound
        return total == 1 and all(m >= 0 for m in self.masses) and self.tail_bound >= 0

    def mass(self, k):
        if 0 <= k <= self.cutoff:
            return self.masses[k]
        return ZERO

    def mean_partial(self):
        """Exact mean restricted to the tabulated support."""
        return sum((Rat(k) * m for k, m in enumerate(self.masses)), ZERO)

    def pgf(self, a):
        """Evaluate sum_k masses[k] a^k (tabulated part only)."""
        if is_rational(a):
            acc, pw = ZERO, ONE
            for m in self.masses:
                acc = acc + m * pw
                pw = pw * a
            return acc
        acc, pw = 0.0, 1.0
        for m in self.masses:
            acc += float(m) * pw
            pw *= a
        return acc

    def cumulative_floats(self):
        return [float(c) for c in self.cumulative]

    def to_csv_rows(self):
        rows = [("value", "mass_num", "mass_den", "mass_float", "cumulative_float")]
        for k, m in enumerate(self.masses):
            rows.append(
                (
                    str(k),
                    str(m.numerator),
                    str(m.denominator),
                    repr(float(m)),
                    repr(float(self.cumulative[k])),
                )
            )
        return rows

    def to_json_obj(self):
        return {
            "description": self.description,
            "cutoff": self.cutoff,
            "masses": [f"{m.numerator}/{m.denominator}" for m in self.masses],
            "tail_bound": f"{self.tail_bound.numerator}/{self.tail_bound.denominator}",
        }


def theta_law(kmax):
    """LawTable for theta restricted to {0..kmax}; exact tail bound."""
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    w = _sqrtW_cached(_pow2ceil(kmax + 1))
    masses = []
    pw = ONE
    for k in range(kmax + 1):
        masses.append(Rat(6) * pw * _z_from_stream(w, k + 1))
        pw = pw * 2
    tail = ONE - sum(masses, ZERO)
    return LawTable(masses, tail, description=f"theta(kmax={kmax})")


def _z_from_stream(w, p):
    base = w[p] / 24
    if p == 1:
        return base + Rat(1, 2)
    if p == 2:
        return base - Rat(1, 24)
    return base


# ---------------------------------------------------------------------------
# g, its iterates, pi_r, phi
# ---------------------------------------------------------------------------


def _g_closed_form(y, shift):
    """1 - 8/((sqrt((9-y)/(1-y)) + shift)^2 - 1), exact if possible."""
    if is_rational(y):
        y = Rat(y)
        if y >= 1:
            raise ValueError("y must be < 1")
        ratio = (9 - y) / (1 - y)
        s = rat_sqrt(ratio)
        if s is not None:
            return ONE - Rat(8) / ((s + shift) ** 2 - 1)
        y = float(y)
    if y >= 1.0:
        raise ValueError("y must be < 1")
    s = math.sqrt((9.0 - y) / (1.0 - y))
    return 1.0 - 8.0 / ((s + shift) ** 2 - 1.0)


def g_theta(y):
    """The offspring pgf g(y); exact when (9-y)/(1-y) is a perfect square."""
    return _g_closed_form(y, 2)


def g_theta_iter(r, y):
    """r-fold iterate of g; the closed form replaces the shift 2 by 2r."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return _g_closed_form(y, 2 * r)


def pi(r):
    """Extinction probability by generation r: pi_r = r(r+3)/((r+1)(r+2))."""
    if r < 0:
        raise ValueError("r must be >= 0")
    val = Rat(r * (r + 3), (r + 1) * (r + 2))
    # the two displayed forms agree identically
    assert val == 1 - Rat(8, (3 + 2 * r) ** 2 - 1)
    return val


def phi(u, p):
    """phi_u(p): probability that the process started from p hits exactly 1
    at time u.  phi_0(p) = 1{p=1}."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if u < 0:
        raise ValueError("u must be >= 0")
    if u == 0:
        return ONE if p == 1 else ZERO
    s = 3 + 2 * u
    return Rat(64, 3) * p * Rat(s, (s * s - 1) ** 2) * pi(u) ** (p - 1)


def survival_probability(r):
    """P(non-extinct at generation r from one progenitor) = 2/((r+1)(r+2))."""
    if r < 0:
        raise ValueError("r must be >= 0")
    val = Rat(2, (r + 1) * (r + 2))
    assert val == Rat(8, (3 + 2 * r) ** 2 - 1)
    return val


# ---------------------------------------------------------------------------
# Hull perimeter law
# ---------------------------------------------------------------------------


def _K_scaled(r):
    """K_r * kappa_1 = (2/3)(2r+3) / (r(r+1)(r+2)(r+3)), the rational part."""
    return Rat(2 * (2 * r + 3), 3 * r * (r + 1) * (r + 2) * (r + 3))


def hull_perimeter_law(r, tail_eps=Rat(1, 10**12)):
    """Exact law of the hull boundary length at radius r.

    Masses P(p) = K_r kappa_p (2 pi_r)^p for p >= 1 (mass 0 at p = 0); the
    kappa_1 factors cancel so every mass is rational.  The cutoff is the
    smallest support point where the remaining mass drops below tail_eps.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if not is_rational(tail_eps):
        tail_eps = Rat(Fraction(tail_eps).limit_denominator(10**15))
    k_scaled = _K_scaled(r)
    x = 2 * pi(r)
    # grow the coefficient stream geometrically until the tail is small
    nmax = 256
    while True:
        v = _invsqrtW_cached(nmax)
        inv_v0 = ONE / v[0]
        masses = [ZERO]
        total = ZERO
        pw = x
        done = False
        for p in range(1, nmax + 2):
            m = k_scaled * (v[p - 1] * inv_v0) * pw
            masses.append(m)
            total += m
            pw = pw * x
            if ONE - total < tail_eps:
                done = True
                break
        if done:
            return LawTable(masses, ONE - total, description=f"hull_perimeter(r={r})")
        nmax *= 2


def hull_perimeter_masses_float(r, tail_eps=1e-14):
    """Float masses of the radius-r perimeter law; O(cutoff) via the scaled
    coefficient recurrence.  Used for sampling tables at radii where the
    exact table would be needlessly expensive."""
    k_scaled = float(_K_scaled(r))
    x = float(pi(r))  # masses use (2 pi_r)^p * v_{p-1}; fold the 2^p scaling
    # v_{p-1} 2^{p-1} is the scaled float stream; mass = K' * vtil[p-1]/vtil[0] *
    # (2 pi)^p * 2^{-(p-1)} * ... arrange as K' * (vtil[p-1]/vtil[0]) * 2 * pi^p
    nmax = 4096
    while True:
        vt = invsqrtW_float_stream(nmax)
        masses = [0.0]
        total = 0.0
        pw = x
        for p in range(1, nmax + 1):
            m = k_scaled * (vt[p - 1] / vt[0]) * 2.0 * pw
            masses.append(m)
            total += m
            pw *= x
            if 1.0 - total < tail_eps:
                return masses
        nmax *= 2


EXACT_HULL_RADIUS_MAX = 10


def perimeter_tail_check(r, a):
    """(upper_tail, lower_tail) = (P(H >= a r^2), P(H <= a r^2)).

    Tails are exact rationals for r <= EXACT_HULL_RADIUS_MAX and computed
    from the high-precision float mass stream beyond that (the exact table's
    cutoff grows like r^2 and rational arithmetic there takes minutes for no
    gain at the tolerances these tails feed into).  The upper tail includes
    the truncation remainder, so it is an upper bound in both regimes.
    """
    threshold = a * r * r
    lo = math.floor(threshold)
    hi = math.ceil(threshold)
    if r <= EXACT_HULL_RADIUS_MAX:
        law = hull_perimeter_law(r)
        lower = law.cumulative[min(lo, law.cutoff)] if lo >= 0 else ZERO
        below = law.cumulative[min(hi - 1, law.cutoff)] if hi >= 1 else ZERO
        upper = ONE - below
        return upper, lower
    masses = hull_perimeter_masses_float(r)
    cutoff = len(masses) - 1
    cum = list(itertools.accumulate(masses))
    lower = cum[min(lo, cutoff)] if lo >= 0 else 0.0
    below = cum[min(hi - 1, cutoff)] if hi >= 1 else 0.0
    return 1.0 - below, lower


# ---------------------------------------------------------------------------
# Law of the number of maximal-height trees in an annulus skeleton
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NegBinomialParams:
    """Negative binomial with pgf ((1-q)/(1-q a))^shape, shape in {1/2, 3/2}."""

    shape: object
    success: object

    def pgf_float(self, a):
        q = float(self.success)
        return ((1.0 - q) / (1.0 - q * a)) ** float(self.shape)

    def mass_coeff(self, j):
        """Coefficient c_j with P(j) = c_j * success^j * (1-success)^shape."""
        if self.shape == Fraction(1, 2):
            return Rat(math.comb(2 * j, j), 4**j)
        if self.shape == Fraction(3, 2):
            return Rat((2 * j + 1) * math.comb(2 * j, j), 4**j)
        raise ValueError("shape must be 1/2 or 3/2")


def n_trees_params(u, w):
    """The two negative-binomial components of the max-height-tree count."""
    if not (1 <= u < w):
        raise ValueError("need 1 <= u < w")
    m = w - u
    pw, pm = pi(w), pi(m)
    q1 = (pw - pm) / (9 - pm)
    q2 = (pw - pm) / (1 - pm)
    return (
        NegBinomialParams(Fraction(1, 2), q1),
        NegBinomialParams(Fraction(3, 2), q2),
    )


def n_trees_p1(u, w):
    """Exact P(N = 1) = ((9-pi_w)/(9-pi_m))^{1/2} ((1-pi_w)/(1-pi_m))^{3/2}.

    With 9 - pi_k = 2(3+2k)^2/((k+1)(k+2)) and 1 - pi_k = 2/((k+1)(k+2))
    this collapses to a rational number.
    """
    m = w - u
    num = Rat((3 + 2 * w) * ((m + 1) * (m + 2)) ** 2)
    den = Rat((3 + 2 * m) * ((w + 1) * (w + 2)) ** 2)
    return num / den


def n_trees_law(u, w, tail_eps=Rat(1, 10**12)):
    """(nb1, nb2, LawTable) for the count N = 1 + NB(1/2,q1) + NB(3/2,q2).

    Masses are exact: P(N = 1 + n) = P(N=1) * sum_{i+j=n} c_i q1^i c_j q2^j
    where the c's are the rational negative-binomial coefficients and the
    irrational normalizations combine into the rational P(N=1).
    """
    nb1, nb2 = n_trees_params(u, w)
    if not is_rational(tail_eps):
        tail_eps = Rat(Fraction(tail_eps).limit_denominator(10**15))
    p1 = n_trees_p1(u, w)
    q1, q2 = nb1.success, nb2.success
    a = [ONE]  # c1_i q1^i
    b = [ONE]  # c2_j q2^j
    masses = [ZERO]
    total = ZERO
    n = 0
    while True:
        conv = sum((a[i] * b[n - i] for i in range(n + 1)), ZERO)
        m = p1 * conv
        masses.append(m)
        total += m
        if ONE - total < tail_eps:
            break
        n += 1
        a.append(nb1.mass_coeff(n) * q1**n)
        b.append(nb2.mass_coeff(n) * q2**n)
        if n > 200000:  # pragma: no cover - safety valve
            raise RuntimeError("n_trees_law cutoff runaway")
    table = LawTable(masses, ONE - total, description=f"n_trees(u={u},w={w})")
    return nb1, nb2, table


def n_trees_pgf(u, w, a):
    """Closed-form E[a^N] (float)."""
    m = w - u
    pw, pm = float(pi(w)), float(pi(m))
    mix = a * pw + (1.0 - a) * pm
    return a * ((9.0 - pw) / (9.0 - mix)) ** 0.5 * ((1.0 - pw) / (1.0 - mix)) ** 1.5


def n_trees_mean(u, w):
    """Exact E[N] = 1 + (1/2) q1/(1-q1) + (3/2) q2/(1-q2)."""
    nb1, nb2 = n_trees_params(u, w)
    q1, q2 = nb1.success, nb2.success
    return 1 + Rat(1, 2) * q1 / (1 - q1) + Rat(3, 2) * q2 / (1 - q2)


# ---------------------------------------------------------------------------
# Survival scaling and the stationary functional
# ---------------------------------------------------------------------------


def survival_scaling(r, lam):
    """(survival probability, scaled Laplace functional) at radius r.

    scaled_laplace = (r^2/2) E[ exp(-lam Y_r / r^2) 1{Y_r != 0} ], computed
    from the closed-form iterate; as r grows it approaches
    1 - (1 + sqrt(2/lam))^{-2}.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if lam <= 0:
        raise ValueError("lam must be > 0")
    surv = survival_probability(r)
    one_minus_y = -math.expm1(-lam / (r * r))
    s = math.sqrt(1.0 + 8.0 / one_minus_y)
    base = (3.0 + 2.0 * r) ** 2 - 1.0
    shifted = (s + 2.0 * r) ** 2 - 1.0
    scaled = (r * r / 2.0) * 8.0 * (1.0 / base - 1.0 / shifted)
    return surv, scaled


def survival_scaling_limit(lam):
    """Limit of the scaled Laplace functional: 1 - (1+sqrt(2/lam))^{-2}."""
    return 1.0 - (1.0 + math.sqrt(2.0 / lam)) ** -2


def stationary_Pi(x):
    """Pi(x) = (48/sqrt(3 pi)) (sqrt((9-x)/(1-x)) - 3).

    Generating function of the stationary sequence h(p) = 2^p kappa_p / p;
    satisfies Pi(g(y)) - Pi(g(0)) = Pi(y).
    """
    if x >= 1:
        raise ValueError("x must be < 1")
    x = float(x)
    return (48.0 / math.sqrt(3.0 * math.pi)) * (math.sqrt((9.0 - x) / (1.0 - x)) - 3.0)


def h_ratio(p):
    """h(p)/h(1) = 2^{p-1} (kappa_p/kappa_1) / p, exact."""
    if p < 1:
        raise ValueError("p must be >= 1")
    ratios = kappa_ratios(p)
    return Rat(2) ** (p - 1) * ratios[p] / p


# ---------------------------------------------------------------------------
# Boltzmann volume laws
# ---------------------------------------------------------------------------


def first_moment_coefficient(p):
    """[y^p] of the inner-face first-moment series, normalized so that
    it equals sum_n n 12^{-n} #Q(n,p).

    From the x-derivative of the counting series at the critical weight:
    the coefficient equals (1/12)[ -y^2/2 - (y/2)(y^2-10y-32)/sqrt((18-y)(2-y)) ]_p.
    The 1/12 normalization is forced by the boundary-size-1 Boltzmann mean
    being exactly 2 (validated against the exhaustive enumeration oracle).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    t = _invsqrtW1_cached(_pow2ceil(p))

    def tt(n):
        return t[n] if n >= 0 else ZERO

    val = -Rat(1, 2) * tt(p - 3) + Rat(5) * tt(p - 2) + Rat(16) * tt(p - 1)
    if p == 2:
        val -= Rat(1, 2)
    return val / 12


def slot_mean_volume(p):
    """Mean inner-face count of a Boltzmann map with boundary size p."""
    return first_moment_coefficient(p) / Z(p)


def slot_mean_float(pmax):
    """Float slot_mean_volume(p) for p = 1..pmax, indexed by p; O(pmax).

    Scale-free form 2 (32 T~_{p-1} + 20 T~_{p-2} - 4 T~_{p-3}) / w~_p in the
    2^n-scaled streams, valid for p >= 3; smaller p carry corrections and
    use the exact values.
    """
    if pmax < 1:
        raise ValueError("pmax must be >= 1")
    t = invsqrtW1_float_stream(max(pmax - 1, 1))
    w = sqrtW_float_stream(max(pmax, 4))
    out = [0.0] * (pmax + 1)
    for p in range(1, min(4, pmax) + 1):
        out[p] = float(slot_mean_volume(p))
    for p in range(5, pmax + 1):
        num = 32.0 * t[p - 1] + 20.0 * t[p - 2] - 4.0 * t[p - 3]
        out[p] = 2.0 * num / w[p]
    return out


def quad_count(m):
    """#rooted quadrangulations with m faces: 2 3^m Cat(m) / (m+2); 1 at m=0."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return 2 * 3**m * math.comb(2 * m, m) // ((m + 1) * (m + 2))


class InfeasibleRangeError(ValueError):
    """No validated counting method covers the requested (nmax, pmax) range."""


def qtr_counts(nmax, pmax):
    """Exact counts #Q(n,p) for 1 <= n <= nmax, 1 <= p <= pmax as a dict.

    Methods: exhaustive rooted enumeration for n <= 5 (any p), and the
    root-edge-splitting bijection #Q(n,1) = #rooted quadrangulations with
    n-1 faces for p = 1 (any n).  Both are cross-validated where they
    overlap, and against the exact partition function Z(p) (partial sums of
    12^{-n} #Q(n,p) never exceed Z(p)).  Ranges not covered raise
    InfeasibleRangeError.
    """
    if nmax < 1 or pmax < 1:
        raise ValueError("nmax and pmax must be >= 1")
    if pmax > 1 and nmax > 5:
        raise InfeasibleRangeError(
            "exact counts for p > 1 are only available via exhaustive "
            "enumeration, which is capped at n <= 5"
        )
    counts = {}
    if nmax <= 5:
        from . import geometry  # deferred: geometry depends on this module

        for n in range(1, nmax + 1):
            for p in range(1, pmax + 1):
                counts[(n, p)] = len(geometry.enumerate_truncated(n, p)) if p <= n else 0
        if pmax >= 1:
            for n in range(1, nmax + 1):
                expect = quad_count(n - 1)
                if counts[(n, 1)] != expect:
                    raise AssertionError(
                        f"enumeration vs bijection mismatch at n={n}: "
                        f"{counts[(n, 1)]} != {expect}"
                    )
    else:  # pmax == 1
        for n in range(1, nmax + 1):
            counts[(n, 1)] = quad_count(n - 1)
    # consistency gate: partial sums below the exact partition function
    for p in range(1, pmax + 1):
        partial = sum(
            Rat(counts[(n, p)], 12**n) for n in range(1, nmax + 1) if (n, p) in counts
        )
        if partial > Z(p):
            raise AssertionError(f"partial Boltzmann sum exceeds Z({p})")
    return counts


def slot_volume_law(p, nmax):
    """Boltzmann law of the inner-face count at boundary size p, n <= nmax.

    Masses 12^{-n} #Q(n,p) / Z(p); the tail bound is exact because Z(p) is.
    """
    counts = qtr_counts(nmax, p)
    zp = Z(p)
    masses = [ZERO] * (nmax + 1)
    for n in range(1, nmax + 1):
        masses[n] = Rat(counts[(n, p)], 12**n) / zp
    total = sum(masses, ZERO)
    return LawTable(masses, ONE - total, description=f"slot_volume(p={p},nmax={nmax})")
