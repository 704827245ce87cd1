"""Exact-law unit tests: frozen constants, cross-engine agreement, and the
algebraic identities the generating functions must satisfy.

Every rational assertion here is exact (== on mpq/Fraction); float streams
are held to 1e-12 relative error against the exact streams at checkpoints.
"""

import math

import pytest
from hypothesis import given, settings, strategies as st

from quadlab import exactlaws as ex
from quadlab.exactlaws import Rat


# ---------------------------------------------------------------------------
# Frozen golden values
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "p, expected",
    [
        (1, Rat(1, 9)),
        (2, Rat(5, 324)),
        (3, Rat(2, 729)),
    ],
)
def test_partition_function_small(p, expected):
    assert ex.Z(p) == expected


@pytest.mark.parametrize(
    "k, expected",
    [
        (0, Rat(2, 3)),
        (1, Rat(5, 27)),
        (2, Rat(16, 243)),
    ],
)
def test_offspring_masses_small(k, expected):
    assert ex.theta(k) == expected


def test_offspring_identity_and_positivity():
    for k in range(0, 60):
        assert ex.theta(k) == 6 * Rat(2) ** k * ex.Z(k + 1)
        assert ex.theta(k) > 0


def test_kappa_ratios():
    ratios = ex.kappa_ratios(3)
    assert ratios[1] == 1
    assert ratios[2] == Rat(7, 9)
    assert ratios[3] == Rat(53, 108)


@pytest.mark.parametrize(
    "r, expected",
    [(1, Rat(2, 3)), (2, Rat(5, 6)), (3, Rat(9, 10)), (10, Rat(65, 66))],
)
def test_extinction_fixed_points(r, expected):
    assert ex.pi(r) == expected


@given(st.integers(min_value=0, max_value=200))
def test_extinction_point_closed_forms(r):
    p = ex.pi(r)
    assert p == Rat(r * (r + 3), (r + 1) * (r + 2))
    assert 1 - p == Rat(2, (r + 1) * (r + 2))
    assert (9 - p) / (1 - p) == (3 + 2 * r) ** 2


def test_survival_probability():
    assert ex.survival_probability(1) == Rat(1, 3)
    assert ex.survival_probability(2) == Rat(1, 6)
    for r in range(1, 30):
        assert ex.survival_probability(r) == 1 - ex.pi(r)


def test_marked_survival_small():
    assert ex.phi(0, 1) == 1
    assert ex.phi(0, 2) == 0
    assert ex.phi(1, 1) == Rat(5, 27)


@given(st.integers(min_value=1, max_value=10), st.integers(min_value=1, max_value=20))
def test_marked_survival_separates(u, p):
    # phi_u(p) = p * pi_u^{p-1} * phi_u(1): a single marked line survives,
    # chosen among p positions, the rest die out.
    assert ex.phi(u, p) == p * ex.pi(u) ** (p - 1) * ex.phi(u, 1)


def test_hull_perimeter_golden():
    law = ex.hull_perimeter_law(1)
    assert law.mass(1) == Rat(5, 27)
    assert law.mass(2) == Rat(140, 729)


def test_stationary_ratio_golden():
    assert ex.h_ratio(1) == 1
    assert ex.h_ratio(2) == Rat(7, 9)
    assert ex.h_ratio(3) == Rat(53, 81)


def test_quad_count_series():
    assert [ex.quad_count(m) for m in range(5)] == [1, 2, 9, 54, 378]


def test_first_moment_golden():
    assert ex.first_moment_coefficient(1) == Rat(2, 9)
    assert ex.first_moment_coefficient(2) == Rat(29, 324)
    assert ex.slot_mean_volume(1) == 2
    assert ex.slot_mean_volume(2) == Rat(29, 5)


def test_n_trees_single_tree_probability():
    assert ex.n_trees_p1(1, 2) == Rat(7, 20)
    for u, w in [(1, 2), (2, 5), (3, 4)]:
        m = w - u
        expect = Rat(
            (3 + 2 * w) * ((m + 1) * (m + 2)) ** 2,
            (3 + 2 * m) * ((w + 1) * (w + 2)) ** 2,
        )
        assert ex.n_trees_p1(u, w) == expect


# ---------------------------------------------------------------------------
# Cross-engine agreement: Newton series vs P-finite recurrences vs floats
# ---------------------------------------------------------------------------


def test_sqrt_stream_matches_newton_series():
    order = 40
    root = ex.poly_W(order).sqrt()
    stream = ex.sqrtW_stream(order)
    assert root.coeffs[: order + 1] == list(stream[: order + 1])


def test_invsqrt_stream_matches_newton_series():
    order = 40
    inv = ex.poly_W(order).sqrt().reciprocal()
    stream = ex.invsqrtW_stream(order)
    assert inv.coeffs[: order + 1] == list(stream[: order + 1])


def test_invsqrt_w1_stream_matches_newton_series():
    order = 40
    inv = ex.poly_W1(order).sqrt().reciprocal()
    stream = ex.invsqrtW1_stream(order)
    assert inv.coeffs[: order + 1] == list(stream[: order + 1])


def test_stream_products_recover_polynomials():
    order = 30
    w = ex.TruncatedSeries(list(ex.sqrtW_stream(order)), order)
    assert (w * w).coeffs == ex.poly_W(order).coeffs
    v = ex.TruncatedSeries(list(ex.invsqrtW_stream(order)), order)
    prod = (w * v).coeffs
    assert prod[0] == 1
    assert all(c == 0 for c in prod[1:])


@pytest.mark.parametrize("n", [0, 1, 2, 10, 100, 500])
def test_float_streams_match_exact(n):
    wf = ex.sqrtW_float_stream(n + 1)
    vf = ex.invsqrtW_float_stream(n + 1)
    we = ex.sqrtW_stream(n)
    ve = ex.invsqrtW_stream(n)
    # float streams carry the 2^n scaling that keeps magnitudes bounded
    assert wf[n] == pytest.approx(float(we[n] * Rat(2) ** n), rel=1e-12)
    assert vf[n] == pytest.approx(float(ve[n] * Rat(2) ** n), rel=1e-12)


@pytest.mark.parametrize("k", [0, 1, 2, 10, 100, 999])
def test_theta_float_matches_exact(k):
    floats = ex.theta_float(max(k, 2))
    assert floats[k] == pytest.approx(float(ex.theta(k)), rel=1e-12)


def test_theta_tail_asymptotics():
    # theta(k) ~ C k^{-5/2}; the relative correction decays like 1/k
    k = 5000
    floats = ex.theta_float(k)
    ratio = floats[k] * k**2.5 / ex.THETA_TAIL_CONST
    assert abs(ratio - 1.0) < 0.01


def test_criticality_partial_sums():
    # mean of theta is 1; partial sums of k*theta(k) increase toward it and
    # the gap at cutoff K tracks the tail envelope 2C/sqrt(K)
    law = ex.theta_law(10_000)
    mean = law.mean_partial()
    gap = 1 - mean
    envelope = ex.THETA_TAIL_CONST * 2.0 / math.sqrt(10_000)
    assert 0 < gap < 1
    assert abs(float(gap) / envelope - 1.0) < 0.01


# ---------------------------------------------------------------------------
# Law tables: exact normalization and export round-trips
# ---------------------------------------------------------------------------


def test_theta_law_table():
    law = ex.theta_law(300)
    law.check_normalized()
    assert law.mass(0) == Rat(2, 3)
    assert law.mass(300) == ex.theta(300)
    assert law.tail_bound > 0


@pytest.mark.parametrize("r", [1, 2, 3, 5])
def test_hull_perimeter_normalization(r):
    law = ex.hull_perimeter_law(r)
    law.check_normalized()
    assert law.mass(0) == 0
    assert law.tail_bound < Rat(1, 10**9)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_hull_perimeter_is_tilted_survival(r):
    # P(H_r = p) = h_ratio(p) * phi_r(p): the perimeter law is the
    # stationary-sequence tilt of the marked survival probability.
    law = ex.hull_perimeter_law(r)
    for p in range(1, 51):
        assert law.mass(p) == ex.h_ratio(p) * ex.phi(r, p)


def test_float_hull_masses_match_exact():
    masses = ex.hull_perimeter_masses_float(5)
    law = ex.hull_perimeter_law(5)
    for p in range(1, min(len(masses) - 1, law.cutoff) + 1):
        assert masses[p] == pytest.approx(float(law.mass(p)), rel=1e-11)


def test_law_table_csv_round_trip():
    law = ex.hull_perimeter_law(1)
    rows = law.to_csv_rows()
    assert rows[0][0] == "value"
    assert rows[1][0] == "0"
    total = Rat(0)
    for _, num, den, mf, cf in rows[1:]:
        mass = Rat(int(num), int(den))
        total += mass
        assert float(mf) == float(mass)  # repr round-trips exactly
    assert total + law.tail_bound == 1


def test_law_table_json_masses_are_exact_strings():
    law = ex.theta_law(5)
    obj = law.to_json_obj()
    assert obj["masses"][0] == "2/3"
    assert obj["masses"][2] == "16/243"


# ---------------------------------------------------------------------------
# Iterated generating function and the stationary functional
# ---------------------------------------------------------------------------


def test_iterate_maps_fixed_points_exactly():
    # g sends the extinction point of depth r to depth r+1 (exact branch)
    for r in range(0, 30):
        assert ex.g_theta(ex.pi(r)) == ex.pi(r + 1)
    assert ex.g_theta_iter(3, ex.pi(0)) == ex.pi(3)


@given(
    st.integers(min_value=1, max_value=6),
    st.floats(min_value=0.0, max_value=0.95, allow_nan=False),
)
def test_iterate_matches_composition(r, y):
    val = ex.g_theta_iter(r, y)
    comp = y
    for _ in range(r):
        comp = ex.g_theta(comp)
    assert float(val) == pytest.approx(float(comp), rel=1e-9, abs=1e-12)


def test_iterate_rejects_supercritical_argument():
    with pytest.raises(ValueError):
        ex.g_theta(Rat(3, 2))


@pytest.mark.parametrize("y", [0.05 + 0.85 * i / 17 for i in range(18)])
def test_stationary_functional_shift(y):
    # Pi(g(y)) = Pi(y) + Pi(g(0)): the stationary sequence shifts by a
    # constant under one application of the iterate.
    lhs = ex.stationary_Pi(ex.g_theta(y))
    rhs = ex.stationary_Pi(y) + ex.stationary_Pi(ex.g_theta(0.0))
    assert abs(lhs - rhs) < 1e-9


def test_stationary_functional_matches_series():
    # Pi's coefficients are 48/sqrt(3 pi) * ... with Pi(y) = sum h(p) y^p up
    # to the common kappa_1 normalization; check via finite differences at 0.
    y = 1e-4
    h1 = ex.KAPPA1 * 2.0 / 1.0
    assert ex.stationary_Pi(y) / y == pytest.approx(h1, rel=1e-3)


# ---------------------------------------------------------------------------
# Number of maximal-height trees
# ---------------------------------------------------------------------------


def test_n_trees_params_golden():
    nb1, nb2 = ex.n_trees_params(1, 2)
    q1 = (ex.pi(2) - ex.pi(1)) / (9 - ex.pi(1))
    q2 = (ex.pi(2) - ex.pi(1)) / (1 - ex.pi(1))
    assert nb1.success == q1 and nb1.shape == ex.Fraction(1, 2)
    assert nb2.success == q2 and nb2.shape == ex.Fraction(3, 2)


@pytest.mark.parametrize("u, w", [(1, 2), (2, 4), (5, 10)])
def test_n_trees_law_consistency(u, w):
    nb1, nb2, law = ex.n_trees_law(u, w)
    law.check_normalized()
    assert law.mass(0) == 0
    assert law.mass(1) == ex.n_trees_p1(u, w)
    # pgf of the table matches the closed form at a test point
    a = 0.37
    table = float(law.pgf(a))
    closed = ex.n_trees_pgf(u, w, a)
    assert table == pytest.approx(closed, abs=float(law.tail_bound) + 1e-10)
    # partial mean sits below the exact mean, within the tail's reach
    assert law.mean_partial() <= ex.n_trees_mean(u, w)


def test_n_trees_mass_coefficients():
    nb1, nb2 = ex.n_trees_params(1, 3)
    assert nb1.mass_coeff(0) == 1
    assert nb1.mass_coeff(1) == Rat(1, 2)
    assert nb1.mass_coeff(2) == Rat(3, 8)
    assert nb2.mass_coeff(0) == 1
    assert nb2.mass_coeff(1) == Rat(3, 2)
    assert nb2.mass_coeff(2) == Rat(15, 8)


# ---------------------------------------------------------------------------
# Survival scaling and tail envelopes
# ---------------------------------------------------------------------------


def test_survival_scaling_reports_exact_survival():
    surv, _ = ex.survival_scaling(1, 1.0)
    assert surv == Rat(1, 3)


def test_scaled_survival_approaches_one_half():
    r = 1000
    surv = float(ex.survival_probability(r))
    assert abs(r * r * surv / 2.0 - 1.0) < 0.003


@pytest.mark.parametrize("lam", [0.1, 1.0, 2.0, 10.0])
def test_scaled_laplace_approaches_limit(lam):
    # convergence is O(sqrt(lam)/r), slowest over this grid at lam = 10
    _, scaled = ex.survival_scaling(1000, lam)
    assert abs(scaled / ex.survival_scaling_limit(lam) - 1.0) < 0.01


def test_scaled_laplace_limit_values():
    assert ex.survival_scaling_limit(2.0) == pytest.approx(0.75, abs=1e-12)


def test_perimeter_tail_trivial_zero():
    upper, lower = ex.perimeter_tail_check(2, 0.2)  # a r^2 < 1
    assert lower == 0
    assert upper == 1


def test_perimeter_lower_tail_power_envelope():
    for a in (0.05, 0.1, 0.2):
        _, lower = ex.perimeter_tail_check(20, a)
        scaled = float(lower) / a**1.5
        assert 0 < scaled < 2.0


def test_perimeter_upper_tail_exponential_envelope():
    logs = {}
    for a in (2, 4, 8):
        upper, _ = ex.perimeter_tail_check(20, a)
        logs[a] = math.log(float(upper))
    assert logs[4] - logs[2] < -2.0
    assert logs[8] - logs[4] < -4.0


def test_perimeter_tail_exact_matches_float_lane():
    # same quantity through the exact-table branch and a float recomputation
    upper, lower = ex.perimeter_tail_check(5, 1.5)
    masses = ex.hull_perimeter_masses_float(5)
    thresh = int(1.5 * 25)
    lo_f = sum(masses[: thresh + 1])
    assert float(lower) == pytest.approx(lo_f, rel=1e-10)


# ---------------------------------------------------------------------------
# Boltzmann volume laws
# ---------------------------------------------------------------------------


def test_counts_closed_form_column():
    counts = ex.qtr_counts(8, 1)
    for n in range(1, 9):
        assert counts[(n, 1)] == ex.quad_count(n - 1)


def test_counts_infeasible_range():
    with pytest.raises(ex.InfeasibleRangeError):
        ex.qtr_counts(6, 2)


def test_slot_volume_law_boundary_one():
    law = ex.slot_volume_law(1, 8)
    assert law.mass(1) == Rat(3, 4)
    assert law.mass(2) == Rat(1, 8)
    assert law.tail_bound > 0
    # the truncated mean increases toward the exact mean 2 but converges
    # only like 1/sqrt(nmax): the volume law is heavy-tailed
    partial = law.mean_partial()
    assert ex.slot_volume_law(1, 6).mean_partial() < partial < 2


def test_partial_boltzmann_sum_below_partition_function():
    counts = ex.qtr_counts(10, 1)
    partial = sum(Rat(counts[(n, 1)], 12**n) for n in range(1, 11))
    assert partial < ex.Z(1)


# ---------------------------------------------------------------------------
# Truncated-series engine
# ---------------------------------------------------------------------------


def test_series_mul_truncates():
    a = ex.TruncatedSeries([1, 1], 3)
    b = a * a * a
    assert b.coeffs == [1, 3, 3, 1]
    c = (a * a).truncate(1)
    assert c.coeffs == [1, 2]


def test_series_reciprocal():
    a = ex.TruncatedSeries([1, -1], 6)
    inv = a.reciprocal()
    assert inv.coeffs == [1] * 7  # 1/(1-y) = sum y^n


def test_series_sqrt_requires_square_constant():
    with pytest.raises(ValueError):
        ex.TruncatedSeries([2, 1], 4).sqrt()


def test_series_sqrt_round_trip():
    a = ex.TruncatedSeries([9, 6, 1], 8)
    root = a.sqrt()
    assert root.coeffs[:2] == [3, 1]
    assert (root * root).coeffs == [9, 6, 1] + [0] * 6


@given(st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=6))
def test_series_reciprocal_round_trip(coeffs):
    if coeffs[0] == 0:
        coeffs[0] = 1
    order = 8
    a = ex.TruncatedSeries([Rat(c) for c in coeffs], order)
    prod = (a * a.reciprocal()).coeffs
    assert prod[0] == 1
    assert all(c == 0 for c in prod[1:])
