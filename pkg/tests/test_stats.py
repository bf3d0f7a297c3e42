import itertools
import math
import random

import mpmath as mp
import pytest
import scipy.stats

from jaf.stats import (
    DegenerateInputError,
    anderson_darling_normality,
    anova_oneway,
    betainc_reg,
    bonferroni_adjust,
    f_sf,
    mann_whitney_u,
    normal_cdf,
    t_sf_two_sided,
    t_test_paired,
    wilcoxon_signed_rank,
)


class TestAnova:
    def test_hand_case(self):
        # SSB = 4, SSW = 1 -> F = (4/1)/(1/2) = 8 with dof (1, 2).
        r = anova_oneway([[1, 2], [3, 4]])
        assert r.statistic == pytest.approx(8.0, abs=1e-12)
        assert r.dof == (1.0, 2.0)

    def test_identical_groups_zero_f(self):
        r = anova_oneway([[1, 2, 3], [1, 2, 3]])
        assert r.statistic == pytest.approx(0.0, abs=1e-12)

    def test_study_shape_dof(self):
        rng = random.Random(1)
        groups = [[rng.random() for _ in range(37)] for _ in range(4)]
        r = anova_oneway(groups)
        assert r.dof == (3.0, 144.0)

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateInputError):
            anova_oneway([[1, 1], [2, 2]])

    def test_too_few_groups(self):
        with pytest.raises(ValueError):
            anova_oneway([[1, 2]])


class TestPairedT:
    def test_hand_case(self):
        r = t_test_paired([1, 2, 3], [1, 2, 4])
        assert r.statistic == pytest.approx(-1.0, abs=1e-12)
        assert r.dof == (2.0,)

    def test_symmetric_diffs_zero_t(self):
        r = t_test_paired([1, 0, 1, 0], [0, 1, 0, 1])
        assert r.statistic == pytest.approx(0.0, abs=1e-12)
        assert r.p_value == pytest.approx(1.0, abs=1e-12)

    def test_37_pairs_dof(self):
        rng = random.Random(2)
        a = [rng.random() for _ in range(37)]
        b = [rng.random() for _ in range(37)]
        assert t_test_paired(a, b).dof == (36.0,)

    def test_matches_scipy(self):
        rng = random.Random(3)
        for _ in range(40):
            n = rng.randrange(5, 40)
            a = [rng.gauss(0, 1) for _ in range(n)]
            b = [rng.gauss(0.3, 1.2) for _ in range(n)]
            mine = t_test_paired(a, b)
            ref = scipy.stats.ttest_rel(a, b)
            assert mine.statistic == pytest.approx(ref.statistic, rel=1e-10)
            assert mine.p_value == pytest.approx(ref.pvalue, rel=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            t_test_paired([1, 2], [1, 2, 3])
        with pytest.raises(DegenerateInputError):
            t_test_paired([1, 2, 3], [0, 1, 2])


# ---------------------------------------------------------------------------
# Rank tests vs. independent brute-force enumeration
# ---------------------------------------------------------------------------


def brute_signed_rank_p(diffs):
    """Oracle: enumerate every sign assignment over the observed ranks."""
    nonzero = [d for d in diffs if d != 0]
    absd = [abs(d) for d in nonzero]
    order = sorted(range(len(absd)), key=lambda i: absd[i])
    ranks = [0.0] * len(absd)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and absd[order[j + 1]] == absd[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, nonzero) if d < 0)
    w_obs = min(w_plus, w_minus)
    count_le = 0
    total = 0
    for signs in itertools.product((1, -1), repeat=len(ranks)):
        w = sum(r for r, s in zip(ranks, signs) if s > 0)
        total += 1
        if w <= w_obs + 1e-12:
            count_le += 1
    return min(1.0, 2.0 * count_le / total)


def brute_mwu_p(a, b):
    """Oracle: enumerate every split of the pooled sample."""
    def u_stat(x, y):
        u = 0.0
        for i in x:
            for j in y:
                u += 1.0 if i > j else 0.5 if i == j else 0.0
        return u

    u1 = u_stat(a, b)
    u_obs = min(u1, len(a) * len(b) - u1)
    pooled = list(a) + list(b)
    idx = range(len(pooled))
    count_le = 0
    total = 0
    for combo in itertools.combinations(idx, len(a)):
        combo_set = set(combo)
        x = [pooled[i] for i in combo]
        y = [pooled[i] for i in idx if i not in combo_set]
        total += 1
        if u_stat(x, y) <= u_obs + 1e-12:
            count_le += 1
    return min(1.0, 2.0 * count_le / total)


class TestSignedRank:
    def test_all_positive_extreme(self):
        r = wilcoxon_signed_rank([2, 3, 4], [1, 1, 1])
        assert r.statistic == 0.0  # W- side is empty

    def test_tied_ranks_hand_case(self):
        # diffs (1, -1): both |d| tie at rank 1.5, so W+ = W- = 1.5.
        r = wilcoxon_signed_rank([2, 1], [1, 2])
        assert r.statistic == pytest.approx(1.5)

    def test_exact_matches_enumeration(self):
        rng = random.Random(4)
        for trial in range(60):
            n = rng.randrange(4, 11)
            a = [rng.randrange(0, 8) for _ in range(n)]
            b = [rng.randrange(0, 8) for _ in range(n)]
            if all(x == y for x, y in zip(a, b)):
                continue
            mine = wilcoxon_signed_rank(a, b)
            assert mine.p_value == pytest.approx(brute_signed_rank_p(
                [x - y for x, y in zip(a, b)]), abs=1e-9)

    def test_ten_pair_enumeration(self):
        rng = random.Random(5)
        a = [rng.gauss(0, 1) for _ in range(10)]
        b = [rng.gauss(0.5, 1) for _ in range(10)]
        mine = wilcoxon_signed_rank(a, b)
        assert mine.p_value == pytest.approx(
            brute_signed_rank_p([x - y for x, y in zip(a, b)]), abs=1e-9)

    def test_approx_agrees_with_exact_for_small_n(self):
        rng = random.Random(6)
        from jaf import stats as st

        for _ in range(40):
            n = rng.randrange(8, 13)
            a = [rng.gauss(0, 1) for _ in range(n)]
            b = [rng.gauss(0.4, 1) for _ in range(n)]
            exact = wilcoxon_signed_rank(a, b).p_value
            old = st.EXACT_LIMIT
            try:
                st.EXACT_LIMIT = 0  # force the normal approximation
                approx = wilcoxon_signed_rank(a, b).p_value
            finally:
                st.EXACT_LIMIT = old
            assert abs(exact - approx) < 0.05

    def test_all_zero_diffs_rejected(self):
        with pytest.raises(DegenerateInputError):
            wilcoxon_signed_rank([1, 2], [1, 2])


class TestMannWhitney:
    def test_complete_separation(self):
        assert mann_whitney_u([1, 2, 3], [4, 5, 6]).statistic == 0.0

    def test_tie_hand_case(self):
        assert mann_whitney_u([1, 2, 3], [1, 2, 3]).statistic == pytest.approx(4.5)

    def test_singleton_tie(self):
        assert mann_whitney_u([5], [5]).statistic == pytest.approx(0.5)

    def test_exact_matches_enumeration(self):
        rng = random.Random(7)
        for _ in range(40):
            n1 = rng.randrange(3, 7)
            n2 = rng.randrange(3, 7)
            a = [rng.randrange(0, 6) for _ in range(n1)]
            b = [rng.randrange(0, 6) for _ in range(n2)]
            mine = mann_whitney_u(a, b)
            assert mine.p_value == pytest.approx(brute_mwu_p(a, b), abs=1e-9)

    def test_approx_agrees_with_exact(self):
        rng = random.Random(8)
        from jaf import stats as st

        for _ in range(30):
            n1 = rng.randrange(5, 7)
            n2 = rng.randrange(5, 7)
            a = [rng.gauss(0, 1) for _ in range(n1)]
            b = [rng.gauss(0.6, 1) for _ in range(n2)]
            exact = mann_whitney_u(a, b).p_value
            old = st.EXACT_LIMIT
            try:
                st.EXACT_LIMIT = 0
                approx = mann_whitney_u(a, b).p_value
            finally:
                st.EXACT_LIMIT = old
            assert abs(exact - approx) < 0.05

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mann_whitney_u([], [1])


class TestAndersonDarling:
    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            anderson_darling_normality([1, 2, 3, 4])

    def test_constant_rejected(self):
        with pytest.raises(DegenerateInputError):
            anderson_darling_normality([2.0] * 10)

    def test_normal_sample_not_rejected(self):
        rng = random.Random(9)
        x = [rng.gauss(10, 2) for _ in range(50)]
        assert anderson_darling_normality(x).p_value > 0.05

    def test_heavy_tailed_sample_rejected(self):
        rng = random.Random(10)
        # Cauchy-like via ratio of normals: grossly non-normal.
        x = [rng.gauss(0, 1) / (abs(rng.gauss(0, 1)) + 1e-6) for _ in range(50)]
        assert anderson_darling_normality(x).p_value < 0.05

    def test_statistic_matches_scipy(self):
        rng = random.Random(11)
        for _ in range(20):
            x = [rng.gauss(5, 3) for _ in range(rng.randrange(8, 60))]
            mine = anderson_darling_normality(x)
            ref = scipy.stats.anderson(x, "norm")
            assert mine.statistic == pytest.approx(ref.statistic, rel=1e-9)


class TestBonferroni:
    def test_multiplies(self):
        assert bonferroni_adjust([0.01], 6) == [0.06]

    def test_clamps_at_one(self):
        assert bonferroni_adjust([0.3], 5) == [1.0]

    def test_empty(self):
        assert bonferroni_adjust([]) == []

    def test_bad_p_rejected(self):
        with pytest.raises(ValueError):
            bonferroni_adjust([1.2], 2)

    def test_m_too_small_rejected(self):
        with pytest.raises(ValueError):
            bonferroni_adjust([0.1, 0.2], 1)


# ---------------------------------------------------------------------------
# Distribution machinery against high-precision integration
# ---------------------------------------------------------------------------


def mp_t_sf_two_sided(t, v):
    pdf = lambda x: mp.gamma((v + 1) / 2) / (mp.sqrt(v * mp.pi) * mp.gamma(v / 2)) \
        * (1 + x * x / v) ** (-(v + 1) / 2)
    return float(2 * mp.quad(pdf, [abs(t), mp.inf]))


def mp_f_sf(f, d1, d2):
    b = mp.beta(d1 / 2, d2 / 2)
    pdf = lambda x: (mp.mpf(d1) / d2) ** (d1 / 2) * x ** (d1 / 2 - 1) \
        * (1 + mp.mpf(d1) * x / d2) ** (-(d1 + d2) / 2) / b
    return float(mp.quad(pdf, [f, mp.inf]))


T_GRID = [(0.5, 1), (1.0, 2), (2.0, 5), (2.5, 10), (3.0, 36), (6.8938, 36), (0.1, 144)]
F_GRID = [(0.5, 1, 2), (8.0, 1, 2), (2.5, 3, 20), (16.0, 3, 144), (1.0, 4, 100), (5.0, 2, 36)]


@pytest.mark.parametrize("t,dof", T_GRID)
def test_t_tail_vs_integration(t, dof):
    assert abs(t_sf_two_sided(t, dof) - mp_t_sf_two_sided(t, dof)) < 1e-6


@pytest.mark.parametrize("f,d1,d2", F_GRID)
def test_f_tail_vs_integration(f, d1, d2):
    assert abs(f_sf(f, d1, d2) - mp_f_sf(f, d1, d2)) < 1e-6


def test_tail_monotonicity():
    prev = 1.0
    for t in [0.0, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0]:
        p = t_sf_two_sided(t, 12)
        assert p <= prev + 1e-15
        prev = p
    prev = 1.0
    for f in [0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 20.0]:
        p = f_sf(f, 3, 30)
        assert p <= prev + 1e-15
        prev = p


def test_betainc_reg_bounds():
    assert betainc_reg(2, 3, 0.0) == 0.0
    assert betainc_reg(2, 3, 1.0) == 1.0
    assert 0.0 < betainc_reg(2, 3, 0.5) < 1.0


def test_scale_equivariance():
    rng = random.Random(12)
    a = [rng.gauss(0, 1) for _ in range(15)]
    b = [rng.gauss(0.5, 1) for _ in range(15)]
    groups = [[rng.gauss(m, 1) for _ in range(10)] for m in (0, 0.5, 1.0)]
    for c in (2.5, 100.0, 0.003):
        sa = [c * v for v in a]
        sb = [c * v for v in b]
        assert t_test_paired(sa, sb).statistic == pytest.approx(
            t_test_paired(a, b).statistic, rel=1e-9)
        assert t_test_paired(sa, sb).p_value == pytest.approx(
            t_test_paired(a, b).p_value, rel=1e-9)
        assert wilcoxon_signed_rank(sa, sb).statistic == wilcoxon_signed_rank(a, b).statistic
        assert mann_whitney_u(sa, sb).statistic == mann_whitney_u(a, b).statistic
        scaled_groups = [[c * v for v in g] for g in groups]
        assert anova_oneway(scaled_groups).statistic == pytest.approx(
            anova_oneway(groups).statistic, rel=1e-9)


def test_normal_cdf_sanity():
    assert normal_cdf(0.0) == pytest.approx(0.5)
    assert normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-9)
