"""Self-contained hypothesis-testing toolkit for the experiment analysis.

Implements the analysis pipeline used on the batch results: one-way ANOVA
across the four conditions, paired t-tests and rank tests for post-hoc
pairwise contrasts, an Anderson-Darling normality check, and Bonferroni
correction. Everything is computed from first principles on top of the
regularized incomplete beta function (evaluated by continued fractions),
so the toolkit has no runtime dependency on scipy; reference
implementations are used only as oracles in the test suite.

Both the paired signed-rank test and the independent rank-sum test are
provided because the latter's common naming is ambiguous between the two;
the analysis CLI uses the paired one for this within-subjects design and
says so in its output.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence


class DegenerateInputError(ValueError):
    """The data cannot support the requested test (e.g. zero variance)."""


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    dof: Optional[tuple[float, ...]] = None

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "dof": list(self.dof) if self.dof is not None else None,
            "p_value": self.p_value,
        }


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

_BETA_EPS = 1e-12
_FPMIN = 1e-300
_BETA_MAXIT = 300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, dof: float) -> float:
    """Two-sided tail probability of Student's t."""
    if dof <= 0:
        raise ValueError("dof must be positive")
    return betainc_reg(dof / 2.0, 0.5, dof / (dof + t * t))


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper-tail probability of the F distribution."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("dof must be positive")
    if f <= 0:
        return 1.0
    return betainc_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _mean(x: Sequence[float]) -> float:
    return sum(x) / len(x)


def _sample_var(x: Sequence[float]) -> float:
    m = _mean(x)
    return sum((v - m) ** 2 for v in x) / (len(x) - 1)


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------


def anova_oneway(groups: Sequence[Sequence[float]]) -> TestResult:
    """One-way fixed-effects ANOVA: F = MS_between / MS_within."""
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    for g in groups:
        if len(g) < 2:
            raise ValueError("each group needs at least two values")
    n_total = sum(len(g) for g in groups)
    k = len(groups)
    grand = sum(sum(g) for g in groups) / n_total
    ss_between = sum(len(g) * (_mean(g) - grand) ** 2 for g in groups)
    ss_within = sum(sum((v - _mean(g)) ** 2 for v in g) for g in groups)
    df_b = k - 1
    df_w = n_total - k
    if ss_within == 0.0:
        raise DegenerateInputError("zero within-group variance in every group")
    f = (ss_between / df_b) / (ss_within / df_w)
    return TestResult(statistic=f, p_value=f_sf(f, df_b, df_w), method="anova_oneway",
                      dof=(float(df_b), float(df_w)))


def t_test_paired(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Paired t-test on differences a - b, two-sided."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two pairs")
    d = [x - y for x, y in zip(a, b)]
    var = _sample_var(d)
    if var == 0.0:
        raise DegenerateInputError("differences have zero variance")
    t = _mean(d) / math.sqrt(var / n)
    dof = n - 1
    return TestResult(statistic=t, p_value=t_sf_two_sided(t, dof), method="t_test_paired",
                      dof=(float(dof),))


def _rank_with_ties(values: Sequence[float]) -> list[float]:
    """Mid-ranks (1-based), ties sharing the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


# Exact enumeration is used up to this many effective observations.
EXACT_LIMIT = 12


def _signed_rank_exact_p(ranks: list[float], w_obs: float) -> float:
    """P-value by dynamic programming over all 2^n sign assignments.

    Ranks are doubled so mid-ranks become integers; the distribution of the
    positive-rank sum is built by convolution.
    """
    scaled = [int(round(2 * r)) for r in ranks]
    total = sum(scaled)
    dist = [0.0] * (total + 1)
    dist[0] = 1.0
    for s in scaled:
        nxt = [0.0] * (total + 1)
        for w, cnt in enumerate(dist):
            if cnt:
                nxt[w] += cnt
                nxt[w + s] += cnt
        dist = nxt
    count = 2.0 ** len(scaled)
    w_scaled = 2 * w_obs + 1e-9
    p_le = sum(cnt for w, cnt in enumerate(dist) if w <= w_scaled) / count
    return min(1.0, 2.0 * p_le)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Paired signed-rank test; W is the smaller signed-rank sum.

    Exact p by full enumeration for up to EXACT_LIMIT nonzero differences,
    normal approximation (with tie correction and continuity correction)
    above.
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    d = [x - y for x, y in zip(a, b) if x != y]
    if not d:
        raise DegenerateInputError("all differences are zero")
    n = len(d)
    ranks = _rank_with_ties([abs(v) for v in d])
    w_plus = sum(r for r, v in zip(ranks, d) if v > 0)
    w_minus = sum(r for r, v in zip(ranks, d) if v < 0)
    w = min(w_plus, w_minus)
    if n <= EXACT_LIMIT:
        p = _signed_rank_exact_p(ranks, w)
    else:
        mu = n * (n + 1) / 4.0
        tie_term = 0.0
        seen: dict[float, int] = {}
        for v in d:
            seen[abs(v)] = seen.get(abs(v), 0) + 1
        for cnt in seen.values():
            tie_term += cnt ** 3 - cnt
        sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0)
        z = (w - mu + 0.5) / sigma
        p = min(1.0, 2.0 * normal_cdf(z))
    return TestResult(statistic=w, p_value=p, method="wilcoxon_signed_rank", dof=None)


def _mwu_exact_p(pooled_ranks: list[float], n1: int, u_obs: float, n_choose: float) -> float:
    """Exact null distribution of U by DP over which ranks go to group one."""
    scaled = [int(round(2 * r)) for r in pooled_ranks]
    total = sum(scaled)
    # dist[k][s] = number of ways to choose k ranks summing to s (scaled).
    dist = [[0.0] * (total + 1) for _ in range(n1 + 1)]
    dist[0][0] = 1.0
    for s in scaled:
        for k in range(n1 - 1, -1, -1):
            row = dist[k]
            nxt = dist[k + 1]
            for w in range(total - s + 1):
                if row[w]:
                    nxt[w + s] += row[w]
    n2 = len(pooled_ranks) - n1
    # U1 = R1 - n1(n1+1)/2, scaled by 2: u1_scaled = s - n1*(n1+1)
    count_le = 0.0
    threshold = 2 * u_obs + 1e-9
    offset = n1 * (n1 + 1)
    for s, cnt in enumerate(dist[n1]):
        if cnt and (s - offset) <= threshold:
            count_le += cnt
    return min(1.0, 2.0 * count_le / n_choose)


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Independent-samples rank-sum test; U is the smaller of U1, U2.

    Ties get half credit in the pairwise count. Exact p for small samples,
    normal approximation with tie correction otherwise.
    """
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    u1 = 0.0
    for x in a:
        for y in b:
            if x > y:
                u1 += 1.0
            elif x == y:
                u1 += 0.5
    u2 = n1 * n2 - u1
    u = min(u1, u2)
    n = n1 + n2
    n_choose = math.comb(n, n1)
    if n <= EXACT_LIMIT:
        pooled_ranks = _rank_with_ties(list(a) + list(b))
        p = _mwu_exact_p(pooled_ranks, n1, u, float(n_choose))
    else:
        mu = n1 * n2 / 2.0
        seen: dict[float, int] = {}
        for v in itertools.chain(a, b):
            seen[v] = seen.get(v, 0) + 1
        tie_term = sum(c ** 3 - c for c in seen.values())
        sigma2 = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
        if sigma2 <= 0:
            raise DegenerateInputError("all pooled values identical")
        z = (u - mu + 0.5) / math.sqrt(sigma2)
        p = min(1.0, 2.0 * normal_cdf(z))
    return TestResult(statistic=u, p_value=p, method="mann_whitney_u", dof=None)


# Case-3 Anderson-Darling (mean and variance estimated from the sample):
# piecewise p-value approximation for the corrected statistic.
_AD_SEGMENTS = (
    (0.6, lambda s: math.exp(1.2937 - 5.709 * s + 0.0186 * s * s)),
    (0.34, lambda s: math.exp(0.9177 - 4.279 * s - 1.38 * s * s)),
    (0.2, lambda s: 1.0 - math.exp(-8.318 + 42.796 * s - 59.938 * s * s)),
    (-math.inf, lambda s: 1.0 - math.exp(-13.436 + 101.14 * s - 223.73 * s * s)),
)


def anderson_darling_normality(x: Sequence[float]) -> TestResult:
    """A-squared normality test with estimated parameters.

    Applies the small-sample correction A2* = A2 (1 + 0.75/n + 2.25/n^2)
    before the p-value approximation.
    """
    n = len(x)
    if n < 5:
        raise ValueError(f"need at least 5 observations, got {n}")
    m = _mean(x)
    var = _sample_var(x)
    if var == 0.0:
        raise DegenerateInputError("sample has zero variance")
    sd = math.sqrt(var)
    z = sorted((v - m) / sd for v in x)
    eps = 1e-300
    s = 0.0
    for i in range(n):
        phi_lo = min(max(normal_cdf(z[i]), eps), 1.0 - 1e-16)
        phi_hi = min(max(normal_cdf(z[n - 1 - i]), eps), 1.0 - 1e-16)
        s += (2 * i + 1) * (math.log(phi_lo) + math.log(1.0 - phi_hi))
    a2 = -n - s / n
    a2_star = a2 * (1.0 + 0.75 / n + 2.25 / (n * n))
    for cutoff, fn in _AD_SEGMENTS:
        if a2_star >= cutoff:
            p = fn(a2_star)
            break
    return TestResult(statistic=a2, p_value=min(1.0, max(0.0, p)),
                      method="anderson_darling_normality", dof=None)


def bonferroni_adjust(p_values: Sequence[float], m: Optional[int] = None) -> list[float]:
    """Family-wise correction: each p becomes min(1, m * p)."""
    if m is None:
        m = len(p_values)
    if m < len(p_values):
        raise ValueError(f"m={m} smaller than the number of p-values ({len(p_values)})")
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
    return [min(1.0, m * p) for p in p_values]
