"""Truncated binomial tail computations and monotonicity scans.

Partial sums S(n, j, k) = Pr[j <= Binomial(n, p) <= k] are evaluated by
summing probability-mass terms in log space (exact log-binomial coefficients
below ``EXACT_COMB_MAX_N``, log-gamma above), max-shifting, and accumulating
with compensated summation.  On top of that sit the monotonicity/threshold
scans, the Hoeffding bound, the De Moivre-Laplace approximation, and the
concentration checks used to characterize how the exponential mechanism's
flip rate behaves as the dataset grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import gammaln

from .mechanisms import PrivacyParams, flip_probability
from .validation import check_probability

__all__ = [
    "TruncatedSumQuery",
    "MonotonicityReport",
    "trunc_binom",
    "upper_trunc",
    "success_probability",
    "hoeffding_lower_bound",
    "normal_approx",
    "binom_cdf_table",
    "scan_monotonicity",
    "concentration_check",
    "interchange_point",
]

# Below this n, log C(n, i) comes from exact integer binomials (one rounding
# per coefficient); above, from vectorized log-gamma.
EXACT_COMB_MAX_N = 1000


@dataclass(frozen=True)
class TruncatedSumQuery:
    n: int
    j: int
    k: int
    p: float

    def __post_init__(self):
        if not (0 <= self.j <= self.k <= self.n):
            raise ValueError(f"need 0 <= j <= k <= n, got j={self.j}, k={self.k}, n={self.n}")
        check_probability(self.p)

    def evaluate(self) -> float:
        return trunc_binom(self.n, self.j, self.k, self.p)


def _window_sum(n: int, j: int, k: int, p: float) -> float:
    log_p = math.log(p)
    log_1p = math.log1p(-p)
    if n <= EXACT_COMB_MAX_N:
        terms = [
            math.log(math.comb(n, i)) + i * log_p + (n - i) * log_1p
            for i in range(j, k + 1)
        ]
        m = max(terms)
        return math.exp(m) * math.fsum(math.exp(t - m) for t in terms)
    i = np.arange(j, k + 1, dtype=float)
    terms = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1) + i * log_p + (n - i) * log_1p
    m = float(terms.max())
    return math.exp(m) * math.fsum(np.exp(terms - m).tolist())


def trunc_binom(n: int, j: int, k: int, p: float) -> float:
    """Pr[j <= Binomial(n, p) <= k], exact up to float rounding."""
    TruncatedSumQuery(n, j, k, p)
    if p == 0.0:
        return 1.0 if j == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    return min(1.0, max(0.0, _window_sum(n, j, k, p)))


def upper_trunc(n: int, j: int, p: float) -> float:
    """S(n, j) = Pr[Binomial(n, p) <= j]."""
    return trunc_binom(n, 0, j, p)


def success_probability(n: int, params: PrivacyParams) -> float:
    """Probability that the mechanism's score stays at or above n/2.

    Equals S(n, floor(n/2)) under the per-label flip probability, i.e. the
    chance that at most half the labels flip; symmetric-loss learning
    tolerates exactly that regime.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    p = flip_probability(params).flip_probability
    return upper_trunc(n, n // 2, p)


def hoeffding_lower_bound(n: int, j: float, p: float) -> float:
    """Hoeffding lower bound on S(n, j); 0 where the bound is vacuous (j < np)."""
    check_probability(p)
    if j < n * p:
        return 0.0
    return 1.0 - math.exp(-2.0 * (j - n * p) ** 2 / n)


def normal_approx(n: int, j: float, k: float, p: float, continuity_correction: bool = True) -> float:
    """De Moivre-Laplace Gaussian-integral approximation of trunc_binom.

    Integrates the N(np, np(1-p)) density over the window via the error
    function.  The half-integer continuity correction is on by default; it
    is what keeps small-n error within the documented bounds.  Approximation
    only; use :func:`trunc_binom` for exact values.
    """
    check_probability(p)
    var = n * p * (1.0 - p)
    if var <= 0.0:
        raise ValueError(f"degenerate variance at p={p}")
    mu = n * p
    sd = math.sqrt(var)
    lo, hi = (j - 0.5, k + 0.5) if continuity_correction else (j, k)
    z_lo = (lo - mu) / (sd * math.sqrt(2.0))
    z_hi = (hi - mu) / (sd * math.sqrt(2.0))
    return 0.5 * (math.erf(z_hi) - math.erf(z_lo))


def binom_cdf_table(n: int, p: float) -> np.ndarray:
    """S(n, j) for every j in [0, n] as one vectorized table."""
    check_probability(p)
    if p == 0.0:
        return np.ones(n + 1)
    if p == 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    i = np.arange(n + 1, dtype=float)
    log_terms = (
        gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
        + i * math.log(p) + (n - i) * math.log1p(-p)
    )
    return np.minimum(np.cumsum(np.exp(log_terms)), 1.0)


@dataclass
class MonotonicityReport:
    """Result of one grid scan; empty violation list means the property held."""

    property_id: int
    grid: dict
    violations: list = field(default_factory=list)
    parity_exceptions: list = field(default_factory=list)
    parity_split: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return asdict(self)


def _scan_property1(n_values, p_grid, j_values, tol, report):
    for p in p_grid:
        tables = {n: binom_cdf_table(n, p) for n in n_values}
        for n in n_values[:-1]:
            if n + 1 not in tables:
                continue
            for j in j_values:
                if j > n:
                    continue
                lhs, rhs = tables[n + 1][j], tables[n][j]
                if lhs > rhs + tol:
                    report.violations.append(
                        {"n": n, "j": int(j), "p": p, "S(n+1,j)": lhs, "S(n,j)": rhs}
                    )


def _scan_property2(n_values, p_grid, k_values, tol, report):
    for p in p_grid:
        tables = {n: binom_cdf_table(n, p) for n in n_values}
        for n in n_values[:-1]:
            if n + 1 not in tables:
                continue
            for k in k_values:
                if k > n:
                    continue
                lhs, rhs = tables[n + 1][n + 1 - k], tables[n][n - k]
                if lhs < rhs - tol:
                    report.violations.append(
                        {"n": n, "k": int(k), "p": p, "S(n+1,n+1-k)": lhs, "S(n,n-k)": rhs}
                    )


def _scan_property3(n_values, p_grid, k_offsets, tol, report):
    report.parity_split = True
    for p in p_grid:
        tables = {n: binom_cdf_table(n, p) for n in n_values}
        for n in n_values:
            for k in k_offsets:
                j = -(-n // 2) + k  # ceil(n/2) + k
                if not 0 <= j <= n:
                    continue
                # Same-parity step n -> n+2: ordering decided by p vs (n-j)/(n+1).
                if n + 2 in tables and j + 1 <= n + 2:
                    threshold = (n - j) / (n + 1)
                    lhs, rhs = tables[n + 2][j + 1], tables[n][j]
                    if abs(p - threshold) > tol:
                        expected_up = p < threshold
                        bad = (lhs < rhs - tol) if expected_up else (lhs > rhs + tol)
                        if bad:
                            report.violations.append(
                                {
                                    "n": n, "k": int(k), "p": p, "threshold": threshold,
                                    "S(n+2,j+1)": lhs, "S(n,j)": rhs,
                                }
                            )
                # Cross-parity step n -> n+1: direction recorded, never flagged.
                j_next = -(-(n + 1) // 2) + k
                if n + 1 in tables and 0 <= j_next <= n + 1:
                    lhs, rhs = tables[n + 1][j_next], tables[n][j]
                    report.parity_exceptions.append(
                        {
                            "n": n, "k": int(k), "p": p,
                            "direction": "up" if lhs >= rhs else "down",
                            "n_parity": "even" if n % 2 == 0 else "odd",
                        }
                    )


def _scan_property4(n_values, p_grid, j_values, tol, report):
    ps = sorted(p_grid)
    for n in n_values:
        tables = [binom_cdf_table(n, p) for p in ps]
        for j in j_values:
            if j > n:
                continue
            for a in range(len(ps) - 1):
                lo, hi = tables[a][j], tables[a + 1][j]
                if hi > lo + tol:
                    report.violations.append(
                        {"n": n, "j": int(j), "p_low": ps[a], "p_high": ps[a + 1],
                         "S(p_low)": lo, "S(p_high)": hi}
                    )


def scan_monotonicity(property_id: int, n_range, p_grid, k_offsets=None, tolerance: float = 1e-12) -> MonotonicityReport:
    """Scan one of the four tail-monotonicity properties over a grid.

    1: S(n, j) non-increasing in n for fixed j.
    2: S(n, n-k) non-decreasing in n for fixed top-offset k.
    3: S(n, ceil(n/2)+k) ordered across same-parity steps by the sign of
       (n-j)/(n+1) - p; cross-parity steps are recorded, not flagged.
    4: S(n, j) non-increasing in the success probability p.
    """
    n_values = sorted(set(int(n) for n in n_range))
    if not n_values or not len(list(p_grid)):
        raise ValueError("grids must be non-empty")
    p_grid = [check_probability(p) for p in p_grid]
    if k_offsets is None:
        k_offsets = {1: range(0, 6), 2: range(0, 6), 3: range(-2, 3), 4: range(0, 6)}.get(property_id)
    if k_offsets is None:
        raise ValueError(f"unknown property id {property_id}")
    k_offsets = [int(k) for k in k_offsets]
    report = MonotonicityReport(
        property_id=property_id,
        grid={"n_min": n_values[0], "n_max": n_values[-1], "p_grid": list(p_grid), "k_offsets": k_offsets},
    )
    scanner = {1: _scan_property1, 2: _scan_property2, 3: _scan_property3, 4: _scan_property4}.get(property_id)
    if scanner is None:
        raise ValueError(f"unknown property id {property_id}")
    scanner(n_values, p_grid, k_offsets, tolerance, report)
    return report


def concentration_check(n: int, p: float, delta: float) -> float:
    """Mass of Binomial(n, p) within the window n*(p +/- delta), clamped to [0, n]."""
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    check_probability(p)
    j = max(0, math.ceil(n * (p - delta)))
    k = min(n, math.floor(n * (p + delta)))
    return trunc_binom(n, j, k, p)


def _half_tail(n: int, k: int, p: float) -> float:
    return upper_trunc(n, -(-n // 2) + k, p) if 0 <= -(-n // 2) + k <= n else math.nan


def interchange_point(n0: int, k: int, p: float, cap: int = 10**5) -> int:
    """Smallest R with S(n0+r, ceil((n0+r)/2)+k) past S(n0, ceil(n0/2)+k) for all r > R.

    "Past" means >= for p < 1/2 and <= for p > 1/2; p = 1/2 has no guaranteed
    interchange and is rejected.  Bounded forward search; raises RuntimeError
    if the cap is exhausted before the crossing stabilizes.
    """
    check_probability(p)
    if p == 0.5:
        raise ValueError("p = 1/2 has no guaranteed interchange point")
    increasing = p < 0.5
    baseline = _half_tail(n0, k, p)
    if math.isnan(baseline):
        raise ValueError(f"offset k={k} leaves the valid index range at n0={n0}")

    def past_threshold(n: int) -> bool:
        j = -(-n // 2) + k
        thr = (n - j) / (n + 1)
        return p <= thr if increasing else p >= thr

    last_violation = 0
    ok_streak = 0
    for r in range(1, cap + 1):
        value = _half_tail(n0 + r, k, p)
        settled = (value >= baseline) if increasing else (value <= baseline)
        if not settled:
            last_violation = r
            ok_streak = 0
        else:
            ok_streak += 1
        # Two consecutive settled parities past the threshold cannot dip back.
        if ok_streak >= 2 and past_threshold(n0 + r) and past_threshold(n0 + r - 1):
            return last_violation
    raise RuntimeError(f"interchange search cap ({cap}) exceeded for n0={n0}, k={k}, p={p}")
