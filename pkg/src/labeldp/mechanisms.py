"""Exponential-mechanism privatization of binary label vectors.

The released vector is drawn with probability proportional to
``exp(q * eps / (2 * sensitivity))`` where the quality score ``q`` is the
number of positions that agree with the true labels (``n`` minus the Hamming
distance).  Sampling uses the two-step route: first draw the score ``q`` from
its marginal distribution, then flip a uniformly random subset of ``n - q``
positions.  Randomized response (independent per-label flips) is provided for
comparison; for this particular score the two induce identical output
distributions, which :func:`em_rr_equivalence_check` verifies numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, gammaln, logsumexp
from sklearn.base import BaseEstimator, TransformerMixin

from .rng import spawn_generator
from .validation import check_epsilon, check_labels, check_probability

__all__ = [
    "PrivacyParams",
    "RRParams",
    "ScoreDistribution",
    "PrivatizationRecord",
    "flip_probability",
    "score_distribution",
    "sample_score",
    "sample_scores",
    "apply_em",
    "apply_rr",
    "exhaustive_output_distribution",
    "verify_dp",
    "em_rr_equivalence_check",
    "LabelPrivatizer",
]

MAX_SCORE_TABLE_N = 10**7
MAX_ENUMERATION_N = 20
MAX_NEIGHBOR_CHECK_N = 10


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget epsilon and global sensitivity of the quality score."""

    epsilon: float
    delta_sensitivity: float = 1.0

    def __post_init__(self):
        check_epsilon(self.epsilon, self.delta_sensitivity)

    @property
    def exponent(self) -> float:
        """The per-score-unit exponent eps / (2 * sensitivity)."""
        return self.epsilon / (2.0 * self.delta_sensitivity)


@dataclass(frozen=True)
class RRParams:
    """Randomized response with a fixed per-label flip probability."""

    flip_probability: float

    def __post_init__(self):
        check_probability(self.flip_probability, "flip_probability")


@dataclass(frozen=True)
class ScoreDistribution:
    """Log-probability table over scores q in [0, n]."""

    n: int
    log_probs: np.ndarray
    params: PrivacyParams

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_probs)


@dataclass(frozen=True)
class PrivatizationRecord:
    """Outcome of one exponential-mechanism release."""

    params: PrivacyParams
    seed: int
    score: int
    flip_count: int
    output: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "epsilon": self.params.epsilon,
            "delta": self.params.delta_sensitivity,
            "seed": self.seed,
            "n": int(self.output.size),
            "q": int(self.score),
            "flip_count": int(self.flip_count),
        }


def flip_probability(params: PrivacyParams) -> RRParams:
    """Per-label flip probability 1 / (1 + exp(eps / (2 * sensitivity)))."""
    return RRParams(float(expit(-params.exponent)))


def score_distribution(n: int, params: PrivacyParams) -> ScoreDistribution:
    """Score marginal Pr[q = i] for i in [0, n], computed in log space.

    Uses the forward recursion
    ``log Pr(q=i) = log(n-i+1) - log(i) + eps/(2*sensitivity) + log Pr(q=i-1)``
    with base ``-n * log(1 + exp(eps/(2*sensitivity)))``, then renormalizes so
    the table sums to one exactly up to float rounding.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > MAX_SCORE_TABLE_N:
        raise ValueError(f"n={n} exceeds the score-table guard ({MAX_SCORE_TABLE_N})")
    x = params.exponent
    if np.isinf(x):
        log_probs = np.full(n + 1, -np.inf)
        log_probs[n] = 0.0
        return ScoreDistribution(n, log_probs, params)
    i = np.arange(1, n + 1, dtype=float)
    increments = np.log(n - i + 1.0) - np.log(i) + x
    log_probs = np.empty(n + 1)
    log_probs[0] = 0.0
    np.cumsum(increments, out=log_probs[1:])
    log_probs -= n * np.logaddexp(0.0, x)
    log_probs -= logsumexp(log_probs)
    return ScoreDistribution(n, log_probs, params)


def _score_cdf(dist: ScoreDistribution) -> np.ndarray:
    shifted = np.exp(dist.log_probs - dist.log_probs.max())
    return np.cumsum(shifted)


def sample_score(dist: ScoreDistribution, rng: np.random.Generator) -> int:
    """Draw one score by inverse-CDF sampling on the max-shifted table."""
    return int(sample_scores(dist, 1, rng)[0])


def sample_scores(dist: ScoreDistribution, size: int, rng: np.random.Generator) -> np.ndarray:
    cdf = _score_cdf(dist)
    u = rng.random(size) * cdf[-1]
    return np.searchsorted(cdf, u, side="right").clip(0, dist.n)


def _flip_positions(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    # Full Fisher-Yates permutation, first k entries: exactly uniform over
    # all C(n, k) subsets.
    return rng.permutation(n)[:k]


def apply_em(labels, params: PrivacyParams, seed: int) -> PrivatizationRecord:
    """Privatize a label vector with the two-step exponential mechanism."""
    y = check_labels(labels)
    n = y.size
    rng = spawn_generator(seed, "apply_em")
    dist = score_distribution(n, params)
    q = sample_score(dist, rng)
    k = n - q
    out = y.copy()
    pos = _flip_positions(n, k, rng)
    out[pos] = -out[pos]
    return PrivatizationRecord(params=params, seed=int(seed), score=q, flip_count=k, output=out)


def apply_rr(labels, rr: RRParams, seed: int) -> np.ndarray:
    """Flip each label independently with probability ``rr.flip_probability``."""
    y = check_labels(labels)
    rng = spawn_generator(seed, "apply_rr")
    flips = rng.random(y.size) < rr.flip_probability
    return np.where(flips, -y, y).astype(np.int8)


def _popcounts(masks: np.ndarray) -> np.ndarray:
    view = masks.astype(np.uint32).view(np.uint8).reshape(masks.size, 4)
    return np.unpackbits(view, axis=1).sum(axis=1)


def _log_binom(n: int, k: np.ndarray) -> np.ndarray:
    return gammaln(n + 1) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _per_distance_log_probs(dist: ScoreDistribution) -> np.ndarray:
    """log Pr[output] for an output at Hamming distance d, d in [0, n].

    Splits the score mass Pr[q = n - d] uniformly over the C(n, d) tables in
    that score group, i.e. the distribution the two-step sampler induces.
    """
    n = dist.n
    d = np.arange(n + 1)
    return dist.log_probs[::-1] - _log_binom(n, d)


def exhaustive_output_distribution(labels, params: PrivacyParams) -> dict:
    """Probability of every possible output vector (2**n of them).

    Enumeration guard: refuses n > 20.
    """
    y = check_labels(labels)
    n = y.size
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"n={n} exceeds the enumeration guard ({MAX_ENUMERATION_N})")
    dist = score_distribution(n, params)
    log_by_dist = _per_distance_log_probs(dist)
    masks = np.arange(2**n, dtype=np.uint32)
    dists = _popcounts(masks)
    probs = np.exp(log_by_dist[dists])
    out = {}
    for mask, p in zip(masks.tolist(), probs.tolist()):
        flipped = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        out[tuple((np.where(flipped, -y, y)).tolist())] = p
    return out


def verify_dp(n: int, params: PrivacyParams) -> float:
    """Exhaustive neighbor check of the epsilon-DP output-ratio bound.

    Scans every pair of inputs differing in exactly one label and every
    output, returning the maximum observed probability ratio.  For the
    Hamming score the normalizer is neighbor-independent, so the observed
    maximum is exp(eps / (2 * sensitivity)), within the exp(eps) guarantee.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > MAX_NEIGHBOR_CHECK_N:
        raise ValueError(f"n={n} exceeds the neighbor-check guard ({MAX_NEIGHBOR_CHECK_N})")
    dist = score_distribution(n, params)
    log_by_dist = _per_distance_log_probs(dist)
    outputs = np.arange(2**n, dtype=np.uint32)
    max_log_ratio = 0.0
    for a in range(2**n):
        d_a = _popcounts(outputs ^ np.uint32(a))
        for i in range(n):
            b = a ^ (1 << i)
            d_b = _popcounts(outputs ^ np.uint32(b))
            log_ratios = log_by_dist[d_a] - log_by_dist[d_b]
            max_log_ratio = max(max_log_ratio, float(np.max(np.abs(log_ratios))))
    return float(np.exp(max_log_ratio))


def em_rr_equivalence_check(n: int, params: PrivacyParams, dist: ScoreDistribution | None = None) -> float:
    """Max per-output probability gap between the two-step EM and product-form RR.

    Both distributions depend on an output only through its Hamming distance
    to the input, so the per-output maximum is taken over distances.  Passing
    a custom ``dist`` compares that table's induced output distribution
    instead (used by the fault-injection self-check).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > MAX_NEIGHBOR_CHECK_N:
        raise ValueError(f"n={n} exceeds the equivalence-check guard ({MAX_NEIGHBOR_CHECK_N})")
    if dist is None:
        dist = score_distribution(n, params)
    em_probs = np.exp(_per_distance_log_probs(dist))
    p = flip_probability(params).flip_probability
    d = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        log_rr = d * np.log(p) + (n - d) * np.log1p(-p) if 0.0 < p < 1.0 else None
    if log_rr is None:
        rr_probs = np.where(d == (0 if p == 0.0 else n), 1.0, 0.0)
    else:
        rr_probs = np.exp(log_rr)
    return float(np.max(np.abs(em_probs - rr_probs)))


class LabelPrivatizer(TransformerMixin, BaseEstimator):
    """Privatize binary label vectors, sklearn transformer style.

    Parameters
    ----------
    epsilon : float
        Privacy budget.
    delta_sensitivity : float
        Global sensitivity of the Hamming quality score (default 1).
    mechanism : {"em", "rr"}
        Two-step exponential mechanism or randomized response.
    random_state : int
        Master seed; ``transform`` is deterministic given it.
    """

    def __init__(self, epsilon=1.0, delta_sensitivity=1.0, mechanism="em", random_state=0):
        self.epsilon = epsilon
        self.delta_sensitivity = delta_sensitivity
        self.mechanism = mechanism
        self.random_state = random_state

    def _params(self) -> PrivacyParams:
        return PrivacyParams(self.epsilon, self.delta_sensitivity)

    def fit(self, y, _unused=None):
        check_labels(y)
        if self.mechanism not in ("em", "rr"):
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        self._params()
        self.n_labels_ = np.asarray(y).size
        return self

    def transform(self, y) -> np.ndarray:
        if not hasattr(self, "n_labels_"):
            self.fit(y)
        params = self._params()
        if self.mechanism == "rr":
            out = apply_rr(y, flip_probability(params), self.random_state)
            y_in = check_labels(y)
            flips = int(np.sum(out != y_in))
            self.last_record_ = PrivatizationRecord(
                params=params,
                seed=int(self.random_state),
                score=y_in.size - flips,
                flip_count=flips,
                output=out,
            )
            return out
        record = apply_em(y, params, self.random_state)
        self.last_record_ = record
        return record.output

    def fit_transform(self, y, _unused=None, **fit_params):
        return self.fit(y).transform(y)
