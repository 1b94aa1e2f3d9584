"""Private release mechanisms.

The centrepiece samples a sparse integer surrogate database from the finite
domain ``{D' in N^n : ||D'||_1 = m}`` with probability proportional to
``exp(score * alpha / divisor)``, where the quality score of a candidate is
the negated worst-case rescaled query error.  Two divisor rules are provided:

* ``PAPER_QUARTER`` — the literal constant 4.  Valid because the score's
  sensitivity under a unit L1 change is at most ``1 + 1/m <= 2``.
* ``TIGHT_SENSITIVITY`` — ``2 * (1 + 1/m)``, the generic exponential-weight
  divisor instantiated with the actual sensitivity bound.

Both rules preserve alpha-differential privacy; the looser quarter rule is
the default.

A Metropolis chain over the same domain provides a scalable stand-in for the
exact sampler (same stationary distribution; its privacy guarantee holds only
in the mixing limit), and a Laplace baseline answers the queries directly with
per-query noise scale ``k / alpha``.

All randomness flows through explicitly passed ``numpy.random.Generator``
instances; Laplace noise is drawn by inverse CDF from the generator's
uniforms so every experiment is reproducible bit-for-bit per seed.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import config
from .core import (
    Database,
    DimensionMismatchError,
    DomainTooLargeError,
    QueryClass,
    SparseSyntheticDatabase,
    l1_norm,
    rescale,
)

__all__ = [
    "ExponentRule",
    "PrivacyParams",
    "ReleaseOutput",
    "domain_size",
    "sparse_domain",
    "composition_matrix",
    "quality_score",
    "score_sensitivity",
    "exponent_divisor",
    "softmax_probabilities",
    "exponential_release_exact",
    "exponential_release_mcmc",
    "mcmc_state_counts",
    "acceptance_probability",
    "laplace_noise",
    "laplace_release",
    "estimate_l1",
    "utility_threshold",
]


class ExponentRule(enum.Enum):
    PAPER_QUARTER = "paper"
    TIGHT_SENSITIVITY = "tight"

    @classmethod
    def parse(cls, name: str) -> "ExponentRule":
        for rule in cls:
            if rule.value == name or rule.name == name:
                return rule
        raise ValueError(f"unknown exponent rule {name!r}; expected 'paper' or 'tight'")


@dataclass(frozen=True)
class PrivacyParams:
    """alpha: differential-privacy parameter; delta_util: acceptable failure
    probability on the usefulness side."""

    alpha: float
    delta_util: float = 0.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.delta_util < 1.0:
            raise ValueError(f"delta_util must lie in (0, 1), got {self.delta_util}")


@dataclass(frozen=True)
class ReleaseOutput:
    """A released surrogate: the integer vector actually sampled, its quality
    score (always <= 0), and the rescaled real-valued database handed to the
    analyst.  ``approximate`` marks MCMC outputs, whose privacy guarantee
    holds only in the mixing limit."""

    d_out: Database
    d_prime: SparseSyntheticDatabase
    score: float
    m: int
    exponent_rule: ExponentRule
    l1_estimate: float
    approximate: bool = False

    def answers(self, c: QueryClass) -> np.ndarray:
        return c.matrix @ self.d_out.entries


def domain_size(n: int, m: int) -> int:
    """Number of length-n nonnegative integer vectors summing to m."""
    if n < 1 or m < 0:
        raise ValueError("domain requires n >= 1 and m >= 0")
    return math.comb(n + m - 1, n - 1)


def _check_domain_budget(n: int, m: int, budget: int | None) -> int:
    count = domain_size(n, m)
    limit = config.domain_budget(budget)
    if count > limit:
        raise DomainTooLargeError(
            f"sparse domain for n={n}, m={m} holds {count} elements, over the "
            f"budget of {limit}; use exponential_release_mcmc instead",
            count=count,
        )
    return count


def _compositions(n: int, m: int):
    if n == 1:
        yield (m,)
        return
    for first in range(m, -1, -1):
        for rest in _compositions(n - 1, m - first):
            yield (first,) + rest


def sparse_domain(n: int, m: int, *, budget: int | None = None):
    """Every nonnegative integer vector of length n summing to m, exactly
    once, in lexicographically decreasing order.  Refuses with the count when
    the domain exceeds the enumeration budget."""
    if m < 1:
        raise ValueError("sparse domain requires m >= 1")
    _check_domain_budget(n, m, budget)

    def generate():
        for counts in _compositions(n, m):
            yield SparseSyntheticDatabase(np.asarray(counts, dtype=np.int64))

    return generate()


def composition_matrix(n: int, m: int, *, budget: int | None = None) -> np.ndarray:
    """The same enumeration as ``sparse_domain`` as one (count, n) int matrix,
    built level by level so large domains stay in vectorized code."""
    _check_domain_budget(n, m, budget)
    level = {total: np.array([[total]], dtype=np.int64) for total in range(m + 1)}
    for _ in range(n - 1):
        nxt = {}
        for total in range(m + 1):
            blocks = []
            for first in range(total, -1, -1):
                sub = level[total - first]
                col = np.full((sub.shape[0], 1), first, dtype=np.int64)
                blocks.append(np.hstack((col, sub)))
            nxt[total] = np.vstack(blocks)
        level = nxt
    return level[m]


def quality_score(
    d: Database, dp: SparseSyntheticDatabase, c: QueryClass, l1_estimate: float
) -> float:
    """Negated worst-case error of the rescaled candidate:
    -max over q in C of |q(D) - (l1_estimate / m) * q(D')|."""
    if d.n != dp.n or c.n != d.n:
        raise DimensionMismatchError(
            f"quality_score: database, candidate, and class dimensions must agree "
            f"({d.n}, {dp.n}, {c.n})"
        )
    if l1_estimate < 0:
        raise ValueError("l1_estimate must be nonnegative")
    scalewd = (float(l1_estimate) / dp.m) * (c.matrix @ dp.counts)
    return float(-np.abs(c.matrix @ d.entries - scalewd).max())


def score_sensitivity(m: int) -> float:
    """Upper bound on the quality score's change under a unit L1 change of
    the private database: 1 + 1/m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return 1.0 + 1.0 / m


def exponent_divisor(rule: ExponentRule, m: int) -> float:
    if rule is ExponentRule.PAPER_QUARTER:
        return 4.0
    return 2.0 * score_sensitivity(m)


def softmax_probabilities(logits: np.ndarray) -> np.ndarray:
    """exp-and-normalize in log space (max subtracted first)."""
    logits = np.asarray(logits, dtype=np.float64)
    weights = np.exp(logits - logits.max())
    return weights / weights.sum()


def _resolve_l1(
    d: Database, p: PrivacyParams, l1, rng: np.random.Generator | None
) -> tuple[float, float]:
    """Resolve the L1-norm configuration into (estimate, alpha for weights).

    "public" uses the true norm at full alpha; "private" spends a 10% share
    of alpha on a Laplace estimate of the norm and runs the weights at the
    remaining 90%; a number is a caller-supplied estimate at full alpha.
    """
    if isinstance(l1, str):
        if l1 == "public":
            return l1_norm(d), p.alpha
        if l1 == "private":
            if rng is None:
                raise ValueError("private L1 estimation needs a generator")
            share = config.L1_ESTIMATE_ALPHA_SHARE
            return estimate_l1(d, share * p.alpha, rng), (1.0 - share) * p.alpha
        raise ValueError(f"l1 must be 'public', 'private', or a number, got {l1!r}")
    value = float(l1)
    if value < 0:
        raise ValueError("caller-supplied L1 estimate must be nonnegative")
    return value, p.alpha


def exponential_release_exact(
    d: Database,
    c: QueryClass,
    p: PrivacyParams,
    m: int,
    rng: np.random.Generator,
    exponent_rule: ExponentRule = ExponentRule.PAPER_QUARTER,
    *,
    l1="public",
    budget: int | None = None,
) -> ReleaseOutput:
    """Sample a surrogate from the exact exponential-weight distribution by
    scoring the whole domain.  Meant for desk-scale domains; refuses over the
    enumeration budget and names the MCMC fallback."""
    if c.n != d.n:
        raise DimensionMismatchError(f"class dimension {c.n} != database dimension {d.n}")
    _check_domain_budget(d.n, m, budget)
    l1_estimate, alpha = _resolve_l1(d, p, l1, rng)
    elements = list(sparse_domain(d.n, m, budget=budget))
    scores = np.array([quality_score(d, e, c, l1_estimate) for e in elements])
    probs = softmax_probabilities(scores * (alpha / exponent_divisor(exponent_rule, m)))
    cumulative = np.cumsum(probs)
    idx = min(int(np.searchsorted(cumulative, rng.random(), side="right")), len(elements) - 1)
    chosen = elements[idx]
    return ReleaseOutput(
        d_out=rescale(chosen, l1_estimate),
        d_prime=chosen,
        score=float(scores[idx]),
        m=m,
        exponent_rule=exponent_rule,
        l1_estimate=l1_estimate,
    )


def acceptance_probability(score_from: float, score_to: float, scale: float) -> float:
    """Metropolis acceptance for a symmetric proposal between two states with
    the given exponential-weight scale (= alpha / divisor)."""
    delta = scale * (score_to - score_from)
    if delta >= 0.0:
        return 1.0
    return math.exp(delta)


def _chain(d, c, p, m, steps, rng, exponent_rule, l1, record):
    """Shared Metropolis walk.  Proposals move one unit of mass from a
    uniformly chosen coordinate to a uniformly chosen other coordinate, which
    is symmetric, so the stationary law is the exact mechanism's."""
    n = d.n
    l1_estimate, alpha = _resolve_l1(d, p, l1, rng)
    scale = alpha / exponent_divisor(exponent_rule, m)
    state = np.zeros(n, dtype=np.int64)
    state[0] = m
    qd = c.matrix @ d.entries
    qstate = c.matrix @ state
    factor = float(l1_estimate) / m

    def score_of(qvec):
        return float(-np.abs(qd - factor * qvec).max())

    current = score_of(qstate)
    counts: dict[tuple, int] = {}
    for step in range(steps):
        i = int(rng.integers(n))
        if n > 1:
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
        else:
            j = i
        if state[i] > 0 and j != i:
            candidate_q = qstate + c.matrix[:, j] - c.matrix[:, i]
            candidate = score_of(candidate_q)
            if acceptance_probability(current, candidate, scale) > rng.random():
                state[i] -= 1
                state[j] += 1
                qstate = candidate_q
                current = candidate
        if record is not None and step >= record:
            key = tuple(int(x) for x in state)
            counts[key] = counts.get(key, 0) + 1
    return state, current, l1_estimate, counts


def exponential_release_mcmc(
    d: Database,
    c: QueryClass,
    p: PrivacyParams,
    m: int,
    steps: int,
    rng: np.random.Generator,
    exponent_rule: ExponentRule = ExponentRule.PAPER_QUARTER,
    *,
    l1="public",
) -> ReleaseOutput:
    """Approximate sampler: run the Metropolis walk for ``steps`` moves from
    the all-mass-on-coordinate-0 state and release where it lands."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    state, score, l1_estimate, _ = _chain(d, c, p, m, steps, rng, exponent_rule, l1, None)
    chosen = SparseSyntheticDatabase(state)
    return ReleaseOutput(
        d_out=rescale(chosen, l1_estimate),
        d_prime=chosen,
        score=score,
        m=m,
        exponent_rule=exponent_rule,
        l1_estimate=l1_estimate,
        approximate=True,
    )


def mcmc_state_counts(
    d: Database,
    c: QueryClass,
    p: PrivacyParams,
    m: int,
    burn_in: int,
    samples: int,
    rng: np.random.Generator,
    exponent_rule: ExponentRule = ExponentRule.PAPER_QUARTER,
    *,
    l1="public",
) -> dict[tuple, int]:
    """Occupation counts of one walk over ``samples`` post-burn-in steps;
    the empirical distribution these induce converges to the exact one."""
    if burn_in < 0 or samples < 1:
        raise ValueError("burn_in must be >= 0 and samples >= 1")
    _, _, _, counts = _chain(
        d, c, p, m, burn_in + samples, rng, exponent_rule, l1, record=burn_in
    )
    return counts


def laplace_noise(rng: np.random.Generator, scale: float, size=None):
    """Laplace(scale) noise via inverse CDF of the generator's uniforms."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    u = rng.random(size) - 0.5
    magnitude = np.minimum(np.abs(u), 0.5 * (1.0 - np.finfo(np.float64).eps))
    noise = -scale * np.sign(u) * np.log1p(-2.0 * magnitude)
    if size is None:
        return float(noise)
    return noise


def laplace_release(
    d: Database, c: QueryClass, p: PrivacyParams, rng: np.random.Generator
) -> np.ndarray:
    """Baseline: answer every query directly with independent Laplace noise
    at scale k/alpha (each linear query moves by at most 1 under a unit L1
    change, and the k answers compose)."""
    if c.n != d.n:
        raise DimensionMismatchError(f"class dimension {c.n} != database dimension {d.n}")
    true_answers = c.matrix @ d.entries
    return true_answers + laplace_noise(rng, c.k / p.alpha, size=c.k)


def estimate_l1(d: Database, alpha_share: float, rng: np.random.Generator) -> float:
    """Laplace estimate of ||D||_1 (sensitivity 1), clamped to be nonnegative.
    Clamping is post-processing, so it costs no privacy."""
    if alpha_share <= 0:
        raise ValueError("alpha_share must be positive")
    return max(0.0, l1_norm(d) + laplace_noise(rng, 1.0 / alpha_share))


def utility_threshold(
    m: int, n: int, eta: float, alpha: float, c_u: float = config.DEFAULT_CU
) -> float:
    """Database mass above which releases at surrogate size ``m`` are expected
    to stay within relative error 2*eta except with small probability:
    c_u * m * ln(n) / (eta * alpha)."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be at least 1")
    if eta <= 0 or alpha <= 0 or c_u <= 0:
        raise ValueError("eta, alpha, and c_u must be positive")
    return c_u * m * math.log(n) / (eta * alpha)
