"""Shattering certificates and the fat-shattering dimension of finite classes.

A subset ``S`` of basis vectors is gamma-shattered by a class ``C`` when some
threshold vector ``r`` admits, for every sign pattern ``b`` over ``S``, a
query whose basis values sit at least ``gamma`` above ``r`` on the 1-marked
coordinates and at least ``gamma`` below it on the 0-marked ones.  The
dimension is the largest cardinality of a shattered subset.

The search eliminates ``r`` analytically instead of scanning it: an
assignment ``b -> q_b`` extends to a valid ``r`` iff on every coordinate the
smallest 1-side basis value clears the largest 0-side basis value by at least
``2*gamma`` (any valid ``r`` forces the 1-side to ``>= r+gamma`` and the
0-side to ``<= r-gamma``, so the gap is at least ``2*gamma``; conversely the
midpoint of the two extremes satisfies both displayed inequalities).  That
leaves a finite depth-first search over pattern assignments with
per-coordinate interval pruning.

Everything here is exponential-time by design: the dimension is a
combinatorial quantity and exactness at small scale is the goal.  Searches
are guarded by a subset-size cap and a node budget; running out of budget
degrades the answer to a best-found lower bound flagged ``exact=False``.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import config
from .core import QueryClass

__all__ = [
    "ShatteringWitness",
    "FsdResult",
    "SearchBudgetExceeded",
    "verify_shattering",
    "is_gamma_shattered",
    "fsd",
    "choose_m",
]


class SearchBudgetExceeded(RuntimeError):
    """The shattering search ran out of its node budget before finishing."""


def _validate_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma <= 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2], got {gamma}")
    return gamma


@dataclass(frozen=True)
class ShatteringWitness:
    """Self-contained certificate that ``subset`` is gamma-shattered.

    ``assignment`` maps every bit pattern over the subset (a 0/1 tuple
    aligned with ``subset`` order) to the index of the realizing query;
    ``thresholds`` is the vector ``r``.  ``verify_shattering`` re-checks the
    certificate against a class from scratch.
    """

    subset: tuple[int, ...]
    thresholds: tuple[float, ...]
    assignment: dict[tuple[int, ...], int]
    gamma: float

    def __post_init__(self):
        d = len(self.subset)
        if d < 1:
            raise ValueError("witness subset must be nonempty")
        if len(set(self.subset)) != d:
            raise ValueError("witness subset indices must be distinct")
        if len(self.thresholds) != d:
            raise ValueError("thresholds must match subset length")
        # The search interface restricts gamma to (0, 1/2]; a hand-built
        # witness may carry any positive margin and simply fail verification
        # (gamma > 1/2 can never verify, since basis values live in [0,1]).
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        want = 1 << d
        if len(self.assignment) != want or set(self.assignment) != set(
            itertools.product((0, 1), repeat=d)
        ):
            raise ValueError(f"assignment must cover all {want} patterns")

    @property
    def d(self) -> int:
        return len(self.subset)

    def to_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "thresholds": [float(r) for r in self.thresholds],
            "gamma": float(self.gamma),
            "assignment": {
                "".join(map(str, pattern)): int(qi) for pattern, qi in sorted(self.assignment.items())
            },
        }


def verify_shattering(c: QueryClass, w: ShatteringWitness) -> bool:
    """Re-check a witness against the definition, coordinate by coordinate.

    Comparisons are non-strict and exact (tolerance 0): coefficients are
    exact inputs, and witnesses are built so the inequalities hold in
    floating point as written.
    """
    for i in w.subset:
        if not 0 <= i < c.n:
            raise IndexError(f"witness subset index {i} out of range for n={c.n}")
    for pattern, qi in w.assignment.items():
        if not 0 <= qi < c.k:
            raise IndexError(f"witness query index {qi} out of range for k={c.k}")
        q = c.queries[qi]
        for t, i in enumerate(w.subset):
            value = q.basis_value(i)
            if pattern[t] == 1:
                if not value >= w.thresholds[t] + w.gamma:
                    return False
            else:
                if not value <= w.thresholds[t] - w.gamma:
                    return False
    return True


class _NodeBudget:
    __slots__ = ("remaining", "used")

    def __init__(self, limit: int):
        self.remaining = int(limit)
        self.used = 0

    def spend(self):
        if self.remaining <= 0:
            raise SearchBudgetExceeded("shattering search exceeded its node budget")
        self.remaining -= 1
        self.used += 1


def _pick_threshold(low: float, high: float, gamma: float) -> float:
    # Any r in [low+gamma, high-gamma] works in exact arithmetic; try the
    # midpoint first and fall back to the interval ends if rounding bites.
    for r in ((low + high) / 2.0, high - gamma, low + gamma):
        if high >= r + gamma and low <= r - gamma:
            return float(r)
    raise AssertionError("no representable threshold despite a 2*gamma gap")


def _search_assignment(basis: np.ndarray, gamma: float, budget: _NodeBudget):
    """DFS for a full pattern->query assignment over ``basis`` (k x d basis
    values restricted to the candidate subset).  Returns (assignment dict,
    thresholds) or None."""
    k, d = basis.shape
    patterns = list(itertools.product((0, 1), repeat=d))
    min1 = np.full(d, np.inf)
    max0 = np.full(d, -np.inf)
    chosen: list[int] = []
    threshold = 2.0 * gamma

    def recurse(idx: int) -> bool:
        if idx == len(patterns):
            return True
        pattern = patterns[idx]
        for qi in range(k):
            budget.spend()
            row = basis[qi]
            ok = True
            touched: list[tuple[int, float, bool]] = []
            for t in range(d):
                v = row[t]
                if pattern[t] == 1:
                    if v < min1[t]:
                        if v - max0[t] < threshold:
                            ok = False
                            break
                        touched.append((t, min1[t], True))
                        min1[t] = v
                else:
                    if v > max0[t]:
                        if min1[t] - v < threshold:
                            ok = False
                            break
                        touched.append((t, max0[t], False))
                        max0[t] = v
            if ok:
                chosen.append(qi)
                if recurse(idx + 1):
                    return True
                chosen.pop()
            for t, old, was_min in reversed(touched):
                if was_min:
                    min1[t] = old
                else:
                    max0[t] = old
        return False

    if not recurse(0):
        return None
    assignment = {pattern: qi for pattern, qi in zip(patterns, chosen)}
    thresholds = tuple(_pick_threshold(float(max0[t]), float(min1[t]), gamma) for t in range(d))
    return assignment, thresholds


def is_gamma_shattered(
    c: QueryClass,
    subset,
    gamma: float,
    *,
    budget: int | None = None,
) -> ShatteringWitness | None:
    """Decide whether ``subset`` is gamma-shattered; return a witness if so.

    Raises ``SearchBudgetExceeded`` if the node budget runs out before the
    search completes (so ``None`` always means a definite "not shattered").
    """
    gamma = _validate_gamma(gamma)
    subset = tuple(int(i) for i in subset)
    if len(subset) < 1:
        raise ValueError("subset must contain at least one index")
    if len(set(subset)) != len(subset):
        raise ValueError("subset indices must be distinct")
    for i in subset:
        if not 0 <= i < c.n:
            raise IndexError(f"subset index {i} out of range for n={c.n}")
    tracker = _NodeBudget(config.node_budget(budget))
    found = _search_assignment(c.matrix[:, subset], gamma, tracker)
    if found is None:
        return None
    assignment, thresholds = found
    return ShatteringWitness(subset=subset, thresholds=thresholds, assignment=assignment, gamma=gamma)


@dataclass(frozen=True)
class FsdResult:
    """Outcome of a dimension search.  ``exact=False`` means the node budget
    ran out and ``d`` is only a lower bound."""

    d: int
    witness: ShatteringWitness | None
    nodes_explored: int
    exact: bool

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "nodes_explored": self.nodes_explored,
            "exact": self.exact,
        }


def fsd(c: QueryClass, gamma: float, d_max: int, *, budget: int | None = None) -> FsdResult:
    """Largest ``d <= d_max`` such that some size-d subset of basis vectors is
    gamma-shattered, together with a witness.

    Searches subset sizes bottom-up and stops at the first empty level:
    shattering is downward closed (restrict the assignment to sub-patterns),
    so an empty level proves every larger level empty too.  Among equally
    large shattered subsets the lexicographically smallest index set wins.
    """
    gamma = _validate_gamma(gamma)
    if d_max < 1:
        raise ValueError(f"d_max must be at least 1, got {d_max}")
    tracker = _NodeBudget(config.node_budget(budget))
    best_d = 0
    best_witness: ShatteringWitness | None = None
    exact = True
    try:
        for d in range(1, min(d_max, c.n) + 1):
            level_witness = None
            for subset in itertools.combinations(range(c.n), d):
                found = _search_assignment(c.matrix[:, subset], gamma, tracker)
                if found is not None:
                    assignment, thresholds = found
                    level_witness = ShatteringWitness(
                        subset=subset, thresholds=thresholds, assignment=assignment, gamma=gamma
                    )
                    break
            if level_witness is None:
                break
            best_d, best_witness = d, level_witness
    except SearchBudgetExceeded:
        exact = False
    return FsdResult(d=best_d, witness=best_witness, nodes_explored=tracker.used, exact=exact)


def choose_m(eta: float, d: int, c_m: float = config.DEFAULT_CM) -> int:
    """Surrogate size for target relative error ``eta`` and dimension ``d``:
    ceil(c_m * (d * ln^2(1/eta) + ln 2) / eta^2), floored at 1.

    The ln 2 term is the failure-probability contribution at delta = 1/2, the
    value under which a good surrogate exists by the averaging argument.
    """
    eta = float(eta)
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if d < 0:
        raise ValueError("d must be nonnegative")
    if c_m <= 0:
        raise ValueError("c_m must be positive")
    log_term = math.log(1.0 / eta)
    m = math.ceil(c_m * (d * log_term * log_term + math.log(2.0)) / (eta * eta))
    return max(int(m), 1)
