"""Stationary binary erasure processes and their pattern probabilities.

Two families: i.i.d. erasures with rate eps = P(E=0), and first-order
binary Markov erasures (the minimal family with memory, which exercises
everything the exact conditional-entropy formula supports beyond the
memoryless case).  Both expose the same two primitives: the probability
of a prescribed 1/0 pattern on a finite index set, and the conditional
entropy H(E_0 | E_{-n}^{-1}).
"""

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._numutil import binary_entropy
from .errors import ConfigError, PreconditionError, ResourceLimitError

_WINDOW_CAP = 40


@dataclass(frozen=True, eq=False)
class ErasureProcess:
    """Base class; use IidErasure or Markov2Erasure."""

    def pattern_probability(self, ones, zeros) -> float:
        return pattern_probability(self, ones, zeros)

    def conditional_entropy(self, n: int) -> float:
        return conditional_entropy(self, n)


@dataclass(frozen=True, eq=False)
class IidErasure(ErasureProcess):
    """Independent erasures: each symbol erased with probability eps."""

    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps < 1.0:
            raise ConfigError(f"erasure rate must lie in [0, 1), got {self.eps}")

    @property
    def erasure_rate(self) -> float:
        return self.eps


@dataclass(frozen=True, eq=False)
class Markov2Erasure(ErasureProcess):
    """Binary Markov erasures: transition[i, j] = P(E_{t+1}=j | E_t=i), states 0/1.

    State 1 means the symbol passes; its stationary probability must be
    positive (otherwise nothing is ever received and the mutual-information
    limits degenerate).
    """

    transition: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        object.__setattr__(self, "transition", t)
        if t.shape != (2, 2) or np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1) > 1e-12):
            raise ConfigError("transition must be a 2x2 row-stochastic matrix")

    @property
    def stationary(self) -> np.ndarray:
        t = self.transition
        denom = t[0, 1] + t[1, 0]
        if denom == 0.0:  # two absorbing states
            raise ConfigError("erasure chain has no unique stationary law")
        pi = np.array([t[1, 0], t[0, 1]]) / denom
        if pi[1] <= 0.0:
            raise ConfigError("stationary probability of passing a symbol must be > 0")
        return pi

    @property
    def erasure_rate(self) -> float:
        return float(self.stationary[0])

    @lru_cache(maxsize=None)
    def _power(self, n: int) -> np.ndarray:
        return np.linalg.matrix_power(self.transition, n)


def pattern_probability(e: ErasureProcess, ones, zeros) -> float:
    """P(E_A = 1, E_B = 0) for disjoint index sets A and B.

    i.i.d. gives the product (1-eps)^|A| eps^|B|; the Markov family chains
    matrix powers across the unconstrained gaps.  The overall index window
    may span at most 40 positions.
    """
    ones = sorted(int(i) for i in ones)
    zeros = sorted(int(i) for i in zeros)
    if set(ones) & set(zeros):
        raise PreconditionError("ones and zeros index sets overlap")
    if not ones and not zeros:
        return 1.0
    allidx = sorted(set(ones) | set(zeros))
    if allidx[-1] - allidx[0] + 1 > _WINDOW_CAP:
        raise ResourceLimitError(
            f"pattern window spans {allidx[-1] - allidx[0] + 1} positions "
            f"(cap {_WINDOW_CAP})"
        )
    values = {i: 1 for i in ones}
    values.update({i: 0 for i in zeros})
    if isinstance(e, IidErasure):
        return (1.0 - e.eps) ** len(ones) * e.eps ** len(zeros)
    if isinstance(e, Markov2Erasure):
        prob = e.stationary[values[allidx[0]]]
        for prev, cur in zip(allidx, allidx[1:]):
            step = e._power(cur - prev)
            prob *= step[values[prev], values[cur]]
        return float(prob)
    raise ConfigError(f"unknown erasure process type {type(e).__name__}")


def conditional_entropy(e: ErasureProcess, n: int) -> float:
    """H(E_0 | E_{-n}^{-1}) in nats; n = 0 gives the marginal entropy H(E_0)."""
    if n < 0:
        raise PreconditionError(f"history length must be >= 0, got {n}")
    if isinstance(e, IidErasure):
        return binary_entropy(e.eps)
    if isinstance(e, Markov2Erasure):
        pi = e.stationary
        if n == 0:
            return binary_entropy(pi[0])
        rows = binary_entropy(e.transition[:, 0])
        return float(pi @ rows)
    raise ConfigError(f"unknown erasure process type {type(e).__name__}")


def load_erasure(source) -> ErasureProcess:
    """Parse {"iid": eps} or {"markov": [[p00, p01], [p10, p11]]}."""
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid erasure JSON: {err}") from err
    if not isinstance(source, dict):
        raise ConfigError("erasure description must be a JSON object")
    if "iid" in source:
        return IidErasure(float(source["iid"]))
    if "markov" in source:
        return Markov2Erasure(np.asarray(source["markov"], dtype=float))
    raise ConfigError('erasure description must contain "iid" or "markov"')
