"""Mutual-information rate of a constrained input over a memoryless erasure map.

The exact finite-history conditional entropy H(Y0 | Y_{-n}^{-1}) decomposes
into an erasure-entropy term plus a weighted sum of input conditional
entropies H(X0 | X_D) over subsets D of revealed past coordinates; the
mutual-information rate is the n -> infinity limit of that entropy minus
H(E0 | E_{-n}^{-1}).  For i.i.d. erasures the limit collapses into power
series in the erasure rate (one term per gap for first-order inputs, a
run-free-subset sum for higher orders), truncated here with certified tail
bounds.  A from-scratch brute-force evaluation over the full output law
serves as the independent oracle.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._numutil import LN2, entropy as _row_entropy, xlog
from .erasure import ErasureProcess, IidErasure, pattern_probability
from .erasure import conditional_entropy as erasure_conditional_entropy
from .errors import PreconditionError, ResourceLimitError
from .markov import (
    MarkovInput,
    RllThetaChain,
    gap_conditional_entropy,
    marginal_entropy,
    rll_gap_entropy,
    step_conditional_entropy,
    subset_conditional_entropy,
)

_N_CAP = 22
_BRUTE_N_CAP = 10
_BRUTE_K_CAP = 3
_KMAX_CAP = 18
DEFAULT_KMAX_ORDER2 = 14  # cost grows ~1.6x per extra k at order 2


@dataclass(frozen=True)
class MiResult:
    """A mutual-information rate value with its provenance.

    value is in nats; tail_bound is a certified upper bound on the
    truncation error for the series methods (0.0 where no truncation is
    involved).  n_or_k is the history length or series truncation index.
    """

    value: float
    method: str
    n_or_k: int
    tail_bound: float = 0.0

    @property
    def value_bits(self) -> float:
        return self.value / LN2

    @property
    def tail_bound_bits(self) -> float:
        return self.tail_bound / LN2


def _gap_entropies(chain: MarkovInput, count: int) -> np.ndarray:
    """H(X0 | X_{-j}) for j = 1..count (first-order chains), nats."""
    if isinstance(chain, RllThetaChain):
        return np.atleast_1d(rll_gap_entropy(chain.theta, np.arange(1, count + 1)))
    out = np.empty(count)
    p = np.eye(len(chain.states))
    t = chain.block_transition
    for j in range(count):
        p = p @ t
        out[j] = float(chain.stationary @ _row_entropy(p))
    return out


def h_y_given_past_exact(chain: MarkovInput, erasure: ErasureProcess, n: int) -> float:
    """Exact H(Y0 | Y_{-n}^{-1}) in nats.

    Equals H(E0 | E_{-n}^{-1}) plus, for every subset D of [-n, -1], the
    input entropy H(X0 | X_D) weighted by the probability that exactly the
    coordinates D (and position 0) are received.  For first-order inputs
    only the most recent received coordinate matters, so the 2^n subset
    terms regroup exactly into n+1 pattern probabilities; higher orders
    enumerate subsets with the entropies memoized per conditioning set.
    """
    if n < 0:
        raise PreconditionError(f"history length must be >= 0, got {n}")
    if n > _N_CAP:
        raise ResourceLimitError(f"history length {n} exceeds the cap {_N_CAP}")
    base = erasure_conditional_entropy(erasure, n)
    if n == 0:
        return base + marginal_entropy(chain) * pattern_probability(erasure, (0,), ())
    if chain.order == 1:
        gaps = _gap_entropies(chain, n)
        acc = 0.0
        for j in range(1, n + 1):
            w = pattern_probability(erasure, (-j, 0), tuple(range(-j + 1, 0)))
            acc += gaps[j - 1] * w
        acc += marginal_entropy(chain) * pattern_probability(
            erasure, (0,), tuple(range(-n, 0))
        )
        return base + acc
    window = list(range(-n, 0))
    acc = 0.0
    for mask in range(1 << n):
        d = tuple(window[i] for i in range(n) if mask >> i & 1)
        rest = tuple(window[i] for i in range(n) if not mask >> i & 1)
        w = pattern_probability(erasure, d + (0,), rest)
        if w == 0.0:
            continue
        h = subset_conditional_entropy(chain, d) if d else marginal_entropy(chain)
        acc += h * w
    return base + acc


def _window_law(chain: MarkovInput, length: int) -> np.ndarray:
    """Stationary law of (X_{-length+1}, ..., X_0) as an array of shape (K,)*length."""
    k = chain.alphabet_size
    m = chain.order
    if length <= m:
        law = np.zeros((k,) * m)
        for s, p in zip(chain.states, chain.stationary):
            law[tuple(x - 1 for x in s)] = p
        return law.sum(axis=tuple(range(m - length))) if length < m else law
    law = np.zeros((k,) * m)
    for s, p in zip(chain.states, chain.stationary):
        law[tuple(x - 1 for x in s)] = p
    idx = chain.state_index
    # extend one coordinate at a time: P(x, a) = P(x) * kernel(last m of x, a)
    cond = np.zeros((k,) * m + (k,))
    for s, i in idx.items():
        cond[tuple(x - 1 for x in s)] = chain.kernel[i]
    for _ in range(length - m):
        law = law[..., None] * cond.reshape((1,) * (law.ndim - m) + cond.shape)
    return law


def brute_force_h_y(chain: MarkovInput, erasure: ErasureProcess, n: int) -> float:
    """H(Y0 | Y_{-n}^{-1}) computed from the full output law, nats.

    Builds p(y) = p_X(received symbols) * P(erasure pattern) over all
    (K+1)^(n+1) outputs and takes the entropy difference
    H(Y_{-n}^0) - H(Y_{-n}^{-1}) directly.  Shares nothing with the
    decomposition used by h_y_given_past_exact.
    """
    if n < 0:
        raise PreconditionError(f"history length must be >= 0, got {n}")
    if n > _BRUTE_N_CAP or chain.alphabet_size > _BRUTE_K_CAP:
        raise ResourceLimitError(
            f"brute force capped at n <= {_BRUTE_N_CAP}, K <= {_BRUTE_K_CAP}"
        )
    return _window_output_entropy(chain, erasure, n + 1) - _window_output_entropy(
        chain, erasure, n
    )


def _window_output_entropy(chain, erasure, length: int) -> float:
    """H(Y_1^length) from first principles (0 for an empty window)."""
    if length == 0:
        return 0.0
    px = _window_law(chain, length)
    total = 0.0
    for mask in range(1 << length):
        received = [i for i in range(length) if mask >> i & 1]
        hidden = tuple(i for i in range(length) if not mask >> i & 1)
        pe = pattern_probability(
            erasure,
            tuple(i - length + 1 for i in received),
            tuple(i - length + 1 for i in hidden),
        )
        if pe == 0.0:
            continue
        marg = px.sum(axis=hidden) if hidden else px
        # outputs with this erasure support are distinct from all others
        total += -pe * float(np.sum(xlog(marg))) - xlog(pe)
    return total


def mi_rate_finite_n(
    chain: MarkovInput, erasure: ErasureProcess, n: int, oracle: bool = False
) -> MiResult:
    """Finite-history mutual information H(Y0|Y_-n..) - H(E0|E_-n..), nats.

    Nonincreasing in n and converging to the rate from above.  With
    oracle=True the conditional entropy comes from the brute-force output
    law instead of the exact decomposition.
    """
    hy = (
        brute_force_h_y(chain, erasure, n)
        if oracle
        else h_y_given_past_exact(chain, erasure, n)
    )
    value = hy - erasure_conditional_entropy(erasure, n)
    return MiResult(
        value=value, method="brute_force" if oracle else "finite_n", n_or_k=n
    )


# ---------------------------------------------------------------------------
# Series in the erasure rate (i.i.d. erasures)
# ---------------------------------------------------------------------------


def _require_iid(erasure) -> float:
    if not isinstance(erasure, IidErasure):
        raise PreconditionError(
            "series expansions require i.i.d. erasures; got "
            f"{type(erasure).__name__}"
        )
    return erasure.eps


def _as_first_order_chain(chain_or_theta) -> MarkovInput:
    if isinstance(chain_or_theta, MarkovInput):
        if chain_or_theta.order != 1:
            raise PreconditionError("first-order series needs a first-order chain")
        return chain_or_theta
    return RllThetaChain(float(chain_or_theta))


def first_order_truncation(eps: float, tol: float, alphabet_size: int = 2) -> int:
    """Smallest N with (1-eps)^2 log K * eps^(N+1) / (1-eps) < tol."""
    if tol <= 0:
        raise PreconditionError("tolerance must be positive")
    if eps == 0.0:
        return 0
    lead = (1.0 - eps) * math.log(alphabet_size)
    n = 0
    while lead * eps ** (n + 1) >= tol:
        n += 1
        if n > 100_000:
            raise ResourceLimitError("series truncation did not terminate")
    return n


def _first_order_partial(chain: MarkovInput, eps: float, n_terms: int) -> float:
    """(1-eps)^2 * sum_{k=0..n_terms} H(X0|X_{-k-1}) eps^k, nats."""
    ks = np.arange(n_terms + 1)
    if isinstance(chain, RllThetaChain):
        h = np.atleast_1d(rll_gap_entropy(chain.theta, ks + 1))
    else:
        h = _gap_entropies(chain, n_terms + 1)
    return float((1.0 - eps) ** 2 * np.sum(h * eps**ks))


def series_first_order(chain_or_theta, erasure_or_eps, tol: float) -> MiResult:
    """Mutual-information rate of a first-order input via its gap-entropy series.

    I = (1-eps)^2 sum_k H(X0 | X_{-k-1}) eps^k, truncated at the smallest N
    whose geometric tail bound drops below tol; the bound is reported.
    """
    chain = _as_first_order_chain(chain_or_theta)
    eps = (
        _require_iid(erasure_or_eps)
        if isinstance(erasure_or_eps, ErasureProcess)
        else float(erasure_or_eps)
    )
    if not 0.0 <= eps < 1.0:
        raise PreconditionError(f"erasure rate must lie in [0, 1), got {eps}")
    n = first_order_truncation(eps, tol, chain.alphabet_size)
    value = _first_order_partial(chain, eps, n)
    tail = (1.0 - eps) * math.log(chain.alphabet_size) * eps ** (n + 1)
    return MiResult(value=value, method="series_first", n_or_k=n, tail_bound=tail)


def run_free_subsets(window: int, m: int):
    """Subsets of {-window..-1} containing no m consecutive coordinates."""
    if window <= 0:
        yield ()
        return
    coords = list(range(-window, 0))
    for size in range(max_run_free_cardinality(window, m) + 1):
        for combo in combinations(coords, size):
            if not _has_run(combo, m):
                yield combo


def _has_run(coords, m: int) -> bool:
    cs = set(coords)
    return any(all(c + r in cs for r in range(m)) for c in coords)


def max_run_free_cardinality(window: int, m: int) -> int:
    """(m-1) * floor(window/m) + (window mod m): the largest run-free subset size."""
    return (m - 1) * (window // m) + window % m


def no_run_probability(slots: int, m: int, eps: float) -> float:
    """P(no m consecutive ones among `slots` i.i.d. Bernoulli(1-eps) draws).

    Dynamic program over the current run length of ones (a transfer-matrix
    evaluation of the run-avoiding patterns).
    """
    if m <= 0:
        raise PreconditionError("run length m must be >= 1")
    state = np.zeros(m)
    state[0] = 1.0
    for _ in range(slots):
        nxt = np.zeros(m)
        nxt[0] = eps * state.sum()
        nxt[1:] = (1.0 - eps) * state[:-1]
        state = nxt
    return float(state.sum())


def series_mth_order(chain: MarkovInput, erasure_or_eps, k_max: int) -> MiResult:
    """Partial sum of the m-th order series, with a certified tail bound.

    For each k, the revealed coordinates are a full m-block at
    [-k-m, -k-1], position 0, and a run-free subset of [-k+1, -1]; the k-th
    family of terms carries weight (1-eps)^(t+m+1) eps^(k-t).  Terms beyond
    k_max are bounded by log K times the probability that k_max erasure
    slots contain no m consecutive receptions.
    """
    if not isinstance(chain, MarkovInput):
        raise PreconditionError("series_mth_order needs a MarkovInput chain")
    eps = (
        _require_iid(erasure_or_eps)
        if isinstance(erasure_or_eps, ErasureProcess)
        else float(erasure_or_eps)
    )
    if not 0.0 <= eps < 1.0:
        raise PreconditionError(f"erasure rate must lie in [0, 1), got {eps}")
    if k_max < 0:
        raise PreconditionError("k_max must be >= 0")
    if k_max > _KMAX_CAP:
        raise ResourceLimitError(f"k_max {k_max} exceeds the cap {_KMAX_CAP}")
    m = chain.order
    total = 0.0
    for k in range(k_max + 1):
        if k == 0:
            total += step_conditional_entropy(chain) * (1.0 - eps) ** (m + 1)
            continue
        block = tuple(range(-k - m, -k))
        for subset in run_free_subsets(k - 1, m):
            t = len(subset)
            h = subset_conditional_entropy(chain, block + subset)
            total += h * (1.0 - eps) ** (t + m + 1) * eps ** (k - t)
    tail = math.log(chain.alphabet_size) * no_run_probability(k_max, m, eps)
    return MiResult(value=total, method="series_mth", n_or_k=k_max, tail_bound=tail)
