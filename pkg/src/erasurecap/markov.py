"""Stationary m-th order input chains and their conditional entropies.

The central objects are conditional entropies H(X0 | X_D) for finite sets
D of past coordinates: the single-gap case drives the first-order series,
and the general-subset case drives the m-th order series and the linear
capacity expansion.  The two-state chain [[1-theta, theta], [1, 0]] gets
dedicated closed forms (exact rationals in theta), which keeps later
high-order derivative work free of matrix-power accumulation error.
"""

import json
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ._numutil import binary_entropy, entropy, xlog
from .errors import ConfigError, PreconditionError, ResourceLimitError

_STAT_RESIDUAL = 1e-12
_SPAN_CAP = 24


@dataclass(frozen=True, eq=False)
class MarkovInput:
    """Stationary m-th order chain on the m-blocks of a constraint graph.

    kernel[i, a-1] = P(next symbol = a | current block = states[i]); rows are
    stochastic and respect the graph (zero where the extended block is not a
    state).  Instances are immutable; derived quantities are cached.
    """

    order: int
    alphabet_size: int
    states: tuple
    kernel: np.ndarray

    def __post_init__(self):
        kernel = np.asarray(self.kernel, dtype=float)
        object.__setattr__(self, "kernel", kernel)
        if kernel.shape != (len(self.states), self.alphabet_size):
            raise ConfigError(
                f"kernel shape {kernel.shape} does not match "
                f"{len(self.states)} states x {self.alphabet_size} symbols"
            )
        if np.any(kernel < -1e-15) or np.any(np.abs(kernel.sum(axis=1) - 1) > 1e-12):
            raise ConfigError("kernel rows must be nonnegative and sum to 1 (1e-12)")
        if any(len(s) != self.order for s in self.states):
            raise ConfigError("every state must be a block of length `order`")

    @cached_property
    def state_index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def block_transition(self) -> np.ndarray:
        """Transition matrix of the induced first-order chain on m-blocks."""
        n = len(self.states)
        t = np.zeros((n, n))
        for i, u in enumerate(self.states):
            for a in range(1, self.alphabet_size + 1):
                p = self.kernel[i, a - 1]
                if p == 0.0:
                    continue
                j = self.state_index.get(u[1:] + (a,))
                if j is None:
                    raise ConfigError(
                        f"kernel puts mass {p} on transition {u} -> {u[1:] + (a,)}, "
                        "which is not a state"
                    )
                t[i, j] += p
        return t

    @cached_property
    def symbol_transitions(self) -> tuple:
        """Per-symbol slices T_a of the block transition (used by the subset DP)."""
        n = len(self.states)
        mats = []
        for a in range(1, self.alphabet_size + 1):
            t = np.zeros((n, n))
            for i, u in enumerate(self.states):
                p = self.kernel[i, a - 1]
                if p == 0.0:
                    continue
                j = self.state_index.get(u[1:] + (a,))
                if j is not None:
                    t[i, j] = p
            mats.append(t)
        return tuple(mats)

    @cached_property
    def stationary(self) -> np.ndarray:
        return stationary_distribution(self)

    @cached_property
    def marginal(self) -> np.ndarray:
        """Stationary law of a single coordinate (mass per symbol 1..K)."""
        out = np.zeros(self.alphabet_size)
        for i, s in enumerate(self.states):
            out[s[-1] - 1] += self.stationary[i]
        return out


class RllThetaChain(MarkovInput):
    """First-order chain [[1-theta, theta], [1, 0]] on {1, 2}.

    The single free transition probability theta parameterizes every
    first-order chain supported on the no-22 constraint.
    """

    def __init__(self, theta: float):
        theta = float(theta)
        if not 0.0 <= theta <= 1.0:
            raise ConfigError(f"theta must lie in [0, 1], got {theta}")
        object.__setattr__(self, "theta", theta)
        super().__init__(
            order=1,
            alphabet_size=2,
            states=((1,), (2,)),
            kernel=np.array([[1.0 - theta, theta], [1.0, 0.0]]),
        )

    @cached_property
    def stationary(self) -> np.ndarray:
        return np.array([1.0, self.theta]) / (1.0 + self.theta)


def stationary_distribution(c: MarkovInput) -> np.ndarray:
    """Unique stationary law of the induced block chain (residual <= 1e-12).

    Raises if the chain does not have a unique stationary law (eigenvalue 1
    of the block transition with multiplicity > 1).
    """
    t = c.block_transition
    vals, vecs = np.linalg.eig(t.T)
    close = np.abs(vals - 1.0) < 1e-8
    if close.sum() != 1:
        raise PreconditionError(
            "block chain has no unique stationary law (reducible kernel)"
        )
    pi = np.real(vecs[:, int(np.argmax(close))])
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    if pi.sum() < 0:
        pi = -pi
    if np.any(pi < 0):
        raise PreconditionError("stationary eigenvector is not nonnegative")
    pi = pi / pi.sum()
    # Damped refinement kills both rounding drift and period-2 components.
    for _ in range(200):
        residual = np.max(np.abs(pi @ t - pi))
        if residual <= 1e-14:
            break
        pi = 0.5 * (pi + pi @ t)
        pi = pi / pi.sum()
    if np.max(np.abs(pi @ t - pi)) > _STAT_RESIDUAL:
        raise ArithmeticError("stationary law did not reach the 1e-12 residual")
    return pi


def step_conditional_entropy(c: MarkovInput) -> float:
    """H(X0 | X_{-m}^{-1}), nats, with 0 log 0 = 0."""
    return float(c.stationary @ entropy(c.kernel))


# ---------------------------------------------------------------------------
# Closed forms for the theta-parameterized chain
# ---------------------------------------------------------------------------


def rll_step_probability(theta, n):
    """g_n(theta) = (1 - (-theta)^n) / (1 + theta); broadcasts over inputs.

    Row 1 of the n-step transition matrix is [g_{n+1}, 1 - g_{n+1}] and row 2
    is [g_n, 1 - g_n].
    """
    theta = np.asarray(theta, dtype=float)
    n = np.asarray(n)
    return (1.0 - (-theta) ** n) / (1.0 + theta)


def rll_gap_entropy(theta, n):
    """H(X0 | X_{-n}) for the theta chain, nats; broadcasts over theta and n."""
    theta = np.asarray(theta, dtype=float)
    f = 1.0 / (1.0 + theta)
    h_hi = binary_entropy(rll_step_probability(theta, np.asarray(n) + 1))
    h_lo = binary_entropy(rll_step_probability(theta, n))
    out = f * h_hi + (1.0 - f) * h_lo
    if np.ndim(out) == 0:
        return float(out)
    return out


def rll_gap_entropy_dtheta(theta, n):
    """d/dtheta of rll_gap_entropy; broadcasts over theta and n.

    Finite for theta in (0, 1); the g' = 0 factors mask the log singularity
    at g in {0, 1}.
    """
    theta = np.asarray(theta, dtype=float)
    n = np.asarray(n)
    one = 1.0 + theta
    f = 1.0 / one
    df = -1.0 / one**2

    def g(nn):
        return (1.0 - (-theta) ** nn) / one

    def dg(nn):
        return (nn * (-theta) ** (nn - 1) * one - 1.0 + (-theta) ** nn) / one**2

    def hprime_times(y, dy):
        y_in = np.clip(y, 1e-300, 1 - 1e-16)
        return np.where(dy == 0.0, 0.0, np.log((1.0 - y_in) / y_in) * dy)

    g_lo, g_hi = g(n), g(n + 1)
    out = (
        df * (binary_entropy(g_hi) - binary_entropy(g_lo))
        + f * hprime_times(g_hi, dg(n + 1))
        + (1.0 - f) * hprime_times(g_lo, dg(n))
    )
    if np.ndim(out) == 0:
        return float(out)
    return out


def gap_conditional_entropy(c: MarkovInput, k: int) -> float:
    """H(X0 | X_{-k-1}) for a first-order chain, nats.

    For the theta chain this goes through the exact g_n closed form; for a
    generic first-order kernel it uses the (k+1)-step transition matrix.
    Both paths agree to 1e-12.  Order >= 2 chains must use
    subset_conditional_entropy instead.
    """
    if k < 0:
        raise PreconditionError(f"history gap k must be >= 0, got {k}")
    if c.order != 1:
        raise PreconditionError(
            "gap_conditional_entropy is first-order only; use "
            "subset_conditional_entropy for higher orders"
        )
    if isinstance(c, RllThetaChain):
        return rll_gap_entropy(c.theta, k + 1)
    p = np.linalg.matrix_power(c.block_transition, k + 1)
    return float(c.stationary @ entropy(p))


def marginal_entropy(c: MarkovInput) -> float:
    """H(X0), nats."""
    return float(-np.sum(xlog(c.marginal)))


# ---------------------------------------------------------------------------
# Exact joint laws over observed subsets of coordinates
# ---------------------------------------------------------------------------


def _screen(c: MarkovInput, d: tuple) -> tuple:
    """Drop coordinates made irrelevant by a later full m-run inside D."""
    m = c.order
    ds = sorted(d)
    dset = set(ds)
    latest_run_start = None
    for j in ds:
        if all(j + r in dset for r in range(m)):
            latest_run_start = j
    if latest_run_start is None:
        return tuple(ds)
    return tuple(j for j in ds if j >= latest_run_start)


def observed_joint_law(c: MarkovInput, positions) -> np.ndarray:
    """Exact joint law of (X_{p_1}, ..., X_{p_r}) at sorted positions <= 0.

    Returns an array of shape (K,)*r indexed by symbol-1.  Unobserved
    coordinates between the positions are eliminated by multiplying the
    block-chain transition across each gap.
    """
    pos = sorted(int(p) for p in positions)
    if len(set(pos)) != len(pos):
        raise PreconditionError("observed positions must be distinct")
    k = c.alphabet_size
    n_states = len(c.states)
    last_symbol = np.array([s[-1] - 1 for s in c.states])
    # message over (assignments so far, block state)
    msg = np.zeros((k, n_states))
    for a in range(k):
        sel = last_symbol == a
        msg[a, sel] = c.stationary[sel]
    t = c.block_transition
    t_by_symbol = c.symbol_transitions
    for prev, cur in zip(pos, pos[1:]):
        gap = cur - prev
        free = np.linalg.matrix_power(t, gap - 1) if gap > 1 else None
        if free is not None:
            msg = msg @ free
        msg = np.stack([msg @ t_by_symbol[a] for a in range(k)], axis=-2)
        msg = msg.reshape(-1, n_states)
    return msg.sum(axis=-1).reshape((k,) * len(pos))


@lru_cache(maxsize=100_000)
def _subset_entropy_cached(c: MarkovInput, d: tuple) -> float:
    joint = observed_joint_law(c, d + (0,))
    h_joint = float(-np.sum(xlog(joint)))
    h_past = float(-np.sum(xlog(joint.sum(axis=-1))))
    return h_joint - h_past


def subset_conditional_entropy(c: MarkovInput, d) -> float:
    """H(X0 | X_D) for a finite set D of negative coordinates, nats.

    Coordinates at or before the latest run of m consecutive observed
    coordinates are screened off first; the remaining window span is capped
    at 24.  For first-order chains this equals
    gap_conditional_entropy(c, -max(D) - 1).
    """
    d = tuple(sorted(int(j) for j in d))
    if len(set(d)) != len(d):
        raise PreconditionError("conditioning set has repeated coordinates")
    if any(j >= 0 for j in d):
        raise PreconditionError("conditioning coordinates must be negative")
    if not d:
        return marginal_entropy(c)
    d = _screen(c, d)
    if -min(d) > _SPAN_CAP:
        raise ResourceLimitError(
            f"conditioning window spans {-min(d)} coordinates (cap {_SPAN_CAP})"
        )
    if isinstance(c, RllThetaChain):
        return rll_gap_entropy(c.theta, -max(d))
    return _subset_entropy_cached(c, d)


# ---------------------------------------------------------------------------
# JSON description
# ---------------------------------------------------------------------------


def load_chain(source) -> MarkovInput:
    """Parse {"theta": x} or {"order": m, "K": k, "states": [...], "kernel": [...]}.

    States are symbol strings ("12"); the kernel is a row-stochastic matrix of
    next-symbol probabilities aligned with the states list.
    """
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid chain JSON: {e}") from e
    if not isinstance(source, dict):
        raise ConfigError("chain description must be a JSON object")
    if "theta" in source:
        return RllThetaChain(source["theta"])
    try:
        states = tuple(tuple(int(ch) for ch in s) for s in source["states"])
        return MarkovInput(
            order=int(source["order"]),
            alphabet_size=int(source["K"]),
            states=states,
            kernel=np.asarray(source["kernel"], dtype=float),
        )
    except KeyError as e:
        raise ConfigError(f"chain description is missing {e}") from e
