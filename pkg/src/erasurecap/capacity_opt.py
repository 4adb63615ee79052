"""First-order capacity of the no-22 constrained binary erasure channel.

The mutual-information rate is strictly concave in the single transition
parameter theta, so the capacity point is the unique stationary point of
the gap-entropy series.  A golden-section search (plus a derivative
bisection polish inside the final bracket, which sharpens the maximizer
without changing it) gives the deterministic route; the iterative
stochastic-approximation scheme theta <- theta + a_n * g(theta) gives the
randomized route, with the gradient simulator selectable between the
analytic derivative of the truncated series and a central finite
difference of a Monte-Carlo rate estimate driven by common random numbers.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._numutil import LN2
from .errors import PreconditionError
from .markov import rll_gap_entropy, rll_gap_entropy_dtheta
from .mi_rate import first_order_truncation

_GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CapacityPoint:
    """One (erasure rate, maximizer, capacity) sample; capacity is in bits."""

    eps: float
    theta_star: float
    capacity: float
    method: str
    tolerance: float

    @property
    def capacity_nats(self) -> float:
        return self.capacity * LN2


@dataclass(frozen=True)
class CapacityCurve:
    points: tuple
    tolerance: float

    @property
    def eps_grid(self) -> tuple:
        return tuple(p.eps for p in self.points)


@dataclass(frozen=True)
class SaSchedule:
    """Step sizes a_n = a / (A + n), gradient window ceil((n+1)^b), FD half-step."""

    a: float = 0.5
    big_a: float = 100.0
    b: float = 1.0
    fd_step: float = 1e-3


def series_value(theta, eps: float, n_terms: int):
    """(1-eps)^2 sum_{k<=n_terms} H(X0|X_{-k-1})(theta) eps^k; broadcasts over theta."""
    theta = np.asarray(theta, dtype=float)
    ks = np.arange(n_terms + 1)
    h = rll_gap_entropy(theta[..., None], ks + 1)
    out = (1.0 - eps) ** 2 * np.sum(h * eps**ks, axis=-1)
    if np.ndim(out) == 0:
        return float(out)
    return out


def series_derivative(theta, eps: float, n_terms: int):
    """d/dtheta of series_value; broadcasts over theta."""
    theta = np.asarray(theta, dtype=float)
    ks = np.arange(n_terms + 1)
    dh = rll_gap_entropy_dtheta(theta[..., None], ks + 1)
    out = (1.0 - eps) ** 2 * np.sum(dh * eps**ks, axis=-1)
    if np.ndim(out) == 0:
        return float(out)
    return out


def maximize_theta(eps: float, tol: float) -> CapacityPoint:
    """Golden-section maximization of the rate over theta in [0, 1].

    The series is truncated to tol/10; the search stops when the bracket is
    narrower than tol, then the stationary point is polished by bisecting
    the series derivative inside the bracket (the maximizer is unique by
    strict concavity).
    """
    if not 0.0 <= eps < 1.0:
        raise PreconditionError(f"erasure rate must lie in [0, 1), got {eps}")
    if tol < 1e-12:
        raise PreconditionError("tolerance below 1e-12 is not supported")
    n_terms = first_order_truncation(eps, tol / 10.0)
    a, b = 0.0, 1.0
    c = b - _GOLDEN_RATIO * (b - a)
    d = a + _GOLDEN_RATIO * (b - a)
    fc = series_value(c, eps, n_terms)
    fd = series_value(d, eps, n_terms)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN_RATIO * (b - a)
            fc = series_value(c, eps, n_terms)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN_RATIO * (b - a)
            fd = series_value(d, eps, n_terms)
    theta = _polish_stationary(0.5 * (a + b), a, b, eps, n_terms, tol)
    cap = series_value(theta, eps, n_terms)
    return CapacityPoint(
        eps=eps,
        theta_star=theta,
        capacity=cap / LN2,
        method="golden_section",
        tolerance=tol,
    )


def _polish_stationary(theta, a, b, eps, n_terms, tol) -> float:
    lo = max(0.0, a - 2.0 * tol)
    hi = min(1.0, b + 2.0 * tol)
    glo = series_derivative(lo, eps, n_terms)
    ghi = series_derivative(hi, eps, n_terms)
    if not (glo > 0.0 > ghi):
        return theta  # boundary-flat case; keep the bracket midpoint
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-15:
            break
        if series_derivative(mid, eps, n_terms) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stochastic_approximation(
    eps: float,
    steps: int,
    seed: int,
    schedule: SaSchedule | None = None,
    estimator: str = "analytic",
    theta0: float | None = None,
    series_tol: float = 1e-9,
):
    """Iterate theta_{n+1} = theta_n + a_n * g(theta_n), rejecting exits from [0, 1].

    Returns (trajectory, CapacityPoint): trajectory[n] is theta_n with
    trajectory[0] = theta_0 (drawn uniformly from the seeded generator when
    theta0 is None).  estimator "analytic" differentiates the truncated
    series; "monte_carlo" takes a central finite difference of the rate
    estimated from ceil((n+1)^b) geometric gap draws, reusing the same
    draws on both sides of the difference.  Deterministic given the seed.
    """
    if steps < 0:
        raise PreconditionError("steps must be >= 0")
    if estimator not in ("analytic", "monte_carlo"):
        raise PreconditionError(f"unknown gradient estimator {estimator!r}")
    if not 0.0 <= eps < 1.0:
        raise PreconditionError(f"erasure rate must lie in [0, 1), got {eps}")
    sched = schedule or SaSchedule()
    rng = np.random.default_rng(seed)
    theta = float(rng.uniform()) if theta0 is None else float(theta0)
    if not 0.0 <= theta <= 1.0:
        raise PreconditionError("theta0 must lie in [0, 1]")
    n_terms = first_order_truncation(eps, series_tol)
    ks = np.arange(n_terms + 1)
    weights = (1.0 - eps) ** 2 * eps**ks
    trajectory = np.empty(steps + 1)
    trajectory[0] = theta
    h = sched.fd_step
    for n in range(steps):
        if estimator == "analytic":
            grad = float(weights @ rll_gap_entropy_dtheta(theta, ks + 1))
        else:
            window = max(1, math.ceil((n + 1) ** sched.b))
            gaps = rng.geometric(1.0 - eps, size=window)  # k+1 with P ~ eps^k
            hi = min(theta + h, 1.0)
            lo = max(theta - h, 0.0)
            est_hi = (1.0 - eps) * float(np.mean(rll_gap_entropy(hi, gaps)))
            est_lo = (1.0 - eps) * float(np.mean(rll_gap_entropy(lo, gaps)))
            grad = (est_hi - est_lo) / (hi - lo)
        candidate = theta + sched.a / (sched.big_a + n) * grad
        if 0.0 <= candidate <= 1.0:
            theta = candidate
        trajectory[n + 1] = theta
    cap = series_value(theta, eps, n_terms)
    point = CapacityPoint(
        eps=eps,
        theta_star=theta,
        capacity=cap / LN2,
        method=f"stochastic_approximation[{estimator}]",
        tolerance=series_tol,
    )
    return trajectory, point


def capacity_curve(eps_grid, tol: float) -> CapacityCurve:
    """maximize_theta per grid point; the curve must be nonincreasing in eps.

    Set ERASURE_CAP_THREADS > 1 to spread grid points over worker
    processes; results are identical either way.
    """
    grid = [float(e) for e in eps_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("eps grid must be strictly increasing")
    workers = int(os.environ.get("ERASURE_CAP_THREADS", "1") or "1")
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(maximize_theta, grid, [tol] * len(grid)))
    else:
        points = [maximize_theta(e, tol) for e in grid]
    slack = 2.0 * tol + 1e-12
    for prev, cur in zip(points, points[1:]):
        if cur.capacity > prev.capacity + slack:
            raise ArithmeticError(
                f"capacity not nonincreasing at eps={cur.eps}: "
                f"{cur.capacity} > {prev.capacity}"
            )
    return CapacityCurve(points=tuple(points), tolerance=tol)
