"""Taylor expansions of the maximizer and capacity around zero erasure rate.

Truncated power-series (jet) arithmetic mechanizes the high-order chain
rule: every gap entropy of the theta chain is an explicit composition of
rationals in theta with y log y, so evaluating it on a jet yields exact
theta-derivatives to any order without symbolic algebra or finite
differences.  The maximizer expansion comes from zeroing the derivative
series order by order (a triangular solve whose pivot is the second
derivative of the one-step entropy, nonzero by strict concavity); the
capacity expansion composes the gap entropies with the maximizer jet.

Double-precision jets lose roughly a digit per order: results beyond
order 12 are not certified, and the order cap enforces that.

Finite-difference (Richardson-extrapolated) estimators of the same
coefficients, driven by the independent golden-section maximizer, live
here too; they are the cross-check oracle reported by the CLI.
"""

from dataclasses import dataclass

import numpy as np

from ._numutil import LN2, GOLDEN, THETA_NOISELESS
from .capacity_opt import maximize_theta
from .constraint import ConstraintGraph, is_irreducible, noiseless_capacity, parry_chain
from .errors import PreconditionError
from .markov import step_conditional_entropy, subset_conditional_entropy

MAX_ORDER = 12


# ---------------------------------------------------------------------------
# Jet arithmetic
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TaylorJet:
    """Coefficients c_0..c_N of a truncated univariate power series."""

    coef: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=float))

    @classmethod
    def constant(cls, value: float, order: int) -> "TaylorJet":
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, value: float, order: int) -> "TaylorJet":
        c = np.zeros(order + 1)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @property
    def order(self) -> int:
        return len(self.coef) - 1

    def __add__(self, other):
        if isinstance(other, TaylorJet):
            return TaylorJet(self.coef + other.coef)
        c = self.coef.copy()
        c[0] += other
        return TaylorJet(c)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet(-self.coef)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TaylorJet) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TaylorJet):
            n = self.order
            full = np.convolve(self.coef, other.coef)
            return TaylorJet(full[: n + 1])
        return TaylorJet(self.coef * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "TaylorJet":
        a = self.coef
        if a[0] == 0.0:
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for n in range(1, len(a)):
            b[n] = -np.dot(a[1 : n + 1], b[n - 1 :: -1]) / a[0]
        return TaylorJet(b)

    def log(self) -> "TaylorJet":
        a = self.coef
        if a[0] <= 0.0:
            raise ValueError("log of a jet needs a positive constant term")
        out = np.zeros_like(a)
        out[0] = np.log(a[0])
        for n in range(1, len(a)):
            s = n * a[n] - np.dot(np.arange(1, n) * out[1:n], a[n - 1 : 0 : -1])
            out[n] = s / (n * a[0])
        return TaylorJet(out)

    def power(self, k: int) -> "TaylorJet":
        out = TaylorJet.constant(1.0, self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift(self, k: int) -> "TaylorJet":
        """Multiply by x^k, truncating at the jet order."""
        c = np.zeros_like(self.coef)
        if k <= self.order:
            c[k:] = self.coef[: len(c) - k]
        return TaylorJet(c)

    def truncate(self, order: int) -> "TaylorJet":
        return TaylorJet(self.coef[: order + 1])


def jet_xlog(j: TaylorJet) -> TaylorJet:
    """x log x on jets; the constant term must lie in (0, 1]."""
    return j * j.log()


def jet_binary_entropy(j: TaylorJet) -> TaylorJet:
    """H(y) = -y log y - (1-y) log(1-y) on jets with constant term in (0, 1)."""
    return -(jet_xlog(j) + jet_xlog(1.0 - j))


def jet_polyval(coeffs, x: TaylorJet) -> TaylorJet:
    """Evaluate the polynomial sum c_j x^j (coeffs ascending) at a jet."""
    out = TaylorJet.constant(0.0, x.order)
    for c in reversed(list(coeffs)):
        out = out * x + c
    return out


def gap_entropy_jet(n: int, theta_jet: TaylorJet) -> TaylorJet:
    """H(X0 | X_{-n}) of the theta chain, evaluated on a theta jet."""
    one = theta_jet + 1.0
    f = one.reciprocal()
    sign_n = -1.0 if n % 2 else 1.0
    sign_n1 = -sign_n
    g_lo = (1.0 - sign_n * theta_jet.power(n)) * f
    g_hi = (1.0 - sign_n1 * theta_jet.power(n + 1)) * f
    return f * jet_binary_entropy(g_hi) + (1.0 - f) * jet_binary_entropy(g_lo)


# ---------------------------------------------------------------------------
# Expansions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticExpansion:
    """Series coefficients in the erasure rate.

    Capacity quantities ("C1", "C_FB") carry bits; "theta_max" is a bare
    probability.  coefficients[j] multiplies eps^j.
    """

    quantity: str
    coefficients: tuple
    order: int
    unit: str

    @property
    def coefficients_nats(self) -> tuple:
        if self.unit == "bits":
            return tuple(c * LN2 for c in self.coefficients)
        return self.coefficients

    def evaluate(self, eps: float) -> float:
        return float(np.polynomial.polynomial.polyval(eps, self.coefficients))


def _gap_entropy_theta_coeffs(order: int):
    """Taylor coefficients (in s = theta - theta0) of H(X0|X_{-k-1}), k = 0..order."""
    t = TaylorJet.variable(THETA_NOISELESS, order + 1)
    return [gap_entropy_jet(k + 1, t).coef for k in range(order + 1)]


def theta_max_taylor(n_order: int) -> AsymptoticExpansion:
    """Expansion of the capacity-achieving theta around zero erasure rate.

    Zeroing the derivative series sum_k d/dtheta H(X0|X_{-k-1}) eps^k order
    by order determines each coefficient from the previous ones; the pivot
    is the (strictly negative) second derivative of the one-step entropy at
    the noiseless maximizer.
    """
    if not 1 <= n_order <= MAX_ORDER:
        raise PreconditionError(f"expansion order must lie in 1..{MAX_ORDER}")
    h_coeffs = _gap_entropy_theta_coeffs(n_order)
    # phi_k = d/dtheta of the k-th gap entropy, as a polynomial in s
    phi = [np.arange(1, len(h) ) * h[1:] for h in h_coeffs]
    pivot = phi[0][1]  # second theta-derivative of the one-step entropy
    if abs(pivot) <= 1e-8:
        raise ArithmeticError("stationarity pivot vanished; concavity violated")
    s = np.zeros(n_order + 1)  # theta(eps) - theta0
    for n in range(1, n_order + 1):
        s_jet = TaylorJet(s)
        total = TaylorJet.constant(0.0, n_order)
        for k in range(0, n + 1):
            total = total + jet_polyval(phi[k], s_jet).shift(k)
        s[n] = -total.coef[n] / pivot
    coeffs = s.copy()
    coeffs[0] = THETA_NOISELESS
    return AsymptoticExpansion(
        quantity="theta_max",
        coefficients=tuple(coeffs),
        order=n_order,
        unit="dimensionless",
    )


def capacity_taylor(n_order: int) -> AsymptoticExpansion:
    """Expansion of the first-order capacity around zero erasure rate, in bits.

    Composes each gap entropy with the maximizer jet (G_k) and assembles
    G_0 + (G_1 - 2 G_0) eps + sum_{k>=2} (G_k + G_{k-2} - 2 G_{k-1}) eps^k.
    """
    if not 1 <= n_order <= MAX_ORDER:
        raise PreconditionError(f"expansion order must lie in 1..{MAX_ORDER}")
    theta = theta_max_taylor(n_order)
    s = np.array(theta.coefficients)
    s[0] = 0.0
    s_jet = TaylorJet(s)
    h_coeffs = _gap_entropy_theta_coeffs(n_order)
    g = [jet_polyval(h, s_jet) for h in h_coeffs]
    total = g[0] + (g[1] - 2.0 * g[0]).shift(1)
    for k in range(2, n_order + 1):
        total = total + (g[k] + g[k - 2] - 2.0 * g[k - 1]).shift(k)
    return AsymptoticExpansion(
        quantity="C1",
        coefficients=tuple(c / LN2 for c in total.coef),
        order=n_order,
        unit="bits",
    )


def linear_coefficients(g: ConstraintGraph):
    """(c0, c1) of the capacity near zero erasure rate, in nats.

    c0 is the noiseless capacity; c1 is minus the excess of (m+1) copies of
    the max-entropy chain's step entropy over its split-conditioning
    entropies, evaluated with exact subset conditionals.
    """
    if not is_irreducible(g):
        raise PreconditionError("linear coefficients require an irreducible graph")
    c0 = noiseless_capacity(g)
    chain = parry_chain(g)
    m = g.order
    h_step = step_conditional_entropy(chain)
    split_sum = 0.0
    for i in range(1, m + 1):
        d = tuple(range(-i - m, -i)) + tuple(range(-i + 1, 0))
        split_sum += subset_conditional_entropy(chain, d)
    c1 = -((m + 1) * h_step - split_sum)
    return c0, c1


# ---------------------------------------------------------------------------
# Finite-difference oracle (Richardson extrapolation of one-sided stencils)
# ---------------------------------------------------------------------------

_STENCILS = {
    1: (np.array([-1.5, 2.0, -0.5]), 1),
    2: (np.array([2.0, -5.0, 4.0, -1.0]), 1),
    3: (np.array([-2.5, 9.0, -12.0, 7.0, -1.5]), 1),
}


def fd_taylor_coefficients(fn, order: int, h: float):
    """Taylor coefficients fn^(j)(0)/j! for j = 0..order by one-sided differences.

    Uses second-order one-sided stencils at steps h and h/2 combined by
    Richardson extrapolation.  fn is evaluated on [0, (order + 2) h].
    """
    if not 1 <= order <= 3:
        raise PreconditionError("finite-difference oracle supports orders 1..3")
    needed = sorted(
        {0.0}
        | {i * h for i in range(1, order + 3)}
        | {i * h / 2 for i in range(1, order + 3)}
    )
    values = {x: fn(x) for x in needed}
    coeffs = [values[0.0]]
    for d in range(1, order + 1):
        w, _ = _STENCILS[d]

        def estimate(step):
            pts = np.array([values[i * step] for i in range(len(w))])
            return float(w @ pts) / step**d

        rich = (4.0 * estimate(h / 2.0) - estimate(h)) / 3.0
        coeffs.append(rich / np.math.factorial(d) if hasattr(np, "math") else rich)
    return coeffs


def theta_fd_coefficients(order: int = 3, h: float = 0.004, tol: float = 1e-10):
    """Finite-difference estimate of the maximizer expansion coefficients."""
    return fd_taylor_coefficients(
        lambda e: maximize_theta(e, tol).theta_star, order, h
    )


def capacity_fd_coefficients(order: int = 3, h: float = 0.004, tol: float = 1e-10):
    """Finite-difference estimate of the capacity expansion coefficients (bits)."""
    return fd_taylor_coefficients(
        lambda e: maximize_theta(e, tol).capacity, order, h
    )
