"""Small numeric helpers used across modules.

All entropies in this package are computed in nats; conversion to bits
happens once, at the presentation layer (CLI output, result dataclasses
that are documented to carry bits).
"""

import numpy as np

LN2 = float(np.log(2.0))

# Golden ratio and the noiseless quantities of the (1,inf)-RLL family.
GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0
THETA_NOISELESS = 1.0 / GOLDEN**2  # = (3 - sqrt 5)/2, maximizer at zero erasure rate

_CLAMP = 1e-300  # entries below this are treated as exact zeros inside logs


def bits(x):
    """Convert nats to bits (scalars or arrays)."""
    return x / LN2


def xlog(y):
    """y * log(y) with the convention 0 * log 0 = 0 (natural log)."""
    y = np.asarray(y, dtype=float)
    out = np.where(y > _CLAMP, y * np.log(np.clip(y, _CLAMP, None)), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def binary_entropy(y):
    """H(y) = -y log y - (1-y) log(1-y) in nats; accepts scalars or arrays."""
    y = np.asarray(y, dtype=float)
    out = -(xlog(y) + xlog(1.0 - y))
    if np.ndim(out) == 0:
        return float(out)
    return out


def entropy(p):
    """Entropy of a probability vector/array (summed over the last axis), nats."""
    p = np.asarray(p, dtype=float)
    return -np.sum(xlog(p), axis=-1)
