"""Finite-type constraints: forbidden words, constraint graphs, noiseless capacity.

A constraint is described by a finite set of forbidden words over the
alphabet {1..K}.  It compiles into a de Bruijn style graph whose vertices
are the allowed blocks of length m (m = longest forbidden word minus one)
and whose edges are the allowed overlaps.  The log of the Perron
eigenvalue of the adjacency matrix is the noiseless capacity, achieved by
the unique max-entropy Markov chain built from the Perron data.

Caveat: the order m is derived from the forbidden set as given.  If the
same constraint admits a shorter forbidden set, the compiled graph uses
more states than strictly necessary; minimality of the input set is not
verified.
"""

import itertools
import json
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PreconditionError
from .markov import MarkovInput

Word = tuple[int, ...]

_POWER_TOL = 1e-14
_POWER_MAX_ITER = 100_000


def _as_word(w) -> Word:
    if isinstance(w, str):
        return tuple(int(ch) for ch in w)
    return tuple(int(s) for s in w)


@dataclass(frozen=True)
class ForbiddenWordSet:
    """A finite set of forbidden words over the alphabet {1..K}.

    Words may be given as strings of digit symbols ("22") or as tuples of
    ints.  Words that contain another forbidden word as a contiguous factor
    are redundant; they are stripped with a warning so the derived order
    stays as small as the input allows.
    """

    alphabet_size: int
    words: frozenset = field(default_factory=frozenset)

    def __init__(self, alphabet_size, words=()):
        if int(alphabet_size) < 2:
            raise ConfigError(f"alphabet size must be >= 2, got {alphabet_size}")
        object.__setattr__(self, "alphabet_size", int(alphabet_size))
        norm = [_as_word(w) for w in words]
        for w in norm:
            if len(w) == 0:
                raise ConfigError("forbidden words must be non-empty")
            if any(s < 1 or s > self.alphabet_size for s in w):
                raise ConfigError(
                    f"word {w} uses symbols outside 1..{self.alphabet_size}"
                )
        kept = []
        for w in sorted(set(norm), key=lambda w: (len(w), w)):
            if any(_is_factor(u, w) for u in kept):
                warnings.warn(
                    f"forbidden word {w} contains another forbidden word; stripped",
                    stacklevel=2,
                )
                continue
            kept.append(w)
        object.__setattr__(self, "words", frozenset(kept))

    @property
    def order(self) -> int:
        """Derived memory: longest word length - 1, and 1 for the full shift."""
        if not self.words:
            return 1
        return max(1, max(len(w) for w in self.words) - 1)


def _is_factor(u: Word, w: Word) -> bool:
    """True iff u occurs in w as a contiguous subword."""
    n, k = len(w), len(u)
    return any(w[i : i + k] == u for i in range(n - k + 1))


def _avoids(w: Word, forbidden) -> bool:
    return not any(_is_factor(u, w) for u in forbidden)


@dataclass(frozen=True, eq=False)
class ConstraintGraph:
    """Compiled constraint: allowed m-blocks as vertices, allowed overlaps as edges."""

    alphabet_size: int
    order: int
    vertices: tuple  # tuple of m-blocks (tuples of ints)
    adjacency: np.ndarray  # 0/1 matrix, adjacency[i, j] = 1 iff vertex i -> vertex j

    def vertex_index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}


def compile(f: ForbiddenWordSet) -> ConstraintGraph:  # noqa: A001 - domain verb
    """Compile a forbidden-word set into its constraint graph.

    Vertices are the words of length m avoiding every forbidden factor;
    u -> v is an edge iff u and v overlap in m-1 symbols and the combined
    (m+1)-block also avoids every forbidden factor.
    """
    m = f.order
    k = f.alphabet_size
    forb = sorted(f.words)
    vertices = [
        w for w in itertools.product(range(1, k + 1), repeat=m) if _avoids(w, forb)
    ]
    if not vertices:
        raise PreconditionError("empty constraint: every length-%d block is forbidden" % m)
    idx = {v: i for i, v in enumerate(vertices)}
    a = np.zeros((len(vertices), len(vertices)), dtype=float)
    for u in vertices:
        for s in range(1, k + 1):
            v = u[1:] + (s,)
            if v in idx and _avoids(u + (s,), forb):
                a[idx[u], idx[v]] = 1.0
    return ConstraintGraph(
        alphabet_size=k, order=m, vertices=tuple(vertices), adjacency=a
    )


def is_irreducible(g: ConstraintGraph) -> bool:
    """True iff the graph is strongly connected (and every vertex sits on a cycle)."""
    a = g.adjacency
    n = a.shape[0]
    if np.any(a.sum(axis=1) == 0) or np.any(a.sum(axis=0) == 0):
        return False
    return _reaches_all(a, 0) and _reaches_all(a.T, 0)


def _reaches_all(a: np.ndarray, start: int) -> bool:
    n = a.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = seen.copy()
    while frontier.any():
        nxt = (a[frontier].sum(axis=0) > 0) & ~seen
        seen |= nxt
        frontier = nxt
    return bool(seen.all())


def perron_eigenpair(a: np.ndarray):
    """Dominant eigenvalue and right eigenvector of a nonnegative matrix.

    Shifted power iteration on A + I (guarantees convergence without an
    aperiodicity assumption), stopping on a 1e-14 Rayleigh-quotient change,
    capped at 1e5 iterations.
    """
    n = a.shape[0]
    b = a + np.eye(n)
    v = np.ones(n) / np.sqrt(n)
    mu_old = np.inf
    for _ in range(_POWER_MAX_ITER):
        w = b @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            raise PreconditionError("matrix has no positive eigenvector (zero row)")
        v = w / nrm
        mu = float(v @ (b @ v))
        residual = np.max(np.abs(b @ v - mu * v))
        if abs(mu - mu_old) <= _POWER_TOL * max(1.0, abs(mu)) and residual <= 1e-13:
            return mu - 1.0, v
        mu_old = mu
    raise ArithmeticError("power iteration did not converge within the iteration cap")


def noiseless_capacity(g: ConstraintGraph) -> float:
    """log of the Perron eigenvalue of the adjacency matrix, in nats.

    Requires an irreducible graph.
    """
    if not is_irreducible(g):
        raise PreconditionError("noiseless capacity requires an irreducible graph")
    lam, _ = perron_eigenpair(g.adjacency)
    return float(np.log(lam))


def parry_chain(g: ConstraintGraph) -> MarkovInput:
    """The unique max-entropy m-th order chain supported on the graph.

    Transition probabilities are A_uv * r_v / (lam * r_u) with r the right
    Perron vector; the entropy rate of the result equals the noiseless
    capacity.
    """
    if not is_irreducible(g):
        raise PreconditionError("the max-entropy chain requires an irreducible graph")
    lam, r = perron_eigenpair(g.adjacency)
    idx = g.vertex_index()
    kernel = np.zeros((len(g.vertices), g.alphabet_size))
    for u in g.vertices:
        i = idx[u]
        for s in range(1, g.alphabet_size + 1):
            v = u[1:] + (s,)
            j = idx.get(v)
            if j is not None and g.adjacency[i, j] > 0:
                kernel[i, s - 1] = r[j] / (lam * r[i])
    return MarkovInput(
        order=g.order,
        alphabet_size=g.alphabet_size,
        states=g.vertices,
        kernel=kernel,
    )


# ---------------------------------------------------------------------------
# Named presets and the JSON description format
# ---------------------------------------------------------------------------

_RLL_RE = re.compile(r"^rll\(\s*(\d+)\s*,\s*(\d+|inf)\s*\)$")
_FULL_RE = re.compile(r"^full\(\s*(\d+)\s*\)$")


def preset(name: str) -> ForbiddenWordSet:
    """Built-in constraint presets: "rll(d,k)" and "full(K)".

    rll(d,k) follows the usual convention over {1,2}: runs of 1s between
    successive 2s have length in [d,k]; k=inf leaves runs unbounded above.
    """
    name = name.strip().lower()
    m = _RLL_RE.match(name)
    if m:
        d = int(m.group(1))
        k = None if m.group(2) == "inf" else int(m.group(2))
        return rll_forbidden_set(d, k)
    m = _FULL_RE.match(name)
    if m:
        return ForbiddenWordSet(int(m.group(1)), ())
    raise ConfigError(f"unknown preset {name!r}; expected rll(d,k) or full(K)")


def rll_forbidden_set(d: int, k=None) -> ForbiddenWordSet:
    """Forbidden words of the (d,k) run-length constraint over {1,2}."""
    if d < 0 or (k is not None and k < d):
        raise ConfigError(f"invalid run-length parameters d={d}, k={k}")
    words = [(2,) + (1,) * l + (2,) for l in range(d)]
    if k is not None:
        words.append((1,) * (k + 1))
    if not words:
        return ForbiddenWordSet(2, ())
    return ForbiddenWordSet(2, words)


def load_constraint(source) -> ForbiddenWordSet:
    """Parse the JSON description {"K": int, "forbidden": ["22", ...]}.

    Symbols are the characters "1".."K" (so K <= 9 in this format; the
    programmatic API takes tuples of ints and has no such limit).
    """
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid constraint JSON: {e}") from e
    if not isinstance(source, dict) or "K" not in source:
        raise ConfigError('constraint JSON must be {"K": int, "forbidden": [...]}')
    k = source["K"]
    if not isinstance(k, int) or not (2 <= k <= 9):
        raise ConfigError("constraint JSON requires an integer K in 2..9")
    words = source.get("forbidden", [])
    if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
        raise ConfigError('"forbidden" must be a list of symbol strings')
    if any(not w.isdigit() for w in words):
        raise ConfigError("forbidden words must consist of digit symbols 1..K")
    return ForbiddenWordSet(k, words)
