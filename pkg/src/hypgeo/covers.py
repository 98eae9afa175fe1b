"""Random degree-n covers of the three-punctured sphere.

The fundamental group is the free group on ``a`` and ``b``, realized in
SL(2, Z) by ``A = [[1, 2], [0, 1]]`` and ``B = [[1, 0], [2, 1]]`` (a
free subgroup whose quotient of the upper half-plane is the
three-punctured sphere).  A closed geodesic is a conjugacy class of a
hyperbolic word and has length ``2 arccosh(|tr| / 2)``.

A uniformly random cover is a pair of independent uniform permutations
``sigma_a, sigma_b`` of ``{0..n-1}``; a word acts through the
homomorphism ``phi(uv) = phi(u) o phi(v)``.  Cycles of ``phi(w)``
correspond to lifts of the geodesic of ``w``.

Trials are split into fixed chunks, each with its own random stream
spawned from the seed, so results do not depend on the number of
worker threads.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DomainError

__all__ = [
    "FreeWord",
    "GeodesicClass",
    "PermRep",
    "word",
    "word_matrix",
    "word_trace",
    "geodesic_class",
    "enumerate_short_geodesics",
    "sample_rep",
    "sample_reps",
    "eval_word",
    "cycle_type",
    "nica_limit",
    "fixed_point_free_prob",
    "fixed_point_counts",
    "cycle_length_counts",
    "joint_fixed_point_free",
    "systole_prob",
    "transitivity_fraction",
    "CHUNK",
]

CHUNK = 1000
_LETTERS = {"a": 1, "A": -1, "b": 2, "B": -2}
_NAMES = {v: k for k, v in _LETTERS.items()}
_ORDER = {1: 0, -1: 1, 2: 2, -2: 3}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HYPGEO_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        return 1


# -- words ---------------------------------------------------------------------


def _reduce(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class FreeWord:
    """Freely reduced word in a, b and their inverses; letters are +-1 for a and +-2 for b."""

    letters: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(x not in _NAMES for x in self.letters):
            raise DomainError(f"letters must be +-1 or +-2, got {self.letters}")
        object.__setattr__(self, "letters", _reduce(self.letters))

    def __str__(self) -> str:
        return "".join(_NAMES[x] for x in self.letters) or "1"

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        return FreeWord(self.letters + other.letters)

    def __pow__(self, d: int) -> "FreeWord":
        if d < 0:
            return self.inverse() ** (-d)
        return FreeWord(self.letters * d)

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple(-x for x in reversed(self.letters)))

    def cyclic_core(self) -> tuple["FreeWord", "FreeWord"]:
        """(u, c) with self = u c u^-1 and c cyclically reduced."""
        L = self.letters
        i = 0
        while i < len(L) - 1 - i and L[i] == -L[len(L) - 1 - i]:
            i += 1
        return FreeWord(L[:i]), FreeWord(L[i : len(L) - i])

    @property
    def cyclically_reduced(self) -> bool:
        return len(self.letters) < 2 or self.letters[0] != -self.letters[-1]

    @property
    def power_decomposition(self) -> tuple["FreeWord", int]:
        """(v, d) with self = v^d and v not a proper power."""
        u, c = self.cyclic_core()
        L = c.letters
        n = len(L)
        if n == 0:
            return self, 1
        for p in range(1, n + 1):
            if n % p == 0 and L[:p] * (n // p) == L:
                root = FreeWord(L[:p])
                return u * root * u.inverse(), n // p
        raise AssertionError("unreachable")

    @property
    def is_primitive_power(self) -> bool:
        return self.power_decomposition[1] == 1

    def rotations(self) -> list[tuple[int, ...]]:
        L = self.letters
        return [L[i:] + L[:i] for i in range(len(L))] or [()]

    def canonical(self) -> "FreeWord":
        """Least cyclic rotation of the core of self or of its inverse: one representative per unoriented class."""
        _, c = self.cyclic_core()
        cands = c.rotations() + c.inverse().rotations()
        return FreeWord(min(cands, key=lambda t: [_ORDER[x] for x in t]))


def word(text: str | FreeWord | Sequence[int]) -> FreeWord:
    """Parse a word from a string over a, b, A = a^-1, B = b^-1 (or pass letters through)."""
    if isinstance(text, FreeWord):
        return text
    if isinstance(text, str):
        t = text.strip()
        if t in ("", "1", "e"):
            return FreeWord(())
        try:
            return FreeWord(tuple(_LETTERS[ch] for ch in t))
        except KeyError as exc:
            raise DomainError(f"unknown letter {exc.args[0]!r} in {text!r}") from None
    return FreeWord(tuple(int(x) for x in text))


_GEN = {
    1: ((1, 2), (0, 1)),
    -1: ((1, -2), (0, 1)),
    2: ((1, 0), (2, 1)),
    -2: ((1, 0), (-2, 1)),
}


def word_matrix(w: FreeWord | str) -> tuple[tuple[int, int], tuple[int, int]]:
    """Exact integer matrix of the word (Python integers never overflow)."""
    w = word(w)
    m = ((1, 0), (0, 1))
    for x in w.letters:
        g = _GEN[x]
        m = (
            (m[0][0] * g[0][0] + m[0][1] * g[1][0], m[0][0] * g[0][1] + m[0][1] * g[1][1]),
            (m[1][0] * g[0][0] + m[1][1] * g[1][0], m[1][0] * g[0][1] + m[1][1] * g[1][1]),
        )
    return m


def word_trace(w: FreeWord | str) -> int:
    m = word_matrix(w)
    return m[0][0] + m[1][1]


@dataclass(frozen=True)
class GeodesicClass:
    """Primitive closed geodesic: canonical word, |trace| and length 2 arccosh(|tr|/2)."""

    word: FreeWord
    trace: int
    length: float

    def to_dict(self) -> dict:
        return {"word": str(self.word), "trace": self.trace, "length": self.length}


def geodesic_class(w: FreeWord | str) -> GeodesicClass:
    """Geodesic of a primitive hyperbolic word; DomainError for parabolic, trivial or power words."""
    w = word(w)
    if not len(w):
        raise DomainError("the trivial word has no geodesic")
    if not w.is_primitive_power:
        raise DomainError(f"{w} is a proper power")
    t = abs(word_trace(w))
    if t <= 2:
        raise DomainError(f"{w} has |trace| {t}: it is parabolic, not a closed geodesic")
    return GeodesicClass(w.canonical(), t, 2.0 * math.acosh(t / 2.0))


def _cyclic_words(length: int):
    """All cyclically reduced words of the given length."""
    letters = (1, -1, 2, -2)
    stack = [(x,) for x in letters]
    while stack:
        w = stack.pop()
        if len(w) == length:
            if length == 1 or w[0] != -w[-1]:
                yield w
            continue
        for x in letters:
            if x != -w[-1]:
                stack.append(w + (x,))


def enumerate_short_geodesics(eps: float, max_word_len: int = 8) -> list[GeodesicClass]:
    """Distinct primitive closed geodesics shorter than eps among words of length <= max_word_len.

    Classes are deduplicated by cyclic rotation and inversion.  A
    RuntimeWarning is issued when some word of the maximal length is still
    shorter than eps, since longer words may then contribute as well.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    found: dict[tuple[int, ...], GeodesicClass] = {}
    max_trace = 2.0 * math.cosh(eps / 2.0)
    shortest_at_max = math.inf
    for L in range(1, max_word_len + 1):
        for letters in _cyclic_words(L):
            w = FreeWord(letters)
            t = abs(word_trace(w))
            if t <= 2:
                continue
            if L == max_word_len:
                shortest_at_max = min(shortest_at_max, t)
            if t >= max_trace or not w.is_primitive_power:
                continue
            c = geodesic_class(w)
            found.setdefault(c.word.letters, c)
    if shortest_at_max < max_trace:
        warnings.warn(
            f"words of length {max_word_len} still give geodesics shorter than {eps}; the list may be truncated",
            RuntimeWarning,
            stacklevel=2,
        )
    return sorted(found.values(), key=lambda c: (c.length, [_ORDER[x] for x in c.word.letters]))


# -- permutation representations ----------------------------------------------------


@dataclass(frozen=True)
class PermRep:
    """Images of a and b as permutation arrays (i -> sigma[i]) of {0..n-1}."""

    n: int
    sigma_a: tuple[int, ...]
    sigma_b: tuple[int, ...]

    def __post_init__(self) -> None:
        for s in (self.sigma_a, self.sigma_b):
            if len(s) != self.n or sorted(s) != list(range(self.n)):
                raise DomainError("images must be permutations of {0..n-1}")


def _streams(seed: int, chunks: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1))
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(chunks)]


def sample_reps(n: int, trials: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Batch of independent uniform permutation pairs, shape (trials, n) each (Fisher-Yates per row)."""
    if n < 1:
        raise DomainError("degree must be at least 1")
    base = np.broadcast_to(np.arange(n, dtype=np.int32), (trials, n))
    return rng.permuted(base, axis=1), rng.permuted(base, axis=1)


def sample_rep(n: int, seed: int) -> PermRep:
    """One uniformly random representation, reproducible from the seed."""
    sa, sb = sample_reps(n, 1, _streams(seed, 1)[0])
    return PermRep(n, tuple(int(x) for x in sa[0]), tuple(int(x) for x in sb[0]))


def _compose(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise p o q (apply q first)."""
    return np.take_along_axis(p, q, axis=-1)


def _invert(p: np.ndarray) -> np.ndarray:
    inv = np.empty_like(p)
    rows = np.arange(p.shape[0])[:, None]
    inv[rows, p] = np.arange(p.shape[1], dtype=p.dtype)
    return inv


def _eval_batch(sa: np.ndarray, sb: np.ndarray, w: FreeWord) -> np.ndarray:
    gens = {1: sa, 2: sb}
    needed = {abs(x) for x in w.letters if x < 0}
    for g in needed:
        gens[-g] = _invert(gens[g])
    out = np.broadcast_to(np.arange(sa.shape[1], dtype=sa.dtype), sa.shape).copy()
    for x in w.letters:
        out = _compose(out, gens[x])
    return out


def _power_batch(p: np.ndarray, d: int) -> np.ndarray:
    """Row-wise p^d by repeated squaring (d may be a huge integer)."""
    result = np.broadcast_to(np.arange(p.shape[1], dtype=p.dtype), p.shape).copy()
    base = p
    while d:
        if d & 1:
            result = _compose(result, base)
        d >>= 1
        if d:
            base = _compose(base, base)
    return result


def eval_word(rep: PermRep, w: FreeWord | str) -> tuple[int, ...]:
    """phi(w) as a permutation tuple, with phi(uv) = phi(u) o phi(v)."""
    w = word(w)
    sa = np.asarray([rep.sigma_a], dtype=np.int64)
    sb = np.asarray([rep.sigma_b], dtype=np.int64)
    return tuple(int(x) for x in _eval_batch(sa, sb, w)[0])


def cycle_type(perm: Sequence[int]) -> dict[int, int]:
    """Number of cycles of each length (fixed points are 1-cycles)."""
    n = len(perm)
    seen = [False] * n
    out: dict[int, int] = {}
    for i in range(n):
        if not seen[i]:
            k = 0
            j = i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                k += 1
            out[k] = out.get(k, 0) + 1
    return dict(sorted(out.items()))


def nica_limit(d: int) -> float:
    """Limit probability exp(-sum_{h | d} h / d) that phi(v^d) has no fixed point, v a non-power."""
    if d < 1 or int(d) != d:
        raise DomainError("d must be a positive integer")
    s = sum(h for h in range(1, int(math.isqrt(d)) + 1) if d % h == 0 for h in {h, d // h})
    return math.exp(-s / d)


# -- Monte Carlo -------------------------------------------------------------------------


def _run_chunks(n: int, trials: int, seed: int, fn) -> list:
    """Apply fn(sa, sb) to fixed-size chunks of sampled reps, each chunk with its own stream."""
    if trials < 1:
        raise DomainError("trials must be at least 1")
    sizes = [CHUNK] * (trials // CHUNK) + ([trials % CHUNK] if trials % CHUNK else [])
    streams = _streams(seed, len(sizes))

    def job(i: int):
        sa, sb = sample_reps(n, sizes[i], streams[i])
        return fn(sa, sb)

    workers = min(_threads(), len(sizes))
    if workers <= 1:
        return [job(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(job, range(len(sizes))))


def _fixed_points(p: np.ndarray) -> np.ndarray:
    return np.count_nonzero(p == np.arange(p.shape[1], dtype=p.dtype), axis=1)


def _binomial(hits: np.ndarray) -> tuple[float, float]:
    p = float(np.mean(hits))
    return p, math.sqrt(max(p * (1 - p), 0.0) / hits.size)


def fixed_point_counts(w: FreeWord | str, n: int, trials: int, seed: int) -> np.ndarray:
    """Number of fixed points of phi(w) in each trial."""
    w = word(w)
    parts = _run_chunks(n, trials, seed, lambda sa, sb: _fixed_points(_eval_batch(sa, sb, w)))
    return np.concatenate(parts)


def cycle_length_counts(w: FreeWord | str, n: int, trials: int, seed: int, max_len: int = 10) -> np.ndarray:
    """Number of k-cycles of phi(w) for k = 1..max_len, one row per trial.

    Uses the same sample streams as :func:`fixed_point_counts`, so column
    0 equals its output for the same seed.
    """
    if max_len < 1:
        raise DomainError("max_len must be at least 1")
    w = word(w)

    def fn(sa, sb):
        p = _eval_batch(sa, sb, w)
        ident = np.arange(p.shape[1], dtype=p.dtype)
        length = np.zeros(p.shape, dtype=np.int64)
        cur = p
        for k in range(1, max_len + 1):
            length[(cur == ident) & (length == 0)] = k
            cur = _compose(p, cur)
        return np.stack([np.count_nonzero(length == k, axis=1) // k for k in range(1, max_len + 1)], axis=1)

    return np.concatenate(_run_chunks(n, trials, seed, fn))


def fixed_point_free_prob(w: FreeWord | str, n: int, trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of P(phi(w) has no fixed point) with its binomial standard error."""
    return _binomial(fixed_point_counts(w, n, trials, seed) == 0)


def joint_fixed_point_free(words: Sequence[FreeWord | str], n: int, trials: int, seed: int) -> dict:
    """Joint and marginal fixed-point-free probabilities for several words on the same samples.

    ``difference`` is the joint estimate minus the product of marginals;
    ``difference_stderr`` is its delta-method standard error.
    """
    ws = [word(x) for x in words]
    parts = _run_chunks(n, trials, seed, lambda sa, sb: np.stack([_fixed_points(_eval_batch(sa, sb, w)) == 0 for w in ws], axis=1))
    X = np.concatenate(parts).astype(float)
    m = X.mean(axis=0)
    joint_ind = X.prod(axis=1)
    joint = float(joint_ind.mean())
    prod = float(np.prod(m))
    # influence function of mean(prod X_i) - prod mean(X_i)
    infl = joint_ind.copy()
    for i in range(len(ws)):
        others = float(np.prod(np.delete(m, i)))
        infl = infl - others * X[:, i]
    diff_se = float(np.std(infl, ddof=1) / math.sqrt(X.shape[0])) if X.shape[0] > 1 else math.inf
    return {
        "words": [str(w) for w in ws],
        "marginals": [float(x) for x in m],
        "marginal_stderr": [math.sqrt(x * (1 - x) / X.shape[0]) for x in m],
        "joint": joint,
        "joint_stderr": math.sqrt(joint * (1 - joint) / X.shape[0]),
        "product": prod,
        "difference": joint - prod,
        "difference_stderr": diff_se,
    }


def systole_prob(
    eps: float,
    n: int,
    trials: int,
    seed: int,
    max_word_len: int = 8,
    classes: Sequence[GeodesicClass] | None = None,
) -> dict:
    """Probability that a random cover has no closed geodesic shorter than eps, with diagnostics.

    ``estimate`` is the exact event: for every base geodesic gamma with
    length < eps, phi(gamma) has no cycle of length < eps / length(gamma).
    ``factorial_estimate`` is the smaller event that phi(gamma)^d has no
    fixed point for every gamma, with d = m! and m = floor(eps / shortest
    length); the permutation power is taken exactly by repeated squaring,
    so d is never capped.  ``nica_product`` is the limit of that event.
    """
    if classes is None:
        classes = enumerate_short_geodesics(eps, max_word_len)
    classes = list(classes)
    if not classes:
        return {
            "eps": eps, "n": n, "trials": trials, "seed": seed, "classes": [],
            "estimate": 1.0, "stderr": 0.0, "factorial_d": None,
            "factorial_estimate": 1.0, "factorial_stderr": 0.0, "nica_product": 1.0, "per_word": [],
        }
    shortest = min(c.length for c in classes)
    m = int(math.floor(eps / shortest))
    d = math.factorial(m)
    # a cycle of length c is short for gamma when c < eps / length(gamma)
    limits = [math.ceil(eps / c.length) - 1 for c in classes]

    def job(sa, sb):
        exact = np.ones(sa.shape[0], dtype=bool)
        fact = np.ones(sa.shape[0], dtype=bool)
        per = []
        for c, lim in zip(classes, limits):
            p = _eval_batch(sa, sb, c.word)
            ok = np.ones(sa.shape[0], dtype=bool)
            q = p
            for k in range(1, lim + 1):
                if k > 1:
                    q = _compose(q, p)
                ok &= _fixed_points(q) == 0
            f = _fixed_points(_power_batch(p, d)) == 0
            exact &= ok
            fact &= f
            per.append((ok, f))
        return exact, fact, per

    parts = _run_chunks(n, trials, seed, job)
    exact = np.concatenate([p[0] for p in parts])
    fact = np.concatenate([p[1] for p in parts])
    per_word = []
    for i, (c, lim) in enumerate(zip(classes, limits)):
        ok = np.concatenate([p[2][i][0] for p in parts])
        f = np.concatenate([p[2][i][1] for p in parts])
        e_ok, s_ok = _binomial(ok)
        e_f, s_f = _binomial(f)
        per_word.append({
            **c.to_dict(),
            "max_short_cycle": lim,
            "no_short_cycle": e_ok, "no_short_cycle_stderr": s_ok,
            "power_fixed_point_free": e_f, "power_fixed_point_free_stderr": s_f,
            "nica_limit": nica_limit(d),
        })
    est, se = _binomial(exact)
    fest, fse = _binomial(fact)
    return {
        "eps": eps, "n": n, "trials": trials, "seed": seed,
        "classes": [c.to_dict() for c in classes],
        "estimate": est, "stderr": se,
        "factorial_d": str(d),
        "factorial_estimate": fest, "factorial_stderr": fse,
        "nica_product": nica_limit(d) ** len(classes),
        "per_word": per_word,
    }


def transitivity_fraction(n: int, trials: int, seed: int) -> tuple[float, float]:
    """Fraction of sampled representations whose image acts transitively, with its standard error."""

    def job(sa, sb):
        out = np.empty(sa.shape[0], dtype=bool)
        idx = np.arange(n)
        for t in range(sa.shape[0]):
            rows = np.concatenate([idx, idx])
            cols = np.concatenate([sa[t], sb[t]])
            g = coo_matrix((np.ones(2 * n), (rows, cols)), shape=(n, n))
            out[t] = connected_components(g, directed=True, connection="weak", return_labels=False) == 1
        return out

    return _binomial(np.concatenate(_run_chunks(n, trials, seed, job)))
