"""Pants decompositions, boundary perturbation, chain gluing and explicit eigenvalue upper bounds.

A :class:`PantsComplex` is pure combinatorics plus lengths: every pair of
pants has three slots, each slot carries a curve name and a length, and
gluings pair two slots carrying the same curve.  Twists are kept as
bookkeeping (reduced modulo the curve length) and never enter a metric
computation.  Areas come from Gauss-Bonnet: each pair of pants has area
2 pi.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import (
    ArityMismatch,
    DegenerateArea,
    DomainError,
    LengthConstraintViolated,
    PatternMismatch,
    PreconditionUnmet,
)
from .hyptrig import collar_width
from .pants_maps import Pants, pants_admissibility

__all__ = [
    "MIN_INTERIOR_LENGTH",
    "Slot",
    "PantsNode",
    "Gluing",
    "PantsComplex",
    "GenusPartition",
    "PieceQuotient",
    "TestFunctionBound",
    "build_decomposition",
    "whitehead_move",
    "perturb_boundaries",
    "genus_partition",
    "glue_chain",
    "rayleigh_upper_bound",
    "piece_quotient",
    "cheng_radius",
    "cheng_bound",
    "ball_area",
    "cheng_ball_bound",
    "net_size_lower_bound",
]

MIN_INTERIOR_LENGTH = 2.0 * math.asinh(1.0)
GLUE_TOL = 1e-12


@dataclass(frozen=True, order=True)
class Slot:
    pants: int
    index: int


@dataclass(frozen=True)
class PantsNode:
    """A pair of pants: the curve carried by each of its three slots and that curve's length."""

    curves: tuple[str, str, str]
    lengths: tuple[float, float, float]


@dataclass(frozen=True)
class Gluing:
    a: Slot
    b: Slot
    curve: str
    twist: float = 0.0


@dataclass(frozen=True)
class PantsComplex:
    """Pairs of pants with slot-to-slot gluings; unglued slots are the free boundary."""

    pants: tuple[PantsNode, ...]
    gluings: tuple[Gluing, ...]
    free_boundary: tuple[Slot, ...]

    def __post_init__(self) -> None:
        seen: set[Slot] = set()
        for g in self.gluings:
            for s in (g.a, g.b):
                if s in seen:
                    raise PatternMismatch(f"slot {s} used twice")
                seen.add(s)
            la, lb = self.length(g.a), self.length(g.b)
            if abs(la - lb) > GLUE_TOL * max(1.0, la):
                raise PatternMismatch(f"glued slots of {g.curve} have lengths {la} and {lb}")
            if self.curve(g.a) != g.curve or self.curve(g.b) != g.curve:
                raise PatternMismatch(f"gluing {g.curve} joins slots carrying other curves")
        for s in self.free_boundary:
            if s in seen:
                raise PatternMismatch(f"slot {s} is both glued and free")
            seen.add(s)
        expected = {Slot(i, j) for i in range(len(self.pants)) for j in range(3)}
        if seen != expected:
            raise PatternMismatch("every slot must be glued or free exactly once")
        for node in self.pants:
            if any(not (x > 0 and math.isfinite(x)) for x in node.lengths):
                raise DomainError("curve lengths must be positive")

    # -- lookups -------------------------------------------------------------

    def curve(self, s: Slot) -> str:
        return self.pants[s.pants].curves[s.index]

    def length(self, s: Slot) -> float:
        return self.pants[s.pants].lengths[s.index]

    def gluing_of(self, curve: str) -> Gluing:
        for g in self.gluings:
            if g.curve == curve:
                return g
        raise DomainError(f"{curve!r} is not an interior curve")

    def curve_lengths(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for node in self.pants:
            for c, l in zip(node.curves, node.lengths):
                out[c] = l
        return out

    @property
    def interior_curves(self) -> list[str]:
        return [g.curve for g in self.gluings]

    @property
    def boundary_curves(self) -> list[str]:
        return [self.curve(s) for s in self.free_boundary]

    @property
    def euler_characteristic(self) -> int:
        return -len(self.pants)

    @property
    def area(self) -> float:
        return 2.0 * math.pi * len(self.pants)

    def components(self, cut: Iterable[str] = ()) -> list[list[int]]:
        """Connected components (lists of pants indices) after cutting along the named curves."""
        cut = set(cut)
        parent = list(range(len(self.pants)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for g in self.gluings:
            if g.curve not in cut:
                ra, rb = find(g.a.pants), find(g.b.pants)
                if ra != rb:
                    parent[ra] = rb
        groups: dict[int, list[int]] = {}
        for i in range(len(self.pants)):
            groups.setdefault(find(i), []).append(i)
        return sorted(groups.values())

    @property
    def genus(self) -> int:
        """Genus of a connected complex, from chi = 2 - 2g - (number of boundary curves)."""
        if len(self.components()) != 1:
            raise DomainError("genus is defined here for connected complexes only")
        twice = 2 + len(self.pants) - len(self.free_boundary)
        return twice // 2

    def boundary_pants(self) -> list[int]:
        return sorted({s.pants for s in self.free_boundary})

    # -- output --------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "pants": [{"curves": list(p.curves), "lengths": list(p.lengths)} for p in self.pants],
            "gluings": [
                {"a": [g.a.pants, g.a.index], "b": [g.b.pants, g.b.index], "curve": g.curve, "twist": g.twist}
                for g in self.gluings
            ],
            "free_boundary": [[s.pants, s.index] for s in self.free_boundary],
            "euler_characteristic": self.euler_characteristic,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PantsComplex":
        pants = tuple(PantsNode(tuple(p["curves"]), tuple(float(x) for x in p["lengths"])) for p in data["pants"])
        gl = tuple(Gluing(Slot(*g["a"]), Slot(*g["b"]), g["curve"], float(g["twist"])) for g in data["gluings"])
        free = tuple(Slot(*s) for s in data["free_boundary"])
        return cls(pants, gl, free)


# -- building ---------------------------------------------------------------------


class _Builder:
    """Accumulates pants from curve-name triples and glues slots that share a name."""

    def __init__(self, lengths: Mapping[str, float], default: float, twists: Mapping[str, float]):
        self.lengths = lengths
        self.default = default
        self.twists = twists
        self.nodes: list[tuple[str, str, str]] = []

    def add(self, *curves: str) -> None:
        self.nodes.append(tuple(curves))

    def length(self, name: str) -> float:
        x = float(self.lengths.get(name, self.default))
        if not (x > 0 and math.isfinite(x)):
            raise DomainError(f"length of {name} must be positive, got {x!r}")
        return x

    def build(self) -> PantsComplex:
        pants = tuple(PantsNode(c, tuple(self.length(x) for x in c)) for c in self.nodes)
        where: dict[str, list[Slot]] = {}
        for i, c in enumerate(self.nodes):
            for j, name in enumerate(c):
                where.setdefault(name, []).append(Slot(i, j))
        gluings = []
        free = []
        for name, slots in where.items():
            if len(slots) == 2:
                ell = self.length(name)
                gluings.append(Gluing(slots[0], slots[1], name, math.fmod(self.twists.get(name, 0.0), ell)))
            elif len(slots) == 1:
                free.append(slots[0])
            else:
                raise PatternMismatch(f"curve {name} appears in {len(slots)} slots")
        return PantsComplex(pants, tuple(gluings), tuple(sorted(free)))


def _handle_chain(b: _Builder, h: int, start: str, end: str, prefix: str = "") -> None:
    """Genus-h surface with boundary curves start and end, two pants per handle."""
    names = [start] + [f"{prefix}c{m}" for m in range(1, h)] + [end]
    for m in range(1, h + 1):
        b.add(names[m - 1], names[m], f"{prefix}s{m}")
        b.add(f"{prefix}s{m}", f"{prefix}e{m}", f"{prefix}e{m}")


def build_decomposition(
    g: int,
    n: int,
    lengths: Mapping[str, float] | None = None,
    default_length: float = 2.0,
    twists: Mapping[str, float] | None = None,
) -> PantsComplex:
    """Pants decomposition of a genus-g surface with n boundary curves.

    Boundary curves are ``gamma1 .. gamma{n}``.  Each boundary pants is
    ``(gamma_i, alpha{i-1}, alpha{i})``, so every pants holds at most one
    boundary curve; the ``alpha`` chain closes up through a chain of
    handles (curves ``c*``, ``s*``, ``e*``) carrying the remaining genus,
    or directly onto itself when g = 1.  A closed surface (n = 0) is a
    chain of g - 1 handles whose two ends are glued together.  Curves without an entry in
    ``lengths`` get ``default_length``.  Both interior curves of every
    boundary pants must be at least 2 arcsinh 1 long.
    """
    if g < 0 or n < 0 or int(g) != g or int(n) != n:
        raise DomainError("genus and boundary count must be non-negative integers")
    if 2 * g - 2 + n <= 0:
        raise DomainError(f"(g, n) = ({g}, {n}) has no pants decomposition")
    if g < 1:
        raise DomainError("this decomposition pattern needs genus at least 1")
    b = _Builder(lengths or {}, default_length, twists or {})
    if n == 0:
        # closing a chain of g - 1 handles onto itself adds the last handle
        _handle_chain(b, g - 1, "c0", "c0")
    else:
        alphas = [f"alpha{i}" for i in range(n + 1)]
        if g == 1:
            alphas[n] = alphas[0]
        for i in range(1, n + 1):
            b.add(f"gamma{i}", alphas[i - 1], alphas[i])
        if g >= 2:
            _handle_chain(b, g - 1, alphas[n], alphas[0])
    z = b.build()
    _check_boundary_pants(z)
    return z


def _check_boundary_pants(z: PantsComplex) -> None:
    for i in z.boundary_pants():
        free = [s for s in z.free_boundary if s.pants == i]
        if len(free) > 1:
            raise PatternMismatch(f"pants {i} holds {len(free)} boundary curves")
        for j in range(3):
            s = Slot(i, j)
            if s != free[0] and z.length(s) < MIN_INTERIOR_LENGTH - 1e-12:
                raise LengthConstraintViolated(
                    f"interior curve {z.curve(s)} of boundary pants {i} has length {z.length(s)} < 2 arcsinh 1"
                )


def whitehead_move(z: PantsComplex, curve: str, new_length: float, new_name: str | None = None, swap: str | None = None) -> PantsComplex:
    """Replace an interior curve between two distinct pants by the curve crossing it once.

    The two pants ``(curve, p1, p2)`` and ``(curve, q1, q2)`` become
    ``(new, p1, q2), (new, q1, p2)`` (``swap="second"``) or
    ``(new, p1, q1), (new, p2, q2)`` (``swap="first"``); by default the
    first of these that keeps at most one boundary curve per pants is
    used.  Either swap undoes itself.  The new length is supplied by the
    caller and must be at least 2 arcsinh 1.
    """
    g = z.gluing_of(curve)
    if g.a.pants == g.b.pants:
        raise PatternMismatch(f"{curve} bounds the same pants on both sides")
    if not new_length >= MIN_INTERIOR_LENGTH:
        raise LengthConstraintViolated(f"new curve length {new_length} < 2 arcsinh 1")
    new_name = new_name or f"{curve}~"
    if new_name != curve and new_name in z.curve_lengths():
        raise PatternMismatch(f"curve name {new_name} already in use")
    P, Q = g.a.pants, g.b.pants
    rest_p = [j for j in range(3) if j != g.a.index]
    rest_q = [j for j in range(3) if j != g.b.index]
    free = set(z.free_boundary)
    options = {"second": (rest_p[1], rest_q[1]), "first": (rest_p[1], rest_q[0])}
    order = [swap] if swap is not None else ["second", "first"]
    for name in order:
        if name not in options:
            raise DomainError(f"swap must be 'second' or 'first', got {name!r}")
        jp, jq = options[name]
        new_p = {Slot(P, j) for j in rest_p if j != jp} | {Slot(Q, jq)}
        new_q = {Slot(Q, j) for j in rest_q if j != jq} | {Slot(P, jp)}
        if len(new_p & free) <= 1 and len(new_q & free) <= 1:
            break
    else:
        raise PatternMismatch(f"no Whitehead move on {curve} keeps one boundary curve per pants")
    # exchange the contents of slot (P, jp) and slot (Q, jq)
    moved = {Slot(P, jp): Slot(Q, jq), Slot(Q, jq): Slot(P, jp)}

    def relocate(s: Slot) -> Slot:
        return moved.get(s, s)

    nodes = [list(zip(p.curves, p.lengths)) for p in z.pants]
    nodes[P][jp], nodes[Q][jq] = nodes[Q][jq], nodes[P][jp]
    nodes[P][g.a.index] = (new_name, float(new_length))
    nodes[Q][g.b.index] = (new_name, float(new_length))
    pants = tuple(PantsNode(tuple(c for c, _ in n), tuple(l for _, l in n)) for n in nodes)
    gluings = []
    for gl in z.gluings:
        if gl.curve == curve:
            gluings.append(Gluing(gl.a, gl.b, new_name, 0.0))
        else:
            gluings.append(replace(gl, a=relocate(gl.a), b=relocate(gl.b)))
    return PantsComplex(pants, tuple(gluings), tuple(sorted(relocate(s) for s in z.free_boundary)))


def perturb_boundaries(
    z: PantsComplex,
    deltas: Mapping[str, float] | Sequence[float],
    check_admissible: bool = True,
    ell: float | None = None,
) -> PantsComplex:
    """Scale each boundary curve by (1 + delta) and leave every other length and twist unchanged.

    ``deltas`` maps boundary-curve names to fractional changes, or lists
    them in the order of ``z.boundary_curves``.  Each boundary pants must
    hold exactly one boundary curve; with ``check_admissible`` the pants
    maps between old and new boundary pants are checked for admissibility.
    """
    names = z.boundary_curves
    if not isinstance(deltas, Mapping):
        deltas = list(deltas)
        if len(deltas) != len(names):
            raise ArityMismatch(f"{len(deltas)} deltas for {len(names)} boundary curves")
        deltas = dict(zip(names, deltas))
    unknown = set(deltas) - set(names)
    if unknown:
        raise DomainError(f"not boundary curves: {sorted(unknown)}")
    by_pants: dict[int, list[Slot]] = {}
    for s in z.free_boundary:
        by_pants.setdefault(s.pants, []).append(s)
    nodes = [list(p.lengths) for p in z.pants]
    for i, slots in by_pants.items():
        if len(slots) != 1:
            raise PreconditionUnmet(f"pants {i} holds {len(slots)} boundary curves")
        s = slots[0]
        d = float(deltas.get(z.curve(s), 0.0))
        if d <= -1:
            raise DomainError("delta must exceed -1")
        if d == 0.0:
            continue
        old = z.length(s)
        new = (1.0 + d) * old
        if check_admissible:
            others = [z.length(Slot(i, j)) for j in range(3) if j != s.index]
            pants_admissibility(Pants(others[0], others[1], old), Pants(others[0], others[1], new), ell)
        nodes[i][s.index] = new
    pants = tuple(PantsNode(p.curves, tuple(l)) for p, l in zip(z.pants, nodes))
    return PantsComplex(pants, z.gluings, z.free_boundary)


# -- chain gluing ---------------------------------------------------------------------


@dataclass(frozen=True)
class GenusPartition:
    """g - 1 = i_g * k + r_g split into k - r_g pieces of genus i_g and r_g of genus i_g + 1."""

    g: int
    k: int
    i_g: int
    r_g: int
    pieces: tuple[int, ...]


def genus_partition(g: int, k: int) -> GenusPartition:
    if k < 1 or g < 2:
        raise DomainError("need g >= 2 and k >= 1")
    i, r = divmod(g - 1, k)
    if i < 1:
        raise DomainError(f"g - 1 = {g - 1} is too small for {k} pieces of genus >= 1")
    return GenusPartition(g, k, i, r, tuple([i] * (k - r) + [i + 1] * r))


def glue_chain(partition: GenusPartition, boundary_length: float = 1.0, twists: Sequence[float] | None = None) -> PantsComplex:
    """Closed surface from a cycle of two-boundary pieces, piece i glued to piece i+1 along ``chain{i}``.

    Every piece of genus g_i is decomposed by :func:`build_decomposition`
    with curve names prefixed by ``piece{i}/``; the k chain curves all
    have length ``boundary_length``.  With k = 1 the two boundary curves of
    the single piece are glued to each other.
    """
    k = partition.k
    twists = [0.0] * k if twists is None else list(twists)
    if len(twists) != k:
        raise ArityMismatch(f"{len(twists)} twists for {k} chain curves")
    if not boundary_length > 0:
        raise DomainError("boundary length must be positive")
    b = _Builder({}, 2.0, {})
    lengths: dict[str, float] = {}
    for i, gi in enumerate(partition.pieces):
        piece = build_decomposition(gi, 2)
        rename = {"gamma1": f"chain{i}", "gamma2": f"chain{(i + 1) % k}"}
        for node in piece.pants:
            names = tuple(rename.get(c, f"piece{i}/{c}") for c in node.curves)
            b.add(*names)
            for c, l in zip(names, node.lengths):
                lengths[c] = l
    for i in range(k):
        lengths[f"chain{i}"] = boundary_length
    b.lengths = lengths
    b.twists = {f"chain{i}": twists[i] for i in range(k)}
    z = b.build()
    if z.free_boundary:
        raise PatternMismatch("chain gluing left free boundary")
    if -z.euler_characteristic != 2 * partition.g - 2:
        raise PatternMismatch(f"|chi| = {-z.euler_characteristic} but 2g - 2 = {2 * partition.g - 2}")
    return z


# -- test-function bounds ---------------------------------------------------------------


@dataclass(frozen=True)
class PieceQuotient:
    pants: tuple[int, ...]
    genus: int
    area: float
    boundary_lengths: tuple[float, float]
    half_collar_areas: tuple[float, float]
    widths: tuple[float, float]
    quotient: float


@dataclass(frozen=True)
class TestFunctionBound:
    """Per-piece Rayleigh quotients of the collar test functions; ``bound`` (their max) bounds lambda_{k-1}."""

    __test__ = False

    pieces: tuple[PieceQuotient, ...]
    bound: float
    index: int

    def to_dict(self) -> dict:
        return asdict(self)


def piece_quotient(area: float, l1: float, l2: float) -> tuple[float, tuple[float, float], tuple[float, float]]:
    """Rayleigh quotient of the function rising linearly across both boundary half-collars.

    (A1/w1^2 + A2/w2^2) / (area - 4) with half-collar areas A = l sinh w(l)
    and standard collar widths w(l).  Returns (quotient, areas, widths).
    """
    if area <= 4.0:
        raise DegenerateArea(f"piece area {area} <= 4")
    w1, w2 = collar_width(l1), collar_width(l2)
    a1, a2 = l1 * math.sinh(w1), l2 * math.sinh(w2)
    return (a1 / w1**2 + a2 / w2**2) / (area - 4.0), (a1, a2), (w1, w2)


def rayleigh_upper_bound(z: PantsComplex, chain_curves: Sequence[str] | None = None) -> TestFunctionBound:
    """Upper bound for lambda_{k-1} of a closed chain of k pieces cut along ``chain_curves``."""
    if z.free_boundary:
        raise DomainError("the chain must be a closed surface")
    if chain_curves is None:
        chain_curves = sorted(c for c in z.interior_curves if c.startswith("chain"))
    chain = set(chain_curves)
    comps = z.components(cut=chain)
    pieces = []
    for comp in comps:
        members = set(comp)
        ends = []
        for gl in z.gluings:
            if gl.curve in chain:
                for s in (gl.a, gl.b):
                    if s.pants in members:
                        ends.append(z.length(s))
        if len(ends) != 2:
            raise PatternMismatch(f"piece {comp} meets the chain curves {len(ends)} times, expected 2")
        area = 2.0 * math.pi * len(comp)
        q, areas, widths = piece_quotient(area, ends[0], ends[1])
        genus = len(comp) // 2
        pieces.append(PieceQuotient(tuple(comp), genus, area, (ends[0], ends[1]), areas, widths, q))
    return TestFunctionBound(tuple(pieces), max(p.quotient for p in pieces), len(comps) - 1)


# -- Cheng-type bounds ---------------------------------------------------------------------


def cheng_radius(g: int, k: int) -> float:
    """r(g) = arccosh(1 + 2(g-1)/(k+1)): radius for which k+1 disjoint balls of radius r/2 fit."""
    if g < 2 or k < 1:
        raise DomainError("need g >= 2 and k >= 1")
    return math.acosh(1.0 + 2.0 * (g - 1) / (k + 1))


def cheng_bound(g: int, k: int) -> float:
    """1/4 + (4 pi / r(g))^2, an upper bound for lambda_k of every closed genus-g surface."""
    return 0.25 + (4.0 * math.pi / cheng_radius(g, k)) ** 2


def ball_area(r: float) -> float:
    """Area 2 pi (cosh r - 1) of a hyperbolic disc of radius r."""
    if r < 0:
        raise DomainError("radius must be non-negative")
    return 2.0 * math.pi * (math.cosh(r) - 1.0)


def cheng_ball_bound(r: float) -> float:
    """1/4 + (2 pi / r)^2, an upper bound for the first Dirichlet eigenvalue of a hyperbolic disc of radius r."""
    if not r > 0:
        raise DomainError("radius must be positive")
    return 0.25 + (2.0 * math.pi / r) ** 2


def net_size_lower_bound(g: int, k: int) -> int:
    """Least number of points in a maximal r(g)-net: the balls of radius r(g) cover area 4 pi (g-1)."""
    ratio = 4.0 * math.pi * (g - 1) / ball_area(cheng_radius(g, k))
    return math.ceil(ratio - 1e-9)
