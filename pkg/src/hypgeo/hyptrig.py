"""Closed-form trigonometry of right-angled hyperbolic polygons and collars.

Every function here is a pure function of float side lengths.  Sides are
listed in cyclic order around the polygon:

* trirectangle ``a, b, alpha, beta`` with the acute angle between
  ``alpha`` and ``beta``;
* pentagon ``a, b, alpha, c, beta``;
* hexagon ``a, gamma, b, alpha, c, beta``, where ``a, b, c`` and
  ``gamma, alpha, beta`` are the two alternating triples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, GeometryInfeasible

__all__ = [
    "Trirectangle",
    "Pentagon",
    "Hexagon",
    "Collar",
    "acosh_from_excess",
    "trirectangle_solve",
    "pentagon_from_legs",
    "hexagon_solve",
    "hexagon_rotate",
    "hexagon_perpendicular",
    "pants_perpendiculars",
    "collar_width",
    "collar_area",
    "crossing_length_bound",
    "REGULAR_PENTAGON_SIDE",
    "REGULAR_HEXAGON_SIDE",
]


def acosh_from_excess(e: float) -> float:
    """arccosh(1 + e) without the cancellation of forming 1 + e first."""
    if e < 0.0:
        raise DomainError(f"arccosh argument below 1 (excess {e!r})")
    return math.log1p(e + math.sqrt(e * (e + 2.0)))


def _acosh(x: float) -> float:
    # log form with the small-excess branch kept accurate
    if x < 1.0:
        raise DomainError(f"arccosh argument {x!r} < 1")
    if x < 1.5:
        return acosh_from_excess(x - 1.0)
    return math.acosh(x)


def _positive(name: str, value: float) -> None:
    if not (value > 0.0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite length, got {value!r}")


REGULAR_PENTAGON_SIDE = _acosh((1.0 + math.sqrt(5.0)) / 2.0)
REGULAR_HEXAGON_SIDE = _acosh(2.0)


@dataclass(frozen=True)
class Trirectangle:
    """Quadrilateral with three right angles; sides in cyclic order."""

    a: float
    b: float
    alpha: float
    beta: float

    def residuals(self) -> dict[str, float]:
        """Relative defects of the two defining identities."""
        t1 = math.cosh(self.b) * math.tanh(self.a)
        s1 = math.cosh(self.beta) * math.sinh(self.a)
        return {
            "tanh_alpha": abs(math.tanh(self.alpha) - t1) / abs(t1),
            "sinh_alpha": abs(math.sinh(self.alpha) - s1) / abs(s1),
        }


@dataclass(frozen=True)
class Pentagon:
    """Right-angled pentagon with consecutive sides a, b, alpha, c, beta."""

    a: float
    b: float
    alpha: float
    c: float
    beta: float

    def sides(self) -> tuple[float, float, float, float, float]:
        return (self.a, self.b, self.alpha, self.c, self.beta)

    def residuals(self) -> dict[str, float]:
        """Relative defects of the four pentagon identities."""
        a, b, al, c, be = self.sides()
        ch = math.cosh(c)
        sh2 = math.sinh(c) ** 2
        th2 = math.tanh(c) ** 2
        legs = math.sinh(a) * math.sinh(b)
        cot = 1.0 / (math.tanh(al) * math.tanh(be))
        sh2_rhs = 1.0 / math.sinh(be) ** 2 + 1.0 / (math.sinh(al) ** 2 * math.tanh(be) ** 2)
        th2_rhs = 1.0 - math.tanh(al) ** 2 * math.tanh(be) ** 2
        return {
            "cosh_c_legs": abs(ch - legs) / ch,
            "cosh_c_coth": abs(ch - cot) / ch,
            "sinh2_c": abs(sh2 - sh2_rhs) / sh2,
            "tanh2_c": abs(th2 - th2_rhs) / th2,
        }


@dataclass(frozen=True)
class Hexagon:
    """Right-angled hexagon with consecutive sides a, gamma, b, alpha, c, beta.

    ``d`` is the common perpendicular between sides ``c`` and ``gamma``;
    ``h_alpha`` is the altitude onto ``d`` of the pentagon cut off by
    ``d`` that contains sides ``alpha`` and ``b``.
    """

    a: float
    gamma: float
    b: float
    alpha: float
    c: float
    beta: float
    d: float
    h_alpha: float

    def sides(self) -> tuple[float, float, float, float, float, float]:
        return (self.a, self.gamma, self.b, self.alpha, self.c, self.beta)

    def residuals(self) -> dict[str, float]:
        """Relative defects of the hexagon identities and the altitude bound."""
        a, g, b, al, c, be = self.sides()
        out: dict[str, float] = {}
        for name, x, p, q, r in (
            ("cosh_gamma", g, c, a, b),
            ("cosh_alpha", al, a, b, c),
            ("cosh_beta", be, b, c, a),
        ):
            rhs = (math.cosh(p) + math.cosh(q) * math.cosh(r)) / (math.sinh(q) * math.sinh(r))
            out[name] = abs(math.cosh(x) - rhs) / rhs
        ca, cb, cg = math.cosh(al), math.cosh(be), math.cosh(g)
        sd2 = math.sinh(self.d) ** 2
        rhs = (ca * ca + cb * cb + 2.0 * ca * cb * cg) / math.sinh(g) ** 2
        out["sinh2_d"] = abs(sd2 - rhs) / rhs
        alt = math.sinh(al) ** 2 * math.sinh(b) ** 2 - 1.0
        out["sinh2_d_legs"] = abs(sd2 - alt) / sd2
        # positive when the altitude bound is violated
        out["altitude_excess"] = max(0.0, math.sinh(self.h_alpha) - cg * cg / math.tanh(al))
        return out


@dataclass(frozen=True)
class Collar:
    """Collar of half-width ``w`` around a geodesic of length ``ell``."""

    ell: float
    w: float
    half: bool = False

    def __post_init__(self) -> None:
        _positive("ell", self.ell)
        _positive("w", self.w)

    @classmethod
    def standard(cls, ell: float, half: bool = False) -> "Collar":
        return cls(ell, collar_width(ell), half)

    @property
    def area(self) -> float:
        """Area of the collar (one side only when ``half``)."""
        full = collar_area(self.ell, self.w)
        return full / 2.0 if self.half else full


def trirectangle_solve(a: float, b: float) -> Trirectangle:
    """Complete a trirectangle from its two sides adjacent to the right-angle vertex opposite the acute one."""
    _positive("a", a)
    _positive("b", b)
    t = math.cosh(b) * math.tanh(a)
    t_other = math.cosh(a) * math.tanh(b)
    if t >= 1.0 or t_other >= 1.0:
        raise GeometryInfeasible(
            f"no trirectangle with sides a={a}, b={b}: cosh(b)tanh(a)={t:.6g}, cosh(a)tanh(b)={t_other:.6g}"
        )
    alpha = math.atanh(t)
    beta = _acosh(math.sinh(alpha) / math.sinh(a))
    return Trirectangle(a, b, alpha, beta)


def pentagon_from_legs(a: float, b: float) -> Pentagon:
    """Right-angled pentagon determined by two adjacent sides."""
    _positive("a", a)
    _positive("b", b)
    legs = math.sinh(a) * math.sinh(b)
    if legs <= 1.0:
        raise GeometryInfeasible(f"sinh(a)sinh(b) = {legs:.6g} <= 1, no right-angled pentagon")
    c = _acosh(legs)
    sc = math.sinh(c)
    alpha = math.asinh(math.cosh(a) / sc)
    beta = math.asinh(math.cosh(b) / sc)
    return Pentagon(a, b, alpha, c, beta)


def _opposite_side(p: float, q: float, r: float) -> float:
    """Side between q and r in the hexagon whose alternating triple is (p, q, r)."""
    num = math.cosh(p) + math.cosh(q) * math.cosh(r)
    return _acosh(num / (math.sinh(q) * math.sinh(r)))


def hexagon_perpendicular(alpha: float, beta: float, gamma: float) -> float:
    """Length of the common perpendicular from side gamma to the opposite side.

    The triple (gamma, alpha, beta) is one alternating triple of the hexagon.
    """
    ca, cb, cg = math.cosh(alpha), math.cosh(beta), math.cosh(gamma)
    s2 = (ca * ca + cb * cb + 2.0 * ca * cb * cg) / math.sinh(gamma) ** 2
    return math.asinh(math.sqrt(s2))


def hexagon_solve(a: float, b: float, c: float) -> Hexagon:
    """Right-angled hexagon with alternating sides a, b, c."""
    for name, x in (("a", a), ("b", b), ("c", c)):
        _positive(name, x)
    gamma = _opposite_side(c, a, b)
    alpha = _opposite_side(a, b, c)
    beta = _opposite_side(b, c, a)
    d = hexagon_perpendicular(alpha, beta, gamma)
    h_alpha = math.asinh(1.0 / (math.tanh(alpha) * math.tanh(b) * math.tanh(d)))
    return Hexagon(a, gamma, b, alpha, c, beta, d, h_alpha)


def hexagon_rotate(h: Hexagon) -> Hexagon:
    """Relabel by one cyclic step of the alternating triple, (a, b, c) -> (b, c, a)."""
    return hexagon_solve(h.b, h.c, h.a)


def pants_perpendiculars(l_alpha: float, l_beta: float, l_gamma: float) -> tuple[float, float, float]:
    """Seam lengths of a pair of pants with the given boundary lengths.

    Returns the common perpendiculars between the boundary pairs
    (alpha, beta), (beta, gamma) and (gamma, alpha), in that order.
    """
    for name, x in (("l_alpha", l_alpha), ("l_beta", l_beta), ("l_gamma", l_gamma)):
        _positive(name, x)
    h = hexagon_solve(l_alpha / 2.0, l_beta / 2.0, l_gamma / 2.0)
    return (h.gamma, h.alpha, h.beta)


def collar_width(ell: float) -> float:
    """Half-width of the standard embedded collar around a geodesic of length ell."""
    _positive("ell", ell)
    return math.asinh(1.0 / math.sinh(ell / 2.0))


def collar_area(ell: float, w: float) -> float:
    """Area 2*ell*sinh(w) of a full collar of half-width w."""
    return 2.0 * ell * math.sinh(w)


def crossing_length_bound(ell: float) -> float:
    """Lower bound on the length of a closed geodesic that crosses a geodesic of length ell."""
    return 2.0 * collar_width(ell)
