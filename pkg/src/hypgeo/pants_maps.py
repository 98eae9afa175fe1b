"""Explicit maps between right-angled pentagons, hexagons and pairs of pants.

A right-angled pentagon with consecutive sides ``alpha, b, gamma, d, c``
is placed in Fermi coordinates ``(u, v)`` along the side ``d``: the ends
of ``d`` sit at ``(0, 0)`` and ``(d, 0)``, side ``c`` rises from
``u = 0`` and side ``gamma`` from ``u = d``.  The hyperbolic metric is
``cosh^2(v) du^2 + dv^2`` and the pentagon is ``0 <= v <= h(u)`` where the
altitude ``h`` follows side ``alpha`` up to its foot ``u0`` and side
``b`` after it.

Two pentagons with the same ``alpha`` are matched by scaling
``tanh u`` and ``tanh v`` (:func:`pentagon_map`).  Hexagons are cut
along the common perpendicular of two opposite sides into two such
pentagons, and a pair of pants is two isometric hexagons.  The module
evaluates the maps, their exact Jacobians, and certifies the
metric-distortion inequalities on grids.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import AdmissibilityFailed, CertificationFailed, DomainError, GeometryInconsistent
from .hyptrig import hexagon_perpendicular

__all__ = [
    "FermiPentagon",
    "DistortionReport",
    "EstimateCheck",
    "TraceCheck",
    "HexagonFrame",
    "Pants",
    "fermi_pentagon",
    "perturbed_pentagon",
    "pentagon_map",
    "pentagon_jacobian",
    "metric_ratio_extremes",
    "side_perturbation",
    "distortion_constant",
    "certify_pentagon_map",
    "pentagon_estimate_checks",
    "boundary_trace_check",
    "hexagon_frame",
    "hexagon_map",
    "hexagon_admissibility",
    "certify_hexagon_map",
    "pants_map",
    "pants_admissibility",
    "lipschitz_estimate",
    "distortion_grid",
]

ASINH1 = math.asinh(1.0)
PENTAGON_CONSTANT = 54.0
HEXAGON_CONSTANT = 1350.0
PANTS_CONSTANT = 450.0


# -- pentagons -----------------------------------------------------------------


@dataclass(frozen=True)
class FermiPentagon:
    """Right-angled pentagon with consecutive sides alpha, b, gamma, d, c in Fermi coordinates along d."""

    alpha: float
    b: float
    gamma: float
    d: float
    c: float
    u0: float
    h0: float

    def sides(self) -> tuple[float, float, float, float, float]:
        return (self.alpha, self.b, self.gamma, self.d, self.c)

    def _left(self, u, branch):
        u = np.asarray(u, dtype=float)
        if branch is None:
            return u <= self.u0
        if branch == "left":
            return np.ones_like(u, dtype=bool)
        if branch == "right":
            return np.zeros_like(u, dtype=bool)
        raise DomainError(f"branch must be 'left', 'right' or None, got {branch!r}")

    def tanh_altitude(self, u, branch: str | None = None):
        """tanh h(u); points exactly at the foot u0 use the left branch unless told otherwise."""
        u = np.asarray(u, dtype=float)
        left = self._left(u, branch)
        out = np.where(left, np.cosh(u) * math.tanh(self.c), np.cosh(self.d - u) * math.tanh(self.gamma))
        return float(out) if out.ndim == 0 else out

    def altitude(self, u, branch: str | None = None):
        """Distance h(u) from (u, 0) to the far boundary along the perpendicular to d."""
        t = np.asarray(self.tanh_altitude(u, branch))
        out = np.arctanh(t)
        return float(out) if out.ndim == 0 else out

    def dtanh_altitude(self, u, branch: str | None = None):
        """Derivative of tanh h with respect to u on the chosen branch."""
        u = np.asarray(u, dtype=float)
        left = self._left(u, branch)
        t = np.asarray(self.tanh_altitude(u, branch))
        out = np.where(left, np.tanh(u) * t, -np.tanh(self.d - u) * t)
        return float(out) if out.ndim == 0 else out

    def boundary_arclength(self, u):
        """Arclength along side alpha, measured from its corner with c, of the point above (u, 0)."""
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u > self.u0 * (1 + 1e-14)):
            raise DomainError("side alpha lies above 0 <= u <= u0")
        out = np.arctanh(np.minimum(math.cosh(self.c) * np.tanh(u), 1.0))
        return float(out) if out.ndim == 0 else out

    def residuals(self) -> dict[str, float]:
        """Relative defects of the pentagon identities and of the foot relation."""
        al, b, g, d, c = self.sides()
        sh, ch = math.sinh, math.cosh
        out = {}
        for name, x, p, q in (
            ("cosh_alpha", al, g, d),
            ("cosh_b", b, d, c),
            ("cosh_gamma", g, c, al),
            ("cosh_d", d, al, b),
            ("cosh_c", c, b, g),
        ):
            out[name] = abs(ch(x) - sh(p) * sh(q)) / ch(x)
        out["foot"] = abs(math.tanh(self.u0) - math.tanh(al) ** 2 * math.tanh(d))
        left = math.cosh(self.u0) * math.tanh(c)
        right = math.cosh(d - self.u0) * math.tanh(g)
        out["altitude_continuity"] = abs(math.atanh(left) - math.atanh(right))
        return out

    def contains(self, u, v, tol: float = 1e-12) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        inside_u = (u >= -tol) & (u <= self.d + tol)
        uc = np.clip(u, 0.0, self.d)
        return inside_u & (v >= -tol) & (v <= np.asarray(self.altitude(uc)) + tol)


def fermi_pentagon(alpha: float, d: float, c: float | None = None, gamma: float | None = None, tol: float = 1e-8) -> FermiPentagon:
    """Pentagon determined by the side alpha and the opposite base d.

    Optional ``c`` and ``gamma`` are checked against the values implied by
    ``alpha`` and ``d``; GeometryInconsistent is raised if they disagree by
    more than ``tol`` (relative).
    """
    for name, x in (("alpha", alpha), ("d", d)):
        if not (x > 0 and math.isfinite(x)):
            raise DomainError(f"{name} must be a positive length, got {x!r}")
    g = math.asinh(math.cosh(alpha) / math.sinh(d))
    cc = math.asinh(math.cosh(g) / math.sinh(alpha))
    b = math.asinh(math.cosh(d) / math.sinh(alpha))
    for name, given, implied in (("c", c, cc), ("gamma", gamma, g)):
        if given is not None and abs(given - implied) > tol * max(1.0, implied):
            raise GeometryInconsistent(f"{name}={given!r} but alpha, d force {implied!r}")
    u0 = math.atanh(math.tanh(alpha) ** 2 * math.tanh(d))
    h0 = math.atanh(math.cosh(u0) * math.tanh(cc))
    return FermiPentagon(alpha, b, g, d, cc, u0, h0)


def perturbed_pentagon(p: FermiPentagon, sinh_ratio: float) -> FermiPentagon:
    """Pentagon with the same alpha whose base satisfies sinh d' = sinh_ratio * sinh d."""
    if sinh_ratio <= 0:
        raise DomainError("sinh ratio must be positive")
    return fermi_pentagon(p.alpha, math.asinh(sinh_ratio * math.sinh(p.d)))


def side_perturbation(p: FermiPentagon, q: FermiPentagon) -> float:
    """delta_d = |sinh d'/sinh d - 1|."""
    return abs(math.sinh(q.d) / math.sinh(p.d) - 1.0)


def distortion_constant(p: FermiPentagon, q: FermiPentagon) -> tuple[float, float, float]:
    """(delta_d, h_bar, delta0) with delta0 = 54 exp(2 h_bar) sqrt(delta_d)."""
    dd = side_perturbation(p, q)
    hb = max(p.h0, q.h0)
    return dd, hb, PENTAGON_CONSTANT * math.exp(2.0 * hb) * math.sqrt(dd)


def _same_alpha(p: FermiPentagon, q: FermiPentagon) -> None:
    if abs(p.alpha - q.alpha) > 1e-12 * max(1.0, p.alpha):
        raise DomainError(f"pentagon map needs equal sides alpha, got {p.alpha!r} and {q.alpha!r}")


def pentagon_map(p: FermiPentagon, q: FermiPentagon, u, v, branch: str | None = None):
    """Image (u', v') of the point (u, v) of p in q.

    ``tanh u' / tanh d' = tanh u / tanh d`` and
    ``tanh v' / tanh h'(u') = tanh v / tanh h(u)``.
    """
    _same_alpha(p, q)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if not np.all(p.contains(u, v)):
        raise DomainError("point outside the source pentagon")
    u = np.clip(u, 0.0, p.d)
    v = np.maximum(v, 0.0)
    up = np.arctanh(np.tanh(u) * (math.tanh(q.d) / math.tanh(p.d)))
    left = p._left(u, branch)
    br = np.where(left, 1, 0)
    th = np.where(br, np.asarray(p.tanh_altitude(u, "left")), np.asarray(p.tanh_altitude(u, "right")))
    thp = np.where(br, np.asarray(q.tanh_altitude(up, "left")), np.asarray(q.tanh_altitude(up, "right")))
    vp = np.arctanh(np.minimum(np.tanh(v) * thp / th, thp))
    if up.ndim == 0:
        return float(up), float(vp)
    return up, vp


def pentagon_jacobian(p: FermiPentagon, q: FermiPentagon, u, v, branch: str | None = None) -> dict:
    """Exact partial derivatives of the pentagon map at (u, v).

    Returns the image coordinates and ``du_du``, ``dv_dv``, ``dv_du``
    (``du'/dv`` vanishes identically), plus ``altitude_ratio`` =
    tanh h'/tanh h and its u-derivative ``altitude_ratio_du``.
    """
    _same_alpha(p, q)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    T, Tq = math.tanh(p.d), math.tanh(q.d)
    k = Tq / T
    # everything is written through t = tanh u so that equal pentagons give exactly 1
    t = np.tanh(u)
    up = np.arctanh(t * k)
    du_du = k * (1.0 - t * t) / (1.0 - (k * t) ** 2)
    left = p._left(u, branch)
    # ratio R = tanh h'(u') / tanh h(u) and its derivative, branch by branch
    cosh_u_ratio = np.sqrt((1.0 - t * t) / (1.0 - (k * t) ** 2))
    R_left = cosh_u_ratio * (math.tanh(q.c) / math.tanh(p.c))
    comp = 1.0 - T * t
    comp_q = 1.0 - Tq * k * t
    R_right = (math.cosh(q.d) * comp_q) / (math.cosh(p.d) * comp) * cosh_u_ratio * (math.tanh(q.gamma) / math.tanh(p.gamma))
    R = np.where(left, R_left, R_right)
    dR_left = R_left * (k * t * du_du - t)
    tanh_comp = (T - t) / comp
    tanh_comp_q = (Tq - k * t) / comp_q
    dR_right = R_right * (tanh_comp - tanh_comp_q * du_du)
    dR = np.where(left, dR_left, dR_right)
    tv = np.tanh(v)
    s = tv * R
    vp = np.arctanh(s)
    cosh2_ratio = (1.0 - tv * tv) / (1.0 - s * s)
    dv_dv = R * cosh2_ratio
    dv_du = dR * tv / (1.0 - s * s)
    return {
        "u_image": up,
        "v_image": vp,
        "du_du": du_du,
        "dv_dv": dv_dv,
        "dv_du": dv_du,
        "altitude_ratio": R,
        "altitude_ratio_du": dR,
        "cosh2_ratio": cosh2_ratio,
    }


def metric_ratio_extremes(du_du, dv_dv, dv_du, v, cosh2_ratio):
    """Extreme eigenvalues of the pulled-back Fermi metric relative to the source Fermi metric.

    With J = [[du'/du, 0], [dv'/du, dv'/dv]], the pulled-back metric is
    ``J^T diag(cosh^2 v', 1) J`` and the source metric ``diag(cosh^2 v, 1)``;
    ``cosh2_ratio`` is cosh^2 v' / cosh^2 v.
    """
    ch = np.cosh(v)
    m11 = du_du**2 * cosh2_ratio + (dv_du / ch) ** 2
    m12 = dv_du * dv_dv / ch
    m22 = dv_dv**2
    mid = 0.5 * (m11 + m22)
    rad = np.sqrt(0.25 * (m11 - m22) ** 2 + m12**2)
    return mid + rad, mid - rad


@dataclass(frozen=True)
class DistortionReport:
    """Outcome of a grid certification of one pentagon map."""

    ratio_max: float
    ratio_min: float
    cross_max: float
    delta_d: float
    bound: float
    h_bar: float
    certified: bool
    margins: dict
    worst_points: dict
    points: int
    one_sided_at_foot: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _pentagon_grid(p: FermiPentagon, grid_n: int, boundary_n: int):
    """Grid points of p: a (u, v/h(u)) lattice plus samples along all five sides."""
    s = np.linspace(0.0, 1.0, grid_n)
    uu = np.linspace(0.0, p.d, grid_n)
    U, S = np.meshgrid(uu, s, indexing="ij")
    V = S * np.asarray(p.altitude(U))
    per = max(boundary_n // 5, 2)
    ub = np.linspace(0.0, p.d, per)
    top = np.asarray(p.altitude(ub))
    side_c = np.linspace(0.0, p.c, per)
    side_g = np.linspace(0.0, p.gamma, per)
    bu = np.concatenate([ub, ub, np.zeros(per), np.full(per, p.d)])
    bv = np.concatenate([np.zeros(per), top, side_c, side_g])
    return np.concatenate([U.ravel(), bu]), np.concatenate([V.ravel(), bv])


def certify_pentagon_map(
    p: FermiPentagon,
    q: FermiPentagon,
    grid_n: int = 200,
    boundary_n: int = 1000,
    tol: float = 1e-12,
    raise_on_failure: bool = True,
) -> DistortionReport:
    """Check the four distortion inequalities with delta0 = 54 exp(2 h_bar) sqrt(delta_d) on a grid.

    The inequalities are that (du'/du)^2, (dv'/dv)^2 and cosh^2 v'/cosh^2 v
    lie within delta0^2/9 of 1 and that (dv'/du)^2 <= delta0^2/9.
    Raises AdmissibilityFailed when delta0 > 1 and CertificationFailed at
    the first violated inequality (unless ``raise_on_failure`` is False).
    """
    _same_alpha(p, q)
    dd, hb, d0 = distortion_constant(p, q)
    if d0 > 1.0:
        raise AdmissibilityFailed(f"54 e^(2 h_bar) sqrt(delta_d) = {d0:.6g} > 1")
    U, V = _pentagon_grid(p, grid_n, boundary_n)
    jac = pentagon_jacobian(p, q, U, V)
    band = d0 * d0 / 9.0
    quantities = {
        "du_du_squared": jac["du_du"] ** 2,
        "dv_dv_squared": jac["dv_dv"] ** 2,
        "cosh2_ratio": jac["cosh2_ratio"],
    }
    margins = {}
    worst = {}
    for name, x in quantities.items():
        m = band - np.abs(x - 1.0)
        k = int(np.argmin(m))
        margins[name] = float(m[k])
        worst[name] = (float(U[k]), float(V[k]))
    cross = jac["dv_du"] ** 2
    m = band - cross
    k = int(np.argmin(m))
    margins["cross_squared"] = float(m[k])
    worst["cross_squared"] = (float(U[k]), float(V[k]))
    lam_max, lam_min = metric_ratio_extremes(jac["du_du"], jac["dv_dv"], jac["dv_du"], V, jac["cosh2_ratio"])
    # the map is only piecewise smooth: evaluate both one-sided Jacobians on the foot line
    foot_v = np.linspace(0.0, p.h0, grid_n)
    foot_u = np.full_like(foot_v, p.u0)
    one_sided = {}
    for side in ("left", "right"):
        j2 = pentagon_jacobian(p, q, foot_u, foot_v, branch=side)
        hi, lo = metric_ratio_extremes(j2["du_du"], j2["dv_dv"], j2["dv_du"], foot_v, j2["cosh2_ratio"])
        one_sided[side] = {"ratio_max": float(np.max(hi)), "ratio_min": float(np.min(lo)), "cross_max": float(np.max(np.abs(j2["dv_du"])))}
        lam_max = np.concatenate([lam_max, hi])
        lam_min = np.concatenate([lam_min, lo])
        cm = band - j2["dv_du"] ** 2
        if float(np.min(cm)) < margins["cross_squared"]:
            margins["cross_squared"] = float(np.min(cm))
            worst["cross_squared"] = (p.u0, float(foot_v[int(np.argmin(cm))]))
    cross_max = max(float(np.max(np.abs(jac["dv_du"]))), *(o["cross_max"] for o in one_sided.values()))
    rmax, rmin = float(np.max(lam_max)), float(np.min(lam_min))
    certified = (
        all(v >= -tol for v in margins.values())
        and rmax <= 1 + d0 + tol
        and rmin >= 1 - d0 - tol
        and cross_max <= d0 / 3 + tol
    )
    report = DistortionReport(rmax, rmin, cross_max, dd, d0, hb, certified, margins, worst, int(U.size), one_sided)
    if raise_on_failure and not certified:
        name = min(margins, key=margins.get)
        raise CertificationFailed(
            f"inequality {name} fails by {-margins[name]:.3g} at {worst[name]}", point=worst[name], margin=margins[name]
        )
    return report


# -- intermediate estimates -------------------------------------------------------


@dataclass(frozen=True)
class EstimateCheck:
    """One intermediate estimate: observed range against the stated bounds when its precondition holds."""

    name: str
    observed_min: float
    observed_max: float
    lower: float | None
    upper: float | None
    max_delta: float
    applies: bool
    holds: bool


def pentagon_estimate_checks(p: FermiPentagon, q: FermiPentagon, grid_n: int = 80, tol: float = 1e-12) -> list[EstimateCheck]:
    """Evaluate every intermediate ratio estimate behind the distortion bound on a grid.

    Each check carries the largest delta_d for which it is claimed; checks
    whose precondition fails are reported with ``applies = False``.
    """
    _same_alpha(p, q)
    dd, hb, _ = distortion_constant(p, q)
    uu = np.linspace(0.0, p.d, grid_n)
    s = np.linspace(0.0, 1.0, grid_n)
    U, S = np.meshgrid(uu, s, indexing="ij")
    V = S * np.asarray(p.altitude(U))
    jac = pentagon_jacobian(p, q, U, V)
    up = jac["u_image"]
    interior = uu < p.d  # the complement ratios are 0/0 at u = d
    ju = pentagon_jacobian(p, q, uu, np.zeros_like(uu))
    uu_left = uu[uu <= p.u0]
    uu_right = uu[uu >= p.u0]
    dR_left = pentagon_jacobian(p, q, uu_left, np.zeros_like(uu_left), "left")["altitude_ratio_du"]
    dR_right = pentagon_jacobian(p, q, uu_right, np.zeros_like(uu_right), "right")["altitude_ratio_du"]
    upu = ju["u_image"]
    cosh_h = np.cosh(np.asarray(q.altitude(upu))) / np.cosh(np.asarray(p.altitude(uu)))
    e = math.exp(2.0 * hb)
    rows = [
        ("tanh_d_ratio", np.array([math.tanh(q.d) / math.tanh(p.d)]), 1 - dd, 1 + dd, math.inf),
        ("cosh_d_ratio", np.array([math.cosh(q.d) / math.cosh(p.d)]), 1 - dd, 1 + dd, math.inf),
        ("cosh_u_ratio", np.cosh(upu) / np.cosh(uu), 1 - dd, 1 + dd, 1.0),
        ("tanh_complement_ratio", np.tanh(q.d - upu[interior]) / np.tanh(p.d - uu[interior]), 1 - 2 * dd, 1 + 3 * dd, 1.0),
        ("cosh_complement_ratio", np.cosh(q.d - upu) / np.cosh(p.d - uu), 1 - dd, 1 + dd, 1.0),
        ("sinh_c_ratio", np.array([math.sinh(q.c) / math.sinh(p.c)]), 1 - dd, 1 + 2 * dd, 0.5),
        ("sinh_gamma_ratio", np.array([math.sinh(q.gamma) / math.sinh(p.gamma)]), 1 - dd, 1 + 2 * dd, 0.5),
        ("tanh_altitude_ratio", ju["altitude_ratio"], 1 - 2 * dd, 1 + 4 * dd, 0.5),
        ("cosh_altitude_ratio", cosh_h, 1 - 3 * dd, 1 + 7 * dd, 0.2),
        ("cosh_v_ratio", np.sqrt(jac["cosh2_ratio"]), 1 - 3 * dd, 1 + 7 * dd, 0.2),
        ("du_du_squared", jac["du_du"] ** 2, 1 - 6 * dd, 1 + 11 * dd, 1 / 15),
        ("dv_dv_squared", jac["dv_dv"] ** 2, 1 - 18 * dd, 1 + 47 * dd, 1 / 735),
        ("altitude_ratio_du_left", np.abs(dR_left), None, 14 * dd, 1 / 15),
        ("altitude_ratio_du_right", np.abs(dR_right), None, 18 * dd, 1 / 15),
        ("cross_derivative", np.abs(jac["dv_du"]), None, 18 * e * dd, 1 / 15),
        ("cosh2_v_ratio", jac["cosh2_ratio"], 1 - 16 * dd, 1 + 16 * dd, 1 / 49),
    ]
    out = []
    for name, x, lo, hi, cap in rows:
        x = np.asarray(x, dtype=float)
        xmin, xmax = (float(np.min(x)), float(np.max(x))) if x.size else (math.nan, math.nan)
        applies = dd <= cap
        ok = (lo is None or xmin >= lo - tol) and (hi is None or xmax <= hi + tol)
        out.append(EstimateCheck(name, xmin, xmax, lo, hi, cap, applies, bool(ok)))
    return out


@dataclass(frozen=True)
class TraceCheck:
    """Whether the map preserves arclength along side alpha, with the largest defect seen."""

    ok: bool
    max_arclength_defect: float
    max_identity_defect: float
    worst_u: float

    def __bool__(self) -> bool:
        return self.ok


def boundary_trace_check(p: FermiPentagon, q: FermiPentagon, n: int = 200, tol: float = 1e-10) -> TraceCheck:
    """Compare arclength along alpha at (u, h(u)) with arclength along alpha' at the image point.

    Both arclengths are computed from their own pentagon; the map is the
    identity on alpha exactly when they agree.  Sides alpha need not match
    here, so a mismatched pair returns a failing result instead of raising.
    """
    k = math.tanh(q.d) / math.tanh(p.d)
    u = np.linspace(0.0, p.u0, n)
    up = np.arctanh(np.tanh(u) * k)
    up = np.minimum(up, q.u0)
    s = np.asarray(p.boundary_arclength(u))
    sp = np.asarray(q.boundary_arclength(up))
    defect = np.abs(s - sp)
    ident = np.abs(np.tanh(s) * math.tanh(p.alpha) - np.tanh(sp) * math.tanh(q.alpha))
    i = int(np.argmax(defect))
    m = float(defect[i])
    return TraceCheck(m <= tol, m, float(np.max(ident)), float(u[i]))


# -- hexagons ------------------------------------------------------------------


@dataclass(frozen=True)
class HexagonFrame:
    """Right-angled hexagon with alternating sides alpha, beta, gamma, cut along the perpendicular d.

    ``d`` joins gamma to the opposite side; ``P_alpha`` is the pentagon
    containing alpha (drawn at v >= 0) and ``P_beta`` the one containing
    beta (drawn at v <= 0).
    """

    alpha: float
    beta: float
    gamma: float
    d: float
    P_alpha: FermiPentagon
    P_beta: FermiPentagon


@lru_cache(maxsize=4096)
def hexagon_frame(alpha: float, beta: float, gamma: float) -> HexagonFrame:
    d = hexagon_perpendicular(alpha, beta, gamma)
    return HexagonFrame(alpha, beta, gamma, d, fermi_pentagon(alpha, d), fermi_pentagon(beta, d))


@lru_cache(maxsize=4096)
def hexagon_admissibility(h: HexagonFrame, h2: HexagonFrame, ell: float | None = None) -> dict:
    """Check the hypotheses of the hexagon map and return the derived constants.

    Needs equal alpha and beta, both at least arcsinh 1, gamma and gamma'
    at most ell, and 1350 e^(5 ell) sqrt(delta_gamma) <= 1.  The returned
    dictionary also records delta_d and the pentagon-level constants.
    """
    if abs(h.alpha - h2.alpha) > 1e-12 * h.alpha or abs(h.beta - h2.beta) > 1e-12 * h.beta:
        raise DomainError("hexagon map needs equal sides alpha and beta")
    if min(h.alpha, h.beta) < ASINH1:
        raise AdmissibilityFailed(f"alpha, beta must be >= arcsinh 1, got {h.alpha}, {h.beta}")
    ell = max(h.gamma, h2.gamma) if ell is None else ell
    if max(h.gamma, h2.gamma) > ell:
        raise AdmissibilityFailed(f"gamma sides exceed ell = {ell}")
    dg = abs(h.gamma / h2.gamma - 1.0)
    const = HEXAGON_CONSTANT * math.exp(5.0 * ell) * math.sqrt(dg)
    if const > 1.0:
        raise AdmissibilityFailed(f"1350 e^(5 ell) sqrt(delta_gamma) = {const:.6g} > 1")
    dd = side_perturbation(h.P_alpha, h2.P_alpha)
    pent = {
        "alpha": distortion_constant(h.P_alpha, h2.P_alpha)[2],
        "beta": distortion_constant(h.P_beta, h2.P_beta)[2],
    }
    return {
        "ell": ell,
        "delta_gamma": dg,
        "delta_d": dd,
        "delta_d_bound": math.cosh(ell) * dg,
        "constant": const,
        "pentagon_constants": pent,
    }


def hexagon_map(h: HexagonFrame, h2: HexagonFrame, point, ell: float | None = None):
    """Image of a point (u, v) of hexagon h in hexagon h2; v >= 0 is the alpha half, v < 0 the beta half."""
    hexagon_admissibility(h, h2, ell)
    u, v = point
    if v >= 0:
        return pentagon_map(h.P_alpha, h2.P_alpha, u, v)
    up, vp = pentagon_map(h.P_beta, h2.P_beta, u, -v)
    return up, -vp


def certify_hexagon_map(h: HexagonFrame, h2: HexagonFrame, ell: float | None = None, grid_n: int = 100) -> dict:
    """Certify both pentagon halves and report the hexagon-level constants."""
    info = dict(hexagon_admissibility(h, h2, ell))
    info["alpha_half"] = certify_pentagon_map(h.P_alpha, h2.P_alpha, grid_n).to_dict()
    info["beta_half"] = certify_pentagon_map(h.P_beta, h2.P_beta, grid_n).to_dict()
    return info


# -- pants ---------------------------------------------------------------------


@dataclass(frozen=True)
class Pants:
    """Pair of pants given by its boundary lengths; it is two copies of one right-angled hexagon."""

    l_alpha: float
    l_beta: float
    l_gamma: float

    def __post_init__(self) -> None:
        for name in ("l_alpha", "l_beta", "l_gamma"):
            x = getattr(self, name)
            if not (x > 0 and math.isfinite(x)):
                raise DomainError(f"{name} must be a positive length, got {x!r}")

    @property
    def hexagon(self) -> HexagonFrame:
        return hexagon_frame(self.l_alpha / 2.0, self.l_beta / 2.0, self.l_gamma / 2.0)


def pants_admissibility(P: Pants, P2: Pants, ell: float | None = None) -> dict:
    """Check the hypotheses of the pants map and the pentagon-level bound its halves rely on.

    Needs equal alpha and beta boundaries of length at least 2 arcsinh 1,
    gamma boundaries at most ell, 450 e^(5 ell) sqrt(delta) <= 1, and
    54 e^(2 h_bar) sqrt(delta_d) <= 1 for all four pentagon pieces.
    """
    if abs(P.l_alpha - P2.l_alpha) > 1e-12 * P.l_alpha or abs(P.l_beta - P2.l_beta) > 1e-12 * P.l_beta:
        raise DomainError("pants map needs equal alpha and beta boundary lengths")
    if min(P.l_alpha, P.l_beta) < 2 * ASINH1:
        raise AdmissibilityFailed("alpha and beta boundaries must be at least 2 arcsinh 1 long")
    ell = max(P.l_gamma, P2.l_gamma) if ell is None else ell
    if max(P.l_gamma, P2.l_gamma) > ell:
        raise AdmissibilityFailed(f"gamma boundaries exceed ell = {ell}")
    delta = abs(P.l_gamma / P2.l_gamma - 1.0)
    const = PANTS_CONSTANT * math.exp(5.0 * ell) * math.sqrt(delta)
    if const > 1.0:
        raise AdmissibilityFailed(f"450 e^(5 ell) sqrt(delta) = {const:.6g} > 1")
    h, h2 = P.hexagon, P2.hexagon
    pent = {
        "alpha": distortion_constant(h.P_alpha, h2.P_alpha)[2],
        "beta": distortion_constant(h.P_beta, h2.P_beta)[2],
    }
    worst = max(pent.values())
    if worst > 1.0:
        raise AdmissibilityFailed(f"pentagon-level constant {worst:.6g} > 1 although the pants condition holds")
    return {"ell": ell, "delta": delta, "constant": const, "pentagon_constants": pent}


def pants_map(P: Pants, P2: Pants, point, ell: float | None = None):
    """Image of a point (k, u, v) of pants P in pants P2; k in {0, 1} selects the hexagon copy."""
    pants_admissibility(P, P2, ell)
    k, u, v = point
    if k not in (0, 1):
        raise DomainError("hexagon index must be 0 or 1")
    h, h2 = P.hexagon, P2.hexagon
    if v >= 0:
        up, vp = pentagon_map(h.P_alpha, h2.P_alpha, u, v)
    else:
        up, vp = pentagon_map(h.P_beta, h2.P_beta, u, -v)
        vp = -vp
    return k, up, vp


# -- generic estimates -----------------------------------------------------------


def lipschitz_estimate(
    fn: Callable,
    domain,
    grid_n: int = 100,
    jacobian: Callable | None = None,
    step: float = 1e-6,
) -> tuple[float, float]:
    """Largest and smallest singular values of the differential of a map between Fermi charts.

    ``fn(u, v) -> (u', v')`` acts on arrays.  ``domain`` is either a
    FermiPentagon (grid over 0 <= v <= h(u)) or a rectangle
    ``(u_lo, u_hi, v_lo, v_hi)``.  Without ``jacobian`` (returning
    du'/du, du'/dv, dv'/du, dv'/dv) central differences with the given
    step are used.  Lengths are measured in the metric cosh^2 v du^2 + dv^2
    on both sides.
    """
    if isinstance(domain, FermiPentagon):
        # difference stencils must stay inside the pentagon
        m = 0.0 if jacobian is not None else 50.0 * step
        uu = np.linspace(m, domain.d - m, grid_n)
        s = np.linspace(0.0, 1.0, grid_n)
        U, S = np.meshgrid(uu, s, indexing="ij")
        V = m + S * (np.asarray(domain.altitude(U)) - 2.0 * m)
    else:
        u_lo, u_hi, v_lo, v_hi = domain
        U, V = np.meshgrid(np.linspace(u_lo, u_hi, grid_n), np.linspace(v_lo, v_hi, grid_n), indexing="ij")
    U, V = U.ravel(), V.ravel()
    up, vp = (np.asarray(x, dtype=float) for x in fn(U, V))
    if jacobian is not None:
        a, b, c, e = (np.asarray(x, dtype=float) for x in jacobian(U, V))
    else:
        upu, vpu = fn(U + step, V)
        umu, vmu = fn(U - step, V)
        upv, vpv = fn(U, V + step)
        umv, vmv = fn(U, V - step)
        a = (np.asarray(upu) - np.asarray(umu)) / (2 * step)
        c = (np.asarray(vpu) - np.asarray(vmu)) / (2 * step)
        b = (np.asarray(upv) - np.asarray(umv)) / (2 * step)
        e = (np.asarray(vpv) - np.asarray(vmv)) / (2 * step)
    # orthonormal frames: (cosh v du, dv) at the source and (cosh v' du', dv') at the target
    ch, chp = np.cosh(V), np.cosh(vp)
    m11, m12 = chp * a / ch, chp * b
    m21, m22 = c / ch, e
    # singular values of [[m11, m12], [m21, m22]]
    t = m11**2 + m12**2 + m21**2 + m22**2
    det = np.abs(m11 * m22 - m12 * m21)
    root = np.sqrt(np.maximum(t * t / 4 - det**2, 0.0))
    smax = np.sqrt(t / 2 + root)
    smin = det / smax
    return float(np.max(smax)), float(np.min(smin))


def distortion_grid(p: FermiPentagon, q: FermiPentagon, grid_n: int = 60) -> dict:
    """Arrays u, v and the largest metric ratio at each point, for heat maps."""
    uu = np.linspace(0.0, p.d, grid_n)
    s = np.linspace(0.0, 1.0, grid_n)
    U, S = np.meshgrid(uu, s, indexing="ij")
    V = S * np.asarray(p.altitude(U))
    jac = pentagon_jacobian(p, q, U, V)
    hi, lo = metric_ratio_extremes(jac["du_du"], jac["dv_dv"], jac["dv_du"], V, jac["cosh2_ratio"])
    return {"u": U, "v": V, "ratio_max": hi, "ratio_min": lo}
