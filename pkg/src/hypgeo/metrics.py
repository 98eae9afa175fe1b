"""Rotationally symmetric conformal densities on the disk and their curvature.

A radial metric is ``h(rho)^2 (d rho^2 + sinh^2 rho d theta^2)`` in hyperbolic
polar coordinates ``rho = 2 artanh |z|``.  Three densities are provided in
closed form together with their first two derivatives:

* the complete metric of the punctured disk;
* the complete metric of the round annulus ``R1 < |z| < R2``;
* a smooth blend of the two, pinched to curvature ``-1 +- delta``.

Annulus radii are carried as logarithms because the outer radius used by
the blend is ``1 - t^3`` for tiny ``t`` and rounds to 1 in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import expit

from .errors import CurvatureOutOfBand, DomainError, SearchExhausted

__all__ = [
    "RadialMetric",
    "AnnulusSpec",
    "IntermediateMetricSpec",
    "cutoff",
    "cutoff_constants",
    "density_punctured_disk",
    "density_annulus",
    "punctured_disk_metric",
    "annulus_metric",
    "constant_metric",
    "custom_metric",
    "gaussian_curvature",
    "curvature_from_jet",
    "transition_radius_grid",
    "choose_transition",
    "intermediate_metric",
    "certify_curvature",
    "cusp_radius",
    "horocycle_distance",
    "large_cusp_collar_width",
    "large_cusp_width_threshold",
    "outer_collar_constant",
    "profile_table",
]

Jet = tuple[np.ndarray, np.ndarray, np.ndarray]


def _log_tanh_half(rho):
    """log(tanh(rho/2)) = -2 artanh(exp(-rho)), accurate for large rho."""
    return -2.0 * np.arctanh(np.exp(-np.asarray(rho, dtype=float)))


def _rho_of_log_radius(log_r: float) -> float:
    """Polar radius 2 artanh(r) given log r (r <= 1 gives rho <= inf)."""
    if log_r >= 0.0:
        return math.inf
    r = math.exp(log_r)
    one_minus = -math.expm1(log_r)
    return math.log((1.0 + r) / one_minus)


@dataclass(frozen=True)
class RadialMetric:
    """Radial density on the open interval ``(lo, hi)`` of polar radii.

    ``jet`` maps an array of radii to ``(h, dh/drho, d2h/drho2)``.  A
    metric built from a bare density has ``jet=None`` and is differentiated
    numerically.
    """

    kind: str
    lo: float
    hi: float
    density_fn: Callable[[np.ndarray], np.ndarray]
    jet: Callable[[np.ndarray], Jet] | None = None
    params: dict = field(default_factory=dict)

    def check(self, rho, *, closed: bool = False) -> np.ndarray:
        r = np.asarray(rho, dtype=float)
        if closed:
            ok = (r >= self.lo) & (r <= self.hi)
        else:
            ok = (r > self.lo) & (r < self.hi)
        if not np.all(ok):
            bad = r[~ok] if r.ndim else r
            raise DomainError(f"{self.kind}: radius {bad!r} outside ({self.lo}, {self.hi})")
        return r

    def __call__(self, rho):
        return self.density_fn(self.check(rho))

    def derivatives(self, rho) -> Jet:
        r = self.check(rho)
        if self.jet is not None:
            return self.jet(r)
        return _fd_jet(self.density_fn, r)


def _fd_jet(f, r, step: float = 1e-3) -> Jet:
    # fourth-order central differences (Richardson combination of steps h and 2h)
    h = step
    f0 = f(r)
    fp1, fm1 = f(r + h), f(r - h)
    fp2, fm2 = f(r + 2 * h), f(r - 2 * h)
    d1 = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h)
    d2 = (16.0 * (fp1 + fm1) - (fp2 + fm2) - 30.0 * f0) / (12.0 * h * h)
    return f0, d1, d2


# -- punctured disk ------------------------------------------------------------

def _punctured_jet(rho) -> Jet:
    rho = np.asarray(rho, dtype=float)
    L = 2.0 * np.arctanh(np.exp(-rho))  # log coth(rho/2)
    sh, ch = np.sinh(rho), np.cosh(rho)
    x = np.exp(-rho)
    # sinh(rho) * L = (1 - x^2) * atanh(x) / x, kept accurate as x -> 0
    ratio = np.where(x < 1e-4, 1.0 + x * x / 3.0 + x**4 / 5.0, np.arctanh(x) / np.where(x < 1e-4, 1.0, x))
    H = -np.expm1(-2.0 * rho) * ratio
    dH = ch * L - 1.0
    d2H = sh * L - ch / sh
    return _invert_jet(H, dH, d2H)


def _invert_jet(H, dH, d2H) -> Jet:
    h = 1.0 / H
    dh = -dH / H**2
    d2h = (2.0 * dH**2 - H * d2H) / H**3
    return h, dh, d2h


def density_punctured_disk(rho):
    """Complete hyperbolic density of the punctured unit disk."""
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("punctured-disk density needs rho > 0")
    out = _punctured_jet(r)[0]
    return float(out) if out.ndim == 0 else out


def punctured_disk_metric() -> RadialMetric:
    return RadialMetric(
        "punctured_disk", 0.0, math.inf, lambda r: _punctured_jet(r)[0], _punctured_jet
    )


# -- annulus -------------------------------------------------------------------

@dataclass(frozen=True)
class AnnulusSpec:
    """Round annulus ``R1 < |z| < R2`` inside the unit disk, stored by log radii."""

    log_r1: float
    log_r2: float

    def __post_init__(self) -> None:
        if not (self.log_r1 < self.log_r2 <= 0.0):
            raise DomainError(f"need 0 < R1 < R2 <= 1, got log radii {self.log_r1}, {self.log_r2}")

    @classmethod
    def from_radii(cls, r1: float, r2: float) -> "AnnulusSpec":
        if not (0.0 < r1 < r2 <= 1.0):
            raise DomainError(f"need 0 < R1 < R2 <= 1, got {r1}, {r2}")
        return cls(math.log(r1), math.log(r2))

    @classmethod
    def from_logs(cls, log_r1: float, log_r2: float) -> "AnnulusSpec":
        return cls(log_r1, log_r2)

    @property
    def R1(self) -> float:
        return math.exp(self.log_r1)

    @property
    def R2(self) -> float:
        return math.exp(self.log_r2)

    @property
    def modulus(self) -> float:
        """log(R2/R1)."""
        return self.log_r2 - self.log_r1

    @property
    def core_length(self) -> float:
        """Length of the closed geodesic at the middle of the annulus."""
        return 2.0 * math.pi**2 / self.modulus

    @property
    def rho_range(self) -> tuple[float, float]:
        return _rho_of_log_radius(self.log_r1), _rho_of_log_radius(self.log_r2)

    @property
    def core_rho(self) -> float:
        return _rho_of_log_radius(0.5 * (self.log_r1 + self.log_r2))


def _annulus_jet(spec: AnnulusSpec):
    lam = spec.modulus
    k = math.pi / lam

    def jet(rho) -> Jet:
        rho = np.asarray(rho, dtype=float)
        theta = k * (spec.log_r2 - _log_tanh_half(rho))
        sh, ch = np.sinh(rho), np.cosh(rho)
        s, c = np.sin(theta), np.cos(theta)
        H = sh * s / k
        dH = ch * s / k - c
        d2H = sh * s / k - c * ch / sh - k * s / sh
        return _invert_jet(H, dH, d2H)

    return jet


def annulus_metric(spec: AnnulusSpec) -> RadialMetric:
    jet = _annulus_jet(spec)
    lo, hi = spec.rho_range
    return RadialMetric("annulus", lo, hi, lambda r: jet(r)[0], jet, {"log_r1": spec.log_r1, "log_r2": spec.log_r2})


def density_annulus(spec: AnnulusSpec, rho):
    """Complete hyperbolic density of a round annulus."""
    m = annulus_metric(spec)
    out = m(rho)
    return float(out) if np.ndim(out) == 0 else out


# -- other metrics -------------------------------------------------------------

def constant_metric(value: float) -> RadialMetric:
    """Constant density; curvature is -1/value^2."""

    def jet(r):
        r = np.asarray(r, dtype=float)
        return np.full_like(r, value), np.zeros_like(r), np.zeros_like(r)

    return RadialMetric("custom", 0.0, math.inf, lambda r: jet(r)[0], jet, {"value": value})


def custom_metric(density: Callable[[np.ndarray], np.ndarray], lo: float, hi: float) -> RadialMetric:
    """Wrap an arbitrary positive density; derivatives are taken numerically."""
    return RadialMetric("custom", lo, hi, density)


# -- curvature -----------------------------------------------------------------

def curvature_from_jet(rho, h, dh, d2h):
    """Gaussian curvature of ``h^2 (d rho^2 + sinh^2 rho d theta^2)``."""
    rho = np.asarray(rho, dtype=float)
    g1 = dh / h
    g2 = d2h / h - g1**2
    return -(g2 + g1 / np.tanh(rho) + 1.0) / h**2


def gaussian_curvature(metric: RadialMetric, rho):
    h, dh, d2h = metric.derivatives(rho)
    out = curvature_from_jet(rho, h, dh, d2h)
    return float(out) if np.ndim(out) == 0 else out


# -- cut-off -------------------------------------------------------------------

def cutoff(x) -> Jet:
    """Smooth step exp(-1/x)/(exp(-1/x)+exp(-1/(1-x))) with two derivatives.

    Identically 0 for x <= 0 and 1 for x >= 1.
    """
    x = np.asarray(x, dtype=float)
    chi = np.where(x >= 1.0, 1.0, 0.0)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    # outside this window the step differs from 0/1 by less than exp(-500)
    mid = (x > 2e-3) & (x < 1.0 - 2e-3)
    xm = x[mid]
    g = 1.0 / xm - 1.0 / (1.0 - xm)
    dg = -1.0 / xm**2 - 1.0 / (1.0 - xm) ** 2
    d2g = 2.0 / xm**3 - 2.0 / (1.0 - xm) ** 3
    c = expit(-g)
    cc = c * expit(g)
    c1 = -cc * dg
    c2 = -c1 * (1.0 - 2.0 * c) * dg - cc * d2g
    chi[mid] = c
    d1[mid] = c1
    d2[mid] = c2
    chi = np.where((x > 0.0) & (x < 1.0) & ~mid, np.where(x < 0.5, 0.0, 1.0), chi)
    return chi, d1, d2


def cutoff_constants(samples: int = 200001) -> tuple[float, float]:
    """Measured sup |chi'| and sup |chi''| of the smooth step."""
    x = np.linspace(0.0, 1.0, samples)
    _, d1, d2 = cutoff(x)
    return float(np.max(np.abs(d1))), float(np.max(np.abs(d2)))


# -- transition search and the blended metric ---------------------------------

def _transition_t0(rho0: float) -> float:
    # 1 - tanh(rho0/2)
    return 2.0 / (math.exp(rho0) + 1.0)


def _outer_log_radius(rho0: float, fraction: float = 1.0) -> float:
    """log of 1 - fraction * t0^3; fraction 1 gives R(rho0), 0 gives 1."""
    t0 = _transition_t0(rho0)
    return math.log1p(-fraction * t0**3)


def transition_radius_grid(start: float = 2.0, ratio: float = 1.5, cap: float = 60.0) -> list[float]:
    grid = []
    r = start
    while r <= cap:
        grid.append(r)
        r *= ratio
    return grid


OUTER_FRACTIONS = (1.0, 0.75, 0.5, 0.25, 0.0)


def _density_jet_deviation(log_r1: float, rho0: float, samples: int = 401) -> float:
    """Largest of |h-1|, |h'|, |h''| for the annulus density over [rho0, rho0+1], worst outer radius."""
    rho = np.linspace(rho0, rho0 + 1.0, samples)
    worst = 0.0
    for frac in OUTER_FRACTIONS:
        spec = AnnulusSpec.from_logs(log_r1, _outer_log_radius(rho0, frac))
        h, dh, d2h = _annulus_jet(spec)(rho)
        worst = max(worst, float(np.max(np.abs(h - 1.0))), float(np.max(np.abs(dh))), float(np.max(np.abs(d2h))))
    return worst


def choose_transition(
    R1: float,
    delta: float,
    *,
    grid: list[float] | None = None,
    certify: bool = True,
) -> tuple[float, float]:
    """Smallest grid radius rho0 where the annulus density is delta-close to 1.

    Returns ``(rho0, log R(rho0))`` with ``R(rho0) = 1 - (1 - tanh(rho0/2))^3``.
    The closeness test bounds |h - 1|, |h'| and |h''| on ``[rho0, rho0 + 1]``
    for five outer radii between ``R(rho0)`` and 1.  With ``certify`` the
    search also demands that the blended metric built at ``rho0`` passes the
    curvature band check for every sampled outer radius.
    """
    if not (0.0 < R1 < 1.0):
        raise DomainError(f"R1 must lie in (0, 1), got {R1}")
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    log_r1 = math.log(R1)
    for rho0 in grid or transition_radius_grid():
        log_R = _outer_log_radius(rho0)
        if not math.tanh((rho0 + 1.0) / 2.0) < math.exp(log_R):
            continue
        if 2.0 * math.atanh(R1) >= rho0:
            continue
        if _density_jet_deviation(log_r1, rho0) > delta:
            continue
        if certify:
            try:
                for frac in OUTER_FRACTIONS:
                    spec = IntermediateMetricSpec(log_r1, _outer_log_radius(rho0, frac), rho0, delta)
                    intermediate_metric(spec)
            except CurvatureOutOfBand:
                continue
        return rho0, log_R
    raise SearchExhausted(f"no transition radius on the grid meets delta={delta} for R1={R1}")


@dataclass(frozen=True)
class IntermediateMetricSpec:
    """Data of the blended density; radii stored as logarithms."""

    log_r1: float
    log_r2: float
    rho0: float
    delta: float
    cutoff: Callable[[np.ndarray], Jet] = cutoff

    def __post_init__(self) -> None:
        if not math.tanh((self.rho0 + 1.0) / 2.0) < math.exp(self.log_r2):
            raise DomainError("blend zone must end inside the annulus: need tanh((rho0+1)/2) < R2")
        if not _rho_of_log_radius(self.log_r1) < self.rho0:
            raise DomainError("blend zone must start inside the annulus")

    @property
    def annulus(self) -> AnnulusSpec:
        return AnnulusSpec.from_logs(self.log_r1, self.log_r2)


def _blend_jet(spec: IntermediateMetricSpec):
    jr = _annulus_jet(spec.annulus)

    def jet(rho) -> Jet:
        rho = np.asarray(rho, dtype=float)
        hr, dhr, d2hr = jr(rho)
        ho, dho, d2ho = _punctured_jet(rho)
        c, dc, d2c = spec.cutoff(rho - spec.rho0)
        diff = ho - hr
        h = hr + c * diff
        dh = (1.0 - c) * dhr + c * dho + dc * diff
        d2h = (1.0 - c) * d2hr + c * d2ho + 2.0 * dc * (dho - dhr) + d2c * diff
        return h, dh, d2h

    return jet


def certification_grid(rho0: float, lo: float, hi: float, blend_points: int = 2000, plateau_points: int = 200) -> np.ndarray:
    """Uniform grid on the blend zone plus samples on each plateau."""
    blend = np.linspace(rho0, rho0 + 1.0, blend_points)
    left_lo = lo + 0.05 * (rho0 - lo)
    left = np.linspace(left_lo, rho0, plateau_points, endpoint=False)
    right_hi = min(hi, rho0 + 4.0)
    right = np.linspace(rho0 + 1.0, right_hi, plateau_points + 1)[1:]
    if math.isfinite(hi) and right_hi >= hi:
        right = right[:-1]
    return np.concatenate([left, blend, right])


def certify_curvature(metric: RadialMetric, rho: np.ndarray, delta: float) -> dict:
    """Curvature extremes on a grid and whether they stay in [-1-delta, -1+delta]."""
    K = curvature_from_jet(rho, *metric.derivatives(rho))
    worst = float(np.max(np.abs(K + 1.0)))
    return {
        "K_min": float(np.min(K)),
        "K_max": float(np.max(K)),
        "max_abs_dev": worst,
        "points": int(rho.size),
        "passed": worst <= delta,
    }


def intermediate_metric(spec: IntermediateMetricSpec, *, check: bool = True) -> RadialMetric:
    """Density equal to the annulus metric below rho0, the punctured-disk metric above rho0+1.

    With ``check`` the curvature is certified on a 2000-point blend grid
    plus plateau samples; failure raises :class:`CurvatureOutOfBand`.
    """
    jet = _blend_jet(spec)
    lo, hi = spec.annulus.rho_range
    metric = RadialMetric(
        "intermediate",
        lo,
        hi,
        lambda r: jet(r)[0],
        jet,
        {"log_r1": spec.log_r1, "log_r2": spec.log_r2, "rho0": spec.rho0, "delta": spec.delta},
    )
    if check:
        report = certify_curvature(metric, certification_grid(spec.rho0, lo, hi), spec.delta)
        if not report["passed"]:
            raise CurvatureOutOfBand(
                f"curvature deviates by {report['max_abs_dev']:.3g} > {spec.delta} (rho0={spec.rho0})"
            )
    return metric


# -- cusps ---------------------------------------------------------------------

def cusp_radius(l: float) -> float:
    """Euclidean radius exp(-2 pi / l) of the horocycle of length l in the punctured disk."""
    if l <= 0:
        raise DomainError("horocycle length must be positive")
    return math.exp(-2.0 * math.pi / l)


def horocycle_distance(l1: float, l2: float) -> float:
    """Distance between the horocycles of lengths l1 and l2 in one cusp."""
    if l1 <= 0 or l2 <= 0:
        raise DomainError("horocycle lengths must be positive")
    return abs(math.log(l1 / l2))


def large_cusp_collar_width(l: float, delta: float, eps0: float) -> float:
    """Half-collar width (1-delta)(log l - log(2 pi eps0) - 2 pi eps0) guaranteed by a cusp of length l."""
    if not (0.0 <= delta < 1.0 / 3.0):
        raise DomainError("delta must lie in [0, 1/3)")
    if eps0 <= 0:
        raise DomainError("eps0 must be positive")
    if l < 2.0 * math.pi * eps0:
        raise DomainError(f"cusp length {l} below 2*pi*eps0 = {2 * math.pi * eps0}")
    return (1.0 - delta) * (math.log(l) - math.log(2.0 * math.pi * eps0) - 2.0 * math.pi * eps0)


def large_cusp_width_threshold(eps0: float) -> float:
    """Cusp length above which the guaranteed width is positive."""
    return 2.0 * math.pi * eps0 * math.exp(2.0 * math.pi * eps0)


def outer_collar_constant(delta: float, eps0: float) -> dict:
    """Additive constant in the upper bound on the distance from a long horocycle to the core geodesic.

    The bound reads ``(1+delta) log l + C``.  ``C`` collects the annulus
    distance from the horocycle of length ``6 eps0/5`` out to the end of the
    blend zone, the shift ``-log(2 eps0)`` and the slack ``4 pi eps0``.
    """
    R1 = cusp_radius(eps0)
    rho_min = 2.0 * math.atanh(cusp_radius(2.0 * eps0))
    grid = [r for r in transition_radius_grid() if r >= rho_min] or [rho_min]
    rho0, log_R = choose_transition(R1, delta, grid=grid)
    log_r2 = max(math.log(cusp_radius(4.0 * eps0 / delta)), log_R)
    spec = AnnulusSpec.from_logs(math.log(R1), log_r2)
    inner = 2.0 * math.atanh(cusp_radius(1.2 * eps0))
    dist_r, _ = integrate.quad(annulus_metric(spec), inner, rho0 + 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    C = (1.0 + delta) * (dist_r - math.log(2.0 * eps0)) + 4.0 * math.pi * eps0
    return {"rho0": rho0, "log_R2": log_r2, "annulus_distance": dist_r, "C": C}


# -- export --------------------------------------------------------------------

def profile_table(metric: RadialMetric, rho) -> list[dict]:
    """Rows (rho, h, dh, d2h, K) for CSV export."""
    rho = np.asarray(rho, dtype=float)
    h, dh, d2h = metric.derivatives(rho)
    K = curvature_from_jet(rho, h, dh, d2h)
    return [
        {"rho": float(a), "h": float(b), "dh": float(c), "d2h": float(d), "K": float(e)}
        for a, b, c, d, e in zip(rho, h, dh, d2h, K)
    ]

