"""Fourier-mode analysis of Laplace eigenfunctions on collars.

On a collar with coordinates ``(rho, t)`` and metric
``d rho^2 + ell^2 cosh^2(rho) dt^2`` each Fourier coefficient of an
eigenfunction, multiplied by ``sqrt(cosh rho)``, solves

    u'' = q(rho) u,    q = 1/4 - lam + (1/4 + 4 pi^2 j^2 / ell^2) / cosh^2(rho).

This module integrates the odd and even fundamental solutions of that
equation, assembles collar norms of mode expansions, and checks the
mass-distribution bound for small eigenvalues.

The solutions can grow like ``exp(800)`` on wide collars of short
geodesics, so they are integrated in chunks and renormalized after
each chunk; every value is carried as a mantissa with a log scale.
The running integrals of ``u^2`` are extra components of the ODE
state, so they share the integrator's error control.
"""

from __future__ import annotations

import csv
import io
import math
import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .errors import BoundViolated, DomainError, HorizonTooShort, IntegrationFailure, PreconditionUnmet

__all__ = [
    "ModeODEParams",
    "ModeSolutionPair",
    "MassRatioReport",
    "BOUNDARY_CONDITIONS",
    "solve_mode",
    "solve_modes",
    "collar_norm",
    "mass_ratio_bound",
    "mass_ratio_asymptotic",
    "cosh_comparison_ratio",
    "verify_mass_distribution",
    "integral_monotonicity_check",
]

BOUNDARY_CONDITIONS = ("interior", "neumann", "dirichlet")

RTOL = 1e-10
WRONSKIAN_TOL = 1e-8
RATIO_SLACK = 1e-8
# largest log-growth allowed inside one chunk before renormalizing
_CHUNK_GROWTH = 40.0
_CHUNK_MAX = 5.0
_SAMPLES_PER_CHUNK = 16
# keeps the dense-output interpolant as accurate as the step endpoints
_MAX_STEP = 0.125


@dataclass(frozen=True)
class ModeODEParams:
    """Eigenvalue, Fourier index and core length of one collar mode."""

    lam: float
    j: int
    ell: float

    def __post_init__(self) -> None:
        if not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise DomainError(f"eigenvalue must be finite and >= 0, got {self.lam!r}")
        if int(self.j) != self.j or self.j < 0:
            raise DomainError(f"Fourier index must be a non-negative integer, got {self.j!r}")
        if not (self.ell > 0.0 and math.isfinite(self.ell)):
            raise DomainError(f"core length must be positive, got {self.ell!r}")
        object.__setattr__(self, "j", int(self.j))

    @property
    def angular(self) -> float:
        """Coefficient of ``1/cosh^2`` in the potential."""
        return 0.25 + 4.0 * math.pi**2 * self.j**2 / self.ell**2

    def potential(self, rho):
        r = np.asarray(rho, dtype=float)
        out = 0.25 - self.lam + self.angular / np.cosh(r) ** 2
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class _Chunk:
    lo: float
    hi: float
    sol: object  # scipy OdeSolution over [lo, hi] (or [hi, lo] when integrating leftwards)
    log_phi: float
    log_psi: float


@dataclass(frozen=True)
class ModeSolutionPair:
    """Odd solution ``phi`` and even solution ``psi`` of the mode equation.

    ``phi(0) = 0, phi'(0) = 1`` and ``psi(0) = 1, psi'(0) = 0``.  Values
    are stored as mantissas with per-chunk log scales, so the pair can be
    evaluated far beyond the range of double precision through the
    ``log_*`` accessors.  ``side = -1`` means the pair was integrated on
    ``[-w_max, 0]``.
    """

    params: ModeODEParams
    w_max: float
    side: int
    chunks: tuple = field(repr=False)
    positive: bool = True
    wronskian_drift: float = 0.0

    # -- lookup ------------------------------------------------------------

    def _locate(self, rho: float) -> _Chunk:
        x = self.side * rho
        if x < -1e-15 or x > self.w_max * (1 + 1e-14):
            raise HorizonTooShort(f"rho={rho!r} outside the solved range of width {self.w_max!r}")
        ends = [c.hi * self.side for c in self.chunks]
        i = min(bisect_right(ends, x), len(self.chunks) - 1)
        return self.chunks[i]

    def scaled_state(self, rho: float) -> tuple[np.ndarray, float, float]:
        """Mantissa state ``(phi, phi', psi, psi', I_phi, I_psi)`` and the two log scales at rho."""
        c = self._locate(float(rho))
        return c.sol(float(rho)), c.log_phi, c.log_psi

    def evaluate(self, rho):
        """``(phi, phi', psi, psi')`` at rho as floats; overflows to inf for huge values."""
        r = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.empty((4, r.size))
        with np.errstate(over="ignore"):
            for k, x in enumerate(r):
                y, lp, ls = self.scaled_state(x)
                out[:2, k] = y[:2] * np.exp(lp)
                out[2:, k] = y[2:4] * np.exp(ls)
        if np.ndim(rho) == 0:
            return tuple(float(v[0]) for v in out)
        return tuple(out)

    def log_abs(self, kind: str, rho: float) -> float:
        """log |u(rho)| for ``kind`` in {"phi", "psi"}."""
        y, lp, ls = self.scaled_state(rho)
        if kind == "phi":
            return math.log(abs(y[0])) + lp if y[0] != 0 else -math.inf
        if kind == "psi":
            return math.log(abs(y[2])) + ls if y[2] != 0 else -math.inf
        raise DomainError(f"kind must be 'phi' or 'psi', got {kind!r}")

    # -- masses ------------------------------------------------------------

    def log_mass(self, kind: str, w: float) -> float:
        """log of the integral of u^2 over [0, w] (or [-w, 0])."""
        if w < 0:
            raise DomainError("width must be non-negative")
        if w == 0:
            return -math.inf
        y, lp, ls = self.scaled_state(self.side * w)
        if kind == "phi":
            return math.log(abs(y[4])) + 2.0 * lp
        if kind == "psi":
            return math.log(abs(y[5])) + 2.0 * ls
        raise DomainError(f"kind must be 'phi' or 'psi', got {kind!r}")

    def mass(self, kind: str, w: float) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_mass(kind, w)))

    def mass_ratio(self, kind: str, w1: float, w2: float) -> float:
        """Integral of u^2 over [0, w1] divided by the integral over [0, w2]."""
        return math.exp(self.log_mass(kind, w1) - self.log_mass(kind, w2))

    def simpson_log_mass(self, kind: str, w: float, n: int) -> float:
        """log of the integral of u^2 on [0, w] by composite Simpson with n intervals on the dense output."""
        if n % 2:
            n += 1
        rho = self.side * np.linspace(0.0, w, n + 1)
        logs = np.array([self.log_abs(kind, float(x)) for x in rho])
        top = np.max(logs[np.isfinite(logs)])
        vals = np.exp(2.0 * (logs - top))
        return math.log(integrate.simpson(vals, dx=w / n)) + 2.0 * top

    def quadrature_log_mass(self, kind: str, w: float, tol: float = 1e-9, n0: int = 64, n_max: int = 1 << 18):
        """Simpson quadrature refined by doubling until successive levels agree to tol (relative)."""
        n = n0
        prev = self.simpson_log_mass(kind, w, n)
        while n < n_max:
            n *= 2
            cur = self.simpson_log_mass(kind, w, n)
            if abs(cur - prev) < tol:
                return cur, n
            prev = cur
        raise IntegrationFailure(f"Simpson quadrature did not settle below {tol} with {n} intervals")

    # -- export ------------------------------------------------------------

    def sample(self, n: int = 101) -> list[dict[str, float]]:
        rho = self.side * np.linspace(0.0, self.w_max, n)
        phi, dphi, psi, dpsi = self.evaluate(rho)
        return [
            {"rho": float(r), "phi": float(a), "dphi": float(b), "psi": float(c), "dpsi": float(d)}
            for r, a, b, c, d in zip(rho, phi, dphi, psi, dpsi)
        ]

    def to_csv(self, n: int = 101) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["rho", "phi", "dphi", "psi", "dpsi"], lineterminator="\n")
        writer.writeheader()
        for row in self.sample(n):
            writer.writerow({k: repr(v) for k, v in row.items()})
        return buf.getvalue()


def _rhs(params: ModeODEParams):
    c = 0.25 - params.lam
    k = params.angular

    def f(r, y):
        q = c + k / math.cosh(r) ** 2
        return [y[1], q * y[0], y[3], q * y[2], y[0] * y[0], y[2] * y[2]]

    return f


def _relative_wronskian(y: np.ndarray, log_phi: float, log_psi: float) -> float:
    # |W + 1| relative to the size of the two products forming W, in scaled form
    a = y[0] * y[3]
    b = y[2] * y[1]
    return abs(a - b + math.exp(-(log_phi + log_psi))) / (abs(a) + abs(b))


def solve_mode(
    params: ModeODEParams,
    w_max: float,
    *,
    rtol: float = RTOL,
    method: str = "DOP853",
    side: int = 1,
) -> ModeSolutionPair:
    """Integrate the odd and even fundamental solutions on [0, w_max].

    Raises IntegrationFailure if the integrator fails, if the relative
    Wronskian drift exceeds 1e-8, or if a solution that must stay positive
    (eigenvalue at most 1/4) changes sign.
    """
    if not (w_max > 0.0 and math.isfinite(w_max)):
        raise DomainError(f"w_max must be positive, got {w_max!r}")
    if side not in (1, -1):
        raise DomainError("side must be +1 or -1")
    f = _rhs(params)
    y = np.array([0.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    log_phi = log_psi = 0.0
    x = 0.0
    chunks = []
    positive = True
    drift = 0.0
    while x < w_max:
        q0 = max(params.potential(x), 1e-6)
        step = min(w_max - x, _CHUNK_MAX, _CHUNK_GROWTH / math.sqrt(q0))
        if w_max - x - step < 1e-12 * w_max:
            step = w_max - x
        a, b = side * x, side * (x + step)
        sol = integrate.solve_ivp(
            f, (a, b), y, method=method, rtol=rtol, atol=rtol * 1e-3, dense_output=True, max_step=_MAX_STEP
        )
        if sol.status != 0:
            raise IntegrationFailure(f"integrator stopped at rho={sol.t[-1]!r}: {sol.message}")
        chunks.append(_Chunk(a, b, sol.sol, log_phi, log_psi))
        grid = np.linspace(a, b, _SAMPLES_PER_CHUNK + 1)[1:]
        vals = sol.sol(grid)
        if np.any(side * vals[0] <= 0.0) or np.any(vals[2] <= 0.0):
            positive = False
        for k in range(vals.shape[1]):
            drift = max(drift, _relative_wronskian(vals[:, k], log_phi, log_psi))
        y = sol.y[:, -1].copy()
        for iv, idv, iI, which in ((0, 1, 4, 0), (2, 3, 5, 1)):
            m = math.hypot(y[iv], y[idv])
            y[iv] /= m
            y[idv] /= m
            y[iI] /= m * m
            if which == 0:
                log_phi += math.log(m)
            else:
                log_psi += math.log(m)
        x += step
    if drift > WRONSKIAN_TOL:
        raise IntegrationFailure(f"relative Wronskian drift {drift:.3g} exceeds {WRONSKIAN_TOL}")
    if params.lam <= 0.25 and not positive:
        raise IntegrationFailure("fundamental solution changed sign although the potential is positive")
    return ModeSolutionPair(params, float(w_max), side, tuple(chunks), positive, drift)


def _workers() -> int:
    env = os.environ.get("HYPGEO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"HYPGEO_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def solve_modes(params: Iterable[ModeODEParams], w_max: float, **kw) -> list[ModeSolutionPair]:
    """Solve several independent modes concurrently; results keep the input order."""
    items = list(params)
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(lambda p: solve_mode(p, w_max, **kw), items))


# -- norms and bounds --------------------------------------------------------


def _check_bc(bc: str) -> None:
    if bc not in BOUNDARY_CONDITIONS:
        raise DomainError(f"boundary condition must be one of {BOUNDARY_CONDITIONS}, got {bc!r}")


def collar_norm(
    coeffs: Sequence[tuple[float, float]],
    pairs: Sequence[ModeSolutionPair],
    ell: float,
    w: float,
    bc: str = "interior",
) -> float:
    """Squared L^2 norm on a collar of width w of a mode expansion.

    ``coeffs[i] = (c1, c2)`` multiplies the odd and even solution of
    ``pairs[i]``; for a Fourier index j >= 1, ``c^2`` is the sum of the
    squared cosine and sine coefficients.  An interior collar spans
    ``[-w, w]``; a boundary collar spans ``[0, w]`` and keeps only the
    even part (Neumann) or the odd part (Dirichlet).
    """
    _check_bc(bc)
    if len(coeffs) != len(pairs):
        raise DomainError("one coefficient pair per solved mode is required")
    if not (ell > 0 and w >= 0):
        raise DomainError("ell must be positive and w non-negative")
    logs = []
    for (c1, c2), pair in zip(coeffs, pairs):
        if pair.w_max < w:
            raise HorizonTooShort(f"mode j={pair.params.j} solved to {pair.w_max}, need {w}")
        weight = 1.0 if pair.params.j == 0 else 0.5
        terms = []
        if bc != "neumann":
            terms.append((c1, "phi"))
        if bc != "dirichlet":
            terms.append((c2, "psi"))
        for c, kind in terms:
            if c != 0.0 and w > 0:
                logs.append(math.log(weight * c * c) + pair.log_mass(kind, w))
    if not logs:
        return 0.0
    factor = 2.0 if bc == "interior" else 1.0
    with np.errstate(over="ignore"):
        return float(factor * ell * np.exp(np.logaddexp.reduce(logs)))


def _delta(lam: float) -> float:
    if lam > 0.25:
        raise DomainError(f"eigenvalue {lam!r} exceeds 1/4")
    return math.sqrt(0.25 - lam)


def _check_widths(w1: float, w2: float) -> None:
    if not (0.0 < w1 <= w2 and math.isfinite(w2)):
        raise DomainError(f"widths must satisfy 0 < w1 <= w2, got {w1!r}, {w2!r}")


def mass_ratio_bound(lam: float, w1: float, w2: float) -> float:
    """Upper bound on the collar mass ratio for eigenvalues at most 1/4.

    Equals ``w1/w2`` at ``lam = 1/4`` and
    ``(4 d w1 + sinh 2 d w1) / (4 d w2 + sinh 2 d w2)`` with
    ``d = sqrt(1/4 - lam)`` below it.
    """
    _check_widths(w1, w2)
    d = _delta(lam)
    if d == 0.0:
        return w1 / w2
    # both terms divided by exp(2 d w2) / 2 to stay finite for wide collars
    e2 = math.exp(-2.0 * d * w2)
    num = 8.0 * d * w1 * e2 + math.exp(2.0 * d * (w1 - w2)) * -math.expm1(-4.0 * d * w1)
    den = 8.0 * d * w2 * e2 + -math.expm1(-4.0 * d * w2)
    return num / den


def mass_ratio_asymptotic(lam: float, w1: float, w2: float) -> float:
    """Large-width form ``2 exp(-2 d (w2 - w1))`` of the mass bound."""
    _check_widths(w1, w2)
    d = _delta(lam)
    return 2.0 * math.exp(-2.0 * d * (w2 - w1))


def cosh_comparison_ratio(lam: float, w1: float, w2: float) -> float:
    """Exact mass ratio of the comparison function ``cosh(d rho)``.

    Its integral of squares is ``(2 d w + sinh 2 d w) / (4 d)``, which is
    never larger than :func:`mass_ratio_bound`.
    """
    _check_widths(w1, w2)
    d = _delta(lam)
    if d == 0.0:
        return w1 / w2
    e2 = math.exp(-2.0 * d * w2)
    num = 4.0 * d * w1 * e2 + math.exp(2.0 * d * (w1 - w2)) * -math.expm1(-4.0 * d * w1)
    den = 4.0 * d * w2 * e2 + -math.expm1(-4.0 * d * w2)
    return num / den


@dataclass(frozen=True)
class MassRatioReport:
    """Largest per-mode mass ratio between two collar widths and the bound it must respect."""

    w1: float
    w2: float
    ratio: float
    bound: float
    boundary_condition: str
    mode: str
    ratios: dict

    def to_dict(self) -> dict:
        return {
            "w1": self.w1,
            "w2": self.w2,
            "ratio": self.ratio,
            "bound": self.bound,
            "boundary_condition": self.boundary_condition,
            "mode": self.mode,
            "ratios": dict(self.ratios),
        }


def verify_mass_distribution(
    params: ModeODEParams,
    w1: float,
    w2: float,
    bc: str = "interior",
    pair: ModeSolutionPair | None = None,
) -> MassRatioReport:
    """Measure the per-mode mass ratios and check them against :func:`mass_ratio_bound`.

    Raises BoundViolated if a ratio exceeds the bound by more than 1e-8.
    """
    _check_bc(bc)
    bound = mass_ratio_bound(params.lam, w1, w2)
    if pair is None:
        pair = solve_mode(params, w2)
    elif pair.params != params:
        raise DomainError("supplied solution pair was computed for different parameters")
    elif pair.w_max < w2:
        raise HorizonTooShort(f"pair solved to {pair.w_max}, need {w2}")
    kinds = {"interior": ("phi", "psi"), "neumann": ("psi",), "dirichlet": ("phi",)}[bc]
    ratios = {f"{k}_{params.j}": pair.mass_ratio(k, w1, w2) for k in kinds}
    mode, ratio = max(ratios.items(), key=lambda kv: kv[1])
    if ratio > bound + RATIO_SLACK:
        raise BoundViolated(
            f"mode {mode}: mass ratio {ratio:.12g} exceeds bound {bound:.12g}", mode=mode, ratio=ratio
        )
    return MassRatioReport(float(w1), float(w2), ratio, bound, bc, mode, ratios)


def integral_monotonicity_check(
    u1: Callable,
    u2: Callable,
    w1: float,
    w2: float,
    n: int = 4001,
) -> bool:
    """Compare the mass ratios of two positive functions on [0, w1] within [0, w2].

    The comparison holds whenever ``u2'' u1 - u2 u1''`` is non-negative
    and ``u2' u1 - u2 u1'`` is non-negative at 0; both hypotheses are
    checked on a grid (with finite-difference derivatives) and
    PreconditionUnmet is raised if either fails.
    """
    _check_widths(w1, w2)
    rho = np.linspace(0.0, w2, n)
    h = rho[1] - rho[0]
    a = np.asarray(u1(rho), dtype=float)
    b = np.asarray(u2(rho), dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise PreconditionUnmet("both functions must be positive on [0, w2]")
    da, db = np.gradient(a, h, edge_order=2), np.gradient(b, h, edge_order=2)
    d2a, d2b = np.gradient(da, h, edge_order=2), np.gradient(db, h, edge_order=2)
    second = d2b * a - b * d2a
    scale = np.abs(d2b * a) + np.abs(b * d2a) + 1e-300
    tol = 1e-5
    if np.any(second < -tol * scale):
        k = int(np.argmin(second / scale))
        raise PreconditionUnmet(f"u2''u1 - u2 u1'' < 0 at rho={rho[k]:.6g}")
    first0 = db[0] * a[0] - b[0] * da[0]
    # the value at 0 is compared with the typical size of the same expression on the grid
    typical = np.max(np.abs(db * a) + np.abs(b * da)) + 1e-300
    if first0 < -tol * typical:
        raise PreconditionUnmet("u2'u1 - u2 u1' < 0 at rho=0")

    g1 = np.linspace(0.0, w1, n)
    inner1 = integrate.simpson(np.asarray(u1(g1), dtype=float) ** 2, x=g1)
    inner2 = integrate.simpson(np.asarray(u2(g1), dtype=float) ** 2, x=g1)
    outer1 = integrate.simpson(a**2, x=rho)
    outer2 = integrate.simpson(b**2, x=rho)
    return inner2 / outer2 <= inner1 / outer1 * (1 + 1e-12)
