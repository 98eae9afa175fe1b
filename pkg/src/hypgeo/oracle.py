"""Independent numerical checks: collar eigenvalues, curvature and metric ratios.

The collar operator for Fourier mode j is

    L phi = -(1/cosh rho) (cosh rho phi')' + (4 pi^2 j^2 / ell^2) phi / cosh^2 rho

on ``[0, w]`` (a half collar) or ``[-w, w]`` (a full collar).  It is
symmetric for the weight ``cosh rho``.  Two solvers are provided that
share no code: a conservative finite-difference discretization and a
shooting method on the ODE.  Curvature and density ratios are evaluated
by plain finite differences and sampling, independently of the closed
forms in :mod:`hypgeo.metrics`.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, linalg, optimize

from .collar import _workers, mass_ratio_bound
from .errors import BoundaryTooClose, DomainError, NoSignChange, SolverFailure

__all__ = [
    "SturmLiouvilleProblem",
    "Grid1D",
    "FDSpectrum",
    "ShootingResult",
    "collar_fd_spectrum",
    "richardson_spectrum",
    "shooting_function",
    "shooting_neumann_eigen",
    "eigenfunction_mass_check",
    "cross_validate",
    "curvature_fd",
    "curvature_fd_samples",
    "metric_compare",
    "eigenvalue_table_csv",
]

BCS = ("neumann", "dirichlet")
DEFAULT_NODES = 2048
MIN_NODES = 16
RESIDUAL_TOL = 1e-8
SHOOT_RTOL = 1e-12
SHOOT_XTOL = 1e-10
MAX_CURVATURE_STEP = 1e-3


@dataclass(frozen=True)
class SturmLiouvilleProblem:
    """One Fourier mode of the Laplacian on a collar of half-width ``w``.

    ``full`` selects the domain ``[-w, w]``; otherwise it is ``[0, w]``.
    ``bc_inner`` applies at the left end and ``bc_outer`` at ``w``.
    """

    ell: float
    w: float
    j: int = 0
    bc_inner: str = "neumann"
    bc_outer: str = "neumann"
    full: bool = False

    def __post_init__(self) -> None:
        if not (self.ell > 0 and math.isfinite(self.ell)):
            raise DomainError(f"core length must be positive, got {self.ell!r}")
        if not (self.w > 0 and math.isfinite(self.w)):
            raise DomainError(f"half-width must be positive, got {self.w!r}")
        if int(self.j) != self.j or self.j < 0:
            raise DomainError(f"Fourier index must be a non-negative integer, got {self.j!r}")
        for bc in (self.bc_inner, self.bc_outer):
            if bc not in BCS:
                raise DomainError(f"boundary condition must be one of {BCS}, got {bc!r}")
        object.__setattr__(self, "j", int(self.j))

    @property
    def lo(self) -> float:
        return -self.w if self.full else 0.0

    @property
    def angular(self) -> float:
        return 4.0 * math.pi**2 * self.j**2 / self.ell**2

    def potential(self, rho):
        return self.angular / np.cosh(rho) ** 2


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with ``nodes`` points including both endpoints."""

    nodes: int
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if int(self.nodes) != self.nodes or self.nodes < MIN_NODES:
            raise DomainError(f"a grid needs at least {MIN_NODES} nodes, got {self.nodes!r}")
        if not self.hi > self.lo:
            raise DomainError("grid endpoints must satisfy lo < hi")

    @classmethod
    def for_problem(cls, problem: SturmLiouvilleProblem, nodes: int = DEFAULT_NODES) -> "Grid1D":
        return cls(nodes, problem.lo, problem.w)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.nodes - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.nodes)


@dataclass(frozen=True)
class FDSpectrum:
    eigenvalues: tuple[float, ...]
    nodes: np.ndarray
    vectors: np.ndarray
    spacing: float
    max_residual: float


def collar_fd_spectrum(problem: SturmLiouvilleProblem, grid: Grid1D | None = None, count: int = 4) -> FDSpectrum:
    """Lowest ``count`` eigenvalues of the conservative finite-difference operator.

    The quadratic form ``sum c_{i+1/2} (phi_{i+1} - phi_i)^2 / h`` with
    midpoint weights ``c = cosh`` and the lumped mass ``cosh(x_i) m_i``
    (``m_i = h``, halved at a Neumann end) give a symmetric tridiagonal
    pencil; at a Neumann end this is the ghost-node reflection.
    Dirichlet ends drop the boundary node.  Eigenvectors are returned
    normalized in the weighted discrete L^2 norm.
    """
    grid = grid or Grid1D.for_problem(problem)
    if abs(grid.lo - problem.lo) > 1e-12 or abs(grid.hi - problem.w) > 1e-12:
        raise DomainError("grid endpoints must match the problem domain")
    if not (1 <= count <= grid.nodes // 4):
        raise DomainError(f"count must lie in [1, nodes/4], got {count}")
    x = grid.points
    h = grid.spacing
    c_mid = np.cosh(0.5 * (x[:-1] + x[1:]))
    mass = np.full(x.size, h)
    if problem.bc_inner == "neumann":
        mass[0] *= 0.5
    if problem.bc_outer == "neumann":
        mass[-1] *= 0.5
    mass *= np.cosh(x)
    diag = np.zeros(x.size)
    diag[:-1] += c_mid / h
    diag[1:] += c_mid / h
    diag += problem.potential(x) * mass
    off = -c_mid / h
    keep = slice(1 if problem.bc_inner == "dirichlet" else 0, -1 if problem.bc_outer == "dirichlet" else None)
    x, mass, diag = x[keep], mass[keep], diag[keep]
    off = off[1 if problem.bc_inner == "dirichlet" else 0 : (off.size - 1 if problem.bc_outer == "dirichlet" else None)]
    # symmetric scaling D K D with D = mass^{-1/2}
    s = 1.0 / np.sqrt(mass)
    d = diag * s * s
    e = off * s[:-1] * s[1:]
    # bisection for the eigenvalues, inverse iteration for the vectors
    vals, vecs = linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    resid = _tridiag_residual(d, e, vals, vecs)
    if not np.all(np.isfinite(vals)) or resid > RESIDUAL_TOL * max(1.0, float(np.max(np.abs(d)))):
        raise SolverFailure(f"inverse iteration stagnated: residual {resid:.3g}")
    phi = vecs * s[:, None]
    phi /= np.sqrt(np.sum(mass[:, None] * phi**2, axis=0))
    # Rayleigh quotient in difference form: exact for constants, where
    # bisection on the scaled matrix only reaches eps * |D K D|
    pot = problem.potential(x) * mass
    # a dropped Dirichlet node carries the value 0
    zero = np.zeros((1, count))
    full = np.vstack([zero] * (problem.bc_inner == "dirichlet") + [phi] + [zero] * (problem.bc_outer == "dirichlet"))
    energy = np.sum(c_mid[:, None] * np.diff(full, axis=0) ** 2, axis=0) / h + np.sum(pot[:, None] * phi**2, axis=0)
    return FDSpectrum(tuple(float(v) for v in energy), x, phi, h, resid)


def _tridiag_residual(d, e, vals, vecs) -> float:
    av = d[:, None] * vecs
    av[:-1] += e[:, None] * vecs[1:]
    av[1:] += e[:, None] * vecs[:-1]
    return float(np.max(np.abs(av - vecs * vals[None, :])))


def richardson_spectrum(problem: SturmLiouvilleProblem, count: int = 4, nodes: int = DEFAULT_NODES) -> dict:
    """Eigenvalues at ``nodes`` and ``2 nodes - 1`` (spacing halved) and their Richardson extrapolation."""
    coarse = collar_fd_spectrum(problem, Grid1D.for_problem(problem, nodes), count)
    fine = collar_fd_spectrum(problem, Grid1D.for_problem(problem, 2 * nodes - 1), count)
    lc = np.array(coarse.eigenvalues)
    lf = np.array(fine.eigenvalues)
    return {
        "coarse": lc.tolist(),
        "fine": lf.tolist(),
        "extrapolated": ((4.0 * lf - lc) / 3.0).tolist(),
        "change": np.abs(lf - lc).tolist(),
    }


# -- shooting ---------------------------------------------------------------------


def _shoot(lam: float, ell: float, w: float, j: int, inner: str, formulation: str, dense: bool = False):
    a = 4.0 * math.pi**2 * j**2 / ell**2
    y0 = [1.0, 0.0] if inner == "neumann" else [0.0, 1.0]
    if formulation == "phi":
        def f(r, y):
            return [y[1], -math.tanh(r) * y[1] + (a / math.cosh(r) ** 2 - lam) * y[0]]
    elif formulation == "u":
        # u = sqrt(cosh) phi: u(0) = phi(0) and u'(0) = phi'(0) since tanh(0) = 0
        def f(r, y):
            return [y[1], (0.25 - lam + (a + 0.25) / math.cosh(r) ** 2) * y[0]]
    else:
        raise DomainError(f"formulation must be 'phi' or 'u', got {formulation!r}")
    sol = integrate.solve_ivp(f, (0.0, w), y0, method="DOP853", rtol=SHOOT_RTOL, atol=1e-14, dense_output=dense)
    if sol.status != 0:
        raise SolverFailure(f"shooting integration failed: {sol.message}")
    return sol


def shooting_function(lam: float, ell: float, w: float, j: int = 0, inner: str = "neumann", formulation: str = "phi") -> float:
    """Mismatch of the Neumann condition at ``w`` for the solution started at 0.

    ``inner`` selects the even (Neumann) or odd (Dirichlet) solution.  For
    ``formulation='u'`` the condition on ``phi`` reads
    ``u'(w) - tanh(w) u(w) / 2 = 0``; it is divided by ``sqrt(cosh w)``
    so both formulations return the same number.
    """
    if inner not in BCS:
        raise DomainError(f"inner condition must be one of {BCS}, got {inner!r}")
    sol = _shoot(lam, ell, w, j, inner, formulation)
    y, dy = sol.y[0, -1], sol.y[1, -1]
    if formulation == "phi":
        return float(dy)
    return float((dy - 0.5 * math.tanh(w) * y) / math.sqrt(math.cosh(w)))


@dataclass(frozen=True)
class ShootingResult:
    lam: float
    ell: float
    w: float
    j: int
    inner: str
    iterations: int
    eigenfunction: Callable[[np.ndarray], np.ndarray]

    def __float__(self) -> float:
        return self.lam

    def samples(self, n: int = 201) -> tuple[np.ndarray, np.ndarray]:
        r = np.linspace(0.0, self.w, n)
        return r, self.eigenfunction(r)


def shooting_neumann_eigen(
    ell: float,
    w: float,
    j: int,
    bracket: tuple[float, float],
    *,
    inner: str = "neumann",
    formulation: str = "phi",
) -> ShootingResult:
    """Eigenvalue with a Neumann condition at ``w`` inside ``bracket``.

    The root of :func:`shooting_function` is found by Brent's method
    (bisection safeguarding secant and inverse quadratic steps) to an
    absolute tolerance of 1e-10.  The eigenfunction is the integrated
    solution normalized to unit weighted L^2 norm on ``[0, w]``.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise NoSignChange(f"empty bracket {bracket!r}")
    f_lo = shooting_function(lo, ell, w, j, inner, formulation)
    f_hi = shooting_function(hi, ell, w, j, inner, formulation)
    if f_lo == 0.0:
        lam, it = lo, 0
    elif f_hi == 0.0:
        lam, it = hi, 0
    elif f_lo * f_hi > 0:
        raise NoSignChange(f"shooting function has the same sign at both ends of {bracket!r}")
    else:
        lam, info = optimize.brentq(
            shooting_function, lo, hi, args=(ell, w, j, inner, formulation),
            xtol=SHOOT_XTOL, rtol=4 * np.finfo(float).eps, full_output=True,
        )
        it = info.iterations
    sol = _shoot(lam, ell, w, j, inner, "phi", dense=True)
    rr = np.linspace(0.0, w, 2001)
    norm2 = integrate.simpson(sol.sol(rr)[0] ** 2 * np.cosh(rr), x=rr)
    scale = 1.0 / math.sqrt(norm2)

    def phi(r):
        return scale * sol.sol(np.asarray(r, dtype=float))[0]

    return ShootingResult(float(lam), float(ell), float(w), int(j), inner, int(it), phi)


def eigenfunction_mass_check(result: ShootingResult, widths: Sequence[float] | None = None, quad_n: int = 4001) -> dict:
    """Weighted mass ratios of an eigenfunction against the small-eigenvalue bound.

    Mass up to ``w1`` over mass up to ``w2`` of ``cosh rho phi^2`` is
    computed by Simpson's rule for consecutive pairs of ``widths`` and
    compared with :func:`hypgeo.collar.mass_ratio_bound`.  Only
    meaningful for eigenvalues at most 1/4.
    """
    if result.lam > 0.25:
        raise DomainError(f"mass bound needs eigenvalue <= 1/4, got {result.lam}")
    lam = max(result.lam, 0.0)
    ws = sorted(widths) if widths is not None else list(np.linspace(result.w / 8, result.w, 8))
    r = np.linspace(0.0, result.w, quad_n)
    dens = np.cosh(r) * result.eigenfunction(r) ** 2
    cum = integrate.cumulative_simpson(dens, x=r, initial=0.0)
    mass = np.interp(ws, r, cum)
    worst = -math.inf
    rows = []
    for i in range(len(ws)):
        for k in range(i + 1, len(ws)):
            ratio = float(mass[i] / mass[k])
            bound = mass_ratio_bound(lam, ws[i], ws[k])
            worst = max(worst, ratio - bound)
            rows.append((ws[i], ws[k], ratio, bound))
    return {"worst_excess": worst, "holds": worst <= 1e-8, "pairs": rows}


# -- batch cross-validation -----------------------------------------------------------


def _compare_one(problem: SturmLiouvilleProblem, count: int, nodes: int) -> dict:
    rich = richardson_spectrum(problem, count + 1, nodes)
    ext = rich["extrapolated"]
    rows = []
    for k in range(count):
        below = ext[k] - 0.5 * (ext[k] - ext[k - 1]) if k else ext[0] - 0.5 * (ext[1] - ext[0])
        above = ext[k] + 0.5 * (ext[k + 1] - ext[k])
        shot = shooting_neumann_eigen(problem.ell, problem.w, problem.j, (below, above), inner=problem.bc_inner)
        err = abs(shot.lam - ext[k])
        row = {"k": k, "fd": ext[k], "shooting": shot.lam, "abs_diff": err, "rel_diff": err / max(1.0, abs(shot.lam))}
        if shot.lam <= 0.25:
            row["mass_check"] = eigenfunction_mass_check(shot)["holds"]
        rows.append(row)
    return {"ell": problem.ell, "w": problem.w, "j": problem.j, "inner": problem.bc_inner, "rows": rows}


def cross_validate(problems: Iterable[SturmLiouvilleProblem], count: int = 3, nodes: int = DEFAULT_NODES) -> list[dict]:
    """Compare extrapolated FD eigenvalues with shooting roots for several half collars.

    Each problem must be Neumann at ``w`` on ``[0, w]``.  Instances run
    concurrently; results keep the input order.
    """
    items = list(problems)
    for p in items:
        if p.full or p.bc_outer != "neumann":
            raise DomainError("cross-validation needs half collars with a Neumann outer end")
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(lambda p: _compare_one(p, count, nodes), items))


def eigenvalue_table_csv(results: Sequence[dict]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["ell", "w", "j", "inner", "k", "fd", "shooting", "abs_diff"])
    for res in results:
        for row in res["rows"]:
            out.writerow([repr(res["ell"]), repr(res["w"]), res["j"], res["inner"], row["k"],
                          repr(row["fd"]), repr(row["shooting"]), f"{row['abs_diff']:.3e}"])
    return buf.getvalue()


# -- curvature and metric ratios ---------------------------------------------------------


def _domain_of(h) -> tuple[float, float]:
    return (getattr(h, "lo", 0.0), getattr(h, "hi", math.inf))


def curvature_fd(h: Callable, rho, step: float = MAX_CURVATURE_STEP, domain: tuple[float, float] | None = None):
    """Curvature of ``h^2 (d rho^2 + sinh^2 rho d theta^2)`` by differencing ``log h``.

    Uses fourth-order central differences with five samples spaced by
    ``step``; raises BoundaryTooClose if the stencil leaves ``domain``
    (taken from ``h.lo, h.hi`` when ``h`` is a metric object).
    """
    if not (0 < step <= MAX_CURVATURE_STEP):
        raise DomainError(f"sample spacing must lie in (0, {MAX_CURVATURE_STEP}], got {step}")
    lo, hi = domain if domain is not None else _domain_of(h)
    r = np.asarray(rho, dtype=float)
    if np.any(r - 2 * step <= lo) or np.any(r + 2 * step >= hi):
        raise BoundaryTooClose(f"stencil of half-width {2 * step} around {rho!r} leaves ({lo}, {hi})")
    g = [np.log(np.asarray(h(r + k * step), dtype=float)) for k in (-2, -1, 0, 1, 2)]
    d1 = (8.0 * (g[3] - g[1]) - (g[4] - g[0])) / (12.0 * step)
    d2 = (16.0 * (g[3] + g[1]) - (g[4] + g[0]) - 30.0 * g[2]) / (12.0 * step * step)
    out = -(d2 + d1 / np.tanh(r) + 1.0) * np.exp(-2.0 * g[2])
    return float(out) if out.ndim == 0 else out


def curvature_fd_samples(rho: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Curvature at the interior nodes of a uniformly sampled density.

    Returns the nodes at least two samples from either end and the
    curvature there.
    """
    r = np.asarray(rho, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != v.shape or r.size < 5:
        raise DomainError("need matching 1-D arrays with at least 5 samples")
    steps = np.diff(r)
    step = float(steps.mean())
    if not np.allclose(steps, step, rtol=1e-9, atol=0.0):
        raise DomainError("samples must be uniformly spaced")
    if step > MAX_CURVATURE_STEP:
        raise DomainError(f"sample spacing {step} exceeds {MAX_CURVATURE_STEP}")
    g = np.log(v)
    d1 = (8.0 * (g[3:-1] - g[1:-3]) - (g[4:] - g[:-4])) / (12.0 * step)
    d2 = (16.0 * (g[3:-1] + g[1:-3]) - (g[4:] + g[:-4]) - 30.0 * g[2:-2]) / (12.0 * step * step)
    rr = r[2:-2]
    return rr, -(d2 + d1 / np.tanh(rr) + 1.0) * np.exp(-2.0 * g[2:-2])


def metric_compare(h1: Callable, h2: Callable, rho_interval: tuple[float, float], grid_n: int = 1000) -> tuple[float, float]:
    """Smallest and largest value of ``h2 / h1`` on a uniform grid including the endpoints."""
    lo, hi = map(float, rho_interval)
    if not (hi > lo and grid_n >= 2):
        raise DomainError("need lo < hi and at least two grid points")
    r = np.linspace(lo, hi, int(grid_n))
    ratio = np.asarray(h2(r), dtype=float) / np.asarray(h1(r), dtype=float)
    return float(np.min(ratio)), float(np.max(ratio))
