"""Verification suites shared by the command line and the acceptance tests.

Every suite takes an integer seed plus size parameters and returns a
:class:`SuiteResult`: named checks, each an observed value compared with
a limit.  Results contain no timings or other run-dependent data, so
the same seed and parameters always give the same record.  Each suite
draws from its own stream derived from ``(seed, suite index)``; a scoped
run therefore reproduces the numbers of a full run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp
import numpy as np

from . import collar, covers, hyptrig, metrics, oracle, pants_maps, surface
from .errors import DomainError, HypGeoError

__all__ = ["Check", "SuiteResult", "SUITES", "run_suite", "run_suites"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    limit: float
    relation: str  # "<=", ">=" or "=="
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "limit": self.limit, "relation": self.relation, "passed": self.passed}


def _check(name: str, value, limit, relation: str = "<=") -> Check:
    value, limit = float(value), float(limit)
    ok = {"<=": value <= limit, ">=": value >= limit, "==": value == limit}[relation]
    return Check(name, value, limit, relation, bool(ok))


@dataclass
class SuiteResult:
    name: str
    parameters: dict
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, *args, **kw) -> Check:
        c = _check(*args, **kw)
        self.checks.append(c)
        return c

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "parameters": dict(self.parameters),
            "checks": [c.to_dict() for c in self.checks],
            "data": self.data,
        }


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), index]))


# -- polygons ----------------------------------------------------------------------


def suite_polygons(seed: int, trials: int = 10_000) -> SuiteResult:
    """Trirectangles, pentagons and hexagons from random data satisfy their identities."""
    res = SuiteResult("polygons", {"trials": trials})
    rng = _rng(seed, 1)
    worst = {"trirectangle": 0.0, "pentagon": 0.0, "hexagon": 0.0}
    done = {k: 0 for k in worst}
    while done["pentagon"] < trials:
        a, b = rng.uniform(0.05, 5.0, 2)
        if math.sinh(a) * math.sinh(b) <= 1.0 + 1e-6:
            continue
        p = hyptrig.pentagon_from_legs(a, b)
        worst["pentagon"] = max(worst["pentagon"], max(p.residuals().values()))
        done["pentagon"] += 1
    while done["trirectangle"] < trials:
        a, b = rng.uniform(0.01, 1.5, 2)
        if math.cosh(b) * math.tanh(a) >= 1 - 1e-6 or math.cosh(a) * math.tanh(b) >= 1 - 1e-6:
            continue
        t = hyptrig.trirectangle_solve(a, b)
        worst["trirectangle"] = max(worst["trirectangle"], max(t.residuals().values()))
        done["trirectangle"] += 1
    for a, b, c in rng.uniform(0.05, 5.0, (trials, 3)):
        h = hyptrig.hexagon_solve(a, b, c)
        worst["hexagon"] = max(worst["hexagon"], max(h.residuals().values()))
        done["hexagon"] += 1
    for kind, value in worst.items():
        res.add(f"{kind}_max_relative_residual", value, 1e-10)
    s = hyptrig.REGULAR_PENTAGON_SIDE
    reg = hyptrig.pentagon_from_legs(s, s)
    res.add("regular_pentagon_side_error", max(abs(x - s) for x in reg.sides()), 1e-12)
    res.add("regular_pentagon_golden_root", abs(math.cosh(s) ** 2 - math.cosh(s) - 1.0), 1e-12)
    hs = hyptrig.REGULAR_HEXAGON_SIDE
    hreg = hyptrig.hexagon_solve(hs, hs, hs)
    res.add("regular_hexagon_side_error", max(abs(x - hs) for x in hreg.sides()), 1e-12)
    res.add("regular_hexagon_root", abs(math.cosh(hs) ** 2 - math.cosh(hs) - 2.0), 1e-12)
    res.data = {"counts": done}
    return res


# -- curvature ------------------------------------------------------------------------


def suite_curvature(seed: int, delta: float = 0.1, grid_points: int = 2000, annuli: int = 20) -> SuiteResult:
    """Complete densities have curvature -1; the blend stays in the delta band."""
    res = SuiteResult("curvature", {"delta": delta, "grid_points": grid_points, "annuli": annuli})
    rng = _rng(seed, 2)
    rr = np.linspace(0.05, 30.0, 4000)
    res.add("punctured_disk_max_abs_K_plus_1", np.max(np.abs(metrics.gaussian_curvature(metrics.punctured_disk_metric(), rr) + 1)), 1e-6)
    worst = 0.0
    for _ in range(annuli):
        r1 = math.exp(rng.uniform(-12.0, -0.5))
        r2 = math.exp(rng.uniform(math.log(r1) + 0.2, 0.0)) if rng.uniform() < 0.8 else 1.0
        m = metrics.annulus_metric(metrics.AnnulusSpec.from_radii(r1, r2))
        lo, hi = m.lo, min(m.hi, 40.0)
        grid = np.linspace(lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo), 400)
        worst = max(worst, float(np.max(np.abs(metrics.gaussian_curvature(m, grid) + 1))))
    res.add("annulus_max_abs_K_plus_1", worst, 1e-6)
    r1 = math.exp(-2 * math.pi)
    rho0, log_r2 = metrics.choose_transition(r1, delta)
    spec = metrics.IntermediateMetricSpec(math.log(r1), log_r2, rho0, delta)
    m = metrics.intermediate_metric(spec)
    grid = metrics.certification_grid(rho0, m.lo, m.hi, blend_points=grid_points)
    cert = metrics.certify_curvature(m, grid, delta)
    res.add("blend_max_abs_K_plus_1", cert["max_abs_dev"], delta)
    blend = np.linspace(rho0, rho0 + 1.0, grid_points)
    k_fd = oracle.curvature_fd(m, blend)
    res.add("blend_fd_curvature_agreement", np.max(np.abs(k_fd - metrics.gaussian_curvature(m, blend))), 1e-5)
    res.data = {
        "rho0": rho0,
        "K_min": cert["K_min"],
        "K_max": cert["K_max"],
        "profile": {"rho": blend[::20].tolist(), "K": metrics.gaussian_curvature(m, blend[::20]).tolist()},
        "densities": _density_profiles(spec),
    }
    return res


def _density_profiles(spec) -> dict:
    ann = metrics.annulus_metric(spec.annulus)
    blend = metrics.intermediate_metric(spec, check=False)
    rho = np.linspace(max(ann.lo, spec.rho0 - 2.0) + 1e-3, spec.rho0 + 3.0, 101)
    return {
        "rho": rho.tolist(),
        "punctured_disk": metrics.density_punctured_disk(rho).tolist(),
        "annulus": ann(rho).tolist(),
        "blend": blend(rho).tolist(),
    }


# -- collar mass distribution ------------------------------------------------------------


def suite_mass(seed: int, cases: int = 1000) -> SuiteResult:
    """Per-mode collar mass ratios respect the small-eigenvalue bound."""
    res = SuiteResult("mass", {"cases": cases})
    rng = _rng(seed, 3)
    draws = []
    for _ in range(cases):
        lam = float(rng.uniform(0.0, 0.25))
        j = int(rng.integers(0, 9))
        ell = float(rng.uniform(0.1, 10.0))
        w2 = float(rng.uniform(0.05, 20.0))
        w1 = float(rng.uniform(0.01, w2))
        bc = str(rng.choice(collar.BOUNDARY_CONDITIONS))
        draws.append((collar.ModeODEParams(lam, j, ell), w1, w2, bc))
    pairs = collar.solve_modes([d[0] for d in draws], 20.0)
    excess = -math.inf
    drift = 0.0
    violations = 0
    for (params, w1, w2, bc), pair in zip(draws, pairs):
        drift = max(drift, pair.wronskian_drift)
        kinds = {"interior": ("phi", "psi"), "neumann": ("psi",), "dirichlet": ("phi",)}[bc]
        bound = collar.mass_ratio_bound(params.lam, w1, w2)
        ratio = max(pair.mass_ratio(k, w1, w2) for k in kinds)
        excess = max(excess, ratio - bound)
        violations += ratio > bound + collar.RATIO_SLACK
    res.add("cases", cases, 1000, ">=")
    res.add("max_ratio_minus_bound", excess, collar.RATIO_SLACK)
    res.add("violations", violations, 0, "==")
    res.add("max_wronskian_drift", drift, 1e-8)
    return res


# -- pentagon maps ---------------------------------------------------------------------


def suite_pants_maps(seed: int, pairs: int = 200, delta: float = 1e-6, grid: int = 200, max_h: float = 1.0, estimate_grid: int = 40) -> SuiteResult:
    """Pentagon maps between nearby pentagons certify; intermediate estimates hold."""
    res = SuiteResult("pants-maps", {"pairs": pairs, "delta": delta, "grid": grid, "max_h": max_h, "estimate_grid": estimate_grid})
    rng = _rng(seed, 4)
    done = certified = 0
    worst_margin = math.inf
    estimate_failures = 0
    estimates_applied = 0
    worst_delta0 = 0.0
    heat = None
    while done < pairs:
        p = pants_maps.fermi_pentagon(rng.uniform(0.2, 4.0), rng.uniform(0.2, 4.0))
        if p.h0 > max_h:
            continue
        q = pants_maps.perturbed_pentagon(p, 1.0 + delta * rng.uniform(-1.0, 1.0))
        if q.h0 > max_h:
            continue
        rep = pants_maps.certify_pentagon_map(p, q, grid_n=grid, raise_on_failure=False)
        done += 1
        certified += rep.certified
        worst_delta0 = max(worst_delta0, rep.bound)
        worst_margin = min(worst_margin, min(rep.margins.values()))
        for c in pants_maps.pentagon_estimate_checks(p, q, grid_n=estimate_grid):
            if c.applies:
                estimates_applied += 1
                estimate_failures += not c.holds
        if heat is None:
            heat = pants_maps.distortion_grid(p, q, grid_n=40)
    res.add("pairs_certified", certified, pairs, ">=")
    res.add("max_delta0", worst_delta0, 1.0)
    res.add("min_margin", worst_margin, 0.0, ">=")
    res.add("intermediate_estimate_failures", estimate_failures, 0, "==")
    res.add("intermediate_estimates_checked", estimates_applied, 1, ">=")
    p = pants_maps.fermi_pentagon(1.3, 0.9)
    ident = pants_maps.certify_pentagon_map(p, p, grid_n=grid)
    res.add("identity_ratio_max", ident.ratio_max, 1.0, "==")
    res.add("identity_ratio_min", ident.ratio_min, 1.0, "==")
    res.data = {"heatmap": {"u": heat["u"][:, 0].tolist(), "ratio_max": heat["ratio_max"].tolist()}}
    return res


# -- spectral oracle ------------------------------------------------------------------


def suite_spectral(seed: int, instances: int = 20, count: int = 3) -> SuiteResult:
    """FD and shooting eigenvalues agree; small eigenfunctions obey the mass bound."""
    res = SuiteResult("oracle", {"instances": instances, "count": count})
    rng = _rng(seed, 5)
    probs = [
        oracle.SturmLiouvilleProblem(
            float(rng.uniform(1.0, 10.0)), float(rng.uniform(0.5, 5.0)), int(rng.integers(0, 4)),
            str(rng.choice(oracle.BCS)),
        )
        for _ in range(instances)
    ]
    out = oracle.cross_validate(probs, count)
    rel = max(row["rel_diff"] for r in out for row in r["rows"])
    mass_rows = [row["mass_check"] for r in out for row in r["rows"] if "mass_check" in row]
    res.add("max_relative_disagreement", rel, 1e-5)
    res.add("small_eigenfunctions_checked", len(mass_rows), 1, ">=")
    res.add("mass_bound_failures", sum(not m for m in mass_rows), 0, "==")
    res.data = {"table": [{k: v for k, v in r.items() if k != "rows"} | {"eigenvalues": [row["fd"] for row in r["rows"]]} for r in out]}
    return res


# -- random covers ----------------------------------------------------------------------


def suite_random_covers(seed: int, n: int = 500, trials: int = 10_000) -> SuiteResult:
    """Fixed-point-free probabilities match their limits; non-conjugate words decorrelate."""
    res = SuiteResult("covers", {"n": n, "trials": trials})
    base = int(np.random.SeedSequence([int(seed), 6]).generate_state(1)[0])
    hist = {}
    for w, d in (("a", 1), ("aa", 2)):
        est, se = covers.fixed_point_free_prob(w, n, trials, base + d)
        limit = covers.nica_limit(d)
        res.add(f"fixfree_{w}_z", abs(est - limit) / se, 3.0)
        res.data[f"fixfree_{w}"] = {"estimate": est, "stderr": se, "limit": limit}
        counts = covers.fixed_point_counts(w, n, trials, base + d)
        hist[w] = np.bincount(counts).tolist()
    joint = covers.joint_fixed_point_free(["ab", "aaB"], n, trials, base + 3)
    res.add("joint_factorization_z", abs(joint["difference"]) / joint["difference_stderr"], 3.0)
    res.data["joint"] = {k: v for k, v in joint.items() if isinstance(v, (int, float, str))}
    res.data["histograms"] = hist
    return res


# -- surfaces ----------------------------------------------------------------------


def suite_surfaces(seed: int) -> SuiteResult:
    """Chains of pieces have the right topology and their Rayleigh bound halves with genus."""
    res = SuiteResult("surface", {})
    for g, k, expected in ((9, 4, (2, 2, 2, 2)), (10, 4, (2, 2, 2, 3))):
        part = surface.genus_partition(g, k)
        z = surface.glue_chain(part)
        res.add(f"partition_{g}_{k}_matches", int(tuple(sorted(part.pieces)) == expected), 1, "==")
        res.add(f"euler_{g}_{k}", -z.euler_characteristic, 2 * g - 2, "==")
        res.add(f"genus_{g}_{k}", z.genus, g, "==")
        genera = sorted(p.genus for p in surface.rayleigh_upper_bound(z).pieces)
        res.add(f"piece_genera_{g}_{k}_match", int(tuple(genera) == expected), 1, "==")
    values = {}
    for gi in (1, 2, 4, 8, 16, 32):
        values[gi] = surface.rayleigh_upper_bound(surface.glue_chain(surface.genus_partition(2 * gi + 1, 2))).bound
    order = sorted(values)
    res.add("bound_strictly_decreasing", int(all(values[a] > values[b] for a, b in zip(order, order[1:]))), 1, "==")
    ratios = [values[2 * gi] / values[gi] for gi in order[:-1]]
    res.add("doubling_ratio_min", min(ratios), 0.4, ">=")
    res.add("doubling_ratio_max", max(ratios), 0.6)
    formula = max(abs(values[2 * gi] / values[gi] - (4 * math.pi * gi - 4) / (8 * math.pi * gi - 4)) for gi in order[:-1])
    res.add("doubling_ratio_formula_error", formula, 1e-12)
    res.data = {"piece_genus": order, "bound": [values[g] for g in order]}
    return res


# -- Cheng bound ----------------------------------------------------------------------


def suite_cheng(seed: int) -> SuiteResult:
    """Closed-form Cheng-type bound against high precision and its limit."""
    res = SuiteResult("cheng", {})
    with mp.workdps(40):
        ref = mp.mpf(1) / 4 + (4 * mp.pi / mp.acosh(2)) ** 2
        res.add("cheng_2_1_error", abs(surface.cheng_bound(2, 1) - float(ref)), 1e-9)
    gs = (2, 10, 100, 10**4)
    for k in (1, 3):
        vals = [surface.cheng_bound(g, k) for g in gs]
        res.add(f"monotone_k{k}", int(all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] > 0.25), 1, "==")
    worst = max(
        abs(surface.cheng_bound(g, k) - surface.cheng_ball_bound(surface.cheng_radius(g, k) / 2))
        for g in gs for k in (1, 2, 5)
    )
    res.add("ball_consistency", worst, 1e-12)
    res.data = {"genus": list(gs), "bound_k1": [surface.cheng_bound(g, 1) for g in gs]}
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "polygons": suite_polygons,
    "curvature": suite_curvature,
    "mass": suite_mass,
    "pants-maps": suite_pants_maps,
    "oracle": suite_spectral,
    "covers": suite_random_covers,
    "surface": suite_surfaces,
    "cheng": suite_cheng,
}

# which keyword a generic --trials / --delta option maps to, per suite
TRIALS_KEY = {"polygons": "trials", "mass": "cases", "pants-maps": "pairs", "oracle": "instances", "covers": "trials"}
DELTA_KEY = {"curvature": "delta", "pants-maps": "delta"}


def run_suite(name: str, seed: int, **params) -> SuiteResult:
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    try:
        return SUITES[name](seed, **params)
    except HypGeoError as exc:
        res = SuiteResult(name, dict(params))
        res.add(f"raised_{type(exc).__name__}", 1, 0, "==")
        res.data = {"error": str(exc)}
        return res


def run_suites(names, seed: int, trials: int | None = None, delta: float | None = None) -> list[SuiteResult]:
    out = []
    for name in names:
        params = {}
        if trials is not None and name in TRIALS_KEY:
            params[TRIALS_KEY[name]] = trials
        if delta is not None and name in DELTA_KEY:
            params[DELTA_KEY[name]] = delta
        out.append(run_suite(name, seed, **params))
    return out
