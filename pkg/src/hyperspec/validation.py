"""The built-in validation suite run by ``hyperspec validate``.

Every check compares the finite element pipeline against an independent
reference (analytic spectra, Bessel zeros, radial shooting, closed-form
conformal identities) or against a proved inequality.  The suite is
deterministic: fixed meshes, fixed seeds, no timings in the report.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import oracles
from .config import FD_STEP, SCHEMA_VERSION
from .conformal import FAMILIES, TestFunctionSpec, fd_check
from .eigensolve import Spectrum, solve_lowest
from .fem import build_forms
from .geometry import (
    EuclideanBox,
    EuclideanDisk,
    GeodesicBall,
    HalfSpaceBox,
    domain_to_dict,
    geometric_profile,
    hyperbolic_volume,
    slope_condition_holds,
)
from .inequalities import (
    HYPERBOLIC_KINDS,
    InequalityKind,
    check,
    coefficients,
    functional_check,
    implied_bound,
)
from .mesh import generate, refine
from .scenario import radial_modes

SPECTRUM_FLOOR = 0.25  # (n-1)^2/4 for n = 2
FD_POINTS = 1000
FD_TOL = 1e-6
INEQ_K = 20
FUNCTIONAL_K = 10
WEYL_K = (30, 50)
WEYL_BAND = (0.7, 1.4)


@dataclass
class Criterion:
    id: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed, "details": self.details}


@dataclass
class Ladder:
    """Spectra of one domain over successive uniform refinements."""

    label: str
    domain: object
    spectra: list

    @property
    def finest(self) -> Spectrum:
        return self.spectra[-1]


def ladder(label, domain, target_h: float, refinements: int, count: int, keep_from: int = 0) -> Ladder:
    metric = "hyperbolic" if domain.hyperbolic else "euclidean"
    mesh = generate(domain, target_h)
    out = []
    for level in range(refinements + 1):
        if level:
            mesh = refine(mesh)
        if level >= keep_from:
            out.append(solve_lowest(build_forms(mesh, metric, domain.n), count, mesh=mesh))
    return Ladder(label, domain, out)


class Suite:
    """Lazily computed spectra shared between criteria."""

    def __init__(self):
        self._cache: dict = {}

    def get(self, key: str) -> Ladder:
        if key not in self._cache:
            self._cache[key] = self._build(key)
        return self._cache[key]

    @staticmethod
    def _build(key: str) -> Ladder:
        if key == "square":
            return ladder(key, EuclideanBox((0.0, 0.0), (1.0, 1.0)), 0.25, 4, 6, keep_from=4)
        if key == "disk":
            return ladder(key, EuclideanDisk((0.0, 0.0), 1.0), 0.1, 2, 6, keep_from=2)
        if key == "box":
            return ladder(key, HalfSpaceBox((0.0, 1.0), (1.0, 2.0)), 0.05, 2, WEYL_K[1] + 1)
        if key == "ball_0.5":
            return ladder(key, GeodesicBall(0.5), 0.05, 2, INEQ_K + 1, keep_from=1)
        if key == "ball_1":
            return ladder(key, GeodesicBall(1.0), 0.1, 2, INEQ_K + 1, keep_from=1)
        raise KeyError(key)

    def hyperbolic(self) -> list[Ladder]:
        return [self.get("box"), self.get("ball_0.5"), self.get("ball_1")]


def _rel(a, b) -> float:
    return abs(a - b) / abs(b)


def square_spectrum_check(s: Suite) -> Criterion:
    sp = s.get("square").finest
    ref = oracles.square_spectrum(5)
    rel = [_rel(a, b) for a, b in zip(sp.eigenvalues[:5], ref)]
    return Criterion(
        1,
        "unit square: first five eigenvalues within 1% of pi^2 (p^2+q^2)",
        max(rel) <= 0.01,
        {"dof": sp.dof, "computed": sp.eigenvalues[:5], "reference": ref, "rel_err": rel},
    )


def disk_spectrum_check(s: Suite) -> Criterion:
    sp = s.get("disk").finest
    j01 = oracles.bessel_zero(0, 1) ** 2
    j11 = oracles.bessel_zero(1, 1) ** 2
    lam = sp.eigenvalues
    e1 = _rel(lam[0], j01)
    e23 = [_rel(lam[1], j11), _rel(lam[2], j11)]
    return Criterion(
        2,
        "unit disk: lambda_1 within 1% of j01^2, lambda_2 = lambda_3 within 1.5% of j11^2",
        e1 <= 0.01 and max(e23) <= 0.015,
        {"dof": sp.dof, "computed": lam[:3], "reference": [j01, j11, j11], "rel_err": [e1] + e23},
    )


def ball_radial_check(s: Suite) -> Criterion:
    lad = s.get("ball_1")
    sp = lad.finest
    idx = radial_modes(sp, lad.domain)
    ref = oracles.hyperbolic_ball_radial(1.0, 2, 2)
    details = {"dof": sp.dof, "radial_indices": idx, "reference": ref}
    if len(idx) < 2 or idx[0] != 0:
        return Criterion(3, "geodesic ball r=1: FEM against radial shooting", False, details)
    computed = sp.eigenvalues[idx[:2]]
    rel = [_rel(a, b) for a, b in zip(computed, ref)]
    details.update(computed=computed, rel_err=rel)
    return Criterion(
        3,
        "geodesic ball r=1: lambda_1 within 1% and two radial modes within 2% of radial shooting",
        rel[0] <= 0.01 and max(rel) <= 0.02,
        details,
    )


def spectrum_floor_check(s: Suite) -> Criterion:
    rows = {}
    exceptions = 0
    for lad in s.hyperbolic():
        lo = min(float(sp.eigenvalues.min()) for sp in lad.spectra)
        bad = sum(int(np.sum(sp.eigenvalues < SPECTRUM_FLOOR)) for sp in lad.spectra)
        rows[lad.label] = {"min_eigenvalue": lo, "exceptions": bad}
        exceptions += bad
    return Criterion(4, "every hyperbolic eigenvalue is at least 1/4", exceptions == 0, rows)


def inequality_suite_check(s: Suite) -> Criterion:
    ok = True
    rows = {}
    for lad in s.hyperbolic():
        prof = geometric_profile(lad.domain)
        admissible_slope = prof.eps_thm2 is not None and slope_condition_holds(prof.s_max, prof.eps_thm2, 2)
        for level, sp in enumerate(lad.spectra[-2:]):
            lam = sp.eigenvalues
            fails = {}
            conj_slack = []
            strict_below = True
            slope_flags_ok = True
            for k in range(1, INEQ_K + 1):
                for kind in (InequalityKind.CHENG_YANG_HYPERBOLIC, InequalityKind.HEIGHT_RATIO, InequalityKind.SLOPE_EPS):
                    rep = check(kind, lam, k, prof, 2, "hyperbolic")
                    if kind is InequalityKind.SLOPE_EPS and rep.admissible != admissible_slope:
                        slope_flags_ok = False
                    if rep.hard and not rep.satisfied:
                        fails.setdefault(kind.value, []).append(k)
                hr = check(InequalityKind.HEIGHT_RATIO, lam, k, prof, 2, "hyperbolic")
                lz = check(InequalityKind.LUO_ZHENG, lam, k, prof, 2, "hyperbolic")
                strict_below &= hr.rhs < lz.rhs
                conj_slack.append(check(InequalityKind.CHENG_CONJECTURE, lam, k, prof, 2, "hyperbolic").slack)
            good = not fails and strict_below and slope_flags_ok
            ok &= good
            rows[f"{lad.label}/level{level}"] = {
                "dof": sp.dof,
                "failures": fails,
                "height_ratio_rhs_below_luo_zheng": strict_below,
                "slope_eps_admissible": admissible_slope,
                "conjecture_slack": conj_slack,
            }
    return Criterion(5, "hyperbolic inequality suite for k = 1..20 (conjecture reported only)", ok, rows)


def functional_suite_check(s: Suite) -> Criterion:
    ok = True
    rows = {}
    for lad in s.hyperbolic():
        coarse, fine = lad.spectra[-2], lad.spectra[-1]
        for fam in FAMILIES:
            f = TestFunctionSpec(fam, 2, 1)
            a = functional_check(coarse, f, FUNCTIONAL_K)
            b = functional_check(fine, f, FUNCTIONAL_K)
            good = b.satisfied and b.rel_slack >= a.rel_slack
            ok &= good
            rows[f"{lad.label}/{f.label}"] = {
                "lhs": b.lhs,
                "rhs": b.rhs,
                "rel_slack": b.rel_slack,
                "rel_slack_coarser": a.rel_slack,
                "passed": good,
            }
    return Criterion(6, "functional inequality at k=10 within 2%, slack non-worsening under refinement", ok, rows)


def conformal_fd_check(s: Suite) -> Criterion:
    rng = np.random.default_rng(20240611)
    rows = {}
    ok = True
    for n in (2, 3, 5):
        for fam in FAMILIES:
            for p in ((1,) if fam == "log_height" else (1, n - 1)):
                spec = TestFunctionSpec(fam, n, p)
                worst = 0.0
                for _ in range(FD_POINTS):
                    x = np.concatenate([rng.uniform(-2.0, 2.0, n - 1), rng.uniform(0.2, 3.0, 1)])
                    worst = max(worst, fd_check(spec, x, FD_STEP).rel_err)
                ok &= worst <= FD_TOL
                rows[f"n={n}/{spec.label}"] = worst
    return Criterion(7, "closed-form Laplacians match finite differences to 1e-6", ok, rows)


def implied_bound_check(s: Suite) -> Criterion:
    lam1 = s.get("box").finest.eigenvalues[0]
    ib = implied_bound([lam1], 4.0 / 2, 0.0)
    identity_err = abs(ib - (1 + 4.0 / 2) * lam1) / ((1 + 4.0 / 2) * lam1)
    ok = identity_err <= 1e-12
    checked = violations = 0
    spectra = [(lad.label, sp, lad.domain) for lad in s.hyperbolic() for sp in lad.spectra]
    spectra += [(lad.label, lad.finest, lad.domain) for lad in (s.get("square"), s.get("disk"))]
    for label, sp, dom in spectra:
        lam = sp.eigenvalues
        if dom.hyperbolic:
            prof = geometric_profile(dom)
            kinds = list(HYPERBOLIC_KINDS)
        else:
            prof = None
            kinds = [InequalityKind.YANG]
        for kind in kinds:
            C, a, _ = coefficients(kind, 2, prof)
            for k in range(1, len(lam)):
                rep = check(kind, lam, k, prof, 2)
                if not rep.satisfied:
                    continue
                checked += 1
                bound = implied_bound(lam[:k], C, a)
                if bound is None or bound < lam[k] * (1 - 1e-12):
                    violations += 1
    ok &= violations == 0
    return Criterion(
        8,
        "implied bound: closed form at k=1 and an upper bound wherever the inequality holds",
        ok,
        {"identity_rel_err": identity_err, "pairs_checked": checked, "violations": violations},
    )


def weyl_trend_check(s: Suite) -> Criterion:
    lad = s.get("box")
    vol = hyperbolic_volume(lad.domain)
    ks = np.arange(WEYL_K[0], WEYL_K[1] + 1)
    weyl = np.array([oracles.weyl_prediction(int(k), 2, vol) for k in ks])
    fine = lad.spectra[-1].eigenvalues[ks - 1] / weyl
    prev = lad.spectra[-2].eigenvalues[ks - 1] / weyl
    in_band = bool(np.all((fine >= WEYL_BAND[0]) & (fine <= WEYL_BAND[1])))
    toward = bool(np.all(np.abs(fine - 1) <= np.abs(prev - 1)))
    return Criterion(
        9,
        "Weyl ratio for k = 30..50 in [0.7, 1.4] and moving toward 1",
        in_band and toward,
        {"volume": vol, "ratio_finest": fine, "ratio_previous": prev, "in_band": in_band, "toward_one": toward},
    )


CRITERIA: list[Callable[[Suite], Criterion]] = [
    square_spectrum_check,
    disk_spectrum_check,
    ball_radial_check,
    spectrum_floor_check,
    inequality_suite_check,
    functional_suite_check,
    conformal_fd_check,
    implied_bound_check,
    weyl_trend_check,
]


def run_validation(progress: Callable[[Criterion], None] | None = None) -> dict:
    suite = Suite()
    results = []
    for fn in CRITERIA:
        c = fn(suite)
        results.append(c)
        if progress is not None:
            progress(c)
    domains = {key: domain_to_dict(suite.get(key).domain) for key in ("square", "disk", "box", "ball_0.5", "ball_1")}
    spectra = {
        key: [{"level_dof": sp.dof, "h": sp.h, "eigenvalues": sp.eigenvalues} for sp in suite.get(key).spectra]
        for key in domains
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": "validate",
        "domains": domains,
        "spectra": spectra,
        "criteria": [c.to_dict() for c in results],
        "passed": all(c.passed for c in results),
    }


def summary_lines(report: dict) -> list[str]:
    return [f"{'PASS' if c['passed'] else 'FAIL'} [{c['id']}] {c['name']}" for c in report["criteria"]]

