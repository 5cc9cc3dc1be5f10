"""Refinement-ladder pipeline: mesh -> assemble -> eliminate -> solve -> checks -> reports."""
from __future__ import annotations

import copy
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import oracles
from .config import EIG_RESIDUAL_TOL, FUNCTIONAL_TOL, MAX_REFINEMENTS, SCHEMA_VERSION
from .conformal import parse_test_function
from .eigensolve import Spectrum, solve_lowest
from .errors import UsageError
from .fem import build_forms
from .geometry import (
    Domain,
    EuclideanBox,
    EuclideanDisk,
    GeodesicBall,
    domain_from_dict,
    domain_to_dict,
    domain_volume,
    geometric_profile,
    hyperbolic_distance,
)
from .inequalities import (
    CSV_COLUMNS,
    EUCLIDEAN_KINDS,
    HYPERBOLIC_KINDS,
    InequalityKind,
    csv_row,
    evaluate_all,
    functional_check,
)
from .mesh import Mesh, generate, mesh_to_text, refine
from .report import csv_text, dumps

log = logging.getLogger(__name__)

# relative slack allowed in the level-to-level monotonicity assertion
MONOTONE_RTOL = 1e-9


@dataclass
class ScenarioConfig:
    domain: dict
    target_h: float = 0.1
    refinements: int = 0
    k_max: int = 10
    kinds: list = field(default_factory=list)
    test_functions: list = field(default_factory=list)
    functional_k: Optional[int] = None
    eps: Optional[float] = None
    method: str = "auto"
    tolerances: dict = field(
        default_factory=lambda: {"functional_tol": FUNCTIONAL_TOL, "eig_residual_tol": EIG_RESIDUAL_TOL}
    )
    output: dict = field(default_factory=lambda: {"dir": ".", "name": "report", "mesh": False})

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        if not isinstance(doc, dict) or "domain" not in doc:
            raise UsageError("config must be an object with a 'domain' entry")
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown config fields: {', '.join(sorted(unknown))}")
        base = cls(domain=doc["domain"])
        merged = asdict(base)
        for key, val in doc.items():
            if isinstance(merged.get(key), dict) and isinstance(val, dict) and key != "domain":
                merged[key] = {**merged[key], **val}
            else:
                merged[key] = val
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        self.domain_obj()
        try:
            self.target_h = float(self.target_h)
            self.refinements = int(self.refinements)
            self.k_max = int(self.k_max)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad numeric config value: {exc}") from None
        if not self.target_h > 0:
            raise UsageError("target_h must be positive")
        if not 0 <= self.refinements <= MAX_REFINEMENTS:
            raise UsageError(f"refinements must be in 0..{MAX_REFINEMENTS}")
        if self.k_max < 1:
            raise UsageError("k_max must be >= 1")
        if isinstance(self.kinds, str):
            self.kinds = [s for s in self.kinds.split(",") if s]
        if isinstance(self.test_functions, str):
            self.test_functions = [s for s in self.test_functions.split(",") if s]
        self.kind_list()
        self.test_function_list()
        if self.functional_k is not None and not 1 <= int(self.functional_k) <= self.k_max:
            raise UsageError("functional_k must lie in 1..k_max")

    def domain_obj(self) -> Domain:
        if not isinstance(self.domain, dict):
            raise UsageError("domain must be a JSON object")
        return domain_from_dict(self.domain)

    def kind_list(self) -> list[InequalityKind]:
        out = []
        for name in self.kinds:
            if name == "hyperbolic":
                out.extend(HYPERBOLIC_KINDS)
            elif name == "euclidean":
                out.extend(EUCLIDEAN_KINDS)
            elif name == "all":
                out.extend(EUCLIDEAN_KINDS + HYPERBOLIC_KINDS)
            else:
                out.append(InequalityKind.parse(name))
        return list(dict.fromkeys(out))

    def test_function_list(self):
        n = self.domain_obj().n
        return [parse_test_function(s, n) for s in self.test_functions]

    def to_dict(self) -> dict:
        return asdict(self)


def apply_overrides(doc: dict, overrides: dict) -> dict:
    """Set dotted keys ("domain.radius": 2) in a nested config document."""
    doc = copy.deepcopy(doc)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = doc
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise UsageError(f"cannot set {dotted}: {part} is not an object")
        node[parts[-1]] = value
    return doc


def parse_override_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


# ---------------------------------------------------------------------------
# radial-mode identification for geodesic balls


def angular_variance(spec: Spectrum, ball: GeodesicBall, bins: int = 40) -> np.ndarray:
    """Fraction of each eigenfunction's mass not explained by a function of geodesic distance.

    Vertices are binned by hyperbolic distance to the ball's center and u is
    fitted by a weighted line in the distance inside every bin, so the radial
    slope does not register as angular variation.  Weights are the lumped
    hyperbolic mass.
    """
    mesh = spec.mesh
    U = spec.full_vectors()
    center = np.array([0.0, ball.anchor_height])
    dist = np.array([hyperbolic_distance(v, center) for v in mesh.vertices])
    which = np.minimum((dist / ball.radius * bins).astype(int), bins - 1)
    areas = mesh.signed_areas()
    lump = np.zeros(mesh.n_vertices)
    np.add.at(lump, mesh.triangles.ravel(), np.repeat(areas / 3.0, 3))
    w = lump / mesh.vertices[:, 1] ** spec.n

    def bin_mean(values):
        num = np.bincount(which, weights=w * values, minlength=bins)
        den = np.bincount(which, weights=w, minlength=bins)
        return np.divide(num, den, out=np.zeros(bins), where=den > 0)

    dc = dist - bin_mean(dist)[which]
    var_d = bin_mean(dc * dc)
    # bins holding a single vertex have var_d at rounding level
    spread = var_d > (1e-8 * ball.radius / bins) ** 2
    out = np.empty(spec.k)
    for j in range(spec.k):
        u = U[:, j]
        slope = np.divide(bin_mean(dc * u), var_d, out=np.zeros(bins), where=spread)
        fit = bin_mean(u)[which] + slope[which] * dc
        out[j] = np.sum(w * (u - fit) ** 2) / np.sum(w * u * u)
    return out


def radial_modes(spec: Spectrum, ball: GeodesicBall, threshold: float = 1e-3) -> list[int]:
    return [int(i) for i in np.flatnonzero(angular_variance(spec, ball) < threshold)]


# ---------------------------------------------------------------------------
# oracle comparison


def oracle_diff(d: Domain, spec: Spectrum) -> Optional[dict]:
    lam = spec.eigenvalues
    if isinstance(d, EuclideanBox) and d.lo == (0.0, 0.0) and d.hi == (1.0, 1.0):
        ref = oracles.reference_spectrum("square", len(lam))
        idx = list(range(len(lam)))
    elif isinstance(d, EuclideanDisk):
        ref = oracles.reference_spectrum("disk", len(lam), d.radius)
        idx = list(range(len(lam)))
    elif isinstance(d, GeodesicBall) and d.n == 2:
        idx = radial_modes(spec, d)
        if not idx:
            return None
        ref = oracles.reference_spectrum("ball", len(idx), d.radius, 2)
    else:
        return None
    computed = lam[idx]
    refv = ref.eigenvalues[: len(idx)]
    return {
        "source": ref.source,
        "indices": idx,
        "reference": refv,
        "computed": computed,
        "rel_diff": (computed - refv) / refv,
    }


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class ScenarioResult:
    report: dict
    csv: list  # one CSV text per level
    meshes: list  # mesh text per level (empty unless requested)
    passed: bool
    spectrum: Optional[dict] = None


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    d = cfg.domain_obj()
    metric = "hyperbolic" if d.hyperbolic else "euclidean"
    n = d.n
    kinds = cfg.kind_list()
    tfs = cfg.test_function_list()
    fk = int(cfg.functional_k or cfg.k_max)
    ftol = float(cfg.tolerances.get("functional_tol", FUNCTIONAL_TOL))
    rtol = float(cfg.tolerances.get("eig_residual_tol", EIG_RESIDUAL_TOL))
    profile = geometric_profile(d) if d.hyperbolic else None
    vol = domain_volume(d)

    levels = []
    csvs = []
    meshes = []
    hard_failures = 0
    conj_violations = 0
    prev = None
    monotone_violations = []
    mesh: Optional[Mesh] = None
    last_spec = None
    for level in range(cfg.refinements + 1):
        mesh = generate(d, cfg.target_h) if mesh is None else refine(mesh)
        forms = build_forms(mesh, metric, n)
        want = cfg.k_max + 1
        if want > forms.dof:
            raise UsageError(f"level {level} has only {forms.dof} dofs but k_max+1={want} eigenpairs were requested")
        spec = solve_lowest(forms, want, cfg.method, rtol, mesh)
        last_spec = spec
        lam = spec.eigenvalues
        h = mesh.h
        reps = evaluate_all(lam, kinds, range(1, cfg.k_max + 1), n, profile, metric, cfg.eps, h, forms.dof)
        for r in reps:
            if r.hard and not r.satisfied:
                hard_failures += 1
            if r.conjecture and not r.satisfied:
                conj_violations += 1
        fchecks = []
        if tfs:
            for f in tfs:
                fc = functional_check(spec, f, fk, ftol)
                fchecks.append(fc.to_dict())
                if not fc.satisfied:
                    hard_failures += 1
        if prev is not None:
            bad = np.flatnonzero(lam > prev * (1 + MONOTONE_RTOL))
            for i in bad:
                monotone_violations.append({"level": level, "index": int(i), "previous": prev[i], "current": lam[i]})
        prev = lam
        weyl = [oracles.weyl_prediction(k, n, vol) for k in range(1, len(lam) + 1)]
        levels.append(
            {
                "level": level,
                "h": h,
                "dof": forms.dof,
                "vertices": mesh.n_vertices,
                "triangles": mesh.n_triangles,
                "spectrum": spec.to_dict(),
                "clusters": [c for c in spec.clusters() if len(c) > 1],
                "max_rel_residual": float(np.max(spec.residuals / lam)),
                "weyl": {"volume": vol, "ratio": list(lam / np.array(weyl))},
                "inequalities": [r.to_dict() for r in reps],
                "functional": fchecks,
                "oracle": oracle_diff(d, spec),
            }
        )
        csvs.append(csv_text(CSV_COLUMNS, [csv_row(r) for r in reps]))
        if cfg.output.get("mesh"):
            meshes.append(mesh_to_text(mesh))
        log.info("level %d: h=%.4g dof=%d lam_1=%.10g", level, h, forms.dof, lam[0])

    passed = hard_failures == 0 and not monotone_violations
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "domain": domain_to_dict(d),
        "metric": metric,
        "profile": None if profile is None else profile.to_dict(),
        "levels": levels,
        "monotone": {"ok": not monotone_violations, "violations": monotone_violations},
        "summary": {
            "hard_failures": hard_failures,
            "conjecture_violations": conj_violations,
            "passed": passed,
        },
    }
    spectrum_doc = {**last_spec.to_dict(), "domain": domain_to_dict(d)}
    return ScenarioResult(report, csvs, meshes, passed, spectrum_doc)


def emit_report(result: ScenarioResult, cfg: ScenarioConfig) -> list[Path]:
    """Write <name>.json, <name>_level<L>.csv, <name>_spectrum.json and optional meshes."""
    out_dir = Path(cfg.output.get("dir", "."))
    name = cfg.output.get("name", "report")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def put(path: Path, text: str):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        written.append(path)

    put(out_dir / f"{name}.json", dumps(result.report))
    for level, text in enumerate(result.csv):
        put(out_dir / f"{name}_level{level}.csv", text)
    if result.spectrum is not None:
        put(out_dir / f"{name}_spectrum.json", dumps(result.spectrum))
    for level, text in enumerate(result.meshes):
        put(out_dir / f"{name}_level{level}.mesh", text)
    return written


def thread_limit() -> Optional[int]:
    raw = os.environ.get("HYPERSPEC_THREADS")
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"HYPERSPEC_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("HYPERSPEC_THREADS must be >= 1")
    return value
