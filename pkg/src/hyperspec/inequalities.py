"""Universal eigenvalue inequalities evaluated on computed or supplied spectra.

Every quadratic-sum bound has the form

    sum_{i<=k} (lam_{k+1} - lam_i)^2 <= C sum_{i<=k} (lam_{k+1} - lam_i)(lam_i - a)

and differs only in (C, a) and in the geometric hypothesis it needs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import FUNCTIONAL_TOL, SATISFY_RTOL
from .conformal import TestFunctionSpec, evaluate
from .eigensolve import Spectrum
from .errors import UsageError
from .fem import GAUSS3, element_geometry, quadrature_points
from .geometry import GeometricProfile, minimal_slope_eps, slope_condition_holds


class InequalityKind(str, enum.Enum):
    PPW = "ppw"
    HILE_PROTTER = "hile_protter"
    YANG = "yang"
    CHENG_YANG_HYPERBOLIC = "cheng_yang_hyperbolic"
    LUO_ZHENG = "luo_zheng"
    HEIGHT_RATIO = "height_ratio"
    HEIGHT_RATIO_EPS = "height_ratio_eps"
    SLOPE_EPS = "slope_eps"
    CHENG_CONJECTURE = "cheng_conjecture"

    @classmethod
    def parse(cls, text: str) -> "InequalityKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise UsageError(f"unknown inequality kind {text!r}; expected one of {names}") from None

    @property
    def needs_profile(self) -> bool:
        return self in _PROFILE_KINDS

    @property
    def euclidean(self) -> bool:
        return self in (InequalityKind.PPW, InequalityKind.HILE_PROTTER, InequalityKind.YANG)


_PROFILE_KINDS = {
    InequalityKind.LUO_ZHENG,
    InequalityKind.HEIGHT_RATIO,
    InequalityKind.HEIGHT_RATIO_EPS,
    InequalityKind.SLOPE_EPS,
}

HYPERBOLIC_KINDS = [
    InequalityKind.CHENG_YANG_HYPERBOLIC,
    InequalityKind.LUO_ZHENG,
    InequalityKind.HEIGHT_RATIO,
    InequalityKind.HEIGHT_RATIO_EPS,
    InequalityKind.SLOPE_EPS,
    InequalityKind.CHENG_CONJECTURE,
]
EUCLIDEAN_KINDS = [InequalityKind.PPW, InequalityKind.HILE_PROTTER, InequalityKind.YANG]


def is_satisfied(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + SATISFY_RTOL * max(abs(lhs), abs(rhs), 1.0)


@dataclass
class InequalityReport:
    kind: InequalityKind
    k: int
    lhs: Optional[float]
    rhs: Optional[float]
    slack: Optional[float]
    satisfied: bool
    admissible: bool
    constants: dict = field(default_factory=dict)
    defined: bool = True
    h: Optional[float] = None
    dof: Optional[int] = None

    @property
    def conjecture(self) -> bool:
        return self.kind is InequalityKind.CHENG_CONJECTURE

    @property
    def hard(self) -> bool:
        """Whether a failure of this report is a failure of a proved statement."""
        return self.admissible and self.defined and not self.conjecture

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "k": self.k,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "satisfied": self.satisfied,
            "admissible": self.admissible,
            "defined": self.defined,
            "constants": dict(self.constants),
            "h": self.h,
            "dof": self.dof,
        }


CSV_COLUMNS = ["kind", "k", "lhs", "rhs", "slack", "satisfied", "admissible", "C", "a", "rho_ratio", "eps", "s_max", "h", "dof"]


def _check_eigs(eigs, k: int) -> np.ndarray:
    lam = np.asarray(eigs, dtype=float)
    if lam.ndim != 1:
        raise UsageError("eigenvalues must be a flat sequence")
    if not 1 <= k < len(lam):
        raise UsageError(f"k={k} needs 1 <= k < {len(lam)}")
    if np.any(np.diff(lam[: k + 1]) < 0):
        raise UsageError("eigenvalues must be sorted ascending")
    return lam


def sum_inequality_eval(eigs, k: int, C: float, a: float) -> tuple[float, float]:
    """(lhs, rhs) of the (C, a) quadratic-sum inequality at truncation k."""
    lam = _check_eigs(eigs, k)
    gap = lam[k] - lam[:k]
    lhs = float(np.sum(gap * gap))
    rhs = float(C * np.sum(gap * (lam[:k] - a)))
    return lhs, rhs


def coefficients(
    kind: InequalityKind,
    n: int,
    profile: Optional[GeometricProfile] = None,
    eps: Optional[float] = None,
) -> tuple[float, float, dict]:
    """(C, a, constants) for a quadratic-sum kind."""
    kind = InequalityKind(kind)
    shift = (n - 1) ** 2 / 4.0
    if kind.needs_profile and profile is None:
        raise UsageError(f"{kind.value} needs a geometric profile of the domain")
    consts: dict = {}
    if kind is InequalityKind.YANG:
        C, a = 4.0 / n, 0.0
    elif kind is InequalityKind.CHENG_YANG_HYPERBOLIC:
        C, a = 4.0, shift
    elif kind is InequalityKind.CHENG_CONJECTURE:
        C, a = 4.0 / n, shift
        consts["conjecture"] = True
    elif kind is InequalityKind.LUO_ZHENG:
        C, a = profile.rho_ratio * 4.0 / n, (n * n - 2 * n - 4) / 4.0
        consts["rho_ratio"] = profile.rho_ratio
    elif kind is InequalityKind.HEIGHT_RATIO:
        C, a = profile.rho_ratio * 4.0 / n, shift
        consts["rho_ratio"] = profile.rho_ratio
    elif kind is InequalityKind.HEIGHT_RATIO_EPS:
        e = profile.eps_cor if eps is None else eps
        C, a = 4.0 * (1.0 + e) / n, shift
        consts.update(rho_ratio=profile.rho_ratio, eps=e)
    elif kind is InequalityKind.SLOPE_EPS:
        if eps is not None:
            e = eps
        elif profile.eps_thm2 is not None:
            e = profile.eps_thm2
        else:
            # outside the admissible range; evaluated for information only
            e = minimal_slope_eps(profile.s_max)
        C, a = 4.0 * (1.0 + e) / n, shift
        consts.update(eps=e, s_max=profile.s_max)
    else:
        raise UsageError(f"{kind.value} is not a quadratic-sum inequality")
    consts = {"C": C, "a": a, **consts}
    return C, a, consts


def _admissible(kind: InequalityKind, n: int, metric: Optional[str], profile, consts: dict) -> bool:
    if kind.euclidean:
        return metric != "hyperbolic"
    if metric == "euclidean":
        return False
    if kind is InequalityKind.HEIGHT_RATIO_EPS:
        return profile.rho_ratio <= (1.0 + consts["eps"]) * (1 + 1e-12)
    if kind is InequalityKind.SLOPE_EPS:
        return slope_condition_holds(profile.s_max, consts["eps"], n)
    return True


def check(
    kind,
    eigs,
    k: int,
    profile: Optional[GeometricProfile] = None,
    n: int = 2,
    metric: Optional[str] = None,
    eps: Optional[float] = None,
    h: Optional[float] = None,
    dof: Optional[int] = None,
) -> InequalityReport:
    """Evaluate one inequality at truncation k.

    ``metric`` says which geometry the spectrum came from; hyperbolic
    statements are inadmissible on Euclidean spectra and vice versa.  When it
    is None both families are treated as applicable.
    """
    kind = InequalityKind(kind)
    if kind is InequalityKind.PPW:
        rep = _ppw(eigs, k, n)
    elif kind is InequalityKind.HILE_PROTTER:
        rep = _hile_protter(eigs, k, n)
    else:
        C, a, consts = coefficients(kind, n, profile, eps)
        lhs, rhs = sum_inequality_eval(eigs, k, C, a)
        rep = InequalityReport(kind, k, lhs, rhs, rhs - lhs, is_satisfied(lhs, rhs), True, consts)
        rep.admissible = _admissible(kind, n, metric, profile, consts)
    if kind.euclidean:
        rep.admissible = metric != "hyperbolic"
    rep.h, rep.dof = h, dof
    return rep


def _ppw(eigs, k: int, n: int) -> InequalityReport:
    lam = _check_eigs(eigs, k)
    lhs = float(lam[k] - lam[k - 1])
    rhs = float(4.0 / (k * n) * np.sum(lam[:k]))
    return InequalityReport(InequalityKind.PPW, k, lhs, rhs, rhs - lhs, is_satisfied(lhs, rhs), True, {"C": 4.0 / (k * n)})


def _hile_protter(eigs, k: int, n: int) -> InequalityReport:
    lam = _check_eigs(eigs, k)
    rhs = k * n / 4.0
    gap = lam[k] - lam[:k]
    if np.any(gap <= 0):
        # lam_{k+1} = lam_i: the quotient is undefined, not infinite
        return InequalityReport(InequalityKind.HILE_PROTTER, k, None, rhs, None, False, True, {}, defined=False)
    lhs = float(np.sum(lam[:k] / gap))
    # reversed sense: lhs >= rhs
    return InequalityReport(InequalityKind.HILE_PROTTER, k, lhs, rhs, lhs - rhs, is_satisfied(rhs, lhs), True, {})


def classic_checks(eigs, k: int, n: int) -> tuple[InequalityReport, InequalityReport]:
    """The first-gap bound and the quotient-sum bound for Euclidean domains."""
    return _ppw(eigs, k, n), _hile_protter(eigs, k, n)


def implied_bound(eigs, C: float, a: float) -> Optional[float]:
    """Largest lam_{k+1} compatible with the (C, a) inequality given lam_1..lam_k.

    Returns None when the quadratic has no real root, i.e. the inequality is
    vacuous at this k.
    """
    lam = np.asarray(eigs, dtype=float)
    k = len(lam)
    if k < 1:
        raise UsageError("need at least one eigenvalue")
    s1 = float(np.sum(lam))
    sa = float(np.sum(lam - a))
    qa = float(k)
    qb = -(2.0 * s1 + C * sa)
    qc = float(np.sum(lam * lam)) + C * float(np.sum(lam * (lam - a)))
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0:
        return None
    return (-qb + math.sqrt(disc)) / (2.0 * qa)


def kind_implied_bound(kind, eigs, n: int, profile=None, eps=None) -> Optional[float]:
    C, a, _ = coefficients(kind, n, profile, eps)
    return implied_bound(eigs, C, a)


# ---------------------------------------------------------------------------
# functional inequality on discrete eigenfunctions


@dataclass
class FunctionalCheck:
    label: str
    k: int
    lhs: float
    rhs: float
    satisfied: bool
    tol: float
    A: np.ndarray  # int u_i^2 |grad f|^2 dV
    B: np.ndarray  # int (2 grad f . grad u_i + u_i Lap f)^2 dV

    @property
    def rel_slack(self) -> float:
        return (self.rhs - self.lhs) / max(abs(self.rhs), 1e-300)

    def to_dict(self) -> dict:
        return {
            "test_function": self.label,
            "k": self.k,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "rel_slack": self.rel_slack,
            "satisfied": self.satisfied,
            "tol": self.tol,
        }


def _element_fields(spec: Spectrum, count: int):
    """u at quadrature nodes (T,3,c), Euclidean gradients (T,2,c), nodes (T,3,2), volume weights (T,3)."""
    mesh = spec.mesh
    if mesh is None:
        raise UsageError("spectrum carries no mesh")
    U = spec.full_vectors()[:, :count]
    area, grads = element_geometry(mesh)
    Ut = U[mesh.triangles]  # (T,3,c)
    uq = np.einsum("qa,tac->tqc", GAUSS3, Ut)
    du = np.einsum("tad,tac->tdc", grads, Ut)
    qp = quadrature_points(mesh)
    w = np.repeat((area / 3.0)[:, None], 3, axis=1)
    if spec.metric == "hyperbolic":
        w = w * qp[..., 1] ** (-spec.n)
    return uq, du, qp, w


def functional_terms(spec: Spectrum, f: TestFunctionSpec, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-eigenfunction integrals A_i and B_i for i < count."""
    uq, du, qp, w = _element_fields(spec, count)
    if spec.metric == "hyperbolic":
        if f.n != spec.n:
            raise UsageError(f"test function has n={f.n} but the spectrum has n={spec.n}")
        vals = evaluate(f, qp)
        gsq, lap = vals.grad_norm_sq, vals.laplacian_g
        # grad f . grad u = x_n^2 grad0 f . grad0 u
        fu = qp[..., 1][..., None] ** 2 * np.einsum("tqd,tdc->tqc", vals.grad0, du)
    else:
        if f.family != "coordinate":
            raise UsageError(f"{f.family} is a hyperbolic test function; Euclidean spectra take coordinate:p only")
        gsq = np.ones(qp.shape[:2])
        lap = np.zeros(qp.shape[:2])
        fu = np.broadcast_to(du[:, None, f.p - 1, :], uq.shape)
    A = np.einsum("tq,tq,tqc->c", w, gsq, uq * uq)
    B = np.einsum("tq,tqc->c", w, (2.0 * fu + uq * lap[..., None]) ** 2)
    return A, B


def functional_check(spec: Spectrum, f: TestFunctionSpec, k: int, tol: float = FUNCTIONAL_TOL) -> FunctionalCheck:
    """sum (lam_{k+1}-lam_i)^2 A_i <= sum (lam_{k+1}-lam_i) B_i up to a relative tolerance."""
    if not 1 <= k < spec.k:
        raise UsageError(f"need at least k+1={k + 1} eigenpairs, spectrum has {spec.k}")
    A, B = functional_terms(spec, f, k)
    lam = spec.eigenvalues
    gap = lam[k] - lam[:k]
    lhs = float(np.sum(gap * gap * A))
    rhs = float(np.sum(gap * B))
    ok = lhs <= rhs + tol * max(abs(rhs), abs(lhs))
    return FunctionalCheck(f.label, k, lhs, rhs, ok, tol, A, B)


def height_identity_terms(spec: Spectrum, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of int (2 x_n du/dx_n + (1-n) u)^2 = int (4 x_n^2 (du/dx_n)^2 - (n-1)^2 u^2), per eigenfunction."""
    if spec.metric != "hyperbolic":
        raise UsageError("the height identity concerns hyperbolic spectra")
    n = spec.n
    uq, du, qp, w = _element_fields(spec, count)
    xn = qp[..., 1][..., None]
    dn = du[:, None, -1, :]
    left = np.einsum("tq,tqc->c", w, (2.0 * xn * dn + (1 - n) * uq) ** 2)
    right = np.einsum("tq,tqc->c", w, 4.0 * xn * xn * dn * dn - (n - 1) ** 2 * uq * uq)
    return left, right


def evaluate_all(
    eigs: Sequence[float],
    kinds,
    k_values,
    n: int,
    profile: Optional[GeometricProfile] = None,
    metric: Optional[str] = None,
    eps: Optional[float] = None,
    h: Optional[float] = None,
    dof: Optional[int] = None,
) -> list[InequalityReport]:
    out = []
    for kind in kinds:
        for k in k_values:
            out.append(check(kind, eigs, k, profile, n, metric, eps if InequalityKind(kind) is InequalityKind.SLOPE_EPS else None, h, dof))
    return out


def csv_row(rep: InequalityReport) -> list:
    c = rep.constants
    return [
        rep.kind.value,
        rep.k,
        rep.lhs,
        rep.rhs,
        rep.slack,
        rep.satisfied,
        rep.admissible,
        c.get("C"),
        c.get("a"),
        c.get("rho_ratio"),
        c.get("eps"),
        c.get("s_max"),
        rep.h,
        rep.dof,
    ]
