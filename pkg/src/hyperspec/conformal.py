"""Test functions on the half-space model and their hyperbolic gradients and Laplacians.

With g = e^{2h} g0 and e^{2h} = 1/x_n^2 (h = -ln x_n):

    grad F . grad G = x_n^2 grad0 F . grad0 G
    Lap_g F        = x_n^2 (Lap0 F + (n-2) grad0 h . grad0 F)
                   = x_n^2 Lap0 F - (n-2) x_n dF/dx_n

Gradients are always stored in the Euclidean coordinate basis (grad0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import FD_STEP
from .errors import DomainError, UsageError

FAMILIES = ("coordinate", "log_height", "arcsinh_ratio")


@dataclass(frozen=True)
class TestFunctionSpec:
    family: str
    n: int
    p: int = 1  # 1-based horizontal index for coordinate / arcsinh_ratio

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown test function family {self.family!r}")
        if self.n < 2:
            raise UsageError("dimension must be >= 2")
        if self.family != "log_height" and not 1 <= self.p <= self.n - 1:
            raise UsageError(f"index p={self.p} out of range 1..{self.n - 1}")

    @property
    def label(self) -> str:
        return self.family if self.family == "log_height" else f"{self.family}:{self.p}"


def parse_test_function(text: str, n: int) -> TestFunctionSpec:
    """"coordinate:1", "log_height", "arcsinh_ratio:2", ..."""
    family, _, idx = text.partition(":")
    return TestFunctionSpec(family.strip(), n, int(idx) if idx else 1)


@dataclass(frozen=True)
class TestFunctionValues:
    value: float
    grad0: np.ndarray
    grad_norm_sq: float
    laplacian_g: float

    __test__ = False


def arcsinh(v):
    """arcsinh through ln(v + sqrt(1 + v^2)), odd-symmetrized, with a large-|v| branch."""
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    big = a > 1e8
    safe = np.where(big, 0.0, a)
    small_branch = np.log1p(safe + safe * safe / (1.0 + np.sqrt(1.0 + safe * safe)))
    big_branch = np.log(2.0 * np.where(big, a, 1.0)) + 1.0 / (4.0 * np.where(big, a, 1.0) ** 2)
    out = np.where(big, big_branch, small_branch)
    return np.copysign(out, v)


def evaluate(spec: TestFunctionSpec, X) -> TestFunctionValues:
    """Vectorized closed forms at points X of shape (..., n)."""
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != spec.n:
        raise UsageError(f"points have dimension {X.shape[-1]}, test function has n={spec.n}")
    xn = X[..., -1]
    if np.any(xn <= 0):
        raise DomainError("test functions need x_n > 0")
    n = spec.n
    grad0 = np.zeros(X.shape)
    if spec.family == "coordinate":
        value = X[..., spec.p - 1].copy()
        grad0[..., spec.p - 1] = 1.0
        gsq = xn * xn
        lap = np.zeros_like(xn)
    elif spec.family == "log_height":
        value = np.log(xn)
        grad0[..., -1] = 1.0 / xn
        gsq = np.ones_like(xn)
        lap = np.full_like(xn, 1.0 - n)
    else:
        v = X[..., spec.p - 1] / xn
        root = np.sqrt(1.0 + v * v)
        value = arcsinh(v)
        grad0[..., spec.p - 1] = 1.0 / (xn * root)
        grad0[..., -1] = -v / (xn * root)
        gsq = np.ones_like(xn)
        # tanh(arcsinh v) = v / sqrt(1 + v^2)
        lap = (n - 1) * v / root
    return TestFunctionValues(value, grad0, gsq, lap)


def eval_test_function(spec: TestFunctionSpec, x) -> TestFunctionValues:
    x = np.asarray(x, dtype=float)
    vals = evaluate(spec, x[None, :])
    return TestFunctionValues(
        float(vals.value[0]), vals.grad0[0], float(vals.grad_norm_sq[0]), float(vals.laplacian_g[0])
    )


def metric_inner(x, a, b):
    """g(grad F, grad G) from Euclidean gradients a = grad0 F, b = grad0 G at points x."""
    x = np.asarray(x, dtype=float)
    return x[..., -1] ** 2 * np.sum(np.asarray(a) * np.asarray(b), axis=-1)


@dataclass(frozen=True)
class FDCheck:
    fd_laplacian: float
    closed_form: float
    rel_err: float


def fd_laplacian(spec: TestFunctionSpec, x, step: float = FD_STEP) -> float:
    """Lap_g f from central differences of f, mapped through the conformal Laplacian formula."""
    x = np.asarray(x, dtype=float)
    n = spec.n
    if not x[-1] > 2 * step:
        raise UsageError(f"step {step:g} is too large for height {x[-1]:g}")
    f = lambda pts: evaluate(spec, pts).value
    E = np.eye(n) * step
    xp, xm = x + E, x - E
    # use the steps actually taken so that rounding in x +- step does not leak in
    hp = np.diag(xp) - x
    hm = x - np.diag(xm)
    plus, minus = f(xp), f(xm)
    center = float(f(x[None, :])[0])
    second = ((plus - center) / hp - (center - minus) / hm) * 2.0 / (hp + hm)
    lap0 = float(np.sum(second))
    dfn = (plus[-1] - minus[-1]) / (hp[-1] + hm[-1])
    xn = x[-1]
    return float(xn * xn * lap0 - (n - 2) * xn * dfn)


def fd_check(spec: TestFunctionSpec, x, step: float = FD_STEP) -> FDCheck:
    """Compare the finite-difference Laplacian with the closed form.

    rel_err is |fd - closed| / max(|closed|, 1) so that families whose
    Laplacian vanishes (coordinate functions, arcsinh at x_p = 0) are
    judged on an absolute scale.
    """
    fd = fd_laplacian(spec, x, step)
    cf = eval_test_function(spec, x).laplacian_g
    return FDCheck(fd, cf, float(abs(fd - cf) / max(abs(cf), 1.0)))
