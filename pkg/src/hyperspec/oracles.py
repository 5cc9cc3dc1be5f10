"""Reference spectra computed independently of the finite element pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import UsageError
from .geometry import unit_ball_volume


# ---------------------------------------------------------------------------
# Bessel functions of the first kind


def bessel_j_series(m: int, x: float, terms: int = 60) -> float:
    """J_m(x) from its power series; accurate only for moderate x."""
    half = 0.5 * x
    term = half ** m / math.factorial(m)
    total = term
    for j in range(1, terms):
        term *= -(half * half) / (j * (j + m))
        total += term
    return total


def bessel_j(m: int, x: float) -> float:
    """J_m(x) for integer m >= 0 and x >= 0 by Miller's downward recurrence.

    The recurrence is normalized with J_0 + 2 sum_k J_2k = 1, which keeps full
    relative accuracy well past the range where the power series cancels.
    """
    if m < 0:
        raise UsageError("order must be non-negative")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if x < 1e-3:
        return bessel_j_series(m, x, terms=6)
    start = 2 * ((max(m, int(x)) + 15 + int(math.sqrt(40.0 * max(m, int(x), 1)))) // 2)
    jp1, j = 0.0, 1e-300
    total = 0.0
    result = 0.0
    for k in range(start, 0, -1):
        jm1 = 2.0 * k / x * j - jp1
        jp1, j = j, jm1
        if abs(j) > 1e250:
            j *= 1e-250
            jp1 *= 1e-250
            total *= 1e-250
            result *= 1e-250
        if k - 1 == m:
            result = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            total += 2.0 * j
    total += j  # J_0 term
    return result / total


def bessel_zero(m: int, k: int, tol: float = 1e-14) -> float:
    """k-th positive zero of J_m, by sign-change scanning and bisection."""
    if m < 0 or k < 1:
        raise UsageError("need m >= 0 and k >= 1")
    return _bessel_zeros(m, k, tol)[k - 1]


@lru_cache(maxsize=None)
def _bessel_zeros(m: int, count: int, tol: float) -> tuple:
    zeros = []
    step = 0.5  # zeros of J_m are spaced by roughly pi
    a = max(float(m), 0.5)
    fa = bessel_j(m, a)
    while len(zeros) < count:
        b = a + step
        fb = bessel_j(m, b)
        if fa == 0.0:
            zeros.append(a)
        elif fa * fb < 0:
            lo, hi, flo = a, b, fa
            while hi - lo > tol * max(1.0, lo):
                mid = 0.5 * (lo + hi)
                fm = bessel_j(m, mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm < 0) == (flo < 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            zeros.append(0.5 * (lo + hi))
        a, fa = b, fb
    return tuple(zeros)


def bessel_zeros_below(m: int, limit: float) -> list[float]:
    """All positive zeros of J_m smaller than ``limit``."""
    if limit <= m:
        return []
    k = 1
    while True:
        zs = _bessel_zeros(m, k, 1e-14)
        if zs[-1] >= limit:
            return [z for z in zs if z < limit]
        k = 2 * k


# ---------------------------------------------------------------------------
# reference spectra


@dataclass(frozen=True)
class ReferenceSpectrum:
    eigenvalues: np.ndarray
    source: str  # "bessel_disk" | "square_analytic" | "radial_shooting"
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "n": int(self.parameters.get("n", 2)),
            "metric": "hyperbolic" if self.source == "radial_shooting" else "euclidean",
            "dof": None,
            "h": None,
            "source": self.source,
            "parameters": dict(self.parameters),
        }


def square_spectrum(count: int, side: float = 1.0) -> np.ndarray:
    """Lowest ``count`` values of pi^2 (p^2 + q^2) / side^2, with multiplicity."""
    top = 1
    while True:
        vals = sorted(p * p + q * q for p in range(1, top + 1) for q in range(1, top + 1))
        # every pair with p or q > top has p^2 + q^2 > top^2 + 1
        if len(vals) >= count and vals[count - 1] <= top * top + 1:
            return math.pi ** 2 * np.array(vals[:count], dtype=float) / side ** 2
        top *= 2


def disk_spectrum(count: int, radius: float = 1.0) -> np.ndarray:
    """Lowest ``count`` values (j_{m,k}/R)^2; orders m >= 1 are doubled."""
    limit = 2.0 * math.sqrt(count) + 4.0
    while True:
        vals = []
        m = 0
        while m < limit:
            zs = bessel_zeros_below(m, limit)
            if not zs:
                break
            for z in zs:
                vals.extend([z * z] * (1 if m == 0 else 2))
            m += 1
        vals.sort()
        if len(vals) >= count:
            return np.array(vals[:count]) / radius ** 2
        limit *= 1.5


def reference_spectrum(shape: str, count: int, radius: float = 1.0, n: int = 2) -> ReferenceSpectrum:
    """shape: "square" (unit square), "disk" (Euclidean disk of the given radius)
    or "ball" (radial modes of a geodesic ball in H^n)."""
    if count < 1:
        raise UsageError("count must be >= 1")
    if shape in ("square", "unit_square"):
        return ReferenceSpectrum(square_spectrum(count), "square_analytic", {"side": 1.0, "n": 2})
    if shape == "disk":
        return ReferenceSpectrum(disk_spectrum(count, radius), "bessel_disk", {"radius": radius, "n": 2})
    if shape == "ball":
        return ReferenceSpectrum(
            np.array(hyperbolic_ball_radial(radius, n, count)), "radial_shooting", {"radius": radius, "n": n}
        )
    raise UsageError(f"unknown reference shape {shape!r}")


# ---------------------------------------------------------------------------
# radial modes of geodesic balls


def _shoot(lam: float, r: float, n: int, t0: float):
    """Integrate u'' + (n-1) coth(t) u' + lam u = 0 from t0 to r; returns (u(r), zero count)."""
    u0 = 1.0 - lam * t0 * t0 / (2 * n)
    du0 = -lam * t0 / n

    def rhs(t, y):
        return (y[1], -(n - 1) / math.tanh(t) * y[1] - lam * y[0])

    def crossing(t, y):
        return y[0]

    sol = solve_ivp(rhs, (t0, r), (u0, du0), method="DOP853", rtol=1e-12, atol=1e-14, events=crossing)
    if sol.status < 0:
        raise RuntimeError(sol.message)
    zeros = [t for t in sol.t_events[0] if t < r * (1 - 1e-12)]
    return float(sol.y[0, -1]), len(zeros)


def hyperbolic_ball_radial(r: float, n: int = 2, count: int = 1, t0: float = 1e-6) -> list[float]:
    """Lowest ``count`` radial Dirichlet eigenvalues of the geodesic ball of radius r in H^n.

    Shooting from a two-term expansion at t0; the j-th eigenvalue is the one
    whose shot has j-1 interior zeros (Sturm oscillation), pinned down by a
    bracketing root search on u(r).
    """
    if not r > 0:
        raise UsageError("radius must be positive")
    if n < 2 or count < 1:
        raise UsageError("need n >= 2 and count >= 1")
    floor = (n - 1) ** 2 / 4.0
    out = []
    lo = floor
    for j in range(1, count + 1):
        # find hi with at least j interior zeros (eigenvalues below hi)
        hi = max(2 * lo, lo + 1.0)
        while _shoot(hi, r, n, t0)[1] < j:
            lo, hi = hi, 2 * hi
        # narrow until the bracket holds exactly the j-th eigenvalue
        while True:
            c_lo = _shoot(lo, r, n, t0)[1]
            c_hi = _shoot(hi, r, n, t0)[1]
            if c_lo == j - 1 and c_hi == j:
                break
            mid = 0.5 * (lo + hi)
            if _shoot(mid, r, n, t0)[1] >= j:
                hi = mid
            else:
                lo = mid
        lam = brentq(lambda x: _shoot(x, r, n, t0)[0], lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
        out.append(lam)
        lo = lam * (1 + 1e-9)
    return out


# ---------------------------------------------------------------------------
# Weyl asymptotics


def weyl_prediction(k: int, n: int, vol: float) -> float:
    """Leading-order Weyl value 4 pi^2 (omega_n vol)^(-2/n) k^(2/n)."""
    if k < 1 or not vol > 0:
        raise UsageError("need k >= 1 and vol > 0")
    return 4 * math.pi ** 2 / (unit_ball_volume(n) * vol) ** (2.0 / n) * k ** (2.0 / n)
