"""Domains in the upper half-space model and Euclidean validation domains.

Hyperbolic domains live in {x in R^n : x_n > 0} with the metric
x_n^-2 (dx_1^2 + ... + dx_n^2).  The last coordinate is always the height.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, GeometryError, UsageError


def unit_ball_volume(n: int) -> float:
    """Euclidean volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def conformal_factor(x) -> float:
    """Return e^{2h} = 1/x_n^2 at a point of the half-space."""
    xn = float(np.asarray(x, dtype=float)[-1])
    if not xn > 0:
        raise DomainError(f"point {tuple(np.asarray(x).tolist())} is not in the open half-space")
    return 1.0 / (xn * xn)


def hyperbolic_distance(x, y) -> float:
    """Distance in the half-space model: cosh d = 1 + |x-y|^2 / (2 x_n y_n)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x[-1] <= 0 or y[-1] <= 0:
        raise DomainError("hyperbolic distance needs points with positive height")
    d2 = float(np.sum((x - y) ** 2))
    return math.acosh(1.0 + d2 / (2.0 * x[-1] * y[-1]))


def ball_embed(r: float, anchor_height: float) -> tuple[float, float]:
    """Euclidean (center height, radius) of the geodesic ball of radius r about (0, ..., 0, a)."""
    if not r > 0:
        raise UsageError("geodesic radius must be positive")
    if not anchor_height > 0:
        raise DomainError("anchor height must be positive")
    rad = anchor_height * math.sinh(r)
    # lowest point is a e^{-r}; adding it avoids the cosh - sinh cancellation
    c = rad + anchor_height * math.exp(-r)
    if not c - rad > 0:
        raise DomainError(f"geodesic radius {r:g} is too large to embed in double precision")
    return c, rad


# ---------------------------------------------------------------------------
# domain variants


@dataclass(frozen=True)
class HalfSpaceBox:
    lo: tuple
    hi: tuple
    kind = "half_space_box"
    hyperbolic = True

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) < 2:
            raise GeometryError("box corners must have equal dimension >= 2")
        if any(b <= a for a, b in zip(lo, hi)):
            raise GeometryError("box needs hi > lo componentwise")
        if lo[-1] <= 0:
            raise GeometryError("half-space box must have lo_n > 0")

    @property
    def n(self) -> int:
        return len(self.lo)


@dataclass(frozen=True)
class EuclideanBox:
    lo: tuple
    hi: tuple
    kind = "euclidean_box"
    hyperbolic = False

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) < 2:
            raise GeometryError("box corners must have equal dimension >= 2")
        if any(b <= a for a, b in zip(lo, hi)):
            raise GeometryError("box needs hi > lo componentwise")

    @property
    def n(self) -> int:
        return len(self.lo)


@dataclass(frozen=True)
class EuclideanDisk:
    center: tuple
    radius: float
    kind = "euclidean_disk"
    hyperbolic = False

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if len(self.center) != 2:
            raise GeometryError("disk center must be a 2D point")
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")

    @property
    def n(self) -> int:
        return 2

    def circle(self) -> tuple[tuple[float, float], float]:
        return self.center, self.radius


@dataclass(frozen=True)
class GeodesicBall:
    """Geodesic ball of radius ``radius`` about the point at height ``anchor_height`` on the x_n axis."""

    radius: float
    anchor_height: float = 1.0
    dim: int = 2
    kind = "geodesic_ball"
    hyperbolic = True

    def __post_init__(self):
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "anchor_height", float(self.anchor_height))
        if not self.radius > 0:
            raise GeometryError("geodesic radius must be positive")
        if not self.anchor_height > 0:
            raise GeometryError("anchor height must be positive")
        if self.dim < 2:
            raise GeometryError("dimension must be >= 2")

    @property
    def n(self) -> int:
        return self.dim

    @property
    def center_height(self) -> float:
        return ball_embed(self.radius, self.anchor_height)[0]

    @property
    def euclidean_radius(self) -> float:
        return ball_embed(self.radius, self.anchor_height)[1]

    def circle(self) -> tuple[tuple[float, float], float]:
        if self.dim != 2:
            raise UsageError("only 2D geodesic balls embed as circles")
        c, rad = ball_embed(self.radius, self.anchor_height)
        return (0.0, c), rad


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    return (
        (d1 == 0 and on_seg(q1, q2, p1))
        or (d2 == 0 and on_seg(q1, q2, p2))
        or (d3 == 0 and on_seg(p1, p2, q1))
        or (d4 == 0 and on_seg(p1, p2, q2))
    )


def polygon_signed_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class Polygon2D:
    """Simple polygon in the upper half-plane; stored counter-clockwise."""

    vertices: tuple
    kind = "polygon"
    hyperbolic = True

    def __post_init__(self):
        verts = [tuple(float(c) for c in p) for p in self.vertices]
        if len(verts) < 3 or any(len(p) != 2 for p in verts):
            raise GeometryError("polygon needs at least three 2D vertices")
        if any(p[1] <= 0 for p in verts):
            raise GeometryError("polygon vertices must have x_2 > 0")
        m = len(verts)
        for i in range(m):
            for j in range(i + 1, m):
                if j == i + 1 or (i == 0 and j == m - 1):
                    continue
                if _segments_intersect(verts[i], verts[(i + 1) % m], verts[j], verts[(j + 1) % m]):
                    raise GeometryError("polygon is not simple")
        area = polygon_signed_area(verts)
        if area == 0:
            raise GeometryError("polygon has zero area")
        if area < 0:
            verts = verts[::-1]
        object.__setattr__(self, "vertices", tuple(verts))

    @property
    def n(self) -> int:
        return 2


Domain = Union[HalfSpaceBox, GeodesicBall, Polygon2D, EuclideanBox, EuclideanDisk]


def domain_to_dict(d: Domain) -> dict:
    if isinstance(d, (HalfSpaceBox, EuclideanBox)):
        return {"kind": d.kind, "n": d.n, "lo": list(d.lo), "hi": list(d.hi)}
    if isinstance(d, GeodesicBall):
        return {"kind": d.kind, "n": d.n, "radius": d.radius, "anchor_height": d.anchor_height}
    if isinstance(d, Polygon2D):
        return {"kind": d.kind, "n": 2, "vertices": [list(p) for p in d.vertices]}
    if isinstance(d, EuclideanDisk):
        return {"kind": d.kind, "n": 2, "center": list(d.center), "radius": d.radius}
    raise UsageError(f"not a domain: {d!r}")


def domain_from_dict(doc: dict) -> Domain:
    try:
        kind = doc["kind"]
        if kind == "half_space_box":
            d = HalfSpaceBox(doc["lo"], doc["hi"])
        elif kind == "euclidean_box":
            d = EuclideanBox(doc["lo"], doc["hi"])
        elif kind == "geodesic_ball":
            d = GeodesicBall(doc["radius"], doc.get("anchor_height", 1.0), int(doc.get("n", 2)))
        elif kind == "polygon":
            d = Polygon2D(doc["vertices"])
        elif kind == "euclidean_disk":
            d = EuclideanDisk(doc.get("center", (0.0, 0.0)), doc["radius"])
        else:
            raise UsageError(f"unknown domain kind {kind!r}")
    except KeyError as exc:
        raise UsageError(f"domain document is missing field {exc}") from None
    if "n" in doc and int(doc["n"]) != d.n:
        raise UsageError(f"domain document says n={doc['n']} but the corners give n={d.n}")
    return d


# ---------------------------------------------------------------------------
# volumes


def hyperbolic_volume(d: Domain, tol: float = 1e-10) -> float:
    """Integral of x_n^-n over the domain, by adaptive quadrature."""
    if not d.hyperbolic:
        raise UsageError(f"{d.kind} is not a hyperbolic domain")
    n = d.n
    quad = lambda f, a, b: integrate.quad(f, a, b, epsrel=tol, epsabs=0.0, limit=200)[0]
    if isinstance(d, HalfSpaceBox):
        width = math.prod(b - a for a, b in zip(d.lo[:-1], d.hi[:-1]))
        return width * quad(lambda t: t ** (-n), d.lo[-1], d.hi[-1])
    if isinstance(d, GeodesicBall):
        c, rad = ball_embed(d.radius, d.anchor_height)
        slab = unit_ball_volume(n - 1)
        # x_n = c + rad sin(phi); cross-section is an (n-1)-ball of radius rad cos(phi)
        f = lambda phi: slab * (rad * math.cos(phi)) ** n * (c + rad * math.sin(phi)) ** (-n)
        return quad(f, -math.pi / 2, math.pi / 2)
    if isinstance(d, Polygon2D):
        # Green's theorem with Q = x / y^2, P = 0
        total = 0.0
        verts = d.vertices
        for (x0, y0), (x1, y1) in zip(verts, verts[1:] + verts[:1]):
            if y1 == y0:
                continue
            f = lambda t: (x0 + t * (x1 - x0)) / (y0 + t * (y1 - y0)) ** 2
            total += (y1 - y0) * quad(f, 0.0, 1.0)
        return total
    raise UsageError(f"no volume rule for {d.kind}")


def euclidean_volume(d: Domain) -> float:
    if isinstance(d, (EuclideanBox, HalfSpaceBox)):
        return math.prod(b - a for a, b in zip(d.lo, d.hi))
    if isinstance(d, EuclideanDisk):
        return math.pi * d.radius ** 2
    if isinstance(d, Polygon2D):
        return polygon_signed_area(d.vertices)
    if isinstance(d, GeodesicBall):
        return unit_ball_volume(d.n) * d.euclidean_radius ** d.n
    raise UsageError(f"no volume rule for {d!r}")


def domain_volume(d: Domain) -> float:
    """Volume in the domain's own metric."""
    return hyperbolic_volume(d) if d.hyperbolic else euclidean_volume(d)


# ---------------------------------------------------------------------------
# geometric admissibility


def eps_cap(n: int) -> float:
    return 1.0 if n == 2 else 2.0


def minimal_slope_eps(s_max: float) -> float:
    """Smallest eps >= 0 with eps^2 / (1 + eps) >= s_max."""
    return 0.5 * (s_max + math.sqrt(s_max * s_max + 4.0 * s_max))


def slope_condition_holds(s_max: float, eps: float, n: int) -> bool:
    """Hypothesis on max_x sum_p v_p^2/(1+v_p^2) for the arcsinh-based bound, with eps inside its cap."""
    if not 0 < eps <= eps_cap(n) * (1 + 1e-12):
        return False
    return s_max <= eps * eps / (1.0 + eps) * (1 + 1e-12)


@dataclass(frozen=True)
class GeometricProfile:
    rho_ratio: float
    s_max: float
    eps_cor: float
    eps_thm2: Optional[float]
    hyperbolic_volume: float
    n: int
    min_height: float
    max_height: float
    # None when the extrema are exact; otherwise the sampling spacing used
    sampling_resolution: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rho_ratio": self.rho_ratio,
            "eps_cor": self.eps_cor,
            "s_max": self.s_max,
            "eps_thm2": self.eps_thm2,
            "hyperbolic_volume": self.hyperbolic_volume,
            "min_height": self.min_height,
            "max_height": self.max_height,
            "sampling_resolution": self.sampling_resolution,
        }


def slope_sum(points) -> np.ndarray:
    """sum_p v_p^2/(1+v_p^2) with v_p = x_p/x_n, for an array of points (..., n)."""
    pts = np.asarray(points, dtype=float)
    v2 = (pts[..., :-1] / pts[..., -1:]) ** 2
    return np.sum(v2 / (1.0 + v2), axis=-1)


def _ball_slope_max(c: float, rad: float, n: int, samples: int = 4096) -> tuple[float, float]:
    """Sampled max of slope_sum over the sphere bounding a Euclidean ball centered on the x_n axis.

    The maximum is on the boundary since the summand grows with |x_p| at fixed height.
    Two local refinement passes follow the coarse sweep.
    """
    center = np.zeros(n)
    center[-1] = c
    if n == 2:
        step = 2 * math.pi / samples
        ang = np.arange(samples) * step
        best = None
        for _ in range(3):
            pts = center + rad * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            vals = slope_sum(pts)
            i = int(np.argmax(vals))
            best = (float(vals[i]), ang[i])
            ang = best[1] + np.linspace(-2 * step, 2 * step, samples)
            step = 4 * step / (samples - 1)
        return best[0], rad * step
    rng = np.random.default_rng(0)
    dirs = rng.standard_normal((samples * 4, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    spread = math.sqrt(4 * math.pi / len(dirs)) if n == 3 else len(dirs) ** (-1.0 / (n - 1))
    for _ in range(3):
        vals = slope_sum(center + rad * dirs)
        top = dirs[np.argsort(vals)[-8:]]
        best = float(vals.max())
        jitter = rng.standard_normal((8, samples // 8, n)) * spread
        dirs = (top[:, None, :] + jitter).reshape(-1, n)
        dirs = np.vstack([top, dirs])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        spread /= 8
    vals = slope_sum(center + rad * dirs)
    return max(best, float(vals.max())), rad * spread * 8


def geometric_profile(d: Domain) -> GeometricProfile:
    """Height ratio, slope quantity and admissible eps values over the closure of a hyperbolic domain."""
    if not d.hyperbolic:
        raise UsageError(f"{d.kind} is not a hyperbolic domain")
    n = d.n
    resolution = None
    if isinstance(d, HalfSpaceBox):
        hmin, hmax = d.lo[-1], d.hi[-1]
        corner = [max(abs(a), abs(b)) for a, b in zip(d.lo[:-1], d.hi[:-1])] + [hmin]
        s_max = float(slope_sum(np.array(corner)))
    elif isinstance(d, Polygon2D):
        # x_1/x_2 is linear-fractional, so its extrema over each triangle sit at vertices
        verts = np.array(d.vertices)
        hmin, hmax = float(verts[:, 1].min()), float(verts[:, 1].max())
        s_max = float(slope_sum(verts).max())
    elif isinstance(d, GeodesicBall):
        c, rad = ball_embed(d.radius, d.anchor_height)
        hmin, hmax = c - rad, c + rad
        s_max, resolution = _ball_slope_max(c, rad, n)
    else:
        raise UsageError(f"no profile rule for {d.kind}")
    rho = (hmax * hmax) / (hmin * hmin)
    eps = minimal_slope_eps(s_max)
    return GeometricProfile(
        rho_ratio=rho,
        s_max=s_max,
        eps_cor=rho - 1.0,
        eps_thm2=eps if eps <= eps_cap(n) * (1 + 1e-12) else None,
        hyperbolic_volume=hyperbolic_volume(d),
        n=n,
        min_height=hmin,
        max_height=hmax,
        sampling_resolution=resolution,
    )
