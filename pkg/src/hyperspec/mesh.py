"""Conforming triangular meshes of 2D domains with boundary marking and uniform refinement."""
from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GeometryError, UsageError
from .geometry import (
    Domain,
    EuclideanBox,
    EuclideanDisk,
    GeodesicBall,
    HalfSpaceBox,
    Polygon2D,
)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (T, 3), counter-clockwise
    boundary: np.ndarray  # (N,) bool
    domain: Optional[Domain] = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(~self.boundary))

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs, in lexicographic order."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    @property
    def h(self) -> float:
        e = self.edges()
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))

    def check(self) -> None:
        """Raise GeometryError if any structural invariant is broken."""
        if np.any(self.signed_areas() <= 0):
            raise GeometryError("mesh has non-positive triangle areas")
        if self.domain is not None and self.domain.hyperbolic and np.any(self.vertices[:, 1] <= 0):
            raise GeometryError("hyperbolic mesh has a vertex off the half-plane")
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        keys = {}
        for a, b in directed.tolist():
            if (a, b) in keys:
                raise GeometryError(f"edge ({a}, {b}) appears twice with the same orientation")
            keys[(a, b)] = True
        on_boundary = np.zeros(self.n_vertices, dtype=bool)
        for a, b in keys:
            if (b, a) not in keys:
                on_boundary[a] = on_boundary[b] = True
        if not np.array_equal(on_boundary, self.boundary):
            raise GeometryError("boundary flags do not match the boundary edges")


def _boundary_flags(n_vertices: int, triangles: np.ndarray) -> np.ndarray:
    t = triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    flags = np.zeros(n_vertices, dtype=bool)
    flags[uniq[counts == 1].ravel()] = True
    return flags


def _make(vertices, triangles, domain) -> Mesh:
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    return Mesh(vertices, triangles, _boundary_flags(len(vertices), triangles), domain)


# ---------------------------------------------------------------------------
# generators


def _box_mesh(lo, hi, target_h, domain) -> Mesh:
    nx = max(1, math.ceil((hi[0] - lo[0]) / target_h - 1e-12))
    ny = max(1, math.ceil((hi[1] - lo[1]) / target_h - 1e-12))
    xs = np.linspace(lo[0], hi[0], nx + 1)
    ys = np.linspace(lo[1], hi[1], ny + 1)
    X, Y = np.meshgrid(xs, ys)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    v00 = (j * (nx + 1) + i).ravel()
    v10, v01 = v00 + 1, v00 + nx + 1
    v11 = v01 + 1
    tris = np.empty((2 * len(v00), 3), dtype=np.int64)
    tris[0::2] = np.column_stack([v00, v10, v11])
    tris[1::2] = np.column_stack([v00, v11, v01])
    return _make(verts, tris, domain)


def _disk_mesh(center, radius, target_h, domain) -> Mesh:
    rings = max(1, math.ceil(radius / target_h - 1e-12))
    cx, cy = center
    verts = [(cx, cy)]
    starts = [0]
    for j in range(1, rings + 1):
        starts.append(len(verts))
        m = 6 * j
        r = radius * j / rings
        for i in range(m):
            a = 2 * math.pi * i / m
            verts.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    tris = []
    for i in range(6):
        tris.append((0, starts[1] + i, starts[1] + (i + 1) % 6))
    for j in range(2, rings + 1):
        inner, outer = starts[j - 1], starts[j]
        m_in, m_out = 6 * (j - 1), 6 * j
        i = k = 0
        while i < m_in or k < m_out:
            a = inner + i % m_in
            b = outer + k % m_out
            a_next = inner + (i + 1) % m_in
            b_next = outer + (k + 1) % m_out
            # zip the two rings, taking the shorter of the two candidate diagonals
            if i == m_in:
                step_out = True
            elif k == m_out:
                step_out = False
            else:
                d_out = math.dist(verts[a], verts[b_next])
                d_in = math.dist(verts[b], verts[a_next])
                step_out = d_out < d_in - 1e-12 * radius
            if step_out:
                tris.append((a, b, b_next))
                k += 1
            else:
                tris.append((a, b, a_next))
                i += 1
    return _make(verts, tris, domain)


def _ear_clip(verts: list) -> list:
    idx = list(range(len(verts)))
    pts = np.asarray(verts, dtype=float)

    def cross(o, a, b):
        return (pts[a, 0] - pts[o, 0]) * (pts[b, 1] - pts[o, 1]) - (pts[a, 1] - pts[o, 1]) * (pts[b, 0] - pts[o, 0])

    def inside(p, a, b, c):
        return cross(a, b, p) >= 0 and cross(b, c, p) >= 0 and cross(c, a, p) >= 0

    tris = []
    while len(idx) > 3:
        m = len(idx)
        for t in range(m):
            a, b, c = idx[t - 1], idx[t], idx[(t + 1) % m]
            if cross(a, b, c) <= 0:
                continue
            if any(inside(p, a, b, c) for p in idx if p not in (a, b, c)):
                continue
            tris.append((a, b, c))
            idx.pop(t)
            break
        else:
            raise GeometryError("ear clipping failed; polygon is not simple")
    tris.append(tuple(idx))
    return tris


def _longest_edge_refine(verts: list, tris: list, target_h: float) -> tuple[list, list]:
    verts = [tuple(v) for v in verts]
    tri = {i: t for i, t in enumerate(tris)}
    next_id = len(tris)
    edge_tris: dict[tuple[int, int], set] = {}
    heap = []

    def length(a, b):
        return math.dist(verts[a], verts[b])

    def add(tid, t):
        tri[tid] = t
        for s in range(3):
            key = tuple(sorted((t[s], t[(s + 1) % 3])))
            if key not in edge_tris:
                edge_tris[key] = set()
                heapq.heappush(heap, (-length(*key), key))
            edge_tris[key].add(tid)

    for tid, t in list(tri.items()):
        add(tid, t)
    while heap:
        neg, key = heapq.heappop(heap)
        if key not in edge_tris:
            continue
        if -neg <= target_h:
            break
        a, b = key
        m = len(verts)
        verts.append(((verts[a][0] + verts[b][0]) / 2, (verts[a][1] + verts[b][1]) / 2))
        for tid in sorted(edge_tris.pop(key)):
            t = tri.pop(tid)
            for s in range(3):
                other = tuple(sorted((t[s], t[(s + 1) % 3])))
                if other != key:
                    edge_tris[other].discard(tid)
            s = next(s for s in range(3) if {t[s], t[(s + 1) % 3]} == {a, b})
            p, q, r = t[s], t[(s + 1) % 3], t[(s + 2) % 3]
            add(next_id, (p, m, r))
            add(next_id + 1, (m, q, r))
            next_id += 2
    return verts, [tri[k] for k in sorted(tri)]


def generate(d: Domain, target_h: float) -> Mesh:
    """Mesh a 2D domain.

    Boxes become structured grids of right triangles with spacing <= target_h,
    disks and geodesic balls concentric rings (ceil(radius/target_h) rings of
    6j vertices), polygons ear clipping plus longest-edge bisection until every
    edge is <= target_h.
    """
    if not target_h > 0:
        raise UsageError("target_h must be positive")
    if d.n != 2:
        raise UsageError("only 2D domains can be meshed")
    if isinstance(d, (HalfSpaceBox, EuclideanBox)):
        return _box_mesh(d.lo, d.hi, target_h, d)
    if isinstance(d, (EuclideanDisk, GeodesicBall)):
        center, radius = d.circle()
        return _disk_mesh(center, radius, target_h, d)
    if isinstance(d, Polygon2D):
        verts = list(d.vertices)
        tris = _ear_clip(verts)
        verts, tris = _longest_edge_refine(verts, tris, target_h)
        return _make(verts, tris, d)
    raise UsageError(f"cannot mesh {d!r}")


def refine(m: Mesh) -> Mesh:
    """Split every triangle into four through its edge midpoints.

    Boundary midpoints of disk-like domains are pushed out onto the true circle.
    """
    edges = m.edges()
    nv = m.n_vertices
    lookup = {(int(a), int(b)): nv + i for i, (a, b) in enumerate(edges)}
    mids = 0.5 * (m.vertices[edges[:, 0]] + m.vertices[edges[:, 1]])
    t = m.triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    bnd_edge = counts == 1
    if isinstance(m.domain, (EuclideanDisk, GeodesicBall)):
        (cx, cy), radius = m.domain.circle()
        c = np.array([cx, cy])
        d = mids[bnd_edge] - c
        mids[bnd_edge] = c + radius * d / np.linalg.norm(d, axis=1, keepdims=True)
    verts = np.vstack([m.vertices, mids])

    def mid(a, b):
        return lookup[(a, b) if a < b else (b, a)]

    children = []
    for a, b, c in t.tolist():
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        children.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
    return _make(verts, children, m.domain)


# ---------------------------------------------------------------------------
# plain-text format


def write_mesh(m: Mesh, fh) -> None:
    """Write "N T", then N lines "x y flag", then T lines "i j k"."""
    fh.write(f"{m.n_vertices} {m.n_triangles}\n")
    for (x, y), b in zip(m.vertices.tolist(), m.boundary.tolist()):
        fh.write(f"{x:.17g} {y:.17g} {int(b)}\n")
    for i, j, k in m.triangles.tolist():
        fh.write(f"{i} {j} {k}\n")


def mesh_to_text(m: Mesh) -> str:
    buf = io.StringIO()
    write_mesh(m, buf)
    return buf.getvalue()


def read_mesh(fh, domain: Optional[Domain] = None) -> Mesh:
    lines = [ln for ln in (raw.strip() for raw in fh) if ln and not ln.startswith("#")]
    try:
        nv, nt = (int(v) for v in lines[0].split())
        vrows = [ln.split() for ln in lines[1 : 1 + nv]]
        trows = [ln.split() for ln in lines[1 + nv : 1 + nv + nt]]
        verts = np.array([[float(r[0]), float(r[1])] for r in vrows])
        flags = np.array([bool(int(r[2])) for r in vrows])
        tris = np.array([[int(v) for v in r] for r in trows], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"malformed mesh file: {exc}") from None
    if len(verts) != nv or len(tris) != nt:
        raise UsageError("mesh file is truncated")
    return Mesh(verts, tris.reshape(-1, 3), flags, domain)


def mesh_from_text(text: str, domain: Optional[Domain] = None) -> Mesh:
    return read_mesh(io.StringIO(text), domain)
