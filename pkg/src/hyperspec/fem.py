"""P1 stiffness and mass forms for the Dirichlet Laplacian.

The hyperbolic Laplacian of the half-space model is treated as a weighted
Euclidean problem: the Dirichlet energy is int x_n^(2-n) |grad u|^2 dx and the
L2 norm int x_n^(-n) u^2 dx, both with Euclidean gradients.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateProblemError, GeometryError, UsageError
from .mesh import Mesh

# 3-point rule, exact for quadratics: barycentric coordinates of the nodes, weight 1/3 each
GAUSS3 = np.array(
    [
        [2 / 3, 1 / 6, 1 / 6],
        [1 / 6, 2 / 3, 1 / 6],
        [1 / 6, 1 / 6, 2 / 3],
    ]
)

METRICS = ("euclidean", "hyperbolic")


@dataclass(frozen=True, eq=False)
class AssembledForms:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    dof_map: np.ndarray  # retained dof -> mesh vertex
    metric: str
    n: int

    @property
    def dof(self) -> int:
        return len(self.dof_map)


def element_geometry(m: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Areas (T,) and barycentric gradients (T, 3, 2) of every triangle."""
    p = m.vertices[m.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * det
    # rows of inv(J)^T applied to reference gradients (-1,-1), (1,0), (0,1)
    g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
    grads = np.stack([-g1 - g2, g1, g2], axis=1)
    return area, grads


def quadrature_points(m: Mesh) -> np.ndarray:
    """Physical 3-point Gauss nodes, shape (T, 3, 2)."""
    p = m.vertices[m.triangles]
    return np.einsum("qa,tad->tqd", GAUSS3, p)


def weights(metric: str, n: int, height: np.ndarray) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """Stiffness and mass weights at the given heights; None means identically one."""
    if metric == "euclidean":
        return None, None
    wk = None if n == 2 else height ** (2 - n)
    return wk, height ** (-n)


def assemble(m: Mesh, metric: str = "hyperbolic", n: int = 2) -> AssembledForms:
    """Assemble K and M over all mesh vertices (no boundary elimination)."""
    if metric not in METRICS:
        raise UsageError(f"metric must be one of {METRICS}")
    if metric == "hyperbolic":
        if n != 2:
            raise UsageError("hyperbolic assembly is restricted to n = 2 meshes")
        if np.any(m.vertices[:, 1] <= 0):
            raise GeometryError("hyperbolic mesh has a vertex with x_2 <= 0")
    area, grads = element_geometry(m)
    if np.any(area <= 0):
        raise GeometryError("mesh has degenerate or inverted triangles")
    gg = np.einsum("tad,tbd->tab", grads, grads)

    qp = quadrature_points(m)
    wk, wm = weights(metric, n, qp[..., 1])
    if wk is None:
        k_loc = area[:, None, None] * gg
    else:
        k_loc = (area * wk.mean(axis=1))[:, None, None] * gg
    if wm is None:
        k_mass = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
        m_loc = area[:, None, None] * k_mass
    else:
        # sum_q (area/3) w(x_q) phi_a(x_q) phi_b(x_q)
        m_loc = np.einsum("t,tq,qa,qb->tab", area / 3.0, wm, GAUSS3, GAUSS3)

    N = m.n_vertices
    rows = np.repeat(m.triangles, 3, axis=1).ravel()
    cols = np.tile(m.triangles, (1, 3)).ravel()
    K = sp.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    M = sp.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    K.sort_indices()
    M.sort_indices()
    return AssembledForms(K, M, np.arange(N), metric, n)


def apply_dirichlet(forms: AssembledForms, m: Mesh) -> AssembledForms:
    """Remove rows and columns of boundary vertices."""
    if forms.stiffness.shape[0] != m.n_vertices:
        raise UsageError("forms were not assembled on this mesh (or are already reduced)")
    keep = np.flatnonzero(~m.boundary)
    if len(keep) == 0:
        raise DegenerateProblemError("mesh has no interior vertices; refine it first")
    K = forms.stiffness[keep][:, keep].tocsr()
    M = forms.mass[keep][:, keep].tocsr()
    return replace(forms, stiffness=K, mass=M, dof_map=forms.dof_map[keep])


def build_forms(m: Mesh, metric: str = "hyperbolic", n: int = 2) -> AssembledForms:
    return apply_dirichlet(assemble(m, metric, n), m)


def rayleigh_quotient(forms: AssembledForms, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ (forms.stiffness @ v)) / float(v @ (forms.mass @ v))


def write_triplets(A: sp.spmatrix, fh) -> None:
    """Coordinate format: header "rows cols nnz", then "row col value" lines."""
    coo = sp.coo_matrix(A)
    order = np.lexsort((coo.col, coo.row))
    fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
    for r, c, v in zip(coo.row[order].tolist(), coo.col[order].tolist(), coo.data[order].tolist()):
        fh.write(f"{r} {c} {v:.17g}\n")


def triplets_to_text(A: sp.spmatrix) -> str:
    buf = io.StringIO()
    write_triplets(A, buf)
    return buf.getvalue()


def read_triplets(fh) -> sp.csr_matrix:
    lines = [ln.split() for ln in fh if ln.strip()]
    nr, nc, nnz = (int(v) for v in lines[0])
    body = lines[1 : 1 + nnz]
    r = np.array([int(t[0]) for t in body], dtype=np.int64)
    c = np.array([int(t[1]) for t in body], dtype=np.int64)
    v = np.array([float(t[2]) for t in body])
    return sp.coo_matrix((v, (r, c)), shape=(nr, nc)).tocsr()
