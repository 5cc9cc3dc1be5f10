"""Lowest eigenpairs of the generalized symmetric problem K v = lam M v.

Small problems go through a dense LAPACK reduction.  Larger ones use
shift-invert Lanczos at zero: the operator K^-1 M is self-adjoint in the
M inner product and its largest eigenvalues are 1/lam for the smallest lam.
Multiple eigenvalues are recovered by repeated deflated runs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import CLUSTER_RTOL, DENSE_MAX_DOF, EIG_RESIDUAL_TOL
from .errors import NumericalError, UsageError
from .fem import AssembledForms
from .mesh import Mesh

log = logging.getLogger(__name__)


@dataclass(eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (dof, k), M-orthonormal columns
    dof_map: np.ndarray
    metric: str
    n: int
    mesh: Optional[Mesh] = None
    method: str = ""
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def dof(self) -> int:
        return len(self.dof_map)

    @property
    def h(self) -> Optional[float]:
        return None if self.mesh is None else self.mesh.h

    def full_vectors(self) -> np.ndarray:
        """Eigenvectors scattered onto all mesh vertices, zero on the boundary."""
        if self.mesh is None:
            raise UsageError("spectrum carries no mesh")
        U = np.zeros((self.mesh.n_vertices, self.k))
        U[self.dof_map] = self.eigenvectors
        return U

    def clusters(self, rtol: float = CLUSTER_RTOL) -> list[list[int]]:
        """Groups of indices whose eigenvalues agree to rtol."""
        groups: list[list[int]] = []
        for i, lam in enumerate(self.eigenvalues):
            if groups and abs(lam - self.eigenvalues[groups[-1][-1]]) <= rtol * abs(lam):
                groups[-1].append(i)
            else:
                groups.append([i])
        return groups

    def to_dict(self, vectors: bool = False) -> dict:
        doc = {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "n": self.n,
            "metric": self.metric,
            "dof": self.dof,
            "h": self.h,
        }
        if vectors:
            doc["eigenvectors"] = vectors_to_text(self.eigenvectors)
        return doc


def vectors_to_text(V: np.ndarray) -> str:
    """One line per dof, space-separated coefficients with 17 significant digits."""
    return "\n".join(" ".join(f"{x:.17g}" for x in row) for row in np.atleast_2d(V).tolist())


def vectors_from_text(text: str) -> np.ndarray:
    return np.array([[float(x) for x in ln.split()] for ln in text.splitlines() if ln.strip()])


def _fix_signs(V: np.ndarray) -> np.ndarray:
    for j in range(V.shape[1]):
        col = V[:, j]
        scale = np.max(np.abs(col))
        nz = np.flatnonzero(np.abs(col) > 1e-10 * scale)
        if len(nz) and col[nz[0]] < 0:
            V[:, j] = -col
    return V


class _Factor:
    """Sparse LDL^T-style factorization of an SPD matrix via SuperLU with diagonal pivoting."""

    def __init__(self, A: sp.csc_matrix, name: str):
        A = sp.csc_matrix(A)
        try:
            self.lu = spla.splu(
                A,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise NumericalError(f"factorization of {name} failed: {exc}") from None
        d = self.lu.U.diagonal()
        if not np.all(d > 0) or not np.all(self.lu.perm_r == self.lu.perm_c):
            bad = int(np.sum(d <= 0))
            raise NumericalError(
                f"{name} is not symmetric positive definite ({bad} non-positive pivots, "
                f"min pivot {float(d.min()):.3e})"
            )

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self.lu.solve(b)


def generalized_residuals(K, M, lam, V, solve_M) -> np.ndarray:
    """||K v - lam M v||_{M^-1} for every column."""
    R = K @ V - (M @ V) * lam
    Z = solve_M(R)
    return np.sqrt(np.maximum(np.einsum("ij,ij->j", R, Z), 0.0))


def _dense(K, M, k: int) -> tuple[np.ndarray, np.ndarray]:
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    try:
        lam, V = la.eigh(Kd, Md, subset_by_index=[0, k - 1])
    except la.LinAlgError as exc:
        raise NumericalError(f"dense reduction failed, mass matrix is not positive definite: {exc}") from None
    if lam[0] <= 0:
        raise NumericalError(f"stiffness matrix is not positive definite (lowest eigenvalue {lam[0]:.3e})")
    return lam, V


def _lanczos_run(solve_K, M, k: int, locked: np.ndarray, M_locked: np.ndarray, rng, tol: float):
    """One shift-invert Lanczos run in the M-orthogonal complement of ``locked``.

    Returns (theta, X) for the k largest converged Ritz values of K^-1 M.
    """
    n = M.shape[0]
    room = n - locked.shape[1]
    want = min(k, room)
    if want <= 0:
        return np.zeros(0), np.zeros((n, 0))
    cap = min(room, 2 * want + 40)
    Q = np.zeros((n, cap + 1))
    MQ = np.zeros((n, cap + 1))
    alpha = np.zeros(room)
    beta = np.zeros(room)

    def orthogonalize(w, j):
        for _ in range(2):
            if locked.shape[1]:
                w = w - locked @ (M_locked.T @ w)
            w = w - Q[:, : j + 1] @ (MQ[:, : j + 1].T @ w)
        return w

    def start_vector(j):
        for _ in range(5):
            w = orthogonalize(rng.standard_normal(n), j)
            nrm = np.sqrt(w @ (M @ w))
            if nrm > 1e-8:
                return w / nrm
        raise NumericalError("could not build a Lanczos start vector")

    q = start_vector(-1)
    Q[:, 0] = q
    MQ[:, 0] = M @ q
    check_every = 5
    for j in range(room):
        w = solve_K(MQ[:, j])
        alpha[j] = MQ[:, j] @ w
        w = w - alpha[j] * Q[:, j]
        if j > 0:
            w = w - beta[j - 1] * Q[:, j - 1]
        w = orthogonalize(w, j)
        b = np.sqrt(max(w @ (M @ w), 0.0))
        dim = j + 1
        done = dim == room
        breakdown = b <= 1e-12 * max(abs(alpha[:dim]).max(), 1e-300)
        if dim >= want and (done or breakdown or dim % check_every == 0):
            theta, S = la.eigh_tridiagonal(alpha[:dim], beta[: dim - 1])
            theta, S = theta[::-1], S[:, ::-1]
            est = abs(b * S[-1, :want])
            if done or np.all(est <= tol * np.abs(theta[:want])):
                return theta[:want], Q[:, :dim] @ S[:, :want]
        if breakdown:
            beta[j] = 0.0
            q = None if done else start_vector(j)
        else:
            beta[j] = b
            q = w / b
        if not done:
            if dim == Q.shape[1] - 1:
                grow = min(room, 2 * dim) + 1 - Q.shape[1]
                Q = np.hstack([Q, np.zeros((n, grow))])
                MQ = np.hstack([MQ, np.zeros((n, grow))])
            Q[:, dim] = q
            MQ[:, dim] = M @ q
    raise NumericalError("Lanczos iteration exhausted the space without converging")


def _polish(K, M, solve_K, X):
    """One block inverse-iteration step followed by Rayleigh-Ritz."""
    Y = solve_K(M @ X)
    Ky = Y.T @ (K @ Y)
    My = Y.T @ (M @ Y)
    Ky = 0.5 * (Ky + Ky.T)
    My = 0.5 * (My + My.T)
    lam, S = la.eigh(Ky, My)
    return lam, Y @ S


def _lanczos(K, M, k: int, tol: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    K = sp.csc_matrix(K)
    M = sp.csr_matrix(M)
    fK = _Factor(K, "stiffness matrix")
    solve_K = fK.solve
    n = K.shape[0]
    rng = np.random.default_rng(seed)
    locked = np.zeros((n, 0))
    lam_all = np.zeros(0)
    want = k
    while True:
        theta, X = _lanczos_run(solve_K, M, want, locked, M @ locked, rng, 1e-13)
        if len(theta) == 0:
            break
        lam_new = 1.0 / theta
        if len(lam_all) >= k and lam_new.min() > np.sort(lam_all)[k - 1] * (1 + CLUSTER_RTOL):
            break
        # Rayleigh-Ritz over everything found so far keeps the locked block M-orthonormal
        basis = np.hstack([locked, X])
        lam_all, locked = _polish(K, M, solve_K, basis)
        if locked.shape[1] >= n:
            break
        # later passes only look for eigenvalues the previous ones missed
        want = min(k, 4)
        log.debug("deflated Lanczos pass: %d locked vectors", locked.shape[1])
    order = np.argsort(lam_all)[:k]
    return lam_all[order], locked[:, order]


def solve_lowest(
    forms: AssembledForms,
    k: int,
    method: str = "auto",
    tol: float = EIG_RESIDUAL_TOL,
    mesh: Optional[Mesh] = None,
) -> Spectrum:
    """The k smallest eigenpairs with M-orthonormal eigenvectors.

    method: "auto" (dense up to DENSE_MAX_DOF dofs, Lanczos above), "dense" or "lanczos".
    """
    K, M = forms.stiffness, forms.mass
    n = K.shape[0]
    if not 1 <= k <= n:
        raise UsageError(f"requested {k} eigenpairs but the problem has {n} degrees of freedom")
    if method == "auto":
        method = "dense" if n <= DENSE_MAX_DOF else "lanczos"
    if method == "dense":
        lam, V = _dense(K, M, k)
    elif method == "lanczos":
        lam, V = _lanczos(K, M, k, tol)
    else:
        raise UsageError(f"unknown method {method!r}")

    # normalize in M; LAPACK and the Ritz step already do, this removes drift
    MV = M @ V
    V = V / np.sqrt(np.einsum("ij,ij->j", V, MV))
    lam = np.einsum("ij,ij->j", V, K @ V)
    order = np.argsort(lam, kind="stable")
    lam, V = lam[order], _fix_signs(V[:, order])
    if lam[0] <= 0:
        raise NumericalError(f"non-positive eigenvalue {lam[0]:.3e}; stiffness is not definite")

    fM = _Factor(M, "mass matrix")
    res = generalized_residuals(K, M, lam, V, fM.solve)
    if np.any(res > tol * np.abs(lam)):
        worst = int(np.argmax(res / np.abs(lam)))
        raise NumericalError(
            f"eigenpair {worst} residual {res[worst]:.3e} exceeds {tol:g} * |lam| = {tol * abs(lam[worst]):.3e}"
        )
    return Spectrum(lam, V, forms.dof_map, forms.metric, forms.n, mesh, method, res)
