"""Distance-dependent communication graph and its spectrum.

Node ordering convention used throughout the package: UAVs occupy indices
``0..n-1`` and the target is the last node ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fracform.errors import DomainError, FormationError

DEFAULT_CONNECTIVITY_TOL = 1e-6

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class CommModel:
    """Exponential link-quality model: weight ``exp(-sigma * r / range_R)`` inside range."""

    range_R: float = 300.0
    sigma: float = 10.0

    def __post_init__(self):
        if not self.range_R > 0:
            raise DomainError(f"range_R must be positive, got {self.range_R}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    fiedler_value: float
    fiedler_vector: np.ndarray


def adjacency_weight(r_ij: float, comm: CommModel) -> float:
    # r == R is treated as out of range
    if r_ij < 0 or math.isnan(r_ij):
        raise DomainError(f"distance must be non-negative, got {r_ij}")
    if r_ij >= comm.range_R:
        return 0.0
    return math.exp(-comm.sigma * r_ij / comm.range_R)


def _as_points(positions) -> np.ndarray:
    pts = np.asarray(positions, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError(f"positions must have shape (m, 2), got {pts.shape}")
    return pts


def neighbors(i: int, positions, comm: CommModel) -> set[int]:
    """Indices ``j != i`` strictly within communication range of node ``i``."""
    pts = _as_points(positions)
    if len(pts) == 0:
        raise DomainError("positions must be non-empty")
    if not 0 <= i < len(pts):
        raise DomainError(f"node index {i} out of range for {len(pts)} nodes")
    dist = np.hypot(*(pts - pts[i]).T)
    return {j for j in range(len(pts)) if j != i and dist[j] < comm.range_R}


def build_adjacency(positions, comm: CommModel) -> np.ndarray:
    """Symmetric weighted adjacency matrix with zero diagonal."""
    pts = _as_points(positions)
    m = len(pts)
    if m < 2:
        raise DomainError("need at least two positions")
    adj = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            r = math.hypot(pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1])
            adj[i, j] = adj[j, i] = adjacency_weight(r, comm)
    return adj


def laplacian(adj) -> np.ndarray:
    """Graph Laplacian ``D - A``."""
    a = np.asarray(adj, dtype=float)
    return np.diag(a.sum(axis=1)) - a


def jacobi_eigh(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi diagonalisation of a real symmetric matrix.

    Rotations sweep the strict upper triangle row by row, so the result is
    fully deterministic. Iteration stops once the off-diagonal Frobenius norm
    drops below ``tol * max(1, ||A||_F)``.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    v : ndarray
        Orthonormal eigenvectors as columns, ordered like ``w``.
    """
    arr = np.array(a, dtype=float)
    n = arr.shape[0]
    # plain lists: far cheaper than numpy indexing for the small orders used here
    m = arr.tolist()
    v = np.eye(n).tolist()
    scale = max(1.0, float(np.linalg.norm(arr)))

    def off_norm():
        return math.sqrt(sum(m[i][j] * m[i][j] for i in range(n) for j in range(n) if i != j))

    for _ in range(max_sweeps):
        if off_norm() <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p][q]
                if apq == 0.0:
                    continue
                theta = (m[q][q] - m[p][p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    mkp, mkq = m[k][p], m[k][q]
                    m[k][p] = c * mkp - s * mkq
                    m[k][q] = s * mkp + c * mkq
                rp, rq = m[p], m[q]
                for k in range(n):
                    mpk, mqk = rp[k], rq[k]
                    rp[k] = c * mpk - s * mqk
                    rq[k] = s * mpk + c * mqk
                m[p][q] = m[q][p] = 0.0
                for row in v:
                    vp, vq = row[p], row[q]
                    row[p] = c * vp - s * vq
                    row[q] = s * vp + c * vq
    else:
        off = off_norm()
        if off > tol * scale:
            raise FormationError(f"Jacobi iteration did not converge (off-diagonal norm {off:.3e})")

    w = np.array([m[i][i] for i in range(n)])
    order = np.argsort(w, kind="stable")
    return w[order], np.array(v)[:, order]


def spectral_summary(L) -> SpectralSummary:
    lap = np.asarray(L, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise DomainError(f"Laplacian must be square, got shape {lap.shape}")
    if lap.shape[0] < 2:
        raise DomainError("Laplacian must have order >= 2")
    asym = float(np.max(np.abs(lap - lap.T)))
    if asym > SYMMETRY_TOL:
        raise DomainError(f"matrix is not symmetric (max asymmetry {asym:.3e})")

    w, v = jacobi_eigh(0.5 * (lap + lap.T))
    vec = v[:, 1]
    # sign convention: largest-magnitude component positive
    k = int(np.argmax(np.abs(vec)))
    if vec[k] < 0:
        vec = -vec
    return SpectralSummary(eigenvalues=w, fiedler_value=float(w[1]), fiedler_vector=vec / np.linalg.norm(vec))


def algebraic_connectivity(L) -> float:
    return spectral_summary(L).fiedler_value


def is_connected(L, tol: float = DEFAULT_CONNECTIVITY_TOL) -> bool:
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    return algebraic_connectivity(L) > tol
