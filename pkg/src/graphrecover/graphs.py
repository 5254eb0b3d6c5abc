"""Undirected graphs, their Laplacians, and patch-graph conversion for images.

Graphs are stored as sparse symmetric 0/1 adjacency matrices. All operators
derived from them (normalized Laplacian, renormalized propagation matrix)
are returned in CSR form so downstream spectral code can do fast matvecs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse

# Dense eigendecomposition is cubic; above this size the Chebyshev
# approximation path must be used instead.
EXACT_EIG_CAP = 2000


@dataclass(frozen=True)
class Graph:
    """Undirected graph without self-loops.

    Attributes
    ----------
    n : int
        Number of nodes.
    edges : ndarray of shape (m, 2)
        Deduplicated edge list with u < v per row.
    adjacency : scipy.sparse.csr_matrix
        Symmetric 0/1 matrix with zero diagonal.
    degree : ndarray of shape (n,)
        Row-wise nonzero counts of the adjacency.
    """

    n: int
    edges: np.ndarray
    adjacency: sparse.csr_matrix = field(repr=False)
    degree: np.ndarray = field(repr=False)

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]


def build_graph(edge_list, n: int, drop_self_loops: bool = False) -> Graph:
    """Build an undirected Graph from an iterable of (u, v) pairs.

    Edges are deduplicated and symmetrized: (u, v) and (v, u) denote the
    same edge. Self-loops raise unless ``drop_self_loops`` is set, in which
    case they are silently discarded.
    """
    if n <= 0:
        raise ValueError(f"node count must be positive, got {n}")
    pairs = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise ValueError("edge endpoint out of range [0, n)")
    loops = pairs[:, 0] == pairs[:, 1]
    if loops.any():
        if not drop_self_loops:
            raise ValueError("self-loop in edge list (pass drop_self_loops=True to discard)")
        pairs = pairs[~loops]
    if pairs.size:
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        edges = np.unique(np.column_stack([lo, hi]), axis=0)
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.ones(rows.shape[0])
    adjacency = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    degree = np.asarray(adjacency.sum(axis=1)).ravel().astype(np.int64)
    return Graph(n=n, edges=edges, adjacency=adjacency, degree=degree)


def normalized_laplacian(g: Graph) -> sparse.csr_matrix:
    """Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}.

    Isolated nodes use the pseudo-inverse convention D^{-1/2} = 0, so their
    row/column reduces to the unit diagonal.
    """
    d = g.degree.astype(float)
    inv_sqrt = np.zeros_like(d)
    nz = d > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
    a = g.adjacency.tocoo()
    data = -a.data * inv_sqrt[a.row] * inv_sqrt[a.col]
    lap = sparse.coo_matrix((data, (a.row, a.col)), shape=(g.n, g.n))
    return (sparse.identity(g.n, format="coo") + lap).tocsr()


def gcn_propagation_matrix(g: Graph) -> sparse.csr_matrix:
    """Renormalized propagation matrix D~^{-1/2} (A + I) D~^{-1/2}."""
    a_tilde = (g.adjacency + sparse.identity(g.n, format="csr")).tocoo()
    d_tilde = g.degree.astype(float) + 1.0
    inv_sqrt = 1.0 / np.sqrt(d_tilde)
    data = a_tilde.data * inv_sqrt[a_tilde.row] * inv_sqrt[a_tilde.col]
    return sparse.csr_matrix((data, (a_tilde.row, a_tilde.col)), shape=(g.n, g.n))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues in nondecreasing order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)


def eigendecompose_small(lap, cap: int = EXACT_EIG_CAP) -> SpectralDecomposition:
    """Full dense eigendecomposition of a symmetric matrix.

    Only permitted up to ``cap`` nodes; larger problems must go through the
    Chebyshev approximation path.
    """
    n = lap.shape[0]
    if n > cap:
        raise ValueError(f"matrix size {n} exceeds exact-path cap {cap}; use the Chebyshev path")
    dense = lap.toarray() if sparse.issparse(lap) else np.asarray(lap, dtype=float)
    eigenvalues, eigenvectors = scipy.linalg.eigh(dense)
    return SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def estimate_lambda_max(lap, iters: int = 200, tol: float = 1e-6) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Returns the converged Rayleigh quotient. If the iteration fails to
    converge within ``iters`` steps, a warning is emitted and the spectral
    upper bound 2 of normalized Laplacians is returned instead.
    """
    n = lap.shape[0]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    rho = 0.0
    for _ in range(iters):
        w = lap @ v
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            return 0.0
        v = w / norm
        rho_new = float(v @ (lap @ v))
        if abs(rho_new - rho) <= tol * max(abs(rho_new), 1e-12):
            return rho_new
        rho = rho_new
    warnings.warn("power iteration did not converge; returning upper bound 2")
    return 2.0


def image_to_patch_graph(image, patch: int):
    """Split a grayscale image into non-overlapping square patches.

    Each patch becomes a node with the patch pixels (row-major) as its
    feature vector; nodes are connected in a 4-neighbor lattice. Image
    dimensions must be divisible by the patch side.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D grayscale image")
    h, w = img.shape
    if patch <= 0 or h % patch or w % patch:
        raise ValueError(f"image dims {h}x{w} not divisible by patch side {patch}")
    gh, gw = h // patch, w // patch
    features = (
        img.reshape(gh, patch, gw, patch)
        .transpose(0, 2, 1, 3)
        .reshape(gh * gw, patch * patch)
    )
    edges = []
    for gy in range(gh):
        for gx in range(gw):
            node = gy * gw + gx
            if gx + 1 < gw:
                edges.append((node, node + 1))
            if gy + 1 < gh:
                edges.append((node, node + gw))
    return build_graph(edges, gh * gw), features


def patch_graph_to_image(features, layout, patch: int) -> np.ndarray:
    """Inverse of :func:`image_to_patch_graph` for the same layout."""
    gh, gw = layout
    feats = np.asarray(features)
    if feats.shape != (gh * gw, patch * patch):
        raise ValueError(
            f"feature shape {feats.shape} does not match layout {gh}x{gw} with patch {patch}"
        )
    return (
        feats.reshape(gh, gw, patch, patch)
        .transpose(0, 2, 1, 3)
        .reshape(gh * patch, gw * patch)
    )
