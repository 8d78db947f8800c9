"""Codebook construction and k-NN graph Laplacian over local features.

Features enter as a D x n matrix (one column per pixel of the patch grid).
The codebook is learned once from the first frame and frozen; per-frame
graphs are rebuilt from the current features.
"""
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import DegenerateInputWarning, DimensionMismatch

DEFAULT_DICT_ITERS = 30
_CD_SWEEPS = 3  # code-update sweeps per outer dictionary iteration


@dataclass
class Codebook:
    """Dictionary of unit-norm atoms, one column each."""

    atoms: np.ndarray  # (D, k)
    objective_trace: list | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self):
        return self.atoms.shape[0]

    @property
    def k(self):
        return self.atoms.shape[1]

    def encode(self, X):
        """Projection codes B^T X (the solver's initialization coding)."""
        if X.shape[0] != self.dim:
            raise DimensionMismatch(
                f"feature dim {X.shape[0]} != codebook dim {self.dim}"
            )
        return self.atoms.T @ X

    def encode_lsq(self, X):
        """Least-squares codes pinv(B) X.

        These live on the same scale as codes satisfying the
        reconstruction constraint X = B Z, which keeps detection-time
        codes commensurate with the solver's output.
        """
        if X.shape[0] != self.dim:
            raise DimensionMismatch(
                f"feature dim {X.shape[0]} != codebook dim {self.dim}"
            )
        if not hasattr(self, "_pinv"):
            self._pinv = np.linalg.pinv(self.atoms)
        return self._pinv @ X

    def to_json(self):
        return json.dumps(
            {
                "dim": int(self.dim),
                "k": int(self.k),
                "atoms": [float(v) for v in self.atoms.ravel()],
            }
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        atoms = np.asarray(data["atoms"]).reshape(data["dim"], data["k"])
        return cls(atoms=atoms)


@dataclass
class LaplacianGraph:
    """k-NN graph over feature columns: L = F - G with F the degree diagonal."""

    size: int
    neighbor_count: int
    L: sparse.csr_matrix
    G: sparse.csr_matrix
    degrees: np.ndarray


def _coding_objective(X, B, A, alpha):
    return float(np.linalg.norm(X - B @ A) ** 2 + alpha * np.abs(A).sum())


def _soft(v, thr):
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def _code_sweep(X, B, A, R, alpha):
    """One Gauss-Seidel sweep of coordinate soft-thresholding over atoms.

    R is the residual X - B @ A, updated in place alongside A.
    """
    for j in range(B.shape[1]):
        bj = B[:, j]
        nrm2 = float(bj @ bj)
        if nrm2 <= 0.0:
            continue
        Rj = R + np.outer(bj, A[j])
        aj = _soft(bj @ Rj, 0.5 * alpha) / nrm2
        A[j] = aj
        R[:] = Rj - np.outer(bj, aj)


def _init_atoms(X, k, rng):
    """Pick k starting atoms from distinct feature columns.

    Falls back to perturbed duplicates (with a warning) when the input has
    fewer than k distinct columns.
    """
    uniq = np.unique(X.T, axis=0).T
    n_uniq = uniq.shape[1]
    if n_uniq >= k:
        sel = rng.choice(n_uniq, size=k, replace=False)
        B = uniq[:, sel].astype(float).copy()
    else:
        warnings.warn(
            f"only {n_uniq} distinct feature columns for {k} atoms; "
            "padding with perturbed duplicates",
            DegenerateInputWarning,
        )
        sel = rng.integers(0, n_uniq, size=k)
        B = uniq[:, sel].astype(float).copy()
        scale = max(np.abs(X).max(), 1.0)
        B[:, n_uniq:] += 1e-3 * scale * rng.standard_normal(B[:, n_uniq:].shape)
    norms = np.linalg.norm(B, axis=0)
    norms[norms == 0] = 1.0
    return B / norms


def learn_codebook(X, k, iters=DEFAULT_DICT_ITERS, seed=0, alpha=None):
    """Dictionary learning by alternating sparse coding and atom updates.

    Minimizes ||X - B A||_F^2 + alpha ||A||_1 with atoms constrained to the
    unit ball during the alternation (so the recorded objective is
    non-increasing); returned atoms are rescaled to exactly unit norm.
    alpha defaults to 0.1 * mean column norm of X.
    """
    X = np.asarray(X, dtype=float)
    d, n = X.shape
    if k > n:
        raise DimensionMismatch(f"k = {k} exceeds number of feature columns {n}")
    if alpha is None:
        alpha = 0.1 * float(np.mean(np.linalg.norm(X, axis=0)))
    rng = np.random.default_rng(seed)
    B = _init_atoms(X, k, rng)
    A = np.zeros((k, n))
    R = X.copy()
    trace = []
    for _ in range(max(1, iters)):
        for _ in range(_CD_SWEEPS):
            _code_sweep(X, B, A, R, alpha)
        # atom update: exact per-column minimizer on the unit ball
        for j in range(k):
            aj = A[j]
            denom = float(aj @ aj)
            if denom <= 0.0:
                continue  # unused atom contributes nothing; leave it
            Rj = R + np.outer(B[:, j], aj)
            bj = Rj @ aj / denom
            nrm = np.linalg.norm(bj)
            if nrm > 1.0:
                bj /= nrm
            B[:, j] = bj
            R[:] = Rj - np.outer(bj, aj)
        trace.append(_coding_objective(X, B, A, alpha))
    norms = np.linalg.norm(B, axis=0)
    norms[norms == 0] = 1.0
    return Codebook(atoms=B / norms, objective_trace=trace)


def kmeans_codebook(X, k, seed=0, iters=100):
    """Lloyd's k-means over feature columns, centers renormalized to unit norm.

    Empty clusters are re-seeded from the point farthest from its center.
    Results depend on the random initialization; two seeds may give two
    different codebooks.
    """
    X = np.asarray(X, dtype=float)
    d, n = X.shape
    if k > n:
        raise DimensionMismatch(f"k = {k} exceeds number of feature columns {n}")
    rng = np.random.default_rng(seed)
    centers = _init_atoms(X, k, rng) * np.maximum(
        np.mean(np.linalg.norm(X, axis=0)), 1e-12
    )
    assign = np.full(n, -1)
    for _ in range(max(1, iters)):
        d2 = (
            np.sum(X**2, axis=0)[None, :]
            - 2.0 * centers.T @ X
            + np.sum(centers**2, axis=0)[:, None]
        )
        new_assign = np.argmin(d2, axis=0)
        dists = d2[new_assign, np.arange(n)]
        for j in range(k):
            mask = new_assign == j
            if mask.any():
                centers[:, j] = X[:, mask].mean(axis=1)
            else:
                far = int(np.argmax(dists))
                centers[:, j] = X[:, far]
                new_assign[far] = j
                dists[far] = 0.0
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    norms = np.linalg.norm(centers, axis=0)
    norms[norms == 0] = 1.0
    return Codebook(atoms=centers / norms)


def _knn_1d_node(sv, order, pos, r):
    """Exact neighbors of one node when distance ties spill past the window.

    Expands outward by sorted position, comparing distances computed with
    the same float expression as the threshold (never reconstructing
    boundary values, which would not round-trip).
    """
    n = len(sv)
    v = sv[pos]
    lo = max(0, pos - r)
    hi = min(n, pos + r + 1)
    window = np.concatenate([sv[lo:pos], sv[pos + 1 : hi]])
    dstar = np.sort(np.abs(window - v))[r - 1]
    strict, ties = [], []
    t = pos - 1
    while t >= 0:
        d = abs(sv[t] - v)
        if d > dstar:
            break
        (ties if d == dstar else strict).append(order[t])
        t -= 1
    t = pos + 1
    while t < n:
        d = abs(sv[t] - v)
        if d > dstar:
            break
        (ties if d == dstar else strict).append(order[t])
        t += 1
    return (strict + sorted(ties))[:r]


def _knn_columns_1d(v, r):
    """Exact r-NN neighbor lists for scalar features, via one sort.

    Same semantics as the generic path: rank candidates by
    (|value difference|, index) and keep the first r. The r nearest by
    value lie within r sorted positions on either side, so the bulk is
    vectorized over a (n, 2r) window; only nodes whose tie at the r-th
    distance extends past that window take a per-node path.
    """
    n = v.shape[0]
    order = np.lexsort((np.arange(n), v))
    sv = v[order]
    pos = np.arange(n)
    offsets = np.concatenate([np.arange(-r, 0), np.arange(1, r + 1)])
    win = pos[:, None] + offsets[None, :]
    valid = (win >= 0) & (win < n)
    winc = np.clip(win, 0, n - 1)
    deltas = np.where(valid, np.abs(sv[winc] - sv[:, None]), np.inf)
    dstar = np.partition(deltas, r - 1, axis=1)[:, r - 1]
    # a tie at the r-th distance just past the window needs exact handling
    below = np.clip(pos - r - 1, 0, n - 1)
    above = np.clip(pos + r + 1, 0, n - 1)
    spill = ((pos - r - 1 >= 0) & (np.abs(sv[below] - sv) == dstar)) | (
        (pos + r + 1 < n) & (np.abs(sv[above] - sv) == dstar)
    )
    idx_keys = np.where(valid, order[winc], n)
    sel = np.lexsort((idx_keys, deltas), axis=1)[:, :r]
    neighbors = np.take_along_axis(idx_keys, sel, axis=1)
    cols = np.empty((n, r), dtype=np.int64)
    cols[order] = neighbors
    for p in np.nonzero(spill)[0]:
        cols[order[p]] = _knn_1d_node(sv, order, int(p), r)
    return cols


def build_laplacian(X, r, block=1024):
    """Exact r-nearest-neighbor graph Laplacian over the columns of X.

    Euclidean distances, ties broken by lowest column index, adjacency
    symmetrized with max(G, G^T). Distances are computed blockwise so the
    n x n matrix never has to be materialized at once; single-channel
    features take a sort-based path with identical semantics.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if not 1 <= r < n:
        raise DimensionMismatch(f"need 1 <= r < n, got r = {r}, n = {n}")
    if X.shape[0] == 1:
        cols = _knn_columns_1d(X[0], r)
    else:
        sq = np.sum(X**2, axis=0)
        cols = np.empty((n, r), dtype=np.int64)
        for start in range(0, n, block):
            stop = min(start + block, n)
            d2 = sq[start:stop, None] - 2.0 * X[:, start:stop].T @ X + sq[None, :]
            d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
            # stable sort keeps the lowest index first among equal distances
            order = np.argsort(d2, axis=1, kind="stable")
            cols[start:stop] = order[:, :r]
    rows = np.repeat(np.arange(n), r)
    G = sparse.csr_matrix(
        (np.ones(n * r), (rows, cols.ravel())), shape=(n, n)
    )
    G = G.maximum(G.T)
    degrees = np.asarray(G.sum(axis=1)).ravel()
    L = sparse.diags(degrees) - G
    return LaplacianGraph(
        size=n, neighbor_count=r, L=L.tocsr(), G=G.tocsr(), degrees=degrees
    )


def laplacian_encode(X, codebook, graph=None, gamma=0.0, ridge=1e-8):
    """Coding of X on the codebook with the graph-smoothness penalty.

    Solves min_Z ||X - B Z||_F^2 + gamma tr(Z L Z^T) (+ a tiny ridge for
    well-posedness) — the coding-only route used when joint learning is
    disabled. gamma = 0 or no graph reduces to least squares.
    """
    X = np.asarray(X, dtype=float)
    B = codebook.atoms
    k, n = B.shape[1], X.shape[1]
    BtX = B.T @ X
    if graph is None or gamma == 0.0:
        return np.linalg.lstsq(B, X, rcond=None)[0]
    BtB = B.T @ B + ridge * np.eye(k)
    L = graph.L

    def matvec(zvec):
        Z = zvec.reshape(k, n)
        return (BtB @ Z + gamma * (Z @ L)).ravel()

    op = splinalg.LinearOperator((k * n, k * n), matvec=matvec)
    z0 = (B.T @ X).ravel()
    sol, _ = splinalg.cg(op, BtX.ravel(), x0=z0, rtol=1e-8, maxiter=300)
    return sol.reshape(k, n)
