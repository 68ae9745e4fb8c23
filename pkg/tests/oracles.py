"""Independent reference computations used to cross-check the package.

These deliberately avoid the package's own routines: projections come from
least squares, angles from arccos of raw singular values, gaps from dense
eigenvalues of full N x N matrices.
"""
import math
from itertools import combinations

import numpy as np


def projector(vectors):
    """P = A (A^T A)^+ A^T from raw spanning vectors."""
    A = np.column_stack(vectors) if not isinstance(vectors, np.ndarray) else vectors
    return A @ np.linalg.pinv(A.T @ A) @ A.T


def proj_lstsq(vectors, x):
    A = np.column_stack(vectors) if not isinstance(vectors, np.ndarray) else vectors
    c, *_ = np.linalg.lstsq(A, x, rcond=None)
    return A @ c


def witness_gap_dense(projectors, tol=1e-9):
    """Smallest eigenvalue of sum (I - P_k) over eigenvectors not in the common kernel of that sum.

    The common intersection L is exactly the kernel of sum (I - P_k), so the
    gap is the smallest nonzero eigenvalue.
    """
    n = projectors[0].shape[0]
    S = sum(np.eye(n) - P for P in projectors)
    vals = np.linalg.eigvalsh(S)
    nz = vals[vals > tol]
    return float(nz[0]) if nz.size else None


def ladder_closed_form(M):
    return 1.0 - math.cos(math.pi / (2 * M)) ** M


def ladder_scan(eps):
    M = 1
    while ladder_closed_form(M) >= eps:
        M += 1
    return M


def johnson_brute(K):
    verts = list(combinations(range(1, K + 1), 4))
    edges = [(a, b) for i, a in enumerate(verts) for b in verts[i + 1:] if len(set(a) & set(b)) == 3]
    return verts, edges


def transfer_rule(walk):
    """Re-implementation of the X/Y/Z hand-over along a walk, written independently:
    tracks, for each symbol, which member currently carries it."""
    E = [set(a) & set(b) for a, b in zip(walk, walk[1:])]
    carrier = dict(zip("XYZ", sorted(E[0])))
    cols = []
    for i, e in enumerate(E):
        if i:
            for sym, k in list(carrier.items()):
                if k not in e:
                    carrier[sym] = (e - set(carrier.values())).pop()
        cols.append({k: sym for sym, k in carrier.items()})
    return cols


def cycle_rate_power(theta, iters=200):
    """Per-cycle rate of P2 P1 for two lines at angle theta via power iteration on the 2x2 cycle operator."""
    l1 = np.array([1.0, 0.0])
    l2 = np.array([math.cos(theta), math.sin(theta)])
    C = np.outer(l2, l2) @ np.outer(l1, l1)
    x = np.array([0.3, 0.7])
    lam = 0.0
    for _ in range(iters):
        y = C @ x
        lam = np.linalg.norm(y) / np.linalg.norm(x)
        x = y / np.linalg.norm(y)
    return lam
