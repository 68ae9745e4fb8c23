"""Finite-dimensional subspace arithmetic.

A :class:`Subspace` of R^N is stored as an N x d matrix with orthonormal
columns.  d = 0 is the zero subspace.  All functions are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySubspaceError, InputError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class Subspace:
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float, copy=True)
        if b.ndim != 2:
            raise InputError(f"basis must be 2-D, got shape {b.shape}")
        if b.shape[1] > b.shape[0]:
            raise InputError("more basis vectors than ambient dimensions")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def __repr__(self):
        return f"Subspace(N={self.ambient_dim}, d={self.dim})"

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n))


@dataclass(frozen=True)
class AngleProfile:
    principal_angles: np.ndarray
    friedrichs_cos: float
    dim_intersection: int


def _as_columns(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return np.asarray(vectors, dtype=float)
    vecs = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if not vecs:
        raise InputError("need at least one vector (use Subspace.zero for {0})")
    n = vecs[0].shape[0]
    if any(v.shape[0] != n for v in vecs):
        raise InputError("vectors have different ambient dimensions")
    return np.column_stack(vecs)


def make_subspace(vectors, tol: float = RANK_TOL) -> Subspace:
    """Orthonormal basis of the span of ``vectors`` (list of vectors or N x k array).

    Gram-Schmidt against the accepted columns, run twice per vector so the
    basis stays orthonormal to working precision.  A direction is dropped
    when its residual norm is at most ``tol`` times the largest input norm.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    a = _as_columns(vectors)
    n, k = a.shape
    if not np.all(np.isfinite(a)):
        raise InputError("non-finite entries")
    scale = float(np.linalg.norm(a, axis=0).max()) if k else 0.0
    if scale == 0.0:
        return Subspace.zero(n)
    norms = np.linalg.norm(a, axis=0)
    gram = a.T @ a
    np.fill_diagonal(gram, 0.0)
    if not gram.any():
        # columns already mutually orthogonal (disjoint supports in the gallery)
        keep = norms > tol * scale
        if not keep.any():
            return Subspace.zero(n)
        return Subspace(a[:, keep] / norms[keep])
    q = np.empty((n, min(n, k)))
    m = 0
    for j in range(k):
        if m == n:
            break
        r = a[:, j].copy()
        for _ in range(2):
            r -= q[:, :m] @ (q[:, :m].T @ r)
        nr = np.linalg.norm(r)
        if nr > tol * scale:
            q[:, m] = r / nr
            m += 1
    if m == 0:
        return Subspace.zero(n)
    return Subspace(q[:, :m].copy())


def span(*vectors, tol: float = RANK_TOL) -> Subspace:
    return make_subspace(list(vectors), tol)


def _check_dims(*items):
    dims = set()
    for it in items:
        dims.add(it.ambient_dim if isinstance(it, Subspace) else np.asarray(it).shape[0])
    if len(dims) > 1:
        raise InputError(f"ambient dimension mismatch: {sorted(dims)}")


def project(s: Subspace, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    _check_dims(s, x)
    b = s.basis
    return b @ (b.T @ x)


def dist(x, s: Subspace) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - project(s, x)))


def join(s1: Subspace, s2: Subspace, tol: float = RANK_TOL) -> Subspace:
    _check_dims(s1, s2)
    return make_subspace(np.hstack([s1.basis, s2.basis]), tol)


def complement(s: Subspace) -> Subspace:
    n = s.ambient_dim
    if s.dim == 0:
        return Subspace.full(n)
    # Full SVD of the basis: trailing left singular vectors span the orthogonal complement.
    u, _, _ = np.linalg.svd(s.basis, full_matrices=True)
    return Subspace(u[:, s.dim:])


def _principal(s1: Subspace, s2: Subspace):
    """Principal angles (accurate for small angles) and principal vectors of s1."""
    m = s1.basis.T @ s2.basis
    u, sv, vt = np.linalg.svd(m)
    k = min(s1.dim, s2.dim)
    sv = np.clip(sv[:k], 0.0, 1.0)
    p = s1.basis @ u[:, :k]
    q = s2.basis @ vt.T[:, :k]
    sines = np.linalg.norm(p - q * sv, axis=0)
    angles = np.arctan2(sines, sv)
    order = np.argsort(angles, kind="stable")
    return angles[order], p[:, order]


def principal_angles(s1: Subspace, s2: Subspace, tol: float = RANK_TOL) -> AngleProfile:
    _check_dims(s1, s2)
    if s1.dim == 0 or s2.dim == 0:
        raise EmptySubspaceError("principal angles undefined for the zero subspace")
    angles, _ = _principal(s1, s2)
    inter = int(np.sum(angles <= tol))
    rest = angles[angles > tol]
    fcos = float(np.cos(rest[0])) if rest.size else 0.0
    angles.setflags(write=False)
    return AngleProfile(angles, fcos, inter)


def intersect(s1: Subspace, s2: Subspace, tol: float = RANK_TOL) -> Subspace:
    _check_dims(s1, s2)
    if tol <= 0:
        raise InputError("tol must be positive")
    if s1.dim == 0 or s2.dim == 0:
        return Subspace.zero(s1.ambient_dim)
    angles, p = _principal(s1, s2)
    keep = p[:, angles <= tol]
    if keep.shape[1] == 0:
        return Subspace.zero(s1.ambient_dim)
    return make_subspace(keep, tol)


def intersect_all(subspaces: Sequence[Subspace], tol: float = RANK_TOL) -> Subspace:
    if not subspaces:
        raise InputError("empty subspace list")
    out = subspaces[0]
    for s in subspaces[1:]:
        out = intersect(out, s, tol)
        if out.dim == 0:
            break
    return out


def join_all(subspaces: Iterable[Subspace], tol: float = RANK_TOL) -> Subspace:
    subs = list(subspaces)
    if not subs:
        raise InputError("empty subspace list")
    _check_dims(*subs)
    return make_subspace(np.hstack([s.basis for s in subs]), tol)


# -- plain-text matrix format ------------------------------------------------
# header "N d", then N rows of d whitespace-separated decimals.

def dumps_subspace(s: Subspace) -> str:
    lines = [f"{s.ambient_dim} {s.dim}"]
    for row in s.basis:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def loads_subspace(text: str) -> Subspace:
    lines = text.splitlines()
    if not lines:
        raise InputError("empty subspace file")
    try:
        n, d = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise InputError(f"bad header {lines[0]!r}") from exc
    rows = lines[1:1 + n]
    if len(rows) != n:
        raise InputError(f"expected {n} rows, got {len(rows)}")
    data = np.zeros((n, d))
    for i, row in enumerate(rows):
        vals = row.split()
        if len(vals) != d:
            raise InputError(f"row {i} has {len(vals)} entries, expected {d}")
        if d:
            data[i] = [float(v) for v in vals]
    return Subspace(data)


def write_subspace(path, s: Subspace) -> None:
    Path(path).write_text(dumps_subspace(s))


def read_subspace(path) -> Subspace:
    return loads_subspace(Path(path).read_text())
