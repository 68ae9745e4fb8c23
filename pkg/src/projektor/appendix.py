"""Numerical versions of three elementary Hilbert-space lemmas.

* small perturbations of an orthonormal family give an isomorphism close to I
* greedy extraction of an almost-orthonormal subsequence
* almost-orthogonal subspaces: the projection onto F v G is close to P(F) + P(G)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError, PreconditionViolated
from .subspace import Subspace, join

EXHAUSTED = "EXHAUSTED"
TOL = 1e-9


@dataclass(frozen=True)
class PerturbationReport:
    beta: float
    norm_T: float
    norm_Tinv: float
    max_deviation: float

    @property
    def norm_ok(self) -> bool:
        return self.norm_T <= 1 + self.beta + TOL

    @property
    def inverse_ok(self) -> bool:
        return self.norm_Tinv <= 1 / (1 - self.beta) + TOL

    @property
    def deviation_ok(self) -> bool:
        return self.max_deviation <= self.beta + TOL

    @property
    def ok(self) -> bool:
        return self.norm_ok and self.inverse_ok and self.deviation_ok


def _columns(vs) -> np.ndarray:
    if isinstance(vs, np.ndarray) and vs.ndim == 2:
        return np.asarray(vs, dtype=float)
    return np.column_stack([np.asarray(v, dtype=float) for v in vs])


def perturbed_iso_bounds(f_basis, w_list, alphas: Sequence[float], beta: float) -> PerturbationReport:
    """Norms of T with T f_n = w_n on span{f_n}.

    In f-coordinates T is the matrix W whose columns are the w_n, so
    ||T|| = s_max(W), ||T^-1|| = 1 / s_min(W) and ||T - I|| = s_max(W - F).
    """
    F = _columns(f_basis)
    W = _columns(w_list)
    alphas = np.asarray(alphas, dtype=float)
    if F.shape != W.shape or alphas.shape != (F.shape[1],):
        raise InputError("f_basis, w_list and alphas must have matching lengths")
    if np.max(np.abs(F.T @ F - np.eye(F.shape[1]))) > 1e-10:
        raise InputError("f_basis is not orthonormal")
    if np.any(alphas <= 0):
        raise PreconditionViolated("alphas must be positive")
    if not (alphas.sum() < beta < 0.25):
        raise PreconditionViolated("need sum(alphas) < beta < 1/4",
                                   {"sum_alpha": float(alphas.sum()), "beta": beta})
    dev = np.linalg.norm(W - F, axis=0)
    if np.any(dev > alphas + 1e-12):
        bad = int(np.argmax(dev - alphas))
        raise PreconditionViolated("|w_n - f_n| exceeds alpha_n",
                                   {"index": bad, "deviation": float(dev[bad]), "alpha": float(alphas[bad])})
    s = np.linalg.svd(W, compute_uv=False)
    return PerturbationReport(beta, float(s[0]), float(1 / s[-1]),
                              float(np.linalg.norm(W - F, 2)))


def random_perturbation_instance(rng: np.random.Generator, beta: float = 0.2, max_dim: int = 50):
    """Orthonormal f_1..f_n in R^N plus w_n = f_n + d_n with |d_n| = alpha_n,
    alpha_n geometric with sum just under beta."""
    N = int(rng.integers(2, max_dim + 1))
    n = int(rng.integers(1, N + 1))
    q, _ = np.linalg.qr(rng.standard_normal((N, N)))
    F = q[:, :n]
    ratio = rng.uniform(0.3, 0.8)
    total = beta * rng.uniform(0.5, 0.999)
    alphas = total * (1 - ratio) * ratio ** np.arange(n) / (1 - ratio ** n)
    d = rng.standard_normal((N, n))
    d *= alphas / np.linalg.norm(d, axis=0)
    return F, F + d, alphas


@dataclass(frozen=True)
class Extraction:
    indices: tuple
    vectors: tuple
    status: str = "OK"

    @property
    def exhausted(self) -> bool:
        return self.status == EXHAUSTED


def extract_almost_orthonormal(w_seq: Sequence, a_seq: Sequence[float], V: Subspace) -> Extraction:
    """Greedy pick of w_{n_1}, w_{n_2}, ... with |w_{n_i} - e_i| <= a_i.

    e_i is the normalised part of w_{n_i} orthogonal to V and to the earlier
    e_j.  Candidates are scanned in order after the previous pick; if the
    sequence runs out before every a_i is used the status is EXHAUSTED.
    """
    a = [float(x) for x in a_seq]
    if any(x <= 0 or x > 0.5 for x in a):
        raise InputError("a_i must lie in (0, 1/2]")
    if any(y > x for x, y in zip(a, a[1:])):
        raise InputError("a_i must be nonincreasing")
    ws = [np.asarray(w, dtype=float) for w in w_seq]
    basis = [V.basis[:, j] for j in range(V.dim)]
    picked, es = [], []
    n = 0
    for ai in a:
        found = False
        while n < len(ws):
            w = ws[n]
            r = w.copy()
            for _ in range(2):
                for b in basis:
                    r -= (b @ r) * b
            nr = np.linalg.norm(r)
            if nr > 1e-12:
                e = r / nr
                if np.linalg.norm(w - e) <= ai:
                    picked.append(n)
                    es.append(e)
                    basis.append(e)
                    n += 1
                    found = True
                    break
            n += 1
        if not found:
            return Extraction(tuple(picked), tuple(es), EXHAUSTED)
    return Extraction(tuple(picked), tuple(es), "OK")


@dataclass(frozen=True)
class OrthogonalityBounds:
    alpha: float
    norm_sum: float          # ||P(F) + P(G) - P(F v G)||
    norm_prod: float         # ||P(F) P(G)||
    decomposition_norm: float  # max(||x -> f||, ||x -> g||) on F v G
    sampled_ok: bool

    @property
    def bound_sum(self) -> float:
        return 4 * np.sqrt(self.alpha)

    @property
    def bound_prod(self) -> float:
        return float(np.sqrt(self.alpha))

    @property
    def ok(self) -> bool:
        return (self.norm_sum <= self.bound_sum + TOL and self.norm_prod <= self.bound_prod + TOL
                and self.decomposition_norm <= 2 + TOL and self.sampled_ok)


def almost_orthogonality_bounds(F: Subspace, G: Subspace, samples: int = 64, seed: int = 0) -> OrthogonalityBounds:
    """alpha = max |<f, g>| over unit f in F, g in G; requires alpha < 1/3.

    Besides the two operator norms, checks that x in F v G with |x| <= 1/2
    splits as f + g with |f|, |g| <= 1: via the norm of the splitting map and
    on ``samples`` random x.
    """
    if F.ambient_dim != G.ambient_dim:
        raise InputError("ambient dimension mismatch")
    if F.dim == 0 or G.dim == 0:
        alpha = 0.0
    else:
        alpha = float(np.linalg.svd(F.basis.T @ G.basis, compute_uv=False)[0])
    if alpha >= 1 / 3:
        raise PreconditionViolated("alpha must be below 1/3", {"alpha": alpha})
    PF, PG = F.projector(), G.projector()
    FG = join(F, G)
    norm_sum = float(np.linalg.norm(PF + PG - FG.projector(), 2))
    norm_prod = float(np.linalg.norm(PF @ PG, 2))
    M = np.hstack([F.basis, G.basis])
    if M.shape[1] == 0:
        return OrthogonalityBounds(alpha, norm_sum, norm_prod, 0.0, True)
    pinv = np.linalg.pinv(M)
    split_f, split_g = pinv[:F.dim], pinv[F.dim:]
    dnorm = max(np.linalg.norm(split_f, 2) if F.dim else 0.0,
                np.linalg.norm(split_g, 2) if G.dim else 0.0)
    rng = np.random.Generator(np.random.Philox(seed))
    x = FG.basis @ rng.standard_normal((FG.dim, samples))
    x *= 0.5 / np.linalg.norm(x, axis=0)
    cf, cg = split_f @ x, split_g @ x
    ok_samples = bool(np.allclose(F.basis @ cf + G.basis @ cg, x, atol=1e-9)
                      and np.all(np.linalg.norm(cf, axis=0) <= 1 + TOL)
                      and np.all(np.linalg.norm(cg, axis=0) <= 1 + TOL))
    return OrthogonalityBounds(alpha, norm_sum, norm_prod, float(dnorm), ok_samples)


def random_almost_orthogonal_pair(rng: np.random.Generator, max_dim: int = 50, alpha_max: float = 1 / 3):
    """F, G with prescribed principal cosines drawn from [0, alpha_max)."""
    N = int(rng.integers(2, max_dim + 1))
    dF = int(rng.integers(1, N))
    dG = int(rng.integers(1, N - dF + 1))
    q, _ = np.linalg.qr(rng.standard_normal((N, N)))
    k = min(dF, dG)
    cos = rng.uniform(0, alpha_max, size=k)
    sin = np.sqrt(1 - cos ** 2)
    gcols = [cos[j] * q[:, j] + sin[j] * q[:, dF + j] for j in range(k)]
    gcols += [q[:, dF + j] for j in range(k, dG)]
    return Subspace(q[:, :dF]), Subspace(np.column_stack(gcols)), float(cos.max())
