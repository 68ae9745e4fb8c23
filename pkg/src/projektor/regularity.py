"""Witness vectors, witness gaps and the fast/slow dichotomy scan.

The witness gap of a family L_1..L_K is the smallest eigenvalue of
sum_k (I - P(L_k)) on the orthogonal complement of L = intersection of all L_k.
A small gap means some unit vector far from L is close to every L_k at once.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from ._parallel import pmap
from .errors import EmptyReportError, InputError, ZeroNormError
from .schedule import NORM_FLOOR, Schedule, fit_rate, run_trajectory
from .subspace import RANK_TOL, Subspace, complement, dist, intersect_all, principal_angles

GAP_VANISHING = "GAP_VANISHING"
RATE_TO_ONE = "RATE_TO_ONE"


@dataclass(frozen=True)
class RegularityReport:
    truncation_dim: int
    witness_gap: float
    witness: np.ndarray = field(repr=False)
    max_dist: float
    rate: float
    friedrichs_pairs: dict = field(default_factory=dict)
    truncation: int | None = None

    def row(self):
        return {"N": self.truncation if self.truncation is not None else self.truncation_dim,
                "witness_gap": self.witness_gap, "max_dist": self.max_dist, "rate": self.rate}


def coordinate_blocks(subspaces: Sequence[Subspace]) -> tuple[list[np.ndarray], np.ndarray]:
    """Split the coordinates into groups that no basis vector straddles.

    Each subspace is then the direct sum of its pieces inside the groups, so
    the witness problem decouples.  Returns (groups, untouched coordinates).
    """
    n = subspaces[0].ambient_dim
    ds = DisjointSet(range(n))
    touched = np.zeros(n, dtype=bool)
    for s in subspaces:
        for col in s.basis.T:
            nz = np.flatnonzero(col)
            touched[nz] = True
            for j in nz[1:]:
                ds.merge(int(nz[0]), int(j))
    groups = {}
    for i in np.flatnonzero(touched):
        groups.setdefault(ds[int(i)], []).append(int(i))
    blocks = sorted((np.array(g) for g in groups.values()), key=lambda g: g[0])
    return blocks, np.flatnonzero(~touched)


def _restrict(s: Subspace, rows: np.ndarray) -> Subspace:
    cols = np.flatnonzero(np.any(s.basis[rows] != 0, axis=0))
    return Subspace(s.basis[np.ix_(rows, cols)])


def _block_witness(pieces: Sequence[Subspace], tol: float):
    L = intersect_all(pieces, tol)
    q = complement(L).basis
    if q.shape[1] == 0:
        return None
    K = len(pieces)
    op = K * np.eye(q.shape[1])
    for p in pieces:
        c = p.basis.T @ q
        op -= c.T @ c
    op = 0.5 * (op + op.T)
    vals, vecs = np.linalg.eigh(op)
    w = q @ vecs[:, 0]
    return max(float(vals[0]), 0.0), w / np.linalg.norm(w), L.dim


def intersection_dim(subspaces: Sequence[Subspace], tol: float = RANK_TOL) -> int:
    """dim of the common intersection, computed blockwise."""
    total = 0
    for rows in coordinate_blocks(subspaces)[0]:
        total += intersect_all([_restrict(s, rows) for s in subspaces], tol).dim
    return total


def witness_gap_only(subspaces: Sequence[Subspace], tol: float = RANK_TOL):
    """(gap, witness, dim L) without the rate fit or pair table; None gap if L^perp = {0}."""
    n = subspaces[0].ambient_dim
    best = None
    ldim = 0
    blocks, untouched = coordinate_blocks(subspaces)
    for rows in blocks:
        res = _block_witness([_restrict(s, rows) for s in subspaces], tol)
        if res is None:
            ldim += len(rows)
            continue
        gap, w_loc, dl = res
        ldim += dl
        if best is None or gap < best[0]:
            w = np.zeros(n)
            w[rows] = w_loc
            best = (gap, w)
    # on coordinates no subspace touches, sum_k (I - P_k) is K times the identity
    if untouched.size and (best is None or len(subspaces) < best[0]):
        w = np.zeros(n)
        w[untouched[0]] = 1.0
        best = (float(len(subspaces)), w)
    if best is None:
        return None, None, ldim
    return best[0], best[1], ldim


def cyclic_rate(subspaces: Sequence[Subspace], z0, cycles: int = 40) -> float:
    """Fitted per-cycle rate of the cyclic product started at z0; 0 if annihilated."""
    K = len(subspaces)
    traj = run_trajectory(subspaces, Schedule.cyclic(K), z0, cycles * K, keep_points=False)
    at_cycles = traj.norms[::K]
    alive = np.flatnonzero(at_cycles > NORM_FLOOR)
    last = int(alive[-1]) if alive.size else 0
    if last < 2:
        return 0.0
    try:
        return fit_rate(traj, range(last // 2, last + 1))
    except ZeroNormError:
        return 0.0


def witness_search(subspaces: Sequence[Subspace], tol: float = RANK_TOL, cycles: int = 40,
                   pairs: bool = True, truncation: int | None = None) -> RegularityReport:
    """Minimise sum_k dist(w, L_k)^2 over unit w orthogonal to the common intersection."""
    if not subspaces:
        raise InputError("empty subspace list")
    if len({s.ambient_dim for s in subspaces}) != 1:
        raise InputError("ambient dimension mismatch")
    if len(subspaces) == 1:
        raise EmptyReportError("a single subspace is its own intersection")
    gap, w, _ = witness_gap_only(subspaces, tol)
    if gap is None:
        raise EmptyReportError("common intersection is the whole space")
    md = max(dist(w, s) for s in subspaces)
    table = {}
    if pairs:
        for i, j in combinations(range(len(subspaces)), 2):
            if subspaces[i].dim and subspaces[j].dim:
                table[(i + 1, j + 1)] = principal_angles(subspaces[i], subspaces[j], tol).friedrichs_cos
            else:
                table[(i + 1, j + 1)] = 0.0
    rate = cyclic_rate(subspaces, w, cycles)
    w.setflags(write=False)
    return RegularityReport(subspaces[0].ambient_dim, gap, w, md, rate, table, truncation)


@dataclass(frozen=True)
class ScanResult:
    truncations: tuple
    reports: tuple
    flags: tuple

    def csv_text(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["N", "witness_gap", "max_dist", "rate", "flag_gap", "flag_rate"])
        fg = int(GAP_VANISHING in self.flags)
        fr = int(RATE_TO_ONE in self.flags)
        for t, r in zip(self.truncations, self.reports):
            wr.writerow([t, repr(r.witness_gap), repr(r.max_dist), repr(r.rate), fg, fr])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "flags": list(self.flags),
            "reports": [
                {"N": t, "truncation_dim": r.truncation_dim, "witness_gap": r.witness_gap,
                 "max_dist": r.max_dist, "rate": r.rate,
                 "witness": [float(x) for x in r.witness],
                 "friedrichs_pairs": {f"{a},{b}": v for (a, b), v in r.friedrichs_pairs.items()}}
                for t, r in zip(self.truncations, self.reports)
            ],
        }

    def write(self, csv_path, json_path=None):
        Path(csv_path).write_text(self.csv_text())
        if json_path is not None:
            Path(json_path).write_text(json.dumps(self.to_json(), indent=1))


def trend_flags(reports: Sequence[RegularityReport], decay: float = 10.0) -> tuple:
    first, last = reports[0], reports[-1]
    flags = []
    if first.witness_gap > 0 and first.witness_gap >= decay * last.witness_gap:
        flags.append(GAP_VANISHING)
    g0, g1 = 1.0 - first.rate, 1.0 - last.rate
    if g0 > 0 and g0 >= decay * g1:
        flags.append(RATE_TO_ONE)
    return tuple(flags)


def _resolve(constructor) -> Callable[[int], Sequence[Subspace]]:
    if callable(constructor):
        return constructor
    family, params = constructor
    from .gallery import family_builder
    return family_builder(family, **dict(params))


def dichotomy_scan(constructor, truncations: Sequence[int], subset: Sequence[int] | None = None,
                   decay: float = 10.0, pairs: bool = False) -> ScanResult:
    """One witness report per truncation level plus trend flags.

    ``constructor`` is either a callable taking the truncation level, or a
    (family, params) pair resolved through the gallery.  ``subset`` picks
    1-based subspace indices, e.g. (1, 2) for a pair subscan.
    """
    truncations = tuple(int(t) for t in truncations)
    if not truncations:
        raise InputError("no truncation levels")
    if any(b <= a for a, b in zip(truncations, truncations[1:])):
        raise InputError("truncations must be strictly increasing")
    build = _resolve(constructor)

    def one(t):
        subs = list(build(t))
        if subset is not None:
            subs = [subs[i - 1] for i in subset]
        return witness_search(subs, pairs=pairs, truncation=t)

    reports = tuple(pmap(one, truncations))
    return ScanResult(truncations, reports, trend_flags(reports, decay) if len(reports) > 1 else ())


def extract_witness_sequence(reports: Sequence[RegularityReport]):
    """[(truncation, witness, max_dist), ...] across a scan."""
    if len(reports) < 2:
        raise InputError("need at least two reports")
    return [(r.truncation if r.truncation is not None else r.truncation_dim, r.witness, r.max_dist)
            for r in reports]
