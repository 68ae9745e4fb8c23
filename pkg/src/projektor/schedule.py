"""Projection trajectories z_n = P(L_{k_n}) z_{n-1} and their diagnostics."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, PreconditionViolated, ZeroNormError
from .subspace import Subspace, dist

# Norms at or below this are treated as underflow by fit_rate.
NORM_FLOOR = 1e-280


class ScheduleKind(str, Enum):
    CYCLIC = "CYCLIC"
    SEEDED_RANDOM = "SEEDED_RANDOM"
    EXPLICIT = "EXPLICIT"


@dataclass(frozen=True)
class Schedule:
    """Index sequence over 1..K.

    SEEDED_RANDOM draws i.i.d. uniform indices from a Philox stream keyed by
    ``seed``, so the same (seed, K, steps) always gives the same sequence.
    """

    kind: ScheduleKind
    K: int
    seed: int = 0
    indices: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if self.K < 1:
            raise InputError("K must be >= 1")
        if self.kind is ScheduleKind.EXPLICIT:
            idx = tuple(int(i) for i in self.indices)
            if not idx:
                raise InputError("EXPLICIT schedule needs indices")
            if min(idx) < 1 or max(idx) > self.K:
                raise InputError("explicit index outside 1..K")
            object.__setattr__(self, "indices", idx)
        if self.seed < 0:
            raise InputError("seed must be unsigned")

    @classmethod
    def cyclic(cls, K):
        return cls(ScheduleKind.CYCLIC, K)

    @classmethod
    def random(cls, K, seed):
        return cls(ScheduleKind.SEEDED_RANDOM, K, seed=seed)

    @classmethod
    def explicit(cls, indices, K=None):
        indices = tuple(int(i) for i in indices)
        return cls(ScheduleKind.EXPLICIT, K or max(indices), indices=indices)

    def generate(self, steps: int) -> np.ndarray:
        if steps < 0:
            raise InputError("steps must be nonnegative")
        if self.kind is ScheduleKind.CYCLIC:
            return np.arange(steps, dtype=np.int64) % self.K + 1
        if self.kind is ScheduleKind.SEEDED_RANDOM:
            rng = np.random.Generator(np.random.Philox(self.seed))
            return rng.integers(1, self.K + 1, size=steps, dtype=np.int64)
        if steps > len(self.indices):
            raise InputError(f"explicit schedule has {len(self.indices)} indices, need {steps}")
        return np.asarray(self.indices[:steps], dtype=np.int64)

    def to_dict(self):
        d = {"kind": self.kind.value, "K": self.K}
        if self.kind is ScheduleKind.SEEDED_RANDOM:
            d["seed"] = self.seed
        if self.kind is ScheduleKind.EXPLICIT:
            d["indices"] = list(self.indices)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(ScheduleKind(d["kind"]), int(d["K"]), int(d.get("seed", 0)),
                   tuple(d.get("indices", ())))


def schedule_is_valid(indices: Sequence[int], K: int, window: int | None = None) -> bool:
    """Every index of 1..K occurs in every sliding window of length ``window``
    (default 10*K).  Sequences shorter than the window are checked as a whole."""
    w = 10 * K if window is None else int(window)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return False
    w = min(w, idx.size)
    for k in range(1, K + 1):
        hits = np.concatenate([[0], np.cumsum(idx == k)])
        if np.any(hits[w:] - hits[:-w] == 0):
            return False
    return True


@dataclass(frozen=True)
class Trajectory:
    """Immutable iterate record.  ``points`` is None when the run was made
    with ``keep_points=False``; the last iterate is always kept in ``final``."""

    norms: np.ndarray
    schedule_used: np.ndarray
    per_step_drop: np.ndarray
    K: int
    points: np.ndarray | None = field(default=None, repr=False)
    final: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("norms", "schedule_used", "per_step_drop", "points", "final"):
            val = getattr(self, name)
            if val is not None:
                val = np.asarray(val)
                val.setflags(write=False)
                object.__setattr__(self, name, val)

    @property
    def steps(self) -> int:
        return len(self.schedule_used)

    def point(self, m: int) -> np.ndarray:
        if self.points is None:
            raise InputError("trajectory was recorded without points")
        if not 0 <= m <= self.steps:
            raise InputError(f"step {m} outside 0..{self.steps}")
        return self.points[m]


def _projector_fns(subspaces):
    fns = []
    for s in subspaces:
        b = np.ascontiguousarray(s.basis)
        if 2 * s.dim >= s.ambient_dim:
            p = b @ b.T
            fns.append(lambda x, p=p: p @ x)
        else:
            fns.append(lambda x, b=b: b @ (b.T @ x))
    return fns


def run_trajectory(subspaces: Sequence[Subspace], schedule: Schedule, z0, steps: int,
                   keep_points: bool = True, stop_below: float | None = None) -> Trajectory:
    """Iterate the projections along ``schedule``.

    ``stop_below`` ends the run early once the norm drops below the given
    value; the recorded arrays then cover only the steps actually taken.
    """
    if not subspaces:
        raise InputError("empty subspace list")
    if steps < 1:
        raise InputError("steps must be >= 1")
    z = np.asarray(z0, dtype=float).copy()
    dims = {s.ambient_dim for s in subspaces}
    if len(dims) != 1 or z.shape != (dims.pop(),):
        raise InputError("ambient dimension mismatch")
    if schedule.K != len(subspaces):
        raise InputError(f"schedule K={schedule.K} but {len(subspaces)} subspaces")
    idx = schedule.generate(steps)
    fns = _projector_fns(subspaces)

    norms = np.empty(steps + 1)
    drops = np.empty(steps)
    pts = np.empty((steps + 1, z.size)) if keep_points else None
    norms[0] = np.linalg.norm(z)
    if keep_points:
        pts[0] = z
    n_done = steps
    for n in range(steps):
        z = fns[idx[n] - 1](z)
        norms[n + 1] = np.linalg.norm(z)
        drops[n] = norms[n] ** 2 - norms[n + 1] ** 2
        if keep_points:
            pts[n + 1] = z
        if stop_below is not None and norms[n + 1] < stop_below:
            n_done = n + 1
            break
    return Trajectory(
        norms=norms[:n_done + 1],
        schedule_used=idx[:n_done],
        per_step_drop=drops[:n_done],
        K=schedule.K,
        points=pts[:n_done + 1] if keep_points else None,
        final=z,
    )


def active_set(traj: Trajectory, subspaces: Sequence[Subspace], m: int, delta: float) -> set:
    """{k : dist(z_m, L_k) < delta}, indices 1-based."""
    if delta <= 0:
        raise InputError("delta must be positive")
    z = traj.point(m)
    return {k + 1 for k, s in enumerate(subspaces) if dist(z, s) < delta}


def oscillation(traj: Trajectory, N: int, chunk: int = 2048) -> float:
    """max |z_n - z_m| over N <= m <= n <= steps."""
    if not 0 <= N < traj.steps:
        raise InputError(f"N={N} must lie in 0..{traj.steps - 1}")
    if traj.points is None:
        raise InputError("trajectory was recorded without points")
    pts = traj.points[N:]
    sq = np.einsum("ij,ij->i", pts, pts)
    best = 0.0
    for a in range(0, len(pts), chunk):
        blk = pts[a:a + chunk]
        d2 = sq[a:a + chunk, None] + sq[None, a:] - 2.0 * blk @ pts[a:].T
        best = max(best, float(d2.max()))
    return float(np.sqrt(max(best, 0.0)))


def fit_rate(traj: Trajectory, window: range | tuple | None = None) -> float:
    """Per-cycle rate from a least-squares fit of log|z_{cK}| against c.

    ``window`` selects cycle indices (a range or (start, stop) pair); the
    default is the last half of the completed cycles.  The result is
    clamped to [0, 1].
    """
    K = traj.K
    cycles = traj.steps // K
    if cycles < 1:
        raise InputError("trajectory shorter than one cycle")
    if window is None:
        window = range(cycles // 2, cycles + 1)
    elif isinstance(window, tuple):
        window = range(*window)
    cs = np.array([c for c in window if 0 <= c <= cycles])
    if cs.size < 2:
        raise InputError("rate window needs at least two cycle points")
    vals = traj.norms[cs * K]
    if np.any(vals <= NORM_FLOOR):
        raise ZeroNormError("norm underflow inside the rate window",
                            {"first_zero_cycle": int(cs[np.argmax(vals <= NORM_FLOOR)])})
    slope = np.polyfit(cs.astype(float), np.log(vals), 1)[0]
    return float(min(1.0, max(0.0, np.exp(slope))))


def check_two_space_drop(traj: Trajectory, subspaces, m: int, n: int, tol: float = 1e-9) -> bool:
    """|z_n - z_m|^2 <= |z_m|^2 - |z_n|^2 on a segment driven by at most two subspaces.

    The inequality needs z_m itself to lie in one of the two subspaces (it is
    false for an arbitrary starting point), so besides the indices used in
    (m, n] the start z_m must either have been produced by one of them or sit
    in one of them within ``tol``.
    """
    if not 0 <= m <= n <= traj.steps:
        raise InputError("need 0 <= m <= n <= steps")
    used = set(int(k) for k in traj.schedule_used[m:n])
    if len(used) > 2:
        raise PreconditionViolated("segment uses more than two subspaces",
                                   {"indices": sorted(used)})
    zm, zn = traj.point(m), traj.point(n)
    if len(used) == 2:
        produced_by = int(traj.schedule_used[m - 1]) if m >= 1 else None
        if produced_by not in used and not any(
                dist(zm, subspaces[k - 1]) <= tol * max(1.0, float(np.linalg.norm(zm))) for k in used):
            raise PreconditionViolated("segment start does not lie in either subspace",
                                       {"indices": sorted(used), "m": m})
    lhs = float(np.sum((zn - zm) ** 2))
    return lhs <= traj.norms[m] ** 2 - traj.norms[n] ** 2 + tol


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "index", "norm", "drop"])
    for n in range(traj.steps):
        w.writerow([n + 1, int(traj.schedule_used[n]), repr(float(traj.norms[n + 1])),
                    repr(float(traj.per_step_drop[n]))])
    return buf.getvalue()


def write_trajectory_csv(path, traj: Trajectory) -> None:
    Path(path).write_text(trajectory_csv(traj))
