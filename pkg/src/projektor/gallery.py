"""Truncated constructors for the named subspace configurations, and the
four-tuple classifier that feeds the Johnson-graph condition.

Block layouts (0-based coordinates):

* BK, block j = 1..J uses 3(j-1) + {0, 1, 2} for the directions
  labelled e_{3j}, e_{3j+1}, e_{3j+2}.
* SLOWNONO and NOT3, block j uses 2(j-1) + {0, 1} for e_{2j-1}, e_{2j}.
* JOHNBIO, blocks follow sorted V; inside block A the offset 5(n-1) + f holds
  e^A_n for f = 0 and e^A_{i,n} for f = 1..4 with i running over sorted A.
* EXAMPLE5, the transport chain layout (see ``transport.chain_layout``).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ._parallel import pmap
from .errors import InputError
from .johnson import FourTupleLabel, fourset
from .regularity import witness_gap_only
from .subspace import Subspace, make_subspace
from .transport import TransportPlan, build_chain, default_epsilons


class Family(str, Enum):
    BK = "BK"
    SLOWNONO = "SLOWNONO"
    EXAMPLE5 = "EXAMPLE5"
    NOT3 = "NOT3"
    JOHNBIO = "JOHNBIO"


def _span_of_columns(n: int, cols: list) -> Subspace:
    if not cols:
        return Subspace.zero(n)
    return make_subspace(np.column_stack(cols))


def _vec(n, entries):
    x = np.zeros(n)
    for i, val in entries:
        x[i] = val
    return x


def build_bk(J: int) -> list:
    """Three subspaces of R^{3J}; the first two meet at angle atan(1/j) in block j,
    the third is orthogonal to both."""
    if J < 1:
        raise InputError("J must be >= 1")
    n = 3 * J
    L1, L2, L3 = [], [], []
    for j in range(1, J + 1):
        b = 3 * (j - 1)
        L1.append(_vec(n, [(b + 1, 1.0)]))
        L2.append(_vec(n, [(b + 1, 1.0), (b + 2, 1.0 / j)]))
        L3.append(_vec(n, [(b, 1.0)]))
    return [_span_of_columns(n, c) for c in (L1, L2, L3)]


def build_slownono(J: int) -> list:
    """Three lines per 2-plane block j with slopes 0, 1/j, 2/j."""
    if J < 1:
        raise InputError("J must be >= 1")
    n = 2 * J
    cols = [[], [], []]
    for j in range(1, J + 1):
        b = 2 * (j - 1)
        cols[0].append(_vec(n, [(b, 1.0)]))
        cols[1].append(_vec(n, [(b, 1.0), (b + 1, 1.0 / j)]))
        cols[2].append(_vec(n, [(b, 1.0), (b + 1, 2.0 / j)]))
    return [_span_of_columns(n, c) for c in cols]


def build_not3(K: int, J: int) -> list:
    """Slopes 0 and 1/j for the first two subspaces; slope 2/j split by residue,
    j = i mod (K-2) going to subspace i for i = 3..K."""
    if K < 4:
        raise InputError("K must be >= 4")
    if J < K - 2:
        raise InputError("need J >= K - 2")
    n = 2 * J
    cols = {k: [] for k in range(1, K + 1)}
    for j in range(1, J + 1):
        b = 2 * (j - 1)
        cols[1].append(_vec(n, [(b, 1.0)]))
        cols[2].append(_vec(n, [(b, 1.0), (b + 1, 1.0 / j)]))
        for i in range(3, K + 1):
            if j % (K - 2) == i % (K - 2):
                cols[i].append(_vec(n, [(b, 1.0), (b + 1, 2.0 / j)]))
    return [_span_of_columns(n, cols[k]) for k in range(1, K + 1)]


def _normalise_V(V, K):
    V = sorted({fourset(a, K) for a in V})
    if not V:
        raise InputError("V is empty")
    if set().union(*map(set, V)) != set(range(1, K + 1)):
        raise InputError("V does not cover [K]")
    return V


def johnbio_layout(V, n_max: int) -> dict:
    """(A, n, f) -> coordinate; f = 0 for e^A_n, f = i for e^A_{i,n}."""
    V = sorted(tuple(sorted(a)) for a in V)
    out = {}
    for bi, A in enumerate(V):
        base = bi * 5 * n_max
        for n in range(1, n_max + 1):
            off = base + 5 * (n - 1)
            out[(A, n, 0)] = off
            for f, i in enumerate(A, 1):
                out[(A, n, i)] = off + f
    return out


def build_johnbio(K: int, V, alpha: Mapping | int, n_max: int) -> list:
    """L_k spanned by e^A_n + alpha(A) e^A_{k,n} / n over n <= n_max and the A in V containing k.

    ``alpha`` is a mapping from four-sets to {0, 1}, or a constant 0 / 1.
    """
    if K < 4:
        raise InputError("K must be >= 4")
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    V = _normalise_V(V, K)
    if isinstance(alpha, Mapping):
        amap = {fourset(a): int(v) for a, v in alpha.items()}
    else:
        amap = {A: int(alpha) for A in V}
    if any(A not in amap for A in V) or any(v not in (0, 1) for v in amap.values()):
        raise InputError("alpha must map every A in V to 0 or 1")
    n = len(V) * 5 * n_max
    pos = johnbio_layout(V, n_max)
    cols = {k: [] for k in range(1, K + 1)}
    for A in V:
        for nn in range(1, n_max + 1):
            for k in A:
                entries = [(pos[(A, nn, 0)], 1.0)]
                if amap[A]:
                    entries.append((pos[(A, nn, k)], 1.0 / nn))
                cols[k].append(_vec(n, entries))
    return [_span_of_columns(n, cols[k]) for k in range(1, K + 1)]


@dataclass(frozen=True)
class Example5:
    subspaces: tuple
    e_vectors: tuple
    plan: TransportPlan
    K: int

    def residue_subspace(self, i: int) -> int:
        """Index k in 4..K of the subspace holding e_i (1-based i)."""
        r = (self.K - 3)
        for k in range(4, self.K + 1):
            if (i - k) % r == 0:
                return k
        raise AssertionError


def build_example5(K: int, epsilons: Sequence[float] | None = None, block_dims: Sequence[int] | None = None,
                   n_blocks: int = 6, strict: bool = True) -> Example5:
    """L_1, L_2, L_3 = X, Y, Z of a transport chain; L_k for k >= 4 spans the
    chain vectors e_i with i = k mod (K-3).

    With ``strict`` a failed block or degraded chain raises; otherwise the
    configuration is returned with the measured losses in ``plan``.
    """
    if K < 5:
        raise InputError("K must be >= 5")
    eps = list(epsilons) if epsilons is not None else default_epsilons(n_blocks)
    plan = build_chain(eps, block_dims, verify=strict, strict=strict)
    es = plan.e_vectors
    n = plan.ambient_dim
    r = K - 3
    groups = {k: [] for k in range(4, K + 1)}
    for i, e in enumerate(es, 1):
        for k in range(4, K + 1):
            if (i - k) % r == 0:
                groups[k].append(e)
    subs = [plan.X, plan.Y, plan.Z] + [_span_of_columns(n, groups[k]) for k in range(4, K + 1)]
    return Example5(tuple(subs), tuple(es), plan, K)


def example5_composite(ex: Example5):
    """Apply A_i = Psi_i(Z, X, Y) P(L_k), k the residue subspace of e_i, for i = 1..n.

    Returns the list of points A_i ... A_1 e_1 (starting with e_1) and the loss
    |A_n ... A_1 e_1 - e_{n+1}|.
    """
    from .transport import LETTER_Y, LETTER_Z, eval_word
    plan = ex.plan
    ops = plan.operators()
    x = ex.e_vectors[0].copy()
    pts = [x.copy()]
    for i, b in enumerate(plan.blocks, 1):
        k = ex.residue_subspace(i)
        s = ex.subspaces[k - 1]
        x = s.basis @ (s.basis.T @ x)
        w = b.word.relabel({LETTER_Y: LETTER_Z}) if i % 2 == 0 else b.word
        x = eval_word(w, ops, x)
        pts.append(x.copy())
    return pts, float(np.linalg.norm(x - ex.e_vectors[-1]))


# -- configs ------------------------------------------------------------------

@dataclass
class GalleryConfig:
    family: str
    K: int = 3
    J: int = 10
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.family = Family(self.family).value
        if self.family == Family.JOHNBIO.value:
            V = self.extra.get("V")
            if not V:
                raise InputError("JOHNBIO needs extra.V")
            _normalise_V(V, self.K)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "GalleryConfig":
        return cls(d["family"], int(d.get("K", 3)), int(d.get("J", 10)), dict(d.get("extra", {})))

    @classmethod
    def from_json(cls, text: str) -> "GalleryConfig":
        return cls.from_dict(json.loads(text))

    def builder(self) -> Callable[[int], list]:
        return family_builder(self.family, K=self.K, **self.extra)

    def build(self, J: int | None = None) -> list:
        return self.builder()(self.J if J is None else J)

    def layout(self) -> str:
        return {
            "BK": "block j -> coords 3(j-1)+{0,1,2}",
            "SLOWNONO": "block j -> coords 2(j-1)+{0,1}",
            "NOT3": "block j -> coords 2(j-1)+{0,1}",
            "JOHNBIO": "blocks by sorted V; offset 5(n-1)+f, f=0 base, f=1..4 sorted members",
            "EXAMPLE5": "chain of contiguous blocks sharing boundary coordinates",
        }[self.family]


def family_builder(family, K: int = 3, **extra) -> Callable[[int], list]:
    """Callable mapping a truncation level to the family's subspaces.

    The truncation level is J for BK, SLOWNONO and NOT3, and n_max for JOHNBIO.
    """
    fam = Family(family)
    if fam is Family.BK:
        return build_bk
    if fam is Family.SLOWNONO:
        return build_slownono
    if fam is Family.NOT3:
        return lambda t: build_not3(K, t)
    if fam is Family.JOHNBIO:
        V = [tuple(a) for a in extra["V"]]
        alpha = extra.get("alpha", 1)
        if isinstance(alpha, list):
            alpha = {tuple(a): v for a, v in zip(V, alpha)}
        elif isinstance(alpha, dict):
            alpha = {fourset(k.split(",")) if isinstance(k, str) else k: v for k, v in alpha.items()}
        return lambda t: build_johnbio(K, V, alpha, t)
    if fam is Family.EXAMPLE5:
        n_blocks = int(extra.get("n_blocks", 6))
        eps = extra.get("epsilons")
        strict = bool(extra.get("strict", False))
        return lambda t: list(build_example5(K, eps, None, n_blocks if t is None else t, strict).subspaces)
    raise InputError(f"unknown family {family}")


# -- classification ---------------------------------------------------------------

@dataclass(frozen=True)
class TupleEvidence:
    dims: tuple
    gaps: tuple
    label: FourTupleLabel


def classify_fourtuples(builder: Callable[[int], Sequence[Subspace]] | Sequence[Sequence[Subspace]],
                        truncations: Sequence[int] | None = None, decay: float = 10.0,
                        evidence: bool = False):
    """Label every four-set of [K] from a ladder of truncation levels.

    INF if the intersection dimension strictly grows from the first to the last
    level; otherwise NONCLOSED if the witness gap drops by ``decay`` or more;
    otherwise REGULAR.  ``builder`` is a callable of the truncation level, or
    the list of already-built families (one per level).
    """
    if callable(builder):
        if truncations is None or len(truncations) < 2:
            raise InputError("need at least two truncation levels")
        levels = [list(builder(t)) for t in truncations]
    else:
        levels = [list(s) for s in builder]
        if len(levels) < 2:
            raise InputError("need at least two truncation levels")
    K = len(levels[0])
    if K < 4 or any(len(l) != K for l in levels):
        raise InputError("every level needs the same K >= 4 subspaces")

    def one(A):
        dims, gaps = [], []
        for subs in levels:
            gap, _, ldim = witness_gap_only([subs[i - 1] for i in A])
            dims.append(ldim)
            gaps.append(np.inf if gap is None else gap)
        if dims[-1] > dims[0]:
            lab = FourTupleLabel.INF_INTERSECTION
        elif gaps[0] > 0 and gaps[0] >= decay * gaps[-1]:
            lab = FourTupleLabel.NONCLOSED_SUM
        else:
            lab = FourTupleLabel.REGULAR
        return TupleEvidence(tuple(dims), tuple(float(g) for g in gaps), lab)

    tuples = list(combinations(range(1, K + 1), 4))
    results = pmap(one, tuples)
    labels = {A: r.label for A, r in zip(tuples, results)}
    if evidence:
        return labels, dict(zip(tuples, results))
    return labels


def save_subspaces(directory, subspaces: Sequence[Subspace], config: GalleryConfig | None = None):
    from .subspace import write_subspace
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for k, s in enumerate(subspaces, 1):
        write_subspace(d / f"L{k}.txt", s)
    if config is not None:
        meta = json.loads(config.to_json())
        meta["layout"] = config.layout()
        (d / "config.json").write_text(json.dumps(meta, indent=1, sort_keys=True))
