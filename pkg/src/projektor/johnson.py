"""Johnson graph J(K,4), covering/connectivity checks, walks and X/Y/Z symbol sequences.

Four-sets are sorted tuples of distinct integers in 1..K.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .errors import InputError, PreconditionViolated


class FourTupleLabel(str, Enum):
    INF_INTERSECTION = "INF"
    NONCLOSED_SUM = "NONCLOSED"
    REGULAR = "REGULAR"


def fourset(members: Iterable[int], K: int | None = None, size: int = 4) -> tuple:
    t = tuple(sorted(int(m) for m in members))
    if len(t) != size or len(set(t)) != size:
        raise InputError(f"need {size} distinct members, got {t}")
    if t[0] < 1 or (K is not None and t[-1] > K):
        raise InputError(f"members of {t} outside 1..{K}")
    return t


@dataclass(frozen=True)
class JohnsonGraph:
    K: int
    vertices: tuple
    edges: tuple          # pairs of vertices, lexicographic
    size: int = 4
    meet: int = 3

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return g

    def degrees(self) -> dict:
        deg = {v: 0 for v in self.vertices}
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg


def _adjacent(a, b, meet):
    return len(set(a) & set(b)) == meet


def induced_graph(V: Sequence[tuple], meet: int = 3) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(V)
    for a, b in combinations(V, 2):
        if _adjacent(a, b, meet):
            g.add_edge(a, b)
    return g


def build_johnson(K: int, size: int = 4, meet: int | None = None) -> JohnsonGraph:
    """J(K, size): vertices are the size-subsets of [K], adjacent when they share ``meet``
    elements (default size - 1)."""
    if K < size:
        raise InputError(f"K must be >= {size}")
    meet = size - 1 if meet is None else meet
    verts = tuple(combinations(range(1, K + 1), size))
    edges = tuple((a, b) for a, b in combinations(verts, 2) if _adjacent(a, b, meet))
    return JohnsonGraph(K, verts, edges, size, meet)


def is_connected_cover(V: Sequence[Iterable[int]], K: int) -> tuple[bool, bool]:
    V = [tuple(sorted(v)) for v in V]
    if not V:
        raise InputError("empty vertex set")
    cover = set().union(*map(set, V)) == set(range(1, K + 1))
    return cover, nx.is_connected(induced_graph(V))


def condition_d(labels: Mapping[tuple, FourTupleLabel], K: int | None = None):
    """(holds, certificate): the first connected component (in lexicographic order of
    its sorted vertex list) of the non-REGULAR four-sets that covers [K]."""
    if K is None:
        K = max(max(a) for a in labels)
    bad = sorted(a for a, lab in labels.items() if FourTupleLabel(lab) is not FourTupleLabel.REGULAR)
    if not bad:
        return False, None
    comps = sorted(sorted(c) for c in nx.connected_components(induced_graph(bad)))
    full = set(range(1, K + 1))
    for comp in comps:
        if set().union(*map(set, comp)) == full:
            return True, comp
    return False, None


def _closed_tour(g: nx.Graph, root, rng) -> list:
    """Depth-first closed walk visiting every vertex, returning to ``root``."""
    tour = [root]
    seen = {root}

    def visit(v):
        nbrs = sorted(g.neighbors(v))
        rng.shuffle(nbrs)
        for w in nbrs:
            if w not in seen:
                seen.add(w)
                tour.append(w)
                visit(w)
                tour.append(v)

    visit(root)
    return tour


def _check_walk_preconditions(V, K):
    V = [fourset(v, K) for v in V]
    if not V:
        raise PreconditionViolated("empty vertex set")
    cover, connected = is_connected_cover(V, K)
    if not cover:
        raise PreconditionViolated("V does not cover [K]", {"K": K})
    if not connected:
        raise PreconditionViolated("induced graph is disconnected")
    return sorted(V)


def generate_walk(V: Sequence[Iterable[int]], n: int, seed: int = 0, K: int | None = None) -> list:
    """Length-n walk made by repeating a seeded closed spanning tour of G(V).

    Every window of 4|V| consecutive vertices contains the whole tour and so
    covers [K].  A single vertex gives the constant walk.
    """
    if n < 1:
        raise InputError("walk length must be >= 1")
    V = [tuple(sorted(v)) for v in V]
    K = K if K is not None else max(max(v) for v in V)
    V = _check_walk_preconditions(V, K)
    if len(V) == 1:
        return [V[0]] * n
    rng = np.random.Generator(np.random.Philox(seed))
    g = induced_graph(V)
    root = V[int(rng.integers(len(V)))]
    cycle = _closed_tour(g, root, rng)[:-1]
    return [cycle[i % len(cycle)] for i in range(n)]


def random_walk(V: Sequence[Iterable[int]], n: int, seed: int = 0, K: int | None = None) -> list:
    """Simple random walk on G(V) (uniform neighbour at each step)."""
    V = [tuple(sorted(v)) for v in V]
    K = K if K is not None else max(max(v) for v in V)
    V = _check_walk_preconditions(V, K)
    if len(V) == 1:
        return [V[0]] * n
    g = induced_graph(V)
    nbrs = {v: sorted(g.neighbors(v)) for v in V}
    rng = np.random.Generator(np.random.Philox(seed))
    walk = [V[int(rng.integers(len(V)))]]
    for _ in range(n - 1):
        opts = nbrs[walk[-1]]
        walk.append(opts[int(rng.integers(len(opts)))])
    return walk


def walk_covers_windows(walk: Sequence[tuple], K: int, window: int) -> bool:
    full = set(range(1, K + 1))
    w = min(window, len(walk))
    return all(set().union(*walk[i:i + w]) == full for i in range(len(walk) - w + 1))


@dataclass(frozen=True)
class SymbolSequences:
    walk: tuple
    K: int
    seqs: dict             # k -> tuple of "X" | "Y" | "Z" | "0", one entry per step

    def column(self, i: int) -> dict:
        return {k: s[i] for k, s in self.seqs.items()}

    def indicator(self, k: int) -> list:
        return [int(c != "0") for c in self.seqs[k]]


def symbol_sequences(walk: Sequence[Iterable[int]], K: int | None = None) -> SymbolSequences:
    """Assign X, Y, Z to the three shared members E_i = A_i & A_{i+1} of each step.

    Step 1 labels E_1 in increasing order.  When E_i = {a,b,d} replaces
    E_{i-1} = {a,b,c}, d inherits the symbol of c and a, b keep theirs.
    """
    walk = tuple(tuple(sorted(a)) for a in walk)
    if len(walk) < 2:
        raise InputError("walk needs at least two vertices")
    K = K if K is not None else max(max(a) for a in walk)
    for a in walk:
        fourset(a, K)
    E = []
    for a, b in zip(walk, walk[1:]):
        e = set(a) & set(b)
        if len(e) != 3:
            raise InputError(f"consecutive vertices {a}, {b} do not share exactly 3 members")
        E.append(e)
    current = dict(zip(sorted(E[0]), "XYZ"))
    cols = [dict(current)]
    for prev, e in zip(E, E[1:]):
        if e != prev:
            (c,) = prev - e
            (d,) = e - prev
            current[d] = current.pop(c)
        cols.append(dict(current))
    seqs = {k: tuple(col.get(k, "0") for col in cols) for k in range(1, K + 1)}
    return SymbolSequences(walk, K, seqs)


def validate_block_structure(seq: Sequence) -> bool:
    """Runs of zeros lying strictly between nonzero entries must have length >= 2."""
    ind = [0 if (x == 0 or x == "0") else 1 for x in seq]
    ones = [i for i, v in enumerate(ind) if v]
    for a, b in zip(ones, ones[1:]):
        if b - a == 2:
            return False
    return True


# -- file formats -------------------------------------------------------------

def labels_csv(labels: Mapping[tuple, FourTupleLabel]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "c", "d", "label"])
    for a in sorted(labels):
        w.writerow([*a, FourTupleLabel(labels[a]).value])
    return buf.getvalue()


def parse_labels_csv(text: str) -> dict:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = {}
    for r in rows:
        try:
            key = fourset((r["a"], r["b"], r["c"], r["d"]))
            out[key] = FourTupleLabel(r["label"])
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad label row {r}") from exc
    return out


def walk_text(walk: Sequence[tuple]) -> str:
    return "".join(",".join(str(x) for x in a) + "\n" for a in walk)


def parse_walk_text(text: str) -> list:
    return [fourset(line.split(",")) for line in text.splitlines() if line.strip()]


def write_labels(path, labels):
    Path(path).write_text(labels_csv(labels))


def write_walk(path, walk):
    Path(path).write_text(walk_text(walk))
