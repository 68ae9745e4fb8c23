"""Words over projection operators, the two-plane ladder, and block chaining.

Words are stored as written: the leftmost letter acts last, so
``Word((2, 1))`` evaluated on (A1, A2) is A2 @ A1.  Over the three global
spaces the alphabet is 1 -> Z, 2 -> X, 3 -> Y.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ChainDegraded, ConstructionFailed, InputError, PreconditionViolated
from .subspace import Subspace, dist, join_all, make_subspace

LETTER_Z, LETTER_X, LETTER_Y = 1, 2, 3

# Any product of projections onto two subspaces obeys |z_n - z_0|^2 <= |z_0|^2 - |z_n|^2.
# For u, v orthonormal this forces r = |z_n - v| to satisfy r^2 - (1 + sqrt 2) r + 1 <= 0.
TWO_LETTER_LOSS_FLOOR = ((1 + math.sqrt(2)) - math.sqrt((1 + math.sqrt(2)) ** 2 - 4)) / 2


@dataclass(frozen=True)
class Word:
    letters: tuple
    m: int = 3

    def __post_init__(self):
        letters = tuple(int(x) for x in self.letters)
        if self.m < 1:
            raise InputError("alphabet size must be >= 1")
        if any(not 1 <= x <= self.m for x in letters):
            raise InputError(f"letters must lie in 1..{self.m}")
        object.__setattr__(self, "letters", letters)

    def __len__(self):
        return len(self.letters)

    def counts(self) -> dict:
        """|phi_i| for every letter i of the alphabet."""
        c = {i: 0 for i in range(1, self.m + 1)}
        for x in self.letters:
            c[x] += 1
        return c

    def __add__(self, other: "Word") -> "Word":
        # (w2 + w1) evaluates as w2 after w1
        return Word(self.letters + other.letters, max(self.m, other.m))

    def acting_order(self) -> tuple:
        return self.letters[::-1]

    @classmethod
    def from_acting(cls, seq, m=3) -> "Word":
        return cls(tuple(seq)[::-1], m)

    def relabel(self, mapping: dict) -> "Word":
        return Word(tuple(mapping.get(x, x) for x in self.letters), self.m)

    def __str__(self):
        if self.m <= 9:
            return "".join(map(str, self.letters))
        return ",".join(map(str, self.letters))

    @classmethod
    def parse(cls, text: str, m: int = 3) -> "Word":
        text = text.strip()
        if not text:
            return cls((), m)
        parts = text.split(",") if "," in text else list(text)
        return cls(tuple(int(p) for p in parts), m)


WORD_FILE_HEADER = "# word: rightmost letter acts first"


def dumps_word(w: Word) -> str:
    return f"{WORD_FILE_HEADER}; m={w.m}\n{w}\n"


def loads_word(text: str) -> Word:
    m = 3
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            if "m=" in line:
                m = int(line.split("m=")[1].split()[0])
            continue
        body.append(line.strip())
    return Word.parse("".join(body), m)


def _as_operator(op) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(op, Subspace):
        b = op.basis
        return lambda x: b @ (b.T @ x)
    if callable(op):
        return op
    a = np.asarray(op, dtype=float)
    return lambda x: a @ x


def eval_word(word: Word, operators: Sequence, x) -> np.ndarray:
    """Apply the word to x, rightmost letter first.  The empty word is the identity."""
    if len(operators) != word.m:
        raise InputError(f"word over {word.m} letters, got {len(operators)} operators")
    ops = [_as_operator(o) for o in operators]
    y = np.asarray(x, dtype=float).copy()
    for letter in reversed(word.letters):
        y = ops[letter - 1](y)
    return y


def word_matrix(word: Word, operators: Sequence[np.ndarray], n: int) -> np.ndarray:
    """Dense matrix of the word (for operator-norm checks)."""
    out = np.eye(n)
    for letter in reversed(word.letters):
        out = np.asarray(operators[letter - 1]) @ out
    return out


# -- ladder ---------------------------------------------------------------------

def ladder_residual(M: int) -> float:
    """Closed form 1 - cos^M(pi / 2M), evaluated without cancellation."""
    if M < 1:
        raise InputError("M must be >= 1")
    return float(-math.expm1(M * math.log(math.cos(math.pi / (2 * M))))) if M > 1 else 1.0


def ladder_size(epsilon: float, max_M: int = 10**8) -> int:
    """Smallest M with ladder_residual(M) < epsilon."""
    if not 0 < epsilon:
        raise InputError("epsilon must be positive")
    if epsilon > 1:
        return 1
    # residual ~ pi^2 / (8M); start just below the asymptotic guess and walk up
    M = max(1, int(math.pi ** 2 / (8 * epsilon)) - 2)
    while M > 1 and ladder_residual(M - 1) < epsilon:
        M -= 1
    while ladder_residual(M) >= epsilon:
        M += 1
        if M > max_M:
            raise ConstructionFailed("ladder size exceeds cap", {"epsilon": epsilon, "max_M": max_M})
    return M


def _check_orthonormal_pair(u, v, tol=1e-10):
    if abs(np.linalg.norm(u) - 1) > tol or abs(np.linalg.norm(v) - 1) > tol or abs(u @ v) > tol:
        raise InputError("u, v must be orthonormal")


def ladder_lines(u, v, M: int) -> list:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_orthonormal_pair(u, v)
    if M < 1:
        raise InputError("M must be >= 1")
    step = math.pi / (2 * M)
    return [make_subspace([math.cos(t * step) * u + math.sin(t * step) * v]) for t in range(1, M + 1)]


def ladder_transport(u, v, M: int):
    """Project u successively onto M lines fanning from u to v inside u v v.

    Returns (lines, result, residual) with residual = |result - v| measured
    on the composed product.  The composition runs in extended precision:
    in float64 the rounding of 10^4 projections drifts by about 1e-12.
    """
    lines = ladder_lines(u, v, M)
    u = np.asarray(u, dtype=np.longdouble)
    v = np.asarray(v, dtype=np.longdouble)
    step = np.longdouble(np.pi) / (2 * M)
    x = u.copy()
    for t in range(1, M + 1):
        b = np.cos(t * step) * u + np.sin(t * step) * v
        x = b * (b @ x)
    return lines, x.astype(float), float(np.linalg.norm((x - v).astype(float)))


# -- blocks and chains ------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    E: Subspace
    e_in: np.ndarray = field(repr=False)
    e_out: np.ndarray = field(repr=False)
    X: Subspace
    Y: Subspace
    word: Word
    M: int
    loss: float


def block_word(M: int) -> Word:
    """Alternating X / Y word of length M, X acting first."""
    acting = [LETTER_X if t % 2 else LETTER_Y for t in range(1, M + 1)]
    return Word.from_acting(acting)


def build_block(E: Subspace, e_in, e_out, epsilon: float, M: int | None = None,
                verify: bool = True) -> Block:
    """Ladder block: odd ladder lines and e_in, e_out go to X, even lines to Y.

    The block loss |word(Y, X, Y) e_in - e_out| is measured.  With
    ``verify`` a loss >= epsilon raises CONSTRUCTION_FAILED; otherwise the
    block is returned with its measured loss.
    """
    e_in = np.asarray(e_in, dtype=float)
    e_out = np.asarray(e_out, dtype=float)
    _check_orthonormal_pair(e_in, e_out)
    if dist(e_in, E) > 1e-10 or dist(e_out, E) > 1e-10:
        raise InputError("e_in and e_out must lie in E")
    if M is None:
        M = ladder_size(epsilon)
    diag = {"epsilon": epsilon, "M": M, "dim_E": E.dim,
            "ladder_residual": ladder_residual(M),
            "two_letter_loss_floor": TWO_LETTER_LOSS_FLOOR}
    if E.dim < M + 2:
        raise ConstructionFailed("block subspace too small for the ladder", diag)
    lines = ladder_lines(e_in, e_out, M)
    X = make_subspace([e_in, e_out] + [lines[t].basis[:, 0] for t in range(0, M, 2)])
    even = [lines[t].basis[:, 0] for t in range(1, M, 2)]
    Y = make_subspace(even) if even else Subspace.zero(E.ambient_dim)
    word = block_word(M)
    out = eval_word(word, [Y, X, Y], e_in)
    loss = float(np.linalg.norm(out - e_out))
    diag.update(loss=loss, dim_X=X.dim, dim_Y=Y.dim)
    if verify and not loss < epsilon:
        raise ConstructionFailed(
            f"block loss {loss:.6g} is not below epsilon {epsilon:.6g}", diag)
    return Block(E, e_in, e_out, X, Y, word, M, loss)


def chain_layout(block_dims: Sequence[int]):
    """Coordinates for a chain of blocks.

    Block i occupies a contiguous run [p_i, p_i + dim_i) whose first
    coordinate is e_i and whose last is e_{i+1}; consecutive runs share that
    coordinate and runs two apart are disjoint.  Returns (N, E list, e list).
    """
    if any(d < 2 for d in block_dims):
        raise InputError("every block needs dimension >= 2")
    N = 1 + sum(d - 1 for d in block_dims)
    eye = np.eye(N)
    starts = np.concatenate([[0], np.cumsum([d - 1 for d in block_dims])]).astype(int)
    es = [eye[p] for p in starts]
    Es = [Subspace(eye[:, p:p + d]) for p, d in zip(starts, block_dims)]
    return N, Es, es


@dataclass(frozen=True)
class TransportPlan:
    blocks: tuple
    X: Subspace
    Y: Subspace
    Z: Subspace
    word: Word
    epsilons: tuple
    total_loss: float
    global_block_losses: tuple
    prefix_points: np.ndarray = field(repr=False)
    telescoping_ok: bool = True
    reference_ladder_loss: float | None = None

    @property
    def ambient_dim(self) -> int:
        return self.X.ambient_dim

    @property
    def e_vectors(self) -> list:
        return [self.blocks[0].e_in] + [b.e_out for b in self.blocks]

    def operators(self):
        return [self.Z, self.X, self.Y]

    def min_prefix_separation(self) -> float:
        p = self.prefix_points
        best = math.inf
        for i in range(len(p)):
            for j in range(i + 1, len(p)):
                best = min(best, float(np.linalg.norm(p[i] - p[j])))
        return best

    def to_json(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "epsilons": list(self.epsilons),
            "blocks": [{"dim_E": b.E.dim, "M": b.M, "dim_X": b.X.dim, "dim_Y": b.Y.dim,
                        "word": str(b.word), "loss": b.loss,
                        "loss_in_global_spaces": g}
                       for b, g in zip(self.blocks, self.global_block_losses)],
            "word_length": len(self.word),
            "word_counts": {str(k): v for k, v in self.word.counts().items()},
            "total_loss": self.total_loss,
            "loss_budget": 2 * sum(self.epsilons),
            "telescoping_ok": self.telescoping_ok,
            "min_prefix_separation": self.min_prefix_separation(),
            "reference_ladder_loss": self.reference_ladder_loss,
            "letters": "1=Z,2=X,3=Y; rightmost letter acts first",
        }

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=1))


def chain_blocks(blocks: Sequence[Block], epsilons: Sequence[float], strict: bool = True) -> TransportPlan:
    """Assemble X = join of X_i, Y = join of odd Y_i, Z = join of even Y_i.

    The composite word runs block 1 first; even blocks use the Z letter in
    place of Y.  The loss is measured in the global spaces.  With ``strict``
    a total loss above 2 * sum(epsilons) raises CHAIN_DEGRADED carrying the plan.
    """
    if not blocks:
        raise InputError("no blocks")
    if len(epsilons) != len(blocks):
        raise InputError("one epsilon per block")
    n = blocks[0].E.ambient_dim
    for a, b in zip(blocks, blocks[1:]):
        if np.linalg.norm(a.e_out - b.e_in) > 1e-12:
            raise InputError("consecutive blocks must share their boundary vector")
    for i in range(len(blocks)):
        for j in range(i + 2, len(blocks)):
            if np.linalg.norm(blocks[i].E.basis.T @ blocks[j].E.basis) > 1e-10:
                raise InputError(f"blocks {i + 1} and {j + 1} are not orthogonal")
    X = join_all([b.X for b in blocks])
    odd = [b.Y for k, b in enumerate(blocks, 1) if k % 2 == 1]
    even = [b.Y for k, b in enumerate(blocks, 1) if k % 2 == 0]
    Y = join_all(odd) if odd else Subspace.zero(n)
    # Z also holds e_1, mirroring the convention Y_0 = span{e_1}
    Z = join_all(even + [make_subspace([blocks[0].e_in])])
    ops = [Z, X, Y]
    words = []
    for k, b in enumerate(blocks, 1):
        words.append(b.word.relabel({LETTER_Y: LETTER_Z}) if k % 2 == 0 else b.word)
    composite = Word(())
    x = blocks[0].e_in.copy()
    prefix = [x.copy()]
    global_losses = []
    for b, w in zip(blocks, words):
        composite = w + composite
        global_losses.append(float(np.linalg.norm(eval_word(w, ops, b.e_in) - b.e_out)))
        x = eval_word(w, ops, x)
        prefix.append(x.copy())
    total = float(np.linalg.norm(x - blocks[-1].e_out))
    ref = sum(ladder_residual(b.M) for b in blocks)
    plan = TransportPlan(tuple(blocks), X, Y, Z, composite, tuple(float(e) for e in epsilons),
                         total, tuple(global_losses), np.array(prefix),
                         total <= sum(global_losses) + 1e-12, ref)
    budget = 2 * sum(epsilons)
    if strict and total > budget:
        raise ChainDegraded(
            f"total loss {total:.6g} exceeds 2*sum(eps) = {budget:.6g}",
            {"total_loss": total, "budget": budget, "block_losses": [b.loss for b in blocks],
             "global_block_losses": global_losses},
            plan=plan)
    return plan


def default_epsilons(n_blocks: int) -> list:
    return [2.0 ** (-i - 2) for i in range(1, n_blocks + 1)]


def build_chain(epsilons: Sequence[float], block_dims: Sequence[int] | None = None,
                verify: bool = True, strict: bool = True) -> TransportPlan:
    """Lay out blocks (dim E_i = M_i + 2 unless given), build each, and chain them."""
    Ms = [ladder_size(e) for e in epsilons]
    dims = list(block_dims) if block_dims is not None else [M + 2 for M in Ms]
    N, Es, es = chain_layout(dims)
    blocks = [build_block(E, es[i], es[i + 1], eps, M, verify=verify)
              for i, (E, eps, M) in enumerate(zip(Es, epsilons, Ms))]
    return chain_blocks(blocks, epsilons, strict=strict)


# -- reference chain ----------------------------------------------------------------

def reference_ladder_chain(epsilons: Sequence[float]):
    """Oracle: compose every ladder line as its own projection, block after block.

    Uses as many subspaces as there are ladder lines, so it is not a
    three-space construction; it shows what the ladder alone achieves.
    Returns (final vector, e_{n+1}, loss).
    """
    Ms = [ladder_size(e) for e in epsilons]
    n = len(Ms) + 1
    eye = np.eye(n)
    x = eye[0].copy()
    for i, M in enumerate(Ms):
        for line in ladder_lines(eye[i], eye[i + 1], M):
            b = line.basis[:, 0]
            x = b * (b @ x)
    return x, eye[-1], float(np.linalg.norm(x - eye[-1]))


# -- word search ---------------------------------------------------------------------

def search_word(X: Subspace, Y: Subspace, Z: Subspace, u, v, max_len: int = 4096,
                beam: int = 64, target: float = 1e-2):
    """Beam search over words in Z, X, Y (letters 1, 2, 3) maximising <w u, v>.

    Returns the first word whose residual |w u - v| is below ``target``, or
    None after ``max_len`` letters.  Candidates are ranked by score, ties by
    lexicographic order of the written word; immediate letter repeats are
    skipped since projections are idempotent.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if max_len < 1:
        raise InputError("max_len must be >= 1")
    if np.linalg.norm(u - v) < target:
        return Word(())
    mats = [s.projector() for s in (Z, X, Y)]
    states = [((), u)]
    for _ in range(max_len):
        cands = []
        for letters, x in states:
            last = letters[0] if letters else None
            for a in (1, 2, 3):
                if a == last:
                    continue
                cands.append(((a,) + letters, mats[a - 1] @ x))
        cands.sort(key=lambda c: (-round(float(c[1] @ v), 14), c[0]))
        hits = [c for c in cands if np.linalg.norm(c[1] - v) < target]
        if hits:
            return Word(hits[0][0])
        states = cands[:beam]
    return None


# -- word continuity -------------------------------------------------------------------

def wordcont_check(psi: Word, A_ops: Sequence[np.ndarray], B_ops: Sequence[np.ndarray],
                   E: Subspace, tol: float = 1e-9):
    """Compare ||psi(A)|_E - psi(B)|_E|| with sum_i |psi_i| ||A_i|_E - B_i|_E||."""
    if len(A_ops) != psi.m or len(B_ops) != psi.m:
        raise InputError("operator count must match the alphabet")
    n = E.ambient_dim
    P = E.projector()
    for name, ops in (("A", A_ops), ("B", B_ops)):
        for i, op in enumerate(ops, 1):
            if np.linalg.norm(op, 2) > 1 + 1e-12:
                raise PreconditionViolated(f"{name}_{i} is not a contraction")
    for i, op in enumerate(A_ops, 1):
        if np.max(np.abs(op @ P - P @ op)) > 1e-10:
            raise PreconditionViolated(f"A_{i} does not commute with P(E)")
    Q = E.basis
    lhs = float(np.linalg.norm((word_matrix(psi, A_ops, n) - word_matrix(psi, B_ops, n)) @ Q, 2)) \
        if E.dim else 0.0
    counts = psi.counts()
    rhs = float(sum(counts[i] * np.linalg.norm((A_ops[i - 1] - B_ops[i - 1]) @ Q, 2)
                    for i in counts if counts[i])) if E.dim else 0.0
    return lhs, rhs, lhs <= rhs + tol


def random_wordcont_instance(rng: np.random.Generator, n: int = 12, m: int = 3, max_len: int = 20):
    """A_i project onto E + R_i or onto R_i (R_i inside E^perp), so they commute with P(E);
    B_i are random contractions.  Returns (psi, A_ops, B_ops, E)."""
    dE = int(rng.integers(1, n // 2))
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    E = Subspace(q[:, :dE])
    rest = q[:, dE:]
    A, B = [], []
    for _ in range(m):
        r = int(rng.integers(0, rest.shape[1] + 1))
        cols = rest[:, rng.permutation(rest.shape[1])[:r]]
        if rng.random() < 0.5:
            cols = np.hstack([E.basis, cols])
        A.append(cols @ cols.T)
        g = rng.standard_normal((n, n))
        B.append(g / np.linalg.norm(g, 2) * rng.uniform(0.2, 1.0))
    length = int(rng.integers(1, max_len + 1))
    psi = Word(tuple(int(x) for x in rng.integers(1, m + 1, size=length)), m)
    return psi, A, B, E
