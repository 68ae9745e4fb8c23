import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import projector
from projektor.appendix import (
    EXHAUSTED, almost_orthogonality_bounds, extract_almost_orthonormal, perturbed_iso_bounds,
    random_almost_orthogonal_pair, random_perturbation_instance,
)
from projektor.errors import InputError, PreconditionViolated
from projektor.subspace import Subspace, span


def test_perturbation_identity():
    F = np.eye(4)[:, :3]
    rep = perturbed_iso_bounds(F, F, [0.01, 0.01, 0.01], 0.2)
    assert rep.norm_T == pytest.approx(1) and rep.norm_Tinv == pytest.approx(1)
    assert rep.max_deviation == 0 and rep.ok


def test_perturbation_preconditions():
    F = np.eye(3)[:, :2]
    with pytest.raises(PreconditionViolated):
        perturbed_iso_bounds(F, F, [0.2, 0.2], 0.2)
    W = F.copy()
    W[2, 0] = 0.1
    with pytest.raises(PreconditionViolated):
        perturbed_iso_bounds(F, W, [0.05, 0.05], 0.2)
    with pytest.raises(InputError):
        perturbed_iso_bounds(F, F, [0.05], 0.2)


@given(st.integers(0, 2**32 - 1))
def test_perturbation_random(seed):
    F, W, a = random_perturbation_instance(np.random.default_rng(seed))
    rep = perturbed_iso_bounds(F, W, a, 0.2)
    assert rep.ok
    # oracle: ||T|| from the Gram matrix of the w_n
    assert rep.norm_T ** 2 == pytest.approx(np.linalg.eigvalsh(W.T @ W).max(), rel=1e-9)


def test_extraction_examples():
    e = np.eye(4)
    V = span(e[0])
    ws = [e[0] + e[1], e[1] + 0.01 * e[0], e[2], e[3] * 3]
    ex = extract_almost_orthonormal(ws, [0.1, 0.1], V)
    assert ex.indices == (1, 2) and not ex.exhausted
    assert np.allclose(ex.vectors[0], e[1])
    short = extract_almost_orthonormal(ws, [0.1, 0.1, 0.1], V)
    assert short.status == EXHAUSTED and short.indices == (1, 2)
    with pytest.raises(InputError):
        extract_almost_orthonormal(ws, [0.1, 0.2], V)


def test_extraction_output_is_orthonormal_and_close():
    rng = np.random.default_rng(1)
    V = Subspace(np.eye(30)[:, :5])
    ws = [np.eye(30)[j] + 0.02 * rng.standard_normal(30) for j in range(5, 30)]
    a = [0.5 * 0.9 ** i for i in range(10)]
    ex = extract_almost_orthonormal(ws, a, V)
    E = np.column_stack(ex.vectors)
    assert np.allclose(E.T @ E, np.eye(E.shape[1]), atol=1e-12)
    assert np.allclose(V.basis.T @ E, 0, atol=1e-12)
    for i, n in enumerate(ex.indices):
        assert np.linalg.norm(ws[n] - ex.vectors[i]) <= a[i]


def test_orthogonality_examples():
    e = np.eye(3)
    b = almost_orthogonality_bounds(span(e[0]), span(e[1]))
    assert b.alpha == 0 and b.norm_sum == pytest.approx(0, abs=1e-15) and b.ok
    with pytest.raises(PreconditionViolated):
        almost_orthogonality_bounds(span(e[0]), span(e[0] + e[1]))


@given(st.integers(0, 2**32 - 1))
def test_orthogonality_random(seed):
    F, G, alpha = random_almost_orthogonal_pair(np.random.default_rng(seed), max_dim=20)
    b = almost_orthogonality_bounds(F, G)
    assert b.alpha == pytest.approx(alpha, abs=1e-12)
    assert b.ok
    # oracle: projectors from raw spanning vectors
    PF, PG = projector(F.basis), projector(G.basis)
    PFG = projector(np.hstack([F.basis, G.basis]))
    assert np.linalg.norm(PF + PG - PFG, 2) == pytest.approx(b.norm_sum, abs=1e-9)
    assert np.linalg.norm(PF @ PG, 2) == pytest.approx(b.norm_prod, abs=1e-9)
