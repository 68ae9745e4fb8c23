import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import proj_lstsq
from projektor.errors import EmptySubspaceError, InputError
from projektor.subspace import (
    Subspace, complement, dist, dumps_subspace, intersect, join, loads_subspace, make_subspace,
    principal_angles, project, read_subspace, span, write_subspace,
)

E = np.eye(4)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def subspace_and_vector(draw):
    n = draw(st.integers(1, 7))
    k = draw(st.integers(1, n))
    A = draw(arrays(float, (n, k), elements=finite))
    x = draw(arrays(float, (n,), elements=finite))
    return make_subspace(A), x


def test_make_subspace_drops_duplicates():
    e = np.eye(3)
    s = make_subspace([e[0], e[0]])
    assert s.dim == 1
    assert np.allclose(np.abs(s.basis[:, 0]), e[0])


def test_make_subspace_normalises():
    s = make_subspace([np.array([1.0, 1.0])])
    assert np.allclose(s.basis[:, 0], [1 / math.sqrt(2)] * 2)


def test_make_subspace_linear_dependence():
    e = np.eye(3)
    assert make_subspace([e[0], e[1], e[0] + e[1]]).dim == 2


def test_make_subspace_rejects_mixed_dims():
    with pytest.raises(InputError):
        make_subspace([np.ones(2), np.ones(3)])


def test_basis_is_orthonormal_on_ill_conditioned_input():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((30, 10))
    A[:, 5] = A[:, 4] + 1e-8 * rng.standard_normal(30)
    s = make_subspace(A)
    assert s.dim == 10
    assert np.allclose(s.basis.T @ s.basis, np.eye(10), atol=1e-10)


def test_project_examples():
    e = np.eye(2)
    assert np.allclose(project(span(e[0]), [3, 4]), [3, 0])
    assert np.allclose(project(span(np.array([1.0, 1.0])), [1, 0]), [0.5, 0.5])
    assert np.allclose(project(Subspace.full(2), [3, 4]), [3, 4])
    assert np.allclose(project(Subspace.zero(2), [3, 4]), [0, 0])


def test_project_dim_mismatch():
    with pytest.raises(InputError):
        project(span(np.eye(3)[0]), np.ones(2))


def test_join_complement_intersect_examples():
    e = np.eye(3)
    i = intersect(span(e[0], e[1]), span(e[1], e[2]))
    assert i.dim == 1 and np.allclose(np.abs(i.basis[:, 0]), e[1])
    c = complement(span(e[0]))
    assert c.dim == 2 and np.allclose(c.basis[0], 0)
    j = join(span(e[0]), span(e[1]))
    assert j.dim == 2 and np.allclose(j.projector(), np.diag([1, 1, 0]))


def test_principal_angles_examples():
    e = np.eye(2)
    prof = principal_angles(span(e[0]), span(e[0] + e[1]))
    assert prof.principal_angles[0] == pytest.approx(math.pi / 4, abs=1e-14)
    assert prof.friedrichs_cos == pytest.approx(math.sqrt(2) / 2, abs=1e-14)
    assert prof.dim_intersection == 0
    s = make_subspace(np.random.default_rng(1).standard_normal((5, 3)))
    same = principal_angles(s, s)
    assert np.allclose(same.principal_angles, 0, atol=1e-12) and same.dim_intersection == 3
    assert same.friedrichs_cos == 0.0
    perp = principal_angles(span(e[0]), span(e[1]))
    assert perp.principal_angles[0] == pytest.approx(math.pi / 2)
    assert perp.friedrichs_cos == pytest.approx(0, abs=1e-15)


def test_principal_angles_small_angle_accuracy():
    t = 1e-9
    a = span(np.array([1.0, 0.0]))
    b = span(np.array([math.cos(t), math.sin(t)]))
    assert principal_angles(a, b).principal_angles[0] == pytest.approx(t, rel=1e-6)


def test_principal_angles_zero_subspace():
    with pytest.raises(EmptySubspaceError):
        principal_angles(Subspace.zero(3), Subspace.full(3))


def test_dist_examples():
    assert dist(E[1], span(E[0])) == pytest.approx(1.0)
    # oracle: sin of the angle between e3 and the line through e3 + e4/2
    got = dist(E[2], span(E[2] + E[3] / 2))
    assert got == pytest.approx(0.4472135954999579, abs=1e-15)
    assert got == pytest.approx(math.sin(math.atan(0.5)), abs=1e-15)
    assert dist(E[0] + E[1], span(E[0], E[1])) == pytest.approx(0, abs=1e-15)


def test_text_roundtrip(tmp_path):
    s = make_subspace(np.random.default_rng(2).standard_normal((6, 3)))
    text = dumps_subspace(s)
    assert text.splitlines()[0] == "6 3"
    t = loads_subspace(text)
    assert np.array_equal(t.basis, s.basis)
    write_subspace(tmp_path / "s.txt", Subspace.zero(4))
    z = read_subspace(tmp_path / "s.txt")
    assert z.dim == 0 and z.ambient_dim == 4


def test_text_rejects_bad_rows():
    with pytest.raises(InputError):
        loads_subspace("2 1\n1.0\n")
    with pytest.raises(InputError):
        loads_subspace("2 1\n1.0 2.0\n0\n")


@given(subspace_and_vector())
def test_projection_idempotent_orthogonal_contractive(sx):
    s, x = sx
    p = project(s, x)
    assert np.allclose(project(s, p), p, atol=1e-12 * (1 + np.abs(x).max()))
    assert np.all(np.abs(s.basis.T @ (x - p)) <= 1e-12 * (1 + np.linalg.norm(x)))
    assert np.linalg.norm(p) <= np.linalg.norm(x) * (1 + 1e-12) + 1e-15


@given(subspace_and_vector())
def test_projection_matches_least_squares(sx):
    s, x = sx
    if s.dim == 0:
        return
    assert np.allclose(project(s, x), proj_lstsq(s.basis, x), atol=1e-9 * (1 + np.abs(x).max()))


@given(subspace_and_vector())
def test_join_with_complement_is_everything(sx):
    s, _ = sx
    c = complement(s)
    assert join(s, c).dim == s.ambient_dim
    assert intersect(s, c).dim == 0 if s.dim and c.dim else True


@given(st.integers(2, 7), st.integers(0, 10**6))
def test_principal_angles_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    a = make_subspace(rng.standard_normal((n, int(rng.integers(1, n + 1)))))
    b = make_subspace(rng.standard_normal((n, int(rng.integers(1, n + 1)))))
    pa, pb = principal_angles(a, b), principal_angles(b, a)
    assert len(pa.principal_angles) == min(a.dim, b.dim)
    assert np.allclose(pa.principal_angles, pb.principal_angles, atol=1e-12)
    assert np.all(np.diff(pa.principal_angles) >= -1e-15)
    # arccos of the clamped singular values agrees away from zero
    sv = np.clip(np.linalg.svd(a.basis.T @ b.basis, compute_uv=False), 0, 1)
    ref = np.sort(np.arccos(sv))
    big = ref > 1e-4
    assert np.allclose(pa.principal_angles[big], ref[big], atol=1e-10)


@given(st.integers(3, 8), st.integers(0, 10**6))
def test_intersection_of_planted_subspaces(n, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n - 1))
    common = rng.standard_normal((n, k))
    a = make_subspace(np.hstack([common, rng.standard_normal((n, 1))]))
    b = make_subspace(np.hstack([common, rng.standard_normal((n, 1))]))
    i = intersect(a, b, tol=1e-8)
    assert i.dim == k
    assert dist(common[:, 0], i) < 1e-8 * np.linalg.norm(common[:, 0])
