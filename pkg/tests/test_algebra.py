from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ad_series, series_logm, sl2_kind, sl2_matrix, taylor_expm
from wfcones.algebra import (
    AlgebraElement,
    AlgebraError,
    Covector,
    GroupElement,
    InjectivityRadiusError,
    LieAlgebraSpec,
    Unclassifiable,
    adjoint,
    bracket,
    classify,
    coadjoint,
    conjugate_to_cartan,
    group_exp,
    group_log,
    sample_group_batch,
    semisimple_density,
    trace_pairing,
)
from wfcones.realizations import (
    SL2_E,
    SL2_F,
    SL2_H,
    SL2_J,
    borel_sl2,
    builtin_algebra,
    direct_sum,
    nilradical_sl2,
    sl2,
    so3,
    so_pq,
    sp,
    su2,
)

ALG = sl2()
coord = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
triples = st.tuples(coord, coord, coord).filter(lambda v: max(map(abs, v)) > 1e-2)


def multiset_gap(A, B):
    """Largest distance between matched eigenvalues of ``A`` and ``B``."""
    from scipy.optimize import linear_sum_assignment

    a, b = np.linalg.eigvals(A), np.linalg.eigvals(B)
    D = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(D)
    return float(D[i, j].max())


def el(c, alg=ALG):
    return AlgebraElement(alg, np.asarray(c, float))


def cov(c, alg=ALG):
    return Covector(alg, np.asarray(c, float))


# --- realizations --------------------------------------------------------------


@pytest.mark.parametrize("make", [sl2, su2, so3, lambda: sp(2), lambda: sp(3), lambda: so_pq(2, 3), lambda: direct_sum(sl2(), sl2())])
def test_realizations_validate(make):
    alg = make()
    alg.validate()
    for rows in alg.cartan_reps.values():
        assert rows.shape[0] == alg.rank
        for a in rows:
            for b in rows:
                assert np.allclose(bracket(el(a, alg), el(b, alg)).coords, 0, atol=1e-12)


def test_sl2_matrix_convention():
    assert np.allclose(ALG.matrix([1.0, 2.0, 3.0]), sl2_matrix(1, 2, 3))
    assert np.allclose(ALG.matrix(SL2_E), [[0, 1], [0, 0]])
    assert np.allclose(ALG.matrix(SL2_F), [[0, 0], [1, 0]])


def test_spec_rejects_dependent_basis():
    with pytest.raises(AlgebraError):
        LieAlgebraSpec("bad", np.stack([np.diag([1.0, -1.0]), np.diag([2.0, -2.0])]), rank=1)


def test_spec_rejects_non_closed_basis():
    E = np.array([[0.0, 1.0], [0.0, 0.0]])
    F = E.T
    with pytest.raises(AlgebraError):
        LieAlgebraSpec("bad", np.stack([E, F]), rank=1)


def test_spec_json_roundtrip(tmp_path):
    alg = sp(2)
    path = tmp_path / "sp4.json"
    alg.dump(path)
    doc = json.loads(path.read_text())
    assert {"name", "ambient_dim", "basis", "rank", "cartan_reps"} <= set(doc)
    back = LieAlgebraSpec.load(path)
    assert back.name == alg.name and back.rank == alg.rank
    assert np.allclose(back.basis, alg.basis)
    assert builtin_algebra("sp4").dim == 10


# --- bracket and pairing ---------------------------------------------------------------


def test_bracket_structure_constants():
    H, E, F = el(SL2_H), el(SL2_E), el(SL2_F)
    assert np.allclose(bracket(H, E).coords, 2 * SL2_E, atol=1e-14)
    assert np.allclose(bracket(E, F).coords, SL2_H, atol=1e-14)
    assert np.allclose(bracket(H, F).coords, -2 * SL2_F, atol=1e-14)


@given(triples)
def test_bracket_antisymmetry(c):
    X = el(c)
    assert np.allclose(bracket(X, X).coords, 0, atol=1e-12)


def test_bracket_mismatched_algebras():
    with pytest.raises(AlgebraError):
        bracket(el(SL2_H), AlgebraElement(su2(), np.array([1.0, 0, 0])))


def test_trace_pairing_examples():
    assert trace_pairing(cov(SL2_H), el(SL2_H)) == pytest.approx(2.0, abs=1e-14)
    assert trace_pairing(cov(SL2_E), el(SL2_F)) == pytest.approx(1.0, abs=1e-14)
    assert trace_pairing(cov(SL2_E), el(SL2_E)) == pytest.approx(0.0, abs=1e-14)


@given(triples, triples)
def test_trace_pairing_is_matrix_trace(a, b):
    assert trace_pairing(cov(a), el(b)) == pytest.approx(np.trace(sl2_matrix(*a) @ sl2_matrix(*b)), abs=1e-10)


# --- exp / log -------------------------------------------------------------------------


def test_exp_zero_is_identity():
    assert np.array_equal(group_exp(el([0, 0, 0])).matrix, np.eye(2))


@pytest.mark.parametrize("theta", [0.1, 1.0, 2.5, -0.7])
def test_exp_rotation(theta):
    R = group_exp(el(theta * SL2_J)).matrix
    assert np.allclose(R, [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]], atol=1e-13)


def test_log_exp_example_matches_oracle():
    Y = el(0.3 * SL2_H + 0.1 * SL2_E)
    G = taylor_expm(Y.matrix)
    assert np.abs(group_exp(Y).matrix - G).max() < 1e-13
    assert np.abs(series_logm(G) - Y.matrix).max() < 1e-12
    back = group_log(group_exp(Y))
    assert np.abs(back.coords - Y.coords).max() < 1e-9


@pytest.mark.parametrize("make", [sl2, su2, lambda: sp(2), lambda: so_pq(2, 3)])
def test_exp_log_roundtrip_random(make):
    alg = make()
    rng = np.random.default_rng(4)
    for _ in range(50):
        c = rng.standard_normal(alg.dim)
        c *= rng.uniform(0.0, 0.5) / alg.norm(c)
        Y = el(c, alg)
        g = group_exp(Y)
        assert np.abs(g.matrix - taylor_expm(Y.matrix)).max() < 1e-12
        assert g.constraint_defect() < 1e-10
        assert alg.norm(group_log(g).coords - c) < 1e-9


def test_log_refuses_outside_injectivity_radius():
    with pytest.raises(InjectivityRadiusError):
        group_log(group_exp(el(3.0 * SL2_J)))


# --- adjoint / coadjoint ---------------------------------------------------------------


def test_adjoint_identity():
    Y = el([0.3, -1.2, 0.4])
    assert np.allclose(adjoint(ALG.identity(), Y).coords, Y.coords, atol=1e-15)


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4])
def test_adjoint_first_order_series(eps):
    rng = np.random.default_rng(1)
    X = el(eps * rng.standard_normal(3))
    Y = el(rng.standard_normal(3))
    got = adjoint(group_exp(X), Y).matrix
    first = ad_series(X.matrix, Y.matrix, order=1)
    second = ad_series(X.matrix, Y.matrix, order=6)
    assert np.abs(got - second).max() < 1e-12
    # the first-order remainder is quadratic in |X|
    assert np.abs(got - first).max() < 5 * eps**2 * (1 + np.abs(Y.matrix).max())


@given(triples, triples, triples)
def test_trace_invariance_and_coadjoint_compatibility(a, b, w):
    g = group_exp(el(np.asarray(w) / 3.0))
    Y = el(a)
    AdY = adjoint(g, Y)
    assert np.trace(AdY.matrix @ AdY.matrix) == pytest.approx(np.trace(Y.matrix @ Y.matrix), rel=1e-9, abs=1e-9)
    xi = cov(b)
    lhs = trace_pairing(coadjoint(g, xi), Y)
    rhs = trace_pairing(xi, adjoint(g.inv(), Y))
    assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


def test_coadjoint_compatibility_sp4():
    alg = sp(2)
    rng = np.random.default_rng(2)
    gs = sample_group_batch(alg, 30, seed=3)
    for gm in gs:
        g = GroupElement(gm, alg)
        assert g.constraint_defect() < 1e-9
        xi, Y = Covector(alg, rng.standard_normal(alg.dim)), el(rng.standard_normal(alg.dim), alg)
        lhs = trace_pairing(coadjoint(g, xi), Y)
        rhs = trace_pairing(xi, adjoint(g.inv(), Y))
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


def test_group_sampler_is_deterministic_and_worker_independent():
    a = sample_group_batch(ALG, 64, seed=11)
    b = sample_group_batch(ALG, 64, seed=11, workers=2)
    c = sample_group_batch(ALG, 64, seed=12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.allclose(np.linalg.det(a), 1.0, atol=1e-10)


# --- classification --------------------------------------------------------------------


@pytest.mark.parametrize(
    "c, kind, regular",
    [
        ([1, 0, 0], "semisimple-hyperbolic", True),
        ([0, 0, 1], "semisimple-elliptic", True),
        ([0, 1, 1], "nilpotent", False),
        ([0, 0, 0], "zero", False),
    ],
)
def test_classify_sl2_examples(c, kind, regular):
    cls = classify(el(c))
    assert cls.kind == kind
    assert cls.regular is regular


@given(triples)
def test_classify_matches_determinant_oracle(c):
    expected = sl2_kind(*c, tol=1e-6)
    try:
        got = classify(el(c))
    except Unclassifiable:
        # only allowed in the thin shell around the nilpotent cone
        x, y, z = c
        assert abs(z * z - x * x - y * y) < 1e-4 * (x * x + y * y + z * z)
        return
    if expected != "nilpotent":
        assert got.kind == expected
        assert got.regular


@given(triples, st.floats(0.01, 100))
def test_classify_scale_equivariant(c, t):
    try:
        k1 = classify(el(c)).kind
        k2 = classify(el(t * np.asarray(c))).kind
    except Unclassifiable:
        return
    assert k1 == k2


def test_classify_nilpotent_regularity_recorded():
    cls = classify(el([0, 1, 1]))
    # the centralizer of a nonzero nilpotent of sl2 has dimension 1 = rank,
    # but only semisimple elements are reported regular
    assert cls.centralizer_dim == 1
    assert not cls.semisimple


def test_classify_mixed_in_sl2_sum():
    alg = direct_sum(sl2(), sl2())
    cls = classify(el(np.r_[[1, 0, 0], [0, 0, 1]], alg))
    assert cls.kind == "semisimple-mixed"
    assert cls.regular is True
    cls = classify(el(np.r_[[1, 0, 0], [0, 1, 1]], alg))
    assert cls.kind == "mixed"


def test_classify_refuses_ambiguous_rank():
    # sp(4) torus element with rotation speeds 1 and 1 + 1e-7: the two eigenvalues
    # near i merge into one cluster whose rank test lands in the gray band
    alg = sp(2)
    M = np.zeros((4, 4))
    M[0, 2], M[2, 0], M[1, 3], M[3, 1] = 1.0, -1.0, 1.0 + 1e-7, -(1.0 + 1e-7)
    with pytest.raises(Unclassifiable):
        classify(AlgebraElement(alg, alg.coords(M)))


def test_classify_sp4_regular_elliptic():
    alg = sp(2)
    # diag torus generator of sp(4): J-rotation in each symplectic plane with distinct speeds
    M = np.zeros((4, 4))
    M[0, 2], M[2, 0], M[1, 3], M[3, 1] = 1.0, -1.0, 2.0, -2.0
    cls = classify(AlgebraElement(alg, alg.coords(M)))
    assert cls.kind == "semisimple-elliptic" and cls.regular
    M[1, 3], M[3, 1] = 1.0, -1.0
    cls = classify(AlgebraElement(alg, alg.coords(M)))
    assert cls.kind == "semisimple-elliptic" and not cls.regular


# --- conjugation to a Cartan subalgebra -----------------------------------------------------


def test_conjugate_already_cartan():
    g, y0, C = conjugate_to_cartan(el(2 * SL2_H))
    assert np.array_equal(g.matrix, np.eye(2))
    assert np.allclose(y0.coords, 2 * SL2_H)
    assert C == 1.0


def test_conjugate_x010_to_h():
    Y = el([0, 1, 0])
    g, y0, C = conjugate_to_cartan(Y)
    assert np.allclose(np.abs(y0.coords), SL2_H, atol=1e-12)
    assert y0.norm() == pytest.approx(math.sqrt(2), abs=1e-12)
    assert Y.norm() == pytest.approx(math.sqrt(2), abs=1e-12)
    assert np.allclose(adjoint(g, y0).coords, Y.coords, atol=1e-10)


def test_conjugate_random_conjugates_of_h():
    H = el(SL2_H)
    for gm in sample_group_batch(ALG, 200, seed=5, r_range=(0.0, 1.2)):
        assert np.linalg.norm(gm, 2) <= 40
        Y = adjoint(GroupElement(gm, ALG), H)
        g, y0, C = conjugate_to_cartan(Y)
        assert y0.norm() == pytest.approx(H.norm(), abs=1e-6)
        assert np.allclose(adjoint(g, y0).coords, Y.coords, atol=1e-7 * max(1, Y.norm()))
        assert multiset_gap(y0.matrix, Y.matrix) < 1e-8 * max(1, Y.norm())


def test_conjugate_sp4_by_optimization():
    alg = sp(2)
    M = np.zeros((4, 4))
    M[0, 2], M[2, 0], M[1, 3], M[3, 1] = 1.0, -1.0, 2.0, -2.0
    Y0 = AlgebraElement(alg, alg.coords(M))
    g = GroupElement(sample_group_batch(alg, 1, seed=2, r_range=(0.3, 0.6))[0], alg)
    Y = adjoint(g, Y0)
    h, y0, C = conjugate_to_cartan(Y)
    assert np.allclose(adjoint(h, y0).coords, Y.coords, atol=1e-7)
    assert multiset_gap(y0.matrix, Y.matrix) < 1e-8


def test_conjugate_rejects_nilpotent():
    with pytest.raises(AlgebraError):
        conjugate_to_cartan(el([0, 1, 1]))


# --- semisimple density ------------------------------------------------------------------


def test_semisimple_density_examples():
    assert semisimple_density(ALG, 4000, seed=0) >= 0.99
    assert semisimple_density(borel_sl2().sub_algebra(), 4000, seed=0) >= 0.99
    assert semisimple_density(nilradical_sl2().sub_algebra(), 500, seed=0) == 0.0
