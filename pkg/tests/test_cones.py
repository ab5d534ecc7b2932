from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import SQRT_2_MINUS_SQRT_2, elliptic_to_hyperbolic_cone_distance, lattice_direction_hits, sl2_kind
from wfcones.algebra import AlgebraElement, classify, sample_group_batch
from wfcones.cones import (
    ConeError,
    ConePredicate,
    ConeSampleSet,
    ExplicitFamily,
    InducedConeSpec,
    LatticeFamily,
    RayFamily,
    ac_membership,
    annihilator,
    compare_cones,
    distance_to_cone,
    restriction_matrix,
    sample_induced_cone,
    sl2_region,
)
from wfcones.realizations import SL2_E, SL2_H, borel_sl2, builtin_space, diagonal, nilradical_sl2, sl2, whole

ALG = sl2()
coord = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
triples = st.tuples(coord, coord, coord).filter(lambda v: max(map(abs, v)) > 1e-2)


def projector(rows, metric):
    """Orthogonal projector onto the row span in the given metric (matrix acting on column coords)."""
    rows = np.atleast_2d(rows)
    G = rows @ metric @ rows.T
    return rows.T @ np.linalg.solve(G, rows @ metric)


@pytest.fixture(scope="module")
def sl2n_cone():
    return sample_induced_cone(InducedConeSpec(nilradical_sl2(), "zero"), 10_000, seed=0)


# --- annihilators ----------------------------------------------------------------


def test_annihilator_of_n_is_b():
    ann = annihilator(nilradical_sl2())
    assert ann.shape == (2, 3)
    b = np.stack([SL2_H, SL2_E])
    I = np.eye(3)
    P1, P2 = projector(ann, I), projector(b, I)
    assert np.abs(P1 - P2).max() < 1e-12


def test_annihilator_of_whole_is_zero():
    assert annihilator(whole(ALG)).shape[0] == 0


@pytest.mark.parametrize("k", [2, 3])
def test_annihilator_of_diagonal_is_sum_zero(k):
    space = diagonal(ALG, k)
    ann = annihilator(space)
    assert ann.shape == (3 * (k - 1), 3 * k)
    # {sum_j xi_j = 0}: the kernel of the summation map
    S = np.hstack([np.eye(3)] * k)
    _, s, vt = np.linalg.svd(S)
    kernel = vt[3:]
    I = np.eye(3 * k)
    assert np.abs(projector(ann, I) - projector(kernel, I)).max() < 1e-12


@pytest.mark.parametrize("name", ["SL2/N", "SL2/B", "SL2/T", "SL2/A", "SL2^2/diag", "SL2^3/diag", "Sp4/Sp2"])
def test_annihilator_complements_subalgebra(name):
    space = builtin_space(name)
    alg = space.algebra
    ann = annihilator(space)
    assert ann.shape[0] == alg.dim - space.dim_h
    # annihilator values vanish on h
    assert np.abs(restriction_matrix(space) @ ann.T).max() < 1e-12
    # the Riesz representatives of the annihilator and h split g orthogonally
    reps = ann @ alg.riesz_map.T
    F = alg.gram
    P = projector(reps, F) + projector(space.sub, F)
    assert np.abs(P - np.eye(alg.dim)).max() < 1e-12
    assert np.abs(reps @ F @ space.sub.T).max() < 1e-12


# --- induced cones ------------------------------------------------------------------


def test_sl2n_induced_cone_has_no_elliptic(sl2n_cone):
    assert sl2n_cone.samples.shape == (10_000, 3)
    assert np.allclose(ALG.covector_norm(sl2n_cone.samples), 1.0, atol=1e-12)
    kinds = {}
    for s in sl2n_cone.samples:
        k = sl2_kind(*s, tol=1e-9)
        kinds[k] = kinds.get(k, 0) + 1
    assert kinds.get("semisimple-elliptic", 0) == 0
    assert kinds["semisimple-hyperbolic"] > 0


def test_whole_group_induced_cone_is_zero():
    cone = sample_induced_cone(InducedConeSpec(whole(ALG), "zero"), 100, seed=0)
    assert cone.is_zero
    assert cone.samples.shape[0] == 0


def test_diagonal_induced_cone_trace_invariant():
    space = diagonal(ALG, 2)
    cone = sample_induced_cone(InducedConeSpec(space, "zero"), 2000, seed=3)
    alg = space.algebra
    for s in cone.samples:
        X1, X2 = ALG.matrix(s[:3]), ALG.matrix(s[3:])
        assert abs(np.trace(X1 @ X1) - np.trace(X2 @ X2)) < 1e-8
    assert np.allclose(alg.covector_norm(cone.samples), 1.0, atol=1e-12)


def test_induced_cone_is_deterministic():
    spec = InducedConeSpec(nilradical_sl2(), "zero")
    a = sample_induced_cone(spec, 500, seed=9)
    b = sample_induced_cone(spec, 500, seed=9, workers=2)
    assert np.array_equal(a.samples, b.samples)


def test_q_compatibility_of_samples():
    """Restricting ``Ad*(g) xi`` to ``Ad(g) h`` reproduces the preimage's
    restriction to ``h``."""
    space = borel_sl2()
    spec = InducedConeSpec(space, ("ray", [1.0, 0.0]))
    cone = sample_induced_cone(spec, 300, seed=4)
    gs = sample_group_batch(ALG, 300, seed=4)
    T = ALG.trace_gram
    R = restriction_matrix(space)
    for s, pre, g in zip(cone.samples, cone.preimages, gs):
        conj_h = space.sub @ ALG.Ad_matrix(g).T
        lhs = conj_h @ T @ s
        rhs = R @ pre
        assert np.abs(lhs - rhs).max() < 1e-8
        # the base-cone point is on the ray (positive first value, second zero up to the h-part)
    assert np.all((R @ cone.preimages.T)[0] >= -1e-12)


def test_induced_samples_stable_under_reconjugation(sl2n_cone):
    rng = np.random.default_rng(5)
    sub = sl2n_cone.samples[rng.choice(len(sl2n_cone.samples), 200, replace=False)]
    pred = sl2_region(ALG, "hyp", "nilp")
    for gm, s in zip(sample_group_batch(ALG, 200, seed=8), sub):
        c = ALG.coords(gm @ ALG.matrix(s) @ np.linalg.inv(gm), check=False)
        c /= ALG.covector_norm(c)
        assert distance_to_cone(c, pred) <= 1e-2
    tol = 3 * sl2n_cone.covering_estimate()
    moved = []
    for gm, s in zip(sample_group_batch(ALG, 200, seed=9, r_range=(0, 0.3)), sub):
        c = ALG.coords(gm @ ALG.matrix(s) @ np.linalg.inv(gm), check=False)
        moved.append(c / ALG.covector_norm(c))
    assert np.max(sl2n_cone.distance(np.array(moved))) <= max(tol, 1e-2)


def test_cone_sample_set_json_roundtrip(sl2n_cone):
    d = sl2n_cone.to_dict()
    assert {"algebra", "seed", "n", "samples"} <= set(d)
    back = ConeSampleSet.from_dict(d, ALG)
    assert np.array_equal(back.samples, sl2n_cone.samples)


def test_unsupported_base_rejected():
    with pytest.raises(ConeError):
        sample_induced_cone(InducedConeSpec(nilradical_sl2(), "bogus"), 10, seed=0)


# --- distances --------------------------------------------------------------------------


def test_distance_elliptic_to_hyperbolic_predicate():
    oracle = elliptic_to_hyperbolic_cone_distance()
    assert oracle == pytest.approx(SQRT_2_MINUS_SQRT_2, abs=1e-7)
    hyp = sl2_region(ALG, "hyp", "nilp")
    assert distance_to_cone([0, 0, 1], hyp) == pytest.approx(oracle, abs=1e-6)
    assert distance_to_cone([0, 0, 5], hyp) == pytest.approx(oracle, abs=1e-6)


def test_distance_of_a_sample_is_zero(sl2n_cone):
    s = sl2n_cone.samples[17]
    assert distance_to_cone(s, sl2n_cone) == pytest.approx(0.0, abs=1e-12)
    assert distance_to_cone(3 * s, sl2n_cone) == pytest.approx(0.0, abs=1e-12)


def test_distance_elliptic_to_cloud(sl2n_cone):
    assert distance_to_cone([0, 0, 1], sl2n_cone) >= 0.7


def test_distance_rejects_zero():
    with pytest.raises(ConeError):
        distance_to_cone([0, 0, 0], sl2_region(ALG, "hyp"))


@given(triples, st.floats(0.01, 100))
def test_predicate_scale_invariance(c, t):
    for pieces in (("hyp",), ("ell+",), ("ell-",), ("nilp",), ("hyp", "nilp", "ell+")):
        pred = sl2_region(ALG, *pieces)
        assert pred.contains(np.asarray(c))[0] == pred.contains(t * np.asarray(c))[0]
        assert pred.distance(np.atleast_2d(c))[0] == pytest.approx(pred.distance(np.atleast_2d(t * np.asarray(c)))[0], abs=1e-9)


@given(triples)
def test_sl2_region_matches_determinant_oracle(c):
    kind = sl2_kind(*c, tol=1e-3)
    x, y, z = c
    if kind == "semisimple-hyperbolic":
        assert sl2_region(ALG, "hyp").contains(np.asarray(c))[0]
        assert not sl2_region(ALG, "ell+", "ell-").contains(np.asarray(c))[0]
    elif kind == "semisimple-elliptic":
        piece = "ell+" if z > 0 else "ell-"
        other = "ell-" if z > 0 else "ell+"
        assert sl2_region(ALG, piece).contains(np.asarray(c))[0]
        assert not sl2_region(ALG, other, "hyp").contains(np.asarray(c))[0]


def test_predicate_samples_are_members():
    rng = np.random.default_rng(0)
    for pieces in (("hyp",), ("ell+",), ("nilp",), ("hyp", "nilp")):
        pred = sl2_region(ALG, *pieces)
        pts = pred.sample(300, rng)
        assert np.all(pred.contains(pts))
        assert np.allclose(ALG.covector_norm(pts), 1.0, atol=1e-12)


def test_ray_and_subspace_predicates():
    ray = ConePredicate(ALG, "ray", {"direction": [0.0, 0.0, 1.0]})
    assert ray.contains(np.array([0.0, 0.0, 2.0]))[0]
    assert not ray.contains(np.array([0.0, 0.0, -2.0]))[0]
    assert ray.distance(np.array([[0.0, 0.0, -1.0]]))[0] == pytest.approx(2.0, abs=1e-12)
    sub = ConePredicate(ALG, "subspace", {"basis": [[1.0, 0.0, 0.0], [0.0, 1.0, -1.0]]})
    assert sub.contains(np.array([3.0, -2.0, 2.0]))[0]
    assert not sub.contains(np.array([0.0, 0.0, 1.0]))[0]


# --- asymptotic cones -------------------------------------------------------------------


def test_ac_bounded_family_is_out():
    fam = ExplicitFamily(np.random.default_rng(0).uniform(-5, 5, (200, 2)))
    for xi in ([1, 0], [1, 1], [-0.3, 2.0]):
        assert ac_membership(fam, xi, norm_horizon=10.0).verdict == "out"


def test_ac_diagonal_ray_is_in():
    fam = RayFamily([1.0, 1.0])
    v = ac_membership(fam, np.array([1.0, 1.0]) / math.sqrt(2), norm_horizon=10.0, ratio=10.0, levels=4)
    assert v.verdict == "in"
    assert ac_membership(fam, [1.0, 0.0], norm_horizon=10.0, levels=3).verdict == "out"


def _near_diagonal(m):
    return np.abs(m[:, 0] - m[:, 1]) <= np.sqrt(np.minimum(m[:, 0], m[:, 1]))


def test_ac_near_diagonal_lattice_matches_enumeration():
    fam = LatticeFamily(2, _near_diagonal)
    width, lo = 0.1, 10.0
    edges = [lo * 10**j for j in range(3)]
    for xi, expected in (([1.0, 1.0], "in"), ([2.0, 1.0], "out")):
        v = ac_membership(fam, xi, cone_width=width, norm_horizon=lo, ratio=10.0, levels=2)
        assert v.verdict == expected
        for (a, b, hit), lo_j, hi_j in zip(v.shells, edges[:-1], edges[1:]):
            assert hit == lattice_direction_hits(_near_diagonal, xi, width, lo_j, hi_j)


def test_ac_scale_invariance():
    fam = LatticeFamily(2, _near_diagonal)
    for t in (0.01, 1.0, 37.0):
        assert ac_membership(fam, t * np.array([1.0, 1.0]), norm_horizon=10.0, levels=2).verdict == "in"


def test_ac_undecided_on_budget():
    fam = LatticeFamily(2, _near_diagonal)
    v = ac_membership(fam, [2.0, 1.0], norm_horizon=10.0, ratio=10.0, levels=4, budget=10_000)
    assert v.verdict == "undecided"


def test_ac_rejects_degenerate_cone():
    with pytest.raises(ConeError):
        ac_membership(RayFamily([1.0]), [1.0], cone_width=0.0)


# --- comparisons ------------------------------------------------------------------------


def test_compare_strict_subset_with_elliptic_witness():
    a = sl2_region(ALG, "hyp", "nilp")
    b = sl2_region(ALG, "hyp", "nilp", "ell+")
    rep = compare_cones(a, b, seed=1)
    assert rep.verdict == "strict_subset"
    w = np.asarray(rep.witness_b)
    assert classify(AlgebraElement(ALG, w)).kind == "semisimple-elliptic"
    assert w[2] > 0
    assert rep.d_ba >= 0.5


def test_compare_identical_predicates_equal():
    a = sl2_region(ALG, "hyp", "nilp")
    assert compare_cones(a, sl2_region(ALG, "nilp", "hyp")).verdict == "equal"


def test_compare_disjoint_elliptic_sheets():
    rep = compare_cones(sl2_region(ALG, "ell+"), sl2_region(ALG, "ell-"), seed=2)
    assert rep.verdict == "incomparable"
    assert np.asarray(rep.witness_a)[2] > 0
    assert np.asarray(rep.witness_b)[2] < 0


def test_compare_cloud_against_predicate(sl2n_cone):
    rep = compare_cones(sl2n_cone, sl2_region(ALG, "hyp", "nilp"), seed=3)
    assert rep.verdict == "equal"
    rep = compare_cones(sl2n_cone, sl2_region(ALG, "all"), seed=3)
    assert rep.verdict == "strict_subset"


def test_compare_rejects_different_algebras():
    other = builtin_space("SL2^2/diag").algebra
    with pytest.raises(ConeError):
        compare_cones(sl2_region(ALG, "hyp"), ConePredicate(other, "zero"))
