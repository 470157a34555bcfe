import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from phan.building import (Building, BuildingError, Flip, Residue, WeylElement, characterize_R_theta,
                           flip_flop_system, gate_identity_holds, gate_projections, gpg_compare, lemma_6_2_check,
                           rank_one_fixed_points, rank_one_forms)
from phan.field import Involution, field_of_order
from phan.form import Form, identity_form
from phan.harness import flip_residue, identity_flip
from phan.subspace import enumerate_subspaces


@pytest.mark.parametrize("type_,n,poincare", [("A", 2, [1, 2, 2, 1]), ("C", 2, [1, 2, 2, 2, 1]),
                                              ("A", 3, [1, 3, 5, 6, 5, 3, 1]),
                                              ("B", 3, [1, 3, 5, 7, 8, 8, 7, 5, 3, 1])])
def test_weyl_group_length_distribution(type_, n, poincare):
    W = WeylElement.all(type_, n)
    assert len(W) == WeylElement.order(type_, n) == sum(poincare)
    hist = Counter(w.length for w in W)
    assert [hist[k] for k in range(len(poincare))] == poincare
    w0 = WeylElement.longest(type_, n)
    assert w0.length == len(poincare) - 1
    assert [w for w in W if w.length == w0.length] == [w0]


@given(st.sampled_from([("A", 3), ("C", 3), ("B", 2)]), st.data())
@settings(max_examples=100, deadline=None)
def test_weyl_group_laws(tn, data):
    type_, n = tn
    W = WeylElement.all(type_, n)
    a, b, c = (data.draw(st.sampled_from(W)) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert (a * a.inverse()).is_identity()
    assert a.inverse().length == a.length
    i = data.draw(st.integers(1, n))
    s = WeylElement.simple(type_, n, i)
    assert abs((s * a).length - a.length) == 1
    assert abs((a * s).length - a.length) == 1


@pytest.mark.parametrize("type_,n,q,count", [("A", 2, 2, 21), ("A", 2, 3, 52), ("C", 2, 2, 45), ("C", 2, 3, 160),
                                             ("B", 2, 3, 160)])
def test_chamber_counts(type_, n, q, count):
    assert len(Building(type_, n, field_of_order(q)).chambers()) == count


@pytest.mark.parametrize("type_,n,q", [("A", 2, 2), ("C", 2, 2), ("A", 2, 3), ("B", 2, 3)])
def test_bruhat_cells(type_, n, q):
    b = Building(type_, n, field_of_order(q))
    ch = b.chambers()
    for c in ch[:3]:
        hist = Counter(b.weyl_distance(c, d) for d in ch)
        assert len(hist) == WeylElement.order(type_, n)
        assert all(k == q ** w.length for w, k in hist.items())


def test_distance_methods_agree():
    rng = random.Random(3)
    for type_, n, q in [("A", 3, 2), ("C", 2, 3), ("B", 2, 3)]:
        b = Building(type_, n, field_of_order(q))
        ch = b.chambers()
        for _ in range(60):
            c, d = rng.choice(ch), rng.choice(ch)
            w = b.weyl_distance(c, d)
            assert w == b.weyl_distance_table(c, d)
            assert b.weyl_distance(d, c) == w.inverse()
        assert b.weyl_distance(ch[0], ch[0]).is_identity()


def test_flip_is_involutive_on_subspaces():
    F = field_of_order(4)
    b = Building("A", 2, F)
    flip = Flip(b, identity_form(F, 3, Involution(F, "frob")))
    for d in (1, 2):
        for U in enumerate_subspaces(F, 3, d):
            assert flip.image(flip.image(U)) == U


@pytest.mark.parametrize("type_,q,sigma", [("A", 4, "frob"), ("A", 3, "id"), ("C", 3, "id"), ("C", 4, "frob"),
                                           ("B", 3, "id")])
def test_phan_chambers_are_non_degenerate_flags(type_, q, sigma):
    b = Building(type_, 2, field_of_order(q))
    flip = identity_flip(b, sigma)
    f = flip.form
    for c in b.chambers():
        nondeg = all(f.is_nondegenerate_on(U) for U in c)
        assert flip.is_phan(c) == nondeg
        w = flip.codistance(c)
        assert (w * w).is_identity()


@pytest.mark.parametrize("type_,q,sigma", [("A", 4, "frob"), ("C", 3, "id"), ("B", 3, "id")])
def test_flip_isometry(type_, q, sigma):
    b = Building(type_, 2, field_of_order(q))
    flip = identity_flip(b, sigma)
    ch = b.chambers()
    w0 = b.w0
    rng = random.Random(1)
    for _ in range(50):
        c, d = rng.choice(ch), rng.choice(ch)
        img = b.weyl_distance(flip.chamber(c), flip.chamber(d))
        expect = b.weyl_distance(c, d)
        if type_ == "A":
            expect = w0 * expect * w0  # the flip reverses chambers
        assert img == expect
        assert flip.chamber(flip.chamber(c)) == c


def test_rank_one_fixed_points():
    F4 = field_of_order(4)
    assert {rank_one_fixed_points(f) for f in rank_one_forms(F4, Involution(F4, "frob"))} == {3}
    assert rank_one_fixed_points(identity_form(F4, 2, Involution(F4, "frob"))) == 3
    for q in (3, 5, 7):
        F = field_of_order(q)
        assert {rank_one_fixed_points(f) for f in rank_one_forms(F, Involution(F, "id"))} == {0, 2}
    F8 = field_of_order(8)
    sym = [f for f in rank_one_forms(F8, Involution(F8, "id")) if f((1, 0), (1, 0)) or f((0, 1), (0, 1))]
    assert {rank_one_fixed_points(f) for f in sym} == {1}


def test_flip_flop_of_whole_building_counts_non_degenerate_flags():
    F = field_of_order(4)
    b = Building("A", 2, F)
    f = identity_form(F, 3, Involution(F, "frob"))
    flip = Flip(b, f)
    ff = flip_flop_system(b.residue(), flip)
    assert ff.min == 0 and ff.max == b.w0.length
    # independent count: non-isotropic points P with a non-degenerate line through P
    count = 0
    for P in enumerate_subspaces(F, 3, 1):
        if f.is_nondegenerate_on(P):
            count += sum(1 for L in enumerate_subspaces(F, 3, 2) if P <= L and f.is_nondegenerate_on(L))
    assert len(ff.chambers) == count


def test_gate_property_a2_f2():
    b = Building("A", 2, field_of_order(2))
    ch = b.chambers()
    residues = [Residue(b, [U]) for U in {U for c in ch for U in c}]
    for R in residues:
        for c in ch:
            assert gate_identity_holds(R, c)
        c0 = R.chambers[0]
        assert gate_projections(R, c0) == c0


def test_lemma_6_2_on_hermitian_a2():
    F = field_of_order(4)
    b = Building("A", 2, F)
    res = lemma_6_2_check(b, identity_flip(b, "frob"))
    assert res["involutions"] and res["phan_chambers"] > 0 and not res["failures"]


def test_flip_flop_characterization_with_nontrivial_q():
    F = field_of_order(4)
    b = Building("A", 2, F)
    flip = identity_flip(b, "frob")
    R = flip_residue(b, flip, "point")
    out = characterize_R_theta(R, flip)
    assert out["status"] == "verified" and out["Q_dims"]
    assert gpg_compare(R, flip)["status"] == "verified"


def test_flip_errors():
    F = field_of_order(3)
    b = Building("C", 2, F)
    with pytest.raises(BuildingError):
        Flip(b, Form([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0]], Involution(F, "id")))
    with pytest.raises(BuildingError):
        Flip(b, identity_form(F, 3))
    # diag(1, 2, 1, 1) does not induce a similitude of the symplectic form
    with pytest.raises(BuildingError):
        Flip(b, Form([[1, 0, 0, 0], [0, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], Involution(F, "id")))
    with pytest.raises(BuildingError):
        Building("D", 2, F)
