import random
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from phan.field import Involution, field_of_order
from phan.form import Form, identity_form, standard_model
from phan.geometry import (CompatibleFamily, Flag, GeometryError, GeometrySpec, base_case_witness,
                           exists_graded_complement, is_almost_transversal, is_graded_complement, is_nearly_transversal,
                           is_transversal, isotropic_subspaces,
                           membership, project_flag, random_family, spec_from_json, spec_to_json,
                           transversality_profile)
from phan.harness import sample_quotient_instance
from phan.subspace import Subspace, enumerate_subspaces, subspaces_between


def vecs(U):
    F = U.field
    out = set()
    for cs in product(range(F.order), repeat=U.dim):
        v = [0] * U.ambient
        for c, r in zip(cs, U.rows):
            v = [F.add(a, F.mul(c, b)) for a, b in zip(v, r)]
        out.add(tuple(v))
    return out


def oracle_transversal(U, flag, fam):
    """The definition, evaluated on explicit vector sets."""
    if U.dim == 0:
        return True
    F, N = U.field, U.ambient
    SU = vecs(U)
    k = None
    for i, V in enumerate(flag.members):
        meet = SU & vecs(V)
        if len(meet) > 1:
            k = i if k is None else k
            if len(vecs(U + V)) != F.order ** N:
                return False
    basis = list(Subspace.span(F, N, list(SU & vecs(flag[k]))).rows)
    G = fam[k].restricted_gram(basis)
    radical = [c for c in product(range(F.order), repeat=len(basis)) if any(c)
               and all(sum_field(F, [F.mul(x, g) for x, g in zip(c, col)]) == 0 for col in zip(*G))]
    return not radical


def sum_field(F, xs):
    s = 0
    for x in xs:
        s = F.add(s, x)
    return s


def random_flag(F, N, rng):
    dims = sorted(rng.sample(range(1, N), rng.randint(0, N - 1)))
    basis = list(Subspace.full(F, N).rows)
    rng.shuffle(basis)
    perm = [list(b) for b in basis]
    # random change of basis keeps the flag generic
    for i in range(N):
        for j in range(i):
            c = rng.randrange(F.order)
            perm[i] = [F.add(a, F.mul(c, b)) for a, b in zip(perm[i], perm[j])]
    members = [Subspace.zero(F, N)] + [Subspace.span(F, N, perm[:d]) for d in dims] + [Subspace.full(F, N)]
    return Flag(members)


@given(st.sampled_from([2, 3, 4]), st.integers(2, 4), st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_transversality_matches_definition(q, N, seed):
    F = field_of_order(q)
    rng = random.Random(seed)
    flag = random_flag(F, N, rng)
    kinds = ["id", "frob"] if F.degree == 2 else ["id"]
    fam = random_family(flag, Involution(F, rng.choice(kinds)), rng)
    for _ in range(6):
        d = rng.randint(0, N)
        U = Subspace.span(F, N, [[rng.randrange(q) for _ in range(N)] for _ in range(d)])
        assert is_transversal(U, flag, fam) == oracle_transversal(U, flag, fam)
        assert transversality_profile(U, flag, fam).transversal == is_transversal(U, flag, fam)


@pytest.mark.parametrize("q,d,expected", [(2, 1, 15), (2, 2, 15), (3, 1, 40), (3, 2, 40)])
def test_symplectic_isotropic_counts(q, d, expected):
    f = standard_model("C", 2, field_of_order(q)).form
    assert len(isotropic_subspaces(f, d)) == expected


def test_isotropic_matches_filter():
    f = standard_model("B", 2, field_of_order(3)).form
    for d in (1, 2):
        brute = [U for U in enumerate_subspaces(f.field, 5, d) if f.is_totally_isotropic(U)]
        assert isotropic_subspaces(f, d) == brute
    # Q(4, 3): (q^4 - 1)/(q - 1) points, (q + 1)(q^2 + 1) lines
    assert len(isotropic_subspaces(f, 1)) == 40 and len(isotropic_subspaces(f, 2)) == 40


def test_hermitian_isotropic_points():
    F = field_of_order(4)
    f = identity_form(F, 3, Involution(F, "frob"))
    assert len(isotropic_subspaces(f, 1)) == 9  # q^3 + 1 with q = 2


def test_unitary_trivial_flag_geometry_is_non_isotropic_points():
    F = field_of_order(4)
    s = Involution(F, "frob")
    flag = Flag.trivial(F, 3)
    spec = GeometrySpec("A", flag, CompatibleFamily(flag, [identity_form(F, 3, s)]))
    pts = [P for P in enumerate_subspaces(F, 3, 1) if membership(P, spec)]
    assert len(pts) == 21 - 9


def _interpolated_forms(F, points):
    """Non-degenerate symmetric forms on F^3 vanishing on the given vectors (by exhaustive search)."""
    sym = Involution(F, "id")
    for a, b, c, d, e, g in product(range(F.order), repeat=6):
        G = [[a, b, c], [b, d, e], [c, e, g]]
        f = Form(G, sym)
        if f.is_nondegenerate() and all(f(v, v) == 0 for v in points):
            yield f


def test_b1_no_witness_by_interpolation():
    F = field_of_order(3)
    amb = standard_model("B", 1, F)
    iso = [P.rows[0] for P in isotropic_subspaces(amb.form, 1)]
    assert len(iso) == 4  # q + 1 points on the conic
    f1 = next(_interpolated_forms(F, iso[:2]))
    f2 = next(_interpolated_forms(F, iso[2:]))
    res = base_case_witness(amb, [f1, f2])
    assert not res.found and res.scanned == 4
    assert not res.bound_ok  # 3 < 2 * 2


def test_c1_witness_above_bound():
    rng = random.Random(5)
    for q in (4, 5, 7):
        F = field_of_order(q)
        amb = standard_model("C", 1, F)
        flag = Flag.trivial(F, 2)
        for _ in range(20):
            forms = [random_family(flag, Involution(F, "id"), rng).forms[0] for _ in range(q // 2)]
            forms = [f for f in forms if not all(f(v, v) == 0 for v in product(range(q), repeat=2))]
            res = base_case_witness(amb, forms)
            assert res.bound_ok and res.found


@pytest.mark.parametrize("mode", ["strict", "generalized"])
def test_projection_equivalence(mode):
    for idx in range(40):
        rng = random.Random(1000 + idx)
        inst = sample_quotient_instance(rng, [2, 3], [3, 4, 5], mode, 400)
        flag, fam, U, Us = inst["flag"], inst["family"], inst["U"], inst["Usup"]
        try:
            data = project_flag(U, Us, flag, fam, mode)
        except GeometryError:
            assert mode == "generalized" and exists_graded_complement(U, Us, flag, fam) is None
            continue
        if mode == "generalized":
            assert is_graded_complement(data.A, U, Us, flag, fam)
        for W in subspaces_between(U, Us):
            if U < W < Us:
                assert is_transversal(W, flag, fam) == is_transversal(data.quotient(W), data.flag, data.family)


def test_missing_complement_instance():
    # U is almost transversal with k_U = 2, U' = V is nearly transversal, yet omega_3 vanishes on U and
    # U^perp for omega_3 is <e1, e2, e3>, too small to hold a 2-dimensional complement
    F = field_of_order(2)
    sp = lambda *rows: Subspace.span(F, 4, rows)
    flag = Flag([sp(), sp([1, 0, 1, 0]), sp([1, 0, 0, 0], [0, 0, 1, 0]), Subspace.full(F, 4)])
    sym = Involution(F, "id")
    z = [0, 0, 0, 0]
    forms = [Form([z, z, [0, 0, 1, 0], z], sym), Form([[1, 0, 1, 0], z, [1, 0, 1, 0], z], sym),
             Form([z, [0, 0, 0, 1], z, [0, 1, 0, 1]], sym)]
    fam = CompatibleFamily(flag, forms)
    U, V = sp([1, 0, 0, 0], [0, 1, 1, 0]), Subspace.full(F, 4)
    assert is_almost_transversal(U, flag, fam) and is_nearly_transversal(V, flag)
    assert not forms[2].is_nondegenerate_on(U)
    with pytest.raises(GeometryError):
        project_flag(U, V, flag, fam, "generalized")
    assert exists_graded_complement(U, V, flag, fam) is None


def test_spec_validation_and_json():
    F = field_of_order(9)
    amb = standard_model("C", 2, F).form
    flag = Flag.trivial(F, 4)
    fam = CompatibleFamily(flag, [identity_form(F, 4)])
    spec = GeometrySpec("C", flag, fam, amb, n=2)
    assert spec_from_json(spec_to_json([spec])) == [spec]
    with pytest.raises(GeometryError):
        GeometrySpec("C", flag, fam, None)
    with pytest.raises(GeometryError):
        GeometrySpec("B", flag, fam, amb, n=2)
    P = Subspace.span(F, 4, [[1, 0, 0, 0]])
    with pytest.raises(GeometryError):
        GeometrySpec("C", Flag([Subspace.zero(F, 4), P, Subspace.full(F, 4)]),
                     CompatibleFamily(Flag([Subspace.zero(F, 4), P, Subspace.full(F, 4)]),
                                      [identity_form(F, 4), identity_form(F, 4)], check=False), amb)


def test_flag_errors():
    F = field_of_order(2)
    with pytest.raises(GeometryError):
        Flag([Subspace.full(F, 2)])
    P = Subspace.span(F, 2, [[1, 0]])
    with pytest.raises(GeometryError):
        Flag([Subspace.zero(F, 2), P, P, Subspace.full(F, 2)])
    with pytest.raises(GeometryError):
        CompatibleFamily(Flag.trivial(F, 2), [])
