import math
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from phan.field import field_of_order
from phan.subspace import (QuotientChart, Subspace, SubspaceError, TooLarge, complement, enumerate_subspaces,
                           gaussian_binomial, mat_inverse, mat_mul, nullspace, rank, subspaces_between)


def vector_set(F, vectors, N):
    """Oracle: all F-linear combinations, as an explicit set."""
    out = {tuple([0] * N)}
    for v in vectors:
        new = set()
        for w in out:
            for c in range(F.order):
                new.add(tuple(F.add(a, F.mul(c, b)) for a, b in zip(w, v)))
        out = new
    return frozenset(out)


def oracle_dim(F, S):
    return round(math.log(len(S), F.order))


@st.composite
def instance(draw, max_N=4):
    q = draw(st.sampled_from([2, 3, 4, 5]))
    N = draw(st.integers(1, max_N))
    vec = st.lists(st.integers(0, q - 1), min_size=N, max_size=N)
    A = draw(st.lists(vec, max_size=N))
    B = draw(st.lists(vec, max_size=N))
    return field_of_order(q), N, A, B


@given(instance())
@settings(max_examples=150, deadline=None)
def test_span_meet_join_match_vector_sets(inst):
    F, N, A, B = inst
    U, W = Subspace.span(F, N, A), Subspace.span(F, N, B)
    SU, SW = vector_set(F, A, N), vector_set(F, B, N)
    assert U.dim == oracle_dim(F, SU)
    assert vector_set(F, U.rows, N) == SU
    assert vector_set(F, (U & W).rows, N) == SU & SW
    assert vector_set(F, (U + W).rows, N) == vector_set(F, A + B, N)
    assert (U <= W) == (SU <= SW)
    # modular law of dimensions
    assert (U + W).dim + (U & W).dim == U.dim + W.dim


@given(instance())
@settings(max_examples=100, deadline=None)
def test_rref_is_canonical(inst):
    F, N, A, _ = inst
    U = Subspace.span(F, N, A)
    again = Subspace.span(F, N, list(reversed(U.rows)) + [list(r) for r in U.rows])
    assert U == again and hash(U) == hash(again)


@given(instance())
@settings(max_examples=100, deadline=None)
def test_nullspace(inst):
    F, N, A, _ = inst
    ker = nullspace(F, A, N)
    assert len(ker) == N - rank(F, A, N)
    for k in ker:
        for a in A:
            s = 0
            for x, y in zip(a, k):
                s = F.add(s, F.mul(x, y))
            assert s == 0


@pytest.mark.parametrize("q,N,k,expected", [(2, 4, 2, 35), (3, 3, 1, 13), (2, 3, 1, 7), (4, 3, 1, 21),
                                            (2, 5, 2, 155)])
def test_subspace_counts(q, N, k, expected):
    F = field_of_order(q)
    assert gaussian_binomial(q, N, k) == expected
    subs = list(enumerate_subspaces(F, N, k))
    assert len(subs) == expected == len(set(subs))
    assert all(S.dim == k for S in subs)


def test_counts_match_brute_force_spans():
    F = field_of_order(2)
    N = 4
    vecs = list(product(range(2), repeat=N))
    planes = {vector_set(F, [a, b], N) for a in vecs for b in vecs}
    planes = {S for S in planes if len(S) == 4}
    assert len(planes) == 35


def test_mat_inverse():
    F = field_of_order(5)
    M = [[1, 2, 0], [0, 1, 4], [3, 0, 2]]
    I = mat_mul(F, M, mat_inverse(F, M))
    assert I == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    with pytest.raises(SubspaceError):
        mat_inverse(F, [[1, 2, 0], [0, 1, 4], [3, 0, 1]])  # determinant 25


def test_quotient_chart_round_trip():
    F = field_of_order(3)
    U = Subspace.span(F, 4, [[1, 0, 0, 0]])
    Us = Subspace.span(F, 4, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]])
    ch = QuotientChart(U, Us)
    assert ch.dim == 2
    between = list(subspaces_between(U, Us))
    assert len(between) == 1 + 4 + 1
    for W in between:
        assert U <= W <= Us
        assert ch.lift(ch.image(W)) == W
        assert ch.image(W).dim == W.dim - 1


def test_complement():
    F = field_of_order(4)
    U = Subspace.span(F, 4, [[1, 2, 0, 0]])
    C = complement(U, Subspace.full(F, 4))
    assert (C & U).dim == 0 and (C + U).dim == 4
    with pytest.raises(SubspaceError):
        complement(Subspace.full(F, 4), U)


def test_budget_and_range_errors(monkeypatch):
    F = field_of_order(2)
    with pytest.raises(SubspaceError):
        list(enumerate_subspaces(F, 3, 4))
    monkeypatch.setenv("PHAN_BUDGET", "10")
    with pytest.raises(TooLarge):
        list(enumerate_subspaces(F, 4, 2))


def test_json_round_trip():
    F = field_of_order(9)
    U = Subspace.span(F, 3, [[1, 4, 7], [0, 1, 2]])
    assert Subspace.from_json(F, U.to_json()) == U
