import pytest
import sympy
from hypothesis import given, settings, strategies as st

from phan.field import FieldError, GF, Involution, field_of_order, get_field, is_irreducible, norm_trace

ORDERS = [2, 3, 4, 5, 7, 8, 9, 16, 25, 27, 49]


def sympy_mul(F, a, b):
    """Independent product: multiply coefficient polynomials with sympy and reduce modulo the field modulus."""
    x = sympy.Symbol("x")
    pa = sympy.Poly(list(reversed(F.coeffs(a))), x, modulus=F.p)
    pb = sympy.Poly(list(reversed(F.coeffs(b))), x, modulus=F.p)
    m = sympy.Poly(list(reversed(F.modulus)), x, modulus=F.p)
    r = (pa * pb).rem(m)
    cs = [int(c) % F.p for c in reversed(r.all_coeffs())]
    return F.from_coeffs(cs)


@pytest.mark.parametrize("q", ORDERS)
def test_field_axioms_exhaustive_small(q):
    F = field_of_order(q)
    assert F.order == q
    els = range(q)
    for a in els:
        assert F.add(a, F.neg(a)) == 0
        assert F.mul(a, 1) == a
        if a:
            assert F.mul(a, F.inv(a)) == 1
    # multiplicative group is cyclic of order q - 1
    g = F.gen.value
    if F.degree == 1:
        assert len({F.power(g, k) for k in range(q - 1)}) == q - 1


@pytest.mark.parametrize("q", [4, 8, 9, 16, 25, 27])
def test_multiplication_matches_sympy(q):
    F = field_of_order(q)
    for a in range(q):
        for b in range(q):
            assert F.mul(a, b) == sympy_mul(F, a, b)


@pytest.mark.parametrize("q", [2, 3, 5, 7, 11, 13])
def test_prime_field_is_integers_mod_p(q):
    F = field_of_order(q)
    for a in range(q):
        for b in range(q):
            assert F.add(a, b) == (a + b) % q
            assert F.mul(a, b) == (a * b) % q


@given(st.sampled_from(ORDERS), st.data())
@settings(max_examples=200, deadline=None)
def test_distributivity(q, data):
    F = field_of_order(q)
    a, b, c = (data.draw(st.integers(0, q - 1)) for _ in range(3))
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))


@pytest.mark.parametrize("q,fixed", [(4, 2), (9, 3), (16, 4), (25, 5), (49, 7)])
def test_frobenius_involution_fixed_field(q, fixed):
    F = field_of_order(q)
    s = Involution(F, "frob")
    assert sum(1 for a in range(q) if s.raw(a) == a) == fixed
    assert s.fixed_field_order() == fixed
    for a in range(q):
        assert s.raw(s.raw(a)) == a
    for a in range(q):
        for b in range(0, q, 3):
            assert s.raw(F.mul(a, b)) == F.mul(s.raw(a), s.raw(b))


def test_norm_and_trace_land_in_fixed_field():
    F = field_of_order(25)
    s = Involution(F, "frob")
    for x in F.elements():
        n, t = norm_trace(s, x)
        assert s(n) == n and s(t) == t


def test_element_operators():
    F = field_of_order(9)
    x = F.gen
    assert x * x.inverse() == F(1)
    assert (x ** 8) == F(1)
    assert x - x == F(0)
    assert x / x == F(1)


def test_errors():
    with pytest.raises(FieldError):
        GF(4)
    with pytest.raises(FieldError):
        GF(2, 2, [1, 0, 1])  # t^2 + 1 = (t + 1)^2 over F_2
    with pytest.raises(FieldError):
        Involution(field_of_order(27), "frob")
    with pytest.raises(FieldError):
        field_of_order(12)
    with pytest.raises(FieldError):
        field_of_order(9).element(9)
    with pytest.raises(FieldError):
        field_of_order(3)(1) + field_of_order(5)(1)


def test_irreducibility_matches_sympy():
    x = sympy.Symbol("x")
    for p in (2, 3):
        for deg in (2, 3):
            for code in range(p**deg):
                cs = [(code // p**i) % p for i in range(deg)] + [1]
                expect = sympy.Poly(list(reversed(cs)), x, modulus=p).is_irreducible
                assert is_irreducible(cs, p) == expect


def test_descriptor_round_trip():
    F = get_field(2, 4)
    assert GF.from_descriptor(F.descriptor()) == F
