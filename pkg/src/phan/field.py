"""Finite fields F_{p^d} in the polynomial basis, with the involution x -> x^q.

Elements are handled internally as integers ``0 <= e < p**d`` encoding the
little-endian coefficient vector in base ``p``; ``FieldElement`` wraps such an
integer for the public, operator-based API.  Multiplication goes through
discrete log / exponent tables, which leaves the observable representation
untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

MAX_ORDER = 2**20


class FieldError(ValueError):
    pass


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _poly_mod(a: list[int], m: list[int], p: int) -> list[int]:
    """Remainder of a modulo the monic-or-not polynomial m (little endian)."""
    a = [c % p for c in a]
    dm = len(m) - 1
    lead_inv = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm and any(a):
        if a[-1] == 0:
            a.pop()
            continue
        c = a[-1] * lead_inv % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        a.pop()
    while a and a[-1] == 0:
        a.pop()
    return a


def is_irreducible(modulus: Sequence[int], p: int) -> bool:
    """Brute-force irreducibility test: no monic factor of degree <= d/2."""
    m = [c % p for c in modulus]
    d = len(m) - 1
    if d < 1 or m[-1] == 0:
        return False
    if d == 1:
        return True
    for k in range(1, d // 2 + 1):
        for low in product(range(p), repeat=k):
            if not _poly_mod(m, list(low) + [1], p):
                return False
    return True


def default_modulus(p: int, degree: int) -> tuple[int, ...]:
    """Lexicographically first monic irreducible polynomial (little endian, with leading 1)."""
    if degree == 1:
        return (0, 1)
    for low in product(range(p), repeat=degree):
        low = low[::-1]
        if low[0] == 0:
            continue
        cand = tuple(low) + (1,)
        if is_irreducible(cand, p):
            return cand
    raise FieldError(f"no irreducible polynomial of degree {degree} over F_{p}")


class GF:
    """The field F_{p^degree} = F_p[t]/(modulus)."""

    def __init__(self, p: int, degree: int = 1, modulus: Sequence[int] | None = None):
        if not _is_prime(p):
            raise FieldError(f"characteristic {p} is not prime")
        if degree < 1:
            raise FieldError("degree must be positive")
        if p**degree > MAX_ORDER:
            raise FieldError(f"field order {p}^{degree} exceeds the supported maximum {MAX_ORDER}")
        if modulus is None:
            modulus = default_modulus(p, degree)
        modulus = [int(c) % p for c in modulus]
        if len(modulus) == degree:
            modulus = modulus + [1]
        if len(modulus) != degree + 1 or modulus[-1] != 1:
            raise FieldError(f"modulus {modulus} is not monic of degree {degree}")
        if not is_irreducible(modulus, p):
            raise FieldError(f"modulus {modulus} is reducible over F_{p}")
        self.p = p
        self.degree = degree
        self.modulus = tuple(modulus)
        self.order = p**degree
        self._build_tables()

    # -- construction -------------------------------------------------
    def _mul_slow(self, a: int, b: int) -> int:
        if self.p == 2:
            m = sum(c << i for i, c in enumerate(self.modulus))
            r = 0
            while b:
                if b & 1:
                    r ^= a
                b >>= 1
                a <<= 1
                if a >> self.degree & 1:
                    a ^= m
            return r
        ca, cb = self.coeffs(a), self.coeffs(b)
        prod = [0] * (2 * self.degree - 1)
        for i, x in enumerate(ca):
            if x:
                for j, y in enumerate(cb):
                    prod[i + j] += x * y
        return self.from_coeffs(_poly_mod(prod, list(self.modulus), self.p))

    def _pow_slow(self, a: int, k: int) -> int:
        r = 1
        while k:
            if k & 1:
                r = self._mul_slow(r, a)
            a = self._mul_slow(a, a)
            k >>= 1
        return r

    def _build_tables(self):
        q1 = self.order - 1
        p = self.p
        if self.degree == 1:
            g = 1 if p == 2 else next(
                g for g in range(2, p) if all(pow(g, q1 // r, p) != 1 for r in _prime_factors(q1))
            )
            exp = [1] * q1
            for i in range(1, q1):
                exp[i] = exp[i - 1] * g % p
        else:
            g = next(g for g in range(p, self.order) if all(
                self._pow_slow(g, q1 // r) != 1 for r in _prime_factors(q1)))
            exp = [1] * q1
            for i in range(1, q1):
                exp[i] = self._mul_slow(exp[i - 1], g)
        log = [0] * self.order
        for i, x in enumerate(exp):
            log[x] = i
        self._exp = exp + exp  # doubled so log sums need no reduction
        self._log = log
        if self.degree > 1 and p != 2 and self.order <= 1024:
            self._add_table = [[self._add_slow(a, b) for b in range(self.order)] for a in range(self.order)]
        else:
            self._add_table = None
        self._neg = [self._neg_slow(a) for a in range(self.order)]

    def _add_slow(self, a: int, b: int) -> int:
        p = self.p
        r, m = 0, 1
        while a or b:
            r += ((a % p + b % p) % p) * m
            a //= p
            b //= p
            m *= p
        return r

    def _neg_slow(self, a: int) -> int:
        p = self.p
        r, m = 0, 1
        while a:
            r += ((-a) % p) * m
            a //= p
            m *= p
        return r

    # -- encoding -----------------------------------------------------
    def coeffs(self, a: int) -> list[int]:
        out = []
        for _ in range(self.degree):
            out.append(a % self.p)
            a //= self.p
        return out

    def from_coeffs(self, cs: Sequence[int]) -> int:
        if len(cs) > self.degree:
            cs = _poly_mod(list(cs), list(self.modulus), self.p)
        r = 0
        for c in reversed(list(cs)):
            r = r * self.p + (int(c) % self.p)
        return r

    def from_int(self, n: int) -> int:
        """Image of the integer n under Z -> F_p <= F."""
        return n % self.p

    def __call__(self, value) -> "FieldElement":
        if isinstance(value, FieldElement):
            self._check(value)
            return value
        if isinstance(value, int):
            return FieldElement(self, self.from_int(value))
        return FieldElement(self, self.from_coeffs(value))

    def element(self, code: int) -> "FieldElement":
        if not 0 <= code < self.order:
            raise FieldError(f"{code} is not an element code of F_{self.order}")
        return FieldElement(self, code)

    def elements(self) -> list["FieldElement"]:
        return [FieldElement(self, e) for e in range(self.order)]

    @property
    def gen(self) -> "FieldElement":
        """The class of t; for a prime field, the primitive element used by the log tables."""
        return FieldElement(self, self.p if self.degree > 1 else self._exp[1 % (self.order - 1)])

    def _check(self, x: "FieldElement"):
        if x.field != self:
            raise FieldError("operands belong to different fields")

    # -- raw integer arithmetic --------------------------------------
    def add(self, a: int, b: int) -> int:
        if self.degree == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        if self._add_table is not None:
            return self._add_table[a][b]
        return self._add_slow(a, b)

    def neg(self, a: int) -> int:
        return self._neg[a]

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self._neg[b])

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        if self.degree == 1:
            return a * b % self.p
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.degree == 1:
            return pow(a, self.p - 2, self.p)
        return self._exp[(self.order - 1 - self._log[a]) % (self.order - 1)]

    def power(self, a: int, k: int) -> int:
        if a == 0:
            if k <= 0:
                raise ZeroDivisionError("0 to a non-positive power")
            return 0
        return self._exp[(self._log[a] * k) % (self.order - 1)]

    def is_square(self, a: int) -> bool:
        if a == 0 or self.p == 2:
            return True
        return self._log[a] % 2 == 0

    # -- misc ---------------------------------------------------------
    def descriptor(self) -> dict:
        return {"p": self.p, "degree": self.degree, "modulus": list(self.modulus)}

    @classmethod
    def from_descriptor(cls, d: dict) -> "GF":
        return get_field(d["p"], d.get("degree", 1), tuple(d["modulus"]) if "modulus" in d else None)

    def __eq__(self, other):
        return isinstance(other, GF) and (self.p, self.degree, self.modulus) == (
            other.p, other.degree, other.modulus)

    def __hash__(self):
        return hash((self.p, self.degree, self.modulus))

    def __repr__(self):
        return f"GF({self.p}^{self.degree}, modulus={list(self.modulus)})"


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def get_field(p: int, degree: int = 1, modulus: tuple[int, ...] | None = None) -> GF:
    """Cached field constructor; fields are immutable so sharing is safe."""
    return GF(p, degree, modulus)


def field_of_order(order: int) -> GF:
    for p in range(2, order + 1):
        if order % p == 0:
            break
    d, n = 0, order
    while n % p == 0:
        n //= p
        d += 1
    if n != 1 or not _is_prime(p):
        raise FieldError(f"{order} is not a prime power")
    return get_field(p, d)


@dataclass(frozen=True)
class FieldElement:
    field: GF
    value: int

    def _other(self, y) -> int:
        if isinstance(y, int):
            return self.field.from_int(y)
        if y.field != self.field:
            raise FieldError("operands belong to different fields")
        return y.value

    def __add__(self, y):
        return FieldElement(self.field, self.field.add(self.value, self._other(y)))

    __radd__ = __add__

    def __sub__(self, y):
        return FieldElement(self.field, self.field.sub(self.value, self._other(y)))

    def __rsub__(self, y):
        return FieldElement(self.field, self.field.sub(self._other(y), self.value))

    def __mul__(self, y):
        return FieldElement(self.field, self.field.mul(self.value, self._other(y)))

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.value))

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.value))

    def __truediv__(self, y):
        return self * FieldElement(self.field, self._other(y)).inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return FieldElement(self.field, 1)
        return FieldElement(self.field, self.field.power(self.value, k))

    def __bool__(self):
        return self.value != 0

    def __eq__(self, y):
        if isinstance(y, int):
            return self.value == self.field.from_int(y)
        return isinstance(y, FieldElement) and y.field == self.field and y.value == self.value

    def __hash__(self):
        return hash((self.field, self.value))

    @property
    def coeffs(self) -> list[int]:
        return self.field.coeffs(self.value)

    def __repr__(self):
        cs = self.coeffs
        terms = []
        for i, c in enumerate(cs):
            if c:
                mono = "" if i == 0 else ("t" if i == 1 else f"t^{i}")
                terms.append(f"{c}{mono}" if (c != 1 or i == 0) else mono)
        return "+".join(reversed(terms)) or "0"


def field_arith(op: str, x: FieldElement, y: FieldElement | None = None) -> FieldElement:
    """Dispatch add/sub/mul/inv/neg on field elements."""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "inv":
        return x.inverse()
    if op == "neg":
        return -x
    raise FieldError(f"unknown operation {op!r}")


class Involution:
    """sigma of order 1 or 2: identity, or x -> x^q on F_{q^2}."""

    def __init__(self, field: GF, kind: str = "id"):
        if kind in ("identity",):
            kind = "id"
        if kind in ("frobenius-square-root", "frobenius"):
            kind = "frob"
        if kind not in ("id", "frob"):
            raise FieldError(f"unknown involution kind {kind!r}")
        if kind == "frob" and field.degree % 2:
            raise FieldError("x -> x^q needs a field of even degree")
        self.field = field
        self.kind = kind
        self.q = field.p ** (field.degree // 2) if kind == "frob" else None
        if kind == "frob":
            self._table = [field.power(a, self.q) if a else 0 for a in range(field.order)]
        else:
            self._table = None

    @property
    def is_identity(self) -> bool:
        return self.kind == "id"

    def raw(self, a: int) -> int:
        return a if self._table is None else self._table[a]

    def __call__(self, x):
        if isinstance(x, FieldElement):
            return FieldElement(self.field, self.raw(x.value))
        return self.raw(x)

    def fixed_field_order(self) -> int:
        return self.q if self.kind == "frob" else self.field.order

    def __eq__(self, other):
        return isinstance(other, Involution) and other.field == self.field and other.kind == self.kind

    def __hash__(self):
        return hash((self.field, self.kind))

    def __repr__(self):
        return f"Involution({self.kind}, {self.field!r})"


def sigma_apply(inv: Involution, x: FieldElement) -> FieldElement:
    return inv(x)


def norm_trace(inv: Involution, x: FieldElement) -> tuple[FieldElement, FieldElement]:
    """(x * x^q, x + x^q) for the quadratic extension; both land in the fixed field."""
    if inv.is_identity:
        raise FieldError("norm/trace need the non-trivial involution")
    s = inv(x)
    return x * s, x + s
