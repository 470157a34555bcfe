"""Subspaces of F^N in canonical reduced row-echelon form.

Vectors are tuples of raw field codes (see ``phan.field``).  A ``Subspace``
is hashable and two subspaces compare equal exactly when they have the same
span, since the basis is always stored in RREF.
"""

from __future__ import annotations

import os
from functools import cached_property
from itertools import combinations, product
from typing import Callable, Iterable, Iterator, Sequence

from .field import GF

Vector = tuple[int, ...]

DEFAULT_BUDGET = 5_000_000


class SubspaceError(ValueError):
    pass


class TooLarge(RuntimeError):
    """Raised when an enumeration would exceed the configured work budget."""

    def __init__(self, what: str, estimate: int, budget: int):
        super().__init__(f"{what}: estimated {estimate} items exceeds budget {budget}")
        self.estimate = estimate
        self.budget = budget


def work_budget(default: int = DEFAULT_BUDGET) -> int:
    env = os.environ.get("PHAN_BUDGET")
    return int(env) if env else default


# -- raw linear algebra -------------------------------------------------------

def rref(F: GF, rows: Iterable[Sequence[int]], ncols: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row-echelon form; returns (nonzero rows, pivot columns)."""
    M = [list(r) for r in rows]
    add, mul, neg, inv = F.add, F.mul, F.neg, F.inv
    pivots: list[int] = []
    r = 0
    nrows = len(M)
    for c in range(ncols):
        if r == nrows:
            break
        piv = None
        for i in range(r, nrows):
            if M[i][c]:
                piv = i
                break
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        row = M[r]
        if row[c] != 1:
            s = inv(row[c])
            row = [mul(s, x) for x in row]
            M[r] = row
        for i in range(nrows):
            if i != r:
                f = M[i][c]
                if f:
                    nf = neg(f)
                    Mi = M[i]
                    M[i] = [add(a, mul(nf, b)) if b else a for a, b in zip(Mi, row)]
        pivots.append(c)
        r += 1
    return M[:r], pivots


def rank(F: GF, rows: Sequence[Sequence[int]], ncols: int) -> int:
    return len(rref(F, rows, ncols)[1])


def reduce_vector(F: GF, v: Sequence[int], rows: Sequence[Sequence[int]], pivots: Sequence[int]) -> list[int]:
    """Reduce v against an RREF basis; the result is zero iff v lies in the span."""
    v = list(v)
    add, mul, neg = F.add, F.mul, F.neg
    for row, c in zip(rows, pivots):
        f = v[c]
        if f:
            nf = neg(f)
            v = [add(a, mul(nf, b)) if b else a for a, b in zip(v, row)]
    return v


def mat_mul(F: GF, A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> list[list[int]]:
    add, mul = F.add, F.mul
    cols = list(zip(*B)) if B else []
    out = []
    for a in A:
        row = []
        for col in cols:
            s = 0
            for x, y in zip(a, col):
                if x and y:
                    s = add(s, mul(x, y))
            row.append(s)
        out.append(row)
    return out


def vec_mat(F: GF, v: Sequence[int], B: Sequence[Sequence[int]], ncols: int) -> list[int]:
    add, mul = F.add, F.mul
    out = [0] * ncols
    for x, row in zip(v, B):
        if x:
            out = [add(o, mul(x, b)) if b else o for o, b in zip(out, row)]
    return out


def solve_left(F: GF, basis: Sequence[Sequence[int]], v: Sequence[int]) -> list[int] | None:
    """Coefficients c with sum c_i basis_i = v (basis linearly independent), or None."""
    k = len(basis)
    n = len(v)
    # augmented transpose system: columns are basis vectors
    rows = [[basis[i][j] for i in range(k)] + [v[j]] for j in range(n)]
    R, piv = rref(F, rows, k + 1)
    if k in piv:
        return None
    c = [0] * k
    for row, p in zip(R, piv):
        c[p] = row[k]
    return c


def nullspace(F: GF, rows: Sequence[Sequence[int]], ncols: int) -> list[list[int]]:
    """Basis of {x : M x = 0} (x as column), i.e. the annihilator of the row space."""
    R, piv = rref(F, rows, ncols)
    free = [c for c in range(ncols) if c not in set(piv)]
    out = []
    neg = F.neg
    for f in free:
        x = [0] * ncols
        x[f] = 1
        for row, p in zip(R, piv):
            x[p] = neg(row[f])
        out.append(x)
    return out


def mat_inverse(F: GF, M: Sequence[Sequence[int]]) -> list[list[int]]:
    n = len(M)
    aug = [list(M[i]) + [1 if j == i else 0 for j in range(n)] for i in range(n)]
    R, piv = rref(F, aug, 2 * n)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise SubspaceError("matrix is singular")
    return [row[n:] for row in R[:n]]


# -- Subspace -----------------------------------------------------------------

class Subspace:
    __slots__ = ("field", "ambient", "rows", "pivots", "_hash", "__dict__")

    def __init__(self, field: GF, ambient: int, rows, pivots):
        self.field = field
        self.ambient = ambient
        self.rows: tuple[Vector, ...] = tuple(tuple(r) for r in rows)
        self.pivots: tuple[int, ...] = tuple(pivots)
        self._hash = hash((ambient, self.rows))

    @classmethod
    def span(cls, field: GF, ambient: int, vectors: Iterable[Sequence[int]]) -> "Subspace":
        vecs = [list(v) for v in vectors]
        for v in vecs:
            if len(v) != ambient:
                raise SubspaceError(f"vector of length {len(v)} in ambient dimension {ambient}")
        R, piv = rref(field, vecs, ambient)
        return cls(field, ambient, R, piv)

    @classmethod
    def zero(cls, field: GF, ambient: int) -> "Subspace":
        return cls(field, ambient, (), ())

    @classmethod
    def full(cls, field: GF, ambient: int) -> "Subspace":
        return cls(field, ambient, [tuple(1 if i == j else 0 for j in range(ambient)) for i in range(ambient)],
                   range(ambient))

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        return (isinstance(other, Subspace) and self._hash == other._hash and self.ambient == other.ambient
                and self.rows == other.rows and self.field == other.field)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient}, rows={list(self.rows)})"

    def _check(self, other: "Subspace"):
        if other.ambient != self.ambient or other.field != self.field:
            raise SubspaceError("subspaces live in different ambient spaces")

    def contains_vector(self, v: Sequence[int]) -> bool:
        return not any(reduce_vector(self.field, v, self.rows, self.pivots))

    def __le__(self, other: "Subspace") -> bool:
        self._check(other)
        if self.dim > other.dim:
            return False
        return all(other.contains_vector(r) for r in self.rows)

    def __lt__(self, other: "Subspace") -> bool:
        return self.dim < other.dim and self <= other

    def __ge__(self, other):
        return other <= self

    def __gt__(self, other):
        return other < self

    def __add__(self, other: "Subspace") -> "Subspace":
        """The span <A, B>."""
        self._check(other)
        if not other.rows:
            return self
        if not self.rows:
            return other
        return Subspace.span(self.field, self.ambient, self.rows + other.rows)

    def join(self, *others: "Subspace") -> "Subspace":
        rows = list(self.rows)
        for o in others:
            self._check(o)
            rows.extend(o.rows)
        return Subspace.span(self.field, self.ambient, rows)

    @cached_property
    def annihilator(self) -> "Subspace":
        """{x : sum x_i u_i = 0 for all u} under the standard dot product."""
        return Subspace.span(self.field, self.ambient, nullspace(self.field, self.rows, self.ambient))

    def __and__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if self <= other:
            return self
        if other <= self:
            return other
        return (self.annihilator + other.annihilator).annihilator

    def meet(self, other: "Subspace") -> "Subspace":
        return self & other

    def sum_dim(self, other: "Subspace") -> int:
        return rank(self.field, self.rows + other.rows, self.ambient)

    def meet_dim(self, other: "Subspace") -> int:
        return self.dim + other.dim - self.sum_dim(other)

    def basis(self) -> list[Vector]:
        return list(self.rows)

    def to_json(self) -> dict:
        F = self.field
        return {"ambient": self.ambient, "basis": [[F.coeffs(x) for x in r] for r in self.rows]}

    @classmethod
    def from_json(cls, field: GF, d: dict) -> "Subspace":
        vecs = [[field.from_coeffs(c) if isinstance(c, list) else field.from_int(c) for c in r] for r in d["basis"]]
        return cls.span(field, d["ambient"], vecs)


def canonicalize(field: GF, ambient: int, basis: Iterable[Sequence[int]]) -> Subspace:
    return Subspace.span(field, ambient, basis)


def lattice_ops(A: Subspace, B: Subspace) -> tuple[Subspace, Subspace]:
    return A + B, A & B


def complement(U: Subspace, inside: Subspace) -> Subspace:
    """Greedy complement of U in `inside`, drawn from the RREF rows of `inside`."""
    if not U <= inside:
        raise SubspaceError("U is not contained in the given space")
    F = U.field
    rows = [list(r) for r in U.rows]
    R, piv = rref(F, rows, U.ambient)
    chosen = []
    for v in inside.rows:
        if any(reduce_vector(F, v, R, piv)):
            chosen.append(v)
            R, piv = rref(F, R + [list(v)], U.ambient)
    return Subspace.span(F, U.ambient, chosen)


class QuotientChart:
    """Coordinates on sup/sub via a fixed complement basis of sub in sup."""

    def __init__(self, sub: Subspace, sup: Subspace, complement_basis: Sequence[Sequence[int]] | None = None):
        if not sub <= sup:
            raise SubspaceError("quotient chart needs sub <= sup")
        F = sub.field
        self.field = F
        self.sub = sub
        self.sup = sup
        if complement_basis is None:
            complement_basis = complement(sub, sup).rows
        self.basis: list[Vector] = [tuple(v) for v in complement_basis]
        if len(self.basis) != sup.dim - sub.dim:
            raise SubspaceError("complement basis has the wrong size")
        full = self.basis + list(sub.rows)
        self.dim = len(self.basis)
        if full:
            R, piv = rref(F, full, sub.ambient)
            if len(piv) != len(full):
                raise SubspaceError("complement basis is not independent of sub")
            square = [[v[c] for c in piv] for v in full]
            self._cols = piv
            self._inv = mat_inverse(F, square)
        else:
            self._cols = []
            self._inv = []

    def forward(self, v: Sequence[int]) -> Vector:
        """Quotient coordinates of v + sub; v must lie in sup."""
        if not self.dim:
            return ()
        w = [v[c] for c in self._cols]
        coords = vec_mat(self.field, w, self._inv, len(self._inv))
        return tuple(coords[: self.dim])

    def backward(self, c: Sequence[int]) -> Vector:
        return tuple(vec_mat(self.field, c, self.basis, self.sub.ambient))

    def image(self, W: Subspace) -> Subspace:
        """W/sub as a subspace of F^dim (W must contain sub... or be inside sup)."""
        return Subspace.span(self.field, self.dim, [self.forward(r) for r in W.rows])

    def lift(self, Q: Subspace) -> Subspace:
        """Preimage in sup of a subspace of the quotient."""
        return Subspace.span(self.field, self.sub.ambient, [self.backward(r) for r in Q.rows] + list(self.sub.rows))

    def lift_vectors(self, Q: Subspace) -> list[Vector]:
        return [self.backward(r) for r in Q.rows]


def quotient_chart(U: Subspace, Usup: Subspace) -> QuotientChart:
    return QuotientChart(U, Usup)


# -- enumeration --------------------------------------------------------------

def gaussian_binomial(q: int, n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def iter_rref(field: GF, N: int, k: int) -> Iterator[tuple[tuple[Vector, ...], tuple[int, ...]]]:
    """Raw (rows, pivots) of every k-subspace of F^N in canonical order."""
    q = field.order
    for piv in combinations(range(N), k):
        pset = set(piv)
        slots = [(i, j) for i, c in enumerate(piv) for j in range(c + 1, N) if j not in pset]
        base = [[0] * N for _ in range(k)]
        for i, c in enumerate(piv):
            base[i][c] = 1
        if not slots:
            yield tuple(tuple(r) for r in base), piv
            continue
        for vals in product(range(q), repeat=len(slots)):
            for (i, j), x in zip(slots, vals):
                base[i][j] = x
            yield tuple(tuple(r) for r in base), piv


def enumerate_subspaces(field: GF, N: int, k: int, filter: Callable[[Subspace], bool] | None = None,
                        budget: int | None = None) -> Iterator[Subspace]:
    if not 0 <= k <= N:
        raise SubspaceError(f"k={k} out of range for ambient dimension {N}")
    budget = work_budget() if budget is None else budget
    est = gaussian_binomial(field.order, N, k)
    if est > budget:
        raise TooLarge(f"enumerating {k}-subspaces of F_{field.order}^{N}", est, budget)
    for rows, piv in iter_rref(field, N, k):
        S = Subspace(field, N, rows, piv)
        if filter is None or filter(S):
            yield S


def subspaces_between(lower: Subspace, upper: Subspace, k: int | None = None,
                      chart: QuotientChart | None = None, budget: int | None = None) -> Iterator[Subspace]:
    """All W with lower <= W <= upper (optionally with dim W = k), via a quotient chart."""
    chart = chart or QuotientChart(lower, upper)
    dims = range(chart.dim + 1) if k is None else [k - lower.dim]
    for d in dims:
        if 0 <= d <= chart.dim:
            for Q in enumerate_subspaces(lower.field, chart.dim, d, budget=budget):
                yield chart.lift(Q)


def all_vectors(field: GF, N: int) -> Iterator[Vector]:
    return product(range(field.order), repeat=N)


def points(field: GF, N: int) -> list[Subspace]:
    return list(enumerate_subspaces(field, N, 1))
