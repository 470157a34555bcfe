"""(sigma, epsilon)-hermitian forms given by Gram matrices.

Vectors are rows; ``f(x, y) = x G sigma(y)^T`` with sigma applied entrywise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .field import GF, FieldError, Involution
from .subspace import QuotientChart, Subspace, mat_mul, nullspace, rank


class FormError(ValueError):
    pass


class Form:
    def __init__(self, gram: Sequence[Sequence[int]], involution: Involution, epsilon: int = 1,
                 check: bool = True):
        self.field: GF = involution.field
        self.sigma = involution
        self.epsilon = 1 if epsilon in (1, 1 % self.field.p) else -1
        self.gram: tuple[tuple[int, ...], ...] = tuple(tuple(r) for r in gram)
        self.dim = len(self.gram)
        if any(len(r) != self.dim for r in self.gram):
            raise FormError("Gram matrix is not square")
        if check and not self.is_hermitian_symmetric():
            raise FormError("Gram matrix violates G = eps * sigma(G)^T")

    def is_hermitian_symmetric(self) -> bool:
        F, s = self.field, self.sigma
        eps = 1 if self.epsilon == 1 else F.neg(1)
        for i in range(self.dim):
            for j in range(self.dim):
                if self.gram[i][j] != F.mul(eps, s.raw(self.gram[j][i])):
                    return False
        return True

    # -- evaluation ---------------------------------------------------
    def _sigma_vec(self, y):
        raw = self.sigma.raw
        return [raw(a) for a in y]

    def row_times_gram(self, x: Sequence[int]) -> list[int]:
        F = self.field
        add, mul = F.add, F.mul
        out = [0] * self.dim
        for a, row in zip(x, self.gram):
            if a:
                out = [add(o, mul(a, g)) if g else o for o, g in zip(out, row)]
        return out

    def __call__(self, x: Sequence[int], y: Sequence[int]) -> int:
        if len(x) != self.dim or len(y) != self.dim:
            raise FormError(f"vectors must have length {self.dim}")
        F = self.field
        add, mul = F.add, F.mul
        xg = self.row_times_gram(x)
        s = 0
        raw = self.sigma.raw
        for a, b in zip(xg, y):
            if a and b:
                s = add(s, mul(a, raw(b)))
        return s

    def eval(self, x, y) -> int:
        return self(x, y)

    def restricted_gram(self, basis: Sequence[Sequence[int]]) -> list[list[int]]:
        return [[self(u, v) for v in basis] for u in basis]

    # -- subspace operations -----------------------------------------
    def perp(self, U: Subspace) -> Subspace:
        """U^perp = {v : f(u, v) = 0 for all u in U}."""
        if U.ambient != self.dim:
            raise FormError("ambient dimension mismatch")
        if not U.rows:
            return Subspace.full(self.field, self.dim)
        rows = [self.row_times_gram(u) for u in U.rows]
        ann = nullspace(self.field, rows, self.dim)
        # f(u, v) = (uG) . sigma(v); solve for sigma(v), then undo sigma
        return Subspace.span(self.field, self.dim, [self._sigma_vec(w) for w in ann])

    def radical(self, U: Subspace | None = None) -> Subspace:
        U = U if U is not None else Subspace.full(self.field, self.dim)
        return U & self.perp(U)

    def is_nondegenerate_on(self, U: Subspace) -> bool:
        if not U.rows:
            return True
        return rank(self.field, self.restricted_gram(U.rows), U.dim) == U.dim

    def is_nondegenerate(self) -> bool:
        return rank(self.field, self.gram, self.dim) == self.dim

    def is_totally_isotropic(self, U: Subspace) -> bool:
        rows = U.rows
        for i, u in enumerate(rows):
            ug = self.row_times_gram(u)
            # f(u, v) = 0 iff f(v, u) = 0, so pairs with i <= j suffice
            for v in rows[i:]:
                if self._dot_sigma(ug, v):
                    return False
        return True

    def _dot_sigma(self, xg, y) -> int:
        F = self.field
        add, mul, raw = F.add, F.mul, self.sigma.raw
        s = 0
        for a, b in zip(xg, y):
            if a and b:
                s = add(s, mul(a, raw(b)))
        return s

    def is_isotropic_vector(self, v) -> bool:
        return self(v, v) == 0

    # -- derived forms ------------------------------------------------
    def pullback(self, M: Sequence[Sequence[int]]) -> "Form":
        """Form on F^r given by (x, y) -> f(x M, y M); M has r rows of length dim."""
        F = self.field
        MG = mat_mul(F, M, self.gram)
        sMT = [list(r) for r in zip(*[self._sigma_vec(m) for m in M])] if M else []
        G = mat_mul(F, MG, sMT) if M else []
        return Form(G, self.sigma, self.epsilon, check=False)

    def on_chart(self, chart: QuotientChart) -> "Form":
        """(a + U, b + U)' = f(a, b) for a, b in the chart's complement basis."""
        return self.pullback(chart.basis)

    def scaled(self, c: int) -> "Form":
        F = self.field
        return Form([[F.mul(c, g) for g in r] for r in self.gram], self.sigma, self.epsilon, check=False)

    def __eq__(self, other):
        return (isinstance(other, Form) and self.gram == other.gram and self.sigma == other.sigma
                and self.epsilon == other.epsilon)

    def __hash__(self):
        return hash((self.gram, self.sigma.kind, self.epsilon))

    def __repr__(self):
        return f"Form(dim={self.dim}, sigma={self.sigma.kind}, eps={self.epsilon}, gram={self.gram})"

    # -- serialization ------------------------------------------------
    def to_json(self) -> dict:
        F = self.field
        return {"gram": [[F.coeffs(g) for g in r] for r in self.gram], "sigma": self.sigma.kind,
                "epsilon": self.epsilon}

    @classmethod
    def from_json(cls, field: GF, d: dict) -> "Form":
        gram = [[field.from_coeffs(c) if isinstance(c, list) else field.from_int(c) for c in r] for r in d["gram"]]
        return cls(gram, Involution(field, d.get("sigma", "id")), d.get("epsilon", 1))


def zero_form(field: GF, dim: int, sigma: Involution | None = None) -> Form:
    return Form([[0] * dim for _ in range(dim)], sigma or Involution(field, "id"))


def identity_form(field: GF, dim: int, sigma: Involution | None = None) -> Form:
    return Form([[1 if i == j else 0 for j in range(dim)] for i in range(dim)], sigma or Involution(field, "id"))


@dataclass(frozen=True)
class AmbientModel:
    kind: str  # "symplectic" or "split-symmetric"
    n: int
    form: Form

    @property
    def dim(self) -> int:
        return self.form.dim

    @property
    def field(self) -> GF:
        return self.form.field

    @property
    def type_letter(self) -> str:
        return "C" if self.kind == "symplectic" else "B"

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n}


def standard_model(kind: str, n: int, field: GF) -> AmbientModel:
    """Symplectic F^{2n} (hyperbolic pairs e_i, f_i) or split symmetric F^{2n+1} (pairs plus x)."""
    ident = Involution(field, "id")
    if kind in ("symplectic", "C", "symplectic-2n"):
        N = 2 * n
        m1 = field.neg(1)
        G = [[0] * N for _ in range(N)]
        for i in range(n):
            G[i][n + i] = 1
            G[n + i][i] = m1
        return AmbientModel("symplectic", n, Form(G, ident, -1))
    if kind in ("split-symmetric", "B", "split-symmetric-2n+1"):
        if field.p == 2:
            raise FieldError("split symmetric (type B) ambients need odd characteristic")
        N = 2 * n + 1
        G = [[0] * N for _ in range(N)]
        for i in range(n):
            G[i][n + i] = 1
            G[n + i][i] = 1
        G[2 * n][2 * n] = 1
        return AmbientModel("split-symmetric", n, Form(G, ident, 1))
    raise FormError(f"unknown ambient kind {kind!r}")
