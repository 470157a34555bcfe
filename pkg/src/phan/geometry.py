"""Flags, compatible form families, transversality and generalized Phan geometries.

This is where the geometry lives: transversality of subspaces to a flag with
forms, membership in generalized Phan geometries of types A, B and C, the
quotient-flag construction that identifies intervals ``U < W < U'`` with
smaller geometries, and the filtration ``Y_0 <= ... <= Y_{2n}`` together with
the link descriptions used to prove sphericity.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Sequence

from .field import GF, Involution
from .form import AmbientModel, Form, standard_model
from .subspace import (QuotientChart, Subspace, TooLarge, enumerate_subspaces, gaussian_binomial, mat_inverse,
                       mat_mul, nullspace, subspaces_between, work_budget)


class GeometryError(ValueError):
    pass


class NoWitness(Exception):
    """No vector with the requested isotropy pattern exists (a result, not a bug)."""


# -- flags and families -------------------------------------------------------

class Flag:
    """0 = V_0 <= V_1 <= ... <= V_k = V (members may repeat in quotient flags)."""

    def __init__(self, members: Sequence[Subspace], strict: bool = True):
        members = list(members)
        if not members:
            raise GeometryError("a flag needs at least 0 and V")
        F, N = members[0].field, members[0].ambient
        if members[0].dim != 0 or members[-1].dim != N:
            raise GeometryError("a flag must start at 0 and end at V")
        for a, b in zip(members, members[1:]):
            if not a <= b or (strict and a == b):
                raise GeometryError("flag members must increase")
        self.members = members
        self.field: GF = F
        self.ambient = N

    @property
    def k(self) -> int:
        return len(self.members) - 1

    def __getitem__(self, i) -> Subspace:
        return self.members[i]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __eq__(self, other):
        return isinstance(other, Flag) and self.members == other.members

    def __hash__(self):
        return hash(tuple(self.members))

    def __repr__(self):
        return f"Flag(dims={[m.dim for m in self.members]})"

    def is_self_perp(self, form: Form) -> bool:
        perps = [form.perp(V) for V in reversed(self.members)]
        return perps == self.members

    @classmethod
    def trivial(cls, field: GF, N: int) -> "Flag":
        return cls([Subspace.zero(field, N), Subspace.full(field, N)])

    def to_json(self) -> list:
        return [m.to_json() for m in self.members]

    @classmethod
    def from_json(cls, field: GF, data: list) -> "Flag":
        return cls([Subspace.from_json(field, d) for d in data])


class CompatibleFamily:
    """Forms omega_1..omega_k with Rad(omega_i restricted to V_i) = V_{i-1}."""

    def __init__(self, flag: Flag, forms: Sequence[Form], check: bool = True):
        forms = list(forms)
        if len(forms) != flag.k:
            raise GeometryError(f"flag of length {flag.k} needs {flag.k} forms, got {len(forms)}")
        sig = {f.sigma.kind for f in forms}
        if len(sig) > 1:
            raise GeometryError("all forms of a family must share sigma")
        self.flag = flag
        self.forms = forms
        self.sigma: Involution = forms[0].sigma
        if check:
            for i in range(1, flag.k + 1):
                rad = forms[i - 1].radical(flag[i])
                if rad != flag[i - 1]:
                    raise GeometryError(f"Rad omega_{i} is not V_{i - 1}")

    def __getitem__(self, i: int) -> Form:
        """omega_i, 1-based like the flag indices."""
        return self.forms[i - 1]

    def is_compatible(self) -> bool:
        return all(self.forms[i - 1].radical(self.flag[i]) == self.flag[i - 1] for i in range(1, self.flag.k + 1))

    def __eq__(self, other):
        return isinstance(other, CompatibleFamily) and self.flag == other.flag and self.forms == other.forms

    def __hash__(self):
        return hash((self.flag, tuple(self.forms)))


def adapted_basis(flag: Flag) -> list[tuple[int, ...]]:
    """Basis of V whose first dim V_i vectors span V_i."""
    basis: list[tuple[int, ...]] = []
    prev = flag[0]
    for V in flag.members[1:]:
        chart = QuotientChart(prev, V)
        basis.extend(chart.basis)
        prev = V
    return basis


def block_form(flag: Flag, i: int, block_gram: Sequence[Sequence[int]], sigma: Involution,
               basis: Sequence[Sequence[int]] | None = None) -> Form:
    """Form on V (N x N Gram) that is block_gram on the i-th block of an adapted basis and zero elsewhere.

    Restricted to V_i its radical is V_{i-1} whenever block_gram is non-degenerate.
    """
    F = flag.field
    basis = basis or adapted_basis(flag)
    N = flag.ambient
    lo, hi = flag[i - 1].dim, flag[i].dim
    Binv = mat_inverse(F, basis)  # coordinates: x -> x Binv
    E = [[0] * N for _ in range(N)]
    for a in range(hi - lo):
        for b in range(hi - lo):
            E[lo + a][lo + b] = block_gram[a][b]
    sBinvT = [list(r) for r in zip(*[[sigma.raw(x) for x in row] for row in Binv])]
    G = mat_mul(F, mat_mul(F, Binv, E), sBinvT)
    return Form(G, sigma, 1)


def random_hermitian(field: GF, d: int, sigma: Involution, rng: random.Random,
                     nondegenerate: bool = True) -> list[list[int]]:
    fixed = [x for x in range(field.order) if sigma.raw(x) == x]
    while True:
        G = [[0] * d for _ in range(d)]
        for a in range(d):
            G[a][a] = rng.choice(fixed)
            for b in range(a + 1, d):
                x = rng.randrange(field.order)
                G[a][b] = x
                G[b][a] = sigma.raw(x)
        if not nondegenerate:
            return G
        if d == 0 or Form(G, sigma, 1, check=False).is_nondegenerate():
            return G


def random_family(flag: Flag, sigma: Involution, rng: random.Random) -> CompatibleFamily:
    basis = adapted_basis(flag)
    forms = []
    for i in range(1, flag.k + 1):
        d = flag[i].dim - flag[i - 1].dim
        forms.append(block_form(flag, i, random_hermitian(flag.field, d, sigma, rng), sigma, basis))
    return CompatibleFamily(flag, forms)


def identity_family(flag: Flag, sigma: Involution) -> CompatibleFamily:
    basis = adapted_basis(flag)
    forms = []
    for i in range(1, flag.k + 1):
        d = flag[i].dim - flag[i - 1].dim
        forms.append(block_form(flag, i, [[1 if a == b else 0 for b in range(d)] for a in range(d)], sigma, basis))
    return CompatibleFamily(flag, forms)


# -- transversality -----------------------------------------------------------

def transversal_pair(U: Subspace, W: Subspace) -> bool:
    s = U.sum_dim(W)
    return s == U.ambient or s == U.dim + W.dim


@dataclass
class TransversalityProfile:
    k_U: int
    sum_dims: list[int]
    meet_dims: list[int]
    bits: list[bool]
    transversal_flag: bool
    transversal: bool | None  # to (F, omega); None when no family was given


def _sum_dims(U: Subspace, flag: Flag) -> list[int]:
    out = []
    for V in flag.members:
        if V.dim == 0:
            out.append(U.dim)
        elif V.dim == U.ambient:
            out.append(U.ambient)
        else:
            out.append(U.sum_dim(V))
    return out


def k_index(U: Subspace, flag: Flag, sums: list[int] | None = None) -> int:
    sums = sums or _sum_dims(U, flag)
    for i, (V, s) in enumerate(zip(flag.members, sums)):
        if U.dim + V.dim - s > 0:
            return i
    return flag.k  # U = 0 convention


def transversality_profile(U: Subspace, flag: Flag, family: CompatibleFamily | None = None) -> TransversalityProfile:
    N = U.ambient
    sums = _sum_dims(U, flag)
    meets = [U.dim + V.dim - s for V, s in zip(flag.members, sums)]
    bits = [m == 0 or s == N for m, s in zip(meets, sums)]
    k = k_index(U, flag, sums)
    tf = all(bits)
    verdict = None
    if family is not None:
        verdict = tf and (U.dim == 0 or family[k].is_nondegenerate_on(U & flag[k]))
    return TransversalityProfile(k, sums, meets, bits, tf, verdict)


def is_transversal_flag(U: Subspace, flag: Flag) -> bool:
    N = U.ambient
    for V in flag.members:
        if V.dim == 0 or V.dim == N:
            continue
        s = U.sum_dim(V)
        if s != N and s != U.dim + V.dim:
            return False
    return True


def is_transversal(U: Subspace, flag: Flag, family: CompatibleFamily) -> bool:
    """U transversal to (F, omega)."""
    if U.dim == 0:
        return True
    N = U.ambient
    k = None
    for i, V in enumerate(flag.members):
        if V.dim == 0:
            continue
        s = N if V.dim == N else U.sum_dim(V)
        meet = U.dim + V.dim - s
        if meet and k is None:
            k = i
        if s != N and meet:
            return False
    return family[k].is_nondegenerate_on(U & flag[k])


def is_almost_transversal(U: Subspace, flag: Flag, family: CompatibleFamily | None = None) -> bool:
    N = U.ambient
    sums = _sum_dims(U, flag)
    for V, s in zip(flag.members, sums):
        if U.dim + V.dim - s > 0 and s < N - 1:
            return False
    if family is None or U.dim == 0:
        return True
    k = k_index(U, flag, sums)
    return family[k].is_nondegenerate_on(U & flag[k])


def is_nearly_transversal(U: Subspace, flag: Flag) -> bool:
    N = U.ambient
    sums = _sum_dims(U, flag)
    for V, s in zip(flag.members, sums):
        if s != N and U.dim + V.dim - s > 1:
            return False
    return True


# -- geometry specs -----------------------------------------------------------

class GeometrySpec:
    """A generalized Phan geometry of type A, B or C."""

    def __init__(self, type_: str, flag: Flag, family: CompatibleFamily, ambient: Form | None = None,
                 n: int | None = None, validate: bool = True, witness_budget: int | None = None):
        if type_ not in ("A", "B", "C"):
            raise GeometryError(f"unknown type {type_!r}")
        self.type = type_
        self.flag = flag
        self.family = family
        self.field: GF = flag.field
        self.N = flag.ambient
        self.sigma = family.sigma
        if type_ == "A":
            self.ambient = None
            self.n = self.N - 1 if n is None else n
        else:
            if ambient is None:
                raise GeometryError(f"type {type_} needs an ambient form")
            if ambient.dim != self.N:
                raise GeometryError("ambient form and flag live in different spaces")
            self.ambient = ambient
            self.n = (self.N // 2) if n is None else n
            if type_ == "C" and self.N != 2 * self.n:
                raise GeometryError("type C needs dimension 2n")
            if type_ == "B" and self.N != 2 * self.n + 1:
                raise GeometryError("type B needs dimension 2n+1")
        self.witness: tuple[int, ...] | None = None
        if validate:
            self.validate(witness_budget)

    def validate(self, budget: int | None = None):
        if self.type != "A":
            if not self.ambient.is_nondegenerate():
                raise GeometryError("ambient form is degenerate")
            if not self.flag.is_self_perp(self.ambient):
                raise GeometryError("flag is not self-perpendicular")
        if not self.family.is_compatible():
            raise GeometryError("family is not compatible with the flag")
        self.witness = find_witness(self, budget)
        if self.witness is None:
            raise GeometryError("no omega_k-non-isotropic vector with the required ambient isotropy")

    @property
    def top_form(self) -> Form:
        return self.family[self.flag.k]

    def member_dims(self) -> range:
        if self.type == "A":
            return range(1, self.N)
        return range(1, self.n + 1)

    def contains(self, U: Subspace) -> bool:
        return membership(U, self)

    def to_json(self) -> dict:
        d = {"type": self.type, "n": self.n, "field": self.field.descriptor(), "flag": self.flag.to_json(),
             "forms": [f.to_json() for f in self.family.forms]}
        if self.ambient is not None:
            d["ambient"] = self.ambient.to_json()
        return d

    def key(self):
        return (self.type, self.flag, tuple(self.family.forms), self.ambient)

    def __eq__(self, other):
        return isinstance(other, GeometrySpec) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"GeometrySpec({self.type}_{self.n} over F_{self.field.order}, flag dims {[V.dim for V in self.flag]})"


def find_witness(spec: GeometrySpec, budget: int | None = None) -> tuple[int, ...] | None:
    """A vector that is omega_k-non-isotropic (and ambient-isotropic for type B)."""
    top = spec.top_form
    need_iso = spec.type == "B"
    F, N = spec.field, spec.N

    def good(v):
        return top(v, v) != 0 and (not need_iso or spec.ambient(v, v) == 0)

    # cheap candidates first
    cands = []
    for i in range(N):
        e = [0] * N
        e[i] = 1
        cands.append(e)
        for j in range(i + 1, N):
            for c in (1, F.neg(1)):
                v = [0] * N
                v[i], v[j] = 1, c
                cands.append(v)
    for v in cands:
        if good(v):
            return tuple(v)
    budget = work_budget(10**6) if budget is None else budget
    try:
        for P in enumerate_subspaces(F, N, 1, budget=budget):
            if good(P.rows[0]):
                return P.rows[0]
    except TooLarge:
        return None
    return None


def membership(U: Subspace, spec: GeometrySpec) -> bool:
    if spec.type == "A":
        if not 0 < U.dim < spec.N:
            return False
    else:
        if U.dim == 0 or U.dim > spec.n or not spec.ambient.is_totally_isotropic(U):
            return False
    return is_transversal(U, spec.flag, spec.family)


def member_of_all(U: Subspace, specs: Sequence[GeometrySpec]) -> bool:
    return all(membership(U, s) for s in specs)


def field_bound(specs: Sequence[GeometrySpec]) -> dict:
    """Report the |F| >= 4^{n-1} C m hypothesis of the sphericity theorem (never enforced)."""
    s = specs[0]
    F = s.field
    C = 2 if s.sigma.is_identity else s.sigma.q + 1
    bound = 4 ** (s.n - 1) * C * len(specs)
    return {"field_bound_ok": F.order >= bound, "bound": bound, "field_order": F.order}


def _candidate_count(spec: GeometrySpec) -> int:
    q = spec.field.order
    return sum(gaussian_binomial(q, spec.N, d) for d in spec.member_dims())


def geometry_vertices(specs: GeometrySpec | Sequence[GeometrySpec], budget: int | None = None) -> dict[int, list[Subspace]]:
    """Members of the intersection of the given geometries, grouped by dimension."""
    if isinstance(specs, GeometrySpec):
        specs = [specs]
    specs = list(specs)
    s0 = specs[0]
    for s in specs[1:]:
        if s.N != s0.N or s.field != s0.field or s.type != s0.type:
            raise GeometryError("intersected geometries must share type, field and ambient space")
        if s.ambient != s0.ambient:
            raise GeometryError("intersected geometries must share the ambient form")
    budget = work_budget() if budget is None else budget
    est = _candidate_count(s0)
    if est > budget:
        raise TooLarge("enumerating geometry candidates", est, budget)
    out: dict[int, list[Subspace]] = {}
    amb = s0.ambient
    for d in s0.member_dims():
        if amb is not None:
            members = [U for U in isotropic_subspaces(amb, d, budget) if all(is_transversal(U, s.flag, s.family) for s in specs)]
        else:
            members = [U for U in enumerate_subspaces(s0.field, s0.N, d, budget=budget)
                       if all(is_transversal(U, s.flag, s.family) for s in specs)]
        out[d] = members
    return out


def isotropic_subspaces(form: Form, d: int, budget: int | None = None) -> list[Subspace]:
    """All totally isotropic d-subspaces in canonical enumeration order."""
    F, N = form.field, form.dim
    if d == 0:
        return [Subspace.zero(F, N)]
    # prune: fill RREF rows one at a time and check isotropy incrementally
    from itertools import combinations, product
    budget = work_budget() if budget is None else budget
    est = gaussian_binomial(F.order, N, d)
    if est > budget:
        raise TooLarge(f"enumerating {d}-subspaces of F_{F.order}^{N}", est, budget)
    q = F.order
    out = []
    dot = form._dot_sigma
    rtg = form.row_times_gram
    for piv in combinations(range(N), d):
        pset = set(piv)
        free = [[j for j in range(c + 1, N) if j not in pset] for c in piv]

        def rows_for(i):
            for vals in product(range(q), repeat=len(free[i])):
                r = [0] * N
                r[piv[i]] = 1
                for j, x in zip(free[i], vals):
                    r[j] = x
                yield tuple(r)

        def rec(i, chosen, grams):
            if i == d:
                out.append(Subspace(F, N, chosen, piv))
                return
            for r in rows_for(i):
                rg = rtg(r)
                if dot(rg, r):
                    continue
                if any(dot(g, r) for g in grams):
                    continue
                rec(i + 1, chosen + [r], grams + [rg])

        rec(0, [], [])
    return out


# -- base case ------------------------------------------------------------------

@dataclass
class WitnessResult:
    found: bool
    witness: Subspace | None
    scanned: int
    bound_ok: bool
    bound: int


def base_case_witness(ambient: AmbientModel, forms: Sequence[Form]) -> WitnessResult:
    """Scan the isotropic points of a C_1 or B_1 ambient for a point non-isotropic for all forms.

    C_1 (basis y, z): <y> and <alpha y + z>; B_1 (basis e, f, x with Gram
    [[0,1,0],[1,0,0],[0,0,1]]): <f> and <e - beta^2/2 f + beta x>.
    """
    F = ambient.field
    if ambient.n != 1:
        raise GeometryError("base case needs rank 1")
    sigma = forms[0].sigma if forms else Involution(F, "id")
    C = 2 if sigma.is_identity else sigma.q + 1
    bound = C * len(forms)
    if ambient.kind == "symplectic":
        cands = [(1, 0)] + [(a, 1) for a in range(F.order)]
    else:
        half = F.inv(2 % F.p)
        cands = [(0, 1, 0)]
        for b in range(F.order):
            c = F.neg(F.mul(F.mul(b, b), half))
            cands.append((1, c, b))
    for i, v in enumerate(cands):
        assert ambient.form(v, v) == 0
        if all(w(v, v) != 0 for w in forms):
            return WitnessResult(True, Subspace.span(F, ambient.dim, [v]), i + 1, F.order >= bound, bound)
    return WitnessResult(False, None, len(cands), F.order >= bound, bound)


# -- quotient flags -------------------------------------------------------------

@dataclass
class QuotientFlagData:
    U: Subspace
    Usup: Subspace
    m: int
    M: int
    A: Subspace
    chart: QuotientChart
    flag: Flag  # in chart coordinates, members V'_m .. V'_M (possibly repeating)
    family: CompatibleFamily
    mode: str

    def quotient(self, W: Subspace) -> Subspace:
        return self.chart.image(W)

    def lift(self, Q: Subspace) -> Subspace:
        return self.chart.lift(Q)


def _index_m_M(U: Subspace, Usup: Subspace, flag: Flag) -> tuple[int, int]:
    m, M = None, None
    for i, V in enumerate(flag.members):
        X = (V + U) & Usup
        if X == U:
            m = i
        if X == Usup and M is None:
            M = i
    return m, M


def _orthogonal_complement_iterative(U: Subspace, Usup: Subspace, flag: Flag, family: CompatibleFamily,
                                     upto: int) -> Subspace:
    F, N = U.field, U.ambient
    A = Subspace.zero(F, N)
    for i in range(1, upto + 1):
        Vi = flag[i]
        Ui = U & Vi
        target = Usup & Vi
        need = target.dim - Ui.dim
        if A.dim == need:
            continue
        cand = family[i].perp(Ui) & target
        cur = A + Ui
        rows = list(A.rows)
        for v in cand.rows:
            if cur.dim == target.dim:
                break
            if not cur.contains_vector(v):
                rows.append(v)
                cur = cur + Subspace.span(F, N, [v])
        if cur != target:
            raise GeometryError(f"no omega_{i}-orthogonal complement of U cap V_{i} in U' cap V_{i}")
        A = Subspace.span(F, N, rows)
    return A


def is_graded_complement(A: Subspace, U: Subspace, Usup: Subspace, flag: Flag, family: CompatibleFamily) -> bool:
    """Usup cap V_i = (A cap V_i) (+) (U cap V_i), omega_i-orthogonally, for every i."""
    for i in range(1, flag.k + 1):
        Ai, Ui = A & flag[i], U & flag[i]
        if (Ai & Ui).dim or Ai + Ui != Usup & flag[i]:
            return False
        f = family[i]
        if any(f(a, u) for a in Ai.rows for u in Ui.rows):
            return False
    return True


def exists_graded_complement(U: Subspace, Usup: Subspace, flag: Flag, family: CompatibleFamily,
                             budget: int | None = None) -> Subspace | None:
    """Exhaustive search for an A as in ``is_graded_complement``; independent of the iterative construction."""
    chart = QuotientChart(Subspace.zero(U.field, U.ambient), Usup)
    for Q in enumerate_subspaces(U.field, Usup.dim, Usup.dim - U.dim, budget=budget):
        A = chart.lift(Q)
        if not (A & U).dim and is_graded_complement(A, U, Usup, flag, family):
            return A
    return None


def project_flag(U: Subspace, Usup: Subspace, flag: Flag, family: CompatibleFamily,
                 mode: str = "strict") -> QuotientFlagData:
    """Quotient flag F' and forms omega' on Usup/U with W ⋔ (F, w) iff W/U ⋔ (F', w')."""
    if not U < Usup:
        raise GeometryError("project_flag needs U < U'")
    if mode == "strict":
        if not is_transversal(U, flag, family):
            raise GeometryError("U is not transversal to (F, omega)")
        if not is_transversal_flag(Usup, flag):
            raise GeometryError("U' is not transversal to F")
    elif mode == "generalized":
        if not is_almost_transversal(U, flag, family):
            raise GeometryError("U is not almost transversal to (F, omega)")
        if not is_nearly_transversal(Usup, flag):
            raise GeometryError("U' is not nearly transversal to F")
        if Usup.dim - U.dim < 2:
            raise GeometryError("generalized projection needs dim U' - dim U >= 2")
    else:
        raise GeometryError(f"unknown mode {mode!r}")
    m, M = _index_m_M(U, Usup, flag)
    if mode == "strict":
        UM = U & flag[M]
        A = family[M].perp(UM) & Usup
        if A.dim + U.dim != Usup.dim or (A & U).dim:
            A = _orthogonal_complement_iterative(U, Usup, flag, family, M)
    else:
        A = _orthogonal_complement_iterative(U, Usup, flag, family, M)
    chart = QuotientChart(U, Usup, A.rows)
    members = [chart.image((flag[i] + U) & Usup) for i in range(m, M + 1)]
    qflag = Flag(members, strict=False)
    forms = [family[i].on_chart(chart) for i in range(m + 1, M + 1)]
    qfam = CompatibleFamily(qflag, forms, check=False)
    return QuotientFlagData(U, Usup, m, M, A, chart, qflag, qfam, mode)


def strict_flag(flag: Flag, family: CompatibleFamily) -> tuple[Flag, CompatibleFamily]:
    """Drop repeated members V_i = V_{i-1} (their forms vanish on V_i and never matter)."""
    members = [flag[0]]
    forms = []
    for i in range(1, flag.k + 1):
        if flag[i] == members[-1]:
            continue
        members.append(flag[i])
        forms.append(family[i])
    F2 = Flag(members)
    return F2, CompatibleFamily(F2, forms, check=False)


def transfer_flag_perp(data: QuotientFlagData, ambient: Form, H: Subspace | None = None,
                       test_spaces: Iterable[Subspace] | None = None) -> dict:
    """Certify (<W^perp, U> cap U')/U = ((<W, U> cap U')/U)^perp' for the given W.

    The quotient form is (a+U, b+U)' = (a, b) on the chart's complement.
    Returns a record with the induced form and any counterexamples.
    """
    return quotient_perp_identity(data.U, data.Usup, ambient, H, test_spaces, data.chart)


def quotient_perp_identity(U: Subspace, Us: Subspace, ambient: Form, H: Subspace | None = None,
                           test_spaces: Iterable[Subspace] | None = None,
                           chart: QuotientChart | None = None) -> dict:
    """Same certificate as transfer_flag_perp for a bare pair U <= U'.

    H must satisfy dim(U' cap H) - dim(U cap H) = dim U' - dim U and
    U' cap H <= (U cap H)^perp; the complement of U in U' is then taken inside H.
    """
    N = U.ambient
    H = H if H is not None else Subspace.full(U.field, N)
    if not U <= Us:
        raise GeometryError("need U <= U'")
    if not ambient.is_nondegenerate():
        raise GeometryError("ambient form must be non-degenerate")
    if (Us & H).dim - (U & H).dim != Us.dim - U.dim:
        raise GeometryError("dimension hypothesis on H fails")
    if not (Us & H) <= ambient.perp(U & H):
        raise GeometryError("U' cap H is not perpendicular to U cap H")
    if chart is None or not (Us <= ambient.perp(U)):
        chart = QuotientChart(U, Us, QuotientChart(U & H, Us & H).basis)
    qform = ambient.on_chart(chart)
    if test_spaces is None:
        test_spaces = subspaces_between(U, Us)
    bad = []
    checked = 0
    for W in test_spaces:
        lhs = chart.image((ambient.perp(W) + U) & Us)
        rhs = qform.perp(chart.image((W + U) & Us))
        checked += 1
        if lhs != rhs:
            bad.append(W)
    return {"form": qform, "chart": chart, "checked": checked, "counterexamples": bad}


# -- dimension shifts -------------------------------------------------------------

@dataclass
class ShiftChart:
    """phi: U'/U -> target interval, realised as two charts with matching complement bases."""
    source: QuotientChart
    target: QuotientChart
    kind: str
    aux: Subspace

    def apply(self, W: Subspace) -> Subspace:
        if self.kind == "hyperplane":
            return W & self.aux
        return W + self.aux

    def inverse(self, X: Subspace) -> Subspace:
        if self.kind == "hyperplane":
            return X + self.source.sub
        return X & self.source.sup


def dimension_shift(U: Subspace, Usup: Subspace, aux: Subspace, kind: str | None = None,
                    chart: QuotientChart | None = None) -> ShiftChart:
    """Hyperplane H (U not <= H): W/U -> (W cap H)/(U cap H).  Point p (p not <= U'): W/U -> <W,p>/<U,p>."""
    F, N = U.field, U.ambient
    kind = kind or ("hyperplane" if aux.dim == N - 1 else "point")
    src = chart or QuotientChart(U, Usup)
    if kind == "hyperplane":
        if aux.dim != N - 1:
            raise GeometryError("hyperplane case needs a hyperplane")
        if U <= aux:
            raise GeometryError("U must not lie in the hyperplane")
        lam = nullspace(F, aux.rows, N)[0]  # H = ker(v -> v . lam)
        s = next(r for r in U.rows if _dot(F, r, lam))
        ls_inv = F.inv(_dot(F, s, lam))
        basis = []
        for a in src.basis:
            t = F.mul(_dot(F, a, lam), ls_inv)
            basis.append(tuple(F.sub(x, F.mul(t, y)) for x, y in zip(a, s)))
        tgt = QuotientChart(U & aux, Usup & aux, basis)
    elif kind == "point":
        if aux.dim != 1:
            raise GeometryError("point case needs a one-dimensional space")
        if aux <= Usup:
            raise GeometryError("p must not lie in U'")
        tgt = QuotientChart(U + aux, Usup + aux, src.basis)
    else:
        raise GeometryError(f"unknown shift kind {kind!r}")
    return ShiftChart(src, tgt, kind, aux)


def _dot(F: GF, x, y) -> int:
    s = 0
    for a, b in zip(x, y):
        if a and b:
            s = F.add(s, F.mul(a, b))
    return s


def pull_back_quotient(data: QuotientFlagData, target: QuotientChart, source: QuotientChart) -> tuple[Flag, CompatibleFamily]:
    """Transport (F', w') from data.chart to the coordinates of `source` via matching bases.

    `target` is a chart on the same interval as data.chart whose basis vectors are the
    images of source.basis, so source coordinates equal target coordinates.
    """
    F = data.U.field
    M = [data.chart.forward(t) for t in target.basis]  # target coords -> data coords
    Minv = mat_inverse(F, M) if M else []
    members = []
    for V in data.flag.members:
        rows = mat_mul(F, [list(r) for r in V.rows], Minv) if V.rows else []
        members.append(Subspace.span(F, source.dim, rows))
    flag = Flag(members, strict=False)
    forms = [w.pullback(M) for w in data.family.forms]
    return flag, CompatibleFamily(flag, forms, check=False)


# -- filtration -------------------------------------------------------------------

class FiltrationContext:
    """Pivot point p and the sets Z, Y_0, ..., Y_{2n} for an intersection of B/C geometries."""

    def __init__(self, specs: GeometrySpec | Sequence[GeometrySpec], pivot: Subspace | None = None,
                 seed: int | None = None):
        if isinstance(specs, GeometrySpec):
            specs = [specs]
        self.specs = list(specs)
        s0 = self.specs[0]
        if s0.type == "A":
            raise GeometryError("the filtration is defined for types B and C")
        self.n = s0.n
        self.ambient: Form = s0.ambient
        self.field = s0.field
        self.N = s0.N
        self.p = pivot if pivot is not None else self._choose_pivot(seed)
        if not self._pivot_ok(self.p):
            raise GeometryError("pivot must be a point that is omega_k-non-degenerate for every geometry")
        self.p_perp = self.ambient.perp(self.p)
        self._gamma: dict[Subspace, bool] = {}

    def _pivot_ok(self, P: Subspace) -> bool:
        if P.dim != 1:
            return False
        v = P.rows[0]
        if not all(s.top_form(v, v) != 0 for s in self.specs):
            return False
        return self.specs[0].type != "B" or self.ambient(v, v) == 0

    def _choose_pivot(self, seed: int | None) -> Subspace:
        pts = enumerate_subspaces(self.field, self.N, 1)
        if seed is None:
            for P in pts:
                if self._pivot_ok(P):
                    return P
        else:
            good = [P for P in pts if self._pivot_ok(P)]
            if good:
                return random.Random(seed).choice(good)
        raise GeometryError("no admissible pivot point")

    def in_gamma(self, U: Subspace) -> bool:
        r = self._gamma.get(U)
        if r is None:
            r = member_of_all(U, self.specs)
            self._gamma[U] = r
        return r

    def transversal_all(self, U: Subspace) -> bool:
        return all(is_transversal(U, s.flag, s.family) for s in self.specs)

    def in_Z(self, U: Subspace) -> bool:
        return self.in_gamma(U) and self.transversal_all(U + self.p)

    def in_Y0(self, U: Subspace) -> bool:
        if not self.in_Z(U):
            return False
        X = U & self.p_perp
        return X.dim > 0 and self.in_gamma(X) and self.in_gamma(X + self.p)

    def stage(self, U: Subspace) -> int | None:
        """Least i with U in Y_i, or None when U is not in Gamma (= Y_{2n})."""
        if not self.in_gamma(U):
            return None
        if self.in_Y0(U):
            return 0
        if self.transversal_all(U + self.p):
            return U.dim
        return 2 * self.n + 1 - U.dim


def filtration_stage(U: Subspace, ctx: FiltrationContext) -> int | None:
    return ctx.stage(U)


@dataclass
class LinkSpecs:
    U: Subspace
    stage: int
    chart: QuotientChart  # coordinates on U^perp / U
    upper: list[GeometrySpec]
    multiplicity: list[int]
    lower: Callable[[Subspace], bool]
    hypotheses: list[dict] = dc_field(default_factory=list)

    def upper_member(self, W: Subspace) -> bool:
        """W > U (inside U^perp) lies in the upper link iff W/U lies in every returned geometry."""
        if not (self.U < W):
            return False
        if not W <= self.chart.sup:
            return False
        Q = self.chart.image(W)
        return all(membership(Q, s) for s in self.upper)


def link_specs(U: Subspace, ctx: FiltrationContext, validate: bool = True) -> LinkSpecs:
    """Upper link as quotient geometries on U^perp/U and lower link as a predicate."""
    st = ctx.stage(U)
    if st is None or st == 0:
        raise GeometryError("links are only described for U in Y_i minus Y_{i-1}, i >= 1")
    amb = ctx.ambient
    Uperp = amb.perp(U)
    chart = QuotientChart(U, Uperp)
    qamb = amb.on_chart(chart)
    n, k = ctx.n, U.dim
    type_ = ctx.specs[0].type
    p, pp = ctx.p, ctx.p_perp
    specs: list[GeometrySpec] = []
    hyps: list[dict] = []
    if k < n:
        for s in ctx.specs:
            if st <= n:
                Uq = U & pp
                pairs = [
                    (U, Uperp, None),
                    (U + p, Uperp + p, ("point", p)),
                    (Uq, Uperp & pp, ("hyperplane", pp)),
                    (Uq + p, (Uperp & pp) + p, ("both", None)),
                ]
                for Ui, Ui2, shift in pairs:
                    data = project_flag(Ui, Ui2, s.flag, s.family, mode="generalized")
                    if shift is None:
                        tgt = QuotientChart(Ui, Ui2, chart.basis)
                    elif shift[0] == "point":
                        tgt = dimension_shift(U, Uperp, p, "point", chart).target
                    elif shift[0] == "hyperplane":
                        tgt = dimension_shift(U, Uperp, pp, "hyperplane", chart).target
                    else:
                        mid = dimension_shift(U, Uperp, pp, "hyperplane", chart).target
                        tgt = dimension_shift(mid.sub, mid.sup, p, "point", mid).target
                    flag, fam = pull_back_quotient(data, tgt, chart)
                    flag, fam = strict_flag(flag, fam)
                    specs.append(_make_spec(type_, flag, fam, qamb, n - k, validate, hyps))
            else:
                data = project_flag(U, Uperp, s.flag, s.family, mode="strict")
                tgt = QuotientChart(U, Uperp, chart.basis)
                flag, fam = pull_back_quotient(data, tgt, chart)
                flag, fam = strict_flag(flag, fam)
                specs.append(_make_spec(type_, flag, fam, qamb, n - k, validate, hyps))
    uniq: list[GeometrySpec] = []
    mult: list[int] = []
    for s in specs:
        if s in uniq:
            mult[uniq.index(s)] += 1
        else:
            uniq.append(s)
            mult.append(1)

    def lower(W: Subspace) -> bool:
        return 0 < W.dim < U.dim and W <= U and ctx.transversal_all(W) and ctx.transversal_all(W + p)

    return LinkSpecs(U, st, chart, uniq, mult, lower, hyps)


def _make_spec(type_, flag, fam, qamb, rank, validate, hyps) -> GeometrySpec:
    record = {"self_perp": flag.is_self_perp(qamb), "compatible": fam.is_compatible()}
    spec = GeometrySpec(type_, flag, fam, qamb, n=rank, validate=False)
    spec.witness = find_witness(spec)
    record["witness"] = spec.witness is not None
    hyps.append(record)
    if validate and not all(record.values()):
        raise GeometryError(f"link geometry violates its defining hypotheses: {record}")
    return spec


# -- JSON -------------------------------------------------------------------------

def spec_from_json(d: dict) -> list[GeometrySpec]:
    """Parse a GeometrySpec document; returns the list [spec, *intersect_with]."""
    field = GF.from_descriptor(d["field"])
    type_ = d["type"]
    n = d["n"]
    flag = Flag.from_json(field, d["flag"]) if d.get("flag") else None
    if type_ == "A":
        N = n + 1
        amb = None
    else:
        if "ambient" in d and "gram" in d["ambient"]:
            amb = Form.from_json(field, d["ambient"])
        else:
            amb = standard_model("C" if type_ == "C" else "B", n, field).form
        N = amb.dim
    if flag is None:
        flag = Flag.trivial(field, N)
    forms = [Form.from_json(field, f) for f in d["forms"]]
    fam = CompatibleFamily(flag, forms)
    specs = [GeometrySpec(type_, flag, fam, amb, n=n)]
    for other in d.get("intersect_with", []):
        o = dict(other)
        o.setdefault("field", d["field"])
        o.setdefault("type", type_)
        o.setdefault("n", n)
        if "ambient" in d and "ambient" not in o:
            o["ambient"] = d["ambient"]
        specs.extend(spec_from_json(o))
    return specs


def spec_to_json(specs: Sequence[GeometrySpec]) -> dict:
    d = specs[0].to_json()
    if len(specs) > 1:
        d["intersect_with"] = [s.to_json() for s in specs[1:]]
    return d
