"""Spherical buildings of types A, B, C as flag complexes, with form-induced flips.

Chambers are tuples of subspaces (U_1 < ... < U_n).  For types B and C they
are totally isotropic and are extended to full flags of V by perps, so Weyl
distances are permutations of the positions 0..N-1 that commute with the
mirror p -> N-1-p.  The twin structure is the self-twin one: the codistance
of c and d is delta(c, d) * w0.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence

from .field import GF, Involution
from .form import Form, standard_model
from .geometry import CompatibleFamily, Flag, GeometrySpec, adapted_basis, block_form, membership
from .subspace import (QuotientChart, Subspace, TooLarge, mat_inverse, mat_mul, nullspace, subspaces_between,
                       work_budget)

CHAMBER_BUDGET = 10**6

Chamber = tuple  # tuple[Subspace, ...]


class BuildingError(ValueError):
    pass


# -- Weyl groups ----------------------------------------------------------------

def _inversions(perm: Sequence[int]) -> int:
    n = len(perm)
    return sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])


class WeylElement:
    """Element of W(A_n) = S_{n+1} or W(B_n) = W(C_n), as a permutation of flag positions.

    Product convention: (a * b)(i) = b(a(i)), so that delta(c, e) = delta(c, d) * delta(d, e)
    along minimal galleries.
    """

    __slots__ = ("type", "n", "perm", "_len")

    def __init__(self, type_: str, n: int, perm: Sequence[int]):
        self.type = type_
        self.n = n
        self.perm = tuple(perm)
        N = len(self.perm)
        if sorted(self.perm) != list(range(N)):
            raise BuildingError(f"{self.perm} is not a permutation")
        if type_ != "A":
            if any(self.perm[N - 1 - i] != N - 1 - self.perm[i] for i in range(N)):
                raise BuildingError("B/C elements must commute with the mirror")
        self._len = None

    @property
    def N(self) -> int:
        return len(self.perm)

    @property
    def length(self) -> int:
        if self._len is None:
            p = self.perm
            if self.type == "A":
                self._len = _inversions(p)
            else:
                n = self.n
                if self.type == "B":
                    p = [x if x < n else x - 1 for i, x in enumerate(p) if i != n]
                neg = sum(1 for i in range(n) if p[i] >= n)
                self._len = (_inversions(p) + neg) // 2
        return self._len

    def __len__(self):
        return self.length

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        return WeylElement(self.type, self.n, [other.perm[i] for i in self.perm])

    def inverse(self) -> "WeylElement":
        inv = [0] * self.N
        for i, j in enumerate(self.perm):
            inv[j] = i
        return WeylElement(self.type, self.n, inv)

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.perm))

    def signed(self) -> tuple[int, ...]:
        """Signed permutation of 1..n (types B/C): image of position i is +(j+1) or -(N-j)."""
        if self.type == "A":
            raise BuildingError("only B/C elements are signed permutations")
        n, N = self.n, self.N
        out = []
        for i in range(n):
            j = self.perm[i]
            out.append(j + 1 if j < n else -(N - j))
        return tuple(out)

    def __eq__(self, other):
        return isinstance(other, WeylElement) and self.perm == other.perm and self.type == other.type

    def __hash__(self):
        return hash((self.type, self.perm))

    def __repr__(self):
        return f"WeylElement({self.type}{self.n}, {self.perm}, l={self.length})"

    def to_json(self):
        return {"type": self.type, "n": self.n, "perm": list(self.perm)}

    @staticmethod
    def degree(type_: str, n: int) -> int:
        """Number of permuted flag positions."""
        return n + 1 if type_ == "A" else (2 * n if type_ == "C" else 2 * n + 1)

    @staticmethod
    def order(type_: str, n: int) -> int:
        """|W|: (n+1)! for A_n, 2^n n! for B_n and C_n."""
        return math.factorial(n + 1) if type_ == "A" else 2**n * math.factorial(n)

    @classmethod
    def identity(cls, type_: str, n: int) -> "WeylElement":
        return cls(type_, n, range(cls.degree(type_, n)))

    @classmethod
    def longest(cls, type_: str, n: int) -> "WeylElement":
        N = cls.degree(type_, n)
        return cls(type_, n, [N - 1 - i for i in range(N)])

    @classmethod
    def simple(cls, type_: str, n: int, i: int) -> "WeylElement":
        """s_i changes the chamber member of dimension i (1 <= i <= n)."""
        N = cls.degree(type_, n)
        p = list(range(N))

        def swap(a, b):
            p[a], p[b] = p[b], p[a]

        if type_ == "A" or i < n:
            swap(i - 1, i)
            if type_ != "A":
                swap(N - i, N - 1 - i)
        elif type_ == "C":
            swap(n - 1, n)
        else:
            swap(n - 1, n + 1)
        return cls(type_, n, p)

    @classmethod
    def all(cls, type_: str, n: int) -> list["WeylElement"]:
        from itertools import permutations
        N = cls.degree(type_, n)
        out = []
        if type_ == "A":
            return [cls(type_, n, p) for p in permutations(range(N))]
        for p in permutations(range(n)):
            for signs in product((1, -1), repeat=n):
                perm = [0] * N
                for i in range(n):
                    j = p[i] if signs[i] > 0 else N - 1 - p[i]
                    perm[i] = j
                    perm[N - 1 - i] = N - 1 - j
                if type_ == "B":
                    perm[n] = n
                out.append(cls(type_, n, perm))
        return out


def parabolic_longest_length(type_: str, n: int, dims: Iterable[int]) -> int:
    """l(w_J) for the residue of a simplex whose members have the given dimensions."""
    ds = sorted(set(dims))
    N = n + 1 if type_ == "A" else None
    if type_ == "A":
        cuts = [0] + ds + [N]
        return sum((b - a) * (b - a - 1) // 2 for a, b in zip(cuts, cuts[1:]))
    cuts = [0] + ds
    total = sum((b - a) * (b - a - 1) // 2 for a, b in zip(cuts, cuts[1:]))
    r = n - (ds[-1] if ds else 0)
    return total + r * r


# -- buildings ----------------------------------------------------------------------

class Building:
    """Type A_n on F^{n+1}, or the polar building of type B_n / C_n of an ambient form."""

    def __init__(self, type_: str, n: int, field: GF, ambient: Form | None = None):
        if type_ not in ("A", "B", "C"):
            raise BuildingError(f"unknown type {type_!r}")
        self.type = type_
        self.n = n
        self.field = field
        if type_ == "A":
            self.N = n + 1
            self.ambient = None
        else:
            self.ambient = ambient if ambient is not None else standard_model(type_, n, field).form
            self.N = self.ambient.dim
        self._basis_cache: dict = {}
        self._ext_cache: dict = {}

    def descriptor(self) -> dict:
        return {"type": self.type, "n": self.n, "field": self.field.descriptor()}

    def __repr__(self):
        return f"Building({self.type}{self.n} over F_{self.field.order})"

    @property
    def w0(self) -> WeylElement:
        return WeylElement.longest(self.type, self.n)

    @property
    def zero(self) -> Subspace:
        return Subspace.zero(self.field, self.N)

    @property
    def full(self) -> Subspace:
        return Subspace.full(self.field, self.N)

    def perp(self, U: Subspace) -> Subspace:
        return self.ambient.perp(U)

    def is_chamber(self, c: Chamber) -> bool:
        if len(c) != self.n:
            return False
        prev = self.zero
        for i, U in enumerate(c, start=1):
            if U.dim != i or not prev < U:
                return False
            prev = U
        if self.type != "A":
            return self.ambient.is_totally_isotropic(c[-1])
        return True

    def extend(self, c: Sequence[Subspace]) -> list[Subspace]:
        """Full flag 0 = X_0 < ... < X_N = V determined by a chamber (or any chain)."""
        key = tuple(c)
        ext = self._ext_cache.get(key)
        if ext is not None:
            return ext
        ext = self._extend_simplex(c)
        if len(self._ext_cache) < 200_000:
            self._ext_cache[key] = ext
        return ext

    def _extend_simplex(self, a: Sequence[Subspace]) -> list[Subspace]:
        members = [self.zero] + list(a)
        if self.type != "A":
            perps = [self.perp(U) for U in reversed(a)]
            for P in perps:
                if P != members[-1]:
                    members.append(P)
        if members[-1] != self.full:
            members.append(self.full)
        return members

    def adapted(self, c: Chamber) -> list[tuple[int, ...]]:
        key = tuple(c)
        b = self._basis_cache.get(key)
        if b is None:
            b = adapted_basis(Flag(self.extend(c)))
            if len(self._basis_cache) < 200_000:
                self._basis_cache[key] = b
        return b

    # -- Weyl distance -------------------------------------------------------------
    def weyl_distance(self, c: Chamber, d: Chamber) -> WeylElement:
        """Relative position: position i of c goes to the position of d where x_i first appears."""
        F = self.field
        X = self.adapted(c)
        Y = self.adapted(d)
        Yinv = self._inverse_cache(tuple(d), Y)
        M = mat_mul(F, X, Yinv)
        N = self.N
        perm = [0] * N
        reduced: dict[int, list[int]] = {}
        for i, row in enumerate(M):
            r = list(row)
            while True:
                last = max(j for j in range(N) if r[j])
                if last in reduced:
                    piv = reduced[last]
                    f = F.mul(r[last], F.inv(piv[last]))
                    r = [F.sub(a, F.mul(f, b)) for a, b in zip(r, piv)]
                else:
                    reduced[last] = r
                    perm[i] = last
                    break
        return WeylElement(self.type, self.n, perm)

    def _inverse_cache(self, key, Y):
        ck = ("inv", key)
        inv = self._basis_cache.get(ck)
        if inv is None:
            inv = mat_inverse(self.field, Y)
            if len(self._basis_cache) < 200_000:
                self._basis_cache[ck] = inv
        return inv

    def weyl_distance_table(self, c: Chamber, d: Chamber) -> WeylElement:
        """Same as weyl_distance, from the table dim(X_i cap Y_j) (slower; kept as a cross-check)."""
        X, Y = self.extend(c), self.extend(d)
        N = self.N
        D = [[X[i].meet_dim(Y[j]) if 0 < i < N and 0 < j < N else min(X[i].dim, Y[j].dim)
              for j in range(N + 1)] for i in range(N + 1)]
        perm = [0] * N
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                if D[i][j] - D[i - 1][j] - D[i][j - 1] + D[i - 1][j - 1] == 1:
                    perm[i - 1] = j - 1
        return WeylElement(self.type, self.n, perm)

    def distance(self, c: Chamber, d: Chamber) -> int:
        return self.weyl_distance(c, d).length

    def codistance(self, c: Chamber, d: Chamber) -> WeylElement:
        """delta_*(c, d) = delta(c, d) * w0 under the self-twin identification.

        Right multiplication keeps left descents tied to the first argument.
        """
        return self.weyl_distance(c, d) * self.w0

    def numerical_codistance(self, c: Chamber, d: Chamber) -> int:
        return self.w0.length - self.distance(c, d)

    def opposite(self, c: Chamber, d: Chamber) -> bool:
        return self.distance(c, d) == self.w0.length

    # -- residues ------------------------------------------------------------------
    def residue(self, a: Sequence[Subspace] = ()) -> "Residue":
        return Residue(self, a)

    def chambers(self, a: Sequence[Subspace] = (), budget: int | None = None) -> list[Chamber]:
        """All chambers containing the simplex a, in deterministic order."""
        budget = work_budget(CHAMBER_BUDGET) if budget is None else budget
        fixed = {U.dim: U for U in a}
        if len(fixed) != len(a):
            raise BuildingError("simplex members must have distinct dimensions")
        out: list[Chamber] = []
        n = self.n

        def upper_for(i, prev):
            nxt = next((fixed[d] for d in range(i, n + 1) if d in fixed), None)
            if nxt is not None:
                return nxt
            if self.type == "A":
                return self.full
            return self.perp(prev)

        def rec(i, prev, chain):
            if len(out) > budget:
                raise TooLarge("enumerating chambers", len(out), budget)
            if i > n:
                out.append(tuple(chain))
                return
            if i in fixed:
                U = fixed[i]
                if not prev < U:
                    raise BuildingError("simplex is not a chain")
                rec(i + 1, U, chain + [U])
                return
            up = upper_for(i, prev)
            if self.type != "A":
                up = up & self.perp(prev)
            for W in subspaces_between(prev, up, i):
                if self.type != "A" and not self.ambient.is_totally_isotropic(W):
                    continue
                rec(i + 1, W, chain + [W])

        if self.type != "A" and a and not self.ambient.is_totally_isotropic(max(a, key=lambda U: U.dim)):
            raise BuildingError("B/C simplices must be totally isotropic")
        rec(1, self.zero, [])
        return out

    def panel(self, c: Chamber, i: int) -> list[Chamber]:
        """The s_i-panel of c: chambers that agree with c off dimension i."""
        a = [U for U in c if U.dim != i]
        return self.chambers(a)

    def project(self, a: Sequence[Subspace], d: Sequence[Subspace]) -> Chamber:
        """proj onto the residue of a: refine a by the members of d (closed formula)."""
        A = self._extend_simplex(sorted(a, key=lambda U: U.dim))
        D = self.extend(tuple(d)) if len(d) == self.n else self._extend_simplex(sorted(d, key=lambda U: U.dim))
        members = {}
        for lo, hi in zip(A, A[1:]):
            for X in D:
                Y = lo + (X & hi)
                members[Y.dim] = Y
        return tuple(members[i] for i in range(1, self.n + 1))

    def refine(self, a: Sequence[Subspace], t: Sequence[Subspace]) -> list[Subspace]:
        """Members (of dimension 1..n) of the simplex a refined by the simplex t."""
        A = self._extend_simplex(sorted(a, key=lambda U: U.dim))
        T = self._extend_simplex(sorted(t, key=lambda U: U.dim))
        members = {}
        for lo, hi in zip(A, A[1:]):
            for X in T:
                Y = lo + (X & hi)
                members[Y.dim] = Y
        return [members[d] for d in sorted(members) if 0 < d <= self.n and (self.type != "A" or d < self.N)]


@dataclass
class Residue:
    building: Building
    simplex: tuple

    def __init__(self, building: Building, simplex: Sequence[Subspace] = ()):
        self.building = building
        self.simplex = tuple(sorted(simplex, key=lambda U: U.dim))

    @cached_property
    def chambers(self) -> list[Chamber]:
        return self.building.chambers(self.simplex)

    @property
    def type_dims(self) -> list[int]:
        return [U.dim for U in self.simplex]

    @property
    def longest_length(self) -> int:
        b = self.building
        return parabolic_longest_length(b.type, b.n, self.type_dims)

    def contains(self, c: Chamber) -> bool:
        return all(U in c for U in self.simplex)


# -- flips ---------------------------------------------------------------------------

class Flip:
    """theta(U) = U^perp_omega (type A) or (U^perp_omega)^perp_b (types B/C)."""

    def __init__(self, building: Building, form: Form):
        if form.dim != building.N:
            raise BuildingError("flip form lives on the wrong space")
        if not form.is_nondegenerate():
            raise BuildingError("flip form must be non-degenerate")
        self.building = building
        self.form = form
        self.sigma: Involution = form.sigma
        if building.type != "A":
            F = building.field
            J = [list(r) for r in building.ambient.gram]
            sW = [[self.sigma.raw(x) for x in r] for r in form.gram]
            P = mat_mul(F, sW, mat_inverse(F, J))
            PJPt = mat_mul(F, mat_mul(F, P, J), [list(r) for r in zip(*P)])
            lam = next((PJPt[i][j] for i in range(len(J)) for j in range(len(J)) if J[i][j]), 0)
            if lam == 0 or any(PJPt[i][j] != F.mul(lam, J[i][j]) for i in range(len(J)) for j in range(len(J))):
                raise BuildingError("flip form does not induce a similitude of the ambient form")
            sPP = mat_mul(F, [[self.sigma.raw(x) for x in r] for r in P], P)
            c0 = sPP[0][0]
            if c0 == 0 or any(sPP[i][j] != (c0 if i == j else 0) for i in range(len(J)) for j in range(len(J))):
                raise BuildingError("flip is not involutory")

    def to_json(self) -> dict:
        return {"form": self.form.to_json(), "building": self.building.descriptor()}

    def image(self, U: Subspace) -> Subspace:
        P = self.form.perp(U)
        if self.building.type == "A":
            return P
        return self.building.perp(P)

    def chamber(self, c: Chamber) -> Chamber:
        if self.building.type == "A":
            return tuple(self.form.perp(U) for U in reversed(c))
        return tuple(self.image(U) for U in c)

    def codistance(self, c: Chamber) -> WeylElement:
        b = self.building
        return b.codistance(c, self.chamber(c))

    def numerical(self, c: Chamber) -> int:
        b = self.building
        return b.numerical_codistance(c, self.chamber(c))

    def is_phan(self, c: Chamber) -> bool:
        return self.numerical(c) == 0


def flip_image(flip: Flip, x):
    if isinstance(x, Subspace):
        return flip.image(x)
    if isinstance(x, Residue):
        return Residue(flip.building, [flip.image(U) for U in x.simplex])
    return flip.chamber(tuple(x))


# -- gates and flip-flop systems -----------------------------------------------------------

def gate_projections(R: Residue, c: Chamber, kind: str = "proj") -> Chamber:
    """proj: unique x in R minimizing l(delta(c, x)); coproj: unique x maximizing l_*(x, c)."""
    b = R.building
    if kind == "proj":
        scores = [(b.distance(c, x), x) for x in R.chambers]
        best = min(s for s, _ in scores)
    elif kind == "coproj":
        scores = [(b.numerical_codistance(x, c), x) for x in R.chambers]
        best = max(s for s, _ in scores)
    else:
        raise BuildingError(f"unknown projection kind {kind!r}")
    winners = [x for s, x in scores if s == best]
    if len(winners) != 1:
        raise BuildingError(f"gate property fails: {len(winners)} optimal chambers")
    return winners[0]


def gate_identity_holds(R: Residue, c: Chamber) -> bool:
    """l(c, y) = l(c, proj c) + l(proj c, y) for every y in R."""
    b = R.building
    x = gate_projections(R, c)
    dcx = b.distance(c, x)
    return all(b.distance(c, y) == dcx + b.distance(x, y) for y in R.chambers)


@dataclass
class FlipFlop:
    chambers: list
    min: int
    max: int
    values: dict


def flip_flop_system(R: Residue, flip: Flip) -> FlipFlop:
    vals = {c: flip.numerical(c) for c in R.chambers}
    lo = min(vals.values())
    hi = max(vals.values())
    return FlipFlop([c for c in R.chambers if vals[c] == lo], lo, hi, vals)


def theta_prime(R: Residue, flip: Flip, x: Chamber) -> Chamber:
    """coproj_R(theta(x)); under the self-twin model this is the spherical projection."""
    return R.building.project(R.simplex, flip.chamber(x))


def q_simplex(R: Residue, flip: Flip) -> list[Subspace]:
    """Simplex whose residue is Q = coproj_R(R^theta)."""
    b = R.building
    img = [flip.image(U) for U in R.simplex]
    return b.refine(R.simplex, img)


def characterize_R_theta(R: Residue, flip: Flip) -> dict:
    """Check the two-condition description of R_theta and the length formula on every chamber."""
    b = R.building
    Qs = q_simplex(R, flip)
    Q = Residue(b, Qs)
    lR, lQ = R.longest_length, Q.longest_length
    ff = flip_flop_system(R, flip)
    in_rt = set(ff.chambers)
    l_RRt = set()
    bad = []
    tp_cache: dict = {}
    rt_simplex = [flip.image(U) for U in R.simplex]
    for c in R.chambers:
        x = b.project(Qs, c)
        xt = tp_cache.get(x)
        if xt is None:
            xt = tp_cache[x] = theta_prime(R, flip, x)
        y = b.project(rt_simplex, c)
        l_RRt.add(b.numerical_codistance(x, y))
        lcx = b.distance(c, x)
        lxx = b.distance(x, xt)
        cond1 = lcx == lR - lQ
        cond2 = lxx == lQ
        if (cond1 and cond2) != (c in in_rt):
            bad.append({"chamber": c, "cond1": cond1, "cond2": cond2, "in_R_theta": c in in_rt})
        ff_val = ff.values[c]
        if len(l_RRt) == 1:
            (lr,) = l_RRt
            if ff_val != lr - 2 * lcx - lxx:
                bad.append({"chamber": c, "length_formula": (ff_val, lr, lcx, lxx)})
    if len(l_RRt) != 1:
        bad.append({"l_RRtheta_not_constant": sorted(l_RRt)})
    return {"claim": "prop-6.6", "status": "verified" if not bad else "refuted-with-counterexample",
            "chambers": len(R.chambers), "R_theta": len(in_rt), "Q_dims": [U.dim for U in Qs],
            "l_R_Rtheta": sorted(l_RRt), "counterexample": bad[0] if bad else None, "failures": len(bad)}


# -- comparison with generalized Phan geometries ------------------------------------------------

def residue_chart(R: Residue) -> QuotientChart:
    """Coordinates on the vector space that carries R: V, V/P (type A) or P^perp/P (types B/C)."""
    b = R.building
    if not R.simplex:
        return QuotientChart(b.zero, b.full, [tuple(1 if i == j else 0 for j in range(b.N)) for i in range(b.N)])
    if len(R.simplex) != 1 or R.simplex[0].dim != 1:
        raise BuildingError("only the whole building and stars of points are irreducible residues here")
    P = R.simplex[0]
    return QuotientChart(P, b.full if b.type == "A" else b.perp(P))


def _block_form_from_flip(b: Building, flip: Flip, lo: Subspace, hi: Subspace,
                          block_basis: Sequence[Sequence[int]]) -> list[list[int]]:
    """Gram on hi/lo (in the given basis) whose perp of each point U is lo + (theta-image cap hi).

    The theta-image of a point U = lo + <u> of the block is read off the projection of
    theta(U) to the block: lo + (U^perp_omega cap hi).
    """
    F = b.field
    sig = flip.sigma
    k = len(block_basis)
    if k == 1:
        u = block_basis[0]
        return [[flip.form(u, u) if flip.form(u, u) else 1]]
    chart = QuotientChart(lo, hi, block_basis)
    # unknowns G[a][c]; condition x G sigma(y)^T = 0 is linear in G
    eqs = []
    pts = [Subspace.span(F, k, [e]) for e in _unit_and_pair_vectors(F, k)]
    for Pq in pts:
        x = Pq.rows[0]
        U = lo + Subspace.span(F, b.N, [chart.backward(x)])
        img = lo + (flip.form.perp(U) & hi)
        for yv in chart.image(img).rows:
            sy = [sig.raw(t) for t in yv]
            eqs.append([F.mul(x[a], sy[c]) for a in range(k) for c in range(k)])
    sol = nullspace(F, eqs, k * k)
    for s in sol:
        G = [list(s[a * k:(a + 1) * k]) for a in range(k)]
        try:
            frm = Form(G, sig, 1, check=False)
        except Exception:
            continue
        if frm.is_nondegenerate():
            return _hermitize(F, sig, G)
    raise BuildingError("no non-degenerate block form matches the flip")


def _unit_and_pair_vectors(F: GF, k: int):
    for i in range(k):
        yield tuple(1 if j == i else 0 for j in range(k))
    for i in range(k):
        for j in range(i + 1, k):
            yield tuple(1 if t in (i, j) else 0 for t in range(k))
    if F.order > 2:
        g = F.gen.value
        for i in range(k):
            for j in range(i + 1, k):
                yield tuple(1 if t == i else (g if t == j else 0) for t in range(k))


def _hermitize(F: GF, sig: Involution, G: list[list[int]]) -> list[list[int]]:
    """Rescale G by a nonzero scalar so that G = sigma(G)^T, when some scalar does that."""
    k = len(G)
    for lam in range(1, F.order):
        H = [[F.mul(lam, g) for g in r] for r in G]
        if all(H[i][j] == sig.raw(H[j][i]) for i in range(k) for j in range(k)):
            return H
    return G


def assemble_gpg(R: Residue, flip: Flip) -> tuple[GeometrySpec, QuotientChart]:
    """The generalized Phan geometry (in residue coordinates) predicted for R_theta."""
    b = R.building
    chart = residue_chart(R)
    Qs = q_simplex(R, flip)
    P = R.simplex[0] if R.simplex else None
    members = [U for U in Qs if P is None or U != P]
    # flag of the residue space: images of the Q members (and their perps for B/C)
    if b.type == "A":
        amb_members = [b.zero if P is None else P] + [U for U in members] + [b.full]
    else:
        top = b.perp(P) if P is not None else b.full
        low = [b.zero if P is None else P] + members
        amb_members = list(low)
        for U in reversed(low):
            W = b.perp(U) & top if P is not None else b.perp(U)
            if W != amb_members[-1]:
                amb_members.append(W)
    flag_x = Flag([chart.image(U) for U in amb_members])
    basis_x = adapted_basis(flag_x)
    forms = []
    for i in range(1, flag_x.k + 1):
        lo_d, hi_d = flag_x[i - 1].dim, flag_x[i].dim
        blk = basis_x[lo_d:hi_d]
        lifted = [chart.backward(v) for v in blk]
        G = _block_form_from_flip(b, flip, amb_members[i - 1], amb_members[i], lifted)
        forms.append(block_form(flag_x, i, G, flip.sigma, basis_x))
    fam = CompatibleFamily(flag_x, forms)
    if b.type == "A":
        spec = GeometrySpec("A", flag_x, fam, validate=False)
    else:
        amb = b.ambient.on_chart(chart)
        spec = GeometrySpec(b.type, flag_x, fam, amb, n=chart.dim // 2, validate=False)
    return spec, chart


def gpg_compare(R: Residue, flip: Flip) -> dict:
    spec, chart = assemble_gpg(R, flip)
    ff = flip_flop_system(R, flip)
    P = R.simplex[0] if R.simplex else None
    target = set(ff.chambers)
    mism = []
    member_cache: dict = {}
    for c in R.chambers:
        ok = True
        for U in c:
            if P is not None and U == P:
                continue
            r = member_cache.get(U)
            if r is None:
                r = member_cache[U] = membership(chart.image(U), spec)
            if not r:
                ok = False
                break
        if ok != (c in target):
            mism.append(c)
    return {"claim": "thm-6.8", "status": "verified" if not mism else "refuted-with-counterexample",
            "chambers": len(R.chambers), "R_theta": len(target), "flag_dims": [V.dim for V in spec.flag],
            "counterexample": [U.to_json() for U in mism[0]] if mism else None, "mismatches": len(mism)}


# -- rank one ---------------------------------------------------------------------------------

def rank_one_fixed_points(form: Form) -> int:
    """Number of points p of P^1 with theta(p) = p for theta(p) = p^perp_omega."""
    F = form.field
    pts = [(1, a) for a in range(F.order)] + [(0, 1)]
    cnt = 0
    for v in pts:
        P = Subspace.span(F, 2, [v])
        if form.perp(P) == P:
            cnt += 1
    return cnt


def rank_one_forms(field: GF, sigma: Involution):
    """All non-degenerate sigma-hermitian 2x2 Gram matrices (epsilon = 1)."""
    fixed = [x for x in range(field.order) if sigma.raw(x) == x]
    for a, d in product(fixed, repeat=2):
        for bq in range(field.order):
            G = [[a, bq], [sigma.raw(bq), d]]
            f = Form(G, sigma, 1, check=False)
            if f.is_nondegenerate():
                yield f


def is_alternating(form: Form) -> bool:
    return all(form(e, e) == 0 for e in ([1, 0], [0, 1], [1, 1]))


def lemma_6_2_check(b: Building, flip: Flip, chambers: Sequence[Chamber] | None = None) -> dict:
    """Codistances are involutions, Phan chambers exist, and descent along s lowers l_theta."""
    chambers = list(chambers) if chambers is not None else b.chambers()
    vals = {c: flip.numerical(c) for c in chambers}
    bad = []
    involution = True
    for c in chambers:
        w = flip.codistance(c)
        if not (w * w).is_identity():
            involution = False
            bad.append({"chamber": c, "not_involution": w.perm})
        for i in range(1, b.n + 1):
            s = WeylElement.simple(b.type, b.n, i)
            if (s * w).length < w.length:
                nbrs = [d for d in b.panel(c, i) if d != c]
                if not any((vals[d] if d in vals else flip.numerical(d)) < vals[c] for d in nbrs):
                    bad.append({"chamber": c, "s": i})
    return {"involutions": involution, "phan_chambers": sum(1 for v in vals.values() if v == 0),
            "failures": len(bad), "counterexample": bad[0] if bad else None}
