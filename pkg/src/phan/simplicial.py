"""Simplicial complexes, order complexes and their homology.

Faces are sorted tuples of vertex ids; the empty face is implicit.  Homology
is reduced and computed over the integers by Smith normal form (elimination
on unit pivots first, then a dense remainder), with a modular fallback that
only reports ranks.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Any, Callable, Iterable, Sequence

from .subspace import Subspace, gaussian_binomial, subspaces_between

NNZ_THRESHOLD = 5_000_000
LARGE_PRIME = 2_147_483_647


class ComplexError(ValueError):
    pass


class SimplicialComplex:
    def __init__(self, faces: Iterable[Sequence[int]] = (), payload: Sequence[Any] | None = None,
                 closed: bool = False):
        """Build from any generating faces; all subsets are added unless closed=True."""
        table: dict[int, set[tuple[int, ...]]] = defaultdict(set)
        for f in faces:
            t = tuple(sorted(f))
            if not t:
                continue
            if len(set(t)) != len(t):
                raise ComplexError(f"face {t} repeats a vertex")
            if closed:
                table[len(t) - 1].add(t)
            else:
                for r in range(1, len(t) + 1):
                    table[r - 1].update(combinations(t, r))
        self.faces: dict[int, list[tuple[int, ...]]] = {d: sorted(table[d]) for d in sorted(table) if table[d]}
        self.payload = list(payload) if payload is not None else None
        self._index: dict[int, dict[tuple[int, ...], int]] = {}
        self._through: dict[int, list[tuple[int, ...]]] | None = None

    @property
    def dim(self) -> int:
        return max(self.faces) if self.faces else -1

    @property
    def vertices(self) -> list[int]:
        return [f[0] for f in self.faces.get(0, [])]

    def faces_of_dim(self, d: int) -> list[tuple[int, ...]]:
        if d == -1:
            return [()]
        return self.faces.get(d, [])

    def f_vector(self) -> list[int]:
        return [len(self.faces.get(d, [])) for d in range(self.dim + 1)]

    def __contains__(self, s) -> bool:
        t = tuple(sorted(s))
        if not t:
            return True
        return t in self.index(len(t) - 1)

    def index(self, d: int) -> dict[tuple[int, ...], int]:
        if d not in self._index:
            self._index[d] = {f: i for i, f in enumerate(self.faces_of_dim(d))}
        return self._index[d]

    def faces_through(self, v: int) -> list[tuple[int, ...]]:
        """All faces containing vertex v (cached index)."""
        if self._through is None:
            self._through = defaultdict(list)
            for f in self.all_faces():
                for u in f:
                    self._through[u].append(f)
        return self._through.get(v, [])

    def all_faces(self) -> Iterable[tuple[int, ...]]:
        for d in sorted(self.faces):
            yield from self.faces[d]

    def maximal_faces(self) -> list[tuple[int, ...]]:
        out = []
        for d in sorted(self.faces):
            up = self.faces.get(d + 1, [])
            covered = set()
            for g in up:
                for i in range(len(g)):
                    covered.add(g[:i] + g[i + 1:])
            out.extend(f for f in self.faces[d] if f not in covered)
        return out

    def euler_characteristic(self) -> int:
        return sum((-1) ** d * n for d, n in enumerate(self.f_vector()))

    def subcomplex(self, keep: Callable[[tuple[int, ...]], bool]) -> "SimplicialComplex":
        """Faces satisfying `keep`; `keep` must be closed under subsets."""
        return SimplicialComplex([f for f in self.all_faces() if keep(f)], self.payload, closed=True)

    def induced(self, verts: Iterable[int]) -> "SimplicialComplex":
        vs = set(verts)
        return self.subcomplex(lambda f: all(v in vs for v in f))

    def __eq__(self, other):
        return isinstance(other, SimplicialComplex) and self.faces == other.faces

    def __repr__(self):
        return f"SimplicialComplex(dim={self.dim}, f={self.f_vector()})"

    def to_json(self, payload_json: Callable[[Any], Any] | None = None) -> dict:
        verts = self.vertices
        pay = None
        if self.payload is not None:
            conv = payload_json or (lambda x: x.to_json() if hasattr(x, "to_json") else x)
            pay = [conv(self.payload[v]) for v in verts]
        return {"vertices": verts, "payload": pay, "facets": [list(f) for f in self.maximal_faces()]}

    @classmethod
    def from_json(cls, d: dict, payload_parse: Callable[[Any], Any] | None = None) -> "SimplicialComplex":
        payload = None
        if d.get("payload") is not None:
            parse = payload_parse or (lambda x: x)
            n = max(d["vertices"]) + 1 if d["vertices"] else 0
            payload = [None] * n
            for v, p in zip(d["vertices"], d["payload"]):
                payload[v] = parse(p)
        faces = [tuple(f) for f in d["facets"]] + [(v,) for v in d["vertices"]]
        return cls(faces, payload)


# -- constructions ----------------------------------------------------------------

def comparabilities(vertices: Sequence[Subspace]) -> list[list[int]]:
    """up[i] = indices j with vertices[i] < vertices[j]."""
    by_dim: dict[int, list[int]] = defaultdict(list)
    where = {}
    for i, U in enumerate(vertices):
        by_dim[U.dim].append(i)
        where[U] = i
    up: list[list[int]] = [[] for _ in vertices]
    dims = sorted(by_dim)
    for j, W in enumerate(vertices):
        for d in dims:
            if d >= W.dim:
                break
            lower = by_dim[d]
            q = W.field.order
            if gaussian_binomial(q, W.dim, d) < len(lower):
                for U in subspaces_between(Subspace.zero(W.field, W.ambient), W, d):
                    i = where.get(U)
                    if i is not None:
                        up[i].append(j)
            else:
                for i in lower:
                    if vertices[i] <= W:
                        up[i].append(j)
    for lst in up:
        lst.sort()
    return up


def order_complex(vertices: Sequence[Subspace], up: list[list[int]] | None = None) -> SimplicialComplex:
    """Chains of the inclusion poset on `vertices`; vertex i carries vertices[i]."""
    if len(set(vertices)) != len(vertices):
        raise ComplexError("order complex vertices must be distinct")
    up = up if up is not None else comparabilities(vertices)
    faces: list[tuple[int, ...]] = []

    def walk(chain):
        faces.append(tuple(sorted(chain)))
        for j in up[chain[-1]]:
            walk(chain + [j])

    for i in range(len(vertices)):
        walk([i])
    cx = SimplicialComplex(faces, list(vertices), closed=True)
    return cx


def link_star_boundary(K: SimplicialComplex, s: Sequence[int]):
    s = tuple(sorted(s))
    if s not in K:
        raise ComplexError(f"{s} is not a face")
    ss = set(s)
    cofaces = [g for g in K.faces_through(s[0]) if ss.issubset(g)] if s else list(K.all_faces())
    star = SimplicialComplex(cofaces, K.payload)
    link = SimplicialComplex([tuple(v for v in g if v not in ss) for g in cofaces if len(g) > len(s)],
                             K.payload)
    bnd = SimplicialComplex([f for r in range(1, len(s)) for f in combinations(s, r)], K.payload, closed=True)
    return link, star, bnd


def link(K: SimplicialComplex, s: Sequence[int]) -> SimplicialComplex:
    return link_star_boundary(K, s)[0]


def join(K: SimplicialComplex, L: SimplicialComplex) -> SimplicialComplex:
    """K * L with L's vertices shifted past K's."""
    off = (max(K.vertices) + 1) if K.vertices else 0
    Kf = [()] + list(K.all_faces())
    Lf = [()] + [tuple(v + off for v in f) for f in L.all_faces()]
    faces = [a + b for a in Kf for b in Lf if a or b]
    payload = None
    if K.payload is not None or L.payload is not None:
        kp = list(K.payload) if K.payload is not None else [None] * off
        kp += [None] * (off - len(kp))
        payload = kp + (list(L.payload) if L.payload is not None else [None] * (max(L.vertices, default=-1) + 1))
    return SimplicialComplex(faces, payload, closed=True)


def cone(K: SimplicialComplex) -> SimplicialComplex:
    return join(K, SimplicialComplex([(0,)]))


# -- chain complexes -----------------------------------------------------------------

SparseRow = dict[int, int]


class ChainComplex:
    """Boundary maps d_k: C_k -> C_{k-1} as sparse rows (one row per k-face), augmented at k = 0."""

    def __init__(self, K: SimplicialComplex, top: int | None = None):
        self.K = K
        self.top = K.dim if top is None else min(top, K.dim)
        self.sizes = {d: len(K.faces_of_dim(d)) for d in range(-1, self.top + 1)}

    def boundary(self, k: int) -> list[SparseRow]:
        """Rows indexed by k-faces, columns by (k-1)-faces; vertex order gives the signs."""
        K = self.K
        if k == 0:
            return [{0: 1} for _ in K.faces_of_dim(0)]
        idx = K.index(k - 1)
        rows = []
        for f in K.faces_of_dim(k):
            r = {}
            for i in range(len(f)):
                r[idx[f[:i] + f[i + 1:]]] = -1 if i % 2 else 1
            rows.append(r)
        return rows

    def check_dd(self) -> bool:
        for k in range(1, self.top + 1):
            dk = self.boundary(k)
            dk1 = self.boundary(k - 1)
            for r in dk:
                acc: dict[int, int] = defaultdict(int)
                for j, a in r.items():
                    for c, b in dk1[j].items():
                        acc[c] += a * b
                if any(acc.values()):
                    return False
        return True


# -- Smith normal form ----------------------------------------------------------------

def _dense_snf_diagonal(M: list[list[int]]) -> list[int]:
    """Nonzero invariant factors of a dense integer matrix."""
    A = [row[:] for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    diag = []
    t = 0
    while t < m and t < n:
        # smallest nonzero absolute value as pivot
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        i, j = best
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        while True:
            p = A[t][t]
            done = True
            for i in range(t + 1, m):
                if A[i][t]:
                    qt = A[i][t] // p
                    A[i] = [a - qt * b for a, b in zip(A[i], A[t])]
                    if A[i][t]:
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    qt = A[t][j] // p
                    for row in A:
                        row[j] -= qt * row[t]
                    if A[t][j]:
                        done = False
            if done:
                # divisibility: fold a non-divisible entry into the pivot row
                bad = None
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if A[i][j] % p:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                A[t] = [a + b for a, b in zip(A[t], A[bad])]
                continue
            # move the smallest entry of row/column t to the pivot
            cand = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
            cand += [(abs(A[t][j]), t, j) for j in range(t, n) if A[t][j]]
            _, i, j = min(cand)
            A[t], A[i] = A[i], A[t]
            for row in A:
                row[t], row[j] = row[j], row[t]
        diag.append(abs(A[t][t]))
        t += 1
    return diag


def smith_invariants(rows: list[SparseRow], ncols: int, threshold: int = NNZ_THRESHOLD) -> tuple[int, list[int]]:
    """(rank, invariant factors > 1) of a sparse integer matrix."""
    nnz = sum(len(r) for r in rows)
    if nnz > threshold:
        raise TooManyNonzeros(len(rows), ncols, nnz)
    R = [dict(r) for r in rows if r]
    cols: dict[int, set[int]] = defaultdict(set)
    for i, r in enumerate(R):
        for j in r:
            cols[j].add(i)
    alive = set(range(len(R)))
    rank = 0
    # unit pivots in order of row length keep fill low
    while True:
        best = None
        for i in alive:
            r = R[i]
            if best is not None and len(r) >= best[0]:
                continue
            for j, a in r.items():
                if a == 1 or a == -1:
                    best = (len(r), i, j)
                    break
        if best is None:
            break
        _, i, j = best
        piv = R[i]
        a = piv[j]
        alive.discard(i)
        for jj in piv:
            cols[jj].discard(i)
        for k in list(cols[j]):
            rk = R[k]
            f = rk[j] * a  # a = +-1, so a^{-1} = a
            for jj, b in piv.items():
                v = rk.get(jj, 0) - f * b
                if v:
                    if jj not in rk:
                        cols[jj].add(k)
                    rk[jj] = v
                elif jj in rk:
                    del rk[jj]
                    cols[jj].discard(k)
        del cols[j]
        rank += 1
        for k in list(alive):
            if not R[k]:
                alive.discard(k)
    rest = [R[i] for i in sorted(alive) if R[i]]
    if not rest:
        return rank, []
    used = sorted({j for r in rest for j in r})
    pos = {j: c for c, j in enumerate(used)}
    dense = [[0] * len(used) for _ in rest]
    for r, row in zip(rest, dense):
        for j, a in r.items():
            row[pos[j]] = a
    diag = _dense_snf_diagonal(dense)
    return rank + len(diag), [d for d in diag if d > 1]


class TooManyNonzeros(RuntimeError):
    def __init__(self, nrows, ncols, nnz):
        super().__init__(f"boundary matrix {nrows}x{ncols} with {nnz} nonzeros exceeds the exact-mode threshold")
        self.shape = (nrows, ncols)
        self.nnz = nnz


def rank_mod_p(rows: list[SparseRow], p: int) -> int:
    R = [{j: a % p for j, a in r.items() if a % p} for r in rows]
    R = [r for r in R if r]
    pivots: dict[int, dict[int, int]] = {}
    rank = 0
    for r in R:
        r = dict(r)
        while r:
            j = min(r)
            if j in pivots:
                pr = pivots[j]
                f = r[j]
                for jj, b in pr.items():
                    v = (r.get(jj, 0) - f * b) % p
                    if v:
                        r[jj] = v
                    else:
                        r.pop(jj, None)
            else:
                inv = pow(r[j], p - 2, p)
                pivots[j] = {jj: (b * inv) % p for jj, b in r.items()}
                rank += 1
                break
    return rank


# -- homology -----------------------------------------------------------------------

@dataclass
class HomologyReport:
    betti_reduced: list[int]
    torsion: list[list[int]]
    euler: int
    spherical_up_to: int
    mode: str
    betti_minus1: int = 0
    torsion_suspected: list[int] = field(default_factory=list)
    f_vector: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "HomologyReport":
        return cls(**d)


def _components(K: SimplicialComplex) -> int:
    parent = {v: v for v in K.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = len(parent)
    for a, b in K.faces_of_dim(1):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            comps -= 1
    return comps


def reduced_homology(K: SimplicialComplex, mode: str = "exact", dim_cap: int | None = None,
                     primes: Sequence[int] = (2, 3), threshold: int = NNZ_THRESHOLD) -> HomologyReport:
    """Reduced homology H~_0..H~_d (d = dim K, or dim_cap if smaller)."""
    d = K.dim if dim_cap is None else min(dim_cap, K.dim)
    fv = K.f_vector()
    euler = K.euler_characteristic()
    if K.dim < 0:
        return HomologyReport([], [], 0, -2, mode, betti_minus1=1, f_vector=fv)
    C = ChainComplex(K, d + 1)
    ranks: dict[int, int] = {0: 1}
    tors: dict[int, list[int]] = {}
    suspected = []
    if 1 <= K.dim:
        ranks[1] = len(K.vertices) - _components(K)  # d_1 of a graph is torsion-free
        tors[1] = []
    for k in range(2, d + 2):
        if k > K.dim:
            break
        rows = C.boundary(k)
        ncols = C.sizes[k - 1]
        use_modular = mode == "modular"
        if not use_modular:
            try:
                ranks[k], tors[k] = smith_invariants(rows, ncols, threshold)
            except TooManyNonzeros:
                use_modular = True
                mode = "modular"
        if use_modular:
            r0 = rank_mod_p(rows, LARGE_PRIME)
            ranks[k] = r0
            tors[k] = []
            if any(rank_mod_p(rows, p) != r0 for p in primes):
                suspected.append(k - 1)
    betti = []
    torsion = []
    for k in range(d + 1):
        b = C.sizes[k] - ranks.get(k, 0) - ranks.get(k + 1, 0)
        betti.append(b)
        torsion.append(sorted(tors.get(k + 1, [])))
    sph = -1
    for k in range(d + 1):
        if betti[k] == 0 and not torsion[k] and k not in suspected:
            sph = k
        else:
            break
    return HomologyReport(betti, torsion, euler, sph, mode, 0, suspected, fv)


def connectivity_report(K: SimplicialComplex, target: int, mode: str = "exact") -> dict:
    """Homological target-connectivity; pi_1 is not certified here."""
    if K.dim < 0:
        return {"kind": "homological", "target": target, "ok": target < -1, "fails_at": -1,
                "connected_up_to": -2}
    rep = reduced_homology(K, mode=mode, dim_cap=max(target, 0))
    upto = rep.spherical_up_to
    if upto == len(rep.betti_reduced) - 1 == K.dim:
        upto = max(upto, target)  # nothing above the top dimension
    ok = upto >= target
    return {"kind": "homological", "target": target, "ok": ok, "fails_at": None if ok else upto + 1,
            "connected_up_to": upto, "homology": rep.to_json()}


# -- fundamental group ------------------------------------------------------------------

def _free_reduce(w: list[int]) -> list[int]:
    out: list[int] = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return out


def _cyclic_reduce(w: list[int]) -> list[int]:
    w = _free_reduce(w)
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return w


def _invert(w: list[int]) -> list[int]:
    return [-x for x in reversed(w)]


@dataclass
class Pi1Result:
    status: str  # trivial_proven | presentation
    generators: list[int]
    relators: list[list[int]]
    h1_betti: int
    h1_torsion: list[int]

    def to_json(self) -> dict:
        return asdict(self)


def pi1_presentation(K: SimplicialComplex, effort_budget: int = 200_000) -> Pi1Result:
    """Edge-path group from a spanning tree, simplified by bounded Tietze moves."""
    if K.dim < 0 or _components(K) != 1:
        raise ComplexError("pi_1 needs a connected nonempty complex")
    adj: dict[int, list[int]] = defaultdict(list)
    for a, b in K.faces_of_dim(1):
        adj[a].append(b)
        adj[b].append(a)
    root = K.vertices[0]
    seen = {root}
    tree = set()
    dq = deque([root])
    while dq:
        v = dq.popleft()
        for w in sorted(adj[v]):
            if w not in seen:
                seen.add(w)
                tree.add((min(v, w), max(v, w)))
                dq.append(w)
    gens: dict[tuple[int, int], int] = {}
    for e in K.faces_of_dim(1):
        if e not in tree:
            gens[e] = len(gens) + 1

    def letter(a, b):
        if a < b:
            g = gens.get((a, b))
            return [g] if g else []
        g = gens.get((b, a))
        return [-g] if g else []

    rels = []
    for a, b, c in K.faces_of_dim(2):
        w = _cyclic_reduce(letter(a, b) + letter(b, c) + letter(c, a))
        if w:
            rels.append(w)
    alive = set(gens.values())
    effort = 0
    changed = True
    while changed and effort < effort_budget:
        changed = False
        rels = [r for r in (_cyclic_reduce(r) for r in rels) if r]
        # dedupe up to inversion
        uniq = {}
        for r in rels:
            key = min(tuple(r), tuple(_invert(r)))
            uniq.setdefault(key, r)
        rels = list(uniq.values())
        rels.sort(key=len)
        for idx, r in enumerate(rels):
            counts: dict[int, int] = defaultdict(int)
            for x in r:
                counts[abs(x)] += 1
            g = next((x for x in r if counts[abs(x)] == 1), None)
            if g is None:
                continue
            # r = u g v  =>  g = u^{-1} v^{-1}
            i = r.index(g)
            u, v = r[:i], r[i + 1:]
            sub = _free_reduce(_invert(u) + _invert(v))
            if g < 0:
                sub = _invert(sub)
            gabs = abs(g)
            new = []
            for j, s in enumerate(rels):
                if j == idx:
                    continue
                out = []
                for x in s:
                    if x == gabs:
                        out.extend(sub)
                    elif x == -gabs:
                        out.extend(_invert(sub))
                    else:
                        out.append(x)
                effort += len(out)
                new.append(out)
            rels = new
            alive.discard(gabs)
            changed = True
            break
    rels = [r for r in (_cyclic_reduce(r) for r in rels) if r]
    h1 = reduced_homology(K, dim_cap=1)
    b1 = h1.betti_reduced[1] if len(h1.betti_reduced) > 1 else 0
    t1 = h1.torsion[1] if len(h1.torsion) > 1 else []
    if not alive:
        return Pi1Result("trivial_proven", [], [], b1, t1)
    order = sorted(alive)
    ren = {g: i + 1 for i, g in enumerate(order)}
    rels = [[(1 if x > 0 else -1) * ren[abs(x)] for x in r] for r in rels]
    return Pi1Result("presentation", list(range(1, len(order) + 1)), rels, b1, t1)
