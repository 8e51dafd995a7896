"""Cohomology of finite groups with coefficients in finite modules.

Cochains are inhomogeneous and stored densely: a degree-p cochain on a group
of order n is an integer array of shape (n**p, k), row r holding the value
on the p-tuple whose base-n digits are r (most significant digit first).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .exactalg import (
    Element,
    FinAbGroup,
    GroupHom,
    ModMap,
    NoSolution,
    Subgroup,
    Subquotient,
    subgroup_from_generators,
)

MAX_DEGREE = 5
MAX_TABLE = 1 << 20


class GroupAxiomError(ValueError):
    pass


class ModuleAxiomError(ValueError):
    pass


class NonEquivariantPairing(ValueError):
    pass


class LiftOutsideKernel(ValueError):
    pass


class NotACocycle(ValueError):
    pass


# ---------------------------------------------------------------------------
# Groups


class FiniteGroup:
    """Finite group given by a multiplication table; element 0 is the identity."""

    def __init__(self, mul_table: Sequence[Sequence[int]], check: bool = True):
        t = np.asarray(mul_table, dtype=np.int64)
        n = t.shape[0]
        if t.shape != (n, n) or n == 0:
            raise GroupAxiomError("multiplication table must be a nonempty square")
        t.setflags(write=False)
        self.table = t
        self.order = n
        if check:
            for name, ok in self.axiom_checks():
                if not ok:
                    raise GroupAxiomError(f"group axiom failed: {name}")
        inv = np.zeros(n, dtype=np.int64)
        for g in range(n):
            hits = np.nonzero(t[g] == 0)[0]
            # unchecked tables may lack inverses; axiom_checks reports that
            inv[g] = int(hits[0]) if len(hits) else 0
        inv.setflags(write=False)
        self.inverse = inv

    def axiom_checks(self) -> list[tuple[str, bool]]:
        t, n = self.table, self.order
        in_range = bool(((t >= 0) & (t < n)).all())
        if not in_range:
            return [("closure", False)]
        e = np.arange(n)
        identity = bool((t[0] == e).all() and (t[:, 0] == e).all())
        latin = all(len(set(row)) == n for row in t.tolist()) and all(
            len(set(col)) == n for col in t.T.tolist()
        )
        assoc = bool((t[t[:, :, None], e[None, None, :]] == t[e[:, None, None], t[None, :, :]]).all())
        return [("closure", True), ("identity", identity), ("inverses", latin), ("associativity", assoc)]

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        return cls([[(i + j) % n for j in range(n)] for i in range(n)])

    @classmethod
    def trivial(cls) -> "FiniteGroup":
        return cls([[0]])

    @classmethod
    def abelian(cls, factors: Sequence[int]) -> "FiniteGroup":
        elems = list(np.ndindex(*factors)) if factors else [()]
        index = {e: i for i, e in enumerate(elems)}
        return cls(
            [[index[tuple((a + b) % d for a, b, d in zip(x, y, factors))] for y in elems] for x in elems]
        )

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def prod(self, elems: Iterable[int]) -> int:
        r = 0
        for g in elems:
            r = int(self.table[r, g])
        return r

    def is_abelian(self) -> bool:
        return bool((self.table == self.table.T).all())

    def subgroup(self, elements: Iterable[int]) -> "SubgroupData":
        return SubgroupData(self, tuple(sorted(set(int(e) for e in elements))))

    def generated(self, gens: Iterable[int]) -> "SubgroupData":
        elems = {0}
        frontier = [0]
        gens = list(gens)
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = int(self.table[x, g])
                if y not in elems:
                    elems.add(y)
                    frontier.append(y)
        return self.subgroup(elems)

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.order})"


class SubgroupData:
    """A subgroup H of a FiniteGroup G, re-indexed as a group in its own right.

    Local index i corresponds to global element ``elements[i]``; the identity
    is local index 0 because 0 is always the smallest element.
    """

    def __init__(self, ambient: FiniteGroup, elements: tuple[int, ...]):
        self.ambient = ambient
        self.elements = elements
        if not elements or elements[0] != 0:
            raise GroupAxiomError("subgroup must contain the identity")
        pos = {g: i for i, g in enumerate(elements)}
        try:
            table = [[pos[ambient.mul(a, b)] for b in elements] for a in elements]
        except KeyError:
            raise GroupAxiomError(f"{list(elements)} is not closed under multiplication") from None
        self.group = FiniteGroup(table, check=False)
        self.local = pos
        self.embedding = np.array(elements, dtype=np.int64)

    @property
    def order(self) -> int:
        return len(self.elements)

    def is_normal_in(self, other: "SubgroupData") -> bool:
        G = self.ambient
        mine = set(self.elements)
        return all(G.prod([g, h, int(G.inverse[g])]) in mine for g in other.elements for h in self.elements)

    def contains(self, other: "SubgroupData") -> bool:
        return set(other.elements) <= set(self.elements)


class QuotientData:
    """G/N for N normal in G; cosets are ordered by their smallest element."""

    def __init__(self, G: FiniteGroup, N: Sequence[int]):
        N = sorted(set(int(x) for x in N))
        cosets: list[tuple[int, ...]] = []
        label = np.full(G.order, -1, dtype=np.int64)
        for g in range(G.order):
            if label[g] >= 0:
                continue
            coset = tuple(sorted(G.mul(g, h) for h in N))
            for x in coset:
                label[x] = len(cosets)
            cosets.append(coset)
        reps = [c[0] for c in cosets]
        table = [[int(label[G.mul(a, b)]) for b in reps] for a in reps]
        for a in range(G.order):
            for h in N:
                if label[G.mul(G.mul(a, h), int(G.inverse[a]))] != 0:
                    raise GroupAxiomError("quotient by a non-normal subgroup")
        self.ambient = G
        self.kernel = tuple(N)
        self.group = FiniteGroup(table, check=False)
        self.map = label
        self.map.setflags(write=False)
        self.representatives = tuple(reps)


# ---------------------------------------------------------------------------
# Index bookkeeping for inhomogeneous tuples


@lru_cache(maxsize=None)
def _digits(n: int, p: int) -> np.ndarray:
    """Array of shape (n**p, p): the tuples in lexicographic order."""
    if n**p > MAX_TABLE:
        raise ValueError(f"cochain table of size {n}**{p} is too large")
    if p == 0:
        return np.zeros((1, 0), dtype=np.int64)
    idx = np.arange(n**p, dtype=np.int64)
    out = np.empty((n**p, p), dtype=np.int64)
    for i in range(p - 1, -1, -1):
        out[:, i] = idx % n
        idx //= n
    out.setflags(write=False)
    return out


def _encode(digits: np.ndarray, n: int) -> np.ndarray:
    r = np.zeros(digits.shape[0], dtype=np.int64)
    for i in range(digits.shape[1]):
        r = r * n + digits[:, i]
    return r


@lru_cache(maxsize=None)
def _prefix_products(G: FiniteGroup, p: int, q: int) -> np.ndarray:
    """For tuples of length p+q: index of g_1...g_p."""
    d = _digits(G.order, p + q)
    r = np.zeros(d.shape[0], dtype=np.int64)
    for i in range(p):
        r = G.table[r, d[:, i]]
    return r


@lru_cache(maxsize=None)
def _differential_indices(G: FiniteGroup, p: int):
    """Index arrays for d: C^p -> C^{p+1}.

    Returns (first, terms) where first[r] is g_1 of tuple r and terms is a
    list of (sign, source_row_index) for the p+2 summands; the first summand
    additionally carries the action of g_1.
    """
    n = G.order
    d = _digits(n, p + 1)
    first = d[:, 0].copy()
    terms = [(1, _encode(d[:, 1:], n))]
    for i in range(p):
        merged = np.concatenate(
            [d[:, :i], G.table[d[:, i], d[:, i + 1]][:, None], d[:, i + 2 :]], axis=1
        )
        terms.append(((-1) ** (i + 1), _encode(merged, n)))
    terms.append(((-1) ** (p + 1), _encode(d[:, :p], n)))
    return first, terms


# ---------------------------------------------------------------------------
# Modules


class GModule:
    """A finite abelian group with a left action of a finite group.

    ``action[g]`` is the k x k integer matrix of g on carrier coordinates.
    """

    def __init__(self, group: FiniteGroup, carrier: FinAbGroup, action, name: str = "", check: bool = True):
        self.group = group
        self.carrier = carrier
        k = carrier.rank
        A = np.asarray(action, dtype=np.int64).reshape(group.order, k, k)
        self.moduli = np.array(carrier.invariant_factors, dtype=np.int64)
        if k:
            A = A % self.moduli[:, None]
        A.setflags(write=False)
        self.action = A
        self.name = name
        if check:
            failed = [n for n, ok in self.axiom_checks() if not ok]
            if failed:
                raise ModuleAxiomError(f"module {name or '?'}: {', '.join(failed)}")

    @classmethod
    def trivial(cls, group: FiniteGroup, carrier: FinAbGroup, name: str = "") -> "GModule":
        k = carrier.rank
        return cls(group, carrier, np.broadcast_to(np.eye(k, dtype=np.int64), (group.order, k, k)), name)

    def axiom_checks(self) -> list[tuple[str, bool]]:
        k = self.carrier.rank
        if k == 0:
            return [("well_defined", True), ("identity_acts_trivially", True), ("action_compatible", True)]
        A = self.action
        m = self.moduli
        # column i must be killed by m_i
        well = bool(((A * m[None, None, :]) % m[None, :, None] == 0).all())
        ident = bool((A[0] == np.eye(k, dtype=np.int64) % m[:, None]).all())
        G = self.group
        prod_ok = True
        for g in range(G.order):
            gh = np.einsum("ij,hjk->hik", A[g], A) % m[None, :, None]
            if not (gh == A[G.table[g]]).all():
                prod_ok = False
                break
        return [("well_defined", well), ("identity_acts_trivially", ident), ("action_compatible", prod_ok)]

    def act(self, g: int, x) -> Element:
        if not self.carrier.rank:
            return ()
        return tuple(int(v) for v in (self.action[g] @ np.asarray(x, dtype=np.int64)) % self.moduli)

    def hom(self, g: int) -> GroupHom:
        return GroupHom(self.carrier, self.carrier, tuple(tuple(int(v) for v in row) for row in self.action[g]))

    def is_trivial_action(self) -> bool:
        k = self.carrier.rank
        return bool((self.action == np.eye(k, dtype=np.int64) % self.moduli[:, None]).all()) if k else True

    def restrict(self, sub: SubgroupData) -> "GModule":
        return GModule(sub.group, self.carrier, self.action[sub.embedding], self.name, check=False)

    def fixed_subgroup(self, elements: Iterable[int] | None = None) -> Subgroup:
        """A^H as a subgroup of the carrier (H = all of the group by default)."""
        k = self.carrier.rank
        elems = list(range(self.group.order)) if elements is None else list(elements)
        if k == 0:
            return subgroup_from_generators(self.carrier, [])
        I = np.eye(k, dtype=np.int64)
        mat = np.concatenate([self.action[g] - I for g in elems], axis=0)
        tgt = list(self.carrier.invariant_factors) * len(elems)
        mm = ModMap(self.carrier.invariant_factors, tgt, mat)
        return subgroup_from_generators(self.carrier, mm.kernel_gens())

    def is_equivariant(self, other: "GModule", h: GroupHom) -> bool:
        for g in range(self.group.order):
            for e in self.carrier.basis():
                if h(self.act(g, e)) != other.act(g, h(e)):
                    return False
        return True

    def __repr__(self) -> str:
        return f"GModule({self.name or '?'}: {self.carrier} over order {self.group.order})"


def submodule(M: GModule, sub: Subgroup, name: str = "") -> tuple[GModule, GroupHom]:
    """A G-stable subgroup as a module, with its inclusion into M."""
    k = sub.group.rank
    mats = np.zeros((M.group.order, k, k), dtype=np.int64)
    for g in range(M.group.order):
        for i, gen in enumerate(sub.generators()):
            img = M.act(g, gen)
            if not sub.contains(img):
                raise ModuleAxiomError("subgroup is not stable under the action")
            mats[g, :, i] = sub.coordinates(img)
    return GModule(M.group, sub.group, mats, name), sub.embedding


def module_over_quotient(M: GModule, Q: QuotientData, name: str = "") -> GModule:
    """M viewed as a module over G/N (the action of N must be trivial)."""
    reps = np.array(Q.representatives, dtype=np.int64)
    out = GModule(Q.group, M.carrier, M.action[reps], name, check=False)
    for g in range(M.group.order):
        if not (M.action[g] == out.action[Q.map[g]]).all():
            raise ModuleAxiomError("normal subgroup does not act trivially")
    return out


def inflated_module(M: GModule, Q: QuotientData, name: str = "") -> GModule:
    """A module over G/N pulled back to G."""
    return GModule(Q.ambient, M.carrier, M.action[Q.map], name, check=False)


def direct_sum_module(A: GModule, B: GModule, name: str = "") -> GModule:
    """A + B with block-diagonal action; requires the carriers to concatenate in chain form."""
    carrier = FinAbGroup(A.carrier.invariant_factors + B.carrier.invariant_factors)
    ka, kb = A.carrier.rank, B.carrier.rank
    mats = np.zeros((A.group.order, ka + kb, ka + kb), dtype=np.int64)
    mats[:, :ka, :ka] = A.action
    mats[:, ka:, ka:] = B.action
    return GModule(A.group, carrier, mats, name)


# ---------------------------------------------------------------------------
# Cochains


class Cochain:
    """Inhomogeneous p-cochain with values in a module."""

    __slots__ = ("module", "degree", "table")

    def __init__(self, module: GModule, degree: int, table):
        if degree < 0 or degree > MAX_DEGREE:
            raise ValueError(f"cochain degree {degree} outside 0..{MAX_DEGREE}")
        n, k = module.group.order, module.carrier.rank
        t = np.asarray(table, dtype=np.int64).reshape(n**degree, k)
        if k:
            t = t % module.moduli
        t.setflags(write=False)
        self.module = module
        self.degree = degree
        self.table = t

    @classmethod
    def zero(cls, module: GModule, degree: int) -> "Cochain":
        return cls(module, degree, np.zeros((module.group.order**degree, module.carrier.rank), dtype=np.int64))

    @classmethod
    def constant(cls, module: GModule, value) -> "Cochain":
        return cls(module, 0, np.asarray(value, dtype=np.int64).reshape(1, -1))

    @classmethod
    def from_function(cls, module: GModule, degree: int, fn: Callable[..., Sequence[int]]) -> "Cochain":
        d = _digits(module.group.order, degree)
        return cls(module, degree, [fn(*map(int, row)) for row in d] if len(d) else [])

    @classmethod
    def random(cls, module: GModule, degree: int, rng: np.random.Generator) -> "Cochain":
        n, k = module.group.order, module.carrier.rank
        if not k:
            return cls.zero(module, degree)
        return cls(module, degree, rng.integers(0, module.moduli, size=(n**degree, k)))

    def __call__(self, *gs: int) -> Element:
        if len(gs) != self.degree:
            raise ValueError("wrong number of arguments")
        r = 0
        for g in gs:
            r = r * self.module.group.order + g
        return tuple(int(v) for v in self.table[r])

    def _check(self, other: "Cochain"):
        if other.module is not self.module and not (
            other.module.carrier == self.module.carrier and other.module.group is self.module.group
        ):
            raise ValueError("cochains over different modules")
        if other.degree != self.degree:
            raise ValueError("cochains of different degrees")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._check(other)
        return Cochain(self.module, self.degree, self.table + other.table)

    def __sub__(self, other: "Cochain") -> "Cochain":
        self._check(other)
        return Cochain(self.module, self.degree, self.table - other.table)

    def __neg__(self) -> "Cochain":
        return Cochain(self.module, self.degree, -self.table)

    def __rmul__(self, k: int) -> "Cochain":
        return Cochain(self.module, self.degree, int(k) * self.table)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cochain):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.table, other.table)

    __hash__ = None  # type: ignore[assignment]

    def is_zero(self) -> bool:
        return not self.table.any()

    def vector(self) -> list[int]:
        """Flat coordinate vector in the diagonal group C^p."""
        return [int(v) for v in self.table.reshape(-1)]

    def with_module(self, module: GModule) -> "Cochain":
        return Cochain(module, self.degree, self.table)

    def __repr__(self) -> str:
        return f"Cochain(deg={self.degree}, {self.module!r})"


def differential(c: Cochain) -> Cochain:
    M = c.module
    G = M.group
    k = M.carrier.rank
    if k == 0:
        return Cochain.zero(M, c.degree + 1)
    first, terms = _differential_indices(G, c.degree)
    sign0, tail = terms[0]
    out = np.einsum("rij,rj->ri", M.action[first], c.table[tail])
    for sign, idx in terms[1:]:
        out = out + sign * c.table[idx]
    return Cochain(M, c.degree + 1, out)


def apply_hom(h: GroupHom, c: Cochain, target: GModule) -> Cochain:
    """Compose a cochain with a module homomorphism."""
    if target.carrier.rank == 0:
        return Cochain.zero(target, c.degree)
    mat = np.array(h.matrix, dtype=np.int64).reshape(target.carrier.rank, c.module.carrier.rank)
    return Cochain(target, c.degree, c.table @ mat.T)


# ---------------------------------------------------------------------------
# Cup products


class Pairing:
    """Bilinear map A x B -> C given by a tensor T[i, j] in C-coordinates."""

    def __init__(self, A: GModule, B: GModule, C: GModule, tensor, check: bool = True):
        self.A, self.B, self.C = A, B, C
        T = np.asarray(tensor, dtype=np.int64).reshape(A.carrier.rank, B.carrier.rank, C.carrier.rank)
        if C.carrier.rank:
            T = T % C.moduli
        T.setflags(write=False)
        self.tensor = T
        if check:
            self._check()

    def _check(self):
        A, B, C, T = self.A, self.B, self.C, self.tensor
        cm = C.moduli
        if C.carrier.rank:
            for i, d in enumerate(A.carrier.invariant_factors):
                if ((d * T[i]) % cm).any():
                    raise NonEquivariantPairing("pairing not well defined in the first argument")
            for j, d in enumerate(B.carrier.invariant_factors):
                if ((d * T[:, j]) % cm).any():
                    raise NonEquivariantPairing("pairing not well defined in the second argument")
        for g in range(A.group.order):
            lhs = np.einsum("ai,bj,abc->ijc", A.action[g], B.action[g], T)
            rhs = np.einsum("ck,ijk->ijc", C.action[g], T)
            if C.carrier.rank and ((lhs - rhs) % cm).any():
                raise NonEquivariantPairing(f"pairing not equivariant at group element {g}")

    def __call__(self, a, b) -> Element:
        v = np.einsum("i,j,ijc->c", np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64), self.tensor)
        return tuple(int(x) for x in v % self.C.moduli) if self.C.carrier.rank else ()

    def restrict(self, sub: SubgroupData) -> "Pairing":
        return Pairing(self.A.restrict(sub), self.B.restrict(sub), self.C.restrict(sub), self.tensor, check=False)


def cup(a: Cochain, b: Cochain, pairing: Pairing) -> Cochain:
    """(a u b)(g_1..g_{p+q}) = a(g_1..g_p) . (g_1...g_p) b(g_{p+1}..g_{p+q})."""
    G = a.module.group
    if b.module.group is not G:
        raise ValueError("cochains over different groups")
    p, q = a.degree, b.degree
    n = G.order
    C = pairing.C
    if C.carrier.rank == 0:
        return Cochain.zero(C, p + q)
    d = _digits(n, p + q)
    head = _encode(d[:, :p], n)
    tail = _encode(d[:, p:], n)
    pref = _prefix_products(G, p, q)
    bv = np.einsum("rij,rj->ri", pairing.B.action[pref], b.table[tail])
    out = np.einsum("ri,rj,ijc->rc", a.table[head], bv, pairing.tensor)
    return Cochain(C, p + q, out)


# ---------------------------------------------------------------------------
# Cohomology


def coboundary_matrix(M: GModule, p: int) -> ModMap:
    return _coboundary_map(M, p)


@lru_cache(maxsize=256)
def _coboundary_map(M: GModule, p: int) -> ModMap:
    G = M.group
    n, k = G.order, M.carrier.rank
    rows, cols = n ** (p + 1) * k, n**p * k
    mat = np.zeros((rows, cols), dtype=np.int64)
    if k:
        first, terms = _differential_indices(G, p)
        R = np.arange(n ** (p + 1))
        _, tail = terms[0]
        for a in range(k):
            for b in range(k):
                np.add.at(mat, (R * k + a, tail * k + b), M.action[first, a, b])
        for sign, idx in terms[1:]:
            for a in range(k):
                np.add.at(mat, (R * k + a, idx * k + a), sign)
    mod = list(M.carrier.invariant_factors)
    return ModMap(mod * n**p, mod * n ** (p + 1), mat)


class Cohomology:
    """H^p(G, M) = ker d_p / im d_{p-1} with explicit project and lift."""

    def __init__(self, M: GModule, p: int):
        if p < 0 or p > 3:
            raise ValueError("cohomology is computed in degrees 0..3")
        self.module = M
        self.degree = p
        n, k = M.group.order, M.carrier.rank
        moduli = list(M.carrier.invariant_factors) * n**p
        dp = _coboundary_map(M, p)
        ker = dp.kernel_gens()
        if p > 0:
            prev = _coboundary_map(M, p - 1)
            im = prev.image_gens()
        else:
            im = []
        self._sq = Subquotient(moduli, ker, im)
        self.group: FinAbGroup = self._sq.group

    def __iter__(self):
        yield self.group
        yield self.project
        yield self.lift

    def is_cocycle(self, c: Cochain) -> bool:
        return differential(c).is_zero()

    def project(self, c: Cochain) -> Element:
        if c.degree != self.degree:
            raise ValueError("degree mismatch")
        if not self._sq.contains(c.vector()):
            raise NotACocycle("cochain is not a cocycle")
        return self._sq.project(c.vector())

    def lift(self, x) -> Cochain:
        return Cochain(self.module, self.degree, self._sq.lift(self.group.reduce(x)))

    def basis(self) -> list[Cochain]:
        return [self.lift(e) for e in self.group.basis()]

    def is_coboundary(self, c: Cochain) -> bool:
        return self.project(c) == self.group.zero()

    def elements(self):
        return self.group.elements()

    def random_representative(self, x, rng: np.random.Generator) -> Cochain:
        """A random cocycle in the class x (lift plus a random coboundary)."""
        c = self.lift(x)
        if self.degree == 0:
            return c
        b = Cochain.random(self.module, self.degree - 1, rng)
        return c + differential(b)

    def induced(self, other: "Cohomology", fn: Callable[[Cochain], Cochain]) -> GroupHom:
        """The map on cohomology induced by a cochain map fn."""
        return GroupHom.from_images(self.group, other.group, [other.project(fn(c)) for c in self.basis()])


@lru_cache(maxsize=512)
def cohomology(M: GModule, p: int) -> Cohomology:
    return Cohomology(M, p)


def solve_coboundary(c: Cochain) -> Cochain:
    """Canonical b with db = c; raises NoSolution."""
    M = c.module
    if M.carrier.rank == 0:
        return Cochain.zero(M, c.degree - 1)
    x = _coboundary_map(M, c.degree - 1).solve(c.vector())
    return Cochain(M, c.degree - 1, x)


def coboundary_kernel_gens(M: GModule, p: int) -> list[Cochain]:
    """Generators of the p-cocycles."""
    return [Cochain(M, p, v) for v in _coboundary_map(M, p).kernel_gens()]


# ---------------------------------------------------------------------------
# Restriction, inflation


def restrict(c: Cochain, sub: SubgroupData, module: GModule | None = None) -> Cochain:
    """Restrict a cochain over G to the subgroup sub."""
    M = module if module is not None else c.module.restrict(sub)
    n, m = sub.ambient.order, sub.order
    d = _digits(m, c.degree)
    glob = _encode(sub.embedding[d], n) if c.degree else np.zeros(1, dtype=np.int64)
    return Cochain(M, c.degree, c.table[glob])


def inflate(c: Cochain, Q: QuotientData, module: GModule) -> Cochain:
    """Pull a cochain over G/N back to G; module is the target G-module."""
    n = Q.ambient.order
    d = _digits(n, c.degree)
    idx = _encode(Q.map[d], Q.group.order) if c.degree else np.zeros(1, dtype=np.int64)
    return Cochain(module, c.degree, c.table[idx])


# ---------------------------------------------------------------------------
# Sections and connecting maps


class SetSection:
    """A set-theoretic section sigma: M2 -> M of pi, stored as a value table."""

    def __init__(self, pi: GroupHom, values: dict[Element, Element]):
        M2 = pi.target
        self.pi = pi
        self.values = {tuple(k): tuple(v) for k, v in values.items()}
        zero = M2.zero()
        if self.values.get(zero) != pi.source.zero():
            raise ValueError("section must send 0 to 0")
        for y in M2.elements():
            x = self.values.get(y)
            if x is None or pi(x) != y:
                raise ValueError(f"section fails pi(sigma({y})) = {y}")
        self._order = [self.values[y] for y in M2.elements()]
        self._lookup = np.array(self._order, dtype=np.int64).reshape(M2.order, pi.source.rank)

    @classmethod
    def default(cls, pi: GroupHom) -> "SetSection":
        best: dict[Element, Element] = {}
        for x in pi.source.elements():
            y = pi(x)
            if y not in best:
                best[y] = x
        return cls(pi, best)

    @classmethod
    def random(cls, pi: GroupHom, rng: np.random.Generator) -> "SetSection":
        fibres: dict[Element, list[Element]] = {}
        for x in pi.source.elements():
            fibres.setdefault(pi(x), []).append(x)
        zero = pi.target.zero()
        vals = {}
        for y, xs in fibres.items():
            vals[y] = pi.source.zero() if y == zero else xs[int(rng.integers(len(xs)))]
        return cls(pi, vals)

    def __call__(self, y) -> Element:
        return self.values[tuple(y)]

    def is_additive(self) -> bool:
        M2 = self.pi.target
        M = self.pi.source
        return all(
            M.add(self(a), self(b)) == self(M2.add(a, b)) for a in M2.elements() for b in M2.elements()
        )

    def compose(self, c: Cochain, target: GModule) -> Cochain:
        """sigma o c, as a cochain valued in target (the middle module)."""
        M2 = c.module.carrier
        idx = np.zeros(c.table.shape[0], dtype=np.int64)
        for j, d in enumerate(M2.invariant_factors):
            idx = idx * d + c.table[:, j]
        return Cochain(target, c.degree, self._lookup[idx])


class Preimage:
    """Pointwise inverse of an injective hom on its image, as a lookup table."""

    def __init__(self, iota: GroupHom):
        self.iota = iota
        self._table = {iota(x): x for x in iota.source.elements()}
        if len(self._table) != iota.source.order:
            raise ValueError("map is not injective")

    def __call__(self, y) -> Element:
        try:
            return self._table[tuple(y)]
        except KeyError:
            raise LiftOutsideKernel(f"{tuple(y)} is not in the image") from None

    def compose(self, c: Cochain, target: GModule) -> Cochain:
        rows = [self(tuple(int(v) for v in row)) for row in c.table]
        return Cochain(target, c.degree, np.array(rows, dtype=np.int64).reshape(len(rows), target.carrier.rank))


def connecting_delta(a2: Cochain, iota: GroupHom, pi: GroupHom, sigma: SetSection, M1: GModule, M: GModule) -> Cochain:
    """iota^{-1}(d(sigma o a2)): the connecting map on cocycles."""
    lifted = sigma.compose(a2, M)
    return Preimage(iota).compose(differential(lifted), M1)


def deflate(c: Cochain, Q: QuotientData, module: GModule) -> Cochain:
    """Inverse of inflate on cochains that are pulled back from G/N."""
    reps = np.array(Q.representatives, dtype=np.int64)
    d = _digits(Q.group.order, c.degree)
    idx = _encode(reps[d], Q.ambient.order) if c.degree else np.zeros(1, dtype=np.int64)
    out = Cochain(module, c.degree, c.table[idx])
    if not np.array_equal(inflate(out, Q, c.module).table, c.table):
        raise ValueError("cochain is not inflated from the quotient")
    return out
