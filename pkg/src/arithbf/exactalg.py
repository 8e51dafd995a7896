"""Exact linear algebra over the integers and over the rings Z/E.

Finite abelian groups are kept in invariant-factor form.  Every subgroup,
kernel, image or subquotient is computed inside a "diagonal" group
Z/m_1 + ... + Z/m_n, embedded into (Z/E)^n with E = lcm(m_i) by scaling
coordinate i by E/m_i.  Submodules of (Z/E)^n are handled through their
Howell form, which gives membership tests and canonical (lexicographically
smallest) coset representatives.  Abstract structure is read off from a
Smith normal form over Z/E.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from math import gcd, lcm, prod
from typing import Iterable, Iterator, Sequence

import numpy as np

Element = tuple[int, ...]
IntMatrix = list[list[int]]


class NoSolution(ValueError):
    """Raised when a linear system has no solution."""


class NotInSubgroup(ValueError):
    """Raised when an element is outside the subgroup it is projected from."""


def _dtype(E: int):
    # int64 is safe while products of two reduced entries fit
    return np.int64 if E < (1 << 31) else object


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        return -a, -s0, -t0
    return a, s0, t0


def unit_normalizer(a: int, E: int) -> int:
    """A unit u of Z/E with u*a = gcd(a, E) mod E."""
    a %= E
    g = gcd(a, E)
    if a == 0 or E == 1:
        return 1
    Ep = E // g
    u = pow(a // g, -1, Ep) if Ep > 1 else 1
    while gcd(u, E) != 1:
        u += Ep
    return u % E


# ---------------------------------------------------------------------------
# Smith normal form over Z


def _identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def smith_normal_form(m: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Smith normal form U*m*V = S with U, V unimodular.

    Pivots are chosen row-major by smallest nonzero absolute value, ties to
    the lowest index.  Entries are Python integers throughout.
    """
    A = [[int(x) for x in row] for row in m]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    U = _identity(rows)
    V = _identity(cols)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for M in (A, V):
            for row in M:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):
        # row_dst += q * row_src
        A[dst] = [x + q * y for x, y in zip(A[dst], A[src])]
        U[dst] = [x + q * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, q):
        for M in (A, V):
            for row in M:
                row[dst] += q * row[src]

    for t in range(min(rows, cols)):
        while True:
            best = None
            for i in range(t, rows):
                for j in range(t, cols):
                    v = abs(A[i][j])
                    if v and (best is None or v < best[0]):
                        best = (v, i, j)
            if best is None:
                break
            _, i, j = best
            if i != t:
                swap_rows(i, t)
            if j != t:
                swap_cols(j, t)
            p = A[t][t]
            clean = True
            for i in range(t + 1, rows):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    if A[i][t]:
                        clean = False
            for j in range(t + 1, cols):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    if A[t][j]:
                        clean = False
            if not clean:
                continue
            bad = next(
                (i for i in range(t + 1, rows) for j in range(t + 1, cols) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
    return U, A, V


def det(m: Sequence[Sequence[int]]) -> int:
    """Exact integer determinant (Bareiss)."""
    A = [[int(x) for x in row] for row in m]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k]), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def matmul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> IntMatrix:
    inner = len(b)
    cols = len(b[0]) if inner else 0
    return [[sum(row[k] * b[k][j] for k in range(inner)) for j in range(cols)] for row in a]


# ---------------------------------------------------------------------------
# Howell form over Z/E


@dataclass(frozen=True)
class Howell:
    """Howell basis of a submodule of (Z/E)^n; rows ordered by pivot column."""

    E: int
    n: int
    rows: np.ndarray
    pivots: tuple[int, ...]

    @classmethod
    def of(cls, gens, E: int, n: int) -> "Howell":
        dt = _dtype(E)
        gens = np.asarray(gens, dtype=dt).reshape(-1, n) if n else np.zeros((0, 0), dtype=dt)
        A = np.zeros((gens.shape[0] + n, n), dtype=dt)
        A[: gens.shape[0]] = gens % E
        used = gens.shape[0]
        r = 0
        pivots = []
        for c in range(n):
            if r >= used:
                break
            nz = [i for i in np.nonzero(A[r + 1 : used, c])[0] + r + 1]
            for i in nz:
                a, b = int(A[r, c]), int(A[i, c])
                g, s, t = xgcd(a, b)
                top = (s * A[r] + t * A[i]) % E
                A[i] = ((-(b // g)) * A[r] + (a // g) * A[i]) % E
                A[r] = top
            if A[r, c] == 0:
                # move a later row with a nonzero entry here, if any
                continue
            u = unit_normalizer(int(A[r, c]), E)
            A[r] = (u * A[r]) % E
            p = int(A[r, c])
            for i in range(r):
                q = int(A[i, c]) // p
                if q:
                    A[i] = (A[i] - q * A[r]) % E
            extra = ((E // p) * A[r]) % E
            if extra.any():
                A[used] = extra
                used += 1
            pivots.append(c)
            r += 1
        rows = A[:r].copy()
        rows.setflags(write=False)
        return cls(E, n, rows, tuple(pivots))

    def reduce(self, v) -> tuple[np.ndarray, list[int]]:
        """Reduce v against the basis; returns (remainder, coefficients)."""
        v = np.asarray(v, dtype=self.rows.dtype) % self.E
        coeffs = []
        for row, c in zip(self.rows, self.pivots):
            q = int(v[c]) // int(row[c])
            if q:
                v = (v - q * row) % self.E
            coeffs.append(q)
        return v, coeffs

    def contains(self, v) -> bool:
        rem, _ = self.reduce(v)
        return not rem.any()


# ---------------------------------------------------------------------------
# Smith normal form over Z/E (used to read off abstract structure)


def _snf_mod(R: list[list[int]], r: int, E: int):
    """Diagonalize the relation rows R (each of length r) over Z/E.

    Returns (factors, V, Vinv) where coordinates c of (Z/E)^r map to
    c*V, in which the relation module is diagonal with the given factors
    (each a divisor of E; E itself stands for an unconstrained coordinate).
    """
    A = [[x % E for x in row] for row in R]
    q = len(A)
    V = _identity(r)
    Vinv = _identity(r)

    def col_op2(i, j, s, t, bp, ap):
        # new col_i = s*col_i + t*col_j ; new col_j = -bp*col_i + ap*col_j
        for M in (A, V):
            for row in M:
                x, y = row[i], row[j]
                row[i] = (s * x + t * y) % E
                row[j] = (-bp * x + ap * y) % E
        ri, rj = Vinv[i], Vinv[j]
        Vinv[i] = [(ap * x + bp * y) % E for x, y in zip(ri, rj)]
        Vinv[j] = [(-t * x + s * y) % E for x, y in zip(ri, rj)]

    def col_add(dst, src, k):
        # col_dst += k * col_src
        for M in (A, V):
            for row in M:
                row[dst] = (row[dst] + k * row[src]) % E
        Vinv[src] = [(x - k * y) % E for x, y in zip(Vinv[src], Vinv[dst])]

    def col_swap(i, j):
        for M in (A, V):
            for row in M:
                row[i], row[j] = row[j], row[i]
        Vinv[i], Vinv[j] = Vinv[j], Vinv[i]

    factors = []
    t = 0
    while t < min(q, r):
        best = None
        for i in range(t, q):
            for j in range(t, r):
                if A[i][j]:
                    key = (gcd(A[i][j], E), i, j)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        _, i, j = best
        A[i], A[t] = A[t], A[i]
        if j != t:
            col_swap(j, t)
        while True:
            u = unit_normalizer(A[t][t], E)
            A[t] = [(u * x) % E for x in A[t]]
            p = A[t][t]
            clean = True
            for i in range(t + 1, q):
                a = A[i][t]
                if not a:
                    continue
                if a % p == 0:
                    k = a // p
                    A[i] = [(x - k * y) % E for x, y in zip(A[i], A[t])]
                else:
                    g, s, tt = xgcd(p, a)
                    top = [(s * x + tt * y) % E for x, y in zip(A[t], A[i])]
                    A[i] = [(-(a // g) * x + (p // g) * y) % E for x, y in zip(A[t], A[i])]
                    A[t] = top
                    clean = False
                    break
            if not clean:
                continue
            for j in range(t + 1, r):
                a = A[t][j]
                if not a:
                    continue
                if a % p == 0:
                    col_add(j, t, -(a // p))
                else:
                    g, s, tt = xgcd(p, a)
                    col_op2(t, j, s, tt, a // g, p // g)
                    clean = False
                    break
            if not clean:
                continue
            bad = next(
                (i for i in range(t + 1, q) for j in range(t + 1, r) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            A[t] = [(x + y) % E for x, y in zip(A[t], A[bad])]
        factors.append(A[t][t])
        t += 1
    factors += [E] * (r - len(factors))
    return factors, V, Vinv


# ---------------------------------------------------------------------------
# Subquotients of diagonal groups


def _moduli_lcm(moduli: Iterable[int]) -> int:
    return lcm(1, *moduli)


class Subquotient:
    """The subquotient K/I of the diagonal group Z/m_1 + ... + Z/m_n.

    K and I are given by generators (integer vectors in the diagonal
    coordinates); I must lie in K.  ``group`` is K/I in invariant-factor
    form, with ``project`` (K -> group) and ``lift`` (group -> K).
    """

    def __init__(self, moduli: Sequence[int], num_gens, den_gens=(), E: int | None = None):
        self.moduli = tuple(int(m) for m in moduli)
        n = len(self.moduli)
        self.E = E if E is not None else _moduli_lcm(self.moduli)
        E = self.E
        dt = _dtype(E)
        self.scale = np.array([E // m for m in self.moduli], dtype=dt)
        K = self._embed_many(num_gens)
        self.K = Howell.of(K, E, n)
        r = len(self.K.rows)
        den = self._embed_many(den_gens)
        for v in den:
            if not self.K.contains(v):
                raise NotInSubgroup("denominator generator outside the numerator")
        # relations among the Howell rows of K modulo I
        aug = np.zeros((r + len(den), n + r), dtype=dt)
        if r:
            aug[:r, :n] = self.K.rows
            aug[:r, n:] = np.eye(r, dtype=dt)
        if len(den):
            aug[r:, :n] = den
        H = Howell.of(aug, E, n + r)
        rel = [list(map(int, row[n:])) for row, c in zip(H.rows, H.pivots) if c >= n]
        factors, V, Vinv = _snf_mod(rel, r, E)
        self._keep = [i for i, d in enumerate(factors) if d != 1]
        self.group = FinAbGroup(tuple(factors[i] for i in self._keep))
        self._V = V
        self._Vinv = Vinv
        self._r = r

    def _embed_many(self, gens) -> np.ndarray:
        dt = _dtype(self.E)
        n = len(self.moduli)
        gens = [list(g) for g in gens]
        if not gens:
            return np.zeros((0, n), dtype=dt)
        arr = np.array(gens, dtype=dt).reshape(len(gens), n)
        return (arr * self.scale) % self.E

    def embed(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=_dtype(self.E)) * self.scale) % self.E

    def unembed(self, y) -> Element:
        return tuple(int(v) // int(s) if s else 0 for v, s in zip(y, self.scale))

    def contains(self, x) -> bool:
        return self.K.contains(self.embed(x))

    def coefficients(self, x) -> list[int]:
        rem, coeffs = self.K.reduce(self.embed(x))
        if rem.any():
            raise NotInSubgroup(f"{tuple(x)} is not in the subgroup")
        return coeffs

    def project(self, x) -> Element:
        c = self.coefficients(x)
        E = self.E
        out = []
        for i in self._keep:
            v = sum(c[j] * self._V[j][i] for j in range(self._r)) % E
            out.append(v % self.group_factor(i))
        return tuple(out)

    def group_factor(self, i: int) -> int:
        return self.group.invariant_factors[self._keep.index(i)]

    def lift(self, y) -> Element:
        E = self.E
        c = [0] * self._r
        for k, i in enumerate(self._keep):
            if y[k]:
                for j in range(self._r):
                    c[j] += y[k] * self._Vinv[i][j]
        v = np.zeros(len(self.moduli), dtype=_dtype(E))
        for j, cj in enumerate(c):
            if cj % E:
                v = (v + (cj % E) * self.K.rows[j]) % E
        return self.unembed(v)

    def generators(self) -> list[Element]:
        k = self.group.rank
        return [self.lift(tuple(int(i == j) for j in range(k))) for i in range(k)]

    def canonical(self, x) -> Element:
        """Lexicographically smallest element of the coset x + K."""
        rem, _ = self.K.reduce(self.embed(x))
        return self.unembed(rem)


# ---------------------------------------------------------------------------
# Homomorphisms between diagonal groups


class ModMap:
    """Homomorphism Z/m_1+...+Z/m_n -> Z/t_1+...+Z/t_k given by an integer matrix."""

    def __init__(self, src_moduli: Sequence[int], tgt_moduli: Sequence[int], matrix):
        self.src = tuple(int(m) for m in src_moduli)
        self.tgt = tuple(int(t) for t in tgt_moduli)
        self.E = _moduli_lcm(self.src + self.tgt)
        dt = _dtype(self.E)
        mat = np.asarray(matrix, dtype=dt).reshape(len(self.tgt), len(self.src))
        self.matrix = mat

    def apply(self, x) -> Element:
        x = np.asarray(x, dtype=self.matrix.dtype)
        y = self.matrix @ x if len(self.src) else np.zeros(len(self.tgt), dtype=self.matrix.dtype)
        return tuple(int(v) % t for v, t in zip(y, self.tgt))

    @cached_property
    def _aug(self) -> Howell:
        E = self.E
        n, k = len(self.src), len(self.tgt)
        dt = _dtype(E)
        tscale = np.array([E // t for t in self.tgt], dtype=dt)
        rows = np.zeros((n, k + n), dtype=dt)
        for i, m in enumerate(self.src):
            if k:
                rows[i, :k] = (self.matrix[:, i] % E) * tscale % E
            rows[i, k + i] = E // m
        return Howell.of(rows, E, k + n)

    @cached_property
    def _kernel_howell(self) -> Howell:
        k = len(self.tgt)
        H = self._aug
        ker = [row[k:] for row, c in zip(H.rows, H.pivots) if c >= k]
        return Howell.of(ker, self.E, len(self.src))

    def kernel_gens(self) -> list[Element]:
        s = [self.E // m for m in self.src]
        return [tuple(int(v) // si for v, si in zip(row, s)) for row in self._kernel_howell.rows]

    def image_gens(self) -> list[Element]:
        k = len(self.tgt)
        ts = [self.E // t for t in self.tgt]
        return [
            tuple(int(v) // si for v, si in zip(row[:k], ts))
            for row, c in zip(self._aug.rows, self._aug.pivots)
            if c < k
        ]

    def solve(self, b) -> Element:
        """Canonical solution of h(x) = b (lexicographically smallest)."""
        E = self.E
        k, n = len(self.tgt), len(self.src)
        dt = _dtype(E)
        v = np.zeros(k + n, dtype=dt)
        ts = np.array([E // t for t in self.tgt], dtype=dt)
        v[:k] = (np.asarray(b, dtype=dt) % np.array(self.tgt, dtype=dt)) * ts % E
        H = self._aug
        for row, c in zip(H.rows, H.pivots):
            if c >= k:
                break
            q = int(v[c]) // int(row[c])
            if q:
                v = (v - q * row) % E
        if v[:k].any():
            raise NoSolution("right-hand side is not in the image")
        y = (-v[k:]) % E
        y, _ = self._kernel_howell.reduce(y)
        s = [E // m for m in self.src]
        return tuple(int(val) // si for val, si in zip(y, s))


# ---------------------------------------------------------------------------
# Public group types


@dataclass(frozen=True)
class FinAbGroup:
    """Finite abelian group Z/d_1 + ... + Z/d_k with d_1 | d_2 | ... | d_k."""

    invariant_factors: tuple[int, ...] = ()

    def __post_init__(self):
        d = tuple(int(x) for x in self.invariant_factors)
        object.__setattr__(self, "invariant_factors", d)
        for i, x in enumerate(d):
            if x < 2:
                raise ValueError(f"invariant factor {x} < 2")
            if i + 1 < len(d) and d[i + 1] % x:
                raise ValueError(f"invariant factors {d} do not form a divisibility chain")

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def order(self) -> int:
        return prod(self.invariant_factors)

    @property
    def exponent(self) -> int:
        return self.invariant_factors[-1] if self.invariant_factors else 1

    def zero(self) -> Element:
        return (0,) * self.rank

    def reduce(self, x) -> Element:
        return tuple(int(v) % d for v, d in zip(x, self.invariant_factors))

    def is_element(self, x) -> bool:
        return len(x) == self.rank and all(0 <= int(v) < d for v, d in zip(x, self.invariant_factors))

    def add(self, x, y) -> Element:
        return tuple((a + b) % d for a, b, d in zip(x, y, self.invariant_factors))

    def sub(self, x, y) -> Element:
        return tuple((a - b) % d for a, b, d in zip(x, y, self.invariant_factors))

    def neg(self, x) -> Element:
        return tuple((-a) % d for a, d in zip(x, self.invariant_factors))

    def scale(self, k: int, x) -> Element:
        return tuple((k * a) % d for a, d in zip(x, self.invariant_factors))

    def elements(self) -> Iterator[Element]:
        return product(*(range(d) for d in self.invariant_factors))

    def basis(self) -> list[Element]:
        k = self.rank
        return [tuple(int(i == j) for j in range(k)) for i in range(k)]

    def element_order(self, x) -> int:
        return lcm(1, *(d // gcd(d, a) for a, d in zip(x, self.invariant_factors)))

    def random_element(self, rng) -> Element:
        return tuple(int(rng.integers(d)) for d in self.invariant_factors)

    def index(self, x) -> int:
        """Position of x in the lexicographic enumeration of the group."""
        i = 0
        for a, d in zip(x, self.invariant_factors):
            i = i * d + a
        return i

    def __str__(self) -> str:
        if not self.invariant_factors:
            return "0"
        return " + ".join(f"Z/{d}" for d in self.invariant_factors)


@dataclass(frozen=True, eq=False)
class GroupHom:
    """Homomorphism of finite abelian groups; matrix is target-rank x source-rank."""

    source: FinAbGroup
    target: FinAbGroup
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        mat = tuple(tuple(int(v) for v in row) for row in self.matrix)
        if len(mat) != self.target.rank or any(len(r) != self.source.rank for r in mat):
            if not (self.target.rank == 0 and len(mat) == 0):
                raise ValueError("matrix shape does not match source and target")
        object.__setattr__(self, "matrix", mat)
        for i, d in enumerate(self.source.invariant_factors):
            for j, t in enumerate(self.target.invariant_factors):
                if (d * mat[j][i]) % t:
                    raise ValueError(f"matrix is not well defined on generator {i}")

    @classmethod
    def zero(cls, source: FinAbGroup, target: FinAbGroup) -> "GroupHom":
        return cls(source, target, tuple((0,) * source.rank for _ in range(target.rank)))

    @classmethod
    def identity(cls, group: FinAbGroup) -> "GroupHom":
        return cls(group, group, tuple(tuple(int(i == j) for j in range(group.rank)) for i in range(group.rank)))

    @classmethod
    def from_images(cls, source: FinAbGroup, target: FinAbGroup, images: Sequence[Element]) -> "GroupHom":
        """Hom sending the i-th basis vector of source to images[i]."""
        mat = tuple(tuple(int(images[i][j]) for i in range(source.rank)) for j in range(target.rank))
        return cls(source, target, mat)

    @cached_property
    def _map(self) -> ModMap:
        return ModMap(self.source.invariant_factors, self.target.invariant_factors, self.matrix or np.zeros((0, self.source.rank)))

    def __call__(self, x) -> Element:
        if self.target.rank == 0:
            return ()
        return self._map.apply(x)

    def compose(self, other: "GroupHom") -> "GroupHom":
        """self o other."""
        if other.target != self.source:
            raise ValueError("composition of mismatched homomorphisms")
        images = [self(other(e)) for e in other.source.basis()]
        return GroupHom.from_images(other.source, self.target, images)

    def is_injective(self) -> bool:
        return kernel(self).group.order == 1

    def is_surjective(self) -> bool:
        return image(self).group.order == self.target.order


@dataclass(frozen=True, eq=False)
class Subgroup:
    """A subgroup presented abstractly, with its embedding into the ambient group."""

    group: FinAbGroup
    embedding: GroupHom
    _sq: Subquotient = field(repr=False)

    @property
    def ambient(self) -> FinAbGroup:
        return self.embedding.target

    @property
    def order(self) -> int:
        return self.group.order

    def contains(self, x) -> bool:
        return self._sq.contains(x)

    def coordinates(self, x) -> Element:
        """Preimage of x under the embedding."""
        return self._sq.project(x)

    def generators(self) -> list[Element]:
        return [self.embedding(e) for e in self.group.basis()]

    def elements(self) -> Iterator[Element]:
        for y in self.group.elements():
            yield self.embedding(y)

    def canonical(self, x) -> Element:
        return self._sq.canonical(x)

    def issubset(self, other: "Subgroup") -> bool:
        return all(other.contains(g) for g in self.generators())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subgroup):
            return NotImplemented
        return self.order == other.order and self.issubset(other)

    __hash__ = object.__hash__


def subgroup_from_generators(G: FinAbGroup, gens: Iterable[Element]) -> Subgroup:
    """Smallest subgroup of G containing gens."""
    gens = [G.reduce(g) for g in gens]
    sq = Subquotient(G.invariant_factors, gens)
    emb = GroupHom.from_images(sq.group, G, [G.reduce(v) for v in sq.generators()])
    return Subgroup(sq.group, emb, sq)


def kernel(h: GroupHom) -> Subgroup:
    if h.target.rank == 0:
        return subgroup_from_generators(h.source, h.source.basis())
    return subgroup_from_generators(h.source, h._map.kernel_gens())


def image(h: GroupHom) -> Subgroup:
    return subgroup_from_generators(h.target, [h(e) for e in h.source.basis()])


def solve_mod(h: GroupHom, b: Element) -> Element:
    """Canonical x with h(x) = b; raises NoSolution."""
    if not h.target.is_element(tuple(b)):
        raise ValueError(f"{b} is not an element of the target")
    if h.target.rank == 0:
        return h.source.zero()
    return h._map.solve(b)


@dataclass(frozen=True, eq=False)
class Quotient:
    """G/H with projection and a set-theoretic section."""

    group: FinAbGroup
    ambient: FinAbGroup
    _sq: Subquotient = field(repr=False)

    def project(self, x) -> Element:
        return self._sq.project(x)

    def lift(self, y) -> Element:
        return self.ambient.reduce(self._sq.lift(y))

    @cached_property
    def projection(self) -> GroupHom:
        return GroupHom.from_images(self.ambient, self.group, [self.project(e) for e in self.ambient.basis()])


def quotient(G: FinAbGroup, gens: Iterable[Element]) -> Quotient:
    sq = Subquotient(G.invariant_factors, G.basis(), [G.reduce(g) for g in gens])
    return Quotient(sq.group, G, sq)


@dataclass(frozen=True, eq=False)
class DirectSum:
    """Direct sum of groups, normalized to invariant-factor form."""

    group: FinAbGroup
    summands: tuple[FinAbGroup, ...]
    _sq: Subquotient = field(repr=False)

    def join(self, parts: Sequence[Element]) -> Element:
        flat = [v for part in parts for v in part]
        return self._sq.project(flat)

    def split(self, x) -> tuple[Element, ...]:
        flat = self._sq.lift(x)
        out, i = [], 0
        for s in self.summands:
            out.append(s.reduce(flat[i : i + s.rank]))
            i += s.rank
        return tuple(out)

    def injection(self, k: int) -> GroupHom:
        images = []
        for e in self.summands[k].basis():
            parts = [s.zero() for s in self.summands]
            parts[k] = e
            images.append(self.join(parts))
        return GroupHom.from_images(self.summands[k], self.group, images)

    def projection(self, k: int) -> GroupHom:
        return GroupHom.from_images(self.group, self.summands[k], [self.split(e)[k] for e in self.group.basis()])


def direct_sum(groups: Sequence[FinAbGroup]) -> DirectSum:
    moduli = [d for g in groups for d in g.invariant_factors]
    n = len(moduli)
    basis = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    sq = Subquotient(moduli, basis)
    return DirectSum(sq.group, tuple(groups), sq)


def hom_from_function(source: FinAbGroup, target: FinAbGroup, f) -> GroupHom:
    """Hom determined by its values on the basis of source (f must be additive)."""
    return GroupHom.from_images(source, target, [target.reduce(f(e)) for e in source.basis()])
