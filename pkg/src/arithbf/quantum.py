"""Exact quantum layer: cyclotomic amplitudes, sections over boundary fields, partition functions.

Amplitudes exp(2 pi i t) for t in (1/N)Z/Z are classes of x^(tN) in
Z[x]/Phi_N(x).  Equality there is equality of complex numbers, so every
identity below is checked exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bfcore import (
    REVERSED,
    STANDARD,
    LocalPoint,
    SectionXi,
    TorsorPoint,
    bf_closed,
    combine,
    default_section,
    field_profile,
    global_bf,
    local_bf_unramified,
    ordered,
    space_of_fields,
    torsors,
    trivialize,
)
from .exactalg import Element
from .sitemodel import QmodZ, SiteFixture


class DenominatorMismatch(ValueError):
    pass


class SectionMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# Cyclotomic integers


def _poly_divexact(num: list[int], den: list[int]) -> list[int]:
    """num / den for integer polynomials (low degree first), den monic, exact."""
    num = list(num)
    dd = len(den) - 1
    out = [0] * (len(num) - dd)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + dd]
        out[i] = c
        for j, d in enumerate(den):
            num[i + j] -= c * d
    if any(num[:dd]):
        raise ArithmeticError("polynomial division is not exact")
    return out


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Phi_n, computed as (x^n - 1) divided by Phi_d for the proper divisors d of n."""
    if n < 1:
        raise ValueError("n must be positive")
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly = _poly_divexact(poly, list(cyclotomic_polynomial(d)))
    return tuple(poly)


@lru_cache(maxsize=None)
def _power_table(N: int) -> np.ndarray:
    """Row k is x^k reduced modulo Phi_N, for 0 <= k < N."""
    phi = cyclotomic_polynomial(N)
    deg = len(phi) - 1
    rows = np.zeros((N, deg), dtype=np.int64)
    cur = [0] * deg
    cur[0] = 1
    for k in range(N):
        rows[k] = cur
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [c - top * p for c, p in zip(cur, phi[:deg])]
    return rows


class CycInt:
    """An element of Z[x]/Phi_N in the power basis 1, x, ..., x^(phi(N)-1)."""

    __slots__ = ("N", "coeffs")

    def __init__(self, N: int, coeffs: Sequence[int]):
        deg = len(cyclotomic_polynomial(N)) - 1
        c = [int(v) for v in coeffs]
        if len(c) > deg:
            c = _reduce_long(N, c)
        self.N = N
        self.coeffs = tuple(c + [0] * (deg - len(c)))

    @classmethod
    def from_int(cls, N: int, k: int) -> "CycInt":
        return cls(N, [k])

    @classmethod
    def zero(cls, N: int) -> "CycInt":
        return cls(N, [])

    @classmethod
    def one(cls, N: int) -> "CycInt":
        return cls(N, [1])

    @classmethod
    def root(cls, N: int, k: int) -> "CycInt":
        """The class of x^k."""
        return cls(N, _power_table(N)[k % N].tolist())

    def _check(self, other: "CycInt") -> None:
        if self.N != other.N:
            raise ValueError(f"cyclotomic levels differ: {self.N} vs {other.N}")

    def _coerce(self, other) -> "CycInt":
        if isinstance(other, int):
            return CycInt.from_int(self.N, other)
        self._check(other)
        return other

    def __add__(self, other) -> "CycInt":
        other = self._coerce(other)
        return CycInt(self.N, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self) -> "CycInt":
        return CycInt(self.N, [-a for a in self.coeffs])

    def __sub__(self, other) -> "CycInt":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "CycInt":
        return self._coerce(other) - self

    def __mul__(self, other) -> "CycInt":
        other = self._coerce(other)
        acc = [0] * self.N
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        acc[(i + j) % self.N] += a * b
        return CycInt(self.N, _from_powers(self.N, acc))

    __rmul__ = __mul__

    def conj(self) -> "CycInt":
        """Complex conjugation: x -> x^(N-1)."""
        acc = [0] * self.N
        for i, a in enumerate(self.coeffs):
            acc[(-i) % self.N] += a
        return CycInt(self.N, _from_powers(self.N, acc))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational_integer(self) -> bool:
        return not any(self.coeffs[1:])

    def to_int(self) -> int:
        if not self.is_rational_integer():
            raise ValueError(f"{self} is not a rational integer")
        return self.coeffs[0]

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = CycInt.from_int(self.N, other)
        if not isinstance(other, CycInt):
            return NotImplemented
        return self.N == other.N and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.N, self.coeffs))

    def __repr__(self) -> str:
        return f"CycInt({self.N}, {list(self.coeffs)})"

    def __str__(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(str(c) if i == 0 else f"{c}*x" + (f"^{i}" if i > 1 else ""))
        return " + ".join(terms) if terms else "0"


def _from_powers(N: int, acc: Sequence[int]) -> list[int]:
    """Sum of acc[k] x^k over k < N, reduced."""
    return (np.asarray(acc, dtype=np.int64) @ _power_table(N)).tolist()


def _reduce_long(N: int, c: Sequence[int]) -> list[int]:
    acc = [0] * N
    for k, v in enumerate(c):
        acc[k % N] += v
    return _from_powers(N, acc)


def amplitude(t: QmodZ, N: int) -> CycInt:
    """exp(2 pi i t) as the class of x^(tN)."""
    if N % t.denominator:
        raise DenominatorMismatch(f"{t} does not lie in (1/{N})Z/Z")
    return CycInt.root(N, t.numerator * (N // t.denominator))


# ---------------------------------------------------------------------------
# Sections over boundary fields


Fiber = tuple[Element, ...]


def boundary_fields(f: SiteFixture, S: Iterable[str]) -> list[Fiber]:
    """F_S = product of F_x over S, in canonical order."""
    S = ordered(f, S)
    groups = [f.local_fields(f.place(s)).group for s in S]
    return [tuple(x) for x in product(*(list(g.elements()) for g in groups))]


@dataclass(frozen=True, eq=False)
class AmplitudeSection:
    """A trivialized section over F_S: one CycInt per boundary field."""

    S: tuple[str, ...]
    xi: SectionXi
    N: int
    table: Mapping[Fiber, CycInt]

    def __call__(self, fiber: Sequence[Element]) -> CycInt:
        return self.table.get(tuple(tuple(x) for x in fiber), CycInt.zero(self.N))

    @property
    def fibers(self) -> list[Fiber]:
        return sorted(self.table)

    def scale(self, lam: CycInt) -> "AmplitudeSection":
        return AmplitudeSection(self.S, self.xi, self.N, {k: lam * v for k, v in self.table.items()})

    def conj(self) -> "AmplitudeSection":
        return AmplitudeSection(self.S, self.xi, self.N, {k: v.conj() for k, v in self.table.items()})

    def equals(self, other: "AmplitudeSection") -> bool:
        keys = set(self.table) | set(other.table)
        return self.S == other.S and all(self(k) == other(k) for k in keys)

    def differences(self, other: "AmplitudeSection") -> list[dict]:
        keys = sorted(set(self.table) | set(other.table))
        return [
            {"fiber": [list(x) for x in k], "lhs": list(self(k).coeffs), "rhs": list(other(k).coeffs)}
            for k in keys
            if self(k) != other(k)
        ]


def section_from_function(f: SiteFixture, S: Iterable[str], xi: SectionXi, fn) -> AmplitudeSection:
    S = ordered(f, S)
    return AmplitudeSection(S, xi, f.modulus, {k: fn(k) for k in boundary_fields(f, S)})


def _same_xi(a: SectionXi, b: SectionXi) -> bool:
    return a is b or (a.S == b.S and len(a.parts) == len(b.parts) and all(x is y for x, y in zip(a.parts, b.parts)))


def inner_product(a: AmplitudeSection, b: AmplitudeSection) -> CycInt:
    """sum over F_S of a(alpha) * conj(b(alpha))."""
    if a.S != b.S or a.N != b.N or not _same_xi(a.xi, b.xi):
        raise SectionMismatch("sections live over different place sets or trivializations")
    total = CycInt.zero(a.N)
    for k in set(a.table) | set(b.table):
        total = total + a(k) * b(k).conj()
    return total


# ---------------------------------------------------------------------------
# Partition functions


def partition_closed(f: SiteFixture, rng: np.random.Generator | None = None) -> CycInt:
    """Z_X = sum over F(X) of exp(2 pi i BF_X(rho))."""
    N = f.modulus
    total = CycInt.zero(N)
    for rho in space_of_fields(f).elements:
        total = total + amplitude(bf_closed(f, rho, rng), N)
    return total


def partition_relative(
    f: SiteFixture, S: Iterable[str], xi: SectionXi | None = None, rng: np.random.Generator | None = None
) -> AmplitudeSection:
    """Z_{X_S}^xi over F_S; for S empty the single fibre carries Z_X."""
    S = ordered(f, S)
    xi = xi or default_section(f, S)
    N = f.modulus
    if not S:
        return AmplitudeSection((), xi, N, {(): partition_closed(f, rng)})
    table = {k: CycInt.zero(N) for k in boundary_fields(f, S)}
    for rho in space_of_fields(f, S).elements:
        fib = tuple(tuple(field_profile(f, rho, f.place(s))) for s in S)
        table[fib] = table[fib] + amplitude(trivialize(f, xi, global_bf(f, S, rho, rng)), N)
    return AmplitudeSection(S, xi, N, table)


def fiber_sizes(f: SiteFixture, S: Iterable[str]) -> dict[Fiber, int]:
    """Number of fields of F(X_S) in each fibre of the boundary map."""
    S = ordered(f, S)
    out = {k: 0 for k in boundary_fields(f, S)}
    for rho in space_of_fields(f, S).elements:
        out[tuple(tuple(field_profile(f, rho, f.place(s))) for s in S)] += 1
    return out


def unramified_boundary(f: SiteFixture, TS: Sequence[str]) -> list[tuple[Element, ...]]:
    """BC(dX_S) on T - S: products of unramified fields (zero off Y)."""
    groups = []
    for s in TS:
        place = f.place(s)
        if place.in_Y:
            groups.append(list(place.unramified.fields.elements()))
        else:
            groups.append([None])
    return [tuple(x) for x in product(*groups)]


def _nr_point(f: SiteFixture, TS: Sequence[str], gamma, rng) -> TorsorPoint:
    pts: list[LocalPoint] = []
    for s, g in zip(TS, gamma):
        place = f.place(s)
        pts.append(torsors(f).zero_point(place) if g is None else local_bf_unramified(f, place, g, rng))
    return TorsorPoint(tuple(TS), tuple(pts))


def boundary_partition(
    f: SiteFixture,
    S: Iterable[str],
    T: Iterable[str],
    xi: SectionXi | None = None,
    starred: bool = True,
    rng: np.random.Generator | None = None,
) -> AmplitudeSection:
    """Z^{dX_S}_{T-S} over F_{T-S}; the starred version uses the reversed orientation."""
    S, T = ordered(f, S), ordered(f, T)
    if not set(S) <= set(T):
        raise ValueError("S must be contained in T")
    TS = tuple(t for t in T if t not in S)
    xi = xi or default_section(f, TS)
    N = f.modulus
    table = {k: CycInt.zero(N) for k in boundary_fields(f, TS)}
    orientation = REVERSED if starred else STANDARD
    for gamma in unramified_boundary(f, TS):
        p = _nr_point(f, TS, gamma, rng)
        table[p.fiber] = table[p.fiber] + amplitude(trivialize(f, xi, p, orientation), N)
    return AmplitudeSection(TS, xi, N, table)


def glue(f: SiteFixture, Z_T: AmplitudeSection, C: AmplitudeSection) -> AmplitudeSection:
    """<Z_T, C>(alpha) = sum over gamma in F_{T-S} of Z_T(alpha + gamma) C(gamma)."""
    T = Z_T.S
    TS = C.S
    if not set(TS) <= set(T) or Z_T.N != C.N:
        raise SectionMismatch("boundary section does not live over a subset of T")
    S = tuple(t for t in T if t not in TS)
    parts_T = list(Z_T.xi.parts)
    for part in C.xi.parts:
        if not any(part is q for q in parts_T):
            raise SectionMismatch("xi_T is not xi_S boxplus xi_{T-S}")
    rest = tuple(q for q in parts_T if not any(q is c for c in C.xi.parts))
    if any(set(places) & set(TS) for places, _ in rest):
        raise SectionMismatch("xi_T does not split along S and T - S")
    xi_S = SectionXi(S, rest)
    pos = {t: i for i, t in enumerate(T)}
    table = {k: CycInt.zero(Z_T.N) for k in boundary_fields(f, S)}
    for key, val in Z_T.table.items():
        if val.is_zero():
            continue
        alpha = tuple(key[pos[s]] for s in S)
        gamma = tuple(key[pos[s]] for s in TS)
        table[alpha] = table[alpha] + val * C(gamma)
    return AmplitudeSection(S, xi_S, Z_T.N, table)


# ---------------------------------------------------------------------------
# Tensor decomposition


@dataclass
class TensorReport:
    S: tuple[str, ...]
    trials: int
    failures: list[dict]

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {"S": list(self.S), "trials": self.trials, "passed": self.passed, "failures": self.failures}


def _random_cyc(N: int, rng: np.random.Generator) -> CycInt:
    deg = len(cyclotomic_polynomial(N)) - 1
    return CycInt(N, rng.integers(-3, 4, size=deg).tolist())


def tensor_factor_check(
    f: SiteFixture,
    S: Iterable[str],
    xis: Mapping[str, SectionXi] | None = None,
    trials: int = 20,
    rng: np.random.Generator | None = None,
) -> TensorReport:
    """Trivializing a product of per-place sections by the box-sum of the xi_u gives the product of trivializations."""
    S = ordered(f, S)
    rng = rng or np.random.default_rng(0)
    xis = dict(xis or {s: default_section(f, [s]) for s in S})
    xi_S = SectionXi(())
    for s in S:
        xi_S = xi_S.boxplus(xis[s], f)
    N = f.modulus
    T = torsors(f)
    fails = []
    for trial in range(trials):
        # a section of L_u: a point over each rho_u and a complex scalar
        local = {}
        for s in S:
            place = f.place(s)
            pts, scal = {}, {}
            for (x,) in boundary_fields(f, [s]):
                pts[x] = T.base_point(place, x).shifted(QmodZ(int(rng.integers(N)), N))
                scal[x] = _random_cyc(N, rng) if trial % 2 else CycInt.one(N)
            local[s] = (pts, scal)
        per_place = {}
        for s in S:
            pts, scal = local[s]
            per_place[s] = {
                x: scal[x] * amplitude(trivialize(f, xis[s], TorsorPoint((s,), (pts[x],))), N) for x in pts
            }
        for fib in boundary_fields(f, S):
            lhs = CycInt.one(N)
            for s, x in zip(S, fib):
                lhs = lhs * per_place[s][x]
            point = TorsorPoint((), ())
            scalar = CycInt.one(N)
            for s, x in zip(S, fib):
                pts, scal = local[s]
                point = combine(point, TorsorPoint((s,), (pts[x],)), f)
                scalar = scalar * scal[x]
            rhs = scalar * amplitude(trivialize(f, xi_S, point), N)
            if lhs != rhs:
                fails.append({"trial": trial, "fiber": [list(x) for x in fib], "lhs": list(lhs.coeffs), "rhs": list(rhs.coeffs)})
    return TensorReport(S, trials, fails)
