"""Finite arithmetic site fixtures: a global group, places, dualizing module, invariants.

A fixture is the finite stand-in for the global/local Galois picture.  The
global group plays the role of a finite Galois quotient, each place carries a
decomposition subgroup with an inertia subgroup, and the finite module D
plays the role of the separable multiplicative group.  Local invariant maps
are injective homomorphisms H^2(decomposition, D) -> (1/N)Z/Z.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .exactalg import (
    Element,
    FinAbGroup,
    GroupHom,
    NoSolution,
    Subgroup,
    Subquotient,
    direct_sum,
    image,
    kernel,
    solve_mod,
    subgroup_from_generators,
)
from .groupcoh import (
    Cochain,
    Cohomology,
    FiniteGroup,
    GModule,
    GroupAxiomError,
    ModuleAxiomError,
    Pairing,
    Preimage,
    QuotientData,
    SetSection,
    SubgroupData,
    apply_hom,
    cohomology,
    cup,
    differential,
    inflate,
    module_over_quotient,
    restrict,
    solve_coboundary,
    submodule,
)


class FixtureError(ValueError):
    """Structurally malformed fixture data."""


class ObstructionNonzero(RuntimeError):
    """A cochain equation dphi = c has no solution (an H^3-type obstruction)."""

    def __init__(self, where: str, detail: str = ""):
        super().__init__(f"obstruction nonzero at {where}" + (f": {detail}" if detail else ""))
        self.where = where
        self.detail = detail


# ---------------------------------------------------------------------------
# Q/Z values


@dataclass(frozen=True, order=True)
class QmodZ:
    """An element of Q/Z in lowest terms, 0 <= numerator < denominator."""

    numerator: int = 0
    denominator: int = 1

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        f = Fraction(self.numerator % self.denominator, self.denominator)
        object.__setattr__(self, "numerator", f.numerator)
        object.__setattr__(self, "denominator", f.denominator)

    @classmethod
    def of(cls, a: int, b: int) -> "QmodZ":
        return cls(a, b)

    @classmethod
    def from_fraction(cls, f: Fraction) -> "QmodZ":
        return cls(f.numerator, f.denominator)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __add__(self, other: "QmodZ") -> "QmodZ":
        return QmodZ.from_fraction(self.fraction + other.fraction)

    def __sub__(self, other: "QmodZ") -> "QmodZ":
        return QmodZ.from_fraction(self.fraction - other.fraction)

    def __neg__(self) -> "QmodZ":
        return QmodZ(-self.numerator, self.denominator)

    def __mul__(self, k: int) -> "QmodZ":
        return QmodZ(self.numerator * int(k), self.denominator)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.numerator == 0

    def on_level(self, N: int) -> int:
        """The integer a with self = a/N; raises if the denominator does not divide N."""
        if N % self.denominator:
            raise ValueError(f"{self} does not have denominator dividing {N}")
        return self.numerator * (N // self.denominator)

    def __str__(self) -> str:
        return "0" if self.numerator == 0 else f"{self.numerator}/{self.denominator}"

    def __repr__(self) -> str:
        return f"QmodZ({self})"


ZERO = QmodZ()


def qsum(values: Iterable[QmodZ]) -> QmodZ:
    total = Fraction(0)
    for v in values:
        total += v.fraction
    return QmodZ.from_fraction(total)


# ---------------------------------------------------------------------------
# Duals


class DualData:
    """The dual module Hom(A, D) with its evaluation pairing.

    Homomorphisms are integer matrices Phi (rank D x rank A); the coordinate
    Phi[j, i] ranges over multiples of d_j / gcd(a_i, d_j).
    """

    def __init__(self, A: GModule, D: GModule, name: str = ""):
        self.A, self.D = A, D
        self.name = name or f"{A.name}^dual"
        a = A.carrier.invariant_factors
        d = D.carrier.invariant_factors
        from math import gcd

        self._cells = [(j, i) for j in range(len(d)) for i in range(len(a))]
        self._g = [gcd(a[i], d[j]) for j, i in self._cells]
        self._step = [d[j] // g for (j, i), g in zip(self._cells, self._g)]
        n = len(self._cells)
        basis = [tuple(int(r == c) for c in range(n)) for r in range(n)]
        self._sq = Subquotient(self._g, basis)
        carrier = self._sq.group
        G = A.group
        k = carrier.rank
        mats = np.zeros((G.order, k, k), dtype=np.int64)
        for g in range(G.order):
            ginv = int(G.inverse[g])
            for c, e in enumerate(carrier.basis()):
                Phi = self.to_matrix(e)
                Phi2 = D.action[g] @ Phi @ A.action[ginv] if A.carrier.rank and D.carrier.rank else Phi
                mats[g, :, c] = self.from_matrix(Phi2)
        self.module = GModule(G, carrier, mats, self.name)
        T = np.zeros((k, A.carrier.rank, D.carrier.rank), dtype=np.int64)
        for c, e in enumerate(carrier.basis()):
            if A.carrier.rank and D.carrier.rank:
                T[c] = self.to_matrix(e).T
        self.evaluation = Pairing(self.module, A, D, T)

    def to_matrix(self, x) -> np.ndarray:
        u = self._sq.lift(x)
        Phi = np.zeros((self.D.carrier.rank, self.A.carrier.rank), dtype=np.int64)
        for (j, i), ui, st in zip(self._cells, u, self._step):
            Phi[j, i] = ui * st
        if self.D.carrier.rank:
            Phi %= self.D.moduli[:, None]
        return Phi

    def from_matrix(self, Phi) -> Element:
        Phi = np.asarray(Phi, dtype=np.int64)
        u = []
        for (j, i), st, g in zip(self._cells, self._step, self._g):
            v = int(Phi[j, i]) % self.D.carrier.invariant_factors[j]
            if v % st:
                raise ValueError("matrix is not a homomorphism into D")
            u.append((v // st) % g)
        return self._sq.project(u)

    def dual_hom(self, other: "DualData", h: GroupHom) -> GroupHom:
        """For h: other.A -> self.A, the precomposition map self.module -> other.module."""
        H = np.array(h.matrix, dtype=np.int64).reshape(self.A.carrier.rank, other.A.carrier.rank)
        images = [other.from_matrix(self.to_matrix(e) @ H) for e in self.module.carrier.basis()]
        return GroupHom.from_images(self.module.carrier, other.module.carrier, images)

    def double_dual_map(self, dd: "DualData") -> GroupHom:
        """A -> (A^dual)^dual, a |-> (phi |-> phi(a))."""
        images = []
        for a in self.A.carrier.basis():
            cols = [self.evaluation(e, a) for e in self.module.carrier.basis()]
            Phi = np.array(cols, dtype=np.int64).T.reshape(self.D.carrier.rank, self.module.carrier.rank)
            images.append(dd.from_matrix(Phi))
        return GroupHom.from_images(self.A.carrier, dd.module.carrier, images)


def dual_module(f: "SiteFixture", A: GModule) -> GModule:
    return DualData(A, f.D).module


# ---------------------------------------------------------------------------
# Places


class Place:
    """Local data at one place, with the local modules and cohomology precomputed lazily."""

    def __init__(self, site: "SiteFixture", raw: Mapping[str, Any]):
        self.site = site
        self.id = str(raw["id"])
        G = site.group
        try:
            self.decomposition = G.subgroup(raw["subgroup"])
            self.inertia_global = G.subgroup(raw["inertia"])
        except GroupAxiomError as e:
            raise FixtureError(f"place {self.id}: {e}") from None
        self.in_Y = bool(raw.get("in_Y", True))
        self.dualizing_unramified = [tuple(int(v) for v in g) for g in raw.get("dualizing_unramified", [])]
        self.inv_on_h2 = [list(map(int, row)) for row in raw.get("inv_on_h2", [])]
        self.raw = raw

    # local group data ------------------------------------------------------

    @property
    def group(self) -> FiniteGroup:
        return self.decomposition.group

    @cached_property
    def inertia(self) -> list[int]:
        """Inertia as local indices into the decomposition group."""
        loc = self.decomposition.local
        return sorted(loc[g] for g in self.inertia_global.elements if g in loc)

    @cached_property
    def frobenius_quotient(self) -> QuotientData:
        return QuotientData(self.group, self.inertia)

    def structure_problems(self) -> list[str]:
        out = []
        if not set(self.inertia_global.elements) <= set(self.decomposition.elements):
            return ["inertia is not contained in the decomposition group"]
        if not self.inertia_global.is_normal_in(self.decomposition):
            return ["inertia is not normal in the decomposition group"]
        Q = self.frobenius_quotient.group
        if not any(len(Q.generated([g]).elements) == Q.order for g in range(Q.order)):
            out.append("decomposition/inertia is not cyclic")
        return out

    def local(self, A: GModule) -> GModule:
        return self.site._restricted(A, self)

    def restrict(self, c: Cochain) -> Cochain:
        return restrict(c, self.decomposition, self.local(c.module))

    def H(self, A: GModule, p: int) -> Cohomology:
        return cohomology(self.local(A), p)

    # invariants ------------------------------------------------------------

    @cached_property
    def h2D(self) -> Cohomology:
        return self.H(self.site.D, 2)

    @cached_property
    def inv_hom(self) -> GroupHom:
        H2 = self.h2D.group
        N = self.site.modulus
        rows = self.inv_on_h2 or [[0] * H2.rank]
        if len(rows) != 1 or len(rows[0]) != H2.rank:
            raise FixtureError(
                f"place {self.id}: inv_on_h2 must be 1 x {H2.rank} (H^2 = {H2}), got {rows}"
            )
        return GroupHom(H2, FinAbGroup((N,)) if N > 1 else FinAbGroup(()), tuple(tuple(r) for r in rows) if N > 1 else ())

    def inv(self, c: Cochain) -> QmodZ:
        """Local invariant of a D-valued 2-cocycle over the decomposition group."""
        x = self.h2D.project(c)
        v = self.inv_hom(x)
        return QmodZ(v[0] if v else 0, self.site.modulus)

    def inv_class(self, x: Element) -> QmodZ:
        v = self.inv_hom(x)
        return QmodZ(v[0] if v else 0, self.site.modulus)

    # unramified layer ------------------------------------------------------

    @cached_property
    def D_ur_subgroup(self) -> Subgroup:
        return subgroup_from_generators(self.site.D.carrier, self.dualizing_unramified)

    @cached_property
    def unramified(self) -> "UnramifiedData":
        return UnramifiedData(self)

    def __repr__(self) -> str:
        return f"Place({self.id})"


class UnramifiedData:
    """The unramified layer at a place: modules over the Frobenius quotient."""

    def __init__(self, place: Place):
        self.place = place
        site = place.site
        Q = place.frobenius_quotient
        self.Q = Q
        inert = place.inertia
        self.inertia = inert
        loc = place.local
        M1d, M, M2, D, M1 = loc(site.M1dual), loc(site.M), loc(site.M2), loc(site.D), loc(site.M1)
        self.M1d_I = M1d.fixed_subgroup(inert)
        self.M_I = M.fixed_subgroup(inert)
        self.M1_I = M1.fixed_subgroup(inert)
        self.pi_M_I = subgroup_from_generators(M2.carrier, [site.pi(g) for g in self.M_I.generators()])
        self.D_ur = place.D_ur_subgroup
        self.D_I = D.fixed_subgroup(inert)
        # modules over the quotient
        self.A1, self.inc1 = self._over_quotient(M1d, self.M1d_I, "M1dual^I")
        self.A2, self.inc2 = self._over_quotient(M2, self.pi_M_I, "pi(M^I)")
        self.Dur, self.incD = self._over_quotient(D, self.D_ur, "D^ur")

    def _over_quotient(self, A: GModule, sub: Subgroup, name: str):
        mod, inc = submodule(A, sub, name)
        return module_over_quotient(mod, self.Q, name), inc

    @cached_property
    def H1_1(self) -> Cohomology:
        return cohomology(self.A1, 1)

    @cached_property
    def H1_2(self) -> Cohomology:
        return cohomology(self.A2, 1)

    @cached_property
    def fields(self) -> FinAbGroup:
        return direct_sum([self.H1_1.group, self.H1_2.group]).group

    @cached_property
    def _sum(self):
        return direct_sum([self.H1_1.group, self.H1_2.group])

    def split(self, x) -> tuple[Element, Element]:
        a, b = self._sum.split(x)
        return a, b

    def join(self, a, b) -> Element:
        return self._sum.join([a, b])

    def inflate_pair(self, a1: Cochain, a2: Cochain) -> tuple[Cochain, Cochain]:
        """Inflate unramified cocycles to the decomposition group, in M1dual and M2."""
        site = self.place.site
        loc = self.place.local
        c1 = inflate(apply_hom(self.inc1, a1, _module_over(loc(site.M1dual), self.Q)), self.Q, loc(site.M1dual))
        c2 = inflate(apply_hom(self.inc2, a2, _module_over(loc(site.M2), self.Q)), self.Q, loc(site.M2))
        return c1, c2

    @cached_property
    def map_to_local(self) -> GroupHom:
        """F^nr -> F_x = H^1(M1dual) + H^1(M2) over the decomposition group."""
        site = self.place.site
        images = []
        for e in self.fields.basis():
            r1, r2 = self.split(e)
            c1, c2 = self.inflate_pair(self.H1_1.lift(r1), self.H1_2.lift(r2))
            images.append(site.local_fields(self.place).join(
                [self.place.H(site.M1dual, 1).project(c1), self.place.H(site.M2, 1).project(c2)]
            ))
        return GroupHom.from_images(self.fields, site.local_fields(self.place).group, images)

    @cached_property
    def section(self) -> SetSection:
        """A section of pi sending pi(M^I) into M^I (smallest preimages first)."""
        pi = self.place.site.pi
        vals = {}
        for x in self.M_I.elements():
            y = pi(x)
            if y not in vals or x < vals[y]:
                vals[y] = x
        default = SetSection.default(pi)
        for y in pi.target.elements():
            vals.setdefault(y, default(y))
        return SetSection(pi, vals)


_MODULE_OVER_CACHE: dict[tuple[int, int], GModule] = {}


def _module_over(A: GModule, Q: QuotientData) -> GModule:
    """A's carrier viewed as a module over Q (used only as a value container)."""
    key = (id(A), id(Q))
    m = _MODULE_OVER_CACHE.get(key)
    if m is None:
        m = GModule(Q.group, A.carrier, np.broadcast_to(np.eye(A.carrier.rank, dtype=np.int64), (Q.group.order, A.carrier.rank, A.carrier.rank)), A.name, check=False)
        _MODULE_OVER_CACHE[key] = m
    return m


# ---------------------------------------------------------------------------
# The fixture


def _matrix(raw, rows: int, cols: int, what: str) -> tuple[tuple[int, ...], ...]:
    m = tuple(tuple(int(v) for v in r) for r in raw)
    if rows == 0:
        return ()
    if len(m) != rows or any(len(r) != cols for r in m):
        raise FixtureError(f"{what}: expected a {rows}x{cols} matrix")
    return m


class SiteFixture:
    """A loaded fixture.  Construction checks shapes only; axioms are checked by validate_fixture."""

    def __init__(self, data: Mapping[str, Any]):
        self.data = data
        self.name = str(data.get("name", ""))
        self.modulus = int(data["modulus"])
        gg = data["global_group"]
        table = gg["mul_table"]
        if len(table) != int(gg.get("order", len(table))):
            raise FixtureError("global_group.order does not match the table")
        try:
            self.group = FiniteGroup(table, check=False)
        except GroupAxiomError as e:
            raise FixtureError(str(e)) from None
        mods = data["modules"]
        self.modules: dict[str, GModule] = {}
        for key in ("M1", "M", "M2", "D"):
            m = mods[key]
            try:
                carrier = FinAbGroup(tuple(m["invariant_factors"]))
            except ValueError as e:
                raise FixtureError(f"module {key}: {e}") from None
            action = m.get("action")
            if action is None:
                action = [np.eye(carrier.rank, dtype=np.int64).tolist()] * self.group.order
            if len(action) != self.group.order:
                raise FixtureError(f"module {key}: need one action matrix per group element")
            self.modules[key] = GModule(self.group, carrier, action, key, check=False)
        self.M1, self.M, self.M2, self.D = (self.modules[k] for k in ("M1", "M", "M2", "D"))
        maps = data["maps"]
        try:
            self.iota = GroupHom(self.M1.carrier, self.M.carrier,
                                 _matrix(maps["iota"], self.M.carrier.rank, self.M1.carrier.rank, "iota"))
            self.pi = GroupHom(self.M.carrier, self.M2.carrier,
                               _matrix(maps["pi"], self.M2.carrier.rank, self.M.carrier.rank, "pi"))
        except ValueError as e:
            raise FixtureError(str(e)) from None
        self.places: list[Place] = [Place(self, p) for p in data["places"]]
        ids = [p.id for p in self.places]
        if len(set(ids)) != len(ids):
            raise FixtureError("duplicate place ids")
        self._place_index = {p.id: p for p in self.places}
        self._restrict_cache: dict[tuple[int, str], GModule] = {}

    @classmethod
    def load(cls, path: str | Path) -> "SiteFixture":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @cached_property
    def digest(self) -> str:
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def place(self, pid: str) -> Place:
        try:
            return self._place_index[pid]
        except KeyError:
            raise FixtureError(f"unknown place {pid!r}") from None

    @property
    def place_ids(self) -> list[str]:
        return [p.id for p in self.places]

    def _restricted(self, A: GModule, place: Place) -> GModule:
        key = (id(A), place.id)
        m = self._restrict_cache.get(key)
        if m is None:
            m = A.restrict(place.decomposition)
            self._restrict_cache[key] = m
        return m

    # duals -----------------------------------------------------------------

    @cached_property
    def dual1(self) -> DualData:
        return DualData(self.M1, self.D, "M1dual")

    @cached_property
    def dualM(self) -> DualData:
        return DualData(self.M, self.D, "Mdual")

    @cached_property
    def dual2(self) -> DualData:
        return DualData(self.M2, self.D, "M2dual")

    @property
    def M1dual(self) -> GModule:
        return self.dual1.module

    @property
    def Mdual(self) -> GModule:
        return self.dualM.module

    @property
    def M2dual(self) -> GModule:
        return self.dual2.module

    @cached_property
    def iota_dual(self) -> GroupHom:
        """M^dual -> M1^dual."""
        return self.dualM.dual_hom(self.dual1, self.iota)

    @cached_property
    def pi_dual(self) -> GroupHom:
        """M2^dual -> M^dual."""
        return self.dual2.dual_hom(self.dualM, self.pi)

    @cached_property
    def iota_inverse(self) -> Preimage:
        return Preimage(self.iota)

    @cached_property
    def default_section(self) -> SetSection:
        return SetSection.default(self.pi)

    # cup products used throughout ------------------------------------------

    def cup_iota(self, a1: Cochain, c: Cochain) -> Cochain:
        """a1 u iota^{-1}(c) for a1 valued in M1^dual and c valued in iota(M1)."""
        G = a1.module.group
        M1loc, Dloc, pairing = self._iota_cup_data(G)
        c1 = self.iota_inverse.compose(c, M1loc)
        return cup(a1, c1, pairing)

    def _iota_cup_data(self, G: FiniteGroup):
        key = id(G)
        cache = self.__dict__.setdefault("_cup_cache", {})
        if key not in cache:
            if G is self.group:
                M1, Dm, pairing = self.M1, self.D, self.dual1.evaluation
            else:
                place = next(p for p in self.places if p.group is G)
                M1 = place.local(self.M1)
                Dm = place.local(self.D)
                pairing = Pairing(place.local(self.M1dual), M1, Dm, self.dual1.evaluation.tensor, check=False)
            cache[key] = (M1, Dm, pairing)
        return cache[key]

    def pairing_for(self, dual: DualData, G: FiniteGroup) -> Pairing:
        if G is self.group:
            return dual.evaluation
        place = next(p for p in self.places if p.group is G)
        return Pairing(place.local(dual.module), place.local(dual.A), place.local(self.D), dual.evaluation.tensor, check=False)

    # fields ----------------------------------------------------------------

    def local_fields(self, place: Place):
        """F_x = H^1(G_x, M1dual) + H^1(G_x, M2) as a normalized direct sum."""
        cache = self.__dict__.setdefault("_lf_cache", {})
        if place.id not in cache:
            cache[place.id] = direct_sum([place.H(self.M1dual, 1).group, place.H(self.M2, 1).group])
        return cache[place.id]

    @cached_property
    def H1_M1dual(self) -> Cohomology:
        return cohomology(self.M1dual, 1)

    @cached_property
    def H1_M2(self) -> Cohomology:
        return cohomology(self.M2, 1)

    @cached_property
    def global_fields(self):
        return direct_sum([self.H1_M1dual.group, self.H1_M2.group])

    def restriction_hom(self, A: GModule, place: Place, p: int = 1) -> GroupHom:
        """H^p(G, A) -> H^p(G_x, A)."""
        cache = self.__dict__.setdefault("_res_cache", {})
        key = (id(A), place.id, p)
        if key not in cache:
            Hg = cohomology(A, p)
            Hl = place.H(A, p)
            cache[key] = Hg.induced(Hl, place.restrict)
        return cache[key]

    def field_restriction(self, place: Place) -> GroupHom:
        """Global fields -> F_x."""
        cache = self.__dict__.setdefault("_fres_cache", {})
        if place.id not in cache:
            r1 = self.restriction_hom(self.M1dual, place)
            r2 = self.restriction_hom(self.M2, place)
            gf, lf = self.global_fields, self.local_fields(place)
            images = []
            for e in gf.group.basis():
                a, b = gf.split(e)
                images.append(lf.join([r1(a), r2(b)]))
            cache[place.id] = GroupHom.from_images(gf.group, lf.group, images)
        return cache[place.id]

    # boundary conditions and Selmer structures ----------------------------

    def boundary_condition(self, place: Place) -> Subgroup:
        """BC_x as a subgroup of F_x (the product of the declared factors; full F_x if undeclared)."""
        cache = self.__dict__.setdefault("_bc_cache", {})
        if place.id in cache:
            return cache[place.id]
        lf = self.local_fields(place)
        raw = self.data.get("boundary_conditions", {}).get(place.id)
        if raw is None:
            sub = subgroup_from_generators(lf.group, lf.group.basis())
        else:
            H1 = place.H(self.M1dual, 1)
            H2 = place.H(self.M2, 1)
            gens = []
            for t in raw.get("M1dual", []):
                gens.append(lf.join([H1.project(Cochain(place.local(self.M1dual), 1, t)), H2.group.zero()]))
            for t in raw.get("M2", []):
                gens.append(lf.join([H1.group.zero(), H2.project(Cochain(place.local(self.M2), 1, t))]))
            sub = subgroup_from_generators(lf.group, gens)
        cache[place.id] = sub
        return sub

    def selmer_W(self, place: Place) -> Subgroup:
        """W_x as a subgroup of H^1(G_x, M); zero if undeclared."""
        cache = self.__dict__.setdefault("_w_cache", {})
        if place.id not in cache:
            H = place.H(self.M, 1)
            raw = self.data.get("selmer_W", {}).get(place.id, [])
            cache[place.id] = subgroup_from_generators(
                H.group, [H.project(Cochain(place.local(self.M), 1, t)) for t in raw]
            )
        return cache[place.id]


def load_fixture(src: str | Path | Mapping[str, Any]) -> SiteFixture:
    if isinstance(src, Mapping):
        return SiteFixture(src)
    return SiteFixture.load(src)


FIXTURE_DIR = Path(__file__).parent / "fixtures"


def builtin_fixture(name: str) -> SiteFixture:
    return SiteFixture.load(FIXTURE_DIR / f"{name}.json")


# ---------------------------------------------------------------------------
# Operations


def local_invariant(f: SiteFixture, place: Place | str, c: Cochain) -> QmodZ:
    p = f.place(place) if isinstance(place, str) else place
    return p.inv(c)


def local_tate_pairing(f: SiteFixture, place: Place | str, a: Cochain, b: Cochain, dual: DualData | None = None) -> QmodZ:
    """inv_x(a u b) for a in H^1(G_x, A^dual), b in H^1(G_x, A) (A = M by default)."""
    p = f.place(place) if isinstance(place, str) else place
    dual = dual or f.dualM
    return p.inv(cup(a, b, f.pairing_for(dual, p.group)))


def tate_gram(f: SiteFixture, place: Place, dual: DualData) -> list[list[QmodZ]]:
    Hd = place.H(dual.module, 1)
    Ha = place.H(dual.A, 1)
    pairing = f.pairing_for(dual, place.group)
    return [[place.inv(cup(a, b, pairing)) for b in Ha.basis()] for a in Hd.basis()]


def pairing_annihilator(f: SiteFixture, place: Place, dual: DualData, sub: Subgroup, side: str) -> Subgroup:
    """Annihilator of sub under the local Tate pairing.

    side="dual": sub lies in H^1(A^dual) and the result lies in H^1(A);
    side="module": sub lies in H^1(A) and the result lies in H^1(A^dual).
    """
    Hd = place.H(dual.module, 1)
    Ha = place.H(dual.A, 1)
    pairing = f.pairing_for(dual, place.group)
    N = f.modulus
    if side == "module":
        src, gens = Hd, [Ha.lift(g) for g in sub.generators()]
        value = lambda a, b: cup(a, b, pairing)  # noqa: E731
        images = [[place.inv(value(a, b)).on_level(N) for b in gens] for a in src.basis()]
    else:
        src, gens = Ha, [Hd.lift(g) for g in sub.generators()]
        images = [[place.inv(cup(a, b, pairing)).on_level(N) for a in gens] for b in src.basis()]
    tgt = FinAbGroup((N,) * len(gens)) if N > 1 and gens else FinAbGroup(())
    if tgt.rank == 0:
        return subgroup_from_generators(src.group, src.group.basis())
    h = GroupHom.from_images(src.group, tgt, [tuple(r) for r in images])
    return kernel(h)


@dataclass(frozen=True)
class AxiomResult:
    key: str
    passed: bool
    detail: str = ""
    witness: Any = None

    def as_dict(self) -> dict:
        out = {"axiom": self.key, "passed": self.passed}
        if self.detail:
            out["detail"] = self.detail
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class ValidationReport:
    results: tuple[AxiomResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failed(self) -> list[str]:
        return [r.key for r in self.results if not r.passed]

    def __getitem__(self, key: str) -> AxiomResult:
        for r in self.results:
            if r.key == key:
                return r
        raise KeyError(key)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "axioms": [r.as_dict() for r in self.results]}


AXIOMS = (
    "bc_contains_unramified",
    "dualizing_unramified_pairing",
    "exponents_divide_modulus",
    "group_axioms",
    "inv_injective",
    "local_duality",
    "local_lift_solvable",
    "module_axioms",
    "place_structure",
    "reciprocity",
    "theta_monodromy",
    "triple_exact",
    "unramified_injective",
    "unramified_vanishing",
)


def validate_fixture(f: SiteFixture) -> ValidationReport:
    """Check every axiom; the report is sorted by axiom key."""
    results: dict[str, AxiomResult] = {}

    def record(key, ok, detail="", witness=None):
        results[key] = AxiomResult(key, bool(ok), detail, witness)

    bad = [name for name, ok in f.group.axiom_checks() if not ok]
    record("group_axioms", not bad, ", ".join(bad))
    if bad:
        return _finish(results, "group axioms failed")

    bad = [f"{m.name}: {name}" for m in (f.M1, f.M, f.M2, f.D) for name, ok in m.axiom_checks() if not ok]
    record("module_axioms", not bad, "; ".join(bad))
    if bad:
        return _finish(results, "module axioms failed")

    _check_triple(f, record)
    _check_places(f, record)
    if any(not results[k].passed for k in ("triple_exact", "place_structure")):
        return _finish(results, "structural axioms failed")
    _check_exponents(f, record)
    _check_inv(f, record)
    if not results["inv_injective"].passed and results["inv_injective"].detail.startswith("malformed"):
        return _finish(results, "inv matrices malformed")
    _check_duality(f, record)
    _check_reciprocity(f, record)
    _check_unramified(f, record)
    _check_local_lifts(f, record)
    _check_monodromy(f, record)
    return _finish(results, "")


def _finish(results: dict[str, AxiomResult], reason: str) -> ValidationReport:
    for key in AXIOMS:
        if key not in results:
            results[key] = AxiomResult(key, False, f"not checked: {reason}")
    return ValidationReport(tuple(results[k] for k in sorted(results)))


def _check_triple(f: SiteFixture, record) -> None:
    problems = []
    for name, h, A, B in (("iota", f.iota, f.M1, f.M), ("pi", f.pi, f.M, f.M2)):
        if not A.is_equivariant(B, h):
            problems.append(f"{name} is not equivariant")
    if not f.iota.is_injective():
        problems.append("iota is not injective")
    if not f.pi.is_surjective():
        problems.append("pi is not surjective")
    if not problems:
        comp = f.pi.compose(f.iota)
        if any(comp(e) != f.M2.carrier.zero() for e in f.M1.carrier.basis()):
            problems.append("pi o iota != 0")
        elif kernel(f.pi).order != image(f.iota).order:
            problems.append("image(iota) != kernel(pi)")
    record("triple_exact", not problems, "; ".join(problems))


def _check_places(f: SiteFixture, record) -> None:
    problems = []
    for p in f.places:
        for msg in p.structure_problems():
            problems.append(f"{p.id}: {msg}")
        if problems:
            continue
        D = p.local(f.D)
        Dur = p.D_ur_subgroup
        DI = D.fixed_subgroup(p.inertia)
        if not Dur.issubset(DI):
            problems.append(f"{p.id}: dualizing_unramified is not inside D^inertia")
        for g in range(p.group.order):
            if not all(Dur.contains(D.act(g, x)) for x in Dur.generators()):
                problems.append(f"{p.id}: dualizing_unramified is not stable")
                break
    record("place_structure", not problems, "; ".join(problems))


def _check_exponents(f: SiteFixture, record) -> None:
    N = f.modulus
    problems = []
    for m in (f.M1, f.M2):
        if N % m.carrier.exponent:
            problems.append(f"exponent of {m.name} does not divide {N}")
    for p in f.places:
        if N % p.h2D.group.exponent:
            problems.append(f"{p.id}: exponent of H^2(G_x, D) = {p.h2D.group} does not divide {N}")
    record("exponents_divide_modulus", not problems, "; ".join(problems))


def _check_inv(f: SiteFixture, record) -> None:
    problems = []
    malformed = False
    for p in f.places:
        try:
            h = p.inv_hom
        except (FixtureError, ValueError) as e:
            problems.append(str(e))
            malformed = True
            continue
        if not h.is_injective():
            problems.append(f"{p.id}: inv is not injective on H^2 = {p.h2D.group}")
    detail = ("malformed: " if malformed else "") + "; ".join(problems)
    record("inv_injective", not problems, detail)


def _check_duality(f: SiteFixture, record) -> None:
    problems = []
    N = f.modulus
    for dual in (f.dualM, f.dual1, f.dual2):
        for p in f.places:
            Hd = p.H(dual.module, 1).group
            Ha = p.H(dual.A, 1).group
            if Hd.order != Ha.order:
                problems.append(f"{p.id}/{dual.A.name}: |H^1(dual)| = {Hd.order} != |H^1| = {Ha.order}")
                continue
            gram = tate_gram(f, p, dual)
            if Hd.rank == 0:
                continue
            h = GroupHom.from_images(Hd, FinAbGroup((N,) * Ha.rank),
                                     [tuple(v.on_level(N) for v in row) for row in gram])
            if not h.is_injective():
                problems.append(f"{p.id}/{dual.A.name}: Tate pairing is degenerate")
    record("local_duality", not problems, "; ".join(problems))


def _check_reciprocity(f: SiteFixture, record) -> None:
    H2 = cohomology(f.D, 2)
    bad = None
    for c in H2.basis():
        total = qsum(p.inv(p.restrict(c)) for p in f.places)
        if not total.is_zero():
            bad = {"generator": list(H2.project(c)), "sum": str(total)}
            break
    record("reciprocity", bad is None, "" if bad is None else "sum of local invariants is nonzero", bad)


def _check_unramified(f: SiteFixture, record) -> None:
    vanish, pairing, contains, injective = [], [], [], []
    for p in f.places:
        u = p.unramified
        for q in (2, 3):
            if cohomology(u.Dur, q).group.order != 1:
                vanish.append(f"{p.id}: H^{q}(frobenius quotient, D^ur) != 0")
        ev = f.dual1.evaluation
        for a in u.M1d_I.generators():
            for b in u.M1_I.generators():
                if not u.D_ur.contains(ev(a, b)):
                    pairing.append(f"{p.id}: <{a},{b}> = {ev(a, b)} not in D^ur")
        if p.in_Y:
            bc = f.boundary_condition(p)
            m = u.map_to_local
            for e in u.fields.basis():
                if not bc.contains(m(e)):
                    contains.append(f"{p.id}: unramified class {e} outside BC")
            if not m.is_injective():
                injective.append(f"{p.id}: F^nr -> F_x is not injective")
    record("unramified_vanishing", not vanish, "; ".join(vanish))
    record("dualizing_unramified_pairing", not pairing, "; ".join(pairing))
    record("bc_contains_unramified", not contains, "; ".join(contains))
    record("unramified_injective", not injective, "; ".join(injective))


def _check_local_lifts(f: SiteFixture, record) -> None:
    """Every local field (r1, r2) admits phi with dphi = a1 u d(sigma a2)."""
    problems = []
    for p in f.places:
        H1 = p.H(f.M1dual, 1)
        H2 = p.H(f.M2, 1)
        for r1 in H1.group.elements():
            for r2 in H2.group.elements():
                try:
                    local_lift(f, p, H1.lift(r1), H2.lift(r2), f.default_section)
                except ObstructionNonzero:
                    problems.append(f"{p.id}: no local lift for ({list(r1)}, {list(r2)})")
    record("local_lift_solvable", not problems, "; ".join(problems))


def _check_monodromy(f: SiteFixture, record) -> None:
    """Loops in the arrow groupoid act trivially on the local torsors.

    For z1 in H^0(M1dual), z2 in H^0(M2) and local classes a1, a2 the loop
    (0, z1, z2) translates by z1 u delta(a2) + a1 u delta(z2); both must have
    zero invariant.
    """
    from .groupcoh import connecting_delta

    problems = []
    for p in f.places:
        H1d = p.H(f.M1dual, 1)
        H12 = p.H(f.M2, 1)
        H0d = p.H(f.M1dual, 0)
        H02 = p.H(f.M2, 0)
        M1l, Ml = p.local(f.M1), p.local(f.M)
        pairing = f.pairing_for(f.dual1, p.group)
        for z1 in H0d.basis():
            for a2 in H12.basis():
                da = connecting_delta(a2, f.iota, f.pi, f.default_section, M1l, Ml)
                if not p.inv(cup(z1, da, pairing)).is_zero():
                    problems.append(f"{p.id}: H^0(M1dual) generator acts nontrivially")
        for z2 in H02.basis():
            dz = connecting_delta(z2, f.iota, f.pi, f.default_section, M1l, Ml)
            for a1 in H1d.basis():
                if not p.inv(cup(a1, dz, pairing)).is_zero():
                    problems.append(f"{p.id}: H^0(M2) generator acts nontrivially")
    record("theta_monodromy", not problems, "; ".join(sorted(set(problems))))


def bf_source(f: SiteFixture, a1: Cochain, a2: Cochain, sigma: SetSection) -> Cochain:
    """a1 u d(sigma o a2), the right-hand side of the BF lift equation."""
    Mloc = f.M if a2.module.group is f.group else next(p for p in f.places if p.group is a2.module.group).local(f.M)
    return f.cup_iota(a1, differential(sigma.compose(a2, Mloc)))


def local_lift(f: SiteFixture, place: Place, a1: Cochain, a2: Cochain, sigma: SetSection) -> Cochain:
    """Canonical phi over G_x with dphi = a1 u d(sigma o a2)."""
    try:
        return solve_coboundary(bf_source(f, a1, a2, sigma))
    except NoSolution:
        raise ObstructionNonzero(f"place {place.id}") from None


def unramified_field_space(f: SiteFixture, place: Place | str) -> tuple[FinAbGroup, GroupHom]:
    p = f.place(place) if isinstance(place, str) else place
    u = p.unramified
    return u.fields, u.map_to_local


def surjective_on_unramified(f: SiteFixture, place: Place) -> bool | None:
    """H^1(G^nr, M^I) -> H^1(G^nr, pi(M^I)) is onto; None when H^2(G^nr, M1^I) != 0."""
    u = place.unramified
    loc = place.local
    M1I, _ = submodule(loc(f.M1), u.M1_I)
    if cohomology(module_over_quotient(M1I, u.Q), 2).group.order != 1:
        return None
    MI, incM = submodule(loc(f.M), u.M_I)
    MIq = module_over_quotient(MI, u.Q)
    H1M = cohomology(MIq, 1)
    # pi restricted to M^I, landing in pi(M^I)
    images = [u.pi_M_I.coordinates(f.pi(incM(e))) for e in MI.carrier.basis()]
    pr = GroupHom.from_images(MI.carrier, u.A2.carrier, images)
    h = H1M.induced(u.H1_2, lambda c: apply_hom(pr, c, u.A2))
    return h.is_surjective()
