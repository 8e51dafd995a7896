"""Classical BF theory on a fixture: torsors, the Theta action, and BF functionals.

A point of the local torsor over a local field rho_x = (r1, r2) is a tuple
(sigma, a1, a2, phi) with a_i cocycles representing r_i and
dphi = a1 u d(sigma o a2), together with a Q/Z shift (the contracted product
with the structure group).  Two points over the same field are identified
along the Theta action; numerically, every point has a coordinate in Q/Z
obtained by transporting it to a canonical base point of its fibre.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np

from .exactalg import Element, FinAbGroup, NoSolution, solve_mod, subgroup_from_generators
from .groupcoh import (
    Cochain,
    SetSection,
    apply_hom,
    cohomology,
    deflate,
    differential,
    inflate,
    solve_coboundary,
)
from .sitemodel import (
    ZERO,
    ObstructionNonzero,
    Place,
    QmodZ,
    SiteFixture,
    _module_over,
    bf_source,
    local_lift,
    qsum,
)

STANDARD = "standard"
REVERSED = "reversed"


class FiberMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# Random re-choices


def random_cocycle_rep(H, x, rng: np.random.Generator | None) -> Cochain:
    return H.lift(x) if rng is None else H.random_representative(x, rng)


def random_section(f: SiteFixture, rng: np.random.Generator | None) -> SetSection:
    return f.default_section if rng is None else SetSection.random(f.pi, rng)


def random_global_cocycle(f: SiteFixture, deg: int, rng: np.random.Generator) -> Cochain:
    H = cohomology(f.D, deg)
    x = H.group.random_element(rng)
    return H.random_representative(x, rng)


# ---------------------------------------------------------------------------
# The Theta action


def theta_action(
    f: SiteFixture,
    sigma: SetSection,
    tau: SetSection,
    g1: Cochain,
    g2: Cochain,
    a1: Cochain,
    a2: Cochain,
) -> Cochain:
    """Theta for the arrow (sigma, a1, a2) -> (tau, a1 + dg1, a2 + dg2).

    Theta = g1 u d(sigma a2) - b1 u (tau b2 - sigma a2 - d(tau g2)), which
    satisfies d(Theta) = b1 u d(tau b2) - a1 u d(sigma a2) exactly, so
    phi + Theta is a lift for the target whenever phi is one for the source.
    """
    M = _middle(f, a2)
    b1 = a1 + differential(g1)
    b2 = a2 + differential(g2)
    s_a2 = sigma.compose(a2, M)
    t_b2 = tau.compose(b2, M)
    t_g2 = tau.compose(g2, M)
    first = f.cup_iota(g1, differential(s_a2))
    second = f.cup_iota(b1, t_b2 - s_a2 - differential(t_g2))
    return first - second


def theta_printed(
    f: SiteFixture,
    sigma: SetSection,
    tau: SetSection,
    g1: Cochain,
    g2: Cochain,
    a1: Cochain,
    a2: Cochain,
) -> Cochain:
    """a1 u ((tau - sigma) a2) + g1 u d(tau a2) + b1 u (tau dg2 - d(tau g2)).

    Kept for comparison: it agrees with theta_action modulo coboundaries for
    additive sections on exponent-2 data, but not in general.
    """
    M = _middle(f, a2)
    b1 = a1 + differential(g1)
    dg2 = differential(g2)
    term1 = f.cup_iota(a1, tau.compose(a2, M) - sigma.compose(a2, M))
    term2 = f.cup_iota(g1, differential(tau.compose(a2, M)))
    term3 = f.cup_iota(b1, tau.compose(dg2, M) - differential(tau.compose(g2, M)))
    return term1 + term2 + term3


def _middle(f: SiteFixture, c: Cochain):
    G = c.module.group
    if G is f.group:
        return f.M
    return next(p for p in f.places if p.group is G).local(f.M)


# ---------------------------------------------------------------------------
# Local torsor points


@dataclass(frozen=True, eq=False)
class LocalPoint:
    place: str
    field: Element
    sigma: SetSection
    a1: Cochain
    a2: Cochain
    phi: Cochain
    shift: QmodZ = ZERO

    def shifted(self, t: QmodZ) -> "LocalPoint":
        return LocalPoint(self.place, self.field, self.sigma, self.a1, self.a2, self.phi, self.shift + t)


class LocalTorsors:
    """Per-fixture cache of canonical base points and coordinates."""

    def __init__(self, f: SiteFixture):
        self.f = f
        self._base: dict[tuple[str, Element], LocalPoint] = {}

    def split_field(self, place: Place, x: Element) -> tuple[Element, Element]:
        a, b = self.f.local_fields(place).split(x)
        return a, b

    def base_point(self, place: Place, x: Element) -> LocalPoint:
        key = (place.id, tuple(x))
        pt = self._base.get(key)
        if pt is None:
            f = self.f
            r1, r2 = self.split_field(place, x)
            a1 = place.H(f.M1dual, 1).lift(r1)
            a2 = place.H(f.M2, 1).lift(r2)
            sigma = f.default_section
            phi = local_lift(f, place, a1, a2, sigma)
            pt = LocalPoint(place.id, tuple(x), sigma, a1, a2, phi)
            self._base[key] = pt
        return pt

    def field_of(self, place: Place, a1: Cochain, a2: Cochain) -> Element:
        f = self.f
        return f.local_fields(place).join(
            [place.H(f.M1dual, 1).project(a1), place.H(f.M2, 1).project(a2)]
        )

    def transport(self, place: Place, src: LocalPoint, dst_sigma: SetSection, b1: Cochain, b2: Cochain) -> Cochain:
        """phi of src moved along Theta to the datum (dst_sigma, b1, b2)."""
        try:
            g1 = solve_coboundary(b1 - src.a1)
            g2 = solve_coboundary(b2 - src.a2)
        except NoSolution:
            raise FiberMismatch("points lie over different fields") from None
        return src.phi + theta_action(self.f, src.sigma, dst_sigma, g1, g2, src.a1, src.a2)

    def coordinate(self, p: LocalPoint) -> QmodZ:
        place = self.f.place(p.place)
        base = self.base_point(place, p.field)
        moved = self.transport(place, p, base.sigma, base.a1, base.a2)
        return place.inv(moved - base.phi) + p.shift

    def difference(self, p: LocalPoint, q: LocalPoint) -> QmodZ:
        """inv_x(p - q) computed by transporting p directly onto q's datum."""
        if p.place != q.place or tuple(p.field) != tuple(q.field):
            raise FiberMismatch(f"{p.place}:{p.field} vs {q.place}:{q.field}")
        place = self.f.place(p.place)
        moved = self.transport(place, p, q.sigma, q.a1, q.a2)
        return place.inv(moved - q.phi) + p.shift - q.shift

    def zero_point(self, place: Place) -> LocalPoint:
        f = self.f
        a1 = Cochain.zero(place.local(f.M1dual), 1)
        a2 = Cochain.zero(place.local(f.M2), 1)
        phi = Cochain.zero(place.local(f.D), 2)
        return LocalPoint(place.id, f.local_fields(place).group.zero(), f.default_section, a1, a2, phi)


def torsors(f: SiteFixture) -> LocalTorsors:
    t = f.__dict__.get("_torsors")
    if t is None:
        t = LocalTorsors(f)
        f.__dict__["_torsors"] = t
    return t


# ---------------------------------------------------------------------------
# Points over F_S and sections


def ordered(f: SiteFixture, S: Iterable[str]) -> tuple[str, ...]:
    S = set(S)
    unknown = S - set(f.place_ids)
    if unknown:
        raise ValueError(f"unknown places {sorted(unknown)}")
    return tuple(p for p in f.place_ids if p in S)


@dataclass(frozen=True, eq=False)
class TorsorPoint:
    """A point of L_S: local points at the places of S plus a Q/Z offset."""

    S: tuple[str, ...]
    points: tuple[LocalPoint, ...]
    offset: QmodZ = ZERO

    @property
    def fiber(self) -> tuple[Element, ...]:
        return tuple(tuple(p.field) for p in self.points)

    def shifted(self, t: QmodZ) -> "TorsorPoint":
        return TorsorPoint(self.S, self.points, self.offset + t)

    def split(self, S: Sequence[str]) -> tuple["TorsorPoint", "TorsorPoint"]:
        a = tuple(p for p in self.points if p.place in S)
        b = tuple(p for p in self.points if p.place not in S)
        return (
            TorsorPoint(tuple(p.place for p in a), a, self.offset),
            TorsorPoint(tuple(p.place for p in b), b, ZERO),
        )


def combine(p: TorsorPoint, q: TorsorPoint, f: SiteFixture) -> TorsorPoint:
    """p (+) q over the disjoint union of the place sets."""
    if set(p.S) & set(q.S):
        raise ValueError("place sets overlap")
    S = ordered(f, p.S + q.S)
    pts = {x.place: x for x in p.points + q.points}
    return TorsorPoint(S, tuple(pts[s] for s in S), p.offset + q.offset)


def torsor_value(f: SiteFixture, p: TorsorPoint) -> QmodZ:
    T = torsors(f)
    return qsum(T.coordinate(x) for x in p.points) + p.offset


@dataclass(frozen=True, eq=False)
class SectionXi:
    """A section of L_S -> F_S, recorded as a Q/Z shift of the canonical base point per fibre.

    A box-sum of sections over disjoint place sets adds the shifts.
    """

    S: tuple[str, ...]
    parts: tuple[tuple[tuple[str, ...], Callable[[tuple[Element, ...]], QmodZ]], ...] = ()

    def shift(self, fiber: Sequence[Element]) -> QmodZ:
        pos = {s: i for i, s in enumerate(self.S)}
        total = ZERO
        for places, fn in self.parts:
            total = total + fn(tuple(tuple(fiber[pos[s]]) for s in places))
        return total

    def point(self, f: SiteFixture, fiber: Sequence[Element]) -> TorsorPoint:
        T = torsors(f)
        pts = tuple(T.base_point(f.place(s), x) for s, x in zip(self.S, fiber))
        return TorsorPoint(self.S, pts, self.shift(fiber))

    def boxplus(self, other: "SectionXi", f: SiteFixture) -> "SectionXi":
        if set(self.S) & set(other.S):
            raise ValueError("place sets overlap")
        return SectionXi(ordered(f, self.S + other.S), self.parts + other.parts)


def default_section(f: SiteFixture, S: Iterable[str]) -> SectionXi:
    return SectionXi(ordered(f, S))


def random_section_xi(f: SiteFixture, S: Iterable[str], rng: np.random.Generator) -> SectionXi:
    S = ordered(f, S)
    N = f.modulus
    groups = [f.local_fields(f.place(s)).group for s in S]
    table = {}
    for fib in product(*(list(g.elements()) for g in groups)):
        table[tuple(fib)] = QmodZ(int(rng.integers(N)), N)
    return SectionXi(S, ((S, lambda fib, t=table: t.get(tuple(fib), ZERO)),) if S else ())


def product_section(f: SiteFixture, per_place: dict[str, SectionXi]) -> SectionXi:
    out = SectionXi(())
    for s in ordered(f, per_place):
        out = out.boxplus(per_place[s], f)
    return out


def trivialize(f: SiteFixture, xi: SectionXi, p: TorsorPoint, orientation: str = STANDARD) -> QmodZ:
    if tuple(p.S) != tuple(xi.S):
        raise FiberMismatch(f"section over {xi.S}, point over {p.S}")
    v = torsor_value(f, p) - xi.shift(p.fiber)
    return -v if orientation == REVERSED else v


# ---------------------------------------------------------------------------
# Spaces of fields


@dataclass(frozen=True)
class FieldPoint:
    """A global field (rho1, rho2), as coordinates in H^1(M1dual) + H^1(M2)."""

    rho1: Element
    rho2: Element

    @property
    def key(self) -> tuple[Element, Element]:
        return (self.rho1, self.rho2)


@dataclass(frozen=True, eq=False)
class FieldsSpace:
    S: tuple[str, ...]
    elements: tuple[FieldPoint, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, rho: FieldPoint) -> bool:
        return rho.key in {e.key for e in self.elements}


def field_profile(f: SiteFixture, rho: FieldPoint, place: Place) -> Element:
    gf = f.global_fields
    return f.field_restriction(place)(gf.join([rho.rho1, rho.rho2]))


def unramified_image(f: SiteFixture, place: Place):
    cache = f.__dict__.setdefault("_nr_img", {})
    if place.id not in cache:
        u = place.unramified
        m = u.map_to_local
        cache[place.id] = subgroup_from_generators(m.target, [m(e) for e in u.fields.basis()])
    return cache[place.id]


def in_fields_space(f: SiteFixture, S: Sequence[str], rho: FieldPoint) -> bool:
    for place in f.places:
        x = field_profile(f, rho, place)
        if place.id in S:
            if not f.boundary_condition(place).contains(x):
                return False
        elif place.in_Y:
            if not unramified_image(f, place).contains(x):
                return False
        elif any(x):
            return False
    return True


def space_of_fields(f: SiteFixture, S: Iterable[str] = ()) -> FieldsSpace:
    S = ordered(f, S)
    cache = f.__dict__.setdefault("_fields_cache", {})
    if S not in cache:
        out = []
        gf = f.global_fields
        for x in gf.group.elements():
            r1, r2 = gf.split(x)
            rho = FieldPoint(r1, r2)
            if in_fields_space(f, S, rho):
                out.append(rho)
        out.sort(key=lambda r: (r.rho1, r.rho2))
        cache[S] = FieldsSpace(S, tuple(out))
    return cache[S]


def add_fields(f: SiteFixture, a: FieldPoint, b: FieldPoint) -> FieldPoint:
    return FieldPoint(f.H1_M1dual.group.add(a.rho1, b.rho1), f.H1_M2.group.add(a.rho2, b.rho2))


def unramified_profile(f: SiteFixture, rho: FieldPoint, place: Place) -> Element:
    """The unique unramified field mapping to the profile at an unramified place."""
    u = place.unramified
    return solve_mod(u.map_to_local, field_profile(f, rho, place))


# ---------------------------------------------------------------------------
# Unramified BF points


def unramified_section(place: Place, rng: np.random.Generator | None) -> SetSection:
    u = place.unramified
    if rng is None:
        return u.section
    pi = place.site.pi
    fib_in: dict[Element, list[Element]] = {}
    for x in u.M_I.elements():
        fib_in.setdefault(pi(x), []).append(x)
    fib_all: dict[Element, list[Element]] = {}
    for x in pi.source.elements():
        fib_all.setdefault(pi(x), []).append(x)
    vals = {}
    zero = pi.target.zero()
    for y, xs in fib_all.items():
        pool = sorted(fib_in.get(y, xs))
        vals[y] = pi.source.zero() if y == zero else pool[int(rng.integers(len(pool)))]
    return SetSection(pi, vals)


def local_bf_unramified(
    f: SiteFixture, place: Place | str, rho_nr: Element, rng: np.random.Generator | None = None
) -> LocalPoint:
    """The point phi_x^nr over the image of rho_nr, solved over the Frobenius quotient in D^ur."""
    place = f.place(place) if isinstance(place, str) else place
    u = place.unramified
    r1, r2 = u.split(rho_nr)
    b1 = random_cocycle_rep(u.H1_1, r1, rng)
    b2 = random_cocycle_rep(u.H1_2, r2, rng)
    sigma = unramified_section(place, rng)
    a1, a2 = u.inflate_pair(b1, b2)
    src = bf_source(f, a1, a2, sigma)
    Dl = place.local(f.D)
    src_q = deflate(src, u.Q, _module_over(Dl, u.Q))
    try:
        rows = [u.D_ur.coordinates(tuple(int(v) for v in row)) for row in src_q.table]
    except ValueError:
        raise ObstructionNonzero(f"place {place.id}", "unramified source leaves D^ur") from None
    c = Cochain(u.Dur, 3, np.array(rows, dtype=np.int64).reshape(len(rows), u.Dur.carrier.rank))
    try:
        phi_q = solve_coboundary(c)
    except NoSolution:
        raise ObstructionNonzero(f"place {place.id}", "unramified lift") from None
    phi_D = apply_hom(u.incD, phi_q, _module_over(Dl, u.Q))
    phi = inflate(phi_D, u.Q, Dl)
    if rng is not None:
        phi = phi + differential(Cochain.random(Dl, 1, rng))
    return LocalPoint(place.id, u.map_to_local(rho_nr), sigma, a1, a2, phi)


def reference_point(f: SiteFixture, place: Place, rho: FieldPoint) -> LocalPoint:
    """The unramified BF point of rho's profile at a place outside the boundary."""
    if place.in_Y:
        return local_bf_unramified(f, place, unramified_profile(f, rho, place))
    if any(field_profile(f, rho, place)):
        raise ValueError(f"field is ramified at the non-Y place {place.id}")
    return torsors(f).zero_point(place)


def bf_unramified_point(f: SiteFixture, S: Iterable[str], rho: FieldPoint, rng=None) -> TorsorPoint:
    """BF^nr_S(d^nr_S rho) as a point of L_S."""
    S = ordered(f, S)
    pts = []
    for s in S:
        place = f.place(s)
        if place.in_Y:
            pts.append(local_bf_unramified(f, place, unramified_profile(f, rho, place), rng))
        else:
            pts.append(torsors(f).zero_point(place))
    return TorsorPoint(S, tuple(pts))


# ---------------------------------------------------------------------------
# Global BF


@dataclass
class GlobalChoice:
    a1: Cochain
    a2: Cochain
    sigma: SetSection
    phi: Cochain


def global_choice(f: SiteFixture, rho: FieldPoint, rng: np.random.Generator | None = None) -> GlobalChoice:
    a1 = random_cocycle_rep(f.H1_M1dual, rho.rho1, rng)
    a2 = random_cocycle_rep(f.H1_M2, rho.rho2, rng)
    sigma = random_section(f, rng)
    try:
        phi = solve_coboundary(bf_source(f, a1, a2, sigma))
    except NoSolution:
        raise ObstructionNonzero("global lift", f"rho = ({list(rho.rho1)}, {list(rho.rho2)})") from None
    if rng is not None:
        phi = phi + random_global_cocycle(f, 2, rng)
    return GlobalChoice(a1, a2, sigma, phi)


def restricted_point(f: SiteFixture, ch: GlobalChoice, place: Place) -> LocalPoint:
    T = torsors(f)
    a1, a2 = place.restrict(ch.a1), place.restrict(ch.a2)
    return LocalPoint(place.id, T.field_of(place, a1, a2), ch.sigma, a1, a2, place.restrict(ch.phi))


def global_bf(f: SiteFixture, S: Iterable[str], rho: FieldPoint, rng: np.random.Generator | None = None) -> TorsorPoint:
    """BF_{X_S}(rho): restrictions of a global lift to S, plus the offset from the other places.

    The offset sum_{y not in S} coord(d_y phi) - coord(reference_y) makes the
    result independent of phi -> phi + z for global cocycles z (reciprocity).
    For S empty the torsor is trivial and the value is the offset itself.
    """
    S = ordered(f, S)
    ch = global_choice(f, rho, rng)
    T = torsors(f)
    pts = tuple(restricted_point(f, ch, f.place(s)) for s in S)
    offset = ZERO
    for place in f.places:
        if place.id in S:
            continue
        here = restricted_point(f, ch, place)
        ref = reference_point(f, place, rho)
        offset = offset + T.coordinate(here) - T.coordinate(ref)
    return TorsorPoint(S, pts, offset)


def bf_closed(f: SiteFixture, rho: FieldPoint, rng: np.random.Generator | None = None) -> QmodZ:
    """BF_X(rho) = sum over all places of inv(d_x phi - phi_x^nr).

    Each local difference is computed by Theta-transporting the restricted
    global datum straight onto the unramified reference datum.
    """
    ch = global_choice(f, rho, rng)
    T = torsors(f)
    total = ZERO
    for place in f.places:
        here = restricted_point(f, ch, place)
        ref = reference_point(f, place, rho)
        total = total + T.difference(here, ref)
    return total


# ---------------------------------------------------------------------------
# Decomposition formula


@dataclass
class DecompositionReport:
    S: tuple[str, ...]
    T: tuple[str, ...]
    case: int
    checked: int
    counterexamples: list[dict]
    note: str = ""

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def as_dict(self) -> dict:
        out = {
            "S": list(self.S),
            "T": list(self.T),
            "case": self.case,
            "checked": self.checked,
            "passed": self.passed,
            "counterexamples": self.counterexamples,
        }
        if self.note:
            out["note"] = self.note
        return out


def verify_decomposition(
    f: SiteFixture,
    S: Iterable[str],
    T: Iterable[str],
    xi_S: SectionXi | None = None,
    xi_TS: SectionXi | None = None,
    rng: np.random.Generator | None = None,
) -> DecompositionReport:
    """BF_{X_T} restricted to F(X_S) equals BF_{X_S} (+) BF^nr_{T-S} o d^nr, after trivialization.

    The left side trivializes global_bf(T) by xi_S boxplus xi_{T-S}; the right
    side adds the trivialized global_bf(S) (bf_closed when S is empty) and the
    trivialized unramified point on T - S.  Each side draws its own choices.
    """
    S, T = ordered(f, S), ordered(f, T)
    if not set(S) <= set(T):
        raise ValueError("S must be contained in T")
    TS = tuple(t for t in T if t not in S)
    xi_S = xi_S or default_section(f, S)
    xi_TS = xi_TS or default_section(f, TS)
    xi_T = xi_S.boxplus(xi_TS, f)
    case = 2 if not S else 1
    bad = []
    fields = space_of_fields(f, S)
    note = ""
    if case == 2:
        note = "closed case: profiles on T are unramified and the unramified lifts are solvable"
    for rho in fields.elements:
        lhs = trivialize(f, xi_T, global_bf(f, T, rho, rng))
        if S:
            first = trivialize(f, xi_S, global_bf(f, S, rho, rng))
        else:
            first = bf_closed(f, rho, rng)
        second = trivialize(f, xi_TS, bf_unramified_point(f, TS, rho, rng))
        rhs = first + second
        if lhs != rhs:
            bad.append({"rho": [list(rho.rho1), list(rho.rho2)], "lhs": str(lhs), "rhs": str(rhs)})
    return DecompositionReport(S, T, case, len(fields), bad, note)
