"""Selmer conditions, Selmer groups and the Cassels-Tate pairing on a fixture.

A Selmer condition on a module A is a subgroup of H^1(G_x, A) at every place
of the fixture.  The Cassels-Tate pairing is computed by the cochain recipe:
global cocycles a1, a2, a cochain lift fM of a2 into M, a cochain eps with
d(eps) = a1 u d(fM), local cocycle lifts a_v of a2 lying in W_v, and the
local 2-cocycles gamma_v = eps - a1 u (a_v - fM) whose invariants are summed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from .bfcore import FieldPoint, bf_closed, space_of_fields, unramified_image
from .exactalg import (
    Element,
    FinAbGroup,
    GroupHom,
    NoSolution,
    Subgroup,
    direct_sum,
    kernel,
    quotient,
    solve_mod,
    subgroup_from_generators,
)
from .groupcoh import Cochain, GModule, SetSection, apply_hom, cohomology, differential, solve_coboundary
from .sitemodel import (
    DualData,
    ObstructionNonzero,
    Place,
    QmodZ,
    SiteFixture,
    pairing_annihilator,
    qsum,
)


class DualityNotPerfect(ValueError):
    pass


class NoLocalLift(ValueError):
    pass


MODULE_KEYS = ("M1", "M", "M2", "M1dual", "Mdual", "M2dual")
_DUAL_OF = {"M1": "M1dual", "M": "Mdual", "M2": "M2dual", "M1dual": "M1", "Mdual": "M", "M2dual": "M2"}


def module_by_key(f: SiteFixture, key: str) -> GModule:
    if key not in MODULE_KEYS:
        raise KeyError(f"unknown module {key!r}; expected one of {MODULE_KEYS}")
    return getattr(f, key)


def dual_data(f: SiteFixture, key: str) -> DualData:
    """The DualData pairing key's module with its dual."""
    base = key[:-4] if key.endswith("dual") else key
    return {"M1": f.dual1, "M": f.dualM, "M2": f.dual2}[base]


# ---------------------------------------------------------------------------
# Conditions


@dataclass(frozen=True, eq=False)
class SelmerCondition:
    """Per-place subgroups of H^1(G_x, A) for the module named by key."""

    key: str
    local: Mapping[str, Subgroup]

    def at(self, pid: str) -> Subgroup:
        return self.local[pid]

    def equals(self, other: "SelmerCondition") -> bool:
        return self.key == other.key and all(self.local[p] == other.local[p] for p in self.local)


def local_H1(f: SiteFixture, key: str, place: Place):
    return place.H(module_by_key(f, key), 1)


def full_condition(f: SiteFixture, key: str) -> SelmerCondition:
    local = {}
    for place in f.places:
        G = local_H1(f, key, place).group
        local[place.id] = subgroup_from_generators(G, G.basis())
    return SelmerCondition(key, local)


def zero_condition(f: SiteFixture, key: str) -> SelmerCondition:
    return SelmerCondition(key, {p.id: subgroup_from_generators(local_H1(f, key, p).group, []) for p in f.places})


def condition_from_generators(f: SiteFixture, key: str, gens: Mapping[str, Iterable[Element]]) -> SelmerCondition:
    local = {}
    for place in f.places:
        G = local_H1(f, key, place).group
        local[place.id] = subgroup_from_generators(G, gens.get(place.id, []))
    return SelmerCondition(key, local)


def _local_map(f: SiteFixture, place: Place, h: GroupHom, src: str, tgt: str) -> GroupHom:
    """H^1(G_x, src) -> H^1(G_x, tgt) induced by the carrier map h."""
    cache = f.__dict__.setdefault("_selmer_maps", {})
    k = (place.id, src, tgt)
    if k not in cache:
        A, B = local_H1(f, src, place), local_H1(f, tgt, place)
        target = place.local(module_by_key(f, tgt))
        cache[k] = A.induced(B, lambda c: apply_hom(h, c, target))
    return cache[k]


def _global_map(f: SiteFixture, h: GroupHom, src: str, tgt: str) -> GroupHom:
    cache = f.__dict__.setdefault("_selmer_maps", {})
    k = ("", src, tgt)
    if k not in cache:
        A = cohomology(module_by_key(f, src), 1)
        B = cohomology(module_by_key(f, tgt), 1)
        target = module_by_key(f, tgt)
        cache[k] = A.induced(B, lambda c: apply_hom(h, c, target))
    return cache[k]


_ARROWS = {
    ("M1", "M"): "iota",
    ("M", "M2"): "pi",
    ("Mdual", "M1dual"): "iota_dual",
    ("M2dual", "Mdual"): "pi_dual",
}


def local_arrow(f: SiteFixture, place: Place, src: str, tgt: str) -> GroupHom:
    return _local_map(f, place, getattr(f, _ARROWS[(src, tgt)]), src, tgt)


def global_arrow(f: SiteFixture, src: str, tgt: str) -> GroupHom:
    return _global_map(f, getattr(f, _ARROWS[(src, tgt)]), src, tgt)


def _preimage(h: GroupHom, sub: Subgroup) -> Subgroup:
    """h^{-1}(sub) as a subgroup of h.source."""
    Q = quotient(h.target, sub.generators())
    comp = Q.projection.compose(h)
    return kernel(comp)


def _image_of(h: GroupHom, sub: Subgroup) -> Subgroup:
    return subgroup_from_generators(h.target, [h(g) for g in sub.generators()])


def pullback_condition(f: SiteFixture, cond: SelmerCondition, src: str) -> SelmerCondition:
    """The condition h^{-1}(cond) along the arrow src -> cond.key."""
    local = {p.id: _preimage(local_arrow(f, p, src, cond.key), cond.at(p.id)) for p in f.places}
    return SelmerCondition(src, local)


def pushforward_condition(f: SiteFixture, cond: SelmerCondition, tgt: str) -> SelmerCondition:
    local = {p.id: _image_of(local_arrow(f, p, cond.key, tgt), cond.at(p.id)) for p in f.places}
    return SelmerCondition(tgt, local)


def orthogonal_complement(f: SiteFixture, cond: SelmerCondition) -> SelmerCondition:
    """The annihilator of cond under the local Tate pairing, on the dual module."""
    dual = dual_data(f, cond.key)
    side = "dual" if cond.key.endswith("dual") else "module"
    out = {}
    for place in f.places:
        _check_perfect(f, place, dual)
        out[place.id] = pairing_annihilator(f, place, dual, cond.at(place.id), side)
    return SelmerCondition(_DUAL_OF[cond.key], out)


def _check_perfect(f: SiteFixture, place: Place, dual: DualData) -> None:
    cache = f.__dict__.setdefault("_perfect", {})
    k = (place.id, dual.name)
    if k not in cache:
        Hd, Ha = place.H(dual.module, 1).group, place.H(dual.A, 1).group
        ok = Hd.order == Ha.order
        if ok:
            full = subgroup_from_generators(Ha, Ha.basis())
            ok = pairing_annihilator(f, place, dual, full, "module").order == 1
        cache[k] = ok
    if not cache[k]:
        raise DualityNotPerfect(f"local Tate pairing for {dual.name} is not perfect at {place.id}")


# ---------------------------------------------------------------------------
# Selmer groups


@dataclass(frozen=True, eq=False)
class SelmerGroup:
    condition: SelmerCondition
    ambient: FinAbGroup
    subgroup: Subgroup
    elements: tuple[Element, ...]
    witnesses: Mapping[Element, Mapping[str, Element]] = field(repr=False, default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return self.subgroup.contains(tuple(x))


def restriction_to(f: SiteFixture, key: str, place: Place) -> GroupHom:
    return f.restriction_hom(module_by_key(f, key), place, 1)


def selmer_group(f: SiteFixture, condition: SelmerCondition) -> SelmerGroup:
    """All global classes whose restriction at every place lies in the condition."""
    cache = f.__dict__.setdefault("_selmer_cache", {})
    k = id(condition)
    if k in cache and cache[k][0] is condition:
        return cache[k][1]
    H = cohomology(module_by_key(f, condition.key), 1)
    res = {p.id: restriction_to(f, condition.key, p) for p in f.places}
    elems, wit = [], {}
    for x in H.group.elements():
        profile = {pid: r(x) for pid, r in res.items()}
        if all(condition.at(pid).contains(v) for pid, v in profile.items()):
            elems.append(x)
            wit[x] = profile
    sel = SelmerGroup(condition, H.group, subgroup_from_generators(H.group, elems), tuple(elems), wit)
    cache[k] = (condition, sel)
    return sel


def selmer_kernel(f: SiteFixture, condition: SelmerCondition) -> Subgroup:
    """The same group as selmer_group, computed as a kernel of the map to local quotients."""
    H = cohomology(module_by_key(f, condition.key), 1)
    quots = [quotient(local_H1(f, condition.key, p).group, condition.at(p.id).generators()) for p in f.places]
    if not quots:
        return subgroup_from_generators(H.group, H.group.basis())
    total = direct_sum([q.group for q in quots])
    images = []
    for e in H.group.basis():
        images.append(total.join([q.project(restriction_to(f, condition.key, p)(e)) for q, p in zip(quots, f.places)]))
    return kernel(GroupHom.from_images(H.group, total.group, images))


# ---------------------------------------------------------------------------
# Triples


@dataclass(frozen=True, eq=False)
class SelmerTriple:
    W1: SelmerCondition
    W: SelmerCondition
    W2: SelmerCondition

    def perp(self, f: SiteFixture) -> tuple[SelmerCondition, SelmerCondition, SelmerCondition]:
        """(W1^perp, W^perp, W2^perp) on (M1dual, Mdual, M2dual)."""
        cache = f.__dict__.setdefault("_perp_cache", {})
        if id(self) not in cache or cache[id(self)][0] is not self:
            cache[id(self)] = (self, tuple(orthogonal_complement(f, c) for c in (self.W1, self.W, self.W2)))
        return cache[id(self)][1]


def fixture_W(f: SiteFixture) -> SelmerCondition:
    return SelmerCondition("M", {p.id: f.selmer_W(p) for p in f.places})


def fixture_triple(f: SiteFixture) -> SelmerTriple:
    """(iota^{-1}(W), W, pi(W)) for the fixture's declared W."""
    cache = f.__dict__
    if "_triple" not in cache:
        W = fixture_W(f)
        cache["_triple"] = SelmerTriple(pullback_condition(f, W, "M1"), W, pushforward_condition(f, W, "M2"))
    return cache["_triple"]


@dataclass
class ExactnessReport:
    checks: list[dict]

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def failures(self) -> list[dict]:
        return [c for c in self.checks if not c["passed"]]

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks}


def _compare(place: str, name: str, lhs: Subgroup, rhs: Subgroup) -> dict:
    extra = [list(g) for g in lhs.generators() if not rhs.contains(g)]
    missing = [list(g) for g in rhs.generators() if not lhs.contains(g)]
    out = {"place": place, "equation": name, "passed": not extra and not missing}
    if extra or missing:
        out["witness"] = {"lhs_not_in_rhs": extra, "rhs_not_in_lhs": missing}
    return out


def check_selmer_exactness(f: SiteFixture, triple: SelmerTriple | None = None) -> ExactnessReport:
    """iota^{-1}(W) = W1, pi(W) = W2, and the dual equalities, place by place."""
    triple = triple or fixture_triple(f)
    W1p, Wp, W2p = triple.perp(f)
    checks = []
    for place in f.places:
        pid = place.id
        iota = local_arrow(f, place, "M1", "M")
        pi = local_arrow(f, place, "M", "M2")
        pid_ = local_arrow(f, place, "M2dual", "Mdual")
        iod = local_arrow(f, place, "Mdual", "M1dual")
        checks.append(_compare(pid, "iota^-1(W) = W1", _preimage(iota, triple.W.at(pid)), triple.W1.at(pid)))
        checks.append(_compare(pid, "pi(W) = W2", _image_of(pi, triple.W.at(pid)), triple.W2.at(pid)))
        checks.append(_compare(pid, "(pi^dual)^-1(W^perp) = W2^perp", _preimage(pid_, Wp.at(pid)), W2p.at(pid)))
        checks.append(_compare(pid, "iota^dual(W^perp) = W1^perp", _image_of(iod, Wp.at(pid)), W1p.at(pid)))
    return ExactnessReport(checks)


# ---------------------------------------------------------------------------
# The Cassels-Tate pairing


@dataclass
class CTPChoices:
    """The auxiliary data drawn for one evaluation; exposed for tests."""

    a1: Cochain
    a2: Cochain
    sigma: SetSection
    fM: Cochain
    eps: Cochain
    local_lifts: dict[str, Cochain]
    gammas: dict[str, Cochain]


def _local_lift(
    f: SiteFixture, triple: SelmerTriple, place: Place, a2v: Cochain, sigma: SetSection, rng: np.random.Generator | None
) -> Cochain:
    """A cocycle a in Z^1(G_v, M) with class in W_v and pi(a) = a2v exactly."""
    HM = place.H(f.M, 1)
    H2 = place.H(f.M2, 1)
    W = triple.W.at(place.id)
    pi_star = local_arrow(f, place, "M", "M2")
    x2 = H2.project(a2v)
    # solve pi_star(w) = x2 with w in W
    restricted = pi_star.compose(W.embedding)
    try:
        coords = solve_mod(restricted, x2)
    except NoSolution:
        raise NoLocalLift(f"no class of W at {place.id} lifts the restriction of a2") from None
    if rng is not None:
        ker = kernel(restricted)
        for g in ker.generators():
            coords = restricted.source.add(coords, restricted.source.scale(int(rng.integers(restricted.source.exponent or 1)), g))
    w = W.embedding(coords)
    c = HM.lift(w) if rng is None else HM.random_representative(w, rng)
    Mloc = place.local(f.M)
    M2loc = place.local(f.M2)
    h = solve_coboundary(apply_hom(f.pi, c, M2loc) - a2v)
    return c - differential(sigma.compose(h, Mloc))


def ctp_choices(
    f: SiteFixture,
    triple: SelmerTriple,
    rho1: Element,
    rho2: Element,
    rng: np.random.Generator | None = None,
) -> CTPChoices:
    H1 = cohomology(f.M1dual, 1)
    H2 = cohomology(f.M2, 1)
    a1 = H1.lift(rho1) if rng is None else H1.random_representative(rho1, rng)
    a2 = H2.lift(rho2) if rng is None else H2.random_representative(rho2, rng)
    sigma = f.default_section if rng is None else SetSection.random(f.pi, rng)
    fM = sigma.compose(a2, f.M)
    if rng is not None:
        extra = Cochain.random(f.M1, 1, rng)
        fM = fM + apply_hom(f.iota, extra, f.M)
    try:
        eps = solve_coboundary(f.cup_iota(a1, differential(fM)))
    except NoSolution:
        raise ObstructionNonzero("global CTP lift", f"rho1 = {list(rho1)}, rho2 = {list(rho2)}") from None
    if rng is not None:
        H = cohomology(f.D, 2)
        eps = eps + H.random_representative(H.group.random_element(rng), rng)
    lifts, gammas = {}, {}
    for place in f.places:
        a1v, a2v = place.restrict(a1), place.restrict(a2)
        av = _local_lift(f, triple, place, a2v, sigma, rng)
        lifts[place.id] = av
        gammas[place.id] = place.restrict(eps) - f.cup_iota(a1v, av - place.restrict(fM))
    return CTPChoices(a1, a2, sigma, fM, eps, lifts, gammas)


def cassels_tate_pairing(
    f: SiteFixture,
    triple: SelmerTriple | None,
    rho1: Element,
    rho2: Element,
    rng: np.random.Generator | None = None,
) -> QmodZ:
    """CTP(rho1, rho2) for rho1 in Sel(M1dual, W1^perp), rho2 in Sel(M2, W2)."""
    triple = triple or fixture_triple(f)
    ch = ctp_choices(f, triple, tuple(rho1), tuple(rho2), rng)
    return qsum(f.place(pid).inv(g) for pid, g in ch.gammas.items())


@dataclass
class KernelReport:
    sel1: tuple[Element, ...]
    sel2: tuple[Element, ...]
    table: dict[tuple[Element, Element], QmodZ]
    left_kernel: Subgroup
    right_kernel: Subgroup
    pi_sel: Subgroup
    iota_dual_sel: Subgroup

    @property
    def left_ok(self) -> bool:
        return self.left_kernel == self.pi_sel

    @property
    def right_ok(self) -> bool:
        return self.right_kernel == self.iota_dual_sel

    @property
    def passed(self) -> bool:
        return self.left_ok and self.right_ok

    def as_dict(self) -> dict:
        return {
            "sel_M1dual": [list(x) for x in self.sel1],
            "sel_M2": [list(x) for x in self.sel2],
            "table": [[list(a), list(b), str(v)] for (a, b), v in sorted(self.table.items())],
            "left_kernel": sorted(list(x) for x in self.left_kernel.elements()),
            "pi_sel_M": sorted(list(x) for x in self.pi_sel.elements()),
            "right_kernel": sorted(list(x) for x in self.right_kernel.elements()),
            "iota_dual_sel_Mdual": sorted(list(x) for x in self.iota_dual_sel.elements()),
            "left_equal": self.left_ok,
            "right_equal": self.right_ok,
        }


def ctp_table(f: SiteFixture, triple: SelmerTriple | None = None) -> tuple[tuple, tuple, dict]:
    triple = triple or fixture_triple(f)
    W1p, _, _ = triple.perp(f)
    sel1 = selmer_group(f, W1p).elements
    sel2 = selmer_group(f, triple.W2).elements
    table = {(a, b): cassels_tate_pairing(f, triple, a, b) for a, b in product(sel1, sel2)}
    return sel1, sel2, table


def ctp_kernels(f: SiteFixture, triple: SelmerTriple | None = None) -> KernelReport:
    """Kernels of the full CTP table compared with pi(Sel(M, W)) and iota^dual(Sel(M^dual, W^perp))."""
    triple = triple or fixture_triple(f)
    _, Wp, _ = triple.perp(f)
    sel1, sel2, table = ctp_table(f, triple)
    G1 = cohomology(f.M1dual, 1).group
    G2 = cohomology(f.M2, 1).group
    left = [b for b in sel2 if all(table[(a, b)].is_zero() for a in sel1)]
    right = [a for a in sel1 if all(table[(a, b)].is_zero() for b in sel2)]
    selM = selmer_group(f, triple.W)
    selMd = selmer_group(f, Wp)
    pi_star = global_arrow(f, "M", "M2")
    iod_star = global_arrow(f, "Mdual", "M1dual")
    return KernelReport(
        sel1,
        sel2,
        table,
        subgroup_from_generators(G2, left),
        subgroup_from_generators(G1, right),
        subgroup_from_generators(G2, [pi_star(x) for x in selM.elements]),
        subgroup_from_generators(G1, [iod_star(x) for x in selMd.elements]),
    )


# ---------------------------------------------------------------------------
# Alignment with the BF boundary data


def alignment_problems(f: SiteFixture, triple: SelmerTriple | None = None) -> list[str]:
    """Places where W1^perp x W2 differs from the unramified image (zero off Y)."""
    triple = triple or fixture_triple(f)
    W1p, _, _ = triple.perp(f)
    out = []
    for place in f.places:
        lf = f.local_fields(place)
        gens = [lf.join([g, lf.summands[1].zero()]) for g in W1p.at(place.id).generators()]
        gens += [lf.join([lf.summands[0].zero(), g]) for g in triple.W2.at(place.id).generators()]
        prod_sub = subgroup_from_generators(lf.group, gens)
        target = unramified_image(f, place) if place.in_Y else subgroup_from_generators(lf.group, [])
        if not prod_sub == target:
            out.append(place.id)
    return out


def ctp_equals_bf(f: SiteFixture, triple: SelmerTriple | None = None) -> dict:
    """Compare the CTP table with bf_closed on F(X), pointwise."""
    triple = triple or fixture_triple(f)
    problems = alignment_problems(f, triple)
    sel1, sel2, table = ctp_table(f, triple)
    fields = space_of_fields(f)
    keys = {r.key for r in fields.elements}
    same_support = sorted(keys) == sorted(table)
    rows, bad = [], []
    for (a, b), v in sorted(table.items()):
        # outside F(X) the closed BF functional is not defined
        bf = bf_closed(f, FieldPoint(a, b)) if (a, b) in keys else None
        row = [list(a), list(b), str(v), None if bf is None else str(bf)]
        rows.append(row)
        if bf is not None and bf != v:
            bad.append(row)
    return {
        "aligned": not problems,
        "misaligned_places": problems,
        "fields_equal_selmer_product": same_support,
        "rows": rows,
        "mismatches": bad,
        "passed": not problems and same_support and not bad,
    }
