from __future__ import annotations

import numpy as np
import pytest

from arithbf.bfcore import (
    REVERSED,
    FiberMismatch,
    LocalPoint,
    bf_closed,
    combine,
    default_section,
    field_profile,
    global_bf,
    local_bf_unramified,
    random_section_xi,
    space_of_fields,
    theta_action,
    theta_printed,
    torsors,
    trivialize,
    verify_decomposition,
)
from arithbf.groupcoh import Cochain, FiniteGroup, SetSection, cohomology, differential
from arithbf.sitemodel import ObstructionNonzero, QmodZ, load_fixture
from arithbf.suites import bf_independence, decomposition_suite, nested_pairs

from conftest import mutated


def odd_extension():
    """0 -> Z/3 -> Z/9 -> Z/3 -> 0 over C3 with trivial actions (not a valid site)."""
    G = FiniteGroup.cyclic(3)
    one = [[[1]]] * 3
    return load_fixture({
        "name": "odd-extension",
        "modulus": 3,
        "global_group": {"order": 3, "mul_table": G.table.tolist()},
        "modules": {
            "M1": {"invariant_factors": [3], "action": one},
            "M": {"invariant_factors": [9], "action": one},
            "M2": {"invariant_factors": [3], "action": one},
            "D": {"invariant_factors": [3], "action": one},
        },
        "maps": {"iota": [[3]], "pi": [[1]]},
        "places": [{"id": "v1", "subgroup": [0, 1, 2], "inertia": [0, 1, 2],
                    "dualizing_unramified": [[1]], "inv_on_h2": [[1]]}],
        "boundary_conditions": {},
        "selmer_W": {},
    })


def random_class_rep(A, rng):
    H = cohomology(A, 1)
    return H.random_representative(H.group.random_element(rng), rng)


def theta_target(f, sigma, tau, g1, g2, a1, a2):
    b1, b2 = a1 + differential(g1), a2 + differential(g2)
    return f.cup_iota(b1, differential(tau.compose(b2, f.M))) - f.cup_iota(a1, differential(sigma.compose(a2, f.M)))


# ---------------------------------------------------------------------------
# Theta


@pytest.mark.parametrize("which", ["F2", "F3", "odd"])
def test_theta_transports_lifts(which, F2, F3, rng):
    f = {"F2": F2, "F3": F3, "odd": None}[which] or odd_extension()
    for _ in range(40):
        a1, a2 = random_class_rep(f.M1dual, rng), random_class_rep(f.M2, rng)
        g1, g2 = Cochain.random(f.M1dual, 0, rng), Cochain.random(f.M2, 0, rng)
        sigma, tau = SetSection.random(f.pi, rng), SetSection.random(f.pi, rng)
        th = theta_action(f, sigma, tau, g1, g2, a1, a2)
        assert differential(th) == theta_target(f, sigma, tau, g1, g2, a1, a2)


def test_printed_theta_fails_for_odd_exponent(rng):
    f = odd_extension()
    failures = 0
    for _ in range(60):
        a1, a2 = random_class_rep(f.M1dual, rng), random_class_rep(f.M2, rng)
        g1, g2 = Cochain.random(f.M1dual, 0, rng), Cochain.random(f.M2, 0, rng)
        tau = SetSection.random(f.pi, rng)
        target = theta_target(f, f.default_section, tau, g1, g2, a1, a2)
        failures += differential(theta_printed(f, f.default_section, tau, g1, g2, a1, a2)) != target
    assert failures > 0


def test_printed_theta_agrees_on_exponent_two(F2, rng):
    f = F2
    H2 = cohomology(f.D, 2)
    for _ in range(30):
        a1, a2 = random_class_rep(f.M1dual, rng), random_class_rep(f.M2, rng)
        g1, g2 = Cochain.random(f.M1dual, 0, rng), Cochain.random(f.M2, 0, rng)
        sigma, tau = f.default_section, SetSection.random(f.pi, rng)
        assert tau.is_additive()
        diff = theta_action(f, sigma, tau, g1, g2, a1, a2) - theta_printed(f, sigma, tau, g1, g2, a1, a2)
        assert differential(diff).is_zero()
        assert not any(H2.project(diff))


def test_theta_is_additive_at_fixed_fields(F3, rng):
    f = F3
    for _ in range(20):
        a1, a2 = random_class_rep(f.M1dual, rng), random_class_rep(f.M2, rng)
        s, t, u = (SetSection.random(f.pi, rng) for _ in range(3))
        z1, z2 = Cochain.zero(f.M1dual, 0), Cochain.zero(f.M2, 0)
        lhs = theta_action(f, s, t, z1, z2, a1, a2) + theta_action(f, t, u, z1, z2, a1, a2)
        assert lhs == theta_action(f, s, u, z1, z2, a1, a2)


# ---------------------------------------------------------------------------
# Local torsors


def random_point(f, place, x, rng) -> LocalPoint:
    """A point over the local field x with fresh representatives, section and lift."""
    T = torsors(f)
    base = T.base_point(place, x)
    H1, H2 = place.H(f.M1dual, 1), place.H(f.M2, 1)
    r1, r2 = T.split_field(place, x)
    a1, a2 = H1.random_representative(r1, rng), H2.random_representative(r2, rng)
    sigma = SetSection.random(f.pi, rng)
    moved = T.transport(place, base, sigma, a1, a2)
    z = cohomology(place.local(f.D), 2)
    bump = z.random_representative(z.group.random_element(rng), rng)
    return LocalPoint(place.id, tuple(x), sigma, a1, a2, moved + bump)


def test_theta_coherence_of_torsor_coordinates(F2, F3, rng):
    for f in (F2, F3):
        T = torsors(f)
        for place in f.places:
            for x in f.local_fields(place).group.elements():
                p, q, r = (random_point(f, place, x, rng) for _ in range(3))
                assert T.difference(p, q) + T.difference(q, r) == T.difference(p, r)
                assert T.difference(p, q) == T.coordinate(p) - T.coordinate(q)
                assert T.coordinate(p.shifted(QmodZ(1, 2))) == T.coordinate(p) + QmodZ(1, 2)


def test_difference_rejects_other_fibres(F3, rng):
    f = F3
    place = f.places[2]
    elems = list(f.local_fields(place).group.elements())
    p, q = random_point(f, place, elems[0], rng), random_point(f, place, elems[1], rng)
    with pytest.raises(FiberMismatch):
        torsors(f).difference(p, q)


# ---------------------------------------------------------------------------
# Sections and trivializations


def test_section_property(F2, F3):
    for f in (F2, F3):
        for S, _ in nested_pairs(f):
            if not S:
                continue
            for rho in space_of_fields(f, S).elements:
                p = global_bf(f, S, rho)
                expected = tuple(tuple(field_profile(f, rho, f.place(s))) for s in S)
                assert p.fiber == expected


def test_boxplus_and_orientation(F2, rng):
    f = F2
    S, TS = ("v1",), ("v2", "v3")
    xs, xts = random_section_xi(f, S, rng), random_section_xi(f, TS, rng)
    for rho in space_of_fields(f, S + TS).elements:
        p = global_bf(f, S + TS, rho, rng)
        left, right = p.split(S)
        both = trivialize(f, xs.boxplus(xts, f), p)
        assert both == trivialize(f, xs, left) + trivialize(f, xts, right)
        assert trivialize(f, xs, left, REVERSED) == -trivialize(f, xs, left)
        glued = combine(left, right, f)
        assert trivialize(f, xs.boxplus(xts, f), glued) == both


def test_trivialize_rejects_wrong_place_set(F2):
    rho = space_of_fields(F2, ["v1"]).elements[0]
    with pytest.raises(FiberMismatch):
        trivialize(F2, default_section(F2, ["v2"]), global_bf(F2, ["v1"], rho))


# ---------------------------------------------------------------------------
# Choice independence and decomposition


@pytest.mark.parametrize("name", ["F2", "F3"])
def test_choice_independence(name, F2, F3):
    f = {"F2": F2, "F3": F3}[name]
    rep = bf_independence(f, seed=1, resamples=10)
    assert rep["passed"]
    assert rep["bf_closed"] and rep["global_bf"]


def test_unramified_points_on_trivial_layer(F2):
    for place in F2.places:
        x = place.unramified.fields.zero()
        pt = local_bf_unramified(F2, place, x, np.random.default_rng(3))
        assert pt.field == tuple(F2.local_fields(place).group.zero())


def test_bf_closed_values_f2(F2):
    table = {rho.key: bf_closed(F2, rho) for rho in space_of_fields(F2).elements}
    assert len(table) == 4
    assert all(v.is_zero() for v in table.values())


def test_bf_closed_values_f3(F3):
    vals = sorted(str(bf_closed(F3, rho)) for rho in space_of_fields(F3).elements)
    assert set(vals) <= {"0", "1/2"}


@pytest.mark.parametrize("name", ["F2", "F3"])
def test_decomposition_formula_all_nested_pairs(name, F2, F3):
    f = {"F2": F2, "F3": F3}[name]
    rep = decomposition_suite(f, seed=0)
    assert rep["passed"], [r for r in rep["pairs"] if not r["passed"]][:3]
    cases = {r["case"] for r in rep["pairs"]}
    assert cases == {1, 2}
    assert len(rep["pairs"]) == 2 * 27


def test_decomposition_detects_a_corrupted_value(F2, monkeypatch):
    import arithbf.bfcore as bfcore

    real = bfcore.global_bf
    T = ("v2", "v3")

    def skewed(f, S, rho, rng=None):
        p = real(f, S, rho, rng)
        return p.shifted(QmodZ(1, 2)) if tuple(S) == T and any(rho.rho2) else p

    monkeypatch.setattr(bfcore, "global_bf", skewed)
    rep = verify_decomposition(F2, ("v2",), T)
    assert not rep.passed
    assert all(c["rho"][1] != [0] for c in rep.counterexamples)


def test_global_obstruction_is_reported():
    f = mutated("F2", lambda d: d.update(boundary_conditions={}))
    blocked = 0
    for rho in space_of_fields(f, ["v1", "v2", "v3"]).elements:
        try:
            global_bf(f, ["v1", "v2", "v3"], rho)
        except ObstructionNonzero:
            blocked += 1
    assert blocked > 0
