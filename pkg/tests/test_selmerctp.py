from __future__ import annotations

from itertools import product

import pytest

from arithbf.groupcoh import cohomology, differential
from arithbf.selmerctp import (
    MODULE_KEYS,
    SelmerTriple,
    alignment_problems,
    cassels_tate_pairing,
    check_selmer_exactness,
    condition_from_generators,
    ctp_choices,
    ctp_equals_bf,
    ctp_kernels,
    fixture_triple,
    full_condition,
    local_H1,
    orthogonal_complement,
    selmer_group,
    selmer_kernel,
    zero_condition,
)
from arithbf.sitemodel import FIXTURE_DIR, load_fixture
from arithbf.suites import ctp_independence_suite


def random_condition(f, key, rng):
    gens = {}
    for p in f.places:
        G = local_H1(f, key, p).group
        gens[p.id] = [G.random_element(rng) for _ in range(int(rng.integers(0, 3)))]
    return condition_from_generators(f, key, gens)


def conditions(f, rng):
    triple = fixture_triple(f)
    W1p, Wp, W2p = triple.perp(f)
    out = [triple.W1, triple.W, triple.W2, W1p, Wp, W2p]
    for key in MODULE_KEYS:
        out += [full_condition(f, key), zero_condition(f, key), random_condition(f, key, rng)]
    return out


# ---------------------------------------------------------------------------
# Selmer groups


@pytest.mark.parametrize("name", ["F2", "F3"])
def test_selmer_routes_agree(name, F2, F3, rng):
    f = {"F2": F2, "F3": F3}[name]
    for cond in conditions(f, rng):
        sel = selmer_group(f, cond)
        assert selmer_kernel(f, cond) == sel.subgroup
        assert sel.order == sel.subgroup.order


@pytest.mark.parametrize("name", ["F2", "F3"])
def test_orthogonal_complement_orders(name, F2, F3, rng):
    f = {"F2": F2, "F3": F3}[name]
    for key in ("M1", "M", "M2"):
        for _ in range(5):
            cond = random_condition(f, key, rng)
            perp = orthogonal_complement(f, cond)
            back = orthogonal_complement(f, perp)
            for p in f.places:
                H = local_H1(f, key, p).group
                assert cond.at(p.id).order * perp.at(p.id).order == H.order
                assert back.at(p.id) == cond.at(p.id)


def test_exactness_holds_on_fixtures(F2, F3):
    for f in (F2, F3):
        rep = check_selmer_exactness(f)
        assert rep.passed, rep.failures()
        assert len(rep.checks) == 4 * len(f.places)


def test_exactness_detects_inconsistent_triple(F3):
    f = F3
    t = fixture_triple(f)
    broken = SelmerTriple(t.W1, t.W, full_condition(f, "M2"))
    rep = check_selmer_exactness(f, broken)
    assert not rep.passed
    assert {c["equation"] for c in rep.failures()} >= {"pi(W) = W2"}


def test_frozen_selmer_groups(F2, F3):
    t2 = fixture_triple(F2)
    assert selmer_group(F2, t2.perp(F2)[0]).elements == ((0, 0), (1, 0))
    assert selmer_group(F2, t2.W2).elements == ((0, 0), (1, 0))
    t3 = fixture_triple(F3)
    assert selmer_group(F3, t3.perp(F3)[0]).elements == ((0, 0), (1, 0))
    assert selmer_group(F3, t3.W2).order == 4


# ---------------------------------------------------------------------------
# The Cassels-Tate pairing


@pytest.mark.parametrize("name", ["F2", "F3"])
def test_ctp_bilinear(name, F2, F3):
    f = {"F2": F2, "F3": F3}[name]
    t = fixture_triple(f)
    sel1 = selmer_group(f, t.perp(f)[0]).elements
    sel2 = selmer_group(f, t.W2).elements
    G1, G2 = cohomology(f.M1dual, 1).group, cohomology(f.M2, 1).group
    ctp = {(a, b): cassels_tate_pairing(f, t, a, b) for a, b in product(sel1, sel2)}
    for a, a2, b in product(sel1, sel1, sel2):
        assert ctp[(G1.add(a, a2), b)] == ctp[(a, b)] + ctp[(a2, b)]
    for a, b, b2 in product(sel1, sel2, sel2):
        assert ctp[(a, G2.add(b, b2))] == ctp[(a, b)] + ctp[(a, b2)]


def test_gamma_is_a_cocycle(F3, rng):
    f = F3
    t = fixture_triple(f)
    sel1 = selmer_group(f, t.perp(f)[0]).elements
    sel2 = selmer_group(f, t.W2).elements
    for a, b in product(sel1, sel2):
        for r in (None, rng):
            ch = ctp_choices(f, t, a, b, r)
            assert differential(ch.eps) == f.cup_iota(ch.a1, differential(ch.fM))
            for pid, g in ch.gammas.items():
                assert differential(g).is_zero(), pid
            for pid, av in ch.local_lifts.items():
                assert differential(av).is_zero()


@pytest.mark.parametrize("name", ["F2", "F3"])
def test_ctp_choice_independence(name, F2, F3):
    f = {"F2": F2, "F3": F3}[name]
    rep = ctp_independence_suite(f, seed=3, resamples=10)
    assert rep["passed"]
    assert all(len(r["resamples"]) == 10 for r in rep["pairs"])


def test_frozen_ctp_table_f3(F3):
    rep = ctp_kernels(F3).as_dict()
    table = {(tuple(a), tuple(b)): v for a, b, v in rep["table"]}
    nonzero = sorted(k for k, v in table.items() if v != "0")
    assert nonzero == [((1, 0), (0, 1)), ((1, 0), (1, 1))]
    assert all(table[k] == "1/2" for k in nonzero)


def test_kernel_theorem(F2, F3):
    for f in (F2, F3):
        rep = ctp_kernels(f)
        assert rep.left_ok and rep.right_ok
    d = ctp_kernels(F3).as_dict()
    assert d["left_kernel"] == d["pi_sel_M"] == [[0, 0], [1, 0]]
    assert d["right_kernel"] == d["iota_dual_sel_Mdual"] == [[0, 0]]


def test_kernel_theorem_is_sensitive_to_inv():
    f = load_fixture(FIXTURE_DIR / "F3.json")
    fixture_triple(f).perp(f)
    place = f.place("v3")
    place.inv_on_h2 = [[0]]
    place.__dict__.pop("inv_hom", None)
    rep = ctp_kernels(f)
    assert all(v.is_zero() for v in rep.table.values())
    assert not rep.left_ok and not rep.right_ok


# ---------------------------------------------------------------------------
# Comparison with BF


def test_ctp_equals_bf_on_aligned_fixture(F2):
    rep = ctp_equals_bf(F2)
    assert rep["aligned"] and rep["fields_equal_selmer_product"]
    assert rep["passed"] and not rep["mismatches"]
    assert len(rep["rows"]) == 4


def test_misaligned_fixture_is_reported(F3):
    assert alignment_problems(F3) == ["v2", "v3"]
    rep = ctp_equals_bf(F3)
    assert not rep["aligned"]
    assert not rep["passed"]
