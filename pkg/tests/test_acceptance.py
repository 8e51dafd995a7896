"""One test per acceptance criterion; each prints a PASS/FAIL line with its timing."""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from arithbf.exactalg import FinAbGroup
from arithbf.groupcoh import FiniteGroup, GModule, cohomology
from arithbf.sitemodel import AXIOMS, load_fixture, validate_fixture
from arithbf.suites import (
    SUITES,
    bf_independence,
    ctp_equals_bf_suite,
    ctp_independence_suite,
    ctp_kernels_suite,
    decomposition_suite,
    gluing_suite,
    leibniz_suite,
    onshell_suite,
)

from conftest import ACCEPTANCE_LINES, mutated
from test_groupcoh import CARRIERS, _cyclic_actions, brute_cohomology_counts, library_counts
from test_sitemodel import PERTURBATIONS, unramified_not_injective

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(number: int, title: str, limit: float):
    """Record PASS/FAIL for one criterion; exceeding the time limit is a failure."""
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        ok = ok and elapsed < limit
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f}s, limit {limit:.0f}s)"
        ACCEPTANCE_LINES.append(line)
        print(line)
    assert elapsed < limit, line


def test_01_leibniz():
    with criterion(1, "graded Leibniz rule on random cochain pairs", 5):
        rep = leibniz_suite(pairs=600, seed=0)
        assert rep["checked"] >= 500
        assert rep["passed"], rep["failures"][:3]


def test_02_cohomology_oracle():
    with criterion(2, "SNF cohomology matches exhaustive enumeration", 10):
        checked = 0
        for n in (1, 2, 3):
            G = FiniteGroup.cyclic(n)
            for moduli in CARRIERS:
                for action in _cyclic_actions(n, moduli):
                    M = GModule(G, FinAbGroup(moduli), [a.tolist() for a in action])
                    for p in (0, 1, 2):
                        top = moduli[0] if moduli else 1
                        got = library_counts(cohomology(M, p).group.invariant_factors, top)
                        assert brute_cohomology_counts(n, moduli, action, p) == got
                        checked += 1
        assert checked == 66


def test_03_fixture_validation(F1, F2):
    with criterion(3, "F1 and F2 validate; every axiom is perturbable", 10):
        for f in (F1, F2):
            rep = validate_fixture(f)
            assert rep.passed, rep.failed()
            assert {r.key for r in rep.results} == set(AXIOMS)
        assert set(PERTURBATIONS) == set(AXIOMS)
        for axiom, fn in PERTURBATIONS.items():
            f = load_fixture(unramified_not_injective()) if fn is None else mutated("F2", fn)
            assert axiom in validate_fixture(f).failed(), axiom


def test_04_choice_independence(F2):
    with criterion(4, "BF and CTP values survive 10 re-choices on F2", 30):
        bf = bf_independence(F2, seed=0, resamples=10)
        assert bf["passed"]
        assert bf["bf_closed"] and bf["global_bf"] and bf["local_bf_unramified"]
        ctp = ctp_independence_suite(F2, seed=0, resamples=10)
        assert ctp["passed"] and ctp["pairs"]


def test_05_decomposition(F2):
    with criterion(5, "decomposition formula for every nested pair on F2", 30):
        rep = decomposition_suite(F2, seed=0)
        assert rep["passed"]
        assert {r["case"] for r in rep["pairs"]} == {1, 2}


def test_06_gluing(F2):
    with criterion(6, "gluing formula on F2, closed case included", 30):
        rep = gluing_suite(F2, seed=0)
        assert rep["passed"]
        assert any(r["S"] == [] for r in rep["pairs"])


def test_07_ctp_kernels(F2):
    with criterion(7, "CTP left and right kernels on F2", 60):
        rep = ctp_kernels_suite(F2)
        assert rep["passed"]
        assert rep["left_kernel"] == rep["pi_sel_M"]
        assert rep["right_kernel"] == rep["iota_dual_sel_Mdual"]


def test_08_ctp_equals_bf(F2):
    with criterion(8, "CTP equals BF on all fields of F2", 30):
        rep = ctp_equals_bf_suite(F2)
        assert rep["aligned"] and rep["passed"] and rep["rows"]


def test_09_onshell(F2):
    with criterion(9, "onshell partition identity on F2", 30):
        rep = onshell_suite(F2)
        assert rep["Z_X_rational"] and rep["passed"]
        assert rep["Z_X_int"] == rep["pi_sel_M"] * rep["sel_M1dual"]


def _verify(suite: str, hashseed: str) -> bytes:
    env = dict(os.environ, PYTHONHASHSEED=hashseed)
    argv = [sys.executable, "-m", "arithbf", "verify", suite, "--fixture", "F2", "--seed", "0", "--format", "json"]
    return subprocess.run(argv, capture_output=True, env=env, check=False).stdout


def test_10_determinism():
    with criterion(10, "verify suites on F2 emit byte-identical json", 120):
        for suite in SUITES:
            first, second = _verify(suite, "1"), _verify(suite, "2")
            assert first == second, suite
            rep = json.loads(first)
            assert rep["schema_version"] == 1 and rep["config"]["seed"] == 0
