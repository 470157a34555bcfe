"""Acceptance criteria, one test per criterion; each records a PASS/FAIL line in the terminal summary.

Two criteria are split because part of each fails on faithful inputs; those parts are strict xfails.
"""

import time

import pytest

from phan.harness import SuiteDescriptor, run_suite

FF_TRIVIAL_AND_NONTRIVIAL_Q = [
    {"type": "A", "n": 2, "q": 4, "sigma": "frob", "residue": "whole"},
    {"type": "A", "n": 2, "q": 4, "sigma": "frob", "residue": "point"},
    {"type": "C", "n": 2, "q": 9, "sigma": "frob", "residue": "whole"},
    {"type": "C", "n": 2, "q": 9, "sigma": "frob", "residue": "point"},
]

C9 = {"type": "C", "n": 2, "q": 9, "sigma": "id", "m": 1}


def timed(desc):
    t0 = time.perf_counter()
    rep = run_suite(desc)
    return rep, time.perf_counter() - t0


def claims(rep):
    return [c["counterexample"].get("claim") for c in rep["cases"] if "counterexample" in c]


def test_criterion_1_rank_one_witness(criterion):
    rep, dt = timed(SuiteDescriptor("lemma-4.4"))
    above = [c for c in rep["cases"] if c["bound"]["field_bound_ok"]]
    missed = [c for c in above if c["verdict"] != "verified"]
    kinds = {(c["inputs"]["kind"], c["inputs"]["sigma"]) for c in rep["cases"]}
    ok = bool(above) and not missed and {("C", "id"), ("B", "id"), ("C", "frob"), ("B", "frob")} <= kinds and dt < 60
    assert criterion("criterion 1", ok, f"{len(above)} above-bound cases, {len(missed)} missed, {dt:.1f}s")


def test_criterion_2_rank_one_fixed_points(criterion):
    rep, _ = timed(SuiteDescriptor("lemma-6.5"))
    orders = {c["inputs"]["q"] for c in rep["cases"]}
    ok = rep["summary"]["verified"] == len(rep["cases"]) and orders == {2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25}
    assert criterion("criterion 2", ok, f"{len(rep['cases'])} (q, sigma) cases")


@pytest.fixture(scope="module")
def quotient_reports():
    out = {}
    for sid in ("lemma-5.4", "lemma-5.6"):
        out[sid] = timed(SuiteDescriptor(sid))
    return out


def test_criterion_3_quotient_equivalence(criterion, quotient_reports):
    notes, ok = [], True
    for sid, (rep, dt) in quotient_reports.items():
        eq = claims(rep).count("equivalence")
        ok &= eq == 0 and len(rep["cases"]) == 200 and dt < 300
        notes.append(f"{sid}: {eq} equivalence counterexamples in {dt:.1f}s")
    assert criterion("criterion 3 (equivalence)", ok, "; ".join(notes))


@pytest.mark.xfail(strict=True, reason="quotient forms need not be compatible; the generalized complement may not exist")
def test_criterion_3_quotient_compatibility(criterion, quotient_reports):
    notes, total = [], 0
    for sid, (rep, _) in quotient_reports.items():
        cs = claims(rep)
        bad = cs.count("compatibility") + cs.count("existence-of-A")
        total += bad
        notes.append(f"{sid}: {cs.count('compatibility')} incompatible, {cs.count('existence-of-A')} without complement")
    assert criterion("criterion 3 (compatibility)", total == 0, "; ".join(notes))


def test_criterion_4_perp_transfer(criterion):
    rep, _ = timed(SuiteDescriptor("lemma-5.5"))
    ok = rep["summary"]["verified"] == len(rep["cases"]) == 6
    checks = sum(c["details"]["perp_identities"] + c["details"]["transversal_pairs"] for c in rep["cases"])
    assert criterion("criterion 4", ok, f"{checks} identities and implications checked")


def test_criterion_5_main_theorem_rank_two(criterion):
    grid = {"instances": [dict(C9, flag="trivial"), dict(C9, flag="point"),
                          {"type": "C", "n": 2, "q": 25, "sigma": "frob", "m": 1, "flag": "trivial"},
                          {"type": "C", "n": 2, "q": 25, "sigma": "frob", "m": 1, "flag": "point"}]}
    rep, dt = timed(SuiteDescriptor("main-theorem-n2", grid))
    conn = [c["homology"]["betti_reduced"][0] == 0 and c["details"]["vertices"] > 0 for c in rep["cases"]]
    ok = all(conn) and rep["summary"]["verified"] == 4 and dt < 600
    assert criterion("criterion 5 (F_9, F_25)", ok, f"{sum(conn)}/4 connected, {dt:.1f}s")


@pytest.mark.xfail(strict=True, reason="sigma = id in characteristic 2 leaves isolated totally isotropic lines")
def test_criterion_5_main_theorem_f16_two_forms(criterion):
    grid = {"instances": [{"type": "C", "n": 2, "q": 16, "sigma": "id", "m": 2, "flag": "trivial"}]}
    rep, _ = timed(SuiteDescriptor("main-theorem-n2", grid))
    case = rep["cases"][0]
    b0 = case["homology"]["betti_reduced"][0]
    assert criterion("criterion 5 (F_16, m = 2)", case["verdict"] == "verified" and b0 == 0, f"reduced b_0 = {b0}")


def test_criterion_6_link_soundness(criterion):
    rep, _ = timed(SuiteDescriptor("link-soundness", {"instances": [dict(C9, flag="trivial")]}))
    d = rep["cases"][0]["details"]
    ok = rep["summary"]["verified"] == 1 and d["mismatch"] is None and d["y0_acyclic"]
    assert criterion("criterion 6", ok, f"{d['checked']} (U, stage) pairs, Y_0 acyclic: {d['y0_acyclic']}")


def test_criterion_7_homology_oracles(criterion):
    rep, _ = timed(SuiteDescriptor("homology-oracles"))
    ok = rep["summary"]["verified"] == len(rep["cases"]) == 5
    assert criterion("criterion 7", ok, ", ".join(c["inputs"]["name"] for c in rep["cases"]))


def test_criterion_8_flip_flop(criterion):
    t0 = time.perf_counter()
    prop = run_suite(SuiteDescriptor("prop-6.6", {"cases": FF_TRIVIAL_AND_NONTRIVIAL_Q}))
    thm = run_suite(SuiteDescriptor("thm-6.8", {"cases": FF_TRIVIAL_AND_NONTRIVIAL_Q}))
    dt = time.perf_counter() - t0
    qdims = [bool(c["details"]["Q_dims"]) for c in prop["cases"]]
    ok = (prop["summary"]["verified"] == thm["summary"]["verified"] == 4 and qdims == [False, True, False, True]
          and dt < 600)
    assert criterion("criterion 8", ok, f"length formula and chamber-set equality on 4 residues, {dt:.1f}s")


def test_criterion_9_weyl_layer(criterion):
    rep, _ = timed(SuiteDescriptor("weyl-layer"))
    ok = rep["summary"]["verified"] == len(rep["cases"]) == 3
    assert criterion("criterion 9", ok, "Bruhat cells A_2/F_2, C_2/F_2; gates on A_2/F_2")


def test_criterion_10_cohen_macaulay_shadow(criterion):
    rep, _ = timed(SuiteDescriptor("cm-links", {"instances": [dict(C9, flag="trivial"), dict(C9, flag="point")]}))
    ok = rep["summary"]["verified"] == 2 and all(c["details"]["complex_ok"] and not c["details"]["failures"]
                                                 for c in rep["cases"])
    links = sum(c["details"]["links_checked"] for c in rep["cases"])
    assert criterion("criterion 10", ok, f"{links} vertex links nonempty, complexes connected")
