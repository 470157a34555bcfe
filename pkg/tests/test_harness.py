import json
from itertools import product
from pathlib import Path

import pytest

from phan.cli import main
from phan.field import Involution, field_of_order
from phan.form import Form
from phan.geometry import spec_to_json
from phan.harness import (REGISTRY, VERDICTS, HarnessError, SuiteDescriptor, build_specs, emit, empty_report,
                          parse_report, pipeline_enumerate_homology, run_suite)

GOLDEN = Path(__file__).parent / "golden"


def test_registry_contents():
    for sid in ("lemma-4.4", "lemma-5.4", "lemma-5.6", "prop-6.6", "thm-6.8", "main-theorem-n2", "cm-links"):
        assert sid in REGISTRY and REGISTRY[sid].doc


def test_unknown_suite_and_empty_grid():
    with pytest.raises(HarnessError):
        run_suite(SuiteDescriptor("no-such-suite"))
    with pytest.raises(HarnessError):
        run_suite(SuiteDescriptor("lemma-6.5", {"orders": []}))


def test_report_is_deterministic_and_round_trips():
    desc = SuiteDescriptor("lemma-6.5", {"orders": [2, 3, 4]})
    a, b = emit(run_suite(desc)), emit(run_suite(desc))
    assert a == b
    assert emit(parse_report(a)) == a


def test_parallel_matches_serial():
    g = {"orders": [3, 4, 5, 7]}
    assert emit(run_suite(SuiteDescriptor("lemma-6.5", g, jobs=2))) == emit(run_suite(SuiteDescriptor("lemma-6.5", g)))


def test_empty_report_emits():
    rep = empty_report()
    assert parse_report(emit(rep))["cases"] == []
    assert emit(rep, "csv").splitlines() == ["suite,case,verdict,judgement,inputs,counterexample,details"]
    with pytest.raises(ValueError):
        emit(rep, "xml")


def _nondegenerate_count(q, sigma):
    """Independent count of non-degenerate, non-alternating 2x2 hermitian Gram matrices."""
    F = field_of_order(q)
    s = Involution(F, sigma)
    fixed = [x for x in range(q) if s.raw(x) == x]
    n = 0
    for a, d, b in product(fixed, fixed, range(q)):
        f = Form([[a, b], [s.raw(b), d]], s, check=False)
        if f.is_nondegenerate() and not (F.p == 2 and s.is_identity and a == 0 and d == 0):
            n += 1
    return n


def test_lemma_6_5_golden():
    grid = json.loads((GOLDEN / "lemma-6.5-grid.json").read_text())
    rep = run_suite(SuiteDescriptor("lemma-6.5", grid))
    assert emit(rep) == (GOLDEN / "lemma-6.5.json").read_text()
    for case in rep["cases"]:
        q, sigma = case["inputs"]["q"], case["inputs"]["sigma"]
        hist = case["details"]["fixed_point_histogram"]
        assert sum(hist.values()) == _nondegenerate_count(q, sigma)
        if sigma == "frob":
            assert set(hist) == {str(int(round(q ** 0.5)) + 1)}
        elif q % 2 == 0:
            assert set(hist) == {"1"}
        else:
            assert set(hist) == {"0", "2"}


def test_refutation_sets_exit_code():
    rep = run_suite(SuiteDescriptor("lemma-5.4", {"instances": 40}))
    assert rep["summary"]["refuted-with-counterexample"] > 0 and rep["exit_code"] == 1
    assert all(c["verdict"] in VERDICTS for c in rep["cases"])
    claims = {c["counterexample"]["claim"] for c in rep["cases"] if "counterexample" in c}
    assert claims == {"compatibility"}


def test_budget_skip_does_not_fail(monkeypatch):
    monkeypatch.setenv("PHAN_BUDGET", "5")
    rep = run_suite(SuiteDescriptor("weyl-layer"))
    assert rep["summary"]["skipped-budget"] > 0 and rep["exit_code"] == 0


def test_sub_bound_instances_are_exploratory():
    specs = build_specs({"type": "C", "n": 2, "q": 5, "sigma": "id"})
    rep = pipeline_enumerate_homology(specs)
    assert rep["judgement"] == "exploratory" and not rep["bound"]["field_bound_ok"]


def test_cli_round_trip(tmp_path):
    out = tmp_path / "r.json"
    grid = tmp_path / "g.json"
    grid.write_text(json.dumps({"orders": [3]}))
    assert main(["suite", "lemma-6.5", "--grid", str(grid), "--out", str(out)]) == 0
    assert parse_report(out.read_text())["summary"]["verified"] == 1
    assert main(["suite", "no-such-suite"]) == 2

    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(spec_to_json(build_specs({"type": "C", "n": 2, "q": 9, "sigma": "id"}))))
    geom = tmp_path / "geom.json"
    assert main(["enumerate", "--spec", str(spec), "--out", str(geom)]) == 0
    hom = tmp_path / "h.json"
    assert main(["homology", "--in", str(geom), "--out", str(hom)]) == 0
    h = json.loads(hom.read_text())
    assert h["spherical_up_to"] >= 0 and h["betti_reduced"][0] == 0

    form = tmp_path / "form.json"
    form.write_text(json.dumps({"gram": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "sigma": "frob"}))
    ff = tmp_path / "ff.json"
    assert main(["flipflop", "--building", "A2", "--field-order", "4", "--form", str(form), "--compare-gpg",
                 "--out", str(ff)]) == 0
    assert json.loads(ff.read_text())["gpg"]["status"] == "verified"


def test_sub_bound_failure_is_no_witness():
    grid = {"instances": [{"type": "C", "n": 3, "q": 3, "sigma": "id", "m": 1, "flag": "trivial"}]}
    rep = run_suite(SuiteDescriptor("cm-links", grid))
    case = rep["cases"][0]
    assert case["judgement"] == "exploratory" and case["verdict"] == "no-witness" and rep["exit_code"] == 0
    assert case["details"]["failures"]
