"""End-to-end CLI behavior: exit codes, report schema, determinism."""

import json
import shutil

import pytest

from conftest import INVALID, VALID, run_cli


def _json(out):
    return json.loads(out)


# --- validate -------------------------------------------------------------

def test_validate_ok():
    code, out = run_cli("validate", VALID / "bin2bcd.ir")
    assert code == 0
    rep = _json(out)
    assert rep["command"] == "validate"
    assert rep["outcome"]["valid"] is True
    assert rep["outcome"]["functions"] == ["bin2bcd"]
    assert "config" in rep and rep["config"]["metric"] == "static"


@pytest.mark.parametrize("path", sorted(INVALID.glob("*.ir")), ids=lambda p: p.stem)
def test_validate_rejects_invalid_corpus(path):
    code, out = run_cli("validate", path)
    assert code == 1
    rep = _json(out)
    assert rep["outcome"]["valid"] is False
    assert rep["outcome"]["errors"]


def test_validate_missing_file():
    code, _ = run_cli("validate", "no/such/file.ir")
    assert code == 2


# --- run --------------------------------------------------------------------

def test_run_value():
    code, out = run_cli("run", VALID / "bin2bcd.ir", "45")
    assert code == 0
    o = _json(out)["outcome"]
    assert o == {"args": [45], "outcome": "returned", "value": 69,
                 "reason": None, "steps": 5, "dynamic_cost": 11}


def test_run_trap_is_still_exit_zero(tmp_path):
    p = tmp_path / "t.ir"
    p.write_text("func @f(%x) {\nentry:\n  %a = udiv 1, %x\n  ret %a\n}\n")
    code, out = run_cli("run", p, "0")
    assert code == 0
    o = _json(out)["outcome"]
    assert o["outcome"] == "trapped" and o["reason"] == "DivByZero"


def test_run_bad_arity():
    code, _ = run_cli("run", VALID / "bin2bcd.ir", "1", "2")
    assert code == 2


def test_run_workload_prints_total(tmp_path):
    w = tmp_path / "w.json"
    w.write_text("[[45], [255]]")
    code, out = run_cli("run", VALID / "bin2bcd.ir", "--workload", w)
    assert code == 0
    assert _json(out)["outcome"] == {"cases": 2, "dynamic_cost_total": 22}


# --- opt ----------------------------------------------------------------------

def test_opt_text_mode_prints_ir():
    code, out = run_cli("opt", VALID / "const_expr.ir",
                        "--passes", "const-fold,dce", "--format", "text")
    assert code == 0
    assert out.startswith("func @const_expr(")
    assert "add %x, 20" in out


def test_opt_empty_pipeline_echoes_input():
    code, out = run_cli("opt", VALID / "bin2bcd.ir", "--passes", "",
                        "--format", "text")
    assert code == 0
    assert out == (VALID / "bin2bcd.ir").read_text()


def test_opt_unknown_pass():
    code, _ = run_cli("opt", VALID / "bin2bcd.ir", "--passes", "outline")
    assert code == 2


def test_opt_strict_rejects_non_firing_step():
    code, _ = run_cli("opt", VALID / "straightline_ret.ir",
                      "--passes", "dce", "--strict")
    assert code == 1


def test_opt_lenient_skips_non_firing_step():
    code, out = run_cli("opt", VALID / "straightline_ret.ir", "--passes", "dce")
    assert code == 0
    rep = _json(out)
    assert rep["outcome"]["applied"] == []


def test_opt_replays_reverse_steps():
    code, out = run_cli("opt", VALID / "bin2bcd.ir",
                        "--passes", "rev-instexpand-rem@0,divmul-to-rem",
                        "--format", "text")
    assert code == 0
    assert "urem" in out


def test_opt_stale_reverse_index():
    code, _ = run_cli("opt", VALID / "bin2bcd.ir", "--passes",
                      "rev-instexpand-rem@9")
    assert code == 1


# --- search / ibo ----------------------------------------------------------------

def test_search_report_schema():
    code, out = run_cli("search", VALID / "bin2bcd.ir")
    assert code == 0
    rep = _json(out)
    assert set(rep) == {"command", "config", "input", "outcome", "budget_exceeded"}
    o = rep["outcome"]
    assert o["best_key"] == [11, 5]
    assert o["sequence"] == []
    assert o["explored"] == 2
    assert rep["input"]["function"] == "bin2bcd"
    assert rep["budget_exceeded"] is False


def test_search_then_opt_reproduces_best_ir():
    code, out = run_cli("search", VALID / "branch_clone.ir")
    rep = _json(out)
    seq = ",".join(rep["outcome"]["sequence"])
    code2, ir = run_cli("opt", VALID / "branch_clone.ir", "--passes", seq,
                        "--format", "text")
    assert code2 == 0
    assert ir == rep["outcome"]["best_ir"]


def test_search_budget_exit_3():
    code, out = run_cli("search", VALID / "branch_clone.ir",
                        "--budget-programs", "2")
    assert code == 3
    rep = _json(out)
    assert rep["budget_exceeded"] is True
    assert rep["outcome"]["explored"] == 2


def test_ibo_finds_cheaper_form_than_search():
    code, out = run_cli("ibo", VALID / "bin2bcd.ir", "-k", "2")
    assert code == 0
    rep = _json(out)
    o = rep["outcome"]
    assert o["best_key"] == [9, 4]
    assert o["sequence"] == ["rev-instexpand-rem@0", "rev-instexpand-shl@0",
                            "reassociate"]
    assert o["baseline"]["best_key"] == [11, 5]
    assert [t["key"] for t in o["trace"]] == [[11, 6], [13, 6], [9, 4]]


def test_ibo_then_opt_reproduces_best_ir():
    code, out = run_cli("ibo", VALID / "bin2bcd.ir", "-k", "2")
    rep = _json(out)
    seq = ",".join(rep["outcome"]["sequence"])
    code2, ir = run_cli("opt", VALID / "bin2bcd.ir", "--passes", seq,
                        "--format", "text")
    assert code2 == 0
    assert ir == rep["outcome"]["best_ir"]


def test_ibo_negative_k():
    code, _ = run_cli("ibo", VALID / "bin2bcd.ir", "-k", "-3")
    assert code == 2


def test_ibo_budget_exit_3():
    code, out = run_cli("ibo", VALID / "bin2bcd.ir", "-k", "2",
                        "--budget-programs", "10")
    assert code == 3
    assert _json(out)["budget_exceeded"] is True


# --- equiv-class --------------------------------------------------------------------

def test_equiv_class_closed(tmp_path):
    dot = tmp_path / "g.dot"
    code, out = run_cli("equiv-class", VALID / "straightline_ret.ir",
                        "--budget-instrs", "4", "--dot", dot)
    assert code == 0
    o = _json(out)["outcome"]
    assert o["verdict"] == "closed"
    assert o["truncated"] is False
    assert o["components"] == 1
    text = dot.read_text()
    assert text.startswith("digraph") and "peripheries=2" in text


def test_equiv_class_inconclusive_when_depth_cut():
    code, out = run_cli("equiv-class", VALID / "divmul.ir", "--budget-seq", "1")
    assert code == 0
    o = _json(out)["outcome"]
    assert o["truncated"] is True
    assert o["verdict"] in ("inconclusive", "closed")


# --- compare -----------------------------------------------------------------------

def test_compare_single_file_ibo_wins():
    code, out = run_cli("compare", VALID / "bin2bcd.ir", "-k", "2")
    assert code == 0
    o = _json(out)["outcome"]
    assert o["functions"] == 1
    assert o["ibo_strictly_better"] == 1
    assert o["ibo_strictly_worse"] == 0
    row = o["rows"][0]
    assert row["exhaustive_key"] == [11, 5]
    assert row["ibo_key"] == [9, 4]
    assert row["winner"] == "ibo"
    assert row["equivalent"] is True
    assert row["ibo_keys_by_k"] == {"0": [11, 5], "1": [11, 5], "2": [9, 4]}


def test_compare_k0_always_ties():
    code, out = run_cli("compare", VALID / "bin2bcd.ir", "-k", "0")
    assert code == 0
    o = _json(out)["outcome"]
    assert o["ties"] == 1 and o["ibo_strictly_better"] == 0


def test_compare_directory_aggregates(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    for n in ("bin2bcd", "straightline_ret", "divmul"):
        shutil.copy(VALID / f"{n}.ir", d / f"{n}.ir")
    code, out = run_cli("compare", d, "-k", "2")
    assert code == 0
    o = _json(out)["outcome"]
    assert o["functions"] == 3
    assert o["ibo_strictly_better"] == 1
    assert o["ibo_strictly_worse"] == 0
    assert [r["function"] for r in o["rows"]] == ["bin2bcd", "divmul",
                                                  "straightline_ret"]


def test_compare_empty_directory(tmp_path):
    code, _ = run_cli("compare", tmp_path)
    assert code == 2


def test_compare_text_table():
    code, out = run_cli("compare", VALID / "bin2bcd.ir", "-k", "2",
                        "--format", "text")
    assert code == 0
    assert "winner" in out.splitlines()[0]
    assert "ibo strictly better: 1" in out


# --- config and flags ----------------------------------------------------------------

def test_config_file_costs_change_ranking(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"costs": {"udiv": 1, "urem": 1}}))
    code, out = run_cli("--config", cfg, "search", VALID / "bin2bcd.ir")
    assert code == 0
    rep = _json(out)
    assert rep["config"]["costs"] == {"udiv": 1, "urem": 1}
    assert rep["outcome"]["best_key"] == [5, 5]


def test_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric": "quantum"}))
    code, _ = run_cli("--config", cfg, "search", VALID / "bin2bcd.ir")
    assert code == 2


def test_flags_echo_into_config():
    code, out = run_cli("search", VALID / "bin2bcd.ir", "--seed", "5",
                        "--budget-seq", "3")
    assert code == 0
    rep = _json(out)
    assert rep["config"]["seed"] == 5
    assert rep["config"]["max_sequence_length"] == 3


def test_passes_subset_flag():
    code, out = run_cli("search", VALID / "branch_clone.ir", "--passes", "dce")
    assert code == 0
    rep = _json(out)
    assert rep["config"]["passes"] == ["dce"]
    assert rep["outcome"]["best_key"] == rep["outcome"]["start_key"]


def test_unknown_pass_subset_rejected():
    code, _ = run_cli("search", VALID / "bin2bcd.ir", "--passes", "outline")
    assert code == 2


def test_format_text_renders_key_values():
    code, out = run_cli("validate", VALID / "bin2bcd.ir", "--format", "text")
    assert code == 0
    assert "valid: True" in out


def test_reports_are_byte_deterministic():
    a = run_cli("search", VALID / "branch_clone.ir")
    b = run_cli("search", VALID / "branch_clone.ir")
    assert a == b
    c = run_cli("ibo", VALID / "bin2bcd.ir", "-k", "2")
    d = run_cli("ibo", VALID / "bin2bcd.ir", "-k", "2")
    assert c == d
