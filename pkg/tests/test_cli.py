import json
import subprocess
import sys

import pytest

from mvbasis import search
from mvbasis.cli import EXIT_BUDGET, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from mvbasis.model import parse_models, bck_reduct, lukasiewicz_chain
from mvbasis.theory import data_text


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out)


def test_term_echo(capsys):
    code, out, _ = run(capsys, "term", "imp(imp(x,x),y)")
    assert code == EXIT_OK and out.strip() == "imp(imp(x,x),y)"
    code, doc = run_json(capsys, "term", " neg( plus(x , zero))", "--sig", "MV210")
    assert doc == {"term": "neg(plus(x,zero))", "variables": ["x"], "size": 4}


@pytest.mark.parametrize("argv", [
    ("term", "plus(x)"),
    ("term", "plus(x,y"),
    ("term", "x", "--sig", "NOPE"),
    ("nosuch",),
    (),
])
def test_term_and_parser_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE and "error" in err


def test_check_proof_bundled(capsys):
    code, out, _ = run(capsys, "check-proof", "--bundled")
    assert code == EXIT_OK and out.strip().endswith("77/77 scripts verified")
    code, doc = run_json(capsys, "check-proof", "--bundled")
    assert doc["ok"] and len(doc["reports"]) == 77
    assert all(r["verified"] for r in doc["reports"])


def test_check_proof_files_and_rebase(capsys, tmp_path):
    from mvbasis.proof import PROOF_FILES
    paths = []
    for f in PROOF_FILES:
        p = tmp_path / f
        p.write_text(data_text("proofs", f))
        paths.append(str(p))
    assert run(capsys, "check-proof", *paths)[0] == EXIT_OK
    code, out, _ = run(capsys, "check-proof", "--bundled", "--rebase", "MV_M=MV_3base",
                       "--skip", "eq9", "--skip", "eq13")
    assert code == EXIT_OK and "75/75" in out


def test_check_proof_empty_list_is_usage_error(capsys):
    code, _, err = run(capsys, "check-proof")
    assert code == EXIT_USAGE and "at least one" in err


def test_check_proof_corrupted_fixture(capsys, tmp_path):
    text = data_text("proofs", "cbck_satisfies_c.proof")
    lines = text.splitlines()
    # swap the two B2/B1 steps of the C2 chain
    i = next(k for k, l in enumerate(lines) if "by B1" in l)
    lines[i], lines[i + 1] = lines[i + 1], lines[i]
    p = tmp_path / "bad.proof"
    p.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "check-proof", str(p))
    assert code == EXIT_FAIL
    assert "FAIL  C2_in_CBCK step 1" in out
    code, doc = run_json(capsys, "check-proof", str(p))
    bad = [r for r in doc["reports"] if not r["verified"]]
    assert [r["script"] for r in bad] == ["C2_in_CBCK"]
    assert [s["index"] for s in bad[0]["steps"] if not s["ok"]] == [1]


def test_check_proof_parse_error_and_missing_file(capsys, tmp_path):
    p = tmp_path / "broken.proof"
    p.write_text("proof p in CBCK_C\n  goal p: imp(x) = x\n")
    code, _, err = run(capsys, "check-proof", str(p))
    assert code == EXIT_USAGE and "broken.proof:2" in err
    assert run(capsys, "check-proof", str(tmp_path / "missing.proof"))[0] == EXIT_USAGE


def test_eval(capsys):
    code, out, _ = run(capsys, "eval", "bck_indep_proj", "C1")
    assert code == EXIT_OK and out.strip() == "C1: holds"
    code, out, _ = run(capsys, "eval", "bck_indep_proj", "C2")
    assert code == EXIT_FAIL and "fails" in out and "counterexample" in out
    code, doc = run_json(capsys, "eval", "mv_indep_A", "M2", "--exhaustive")
    assert code == EXIT_FAIL and doc["holds"] is False and len(doc["all_counterexamples"]) >= 1
    code, doc = run_json(capsys, "eval", "bck_indep_const", "imp(x,y) = imp(y,x)")
    assert code == EXIT_OK and doc["holds"]
    code, _, _ = run(capsys, "eval", "bck_indep_const", "L1", "--theory", "LBCK_L")
    assert code == EXIT_FAIL


def test_eval_model_file(capsys, tmp_path):
    main(["chain", "--n", "3", "--reduct"])
    p = tmp_path / "l3.model"
    p.write_text(capsys.readouterr().out)
    assert run(capsys, "eval", str(p), "B5", "--theory", "LBCK_B_elim")[0] == EXIT_OK
    p.write_text(p.read_text() * 2)
    assert run(capsys, "eval", str(p), "B5")[0] == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ("eval", "nomodel", "C1"),
    ("eval", "bck_indep_proj", "C9"),
    ("eval", "bck_indep_proj", "C9", "--theory", "CBCK_C"),
    ("eval", "bck_indep_proj", "C1", "--theory", "NOPE"),
    ("eval", "bck_indep_proj", "plus(x,y) = x"),
])
def test_eval_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_USAGE


def test_chain(capsys):
    code, out, _ = run(capsys, "chain", "--n", "3", "--reduct")
    assert code == EXIT_OK
    [m] = parse_models(out)
    assert m == bck_reduct(lukasiewicz_chain(3)) and m.name == "L3_imp"
    code, doc = run_json(capsys, "chain", "--n", "4")
    assert doc["tables"]["plus"] == list(lukasiewicz_chain(4).table("plus"))
    code, doc = run_json(capsys, "chain", "--n", "2", "--reduct", "--constants")
    assert doc["signature"] == "BCK20" and doc["tables"]["one"] == [1]
    assert run(capsys, "chain", "--n", "1")[0] == EXIT_USAGE


def test_models(capsys):
    code, doc = run_json(capsys, "models", "CBCK_C", "--size", "3", "--up-to-iso")
    assert code == EXIT_OK and doc["count"] == 2 and len(doc["models"]) == 2
    assert "seconds" in doc and "nodes" in doc
    code, out, _ = run(capsys, "models", "LBCK_L", "--size", "2")
    assert len(parse_models(out)) == 2
    code, out, _ = run(capsys, "models", "MV_A", "--size", "3", "--count-only")
    assert out.strip() == "MV_A n=3: 6 model(s)"
    code, doc = run_json(capsys, "models", "MV_A", "--size", "2", "--count-only")
    assert "models" not in doc and doc["count"] == 2


@pytest.mark.parametrize("argv", [
    ("models", "CBCK_C", "--size", "4"),
    ("models", "CBCK_C", "--size", "0"),
    ("models", "NOPE", "--size", "2"),
    ("models", "CBCK_C", "--size", "2", "--workers", "0"),
    ("models", "CBCK_C", "--size", "2", "--budget-secs", "0"),
    ("models", "CBCK_C", "--size", "7", "--stretch"),
    ("models", "CBCK_C"),
])
def test_models_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_USAGE


def test_models_stretch(capsys):
    code, doc = run_json(capsys, "models", "LBCK_L", "--size", "4", "--stretch", "--count-only")
    assert code == EXIT_OK and doc["count"] == 64


def test_budget_exit_code(capsys):
    search.clear_cache()
    code, _, err = run(capsys, "models", "MV_M", "--size", "3", "--budget-secs", "0.000001")
    assert code == EXIT_BUDGET and "budget" in err


def test_compare(capsys):
    code, out, _ = run(capsys, "compare", "CBCK_C", "CBCK_B_elim", "--size", "3")
    assert code == EXIT_OK and "equal" in out
    code, doc = run_json(capsys, "compare", "MV_A", "MV_M", "--size", "2")
    assert doc["verdict"] == "equal" and doc["constant"] == "zero"
    code, doc = run_json(capsys, "compare", "CBCK_C", "LBCK_L", "--size", "4", "--stretch")
    assert code == EXIT_FAIL and doc["verdict"] == "left-not-right"
    assert doc["witness"]["tables"]["imp"] == [0, 1, 2, 3, 0, 0, 0, 2, 0, 2, 0, 2, 0, 2, 0, 0]
    assert run(capsys, "compare", "MV_A", "CBCK_C", "--size", "2")[0] == EXIT_USAGE


def test_independence(capsys):
    code, out, _ = run(capsys, "independence")
    assert code == EXIT_OK and out.count("pass ") == 6
    code, doc = run_json(capsys, "independence", "mv_indep_B", "--theory", "MV_M",
                         "--hold", "M2", "--fail", "M1")
    assert code == EXIT_OK and doc["ok"]
    code, doc = run_json(capsys, "independence", "mv_indep_B", "--theory", "MV_M",
                         "--hold", "M1", "--fail", "M2")
    assert code == EXIT_FAIL and not doc["ok"]
    assert run(capsys, "independence", "mv_indep_B")[0] == EXIT_USAGE
    assert run(capsys, "independence", "mv_indep_B", "--theory", "MV_M", "--hold", "M2")[0] == EXIT_USAGE
    assert run(capsys, "independence", "mv_indep_B", "--theory", "MV_M",
               "--hold", "M2", "--fail", "M7")[0] == EXIT_USAGE
    assert run(capsys, "independence", "mv_indep_B", "--theory", "CBCK_C",
               "--hold", "C1", "--fail", "C2")[0] == EXIT_USAGE


@pytest.mark.parametrize("n", [1, 2, 3])
def test_verify_theorems(capsys, n):
    code, doc = run_json(capsys, "verify-theorems", "--size", str(n))
    assert code == EXIT_OK and doc["status"] == 0
    assert [c["verdict"] for c in doc["comparisons"]] == ["equal"] * 3
    assert all(c["closure_spot_check"] for c in doc["comparisons"])
    assert len(doc["independence"]) == 6 and all(r["passed"] for r in doc["independence"])
    if n == 1:
        assert all(c["left_count"] == c["right_count"] == 1 for c in doc["comparisons"])


def test_verify_theorems_text_matches_json(capsys):
    code_t, out, _ = run(capsys, "verify-theorems")
    code_j, doc = run_json(capsys, "verify-theorems")
    assert code_t == code_j == EXIT_OK
    assert out.count(": equal") == 3 and out.strip().endswith("all verdicts match")
    assert out.count("pass ") == sum(r["passed"] for r in doc["independence"])


def test_verify_theorems_budget(capsys):
    search.clear_cache()
    code, doc = run_json(capsys, "verify-theorems", "--size", "3", "--budget-secs", "0.000001")
    assert code == EXIT_BUDGET and doc["status"] == EXIT_BUDGET
    assert "budget-exceeded" in [c["verdict"] for c in doc["comparisons"]]


def test_verify_theorems_size_guard(capsys):
    assert run(capsys, "verify-theorems", "--size", "4")[0] == EXIT_USAGE


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "mvbasis", "term", "neg(x)"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "neg(x)"
