import io
from contextlib import redirect_stderr, redirect_stdout

import pytest

from lfhh.cli import main


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def append_lf(golden_dir):
    return str(golden_dir / "append.lf")


@pytest.fixture(scope="module")
def remark_lf(golden_dir):
    return str(golden_dir / "remark.lf")


# -- check ------------------------------------------------------------------------


def test_check_ok(append_lf):
    code, out, _ = run_cli("check", append_lf)
    assert code == 0 and out.strip() == "ok (9 declarations)"


def test_check_empty(tmp_path):
    f = tmp_path / "empty.lf"
    f.write_text("")
    code, out, _ = run_cli("check", str(f))
    assert code == 0 and out.strip() == "ok (0 declarations)"


def test_check_unbound(tmp_path):
    f = tmp_path / "bad.lf"
    f.write_text("c : d.\n")
    code, out, err = run_cli("check", str(f))
    assert code == 1
    assert "unbound constant 'd'" in err


def test_check_syntax_error_location(tmp_path):
    f = tmp_path / "syn.lf"
    f.write_text("a : type\nb : type.\n")
    code, _, err = run_cli("check", str(f))
    assert code == 1 and "2:" in err


# -- analyze -----------------------------------------------------------------------


def test_analyze_append(append_lf):
    code, out, _ = run_cli("analyze", append_lf)
    assert code == 0
    lines = dict(l.split(":", 1) for l in out.strip().splitlines())
    assert lines["appNil"].strip() == "K=rigid"
    assert lines["s"].strip() == "arg1=guarded"
    assert lines["appCons"].strip() == "X=rigid, L=rigid, K=rigid, M=rigid, arg5=guarded"


def test_analyze_remark_non_rigid(remark_lf):
    code, out, _ = run_cli("analyze", remark_lf)
    assert code == 0
    assert "mk: t=guarded" in out
    assert "num_n: n=rigid" in out


# -- translate ---------------------------------------------------------------------


def test_translate_golden(append_lf, golden_dir):
    code, out, _ = run_cli("translate", append_lf, "--mode", "naive")
    assert code == 0 and out == (golden_dir / "append_naive.hh").read_text()
    code, out, _ = run_cli("translate", append_lf, "--mode", "optimized")
    assert code == 0 and out == (golden_dir / "append_optimized.hh").read_text()


def test_translate_empty(tmp_path):
    f = tmp_path / "empty.lf"
    f.write_text("")
    code, out, _ = run_cli("translate", str(f), "--mode", "naive")
    assert code == 0 and out == ""


# -- solve -------------------------------------------------------------------------


def test_solve_example_query(append_lf):
    code, out, _ = run_cli("solve", append_lf, "append (cons z nil) (cons (s z) nil) L")
    assert code == 0
    assert "L = cons z (cons (s z) nil)" in out
    assert "certified" in out


def test_solve_naive_iterdeep(append_lf):
    code, out, _ = run_cli(
        "solve", append_lf, "append (cons z nil) (cons (s z) nil) L", "--mode", "naive", "--iterdeep"
    )
    assert code == 0 and "L = cons z (cons (s z) nil)" in out


def test_solve_first_inhabitant(append_lf):
    code, out, _ = run_cli("solve", append_lf, "nat")
    assert code == 0 and "proof = z" in out


def test_solve_no_solution(append_lf):
    code, out, _ = run_cli("solve", append_lf, "append nil nil (cons z nil)", "--depth", "16")
    assert code == 1
    assert "no solution within depth 16" in out


def test_solve_resource_exhaustion(append_lf):
    code, out, _ = run_cli(
        "solve", append_lf, "append (cons z nil) (cons (s z) nil) L", "--depth", "1"
    )
    assert code == 2 and "no solution" in out


def test_solve_all_enumerates(append_lf):
    code, out, _ = run_cli("solve", append_lf, "nat", "--all", "--depth", "2")
    assert code == 0
    assert out.count("proof =") == 2  # z and s z within depth 2


def test_solve_trace(append_lf):
    code, out, _ = run_cli("solve", append_lf, "list", "--trace")
    assert code == 0 and "# bc nil" in out


def test_solve_bad_depth(append_lf):
    code, _, err = run_cli("solve", append_lf, "nat", "--depth", "0")
    assert code == 1 and "--depth" in err


# -- bench --------------------------------------------------------------------------


def test_bench_csv_counters():
    code, out, _ = run_cli("bench", "--sizes", "0,4", "--format", "csv")
    assert code == 0
    rows = [l.split(",") for l in out.strip().splitlines()]
    assert rows[0] == ["n", "mode", "backchain_steps", "unify_calls", "wall_ns"]
    table = {(r[0], r[1]): int(r[2]) for r in rows[1:]}
    assert table[("4", "optimized")] == 5
    assert table[("0", "optimized")] == 1
    assert table[("0", "naive")] >= 1
    for n in ("4",):
        assert table[(n, "naive")] > table[(n, "optimized")]


def test_bench_naive_strictly_exceeds_optimized():
    code, out, _ = run_cli("bench", "--sizes", "1,2,3,4,5")
    assert code == 0
    rows = [l.split(",") for l in out.strip().splitlines()[1:]]
    table = {(r[0], r[1]): int(r[2]) for r in rows}
    for n in ("1", "2", "3", "4", "5"):
        assert table[(n, "naive")] > table[(n, "optimized")]


def test_bench_text_format():
    code, out, _ = run_cli("bench", "--sizes", "2", "--format", "text", "--mode", "optimized")
    assert code == 0 and "optimized" in out and "backchain" in out


def test_bench_search_variant():
    code, out, _ = run_cli("bench", "--sizes", "2,4", "--search", "--mode", "optimized")
    assert code == 0
    rows = [l.split(",") for l in out.strip().splitlines()[1:]]
    # search instantiates the output list: same backchain law holds
    assert int(rows[0][2]) == 3 and int(rows[1][2]) == 5


# -- compare ------------------------------------------------------------------------


def test_compare_agreement(append_lf):
    code, out, _ = run_cli("compare", append_lf, "append (cons z nil) (cons (s z) nil) L")
    assert code == 0
    assert "type agreement: True" in out and "proof agreement: True" in out


def test_compare_both_fail(append_lf):
    code, out, _ = run_cli("compare", append_lf, "append nil nil (cons z nil)")
    assert code == 0
    assert "both modes fail (finitely)" in out


# -- determinism --------------------------------------------------------------------


def test_output_deterministic(append_lf):
    for argv in (
        ("translate", append_lf, "--mode", "optimized"),
        ("analyze", append_lf),
        ("solve", append_lf, "append (cons z nil) (cons (s z) nil) L", "--trace"),
    ):
        first = run_cli(*argv)
        second = run_cli(*argv)
        assert first == second
