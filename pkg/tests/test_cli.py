import json

import pytest

from nrcsb.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_typecheck(capsys, samples):
    code, out, _ = run(capsys, "typecheck", str(samples / "ecommerce.nrc"), "--schema", str(samples / "ecommerce.json"))
    assert code == 0 and out.strip() == "{|<Id : Int>|}"


def test_typecheck_error_is_exit_1(capsys, tmp_path):
    f = write(tmp_path, "bad.nrc", "delta {1}")
    code, out, err = run(capsys, "typecheck", f)
    assert code == 1 and out == ""
    assert "bad.nrc:1:1: error: delta expects a bag" in err


def test_parse_error_is_exit_1(capsys, tmp_path):
    f = write(tmp_path, "bad.nrc", "for x in")
    code, _, err = run(capsys, "normalize", f)
    assert code == 1 and "bad.nrc:1:9: error:" in err


def test_lints_are_warnings(capsys, samples):
    code, _, err = run(capsys, "typecheck", str(samples / "join.nrc"), "--schema", str(samples / "join.json"))
    assert code == 0 and "warning: iota occurs inside a bag comprehension" in err


def test_missing_file_is_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "typecheck", str(tmp_path / "nope.nrc"))
    assert code == 2 and "cannot read" in err


def test_unknown_subcommand_is_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_golden_ecommerce(capsys, samples):
    code, out, _ = run(capsys, "to-sql", str(samples / "ecommerce.nrc"), "--schema", str(samples / "ecommerce.json"))
    assert code == 0
    assert out.strip() == (samples / "ecommerce.sql").read_text().replace("\n", " ").strip()


def test_golden_join(capsys, samples):
    args = ["to-sql", str(samples / "join.nrc"), "--schema", str(samples / "join.json")]
    code, out, err = run(capsys, *args)
    assert code == 1 and out == ""
    assert "blocker: iota occurs inside a bag comprehension" in err
    code, out, _ = run(capsys, *args, "--extension")
    assert code == 0
    assert out.strip() == "SELECT x.B AS B, y.C AS C FROM T AS x, (U UNION V) AS y WHERE x.A = y.A"


def test_golden_derived(capsys, samples):
    code, out, _ = run(capsys, "normalize", str(samples / "derived.nrc"))
    assert code == 0 and out.strip() == "for y in delta P yield set {<a = y.b>}"


def test_fuel(capsys, samples, monkeypatch):
    f = str(samples / "derived.nrc")
    code, _, err = run(capsys, "normalize", f, "--fuel", "2")
    assert code == 3 and "ran out of fuel after 2 steps" in err
    monkeypatch.setenv("NRCSB_FUEL", "2")
    assert run(capsys, "normalize", f)[0] == 3
    assert run(capsys, "normalize", f, "--fuel", "1000")[0] == 0
    monkeypatch.setenv("NRCSB_FUEL", "lots")
    code, _, err = run(capsys, "normalize", f)
    assert code == 2 and "NRCSB_FUEL" in err


def test_json_envelope(capsys, samples):
    code, out, err = run(
        capsys, "to-sql", str(samples / "join.nrc"), "--schema", str(samples / "join.json"), "--format", "json"
    )
    env = json.loads(out)
    assert code == 1 and err == ""
    assert env["command"] == "to-sql" and env["ok"] is False and env["exit_code"] == 1
    assert env["verdict"] == "not-translatable"
    assert env["blockers"][0]["reason"] == "iota occurs inside a bag comprehension"


def test_json_envelope_for_usage_error(capsys, tmp_path):
    code, out, _ = run(capsys, "eval", "x.nrc", "--db", str(tmp_path / "missing.json"), "--format", "json")
    assert code == 2 and json.loads(out)["exit_code"] == 2


def test_trace_text_and_json(capsys, samples):
    code, out, err = run(capsys, "normalize", str(samples / "derived.nrc"), "--trace")
    assert code == 0 and err.startswith("step 1: ")
    assert len(err.strip().splitlines()) == 4
    code, out, _ = run(capsys, "normalize", str(samples / "derived.nrc"), "--trace", "--format", "json")
    env = json.loads(out)
    assert env["steps"] == 4 and len(env["trace"]) == 4 and env["trace"][0]["rule"] == "delta-bagcomp"


def test_output_file(capsys, samples, tmp_path):
    dest = tmp_path / "out.sql"
    code, out, _ = run(
        capsys, "to-sql", str(samples / "ecommerce.nrc"), "--schema", str(samples / "ecommerce.json"), "-o", str(dest)
    )
    assert code == 0 and out == ""
    assert dest.read_text().startswith("(SELECT DISTINCT f.Id AS Id FROM FoodEvents AS f)")


def test_output_is_byte_deterministic(capsys, samples):
    args = ["to-sql", str(samples / "join.nrc"), "--schema", str(samples / "join.json"), "--extension", "--format", "json"]
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_from_sql(capsys, samples):
    code, out, _ = run(capsys, "from-sql", str(samples / "ecommerce.sql"))
    assert code == 0
    assert out.strip().startswith("iota delta (for f in FoodEvents yield bag")


def test_from_sql_error(capsys, tmp_path):
    f = write(tmp_path, "q.sql", "SELECT x.A FROM")
    code, _, err = run(capsys, "from-sql", f)
    assert code == 1 and "q.sql:1:" in err


def test_eval(capsys, samples):
    code, out, _ = run(capsys, "eval", str(samples / "join.nrc"), "--db", str(samples / "join.json"))
    assert code == 0 and out.strip() == "{|<B = 10, C = 5>, <B = 10, C = 5>, <B = 20, C = 7>|}"
    code, out, _ = run(capsys, "eval", str(samples / "join.nrc"), "--db", str(samples / "join.json"), "--format", "json")
    assert json.loads(out)["result"]["bag"][0] == {"count": 2, "value": {"B": 10, "C": 5}}


def test_check_with_repro_dir(capsys, tmp_path):
    code, out, _ = run(capsys, "check", "--suite", "translation", "--cases", "20", "--repro-dir", str(tmp_path))
    assert code == 0 and out.startswith("PASS translation: 20 cases, 0 failures")
    code, out, _ = run(capsys, "check", "--suite", "rules", "--cases", "2", "--format", "json")
    assert code == 0 and json.loads(out)["result"][0]["suite"] == "rules"


def test_eval_on_empty_tables(capsys, tmp_path, samples):
    db = write(tmp_path, "empty.json", json.dumps({"tables": {
        "T": {"schema": {"A": "Int", "B": "Int"}, "rows": []},
        "U": {"schema": {"A": "Int", "C": "Int"}, "rows": []},
        "V": {"schema": {"A": "Int", "C": "Int"}, "rows": []},
    }}))
    code, out, _ = run(capsys, "eval", str(samples / "join.nrc"), "--db", db)
    assert code == 0 and out.strip() == "emptybag"


def test_check_output_is_byte_deterministic(capsys):
    args = ["check", "--suite", "sql", "--cases", "5", "--format", "json"]
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_repro_dir_contents_reproduce_the_failure(capsys, tmp_path):
    from nrcsb.propgen import GenConfig, mutated_catalogue
    from nrcsb.suites import suite_preservation

    result = suite_preservation(GenConfig(seed=0), 200, rules=mutated_catalogue("bagcomp-src-union"))
    assert result.failures
    where = result.failures[0].dump(tmp_path / "case")
    assert {"failure.txt", "term.nrc", "db.json", "trace.jsonl"} <= {p.name for p in where.iterdir()}
    # the dumped term and database load and evaluate through the CLI
    code, out, _ = run(capsys, "eval", str(where / "term.nrc"), "--db", str(where / "db.json"))
    assert code == 0 and out.strip()
