import json

import pytest

from boxlogic.cli import EXIT_FAIL, EXIT_LIMIT, EXIT_OK, EXIT_USAGE, main
from boxlogic.logic import read_table1_csv
from boxlogic.reference import expected


@pytest.fixture(scope="module")
def built22(tmp_path_factory):
    out = tmp_path_factory.mktemp("out22")
    assert main(["build", "--out-dir", str(out)]) == EXIT_OK
    return out


def test_build_writes_every_artifact(built22):
    for name in ("logic.json", "states.json", "hasse.dot", "table1.csv", "hasse.png"):
        assert (built22 / name).stat().st_size > 0
    data = json.loads((built22 / "logic.json").read_text())
    assert data["element_count"] == 82 and len(data["atoms"]) == 16


def test_table1_csv_matches_reference_rows(built22, poset22, qs22):
    rows = read_table1_csv((built22 / "table1.csv").read_text())
    table = expected("covering_table")
    atom_comps = {poset22.labels[poset22.complement[a]] for a in poset22.atoms}
    checked = 0
    for q, ups in table.items():
        targets = atom_comps if q == "*^c" else {q}
        for t in targets:
            label = poset22.labels[qs22.index(t)]
            want = {qs22.find(u).key for u in ups}
            assert {qs22.find(u).key for u in rows[label]} == want
            checked += 1
    assert checked >= len(table)


def test_hasse_dot_counts(built22):
    dot = (built22 / "hasse.dot").read_text()
    data = json.loads((built22 / "logic.json").read_text())
    assert dot.count("[label=") == 82
    assert dot.count("->") == len(data["covers"])


def test_states_json(built22):
    data = json.loads((built22 / "states.json").read_text())
    assert data["count"] == 16 and len(data["states"]) == 16


def test_single_column_build(tmp_path, capsys):
    assert main(["build", "--inputs", "1", "--out-dir", str(tmp_path), "--format", "json"]) == EXIT_OK
    assert json.loads((tmp_path / "logic.json").read_text())["element_count"] == 16
    assert "16 elements" in capsys.readouterr().out


def test_resource_limit_writes_partial_output(tmp_path, capsys):
    code = main(["build", "--inputs", "3", "--outputs", "3", "--out-dir", str(tmp_path),
                 "--max-lp-calls", "5", "--format", "json"])
    assert code == EXIT_LIMIT
    data = json.loads((tmp_path / "logic.partial.json").read_text())
    assert data["complete"] is False and data["shape"] == [3, 3]
    assert "resource limit" in capsys.readouterr().err


def test_question_limit(tmp_path):
    assert main(["build", "--out-dir", str(tmp_path), "--max-questions", "20", "--format", "json"]) == EXIT_LIMIT


def test_verify_single_check(built22, capsys):
    assert main(["verify", "--out-dir", str(built22), "--only", "two-valued-states"]) == EXIT_OK
    report = json.loads((built22 / "report.json").read_text())
    assert [c["name"] for c in report["checks"]] == ["two-valued-states"]
    for c in report["checks"]:
        assert set(c) == {"name", "paper_anchor", "expected", "computed", "pass"}
    assert "two-valued-states" in capsys.readouterr().out


def test_verify_unknown_check_is_usage_error(built22):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--out-dir", str(built22), "--only", "nope"])
    assert exc.value.code == EXIT_USAGE


def test_tampered_logic_fails_orthostructure(built22, tmp_path):
    data = json.loads((built22 / "logic.json").read_text())
    data["order"] = data["order"][1:]
    (tmp_path / "logic.json").write_text(json.dumps(data))
    assert main(["verify", "--out-dir", str(tmp_path), "--only", "orthostructure"]) == EXIT_FAIL
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["checks"][0]["pass"] is False


def test_export_unknown_target_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["export", "bogus"])
    assert exc.value.code == EXIT_USAGE


def test_bad_outputs_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["build", "--outputs", "1"])
    assert exc.value.code == EXIT_USAGE


def test_export_matches_built_files(built22, tmp_path, capsys):
    assert main(["export", "table1", "--out-dir", str(built22)]) == EXIT_OK
    assert capsys.readouterr().out == (built22 / "table1.csv").read_text()
    target = tmp_path / "h.dot"
    assert main(["export", "hasse", "--out-dir", str(built22), "--output", str(target)]) == EXIT_OK
    assert target.read_text() == (built22 / "hasse.dot").read_text()
    assert main(["export", "states", "--out-dir", str(built22)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["count"] == 16


def test_export_without_labels(built22, capsys):
    assert main(["export", "hasse", "--no-labels", "--out-dir", str(built22)]) == EXIT_OK
    assert "[xx,00]" not in capsys.readouterr().out


def test_outputs_byte_identical_across_workers(built22, tmp_path):
    assert main(["build", "--out-dir", str(tmp_path), "--workers", "2"]) == EXIT_OK
    for name in ("logic.json", "states.json", "hasse.dot", "table1.csv", "hasse.png"):
        assert (tmp_path / name).read_bytes() == (built22 / name).read_bytes(), name
