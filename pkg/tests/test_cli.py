import json
import math

import pytest

from adelicdiv.cli import main, parse_n_range


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_n_range():
    assert parse_n_range("2:5") == [2, 3, 4, 5]
    assert parse_n_range("1,3,7") == [1, 3, 7]


def test_dstar(capsys):
    code, out, _ = run(capsys, "dstar", "z^2 - 1", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["ok"]
    assert doc["config"]["command"] == "dstar"


def test_canonical_height_text(capsys):
    code, out, _ = run(capsys, "canonical-height", "--map", "z^2", "--point", "2")
    assert code == 0
    assert float(out.split()[0]) == pytest.approx(math.log(2), abs=1e-12)


def test_fekete_check_local(capsys):
    code, out, _ = run(capsys, "fekete-check", "--form", "z^2 - 1", "--local", "--format", "json")
    assert code == 0
    assert json.loads(out)["result"]["lhs"] == pytest.approx(-2 * math.log(2), abs=1e-12)


def test_json_is_deterministic(capsys):
    args = ("energy", "--map", "z^2 - 1", "--pairs", "500", "--seed", "3", "--format", "json")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    strip = lambda s: {k: v for k, v in json.loads(s).items() if k != "timestamp"}
    assert strip(a) == strip(b)


def test_csv_rows(capsys):
    code, out, _ = run(capsys, "periodic-diag", "--map", "z^2", "--n", "1:4", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("n,") and len(lines) == 5


def test_output_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run(capsys, "cs-check", "--count", "20", "--format", "json", "--output", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["result"]["cs_failures"] == 0


def test_exit_codes(capsys):
    assert run(capsys, "height", "--form", "z^2 - 2", "--map", "z^2/4")[0] == 3
    assert run(capsys, "dstar", "z^^2")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "dstar", "0")[0] == 2


def test_green_at_finite_place(capsys):
    code, out, _ = run(capsys, "green", "--map", "z^2/4", "--point", "1/2", "--place", "2", "--format", "json")
    assert code == 0
    res = json.loads(out)["result"]
    assert abs(res["value"] - 2 * math.log(2)) <= res["error"] + 1e-12
