import json

import pytest

from thompson_fock import dyadic
from thompson_fock.cli import dumps, main


@pytest.fixture(autouse=True)
def _restore_tau():
    tau = dyadic.get_tau()
    yield
    dyadic.set_tau(tau)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_relations(capsys):
    code, out, _ = run(capsys, "verify", "relations")
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == 1 and doc["command"] == "verify relations"
    assert all(r["identity"] for r in doc["result"]["relations"])


def test_outputs_are_deterministic(capsys):
    a = run(capsys, "hs-norm", "--g", "B", "--level", "9")[1]
    b = run(capsys, "hs-norm", "--g", "B", "--level", "9")[1]
    assert a == b
    doc = json.loads(a)
    assert doc["config"]["level"] == 9


def test_matrix_csv_header(capsys):
    code, out, _ = run(capsys, "matrix", "--g", "A", "--level", "4", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# schema_version: 1" and lines[1] == "# command: matrix"


def test_index_and_word_reduction_notice(capsys):
    code, out, err = run(capsys, "index", "--g", "A A^-1 B", "--level", "6")
    assert code == 0 and json.loads(out)["result"]["index"] == 0
    assert "reduced" in err


def test_structured_error(capsys):
    code, out, err = run(capsys, "hs-norm", "--g", "E", "--level", "3")
    assert code == 1 and out == ""
    e = json.loads(err)
    assert e["error"] == "ValueError" and e["command"] == "hs-norm"


def test_m_parsing(capsys):
    a = json.loads(run(capsys, "hs-norm", "--g", "C", "--level", "9", "--M", "angle:45")[1])
    b = json.loads(run(capsys, "hs-norm", "--g", "C", "--level", "9", "--M", "hadamard")[1])
    assert abs(a["result"]["value"] - b["result"]["value"]) < 1e-12


def test_dgr_and_car(capsys):
    assert json.loads(run(capsys, "dgr", "--check-len", "6")[1])["result"]["d_squared_zero"]
    assert json.loads(run(capsys, "verify", "car", "--modes", "6")[1])["result"]["car_exact"]


def test_out_file(tmp_path, capsys):
    path = tmp_path / "r.json"
    code, out, err = run(capsys, "verify", "relations", "--out", str(path))
    assert code == 0 and out == "" and json.loads(path.read_text())["command"] == "verify relations"


def test_dumps_floats():
    assert dumps({"x": 0.1, "y": [1, 2.5]}) == dumps({"x": 0.1, "y": [1, 2.5]})
    assert json.loads(dumps({"z": 1 / 3}))["z"] == 1 / 3
    assert "0.10000000000000001" in dumps({"x": 0.1})
