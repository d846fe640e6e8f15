import csv
import io
import json
import math
import subprocess
import sys

import pytest

from moranfrac import DimensionEstimate, SequenceSpec
from moranfrac.cli import main, parse_theta_grid

LOG23 = math.log(2) / math.log(3)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_spec(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", "--spec", "middle-third")
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_validate_n_one(capsys, tmp_path):
    path = write_spec(tmp_path, {"kind": "constant", "values": [[1, 0.5, 0]]})
    code, out, err = run(capsys, "validate", "--spec", path)
    assert code == 1
    assert "n_k >= 2" in err
    assert json.loads(out)["first_offending_k"] == 1


def test_validate_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "validate", "--spec", str(tmp_path / "nope.json"))
    assert code == 2 and "error" in err


def test_validate_unparseable(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert run(capsys, "validate", "--spec", str(path))[0] == 2


def test_dim_middle_third(capsys):
    code, out, _ = run(capsys, "dim", "--spec", "middle-third", "--depth", "256")
    doc = json.loads(out)
    assert code == 0
    assert doc["assouad"]["value"] == pytest.approx(LOG23, abs=1e-12)
    assert doc["lower_bound"]["value"] == pytest.approx(LOG23, abs=1e-12)
    assert doc["lower_bound"]["label"] == "upper bound on lower dimension"
    # the documented schema round-trips
    est = DimensionEstimate.from_dict(doc["assouad"])
    assert est.value == doc["assouad"]["value"]


def test_dim_constant_three_fifths(capsys):
    code, out, _ = run(capsys, "dim", "--spec", "uniform-3-1_5", "--depth", "128",
                       "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[0]["kind"] == "assouad"
    assert float(rows[0]["value"]) == pytest.approx(math.log(3) / math.log(5), abs=1e-12)


def test_dim_block_rule(capsys):
    code, out, _ = run(capsys, "dim", "--spec", "dyadic-block", "--depth", "4096")
    doc = json.loads(out)
    assert abs(doc["assouad"]["value"] - math.log(3) / math.log(4)) < 0.02
    assert abs(doc["lower_bound"]["value"] - 0.5) < 0.02


def test_dim_depth_hint(capsys):
    code, _, err = run(capsys, "dim", "--spec", "middle-third", "--depth", "1")
    assert code == 1 and "need K >=" in err


def test_spectrum_constant_columns(capsys):
    code, out, _ = run(capsys, "spectrum", "--spec", "uniform-2-1_4", "--depth", "2048",
                       "--theta-grid", "0.2:0.8:0.1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 7
    cols = ["assouad_formula", "lower_formula", "assouad_scalefn", "lower_scalefn"]
    for row in rows:
        assert all(abs(float(row[c]) - 0.5) < 2e-3 for c in cols)
        assert row["flagged"] == "0"
    assert out.endswith("\n")


def test_spectrum_block_rule_agreement(capsys):
    code, out, _ = run(capsys, "spectrum", "--spec", "dyadic-block", "--depth", "8192",
                       "--theta-grid", "0.1:0.9:0.05")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 17
    for row in rows:
        assert abs(float(row["assouad_formula"]) - float(row["assouad_scalefn"])) <= 0.02
        assert abs(float(row["lower_formula"]) - float(row["lower_scalefn"])) <= 0.02


@pytest.mark.parametrize("grid", ["0:0.5:0.1", "0.5:1.2:0.1", "0.3:0.7:0", "a:b:c"])
def test_spectrum_bad_grid(capsys, grid):
    code, _, err = run(capsys, "spectrum", "--spec", "middle-third", "--theta-grid", grid)
    assert code == 1 and "theta" in err


def test_spectrum_rejects_non_cantor_like(capsys, tmp_path):
    path = write_spec(tmp_path, SequenceSpec.constant(2, 0.3, 0.1, cantor_like=False).to_dict())
    code, _, err = run(capsys, "spectrum", "--spec", path, "--depth", "256")
    assert code == 1 and "Cantor-like" in err


def test_spectrum_empirical_column_and_json(capsys):
    code, out, _ = run(capsys, "spectrum", "--spec", "middle-third", "--depth", "1024",
                       "--realize", "12", "--theta-grid", "0.5:0.5:0.1", "--samples", "16",
                       "--format", "json")
    doc = json.loads(out)
    point = doc["points"][0]
    assert code == 0 and point["theta"] == 0.5
    assert abs(point["empirical"]["value"] - LOG23) <= 0.05


def test_theta_grid_inclusive():
    assert parse_theta_grid("0.1:0.9:0.05").tolist()[-1] == 0.9
    assert len(parse_theta_grid("0.1:0.9:0.05")) == 17


def test_tail_out_of_range(capsys):
    assert run(capsys, "dim", "--spec", "middle-third", "--tail", "1.5")[0] == 1


def test_verify_middle_third(capsys):
    code, out, _ = run(capsys, "verify", "--spec", "middle-third")
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert {f["check"] for f in doc["findings"]} == {
        "structure", "counting_lemmas", "measure_properties", "greedy_vs_exhaustive",
        "oracle_equivalence"}


def test_verify_negative_control(capsys):
    code, out, _ = run(capsys, "verify", "--spec", "middle-third", "--inject-overlap")
    doc = json.loads(out)
    assert code == 1
    assert not next(f for f in doc["findings"] if f["check"] == "structure")["passed"]


def test_verify_perturbed(capsys):
    code, out, _ = run(capsys, "verify", "--spec", "perturbed-middle-third", "--seed", "42")
    assert code == 0 and json.loads(out)["passed"]


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["spectrum", "--spec", "perturbed-middle-third", "--depth", "1024", "--realize",
            "10", "--seed", "42", "--theta-grid", "0.4:0.6:0.1", "--samples", "8"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b), "--jobs", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "moranfrac", "validate", "--spec",
                           "uniform-2-1_4"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["M"] == 2
