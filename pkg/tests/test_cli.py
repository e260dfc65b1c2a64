import json
import subprocess
import sys

import pytest

from grushin_harnack.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_geometry(capsys, tmp_path):
    csv_path = tmp_path / "r.csv"
    code, out, _ = run(["geometry", "--kind", "Box", "--radius", "1", "--pairs", "3",
                        "--csv", str(csv_path)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == "1.0"
    assert doc["measure"] == pytest.approx(4.0, rel=1e-3)
    assert len(doc["structure"]) == 3
    assert csv_path.read_text().startswith("x1,x2,inside")


def test_constants_and_overrides(capsys):
    code, out, _ = run(["constants", "--gamma", "0.5", "--c", "0.5", "--K", "1", "--alpha-h", "1",
                        "--beta-h", "1", "--c-nu", "0.5"], capsys)
    values = {e["name"]: e["value"] for e in json.loads(out)["constants"]}
    assert code == 0 and values["M0"] == 4.0 and values["M"] == 16.0
    code, _, err = run(["constants", "--gamma", "1.5"], capsys)
    assert code == 2 and "error" in err


def test_solve_writes_csv(capsys, tmp_path):
    p = tmp_path / "u.csv"
    code, out, _ = run(["solve", "--grid", "17x17", "--case", "x2sq", "--csv", str(p)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["max_error"] <= 1e-9
    assert len(p.read_text().splitlines()) == 17 * 17 + 1


def test_verify_and_out_file(capsys, tmp_path):
    p = tmp_path / "v.json"
    code, out, _ = run(["verify", "--grid", "33x33", "--seed", "2", "--out", str(p)], capsys)
    assert out == ""
    doc = json.loads(p.read_text())
    assert code in (0, 1) and doc["seed"] == 2 and len(doc["checks"]) == 3


def test_suite_output_is_byte_identical(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("checks = geometry, engine\nstructure_pairs = 4\n")
    outs = []
    for _ in range(2):
        code, out, _ = run(["suite", "--config", str(cfg), "--seed", "3"], capsys)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["config"]["seed"] == 3


@pytest.mark.parametrize("text", ["checks = geometry\nbogus line\n", "unknown_key = 1\n",
                                  "n1 = lots\n"])
def test_bad_config_exits_with_2(tmp_path, capsys, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = run(["suite", "--config", str(cfg)], capsys)
    assert code == 2 and "bad.cfg" in err


def test_bad_window_and_grid(capsys):
    assert run(["solve", "--window", "1,0,0,1"], capsys)[0] == 2
    assert run(["solve", "--grid", "65by65"], capsys)[0] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "grushin_harnack.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "suite" in res.stdout
