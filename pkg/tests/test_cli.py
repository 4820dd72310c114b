import json
import subprocess
import sys

import numpy as np
import pytest

from logiwave import cli
from logiwave.synthetic import write_csv
from logiwave.wavelets import NonConvergenceError


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def truth(data_dir):
    return json.loads((data_dir / "synthetic_three_waves.json").read_text())


def decompose_args(data_dir, out, name="synthetic_three_waves.csv", *extra):
    return ["decompose", "--input", data_dir / name, "--location", "Synthetic", "--window", "1",
            "--out", out, *extra]


def test_wavelet_csv(tmp_path):
    out = tmp_path / "w.csv"
    assert run("wavelet", "--order", 2, "--range", "-7:7", "--samples", 1001, "--out", out) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "t,psi" and len(rows) == 1002
    assert "0.0,0.0" in rows


def test_wavelet_order_3_norm(tmp_path):
    out = tmp_path / "w3.csv"
    assert run("wavelet", "--order", 3, "--range=-12:12", "--samples", 4001, "--out", out) == 0
    t, psi = np.loadtxt(out, delimiter=",", skiprows=1, unpack=True)
    assert (t[1] - t[0]) * np.sum(psi**2) == pytest.approx(1.0, abs=1e-6)


def test_wavelet_rejects_order_1(tmp_path, capsys):
    assert run("wavelet", "--order", 1, "--out", tmp_path / "w.csv") == 2
    assert "order must be ≥ 2" in capsys.readouterr().err


def test_wavelet_bad_range_and_io(tmp_path):
    assert run("wavelet", "--range", "7:-7", "--out", tmp_path / "w.csv") == 2
    assert run("wavelet", "--out", tmp_path / "missing_dir" / "w.csv") == 1


def test_scalogram(tmp_path, data_dir, capsys):
    prefix = tmp_path / "s"
    assert run("scalogram", "--input", data_dir / "synthetic_three_waves.csv", "--location", "Synthetic",
               "--window", 1, "--scales", "1:40:0.1", "--out", prefix) == 0
    out = capsys.readouterr().out
    assert "90" in out.splitlines()[1]
    meta = json.loads((tmp_path / "s.json").read_text())
    assert meta["grid"]["scales"] == "1:40:0.1" and meta["config"]["scales"] == "1:40:0.1"
    assert len(meta["input_sha256"]) == 64
    peaks = json.loads((tmp_path / "s_peaks.json").read_text())["peaks"]
    assert {round(p["b"]) for p in peaks} >= {50, 90}
    assert (tmp_path / "s.csv").read_text().startswith("a,b,coefficient\n")


def test_scalogram_format_json_only(tmp_path, data_dir):
    assert run("scalogram", "--input", data_dir / "synthetic_three_waves.csv", "--location", "Synthetic",
               "--scales", "2:8:0.5", "--format", "json", "--out", tmp_path / "s") == 0
    assert (tmp_path / "s.json").exists() and not (tmp_path / "s.csv").exists()


def test_scalogram_constant_input(tmp_path, capsys):
    src = tmp_path / "flat.csv"
    write_csv(src, np.full(200, 42.0), location="Italy")
    assert run("scalogram", "--input", src, "--out", tmp_path / "s") == 0
    assert "no peaks found" in capsys.readouterr().out


def test_decompose_synthetic_fixtures(tmp_path, data_dir, truth, capsys):
    for name in ("synthetic_three_waves.csv", "synthetic_three_waves_noisy.csv"):
        prefix = tmp_path / name.split(".")[0]
        assert run(*decompose_args(data_dir, prefix, name)) == 0
        doc = json.loads(prefix.with_suffix(".json").read_text())
        assert len(doc["waves"]) == 3
        for t in truth["waves"]:
            w = min(doc["waves"], key=lambda v: abs(v["b"] - t["b"]))
            assert abs(w["a"] - t["a"]) <= 0.3 and abs(w["b"] - t["b"]) <= 1
            assert abs(w["x_max"] / t["x_max"] - 1) <= 0.05
        assert doc["config"]["max_waves"] == 6 and doc["decomposition"]["grid"] == "1:40:0.1"
        assert len(doc["input_sha256"]) == 64
        model = prefix.parent / (prefix.name + "_model.csv")
        resid = prefix.parent / (prefix.name + "_residual.csv")
        assert model.read_text().splitlines()[0] == "day,date,smoothed,model"
        assert len(resid.read_text().splitlines()) == 201
    assert "RMSE" in capsys.readouterr().out


def test_decompose_max_waves_one(tmp_path, data_dir):
    assert run(*decompose_args(data_dir, tmp_path / "d", "synthetic_three_waves.csv", "--max-waves", 1)) == 0
    assert len(json.loads((tmp_path / "d.json").read_text())["waves"]) == 1


def test_byte_identical_outputs(tmp_path, data_dir):
    for k in (1, 2):
        assert run(*decompose_args(data_dir, tmp_path / f"r{k}", "synthetic_three_waves_noisy.csv")) == 0
    for suffix in (".json", "_model.csv", "_residual.csv"):
        assert (tmp_path / f"r1{suffix}").read_bytes().replace(b"r1", b"") == \
            (tmp_path / f"r2{suffix}").read_bytes().replace(b"r2", b"")


def test_config_file_and_override(tmp_path, data_dir):
    conf = tmp_path / "run.conf"
    conf.write_text(f"# decomposition\ninput = {data_dir / 'synthetic_three_waves.csv'}\n"
                    "location = Synthetic\nwindow = 1\nmax_waves = 1\nrefine = false\n")
    assert run("--config", conf, "decompose", "--out", tmp_path / "c") == 0
    doc = json.loads((tmp_path / "c.json").read_text())
    assert len(doc["waves"]) == 1 and doc["config"]["refine"] is False
    assert run("--config", conf, "decompose", "--max-waves", 2, "--out", tmp_path / "c2") == 0
    assert len(json.loads((tmp_path / "c2.json").read_text())["waves"]) == 2
    bad = tmp_path / "bad.conf"
    bad.write_text("just words\n")
    assert run("--config", bad, "decompose", "--out", tmp_path / "x") == 2
    assert run("--config", tmp_path / "absent.conf", "selfcheck") == 1


def test_data_dir_environment(tmp_path, data_dir, monkeypatch):
    monkeypatch.setenv(cli.DATA_DIR_ENV, str(data_dir))
    monkeypatch.chdir(tmp_path)
    assert run("scalogram", "--input", "synthetic_three_waves.csv", "--location", "Synthetic",
               "--scales", "3:6:1", "--out", tmp_path / "s") == 0


def test_input_error_codes(tmp_path, data_dir):
    src = data_dir / "synthetic_three_waves.csv"
    common = ["--out", tmp_path / "x"]
    assert run("scalogram", "--input", tmp_path / "none.csv", *common) == 1
    assert run("scalogram", "--input", src, "--value-column", "cases", *common) == 2
    assert run("scalogram", "--input", src, "--start", "2020-13-01", *common) == 2
    assert run("scalogram", "--input", src, "--start", "2020-06-01", "--end", "2020-05-01", *common) == 2
    assert run("scalogram", "--input", src, "--location", "Atlantis", *common) == 5
    bad = tmp_path / "bad.csv"
    bad.write_text("location,date,total_deaths\nItaly,2020-03-01,1\nItaly,2020-03-02,n/a\n")
    assert run("scalogram", "--input", bad, *common) == 4
    assert run("scalogram", "--input", src, "--scales", "5:1:0.1", *common) == 2
    assert run("decompose", "--input", src, "--max-waves", 0, *common) == 2


def test_nonconvergence_exit_code(tmp_path, data_dir, monkeypatch):
    def boom(*a, **k):
        raise NonConvergenceError("did not converge", 0.0, 1.0)

    monkeypatch.setattr(cli, "extract_waves", boom)
    assert run(*decompose_args(data_dir, tmp_path / "d")) == 3


def test_selfcheck(capsys):
    assert run("selfcheck") == 0
    out = capsys.readouterr().out
    assert "6/6 pass" in out
    assert run("selfcheck", "--tolerance", 1e-14, "--gv-tolerance", 1e-14) == 1
    assert "FAIL" in capsys.readouterr().out
    assert run("selfcheck", "--max-order", 2) == 0
    rows = [r for r in capsys.readouterr().out.splitlines()[1:] if r.strip()[:1].isdigit() and "/" not in r]
    assert len(rows) == 2


def test_entry_point_module():
    proc = subprocess.run([sys.executable, "-m", "logiwave.cli", "selfcheck", "--max-order", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "1/1 pass" in proc.stdout
