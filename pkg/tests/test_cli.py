import csv
import io
import json

import numpy as np
import pytest
import yaml

from lindsector.cli import EXIT_OK, EXIT_PARAM, EXIT_TRUNC, EXIT_VERIFY, main
from lindsector.dynamics import CorrelationTrace
from lindsector.models import build_btc_model
from lindsector.spectra import steady_state


def _config(tmp_path, data):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(data))
    return str(path)


def _rows(text):
    return list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))


def test_spectrum_defaults_steady_state_first(tmp_path):
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--out", str(out), "--kcap", "2", "--m", "8"]) == EXIT_OK
    text = out.read_text()
    rows = _rows(text)
    assert len(rows) == 8
    first = rows[0]
    assert int(first["k"]) == 0 and abs(float(first["re"])) < 1e-12 and abs(float(first["im"])) < 1e-12
    assert "\r" not in text


def test_spectrum_json_to_stdout(capsys):
    assert main(["spectrum", "--format", "json", "--kcap", "1", "--m", "3", "--nmax", "150"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert len(data["entries"]) == 3
    assert data["params"]["n_max"] == 150


def test_negative_rate_exit_1_without_output(tmp_path, capsys):
    out = tmp_path / "never.csv"
    cfg = _config(tmp_path, {"model": {"xi": -0.5}})
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == EXIT_PARAM
    assert not out.exists()
    assert "xi" in capsys.readouterr().err


def test_forced_small_cutoff_exit_2(tmp_path, capsys):
    cfg = _config(tmp_path, {"model": {"xi": 1.75, "eta": 0.1, "N": 40}})
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--config", cfg, "--nmax", "5", "--out", str(out)]) == EXIT_TRUNC
    err = capsys.readouterr().err
    assert "tail_weight" in err
    # the tail check must trip independently of the CLI
    m = build_btc_model(1.0, 1.75, 0.1, omega_c=1.0, N=40, n_max=5)
    assert steady_state(m, check_tail=False).tail_weight > 1e-6
    assert not out.exists()


def test_fig1_sweep_84_rows(tmp_path):
    out = tmp_path / "fig1.csv"
    assert main(["sweep", "--preset", "fig1", "--workers", "4", "--out", str(out)]) == EXIT_OK
    rows = _rows(out.read_text())
    assert len(rows) == 84
    assert all(r["ok"] == "True" for r in rows)
    # floats are written at round-trip precision
    assert all(repr(float(r["n_per_N"])) == r["n_per_N"] for r in rows)


def test_fig4_sweep_rise_near_threshold(tmp_path):
    cfg = _config(tmp_path, {"sweep": {"xi": [0.75, 1.0, 1.1, 1.25], "N": [10, 40]}})
    out = tmp_path / "fig4.csv"
    assert main(["sweep", "--preset", "fig4", "--config", cfg, "--workers", "4", "--out", str(out)]) == EXIT_OK
    n = {(float(r["xi"]), int(r["N"])): float(r["n_per_N"]) for r in _rows(out.read_text())}
    mean_field = (1.25**0.5 - 1.0) / 0.005**0.5
    assert n[0.75, 40] < 0.1
    assert n[1.25, 40] == pytest.approx(mean_field, rel=0.05)
    # the rise across threshold sharpens with N
    assert n[1.1, 40] - n[1.0, 40] > n[1.1, 10] - n[1.0, 10]


def test_empty_N_list_exit_1(tmp_path):
    cfg = _config(tmp_path, {"sweep": {"N": []}})
    assert main(["sweep", "--config", cfg]) == EXIT_PARAM


def test_correlate_fig3_frequencies(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["correlate", "--preset", "fig3", "--out", str(out)]) == EXIT_OK
    c1 = CorrelationTrace.from_csv((tmp_path / "c_c1.csv").read_text())
    c2 = CorrelationTrace.from_csv((tmp_path / "c_c2.csv").read_text())
    assert c1.kind == "C1" and c2.kind == "C2"
    assert c1.tau.size == 2001 and c1.tau[-1] == 50.0
    err = capsys.readouterr().err
    assert "C1: dominant frequency" in err and "C2: dominant frequency" in err


def test_correlate_single_point_grid(tmp_path, capsys):
    cfg = _config(tmp_path, {"correlate": {"n_tau": 1, "kinds": ["C1"]}, "model": {"N": 5}})
    out = tmp_path / "c1.csv"
    assert main(["correlate", "--config", cfg, "--out", str(out)]) == EXIT_PARAM
    assert out.exists()
    assert "frequency undefined" in capsys.readouterr().err


def test_steady_and_gap(tmp_path):
    cfg = _config(tmp_path, {"model": {"xi": 1.25, "eta": 1.0, "N": 10, "frame": "rotating"}})
    out = tmp_path / "ss.json"
    assert main(["steady", "--config", cfg, "--format", "json", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["n_over_N"] == pytest.approx(0.2657664842533035, rel=1e-8)
    assert sum(data["occupations"]) == pytest.approx(1.0)
    out = tmp_path / "gap.csv"
    assert main(["gap", "--config", cfg, "--kcap", "2", "--out", str(out)]) == EXIT_OK
    row = _rows(out.read_text())[0]
    assert float(row["gap_re"]) < 0


def test_fieldtrace(tmp_path):
    cfg = _config(tmp_path, {"model": {"xi": 0.0, "eta": 0.0, "omega_c": 1.0},
                             "correlate": {"tau_max": 5.0, "n_tau": 51}})
    out = tmp_path / "field.csv"
    assert main(["fieldtrace", "--config", cfg, "--out", str(out)]) == EXIT_OK
    tr = CorrelationTrace.from_csv(out.read_text())
    np.testing.assert_allclose(tr.values, tr.values[0] * np.exp(-(1j + 0.5) * tr.tau), atol=1e-12)


def test_verify_defaults_pass(capsys):
    assert main(["verify"]) == EXIT_OK
    table = capsys.readouterr().out
    assert table.count("PASS") == 6


def test_verify_scully_lamb_defaults_pass(tmp_path, capsys):
    cfg = _config(tmp_path, {"model": {"family": "scully_lamb"}})
    assert main(["verify", "--config", cfg]) == EXIT_OK
    assert "FAIL" not in capsys.readouterr().out


def test_verify_detects_corrupted_block(capsys):
    assert main(["verify", "--inject-fault", "1e-6"]) == EXIT_VERIFY
    err = capsys.readouterr().err
    assert "block_equivalence" in err


def test_unknown_preset_exit_1(capsys):
    assert main(["steady", "--preset", "fig9"]) == EXIT_PARAM
