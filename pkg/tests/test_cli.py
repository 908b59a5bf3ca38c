import json
import subprocess
import sys

import pytest

from ce_precoding.cli import ConfigError, main, parse_config
from ce_precoding.channel import sample_rayleigh, save_channel


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_precode_known_instance(capsys):
    code, out, _ = run(["precode", "--h", "1,1", "--symbols", "1", "--energies", "2"], capsys)
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("objective"))
    assert float(line.split()[1]) < 1e-20


def test_precode_json(capsys):
    code, out, _ = run(["precode", "--h", "1,1j;1,-1j", "--symbols", "0.7071+0.7071j,1", "--json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["m"] == 2 and doc["n"] == 2
    assert len(doc["theta"]) == 2 and len(doc["residuals"]) == 2
    assert doc["objective"] <= doc["initial_objective"]


def test_precode_dimension_mismatch(capsys):
    code, _, err = run(["precode", "--h", "1,1;1,-1", "--symbols", "1"], capsys)
    assert code == 2
    assert "users" in err


def test_precode_bad_energies(capsys):
    code, _, _ = run(["precode", "--h", "1", "--symbols", "1", "--energies", "x"], capsys)
    assert code == 2


def test_precode_channel_file_and_random(tmp_path, capsys):
    path = tmp_path / "h.txt"
    save_channel(sample_rayleigh(2, 8, 1), path)
    code, out, _ = run(["precode", "--channel", str(path), "--symbols", "1,-1", "--json"], capsys)
    assert code == 0 and json.loads(out)["n"] == 8
    code, out, _ = run(["precode", "--random", "2", "8", "--seed", "1", "--symbols", "1,-1", "--json"], capsys)
    assert code == 0 and json.loads(out)["n"] == 8


def test_parse_config_happy_path(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"m": 12, "n_list": [48], "alphabet": "16QAM", "base_seed": 0,
                                "solver": {"sweeps_l": 4}}))
    cfg = parse_config(path)
    assert cfg.m == 12 and cfg.n_list == (48,) and cfg.solver.sweeps_l == 4
    cfg = parse_config(path, ["m=24", "solver.early_stop_rel_tol=0", "alphabet=4QAM"])
    assert cfg.m == 24 and cfg.solver.early_stop_rel_tol == 0 and cfg.alphabet == "4QAM"


def test_parse_config_errors(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"mm": 12}))
    with pytest.raises(ConfigError, match="mm"):
        parse_config(path)
    path.write_text(json.dumps({"m": "twelve"}))
    with pytest.raises(ConfigError, match="'m'"):
        parse_config(path)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        parse_config(path)
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "missing.json")
    with pytest.raises(ConfigError, match="solver.foo"):
        parse_config(None, ["solver.foo=1"])
    with pytest.raises(ConfigError):
        parse_config(None, ["n_list=[4,2]"])
    with pytest.raises(ConfigError):
        parse_config(None, ["variant=clt-check"], variant="mui-vs-n")


def test_experiment_subcommand_writes_csv_and_svg(tmp_path, capsys):
    argv = ["--threads", "1", "mui-vs-n", "--out-dir", str(tmp_path),
            "--set", "m=2", "--set", "n_list=[4,8]", "--set", "n_channels=2",
            "--set", "n_symbol_draws=3", "--set", "solver.sweeps_l=2"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    csv_text = (tmp_path / "mui_vs_n.csv").read_text()
    assert csv_text.startswith("variant,m,n,")
    assert (tmp_path / "mui_vs_n.svg").exists()
    code, _, _ = run(argv, capsys)
    assert (tmp_path / "mui_vs_n.csv").read_text() == csv_text


def test_experiment_config_error_exit_code(tmp_path, capsys):
    code, _, err = run(["clt-check", "--out-dir", str(tmp_path), "--set", "mm=3"], capsys)
    assert code == 2 and "mm" in err


def test_threads_env_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CE_PRECODE_THREADS", "zero")
    code, _, err = run(["mui-vs-n", "--out-dir", str(tmp_path), "--set", "n_list=[4]"], capsys)
    assert code == 2 and "CE_PRECODE_THREADS" in err


def test_plot_subcommand_error_on_empty(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text("")
    code, _, _ = run(["plot", str(path)], capsys)
    assert code == 1
    assert not (tmp_path / "empty.svg").exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ce_precoding", "precode", "--h", "1",
                          "--symbols", "1", "--json"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["objective"] < 1e-20
