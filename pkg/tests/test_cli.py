"""Configuration loading, artifact layout, determinism, and exit codes."""

import json
import subprocess
import sys

import pytest

from condlab import FitQualityError, TruncationError, __version__
from condlab.cli import (
    ConfigError,
    KINDS,
    _csv_cell,
    _grid,
    load_config,
    main,
    run_experiment,
)

MIXING_TOML = """\
kind = "scp-mixing"

[grids]
betas = [0.5, 1.0]
rhos = [0.1]
hhats = [0.0, 0.05]
"""


def _write(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_grid_forms():
    assert _grid([1.0, 2.0, 4.0]) == [1.0, 2.0, 4.0]
    assert _grid({"start": 1e4, "factor": 10.0, "count": 3}) == \
        pytest.approx([1e4, 1e5, 1e6])
    # bare casts raise ValueError; _Section.take rewraps them as ConfigError
    with pytest.raises(ValueError):
        _grid("everything")
    with pytest.raises(ValueError):
        _grid({"start": 1e4, "count": 3})


def test_load_config_rejects_unknown_kind(tmp_path):
    path = _write(tmp_path, 'kind = "bose-everything"\n')
    with pytest.raises(ConfigError, match="unknown experiment kind"):
        load_config(path)


def test_load_config_rejects_unknown_keys(tmp_path):
    path = _write(tmp_path, 'kind = "scp-mixing"\nextra = 1\n')
    with pytest.raises(ConfigError, match="extra"):
        load_config(path)


def test_load_config_rejects_non_table_sections(tmp_path):
    path = _write(tmp_path, 'kind = "scp-mixing"\nparams = 3\n')
    with pytest.raises(ConfigError, match="must be a table"):
        load_config(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="no such config"):
        load_config(tmp_path / "nope.toml")


def test_load_config_bad_toml(tmp_path):
    path = _write(tmp_path, 'kind = "scp-mixing\n')
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(path)


def test_unknown_param_key_is_rejected(tmp_path):
    path = _write(tmp_path, MIXING_TOML + "\n[params]\nbogus = 1\n")
    config = load_config(path)
    with pytest.raises(ConfigError, match="bogus"):
        run_experiment(config)


def test_run_experiment_mixing(tmp_path):
    config = load_config(_write(tmp_path, MIXING_TOML))
    rows, summary, resolved = run_experiment(config)
    assert len(rows) == 2 * 1 * 2
    assert summary["ok"] is True
    assert summary["zero_field_weight_exact"] is True
    # defaults are recorded in the resolved config
    assert resolved["params"]["alpha"] == 1.0
    assert resolved["grids"]["betas"] == [0.5, 1.0]


def test_run_writes_artifacts(tmp_path):
    cfg = _write(tmp_path, MIXING_TOML)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    run_dir = out / "exp"
    data = (run_dir / "data.csv").read_text()
    report = json.loads((run_dir / "report.json").read_text())
    assert data.splitlines()[0] == "beta,rho,hhat,xi,a,residual"
    assert report["version"] == __version__
    assert report["config"]["kind"] == "scp-mixing"
    assert report["summary"]["ok"] is True
    # nothing time-dependent may leak into the artifacts
    assert "time" not in data.lower()
    assert not any("time" in k.lower() or "date" in k.lower() for k in report)


def test_rerun_is_bit_identical(tmp_path):
    cfg = _write(tmp_path, MIXING_TOML)
    for sub in ("a", "b"):
        assert main(["run", str(cfg), "--out", str(tmp_path / sub)]) == 0
    for name in ("data.csv", "report.json"):
        a = (tmp_path / "a" / "exp" / name).read_bytes()
        b = (tmp_path / "b" / "exp" / name).read_bytes()
        assert a == b


def test_output_name_overrides_stem(tmp_path):
    cfg = _write(tmp_path, MIXING_TOML + '\n[output]\nname = "mix"\n')
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    assert (out / "mix" / "report.json").is_file()


def test_csv_floats_round_trip():
    vals = [0.1, 1 / 3, 1e-300, 123456.789, 2.0]
    for v in vals:
        assert float(_csv_cell(v)) == v
    assert _csv_cell(2.0) == "2.0"
    assert _csv_cell(True) == "True"
    assert _csv_cell(7) == "7"


def test_exit_codes_for_config_errors(tmp_path, capsys):
    bad_kind = _write(tmp_path, 'kind = "nope"\n', "bad1.toml")
    assert main(["run", str(bad_kind)]) == 2
    both_rho = _write(tmp_path, """\
kind = "bose-mu"

[params]
rho = 0.1
rho_factor = 2.0

[grids]
volumes = [1e4, 3e4, 1e5]
""", "bad2.toml")
    assert main(["run", str(both_rho)]) == 2
    bad_grid = _write(tmp_path, """\
kind = "bose-critical"

[grids]
volumes = "all"
""", "bad3.toml")
    assert main(["run", str(bad_grid)]) == 2
    err = capsys.readouterr().err
    assert "volumes" in err  # the offending key is named


def test_exit_codes_for_numerical_failures(tmp_path, capsys, monkeypatch):
    def boom_trunc(p, g):
        raise TruncationError("cap too small")

    def boom_fit(p, g):
        raise FitQualityError("fit rejected")

    monkeypatch.setitem(KINDS, "boom-trunc", boom_trunc)
    monkeypatch.setitem(KINDS, "boom-fit", boom_fit)
    assert main(["run", str(_write(tmp_path, 'kind = "boom-trunc"\n'))]) == 3
    assert main(["run", str(_write(tmp_path, 'kind = "boom-fit"\n'))]) == 4
    capsys.readouterr()


def test_report_aggregates_and_flags_failures(tmp_path, capsys):
    ok_cfg = _write(tmp_path, MIXING_TOML, "good.toml")
    # with only two volumes there is no ladder limit to gate on, and the raw
    # largest-box value sits 18% below the bulk density, so the run fails
    failing = _write(tmp_path, """\
kind = "bose-critical"

[grids]
volumes = [1e3, 1e4]
""", "shallow.toml")
    out = tmp_path / "out"
    assert main(["run", str(ok_cfg), "--out", str(out)]) == 0
    assert main(["run", str(failing), "--out", str(out)]) == 0
    capsys.readouterr()

    code = main(["report", str(out / "good"), str(out / "shallow"),
                 "--out", str(out)])
    captured = capsys.readouterr().out
    assert code == 1
    assert "failures: shallow" in captured
    lines = (out / "consolidated.csv").read_text().splitlines()
    assert lines[0] == "run,kind,ok,headline"
    table = {ln.split(",")[0]: ln.split(",")[2] for ln in lines[1:]}
    assert table["good"] == "True"
    assert table["shallow"] == "False"


def test_report_handles_missing_run(tmp_path, capsys):
    code = main(["report", str(tmp_path / "ghost"), "--out", str(tmp_path)])
    captured = capsys.readouterr().out
    assert code == 1
    assert "missing report.json" in captured


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 10
    assert "[FAIL]" not in out


def test_threads_env_is_recorded(tmp_path, monkeypatch):
    monkeypatch.setenv("CONDLAB_THREADS", "3")
    cfg = _write(tmp_path, MIXING_TOML)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    report = json.loads((out / "exp" / "report.json").read_text())
    assert report["threads"] == 3
    import os
    assert os.environ["OMP_NUM_THREADS"] == "3"


def test_fit_selftest_kind(tmp_path):
    config = load_config(_write(tmp_path, 'kind = "fit-selftest"\n'))
    rows, summary, _ = run_experiment(config)
    assert summary["ok"] is True
    assert len(rows) == summary["cases"]
    assert all(r["ok"] for r in rows)


def test_console_script_exists():
    proc = subprocess.run(["condlab", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run" in proc.stdout and "selftest" in proc.stdout


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "condlab.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
