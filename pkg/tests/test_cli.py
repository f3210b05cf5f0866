import json
import math

import numpy as np
import pytest

from nhcavity import cli
from nhcavity.cli import main, parse_config_text, parse_number, parse_run, run
from nhcavity.errors import ConflictingFlags, MalformedConfig, SolverError, UnknownPreset
from nhcavity.model import default_truncation, validate_config
from nhcavity.presets import PRESETS, variant


def _read(path):
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[-1] == ""
    meta = json.loads(lines[0][2:])
    assert lines[0].startswith("# ")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:-1]]
    return meta, header, rows


# parsing -------------------------------------------------------------------

@pytest.mark.parametrize("text,value", [
    ("1e-3", 1e-3), ("pi/2", math.pi / 2), ("-2*pi", -2 * math.pi), ("2**3", 8.0), (" 7 ", 7.0),
])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["__import__('os')", "pi pi", "1/0", "abc", ""])
def test_parse_number_rejects_non_numbers(text):
    with pytest.raises(ValueError):
        parse_number(text)


def test_preset_defaults():
    spec = parse_run(["--preset", "fig3b", "--out", "run.csv"])
    assert spec.sweep == "time"
    assert (spec.start, spec.stop, spec.count) == (0.0, 20 * math.pi, 4000)
    assert spec.jobs == 1 and not spec.oracle
    labels = [label for label, _ in spec.variants]
    assert labels == ["gamma=0", "gamma=0.0001", "gamma=0.001"]
    cfg = spec.variants[2][1]
    assert cfg.gamma_field == (1e-3, 1e-3) and cfg.varpi == 0.0
    assert cfg.theta == math.pi / 4 and cfg.phi == math.pi / 2
    assert cfg.n_max == default_truncation(10.0, 1)


def test_phi_preset_defaults():
    spec = parse_run(["--preset", "fig2", "--out", "x.csv"])
    assert spec.sweep == "phi"
    assert (spec.start, spec.stop, spec.count) == (0.0, 4 * math.pi, 1600)
    assert spec.t_values == (math.pi / 3, math.pi / 4, math.pi / 2)


def test_every_preset_validates():
    for name, preset in PRESETS.items():
        for _, cfg in preset.variants:
            validate_config(cfg)


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        parse_run(["--preset", "nope", "--out", "x.csv"])


def test_config_overrides_preset():
    spec = parse_run(["--preset", "fig3b", "--config", "c.cfg", "--out", "x.csv"],
                     config_text="n_max = 50\n")
    for (_, cfg), (_, ref) in zip(spec.variants, PRESETS["fig3b"].variants):
        assert cfg.n_max == 50
        assert cfg.gamma_field == ref.gamma_field and cfg.theta == ref.theta


def test_flags_override_config():
    text = "preset = fig3c\npoints = 100\nt_stop = 2*pi\njobs = 2\n"
    spec = parse_run(["--config", "c.cfg", "--points", "30", "--out", "x.csv"], config_text=text)
    assert spec.count == 30
    assert spec.stop == pytest.approx(2 * math.pi)
    assert spec.jobs == 2
    assert spec.source == "preset:fig3c"


def test_config_without_preset():
    text = """
    # a detuned single run
    omega_atom = 0.3, 0.3, 0.1, 0.1
    omega_field = 0.1
    gamma_field = 1e-3, 2e-3
    varpi = pi
    theta = pi/4   # superposition
    nbar = 4
    """
    spec = parse_run(["--config", "c.cfg", "--out", "x.csv"], config_text=text)
    ((label, cfg),) = spec.variants
    assert label == "config"
    assert cfg.omega_atom == ((0.3, 0.3), (0.1, 0.1))
    assert cfg.gamma_field == (1e-3, 2e-3)
    assert cfg.nbar == (4.0, 4.0) and cfg.varpi == math.pi


def test_config_file_is_read_from_disk(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("preset = fig5a\nn_max = 45\n", encoding="utf-8")
    spec = parse_run(["--config", str(path), "--out", "x.csv"])
    assert spec.variants[0][1].n_max == 45


@pytest.mark.parametrize("text,line,field", [
    ("theta = 1\nbogus = 2\n", 2, "bogus"),
    ("theta = 1\n\nvarpi = fast\n", 3, "varpi"),
    ("theta = 1\ntheta = 2\n", 2, "theta"),
    ("kappa = 1.5\n", 1, "kappa"),
    ("nbar = 1, 2, 3\n", 1, "nbar"),
    ("just words\n", 1, None),
])
def test_malformed_config_reports_line_and_field(text, line, field):
    with pytest.raises(MalformedConfig) as info:
        parse_config_text(text)
    assert info.value.line == line
    assert info.value.field == field
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize("argv,text", [
    (["--out", "x.csv"], None),
    (["--preset", "fig3b", "--config", "c", "--out", "x.csv"], "preset = fig3c\n"),
    (["--preset", "fig3b", "--counter-rotating", "--out", "x.csv"], None),
    (["--preset", "fig2", "--oracle", "--out", "x.csv"], None),
])
def test_conflicting_flags(argv, text):
    with pytest.raises(ConflictingFlags):
        parse_run(argv, config_text=text)


# running -------------------------------------------------------------------

def _small(tmp_path, *extra, name="out.csv"):
    out = tmp_path / name
    argv = ["--preset", "fig3c", "--points", "40", "--t-stop", "4*pi", "--out", str(out), *extra]
    return out, argv


def test_time_csv_layout(tmp_path):
    out, argv = _small(tmp_path)
    assert main(argv) == 0
    meta, header, rows = _read(out)
    assert header == ["run", "t", "concurrence", "pancharatnam", "norm2", "p11", "p12", "p21", "p22"]
    assert len(rows) == 3 * 40
    assert {r[0] for r in rows} == {"gamma=0", "gamma=0.0001", "gamma=0.001"}
    values = np.array([[float(x) for x in r[1:]] for r in rows])
    assert np.all(np.isfinite(values))
    assert values[0, 0] == 0.0 and values[39, 0] == pytest.approx(4 * math.pi)
    # 17 significant digits round-trip exactly
    assert all(float(x) == float(format(float(x), ".17g")) for x in rows[5][1:])
    assert meta["coherent_phase"].startswith("real")
    assert "normalization" in meta and meta["sweep"] == "time"
    assert meta["runs"]["gamma=0.001"]["config"]["gamma_field"] == [1e-3, 1e-3]
    assert meta["runs"]["gamma=0"]["initial_tail"] < 1e-3


def test_phi_csv_layout(tmp_path):
    out = tmp_path / "phi.csv"
    assert main(["--preset", "fig2", "--points", "25", "--out", str(out)]) == 0
    meta, header, rows = _read(out)
    assert header == ["run", "t", "phi", "pancharatnam_phase"]
    assert len(rows) == 3 * 25
    assert [float(r[1]) for r in rows[::25]] == [math.pi / 3, math.pi / 4, math.pi / 2]
    assert meta["t_values"] == [math.pi / 3, math.pi / 4, math.pi / 2]


def test_fig4_metadata_records_rate_set(tmp_path):
    out = tmp_path / "f4.csv"
    assert main(["--preset", "fig4a", "--points", "3", "--t-stop", "1", "--out", str(out)]) == 0
    meta, _, _ = _read(out)
    assert meta["atomic_decay_set"] == [0.0, 1e-4, 1e-3]


def test_oracle_columns(tmp_path):
    out = tmp_path / "o.csv"
    argv = ["--preset", "fig5a", "--points", "5", "--t-stop", "2", "--oracle", "--out", str(out)]
    assert main(argv) == 0
    meta, header, rows = _read(out)
    assert header[-4:] == list(cli.ORACLE_COLUMNS)
    gap = np.array([float(r[-1]) for r in rows])
    assert gap.max() < 1e-8
    assert meta["runs"]["gamma=0.001"]["oracle_max_gap"] < 1e-8


def test_counter_rotating_discrepancy_recorded(tmp_path):
    out = tmp_path / "cr.csv"
    argv = ["--preset", "fig5a", "--points", "3", "--t-stop", "1", "--oracle",
            "--counter-rotating", "--out", str(out)]
    assert main(argv) == 0
    meta, _, _ = _read(out)
    assert meta["runs"]["gamma=0.001"]["rwa_discrepancy"] > 1e-6


def test_repeat_and_parallel_runs_are_byte_identical(tmp_path):
    outputs = []
    for i, jobs in enumerate(("1", "1", "4")):
        out, argv = _small(tmp_path, "--points", "150", "--jobs", jobs, name=f"r{i}.csv")
        assert main(argv) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_exit_code_for_config_errors(tmp_path, capsys):
    assert main(["--preset", "nope", "--out", str(tmp_path / "x.csv")]) == 2
    assert "nope" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_exit_code_for_truncation_too_small(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("preset = fig3b\nn_max = 20\n", encoding="utf-8")
    assert main(["--config", str(cfgfile), "--points", "3", "--out", str(tmp_path / "x.csv")]) == 2


def test_exit_code_for_solver_errors(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise SolverError("block 17 (n1=0, n2=17): non-finite roots")

    monkeypatch.setattr(cli, "time_series", boom)
    out, argv = _small(tmp_path)
    assert main(argv) == 3
    assert "block 17" in capsys.readouterr().err
    assert not out.exists()


def test_exit_code_for_io_errors(tmp_path):
    out = tmp_path / "missing" / "x.csv"
    assert main(["--preset", "fig5b", "--points", "3", "--t-stop", "1", "--out", str(out)]) == 4


def test_failed_write_leaves_no_partial_file(tmp_path, monkeypatch):
    out, argv = _small(tmp_path)
    monkeypatch.setattr(cli, "_fmt", lambda x: 1 / 0)
    with pytest.raises(ZeroDivisionError):
        run(parse_run(argv))
    assert list(tmp_path.iterdir()) == []


def test_variant_helper():
    assert variant("fig5b").gamma_atom == ((1e-4, 1e-4), (1e-4, 1e-4))
