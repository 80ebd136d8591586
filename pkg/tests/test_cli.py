import json

import pandas as pd
import pytest

from app.cli import build_parser, main


def test_exponent_command_prints_json(capsys):
    assert main(["exponent", "--alpha", "0", "--p", "4"]) == 0
    document = json.loads(capsys.readouterr().out)
    assert document["experiment"] == "exponent"
    assert document["result"]["p_star"] == pytest.approx(3.0)
    assert document["result"]["regime"]["regime"] == "global_regime"


def test_profile_command_writes_csv(tmp_path, capsys):
    assert main(["profile", "--alpha", "1", "--n", "21", "--out", str(tmp_path)]) == 0
    document = json.loads(capsys.readouterr().out)
    assert (tmp_path / "profile_alpha1.csv").exists()
    assert document["result"]["V_at_0"] == pytest.approx(1.0)


def test_profile_csv_goes_to_stdout(capsys):
    assert main(["profile", "--alpha", "0.5", "--xmax", "5", "--n", "11", "--emit", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "x,psi,psi_prime,V,H"
    assert len(lines) == 12


def test_documented_flag_spellings():
    parser = build_parser()
    assert parser.parse_args(["decay", "--alpha", "0", "--tend", "50"]).t_end == 50.0
    run = parser.parse_args(["run", "--alpha", "0", "--p", "2", "--amp", "0.1",
                             "--localized-source", "4", "--plot", "out.svg"])
    assert (run.amplitude, run.localized, run.plot) == (0.1, 4.0, "out.svg")


def test_run_command_writes_plot_and_field_dump(tmp_path, capsys):
    plot = tmp_path / "decay.svg"
    argv = ["run", "--alpha", "0", "--p", "4", "--amp", "0.01", "--set", "h=0.5", "--set", "t_end=20",
            "--plot", str(plot), "--out", str(tmp_path / "out")]
    assert main(argv) == 0
    document = json.loads(capsys.readouterr().out)
    assert plot.read_text().startswith("<svg")
    assert len(document["result"]["artifacts"]) == 4
    field = pd.read_csv(tmp_path / "out" / "run_alpha0_m0_p4_a0.01_field.csv")
    assert list(field.columns) == ["x", "u", "u_over_psi"]
    assert (field["u"] >= 0).all()


def test_ineq_command_writes_member_csv_and_summary(tmp_path, capsys):
    assert main(["ineq", "--kind", "nash", "--alpha", "0", "--family", "gaussians", "--out", str(tmp_path)]) == 0
    document = json.loads(capsys.readouterr().out)
    members = pd.read_csv(tmp_path / "ineq_nash_alpha0_gaussians.csv")
    summary = json.loads((tmp_path / "ineq_nash_alpha0_gaussians.json").read_text())
    assert len(members) == document["result"]["members"]
    assert summary["sup_ratio"] == document["result"]["sup_ratio"]
    assert {"label", "family", "width", "nash"} <= set(members.columns)


def test_rejected_input_exits_with_two(capsys):
    assert main(["run", "--alpha", "0", "--p", "1", "--amp", "1"]) == 2
    assert "error" in capsys.readouterr().err


def test_malformed_override_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["decay", "--alpha", "0", "--set", "h"])
    assert excinfo.value.code == 2


def test_sweep_command(tmp_path, capsys):
    spec = {"alpha": 0.0, "p_grid": [4.0], "amplitude_grid": [0.01],
            "config_overrides": {"h": 0.5, "t_end": 20.0}}
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(spec))
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(path), "--out", str(out)]) == 0
    document = json.loads(capsys.readouterr().out)
    assert not document["result"]["errored"]
    for name in ("phase_diagram.csv", "phase_diagram.json", "phase_diagram.svg"):
        assert (out / name).exists()
