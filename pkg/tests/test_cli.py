import csv
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cctunnel.cli import (PRESETS, ConfigError, RunConfig, build_config, emit_plot_script,
                          emit_results, load_json_config, main, parse_config)
from cctunnel.model import ModelParams
from cctunnel.sweep import SweepPlan, SweepResult, run_sweep

FIG3B_FLAGS = ["--a", "1", "--b", "1", "--d", "5", "--l", "5", "--u", "0.05",
               "--axis", "E", "--span", "1"]


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_no_arguments_lists_required_flags(capsys):
    assert main([]) == 2
    err = capsys.readouterr().err
    for flag in ("--a", "--b", "--d", "--l", "--u", "--axis", "--span"):
        assert flag in err


def test_flags_build_the_fig3b_plan():
    (cfg,) = parse_config(FIG3B_FLAGS + ["--points", "800"])
    plan = cfg.plan()
    assert plan.params == ModelParams(a=1, b=1, d=5, l=5, u=0.05)
    assert (plan.axis, plan.start, plan.span, plan.points) == ("E", 0.0, 1.0, 800)
    assert cfg.max_step == 0.3 and cfg.n_max == 7 and cfg.v0 == 1.0


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# figure 3 parameters\na = 1\nb = 1\nd = 5\nl = 5\n"
                    "u = 0.05   # weak field\naxis = E\nspan = 1\nmax-step = 0.1\n")
    (cfg,) = parse_config(["--config", str(path), "--u", "0.15"])
    assert cfg.u == 0.15
    assert cfg.max_step == 0.1


def test_unknown_key_in_file_exits_2(tmp_path, capsys):
    path = tmp_path / "run.conf"
    path.write_text("a = 1\nwidth = 3\n")
    assert main(["--config", str(path)]) == 2
    assert "width" in capsys.readouterr().err


def test_unknown_flag_exits_2():
    assert main(FIG3B_FLAGS + ["--bogus", "1"]) == 2


@pytest.mark.parametrize("flag,value", [("--d", "-5"), ("--points", "0"), ("--rtol", "abc"),
                                        ("--incident-spin", "sideways"), ("--n-max", "2.5")])
def test_out_of_range_value_names_the_key(flag, value, capsys):
    assert main(FIG3B_FLAGS + [flag, value]) == 2
    assert flag.lstrip("-").replace("-", "_") in capsys.readouterr().err


def test_b_axis_requires_energy(capsys):
    args = [a if a != "E" else "b" for a in FIG3B_FLAGS]
    assert main(args) == 2
    assert "--energy" in capsys.readouterr().err


def test_unknown_preset_exits_2(tmp_path):
    assert main(["--plot-preset", "fig99", "--output", str(tmp_path / "x.csv")]) == 2
    with pytest.raises(ConfigError):
        emit_plot_script([], "fig99", tmp_path / "x.gp")


def test_one_point_sweep_gives_two_line_csv(tmp_path):
    out = tmp_path / "one.csv"
    assert main(FIG3B_FLAGS + ["--points", "1", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == "abscissa,P_t_pp_11,P_t_pm_11,P_t_total,unitarity_defect,suspect"


def test_zero_field_csv_has_zero_spin_flip_columns(tmp_path):
    out = tmp_path / "u0.csv"
    args = [v if v != "0.05" else "0" for v in FIG3B_FLAGS]
    assert main(args + ["--points", "5", "--output", str(out)]) == 0
    header, rows = read_csv(out)
    col = header.index("P_t_pm_11")
    assert all(float(r[col]) == 0.0 for r in rows)


def test_csv_layout_with_two_channels(tmp_path):
    out = tmp_path / "two.csv"
    args = ["--a", "1", "--b", "1", "--d", "7", "--l", "5", "--u", "0.05", "--axis", "E",
            "--span", "1", "--points", "4", "--output", str(out)]
    assert main(args) == 0
    header, rows = read_csv(out)
    assert header == ["abscissa", "P_t_pp_11", "P_t_pm_11", "P_t_pp_12", "P_t_pm_12",
                      "P_t_total", "unitarity_defect", "suspect"]
    # second channel closed at 0.25 and 0.5: blank cells
    assert rows[0][3] == "" and rows[0][4] == ""
    assert rows[-1][3] != ""
    x = [float(r[0]) for r in rows]
    assert all(b > a for a, b in zip(x, x[1:]))
    # 17 significant digits round-trip exactly
    total = float(rows[-1][5])
    assert repr(total) == repr(float(f"{total:.17g}"))


def test_csv_values_match_library_result(tmp_path):
    out = tmp_path / "lib.csv"
    assert main(FIG3B_FLAGS + ["--points", "3", "--output", str(out)]) == 0
    _, rows = read_csv(out)
    result = run_sweep(SweepPlan(ModelParams(a=1, b=1, d=5, l=5, u=0.05), points=3), workers=1)
    assert [float(r[1]) for r in rows] == list(result.transmission(1))
    assert [float(r[3]) for r in rows] == list(result.total())


def test_incident_spin_down_column_names(tmp_path):
    out = tmp_path / "down.csv"
    assert main(FIG3B_FLAGS + ["--points", "1", "--incident-spin", "down",
                               "--output", str(out)]) == 0
    header, _ = read_csv(out)
    assert header[1:3] == ["P_t_mm_11", "P_t_mp_11"]


def test_json_round_trip(tmp_path):
    out = tmp_path / "r.json"
    assert main(FIG3B_FLAGS + ["--points", "2", "--format", "json", "--solver", "both",
                               "--output", str(out)]) == 0
    (original,) = parse_config(FIG3B_FLAGS + ["--points", "2", "--format", "json",
                                              "--solver", "both", "--output", str(out)])
    assert load_json_config(out) == original
    (reparsed,) = parse_config(["--config", str(out)])
    assert reparsed == original
    doc = json.loads(out.read_text())
    assert doc["columns"][-1] == "oracle_deviation"
    assert all(row[-1] < 1e-4 for row in doc["rows"])


def test_convergence_check_reported_in_json(tmp_path):
    out = tmp_path / "c.json"
    assert main(FIG3B_FLAGS + ["--points", "10", "--format", "json", "--convergence-check",
                               "--output", str(out)]) == 0
    assert json.loads(out.read_text())["convergence_deviation"] < 1e-6


def test_unwritable_path_exits_3(tmp_path):
    out = tmp_path / "missing-dir" / "x.csv"
    assert main(FIG3B_FLAGS + ["--points", "1", "--output", str(out)]) == 3


def test_all_points_failing_exits_4(tmp_path):
    out = tmp_path / "fail.csv"
    args = ["--a", "1", "--b", "1", "--d", "7", "--l", "5", "--u", "0.05", "--axis", "E",
            "--span", "0.5", "--points", "3", "--incident-channel", "2", "--output", str(out)]
    assert main(args) == 4
    header, rows = read_csv(out)
    assert len(rows) == 3 and all(r[-1] == "1" for r in rows)


def test_stdout_output(capsys):
    assert main(FIG3B_FLAGS + ["--points", "1"]) == 0
    assert capsys.readouterr().out.startswith("abscissa,")


def test_preset_fig3a_plots_both_spin_columns(tmp_path):
    out = tmp_path / "f3a.csv"
    assert main(["--plot-preset", "fig3a", "--points", "3", "--output", str(out)]) == 0
    script = (tmp_path / "f3a.gp").read_text()
    assert "P_{t,11}^{++}" in script and "P_{t,11}^{+-}" in script
    assert "(E-{/Symbol e}_1)/V_0" in script
    assert "set ylabel 'P_t'" in script


def test_preset_fig7_has_two_panels(tmp_path):
    assert PRESETS["fig7"][0]["b"] == 100 and PRESETS["fig7"][1]["b"] == 200
    configs = parse_config(["--plot-preset", "fig7", "--points", "1",
                            "--output", str(tmp_path / "f7.csv")])
    assert [c.b for c in configs] == [100, 200]
    assert all(c.points == 1 for c in configs)


def test_empty_result_file_gives_warning_comment(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("abscissa,P_t_pp_11,P_t_pm_11,P_t_total,unitarity_defect,suspect\n")
    emit_plot_script([empty], "fig3a", tmp_path / "e.gp")
    assert "# warning: no data in empty.csv" in (tmp_path / "e.gp").read_text()


def test_all_presets_are_valid_configs():
    for name, panels in PRESETS.items():
        for panel in panels:
            cfg = build_config(dict(panel, plot_preset=name))
            cfg.plan()


def test_run_config_dict_round_trip():
    (cfg,) = parse_config(FIG3B_FLAGS)
    assert RunConfig.from_dict(cfg.as_dict()) == cfg
