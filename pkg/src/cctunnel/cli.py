"""Command-line front end: configuration, sweeps, CSV/JSON output and gnuplot scripts.

Exit codes:

* 0 - every requested output was written
* 2 - usage or configuration error (unknown key, bad value, missing parameter)
* 3 - an output file could not be written
* 4 - the solver failed at every grid point
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .model import DOWN, SPIN_LABELS, UP, Convention, ModelParams
from .odeint import IntegratorConfig
from .sweep import AXES, SOLVERS, SweepPlan, SweepResult, convergence_check, run_sweep

log = logging.getLogger("cctunnel")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SOLVER = 0, 2, 3, 4
FORMATS = ("csv", "json")
REQUIRED = ("a", "b", "d", "l", "u", "axis", "span")
SPINS = {"up": UP, "+": UP, "down": DOWN, "-": DOWN}


class ConfigError(ValueError):
    """A configuration problem; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    a: Optional[float] = None
    b: Optional[float] = None
    d: Optional[float] = None
    l: Optional[float] = None
    u: Optional[float] = None
    v0: float = 1.0
    m: float = 1.0
    hbar: float = 1.0
    n_max: int = 7
    convention: str = Convention.PAPER_CODE.value
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = 0.3
    axis: Optional[str] = None
    start: float = 0.0
    span: Optional[float] = None
    points: int = 800
    energy: Optional[float] = None
    incident_channel: int = 1
    incident_spin: str = "up"
    solver: str = "vra"
    convergence_check: bool = False
    output: Optional[str] = None
    format: str = "csv"
    plot_preset: Optional[str] = None

    def model_params(self) -> ModelParams:
        return ModelParams(a=self.a, b=self.b, d=self.d, l=self.l, u=self.u, V0=self.v0,
                           m=self.m, hbar=self.hbar, n_max=self.n_max,
                           convention=Convention(self.convention))

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rtol=self.rtol, atol=self.atol, max_step=self.max_step)

    def plan(self) -> SweepPlan:
        return SweepPlan(
            params=self.model_params(), axis=self.axis, start=self.start, span=self.span,
            points=self.points, energy=self.energy, incident_channel=self.incident_channel,
            incident_spin=SPINS[self.incident_spin], solver=self.solver,
            convergence_check=self.convergence_check,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return build_config(data)


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


def _finite(v):
    return math.isfinite(v)


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _spin(text):
    low = str(text).strip().lower()
    if low not in SPINS:
        raise ValueError(f"not a spin: {text!r}")
    return "up" if SPINS[low] == UP else "down"


def _choice(options):
    def check(v):
        return v in options
    return check


def _optional_str(v):
    return None if v is None else str(v)


# key -> (parser, validity check, description of the valid range)
_FIELDS = {
    "a": (float, _positive, "> 0"),
    "b": (float, _non_negative, ">= 0"),
    "d": (float, _positive, "> 0"),
    "l": (float, _non_negative, ">= 0"),
    "u": (float, _non_negative, ">= 0"),
    "v0": (float, _positive, "> 0"),
    "m": (float, _positive, "> 0"),
    "hbar": (float, _positive, "> 0"),
    "n_max": (int, _positive, ">= 1"),
    "convention": (str, _choice([c.value for c in Convention]), "paper-code or derived"),
    "rtol": (float, _positive, "> 0"),
    "atol": (float, _positive, "> 0"),
    "max_step": (float, _positive, "> 0"),
    "axis": (str, _choice(AXES), "one of E, b, u"),
    "start": (float, _finite, "finite"),
    "span": (float, _positive, "> 0"),
    "points": (int, _positive, ">= 1"),
    "energy": (float, _positive, "> 0"),
    "incident_channel": (int, _positive, ">= 1"),
    "incident_spin": (_spin, None, "up or down"),
    "solver": (str, _choice(SOLVERS), "one of vra, tm, both"),
    "convergence_check": (_bool, None, "a boolean"),
    "output": (_optional_str, None, "a path"),
    "format": (str, _choice(FORMATS), "csv or json"),
    "plot_preset": (_optional_str, None, "a preset name"),
}
assert set(_FIELDS) == {f.name for f in fields(RunConfig)}

_ALIASES = {"V0": "v0", "n-max": "n_max", "max-step": "max_step",
            "incident-channel": "incident_channel", "incident-spin": "incident_spin",
            "convergence-check": "convergence_check", "plot-preset": "plot_preset"}


def _canonical(key: str) -> str:
    key = key.strip()
    return _ALIASES.get(key, key.replace("-", "_"))


def build_config(values: dict) -> RunConfig:
    """Validate raw key/value pairs into a :class:`RunConfig`."""
    clean = {}
    for raw_key, raw in values.items():
        key = _canonical(raw_key)
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {raw_key!r}")
        parse, check, expected = _FIELDS[key]
        if raw is None:
            clean[key] = None
            continue
        try:
            value = parse(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"invalid value for {key}: {raw!r} (expected {expected})") from None
        if check is not None and value is not None and not check(value):
            raise ConfigError(f"invalid value for {key}: {raw!r} (expected {expected})")
        clean[key] = value
    missing = [k for k in REQUIRED if clean.get(k) is None]
    if clean.get("axis") in ("b", "u") and clean.get("energy") is None:
        missing.append("energy")
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ConfigError(f"missing required parameters: {flags}")
    if clean.get("plot_preset") is not None and clean["plot_preset"] not in PRESETS:
        raise ConfigError(f"unknown preset for plot_preset: {clean['plot_preset']!r}")
    return RunConfig(**clean)


def read_config_file(path) -> dict:
    """Flat ``key = value`` file with ``#`` comments, or a JSON result file."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return dict(data.get("config", data))
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if _canonical(key) not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


# Named parameter sets for the standard plots.  Multi-panel presets list one
# override dict per panel.
_COMPOSITE = dict(a=1, b=1, d=5, l=5, axis="E", start=0.0, span=1.0)
_LOWEST_PEAK = dict(_COMPOSITE, start=0.10, span=0.04)
_WIDE_FIELD = dict(a=1, d=5, l=3, u=0.05, axis="E", start=0.0, span=1.0)
_TWO_CHANNEL = dict(a=1, b=1, d=7, l=5, axis="E", start=0.0, span=1.0)
_POINT_LIKE = dict(a=1, d=0.05, l=0.05, u=0.05, axis="E", start=0.0, span=1.0)

PRESETS = {
    "fig3a": [dict(_COMPOSITE, u=0.0)],
    "fig3b": [dict(_COMPOSITE, u=0.05)],
    "fig3c": [dict(_COMPOSITE, u=0.15)],
    "fig3d": [dict(_LOWEST_PEAK, u=0.05)],
    "fig4a": [dict(_LOWEST_PEAK, u=0.001)],
    "fig4b": [dict(_LOWEST_PEAK, u=0.005)],
    "fig5a": [dict(_WIDE_FIELD, b=1)],
    "fig5b": [dict(_WIDE_FIELD, b=3.5)],
    "fig5c": [dict(_WIDE_FIELD, b=8)],
    "fig5d": [dict(_WIDE_FIELD, b=15)],
    "fig5e": [dict(_WIDE_FIELD, b=100)],
    "fig5f": [dict(_WIDE_FIELD, b=200)],
    "fig6a": [dict(_TWO_CHANNEL, u=0.05)],
    "fig6b": [dict(_TWO_CHANNEL, u=0.15)],
    "fig6c": [dict(_TWO_CHANNEL, u=0.05, incident_channel=2)],
    "fig6d": [dict(_TWO_CHANNEL, u=0.15, incident_channel=2)],
    "point-like-a": [dict(_POINT_LIKE, b=1, d=0.5, l=0.5)],
    "point-like-b": [dict(_POINT_LIKE, b=1)],
    "fig7": [dict(_POINT_LIKE, b=100), dict(_POINT_LIKE, b=200)],
    "fig8": [dict(_POINT_LIKE, a=0.3, b=100), dict(_POINT_LIKE, a=0.3, b=100, span=0.1)],
}
PANEL_LABELS = "abcdefgh"


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cc-tunnel",
        description="Transmission of a spin-1/2 composite particle through a barrier "
                    "in a localised magnetic field.",
        epilog="Exit codes: 0 success, 2 usage/config error, 3 I/O error, "
               "4 solver failed at every point.  CC_TUNNEL_THREADS caps the worker count.",
        argument_default=argparse.SUPPRESS,
    )
    model = p.add_argument_group("model")
    for name in ("a", "b", "d", "l", "u"):
        model.add_argument(f"--{name}", type=str, metavar="X")
    model.add_argument("--v0", type=str, metavar="X", help="barrier height (default 1)")
    model.add_argument("--m", type=str, metavar="X", help="constituent mass (default 1)")
    model.add_argument("--hbar", type=str, metavar="X", help="(default 1)")
    model.add_argument("--n-max", type=str, metavar="N", help="channel truncation (default 7)")
    model.add_argument("--convention", choices=[c.value for c in Convention])
    grid = p.add_argument_group("sweep")
    grid.add_argument("--axis", choices=AXES)
    grid.add_argument("--start", type=str, metavar="X", help="grid origin (default 0)")
    grid.add_argument("--span", type=str, metavar="X")
    grid.add_argument("--points", type=str, metavar="N", help="(default 800)")
    grid.add_argument("--energy", type=str, metavar="X",
                      help="fixed (E - eps_1)/V0 for b and u sweeps")
    grid.add_argument("--incident-channel", type=str, metavar="J", help="(default 1)")
    grid.add_argument("--incident-spin", type=str, metavar="S", help="up or down (default up)")
    grid.add_argument("--solver", choices=SOLVERS)
    grid.add_argument("--convergence-check", action="store_const", const=True)
    integ = p.add_argument_group("integrator")
    integ.add_argument("--rtol", type=str, metavar="X", help="(default 1e-8)")
    integ.add_argument("--atol", type=str, metavar="X", help="(default 1e-10)")
    integ.add_argument("--max-step", type=str, metavar="X", help="(default 0.3)")
    out = p.add_argument_group("output")
    out.add_argument("--output", type=str, metavar="PATH", help="default: standard output")
    out.add_argument("--format", choices=FORMATS)
    out.add_argument("--plot-preset", type=str, metavar="NAME",
                     help="load a named parameter set and write a gnuplot script; "
                          "one of " + ", ".join(PRESETS))
    p.add_argument("--config", type=str, metavar="FILE", help="flat key = value file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv=None, config_file=None) -> list:
    """Merge defaults, preset, config file and flags (later wins) into per-panel configs.

    Returns one :class:`RunConfig` per panel; only multi-panel presets return
    more than one.  Raises :class:`ConfigError` on any problem.
    """
    args = vars(_build_parser().parse_args(argv))
    args.pop("verbose", None)
    config_file = args.pop("config", config_file)
    file_values = read_config_file(config_file) if config_file else {}
    flags = {_canonical(k): v for k, v in args.items()}
    file_values = {_canonical(k): v for k, v in file_values.items()}
    preset = flags.get("plot_preset", file_values.get("plot_preset"))
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset for plot_preset: {preset!r}")
    panels = PRESETS[preset] if preset else [{}]
    configs = []
    for panel in panels:
        merged = dict(panel)
        merged.update(file_values)
        merged.update(flags)
        configs.append(build_config(merged))
    return configs


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.17g}"


def _channel_tag(l, n):
    return f"{l}{n}" if l < 10 and n < 10 else f"{l}_{n}"


def result_columns(result: SweepResult) -> list:
    plan = result.plan
    same = SPIN_LABELS[plan.incident_spin].replace("+", "p").replace("-", "m")
    other = SPIN_LABELS[1 - plan.incident_spin].replace("+", "p").replace("-", "m")
    cols = ["abscissa"]
    for n in range(1, result.max_open + 1):
        tag = _channel_tag(plan.incident_channel, n)
        cols += [f"P_t_{same}{same}_{tag}", f"P_t_{same}{other}_{tag}"]
    return cols + ["P_t_total", "unitarity_defect", "suspect"]


def result_rows(result: SweepResult, with_oracle: bool = False) -> list:
    rows = []
    blocks = []
    for n in range(1, result.max_open + 1):
        blocks += [result.transmission(n), result.transmission(n, flip=True)]
    total = result.total()
    defect = result.unitarity_defect
    suspect = result.suspect
    for i, x in enumerate(result.abscissa):
        row = [float(x)] + [None if np.isnan(b[i]) else float(b[i]) for b in blocks]
        row += [None if np.isnan(total[i]) else float(total[i]),
                None if np.isnan(defect[i]) else float(defect[i]), int(suspect[i])]
        if with_oracle:
            row.append(result.points[i].oracle_deviation)
        rows.append(row)
    return rows


def emit_results(result: SweepResult, fmt: str, path=None, config: Optional[RunConfig] = None,
                 extra: Optional[dict] = None) -> None:
    """Write ``result`` as CSV or JSON to ``path`` (standard output if ``None``)."""
    with_oracle = result.plan.solver == "both"
    columns = result_columns(result) + (["oracle_deviation"] if with_oracle else [])
    rows = result_rows(result, with_oracle)
    stream = sys.stdout if path is None else open(path, "w", newline="")
    try:
        if fmt == "csv":
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([v if isinstance(v, int) and not isinstance(v, bool) else _fmt(v)
                                 for v in row])
        elif fmt == "json":
            doc = {
                "config": config.as_dict() if config else None,
                "columns": columns,
                "rows": [[float(_fmt(v)) if isinstance(v, float) else v for v in row]
                         for row in rows],
                "failures": [{"abscissa": p.abscissa, "error": p.error}
                             for p in result.failures],
            }
            if extra:
                doc.update(extra)
            json.dump(doc, stream, indent=1)
            stream.write("\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    finally:
        if path is not None:
            stream.close()


def load_json_config(path) -> RunConfig:
    """The :class:`RunConfig` embedded in a JSON result file."""
    return build_config(json.loads(Path(path).read_text())["config"])


def _gnuplot_title(column: str) -> str:
    # P_t_pm_12 -> P_{t,12}^{+-}
    if not column.startswith("P_t_") or column == "P_t_total":
        return "P_{t}" if column == "P_t_total" else column
    _, _, spins, tag = column.split("_", 3)
    spins = spins.replace("p", "+").replace("m", "-")
    return f"P_{{t,{tag.replace('_', '')}}}^{{{spins}}}"


def _xlabel(axis: str) -> str:
    return {"E": "(E-{/Symbol e}_1)/V_0", "b": "b", "u": "u"}[axis]


def emit_plot_script(result_paths, preset: Optional[str], script_path, axis: str = "E") -> None:
    """Write a gnuplot script with one curve per probability column of each CSV file.

    Several result files become panels of one ``multiplot``.
    """
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset for plot_preset: {preset!r}")
    result_paths = [Path(p) for p in result_paths]
    image = Path(script_path).with_suffix(".png").name
    width = 640 * len(result_paths)
    lines = [
        f"# gnuplot script{' for preset ' + preset if preset else ''}",
        f"# usage: gnuplot {Path(script_path).name}",
        f"set terminal pngcairo enhanced size {width},560",
        f"set output '{image}'",
        "set datafile separator ','",
        "set key top left",
        f"set xlabel '{_xlabel(axis)}'",
        "set ylabel 'P_t'",
        "set yrange [0:1.05]",
    ]
    if len(result_paths) > 1:
        lines.append(f"set multiplot layout 1,{len(result_paths)}")
    for n, path in enumerate(result_paths):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            has_rows = next(reader, None) is not None
        if len(result_paths) > 1:
            lines.append(f"set title '({PANEL_LABELS[n]})'")
        if header is None or not has_rows:
            lines.append(f"# warning: no data in {path.name}")
            continue
        curves = [
            f"'{path.name}' using 1:{i + 1} with lines title '{_gnuplot_title(col)}'"
            for i, col in enumerate(header) if col.startswith("P_t_")
        ]
        lines.append("plot " + ", \\\n     ".join(curves))
    if len(result_paths) > 1:
        lines.append("unset multiplot")
    Path(script_path).write_text("\n".join(lines) + "\n")


def _panel_path(output: Path, n: int, count: int) -> Path:
    if count == 1:
        return output
    return output.with_name(f"{output.stem}_{PANEL_LABELS[n]}{output.suffix}")


def run(configs: list) -> int:
    """Execute parsed configs; returns the exit code."""
    first = configs[0]
    if first.output is None and (len(configs) > 1 or first.plot_preset):
        raise ConfigError("output: a path is required with multi-panel or plot presets")
    output = Path(first.output) if first.output else None
    csv_paths = []
    all_failed = True
    for n, cfg in enumerate(configs):
        plan = cfg.plan()
        result = run_sweep(plan, cfg.integrator())
        if len(result.failures) < len(result.points):
            all_failed = False
        for p in result.failures:
            log.warning("gap at %s: %s", p.abscissa, p.error)
        extra = {}
        if cfg.convergence_check:
            deviation = convergence_check(plan, cfg.integrator())
            extra["convergence_deviation"] = deviation
            log.warning("convergence check: max deviation %.3g with max_step/5", deviation)
        path = _panel_path(output, n, len(configs)) if output else None
        try:
            emit_results(result, cfg.format, path, cfg, extra)
            if cfg.plot_preset and cfg.format != "csv":
                sidecar = path.with_suffix(".csv")
                emit_results(result, "csv", sidecar, cfg)
                csv_paths.append(sidecar)
            elif cfg.plot_preset:
                csv_paths.append(path)
        except OSError as exc:
            log.error("cannot write %s: %s", path, exc)
            return EXIT_IO
    if first.plot_preset:
        script = output.with_name(f"{output.stem}.gp")
        try:
            emit_plot_script(csv_paths, first.plot_preset, script, first.axis)
        except OSError as exc:
            log.error("cannot write %s: %s", script, exc)
            return EXIT_IO
    return EXIT_SOLVER if all_failed else EXIT_OK


def main(argv=None) -> int:
    verbose = "-v" in (argv or sys.argv[1:]) or "--verbose" in (argv or sys.argv[1:])
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="cc-tunnel: %(message)s")
    try:
        configs = parse_config(argv)
        return run(configs)
    except ConfigError as exc:
        print(f"cc-tunnel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cc-tunnel: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:
        # argparse reports its own usage errors with status 2
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
