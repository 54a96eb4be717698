"""Command-line front end.

Every subcommand builds a JSON-style run configuration and hands it to
:func:`run`, so ``nanolase run manifest.json`` repeats any earlier run from
the manifest it wrote.  Physical quantities carry their SI unit in the key
name (``tau_nr_G_s``, ``avg_power_W``) and unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import integrate, pulse_span, write_trajectory_csv
from .errors import ConfigError, DomainError, NanolaseError
from .excitation import CW, Chopped, GaussianTrain
from .experiments import (CONTINUOUS, PULSED, extract_threshold, ll_curve_cw, ll_curve_pulsed,
                          ll_plot_data, pulse_response, write_json)
from .fit import fit_eta, read_ll_csv
from .model import LT, RT, LaserParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

EXPERIMENTS = ("simulate", "llcurve", "threshold", "pulse-response", "fit-eta")

# config key -> LaserParams field
PARAM_KEYS = {
    "F_cav": "F_cav",
    "eta": "eta",
    "tau_relax_s": "tau_relax",
    "tau_sp_s": "tau_sp",
    "tau_nr_G_s": "tau_nr_G",
    "tau_nr_E_s": "tau_nr_E",
    "C_A_m6_per_s": "C_A",
    "g0_per_m": "g0",
    "N_tr_per_m3": "N_tr",
    "beta_c": "beta_c",
    "Q": "Q",
    "lambda_cav_m": "lambda_cav",
    "lambda_pump_m": "lambda_pump",
    "V_a_m3": "V_a",
    "V_mode_m3": "V_mode",
    "v_g_m_per_s": "v_g",
    "kappa_out": "kappa_out",
}
FIELD_KEYS = {v: k for k, v in PARAM_KEYS.items()}

PUMP_KEYS = {
    "cw": {"power_W": "power"},
    "gaussian": {"avg_power_W": "avg_power", "fwhm_s": "fwhm", "period_s": "period"},
    "chopped": {"cw_power_W": "cw_power", "on_duration_s": "on_duration", "period_s": "period"},
}
PUMP_TYPES = {"cw": CW, "gaussian": GaussianTrain, "chopped": Chopped}
PUMP_DEFAULTS = {"power_W": 0.0, "avg_power_W": 0.0, "cw_power_W": 0.0}

OPTION_KEYS = {"powers_W", "irf_fwhm_s", "rel_tol", "t_span_s", "measured_csv", "bracket"}
OUTPUT_KEYS = {"dir", "prefix"}
TOP_KEYS = {"experiment", "preset", "params", "pump", "options", "output", "tool"}

PULSED_PUMP = {"kind": "gaussian", "avg_power_W": 0.0, "fwhm_s": 3.5e-12, "period_s": 13e-9}
CW_PUMP = {"kind": "cw", "power_W": 0.0}


@dataclass(frozen=True)
class Preset:
    name: str
    environment: object
    regime: str
    pump: dict

    def params(self) -> LaserParams:
        return self.environment.params(self.regime)


PRESETS = {
    "lt-pulsed": Preset("lt-pulsed", LT, "pulsed", PULSED_PUMP),
    "lt-cw": Preset("lt-cw", LT, "cw", CW_PUMP),
    "lt-cw-spot": Preset("lt-cw-spot", LT, "cw_spot", CW_PUMP),
    "rt-pulsed": Preset("rt-pulsed", RT, "pulsed", PULSED_PUMP),
}


# --- config resolution ----------------------------------------------------------

def _reject_unknown(section: str, given, allowed) -> None:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        where = f"{section}." if section else ""
        raise ConfigError(f"unknown config key(s): {', '.join(where + k for k in unknown)}")


def _number(key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"config key {key!r} must be finite")
    return value


def parse_grid(spec: str) -> np.ndarray:
    """Parse ``start:stop:count[:log|lin]`` into an array of powers."""
    parts = str(spec).split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"power grid {spec!r} must look like start:stop:count[:log]")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"power grid {spec!r}: {exc}") from exc
    spacing = parts[3] if len(parts) == 4 else "lin"
    if count < 2 or not stop > start >= 0:
        raise ConfigError(f"power grid {spec!r} needs 0 <= start < stop and count >= 2")
    if spacing == "log":
        if start == 0:
            raise ConfigError(f"power grid {spec!r}: log spacing needs start > 0")
        return np.geomspace(start, stop, count)
    if spacing != "lin":
        raise ConfigError(f"power grid {spec!r}: spacing must be 'lin' or 'log'")
    return np.linspace(start, stop, count)


def resolve_params(config: dict) -> LaserParams:
    preset = config.get("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    params = PRESETS[preset].params() if preset else LaserParams()
    overrides = config.get("params") or {}
    if not isinstance(overrides, dict):
        raise ConfigError("config key 'params' must be an object")
    _reject_unknown("params", overrides, PARAM_KEYS)
    values = {PARAM_KEYS[k]: _number(k, v) for k, v in overrides.items()}
    try:
        return params.replace(**values)
    except DomainError as exc:
        raise ConfigError(f"params: {exc}") from exc


def resolve_pump(spec) -> CW | GaussianTrain | Chopped:
    if not isinstance(spec, dict):
        raise ConfigError("config is missing the pump spec ('pump' object)")
    kind = spec.get("kind")
    if kind not in PUMP_KEYS:
        raise ConfigError(f"pump.kind must be one of {sorted(PUMP_KEYS)}, got {kind!r}")
    keys = PUMP_KEYS[kind]
    _reject_unknown("pump", spec, set(keys) | {"kind"})
    values = {}
    for key, attr in keys.items():
        if key in spec:
            values[attr] = _number(f"pump.{key}", spec[key])
        elif key in PUMP_DEFAULTS:
            values[attr] = PUMP_DEFAULTS[key]
        else:
            raise ConfigError(f"pump spec is missing key 'pump.{key}'")
    try:
        return PUMP_TYPES[kind](**values)
    except DomainError as exc:
        raise ConfigError(f"pump: {exc}") from exc


def pump_spec(pump) -> dict:
    kind = {CW: "cw", GaussianTrain: "gaussian", Chopped: "chopped"}[type(pump)]
    return {"kind": kind, **{k: getattr(pump, a) for k, a in PUMP_KEYS[kind].items()}}


def params_spec(params: LaserParams) -> dict:
    return {FIELD_KEYS[f.name]: getattr(params, f.name) for f in fields(params)}


@dataclass(frozen=True)
class Resolved:
    experiment: str
    params: LaserParams
    pump: object
    options: dict
    out_dir: Path
    prefix: str

    def manifest(self) -> dict:
        return {
            "tool": {"name": "nanolase", "version": __version__},
            "experiment": self.experiment,
            "params": params_spec(self.params),
            "pump": pump_spec(self.pump),
            "options": self.options,
            "output": {"dir": str(self.out_dir), "prefix": self.prefix},
        }


def resolve(config: dict) -> Resolved:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown("", config, TOP_KEYS)
    experiment = config.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"config key 'experiment' must be one of {list(EXPERIMENTS)}")
    if "pump" not in config:
        raise ConfigError("config is missing the pump spec ('pump' object)")
    params = resolve_params(config)
    pump = resolve_pump(config["pump"])

    options = dict(config.get("options") or {})
    _reject_unknown("options", options, OPTION_KEYS)
    options.setdefault("rel_tol", 1e-8)
    _number("options.rel_tol", options["rel_tol"])
    if experiment in ("llcurve", "threshold", "fit-eta") and isinstance(pump, Chopped):
        raise ConfigError("pump: LL sweeps need a 'gaussian' or 'cw' pump")
    if experiment in ("llcurve", "threshold") and "powers_W" not in options:
        raise ConfigError("options.powers_W is required (start:stop:count[:log])")
    if "powers_W" in options:
        parse_grid(options["powers_W"])
    if experiment == "pulse-response" and not isinstance(pump, GaussianTrain):
        raise ConfigError("pump: pulse-response needs a 'gaussian' pump")
    if experiment == "fit-eta":
        if "measured_csv" not in options:
            raise ConfigError("options.measured_csv is required for fit-eta")
        options["measured_csv"] = str(Path(options["measured_csv"]).resolve())
        options.setdefault("bracket", [1e-4, 1.0])
    if "t_span_s" in options:
        span = options["t_span_s"]
        if not (isinstance(span, list) and len(span) == 2):
            raise ConfigError("options.t_span_s must be a two-element list")
        options["t_span_s"] = [_number("options.t_span_s", v) for v in span]

    output = dict(config.get("output") or {})
    _reject_unknown("output", output, OUTPUT_KEYS)
    return Resolved(experiment, params, pump, options, Path(output.get("dir", ".")),
                    output.get("prefix", experiment))


# --- experiments ------------------------------------------------------------------

def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _ll_curve(r: Resolved):
    powers = parse_grid(r.options["powers_W"])
    if isinstance(r.pump, GaussianTrain):
        return ll_curve_pulsed(r.params, r.pump, powers, r.options["rel_tol"])
    return ll_curve_cw(r.params, powers)


def _simulate(r: Resolved, base: Path) -> list[Path]:
    span = r.options.get("t_span_s")
    if span is None:
        span = pulse_span(r.pump, 1) if isinstance(r.pump, GaussianTrain) else (0.0, 5e-9)
    traj = integrate(r.params, r.pump, tuple(span), rel_tol=r.options["rel_tol"])
    csv_path = base.with_suffix(".csv")
    write_trajectory_csv(traj, csv_path)
    plot = {"x_label": "time (s)", "y_label": "output power (W)", "annotations": [],
            "series": [{"name": "L_out", "x": traj.t.tolist(), "y": traj.L_out.tolist()}]}
    write_json(plot, base.with_suffix(".plot.json"))
    return [csv_path]


def _llcurve(r: Resolved, base: Path, require_threshold: bool) -> list[Path]:
    ll = _ll_curve(r)
    try:
        fit = extract_threshold(ll)
    except NanolaseError:
        if require_threshold:
            raise
        fit = None
    csv_path = base.with_suffix(".csv")
    ll.to_csv(csv_path)
    write_json(ll_plot_data(ll, fit), base.with_suffix(".plot.json"))
    paths = [csv_path]
    if require_threshold:
        fit_path = base.with_name(base.name + ".threshold.csv")
        _write_rows(fit_path, ["threshold_W", "slope_below", "slope_above", "residual"],
                    [[fit.threshold, fit.slope_below, fit.slope_above, fit.residual]])
        paths.append(fit_path)
    if fit is not None:
        print(f"threshold {fit.threshold:.6g} W")
    return paths


def _pulse_response(r: Resolved, base: Path) -> list[Path]:
    metrics = pulse_response(r.params, r.pump, r.options.get("irf_fwhm_s"),
                             r.options["rel_tol"])
    values = metrics.as_dict()
    header = [f"{k}_s" for k in values]
    csv_path = base.with_suffix(".csv")
    _write_rows(csv_path, header, [list(values.values())])
    trace = base.with_name(base.name + ".trace.csv")
    write_trajectory_csv(metrics.trajectory, trace)
    plot = {"x_label": "time (s)", "y_label": "output power (W)",
            "series": [{"name": "L_out", "x": metrics.trajectory.t.tolist(),
                        "y": metrics.trajectory.L_out.tolist()}],
            "annotations": [{"type": "fwhm", "x": metrics.peak_delay, "width": metrics.fwhm,
                             "label": f"FWHM {metrics.fwhm * 1e12:.3g} ps"}]}
    write_json(plot, base.with_suffix(".plot.json"))
    print(f"fwhm {metrics.fwhm:.6g} s")
    return [csv_path, trace]


def _fit_eta(r: Resolved, base: Path) -> list[Path]:
    regime = PULSED if isinstance(r.pump, GaussianTrain) else CONTINUOUS
    measured = read_ll_csv(r.options["measured_csv"], regime)
    bracket = tuple(_number("options.bracket", v) for v in r.options["bracket"])
    result = fit_eta(r.params, measured, r.pump, bracket)
    csv_path = base.with_suffix(".csv")
    _write_rows(csv_path, ["eta_hat", "residual", "n_evals", "bracket_lo", "bracket_hi"],
                [[result.eta_hat, result.residual, result.n_evals, *result.bracket]])
    write_json({"x_label": "pump power (W)", "y_label": "output (arb.)", "annotations": [],
                "series": [{"name": "measured", "x": measured.pump_in.tolist(),
                            "y": measured.light_out.tolist()}],
                "eta_hat": result.eta_hat}, base.with_suffix(".plot.json"))
    print(f"eta_hat {result.eta_hat:.6g}")
    return [csv_path]


def execute(r: Resolved) -> list[Path]:
    r.out_dir.mkdir(parents=True, exist_ok=True)
    base = r.out_dir / r.prefix
    if r.experiment == "simulate":
        paths = _simulate(r, base)
    elif r.experiment in ("llcurve", "threshold"):
        paths = _llcurve(r, base, r.experiment == "threshold")
    elif r.experiment == "pulse-response":
        paths = _pulse_response(r, base)
    else:
        paths = _fit_eta(r, base)
    write_json(r.manifest(), base.with_suffix(".manifest.json"))
    return paths


def run(config: dict, out_dir: str | None = None) -> int:
    """Resolve and execute one run; returns the process exit status."""
    try:
        resolved = resolve(config)
        if out_dir is not None:
            resolved = Resolved(resolved.experiment, resolved.params, resolved.pump,
                                resolved.options, Path(out_dir), resolved.prefix)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        execute(resolved)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NanolaseError as exc:
        print(f"{exc.category} error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------

def _presets_table(as_json: bool) -> str:
    rows = []
    for preset in PRESETS.values():
        p = preset.params()
        rows.append({"name": preset.name, "environment": preset.environment.name,
                     "tau_nr_G_s": p.tau_nr_G, "tau_relax_s": p.tau_relax, "eta": p.eta,
                     "pump": preset.pump["kind"]})
    if as_json:
        return json.dumps(rows, indent=2)
    lines = [f"{'preset':<12}{'env':<5}{'tau_nr_G':>10}{'tau_relax':>11}{'eta':>10}  pump"]
    for r in rows:
        lines.append(f"{r['name']:<12}{r['environment']:<5}{r['tau_nr_G_s'] * 1e12:>7.4g} ps"
                     f"{r['tau_relax_s'] * 1e12:>8.3g} ps{r['eta']:>10.3g}  {r['pump']}")
    return "\n".join(lines)


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--set {key}: {value!r} is not a number") from exc
    return out


def _config_from_args(args) -> dict:
    preset = PRESETS[args.preset]
    pump = dict(preset.pump)
    if args.pump_kind and args.pump_kind != pump["kind"]:
        pump = {"kind": args.pump_kind}
    power_key = {"cw": "power_W", "gaussian": "avg_power_W", "chopped": "cw_power_W"}[pump["kind"]]
    for key, value in ((power_key, args.power), ("fwhm_s", args.fwhm),
                       ("period_s", args.period), ("on_duration_s", args.on_duration)):
        if value is not None:
            pump[key] = value
    options = {"rel_tol": args.rel_tol}
    for key, attr in (("powers_W", "powers"), ("irf_fwhm_s", "irf"),
                      ("measured_csv", "measured")):
        value = getattr(args, attr, None)
        if value is not None:
            options[key] = value
    if getattr(args, "t_span", None):
        options["t_span_s"] = [float(v) for v in args.t_span.split(":")]
    if getattr(args, "bracket", None):
        options["bracket"] = [float(v) for v in args.bracket.split(":")]
    return {"experiment": args.command, "preset": args.preset, "params": _parse_set(args.set),
            "pump": pump, "options": options,
            "output": {"dir": args.out, "prefix": args.prefix or args.command}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nanolase", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nanolase {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("presets", help="list parameter presets")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("run", help="run a JSON config or manifest")
    p.add_argument("config")
    p.add_argument("--out", help="override the output directory")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=sorted(PRESETS), default="lt-pulsed")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a parameter, e.g. tau_nr_G_s=5e-11")
    common.add_argument("--pump-kind", choices=sorted(PUMP_KEYS))
    common.add_argument("--power", type=float, help="CW power or average pulsed power (W)")
    common.add_argument("--fwhm", type=float, help="pulse FWHM (s)")
    common.add_argument("--period", type=float, help="repetition period (s)")
    common.add_argument("--on-duration", type=float, help="chopped on-time (s)")
    common.add_argument("--rel-tol", type=float, default=1e-8)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--prefix", help="output file prefix")

    p = sub.add_parser("simulate", parents=[common], help="integrate one trajectory")
    p.add_argument("--t-span", help="start:stop in seconds")
    for name in ("llcurve", "threshold"):
        p = sub.add_parser(name, parents=[common], help=f"LL sweep ({name})")
        p.add_argument("--powers", required=True, help="start:stop:count[:log] in W")
    p = sub.add_parser("pulse-response", parents=[common], help="lasing pulse metrics")
    p.add_argument("--irf", type=float, help="instrument response FWHM (s)")
    p = sub.add_parser("fit-eta", parents=[common], help="fit eta to a measured LL curve")
    p.add_argument("--measured", required=True, help="CSV with pump_W,light_arb columns")
    p.add_argument("--bracket", help="eta_lo:eta_hi")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        print(_presets_table(args.json))
        return EXIT_OK
    if args.command == "run":
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return run(config, args.out)
    try:
        config = _config_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
