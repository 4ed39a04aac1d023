"""Command-line front end: config parsing, subcommands, deterministic output.

Subcommands
-----------
run         time-series experiment → timeseries CSV/JSON
sweep-bias  final photon count across a bias grid → bias_sweep CSV/JSON
saturation  saturated-trial fraction over time → saturation CSV/JSON
bootup      boot-up time N-scan plus its least-squares fit → bootup + fit files
distill     print the source distillation probability/fidelity table
table       print the double-readout classification table

Flags mirror config-file keys (`key = value` lines, `#` comments); a flag
always overrides the file.  Exit codes: 0 success, 2 configuration error,
1 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from photonloop import fock
from photonloop.detection import GROUP_ORDER, Decision, classify, enumerate_table
from photonloop.montecarlo import (
    BIAS_GRID,
    DEFAULT_CADENCE,
    DEFAULT_TRIALS,
    SATURATION_TRIALS,
    bootup_time,
    fit_bootup_scaling,
    run_trials,
    saturation_fraction,
    sweep_bias,
    write_bias_sweep,
    write_bootup,
    write_fit,
    write_saturation,
    write_timeseries,
)
from photonloop.network import SimConfigError, SimParams

DEFAULT_BOOTUP_LINES = (8, 24, 40, 56, 72, 88)
DEFAULT_BOOTUP_BIAS = 32.0


class ConfigError(Exception):
    """Invalid configuration file or parameter combination."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


CONFIG_KEYS = {
    "n_lines": int,
    "bias": float,
    "p_s": float,
    "p_L": float,
    "p_m": float,
    "t_max": int,
    "seed": int,
    "source_stagger": _parse_bool,
    "trials": int,
    "record_cadence": int,
    "out": str,
    "format": str,
}


def load_config(path) -> dict:
    """Parse a `key = value` configuration file.

    Full-line and trailing `#` comments are allowed.  Unknown keys, missing
    `=`, and type mismatches are reported with their line number.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(),
                                 start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', "
                              f"got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: "
                              f"{exc}") from exc
    if "format" in values and values["format"] not in ("csv", "json"):
        raise ConfigError(f"{path}: format must be 'csv' or 'json', "
                          f"got {values['format']!r}")
    return values


def _pick(args, config: dict, flag: str, key: str, default=None):
    value = getattr(args, flag, None)
    if value is not None:
        return value
    return config.get(key, default)


def _build_params(args, config: dict, n_lines=None, bias=None) -> SimParams:
    if n_lines is None:
        n_lines = _pick(args, config, "n", "n_lines")
    if n_lines is None:
        raise ConfigError("n_lines is required (flag --n or config n_lines)")
    if bias is None:
        bias = _pick(args, config, "bias", "bias")
    if bias is None:
        raise ConfigError("bias is required (flag --bias or config bias)")
    try:
        return SimParams(
            n_lines=int(n_lines),
            bias=float(bias),
            p_m=float(_pick(args, config, "p_m", "p_m", 0.0)),
            t_max=_pick(args, config, "t_max", "t_max"),
            seed=int(_pick(args, config, "seed", "seed", 0)),
            source_stagger=bool(_pick(args, config, "source_stagger",
                                      "source_stagger", True)),
            p_s=_pick(args, config, "p_s", "p_s"),
            p_L=_pick(args, config, "p_L", "p_L"),
        )
    except SimConfigError as exc:
        raise ConfigError(str(exc)) from exc


def _out_path(args, config: dict):
    out = _pick(args, config, "out", "out")
    if out is None:
        raise ConfigError("an output path is required (flag --out or config out)")
    return Path(out)


def _fmt(args, config: dict) -> str:
    return _pick(args, config, "format", "format", "csv")


def _cadence(args, config: dict) -> int:
    value = int(_pick(args, config, "record_cadence", "record_cadence",
                      DEFAULT_CADENCE))
    if value < 1:
        raise ConfigError(f"record_cadence must be >= 1, got {value}")
    return value


def _trials(args, config: dict, default: int) -> int:
    value = int(_pick(args, config, "trials", "trials", default))
    if value < 1:
        raise ConfigError(f"trials must be >= 1, got {value}")
    return value


def _comma_list(text: str, convert):
    try:
        return [convert(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list value {text!r}: {exc}") from exc


def _plot_path(out: Path) -> Path:
    return out.with_suffix(".png")


# --- subcommands -------------------------------------------------------------

def cmd_run(args, config: dict) -> int:
    params = _build_params(args, config)
    trials = _trials(args, config, DEFAULT_TRIALS)
    cadence = _cadence(args, config)
    out = _out_path(args, config)
    results = run_trials(params, trials=trials, record_cadence=cadence)
    write_timeseries(out, results, record_cadence=cadence,
                     fmt=_fmt(args, config))
    print(f"wrote {out} ({trials} trials, N={params.n_lines}, "
          f"B={params.bias:g})")
    if args.plot:
        from photonloop import figures
        print(f"wrote {figures.plot_timeseries(_plot_path(out), results, params)}")
    return 0


def cmd_sweep_bias(args, config: dict) -> int:
    bias_values = (tuple(_comma_list(args.bias_values, float))
                   if args.bias_values else BIAS_GRID)
    if not bias_values:
        raise ConfigError("bias grid is empty")
    # The base bias is a placeholder: each sweep point substitutes its own.
    base = _build_params(args, config, bias=bias_values[0])
    trials = _trials(args, config, DEFAULT_TRIALS)
    cadence = _cadence(args, config)
    out = _out_path(args, config)
    try:
        sweep = sweep_bias(base, bias_values=bias_values, trials=trials,
                           record_cadence=cadence)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_bias_sweep(out, base, sweep, fmt=_fmt(args, config))
    print(f"wrote {out} ({len(bias_values)} bias points × {trials} trials, "
          f"N={base.n_lines})")
    if args.plot:
        from photonloop import figures
        print(f"wrote {figures.plot_bias_sweep(_plot_path(out), sweep, base.n_lines)}")
    return 0


def cmd_saturation(args, config: dict) -> int:
    params = _build_params(args, config)
    trials = _trials(args, config, SATURATION_TRIALS)
    cadence = _cadence(args, config)
    out = _out_path(args, config)
    sweep = saturation_fraction(params, trials=trials, record_cadence=cadence)
    write_saturation(out, params, sweep, record_cadence=cadence,
                     fmt=_fmt(args, config))
    print(f"wrote {out} ({trials} trials, N={params.n_lines}, "
          f"B={params.bias:g})")
    if args.plot:
        from photonloop import figures
        print(f"wrote {figures.plot_saturation(_plot_path(out), sweep, params)}")
    return 0


def cmd_bootup(args, config: dict) -> int:
    if args.n:
        n_values = _comma_list(args.n, int)
    elif "n_lines" in config:
        n_values = [config["n_lines"]]
    else:
        n_values = list(DEFAULT_BOOTUP_LINES)
    bias = _pick(args, config, "bias", "bias", DEFAULT_BOOTUP_BIAS)
    trials = _trials(args, config, DEFAULT_TRIALS)
    cadence = _cadence(args, config)
    out = _out_path(args, config)
    fmt = _fmt(args, config)
    seed = int(_pick(args, config, "seed", "seed", 0))
    entries = []
    for n in n_values:
        params = _build_params(args, {**config, "bias": float(bias)},
                               n_lines=n)
        t_boot = bootup_time(params, trials=trials, record_cadence=cadence)
        entries.append((n, t_boot))
        shown = "no boot-up within t_max" if t_boot is None else str(t_boot)
        print(f"N={n}: boot-up {shown}")
    write_bootup(out, entries, trials=trials, bias=float(bias), seed=seed,
                 p_m=float(_pick(args, config, "p_m", "p_m", 0.0)),
                 source_stagger=bool(_pick(args, config, "source_stagger",
                                           "source_stagger", True)),
                 record_cadence=cadence, fmt=fmt)
    print(f"wrote {out}")
    fitted = [(n, t) for n, t in entries if t is not None]
    fit = None
    if len(fitted) >= 3:
        fit = fit_bootup_scaling(fitted)
        fit_out = out.with_name(out.stem + "_fit" + out.suffix)
        write_fit(fit_out, fit, fmt=fmt)
        print(f"wrote {fit_out} (slope {fit.slope:.2f} steps/line, "
              f"r² = {fit.r_squared:.4f})")
    else:
        raise RuntimeError(
            "fewer than 3 network sizes booted within t_max; no fit "
            f"(booted: {[n for n, _ in fitted]})")
    if args.plot:
        from photonloop import figures
        print(f"wrote {figures.plot_bootup(_plot_path(out), entries, fit, float(bias))}")
    return 0


def cmd_distill(args, config: dict) -> int:
    alphas = _comma_list(args.alpha_sq, float) if args.alpha_sq else [2e-3]
    print(f"{'alpha_sq':>12} {'p_plus':>22} {'p_minus':>22} "
          f"{'fidelity':>20} {'infidelity':>14}")
    for alpha_sq in alphas:
        try:
            p_plus, p_minus = fock.distill_probability(alpha_sq)
            fidelity = fock.distill_fidelity(alpha_sq)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        print(f"{alpha_sq:>12.6g} {p_plus:>22.16f} {p_minus:>22.16f} "
              f"{fidelity:>20.16f} {1.0 - fidelity:>14.6e}")
    return 0


def cmd_table(args, config: dict) -> int:
    rows = enumerate_table()
    incident_names = {
        "plus": "|+> photon",
        "minus": "|-> photon",
        "vacuum": "vacuum",
    }
    current = None
    for incident, flags, pair in rows:
        if pair != current:
            current = pair
            decision = classify(pair)
            verb = ("recycle" if decision is Decision.RECYCLE
                    else "replace from shunt/source")
            print(f"\noutcome {pair}  ->  {verb}")
            print(f"  {'incident':<12} {'loss after M1':>14} "
                  f"{'M1 error':>9} {'M2 error':>9}")
        name = incident_names[incident.value]
        print(f"  {name:<12} {str(flags.loss_after_m1):>14} "
              f"{str(flags.m1_error):>9} {str(flags.m2_error):>9}")
    print(f"\n{len(rows)} physical scenarios in {len(GROUP_ORDER)} outcome groups")
    return 0


# --- entry point ---------------------------------------------------------------

def _add_common(sub, n_flag: bool = True) -> None:
    if n_flag:
        sub.add_argument("--n", type=int, default=None,
                         help="number of optical lines N (even)")
    sub.add_argument("--bias", type=float, default=None,
                     help="loss bias B (sets p_L = p_s/B)")
    sub.add_argument("--t-max", dest="t_max", type=int, default=None,
                     help="steps to simulate (default 300·N)")
    sub.add_argument("--trials", type=int, default=None,
                     help="number of Monte-Carlo trials")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--p-m", dest="p_m", type=float, default=None,
                     help="readout error probability (default 0)")
    sub.add_argument("--p-s", dest="p_s", type=float, default=None,
                     help="override source success probability")
    sub.add_argument("--p-L", dest="p_L", type=float, default=None,
                     help="override per-component loss probability")
    sub.add_argument("--source-stagger", dest="source_stagger", default=None,
                     action="store_true",
                     help="stagger source attempt phases per line (default)")
    sub.add_argument("--no-source-stagger", dest="source_stagger",
                     action="store_false",
                     help="align all source attempt phases")
    sub.add_argument("--record-cadence", dest="record_cadence", type=int,
                     default=None,
                     help="steps between recorded samples (default 12)")
    sub.add_argument("--config", default=None,
                     help="key = value configuration file")
    sub.add_argument("--out", default=None, help="output file path")
    sub.add_argument("--format", choices=("csv", "json"), default=None,
                     help="output format (default csv)")
    sub.add_argument("--plot", action="store_true",
                     help="also render a PNG figure next to the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonloop",
        description="Simulator of a photon-recycling optical network "
                    "with probabilistic heralded sources.")
    subs = parser.add_subparsers(dest="command", required=True)

    run_p = subs.add_parser("run", help="photon-count time series")
    _add_common(run_p)
    run_p.set_defaults(handler=cmd_run)

    sweep_p = subs.add_parser("sweep-bias", help="final count across biases")
    _add_common(sweep_p)
    sweep_p.add_argument("--bias-values", default=None,
                         help="comma-separated bias grid "
                              "(default 2,12,22,…,192)")
    sweep_p.set_defaults(handler=cmd_sweep_bias)

    sat_p = subs.add_parser("saturation", help="saturated fraction over time")
    _add_common(sat_p)
    sat_p.set_defaults(handler=cmd_saturation)

    boot_p = subs.add_parser("bootup", help="boot-up time N-scan and fit")
    boot_p.add_argument("--n", type=str, default=None,
                        help="comma-separated N values "
                             "(default 8,24,40,56,72,88)")
    _add_common(boot_p, n_flag=False)
    boot_p.set_defaults(handler=cmd_bootup)

    distill_p = subs.add_parser("distill",
                                help="source distillation probabilities")
    distill_p.add_argument("--alpha-sq", dest="alpha_sq", default=None,
                           help="comma-separated mean photon numbers "
                                "(default 2e-3)")
    distill_p.set_defaults(handler=cmd_distill)

    table_p = subs.add_parser("table", help="double-readout outcome table")
    table_p.set_defaults(handler=cmd_table)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if getattr(args, "config", None) \
            else {}
        return args.handler(args, config)
    except (ConfigError, SimConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
