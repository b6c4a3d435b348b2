"""Command line interface.

Subcommands: validate, run, report, spectra, golden. Batch only; every
invocation reads inputs, writes artifacts, and exits. Exit codes: 0
success, 1 invalid input or failed operation, 2 I/O failure (missing or
unreadable files). JSON output carries a schema field so downstream
tooling can detect format changes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .engine import run_scenario
from .report import compare_runs, load_table, price_duration_curve, settlement_check, summarize_run
from .spectral import convolve_fft, ingest_series, power_spectrum, shift_impact, write_series_csv

JSON_SCHEMA = 1


def _out_root(explicit: str | None) -> Path:
    if explicit:
        return Path(explicit)
    env = os.environ.get("TGSIM_OUT")
    if env:
        return Path(env)
    return Path("runs")


def _emit(payload: dict, as_json: bool, lines: list[str]) -> None:
    if as_json:
        payload = {"schema": JSON_SCHEMA, **payload}
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def cmd_validate(args) -> int:
    try:
        load_config(args.config)
    except ConfigError as exc:
        problems = list(exc.problems)
        if args.json:
            print(json.dumps({"schema": JSON_SCHEMA, "valid": False, "problems": problems},
                             indent=2, sort_keys=True))
        else:
            for p in problems:
                print(f"error: {p}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps({"schema": JSON_SCHEMA, "valid": True, "problems": []},
                         indent=2, sort_keys=True))
    elif args.verbose:
        print(f"{args.config}: ok")
    return 0


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, seed=args.seed)
    out_dir = _out_root(args.out)
    if args.out is None:
        out_dir = out_dir / Path(args.config).stem
    try:
        artifacts = run_scenario(cfg, out_dir, base_dir=Path(args.config).parent)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    s = artifacts.summary
    alternations = max(s["price_alternations"].values(), default=0) if s["price_alternations"] else 0
    oscillation = "yes" if alternations >= 3 else "no"
    lines = [
        f"peak load: {s['peak_load_kw']:.3f} kW",
        f"energy: {s['energy_kwh']:.3f} kWh",
        f"price mean/sigma: {s['price_mean']} / {s['price_sigma']}",
        f"ufls events: {s['ufls_events']}",
        f"oscillation detected: {oscillation}",
    ]
    if args.verbose:
        lines.append(f"artifacts: {artifacts.out_dir}")
    _emit({"summary": s, "out_dir": str(artifacts.out_dir),
           "manifest": artifacts.manifest, "oscillation": alternations >= 3},
          args.json, lines)
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "summary.json").exists():
        print(f"error: no summary.json under {run_dir}", file=sys.stderr)
        return 2
    try:
        if args.against:
            payload = compare_runs(args.against, run_dir)
            lines = []
            for name, summ in (("base", payload["base"]), ("other", payload["other"])):
                lines.append(f"{name}: peak {summ['peak_load_kw']:.3f} kW, "
                             f"energy {summ['energy_kwh']:.3f} kWh")
            pk = payload["peak_reduction_pct"]
            en = payload["energy_delta_pct"]
            lines.append(f"peak reduction: {pk if pk is None else f'{pk:.2f}'} %")
            lines.append(f"energy delta: {en if en is None else f'{en:.2f}'} %")
        else:
            payload = summarize_run(run_dir)
            payload["settlement"] = settlement_check(run_dir)
            lines = [f"{k}: {v}" for k, v in payload.items()]
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        markets = load_table(run_dir / "markets.csv")
        prices = [p for p, m in zip(markets["price"], markets["market_id"]) if m != "__area"]
        frac, arr = price_duration_curve(prices)
        with open(out / "price_duration.csv", "w") as fh:
            fh.write("fraction_at_or_above,price\n")
            for f_val, p_val in zip(frac, arr):
                fh.write(f"{repr(float(f_val))},{repr(float(p_val))}\n")
        lines.append(f"wrote {out / 'price_duration.csv'}")
    _emit(payload, args.json, lines)
    return 0


def cmd_spectra(args) -> int:
    try:
        load = ingest_series(args.load, units="kW")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    freqs, amps = power_spectrum(load)
    psd_path = out / "psd.csv"
    with open(psd_path, "w") as fh:
        fh.write("frequency_hz,amplitude\n")
        for f_val, a_val in zip(freqs, amps):
            fh.write(f"{repr(float(f_val))},{repr(float(a_val))}\n")
    payload: dict = {"psd": str(psd_path), "samples": len(load)}
    lines = [f"wrote {psd_path} ({len(freqs)} bins)"]
    if args.impact:
        try:
            impact = ingest_series(args.impact, units="")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        try:
            conv = convolve_fft(impact, load)
            conv_path = out / "convolution.csv"
            write_series_csv(conv, conv_path)
            payload["convolution"] = str(conv_path)
            lines.append(f"wrote {conv_path}")
            if args.shift is not None:
                result = shift_impact(impact, load, args.shift)
                payload["shift"] = result
                lines.extend(f"{k}: {v}" for k, v in result.items())
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    _emit(payload, args.json, lines)
    return 0


def cmd_golden(args) -> int:
    scen_dir = Path(args.scenarios)
    configs = sorted(scen_dir.glob("*.yaml"))
    if not configs:
        print(f"error: no scenario configs under {scen_dir}", file=sys.stderr)
        return 2
    out_root = _out_root(args.out)
    golden_dir = scen_dir / "golden"
    golden_dir.mkdir(parents=True, exist_ok=True)
    for path in configs:
        try:
            cfg = load_config(path)
        except ConfigError as exc:
            for p in exc.problems:
                print(f"error: {path.name}: {p}", file=sys.stderr)
            return 1
        artifacts = run_scenario(cfg, out_root / path.stem, base_dir=scen_dir)
        summary_path = golden_dir / f"{path.stem}.summary.json"
        summary_path.write_text(json.dumps(artifacts.summary, indent=2, sort_keys=True) + "\n")
        if args.verbose:
            print(f"{path.stem}: regenerated {summary_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tgsim", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_val = sub.add_parser("validate", help="check a scenario config")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--json", action="store_true")
    p_val.add_argument("--verbose", action="store_true")
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="execute a scenario")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None,
                       help="artifact directory (default: $TGSIM_OUT/<config stem>)")
    p_run.add_argument("--json", action="store_true")
    p_run.add_argument("--verbose", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="summarize or compare run artifacts")
    p_rep.add_argument("run_dir")
    p_rep.add_argument("--against", default=None, help="baseline run directory")
    p_rep.add_argument("--out", default=None, help="directory for plot-ready CSVs")
    p_rep.add_argument("--json", action="store_true")
    p_rep.set_defaults(func=cmd_report)

    p_spec = sub.add_parser("spectra", help="PSD and convolution analysis of a load series")
    p_spec.add_argument("--load", required=True, help="load series CSV (time,value)")
    p_spec.add_argument("--impact", default=None, help="unit impact series CSV")
    p_spec.add_argument("--shift", type=float, default=None, help="shift in hours")
    p_spec.add_argument("--out", default=None)
    p_spec.add_argument("--json", action="store_true")
    p_spec.set_defaults(func=cmd_spectra)

    p_gold = sub.add_parser("golden", help="regenerate golden scenario summaries")
    p_gold.add_argument("--scenarios", default="scenarios")
    p_gold.add_argument("--out", default=None)
    p_gold.add_argument("--verbose", action="store_true")
    p_gold.set_defaults(func=cmd_golden)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
