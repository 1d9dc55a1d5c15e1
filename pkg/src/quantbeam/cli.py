"""Command-line entry point: ``quantbeam <subcommand> ...``.

Exit status is 0 on success, 1 when a checked accuracy target is missed and
2 for usage or configuration errors.  Every run writes ``manifest.json``
next to its outputs; ``quantbeam replay manifest.json`` repeats the run.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .aqnm import design_uniform_quantizer, fit_alpha, sinr_from_gamma
from .config import format_bits, from_snapshot, load_config, parse_bits, snapshot
from .errors import ConfigError, FitError, QuantbeamError
from .ofdm import sweep
from .power import table1_architectures, ArchitectureSpec, format_table, frontend_budget, table_csv
from .system import aggregate, cdf_rows, run_drops

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CHECK_SNR_DB = 20.0
CHECK_TOL_DB = 1.0
ARCH_CHOICES = ("analog", "hybrid", "digital-hi", "digital-lo", "all")


class UsageError(QuantbeamError):
    pass


def _g(x) -> str:
    """Fixed 6-significant-digit formatting used by every CSV."""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.6g}"


def _bits_label(b) -> str:
    return "inf" if math.isinf(b) else str(int(b))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_g(v) for v in r])


def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def parse_snr_range(text: str):
    """``start:stop:step`` in dB, stop inclusive."""
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise UsageError(f"--snr must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise UsageError(f"--snr needs step > 0 and stop >= start, got {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 9) for i in range(n)]


def _bits_arg(text, allow_inf=True):
    try:
        bits = parse_bits(text)
    except QuantbeamError as exc:
        raise UsageError(str(exc)) from None
    for b in bits:
        if math.isinf(b):
            if not allow_inf:
                raise UsageError("infinite resolution is not valid here")
        elif not 1 <= b <= 16:
            raise UsageError(f"bits must lie in 1..16, got {b}")
    return bits


# ---------------------------------------------------------------- link check

def _fit_or_none(pairs):
    try:
        return fit_alpha(pairs)
    except FitError:
        return None


def _rms(errors):
    e = np.asarray(errors, dtype=float)
    return float(np.sqrt(np.mean(e**2))) if e.size else math.nan


def link_validate(opts: dict, snap: dict, out: Path) -> tuple[int, dict, list]:
    _, numerology = from_snapshot(snap)
    bits = opts["bits"]
    grid = opts["snr"]
    rows = sweep(numerology, bits, grid, opts["slots"], opts["seed"])
    by_bits = {}
    for m in rows:
        by_bits.setdefault(m.bits, []).append(m)

    report = {"alpha_mode": opts["alpha_mode"], "bits": {}}
    for b, ms in by_bits.items():
        if math.isinf(b):
            continue
        analytic = design_uniform_quantizer(int(b)).alpha
        fitted = _fit_or_none([(m.input_snr_db, m.post_eq_snr_db) for m in ms])
        report["bits"][_bits_label(b)] = {"alpha_analytic": analytic, "alpha_fitted": fitted}
    if opts["alpha_mode"] == "fitted":
        missing = [k for k, v in report["bits"].items() if v["alpha_fitted"] is None]
        if missing:
            raise UsageError(f"alpha fit needs >= 3 SNR points spanning >= 10 dB (bits {missing})")

    def model_db(b, snr, alpha):
        if math.isinf(b):
            return snr
        return 10.0 * math.log10(sinr_from_gamma(10.0 ** (snr / 10.0), alpha, 1.0))

    meas_rows, comp_rows, checks = [], [], []
    for b, ms in by_bits.items():
        entry = report["bits"].get(_bits_label(b), {})
        used = 0.0 if math.isinf(b) else entry[f"alpha_{opts['alpha_mode']}"]
        err = {}
        for mode in ("analytic", "fitted"):
            a = 0.0 if math.isinf(b) else entry.get(f"alpha_{mode}")
            if a is not None:
                err[mode] = [model_db(b, m.input_snr_db, a) - m.post_eq_snr_db for m in ms]
        for m in ms:
            meas_rows.append([_bits_label(b), m.input_snr_db, m.post_eq_snr_db,
                              model_db(b, m.input_snr_db, used), opts["alpha_mode"], m.seed])
            if math.isclose(m.input_snr_db, CHECK_SNR_DB) and not math.isinf(b):
                d = model_db(b, m.input_snr_db, used) - m.post_eq_snr_db
                checks.append((b, d))
        at20 = [model_db(b, m.input_snr_db, used) - m.post_eq_snr_db
                for m in ms if math.isclose(m.input_snr_db, CHECK_SNR_DB)]
        comp_rows.append([
            _bits_label(b),
            entry.get("alpha_analytic", 0.0), entry.get("alpha_fitted") or math.nan,
            _rms(err.get("analytic", [])), _rms(err.get("fitted", [])),
            at20[0] if at20 else math.nan,
        ])
        if not math.isinf(b):
            entry["rms_error_analytic_db"] = _rms(err["analytic"])
            entry["rms_error_fitted_db"] = _rms(err["fitted"]) if "fitted" in err else None

    files = [out / "measurements.csv", out / "model_comparison.csv", out / "alpha_fit.json"]
    _write_csv(files[0], ["bits", "input_snr_db", "post_eq_snr_db", "model_snr_db", "alpha_mode", "seed"],
               meas_rows)
    _write_csv(files[1], ["bits", "alpha_analytic", "alpha_fitted", "rms_error_analytic_db",
                          "rms_error_fitted_db", "error_at_20db_db"], comp_rows)
    passed = all(abs(d) < CHECK_TOL_DB for _, d in checks)
    report["check"] = {
        "snr_db": CHECK_SNR_DB, "tolerance_db": CHECK_TOL_DB,
        "errors_db": {_bits_label(b): d for b, d in checks},
        "evaluated": bool(checks), "passed": passed,
    }
    _write_json(files[2], report)
    if checks:
        worst = max(abs(d) for _, d in checks)
        line = (f"{'PASS' if passed else 'FAIL'}: model vs measured at {CHECK_SNR_DB:g} dB, "
                f"max |error| {worst:.3f} dB (limit {CHECK_TOL_DB:g} dB)")
    else:
        line = f"SKIP: {CHECK_SNR_DB:g} dB is not on the SNR grid"
    report["line"] = line
    return (EXIT_OK if passed else EXIT_FAIL), report, files


# ------------------------------------------------------------ system capacity

def sys_capacity(opts: dict, snap: dict, out: Path) -> tuple[int, dict, list]:
    sim, _ = from_snapshot(snap)
    table, summary = aggregate(run_drops(sim, workers=opts["workers"]))
    raw = out / "sys_raw.csv"
    cdf_sinr = out / "cdf_sinr.csv"
    cdf_rate = out / "cdf_rate.csv"
    summ = out / "summary.json"
    r = table.rows
    _write_csv(raw, ["drop", "ue_id", "bits", "gamma_bf_db", "gamma_q_db", "rate_mbps"],
               ([int(r["drop"][i]), int(r["ue_id"][i]), _bits_label(r["bits"][i]),
                 r["gamma_bf_db"][i], r["gamma_q_db"][i], r["rate_mbps"][i]]
                for i in range(r["drop"].size)))
    _write_csv(cdf_sinr, ["bits", "value", "cdf"], cdf_rows(table, "gamma_q_db"))
    _write_csv(cdf_rate, ["bits", "value", "cdf"], cdf_rows(table, "rate_mbps"))
    _write_json(summ, summary)
    return EXIT_OK, summary, [raw, cdf_sinr, cdf_rate, summ]


# -------------------------------------------------------------- power budget

def _budgets(arch, antennas, bits):
    if arch == "all":
        specs = table1_architectures(antennas, digital_lo_bits=bits or 4)
    else:
        base = table1_architectures(antennas)[arch]
        default_bits = 4 if arch == "digital-lo" else base.adc_bits
        specs = {arch: ArchitectureSpec(base.kind, antennas, base.n_streams, bits or default_bits)}
    return {name: frontend_budget(s) for name, s in specs.items()}


def power_budget(opts: dict, snap: dict, out: Path) -> tuple[int, dict, list]:
    budgets = _budgets(opts["arch"], opts["antennas"], opts["bits"])
    path = out / "power_budget.csv"
    path.write_text(table_csv(budgets))
    summary = {name: {"items_mw": dict(b.items), "adc_bits": b.arch.adc_bits, "total_mw": b.total_mw}
               for name, b in budgets.items()}
    summary["_table"] = format_table(budgets)
    return EXIT_OK, summary, [path]


COMMANDS = {"link-validate": link_validate, "sys-capacity": sys_capacity, "power-budget": power_budget}


# ------------------------------------------------------------------ plumbing

def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def execute(command: str, opts: dict, snap: dict, out: Path, as_json=False) -> int:
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    status, summary, files = COMMANDS[command](_typed(command, opts), snap, out)
    manifest_path = out / "manifest.json"
    manifest = {
        "subcommand": command,
        "options": opts,
        "config": snap,
        "base_seed": opts.get("seed"),
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [p.name for p in files] + [manifest_path.name],
    }
    _write_json(manifest_path, manifest)
    _report(command, summary, as_json)
    return status


def _report(command, summary, as_json):
    if as_json:
        body = {k: v for k, v in summary.items() if k != "_table"}
        print(json.dumps(body, indent=2, sort_keys=True))
        return
    if command == "power-budget":
        print(summary["_table"])
    elif command == "link-validate":
        for b, e in summary["bits"].items():
            fitted = e["alpha_fitted"]
            print(f"bits={b}: alpha analytic {e['alpha_analytic']:.6g}, "
                  f"fitted {'n/a' if fitted is None else f'{fitted:.6g}'}, "
                  f"rms error {e['rms_error_analytic_db']:.3f} dB")
        print(summary["line"])
    else:
        for b, e in summary.items():
            if b.startswith("_"):
                continue
            d = e.get("delta_vs_inf", {})
            print(f"bits={b}: SINR p10/p50/p90 {e['p10_sinr_db']:.2f}/{e['p50_sinr_db']:.2f}/"
                  f"{e['p90_sinr_db']:.2f} dB, median rate {e['p50_rate_mbps']:.1f} Mbps, "
                  f"median penalty {d.get('p50_sinr_db', 0.0):.2f} dB")
        print(f"UEs {summary['_meta']['n_ues']}, outage {summary['_meta']['outage_ues']}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quantbeam", description="Low-resolution ADC mmWave receiver studies")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument("--json", action="store_true", help="machine-readable summary on stdout")

    lv = sub.add_parser("link-validate", parents=[common], help="OFDM check of the quantization model")
    lv.add_argument("--config", type=Path)
    lv.add_argument("--bits", default="2,3,4,5,6")
    lv.add_argument("--snr", default="-10:30:1", help="start:stop:step in dB")
    lv.add_argument("--slots", type=int, default=100)
    lv.add_argument("--seed", type=int)
    lv.add_argument("--alpha-mode", choices=("analytic", "fitted"), default="analytic")

    sc = sub.add_parser("sys-capacity", parents=[common], help="multicell SINR and rate statistics")
    sc.add_argument("--config", type=Path)
    sc.add_argument("--drops", type=int)
    sc.add_argument("--bits", help="e.g. 2,3,4,inf")
    sc.add_argument("--seed", type=int)
    sc.add_argument("--workers", type=int, default=1)

    pb = sub.add_parser("power-budget", parents=[common], help="front-end power table")
    pb.add_argument("--arch", choices=ARCH_CHOICES, default="all")
    pb.add_argument("--antennas", type=int, default=16)
    pb.add_argument("--bits", type=int)

    rp = sub.add_parser("replay", help="repeat a run from its manifest")
    rp.add_argument("manifest", type=Path)
    rp.add_argument("--out", type=Path, help="defaults to the manifest's directory")
    rp.add_argument("--json", action="store_true")
    return p


def _resolve(args) -> tuple[dict, dict]:
    """Turn parsed flags into (options, config snapshot)."""
    overrides = {}
    if args.command == "sys-capacity":
        if args.drops is not None:
            if args.drops < 1:
                raise UsageError("--drops must be >= 1")
            overrides["system.drops"] = args.drops
        if args.bits is not None:
            overrides["system.bits_list"] = _bits_arg(args.bits)
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
    if args.command in ("sys-capacity", "link-validate") and args.seed is not None:
        overrides["system.base_seed"] = args.seed
    if args.command == "power-budget":
        if args.antennas < 1:
            raise UsageError("--antennas must be >= 1")
        if args.bits is not None and not 1 <= args.bits <= 16:
            raise UsageError("--bits must lie in 1..16")
        return {"arch": args.arch, "antennas": args.antennas, "bits": args.bits}, {}

    sim, numerology = load_config(getattr(args, "config", None), overrides)
    snap = snapshot(sim, numerology)
    if args.command == "link-validate":
        if args.slots < 1:
            raise UsageError("--slots must be >= 1")
        opts = {
            "bits": [_bits_label(b) for b in _bits_arg(args.bits)],
            "snr": parse_snr_range(args.snr),
            "slots": args.slots,
            "seed": sim.base_seed,
            "alpha_mode": args.alpha_mode,
        }
        return opts, {"link": snap["link"]}
    opts = {"workers": args.workers, "seed": sim.base_seed, "drops": sim.drops,
            "bits": format_bits(sim.bits_list)}
    return opts, {"channel": snap["channel"], "system": snap["system"]}


def _typed(command, opts):
    """JSON options -> values the runners expect."""
    opts = dict(opts)
    if command == "link-validate":
        opts["bits"] = _bits_arg(",".join(str(b) for b in opts["bits"]))
    return opts


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            try:
                manifest = json.loads(args.manifest.read_text())
                command, opts, snap = manifest["subcommand"], manifest["options"], manifest["config"]
            except (OSError, ValueError, KeyError) as exc:
                raise UsageError(f"unreadable manifest {args.manifest}: {exc}") from None
            if command not in COMMANDS:
                raise UsageError(f"unknown subcommand {command!r} in manifest")
            out = args.out or args.manifest.parent
        else:
            command = args.command
            opts, snap = _resolve(args)
            out = args.out
        return execute(command, opts, snap, out, as_json=args.json)
    except (UsageError, ConfigError) as exc:
        print(f"quantbeam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuantbeamError as exc:
        print(f"quantbeam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
