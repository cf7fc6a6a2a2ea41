"""Command-line entry point: one subcommand per figure-style experiment.

Exit status is 0 on success, 2 on bad arguments or configuration and 3 when
any trial hit a numerical failure (singular solve, non-finite output).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import BER_SNR, BER_SPEED, BER_TO_AWGN, BER_TO_LTV, ExperimentConfig, apply_overrides, load_config
from .records import write_csv, write_sidecar
from .sweeps import (PULSE_DUMP_COLUMNS, dump_dd_spread, dump_pulse_response, run_sweep_records,
                     spread_centre, spread_leakage)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

COMMANDS = {
    "pulse-dump": "received pulse shapes for a few path delays",
    "dd-spread": "delay-Doppler spreading of a unit impulse",
    "nmse-snr": "channel-estimation NMSE against SNR",
    "ber-snr": "BER against SNR, perfect and estimated CSI",
    "ber-speed": "BER against relative speed at a fixed SNR",
    "ber-to": "BER against fractional timing offset",
}

DEFAULTS = {"ber-snr": BER_SNR, "nmse-snr": BER_SNR, "ber-speed": BER_SPEED, "ber-to": BER_TO_AWGN}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tflotfs", description="OTFS pulse-shape link simulator")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="JSON config file (defaults per subcommand)")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--pulse", choices=("rc", "tfl"), help="run a single pulse shape")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set one config field (repeatable)")
        p.add_argument("--workers", type=int, help="worker processes (default: env TFLOTFS_WORKERS or CPU count)")
        if name == "ber-to":
            p.add_argument("--channel", choices=("awgn", "ltv", "both"), default="both")
    return ap


def resolve_config(args, base: ExperimentConfig) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else base
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.pulse:
        cfg = cfg.replace(pulses=(args.pulse,))
    return apply_overrides(cfg, args.override)


def _sweep(cfg, kind, out: Path, stem: str, workers, nmse_only=False) -> int:
    res = run_sweep_records(cfg, kind, workers)
    records = res.nmse if nmse_only else res.records
    csv_path = write_csv(records, out / f"{stem}.csv")
    write_sidecar(records, out / f"{stem}.json", cfg.to_dict(), res.failures,
                  {"config_hash": cfg.hash(), "trials": res.outcome.trials})
    print(f"wrote {csv_path} ({len(records)} records, {res.outcome.trials} trials)")
    for f in res.failures:
        print(f"numerical failure: {f}", file=sys.stderr)
    return EXIT_NUMERICAL if res.failures else EXIT_OK


def _pulse_dump(cfg, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "pulse_response.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PULSE_DUMP_COLUMNS)
        for pulse, tau, kind, t, v in dump_pulse_response(cfg):
            w.writerow([pulse, repr(tau), kind, repr(t), repr(v)])
    print(f"wrote {path}")
    return EXIT_OK


def _dd_spread(cfg, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    centre = spread_centre(cfg)
    summary = [("pulse", "leakage_outside_3_delay_bins")]
    for label, Z in dump_dd_spread(cfg).items():
        path = out / f"dd_spread_{label}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["m"] + [f"n{n}" for n in range(Z.shape[1])])
            for m, row in enumerate(Z):
                w.writerow([m] + [repr(float(v)) for v in row])
        summary.append((label, repr(spread_leakage(Z, centre))))
    with open(out / "dd_spread_summary.csv", "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(summary)
    print(f"wrote {len(summary) - 1} grids to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    try:
        cmd = args.command
        if cmd == "ber-to":
            runs = {"awgn": BER_TO_AWGN, "ltv": BER_TO_LTV}
            chosen = runs if args.channel == "both" else {args.channel: runs[args.channel]}
            cfgs = {k: resolve_config(args, base) for k, base in chosen.items()}
        else:
            cfg = resolve_config(args, DEFAULTS.get(cmd, ExperimentConfig()))
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = args.out
    if cmd == "pulse-dump":
        return _pulse_dump(cfg, out)
    if cmd == "dd-spread":
        return _dd_spread(cfg, out)
    if cmd == "nmse-snr":
        return _sweep(cfg, "snr", out, "nmse_snr", args.workers, nmse_only=True)
    if cmd == "ber-snr":
        return _sweep(cfg, "snr", out, "ber_snr", args.workers)
    if cmd == "ber-speed":
        return _sweep(cfg, "speed", out, "ber_speed", args.workers)
    status = EXIT_OK
    for kind, c in cfgs.items():
        status = max(status, _sweep(c, "to", out, f"ber_to_{kind}", args.workers))
    return status


if __name__ == "__main__":
    sys.exit(main())
