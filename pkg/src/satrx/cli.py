"""Command-line entry point ``satrx``.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from pathlib import Path

import numpy as np

from satrx import __version__
from satrx.antenna import PatternFileError, build_pattern, channel_matrix, noise_correlation
from satrx.complexity import (
    TABLE_I,
    TABLE_I_SNR,
    TABLE_II,
    TABLE_II_SNR,
    c_jml,
    complexity_table,
)
from satrx.config import (
    ConfigError,
    ConfigModel,
    config_digest,
    dump_config,
    parse_config,
    parse_config_data,
    to_scenario,
    to_sim_config,
)
from satrx.montecarlo import run_ber_sweep
from satrx.output import RunManifest, emit_results

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("satrx")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _load(path) -> ConfigModel:
    return ConfigModel() if path is None else parse_config(path)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# --------------------------------------------------------------------------
# subcommands


def cmd_sweep(args) -> int:
    model = _load(args.config)
    overrides = {
        "snr_db": args.snr_db,
        "frames_per_point": args.frames_per_point,
        "min_bit_errors": args.min_bit_errors,
        "pointing_error_deg": args.pointing_error_deg,
    }
    data = model.model_dump()
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed is not None:
        data["seed"] = args.seed
    model = parse_config_data(data)
    sim = to_sim_config(model)

    start = time.perf_counter()
    points = run_ber_sweep(sim, workers=args.workers)
    elapsed = time.perf_counter() - start

    if args.config is not None:
        digest = config_digest(args.config)
    else:
        digest = hashlib.sha256(dump_config(ConfigModel()).encode()).hexdigest()
    manifest = RunManifest(
        config=model.model_dump(mode="json"),
        version=__version__,
        config_digest=digest,
        wall_clock_s=round(elapsed, 3),
        workers=args.workers,
    )
    paths = emit_results(points, manifest, args.out)
    for p in points:
        print(f"{p.detector:>20s} {p.snr_db:6.1f} dB  BER {p.ber:.3e}  ({p.bit_errors}/{p.bits}, {p.frames} frames)")
    print(f"wrote {', '.join(str(v) for v in paths.values())}")
    return EXIT_OK


def _table_rows(modulation: str):
    if modulation == "8psk":
        return TABLE_I, TABLE_I_SNR, 8
    return TABLE_II, TABLE_II_SNR, 16


def cmd_complexity(args) -> int:
    table, snrs, k = _table_rows(args.modulation)
    start = time.perf_counter()
    rows = complexity_table(list(table), m=3, n=5, k=k, group_sizes=(3, 2), list_size=8)
    header = "config   C_nominal      C_JML   C_RC%  C_save_exact%  C_save_approx%  published_C_save%  published_C_RC%"
    print(f"{args.modulation}: M=3, N=5, K={k}, groups (3,2), L=8, L_v=L, R=0")
    print(header)
    for row in rows:
        ps, prc = table[row.iterations]
        print(
            f"{row.label:<7s}{row.c_nominal:>11d}{row.c_jml:>11d}{row.c_rc:>8.1f}"
            f"{row.c_save_exact:>15.1f}{row.c_save_approx:>16.1f}{ps:>19.1f}{prc:>17.1f}"
        )
    if args.ledger:
        _ledgered_report(args, table, snrs, k)
    log.info("complexity table in %.3f s", time.perf_counter() - start)
    return EXIT_OK


def _ledgered_report(args, table, snrs, k):
    from satrx.detectors import LgsdConfig
    from satrx.montecarlo import DetectorKind, DetectorSpec, SimConfig, measure_ledger

    sim = SimConfig(modulation=args.modulation, symbols_per_frame=args.symbols, seed=args.seed)
    jml = c_jml(3, 5, k)
    print()
    print(f"ledgered runs: {args.symbols} symbols per set at the tabulated SNR, seed {args.seed}")
    print("config    SNR   C_RC%  mean L_v per GLO iteration (group1/group2)         mean R")
    for it in table:
        spec = DetectorSpec("ledger", DetectorKind.RC_LGSD, "sinr", LgsdConfig(iglb=it[0], ible=it[1], iglo=it[2]))
        led = measure_ledger(sim, spec, snrs[it])
        n = led.detections
        rc = 100.0 * led.total / n / jml
        per_iter = []
        for g in led.per_iteration_lv:
            for lv in g:
                per_iter.append("/".join(f"{v / n:.1f}" for v in lv))
        mean_r = sum(led.sort_unique_r) / len(led.sort_unique_r) / n
        label = "/".join(map(str, it))
        print(f"{label:<8s}{snrs[it]:5.1f}{rc:8.1f}  {' '.join(per_iter):<50s}{mean_r:6.1f}")


def cmd_scenario_validate(args) -> int:
    model = _load(args.config)
    scenario = to_scenario(model.scenario)
    pattern = build_pattern(scenario)
    a = channel_matrix(pattern, scenario)
    knn = noise_correlation(pattern)
    rank = np.linalg.matrix_rank(a)
    if rank < scenario.m:
        print(f"channel matrix has rank {rank} < {scenario.m}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"scenario ok: N={scenario.n} satellites, M={scenario.m} LNBs, rank(A)={rank}")
    np.set_printoptions(precision=4, suppress=True)
    print("|A| =")
    print(np.abs(a))
    print("K_nn =")
    print(knn.real if np.allclose(knn.imag, 0) else knn)
    if args.dump:
        print(dump_config(model), end="")
    return EXIT_OK


def cmd_pattern_export(args) -> int:
    model = _load(args.config)
    scenario = to_scenario(model.scenario)
    pattern = build_pattern(scenario)
    from satrx.antenna import export_pattern

    path = export_pattern(pattern, args.out, step=args.step)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from satrx.selftest import run_selftest

    report = run_selftest(args.instances, args.seed)
    for line in report.lines:
        print(line)
    return EXIT_OK if report.passed else EXIT_NUMERIC


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="satrx", description="Overloaded satellite receiver simulator")
    p.add_argument("--version", action="version", version=f"satrx {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("sweep", help="BER against SNR for the configured detectors")
    s.add_argument("--config", type=Path, help="JSON scenario file (defaults if omitted)")
    s.add_argument("--seed", type=int, help="master seed (required unless in the file)")
    s.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    s.add_argument("--workers", type=int, default=1, help="worker processes")
    s.add_argument("--snr-db", type=_float_list, help="comma-separated SNR grid in dB")
    s.add_argument("--frames-per-point", type=int)
    s.add_argument("--min-bit-errors", type=int)
    s.add_argument("--pointing-error-deg", type=float)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("complexity", help="complexity tables of the list detector")
    c.add_argument("--modulation", choices=("8psk", "16apsk"), required=True)
    c.add_argument("--ledger", action="store_true", help="also run the detector and report counted L_v")
    c.add_argument("--symbols", type=int, default=200, help="symbols per ledgered run")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_complexity)

    sc = sub.add_parser("scenario", help="scenario utilities")
    scs = sc.add_subparsers(dest="action", parser_class=_Parser)
    v = scs.add_parser("validate", help="check a scenario file and print A and K_nn")
    v.add_argument("--config", type=Path)
    v.add_argument("--dump", action="store_true", help="print the resolved configuration")
    v.set_defaults(func=cmd_scenario_validate)

    pt = sub.add_parser("pattern", help="radiation pattern utilities")
    pts = pt.add_subparsers(dest="action", parser_class=_Parser)
    e = pts.add_parser("export", help="write the scenario's patterns as CSV")
    e.add_argument("--config", type=Path)
    e.add_argument("--out", type=Path, required=True)
    e.add_argument("--step", type=int, default=16, help="keep every n-th grid sample")
    e.set_defaults(func=cmd_pattern_export)

    t = sub.add_parser("selftest", help="oracle equivalence checks")
    t.add_argument("--instances", type=int, default=200)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(parser.format_usage(), end="", file=sys.stderr)
        print(err, file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "func", None) is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "workers", 1) < 1:
        print("satrx: error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, PatternFileError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, OverflowError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        # scenario-level inconsistencies surfaced while building the link
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
