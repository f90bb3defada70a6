"""Command-line interface: ``regen generate|verify|regenerate|predict|tables|bench``."""

import argparse
import json
import logging
import sys

from . import faultlab, pipeline, reliability
from .errors import RegenError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3

MAX_ATTEMPT_CAP = 1 << 20
MAX_ADVISED_BLOCK = 256

log = logging.getLogger("regen")


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    elif not args.quiet:
        print(text)


def cmd_generate(args):
    if args.block > MAX_ADVISED_BLOCK:
        log.warning("checksum blocks above %d bytes degrade Fletcher-16 error detection", MAX_ADVISED_BLOCK)
    geo = pipeline.generate(args.file, args.parity, args.block, force=args.force)
    payload = {
        "archive": args.file,
        "parity_blocks": geo.parity_blocks,
        "parity_block_len": geo.parity_block_len,
        "checksum_block_len": geo.checksum_block_len,
        "checksum_blocks": geo.total_checksum_blocks,
        "unprotected_tail": geo.tail_len,
        "regen_size": geo.regen_size,
    }
    text = (f"wrote {args.file}.sha256 and {args.file}.regen ({geo.regen_size} bytes): "
            f"{geo.parity_blocks} parity blocks of {geo.parity_block_len} B, "
            f"{geo.total_checksum_blocks} checksum blocks of {geo.checksum_block_len} B")
    if geo.tail_len:
        text += f"; last {geo.tail_len} B covered by the hash only"
    _emit(args, payload, text)
    return EXIT_OK


def cmd_verify(args):
    ok = pipeline.verify(args.file)
    _emit(args, {"archive": args.file, "match": ok},
          f"{args.file}: ok" if ok else f"{args.file}: corrupt (hash mismatch), run regenerate")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_regenerate(args):
    report = pipeline.regenerate(args.file, args.attempt_cap)
    d = report.as_dict()
    lines = [
        f"{args.file}: {report.outcome}",
        f"  mismatched checksum blocks: {report.mismatched_blocks}",
        f"  corrections found/applied/skipped: {report.corrections_found}/"
        f"{report.corrections_applied}/{report.corrections_skipped}",
        f"  combinations tried: {report.combinations_tried}",
    ]
    if report.failed_block_indexes:
        lines.append(f"  failed block indexes: {sorted(report.failed_block_indexes)}")
    if report.verified is None:
        lines.append("  no hash file; outcome based on block checks only")
    _emit(args, d, "\n".join(lines))
    return EXIT_FAIL if report.outcome == pipeline.PARTIAL_FAILURE else EXIT_OK


def cmd_predict(args):
    params = reliability.ReliabilityParams(args.d, args.p, args.c, args.q, args.n)
    pred = reliability.predict_reliability(params, args.mode)
    payload = {
        "checksum_collision": pred.checksum_collision,
        "parity_collision": pred.parity_collision,
        "recovery": pred.recovery,
        "raw_checksum_collision": pred.raw_checksum_collision,
        "raw_recovery": pred.raw_recovery,
        "saturated": pred.saturated,
        "redundant_bits": reliability.redundant_size(args.d, args.p, args.c, args.q),
    }
    text = (f"checksum collision: {pred.checksum_collision:.7f}\n"
            f"parity collision:   {pred.parity_collision:.7f}\n"
            f"recovery:           {pred.recovery:.7f}\n"
            f"redundant bits:     {payload['redundant_bits']}\n"
            f"{reliability.CAVEAT}")
    if pred.saturated:
        text += "\nwarning: a component saturated; raw values are outside [0, 1]"
    _emit(args, payload, text)
    return EXIT_OK


def cmd_tables(args):
    unknown = [t for t in args.tables if t not in reliability.TABLES]
    if unknown:
        raise ValueError(f"unknown table(s) {unknown}; choose from 1, 2, 3")
    for which in args.tables or ["1", "2", "3"]:
        out = reliability.emit_table(which, fmt=args.format)
        if args.json:
            print(json.dumps({"table": which, "text": out}))
        else:
            if args.format == "text":
                print(f"table {which}")
            sys.stdout.write(out)
    return EXIT_OK


def cmd_bench(args):
    if args.fault == faultlab.ZERO_REGION:
        spec = faultlab.FaultSpec(args.fault, offset=args.offset, length=args.length)
    else:
        spec = faultlab.FaultSpec(args.fault, n=args.n, b=args.b)
    config = faultlab.BenchConfig(args.size, args.parity, args.block, spec, args.trials,
                                  args.seed, args.attempt_cap, args.workers)
    result = faultlab.run_benchmark(config)
    if args.csv:
        sys.stdout.write(faultlab.results_csv([result]))
    else:
        _emit(args, {"successes": result.successes, "trials": len(result.trials), "rate": result.rate,
                     "mean_combinations": result.mean_combinations, "wall_time": result.wall_time,
                     "aborted": result.aborted},
              result.summary())
    if result.aborted:
        log.error("benchmark aborted: %s", result.aborted)
        return EXIT_IO
    return EXIT_OK


def _attempt_cap(text):
    value = int(text)
    if not 1 <= value <= MAX_ATTEMPT_CAP:
        raise argparse.ArgumentTypeError(f"attempt cap must be within 1..{MAX_ATTEMPT_CAP}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-q", "--quiet", action="store_true", help="exit status only")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="regen", description="Partial redundancy for archive files.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write .sha256 and .regen files")
    p.add_argument("file")
    p.add_argument("--parity", type=int, default=5, help="parity percentage, 1-100 (default 5)")
    p.add_argument("--block", type=int, default=64,
                   help="checksum block length in bytes (default 64; 128 suits archives of 1 GB and up)")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", parents=[common], help="compare the archive with its hash file")
    p.add_argument("file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("regenerate", parents=[common], help="repair the archive from its .regen file")
    p.add_argument("file")
    p.add_argument("--attempt-cap", type=_attempt_cap, default=pipeline.DEFAULT_ATTEMPT_CAP,
                   help="combinations tried per block (default 1023)")
    p.set_defaults(func=cmd_regenerate)

    p = sub.add_parser("predict", parents=[common], help="model recovery probability")
    p.add_argument("d", type=int, help="data bits")
    p.add_argument("p", type=int, help="parity blocks")
    p.add_argument("c", type=int, help="checksum blocks")
    p.add_argument("q", type=int, nargs="?", default=16, help="checksum bits (default 16)")
    p.add_argument("n", type=int, nargs="?", default=1000, help="bit errors (default 1000)")
    p.add_argument("--mode", choices=[reliability.BLOCK_BITS, reliability.PARITY_COUNT],
                   default=reliability.BLOCK_BITS,
                   help="parity collision denominator: parity block bits (default) or parity block count")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("tables", parents=[common], help="print the model tables")
    p.add_argument("tables", nargs="*", metavar="TABLE", help="1, 2 or 3 (default: all)")
    p.add_argument("--format", choices=["csv", "text"], default="text")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("bench", parents=[common], help="fault-injection recovery benchmark")
    p.add_argument("--size", type=int, default=1 << 20, help="archive bytes (default 1 MiB)")
    p.add_argument("--parity", type=int, default=10)
    p.add_argument("--block", type=int, default=64)
    p.add_argument("--fault", choices=faultlab.KINDS, default=faultlab.BIT)
    p.add_argument("--n", type=int, default=1000, help="error bits")
    p.add_argument("--b", type=int, default=1, help="burst count")
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--length", type=int, default=4096)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempt-cap", type=_attempt_cap, default=pipeline.DEFAULT_ATTEMPT_CAP)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except FileExistsError as exc:
        log.error("%s exists; pass --force to overwrite", exc)
        return EXIT_IO
    except (RegenError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
