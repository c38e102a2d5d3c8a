"""
cfstats command line.

    python main.py cf 7 --convergents 5
    python main.py class 12
    python main.py pell 61
    python main.py stats --sqrt 7 --out-csv output/sqrt7.csv
    python main.py sweep --min 5 --max 1000 --class-cap 8 --fundamental-only
    python main.py xsection --samples 10000 --seed 1
    python main.py kuzmin --n 15 --samples 1000000 --seed 7

Exit codes: 0 success, 2 invalid input, 3 I/O error.
"""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

import config
from forms_classes import (
    class_cycles,
    has_negative_pell,
    is_fundamental_discriminant,
    pell4_fundamental,
    regulator_from_pell,
    wide_class_number,
)
from gk_dynamics import digit_stats_frame, kuzmin_montecarlo, xsection_checks
from surd_core import InvalidInputError, cf_expand, convergents, surd_normalize
from sweep import SweepConfig, run_sweep, sqrt_stats
from sweep_records import SweepOutputError, write_histogram_csv

logger = logging.getLogger("cfstats-cli")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3


def _print(obj):
    print(json.dumps(obj, indent=2))


def _parse_surd(text: str):
    """'n' for sqrt(n), or 'p,q,d' for (p + sqrt d)/q."""
    try:
        parts = [int(v) for v in text.split(",")]
    except ValueError:
        raise InvalidInputError(f"cannot parse surd {text!r}: expected n or p,q,d") from None
    if len(parts) == 1:
        return surd_normalize(0, 1, parts[0])
    if len(parts) == 3:
        return surd_normalize(*parts)
    raise InvalidInputError(f"cannot parse surd {text!r}: expected n or p,q,d")


# ---------------------------------------------------------
# SUBCOMMANDS
# ---------------------------------------------------------
def cmd_cf(args) -> int:
    x = _parse_surd(args.x)
    e = cf_expand(x)
    out = {"x": x.to_json(), **e.to_json()}
    if args.convergents:
        out["convergents"] = [[str(p), str(q)] for p, q in convergents(e.digits(), args.convergents)]
    _print(out)
    return EXIT_OK


def cmd_class(args) -> int:
    cycles = class_cycles(args.d)
    h_plus = len(cycles)
    _print({
        "d": str(args.d),
        "fundamental": is_fundamental_discriminant(args.d),
        "h_plus": h_plus,
        "h_wide": wide_class_number(args.d, h_plus),
        "negative_pell": has_negative_pell(args.d),
        "cycles": [{"forms": c.to_json(), "root": c.root.to_json(), "period": list(c.period)}
                   for c in cycles],
    })
    return EXIT_OK


def cmd_pell(args) -> int:
    sol = pell4_fundamental(args.d)
    reg = regulator_from_pell(sol)
    _print({**sol.to_json(), "regulator": reg, "geodesic_length": 2.0 * reg})
    return EXIT_OK


def cmd_stats(args) -> int:
    result = sqrt_stats(args.sqrt, args.digit_cap)
    if args.out_csv:
        write_histogram_csv(args.out_csv, digit_stats_frame(result.stats))
    print(result.model_dump_json(indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    out_csv, out_jsonl = args.out_csv, args.out_jsonl
    if not out_csv and not out_jsonl:
        base = config.ensure_output_dir()
        out_csv = os.path.join(base, "sweep.csv")
        out_jsonl = os.path.join(base, "sweep.jsonl")
    cfg = SweepConfig(
        d_min=args.min, d_max=args.max,
        class_cap=args.class_cap, fundamental_only=args.fundamental_only,
        digit_cap=args.digit_cap, mode=args.mode,
        out_csv=out_csv, out_jsonl=out_jsonl,
        cache=args.cache, jobs=args.jobs, seed=args.seed,
    )
    summary = run_sweep(cfg)
    print(summary.model_dump_json(indent=2))
    return EXIT_OK


def cmd_xsection(args) -> int:
    report = xsection_checks(args.samples, args.seed, pairs=args.pairs,
                             pair_length=args.pair_length, orbit_length=args.orbit_length,
                             bins=args.bins)
    payload = report.model_dump_json(indent=2)
    if args.json:
        try:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(payload + "\n")
        except OSError as e:
            raise SweepOutputError(args.json, e) from e
    print(payload)
    return EXIT_OK


def cmd_kuzmin(args) -> int:
    stats = kuzmin_montecarlo(args.n, args.samples, args.seed, K=args.digit_cap)
    if args.out_csv:
        write_histogram_csv(args.out_csv, digit_stats_frame(stats))
    print(stats.model_dump_json(indent=2))
    return EXIT_OK


# ---------------------------------------------------------
# PARSER / ENTRY POINT
# ---------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfstats",
        description="Continued fractions of quadratic surds, form class cycles and Gauss-Kuzmin statistics.",
    )
    parser.add_argument("--log-level", default=None, help="overrides CFSTATS_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cf", help="continued fraction of sqrt(n) or (p + sqrt d)/q")
    p.add_argument("x", help="n or p,q,d")
    p.add_argument("--convergents", type=int, default=0)
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("class", help="reduced cycles and class numbers of discriminant d")
    p.add_argument("d", type=int)
    p.set_defaults(func=cmd_class)

    p = sub.add_parser("pell", help="fundamental solution of x^2 - d y^2 = 4 and the regulator")
    p.add_argument("d", type=int)
    p.set_defaults(func=cmd_pell)

    p = sub.add_parser("stats", help="digit statistics of sqrt(n)")
    p.add_argument("--sqrt", type=int, required=True)
    p.add_argument("--digit-cap", type=int, default=config.DIGIT_CAP)
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="class-number filtered sweep over a range of d")
    p.add_argument("--min", type=int, required=True)
    p.add_argument("--max", type=int, required=True)
    p.add_argument("--class-cap", type=int, default=config.CLASS_CAP)
    p.add_argument("--fundamental-only", action="store_true")
    p.add_argument("--digit-cap", type=int, default=config.DIGIT_CAP)
    p.add_argument("--mode", choices=["sqrt", "discriminant"], default="discriminant")
    p.add_argument("--out-csv")
    p.add_argument("--out-jsonl")
    p.add_argument("--cache", default=config.CACHE_PATH)
    p.add_argument("--jobs", type=int, default=config.JOBS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("xsection", help="measure checks of the cross-section map")
    p.add_argument("--samples", type=int, default=10 ** 4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--pair-length", type=int, default=50)
    p.add_argument("--orbit-length", type=int, default=10 ** 6)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--json")
    p.set_defaults(func=cmd_xsection)

    p = sub.add_parser("kuzmin", help="Monte Carlo histogram of the n-th digit")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--digit-cap", type=int, default=config.DIGIT_CAP)
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_kuzmin)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config.setup_logging(args.log_level)
    try:
        return args.func(args)
    except (InvalidInputError, ValidationError) as e:
        logger.error(f"❌ Invalid input: {e}")
        return EXIT_INVALID
    except OSError as e:
        logger.error(f"❌ I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
