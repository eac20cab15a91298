"""Command-line front end: ``xysurface run|threshold|hashing-bound|decode-one``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from contextlib import contextmanager

import numpy as np

from .decoder import METHODS, decode
from .errors import DecodeInfeasible, FitDegenerate, UsageError
from .harness import BatchResult, default_rounds, fit_threshold, run_grid
from .lattice import BOUNDARIES, PERIODIC, build_code
from .noise import NoiseParams, format_eta, hashing_bound, parse_eta
from .syndrome import FINAL_ROUND_PERFECT, PERIODIC_TIME, DefectSet

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_FIT = 4

RECORD_FIELDS = ["d", "boundary", "eta", "p", "q", "T", "trials",
                 "fail_spatial", "fail_temporal", "fail_either", "seed"]


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (both ends included), a comma list, or one number."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid {text!r} is not start:stop:step")
        start, stop, step = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise UsageError(f"grid {text!r} needs step > 0 and stop >= start")
        count = int(np.floor((stop - start) / step + 1e-12)) + 1
        values = [start + i * step for i in range(count)]
        if abs(values[-1] - stop) > 1e-12 and values[-1] + step - stop <= 1e-12:
            values.append(stop)
        return [round(v, 12) for v in values]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number in {text!r}") from exc


def parse_ints(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc
    if not out:
        raise UsageError("empty distance list")
    return out


def _eta_list(text: str) -> list[float]:
    return [parse_eta(x) for x in text.split(",") if x.strip()]


def _add_noise_flags(p: argparse.ArgumentParser, grid: bool = True):
    p.add_argument("--boundary", choices=BOUNDARIES, default=PERIODIC)
    p.add_argument("--eta", default="inf", help='bias; a number or "inf"')
    if grid:
        p.add_argument("--p", required=True, help="error rates, start:stop:step or a,b,c")
    else:
        p.add_argument("--p", type=float, required=True)
    q = p.add_mutually_exclusive_group()
    q.add_argument("--q", type=float, default=None, help="measurement error rate (default 0)")
    q.add_argument("--q-equals-p", action="store_true")
    p.add_argument("--rounds", type=int, default=None, help="rounds per trial (default d, or 1 if q = 0)")
    p.add_argument("--time-boundary", choices=(PERIODIC_TIME, FINAL_ROUND_PERFECT), default=PERIODIC_TIME)


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--d", required=True, help="code distances, comma separated")
    _add_noise_flags(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--output", default="-", help="file for per-cell records (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xysurface", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("run", help="Monte Carlo failure rates over a (d, p) grid"))
    th = sub.add_parser("threshold", help="run a grid, then fit the threshold")
    _add_run_flags(th)
    th.add_argument("--window", type=float, default=0.2, help="relative fit window around the crossing")

    hb = sub.add_parser("hashing-bound", help="zero-rate hashing bound of the biased channel")
    hb.add_argument("--eta", required=True, help='comma separated biases, "inf" allowed')

    one = sub.add_parser("decode-one", help="decode a defect dump and print the recovery")
    one.add_argument("--d", type=int, required=True)
    _add_noise_flags(one, grid=False)
    one.add_argument("--method", choices=METHODS, default="auto")
    one.add_argument("--input", default="-", help="defect dump file (default stdin)")
    return parser


@contextmanager
def _sink(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


class _Writer:
    def __init__(self, fh, fmt: str):
        self.fh = fh
        self.fmt = fmt
        self.csv = None
        if fmt == "csv":
            self.csv = csv.DictWriter(fh, fieldnames=RECORD_FIELDS, lineterminator="\n")
            self.csv.writeheader()

    def __call__(self, cell):
        rec = cell.record()
        if self.csv is not None:
            self.csv.writerow(rec)
        else:
            self.fh.write(json.dumps(rec) + "\n")
        self.fh.flush()


def _run_grid(args) -> BatchResult:
    ds = parse_ints(args.d)
    ps = parse_grid(args.p)
    eta = parse_eta(args.eta)
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    q = None if args.q_equals_p else (0.0 if args.q is None else args.q)
    # validate every cell before any trial runs
    for d in ds:
        build_code(d, args.boundary)
        for p in ps:
            NoiseParams(eta, p, p if q is None else q)
    if q == 0 and args.rounds not in (None, 1):
        raise UsageError("perfect measurements use a single round")
    with _sink(args.output) as fh:
        writer = _Writer(fh, args.format)
        return run_grid(ds, ps, args.boundary, eta, args.trials, args.seed, q=q, rounds=args.rounds,
                        workers=args.workers, method=args.method, progress=writer,
                        time_boundary=args.time_boundary)


def cmd_run(args) -> int:
    _run_grid(args)
    return 0


def cmd_threshold(args) -> int:
    results = _run_grid(args)
    distances = {c.config.d for c in results.cells}
    est = fit_threshold(results, window=args.window, jackknife=len(distances) >= 3)
    print(json.dumps(est.record()))
    return 0


def cmd_hashing_bound(args) -> int:
    for eta in _eta_list(args.eta):
        print(json.dumps({"eta": format_eta(eta), "p": hashing_bound(eta)}))
    return 0


def cmd_decode_one(args) -> int:
    layout = build_code(args.d, args.boundary)
    q = args.p if args.q_equals_p else (0.0 if args.q is None else args.q)
    params = NoiseParams(parse_eta(args.eta), args.p, q)
    T = args.rounds if args.rounds is not None else default_rounds(args.d, q)
    periodic_time = args.time_boundary == PERIODIC_TIME
    slices = T if periodic_time else T + 1
    text = sys.stdin.read() if args.input == "-" else open(args.input).read()
    defects = DefectSet.parse(text, layout, slices, periodic_time)
    plan = decode(defects, layout, params, method=args.method)
    for t, layer in enumerate(plan.layers):
        for q_idx, letter in layer.terms():
            r, c = divmod(q_idx, layout.d)
            print(f"face {r} {c} {letter}" + (f" t={t}" if len(plan.layers) > 1 else ""))
    for (r, c), rnd in sorted(plan.temporal):
        print(f"flip {r} {c} {rnd}")
    for i, cl in enumerate(plan.clusters):
        sites = " ".join(f"({d.t},{d.r},{d.c}{'*' if d.virtual else ''})" for d in cl.defects)
        print(f"# cluster {i} {cl.charge} x={len(cl.x_defects)} y={len(cl.y_defects)}: {sites}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "threshold": cmd_threshold,
    "hashing-bound": cmd_hashing_bound,
    "decode-one": cmd_decode_one,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"xysurface: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DecodeInfeasible as exc:
        print(f"xysurface: decode infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FitDegenerate as exc:
        print(f"xysurface: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except OSError as exc:
        print(f"xysurface: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
