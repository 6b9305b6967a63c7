"""Command line entry point: ``upbwit {enumerate,run,batch,report,validate}``.

Exit codes: 0 ok, 1 usage, 2 numerical fault, 3 partial batch failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .hermitian import BipartiteDims
from .tiles import TileLayout, build_state, enumerate_layouts, validate_state

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_PARTIAL = 0, 1, 2, 3
MAX_DIM = 12


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _dims(d1: int, d2: int) -> BipartiteDims:
    if not (3 <= d1 <= MAX_DIM and 3 <= d2 <= MAX_DIM):
        raise UsageError(f"dimensions must lie in 3..{MAX_DIM}, got {d1}x{d2}")
    return BipartiteDims(d1, d2)


def _layout(name: str) -> TileLayout:
    try:
        return TileLayout.parse(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config(args) -> harness.RunConfig:
    cfg = harness.load_config(args.config) if args.config else harness.RunConfig()
    if getattr(args, "dims", None):
        cfg = harness.dataclasses.replace(cfg, dims=tuple(args.dims))
    return cfg


def _outdir(args, cfg) -> Path:
    return Path(args.output or cfg.output_dir)


def cmd_enumerate(args) -> int:
    layouts = enumerate_layouts(_dims(args.d1, args.d2))
    for lay in layouts:
        print(lay.name)
    print(f"total: {len(layouts)}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    layout = _layout(args.layout)
    _dims(layout.dims.d1, layout.dims.d2)
    cfg = _config(args)
    outdir = _outdir(args, cfg)
    rec = harness.run_layout(layout, cfg, outdir, fresh=args.force)
    harness.merge_records(outdir / harness.MASTER_CSV, [rec])
    _print_record(rec)
    return EXIT_OK if rec.status == "ok" else EXIT_NUMERIC


def cmd_batch(args) -> int:
    cfg = _config(args)
    for d in cfg.dims:
        _dims(d, d)
    outdir = _outdir(args, cfg)
    records = harness.run_batch(cfg, outdir, parallel=args.parallel, force=args.force)
    for rec in records:
        _print_record(rec)
    rows = harness.read_records(outdir / harness.MASTER_CSV)
    ok = [r for r in rows if r["status"] == "ok"]
    valid = sum(r["gilbert_valid"] == "1" for r in ok)
    beats = sum(r["beats_bgr"] == "1" for r in ok)
    print(f"records={len(rows)} ok={len(ok)} valid_witnesses={valid} beats_bgr={beats}")
    return EXIT_OK if len(ok) == len(rows) else EXIT_PARTIAL


def cmd_report(args) -> int:
    csv_path = Path(args.csv)
    outdir = Path(args.output) if args.output else csv_path.parent
    try:
        text = harness.write_report(csv_path, outdir)
    except (FileNotFoundError, harness.ConfigError) as exc:
        print(f"report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.layouts:
        layouts = [_layout(n) for n in args.layouts]
    else:
        layouts = [lay for d in args.dims or (3,) for lay in enumerate_layouts(_dims(d, d))]
    rng = np.random.default_rng(args.seed)
    status = EXIT_OK
    for lay in layouts:
        rep = validate_state(build_state(lay), args.restarts, rng)
        overlap = "skipped" if rep.max_product_overlap is None else f"{rep.max_product_overlap:.6f}"
        print(
            f"{rep.name} rank={rep.rank} ppt_min_eig={rep.ppt_min_eigenvalue:.3e} "
            f"stopper_residual={rep.stopper_residual:.1e} tile_residual={rep.tile_residual:.1e} "
            f"max_product_overlap={overlap} {'ok' if rep.ok else 'FAIL'}"
        )
        if not rep.ok:
            status = EXIT_NUMERIC
    return status


def _print_record(rec) -> None:
    print(
        f"{rec.layout} area={rec.tile_area} corrections={rec.corrections} "
        f"final={rec.final_distance:.5f} extrapolated={rec.extrapolated_distance:.5f} "
        f"witness={rec.gilbert_witness_distance:.5f} bgr={rec.bgr_distance:.5f} "
        f"valid={rec.gilbert_valid} status={rec.status}"
    )


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="upbwit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    e = sub.add_parser("enumerate", help="list the layouts of a d1 x d2 family")
    e.add_argument("d1", type=int)
    e.add_argument("d2", type=int)
    e.set_defaults(func=cmd_enumerate)

    def common(sp):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--output", help="output directory (overrides config output_dir)")
        sp.add_argument("--force", action="store_true", help="recompute, discarding checkpoints")

    r = sub.add_parser("run", help="full pipeline for one layout, e.g. 3x3-2.2-2.2")
    r.add_argument("layout")
    common(r)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run every layout of the given dimensions")
    b.add_argument("--dims", type=int, nargs="+")
    b.add_argument("--parallel", type=int, default=1)
    common(b)
    b.set_defaults(func=cmd_batch)

    rp = sub.add_parser("report", help="plot tables and summary from a master CSV")
    rp.add_argument("csv")
    rp.add_argument("--output")
    rp.set_defaults(func=cmd_report)

    v = sub.add_parser("validate", help="structural checks of constructed states")
    v.add_argument("layouts", nargs="*")
    v.add_argument("--dims", type=int, nargs="+")
    v.add_argument("--restarts", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, harness.ConfigError, ValueError) as exc:
        print(f"upbwit: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
