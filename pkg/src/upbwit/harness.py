"""Per-state pipeline, batch orchestration and report tables."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import gilbert
from .decay import fit_decay
from .hermitian import BipartiteDims, make_rng
from .tiles import TileLayout, build_state, enumerate_layouts, validate_state
from .witness import bgr_witness, gilbert_witness

log = logging.getLogger(__name__)

# correction budgets per local dimension used in the original study
DEFAULT_CORRECTIONS = {3: 25100, 4: 4000, 5: 4000, 6: 3500}
FALLBACK_CORRECTIONS = 4000
SANDWICH_SLACK = 1e-9
MASTER_CSV = "results.csv"

COLUMNS = [
    "layout",
    "tile_area",
    "corrections",
    "final_distance",
    "extrapolated_distance",
    "gilbert_witness_distance",
    "bgr_distance",
    "gilbert_valid",
    "beats_bgr",
    "seed",
    "seconds",
    # decay-fit report and bookkeeping
    "a",
    "sqrt_a",
    "b",
    "r",
    "classification",
    "sandwich_ok",
    "status",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dims: tuple[int, ...] = (3, 4, 5, 6)
    corrections: dict[int, int] | int = dataclasses.field(
        default_factory=lambda: dict(DEFAULT_CORRECTIONS)
    )
    trials: int = 10**8
    seconds: float = math.inf
    log_every: int = 50
    seesaw_iters: int = 200
    lambda_restarts: int = 200
    real_only: bool = True
    seed: int = 2024
    output_dir: str = "results"
    checkpoint_every: int = 1000

    def corrections_for(self, d: int) -> int:
        if isinstance(self.corrections, int):
            return self.corrections
        return self.corrections.get(d, FALLBACK_CORRECTIONS)

    def gilbert_config(self, layout: TileLayout, seed: int) -> gilbert.GilbertConfig:
        d = max(layout.dims.d1, layout.dims.d2)
        return gilbert.GilbertConfig(
            max_corrections=self.corrections_for(d),
            max_trials=self.trials,
            max_seconds=self.seconds,
            log_every=self.log_every,
            seesaw_iters=self.seesaw_iters,
            real_only=self.real_only,
            seed=seed,
        )


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_corrections(v: str):
    v = v.strip()
    if ":" not in v:
        return int(v)
    out = {}
    for item in v.split(","):
        d, n = item.split(":")
        out[int(d)] = int(n)
    return out


_PARSERS = {
    "dims": lambda v: tuple(int(x) for x in v.replace(",", " ").split()),
    "corrections": _parse_corrections,
    "trials": int,
    "seconds": float,
    "log_every": int,
    "seesaw_iters": int,
    "lambda_restarts": int,
    "real_only": _parse_bool,
    "seed": int,
    "output_dir": str.strip,
    "checkpoint_every": int,
}


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    cfg = RunConfig(**values)
    if any(d < 3 for d in cfg.dims) or cfg.lambda_restarts < 1 or cfg.seesaw_iters < 1:
        raise ConfigError("dims must be >= 3 and restart/iteration counts positive")
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def derive_seed(master: int, name: str) -> int:
    """Per-state seed: master seed XOR a stable 64-bit hash of the layout name."""
    h = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")
    return (master ^ h) & (2**64 - 1)


@dataclass
class ExperimentRecord:
    layout: str
    tile_area: int
    corrections: int = 0
    final_distance: float = math.nan
    extrapolated_distance: float = math.nan
    gilbert_witness_distance: float = math.nan
    bgr_distance: float = math.nan
    gilbert_valid: bool = False
    beats_bgr: bool = False
    seed: int = 0
    seconds: float = 0.0
    a: float = math.nan
    sqrt_a: float = math.nan
    b: float = math.nan
    r: float = math.nan
    classification: str = ""
    sandwich_ok: bool = False
    status: str = "ok"

    def row(self) -> dict:
        out = {}
        for k in COLUMNS:
            v = getattr(self, k)
            if isinstance(v, bool):
                v = int(v)
            elif isinstance(v, float) and k != "seconds":
                v = repr(v)
            elif k == "seconds":
                v = f"{v:.2f}"
            out[k] = v
        return out


def sandwich_holds(final: float, extrapolated: float, witness: float, valid: bool) -> bool:
    if not final >= extrapolated - SANDWICH_SLACK:
        return False
    return (not valid) or extrapolated >= witness - SANDWICH_SLACK


def run_layout(layout: TileLayout, cfg: RunConfig, outdir, fresh: bool = False) -> ExperimentRecord:
    """Full pipeline for one state; writes the per-state artifacts into ``outdir``.

    An existing checkpoint is resumed unless ``fresh``.  Faults are caught
    and reported through ``status``; the record keeps whatever was computed
    before the fault.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = layout.name
    seed = derive_seed(cfg.seed, name)
    rec = ExperimentRecord(name, layout.central_area, seed=seed)
    t0 = time.monotonic()
    if fresh:
        (outdir / f"{name}.ckpt").unlink(missing_ok=True)
    try:
        _pipeline(layout, cfg, outdir, seed, rec)
    except Exception as exc:  # noqa: BLE001 - recorded in the status column
        log.exception("pipeline failed for %s", name)
        rec.status = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    rec.seconds = time.monotonic() - t0
    return rec


def _pipeline(layout, cfg, outdir, seed, rec):
    name = layout.name
    dims = layout.dims
    state = build_state(layout)
    report = validate_state(state, cfg.lambda_restarts, make_rng([seed, 2]))
    if not report.ok:
        raise gilbert.NumericalFault(f"state {name} failed validation: {report}")

    gcfg = cfg.gilbert_config(layout, seed)
    ckpt = outdir / f"{name}.ckpt"
    resume = None
    if ckpt.exists():
        resume, _ = gilbert.checkpoint_load(ckpt, state.rho)
        log.info("%s: resuming from %d corrections", name, resume.trace.corrections_done)

    def on_log(st):
        if st.trace.corrections_done % cfg.checkpoint_every == 0:
            gilbert.checkpoint_save(st, ckpt, name)

    gs = gilbert.run(state.rho, dims, gcfg, state=resume, on_log=on_log)
    gilbert.checkpoint_save(gs, ckpt, name)
    gs.trace.to_csv(outdir / f"{name}.trace.csv")
    rec.corrections = gs.trace.corrections_done
    rec.final_distance = gs.distance

    fit = fit_decay(gs.trace)
    rec.a, rec.sqrt_a, rec.b, rec.r = fit.a, fit.sqrt_a, fit.b, fit.r
    rec.extrapolated_distance = fit.sqrt_a
    rec.classification = fit.classification

    wrng = make_rng([seed, 1])
    gw = gilbert_witness(state.rho, gs.rho1, dims, cfg.lambda_restarts, wrng)
    bw = bgr_witness(state, cfg.lambda_restarts, wrng)
    gw.save(outdir / f"{name}.gilbert.witness", name, seed)
    bw.save(outdir / f"{name}.bgr.witness", name, seed)
    rec.gilbert_witness_distance = gw.hyperplane_distance
    rec.bgr_distance = bw.hyperplane_distance
    rec.gilbert_valid = gw.valid
    rec.beats_bgr = gw.valid and gw.hyperplane_distance > bw.hyperplane_distance
    rec.sandwich_ok = sandwich_holds(
        rec.final_distance, rec.extrapolated_distance, rec.gilbert_witness_distance, gw.valid
    )


# -- master CSV ------------------------------------------------------------


def _sort_key(row):
    lay = TileLayout.parse(row["layout"])
    return (lay.dims.d1, lay.dims.d2, int(row["tile_area"]), row["layout"])


def read_records(path) -> list[dict]:
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_records(path, rows: list[dict]) -> None:
    rows = sorted(rows, key=_sort_key)
    tmp = Path(path).with_suffix(".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    tmp.replace(path)


def merge_records(path, records: list[ExperimentRecord]) -> None:
    rows = {r["layout"]: r for r in read_records(path)}
    for rec in records:
        rows[rec.layout] = rec.row()
    write_records(path, list(rows.values()))


def _run_one(args):
    layout_name, cfg, outdir, fresh = args
    return run_layout(TileLayout.parse(layout_name), cfg, outdir, fresh)


def run_batch(cfg: RunConfig, outdir, parallel: int = 1, force: bool = False) -> list[ExperimentRecord]:
    """Run every layout of every dimension in ``cfg.dims``.

    Layouts with an ``ok`` record in the master CSV are skipped unless
    ``force``.  Only this process writes the master CSV.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    master = outdir / MASTER_CSV
    done = {r["layout"] for r in read_records(master) if r.get("status") == "ok"}
    todo = []
    for d in cfg.dims:
        for layout in enumerate_layouts(BipartiteDims(d, d)):
            if force or layout.name not in done:
                todo.append(layout.name)
    jobs = [(name, cfg, outdir, force) for name in todo]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(job) for job in jobs]
    merge_records(master, records)
    return records


# -- report ----------------------------------------------------------------

REPORT_COLUMNS = ("layout", "tile_area", "final_distance", "extrapolated_distance",
                  "gilbert_witness_distance", "bgr_distance", "gilbert_valid", "status")


def write_report(csv_path, outdir) -> str:
    """Per-dimension plot tables ``fig2_<d1>x<d2>.dat`` and ``summary.txt``.

    Returns the summary text.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = Path(csv_path)
    if not path.exists():
        raise FileNotFoundError(f"no such CSV: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        rows = list(reader)
    if fields:
        missing = [c for c in REPORT_COLUMNS if c not in fields]
        if missing:
            raise ConfigError(f"{path}: missing columns {', '.join(missing)}")

    groups: dict[str, list[dict]] = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        lay = TileLayout.parse(row["layout"])
        groups.setdefault(f"{lay.dims.d1}x{lay.dims.d2}", []).append(row)

    lines = []
    for key in sorted(groups, key=lambda k: tuple(int(x) for x in k.split("x"))):
        group = sorted(groups[key], key=lambda r: (int(r["tile_area"]), r["layout"]))
        with open(outdir / f"fig2_{key}.dat", "w") as fh:
            fh.write("# tile_area blue green black red\n")
            for r in group:
                fh.write(" ".join([r["tile_area"], r["final_distance"], r["extrapolated_distance"],
                                   r["gilbert_witness_distance"], r["bgr_distance"]]) + "\n")
        valid = [r for r in group if r["gilbert_valid"] == "1"]
        bgr_wins = sum(float(r["bgr_distance"]) >= float(r["gilbert_witness_distance"]) for r in valid)
        violations = [
            r["layout"]
            for r in group
            if not sandwich_holds(float(r["final_distance"]), float(r["extrapolated_distance"]),
                                  float(r["gilbert_witness_distance"]), r["gilbert_valid"] == "1")
        ]
        entangled = sum(float(r["extrapolated_distance"]) ** 2 > 1e-5 for r in group)
        lines.append(
            f"{key}: states={len(group)} valid_witnesses={len(valid)} "
            f"bgr_at_least_gilbert={bgr_wins} entangled={entangled} "
            f"sandwich_violations={len(violations)}"
            + (f" [{' '.join(violations)}]" if violations else "")
        )
    failed = [r["layout"] for r in rows if r["status"] != "ok"]
    if failed:
        lines.append(f"failed: {' '.join(failed)}")
    text = "\n".join(lines) + ("\n" if lines else "")
    (outdir / "summary.txt").write_text(text)
    return text
