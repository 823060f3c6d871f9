"""Command-line front end: ``widescan <subcommand> --config run.yaml [--out DIR]``.

Subcommands
-----------
gen-fixture   write the configured synthetic coupling and patterns as
              Touchstone and pattern-grid files
baseline      linear-phase (STD) excitations and metrics per scan direction
synthesize    per-direction MOEA runs, trade-off selection and FoV comparison
fov           recompute FoV masks from an emitted summary.csv
report        psi, zeta, SLL, gain and pointing error for STD and the
              synthesised excitation at selected scan indices

Exit codes: 0 success, 1 configuration, 2 ingestion, 3 synthesis failure.
Scan indices ``q`` are 1-based in every file and on the command line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .array_model import power_density, reflected_power_fraction, to_db
from .baseline import ScanGrid, std_weights
from .config import RunConfig, load_config
from .errors import ConfigError, CoverageError, DimensionError, IngestError, SweepError, WidescanError
from .fixtures import TouchstoneDocument, emit_pattern_grid, emit_touchstone
from .synthesis import (
    EvalGrid,
    beam_metrics,
    fov,
    phi_rad,
    phi_refl,
    std_point,
    sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_INGEST, EXIT_SYNTHESIS = 0, 1, 2, 3
AUDIT_RTOL = 1e-9


class AuditError(WidescanError):
    """An emitted number could not be reproduced from the emitted excitations."""


# ---------------------------------------------------------------- formatting


def fmt(x) -> str:
    """Shortest round-tripping text for a float (``inf``/``nan`` spelled out)."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _db(x) -> float:
    with np.errstate(divide="ignore"):
        return float(to_db(x))


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    path.write_text(buf.getvalue())


def read_csv(path: Path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _excitation_columns(n):
    return [f"mag_{i}" for i in range(1, n + 1)] + [f"phase_deg_{i}" for i in range(1, n + 1)]


def _excitation_values(w):
    w = np.asarray(w)
    return list(np.abs(w)) + list(np.rad2deg(np.angle(w)))


def _excitation_from_row(row, n):
    mag = np.array([float(row[f"mag_{i}"]) for i in range(1, n + 1)])
    ph = np.array([float(row[f"phase_deg_{i}"]) for i in range(1, n + 1)])
    return mag * np.exp(1j * np.deg2rad(ph))


def _out_dir(cfg: RunConfig, args) -> Path:
    out = Path(args.out) if args.out else cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _close(a, b, rtol=AUDIT_RTOL):
    if math.isinf(a) or math.isinf(b) or math.isnan(a) or math.isnan(b):
        return (a == b) or (math.isnan(a) and math.isnan(b))
    return abs(a - b) <= rtol * max(abs(a), abs(b)) or abs(a - b) <= 1e-300


# ---------------------------------------------------------------- subcommands


def cmd_gen_fixture(cfg: RunConfig, out: Path) -> list[Path]:
    """Write ``array.sNp`` and ``patterns.csv`` for the configured synthetic sources."""
    geometry = cfg.build_geometry()
    S = cfg.build_coupling(geometry)
    patterns = cfg.build_patterns(geometry)
    n = geometry.n_elements
    doc = TouchstoneDocument.from_matrices(S, cfg.frequency_hz, fmt="RI", freq_unit="HZ")
    ts_path = out / f"array.s{n}p"
    ts_path.write_text(emit_touchstone(doc))
    pat_path = out / "patterns.csv"
    pat_path.write_text(emit_pattern_grid(patterns))
    return [ts_path, pat_path]


def cmd_baseline(cfg: RunConfig, out: Path) -> Path:
    model = cfg.build_model()
    grid = cfg.scan.build()
    n = model.n_elements
    ws = [std_weights(model.geometry, d, scan_index=q) for q, d in enumerate(grid.directions)]
    psi = np.array([power_density(model, w, *d) for w, d in zip(ws, grid.directions)])
    zeta = np.array([reflected_power_fraction(model.S, w) for w in ws])
    region = fov(grid, psi, zeta, cfg.fov.build())
    in_fov = np.zeros(grid.size, bool)
    in_fov[list(region.members)] = True
    header = ["q", "theta_q", "phi_q", "psi_scan_wsr", "psi_scan_dbwsr", "zeta", "in_fov"]
    header += [f"phase_deg_{i}" for i in range(1, n + 1)]
    rows = []
    for q, (d, w) in enumerate(zip(grid.directions, ws)):
        rows.append([q + 1, d[0], d[1], psi[q], _db(psi[q]), zeta[q], bool(in_fov[q]), *w.phases_deg])
    path = out / "baseline.csv"
    write_csv(path, header, rows)
    return path


SUMMARY_HEADER = [
    "q",
    "theta_q",
    "phi_q",
    "psi_std_wsr",
    "psi_std_dbwsr",
    "zeta_std",
    "mask_std",
    "in_fov_std",
    "psi_po_wsr",
    "psi_po_dbwsr",
    "zeta_po",
    "mask_po",
    "in_fov_po",
    "delta_zeta",
    "fallback",
    "failed",
]


def cmd_synthesize(cfg: RunConfig, out: Path, audit=False) -> dict:
    model = cfg.build_model()
    grid = cfg.scan.build()
    n = model.n_elements
    t0 = time.perf_counter()
    result = sweep(
        model,
        grid,
        cfg.feasibility.build(),
        cfg.moea.build(),
        tuple(cfg.moea.eps),
        cfg.fov.build(),
        cfg.selection.criterion,
        cfg.selection.tau,
        workers=int(cfg.workers),
        warm_start=bool(cfg.warm_start),
    )
    runtime = time.perf_counter() - t0
    rep = result.fov

    archive_dir = out / "archive"
    archive_dir.mkdir(exist_ok=True)
    width = max(3, len(str(grid.size)))
    arch_header = ["q", "phi_refl", "phi_rad", *_excitation_columns(n)]
    sel_header = ["q", "theta_q", "phi_q", "fallback", "phi_refl", "phi_rad", *_excitation_columns(n)]
    sel_rows, sum_rows = [], []
    in_std = np.zeros(grid.size, bool)
    in_std[list(rep.std.members)] = True
    in_po = np.zeros(grid.size, bool)
    in_po[list(rep.po.members)] = True
    for q, scan in enumerate(result.scans):
        d = grid.directions[q]
        if scan is None:
            psi_s, zeta_s = std_point(model, d)
            sum_rows.append(
                [q + 1, d[0], d[1], psi_s, _db(psi_s), zeta_s, bool(rep.std.mask[q]), bool(in_std[q]),
                 math.nan, math.nan, math.nan, False, False, math.nan, False, True]
            )
            continue
        rows = []
        for m, w in zip(scan.archive.members, scan.archive_excitations):
            rows.append([q + 1, m.f[0], m.f[1], *_excitation_values(w)])
        write_csv(archive_dir / f"archive_q{q + 1:0{width}d}.csv", arch_header, rows)
        sel_rows.append([q + 1, d[0], d[1], scan.fallback, *scan.selected_objectives, *_excitation_values(scan.selected.w_plus)])
        sum_rows.append(
            [q + 1, d[0], d[1], scan.psi_std, _db(scan.psi_std), scan.zeta_std, bool(rep.std.mask[q]), bool(in_std[q]),
             scan.psi_po, _db(scan.psi_po), scan.zeta_po, bool(rep.po.mask[q]), bool(in_po[q]),
             scan.zeta_std - scan.zeta_po, scan.fallback, False]
        )
    write_csv(out / "selected.csv", sel_header, sel_rows)
    write_csv(out / "summary.csv", SUMMARY_HEADER, sum_rows)

    report = {
        "alpha_fov_std": rep.std.alpha,
        "alpha_fov_po": rep.po.alpha,
        "delta_alpha_fov": rep.delta_alpha,
        "delta_zeta_max": None if math.isnan(rep.delta_zeta_max) else rep.delta_zeta_max,
        "q_fov_std": rep.std.q_fov,
        "q_fov_po": rep.po.q_fov,
        "q_total": grid.size,
        "psi_th_wsr": rep.psi_th,
        "zeta_th": rep.zeta_th,
        "boresight_q": grid.boresight + 1,
        "boresight_feasible_std": rep.std.boresight_feasible,
        "boresight_feasible_po": rep.po.boresight_feasible,
        "fallback_count": int(sum(1 for s in result.scans if s is not None and s.fallback)),
        "seed": int(cfg.moea.seed),
        "failures": {str(q + 1): repr(exc) for q, exc in sorted(result.failures.items())},
        "runtime_s": runtime,
        "config": cfg.to_dict(),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if audit:
        audit_run(cfg, out, model)
    if result.failures:
        raise SweepError(result.failures)
    return report


def audit_run(cfg: RunConfig, out: Path, model=None) -> int:
    """Recompute every objective in the archive and selected CSVs from their excitations.

    Returns the number of rows checked; raises :class:`AuditError` on the
    first mismatch beyond ``1e-9`` relative.
    """
    model = model or cfg.build_model()
    grid = cfg.scan.build()
    n = model.n_elements
    checked = 0
    files = sorted((out / "archive").glob("archive_q*.csv")) + [out / "selected.csv"]
    for path in files:
        for row in read_csv(path):
            q = int(row["q"]) - 1
            d = tuple(grid.directions[q])
            w = _excitation_from_row(row, n)
            got = (phi_refl(model, w), phi_rad(model, w, d))
            want = (float(row["phi_refl"]), float(row["phi_rad"]))
            for name, g, e in zip(("phi_refl", "phi_rad"), got, want):
                if not _close(g, e):
                    raise AuditError(f"{path.name} q={q + 1}: {name} recomputed {g!r}, file has {e!r}")
            checked += 1
    summary = out / "summary.csv"
    if summary.exists():
        sel = {int(r["q"]): r for r in read_csv(out / "selected.csv")}
        for row in read_csv(summary):
            q = int(row["q"])
            if q not in sel:
                continue
            d = tuple(grid.directions[q - 1])
            w = _excitation_from_row(sel[q], n)
            for name, g in (("psi_po_wsr", power_density(model, w, *d)), ("zeta_po", reflected_power_fraction(model.S, w))):
                if not _close(g, float(row[name])):
                    raise AuditError(f"summary.csv q={q}: {name} recomputed {g!r}, file has {row[name]}")
            ws = std_weights(model.geometry, d)
            for name, g in (("psi_std_wsr", power_density(model, ws, *d)), ("zeta_std", reflected_power_fraction(model.S, ws))):
                if not _close(g, float(row[name])):
                    raise AuditError(f"summary.csv q={q}: {name} recomputed {g!r}, file has {row[name]}")
            checked += 1
    return checked


def cmd_fov(cfg: RunConfig, summary_path: Path, out: Path) -> dict:
    """Recompute both FoV masks from the psi/zeta series of a summary CSV."""
    grid = cfg.scan.build()
    spec = cfg.fov.build()
    rows = read_csv(summary_path)
    if len(rows) != grid.size:
        raise IngestError(f"{summary_path.name} has {len(rows)} rows, the scan grid has {grid.size}")
    col = {k: np.array([float(r[k]) for r in rows]) for k in ("psi_std_wsr", "zeta_std", "psi_po_wsr", "zeta_po")}
    psi_po = np.nan_to_num(col["psi_po_wsr"], nan=0.0)
    zeta_po = np.nan_to_num(col["zeta_po"], nan=np.inf)
    ref = col["psi_std_wsr"][grid.boresight]
    std = fov(grid, col["psi_std_wsr"], col["zeta_std"], spec, ref)
    po = fov(grid, psi_po, zeta_po, spec, ref)
    orig = {k: np.array([r[k] == "1" for r in rows]) for k in ("mask_std", "mask_po", "in_fov_std", "in_fov_po")}
    members = {name: np.isin(np.arange(grid.size), region.members) for name, region in (("std", std), ("po", po))}
    doc = {
        "psi_th_wsr": spec.psi_threshold(ref),
        "zeta_th": spec.zeta_th,
        "alpha_fov_std": std.alpha,
        "alpha_fov_po": po.alpha,
        "delta_alpha_fov": po.alpha - std.alpha,
        "q_fov_std": std.q_fov,
        "q_fov_po": po.q_fov,
        "boresight_feasible_std": std.boresight_feasible,
        "boresight_feasible_po": po.boresight_feasible,
        "masks_match_summary": bool(
            np.array_equal(orig["mask_std"], std.mask)
            and np.array_equal(orig["mask_po"], po.mask)
            and np.array_equal(orig["in_fov_std"], members["std"])
            and np.array_equal(orig["in_fov_po"], members["po"])
        ),
        "in_fov_std": [q + 1 for q in std.members],
        "in_fov_po": [q + 1 for q in po.members],
    }
    (out / "fov.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


REPORT_HEADER = ["q", "theta_q", "phi_q", "method", "psi_dbwsr", "zeta_pct", "sll_db", "gain_db", "scan_error_deg"]


def _eval_grid(grid: ScanGrid, step=0.5) -> tuple[EvalGrid, str]:
    """Pattern-metric grid matched to the scan grid's geometry."""
    if grid.kind == "cut" and grid.scan_axis == "phi":
        fixed = float(grid.directions[0, 0])
        return EvalGrid.phi_cut(fixed, -90.0, 90.0, step), "phi"
    if grid.kind == "cut":
        fixed = float(grid.directions[0, 1])
        return EvalGrid.theta_cut(fixed, -90.0, 90.0, step), "theta"
    return EvalGrid.sphere(1.0), "theta"


def cmd_report(cfg: RunConfig, run_dir: Path, qs, out: Path | None = None) -> list[dict]:
    model = cfg.build_model()
    grid = cfg.scan.build()
    n = model.n_elements
    sel_path = run_dir / "selected.csv"
    selected = {int(r["q"]): r for r in read_csv(sel_path)} if sel_path.exists() else {}
    qs = list(qs) if qs else [grid.boresight + 1]
    bad = [q for q in qs if not 1 <= q <= grid.size]
    if bad:
        raise ConfigError(f"scan index {bad[0]} outside the valid range 1..{grid.size}")
    eval_grid, axis = _eval_grid(grid)
    table = []
    for q in qs:
        d = tuple(grid.directions[q - 1])
        methods = [("STD", std_weights(model.geometry, d).w_plus)]
        if q in selected:
            methods.append(("PO", _excitation_from_row(selected[q], n)))
        for name, w in methods:
            bm = beam_metrics(model, w, d, eval_grid, axis)
            psi = power_density(model, w, *d)
            table.append(
                {
                    "q": q,
                    "theta_q": d[0],
                    "phi_q": d[1],
                    "method": name,
                    "psi_dbwsr": _db(psi),
                    "zeta_pct": 100 * reflected_power_fraction(model.S, w),
                    "sll_db": bm.sll_db,
                    "gain_db": bm.gain_db,
                    "scan_error_deg": bm.scan_error_deg,
                }
            )
    if out is not None:
        write_csv(out / "report_table.csv", REPORT_HEADER, [[r[k] for k in REPORT_HEADER] for r in table])
    return table


def format_table(table) -> str:
    lines = [f"{'q':>4} {'theta':>7} {'phi':>7} {'method':>6} {'psi dBW/sr':>11} {'zeta %':>8} {'SLL dB':>8} {'G dB':>7} {'dTheta':>7}"]
    for r in table:
        lines.append(
            f"{r['q']:>4d} {r['theta_q']:>7.1f} {r['phi_q']:>7.1f} {r['method']:>6} {r['psi_dbwsr']:>11.2f} "
            f"{r['zeta_pct']:>8.2f} {r['sll_db']:>8.2f} {r['gain_db']:>7.2f} {r['scan_error_deg']:>7.2f}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="widescan", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("gen-fixture", "baseline", "synthesize", "fov", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output (or, for fov/report, run) directory; overrides output_dir")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit); overrides moea.seed")
        p.add_argument("--workers", type=int, help="worker processes for the sweep")
        p.add_argument("--audit", action="store_true", help="recompute emitted objectives from emitted excitations")
        if name == "fov":
            p.add_argument("--summary", help="summary CSV (default: <out>/summary.csv)")
        if name == "report":
            p.add_argument("--q", type=int, nargs="+", help="1-based scan indices (default: boresight)")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg.moea.seed = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg.workers = args.workers
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        out = _out_dir(cfg, args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "gen-fixture":
                for path in cmd_gen_fixture(cfg, out):
                    print(path)
            elif args.command == "baseline":
                print(cmd_baseline(cfg, out))
                if args.audit:
                    print(f"audit: {audit_run(cfg, out)} rows reproduced")
            elif args.command == "synthesize":
                rep = cmd_synthesize(cfg, out, audit=args.audit)
                print(
                    f"alpha_fov STD {rep['alpha_fov_std']:.4f}  PO {rep['alpha_fov_po']:.4f}  "
                    f"delta {rep['delta_alpha_fov']:+.4f}  runtime {rep['runtime_s']:.1f}s"
                )
            elif args.command == "fov":
                summary = Path(args.summary) if args.summary else out / "summary.csv"
                doc = cmd_fov(cfg, summary, out)
                for tag in ("std", "po"):
                    if not doc[f"boresight_feasible_{tag}"]:
                        print(f"warning: boresight infeasible for {tag.upper()}; alpha_fov = 0", file=sys.stderr)
                print(json.dumps({k: v for k, v in doc.items() if not k.startswith("in_fov")}, sort_keys=True))
            elif args.command == "report":
                if args.audit:
                    print(f"audit: {audit_run(cfg, out)} rows reproduced")
                print(format_table(cmd_report(cfg, out, args.q, out)))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IngestError, DimensionError, CoverageError, OSError) as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (SweepError, AuditError, WidescanError, ArithmeticError) as exc:
        print(f"synthesis error: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
