"""Command-line tool: single assessment, batch audit, metrics, phantom generation.

Exit codes: 0 success, 1 any processing failure (a batch keeps going past
failed items and lists them on stderr), 2 usage or configuration error.
Data goes to files; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics, phantom, raster
from .criteria import CRITERION_NAMES, assess
from .errors import ConfigError, CrlQaError
from .formats import (
    RunConfig,
    SpreadsheetRow,
    canonical_json,
    load_config,
    read_spreadsheet,
    render_overlay,
    write_report,
    write_spreadsheet,
)

JOBS_ENV_VAR = "CRLQA_JOBS"


def _load_run_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return load_config(Path(path).read_text(encoding="utf-8"))


def _resolve_jobs(flag: int | None, cfg: RunConfig) -> int:
    if flag is not None:
        jobs = flag
    elif JOBS_ENV_VAR in os.environ:
        try:
            jobs = int(os.environ[JOBS_ENV_VAR])
        except ValueError as exc:
            raise ConfigError(f"{JOBS_ENV_VAR} must be an integer, got {os.environ[JOBS_ENV_VAR]!r}") from exc
    elif cfg.jobs is not None:
        jobs = cfg.jobs
    else:
        jobs = 1
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    return jobs


def _cmd_assess(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args.config)
    image = raster.decode_image(Path(args.image).read_bytes())
    mask = raster.decode_mask(Path(args.mask).read_bytes())
    report = assess(image, mask, cfg.assess)
    Path(args.out).write_bytes(write_report(report))
    overlay_path = args.overlay
    if overlay_path is None and cfg.overlay:
        overlay_path = str(Path(args.out).with_suffix(".overlay.png"))
    if overlay_path is not None:
        Path(overlay_path).write_bytes(render_overlay(image, mask, report, cfg.assess))
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _audit_one(item_id: str, image_path: Path, mask_path: Path, cfg: RunConfig) -> SpreadsheetRow:
    image = raster.decode_image(image_path.read_bytes())
    mask = raster.decode_mask(mask_path.read_bytes())
    report = assess(image, mask, cfg.assess)
    return SpreadsheetRow.from_report(item_id, report)


def _cmd_audit(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args.config)
    jobs = _resolve_jobs(args.jobs, cfg)
    root = Path(args.dir)
    if not root.is_dir():
        raise CrlQaError(f"audit directory {root} does not exist")
    pairs = []
    for image_path in sorted(root.glob("*.img.png")):
        item_id = image_path.name[: -len(".img.png")]
        pairs.append((item_id, image_path, root / f"{item_id}.mask.png"))

    rows: list[SpreadsheetRow] = []
    failures: list[tuple[str, str]] = []

    def worker(pair):
        item_id, image_path, mask_path = pair
        if not mask_path.exists():
            raise CrlQaError(f"missing mask file {mask_path.name}")
        return _audit_one(item_id, image_path, mask_path, cfg)

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(worker, pair): pair[0] for pair in pairs}
        for future, item_id in futures.items():
            try:
                rows.append(future.result())
            except Exception as exc:
                failures.append((item_id, str(exc)))

    for item_id, message in sorted(failures):
        print(f"audit: {item_id}: {message}", file=sys.stderr)
    Path(args.out_csv).write_bytes(write_spreadsheet(rows))
    accepted = sum(row.accepted for row in rows)
    print(f"accepted {accepted}/{len(rows)}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_metrics_seg(args: argparse.Namespace) -> int:
    pred_dir, truth_dir = Path(args.pred_dir), Path(args.truth_dir)
    for d in (pred_dir, truth_dir):
        if not d.is_dir():
            raise CrlQaError(f"directory {d} does not exist")
    names = sorted(
        {p.name for p in pred_dir.iterdir() if p.suffix in (".png", ".pgm")}
        & {p.name for p in truth_dir.iterdir() if p.suffix in (".png", ".pgm")}
    )
    if not names:
        raise CrlQaError("no mask files with matching names in the two directories")
    per_label: dict[int, list[metrics.OverlapScores]] = {lab: [] for lab in raster.CLASS_NAMES if lab}
    failures = []
    for name in names:
        try:
            pred = raster.decode_mask((pred_dir / name).read_bytes())
            truth = raster.decode_mask((truth_dir / name).read_bytes())
            for lab in per_label:
                per_label[lab].append(metrics.overlap_scores(pred, truth, lab))
        except Exception as exc:
            failures.append((name, str(exc)))
    for name, message in failures:
        print(f"metrics seg: {name}: {message}", file=sys.stderr)

    payload: dict = {"pairs": len(names) - len(failures), "classes": {}}
    for lab, scores in per_label.items():
        if not scores:
            continue
        agg = metrics.aggregate_overlap(scores)
        payload["classes"][raster.CLASS_NAMES[lab]] = {
            "n": agg.n,
            "dice": {"mean": agg.dice.mean, "std": agg.dice.std},
            "jaccard": {"mean": agg.jaccard.mean, "std": agg.jaccard.std},
            "precision": {"mean": agg.precision.mean, "std": agg.precision.std},
            "recall": {"mean": agg.recall.mean, "std": agg.recall.std},
        }
    Path(args.out).write_bytes(canonical_json(payload))
    return 1 if failures else 0


def _cmd_metrics_cls(args: argparse.Namespace) -> int:
    pred_rows = read_spreadsheet(Path(args.pred).read_bytes())
    truth_rows = read_spreadsheet(Path(args.truth).read_bytes())
    pred_by_id = {r.image_id: r for r in pred_rows}
    truth_by_id = {r.image_id: r for r in truth_rows}
    if set(pred_by_id) != set(truth_by_id):
        only_pred = sorted(set(pred_by_id) - set(truth_by_id))[:5]
        only_truth = sorted(set(truth_by_id) - set(pred_by_id))[:5]
        raise CrlQaError(
            f"spreadsheets cover different images (pred-only {only_pred}, truth-only {only_truth})"
        )
    ids = sorted(pred_by_id)

    def scored(pred_bits, truth_bits) -> dict:
        counts = metrics.confusion_counts(pred_bits, truth_bits)
        s = metrics.classification_scores(counts)
        return {
            "tp": counts.tp, "fp": counts.fp, "fn": counts.fn, "tn": counts.tn,
            "accuracy": s.accuracy, "precision": s.precision, "recall": s.recall, "f1": s.f1,
        }

    payload: dict = {"n": len(ids), "criteria": {}}
    for k in range(7):
        payload["criteria"][f"c{k + 1}"] = {
            "name": CRITERION_NAMES[k + 1],
            **scored(
                [bool(pred_by_id[i].criteria[k]) for i in ids],
                [bool(truth_by_id[i].criteria[k]) for i in ids],
            ),
        }
    payload["acceptance"] = scored(
        [bool(pred_by_id[i].accepted) for i in ids],
        [bool(truth_by_id[i].accepted) for i in ids],
    )
    Path(args.out).write_bytes(canonical_json(payload))
    return 0


def _cmd_phantom_gen(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = phantom.sample_params(args.seed, args.count)
    rows = []
    for i, p in enumerate(params):
        image, mask, truth = phantom.generate_phantom(p)
        item_id = f"phantom_{i:04d}"
        (out_dir / f"{item_id}.img.png").write_bytes(raster.encode_image(image))
        (out_dir / f"{item_id}.mask.png").write_bytes(raster.encode_mask(mask))
        rows.append(SpreadsheetRow(item_id, tuple(1 if c else 0 for c in truth.criteria)))
    (out_dir / "truth.csv").write_bytes(write_spreadsheet(rows))
    print(f"wrote {len(rows)} phantom pairs + truth.csv to {out_dir}", file=sys.stderr)
    return 0


def _cmd_selftest(args: argparse.Namespace) -> int:
    failures = []

    def check(name: str, ok: bool):
        print(f"selftest: {name}: {'ok' if ok else 'FAIL'}", file=sys.stderr)
        if not ok:
            failures.append(name)

    params = phantom.sample_params(20240809, 16)
    agree = 0
    for p in params:
        image, mask, truth = phantom.generate_phantom(p)
        report = assess(image, mask)
        agree += tuple(r.passed for r in report.results) == truth.criteria
    check("phantom oracle agreement (16 scenes)", agree == len(params))

    rng = np.random.default_rng(7)
    ok = True
    for _ in range(10):
        a = raster.LabelMask(rng.integers(0, 5, size=(12, 12)))
        b = raster.LabelMask(rng.integers(0, 5, size=(12, 12)))
        for lab in (1, 2, 3, 4):
            s = metrics.overlap_scores(a, b, lab)
            ok &= abs(s.dice - (2 * s.jaccard / (1 + s.jaccard))) < 1e-12
    check("dice/jaccard identity on random masks", ok)

    rows = [SpreadsheetRow(f"img{i}", tuple(int(b) for b in f"{i % 128:07b}")) for i in range(20)]
    check("spreadsheet round-trip", read_spreadsheet(write_spreadsheet(rows)) == sorted(rows, key=lambda r: r.image_id))

    image, mask, _ = phantom.generate_phantom(phantom.scene_params())
    payload = write_report(assess(image, mask))
    check("report serialization idempotent", write_report(assess(image, mask)) == payload)

    return 1 if failures else 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crlqa",
        description="Quality assessment of CRL ultrasound views from 4-class segmentation masks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assess", help="assess one image+mask pair and write a JSON report")
    p.add_argument("--image", required=True, help="grayscale scan (PNG or PGM)")
    p.add_argument("--mask", required=True, help="class-id mask (PNG or PGM)")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--overlay", help="also write an annotated overlay PNG here")
    p.add_argument("--out", required=True, help="output report JSON path")
    p.set_defaults(func=_cmd_assess)

    p = sub.add_parser("audit", help="assess every <id>.img.png/<id>.mask.png pair in a directory")
    p.add_argument("--dir", required=True, help="directory of image/mask pairs")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out-csv", required=True, help="output spreadsheet CSV path")
    p.add_argument("--jobs", type=int, help=f"parallel workers (default: ${JOBS_ENV_VAR} or 1)")
    p.set_defaults(func=_cmd_audit)

    pm = sub.add_parser("metrics", help="segmentation overlap or criteria classification scores")
    msub = pm.add_subparsers(dest="metrics_command", required=True)

    p = msub.add_parser("seg", help="overlap scores between two directories of masks")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--truth-dir", required=True)
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=_cmd_metrics_seg)

    p = msub.add_parser("cls", help="per-criterion scores of a predicted vs truth spreadsheet")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=_cmd_metrics_cls)

    p = sub.add_parser("phantom", help="synthetic test data")
    psub = p.add_subparsers(dest="phantom_command", required=True)
    p = psub.add_parser("gen", help="write seeded phantom image/mask pairs plus a truth CSV")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_phantom_gen)

    p = sub.add_parser("selftest", help="run quick built-in consistency checks")
    p.set_defaults(func=_cmd_selftest)

    return parser


def run_cli(argv: list[str]) -> int:
    """Run one CLI invocation; returns the process exit code (0, 1 or 2)."""
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # exit-code contract: failures map to 1, never a crash
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
