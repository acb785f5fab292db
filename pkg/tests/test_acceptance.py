"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line (run with `pytest tests/test_acceptance.py -v -s` to see them live).

Criteria covered:
  1. phantom oracle agreement over 500 seeded margin-stable scenes
  2. angle fidelity at nine fixed scene rotations
  3. exhaustive acceptance rule over all 128 pass/fail combinations
  4. overlap metrics vs an independent set-arithmetic oracle
  5. classification scores: worked example plus edge conventions
  6. byte determinism of audit CSV and assess JSON
  7. runtime: single assess < 50 ms, 1000-item audit < 30 s
"""

import itertools
import json
import time

import numpy as np

from crlqa import metrics, raster
from crlqa.cli import run_cli
from crlqa.criteria import CriteriaReport, CriterionResult, assess
from crlqa.formats import read_spreadsheet
from crlqa.geometry import CrlLine, fit_crl_line
from crlqa.phantom import generate_phantom, sample_params, scene_params


def verdict(name: str, ok: bool, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"[{'PASS' if ok else 'FAIL'}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def test_1_phantom_oracle_agreement():
    t0 = time.perf_counter()
    params = sample_params(1, 500)
    per_criterion = np.zeros(7, dtype=int)
    full_vector = 0
    verdicts_ok = True
    margin_ok = True
    for p in params:
        image, mask, truth = generate_phantom(p)
        margin_ok &= truth.margin_ok
        report = assess(image, mask)
        got = tuple(r.passed for r in report.results)
        per_criterion += np.fromiter((g == t for g, t in zip(got, truth.criteria)), dtype=int, count=7)
        if got == truth.criteria:
            full_vector += 1
            verdicts_ok &= report.accepted == truth.accepted
    elapsed = time.perf_counter() - t0

    rates = per_criterion / 500.0
    verdict(
        "per-criterion agreement >= 99.5%",
        bool((rates >= 0.995).all()),
        "min " + format(rates.min(), ".4f"),
    )
    verdict("full-vector agreement >= 98%", full_vector / 500.0 >= 0.98, f"{full_vector}/500")
    verdict("acceptance verdicts match on agreeing vectors", verdicts_ok)
    verdict("all sampled draws are margin-stable", margin_ok)
    verdict("runtime under 60 s single-threaded", elapsed < 60.0, f"{elapsed:.1f} s")


def test_2_angle_fidelity():
    worst = 0.0
    for rot in (-30, -20, -10, -5, 0, 5, 10, 20, 30):
        _, mask, truth = generate_phantom(scene_params(rotation_deg=float(rot)))
        measured = fit_crl_line(mask).angle_deg
        worst = max(worst, abs(measured - truth.expected_angle_deg))
    verdict("angle fidelity <= 2 deg at 9 rotations", worst <= 2.0, f"worst {worst:.2f} deg")


def test_3_acceptance_rule_exhaustive():
    line = CrlLine.from_endpoints((0.0, 0.0), (100.0, 0.0))
    ok = True
    for bits in itertools.product((False, True), repeat=7):
        report = CriteriaReport(
            results=tuple(
                CriterionResult(id=i + 1, name=f"c{i + 1}", passed=b, evidence=(), explanation="")
                for i, b in enumerate(bits)
            ),
            crl_line=line,
        )
        ok &= report.total_score == sum(bits)
        ok &= report.accepted == (sum(bits) >= 4)
    verdict("accepted <=> passes >= 4 over all 128 combinations", ok)


def _overlap_oracle(pred: np.ndarray, truth: np.ndarray, label: int):
    a = {(x, y) for y, x in zip(*np.nonzero(pred == label))}
    b = {(x, y) for y, x in zip(*np.nonzero(truth == label))}
    if not a and not b:
        return (1.0, 1.0, 1.0, 1.0)
    inter = len(a & b)
    return (
        2 * inter / (len(a) + len(b)),
        inter / len(a | b),
        inter / len(a) if a else 0.0,
        inter / len(b) if b else 0.0,
    )


def test_4_overlap_metric_oracle():
    rng = np.random.default_rng(42)
    worst = 0.0
    identity_worst = 0.0
    for _ in range(200):
        # skewed label choices so some classes go missing on one or both sides
        labs = rng.choice(5, size=2, replace=True)
        pred = rng.choice([0, labs[0]], p=[0.7, 0.3], size=(16, 16)).astype(np.uint8)
        truth = rng.choice([0, labs[1]], p=[0.7, 0.3], size=(16, 16)).astype(np.uint8)
        for label in (1, 2, 3, 4):
            s = metrics.overlap_scores(raster.LabelMask(pred), raster.LabelMask(truth), label)
            expected = _overlap_oracle(pred, truth, label)
            worst = max(
                worst,
                abs(s.dice - expected[0]),
                abs(s.jaccard - expected[1]),
                abs(s.precision - expected[2]),
                abs(s.recall - expected[3]),
            )
            identity_worst = max(identity_worst, abs(s.dice - 2 * s.jaccard / (1 + s.jaccard)))
    # explicit empty-set edges
    zeros = raster.LabelMask(np.zeros((16, 16), dtype=np.uint8))
    ones = raster.LabelMask(np.full((16, 16), 1, dtype=np.uint8))
    both_empty = metrics.overlap_scores(zeros, zeros, 1)
    one_empty = metrics.overlap_scores(zeros, ones, 1)
    edges_ok = (
        (both_empty.dice, both_empty.jaccard, both_empty.precision, both_empty.recall) == (1.0, 1.0, 1.0, 1.0)
        and (one_empty.dice, one_empty.jaccard, one_empty.precision, one_empty.recall) == (0.0, 0.0, 0.0, 0.0)
    )
    verdict("overlap scores match set oracle on 200 pairs", worst < 1e-12, f"worst err {worst:.2e}")
    verdict("dice = 2J/(1+J) on every pair", identity_worst < 1e-12)
    verdict("empty-set conventions", edges_ok)


def test_5_classification_metric_check():
    s = metrics.classification_scores(metrics.ConfusionCounts(tp=2, fp=1, fn=1, tn=6))
    worked = (
        s.accuracy == 0.8
        and s.precision == 2 / 3
        and s.recall == 2 / 3
        and abs(s.f1 - 2 / 3) < 1e-12
    )
    perfect = metrics.classification_scores(metrics.ConfusionCounts(tp=5, fp=0, fn=0, tn=5))
    all_neg = metrics.classification_scores(metrics.ConfusionCounts(tp=0, fp=0, fn=0, tn=10))
    edges = (
        (perfect.accuracy, perfect.precision, perfect.recall, perfect.f1) == (1.0, 1.0, 1.0, 1.0)
        and (all_neg.accuracy, all_neg.precision, all_neg.recall, all_neg.f1) == (1.0, 0.0, 0.0, 0.0)
    )
    verdict("confusion (2,1,1,6) -> 0.8, 2/3, 2/3, 2/3", worked)
    verdict("perfect and all-negative conventions", edges)


def test_6_determinism(tmp_path):
    data = tmp_path / "phantoms"
    assert run_cli(["phantom", "gen", "--seed", "6", "--count", "12", "--out-dir", str(data)]) == 0

    csv_a, csv_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(["audit", "--dir", str(data), "--out-csv", str(csv_a), "--jobs", "1"]) == 0
    assert run_cli(["audit", "--dir", str(data), "--out-csv", str(csv_b), "--jobs", "8"]) == 0
    verdict("audit CSV byte-identical at --jobs 1 vs --jobs 8", csv_a.read_bytes() == csv_b.read_bytes())

    reports = []
    for name in ("r1.json", "r2.json"):
        out = tmp_path / name
        assert run_cli([
            "assess",
            "--image", str(data / "phantom_0000.img.png"),
            "--mask", str(data / "phantom_0000.mask.png"),
            "--out", str(out),
        ]) == 0
        reports.append(out.read_bytes())
    verdict("repeated assess produces byte-identical JSON", reports[0] == reports[1])
    json.loads(reports[0])  # and it is well-formed


def test_7_performance(tmp_path):
    image, mask, _ = generate_phantom(scene_params(width=640, height=480))
    best = min(
        (lambda t0: (assess(image, mask), time.perf_counter() - t0)[1])(time.perf_counter())
        for _ in range(5)
    )
    verdict("single 640x480 assess under 50 ms", best < 0.050, f"{best * 1e3:.1f} ms")

    data = tmp_path / "batch"
    data.mkdir()
    bases = []
    for k in range(10):
        img, msk, _ = generate_phantom(scene_params(rotation_deg=float(2 * k - 9), speckle_seed=k))
        bases.append((raster.encode_image(img), raster.encode_mask(msk)))
    for i in range(1000):
        img_bytes, mask_bytes = bases[i % len(bases)]
        (data / f"item_{i:04d}.img.png").write_bytes(img_bytes)
        (data / f"item_{i:04d}.mask.png").write_bytes(mask_bytes)

    out_csv = tmp_path / "batch.csv"
    t0 = time.perf_counter()
    code = run_cli(["audit", "--dir", str(data), "--out-csv", str(out_csv), "--jobs", "4"])
    elapsed = time.perf_counter() - t0
    assert code == 0
    assert len(read_spreadsheet(out_csv.read_bytes())) == 1000
    verdict("1000-item audit under 30 s at --jobs 4", elapsed < 30.0, f"{elapsed:.1f} s")
