"""File formats: the criteria spreadsheet (CSV), report JSON, overlay PNG,
and the flat key/value run configuration.

All writers are byte-deterministic: sorted rows/keys, LF line endings, and
floats fixed to 6 decimal places, so outputs can be diffed and regression-
tested byte for byte.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, fields

import numpy as np
from PIL import Image, ImageDraw

from . import raster
from .criteria import AssessConfig, CriteriaReport, caliper_window_bounds, left_right_endpoints
from .errors import ConfigError, DuplicateKeyError, ShapeMismatchError, SpreadsheetError

SPREADSHEET_HEADER = "image_id,c1,c2,c3,c4,c5,c6,c7,total,accepted"

OVERLAY_TINTS = {
    raster.HEAD: (220, 40, 40),
    raster.BODY: (40, 80, 220),
    raster.PALATE: (230, 220, 40),
    raster.GAP: (40, 200, 80),
}
OVERLAY_ALPHA = 0.40
_LINE_COLOR = (255, 255, 255)
_WINDOW_COLOR = (255, 140, 0)
_REF_COLOR = (255, 0, 255)


@dataclass(frozen=True)
class SpreadsheetRow:
    """One audited image: seven 0/1 criteria flags keyed by image_id."""

    image_id: str
    criteria: tuple[int, int, int, int, int, int, int]

    def __post_init__(self):
        if not self.image_id or any(ch in self.image_id for ch in ",\n\r"):
            raise ValueError(f"image_id {self.image_id!r} must be non-empty without commas or newlines")
        if len(self.criteria) != 7 or any(c not in (0, 1) for c in self.criteria):
            raise ValueError("criteria must be seven 0/1 flags")

    @property
    def total(self) -> int:
        return sum(self.criteria)

    @property
    def accepted(self) -> int:
        return 1 if self.total >= 4 else 0

    @classmethod
    def from_report(cls, image_id: str, report: CriteriaReport) -> "SpreadsheetRow":
        return cls(image_id=image_id, criteria=tuple(1 if r.passed else 0 for r in report.results))


@dataclass(frozen=True)
class RunConfig:
    """Assessment thresholds plus batch-run options from a config file."""

    assess: AssessConfig = AssessConfig()
    jobs: int | None = None
    overlay: bool = False

    def __post_init__(self):
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


def write_spreadsheet(rows: list[SpreadsheetRow]) -> bytes:
    """Serialize rows as CSV: fixed header, LF endings, sorted by image_id
    (byte order). Raises DuplicateKeyError on repeated ids."""
    seen: set[str] = set()
    for row in rows:
        if row.image_id in seen:
            raise DuplicateKeyError(f"duplicate image_id {row.image_id!r}")
        seen.add(row.image_id)
    ordered = sorted(rows, key=lambda r: r.image_id.encode("utf-8"))
    lines = [SPREADSHEET_HEADER]
    for row in ordered:
        cells = [row.image_id, *map(str, row.criteria), str(row.total), str(row.accepted)]
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_spreadsheet(payload: bytes | str) -> list[SpreadsheetRow]:
    """Parse and validate a criteria spreadsheet; errors carry line numbers."""
    text = payload.decode("utf-8") if isinstance(payload, bytes) else payload
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip("\r") != SPREADSHEET_HEADER:
        raise SpreadsheetError(f"bad header; expected {SPREADSHEET_HEADER!r}", line=1)
    rows: list[SpreadsheetRow] = []
    seen: set[str] = set()
    for n, line in enumerate(lines[1:], start=2):
        cells = line.strip("\r").split(",")
        if len(cells) != 10:
            raise SpreadsheetError(f"expected 10 cells, got {len(cells)}", line=n)
        image_id = cells[0]
        flags = []
        for col, cell in zip(("c1", "c2", "c3", "c4", "c5", "c6", "c7"), cells[1:8]):
            if cell not in ("0", "1"):
                raise SpreadsheetError(f"column {col} must be 0 or 1, got {cell!r}", line=n)
            flags.append(int(cell))
        try:
            row = SpreadsheetRow(image_id=image_id, criteria=tuple(flags))
        except ValueError as exc:
            raise SpreadsheetError(str(exc), line=n) from exc
        if image_id in seen:
            raise DuplicateKeyError(f"duplicate image_id {image_id!r}", line=n)
        seen.add(image_id)
        try:
            total = int(cells[8])
            accepted = int(cells[9])
        except ValueError as exc:
            raise SpreadsheetError(f"total/accepted must be integers: {exc}", line=n) from exc
        if total != row.total:
            raise SpreadsheetError(f"total {total} does not match criteria sum {row.total}", line=n)
        if accepted not in (0, 1) or accepted != row.accepted:
            raise SpreadsheetError(
                f"accepted {accepted} inconsistent with total {total} (rule: accepted=1 iff total>=4)",
                line=n,
            )
        rows.append(row)
    return rows


def _canon(value, indent: int) -> str:
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"cannot serialize non-finite float {v}")
        return f"{v:.6f}"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_canon(v, indent + 2)}" for k, v in sorted(value.items())]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{inner}{_canon(v, indent + 2)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if value is None:
        return "null"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def canonical_json(obj) -> bytes:
    """Deterministic JSON: sorted keys, floats with 6 decimals, LF ending."""
    return (_canon(obj, 0) + "\n").encode("utf-8")


def report_to_dict(report: CriteriaReport) -> dict:
    return {
        "criteria": [
            {
                "id": r.id,
                "name": r.name,
                "pass": r.passed,
                "indeterminate": r.indeterminate,
                "evidence": {k: float(v) for k, v in r.evidence},
                "explanation": r.explanation,
            }
            for r in report.results
        ],
        "total_score": report.total_score,
        "accepted": report.accepted,
        "crl_line": {
            "crown": [report.crl_line.crown[0], report.crl_line.crown[1]],
            "rump": [report.crl_line.rump[0], report.crl_line.rump[1]],
            "length_px": report.crl_line.length_px,
            "angle_deg": report.crl_line.angle_deg,
        },
        "warnings": list(report.warnings),
    }


def write_report(report: CriteriaReport) -> bytes:
    """Canonical JSON payload of a criteria report."""
    return canonical_json(report_to_dict(report))


def render_overlay(
    image: raster.GrayImage,
    mask: raster.LabelMask,
    report: CriteriaReport,
    config: AssessConfig = AssessConfig(),
) -> bytes:
    """RGB PNG: class-tinted mask over the scan, with the CRL line, both
    caliper windows, and the face reference point drawn in."""
    if image.pixels.shape != mask.labels.shape:
        raise ShapeMismatchError(
            f"image is {image.width}x{image.height} but mask is {mask.width}x{mask.height}"
        )
    rgb = np.repeat(image.pixels[:, :, None].astype(np.float64), 3, axis=2)
    for label, tint in OVERLAY_TINTS.items():
        where = mask.labels == label
        if where.any():
            rgb[where] = (1 - OVERLAY_ALPHA) * rgb[where] + OVERLAY_ALPHA * np.asarray(tint, dtype=np.float64)
    canvas = Image.fromarray(np.clip(np.rint(rgb), 0, 255).astype(np.uint8), mode="RGB")
    draw = ImageDraw.Draw(canvas)

    left, right = left_right_endpoints(report.crl_line)
    for endpoint in (left, right):
        x0, y0, x1, y1 = caliper_window_bounds(endpoint, config.caliper_window, image.width, image.height)
        if x1 > x0 and y1 > y0:
            draw.rectangle((x0, y0, x1 - 1, y1 - 1), outline=_WINDOW_COLOR)
    draw.line((*report.crl_line.crown, *report.crl_line.rump), fill=_LINE_COLOR, width=1)
    face = report.results[6]
    rx, ry = face.value("ref_x"), face.value("ref_y")
    draw.ellipse((rx - 2, ry - 2, rx + 2, ry + 2), fill=_REF_COLOR)

    buf = io.BytesIO()
    canvas.save(buf, format="PNG")
    return buf.getvalue()


_ASSESS_FIELDS = {f.name for f in fields(AssessConfig)}


def _parse_value(key: str, text: str):
    kind = {
        "angle_limit_deg": float,
        "magnification_min": float,
        "gap_ratio_lo": float,
        "gap_ratio_hi": float,
        "palate_min_area": int,
        "caliper_window": int,
        "caliper_std_min": float,
        "min_component_area": int,
        "face_up_flip": bool,
        "jobs": int,
        "overlay": bool,
    }[key]
    if kind is bool:
        if text == "true":
            return True
        if text == "false":
            return False
        raise ConfigError(f"key {key!r}: expected true or false, got {text!r}")
    try:
        if kind is int:
            return int(text)
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {text!r} as {kind.__name__}") from exc


def load_config(payload: str) -> RunConfig:
    """Parse flat `key = value` text (TOML-style; # comments) into a RunConfig.

    Absent keys keep their defaults; unknown keys are rejected.
    """
    assess_kwargs: dict = {}
    jobs: int | None = None
    overlay = False
    for n, line in enumerate(payload.split("\n"), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {n}: expected key = value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _ASSESS_FIELDS and key not in ("jobs", "overlay"):
            raise ConfigError(f"line {n}: unknown key {key!r}")
        parsed = _parse_value(key, value)
        if key == "jobs":
            jobs = parsed
        elif key == "overlay":
            overlay = parsed
        else:
            assess_kwargs[key] = parsed
    return RunConfig(assess=AssessConfig(**assess_kwargs), jobs=jobs, overlay=overlay)
