"""The seven clinical criteria for a usable CRL view, and the acceptance rule.

Each evaluator returns a CriterionResult carrying a pass flag, the numeric
evidence it was decided on, and a one-sentence explanation. A view is
accepted for CRL measurement when more than 3 of the 7 criteria pass.

Criteria 1-4 and 7 read only the mask; 5 and 6 read pixel intensities of the
grayscale scan around the line endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import raster
from .errors import ConfigError, MissingStructureError, ShapeMismatchError
from .geometry import CrlLine, Side, fit_crl_line, horizontal_extent, side_of_line

ACCEPT_MIN_SCORE = 4  # accepted <=> passes > 3

CRITERION_NAMES = {
    1: "neutral_position",
    2: "horizontal_orientation",
    3: "fetal_palate",
    4: "magnification",
    5: "left_caliper_definition",
    6: "right_caliper_definition",
    7: "face_direction",
}

_SIDE_WORD = {Side.ABOVE: "above", Side.ON: "on", Side.BELOW: "below"}


@dataclass(frozen=True)
class AssessConfig:
    """Thresholds for the seven criteria. Defaults follow the clinical rules
    (|angle| <= 15 deg, extent > 60% of width, 20x20 caliper windows); the
    gap-ratio band and contrast threshold are project conventions.
    """

    angle_limit_deg: float = 15.0
    magnification_min: float = 0.60
    gap_ratio_lo: float = 0.02
    gap_ratio_hi: float = 0.30
    palate_min_area: int = 25
    caliper_window: int = 20
    caliper_std_min: float = 12.0
    min_component_area: int = 50
    face_up_flip: bool = False

    def __post_init__(self):
        if not 0 < self.angle_limit_deg < 90:
            raise ConfigError(f"angle_limit_deg must be in (0, 90), got {self.angle_limit_deg}")
        if not 0 < self.magnification_min < 1:
            raise ConfigError(f"magnification_min must be in (0, 1), got {self.magnification_min}")
        if not 0 <= self.gap_ratio_lo < self.gap_ratio_hi:
            raise ConfigError(
                f"need 0 <= gap_ratio_lo < gap_ratio_hi, got ({self.gap_ratio_lo}, {self.gap_ratio_hi})"
            )
        if self.palate_min_area < 1:
            raise ConfigError(f"palate_min_area must be >= 1, got {self.palate_min_area}")
        if self.caliper_window < 3:
            raise ConfigError(f"caliper_window must be >= 3, got {self.caliper_window}")
        if self.caliper_std_min < 0:
            raise ConfigError(f"caliper_std_min must be >= 0, got {self.caliper_std_min}")
        if self.min_component_area < 1:
            raise ConfigError(f"min_component_area must be >= 1, got {self.min_component_area}")


@dataclass(frozen=True)
class CriterionResult:
    """Outcome of one criterion: pass flag, fixed-name numeric evidence, and
    a one-sentence explanation. indeterminate implies passed is False."""

    id: int
    name: str
    passed: bool
    evidence: tuple[tuple[str, float], ...]
    explanation: str
    indeterminate: bool = False

    def __post_init__(self):
        if self.indeterminate and self.passed:
            raise ValueError("an indeterminate criterion cannot pass")

    def value(self, name: str) -> float:
        for key, v in self.evidence:
            if key == name:
                return v
        raise KeyError(name)


@dataclass(frozen=True)
class CriteriaReport:
    """All seven results in id order, plus the fitted line and any warnings."""

    results: tuple[CriterionResult, ...]
    crl_line: CrlLine
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.results) != 7 or [r.id for r in self.results] != list(range(1, 8)):
            raise ValueError("a report needs exactly the criteria 1..7 in order")

    @property
    def total_score(self) -> int:
        return sum(1 for r in self.results if r.passed)

    @property
    def accepted(self) -> bool:
        return self.total_score >= ACCEPT_MIN_SCORE


def _largest(mask: raster.LabelMask, label: int) -> raster.Component | None:
    return raster.largest_component(raster.connected_components(mask, label))


def _require(comp: raster.Component | None, label: int, min_area: int) -> raster.Component:
    if comp is None or comp.area < min_area:
        raise MissingStructureError(raster.CLASS_NAMES[label])
    return comp


def eval_neutral_position(
    mask: raster.LabelMask,
    config: AssessConfig = AssessConfig(),
    *,
    head: raster.Component | None = None,
) -> CriterionResult:
    """Criterion 1: chin-chest gap area relative to the head, neither absent
    (hyperflexed) nor oversized (hyperextended)."""
    head = _require(head or _largest(mask, raster.HEAD), raster.HEAD, config.min_component_area)
    gap_area = mask.class_area(raster.GAP)
    ratio = gap_area / head.area
    passed = config.gap_ratio_lo <= ratio <= config.gap_ratio_hi
    if gap_area == 0:
        explanation = "no chin-chest gap is visible, so the fetus is not in a neutral position"
    elif passed:
        explanation = f"chin-chest gap is {ratio:.1%} of head area, inside the neutral band"
    elif ratio < config.gap_ratio_lo:
        explanation = f"chin-chest gap is only {ratio:.1%} of head area (hyperflexed)"
    else:
        explanation = f"chin-chest gap is {ratio:.1%} of head area (hyperextended)"
    return CriterionResult(
        id=1,
        name=CRITERION_NAMES[1],
        passed=passed,
        evidence=(("gap_area", float(gap_area)), ("head_area", float(head.area)), ("gap_ratio", ratio)),
        explanation=explanation,
    )


def eval_horizontal_orientation(line: CrlLine, config: AssessConfig = AssessConfig()) -> CriterionResult:
    """Criterion 2: CRL axis within the angle limit of the horizontal (inclusive)."""
    passed = abs(line.angle_deg) <= config.angle_limit_deg
    word = "within" if passed else "outside"
    return CriterionResult(
        id=2,
        name=CRITERION_NAMES[2],
        passed=passed,
        evidence=(("angle_deg", line.angle_deg),),
        explanation=f"CRL axis is {line.angle_deg:+.1f} deg from horizontal, {word} +/-{config.angle_limit_deg:g} deg",
    )


def eval_fetal_palate(
    mask: raster.LabelMask,
    config: AssessConfig = AssessConfig(),
    *,
    palate: raster.Component | None = None,
) -> CriterionResult:
    """Criterion 3: a clear palate region confirms the mid-sagittal view."""
    if palate is None:
        palate = _largest(mask, raster.PALATE)
    area = 0 if palate is None else palate.area
    passed = area >= config.palate_min_area
    if area == 0:
        explanation = "no palate region is segmented; the view is not mid-sagittal"
    elif passed:
        explanation = f"palate region of {area} px confirms a mid-sagittal view"
    else:
        explanation = f"largest palate region is only {area} px, too small to count as visible"
    return CriterionResult(
        id=3,
        name=CRITERION_NAMES[3],
        passed=passed,
        evidence=(("palate_area", float(area)),),
        explanation=explanation,
    )


def eval_magnification(line: CrlLine, image_width: int, config: AssessConfig = AssessConfig()) -> CriterionResult:
    """Criterion 4: the horizontal span of the CRL line must exceed the
    magnification fraction of the image width (strict)."""
    if image_width < 1:
        raise ValueError("image_width must be >= 1")
    extent = horizontal_extent(line)
    ratio = extent / image_width
    passed = ratio > config.magnification_min
    word = "fills" if passed else "fills only"
    return CriterionResult(
        id=4,
        name=CRITERION_NAMES[4],
        passed=passed,
        evidence=(("extent_px", extent), ("image_width", float(image_width)), ("ratio", ratio)),
        explanation=f"CRL span {word} {ratio:.1%} of the image width (needs more than {config.magnification_min:.0%})",
    )


def left_right_endpoints(line: CrlLine) -> tuple[tuple[float, float], tuple[float, float]]:
    """The line endpoints ordered image-left to image-right (ties by smaller y)."""
    a, b = line.crown, line.rump
    if (a[0], a[1]) > (b[0], b[1]):
        a, b = b, a
    return a, b


def caliper_window_bounds(
    center: tuple[float, float], window_px: int, width: int, height: int
) -> tuple[int, int, int, int]:
    """Half-open pixel bounds (x0, y0, x1, y1) of a square window centered on
    a point (rounded to the nearest pixel), clipped to the image."""
    cx = math.floor(center[0] + 0.5)
    cy = math.floor(center[1] + 0.5)
    half = window_px // 2
    x0, x1 = cx - half, cx - half + window_px
    y0, y1 = cy - half, cy - half + window_px
    return max(x0, 0), max(y0, 0), min(x1, width), min(y1, height)


def eval_caliper_definition(
    image: raster.GrayImage,
    line: CrlLine,
    side: str,
    config: AssessConfig = AssessConfig(),
) -> CriterionResult:
    """Criteria 5/6: local intensity contrast around the left/right line
    endpoint, measured as the population std of a square window."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    left, right = left_right_endpoints(line)
    endpoint = left if side == "left" else right
    x0, y0, x1, y1 = caliper_window_bounds(endpoint, config.caliper_window, image.width, image.height)
    if x1 <= x0 or y1 <= y0:
        raise ShapeMismatchError(
            f"{side} caliper endpoint ({endpoint[0]:.0f}, {endpoint[1]:.0f}) lies outside the "
            f"{image.width}x{image.height} image; image and mask do not match"
        )
    window = image.pixels[y0:y1, x0:x1]
    std = float(np.std(window.astype(np.float64)))
    area = int(window.size)
    area_ok = area >= 0.25 * config.caliper_window**2
    passed = std >= config.caliper_std_min and area_ok
    if not area_ok:
        explanation = f"caliper window at the {side} endpoint is almost entirely off-image"
    elif passed:
        explanation = f"{side} endpoint shows clear local contrast (std {std:.1f})"
    else:
        explanation = f"{side} endpoint has too little local contrast (std {std:.1f}) for caliper placement"
    return CriterionResult(
        id=5 if side == "left" else 6,
        name=CRITERION_NAMES[5 if side == "left" else 6],
        passed=passed,
        evidence=(
            ("endpoint_x", endpoint[0]),
            ("endpoint_y", endpoint[1]),
            ("window_std", std),
            ("window_area", float(area)),
        ),
        explanation=explanation,
    )


def _indeterminate_caliper(line: CrlLine, side: str, config: AssessConfig) -> CriterionResult:
    left, right = left_right_endpoints(line)
    endpoint = left if side == "left" else right
    return CriterionResult(
        id=5 if side == "left" else 6,
        name=CRITERION_NAMES[5 if side == "left" else 6],
        passed=False,
        evidence=(
            ("endpoint_x", endpoint[0]),
            ("endpoint_y", endpoint[1]),
            ("window_std", 0.0),
            ("window_area", 0.0),
        ),
        explanation=f"no grayscale image given, so {side} caliper contrast cannot be judged",
        indeterminate=True,
    )


def ventral_reference(
    mask: raster.LabelMask,
    *,
    head: raster.Component | None = None,
    body: raster.Component | None = None,
) -> tuple[tuple[float, float], str]:
    """The point that marks the fetus' front: the gap centroid when a gap is
    segmented, else the head-body contact centroid, else the head/body
    centroid midpoint. Returns (point, source) with source in
    {"gap", "neck", "midpoint"}."""
    gap = mask.labels == raster.GAP
    if gap.any():
        ys, xs = np.nonzero(gap)
        return (float(xs.mean()), float(ys.mean())), "gap"
    neck = raster.adjacency_centroid(mask, raster.HEAD, raster.BODY)
    if neck is not None:
        return neck, "neck"
    if head is None:
        head = _largest(mask, raster.HEAD)
    if body is None:
        body = _largest(mask, raster.BODY)
    if head is None or body is None:
        raise MissingStructureError("head" if head is None else "body")
    mid = ((head.centroid[0] + body.centroid[0]) / 2, (head.centroid[1] + body.centroid[1]) / 2)
    return mid, "midpoint"


def eval_face_direction(
    mask: raster.LabelMask,
    line: CrlLine,
    config: AssessConfig = AssessConfig(),
    *,
    head: raster.Component | None = None,
    body: raster.Component | None = None,
    warnings_sink: list[str] | None = None,
) -> CriterionResult:
    """Criterion 7: the fetus' front must face up, judged by which side of the
    CRL line the ventral reference point falls on."""
    head = _require(head or _largest(mask, raster.HEAD), raster.HEAD, config.min_component_area)
    body = _require(body or _largest(mask, raster.BODY), raster.BODY, config.min_component_area)
    ref, source = ventral_reference(mask, head=head, body=body)
    if source == "midpoint" and warnings_sink is not None:
        warnings_sink.append(
            "no chin-chest gap or head-body contact found; face direction uses the centroid midpoint"
        )
    side = side_of_line(ref, line)
    if side is Side.ON:
        passed = False
        explanation = "face reference point sits exactly on the CRL line; direction is ambiguous"
        if warnings_sink is not None:
            warnings_sink.append("ambiguous face direction")
    else:
        passed = (side is Side.ABOVE) != config.face_up_flip
        facing = "up" if side is Side.ABOVE else "down"
        explanation = f"front of the fetus ({source}) lies {_SIDE_WORD[side]} the CRL line: face is {facing}"
    return CriterionResult(
        id=7,
        name=CRITERION_NAMES[7],
        passed=passed,
        evidence=(("ref_x", ref[0]), ("ref_y", ref[1]), ("side", float(int(side)))),
        explanation=explanation,
    )


def assess(
    image: raster.GrayImage | None,
    mask: raster.LabelMask,
    config: AssessConfig = AssessConfig(),
) -> CriteriaReport:
    """Run all seven criteria on a (scan, mask) pair and decide acceptability.

    With image=None, the two caliper criteria come back indeterminate
    (counted as failed) and a warning is recorded. Raises
    MissingStructureError when no usable head/body exists (no report is
    produced: without a CRL line the verdict would be meaningless) and
    ShapeMismatchError when image and mask dimensions differ.
    """
    if image is not None and image.pixels.shape != mask.labels.shape:
        raise ShapeMismatchError(
            f"image is {image.width}x{image.height} but mask is {mask.width}x{mask.height}"
        )
    head = _largest(mask, raster.HEAD)
    body = _largest(mask, raster.BODY)
    palate = _largest(mask, raster.PALATE)
    line = fit_crl_line(mask, config.min_component_area, head=head, body=body)

    warnings: list[str] = []
    results = [
        eval_neutral_position(mask, config, head=head),
        eval_horizontal_orientation(line, config),
        eval_fetal_palate(mask, config, palate=palate),
        eval_magnification(line, mask.width, config),
    ]
    if image is None:
        warnings.append("no grayscale image provided; caliper criteria 5 and 6 are indeterminate")
        results.append(_indeterminate_caliper(line, "left", config))
        results.append(_indeterminate_caliper(line, "right", config))
    else:
        results.append(eval_caliper_definition(image, line, "left", config))
        results.append(eval_caliper_definition(image, line, "right", config))
    results.append(
        eval_face_direction(mask, line, config, head=head, body=body, warnings_sink=warnings)
    )
    return CriteriaReport(results=tuple(results), crl_line=line, warnings=tuple(warnings))
