"""Synthetic fetus scenes with analytically known criteria outcomes.

A phantom is a head disk and a body ellipse laid out along an axis, a
gap region of controlled area on the ventral side, and an optional palate
disk, all rotated as a rigid scene and rasterized. Because every quantity
the seven criteria look at is either set by construction or measured back
from the rendered mask, each phantom knows its own 7-bit truth vector.

Draws whose measurements fall inside a guard band around any decision
threshold are flagged margin_ok=False: only phantoms that every correct
evaluator must decide identically are used as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import raster
from .criteria import AssessConfig, caliper_window_bounds, left_right_endpoints
from .errors import CrlQaError, PhantomDegenerateError
from .geometry import CrlLine, fit_crl_line, horizontal_extent

FETUS_INTENSITY = 180
BACKGROUND_INTENSITY = 20
DEGRADE_WINDOW_PX = 30
GAP_CLEARANCE_PX = 2.5

# guard bands: a phantom is only a trustworthy oracle when each measured
# quantity clears its decision threshold by at least this much
GAP_RATIO_MARGIN = 0.02
ANGLE_MARGIN_DEG = 3.0
MAGNIFICATION_MARGIN = 0.03
PALATE_AREA_MARGIN = 15
CALIPER_STD_MARGIN = 5.0
FACE_OFFSET_MIN_PX = 3.0
ANGLE_FIDELITY_DEG = 2.0
BORDER_MARGIN_PX = 16
STRUCTURE_AREA_FACTOR = 2

_MAX_DRAW_TRIES = 200


@dataclass(frozen=True)
class EllipseSpec:
    """Axis-aligned-then-rotated ellipse: center, semi-axes a >= b, rotation
    of the a-axis in image degrees (y down)."""

    center: tuple[float, float]
    a: float
    b: float
    rotation_deg: float = 0.0

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError(f"need semi-axes a >= b > 0, got a={self.a}, b={self.b}")

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b


@dataclass(frozen=True)
class PhantomParams:
    width: int
    height: int
    head: EllipseSpec
    body: EllipseSpec
    flexion: float
    palate_present: bool
    palate_radius: float
    face_up: bool
    scene_rotation_deg: float
    scale: float
    speckle_seed: int
    speckle_sigma: float
    degrade_left_caliper: bool = False
    degrade_right_caliper: bool = False

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ValueError("phantom canvas must be at least 32x32")
        if self.flexion < 0:
            raise ValueError(f"flexion must be >= 0, got {self.flexion}")
        if not -45 < self.scene_rotation_deg < 45:
            raise ValueError(f"scene_rotation_deg must lie in (-45, 45), got {self.scene_rotation_deg}")
        if not 0 < self.scale < 1:
            raise ValueError(f"scale must lie in (0, 1), got {self.scale}")
        if self.palate_radius <= 0:
            raise ValueError("palate_radius must be positive")
        if self.speckle_sigma < 0:
            raise ValueError("speckle_sigma must be >= 0")


@dataclass(frozen=True)
class PhantomTruth:
    """Analytic criteria vector for one phantom, against default thresholds."""

    criteria: tuple[bool, bool, bool, bool, bool, bool, bool]
    expected_angle_deg: float
    expected_magnification: float
    margin_ok: bool

    @property
    def total_score(self) -> int:
        return sum(self.criteria)

    @property
    def accepted(self) -> bool:
        return self.total_score >= 4


def scene_params(
    *,
    width: int = 300,
    height: int = 280,
    extent_frac: float = 0.75,
    rotation_deg: float = 5.0,
    flexion: float = 0.10,
    palate_present: bool = True,
    palate_radius: float = 6.0,
    face_up: bool = True,
    degrade_left: bool = False,
    degrade_right: bool = False,
    speckle_seed: int = 0,
    speckle_sigma: float = 6.0,
) -> PhantomParams:
    """Lay out a head disk and body ellipse so the CRL line has roughly
    extent_frac * width horizontal extent after rotating by rotation_deg.

    The default arguments describe an all-favorable scene (all 7 criteria
    true under the default thresholds). Both ellipses are strongly tapered:
    a blunt outer end leaves a plateau of near-tie extreme pixels and lets
    rasterization wobble the measured CRL angle by a couple of degrees,
    while a tip curvature radius of a few pixels pins the endpoints.
    """
    chord = extent_frac * width / math.cos(math.radians(rotation_deg))
    tip_radius = 3.0  # curvature radius b^2/a at the ellipse tips
    head_a = 0.22 * chord
    head_b = math.sqrt(tip_radius * head_a)
    overlap = 4.0
    body_a = (chord + overlap - 2 * head_a) / 2
    body_b = math.sqrt(tip_radius * body_a)
    head = EllipseSpec(center=(0.0, 0.0), a=head_a, b=head_b)
    body = EllipseSpec(center=(head_a + body_a - overlap, 0.0), a=body_a, b=body_b)
    # recenter so the joint area centroid sits at the image center
    cx = (head.area * head.center[0] + body.area * body.center[0]) / (head.area + body.area)
    dx, dy = width / 2 - cx, height / 2
    head = EllipseSpec(center=(head.center[0] + dx, dy), a=head.a, b=head.b)
    body = EllipseSpec(center=(body.center[0] + dx, dy), a=body.a, b=body.b)
    return PhantomParams(
        width=width,
        height=height,
        head=head,
        body=body,
        flexion=flexion,
        palate_present=palate_present,
        palate_radius=palate_radius,
        face_up=face_up,
        scene_rotation_deg=rotation_deg,
        scale=extent_frac,
        speckle_seed=speckle_seed,
        speckle_sigma=speckle_sigma,
        degrade_left_caliper=degrade_left,
        degrade_right_caliper=degrade_right,
    )


def _rotate_about(p: tuple[float, float], center: tuple[float, float], deg: float) -> tuple[float, float]:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    dx, dy = p[0] - center[0], p[1] - center[1]
    return center[0] + c * dx - s * dy, center[1] + s * dx + c * dy


def _fill_ellipse(arr: np.ndarray, label: int, spec: EllipseSpec) -> None:
    h, w = arr.shape
    cx, cy = spec.center
    rad = math.radians(spec.rotation_deg)
    cr, sr = math.cos(rad), math.sin(rad)
    hx = math.sqrt((spec.a * cr) ** 2 + (spec.b * sr) ** 2)
    hy = math.sqrt((spec.a * sr) ** 2 + (spec.b * cr) ** 2)
    x0, x1 = max(int(math.floor(cx - hx)), 0), min(int(math.ceil(cx + hx)) + 1, w)
    y0, y1 = max(int(math.floor(cy - hy)), 0), min(int(math.ceil(cy + hy)) + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx, dy = xs - cx, ys - cy
    u = dx * cr + dy * sr
    v = -dx * sr + dy * cr
    inside = (u / spec.a) ** 2 + (v / spec.b) ** 2 <= 1.0
    arr[y0:y1, x0:x1][inside] = label


def _window_std(image: np.ndarray, endpoint: tuple[float, float], window: int) -> tuple[float, int]:
    h, w = image.shape
    x0, y0, x1, y1 = caliper_window_bounds(endpoint, window, w, h)
    win = image[y0:y1, x0:x1]
    if win.size == 0:
        return 0.0, 0
    return float(np.std(win.astype(np.float64))), int(win.size)


def _scene_shapes(params: PhantomParams):
    """All shapes of the scene after the rigid rotation, as (label, EllipseSpec)."""
    head, body = params.head, params.body
    ux = body.center[0] - head.center[0]
    uy = body.center[1] - head.center[1]
    norm = math.hypot(ux, uy)
    if norm == 0:
        raise PhantomDegenerateError("head and body centers coincide")
    ux, uy = ux / norm, uy / norm
    # unit normal pointing toward smaller y ("up"); ventral side for face_up
    nx, ny = uy, -ux
    if ny > 0:
        nx, ny = -nx, -ny

    center = (
        (head.area * head.center[0] + body.area * body.center[0]) / (head.area + body.area),
        (head.area * head.center[1] + body.area * body.center[1]) / (head.area + body.area),
    )
    shapes: list[tuple[int, EllipseSpec]] = [(raster.BODY, body), (raster.HEAD, head)]

    gap_r = math.sqrt(params.flexion * head.a * head.b)
    if gap_r >= 0.5:
        # centered on the joint centroid's axis projection so the carved-out
        # area barely tilts the principal axis; offset keeps the head-body
        # contact below (or above) the axis intact
        t = (center[0] - head.center[0]) * ux + (center[1] - head.center[1]) * uy
        px, py = head.center[0] + t * ux, head.center[1] + t * uy
        sign = 1.0 if params.face_up else -1.0
        off = gap_r + GAP_CLEARANCE_PX
        gap_c = (px + sign * nx * off, py + sign * ny * off)
        shapes.append((raster.GAP, EllipseSpec(center=gap_c, a=gap_r, b=gap_r)))

    if params.palate_present:
        pal_c = (head.center[0] - 0.35 * head.a * ux, head.center[1] - 0.35 * head.a * uy)
        shapes.append((raster.PALATE, EllipseSpec(center=pal_c, a=params.palate_radius, b=params.palate_radius)))

    rotated = []
    for label, spec in shapes:
        c = _rotate_about(spec.center, center, params.scene_rotation_deg)
        rotated.append((label, EllipseSpec(center=c, a=spec.a, b=spec.b,
                                           rotation_deg=spec.rotation_deg + params.scene_rotation_deg)))
    return rotated


def generate_phantom(params: PhantomParams) -> tuple[raster.GrayImage, raster.LabelMask, PhantomTruth]:
    """Render a phantom scene and derive its criteria ground truth.

    Pure: identical params (including speckle_seed) give identical pixels.
    Raises PhantomDegenerateError when the rendered head and body are
    missing, too small, or not touching.
    """
    labels = np.zeros((params.height, params.width), dtype=np.uint8)
    for label, spec in _scene_shapes(params):
        _fill_ellipse(labels, label, spec)
    mask = raster.LabelMask(labels)

    head = raster.largest_component(raster.connected_components(mask, raster.HEAD))
    body = raster.largest_component(raster.connected_components(mask, raster.BODY))
    cfg = AssessConfig()
    for comp, name in ((head, "head"), (body, "body")):
        if comp is None or comp.area < cfg.min_component_area:
            raise PhantomDegenerateError(f"rendered {name} is missing or below {cfg.min_component_area} px")
    if raster.adjacency_centroid(mask, raster.HEAD, raster.BODY) is None:
        raise PhantomDegenerateError("rendered head and body do not touch")

    base = np.where(np.isin(labels, (raster.HEAD, raster.BODY, raster.PALATE)),
                    float(FETUS_INTENSITY), float(BACKGROUND_INTENSITY))
    if params.speckle_sigma > 0:
        rng = np.random.default_rng(params.speckle_seed)
        base = base + rng.normal(0.0, params.speckle_sigma, size=base.shape)
    img = np.clip(np.rint(base), 0, 255).astype(np.uint8)

    try:
        line = fit_crl_line(mask, cfg.min_component_area, head=head, body=body)
    except CrlQaError as exc:
        raise PhantomDegenerateError(f"cannot fit a CRL line to the rendered scene: {exc}") from exc

    left, right = left_right_endpoints(line)
    for flag, endpoint in ((params.degrade_left_caliper, left), (params.degrade_right_caliper, right)):
        if flag:
            x0, y0, x1, y1 = caliper_window_bounds(endpoint, DEGRADE_WINDOW_PX, params.width, params.height)
            img[y0:y1, x0:x1] = np.uint8(round(float(img[y0:y1, x0:x1].mean())))

    image = raster.GrayImage(img)
    truth = _measure_truth(params, image, mask, line, head, body, cfg)
    return image, mask, truth


def _measure_truth(
    params: PhantomParams,
    image: raster.GrayImage,
    mask: raster.LabelMask,
    line: CrlLine,
    head: raster.Component,
    body: raster.Component,
    cfg: AssessConfig,
) -> PhantomTruth:
    # Decisions and margins recompute every measured quantity directly (no
    # criteria-evaluator calls) so the truth stays an independent reference.
    margins: list[bool] = []

    gap_area = mask.class_area(raster.GAP)
    ratio = gap_area / head.area
    c1 = cfg.gap_ratio_lo <= ratio <= cfg.gap_ratio_hi
    margins.append(abs(ratio - cfg.gap_ratio_lo) >= GAP_RATIO_MARGIN
                   and abs(ratio - cfg.gap_ratio_hi) >= GAP_RATIO_MARGIN)

    angle = line.angle_deg
    c2 = abs(angle) <= cfg.angle_limit_deg
    margins.append(abs(abs(angle) - cfg.angle_limit_deg) >= ANGLE_MARGIN_DEG
                   and abs(angle - params.scene_rotation_deg) <= ANGLE_FIDELITY_DEG)

    palate = raster.largest_component(raster.connected_components(mask, raster.PALATE))
    palate_area = 0 if palate is None else palate.area
    c3 = palate_area >= cfg.palate_min_area
    margins.append(abs(palate_area - cfg.palate_min_area) >= PALATE_AREA_MARGIN)

    magnification = horizontal_extent(line) / params.width
    c4 = magnification > cfg.magnification_min
    margins.append(abs(magnification - cfg.magnification_min) >= MAGNIFICATION_MARGIN)

    left, right = left_right_endpoints(line)
    caliper = []
    for endpoint in (left, right):
        std, area = _window_std(image.pixels, endpoint, cfg.caliper_window)
        caliper.append(std >= cfg.caliper_std_min and area >= 0.25 * cfg.caliper_window**2)
        margins.append(abs(std - cfg.caliper_std_min) >= CALIPER_STD_MARGIN
                       and area == cfg.caliper_window**2)
    c5, c6 = caliper

    if gap_area > 0:
        ys, xs = np.nonzero(mask.labels == raster.GAP)
        ref = (float(xs.mean()), float(ys.mean()))
    else:
        ref = raster.adjacency_centroid(mask, raster.HEAD, raster.BODY)
        if ref is None:
            ref = ((head.centroid[0] + body.centroid[0]) / 2, (head.centroid[1] + body.centroid[1]) / 2)
    a, b = left, right
    cross = (b[0] - a[0]) * (ref[1] - a[1]) - (b[1] - a[1]) * (ref[0] - a[0])
    c7 = (cross < 0) != cfg.face_up_flip  # negative cross = above the line in y-down coords
    margins.append(abs(cross) / line.length_px >= FACE_OFFSET_MIN_PX)

    occupied = mask.labels != raster.BACKGROUND
    ys, xs = np.nonzero(occupied)
    in_border = (xs.min() >= BORDER_MARGIN_PX and ys.min() >= BORDER_MARGIN_PX
                 and xs.max() < params.width - BORDER_MARGIN_PX
                 and ys.max() < params.height - BORDER_MARGIN_PX)
    min_area = STRUCTURE_AREA_FACTOR * cfg.min_component_area
    margins.append(in_border and head.area >= min_area and body.area >= min_area)

    return PhantomTruth(
        criteria=(c1, c2, c3, c4, c5, c6, c7),
        expected_angle_deg=params.scene_rotation_deg,
        expected_magnification=magnification,
        margin_ok=all(margins),
    )


def sample_params(seed: int, count: int) -> list[PhantomParams]:
    """Deterministic stream of margin-stable phantom parameter sets.

    Each criterion's outcome is an independent fair coin; draws whose
    rendered measurements miss the intended outcome or sit inside a guard
    band are rejected and redrawn. Same seed, same list.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    out: list[PhantomParams] = []
    for item in range(count):
        for _ in range(_MAX_DRAW_TRIES):
            want = rng.random(7) < 0.5

            if want[1]:  # horizontal orientation
                rot = rng.uniform(3.0, 12.0)
            else:
                rot = rng.uniform(18.0, 32.0)
            rot *= 1.0 if rng.random() < 0.5 else -1.0

            if want[3]:  # magnification
                hi = 0.78 if abs(rot) <= 16 else 0.70
                extent = rng.uniform(0.645, hi)
            else:
                extent = rng.uniform(0.44, 0.555)

            if want[0]:  # neutral position: gap inside the band
                flexion = rng.uniform(0.05, 0.20)
            else:  # hyperextended; a stable gap keeps the face reference usable
                flexion = rng.uniform(0.34, 0.42)

            params = scene_params(
                extent_frac=extent,
                rotation_deg=rot,
                flexion=flexion,
                palate_present=bool(want[2]),
                palate_radius=rng.uniform(5.0, 8.0),
                face_up=bool(want[6]),
                degrade_left=not want[4],
                degrade_right=not want[5],
                speckle_seed=int(rng.integers(0, 2**31)),
                speckle_sigma=rng.uniform(4.0, 9.0),
            )
            try:
                _, _, truth = generate_phantom(params)
            except PhantomDegenerateError:
                continue
            if truth.margin_ok and truth.criteria == tuple(bool(v) for v in want):
                out.append(params)
                break
        else:
            raise RuntimeError(f"no margin-stable phantom found for item {item} after {_MAX_DRAW_TRIES} tries")
    return out
