"""Axis estimation and CRL line construction from head+body masks.

The CRL line joins the crown (head-side extreme) and rump (body-side extreme)
of the two largest head/body components, measured along their joint principal
axis. Angles are signed degrees in (-90, 90], 0 = horizontal, positive when
the line descends left-to-right (y grows downward).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import raster
from .errors import DegenerateGeometryError, IsotropicAxisError, MissingStructureError

DEFAULT_MIN_COMPONENT_AREA = 50

# relative eigenvalue gap below which a blob has no usable axis
_ISOTROPY_RTOL = 1e-9


class Side(IntEnum):
    """Side of a point relative to a CRL line, in y-down coordinates."""

    ABOVE = -1
    ON = 0
    BELOW = 1


@dataclass(frozen=True)
class CrlLine:
    """Crown and rump endpoints with derived length and signed angle."""

    crown: tuple[float, float]
    rump: tuple[float, float]
    length_px: float
    angle_deg: float

    def __post_init__(self):
        if self.length_px <= 0:
            raise DegenerateGeometryError("CRL line must have positive length")
        expected = line_angle(self.crown, self.rump)
        if abs(expected - self.angle_deg) > 1e-9:
            raise ValueError(
                f"angle_deg {self.angle_deg} inconsistent with endpoints (expected {expected})"
            )

    @classmethod
    def from_endpoints(cls, crown: tuple[float, float], rump: tuple[float, float]) -> "CrlLine":
        length = math.hypot(rump[0] - crown[0], rump[1] - crown[1])
        if length == 0:
            raise DegenerateGeometryError("crown and rump coincide")
        return cls(
            crown=(float(crown[0]), float(crown[1])),
            rump=(float(rump[0]), float(rump[1])),
            length_px=length,
            angle_deg=line_angle(crown, rump),
        )


def line_angle(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Undirected angle of the a-b line, folded into (-90, 90] degrees."""
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    if dx == 0 and dy == 0:
        raise DegenerateGeometryError("cannot take the angle of coincident points")
    ang = math.degrees(math.atan2(dy, dx))
    if ang > 90.0:
        ang -= 180.0
    elif ang <= -90.0:
        ang += 180.0
    return ang


def _coerce_points(pixels) -> np.ndarray:
    if isinstance(pixels, np.ndarray):
        pts = pixels
    else:
        pts = np.asarray(sorted(pixels) if isinstance(pixels, (set, frozenset)) else list(pixels))
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise ValueError(f"expected an (n, 2) point array, got shape {pts.shape}")
    return pts


def _scaled_covariance(pts: np.ndarray) -> tuple[np.ndarray, float, float, int]:
    """Central second moments scaled by n^2, plus the centroid.

    For integer coordinates the scaled moments are computed in exact integer
    arithmetic, which makes them (and everything derived from them) strictly
    invariant under integer translation of the input.
    """
    n = pts.shape[0]
    if np.issubdtype(pts.dtype, np.integer):
        xs = pts[:, 0].astype(np.int64)
        ys = pts[:, 1].astype(np.int64)
        sx, sy = int(xs.sum()), int(ys.sum())
        sxx = int(np.dot(xs, xs))
        syy = int(np.dot(ys, ys))
        sxy = int(np.dot(xs, ys))
        cxx = float(n * sxx - sx * sx)
        cyy = float(n * syy - sy * sy)
        cxy = float(n * sxy - sx * sy)
        cx, cy = sx / n, sy / n
    else:
        fpts = pts.astype(np.float64)
        cx, cy = fpts.mean(axis=0)
        dx = fpts[:, 0] - cx
        dy = fpts[:, 1] - cy
        cxx = float(np.dot(dx, dx)) * n
        cyy = float(np.dot(dy, dy)) * n
        cxy = float(np.dot(dx, dy)) * n
    cov = np.array([[cxx, cxy], [cxy, cyy]], dtype=np.float64)
    return cov, float(cx), float(cy), n


def principal_axis(pixels) -> tuple[tuple[float, float], tuple[float, float]]:
    """Centroid and dominant-axis unit direction of a point cloud.

    The direction is the covariance eigenvector with the larger eigenvalue,
    oriented so its x-component is >= 0 (y > 0 when x is exactly 0).
    Raises DegenerateGeometryError for coincident points and IsotropicAxisError
    when both eigenvalues are (numerically) equal.
    """
    pts = _coerce_points(pixels)
    if pts.shape[0] < 2:
        raise DegenerateGeometryError("need at least two pixels for an axis")
    cov, cx, cy, _ = _scaled_covariance(pts)
    if cov[0, 0] == 0 and cov[1, 1] == 0:
        raise DegenerateGeometryError("all pixels coincide; axis undefined")
    evals, evecs = np.linalg.eigh(cov)
    lo, hi = float(evals[0]), float(evals[1])
    if hi - lo <= _ISOTROPY_RTOL * hi:
        raise IsotropicAxisError("blob is isotropic; no preferred axis")
    d = evecs[:, 1]
    if d[0] < 0 or (d[0] == 0 and d[1] < 0):
        d = -d
    return (cx, cy), (float(d[0]), float(d[1]))


def _extreme_pixel(
    pixels: np.ndarray, proj: np.ndarray, perp: np.ndarray, band: float, take_max: bool
) -> tuple[float, float]:
    # On a blunt (circular) end, many boundary pixels project within half a
    # pixel of the true extreme and the winner is a rasterization accident
    # that can swing the line angle by several degrees. All pixels within
    # half a pixel of the extreme projection count as tied; the tie goes to
    # the pixel nearest the axis, then smaller y, then smaller x.
    if take_max:
        cand = np.nonzero(proj >= proj.max() - band)[0]
    else:
        cand = np.nonzero(proj <= proj.min() + band)[0]
    sel = pixels[cand]
    order = np.lexsort((sel[:, 0], sel[:, 1], np.abs(perp[cand])))
    p = sel[order[0]]
    return float(p[0]), float(p[1])


def fit_crl_line(
    mask: raster.LabelMask,
    min_component_area: int = DEFAULT_MIN_COMPONENT_AREA,
    *,
    head: raster.Component | None = None,
    body: raster.Component | None = None,
) -> CrlLine:
    """Fit the CRL line to the largest head and body components of a mask.

    Crown is the head pixel with extreme projection onto the joint principal
    axis on the head-centroid side; rump is the opposite body extreme. Ties
    break toward smaller y, then smaller x. Raises MissingStructureError when
    either class is absent or below min_component_area. Precomputed largest
    components can be passed to skip re-labeling.
    """
    if head is None:
        head = raster.largest_component(raster.connected_components(mask, raster.HEAD))
    if head is None or head.area < min_component_area:
        raise MissingStructureError("head", f"largest component area {0 if head is None else head.area} < {min_component_area}")
    if body is None:
        body = raster.largest_component(raster.connected_components(mask, raster.BODY))
    if body is None or body.area < min_component_area:
        raise MissingStructureError("body", f"largest component area {0 if body is None else body.area} < {min_component_area}")

    joint = np.vstack([head.pixels, body.pixels])
    _, direction = principal_axis(joint)
    d = np.asarray(direction)
    d_perp = np.array([-d[1], d[0]])

    # n-scaled offsets (n*p - sum) keep integer exactness, so the chosen
    # pixels are strictly translation-equivariant.
    n = joint.shape[0]
    total = joint.astype(np.int64).sum(axis=0)
    off_h = (n * head.pixels.astype(np.int64) - total).astype(np.float64)
    off_b = (n * body.pixels.astype(np.int64) - total).astype(np.float64)
    ph, qh = off_h @ d, off_h @ d_perp
    pb, qb = off_b @ d, off_b @ d_perp
    band = 0.5 * n  # projections are n-scaled, so this is half a pixel

    head_first = ph.mean() <= pb.mean()
    crown = _extreme_pixel(head.pixels, ph, qh, band, take_max=not head_first)
    rump = _extreme_pixel(body.pixels, pb, qb, band, take_max=head_first)
    return CrlLine.from_endpoints(crown, rump)


def horizontal_extent(line: CrlLine) -> float:
    """Length of the line's projection onto the horizontal axis, in pixels."""
    return abs(line.crown[0] - line.rump[0])


def side_of_line(p: tuple[float, float], line: CrlLine) -> Side:
    """Which side of the CRL line a point falls on, viewed with y downward.

    Endpoints are ordered left-to-right before the cross product, so the
    answer depends on the line, not on crown/rump labeling. Points within
    1e-9 * length of the line count as ON.
    """
    a, b = line.crown, line.rump
    if a[0] > b[0]:
        a, b = b, a
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) < 1e-9 * line.length_px:
        return Side.ON
    return Side.BELOW if cross > 0 else Side.ABOVE
