"""Raster data model: grayscale scans, class-label masks, connected components.

Coordinate convention for the whole package: origin at the top-left pixel,
x grows rightward, y grows downward. Centroids and other real-valued points
are pixel-center coordinates, so pixel (0, 0) has center (0.0, 0.0).
Components use 8-connectivity; boundaries between classes use 4-adjacency.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DecodeError, InvalidLabelError

BACKGROUND = 0
HEAD = 1
BODY = 2
PALATE = 3
GAP = 4

CLASS_NAMES = {
    BACKGROUND: "background",
    HEAD: "head",
    BODY: "body",
    PALATE: "palate",
    GAP: "gap",
}

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def _as_locked_u8(arr: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(arr)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"{what} must be a non-empty 2D array, got shape {a.shape}")
    if a.dtype != np.uint8:
        if not np.issubdtype(a.dtype, np.integer) and not np.issubdtype(a.dtype, np.bool_):
            raise ValueError(f"{what} must hold integers, got dtype {a.dtype}")
        if a.min() < 0 or a.max() > 255:
            raise ValueError(f"{what} values must lie in [0, 255]")
        a = a.astype(np.uint8)
    else:
        a = a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GrayImage:
    """8-bit single-channel scan. `pixels` is a read-only (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", _as_locked_u8(self.pixels, "image"))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class LabelMask:
    """Class-id raster: 0=background, 1=head, 2=body, 3=palate, 4=gap.

    `labels` is a read-only (height, width) uint8 array.
    """

    labels: np.ndarray

    def __post_init__(self):
        a = _as_locked_u8(self.labels, "mask")
        if a.max() > GAP:
            ys, xs = np.nonzero(a > GAP)
            raise InvalidLabelError(int(a[ys[0], xs[0]]), int(xs[0]), int(ys[0]))
        object.__setattr__(self, "labels", a)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def class_area(self, label: int) -> int:
        """Total pixel count of one class over the whole mask."""
        return int(np.count_nonzero(self.labels == label))


@dataclass(frozen=True)
class Component:
    """One maximal 8-connected region of a single class.

    `pixels` is an (area, 2) array of (x, y) coordinates in row-major scan
    order; `bbox` is (x_min, y_min, x_max, y_max) inclusive.
    """

    label: int
    pixels: np.ndarray
    area: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.int32)
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)


def _open_single_channel(payload: bytes) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(payload))
        img.load()
    except Exception as exc:
        raise DecodeError(f"cannot decode image payload: {exc}") from exc
    if img.mode != "L":
        raise DecodeError(f"expected 8-bit single-channel payload, got mode {img.mode!r}")
    return np.asarray(img, dtype=np.uint8)


def decode_image(payload: bytes) -> GrayImage:
    """Decode an 8-bit single-channel PNG or PGM payload into a GrayImage."""
    return GrayImage(_open_single_channel(payload))


def encode_image(image: GrayImage, fmt: str = "png") -> bytes:
    """Encode a GrayImage as a PNG (default) or binary PGM payload."""
    return _encode_u8(image.pixels, fmt)


def decode_mask(payload: bytes) -> LabelMask:
    """Decode an 8-bit single-channel PNG or PGM whose pixel values are class ids.

    Raises DecodeError for malformed payloads and InvalidLabelError (with the
    offending value and position) when any pixel exceeds the class palette.
    """
    return LabelMask(_open_single_channel(payload))


def encode_mask(mask: LabelMask, fmt: str = "png") -> bytes:
    """Encode a LabelMask as a PNG (default) or binary PGM payload; inverse of decode_mask."""
    return _encode_u8(mask.labels, fmt)


def _encode_u8(arr: np.ndarray, fmt: str) -> bytes:
    fmt = fmt.lower()
    if fmt not in ("png", "pgm"):
        raise ValueError(f"unsupported format {fmt!r}; use 'png' or 'pgm'")
    buf = io.BytesIO()
    Image.fromarray(np.asarray(arr), mode="L").save(buf, format="PNG" if fmt == "png" else "PPM")
    return buf.getvalue()


def connected_components(mask: LabelMask, label: int) -> list[Component]:
    """All maximal 8-connected components of one class.

    Sorted by descending area; ties broken by the (y_min, x_min) corner of
    the bounding box. Returns [] when the class is absent.
    """
    if label not in (HEAD, BODY, PALATE, GAP):
        raise ValueError(f"label must be one of 1..4, got {label}")
    binary = mask.labels == label
    labeled, n = ndimage.label(binary, structure=_EIGHT_CONNECTED)
    if n == 0:
        return []
    ys, xs = np.nonzero(binary)
    ids = labeled[ys, xs]
    order = np.argsort(ids, kind="stable")  # stable keeps row-major order within a component
    ys, xs, ids = ys[order], xs[order], ids[order]
    counts = np.bincount(ids, minlength=n + 1)[1:]
    stops = np.cumsum(counts)
    starts = stops - counts

    comps = []
    for k in range(n):
        cx = xs[starts[k]:stops[k]]
        cy = ys[starts[k]:stops[k]]
        comps.append(
            Component(
                label=label,
                pixels=np.column_stack([cx, cy]),
                area=int(counts[k]),
                centroid=(float(cx.mean()), float(cy.mean())),
                bbox=(int(cx.min()), int(cy.min()), int(cx.max()), int(cy.max())),
            )
        )
    comps.sort(key=lambda c: (-c.area, c.bbox[1], c.bbox[0]))
    return comps


def largest_component(components: list[Component]) -> Component | None:
    """First component of a connected_components result, or None for an empty list."""
    return components[0] if components else None


def adjacency_centroid(mask: LabelMask, label_a: int, label_b: int) -> tuple[float, float] | None:
    """Centroid of label_a pixels that 4-touch at least one label_b pixel.

    Returns None when the two classes share no 4-adjacent boundary.
    """
    if label_a == label_b:
        raise ValueError("labels must be distinct")
    for lab in (label_a, label_b):
        if lab not in (HEAD, BODY, PALATE, GAP):
            raise ValueError(f"label must be one of 1..4, got {lab}")
    a = mask.labels == label_a
    b = mask.labels == label_b
    near_b = np.zeros_like(b)
    near_b[1:, :] |= b[:-1, :]
    near_b[:-1, :] |= b[1:, :]
    near_b[:, 1:] |= b[:, :-1]
    near_b[:, :-1] |= b[:, 1:]
    touching = a & near_b
    if not touching.any():
        return None
    ys, xs = np.nonzero(touching)
    return float(xs.mean()), float(ys.mean())
