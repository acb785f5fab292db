"""crlqa: explainable quality assessment of CRL ultrasound views from segmentation masks."""

from .criteria import AssessConfig, CriteriaReport, CriterionResult, assess
from .geometry import CrlLine, Side, fit_crl_line, horizontal_extent, line_angle, principal_axis, side_of_line
from .metrics import (
    AggregateScores,
    ClassificationScores,
    ConfusionCounts,
    OverlapScores,
    aggregate_overlap,
    classification_scores,
    confusion_counts,
    overlap_scores,
)
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
from .phantom import EllipseSpec, PhantomParams, PhantomTruth, generate_phantom, sample_params, scene_params
from .raster import (
    BACKGROUND,
    BODY,
    GAP,
    HEAD,
    PALATE,
    Component,
    GrayImage,
    LabelMask,
    adjacency_centroid,
    connected_components,
    decode_image,
    decode_mask,
    encode_image,
    encode_mask,
    largest_component,
)

__version__ = "0.1.0"

__all__ = [
    "AssessConfig",
    "CriteriaReport",
    "CriterionResult",
    "assess",
    "CrlLine",
    "Side",
    "fit_crl_line",
    "horizontal_extent",
    "line_angle",
    "principal_axis",
    "side_of_line",
    "AggregateScores",
    "ClassificationScores",
    "ConfusionCounts",
    "OverlapScores",
    "aggregate_overlap",
    "classification_scores",
    "confusion_counts",
    "overlap_scores",
    "RunConfig",
    "SpreadsheetRow",
    "canonical_json",
    "load_config",
    "read_spreadsheet",
    "render_overlay",
    "write_report",
    "write_spreadsheet",
    "EllipseSpec",
    "PhantomParams",
    "PhantomTruth",
    "generate_phantom",
    "sample_params",
    "scene_params",
    "BACKGROUND",
    "BODY",
    "GAP",
    "HEAD",
    "PALATE",
    "Component",
    "GrayImage",
    "LabelMask",
    "adjacency_centroid",
    "connected_components",
    "decode_image",
    "decode_mask",
    "encode_image",
    "encode_mask",
    "largest_component",
]
