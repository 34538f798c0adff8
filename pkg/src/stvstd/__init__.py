"""Spatio-temporal video scene text detection: temporal clustering and STDM evaluation."""

__version__ = "0.1.0"

from .errors import (
    GenerationError,
    InputError,
    InvalidGeometryError,
    PairingError,
    ParseError,
    SchemaError,
    StvstdError,
)
from .geometry import (
    Point2,
    Quadrilateral,
    area,
    centroid,
    expand,
    intersect_convex,
    iou_spatial,
    normalize,
    short_side,
)
from .model import (
    ClusterConfig,
    MatchConfig,
    Member,
    TemporalRange,
    TextPoint,
    Track,
    VideoDetections,
    VideoGroundTruth,
)
from .formats import parse_detections, parse_ground_truth, serialize_tracks
from .clustering import cluster_video
from .evaluation import ic15_frame_eval, match_tracks, stdm, temporal_iou, track_spatial_iou
from .attributes import frame_density, lifecycle_class, scale_class
