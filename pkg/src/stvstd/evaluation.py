"""Spatio-temporal detection metric (STDM) and a per-frame IC15-style baseline.

A predicted track counts as a correct detection of a ground-truth track
when both its track-level spatial IoU reaches ``theta_l`` and its temporal
IoU reaches ``theta_r``; pairs are accepted greedily and one-to-one.
Precision and recall are averaged over videos and combined into an
alpha-weighted harmonic F-score.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import PairingError
from .geometry import bounding_rect, iou_spatial
from .model import MatchConfig, TemporalRange, Track, VideoGroundTruth


def temporal_iou(a: TemporalRange, b: TemporalRange) -> float:
    inter = min(a.end, b.end) - max(a.start, b.start) + 1
    if inter <= 0:
        return 0.0
    return inter / (len(a) + len(b) - inter)


def track_spatial_iou(g: Track, p: Track, mode: str = "mean") -> float:
    """Spatial IoU of two tracks over their common frames.

    ``mean`` averages per-frame box IoU over the temporal intersection; a
    frame where only one track has a box contributes 0. ``enclosing``
    compares the axis-aligned boxes enclosing each whole track.
    """
    common = g.range.intersection(p.range)
    if common is None:
        raise ValueError(f"tracks {g.id} and {p.id} do not overlap in time")
    if mode == "enclosing":
        return iou_spatial(
            bounding_rect(m.quad for m in g.members.values()),
            bounding_rect(m.quad for m in p.members.values()),
        )
    total = 0.0
    for f in range(common.start, common.end + 1):
        a, b = g.quad_at(f), p.quad_at(f)
        if a is not None and b is not None:
            total += iou_spatial(a, b)
    return total / len(common)


@dataclass(frozen=True)
class Match:
    gt_track_id: int
    pred_track_id: int
    spatial_iou: float
    temporal_iou: float


@dataclass(frozen=True)
class MatchResult:
    matches: tuple[Match, ...]
    unmatched_gt: tuple[int, ...]
    unmatched_pred: tuple[int, ...]


def eligible_pairs(
    gt: Sequence[Track], pred: Sequence[Track], cfg: MatchConfig
) -> list[Match]:
    """All (gt, pred) pairs passing both thresholds."""
    out = []
    for g in gt:
        for p in pred:
            t = temporal_iou(g.range, p.range)
            if t <= 0.0 or t < cfg.theta_r:
                continue
            s = track_spatial_iou(g, p, cfg.spatial_mode)
            if s >= cfg.theta_l:
                out.append(Match(g.id, p.id, s, t))
    return out


def match_tracks(
    gt: VideoGroundTruth | Sequence[Track],
    pred: VideoGroundTruth | Sequence[Track],
    cfg: MatchConfig | None = None,
) -> MatchResult:
    cfg = cfg or MatchConfig()
    gt_tracks = gt.tracks if isinstance(gt, VideoGroundTruth) else tuple(gt)
    pred_tracks = pred.tracks if isinstance(pred, VideoGroundTruth) else tuple(pred)

    cands = eligible_pairs(gt_tracks, pred_tracks, cfg)
    cands.sort(key=lambda m: (-(m.spatial_iou * m.temporal_iou), m.gt_track_id, m.pred_track_id))
    used_g: set[int] = set()
    used_p: set[int] = set()
    accepted = []
    for m in cands:
        if m.gt_track_id in used_g or m.pred_track_id in used_p:
            continue
        accepted.append(m)
        used_g.add(m.gt_track_id)
        used_p.add(m.pred_track_id)
    return MatchResult(
        tuple(accepted),
        tuple(t.id for t in gt_tracks if t.id not in used_g),
        tuple(t.id for t in pred_tracks if t.id not in used_p),
    )


@dataclass(frozen=True)
class VideoScore:
    video_id: str
    hits: int
    estimated: int
    truth: int

    @property
    def precision(self) -> float:
        if self.estimated == 0:
            return 1.0 if self.truth == 0 else 0.0
        return self.hits / self.estimated

    @property
    def recall(self) -> float:
        if self.truth == 0:
            return 1.0
        return self.hits / self.truth


@dataclass(frozen=True)
class Scorecard:
    per_video: tuple[VideoScore, ...]
    precision: float
    recall: float
    f_score: float
    config: MatchConfig = field(default_factory=MatchConfig)

    def to_dict(self) -> dict:
        return {
            "protocol": "stdm",
            "theta_l": self.config.theta_l,
            "theta_r": self.config.theta_r,
            "alpha": self.config.alpha,
            "videos": [
                {"id": v.video_id, "H": v.hits, "E": v.estimated, "T": v.truth,
                 "p": v.precision, "r": v.recall}
                for v in self.per_video
            ],
            "P": self.precision,
            "R": self.recall,
            "F": self.f_score,
        }


def f_measure(p: float, r: float, alpha: float = 0.5) -> float:
    if p <= 0.0 or r <= 0.0:
        return 0.0
    return 1.0 / (alpha / p + (1.0 - alpha) / r)


def aggregate(per_video: Iterable[VideoScore], cfg: MatchConfig | None = None) -> Scorecard:
    """Average per-video precision/recall terms and combine them."""
    cfg = cfg or MatchConfig()
    vids = tuple(sorted(per_video, key=lambda v: v.video_id))
    if not vids:
        return Scorecard((), 0.0, 0.0, 0.0, cfg)
    p = sum(v.precision for v in vids) / len(vids)
    r = sum(v.recall for v in vids) / len(vids)
    return Scorecard(vids, p, r, f_measure(p, r, cfg.alpha), cfg)


def pair_videos(
    gt_videos: Iterable[VideoGroundTruth], pred_videos: Iterable[VideoGroundTruth]
) -> list[tuple[VideoGroundTruth, VideoGroundTruth]]:
    gt_map = _by_id(gt_videos, "ground truth")
    pred_map = _by_id(pred_videos, "prediction")
    missing = sorted(gt_map.keys() - pred_map.keys())
    extra = sorted(pred_map.keys() - gt_map.keys())
    if missing or extra:
        raise PairingError(
            f"video sets differ: missing predictions for {missing}, no ground truth for {extra}"
        )
    return [(gt_map[k], pred_map[k]) for k in sorted(gt_map)]


def _by_id(videos: Iterable[VideoGroundTruth], what: str) -> dict[str, VideoGroundTruth]:
    out: dict[str, VideoGroundTruth] = {}
    for v in videos:
        if v.video_id in out:
            raise PairingError(f"duplicate {what} video id {v.video_id!r}")
        out[v.video_id] = v
    return out


def score_video(gt: VideoGroundTruth, pred: VideoGroundTruth, cfg: MatchConfig) -> VideoScore:
    res = match_tracks(gt, pred, cfg)
    return VideoScore(gt.video_id, len(res.matches), len(pred.tracks), len(gt.tracks))


def stdm(
    gt_videos: Iterable[VideoGroundTruth],
    pred_videos: Iterable[VideoGroundTruth],
    cfg: MatchConfig | None = None,
) -> Scorecard:
    cfg = cfg or MatchConfig()
    return aggregate((score_video(g, p, cfg) for g, p in pair_videos(gt_videos, pred_videos)), cfg)


@dataclass(frozen=True)
class FrameScore:
    tp: int
    detections: int
    truth: int

    @property
    def precision(self) -> float:
        if self.detections == 0:
            return 1.0 if self.truth == 0 else 0.0
        return self.tp / self.detections

    @property
    def recall(self) -> float:
        if self.truth == 0:
            return 1.0
        return self.tp / self.truth

    @property
    def f_score(self) -> float:
        return f_measure(self.precision, self.recall)

    def to_dict(self, theta: float) -> dict:
        return {
            "protocol": "ic15",
            "theta": theta,
            "TP": self.tp,
            "D": self.detections,
            "G": self.truth,
            "P": self.precision,
            "R": self.recall,
            "F": self.f_score,
        }


def _frame_boxes(video: VideoGroundTruth) -> dict[int, list]:
    frames: dict[int, list] = {}
    for t in sorted(video.tracks, key=lambda t: t.id):
        for f, m in t.members.items():
            frames.setdefault(f, []).append(m.quad)
    return frames


def greedy_frame_matches(gt_quads: Sequence, det_quads: Sequence, theta: float) -> int:
    pairs = []
    for i, g in enumerate(gt_quads):
        for j, d in enumerate(det_quads):
            iou = iou_spatial(g, d)
            if iou >= theta:
                pairs.append((-iou, i, j))
    pairs.sort()
    used_g: set[int] = set()
    used_d: set[int] = set()
    for _, i, j in pairs:
        if i not in used_g and j not in used_d:
            used_g.add(i)
            used_d.add(j)
    return len(used_g)


def ic15_frame_eval(
    gt_videos: Iterable[VideoGroundTruth],
    pred_videos: Iterable[VideoGroundTruth],
    theta: float = 0.5,
) -> FrameScore:
    """Per-frame one-to-one matching, micro-averaged over all frames."""
    tp = n_det = n_gt = 0
    for g, p in pair_videos(gt_videos, pred_videos):
        gf, pf = _frame_boxes(g), _frame_boxes(p)
        for f in sorted(gf.keys() | pf.keys()):
            gq, pq = gf.get(f, []), pf.get(f, [])
            n_gt += len(gq)
            n_det += len(pq)
            tp += greedy_frame_matches(gq, pq, theta)
    return FrameScore(tp, n_det, n_gt)
