"""Temporal clustering of per-frame detections into text tracks.

Detections are swept frame by frame. Each one joins the nearest live
cluster whose most recent member is at most ``eps`` frames back and whose
center box is closer than ``tau_d`` (distance = 1 - IoU); otherwise it
starts a new cluster. The most recently added member becomes the cluster
center. Afterwards short, low-confidence clusters are discarded as noise,
frame gaps inside surviving clusters are filled, and each cluster becomes
a :class:`~stvstd.model.Track` whose range is its temporal label.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import InputError, InvalidGeometryError
from .geometry import iou_spatial, mean_quad
from .model import ClusterConfig, Member, TextPoint, Track, VideoDetections

log = logging.getLogger(__name__)


@dataclass
class WorkingCluster:
    id: int
    members: list[TextPoint] = field(default_factory=list)
    sum_conf: float = 0.0

    @property
    def center(self) -> TextPoint:
        return self.members[-1]

    @property
    def first_frame(self) -> int:
        return self.members[0].frame

    @property
    def last_frame(self) -> int:
        return self.members[-1].frame

    @property
    def lifecycle(self) -> int:
        return self.last_frame - self.first_frame + 1

    @property
    def confidence(self) -> float:
        return self.sum_conf / len(self.members)

    def add(self, p: TextPoint) -> None:
        if self.members and p.frame < self.last_frame:
            raise InputError("cluster members must arrive in frame order")
        self.members.append(p)
        self.sum_conf += p.confidence


def dist_points(p: TextPoint, q: TextPoint) -> float:
    return 1.0 - iou_spatial(p.quad, q.quad)


def dist_point_cluster(p: TextPoint, c: WorkingCluster) -> float:
    return dist_points(p, c.center)


def sweep(points: list[TextPoint], cfg: ClusterConfig) -> list[WorkingCluster]:
    """Online assignment pass. ``points`` must be in non-decreasing frame order."""
    clusters: list[WorkingCluster] = []
    live: list[WorkingCluster] = []
    frame = -1
    taken: set[int] = set()
    for p in points:
        if p.frame < frame:
            raise InputError(f"frame {p.frame} arrives after frame {frame}")
        if p.frame != frame:
            frame = p.frame
            taken = set()
            live = [c for c in live if frame - c.last_frame <= cfg.eps]
        best: WorkingCluster | None = None
        best_d = 0.0
        for c in live:
            if c.id in taken:
                continue
            d = dist_point_cluster(p, c)
            # live is in creation order, so strict < keeps the lowest id on ties
            if d < cfg.tau_d and (best is None or d < best_d):
                best, best_d = c, d
        if best is None:
            best = WorkingCluster(len(clusters))
            clusters.append(best)
            live.append(best)
        best.add(p)
        taken.add(best.id)
    return clusters


def is_noise(c: WorkingCluster, tau_l: int, tau_c: float, rule: str = "and") -> bool:
    short = c.lifecycle < tau_l
    weak = c.confidence < tau_c
    return (short and weak) if rule == "and" else (short or weak)


def filter_noise(
    clusters: list[WorkingCluster], tau_l: int, tau_c: float, rule: str = "and"
) -> tuple[list[WorkingCluster], list[TextPoint]]:
    kept: list[WorkingCluster] = []
    noise: list[TextPoint] = []
    for c in clusters:
        if is_noise(c, tau_l, tau_c, rule):
            noise.extend(c.members)
        else:
            kept.append(c)
    return kept, noise


def interpolate_gaps(c: WorkingCluster) -> WorkingCluster:
    """Fill every missing frame with the mean of the members flanking the gap.

    All frames of one gap receive the same box and confidence. Returns a
    new cluster; the input is left untouched.
    """
    out = WorkingCluster(c.id)
    prev: TextPoint | None = None
    for p in c.members:
        if prev is not None and p.frame - prev.frame > 1:
            conf = (prev.confidence + p.confidence) / 2.0
            try:
                quad = mean_quad(prev.quad, p.quad)
            except InvalidGeometryError:
                # averaged outline folded over; reuse the earlier box
                log.debug("cluster %d: mean box at frames %d-%d invalid", c.id, prev.frame, p.frame)
                quad = prev.quad
            for f in range(prev.frame + 1, p.frame):
                out.add(TextPoint(f, quad, conf, interpolated=True))
        out.add(p)
        prev = p
    return out


def to_track(c: WorkingCluster, track_id: int) -> Track:
    return Track(
        track_id,
        {p.frame: Member(p.quad, p.confidence, p.interpolated) for p in c.members},
    )


def cluster_video(
    dets: VideoDetections, cfg: ClusterConfig | None = None
) -> tuple[list[Track], list[TextPoint]]:
    """Run the full pipeline on one video: sweep, noise removal, gap filling."""
    cfg = cfg or ClusterConfig()
    prev = -1
    for f, _ in dets.frames:
        if f <= prev:
            raise InputError(f"frames out of order at frame {f}")
        prev = f
    clusters = sweep(dets.points(), cfg)
    kept, noise = filter_noise(clusters, cfg.tau_l, cfg.tau_c, cfg.noise_rule)
    tracks = [to_track(interpolate_gaps(c), i) for i, c in enumerate(kept)]
    log.info(
        "video %s: %d clusters, %d tracks, %d noise points",
        dets.video_id, len(clusters), len(tracks), len(noise),
    )
    return tracks, noise
