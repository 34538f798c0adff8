import math

import numpy as np
import pytest
from hypothesis import strategies as st

from stvstd.geometry import Quadrilateral, normalize
from stvstd.model import Member, Track, VideoDetections, VideoGroundTruth
from stvstd.synth import random_convex_quad


def square(x0, y0, side=1.0):
    return Quadrilateral.rect(x0, y0, x0 + side, y0 + side)


def make_track(tid, frames, quad=None, conf=1.0):
    """Track with the same box (default unit square) on every listed frame."""
    quad = quad or square(0, 0)
    if callable(quad):
        return Track(tid, {f: Member(quad(f), conf) for f in frames})
    return Track(tid, {f: Member(quad, conf) for f in frames})


def video(vid, *tracks):
    return VideoGroundTruth(vid, tuple(tracks))


def detections(vid, frame_items, frame_count=None):
    """``frame_items``: {frame: [(quad, conf), ...]}"""
    frames = tuple((f, tuple(items)) for f, items in sorted(frame_items.items()))
    if frame_count is None:
        frame_count = (max(frame_items) + 1) if frame_items else 0
    return VideoDetections(vid, frame_count, frames)


@st.composite
def convex_quads(draw, span=100.0):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    size = draw(st.floats(1.0, span / 2))
    cx = draw(st.floats(-span, span))
    cy = draw(st.floats(-span, span))
    return random_convex_quad(rng, cx, cy, size)


@st.composite
def overlapping_quad_pairs(draw):
    a = draw(convex_quads(span=10.0))
    cx = sum(x for x, _ in a.vertices) / 4
    cy = sum(y for _, y in a.vertices) / 4
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    b = random_convex_quad(rng, cx + rng.uniform(-3, 3), cy + rng.uniform(-3, 3), rng.uniform(1, 10))
    return a, b


@pytest.fixture
def unit_square():
    return square(0, 0)


# -- acceptance reporting ---------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    n, title = crit
    _ACCEPTANCE.setdefault(n, (title, []))[1].append(report.outcome)


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, outcomes = _ACCEPTANCE[n]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
