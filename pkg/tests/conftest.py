import numpy as np
import pytest

from emwatch.data import (
    MISSING_KEYPOINT,
    NUM_KEYPOINTS,
    ClassLabel,
    Keypoint,
    PoseFrame,
    Skeleton,
)


def make_skeleton(points, person_index=0, confidence=0.9, depths=None):
    """Skeleton from {index: (x, y)}; unlisted keypoints are missing."""
    keypoints = []
    for i in range(NUM_KEYPOINTS):
        if i in points:
            x, y = points[i]
            depth = None if depths is None else depths.get(i)
            keypoints.append(Keypoint(float(x), float(y), confidence, depth))
        else:
            keypoints.append(MISSING_KEYPOINT)
    return Skeleton(keypoints=tuple(keypoints), person_index=person_index)


def full_skeleton(origin=(200.0, 150.0), spacing=6.0, person_index=0, depth=None):
    """All 25 keypoints visible, laid out on a grid below ``origin``."""
    ox, oy = origin
    points = {i: (ox + spacing * (i % 5), oy + spacing * (i // 5)) for i in range(NUM_KEYPOINTS)}
    depths = None if depth is None else {i: depth for i in range(NUM_KEYPOINTS)}
    return make_skeleton(points, person_index=person_index, depths=depths)


def make_frame(t_ms, skeletons, marker=None, label=ClassLabel.NORMAL):
    return PoseFrame(
        timestamp_ms=t_ms,
        skeletons=tuple(skeletons),
        marker_px=marker,
        label=label,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
