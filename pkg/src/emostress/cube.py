"""Emotion cube geometry, calibration, and stress scoring.

Embeddings reduced to three coordinates are aligned to an affective cube
that places eight basic emotions at the corners of a signed unit cube
over the axes (dopamine, noradrenaline, serotonin).  Calibration searches
the 48 signed axis permutations for the one carrying per-emotion centroids
closest to their corners.  A clip's stress score is the softmin weight of
the Distress corner among all eight corner distances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidTauError, ShapeMismatchError, TooFewCentroidsError


class CubeEmotion(IntEnum):
    """Corner emotions in canonical enumeration order."""

    SHAME = 0
    DISTRESS = 1
    FEAR = 2
    ANGER = 3
    CONTEMPT_DISGUST = 4
    SURPRISE = 5
    JOY = 6
    INTEREST = 7


# rows follow CubeEmotion order; columns are (dopamine, noradrenaline, serotonin)
CORNERS = np.array(
    [
        [-1.0, -1.0, -1.0],  # shame
        [-1.0, +1.0, -1.0],  # distress
        [+1.0, -1.0, -1.0],  # fear
        [+1.0, +1.0, -1.0],  # anger
        [-1.0, -1.0, +1.0],  # contempt/disgust
        [-1.0, +1.0, +1.0],  # surprise
        [+1.0, -1.0, +1.0],  # joy
        [+1.0, +1.0, +1.0],  # interest
    ]
)

AXIS_NAMES = ("dopamine", "noradrenaline", "serotonin")


def corner_coordinates(emotion: CubeEmotion) -> np.ndarray:
    return CORNERS[int(emotion)].copy()


@dataclass
class NeurotransmitterLevels:
    dopamine: float
    noradrenaline: float
    serotonin: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dopamine, self.noradrenaline, self.serotonin])

    @classmethod
    def from_array(cls, p) -> "NeurotransmitterLevels":
        p = np.asarray(p, dtype=np.float64)
        if p.shape != (3,):
            raise ShapeMismatchError(f"expected 3 coordinates, got shape {p.shape}")
        return cls(float(p[0]), float(p[1]), float(p[2]))


@dataclass
class CubeCalibration:
    """Signed axis permutation: output axis i reads input coordinate
    permutation[i], flipped by signs[i] and stretched by scale."""

    permutation: tuple[int, int, int]
    signs: tuple[int, int, int]
    scale: float = 1.0
    residual: float = 0.0


def map_to_cube(calibration: CubeCalibration, points: np.ndarray) -> np.ndarray:
    """Apply the calibration to one (3,) point or an (n, 3) stack."""
    p = np.asarray(points, dtype=np.float64)
    if p.shape[-1] != 3:
        raise ShapeMismatchError(f"expected 3 coordinates per point, got shape {p.shape}")
    q = p[..., list(calibration.permutation)] * np.asarray(calibration.signs, dtype=np.float64)
    return q * calibration.scale


def calibrate(
    centroids: dict[CubeEmotion, np.ndarray], fit_scale: bool = False
) -> CubeCalibration:
    """Pick the signed axis permutation minimizing the summed squared
    distance from mapped centroids to their corners.

    All 48 candidates are scored; ties keep the earliest in the scan order
    (permutations lexicographic, signs with +1 before -1 per axis).  At
    least 3 emotions are required, otherwise several candidates fit any
    configuration equally well.  With fit_scale a non-negative isotropic
    scale is solved in closed form per candidate.
    """
    if len(centroids) < 3:
        raise TooFewCentroidsError(f"need centroids for >= 3 emotions, got {len(centroids)}")
    emotions = sorted(centroids.keys())
    points = np.stack([np.asarray(centroids[e], dtype=np.float64) for e in emotions])
    if points.shape != (len(emotions), 3):
        raise ShapeMismatchError("each centroid must have 3 coordinates")
    targets = CORNERS[[int(e) for e in emotions]]

    best: CubeCalibration | None = None
    for perm in itertools.permutations(range(3)):
        permuted = points[:, list(perm)]
        for signs in itertools.product((1, -1), repeat=3):
            mapped = permuted * np.asarray(signs, dtype=np.float64)
            scale = 1.0
            if fit_scale:
                denom = float((mapped * mapped).sum())
                if denom > 0.0:
                    scale = max(float((mapped * targets).sum()) / denom, 0.0)
            residual = float(((mapped * scale - targets) ** 2).sum())
            if best is None or residual < best.residual:
                best = CubeCalibration(
                    permutation=perm, signs=signs, scale=scale, residual=residual
                )
    return best


def nearest_corner(point) -> tuple[CubeEmotion, float, bool]:
    """Closest corner, its distance, and whether other corners tied.

    Ties resolve to the earliest corner in canonical order.
    """
    p = np.asarray(point, dtype=np.float64)
    if p.shape != (3,):
        raise ShapeMismatchError(f"expected 3 coordinates, got shape {p.shape}")
    # squared corner distances differ only through the -2*dot term
    dots = CORNERS @ p
    best = int(np.argmax(dots))
    tie = bool((dots == dots[best]).sum() > 1)
    distance = math.sqrt(max(float(p @ p - 2.0 * dots[best] + 3.0), 0.0))
    return CubeEmotion(best), distance, tie


def corner_distances(point) -> np.ndarray:
    p = np.asarray(point, dtype=np.float64)
    diffs = CORNERS - p
    return np.sqrt((diffs * diffs).sum(axis=1))


def corner_weights(point, tau: float = 1.0) -> np.ndarray:
    """Normalized softmin weights exp(-d_e^2/tau^2) over the 8 corners.

    The common minimum squared distance is subtracted before
    exponentiation so far-away points cannot underflow every weight; the
    normalized result is unchanged by that shift.
    """
    if tau <= 0.0:
        raise InvalidTauError(f"tau must be positive, got {tau}")
    p = np.asarray(point, dtype=np.float64)
    if p.shape != (3,):
        raise ShapeMismatchError(f"expected 3 coordinates, got shape {p.shape}")
    diffs = CORNERS - p
    sq = (diffs * diffs).sum(axis=1)
    shifted = (sq - sq.min()) / (tau * tau)
    weights = [math.exp(-s) for s in shifted]
    total = math.fsum(weights)
    return np.array([w / total for w in weights])


def stress_score(point, tau: float = 1.0) -> float:
    """The Distress corner's share of the softmin corner weights."""
    return float(corner_weights(point, tau)[int(CubeEmotion.DISTRESS)])


@dataclass
class StressResult:
    levels: NeurotransmitterLevels
    distance_to_distress: float
    score: float
    nearest: CubeEmotion
    is_stressed: bool
    tie: bool


def assess_stress(point, tau: float = 1.0, theta: float | None = None) -> StressResult:
    """Score one cube point.  Without theta a clip counts as stressed when
    Distress is its nearest corner; with theta, when score >= theta."""
    p = np.asarray(point, dtype=np.float64)
    nearest, _, tie = nearest_corner(p)
    score = stress_score(p, tau=tau)
    d_distress = float(np.linalg.norm(p - CORNERS[int(CubeEmotion.DISTRESS)]))
    if theta is None:
        stressed = nearest == CubeEmotion.DISTRESS
    else:
        stressed = score >= theta
    return StressResult(
        levels=NeurotransmitterLevels.from_array(p),
        distance_to_distress=d_distress,
        score=score,
        nearest=nearest,
        is_stressed=stressed,
        tie=tie,
    )


# default alignment of dataset emotion names to cube corners; Sad, Boredom
# and Neutral have no unambiguous corner and stay out of calibration
DEFAULT_LABEL_TO_CORNER: dict[str, CubeEmotion] = {
    "angry": CubeEmotion.ANGER,
    "happy": CubeEmotion.JOY,
    "fear": CubeEmotion.FEAR,
    "disgust": CubeEmotion.CONTEMPT_DISGUST,
}
