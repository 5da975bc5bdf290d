"""Azimuth correlation between aerial and ground feature volumes.

A ground volume slides cyclically over the aerial one; the score at shift i
is the inner product of the ground volume with the aerial columns
(i, i+1, ..., i+Wg-1) wrapped modulo the aerial width. The best shift is
the estimated orientation; the pair's distance is the Frobenius norm of
the difference between the ground volume and the aerial crop there.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ShapeMismatch


def _check_pair(fa, fg):
    fa = np.asarray(fa, dtype=np.float64)
    fg = np.asarray(fg, dtype=np.float64)
    if fa.ndim != 3 or fg.ndim != 3:
        raise ShapeMismatch("feature volumes must be (h, w, c) arrays")
    if fa.shape[0] != fg.shape[0] or fa.shape[2] != fg.shape[2]:
        raise ShapeMismatch(f"aerial {fa.shape} and ground {fg.shape} disagree in height or channels")
    if fg.shape[1] > fa.shape[1]:
        raise ShapeMismatch(f"ground width {fg.shape[1]} exceeds aerial width {fa.shape[1]}")
    return fa, fg


def cyclic_correlation(fa: np.ndarray, fg: np.ndarray) -> np.ndarray:
    """Exact correlation scores for every candidate shift, accumulated
    sequentially in float64 (bit-reproducible against a scalar loop)."""
    fa, fg = _check_pair(fa, fg)
    return kernels.cyclic_corr(np.ascontiguousarray(fa), np.ascontiguousarray(fg))


def fft_correlation(fa: np.ndarray, fg: np.ndarray) -> np.ndarray:
    """Same scores via per-(row, channel) circular cross-correlation in the
    frequency domain; agrees with the exact path to ~1e-6 absolute."""
    fa, fg = _check_pair(fa, fg)
    w_a = fa.shape[1]
    spec_a = np.fft.rfft(fa, axis=1)
    spec_g = np.fft.rfft(fg, n=w_a, axis=1)  # zero-pads the ground volume
    cross = (spec_a * np.conj(spec_g)).sum(axis=(0, 2))
    return np.fft.irfft(cross, n=w_a)


def estimate_orientation(scores: np.ndarray) -> int:
    """Smallest shift index attaining the maximum score."""
    scores = np.asarray(scores)
    if scores.size == 0:
        raise ShapeMismatch("empty score vector")
    return int(np.argmax(scores))


def crop_at(fa: np.ndarray, shift: int, width: int) -> np.ndarray:
    """Columns (shift .. shift+width-1) of the aerial volume, wrapping."""
    fa = np.asarray(fa)
    w_a = fa.shape[1]
    if width > w_a:
        raise ShapeMismatch(f"crop width {width} exceeds aerial width {w_a}")
    if not 0 <= shift < w_a:
        raise ShapeMismatch(f"shift {shift} outside [0, {w_a})")
    cols = (shift + np.arange(width)) % w_a
    return fa[:, cols]


@dataclass(frozen=True)
class MatchResult:
    orientation: int
    score: float
    distance: float


def match_pair(fa: np.ndarray, fg: np.ndarray) -> MatchResult:
    """Orientation, score and aligned distance for one aerial/ground pair.

    Scores come from the FFT path (the fast route to the same correlation);
    the distance is computed exactly on the selected crop.
    """
    fa, fg = _check_pair(fa, fg)
    scores = fft_correlation(fa, fg)
    orientation = estimate_orientation(scores)
    crop = crop_at(fa, orientation, fg.shape[1])
    distance = float(np.sqrt(np.sum((fg - crop) ** 2)))
    return MatchResult(orientation=orientation, score=float(scores[orientation]), distance=distance)


def pairwise_scores(ground_feats, aerial_feats):
    """Correlation scores for every (ground, aerial) pair at every shift.

    Returns (n_ground, n_aerial, W_a). All volumes of a side must share a
    shape. This is the batched version of fft_correlation used by training
    and retrieval.
    """
    ground = np.stack([np.asarray(g, dtype=np.float64) for g in ground_feats])
    aerial = np.stack([np.asarray(a, dtype=np.float64) for a in aerial_feats])
    if ground.shape[1] != aerial.shape[1] or ground.shape[3] != aerial.shape[3]:
        raise ShapeMismatch(f"ground {ground.shape[1:]} and aerial {aerial.shape[1:]} disagree")
    if ground.shape[2] > aerial.shape[2]:
        raise ShapeMismatch("ground volumes wider than aerial volumes")
    w_a = aerial.shape[2]
    spec_a = np.fft.rfft(aerial, axis=2)
    spec_g = np.fft.rfft(ground, n=w_a, axis=2)
    cross = np.einsum("jhwc,ihwc->ijw", spec_a, np.conj(spec_g))
    return np.fft.irfft(cross, n=w_a, axis=2)


def pairwise_matches(ground_feats, aerial_feats):
    """Orientations, aligned distances and best scores for every pair.

    Returns (orientations, distances, best_scores), each (n_g, n_a);
    entry (i, j) corresponds to match_pair(aerial[j], ground[i]).
    """
    scores = pairwise_scores(ground_feats, aerial_feats)
    orientations = scores.argmax(axis=2)
    best_scores = np.take_along_axis(scores, orientations[:, :, None], axis=2)[:, :, 0]
    ground = np.stack([np.asarray(g, dtype=np.float64) for g in ground_feats])
    aerial = np.stack([np.asarray(a, dtype=np.float64) for a in aerial_feats])
    n_g, n_a = orientations.shape
    w_g, w_a = ground.shape[2], aerial.shape[2]
    cols = (orientations[:, :, None] + np.arange(w_g)[None, None, :]) % w_a
    aerial_t = aerial.transpose(0, 2, 1, 3)  # (n_a, W_a, H, C)
    crops = aerial_t[np.arange(n_a)[None, :, None], cols]  # (n_g, n_a, W_g, H, C)
    diff = ground.transpose(0, 2, 1, 3)[:, None] - crops
    distances = np.sqrt(np.einsum("ijwhc,ijwhc->ij", diff, diff))
    return orientations, distances, best_scores
