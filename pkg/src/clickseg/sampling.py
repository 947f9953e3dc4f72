"""Click generation.

Two distinct regimes share the region-selection rule but differ on
purpose:

* evaluation: simulate_eval_click is fully deterministic. It finds the
  largest erroneous component and clicks the pixel deepest inside it, so
  repeated runs of the benchmark are byte-identical.
* training: sample_random_clicks (initial clicks) and
  sample_iterative_click (correction clicks drawn from an eroded error
  region) are stochastic given an explicit numpy Generator.

generate_training_interaction composes them: random clicks, then a
uniformly drawn number of predict/correct rounds where each correction
click reacts to the model's own binarized output and that output becomes
the previous-mask input of the next round.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    NEGATIVE,
    POSITIVE,
    Click,
    Polarity,
    ShapeError,
    as_mask,
    binarize,
)
from .imageproc import (
    connected_components,
    distance_transform,
    erode_to_quarter,
    interior_distance,
)

NEGATIVE_RING_MAX = 40.0


@dataclass(frozen=True, slots=True)
class SamplingConfig:
    n_iters_max: int = 3
    max_random_pos: int = 10
    max_random_neg: int = 10
    boundary_margin: int = 5
    min_click_gap: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_iters_max < 0:
            raise ValueError(f"n_iters_max must be >= 0, got {self.n_iters_max}")
        if self.boundary_margin < 0 or self.min_click_gap < 0:
            raise ValueError("margins must be >= 0")
        if self.max_random_pos < 1:
            raise ValueError("max_random_pos must be >= 1")
        if self.max_random_neg < 0:
            raise ValueError("max_random_neg must be >= 0")


@dataclass
class ErrorRegions:
    """Disjoint masks of the two prediction error types."""

    false_negative: np.ndarray
    false_positive: np.ndarray


def error_regions(pred: np.ndarray, gt: np.ndarray) -> ErrorRegions:
    """false_negative = gt and not pred; false_positive = pred and not gt."""
    pred = as_mask(pred)
    gt = as_mask(gt)
    if pred.shape != gt.shape:
        raise ShapeError(f"pred {pred.shape} vs gt {gt.shape}")
    fn = ((gt != 0) & (pred == 0)).astype(np.uint8)
    fp = ((pred != 0) & (gt == 0)).astype(np.uint8)
    return ErrorRegions(false_negative=fn, false_positive=fp)


def _regions_of(mask: np.ndarray, polarity: Polarity):
    """Yield (area, first_row_major_pixel, polarity, region_mask) per
    8-connected component."""
    if not mask.any():
        return []
    labeled = connected_components(mask, connectivity=8)
    flat = labeled.labels.ravel()
    first: dict[int, int] = {}
    for idx in np.flatnonzero(flat):
        lab = int(flat[idx])
        if lab not in first:
            first[lab] = int(idx)
    return [
        (labeled.region_areas[lab], first[lab], polarity, labeled.region_mask(lab))
        for lab in labeled.region_areas
    ]


def _largest_error_region(pred: np.ndarray, gt: np.ndarray):
    """The biggest erroneous component and the polarity that fixes it.

    Ties on area resolve to the component whose first row-major pixel
    comes earliest, so the choice is deterministic. Returns None when the
    prediction is exact.
    """
    errs = error_regions(pred, gt)
    candidates = _regions_of(errs.false_negative, POSITIVE) + _regions_of(
        errs.false_positive, NEGATIVE
    )
    if not candidates:
        return None
    area, _, polarity, region = max(candidates, key=lambda t: (t[0], -t[1]))
    return region, polarity


def simulate_eval_click(pred: np.ndarray, gt: np.ndarray) -> Click | None:
    """The deterministic benchmark click.

    Picks the largest erroneous 8-connected component and clicks its
    interior-distance argmax (first in row-major order on ties): positive
    inside missed object area, negative inside spurious prediction.
    Returns None iff pred equals gt.
    """
    selected = _largest_error_region(pred, gt)
    if selected is None:
        return None
    region, polarity = selected
    depth = interior_distance(region)
    flat = int(np.argmax(depth))
    row, col = divmod(flat, region.shape[1])
    return Click(row=row, col=col, polarity=polarity)


def _pick_spaced(flat_candidates: np.ndarray, k: int, gap: float,
                 width: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Draw up to k pixels uniformly, discarding candidates closer than
    gap to any already drawn pixel. Stops early when none remain."""
    rows = flat_candidates // width
    cols = flat_candidates % width
    avail = np.ones(flat_candidates.shape[0], dtype=bool)
    gap2 = gap * gap
    out: list[tuple[int, int]] = []
    for _ in range(k):
        open_idx = np.flatnonzero(avail)
        if open_idx.size == 0:
            break
        pick = int(open_idx[rng.integers(open_idx.size)])
        out.append((int(rows[pick]), int(cols[pick])))
        d2 = (rows - rows[pick]) ** 2 + (cols - cols[pick]) ** 2
        avail &= d2 >= gap2
        if gap2 == 0:
            avail[pick] = False
    return out


def sample_random_clicks(gt: np.ndarray, cfg: SamplingConfig,
                         rng: np.random.Generator) -> list[Click]:
    """Initial training clicks.

    Positives: 1..max_random_pos pixels drawn from the part of the object
    at least boundary_margin away from its boundary (any object pixel if
    that is empty). Negatives: 0..max_random_neg pixels from the
    background ring between boundary_margin and NEGATIVE_RING_MAX pixels
    of the object (any background pixel as fallback). Both respect
    min_click_gap spacing where enough candidates exist.
    """
    gt = as_mask(gt)
    if not gt.any():
        raise ValueError("cannot sample clicks for an empty ground truth")
    h, w = gt.shape
    inside = gt != 0

    k_pos = int(rng.integers(1, cfg.max_random_pos + 1))
    deep = (interior_distance(gt) >= cfg.boundary_margin) & inside
    pos_pool = np.flatnonzero(deep.ravel())
    if pos_pool.size == 0:
        pos_pool = np.flatnonzero(inside.ravel())
    pos = _pick_spaced(pos_pool, k_pos, cfg.min_click_gap, w, rng)

    k_neg = int(rng.integers(0, cfg.max_random_neg + 1))
    neg: list[tuple[int, int]] = []
    if k_neg > 0:
        d_obj = distance_transform(gt)
        ring = (~inside) & (d_obj >= cfg.boundary_margin) & (d_obj <= NEGATIVE_RING_MAX)
        neg_pool = np.flatnonzero(ring.ravel())
        if neg_pool.size == 0:
            neg_pool = np.flatnonzero((~inside).ravel())
        if neg_pool.size > 0:
            neg = _pick_spaced(neg_pool, k_neg, cfg.min_click_gap, w, rng)

    clicks = [Click(r, c, POSITIVE) for r, c in pos]
    clicks += [Click(r, c, NEGATIVE) for r, c in neg]
    return [replace(c, order=i) for i, c in enumerate(clicks)]


def sample_iterative_click(pred: np.ndarray, gt: np.ndarray,
                           rng: np.random.Generator) -> Click | None:
    """One stochastic correction click.

    Same region choice as the benchmark clicker, but the pixel is drawn
    uniformly from the region eroded to at most a quarter of its area
    rather than from its deepest point. Returns None iff pred equals gt.
    """
    selected = _largest_error_region(pred, gt)
    if selected is None:
        return None
    region, polarity = selected
    core = erode_to_quarter(region)
    pool = np.flatnonzero(core.ravel())
    flat = int(pool[rng.integers(pool.size)])
    row, col = divmod(flat, region.shape[1])
    return Click(row=row, col=col, polarity=polarity)


def generate_training_interaction(gt: np.ndarray, image: np.ndarray, predictor,
                                  encoder, cfg: SamplingConfig,
                                  rng: np.random.Generator,
                                  binarize_threshold: float = 0.5):
    """Clicks and previous mask for one training step.

    Draws m uniformly from 0..n_iters_max. Starts from random clicks and
    an all-zero previous mask, then runs m rounds of predict, binarize,
    add one correction click. The returned prev_mask is the one the next
    prediction should consume (all-zero when m is 0). Clicks are never
    cached across calls; every step resamples.
    """
    # local import: predictors builds on this module for training
    from .predictors import PredictorInput

    gt = as_mask(gt)
    m = int(rng.integers(0, cfg.n_iters_max + 1))
    clicks = sample_random_clicks(gt, cfg, rng)
    prev = np.zeros_like(gt)
    h, w = gt.shape
    for _ in range(m):
        prob = predictor.predict(
            PredictorInput(image=image, guidance=encoder(clicks, h, w), prev_mask=prev)
        )
        pred = binarize(prob, binarize_threshold)
        click = sample_iterative_click(pred, gt, rng)
        prev = pred
        if click is None:
            break
        clicks.append(replace(click, order=len(clicks)))
    return clicks, prev


def rng_for_worker(seed: int, worker: int) -> np.random.Generator:
    """Independent stream per worker: generator seeded with seed + worker."""
    return np.random.default_rng(seed + worker)
