"""Domain types and the interaction-session state machine.

Masks and probability maps are plain 2-D numpy arrays: binary masks are
uint8 with values in {0, 1}, probability maps are float64 in [0, 1].
Images are H x W x 3 uint8 (RGB).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

Polarity = Literal["positive", "negative"]

POSITIVE: Polarity = "positive"
NEGATIVE: Polarity = "negative"

DEFAULT_BINARIZE_THRESHOLD = 0.5


class ShapeError(ValueError):
    """Raised when array dimensions do not match the session's image."""


class OutOfBoundsError(ValueError):
    """Raised when a click falls outside the image."""


@dataclass(frozen=True, slots=True)
class Click:
    """One signed user interaction at integer pixel coordinates."""

    row: int
    col: int
    polarity: Polarity
    order: int = 0

    @property
    def is_positive(self) -> bool:
        return self.polarity == POSITIVE


def as_mask(data: np.ndarray) -> np.ndarray:
    """Validate and normalize a binary mask to uint8 {0, 1}."""
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ShapeError(f"mask must be 2-D, got shape {arr.shape}")
    return (arr != 0).astype(np.uint8)


def as_probmap(data: np.ndarray) -> np.ndarray:
    """Validate a probability map: 2-D, finite, every value in [0, 1]."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"probability map must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("probability map contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("probability map values must lie in [0, 1]")
    return arr


def binarize(p: np.ndarray, threshold: float = DEFAULT_BINARIZE_THRESHOLD) -> np.ndarray:
    """Threshold a probability map to a binary mask; strictly greater wins.

    The strict inequality means an uninformative p == 0.5 map yields an
    empty mask, matching the empty-mask bootstrap of a fresh session.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return (np.asarray(p) > threshold).astype(np.uint8)


class InteractionState:
    """Full history of one annotation session.

    Single-writer: all mutations of one session must be serialized by the
    caller. ``prev_mask`` is the binary mask fed as guidance on the next
    prediction; it starts all-zero unless the session was initialized from
    an external mask.
    """

    def __init__(
        self,
        image: np.ndarray,
        prev_mask: np.ndarray,
        binarize_threshold: float = DEFAULT_BINARIZE_THRESHOLD,
    ):
        self.image = image
        self.clicks: list[Click] = []
        self.prev_mask = prev_mask
        self.history: list[tuple[list[Click], np.ndarray]] = []
        self.binarize_threshold = binarize_threshold

    @property
    def height(self) -> int:
        return self.image.shape[0]

    @property
    def width(self) -> int:
        return self.image.shape[1]

    def snapshot(self) -> tuple[list[Click], np.ndarray]:
        return (list(self.clicks), self.prev_mask.copy())


def new_session(
    image: np.ndarray,
    external_mask: np.ndarray | None = None,
    binarize_threshold: float = DEFAULT_BINARIZE_THRESHOLD,
) -> InteractionState:
    """Open a session; an external mask (if given) seeds ``prev_mask``.

    Without an external mask the session bootstraps from an all-zero mask.
    """
    image = np.asarray(image)
    if image.ndim == 2:
        image = np.stack([image] * 3, axis=-1)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"image must be H x W x 3, got shape {image.shape}")
    h, w = image.shape[:2]
    if external_mask is not None:
        mask = as_mask(external_mask)
        if mask.shape != (h, w):
            raise ShapeError(
                f"external mask shape {mask.shape} does not match image ({h}, {w})"
            )
    else:
        mask = np.zeros((h, w), dtype=np.uint8)
    return InteractionState(image, mask, binarize_threshold)


def push_click(state: InteractionState, click: Click, new_prediction: np.ndarray) -> InteractionState:
    """Append a click and advance the session with a fresh prediction.

    The click is re-stamped with the next contiguous order index. The prior
    (clicks, prev_mask) pair is pushed onto the undo stack, and prev_mask is
    replaced with the binarized prediction.
    """
    if not (0 <= click.row < state.height and 0 <= click.col < state.width):
        raise OutOfBoundsError(
            f"click ({click.row}, {click.col}) outside {state.height} x {state.width} image"
        )
    pred = as_probmap(new_prediction)
    if pred.shape != (state.height, state.width):
        raise ShapeError(
            f"prediction shape {pred.shape} does not match image ({state.height}, {state.width})"
        )
    state.history.append(state.snapshot())
    state.clicks.append(replace(click, order=len(state.clicks)))
    state.prev_mask = binarize(pred, state.binarize_threshold)
    return state


def undo(state: InteractionState) -> InteractionState:
    """Restore the state exactly as it was before the last push."""
    if not state.history:
        raise IndexError("nothing to undo")
    clicks, prev_mask = state.history.pop()
    state.clicks = clicks
    state.prev_mask = prev_mask
    return state


def clone_state(state: InteractionState) -> InteractionState:
    """Deep copy for safe transfer between execution contexts."""
    return copy.deepcopy(state)
