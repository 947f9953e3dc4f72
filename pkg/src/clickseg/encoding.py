"""Click-to-channel encoders.

A predictor never sees click coordinates directly; it sees two float
channels, one per polarity, plus the previous mask. Two encodings are
supported:

* disk: a filled disk of fixed radius around each click, channel value 1
  inside any disk, 0 elsewhere.
* dt: inverted truncated distance transform, 1 at a click pixel falling
  linearly to 0 at the truncation cap.

Both saturate the exact click pixel at 1.0, which is what seed recovery
in the predictors relies on.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .core import Click, OutOfBoundsError
from .imageproc import distance_transform

DEFAULT_DISK_RADIUS = 5
DEFAULT_DT_CAP = 255.0


def _check_bounds(clicks: Sequence[Click], height: int, width: int) -> None:
    for c in clicks:
        if not (0 <= c.row < height and 0 <= c.col < width):
            raise OutOfBoundsError(
                f"click ({c.row}, {c.col}) outside {height}x{width} image"
            )


def _click_mask(clicks: Sequence[Click], height: int, width: int) -> np.ndarray:
    m = np.zeros((height, width), dtype=np.uint8)
    for c in clicks:
        m[c.row, c.col] = 1
    return m


def encode_disks(
    clicks: Sequence[Click],
    height: int,
    width: int,
    radius: int = DEFAULT_DISK_RADIUS,
) -> np.ndarray:
    """Two-channel disk encoding, shape (2, h, w) float64 in {0, 1}.

    Channel 0 is positive clicks, channel 1 negative. A pixel is inside a
    disk when its squared center distance to the click is <= radius^2.
    Disks are clipped at the image border.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    _check_bounds(clicks, height, width)
    out = np.zeros((2, height, width), dtype=np.float64)
    r2 = radius * radius
    for c in clicks:
        ch = 0 if c.is_positive else 1
        r0 = max(c.row - radius, 0)
        r1 = min(c.row + radius, height - 1)
        c0 = max(c.col - radius, 0)
        c1 = min(c.col + radius, width - 1)
        rr = np.arange(r0, r1 + 1)[:, None] - c.row
        cc = np.arange(c0, c1 + 1)[None, :] - c.col
        inside = rr * rr + cc * cc <= r2
        patch = out[ch, r0 : r1 + 1, c0 : c1 + 1]
        patch[inside] = 1.0
    return out


def encode_distance(
    clicks: Sequence[Click],
    height: int,
    width: int,
    cap: float = DEFAULT_DT_CAP,
) -> np.ndarray:
    """Two-channel inverted truncated distance encoding, shape (2, h, w).

    Value is 1 - min(d, cap) / cap where d is exact Euclidean distance to
    the nearest click of that polarity: 1.0 at the click pixel, 0 at or
    beyond the cap. A polarity with no clicks yields an all-zero channel.
    """
    if cap <= 0:
        raise ValueError(f"cap must be > 0, got {cap}")
    _check_bounds(clicks, height, width)
    out = np.zeros((2, height, width), dtype=np.float64)
    for ch, want_positive in ((0, True), (1, False)):
        subset = [c for c in clicks if c.is_positive == want_positive]
        if not subset:
            continue
        d = distance_transform(_click_mask(subset, height, width))
        out[ch] = 1.0 - np.minimum(d, cap) / cap
    return out


class ClickEncoder:
    """Configured encoder: mode 'disk' with a radius or 'dt' with a cap."""

    def __init__(self, mode: str = "disk", radius: int = DEFAULT_DISK_RADIUS,
                 cap: float = DEFAULT_DT_CAP):
        if mode not in ("disk", "dt"):
            raise ValueError(f"unknown encoding mode: {mode!r}")
        self.mode = mode
        self.radius = radius
        self.cap = cap

    def __call__(self, clicks: Sequence[Click], height: int, width: int) -> np.ndarray:
        if self.mode == "disk":
            return encode_disks(clicks, height, width, radius=self.radius)
        return encode_distance(clicks, height, width, cap=self.cap)

    @property
    def spec(self) -> str:
        """Round-trips through parse_encoding_spec."""
        if self.mode == "disk":
            return f"disk:{self.radius}"
        return f"dt:{self.cap:g}"

    def __repr__(self) -> str:
        return f"ClickEncoder({self.spec})"


def parse_encoding_spec(spec: str) -> ClickEncoder:
    """Parse 'disk', 'disk:R', 'dt' or 'dt:CAP' into a ClickEncoder."""
    name, _, arg = spec.partition(":")
    if name == "disk":
        radius = int(arg) if arg else DEFAULT_DISK_RADIUS
        return ClickEncoder("disk", radius=radius)
    if name == "dt":
        cap = float(arg) if arg else DEFAULT_DT_CAP
        return ClickEncoder("dt", cap=cap)
    raise ValueError(f"unknown encoding spec: {spec!r}")
