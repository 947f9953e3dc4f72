"""Run-length mask encoding used on the wire.

Format: the mask is flattened row-major and written as comma-separated
run lengths of alternating value, always starting with a zero run (which
may have length 0 when the first pixel is set). Examples for a 2x2 mask:

    all zero  -> "4"
    all one   -> "0,4"
    [[1,0],[0,1]] -> "0,1,2,1"

The canonical form never contains a zero-length run after the first
entry, and the counts always sum to height*width. decode rejects
anything else rather than guessing.
"""

from __future__ import annotations

import numpy as np

from .core import as_mask


def encode_mask_rle(mask: np.ndarray) -> str:
    mask = as_mask(mask)
    flat = mask.ravel()
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    edges = np.concatenate(([0], boundaries, [flat.size]))
    runs = np.diff(edges).tolist()
    if flat[0] == 1:
        runs.insert(0, 0)
    return ",".join(str(int(r)) for r in runs)


def decode_mask_rle(encoded: str, height: int, width: int) -> np.ndarray:
    if height < 1 or width < 1:
        raise ValueError(f"bad dimensions {height}x{width}")
    try:
        runs = [int(tok) for tok in encoded.split(",")]
    except ValueError as exc:
        raise ValueError(f"malformed run-length string: {exc}") from exc
    if not runs or runs[0] < 0 or any(r <= 0 for r in runs[1:]):
        raise ValueError("run lengths must be positive after the leading zero run")
    if sum(runs) != height * width:
        raise ValueError(
            f"run lengths sum to {sum(runs)}, expected {height * width}"
        )
    flat = np.zeros(height * width, dtype=np.uint8)
    pos = 0
    value = 0
    for r in runs:
        if value:
            flat[pos : pos + r] = 1
        pos += r
        value ^= 1
    return flat.reshape(height, width)
