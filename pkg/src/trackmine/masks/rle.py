"""Area, IoU and bounding-box arithmetic on run-length encoded masks."""

import numpy as np

from trackmine.errors import DimensionMismatchError
from trackmine.masks.models import BBox, Mask


def _check_same_size(a: Mask, b: Mask) -> None:
    if a.size != b.size:
        raise DimensionMismatchError(
            f"Mask sizes differ: {list(a.size)} vs {list(b.size)}"
        )


def mask_area(m: Mask) -> int:
    """Number of 1-pixels, read straight off the odd runs."""
    return int(sum(m.counts[1::2]))


def intersection_area(a: Mask, b: Mask) -> int:
    _check_same_size(a, b)
    return int(np.count_nonzero(a.to_array() & b.to_array()))


def mask_iou(a: Mask, b: Mask) -> float:
    """Intersection-over-union of two masks; 0.0 when both are empty."""
    _check_same_size(a, b)
    inter = intersection_area(a, b)
    union = mask_area(a) + mask_area(b) - inter
    if union == 0:
        return 0.0
    return inter / union


def mask_bbox(m: Mask) -> BBox:
    """Tightest box around the 1-pixels, lower-right corner exclusive.

    An empty mask yields the degenerate box (0, 0, 0, 0).
    """
    grid = m.to_array()
    rows = np.flatnonzero(grid.any(axis=1))
    cols = np.flatnonzero(grid.any(axis=0))
    if rows.size == 0:
        return BBox(u1=0.0, v1=0.0, u2=0.0, v2=0.0)
    return BBox(
        u1=float(cols[0]),
        v1=float(rows[0]),
        u2=float(cols[-1] + 1),
        v2=float(rows[-1] + 1),
    )


def box_iou(a: BBox, b: BBox) -> float:
    """Standard IoU of two boxes; empty boxes have zero area."""
    iw = min(a.u2, b.u2) - max(a.u1, b.u1)
    ih = min(a.v2, b.v2) - max(a.v1, b.v1)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    area_a = a.area if a.is_proper else 0.0
    area_b = b.area if b.is_proper else 0.0
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return inter / union
