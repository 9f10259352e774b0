"""Flow-based mask warping and the overlap statistics used by the miner."""

import numpy as np

from trackmine.errors import DimensionMismatchError
from trackmine.masks.models import FlowField, IntersectionStats, Mask
from trackmine.masks.rle import mask_area


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def warp_mask(m: Mask, flow: FlowField) -> Mask:
    """Pull a frame t-1 mask forward to frame t through backward flow.

    Output pixel (u, v) takes the value of ``m`` at
    round(u + du, v + dv); lookups outside the grid read as background.
    """
    if (flow.height, flow.width) != m.size:
        raise DimensionMismatchError(
            f"Flow size {[flow.height, flow.width]} does not match mask size {list(m.size)}"
        )
    height, width = m.size
    grid = m.to_array()
    vv, uu = np.mgrid[0:height, 0:width]
    src_u = _round_half_away(uu + flow.vectors[..., 0]).astype(np.int64)
    src_v = _round_half_away(vv + flow.vectors[..., 1]).astype(np.int64)
    inside = (src_u >= 0) & (src_u < width) & (src_v >= 0) & (src_v < height)

    out = np.zeros((height, width), dtype=bool)
    out[inside] = grid[src_v[inside], src_u[inside]]
    return Mask.from_array(out)


def intersection_stats(s: Mask, warped_same_class: list[Mask]) -> IntersectionStats:
    """Overlap of ``s`` with the warped previous-frame masks of its class.

    b1/b2 are the largest and second-largest |s & w|; r is the part of s
    not covered by the union of all w. Masks that warped to nothing still
    take part and contribute zero.
    """
    grid = s.to_array()
    overlaps: list[int] = []
    covered = np.zeros(s.size, dtype=bool)
    for w in warped_same_class:
        if w.size != s.size:
            raise DimensionMismatchError(
                f"Warped mask size {list(w.size)} does not match segment size {list(s.size)}"
            )
        w_grid = w.to_array()
        overlaps.append(int(np.count_nonzero(grid & w_grid)))
        covered |= w_grid

    overlaps.sort(reverse=True)
    b1 = overlaps[0] if overlaps else 0
    b2 = overlaps[1] if len(overlaps) > 1 else 0
    r = mask_area(s) - int(np.count_nonzero(grid & covered))
    return IntersectionStats(b1=b1, b2=b2, r=r)
