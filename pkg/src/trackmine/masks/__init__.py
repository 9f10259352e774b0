"""Binary masks: RLE storage, IoU arithmetic and flow warping."""

from trackmine.masks.models import BBox, FlowField, IntersectionStats, Mask
from trackmine.masks.rle import box_iou, intersection_area, mask_area, mask_bbox, mask_iou
from trackmine.masks.warp import intersection_stats, warp_mask

__all__ = [
    "BBox",
    "FlowField",
    "IntersectionStats",
    "Mask",
    "box_iou",
    "intersection_area",
    "intersection_stats",
    "mask_area",
    "mask_bbox",
    "mask_iou",
    "warp_mask",
]
