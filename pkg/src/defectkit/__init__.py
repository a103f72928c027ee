"""defectkit: X-ray casting defect annotation, detection and evaluation toolkit."""

from .raster import (
    Component,
    binarize,
    connected_components,
    fill_holes,
    mask_area_bbox,
    polygon_signed_area,
    rasterize_polygon,
    trace_boundary,
)
from .imageio import load_image, save_pgm, save_png
from .coco import (
    CocoAnnotation,
    CocoCategory,
    CocoDataset,
    CocoFormatError,
    CocoImage,
    coco_to_masks,
    masks_to_coco,
    parse_coco,
    serialize_coco,
    split_dataset,
    validate,
)
from .detections import (
    Anchor,
    Detection,
    DetectionFormatError,
    DetectionSet,
    detections_to_mask,
    filter_by_score,
    generate_anchors,
    iou,
    nms,
    parse_detections,
    serialize_detections,
)
from .baseline import BaselineParams, detect_defects, otsu_threshold
from .metrics import (
    Confusion,
    MetricPoint,
    SeriesPoint,
    evaluate_dataset,
    f1,
    find_plateau,
    match_instances,
    pixel_confusion,
    precision,
    recall,
    sweep,
)
from .render import OverlayStyle, overlay

__version__ = "0.1.0"
