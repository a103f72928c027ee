"""defect_exporter: run a segmentation model over images and write
predictions in the detections interchange JSON.

The adapter talks to the evaluation toolkit only through files: it reads
the same COCO JSON for image-id mapping and emits the interchange format
({"source": ..., "detections": [...]}), so any model backend that can be
wrapped in the small Model interface becomes a drop-in for the built-in
baseline detector.
"""

from .export import ExportJob, Model, StubModel, export, load_model

__version__ = "0.1.0"
