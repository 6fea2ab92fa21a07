"""Landmark extraction front end for regaze dataset manifests.

Locates a face in each input image, recovers the 2D landmark set, attaches
gaze annotations from a dataset-specific adapter, and writes one manifest
line per image in the format the ``regaze`` tools ingest.  All geometry
beyond the landmark fit itself (head pose, rendering, normalization) is
left to the downstream pipeline.
"""

__version__ = "0.1.0"
