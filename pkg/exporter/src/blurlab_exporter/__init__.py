"""Convert VGG16-shaped checkpoints into the blurlab weight container."""

from .export import (
    VGG16_CONV_STACK,
    ExportError,
    container_checksums,
    export_checkpoint,
    load_checkpoint,
    resolve_mapping,
)

__all__ = [
    "VGG16_CONV_STACK",
    "ExportError",
    "container_checksums",
    "export_checkpoint",
    "load_checkpoint",
    "resolve_mapping",
]
