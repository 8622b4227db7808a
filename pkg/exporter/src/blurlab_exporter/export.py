"""One-shot exporter: VGG16-shaped checkpoint -> blurlab weight container.

The blur mappers warm-start their convolutional trunk from a 16-layer VGG
classifier or segmentation checkpoint. This tool reads such a checkpoint
from an .npz archive, maps its 13 conv layers onto the trunk layer names,
and writes the portable container the main package loads:

  manifest.txt   first line "blurlab-weights v1"; then one record per
                 tensor: <name> <kind> <dims joined by x> <byte offset>
                 <element count>; lines starting with # are comments
  weights.blob   the tensors as little-endian IEEE-754 float32, back to
                 back, in manifest order

Only the 3x3 trunk convolutions are exported. The 1x1 scoring convolution
is always trained fresh, the bilinear upsampler is fixed, and the source's
fully connected layers have no place in a fully convolutional net, so all
three are dropped. Values survive bit-exactly as 32-bit floats; per-layer
CRC-32 checksums make that auditable from the command line.

Two source naming schemes are recognized automatically: torchvision-style
("features.0.weight", ...) and plain trunk names ("conv1_1.weight", ...).
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import zlib
from pathlib import Path

import numpy as np

MANIFEST_MAGIC = "blurlab-weights v1"
MANIFEST_NAME = "manifest.txt"
BLOB_NAME = "weights.blob"

# Trunk layer names with their full-width (out, in) channel counts, in
# network order. Indices are the conv positions inside torchvision's
# vgg16().features sequential (pools and ReLUs skipped).
VGG16_CONV_STACK = (
    ("conv1_1", 64, 3, 0),
    ("conv1_2", 64, 64, 2),
    ("conv2_1", 128, 64, 5),
    ("conv2_2", 128, 128, 7),
    ("conv3_1", 256, 128, 10),
    ("conv3_2", 256, 256, 12),
    ("conv3_3", 256, 256, 14),
    ("conv4_1", 512, 256, 17),
    ("conv4_2", 512, 512, 19),
    ("conv4_3", 512, 512, 21),
    ("conv5_1", 512, 512, 24),
    ("conv5_2", 512, 512, 26),
    ("conv5_3", 512, 512, 28),
)


class ExportError(Exception):
    """Anything that makes the checkpoint unusable: missing file, missing
    layer, wrong shape."""


def load_checkpoint(path):
    """Read an .npz checkpoint into a plain {name: array} dict."""
    path = Path(path)
    if not path.is_file():
        raise ExportError(f"checkpoint not found: {path}")
    try:
        with np.load(path) as archive:
            return {k: np.asarray(archive[k]) for k in archive.files}
    except (OSError, ValueError) as exc:
        raise ExportError(f"cannot read checkpoint {path}: {exc}") from exc


def resolve_mapping(keys):
    """Match checkpoint key names to trunk layers.

    Returns [(layer_name, weight_key, bias_key, weight_shape, bias_shape)]
    in network order. Unrelated keys (fully connected layers, optimizer
    state) are simply ignored; a trunk layer without both tensors is an
    error naming the layer.
    """
    keys = set(keys)
    schemes = (
        ("torchvision", lambda name, idx: (f"features.{idx}.weight", f"features.{idx}.bias")),
        ("plain", lambda name, idx: (f"{name}.weight", f"{name}.bias")),
    )
    for scheme_name, make in schemes:
        probe_w, _ = make(*_probe_args())
        if probe_w not in keys:
            continue
        mapping = []
        missing = []
        for name, out_c, in_c, idx in VGG16_CONV_STACK:
            w_key, b_key = make(name, idx)
            if w_key not in keys or b_key not in keys:
                missing.append(name)
                continue
            mapping.append((name, w_key, b_key, (out_c, in_c, 3, 3), (out_c,)))
        if missing:
            raise ExportError(
                f"{scheme_name} checkpoint is missing trunk layers: {', '.join(missing)}"
            )
        return mapping
    raise ExportError(
        "unrecognized checkpoint naming: expected torchvision keys "
        "(features.0.weight, ...) or plain trunk keys (conv1_1.weight, ...)"
    )


def _probe_args():
    name, _, _, idx = VGG16_CONV_STACK[0]
    return name, idx


def _shape_token(shape):
    return "x".join(str(s) for s in shape)


def export_checkpoint(checkpoint_path, out_dir):
    """Write the container for ``checkpoint_path`` into ``out_dir``.

    Returns the per-layer checksum table as a list of (record_name, crc32)
    in manifest order. Raises ExportError on any shape mismatch, naming
    the offending layer.
    """
    tensors = load_checkpoint(checkpoint_path)
    mapping = resolve_mapping(tensors.keys())

    source_digest = hashlib.sha256(Path(checkpoint_path).read_bytes()).hexdigest()
    lines = [
        MANIFEST_MAGIC,
        f"# exported from {Path(checkpoint_path).name} sha256 {source_digest[:16]}",
        "# trunk only: score layer trains fresh, upsampler is fixed",
    ]
    chunks = []
    checksums = []
    offset = 0
    for name, w_key, b_key, w_shape, b_shape in mapping:
        for record_name, key, expect in (
            (f"{name}.weight", w_key, w_shape),
            (f"{name}.bias", b_key, b_shape),
        ):
            arr = tensors[key]
            if tuple(arr.shape) != expect:
                raise ExportError(
                    f"shape mismatch for {record_name}: checkpoint {tuple(arr.shape)}, "
                    f"expected {expect}"
                )
            raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            kind = "bias" if record_name.endswith(".bias") else "weight"
            lines.append(f"{record_name} {kind} {_shape_token(expect)} {offset} {arr.size}")
            chunks.append(raw)
            checksums.append((record_name, zlib.crc32(raw)))
            offset += len(raw)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / MANIFEST_NAME).write_text("\n".join(lines) + "\n")
    (out_dir / BLOB_NAME).write_bytes(b"".join(chunks))
    return checksums


def container_checksums(container_dir):
    """Recompute per-record CRC-32 from an existing container."""
    container_dir = Path(container_dir)
    manifest = container_dir / MANIFEST_NAME
    blob_file = container_dir / BLOB_NAME
    if not manifest.is_file() or not blob_file.is_file():
        raise ExportError(f"no weight container at {container_dir}")
    lines = manifest.read_text().splitlines()
    if not lines or lines[0].strip() != MANIFEST_MAGIC:
        raise ExportError(f"bad manifest header in {manifest}")
    blob = blob_file.read_bytes()
    table = []
    for ln in lines[1:]:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        name, _kind, _shape, offset, count = ln.split()
        start = int(offset)
        end = start + 4 * int(count)
        if end > len(blob):
            raise ExportError(f"blob truncated while reading {name!r}")
        table.append((name, zlib.crc32(blob[start:end])))
    return table


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="blurlab-export",
        description="convert a VGG16-shaped .npz checkpoint into a blurlab weight container",
    )
    parser.add_argument("--checkpoint", required=True, help=".npz source checkpoint")
    parser.add_argument("--out", required=True, help="output container directory")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        checksums = export_checkpoint(args.checkpoint, args.out)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{'record':<18} crc32")
    for name, crc in checksums:
        print(f"{name:<18} {crc:08x}")
    print(f"wrote {len(checksums)} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
