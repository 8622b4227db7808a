"""Blur-mapper network: trimmed VGG16 prefixes with in-network upsampling.

Five variants (I..V) keep the first 1..5 convolutional stages of the VGG16
feature extractor, drop the pooling layer that would follow the last kept
stage, append a 1x1 linear "score" convolution producing a single logit
channel, then upsample by a fixed bilinear transposed convolution back to
input resolution and apply a sigmoid. Spatial output always equals input.

Weight-layer counts per variant are 3, 5, 8, 11, 14 (3x3 convs + score);
upsample factors are 1, 2, 4, 8, 16 (one factor of 2 per retained pool).

Weights live in a two-file container: a text manifest (one line per
parameter: name, kind, shape, byte offset, element count) next to a single
raw blob of little-endian float32 values. Parameters may be held in float64
(training) or float32 (inference storage mode).
"""

from __future__ import annotations

import enum
from pathlib import Path

import numpy as np

from . import layers
from .errors import ConfigError, ShapeError, WeightFormatError
from .layers import ConvParams

# (channels, conv layers) for each retained stage, in order.
STAGES = ((64, 2), (128, 2), (256, 3), (512, 3), (512, 3))

MANIFEST_MAGIC = "blurlab-weights v1"
MANIFEST_NAME = "manifest.txt"
BLOB_NAME = "weights.blob"

SCORE_NAME = "score"


class ConfigId(enum.Enum):
    """Network variant: how many VGG16 stages are retained."""

    I = 1
    II = 2
    III = 3
    IV = 4
    V = 5

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, int):
            try:
                return cls(value)
            except ValueError:
                raise ConfigError(f"unknown network variant: {value!r}") from None
        if isinstance(value, str):
            key = value.strip().upper()
            if key in cls.__members__:
                return cls.__members__[key]
            if key.isdigit():
                return cls.parse(int(key))
        raise ConfigError(f"unknown network variant: {value!r}")

    @property
    def n_stages(self):
        return self.value

    @property
    def upsample_factor(self):
        """2 per retained pooling layer; pools sit between stages only."""
        return 2 ** (self.value - 1)


def scaled_channels(base, width_multiplier):
    """Round base * width to the nearest integer, minimum 1."""
    if not width_multiplier > 0:
        raise ConfigError(f"width multiplier must be positive, got {width_multiplier}")
    return max(1, int(np.floor(base * width_multiplier + 0.5)))


def layer_names(config):
    """Ordered parameter-layer names: conv<stage>_<idx> ... then the score conv."""
    config = ConfigId.parse(config)
    names = []
    for stage, (_, reps) in enumerate(STAGES[: config.n_stages], start=1):
        names.extend(f"conv{stage}_{i}" for i in range(1, reps + 1))
    names.append(SCORE_NAME)
    return names


class Network:
    """A built blur mapper: ordered conv parameters plus the fixed tail."""

    def __init__(self, config, width_multiplier, convs, steps):
        self.config = config
        self.width_multiplier = width_multiplier
        self.convs = convs  # name -> ConvParams, insertion-ordered
        self.steps = steps  # ("conv", name) | ("relu",) | ("pool",)
        self.upsample_factor = config.upsample_factor

    @property
    def dtype(self):
        return next(iter(self.convs.values())).weight.dtype

    @property
    def weight_layer_count(self):
        return len(self.convs)

    def conv_items(self):
        return list(self.convs.items())

    def parameters(self):
        """Ordered (name, array, is_bias) triples; arrays are live references."""
        out = []
        for name, p in self.convs.items():
            out.append((f"{name}.weight", p.weight, False))
            out.append((f"{name}.bias", p.bias, True))
        return out

    def astype(self, dtype):
        """Copy of the network with parameters cast to ``dtype``."""
        convs = {
            name: ConvParams(p.weight.astype(dtype), p.bias.astype(dtype))
            for name, p in self.convs.items()
        }
        return Network(self.config, self.width_multiplier, convs, list(self.steps))


def build(config, width_multiplier=1.0, init="scratch", seed=0, dtype=np.float64):
    """Construct a network variant.

    init "scratch" draws weights from N(0, 2/fan_in) with zero biases
    (seeded); init "zero" sets every parameter to zero. Pretrained weights
    are applied afterwards via :func:`load_pretrained`.
    """
    config = ConfigId.parse(config)
    if init not in ("scratch", "zero"):
        raise ConfigError(f"unknown init scheme: {init!r}")
    rng = np.random.default_rng(seed)

    def make_conv(in_c, out_c, k):
        shape = (out_c, in_c, k, k)
        if init == "zero":
            w = np.zeros(shape, dtype=dtype)
        else:
            fan_in = in_c * k * k
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(dtype)
        return ConvParams(w, np.zeros(out_c, dtype=dtype))

    convs = {}
    steps = []
    in_c = 3
    n_stages = config.n_stages
    for stage in range(1, n_stages + 1):
        base_c, reps = STAGES[stage - 1]
        out_c = scaled_channels(base_c, width_multiplier)
        for i in range(1, reps + 1):
            name = f"conv{stage}_{i}"
            convs[name] = make_conv(in_c, out_c, 3)
            steps.append(("conv", name))
            steps.append(("relu",))
            in_c = out_c
        if stage < n_stages:
            steps.append(("pool",))
    convs[SCORE_NAME] = make_conv(in_c, 1, 1)
    steps.append(("conv", SCORE_NAME))
    return Network(config, width_multiplier, convs, steps)


def _check_input(net, x, name="input"):
    if not isinstance(x, np.ndarray) or x.ndim != 4:
        raise ShapeError(f"{name} must be a 4-D NCHW array")
    n, c, h, w = x.shape
    if n != 1:
        raise ShapeError(f"inference batch size is fixed at 1, got {n}")
    if c != 3:
        raise ShapeError(f"{name} must have 3 channels, got {c}")
    s = net.upsample_factor
    if h % s or w % s:
        raise ShapeError(f"{name} dims {h}x{w} must be divisible by the pool stack ({s})")


def forward_logits(net, x):
    """Run the conv trunk only; returns the (1, 1, h/s, w/s) logit map."""
    _check_input(net, x)
    y = x.astype(net.dtype, copy=False)
    for step in net.steps:
        if step[0] == "conv":
            y, _ = layers.conv_forward(y, net.convs[step[1]])
        elif step[0] == "relu":
            y, _ = layers.relu_forward(y)
        else:
            y, _ = layers.maxpool2x2_forward(y)
    return y


def forward(net, x):
    """Full inference: conv trunk, bilinear upsample, sigmoid.

    Returns a 2-D blur map with the input's spatial shape; entries in (0, 1).
    """
    logits = forward_logits(net, x)
    z = layers.upsample_forward(logits, net.upsample_factor)
    return layers.sigmoid(z)[0, 0]


def forward_collect(net, x):
    """Training-path forward: returns (pre-upsample logits, layer caches)."""
    _check_input(net, x)
    y = x.astype(net.dtype, copy=False)
    caches = []
    for step in net.steps:
        if step[0] == "conv":
            y, cache = layers.conv_forward(y, net.convs[step[1]])
        elif step[0] == "relu":
            y, cache = layers.relu_forward(y)
        else:
            y, cache = layers.maxpool2x2_forward(y)
        caches.append(cache)
    return y, caches


def backward_from_logits(net, caches, dlogits):
    """Backprop from the pre-upsample logit gradient through the conv trunk.

    Returns a dict mapping parameter names ("<layer>.weight" / "<layer>.bias")
    to gradient arrays. Each cache from :func:`forward_collect` is consumed.
    """
    grads = {}
    dy = dlogits
    for step, cache in zip(reversed(net.steps), reversed(caches)):
        if step[0] == "conv":
            dy, dw, db = layers.conv_backward(dy, cache, net.convs[step[1]])
            grads[f"{step[1]}.weight"] = dw
            grads[f"{step[1]}.bias"] = db
        elif step[0] == "relu":
            dy = layers.relu_backward(dy, cache)
        else:
            dy = layers.maxpool2x2_backward(dy, cache)
    return grads, dy


def _shape_token(shape):
    return "x".join(str(s) for s in shape)


def save_weights(net, path):
    """Write the manifest + float32 blob container into directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    lines = [
        MANIFEST_MAGIC,
        f"# variant {net.config.name} width {net.width_multiplier}",
    ]
    chunks = []
    offset = 0
    for name, arr, is_bias in net.parameters():
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        kind = "bias" if is_bias else "weight"
        lines.append(f"{name} {kind} {_shape_token(arr.shape)} {offset} {arr.size}")
        chunks.append(raw)
        offset += len(raw)
    (path / MANIFEST_NAME).write_text("\n".join(lines) + "\n")
    (path / BLOB_NAME).write_bytes(b"".join(chunks))


def _parse_manifest(path):
    """Read container records: name -> (kind, shape, offset, count)."""
    path = Path(path)
    manifest_file = path / MANIFEST_NAME
    blob_file = path / BLOB_NAME
    if not manifest_file.is_file() or not blob_file.is_file():
        raise WeightFormatError(f"no weight container at {path}")
    lines = manifest_file.read_text().splitlines()
    if not lines or lines[0].strip() != MANIFEST_MAGIC:
        raise WeightFormatError(f"bad manifest header in {manifest_file}")
    records = {}
    for ln in lines[1:]:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 5:
            raise WeightFormatError(f"malformed manifest record: {ln!r}")
        name, kind, shape_tok, offset, count = parts
        try:
            shape = tuple(int(t) for t in shape_tok.split("x"))
            offset = int(offset)
            count = int(count)
        except ValueError:
            raise WeightFormatError(f"malformed manifest record: {ln!r}") from None
        if name in records:
            raise WeightFormatError(f"duplicate manifest record for {name}")
        records[name] = (kind, shape, offset, count)
    blob = blob_file.read_bytes()
    return records, blob


def _read_record(records, blob, name, expect_shape, source):
    if name not in records:
        raise WeightFormatError(f"{source}: container is missing parameter {name!r}")
    kind, shape, offset, count = records[name]
    if shape != expect_shape:
        raise WeightFormatError(
            f"{source}: shape mismatch for {name!r}: container {shape}, model {expect_shape}"
        )
    if count != int(np.prod(shape, dtype=np.int64)):
        raise WeightFormatError(f"{source}: record {name!r} count disagrees with shape")
    end = offset + 4 * count
    if offset < 0 or end > len(blob):
        raise WeightFormatError(f"{source}: blob truncated while reading {name!r}")
    vals = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
    return vals.reshape(shape)


def load_weights(path, config, width_multiplier=1.0, dtype=np.float64):
    """Restore a full network from a container; topology must match exactly."""
    net = build(config, width_multiplier, init="zero", dtype=dtype)
    records, blob = _parse_manifest(path)
    seen = set()
    for name, arr, _ in net.parameters():
        vals = _read_record(records, blob, name, arr.shape, str(path))
        arr[...] = vals.astype(dtype)
        seen.add(name)
    extra = [n for n in records if n not in seen]
    if extra:
        raise WeightFormatError(
            f"{path}: container holds parameters absent from the model, first: {extra[0]!r}"
        )
    return net


def load_pretrained(net, path):
    """Copy matching layers from a container into ``net`` by name.

    Layers absent from the container keep their current initialization;
    container entries with no counterpart in the model are ignored (a source
    net may carry deeper stages than the target variant retains). Shapes of
    matched layers must agree. Returns the sorted matched layer names.
    """
    records, blob = _parse_manifest(path)
    loaded = []
    for name, params in net.conv_items():
        wname, bname = f"{name}.weight", f"{name}.bias"
        if wname not in records and bname not in records:
            continue
        w = _read_record(records, blob, wname, params.weight.shape, str(path))
        b = _read_record(records, blob, bname, params.bias.shape, str(path))
        params.weight[...] = w.astype(params.weight.dtype)
        params.bias[...] = b.astype(params.bias.dtype)
        loaded.append(name)
    return sorted(loaded)
