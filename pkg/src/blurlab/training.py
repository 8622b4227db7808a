"""Training: pixelwise cross-entropy, polynomial LR decay, momentum SGD.

The loss is the summed per-pixel binary cross-entropy between the sigmoid
of the upsampled logit map and the binary ground truth, computed in the
fused log-sum-exp form so it stays finite for logits of any magnitude. An
optional class-balanced variant weights positives by (1 - beta) and
negatives by beta, where beta is the positive-pixel fraction.

The optimizer keeps one velocity per parameter and updates
    v <- momentum * v + lr_param * (grad + weight_decay * w)
    w <- w - v
where biases get twice the learning rate and no weight decay. The learning
rate follows base_lr * (1 - iter / max_iter) ** power. Batches are realized
by gradient accumulation over single-image forward passes, averaged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import layers, model
from .errors import ConfigError, ContractError, DataError, NumericError, ShapeError


@dataclass(frozen=True)
class Hyperparams:
    base_lr: float = 2.0 ** -10
    lr_power: float = 0.9
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 3
    max_iter: int = 10000
    bias_lr_multiplier: float = 2.0
    class_balance: bool = False

    def __post_init__(self):
        if not self.base_lr > 0:
            raise ConfigError(f"base_lr must be positive, got {self.base_lr}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_iter < 0:
            raise ConfigError(f"max_iter must be >= 0, got {self.max_iter}")
        if not self.lr_power > 0:
            raise ConfigError(f"lr_power must be positive, got {self.lr_power}")
        if not self.bias_lr_multiplier > 0:
            raise ConfigError(f"bias_lr_multiplier must be positive, got {self.bias_lr_multiplier}")


def cross_entropy_loss(logits, gt, balance=False):
    """Summed pixelwise sigmoid cross-entropy and its logit gradient.

    Returns (loss, dlogits) where dlogits = sigmoid(logits) - gt, weighted
    when ``balance`` is set. gt entries must be 0 or 1.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(gt)
    if z.shape != y.shape:
        raise ShapeError(f"logits shape {z.shape} does not match gt {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("ground truth must be binary (0/1)")
    y = y.astype(np.float64)
    per = np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))
    d = layers.sigmoid(z) - y
    if balance:
        beta = y.mean()
        wgt = np.where(y == 1, 1.0 - beta, beta)
        return float((wgt * per).sum()), wgt * d
    return float(per.sum()), d


def poly_lr(iteration, hp):
    """base_lr * (1 - iter/max_iter) ** power; defined for 0 <= iter <= max_iter."""
    if hp.max_iter == 0:
        raise ContractError("learning-rate schedule undefined for max_iter == 0")
    if not 0 <= iteration <= hp.max_iter:
        raise ContractError(f"iteration {iteration} outside [0, {hp.max_iter}]")
    return hp.base_lr * (1.0 - iteration / hp.max_iter) ** hp.lr_power


class OptState:
    """One velocity buffer per parameter, keyed like Network.parameters()."""

    def __init__(self, velocities):
        self.velocities = velocities

    @classmethod
    def for_network(cls, net):
        return cls({name: np.zeros_like(arr) for name, arr, _ in net.parameters()})


def sgd_step(net, grads, state, lr, hp):
    """Apply one momentum update in place. Raises on non-finite gradients."""
    for name, w, is_bias in net.parameters():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name}")
        eta = lr * (hp.bias_lr_multiplier if is_bias else 1.0)
        step = g if is_bias else g + hp.weight_decay * w
        v = state.velocities[name]
        v *= hp.momentum
        v += eta * step
        w -= v


def _as_pair(item):
    """Accept (image, gt) tuples or objects with .image / .gt attributes."""
    if isinstance(item, tuple):
        image, gt = item
    else:
        image, gt = item.image, item.gt
    image = np.asarray(image, dtype=np.float64)
    gt = np.asarray(gt)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeError(f"sample image must be (3, h, w), got {image.shape}")
    if gt.shape != image.shape[1:]:
        raise ShapeError(f"sample gt shape {gt.shape} does not match image {image.shape[1:]}")
    return image, gt


def loss_and_grads(net, image, gt, balance=False):
    """Single-image loss and parameter gradients through the full pipeline."""
    x = image[None]
    logits, caches = model.forward_collect(net, x)
    s = net.upsample_factor
    z = layers.upsample_forward(logits, s)
    loss, dz = cross_entropy_loss(z[0, 0], gt, balance)
    dpre = layers.upsample_backward(dz[None, None], s)
    grads, _ = model.backward_from_logits(net, caches, dpre)
    return loss, grads


def loss_only(net, image, gt, balance=False):
    """Loss of one image without building backward caches."""
    logits = model.forward_logits(net, image[None])
    z = layers.upsample_forward(logits, net.upsample_factor)
    loss, _ = cross_entropy_loss(z[0, 0], gt, balance)
    return loss


@dataclass
class TrainLog:
    """Per-iteration rows: (iter, lr, loss_sum, loss_per_pixel)."""

    rows: list = field(default_factory=list)

    COLUMNS = ("iter", "lr", "loss_sum", "loss_per_pixel")

    def append(self, iteration, lr, loss_sum, loss_per_pixel):
        self.rows.append((int(iteration), float(lr), float(loss_sum), float(loss_per_pixel)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            writer.writerows(self.rows)

    @property
    def losses(self):
        return np.array([r[2] for r in self.rows])


def train(samples, config, hp=None, *, width_multiplier=1.0, init="scratch", seed=0,
          initial_net=None):
    """Train a network variant on a list of samples.

    Samples may be (image, gt) pairs or objects exposing those attributes;
    images are (3, h, w) floats, gt binary (h, w). The dataset order is
    reshuffled once per epoch from the run seed; every iteration accumulates
    averaged gradients over ``batch_size`` single-image passes and applies
    one optimizer step. Fully deterministic for a fixed seed.

    Pass ``initial_net`` to start from existing parameters (e.g. after
    loading pretrained stages); it is updated in place.

    Returns (net, TrainLog).
    """
    hp = hp or Hyperparams()
    pairs = [_as_pair(s) for s in samples]
    if not pairs:
        raise DataError("training requires at least one sample")
    rng = np.random.default_rng(seed)
    net = initial_net if initial_net is not None else model.build(
        config, width_multiplier, init=init, seed=seed
    )
    state = OptState.for_network(net)
    log = TrainLog()

    epoch_order = np.empty(0, dtype=np.int64)
    pos = 0
    for it in range(hp.max_iter):
        lr = poly_lr(it, hp)
        grads_acc = None
        loss_acc = 0.0
        pixels = 0
        for _ in range(hp.batch_size):
            if pos >= len(epoch_order):
                epoch_order = rng.permutation(len(pairs))
                pos = 0
            image, gt = pairs[epoch_order[pos]]
            pos += 1
            loss, grads = loss_and_grads(net, image, gt, hp.class_balance)
            loss_acc += loss
            pixels += gt.size
            if grads_acc is None:
                grads_acc = grads
            else:
                for key in grads_acc:
                    grads_acc[key] += grads[key]
        inv = 1.0 / hp.batch_size
        for key in grads_acc:
            grads_acc[key] *= inv
        sgd_step(net, grads_acc, state, lr, hp)
        log.append(it, lr, loss_acc * inv, loss_acc / pixels)
    return net, log


@dataclass
class GradCheckReport:
    max_rel_err: float
    n_checked: int
    n_skipped: int
    worst_param: str

    @property
    def ok(self):
        return self.max_rel_err <= 1e-4


def grad_check(net, image, gt, eps=1e-5, n_samples=200, seed=0, balance=False):
    """Compare analytic parameter gradients against central differences.

    Samples coordinates uniformly across all parameters. Coordinates where
    both gradients are below 1e-8 in magnitude are skipped (relative error
    is meaningless at that scale). Returns a :class:`GradCheckReport`.
    """
    _, grads = loss_and_grads(net, image, gt, balance)
    params = net.parameters()
    sizes = np.array([arr.size for _, arr, _ in params])
    bounds = np.cumsum(sizes)
    total = int(bounds[-1])
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=min(n_samples, total), replace=False)

    max_rel = 0.0
    worst = ""
    checked = 0
    skipped = 0
    for flat in sorted(int(c) for c in chosen):
        p = int(np.searchsorted(bounds, flat, side="right"))
        idx = flat - (0 if p == 0 else int(bounds[p - 1]))
        name, arr, _ = params[p]
        orig = arr.flat[idx]
        arr.flat[idx] = orig + eps
        lp = loss_only(net, image, gt, balance)
        arr.flat[idx] = orig - eps
        lm = loss_only(net, image, gt, balance)
        arr.flat[idx] = orig
        numeric = (lp - lm) / (2.0 * eps)
        analytic = grads[name].flat[idx]
        denom = max(abs(numeric), abs(analytic))
        if denom < 1e-8:
            skipped += 1
            continue
        rel = abs(numeric - analytic) / denom
        checked += 1
        if rel > max_rel:
            max_rel = rel
            worst = f"{name}[{idx}]"
    return GradCheckReport(max_rel, checked, skipped, worst)
