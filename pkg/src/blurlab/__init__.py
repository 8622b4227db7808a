"""blurlab: local blur mapping with trimmed fully convolutional networks.

Library surface: network construction and inference (:mod:`blurlab.model`),
training and gradient auditing (:mod:`blurlab.training`), benchmark metrics
(:mod:`blurlab.evaluation`), classical patch baselines
(:mod:`blurlab.baselines`), blur-map applications
(:mod:`blurlab.applications`), and dataset tooling (:mod:`blurlab.data`).
"""

from .applications import blur_degree, magnify_blur, trimap
from .baselines import gradient_stat_map, spectral_slope_map
from .data import Sample, SplitSpec, ingest, make_synthetic, preprocess
from .errors import (
    BlurlabError,
    ConfigError,
    ContractError,
    DataError,
    NumericError,
    ShapeError,
    WeightFormatError,
)
from .evaluation import average_precision, evaluate, ods, ois, pr_curve
from .model import ConfigId, Network, build, forward, forward_logits, load_weights, save_weights
from .training import Hyperparams, cross_entropy_loss, grad_check, poly_lr, train

__version__ = "0.1.0"

__all__ = [
    "BlurlabError", "ConfigError", "ContractError", "DataError", "NumericError",
    "ShapeError", "WeightFormatError",
    "ConfigId", "Network", "build", "forward", "forward_logits",
    "load_weights", "save_weights",
    "Hyperparams", "cross_entropy_loss", "grad_check", "poly_lr", "train",
    "average_precision", "evaluate", "ods", "ois", "pr_curve",
    "gradient_stat_map", "spectral_slope_map",
    "blur_degree", "magnify_blur", "trimap",
    "Sample", "SplitSpec", "ingest", "make_synthetic", "preprocess",
    "__version__",
]
