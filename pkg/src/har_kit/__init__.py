"""Activity recognition toolkit for wearable accelerometer streams.

The package covers the classical recognition chain (ingestion,
normalization, sliding-window segmentation, statistical and ECDF
features, a random forest), a minimal convolutional network engine with
reverse-mode gradients, eight stochastic time-series augmentations, and
four self-supervised pretext tasks with a pretrain-then-finetune
evaluation protocol.
"""

__version__ = "0.1.0"

from har_kit.errors import ConfigError, DataError, NumericError

__all__ = ["ConfigError", "DataError", "NumericError", "__version__"]
