"""Kineme-based head-motion analysis.

Discover elementary head-motion units (kinemes) from pitch/yaw/roll series,
turn them into chunk-level features and evaluate classifiers on them.
"""
__version__ = "0.1.0"

from headkin.errors import (  # noqa: F401
    ConfigError,
    DataError,
    HeadkinError,
    NumericError,
)
