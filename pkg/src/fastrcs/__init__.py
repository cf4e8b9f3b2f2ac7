"""Robust regression outlier detection with the RCS outlyingness index."""

from .estimators import FastLTSRegressor, FastRCSRegressor
from .lts import LtsConfig, LtsResult, c_step, fastlts
from .rcs import (
    Dataset,
    DegenerateDataError,
    Hyperplane,
    OutlyingnessReport,
    RcsConfig,
    RcsResult,
    fastrcs,
    i_index,
    subset_size_h,
)
from .simgen import ContaminationConfig, GeneratedSample, generate, mp_starts

__all__ = [
    "ContaminationConfig",
    "Dataset",
    "DegenerateDataError",
    "FastLTSRegressor",
    "FastRCSRegressor",
    "GeneratedSample",
    "Hyperplane",
    "LtsConfig",
    "LtsResult",
    "OutlyingnessReport",
    "RcsConfig",
    "RcsResult",
    "c_step",
    "fastlts",
    "fastrcs",
    "generate",
    "i_index",
    "mp_starts",
    "subset_size_h",
]
