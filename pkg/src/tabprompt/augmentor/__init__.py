"""Target augmentation: class spaces, calibrated tree ensemble, confidences."""

from .boosting import (
    GradientBoostedTrees,
    RegressionTree,
    TreeEnsembleModel,
    fit_external_predictor,
)
from .encoding import OrdinalEncoder, ordinal_encode
from .isotonic import IsotonicFit, fit_isotonic
from .targets import (
    AugmentedTarget,
    TargetClass,
    TargetSpace,
    TargetSpaceError,
    augment,
    augment_probs,
    bin_continuous,
    fit_for_dataset,
    one_hot_space,
    one_hot_target,
    serialize_class,
    serialize_target,
    settle_cents,
    space_for_dataset,
)

__all__ = [
    "AugmentedTarget",
    "GradientBoostedTrees",
    "IsotonicFit",
    "OrdinalEncoder",
    "RegressionTree",
    "TargetClass",
    "TargetSpace",
    "TargetSpaceError",
    "TreeEnsembleModel",
    "augment",
    "augment_probs",
    "bin_continuous",
    "fit_external_predictor",
    "fit_for_dataset",
    "fit_isotonic",
    "one_hot_space",
    "one_hot_target",
    "ordinal_encode",
    "serialize_class",
    "serialize_target",
    "settle_cents",
    "space_for_dataset",
]
