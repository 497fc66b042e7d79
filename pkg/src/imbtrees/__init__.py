"""Tree ensembles, undersampling and analytical calibration for imbalanced data."""

from .calibration import CalibrationMap, adjustment_factor, calibrate, calibrate_dataset, decalibrate
from .resampling import (
    SamplingSpec,
    biased_posterior,
    inclusion_prob_majority_balanced,
    inclusion_prob_majority_standard,
    inclusion_prob_minority_bootstrap,
    undersample,
)
from .synthetic_data import (
    Dataset,
    DgpConfig,
    generate_dataset,
    mean_true_probability,
    solve_k_for_prevalence,
    true_probability,
)
from .tree_learning import Forest, Tree, fit_forest, fit_tree, predict_forest, predict_tree

__version__ = "0.1.0"
