from .binning import BinMapper
from .boosting import Ensemble, TrainConfig, compute_gradients, feature_importance, fit_ensemble, predict
from .efb import FeatureBundle, efb_bundle, efb_merge_row
from .goss import GossConfig, goss_error_bound, goss_gain, goss_partition, split_gain
from .metrics import Metrics, classification_metrics, evaluate
from .validation import CvReport, cross_validate, stratified_split

__all__ = [
    "BinMapper", "CvReport", "Ensemble", "FeatureBundle", "GossConfig", "Metrics", "TrainConfig",
    "classification_metrics", "compute_gradients", "cross_validate", "efb_bundle", "efb_merge_row",
    "evaluate", "feature_importance", "fit_ensemble", "goss_error_bound", "goss_gain", "goss_partition",
    "predict", "split_gain", "stratified_split",
]
