"""Clustering adaptive Gaussian process regression.

Surrogate modeling for parametrized structural responses whose pattern
changes qualitatively across the parameter range: training samples are
placed adaptively around pattern boundaries, each pattern cluster gets its
own reduced-order GP regressor, and online queries are classified to a
cluster before prediction.
"""

__version__ = "0.1.0"

from .classify import NearestNeighborClassifier
from .dataset import ClusteredDataset, LabeledDataset, load_dataset, save_dataset
from .errors import (
    CagError,
    ConvergenceFailure,
    DimensionMismatch,
    DivisionByZero,
    DuplicateInput,
    InvalidParameter,
    IoError,
    NumericalFailure,
    ParseError,
    VersionMismatch,
)
from .gpr import GPModel, Hyperparams, OptimizerConfig
from .pipeline import (
    Prediction,
    TrainConfig,
    TrainedModel,
    load_model,
    offline_train,
    online_predict,
    save_model,
    train_uniform_baseline,
)
from .reduction import ReducedBasis, fit_basis, project, restore
from .sampling import SamplingConfig, adaptive_generate, kmeans, uniform_grid
from .solvers import (
    SpringConfig,
    get_solver,
    label_samples,
    spring_displacement,
    spring_solver,
    wavelet,
    wavelet_solver,
)

__all__ = [
    "__version__",
    "CagError", "ParseError", "IoError", "DimensionMismatch", "DuplicateInput",
    "InvalidParameter", "ConvergenceFailure", "NumericalFailure",
    "VersionMismatch", "DivisionByZero",
    "LabeledDataset", "ClusteredDataset", "load_dataset", "save_dataset",
    "SpringConfig", "wavelet", "spring_displacement",
    "wavelet_solver", "spring_solver", "get_solver", "label_samples",
    "SamplingConfig", "uniform_grid", "kmeans", "adaptive_generate",
    "ReducedBasis", "fit_basis", "project", "restore",
    "Hyperparams", "OptimizerConfig", "GPModel",
    "NearestNeighborClassifier",
    "TrainConfig", "TrainedModel", "Prediction",
    "offline_train", "train_uniform_baseline", "online_predict",
    "save_model", "load_model",
]
