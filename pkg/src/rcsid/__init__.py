"""Radar cross-section target classification.

Statistical (Swerling, gamma, Lomax, Gaussian-mixture) Bayes classifiers,
feature-based machine-learning classifiers, CWT scalograms and a Monte Carlo
evaluation harness for RCS azimuth signatures.
"""

from .errors import (
    ComponentCollapseError,
    DegenerateDataError,
    EmptySegmentError,
    EstimationError,
    IndeterminateClassificationError,
    InvalidModelError,
    NumericError,
    ParseError,
    RcsError,
    ValidationError,
)
from .signatures import Dataset, RcsSignature, ScatteringCenter, ScatteringCenterModel, load_csv, save_csv

__version__ = "0.1.0"
