"""Fourier analysis on the Boolean cube under product distributions, low-degree
and polynomial-regression learners, feature-subset selection, and exact
brute-force oracles for small dimensions."""

from .data import LabeledDataset, SyntheticSpec, generate, load_csv, load_json, split
from .estimation import empirical_coefficients, empirical_moments
from .fourier import FeatureMoments, FourierExpansion, ProductDistribution
from .learners import SignPredictor, fit_fourier, fit_generic_basis, fit_l2_polyreg
from .oracle import ExactProblem, erm_exhaustive, exact_error, exact_popt, sandwich
from .selection import select

__version__ = "0.1.0"

__all__ = [
    "ExactProblem",
    "FeatureMoments",
    "FourierExpansion",
    "LabeledDataset",
    "ProductDistribution",
    "SignPredictor",
    "SyntheticSpec",
    "empirical_coefficients",
    "empirical_moments",
    "erm_exhaustive",
    "exact_error",
    "exact_popt",
    "fit_fourier",
    "fit_generic_basis",
    "fit_l2_polyreg",
    "generate",
    "load_csv",
    "load_json",
    "sandwich",
    "select",
    "split",
]
