"""Spectral tools for binomial-weighted Gevrey norms and analyticity radii of Euler flows."""

__version__ = "0.1.0"

from .fields import SpectralField, load_field, save_field  # noqa: E402
from .gevrey import SeminormTable, fit_radius, max_tau_for_budget, seminorm_table, x_norm  # noqa: E402
from .multiindex import MultiIndex, weight  # noqa: E402

__all__ = [
    "MultiIndex",
    "SeminormTable",
    "SpectralField",
    "fit_radius",
    "load_field",
    "max_tau_for_budget",
    "save_field",
    "seminorm_table",
    "weight",
    "x_norm",
]
