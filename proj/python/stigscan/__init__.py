"""Lexicon scanning and rate-ratio modelling for clinical notes."""

from ._stigscan import (
    Scanner,
    StigscanError,
    __version__,
    fit_poisson,
    fit_random_intercept,
    format_cell,
    gauss_hermite,
    median_irr,
    normalize_token,
    segment,
    shipped_lexicon,
    spearman,
    synthesize,
)

__all__ = [
    "Scanner",
    "StigscanError",
    "__version__",
    "fit_poisson",
    "fit_random_intercept",
    "format_cell",
    "gauss_hermite",
    "median_irr",
    "normalize_token",
    "segment",
    "shipped_lexicon",
    "spearman",
    "synthesize",
]
