"""Numerical toolkit for moment norms of random vectors and their duals.

Submodules:
    distributions  closed-form product/spherical families and sampling
    multiindices   exact combinatorial moment constants
    norms          moment-norm estimators (exact, Monte Carlo, sign sums)
    dual           support-function solver for the dual (centroid) norm
    cover          covering/packing estimates and the entropy pipeline
    sudakov        expected suprema and minoration constants
    experiments    named seeded experiment suite
    reporting      deterministic JSON/CSV/SVG serialization
    cli            command-line entry point
"""

from . import (cover, distributions, dual, experiments, multiindices, norms,
               reporting, sudakov)

__version__ = "0.1.0"

__all__ = ["cover", "distributions", "dual", "experiments", "multiindices",
           "norms", "reporting", "sudakov", "__version__"]
