"""Diophantine approximation over F_q((1/X)): exact arithmetic,
dynamics on polynomial lattices, and the Monte Carlo experiments built
on them.

Layers, bottom to top:

``fields`` / ``poly`` / ``laurent``
    Exact arithmetic: finite fields, polynomials, truncated Laurent
    series with certified precision tracking.
``cfrac``
    Continued fractions of Laurent series and their digit statistics.
``lattices``
    Polynomial lattices, weak Popov reduction, successive minima, the
    diagonal flow, and an independent shortest-vector oracle.
``diophantine``
    Rate-beating solution counts, the excursion correspondence, and
    the convergence/divergence dichotomy experiment.
``shrinking``
    Shrinking-target bookkeeping: hit families, Borel-Cantelli
    verdicts, pair correlation, error terms, equidistribution
    certificates, and tail fitting.
``tree``
    The quotient ray of the Bruhat-Tits tree: geodesic coding, the
    logarithm-law statistic, exact ray measures, Haar samplers, and a
    d = 2 mean-value check.
``cli``
    The ``ulab`` console command wrapping all of the above.
"""

__version__ = "0.1.0"

from .cfrac import CFExpansion, cf_expand, degree_statistics
from .diophantine import (ApproximationLattice, PsiSpec, excursion_trace,
                          kg_experiment, series_test)
from .errors import ConfigError, PrecisionError, SingularLatticeError
from .fields import Fq, GF
from .lattices import PolyLattice, flow_matrix, shortest_vector_oracle
from .laurent import Laurent
from .poly import FqPoly
from .shrinking import (HitFamily, bc_verdict, ed_check, error_term_check,
                        independent_family, pair_correlation, tail_fit)
from .tree import (GeodesicCode, RayModel, geodesic_code, loglaw_limsup,
                   ray_measure, siegel_check_d2)

__all__ = [
    "ApproximationLattice", "CFExpansion", "ConfigError", "Fq", "FqPoly",
    "GF", "GeodesicCode", "HitFamily", "Laurent", "PolyLattice",
    "PrecisionError", "PsiSpec", "RayModel", "SingularLatticeError",
    "bc_verdict", "cf_expand", "degree_statistics", "ed_check",
    "error_term_check", "excursion_trace", "flow_matrix", "geodesic_code",
    "independent_family", "kg_experiment", "loglaw_limsup",
    "pair_correlation", "ray_measure", "series_test",
    "shortest_vector_oracle", "siegel_check_d2", "tail_fit",
    "__version__",
]
