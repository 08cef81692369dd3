"""Exact and Monte Carlo analysis of random homogeneous iterated function systems."""

__version__ = "0.1.0"

from .commuting import block_extremes, find_sink, local_dim_interval, neck_distribution
from .config import load_config, rifs_from_dict
from .finite_type import enumerate_graph, essential_class, measure_vector
from .lyapunov import dimension_mc, left_endpoint_dim, local_dim_mc
from .model import Ifs, Rifs, SimilarityMap, cylinders, sample_word, validate
from .numfield import RATIONALS, FieldScalar, NumberField, field_make
from .spectrum import alpha_endpoints, beta, dimension_ussc, spectrum_curve

__all__ = [
    "FieldScalar", "Ifs", "NumberField", "RATIONALS", "Rifs", "SimilarityMap", "alpha_endpoints",
    "beta", "block_extremes", "cylinders", "dimension_mc", "dimension_ussc", "enumerate_graph",
    "essential_class", "field_make", "find_sink", "left_endpoint_dim", "load_config",
    "local_dim_interval", "local_dim_mc", "measure_vector", "neck_distribution", "rifs_from_dict",
    "sample_word", "spectrum_curve", "validate",
]
