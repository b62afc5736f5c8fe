"""Numerical experiments on equidistribution of expanding horocycle sections
in the space of unimodular affine lattices."""

from .group import GroupElement, a, dist_proxy, exp_generator, inv, k, mul, u
from .modular_space import HaarSampler, ReducedPoint, TestFunction, haar_integral, haar_sample, reduce
from .sections import HorocycleSection, eval_section, is_rationally_linear, lambda_of, window_constants
from .ensembles import (
    continuous_average,
    discrepancy_DM,
    fit_decay,
    mixing_correlation,
    nonprimitive_average,
    primitive_average,
    twisted_average,
)
from .weights import WeightFunction, partition_of_unity

__version__ = "0.1.0"
