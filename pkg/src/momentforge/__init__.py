"""Weak and strong p-th moments of finitely supported random vectors."""

__version__ = "0.1.0"

from .core import (
    DiscreteVectorLaw, DirectionSet, MomentInstance, canonical_instance, canonical_law,
    covariance, moment_ratio, strong_moment, summarize, symmetrize, weak_moment,
)
from .constants import c_np, envelope, gordon_pi_p, psumming_upper, sphere_moment
from .zp import ZpBodySpec, constraint_norm, tail_bound_check, zp_norm, zp_norm_p2, zp_pth_moment
from .hadamard import (
    RankFactoredMatrix, balanced_factorization, condition_iii_ratio, expand_factorization,
    hadamard_power,
    instance_to_matrix, numerical_rank,
)
from .certificate import build_certificate, reduce_even, reduce_to_even, verify_p2_step
from .search import SearchConfig, local_refine, random_instance, search_extremal
