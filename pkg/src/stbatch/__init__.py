"""Binary (s, t)-batch codes: bounds, constructions, serving and verification."""

from .gf2 import BitMatrix, xor_sum, rank, quotient_reps, change_of_basis
from .model import (
    RecoveryPlan,
    RequestMultiset,
    SystematicCode,
    replication_code,
    solve_plan_exact,
    verify_batch_property,
    verify_plan,
)
from .qcalc import lower_bound_redundancy, recursive_upper_bound, ordered_batch_feasible, q_binomial
from .partitions import VPartition, PartitionFamily, random_complete_family, recursive_code, recursive_serve
from .affine import AffinePlane, default_parameters, sample_construction, serve_requests, estimate_failure_rate
from .simplex import simplex_code, serve_functional, build_coset_graph, component_decompose, greedy_independent_set

__version__ = "0.1.0"
