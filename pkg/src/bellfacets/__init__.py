"""Facet Bell-inequality search, detection-efficiency thresholds and NPA compilation."""

from .errors import *  # noqa: F401,F403
from .scenario import (BellInequality, Distribution, Relabelling, Scenario, apply_relabelling,
                       enumerate_deterministic, enumerate_ns_canonical, enumerate_ns_extremal_sa,
                       is_no_signalling, pr_box, relabelling_group, uniform_distribution)
from .exactlp import LocalCertificate, check_optimality, dual_bell, is_local, local_weight
from .facetgen import (FULL, TALLY, Registry, affine_fix, bruteforce_facets, equivalent,
                       is_facet, orbit_size, run_search, signature)
from .detection import (Lifting, eta_extend, effective_objective, fundamental_bound,
                        lift_inequality, liftings, lp_point_threshold, sdp_lift_threshold)
from .qdist import rationalize, run_search_quantum, sample_quantum
from .kernels import BACKEND

__version__ = "0.1.0"
