"""Verification toolkit for S^1-symmetric ALF gravitational instantons.

Numerically certifies the tensor, divergence, charge and boundary-balance
identities of the underlying uniqueness arguments on explicit instanton
metrics, and replays the signature-theorem fixed-point combinatorics and
case analyses in exact arithmetic.
"""

from .jets import JetScalar, jet_lift, jet_context
from .metrics import catalogue, validated_model, sample_points, surface_gravities
from .concomitants import (concomitants_at, ernst_calibrate, petrov_classify,
                           quotient_scalars)
from .identities import run_suite, epsilon_identity_suite, asymptotic_decay_suite
from .combinatorics import (NutData, BoltData, FixedPointConfig, g_signature_rhs,
                            check_signature_identity, jang_lemma_checks,
                            phi_values, enumerate_configs, case_analysis)
from .flux import charge, fixed_point_boundary_term, infinity_term, global_balance

__version__ = "0.1.0"
