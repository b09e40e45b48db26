from .base import (ComponentBundle, ConstantVerifier, Generator, Policy, ValueFunction, Verifier,
                   distinct_candidates, generate_subgoals, predict_action, predict_reachability,
                   predict_value)
from .oracle import OracleRangeError, build_oracle_bundle
