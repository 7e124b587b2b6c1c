"""Capacity-constrained user-to-base-station association for vehicular networks."""
from ._jit import BACKEND, USE_NUMBA
from .exact import SolveResult, Status, solve_bnb, solve_bruteforce
from .ils import IlsParams, IlsResult, ils_solve
from .instgen import InstanceSpec, InstanceType, gen_instance, standard_specs, standard_suite
from .model import (Assignment, BaseStation, CostMode, Instance, ModelError, SignalLevel, User,
                    check_feasibility, classify_rsrq, rsrq, total_cost)
from .mobility import Scenario, SimResult, Strategy, ingest_fcd, random_placement_experiment, simulate
from .stats import KsResult, ks_two_sample, summarize

__version__ = "0.1.0"
