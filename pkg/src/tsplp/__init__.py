"""Lifted linear-programming formulation of the travelling salesman problem.

Tours from city 1 are read as paths through a stage graph whose arcs
``(i, r, j)`` say "city i at stage r, city j at stage r+1".  Pair (``y``) and
triple (``z``) variables over those arcs form an equality-constrained LP,
solved here by a self-contained revised simplex and checked against
brute-force enumeration.
"""
from .decomposition import FlowDecomposition, PathExplosion, decompose, tours_in_solution
from .harness import ExperimentRecord, run_experiment, search_gap
from .indexing import Arc, VariableSpace, YKey, ZKey, dimensions, variable_space
from .instance import (Tour, TspInstance, generate_extreme, generate_random, stage_cost,
                       tour_cost)
from .model import (RowTag, SparseLpModel, build_model, lift_tour, objective_value,
                    residuals)
from .mps import export_mps, import_mps
from .oracle import OracleResult, brute_force_opt
from .simplex import (LpSolution, SolverOptions, Status, certify_optimality, solve,
                      solve_dual, solve_primal)

__version__ = "0.1.0"
