"""flexhull: ellipsoidal DER aggregate-flexibility regions for radial feeders."""

__version__ = "0.1.0"

from .benders import (BendersConfig, CutPool, DualExtremePoint, Ellipsoid,
                      FlexResult, MasterInfeasibleError, evaluate_cut, run,
                      solve_master, support_ellipsoid, support_uncertainty)
from .compact import (CompactAffineSystem, RecourseResult, assemble, dual_value,
                      dump_matrices, maximize_over_dual, recourse_check)
from .ders import (DerFleet, DerSpec, EsParams, EvParams, HvacParams, LoadParams,
                   PvParams, UncertaintyModel, der_polytope_rows, load_fleet,
                   sample_uncertainty, uncertainty_columns)
from .feeder import (Bus, FeederModel, Line, RadialityError, Topology,
                     enumerate_spanning_trees, lindistflow_rows, load_feeder,
                     validate_radial)
from .subproblem import (BnbNode, GapReport, SubproblemInstance,
                         brute_force_subproblem, build_instance, compute_bounds,
                         solve_subproblem)
from .validate import (ScenarioConfig, ValidationReport, VolumeTable,
                       disaggregate, ellipsoid_volume, emit_report,
                       monte_carlo_validate, reference_topology, sample_trajectory,
                       solve_scenario, sweep, with_horizon)
