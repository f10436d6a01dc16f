from .controller import NmpcController
from .cost import (AttitudeSplit, CostWeights, ReferencePoint, attitude_error_split, hover_thrusts,
                   stage_residual)
from .problem import OcpProblem, update_fault_mode
from .qp import QPResult, qp_solve
from .reference import Trajectory, TrajectoryUndefinedError, build_reference, clamp_position_error
from .rti import OcpSolution, RtiOptions, linearize_dynamics, solve_rti
