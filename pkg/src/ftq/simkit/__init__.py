from .config import KINDS, MismatchConfig, RecoveryCriterion, ScenarioConfig, scenario
from .log import TrajectoryLog
from .metrics import Metrics, compute_metrics, recovery_time, steady_state_planar_error
from .montecarlo import monte_carlo_recovery, run_campaign, summarize
from .runner import run_scenario, simulate
from .trajectories import circle_reference, forward_reference, lemniscate_max_speed, lemniscate_reference
