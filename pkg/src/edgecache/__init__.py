"""Joint service caching and task offloading for dense edge networks.

Library layers, bottom up: model (topology, demand split), cost (queueing
and energy math), offload (inner continuous solve), gibbs (decentralized
caching search), oreo (online drift-plus-penalty controller), baselines,
and the experiment harness (scenario, experiments, mg1, cli).
"""

from .model import (ArrivalProfile, ConfigurationError, Decision,
                    NetworkModel, ServiceCatalog, SlotRanges, SlotState,
                    build_grid_scenario, sample_slot, split_demand,
                    validate_decision)
from .cost import (EPS_STAB, BsCostBreakdown, ConstraintReport,
                   QueueUnstableError, SystemCost, bs_delay_cost, bs_energy,
                   per_slot_constraints_ok, service_moments, sojourn_time,
                   system_cost)
from .offload import SlotInfeasibleError, objective_value, solve_offload
from .gibbs import (NeighborGraph, SamplerConfig, SamplerTrace,
                    StateSpaceTooLargeError, accept_probability,
                    local_objective_delta, propose, run_sampler,
                    stationary_distribution_check)
from .oreo import (ControllerAbort, ControllerState, SlotRecord,
                   drift_bound_constant, run_horizon, step)
from .baselines import (MyopicResult, SchemeId, centralized_delay_optimal,
                        exhaustive_oracle, myopic, non_cooperative)
from .mg1 import MG1Result, MG1SimConfig, mg1_event_sim, pk_sojourn
from .scenario import Scenario, load_scenario, save_scenario
from .experiments import EXPERIMENTS, Experiment, emit_plotdata, run_experiment

__version__ = "0.1.0"
