"""MCMC-based informed sampling over kinodynamic informed sets, with an
informed RRT* planner and a benchmark harness."""

from .core import (ConfigError, JointState, KinodynamicLimits, RandomSource,
                   State, ValidationError, load_config, sample_uniform_state)
from .mtdi import (AccelProfile, FeasibleTimeSet, InfeasibleDuration,
                   Trajectory, cost_through, joint_feasible_times,
                   joint_min_time, joint_profile_for_time, mtdi_min_time,
                   mtdi_steer, numeric_gradient)
from .informed import (DegenerateEllipse, InformedProblem, VolumeEstimate,
                       estimate_volume_ratio, in_informed_set,
                       phs_direct_sample)
from .samplers import (ChainStalled, ChainState, SamplerConfig, SeedNotFound,
                       WallClockExceeded, hnr_step, hrs_sample,
                       informed_sample, mh_step, rejection_sample,
                       seed_sample)
from .planner import (CSpaceBoxes, PlanarArm, PlanResult, PlannerConfig,
                      collision_free_state, collision_free_trajectory,
                      forward_kinematics, plan)

__version__ = "0.1.0"
