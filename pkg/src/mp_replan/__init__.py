"""Movement-primitive trajectory generation with segment-based policy training.

A compact weight vector parameterizes a smooth desired trajectory; a Gaussian
policy over that weight space is trained with clipped importance ratios or
per-state KL trust-region projection, replanning every k environment steps.
"""

from .basis import (DmpConfig, MpBasisSet, basis_rows, complementary,
                    load_basis_set, precompute_basis_set, q1q2, rbf_basis,
                    rbf_centers, save_basis_set)
from .controller import PdGains, pd_action
from .dmp import integrate as dmp_integrate
from .gaussian import DiagGaussian, kl_diag, kl_parts
from .nets import Mlp, MlpSpec
from .optim import Adam
from .phase import PhaseConfig, phase
from .policy import GaussianPolicy, ValueFunction
from .prodmp import evaluate as prodmp_evaluate
from .prodmp import rollout as prodmp_rollout
from .prodmp import solve_coeffs as prodmp_solve_coeffs
from .projection import (TrustRegionBounds, cov_kl_part, mean_kl_part,
                         project_cov, project_mean, project_policy,
                         project_policy_backward, trust_region_regression_loss)
from .promp import fit_promp_weights, promp_basis, promp_evaluate
from .reacher import GoalSwitchConfig, ReacherEnv, ReacherState
from .rollout import (FrameSkip, MpStack, RolloutConfig, SegmentBatch,
                      collect_segments, eval_episodes, run_episode)
from .runconfig import ConfigError, RunConfig, parse_config
from .segments import episode_return, gae_advantages, segment_reward
from .stats import iqm, stratified_bootstrap_ci, summarize
from .trajectory import (DesiredTrajectory, InitialCondition, WeightVector,
                         read_trajectory_csv, write_trajectory_csv)
from .trainer import load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"
