//! Crew-constrained repair scheduling for a community's power, water and
//! transport lifelines after an earthquake.
//!
//! A [`community::Community`] is damaged by a sampled [`hazard::DamageScenario`];
//! crews repair components in batches ([`dynamics`]) and schedules are scored
//! by the time-averaged benefited population ([`objective`]). Schedules come
//! from a base heuristic, a one-step-lookahead rollout over it (exhaustive or
//! with [`annealing`]), or an exact oracle for small instances ([`rollout`]).
//! [`experiment`] runs the Monte Carlo comparison and [`io`] handles files.

pub mod annealing;
pub mod community;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod hazard;
pub mod ids;
pub mod io;
pub mod objective;
pub mod rollout;

pub use community::{validate_community, Community, CommunityConfig, ComponentKind};
pub use dynamics::{apply_action, enumerate_actions, RecoveryState, RepairAction, Trajectory};
pub use error::{ConfigIssue, Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult};
pub use hazard::{sample_scenario, DamageScenario, HazardConfig, HazardModel};
pub use ids::{ComponentId, ComponentSet};
pub use objective::{trajectory_reward, Evaluation, RewardConvention};
pub use rollout::{exhaustive_optimum, run_policy, BaseHeuristic, BasePolicy, PolicyKind, Problem};
