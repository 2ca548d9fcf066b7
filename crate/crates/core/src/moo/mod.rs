//! Multi-objective search over the joint policy × accelerator space.
//!
//! Objectives are success rate (maximized), inference latency and SoC power
//! (minimized). Internally everything is all-minimize; the optimizer models
//! `(-success, ln latency, ln power)`.

pub mod acquisition;
pub mod archive;
pub mod bayesopt;
pub mod evaluate;
pub mod gp;
pub mod hypervolume;
pub mod pareto;
pub mod space;

pub use acquisition::{default_gain, epsilon, lower_bound, sms_ego_score};
pub use archive::{write_atomic, ParetoArchive, ARCHIVE_SCHEMA_VERSION};
pub use bayesopt::{
    hypervolume_trace, normalize_objectives, normalized_hypervolume, objective_bounds, optimize_discrete,
    point_of, random_search, run_bayesopt, sample_distinct, space_size, sweep, BoSettings, Observation,
    NORMALIZED_REFERENCE,
};
pub use evaluate::{evaluate, evaluate_config, DesignPoint, ObjectiveVector, Provenance, Tuning};
pub(crate) use evaluate::retarget;
pub use gp::{gp_fit, gp_predict, CandidatePosterior, GpFitOptions, GpModel, SeKernel};
pub use hypervolume::{contributions, exclusive_contribution, hypervolume, hypervolume_clipped};
pub use pareto::{dominates, pareto_filter};
pub use space::{ParamSpace, SpacePoint, DIM_NAMES, N_DIMS};
