//! Statistics of trajectories and configurations: extinction times, attempt
//! counts, return probabilities, the Γ statistic, spread and coupling events.

pub mod attempts;
pub mod extinction;
pub mod params;
pub mod returns;
pub mod spread;

pub use attempts::{attempt_counter, first_entrance, greedy_attempts, RepBoundReport, RepSetting};
pub use extinction::{
    attract_inequality_check, bstar_from_samples, bstar_height_seed, bstar_samples, estimate_bstar,
    exponentiality_test, extinction_samples, extinction_time, harris_extinction_time,
    normalized_exp_ks, survival_probability, uncensored_times, AttractReport, BstarReport,
    ExponentialityReport, ExtinctionSample,
};
pub use params::{Decomposition, ParameterSet};
pub use returns::{
    classify_g, classify_h, domination_probe, estimate_phi, g_threshold, gamma, level_count_member,
    phi_trials, predicate_f, DominationReport,
};
pub use spread::{
    block_events, coupling_discrepancy, discrepancy_on, evolve_checkpoints,
    point_to_point_probability, root_reinfection_curve, spread_event_probability,
    spread_event_trials, BlockEvents, BoundedEstimate, DiscrepancyReport, ReinfectionCurve,
};
