//! Monte Carlo drivers and estimators built on the drop scheme and the
//! matching machinery.

pub mod config;
pub mod events;
pub mod increment;
pub mod lemmas;
pub mod oracles;
pub mod scaling;

pub use config::{binary_entropy, delta_for_epsilon, fitted_c_hat, ExperimentConfig, Resolved, Thresholds};
pub use events::{
    check_inclusions, estimate_event, evaluate_replication, run_replications, simulate, slope_holds, EventEstimate,
    EventFlags, EventId, GridPoint, InclusionReport, Replication, RunSummary,
};
pub use increment::{exact_increment, increment_probability_check, IncrementExact, IncrementRow};
pub use lemmas::{binomial_law, verify_continuous_bound, verify_variance_lemma, VarianceLemmaCheck};
pub use oracles::{
    distribution_equality_check, exact_e_l10, exact_e_ln, exact_law_case1, two_sample_check, DistributionCheck,
    ExactMean, TwoSampleCheck,
};
pub use scaling::{
    estimate_gamma, ln_samples, run_variance_scaling, summarize_ln, tail_envelope, GammaEstimate, Route, ScalingRow,
    TailEnvelope,
};
