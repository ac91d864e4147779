//! Sample-based certification of error-bound conditions, counterexample
//! scans and audits of the implications between them.

mod audit;
mod certificate;
mod certify;
mod contraction;
mod region;
mod scan;
mod sublevel;
mod sufficient;

pub use audit::{
    audit_implications, check_proximal_route, check_value_proximity, default_oracle, entry_step, AuditLink,
    ImplicationAudit, ProximalRouteReport, ProximityReport,
};
pub use certificate::{
    assemble, trend, Condition, Direction, EBCertificate, LogLogFit, Mode, RegionSummary, Term, Verdict, Witness,
    CHECK_REL_TOL, TREND_FACTOR, TREND_WINDOW,
};
pub use certify::{
    certify_bp_gap, certify_bregman_prox_eb, certify_kl, certify_level_set_bregman_eb, certify_level_set_subdiff_eb,
    certify_luo_tseng, certify_prox_pl, certify_strong_ls_bregman_eb, certify_strong_ls_subdiff_eb,
    certify_weak_metric_subreg, BregmanProx, ProxFn, ProxMap, SampleSource,
};
pub use contraction::{
    check_contraction_converse, converse_constant, measure_levelset_contraction, ContractionOptions,
    ContractionReport, ConverseReport, TheoremCheck,
};
pub use region::{Region, Sample, Sampler, MIN_ACCEPTED};
pub use scan::{powers_of_two, scan_counterexample, Counterexample, ScanReport, ScanRow, MAX_SCAN_N};
pub use sublevel::{sublevel_distance, GridSublevel, SublevelOracle, GRID_MAX_DIM};
pub use sufficient::{
    check_value_separation, check_subregularity_prediction, check_sufficient_conditions, ValueSeparationReport, ConditionReport,
    HRow, LocalCondition, PredictionReport,
};
