//! The theorem engine: stability spectra, monotonicity and sign
//! hypotheses, the Poincare-type inequality, growth and cutoff scans,
//! symmetry and direction diagnostics, and the two-well counterexample
//! audit. Every report serializes to JSON and the tabular ones to CSV.

pub mod abg;
pub mod monotone;
pub mod poincare;
pub mod scans;
pub mod stability;
pub mod symmetry;
pub mod testfn;

use serde::Serialize;

pub use abg::{abg_audit, AbgReport, AbgSampleSpec};
pub use monotone::{
    check_f_monotone, check_sign_hypothesis, MonotonicityReport, SignHypothesisReport,
};
pub use poincare::{poincare_gap, poincare_geometric_form, LhsForm, PoincareReport};
pub use scans::{
    cutoff_decay_scan_grid, cutoff_decay_scan_polar, growth_check, growth_check_polar,
    log_cutoff, AnalyticTuple, CutoffInfo, CutoffScanReport, GrowthReport,
};
pub use stability::{
    assemble_stability, stability_lambda_min, stability_quadratic, EigenOpts, StabilityReport,
};
pub use symmetry::{
    direction_alignment, growth_exponent, growth_exponent_profile, symmetry_residual,
    AlignmentReport, AlignmentVerdict, GrowthExponentReport, SymmetryReport,
};

/// Outcome vocabulary shared by every diagnostic in a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The theorem's hypothesis was not met, so the conclusion is not
    /// claimed; distinct from a failure.
    HypothesisNotMet,
    Skipped,
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail)
    }
}
