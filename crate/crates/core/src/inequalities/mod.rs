//! Executable forms of the comparison inequality and the correlation
//! inequalities, with positive-definiteness testing.

pub mod boundary;
pub mod comparison;
pub mod correlations;
pub mod meeting;
pub mod pd;

use serde::{Deserialize, Serialize};

pub use boundary::{boundary_correlation_check, boundary_moment, density_profile, ProfileReport};
pub use comparison::{comparison_check, ComparisonSetup};
pub use correlations::{
    diffusion_correlation_check, occupation_covariance, sep_correlation_check,
    sip_correlation_check, CorrelationReport,
};
pub use meeting::{meeting_probability_report, MeetingReport, MeetingRow};
pub use pd::{is_positive_definite, random_test_function, PDFunction, PdVerdict, TestFunction};

/// Verdict of an inequality check. Margins are oriented so that the
/// inequality holds iff `worst_margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_case: String,
    /// Exact worst margin (`p/q`) when the check was carried out in rationals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_margin: Option<String>,
}

impl CheckReport {
    pub fn new(
        name: impl Into<String>,
        cases: usize,
        worst_margin: f64,
        tolerance: f64,
        worst_case: String,
    ) -> Self {
        CheckReport {
            name: name.into(),
            cases,
            worst_margin,
            tolerance,
            passed: worst_margin >= -tolerance,
            worst_case,
            exact_margin: None,
        }
    }
}
