//! Report records. Field order in these structs is the key order in the JSON
//! output.

use histq_core::consistency::ConsistencyReport;
use histq_core::divergence::GrowthVerdict;
use histq_core::entropy::EntropyTerm;
use histq_core::{CMat, C64};
use serde::Serialize;

pub const TAG_CLASS: &str = "decf1";
pub const TAG_SUM: &str = "decf";
pub const TAG_ILS: &str = "ILS2";
pub const TAG_WRIGHT: &str = "propa";
pub const TAG_ENTROPY: &str = "ent";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMat> for Matrix {
    fn from(m: &CMat) -> Self {
        let rows = |f: fn(&C64) -> f64| {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub tag: &'static str,
    pub h: String,
    pub k: String,
    pub value: Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementResiduals {
    /// Largest `|decf1 − decf|`.
    pub decf: f64,
    #[serde(rename = "ILS2")]
    pub ils2: Option<f64>,
    pub propa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecohereReport {
    pub command: &'static str,
    pub scenario: String,
    pub dim: usize,
    pub times: Vec<f64>,
    pub histories: Vec<String>,
    pub rows: Vec<PairRow>,
    pub residuals: AgreementResiduals,
    /// Why the `ILS2` and `propa` rows are absent, if they are.
    pub sector_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaggedCheck {
    pub tag: &'static str,
    pub report: ConsistencyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub id: usize,
    pub source: &'static str,
    pub label: Option<String>,
    pub size: usize,
    pub consistent: bool,
    pub maximally_refined: bool,
    pub checks: Vec<TaggedCheck>,
    pub members: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSummary {
    pub examined: u64,
    pub truncated: bool,
    pub budget: u64,
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowsReport {
    pub command: &'static str,
    pub scenario: String,
    pub times: Vec<f64>,
    pub search: SearchSummary,
    pub windows: Vec<WindowRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Wright-operator entropy.
    Tw,
    /// Operator-picture entropy with a `p`-norm.
    Il,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRow {
    pub tag: &'static str,
    pub window: usize,
    pub measure: Measure,
    pub p: f64,
    pub value: f64,
    pub terms: Vec<EntropyTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub window: usize,
    pub measure: Measure,
    pub p: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowValue {
    pub tag: &'static str,
    pub window: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReportOut {
    pub command: &'static str,
    pub scenario: String,
    pub rows: Vec<EntropyRow>,
    pub skipped: Vec<Skipped>,
    pub min: Option<WindowValue>,
    /// Largest entropy over each window and its consistent refinements.
    pub sup: Vec<WindowValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRecord {
    pub tag: &'static str,
    pub label: &'static str,
    pub expected_growth: &'static str,
    pub expected_slope: f64,
    pub slope_tolerance: f64,
    pub growth: Option<GrowthVerdict>,
    pub growth_error: Option<String>,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub tag: &'static str,
    pub samples: usize,
    /// `null` when the quantity could not be computed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes iff the residual is finite and at most the tolerance.
    pub fn bounded(name: &'static str, tag: &'static str, samples: usize, residual: f64, tolerance: f64) -> Self {
        let finite = residual.is_finite();
        Self {
            name,
            tag,
            samples,
            residual: finite.then_some(residual),
            tolerance,
            passed: finite && residual <= tolerance,
        }
    }

    pub fn failed(name: &'static str, tag: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tag,
            samples: 0,
            residual: None,
            tolerance,
            passed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergeReport {
    pub command: &'static str,
    pub omega_rule: String,
    pub series: Vec<SeriesRecord>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub scenario: String,
    pub seed: u64,
    pub max_n: usize,
    pub checks: Vec<Check>,
    pub failed: Vec<&'static str>,
    pub passed: bool,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}
