//! Numeric policy shared by every module.

use serde::{Deserialize, Serialize};

/// Tolerance record. All comparisons in the crate read their thresholds from
/// here; construct once and pass it through the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative tolerance for operator equality (identity detection, refinement sums).
    pub equality: f64,
    /// Relative Hermiticity tolerance: `max|A - A†| <= hermitian * max|A|`.
    pub hermitian: f64,
    /// Unitarity residual `max|U†U - I|`.
    pub unitary: f64,
    /// Idempotence residual `max|P² - P|` for projectors.
    pub projector: f64,
    /// Residual threshold for consistency conditions.
    pub consistency: f64,
    /// Strict-positivity threshold for window probabilities.
    pub positivity: f64,
    /// Largest admissible imaginary part of a quadratic form.
    pub imaginary: f64,
    /// Trace-one and spectral-reconstruction tolerance for density matrices.
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            equality: 1e-10,
            hermitian: 1e-12,
            unitary: 1e-12,
            projector: 1e-10,
            consistency: 1e-9,
            positivity: 1e-12,
            imaginary: 1e-12,
            trace: 1e-12,
        }
    }
}

impl Tolerances {
    /// Applies `key=value` overrides separated by commas, e.g.
    /// `consistency=1e-8,positivity=1e-14`. A bare number overrides `equality`.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, String> {
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = match part.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => ("equality", part),
            };
            let value: f64 = value
                .parse()
                .map_err(|_| format!("invalid tolerance value {value:?} for {key}"))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("tolerance {key} must be positive and finite"));
            }
            let slot = match key {
                "equality" => &mut self.equality,
                "hermitian" => &mut self.hermitian,
                "unitary" => &mut self.unitary,
                "projector" => &mut self.projector,
                "consistency" => &mut self.consistency,
                "positivity" => &mut self.positivity,
                "imaginary" => &mut self.imaginary,
                "trace" => &mut self.trace,
                other => return Err(format!("unknown tolerance key {other:?}")),
            };
            *slot = value;
        }
        Ok(self)
    }
}
