//! Information entropies of consistent windows.

use serde::Serialize;

use crate::consistency::{check_k, check_op, refine_check, Window};
use crate::decoherence::DecoherenceState;
use crate::propositions::{p_norm, WrightOperator};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyTerm {
    pub probability: f64,
    pub norm_sq: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub window: usize,
    /// Norm order; 2 for the Wright-operator entropy.
    pub p: f64,
    /// Nats.
    pub value: f64,
    pub terms: Vec<EntropyTerm>,
}

impl EntropyReport {
    fn from_pairs(p: f64, pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let terms: Vec<EntropyTerm> = pairs
            .into_iter()
            .map(|(probability, norm_sq)| EntropyTerm {
                probability,
                norm_sq,
                contribution: -probability * (probability / norm_sq).ln(),
            })
            .collect();
        let value = terms.iter().map(|t| t.contribution).sum();
        Self {
            window: 0,
            p,
            value,
            terms,
        }
    }

    pub fn with_window(mut self, id: usize) -> Self {
        self.window = id;
        self
    }

    /// `−Σ prob·ln(prob/normsq)` from the stored terms.
    pub fn recompute(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| -t.probability * (t.probability / t.norm_sq).ln())
            .sum()
    }
}

/// `I_{T,W} = −Σ ⟨x,Tx⟩ ln(⟨x,Tx⟩/⟨x,x⟩)`.
pub fn entropy_tw(t: &WrightOperator, w: &Window, tol: &Tolerances) -> Result<EntropyReport> {
    let report = check_k(w, t, tol)?;
    if !report.is_consistent() {
        return Err(Error::InconsistentWindow);
    }
    let pairs = report
        .probabilities
        .iter()
        .zip(w.members())
        .map(|(&prob, x)| (prob, x.norm_sq()));
    Ok(EntropyReport::from_pairs(2.0, pairs))
}

/// `−Σ d(α,α) ln(d(α,α)/‖α‖_p²)` for an operator-consistent projector window
/// with strictly positive diagonal values.
pub fn entropy_il_p(ds: &DecoherenceState, w: &Window, p: f64, tol: &Tolerances) -> Result<EntropyReport> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidNormOrder(p));
    }
    let report = check_op(ds, w, tol)?;
    if !report.is_consistent() || report.probabilities.iter().any(|&d| d <= tol.positivity) {
        return Err(Error::InconsistentWindow);
    }
    let pairs = report
        .probabilities
        .iter()
        .zip(w.members())
        .map(|(&prob, x)| p_norm(x, p).map(|n| (prob, n * n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyReport::from_pairs(p, pairs))
}

/// `a ln(a/b^q) − (1+a) ln((1+a)/(1+b)^q)`, with `a ln a → 0` at `a = 0`.
pub fn fq(a: f64, b: f64, q: f64) -> Result<f64> {
    if !b.is_finite() || b <= 0.0 {
        return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
    }
    if !a.is_finite() || a < 0.0 || !q.is_finite() || q < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "need a >= 0 and q >= 1, got a={a}, q={q}"
        )));
    }
    let head = if a == 0.0 { 0.0 } else { a * (a.ln() - q * b.ln()) };
    Ok(head - (1.0 + a) * (a.ln_1p() - q * b.ln_1p()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    /// Position in the family.
    pub index: usize,
}

/// Smallest `I_{T,W}` over the consistent members of `family`; ties within
/// `1e-12` go to the lowest index. This bounds the global minimum from above.
pub fn entropy_min(t: &WrightOperator, family: &[Window], tol: &Tolerances) -> Result<Extremum> {
    let mut best: Option<Extremum> = None;
    for (index, w) in family.iter().enumerate() {
        let value = match entropy_tw(t, w, tol) {
            Ok(r) => r.value,
            Err(Error::InconsistentWindow) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|b| value < b.value - 1e-12) {
            best = Some(Extremum { value, index });
        }
    }
    best.ok_or(Error::NoConsistentWindow)
}

/// Largest `I_{T,W'}` over `w` and its consistent refinements in `family`.
pub fn entropy_sup(t: &WrightOperator, w: &Window, family: &[Window], tol: &Tolerances) -> Result<f64> {
    let mut best = entropy_tw(t, w, tol)?.value;
    for c in family {
        if !refine_check(w, c, tol.consistency) {
            continue;
        }
        match entropy_tw(t, c, tol) {
            Ok(r) => best = best.max(r.value),
            Err(Error::InconsistentWindow) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}
