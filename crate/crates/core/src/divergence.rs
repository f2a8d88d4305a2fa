//! Finite truncations of two constructions whose decoherence values diverge
//! in infinite dimension, and a small growth-law classifier for the
//! resulting series.
//!
//! Indices are 1-based in the formulas and 0-based in code; the state is
//! diagonal in the computational basis with weights `ω_k`, and every
//! auxiliary basis is the computational one.

use std::fmt::Write as _;

use serde::Serialize;

use crate::decoherence::basis_sum;
use crate::linalg::{self, op_norm, CMat, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum OmegaRule {
    /// `ω_k = (1 − r) r^{k−1}`; `r = 1/2` gives `2^{−k}`.
    Geometric { ratio: f64 },
    /// Listed weights, zero beyond the list.
    Explicit(Vec<f64>),
}

impl Default for OmegaRule {
    fn default() -> Self {
        OmegaRule::Geometric { ratio: 0.5 }
    }
}

impl OmegaRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            OmegaRule::Geometric { ratio } if !(*ratio > 0.0 && *ratio < 1.0) => Err(Error::InvalidArgument(format!(
                "geometric ratio must lie in (0, 1), got {ratio}"
            ))),
            OmegaRule::Explicit(w) if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) => {
                Err(Error::InvalidArgument("weights must be finite and nonnegative".into()))
            }
            _ => Ok(()),
        }
    }

    /// First `n` weights `ω_1 … ω_n`.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            OmegaRule::Geometric { ratio } => {
                let mut w = Vec::with_capacity(n);
                let mut current = 1.0 - ratio;
                for _ in 0..n {
                    w.push(current);
                    current *= ratio;
                }
                w
            }
            OmegaRule::Explicit(list) => (0..n).map(|k| list.get(k).copied().unwrap_or(0.0)).collect(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            OmegaRule::Geometric { ratio } => format!("geometric(ratio={ratio})"),
            OmegaRule::Explicit(w) => format!("explicit({} weights)", w.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesLabel {
    B1,
    B2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationSeries {
    pub label: SeriesLabel,
    pub points: Vec<(usize, f64)>,
    pub omega_rule: String,
}

impl TruncationSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,value\n");
        for (n, v) in &self.points {
            writeln!(out, "{n},{v}").expect("writing to a string");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QChoice {
    Identity,
}

fn check_n_list(ns: &[usize], min: usize) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument("empty truncation list".into()));
    }
    if ns[0] < min {
        return Err(Error::InvalidArgument(format!("truncations must be at least {min}")));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("truncations must be strictly increasing".into()));
    }
    Ok(())
}

/// Smallest default truncation per series.
pub const B1_MIN_N: usize = 2;
pub const B2_MIN_N: usize = 16;

/// Powers of two from `min` upward, with `max` appended when it is not one.
pub fn default_truncations(min: usize, max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = min.max(1).next_power_of_two();
    if n > min {
        out.push(min);
    }
    while n <= max {
        out.push(n);
        n *= 2;
    }
    if out.last() != Some(&max) && max > min {
        out.push(max);
    }
    out
}

/// `D(P_N, q)` with `P_N = Σ_{i=2}^N |φ_i⟩⟨φ_i|`,
/// `φ_i = (|ψ_i ψ_1⟩ + |ψ_1 ψ_i⟩)/√2`, truncated to `N` basis vectors.
pub fn appendix_b1_series(omega: &OmegaRule, q: &QChoice, ns: &[usize]) -> Result<TruncationSeries> {
    omega.validate()?;
    check_n_list(ns, 2)?;
    let QChoice::Identity = q;
    let max = *ns.last().expect("nonempty");
    let w = omega.weights(max);
    // For q = 1 every f_{i,j,i} is δ_{ij}, so each φ_i contributes (ω_1 + ω_i)/2.
    let mut points = Vec::with_capacity(ns.len());
    let mut value = 0.0;
    let mut reached = 1;
    for &n in ns {
        for i in reached + 1..=n {
            value += 0.5 * (w[0] + w[i - 1]);
        }
        reached = n;
        points.push((n, value));
    }
    Ok(TruncationSeries {
        label: SeriesLabel::B1,
        points,
        omega_rule: omega.describe(),
    })
}

/// Reduced formula `½ Σ_{i≥2} Σ_j (ω_1 f_{1,j,1}(q) + ω_i f_{i,j,i}(q))` with
/// `f_{a,j,b}(q) = ⟨ψ_a ψ_j, q ψ_j ψ_b⟩`, for an explicit two-time `q` on the
/// truncated space.
pub fn b1_reduced_value(weights: &[f64], q: &CMat) -> Result<C64> {
    let n = weights.len();
    if q.shape() != (n * n, n * n) {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: q.nrows(),
        });
    }
    let f = |a: usize, b: usize| -> C64 { (0..n).map(|j| q[(a * n + j, j * n + b)]).sum() };
    let f11 = f(0, 0);
    Ok((1..n).map(|i| (f11 * weights[0] + f(i, i) * weights[i]) * 0.5).sum())
}

/// `P_N` on the truncated two-time space.
pub fn b1_projector(n: usize) -> CMat {
    let mut p = CMat::zeros(n * n, n * n);
    for i in 1..n {
        let mut phi = linalg::CVec::zeros(n * n);
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        phi[i * n] = s;
        phi[i] = s;
        p += linalg::ket_bra(&phi, &phi);
    }
    p
}

/// Full basis-sum evaluation of `D(P_N, q)` on the truncated space.
pub fn b1_direct_value(weights: &[f64], q: &CMat) -> Result<C64> {
    let n = weights.len();
    let id = linalg::identity(n);
    basis_sum(
        weights,
        &id,
        &[id.clone(), id.clone(), id.clone()],
        &b1_projector(n),
        q,
        n,
        2,
    )
}

/// `S(N) = Σ_{k1,k4 ≤ N} ω_{k1}/(k1 + k4)`.
pub fn appendix_b2_series(omega: &OmegaRule, ns: &[usize]) -> Result<TruncationSeries> {
    omega.validate()?;
    check_n_list(ns, 1)?;
    let max = *ns.last().expect("nonempty");
    let w = omega.weights(max);
    let mut harmonic = Vec::with_capacity(2 * max + 1);
    harmonic.push(0.0);
    for k in 1..=2 * max {
        harmonic.push(harmonic[k - 1] + 1.0 / k as f64);
    }
    let points = ns
        .iter()
        .map(|&n| {
            let value = (1..=n).map(|k| w[k - 1] * (harmonic[n + k] - harmonic[k])).sum();
            (n, value)
        })
        .collect();
    Ok(TruncationSeries {
        label: SeriesLabel::B2,
        points,
        omega_rule: omega.describe(),
    })
}

/// `h = Σ (k1 + k4)^{-1} |ψ_{k4} ψ_{k1}⟩⟨ψ_{k1} ψ_{k4}|` truncated to
/// `k1, k4 ≤ dim`; with `cutoff`, only terms with `k1 + k4 ≤ cutoff`.
pub fn b2_operator(dim: usize, cutoff: Option<usize>) -> CMat {
    let mut h = CMat::zeros(dim * dim, dim * dim);
    for k1 in 1..=dim {
        for k4 in 1..=dim {
            let l = k1 + k4;
            if cutoff.is_some_and(|c| l > c) {
                continue;
            }
            h[((k4 - 1) * dim + (k1 - 1), (k1 - 1) * dim + (k4 - 1))] = C64::new(1.0 / l as f64, 0.0);
        }
    }
    h
}

/// Largest `‖h_n − h_m‖ − max(1/n, 1/m)` over pairs from `ns`, with
/// `h_n = b2_operator(dim, Some(n))`.
pub fn cauchy_excess(ns: &[usize], dim: usize) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (a, &n) in ns.iter().enumerate() {
        for &m in &ns[a + 1..] {
            let diff = b2_operator(dim, Some(n)) - b2_operator(dim, Some(m));
            let bound = (1.0 / n as f64).max(1.0 / m as f64);
            worst = worst.max(op_norm(&diff) - bound);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    Bounded,
    Logarithmic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthVerdict {
    pub classification: Growth,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square fit residual over the largest absolute value.
    pub residual: f64,
}

pub const GROWTH_RESIDUAL_THRESHOLD: f64 = 0.05;

fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (my - slope * mx, slope)
}

/// Least-squares fits of the values against a constant, `ln N` and `N`; the
/// best fit wins and near-ties go to the simpler model.
pub fn growth_fit(series: &TruncationSeries) -> Result<GrowthVerdict> {
    let pts = &series.points;
    let (first, last) = match (pts.first(), pts.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => return Err(Error::TooFewPoints),
    };
    if pts.len() < 5 || first == 0 || (last as f64) < 100.0 * first as f64 {
        return Err(Error::TooFewPoints);
    }
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = |intercept: f64, slope: f64, x: &[f64]| -> f64 {
        if scale == 0.0 {
            return 0.0;
        }
        let ss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (ss / x.len() as f64).sqrt() / scale
    };
    let ones = vec![0.0; y.len()];
    let logs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
    let lins: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (log_a, log_b) = fit_line(&logs, &y);
    let (lin_a, lin_b) = fit_line(&lins, &y);
    let candidates = [
        (Growth::Bounded, mean, 0.0, residual(mean, 0.0, &ones)),
        (Growth::Logarithmic, log_a, log_b, residual(log_a, log_b, &logs)),
        (Growth::Linear, lin_a, lin_b, residual(lin_a, lin_b, &lins)),
    ];
    let best = candidates.iter().map(|c| c.3).fold(f64::INFINITY, f64::min);
    let (classification, intercept, slope, residual) = *candidates
        .iter()
        .find(|c| c.3 <= best + 1e-9)
        .expect("some model attains the minimum");
    if residual >= GROWTH_RESIDUAL_THRESHOLD {
        return Err(Error::AmbiguousGrowth(residual));
    }
    Ok(GrowthVerdict {
        classification,
        slope,
        intercept,
        residual,
    })
}
