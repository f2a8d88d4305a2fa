//! Homogeneous histories, canonical equivalence, tensor-product embedding and
//! the class-operator map π.

use std::collections::BTreeMap;

use ordered_float::OrderedFloat;

use crate::linalg::{self, max_abs, max_abs_diff, projector_residual, CMat, C64};
use crate::model::{heisenberg, SystemModel};
use crate::{Error, Result, Tolerances};

/// Ordered map from time to a single-time projector (Schrödinger picture;
/// Heisenberg transport happens when the history is embedded or multiplied).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HomogeneousHistory {
    entries: BTreeMap<OrderedFloat<f64>, CMat>,
}

impl HomogeneousHistory {
    /// The empty history, i.e. the always-true proposition `e`.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (f64, CMat)>) -> Self {
        let mut h = Self::new();
        for (t, p) in entries {
            h.insert(t, p);
        }
        h
    }

    pub fn insert(&mut self, t: f64, projector: CMat) -> Option<CMat> {
        self.entries.insert(OrderedFloat(t), projector)
    }

    pub fn with(mut self, t: f64, projector: CMat) -> Self {
        self.insert(t, projector);
        self
    }

    pub fn times(&self) -> Vec<f64> {
        self.entries.keys().map(|t| t.0).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, &CMat)> {
        self.entries.iter().map(|(t, p)| (t.0, p))
    }

    pub fn get(&self, t: f64) -> Option<&CMat> {
        self.entries.get(&OrderedFloat(t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical representative: every identity entry removed.
    pub fn support_reduce(&self) -> Self {
        self.support_reduce_with(Tolerances::default().equality)
    }

    pub fn support_reduce_with(&self, tol: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|(_, p)| !is_identity(p, tol))
            .map(|(t, p)| (*t, p.clone()))
            .collect();
        Self { entries }
    }

    /// Support of the canonical representative.
    pub fn support(&self) -> Vec<f64> {
        self.support_reduce().times()
    }

    /// Pads with identities so that every time in `times` carries an entry.
    /// Existing entries at times outside `times` are kept.
    pub fn padded(&self, times: &[f64], dim: usize) -> Self {
        let mut out = self.clone();
        for &t in times {
            out.entries
                .entry(OrderedFloat(t))
                .or_insert_with(|| linalg::identity(dim));
        }
        out
    }

    /// Heisenberg-transported entries in time order.
    pub fn transported(&self, model: &SystemModel) -> Result<Vec<CMat>> {
        self.entries
            .iter()
            .map(|(t, p)| {
                check_entry(model, p, t.0)?;
                heisenberg(model, p, t.0)
            })
            .collect()
    }
}

fn is_identity(p: &CMat, tol: f64) -> bool {
    p.is_square() && max_abs_diff(p, &linalg::identity(p.nrows())) <= tol
}

fn check_entry(model: &SystemModel, p: &CMat, t: f64) -> Result<()> {
    if p.shape() != (model.dim(), model.dim()) {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: p.nrows(),
        });
    }
    let residual = projector_residual(p);
    if residual > model.tolerances().projector {
        return Err(Error::NotProjector {
            what: format!("history entry at t={t}"),
            residual,
        });
    }
    Ok(())
}

/// Sorted union of two supports.
pub fn merge_supports(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// An operator on `ℌ^{⊗n}` with an explicit temporal support of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryOperator {
    support: Vec<f64>,
    dim: usize,
    op: CMat,
}

impl HistoryOperator {
    pub fn new(support: Vec<f64>, dim: usize, op: CMat) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTimeGrid);
        }
        let expected = dim.pow(support.len() as u32);
        if op.shape() != (expected, expected) {
            return Err(Error::DimensionMismatch {
                expected,
                got: op.nrows(),
            });
        }
        Ok(Self { support, dim, op })
    }

    /// The proposition `e` at the given support.
    pub fn identity(support: Vec<f64>, dim: usize) -> Self {
        let n = dim.pow(support.len() as u32);
        Self {
            support,
            dim,
            op: linalg::identity(n),
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn op(&self) -> &CMat {
        &self.op
    }

    pub fn into_op(self) -> CMat {
        self.op
    }

    pub fn n_times(&self) -> usize {
        self.support.len()
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        projector_residual(&self.op) <= tol
    }

    pub fn same_sector(&self, other: &Self) -> bool {
        self.dim == other.dim && self.support == other.support
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            support: self.support.clone(),
            dim: self.dim,
            op: self.op.map(|z| z * c),
        }
    }

    /// Image under π, treating `op` as already in the Heisenberg picture.
    pub fn class_operator(&self) -> CMat {
        pi_dense(&self.op, self.dim, self.n_times())
    }

    /// Expansion into product matrix units `E_{a1 b1} ⊗ … ⊗ E_{an bn}`;
    /// zero coefficients are skipped.
    pub fn dyad_expansion(&self) -> Vec<ProductTerm> {
        let d = self.dim;
        let n = self.n_times();
        let size = self.op.nrows();
        let mut terms = Vec::new();
        for (row, col) in (0..size).flat_map(|r| (0..size).map(move |c| (r, c))) {
            let c = self.op[(row, col)];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let rows = digits(row, d, n);
            let cols = digits(col, d, n);
            let factors = rows
                .iter()
                .zip(cols.iter())
                .map(|(&a, &b)| linalg::matrix_unit(d, a, b))
                .collect();
            terms.push(ProductTerm { coeff: c, factors });
        }
        terms
    }
}

/// Base-`d` digits of `index`, most significant (earliest time) first.
fn digits(mut index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

/// `coeff · factors[0] ⊗ … ⊗ factors[n-1]` with arbitrary single-time factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub coeff: C64,
    pub factors: Vec<CMat>,
}

/// π on a sum of product terms: `Σ c · b_1 b_2 ⋯ b_n`.
pub fn pi_product_terms(terms: &[ProductTerm], dim: usize) -> CMat {
    terms.iter().fold(CMat::zeros(dim, dim), |acc, term| {
        let product = term.factors.iter().fold(linalg::identity(dim), |p, f| p * f);
        acc + product.map(|z| z * term.coeff)
    })
}

/// π on a dense operator over `n` copies of `C^dim`, computed by contracting
/// adjacent tensor legs:
/// `π(X)[a, b] = Σ_c X[(a, c_1..c_{n-1}), (c_1..c_{n-1}, b)]`.
/// For `n = 0` the operator is a scalar multiple of the identity.
pub fn pi_dense(op: &CMat, dim: usize, n: usize) -> CMat {
    if n == 0 {
        return linalg::identity(dim).map(|z| z * op[(0, 0)]);
    }
    let inner = dim.pow((n - 1) as u32);
    CMat::from_fn(dim, dim, |a, b| {
        (0..inner).map(|c| op[(a * inner + c, c * dim + b)]).sum()
    })
}

/// Tensor product of the Heisenberg-transported projectors in time order.
pub fn embed(model: &SystemModel, h: &HomogeneousHistory) -> Result<HistoryOperator> {
    let factors = h.transported(model)?;
    let op = if factors.is_empty() {
        linalg::identity(1)
    } else {
        linalg::tensor_product(&factors)?
    };
    HistoryOperator::new(h.times(), model.dim(), op)
}

/// Embeds after padding with identities up to `support`.
pub fn embed_at(model: &SystemModel, h: &HomogeneousHistory, support: &[f64]) -> Result<HistoryOperator> {
    let times = h.times();
    if times.iter().any(|t| !support.contains(t)) {
        return Err(Error::MixedSupport);
    }
    embed(model, &h.padded(support, model.dim()))
}

/// Class operator `C(h) = P_{t1} ⋯ P_{tn}` of Heisenberg projectors.
pub fn class_operator(model: &SystemModel, h: &HomogeneousHistory) -> Result<CMat> {
    Ok(h.transported(model)?
        .iter()
        .fold(linalg::identity(model.dim()), |acc, p| acc * p))
}

/// Finite linear combination of homogeneous histories sharing one time list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearCombination {
    pub terms: Vec<(C64, HomogeneousHistory)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(C64, HomogeneousHistory)>) -> Self {
        Self { terms }
    }

    pub fn single(h: HomogeneousHistory) -> Self {
        Self::new(vec![(C64::new(1.0, 0.0), h)])
    }

    /// Common time list of all terms, or `MixedSupport`.
    pub fn support(&self) -> Result<Vec<f64>> {
        let mut iter = self.terms.iter().map(|(_, h)| h.times());
        let first = iter.next().unwrap_or_default();
        if iter.any(|times| times != first) {
            return Err(Error::MixedSupport);
        }
        Ok(first)
    }

    /// Dense operator on the tensor space, as a sum of embedded terms.
    pub fn embed(&self, model: &SystemModel) -> Result<HistoryOperator> {
        let support = self.support()?;
        let n = model.dim().pow(support.len() as u32);
        let mut op = CMat::zeros(n, n);
        for (c, h) in &self.terms {
            op += embed(model, h)?.op.map(|z| z * c);
        }
        HistoryOperator::new(support, model.dim(), op)
    }
}

/// `π(Σ c_k h_k) = Σ c_k C(h_k)`.
pub fn pi_extend(model: &SystemModel, b: &LinearCombination) -> Result<CMat> {
    b.support()?;
    let mut out = CMat::zeros(model.dim(), model.dim());
    for (c, h) in &b.terms {
        out += class_operator(model, h)?.map(|z| z * c);
    }
    Ok(out)
}

/// Relative operator equality used for identity detection.
pub fn approx_eq(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol * max_abs(a).max(max_abs(b)).max(1.0)
}
