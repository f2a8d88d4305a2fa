//! Consistent sets (windows) in the propositions picture and in the operator
//! picture, refinement, and window search over coarse-grainings of product
//! histories built from per-time projective measurements.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::decoherence::DecoherenceState;
use crate::histories::{embed, HomogeneousHistory};
use crate::linalg::{self, fourier_basis, max_abs, max_abs_diff, CMat, C64};
use crate::partitions::{blocks, RestrictedGrowth};
use crate::propositions::{hs_inner, Proposition, PropositionSpace, WrightOperator};
use crate::{Error, Result, Tolerances};

/// Largest product-history family the search will coarse-grain.
pub const MAX_FAMILY_SIZE: usize = 12;

pub const DEFAULT_SEARCH_BUDGET: u64 = 250_000;

/// One projective measurement: mutually orthogonal projectors summing to 1.
pub type Pvm = Vec<CMat>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Orthogonality,
    Completeness,
    Positivity,
    Additivity,
    ReCrossTerm,
}

impl Condition {
    pub fn tag(self) -> &'static str {
        match self {
            Condition::Orthogonality => "orthogonality",
            Condition::Completeness => "completeness",
            Condition::Positivity => "positivity",
            Condition::Additivity => "additivity",
            Condition::ReCrossTerm => "re-cross-term",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub verdict: Verdict,
    pub violated: Vec<Condition>,
    pub max_residual: f64,
    /// `p_T(x_i)` for the propositions check, `d(p_i, p_i)` for the operator
    /// check.
    pub probabilities: Vec<f64>,
}

impl ConsistencyReport {
    fn from_parts(mut violated: Vec<Condition>, max_residual: f64, probabilities: Vec<f64>) -> Self {
        violated.sort();
        violated.dedup();
        let verdict = if violated.is_empty() {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        };
        Self {
            verdict,
            violated,
            max_residual,
            probabilities,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    space: PropositionSpace,
    members: Vec<Proposition>,
    k_report: Option<ConsistencyReport>,
    op_report: Option<ConsistencyReport>,
}

impl Window {
    pub fn new(members: Vec<Proposition>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyWindow)?;
        let space = first.space().clone();
        if members.iter().any(|m| *m.space() != space) {
            return Err(Error::SectorMismatch);
        }
        Ok(Self {
            space,
            members,
            k_report: None,
            op_report: None,
        })
    }

    /// The trivial window `{e}`.
    pub fn unit(space: &PropositionSpace) -> Self {
        Self {
            space: space.clone(),
            members: vec![space.unit()],
            k_report: None,
            op_report: None,
        }
    }

    pub fn space(&self) -> &PropositionSpace {
        &self.space
    }

    pub fn members(&self) -> &[Proposition] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn k_report(&self) -> Option<&ConsistencyReport> {
        self.k_report.as_ref()
    }

    pub fn op_report(&self) -> Option<&ConsistencyReport> {
        self.op_report.as_ref()
    }

    /// Probabilities from the attached propositions-picture report.
    pub fn probabilities(&self) -> &[f64] {
        self.k_report.as_ref().map_or(&[], |r| &r.probabilities)
    }

    /// Runs both checks that apply and attaches the reports.
    pub fn assess(mut self, ds: &DecoherenceState, t: &WrightOperator, tol: &Tolerances) -> Result<Self> {
        self.k_report = Some(check_k(&self, t, tol)?);
        self.op_report = if self.is_projective(tol.projector) {
            Some(check_op(ds, &self, tol)?)
        } else {
            None
        };
        Ok(self)
    }

    /// Consistent according to every attached report; false if none is attached.
    pub fn is_consistent(&self) -> bool {
        let k = self.k_report.as_ref().is_some_and(ConsistencyReport::is_consistent);
        let op = self.op_report.as_ref().is_none_or(ConsistencyReport::is_consistent);
        k && op
    }

    pub fn is_projective(&self, tol: f64) -> bool {
        self.members.iter().all(|m| m.is_projector(tol))
    }

    fn member_keys(&self) -> Vec<Vec<i64>> {
        let mut keys: Vec<Vec<i64>> = self.members.iter().map(|m| canonical_key(m.op())).collect();
        keys.sort();
        keys
    }
}

fn completeness_residual(w: &Window) -> f64 {
    let n = w.space.space_dim();
    let total = w.members.iter().fold(CMat::zeros(n, n), |acc, m| acc + m.op());
    max_abs_diff(&total, &linalg::identity(n))
}

/// Orthogonality, completeness, positivity and additivity for a window of
/// propositions under the Wright operator `t`. Additivity is required on every
/// two-member join and on the whole window.
pub fn check_k(w: &Window, t: &WrightOperator, tol: &Tolerances) -> Result<ConsistencyReport> {
    if w.space != *t.space() {
        return Err(Error::SectorMismatch);
    }
    let m = &w.members;
    let mut violated = Vec::new();
    let mut max_residual: f64 = 0.0;

    let mut ortho: f64 = 0.0;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            ortho = ortho.max(hs_inner(&m[i], &m[j])?.norm());
        }
    }
    if ortho > tol.consistency {
        violated.push(Condition::Orthogonality);
    }
    max_residual = max_residual.max(ortho);

    let complete = completeness_residual(w);
    if complete > tol.consistency {
        violated.push(Condition::Completeness);
    }
    max_residual = max_residual.max(complete);

    let mut probabilities = Vec::with_capacity(m.len());
    for x in m {
        let value = t.form(x, x)?;
        if value.im.abs() > tol.imaginary {
            return Err(Error::NonRealQuadraticForm(value.im));
        }
        let p = value.re;
        if p <= tol.positivity || p > 1.0 + tol.consistency {
            violated.push(Condition::Positivity);
        }
        max_residual = max_residual.max(p - 1.0).max(-p);
        probabilities.push(p);
    }

    let mut additivity = (probabilities.iter().sum::<f64>() - 1.0).abs();
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            additivity = additivity.max(2.0 * t.form(&m[i], &m[j])?.re.abs());
        }
    }
    if additivity > tol.consistency {
        violated.push(Condition::Additivity);
    }
    max_residual = max_residual.max(additivity);

    Ok(ConsistencyReport::from_parts(violated, max_residual, probabilities))
}

/// Operator-picture consistency: mutually orthogonal projectors summing to
/// the identity with `Re d(p, q) = 0` for every distinct pair.
pub fn check_op(ds: &DecoherenceState, w: &Window, tol: &Tolerances) -> Result<ConsistencyReport> {
    if let Some(index) = w.members.iter().position(|m| !m.is_projector(tol.projector)) {
        return Err(Error::NonProjectorMember { index });
    }
    let m = &w.members;
    let mut violated = Vec::new();

    let mut ortho: f64 = 0.0;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            ortho = ortho.max(max_abs(&(m[i].op() * m[j].op())));
        }
    }
    if ortho > tol.consistency {
        violated.push(Condition::Orthogonality);
    }

    let complete = completeness_residual(w);
    if complete > tol.consistency {
        violated.push(Condition::Completeness);
    }

    let mut cross: f64 = 0.0;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            cross = cross.max(ds.eval_extended(&m[i], &m[j])?.re.abs());
        }
    }
    if cross > tol.consistency {
        violated.push(Condition::ReCrossTerm);
    }

    let probabilities = m
        .iter()
        .map(|x| ds.eval_extended(x, x).map(|d| d.re))
        .collect::<Result<Vec<_>>>()?;
    let max_residual = ortho.max(complete).max(cross);
    Ok(ConsistencyReport::from_parts(violated, max_residual, probabilities))
}

/// True iff the members of `w2` can be grouped so that each member of `w1`
/// is the sum of its group, to `tol` entrywise.
pub fn refine_check(w1: &Window, w2: &Window, tol: f64) -> bool {
    if w1.space != w2.space {
        return false;
    }
    let orthogonal = (0..w2.len())
        .all(|i| (i + 1..w2.len()).all(|j| hs_inner(&w2.members[i], &w2.members[j]).is_ok_and(|z| z.norm() <= tol)));
    // With mutually orthogonal parts, y_j can only sit under x_i when
    // ⟨x_i, y_j⟩ = ⟨y_j, y_j⟩.
    let candidates: Vec<Vec<usize>> = w2
        .members
        .iter()
        .map(|y| {
            (0..w1.len())
                .filter(|&i| {
                    !orthogonal
                        || hs_inner(&w1.members[i], y).is_ok_and(|z| (z - C64::new(y.norm_sq(), 0.0)).norm() <= tol)
                })
                .collect()
        })
        .collect();
    let n = w1.space.space_dim();
    let mut sums = vec![CMat::zeros(n, n); w1.len()];
    assign(w1, w2, &candidates, 0, &mut sums, tol)
}

fn assign(w1: &Window, w2: &Window, candidates: &[Vec<usize>], j: usize, sums: &mut [CMat], tol: f64) -> bool {
    if j == w2.len() {
        return sums
            .iter()
            .zip(&w1.members)
            .all(|(s, x)| max_abs_diff(s, x.op()) <= tol);
    }
    for &i in &candidates[j] {
        sums[i] += w2.members[j].op();
        let found = assign(w1, w2, candidates, j + 1, sums, tol);
        sums[i] -= w2.members[j].op();
        if found {
            return true;
        }
    }
    false
}

/// True iff no consistent candidate is a strict refinement of `w`.
pub fn is_maximally_refined(w: &Window, candidates: &[Window], tol: f64) -> bool {
    !candidates
        .iter()
        .any(|c| c.is_consistent() && c.len() > w.len() && refine_check(w, c, tol))
}

/// Computational and discrete-Fourier bases as rank-one measurements.
pub fn default_pvms(dim: usize) -> Vec<Pvm> {
    vec![
        pvm_from_basis(&linalg::identity(dim)),
        pvm_from_basis(&fourier_basis(dim)),
    ]
}

/// Rank-one projectors onto the columns of a unitary.
pub fn pvm_from_basis(u: &CMat) -> Pvm {
    (0..u.ncols())
        .map(|c| {
            let v = u.column(c).into_owned();
            linalg::ket_bra(&v, &v)
        })
        .collect()
}

fn validate_pvm(pvm: &Pvm, dim: usize, time_index: usize, tol: &Tolerances) -> Result<()> {
    let invalid = |reason: String| Error::InvalidPvm { time_index, reason };
    if pvm.is_empty() {
        return Err(invalid("no elements".into()));
    }
    for (k, p) in pvm.iter().enumerate() {
        if p.shape() != (dim, dim) {
            return Err(invalid(format!("element {k} is not {dim}x{dim}")));
        }
        if !linalg::is_projector(p, tol.projector) {
            return Err(invalid(format!("element {k} is not a projector")));
        }
    }
    for a in 0..pvm.len() {
        for b in a + 1..pvm.len() {
            if max_abs(&(&pvm[a] * &pvm[b])) > tol.projector {
                return Err(invalid(format!("elements {a} and {b} overlap")));
            }
        }
    }
    let total = pvm.iter().fold(CMat::zeros(dim, dim), |acc, p| acc + p);
    if max_abs_diff(&total, &linalg::identity(dim)) > tol.projector {
        return Err(invalid("elements do not sum to the identity".into()));
    }
    Ok(())
}

fn canonical_key(m: &CMat) -> Vec<i64> {
    let q = |x: f64| (x * 1e8).round() as i64;
    m.iter().flat_map(|z| [q(z.re), q(z.im)]).collect()
}

#[derive(Debug, Clone)]
pub struct WindowSearch {
    /// Consistent windows, most members first.
    pub windows: Vec<Window>,
    pub examined: u64,
    /// True if the budget stopped the enumeration early.
    pub truncated: bool,
}

/// Enumerates coarse-grainings of the product-history families obtained by
/// picking one measurement per time from `base_pvms[time]` and keeps the
/// windows consistent under `t` (and in the operator picture when every
/// member is a projector). Times are those of `t`'s sector; an empty
/// `base_pvms` uses the trivial measurement at every time.
pub fn search_windows(
    ds: &DecoherenceState,
    t: &WrightOperator,
    base_pvms: &[Vec<Pvm>],
    budget: u64,
    tol: &Tolerances,
) -> Result<WindowSearch> {
    let space = t.space().clone();
    let dim = ds.dim();
    if space.dim_single() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: space.dim_single(),
        });
    }
    let times = space.support().to_vec();
    let per_time: Vec<Vec<Pvm>> = if base_pvms.is_empty() {
        vec![vec![vec![linalg::identity(dim)]]; times.len()]
    } else if base_pvms.len() != times.len() {
        return Err(Error::InvalidArgument(format!(
            "{} measurement lists for {} times",
            base_pvms.len(),
            times.len()
        )));
    } else {
        let mut sorted = Vec::with_capacity(base_pvms.len());
        for (time_index, alternatives) in base_pvms.iter().enumerate() {
            if alternatives.is_empty() {
                return Err(Error::InvalidPvm {
                    time_index,
                    reason: "no measurements".into(),
                });
            }
            let mut alts = Vec::with_capacity(alternatives.len());
            for pvm in alternatives {
                validate_pvm(pvm, dim, time_index, tol)?;
                let mut elements = pvm.clone();
                elements.sort_by_cached_key(canonical_key);
                alts.push(elements);
            }
            sorted.push(alts);
        }
        sorted
    };

    let mut out = WindowSearch {
        windows: Vec::new(),
        examined: 0,
        truncated: false,
    };
    let mut seen: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();

    for choice in cartesian(&per_time.iter().map(Vec::len).collect::<Vec<_>>()) {
        let pvms: Vec<&Pvm> = choice.iter().enumerate().map(|(k, &a)| &per_time[k][a]).collect();
        family_size(&pvms.iter().map(|p| p.len()).collect::<Vec<_>>())?;
        let family = product_family(ds, &space, &times, &pvms)?;
        let gram = family_gram(t, &family)?;
        for labels in RestrictedGrowth::new(family.len()) {
            if out.examined >= budget {
                out.truncated = true;
                break;
            }
            out.examined += 1;
            let parts = blocks(&labels);
            if !passes_screen(&gram, &parts, tol) {
                continue;
            }
            let members = parts
                .iter()
                .map(|block| {
                    let n = space.space_dim();
                    let op = block.iter().fold(CMat::zeros(n, n), |acc, &i| acc + family[i].op());
                    space.proposition(op)
                })
                .collect::<Result<Vec<_>>>()?;
            let window = Window::new(members)?.assess(ds, t, tol)?;
            if window.is_consistent() && seen.insert(window.member_keys()) {
                out.windows.push(window);
            }
        }
        if out.truncated {
            break;
        }
    }
    out.windows.sort_by_key(|w| std::cmp::Reverse(w.len()));
    Ok(out)
}

fn family_size(sizes: &[usize]) -> Result<usize> {
    let size = sizes.iter().product();
    if size > MAX_FAMILY_SIZE {
        return Err(Error::FamilyTooLarge {
            size,
            cap: MAX_FAMILY_SIZE,
        });
    }
    Ok(size)
}

fn cartesian(sizes: &[usize]) -> Vec<Vec<usize>> {
    sizes.iter().fold(vec![Vec::new()], |acc, &n| {
        acc.into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect()
    })
}

fn product_family(
    ds: &DecoherenceState,
    space: &PropositionSpace,
    times: &[f64],
    pvms: &[&Pvm],
) -> Result<Vec<Proposition>> {
    cartesian(&pvms.iter().map(|p| p.len()).collect::<Vec<_>>())
        .into_iter()
        .map(|pick| {
            let h =
                HomogeneousHistory::from_entries(pick.iter().enumerate().map(|(k, &e)| (times[k], pvms[k][e].clone())));
            let op = embed(ds.model(), &h)?;
            space.proposition(op.into_op())
        })
        .collect()
}

fn family_gram(t: &WrightOperator, family: &[Proposition]) -> Result<CMat> {
    let n = family.len();
    let mut g = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = t.form(&family[i], &family[j])?;
        }
    }
    Ok(g)
}

/// Cheap necessary conditions from the family's form matrix; the full checks
/// run on every survivor.
fn passes_screen(gram: &CMat, parts: &[Vec<usize>], tol: &Tolerances) -> bool {
    let slack = 10.0 * tol.consistency;
    let block_sum =
        |a: &[usize], b: &[usize]| -> C64 { a.iter().flat_map(|&i| b.iter().map(move |&j| gram[(i, j)])).sum() };
    for (k, a) in parts.iter().enumerate() {
        let p = block_sum(a, a).re;
        if p <= tol.positivity || p > 1.0 + slack {
            return false;
        }
        for b in &parts[k + 1..] {
            if 2.0 * block_sum(a, b).re.abs() > slack {
                return false;
            }
        }
    }
    true
}
