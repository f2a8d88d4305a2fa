//! Fixed-support sectors of the propositions Hilbert space: the normalized
//! Hilbert-Schmidt inner product, Schatten-type p-norms, the Wright operator
//! and the probability rule `p_T(x) = ⟨x, T x⟩`.

use crate::decoherence::{checked_sector_dim, DecoherenceState, IlsOperator, TemporalElement};
use crate::histories::{pi_dense, HistoryOperator};
use crate::linalg::{self, hermitian_basis, hermitian_residual, vectorize, CMat, CVec, C64};
use crate::model::SystemModel;
use crate::{Error, Result};

/// Operator space `B(ℌ^{⊗n})` over one temporal support.
#[derive(Debug, Clone, PartialEq)]
pub struct PropositionSpace {
    support: Vec<f64>,
    dim_single: usize,
}

impl PropositionSpace {
    pub fn new(support: Vec<f64>, dim_single: usize) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) || dim_single == 0 {
            return Err(Error::InvalidTimeGrid);
        }
        Ok(Self { support, dim_single })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn dim_single(&self) -> usize {
        self.dim_single
    }

    pub fn n_times(&self) -> usize {
        self.support.len()
    }

    /// `tr(1)` on the tensor space, `(dim ℌ)^n`.
    pub fn space_dim(&self) -> usize {
        self.dim_single.pow(self.n_times() as u32)
    }

    /// Dimension of the operator space, `(dim ℌ)^{2n}`.
    pub fn sector_dim(&self) -> usize {
        self.space_dim().pow(2)
    }

    /// The always-true proposition `e`.
    pub fn unit(&self) -> Proposition {
        Proposition {
            space: self.clone(),
            op: linalg::identity(self.space_dim()),
        }
    }

    pub fn zero(&self) -> Proposition {
        let n = self.space_dim();
        Proposition {
            space: self.clone(),
            op: CMat::zeros(n, n),
        }
    }

    pub fn proposition(&self, op: CMat) -> Result<Proposition> {
        Proposition::new(self.clone(), op)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposition {
    space: PropositionSpace,
    op: CMat,
}

impl Proposition {
    pub fn new(space: PropositionSpace, op: CMat) -> Result<Self> {
        let n = space.space_dim();
        if op.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: op.nrows(),
            });
        }
        if op.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite proposition entry".into()));
        }
        Ok(Self { space, op })
    }

    pub fn space(&self) -> &PropositionSpace {
        &self.space
    }

    pub fn op(&self) -> &CMat {
        &self.op
    }

    pub fn to_history_operator(&self) -> HistoryOperator {
        HistoryOperator::new(self.space.support.clone(), self.space.dim_single, self.op.clone())
            .expect("proposition dimensions are validated")
    }

    fn combine(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        same_sector(self, other)?;
        Ok(Self {
            space: self.space.clone(),
            op: f(&self.op, &other.op),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            space: self.space.clone(),
            op: self.op.map(|z| z * c),
        }
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        linalg::is_projector(&self.op, tol)
    }

    /// `⟨x, x⟩`.
    pub fn norm_sq(&self) -> f64 {
        linalg::hs_norm_sq(&self.op) / self.space.space_dim() as f64
    }
}

impl TryFrom<HistoryOperator> for Proposition {
    type Error = Error;

    fn try_from(h: HistoryOperator) -> Result<Self> {
        let space = PropositionSpace::new(h.support().to_vec(), h.dim())?;
        Proposition::new(space, h.into_op())
    }
}

impl TemporalElement for Proposition {
    fn temporal_support(&self) -> Result<Vec<f64>> {
        Ok(self.space.support.clone())
    }

    fn pi_image(&self, model: &SystemModel) -> Result<CMat> {
        if self.space.dim_single != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: self.space.dim_single,
            });
        }
        Ok(pi_dense(&self.op, self.space.dim_single, self.space.n_times()))
    }
}

fn same_sector(x: &Proposition, y: &Proposition) -> Result<()> {
    if x.space != y.space {
        return Err(Error::SectorMismatch);
    }
    Ok(())
}

/// Normalized Hilbert-Schmidt inner product `tr(x† y) / tr(1)`.
pub fn hs_inner(x: &Proposition, y: &Proposition) -> Result<C64> {
    same_sector(x, y)?;
    Ok(linalg::hs_inner(&x.op, &y.op) / x.space.space_dim() as f64)
}

/// `‖b‖_p = (tr((b† b)^{p/2}) / tr(1))^{1/p}`, evaluated from singular values.
pub fn p_norm(b: &Proposition, p: f64) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidNormOrder(p));
    }
    let n = b.space.space_dim() as f64;
    let total: f64 = linalg::singular_values(&b.op).into_iter().map(|s| s.powf(p)).sum();
    Ok((total / n).powf(1.0 / p))
}

/// Wright operator on one support sector, stored as a superoperator acting on
/// column-major vectorized propositions.
#[derive(Debug, Clone, PartialEq)]
pub struct WrightOperator {
    space: PropositionSpace,
    superop: CMat,
}

impl WrightOperator {
    pub fn space(&self) -> &PropositionSpace {
        &self.space
    }

    pub fn superop(&self) -> &CMat {
        &self.superop
    }

    /// Builds `T` from a sesquilinear form given by its values
    /// `gram[a][b] = D(G_a, G_b)` on the Hermitian orthonormal basis
    /// [`hermitian_basis`] of the sector. The form must be Hermitian.
    pub fn from_basis_form(space: PropositionSpace, gram: &CMat, hermitian_tol: f64) -> Result<Self> {
        let sector_dim = checked_sector_dim(space.dim_single, space.n_times())?;
        if gram.shape() != (sector_dim, sector_dim) {
            return Err(Error::DimensionMismatch {
                expected: sector_dim,
                got: gram.nrows(),
            });
        }
        let residual = hermitian_residual(gram);
        if residual > hermitian_tol * linalg::max_abs(gram).max(1.0) {
            return Err(Error::NotHermitian {
                what: "decoherence functional",
                residual,
            });
        }
        let basis = hermitian_basis(space.space_dim());
        let g = CMat::from_fn(sector_dim, sector_dim, |r, a| vectorize(&basis[a])[r]);
        let superop = (&g * gram * g.adjoint()).scale(space.space_dim() as f64);
        Ok(Self { space, superop })
    }

    /// Wright operator of an abstract decoherence functional given through its
    /// operator `X_d`; `⟨e, T e⟩ = tr(X_d)`.
    pub fn from_ils(ils: &IlsOperator, hermitian_tol: f64) -> Result<Self> {
        let space = PropositionSpace::new(ils.support().to_vec(), ils.dim())?;
        let basis: Vec<HistoryOperator> = hermitian_basis(space.space_dim())
            .into_iter()
            .map(|g| HistoryOperator::new(space.support.clone(), space.dim_single, g))
            .collect::<Result<_>>()?;
        let k = basis.len();
        let mut gram = CMat::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                gram[(a, b)] = ils.pair_value(&basis[a], &basis[b])?;
            }
        }
        Self::from_basis_form(space, &gram, hermitian_tol)
    }

    /// `T b`.
    pub fn apply(&self, b: &Proposition) -> Result<Proposition> {
        if b.space != self.space {
            return Err(Error::SectorMismatch);
        }
        let v = &self.superop * vectorize(&b.op);
        Ok(Proposition {
            space: self.space.clone(),
            op: linalg::unvectorize(&v, self.space.space_dim()),
        })
    }

    /// `⟨b1, T b2⟩`.
    pub fn form(&self, b1: &Proposition, b2: &Proposition) -> Result<C64> {
        if b1.space != self.space || b2.space != self.space {
            return Err(Error::SectorMismatch);
        }
        let v1: CVec = vectorize(&b1.op);
        let v2: CVec = vectorize(&b2.op);
        let value = (v1.adjoint() * (&self.superop * v2))[(0, 0)];
        Ok(value / self.space.space_dim() as f64)
    }

    /// `|⟨b1, T b2⟩ - ⟨T b1, b2⟩|`.
    pub fn self_adjoint_residual(&self, b1: &Proposition, b2: &Proposition) -> Result<f64> {
        let lhs = self.form(b1, b2)?;
        let rhs = hs_inner(&self.apply(b1)?, b2)?;
        Ok((lhs - rhs).norm())
    }

    /// `⟨e, T e⟩`.
    pub fn unit_weight(&self) -> C64 {
        let e = self.space.unit();
        self.form(&e, &e).expect("unit is in sector")
    }
}

/// `T = tr(1) · π* ∘ (b ↦ ρ π(b))` on the sector over `support`, so that
/// `⟨b1, T b2⟩ = D(b1, b2)` for every pair of same-support propositions.
pub fn wright_construct(ds: &DecoherenceState, support: &[f64]) -> Result<WrightOperator> {
    let dim = ds.dim();
    let n = support.len();
    let sector_dim = checked_sector_dim(dim, n)?;
    let space = PropositionSpace::new(support.to_vec(), dim)?;
    let pi = pi_superop(dim, n);
    let left_rho = linalg::identity(dim).kronecker(ds.model().rho());
    let superop = (pi.adjoint() * left_rho * &pi).scale(space.space_dim() as f64);
    debug_assert_eq!(superop.nrows(), sector_dim);
    Ok(WrightOperator { space, superop })
}

/// Matrix of π from vectorized `B(ℌ^{⊗n})` to vectorized `B(ℌ)`.
fn pi_superop(dim: usize, n: usize) -> CMat {
    let size = dim.pow(n as u32);
    let mut m = CMat::zeros(dim * dim, size * size);
    if n == 0 {
        for a in 0..dim {
            m[(a * dim + a, 0)] = C64::new(1.0, 0.0);
        }
        return m;
    }
    let inner = dim.pow((n - 1) as u32);
    for row in 0..size {
        for col in 0..size {
            if row % inner != col / dim {
                continue;
            }
            let (a, b) = (row / inner, col % dim);
            m[(b * dim + a, col * size + row)] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// `p_T(x) = ⟨x, T x⟩`, required to be real.
pub fn probability(t: &WrightOperator, x: &Proposition, imaginary_tol: f64) -> Result<f64> {
    let value = t.form(x, x)?;
    if value.im.abs() > imaginary_tol {
        return Err(Error::NonRealQuadraticForm(value.im));
    }
    Ok(value.re)
}
