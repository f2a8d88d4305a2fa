//! The standard decoherence functional in its equivalent representations:
//! class-operator trace, basis-sum form, and the operator `X_d` on the doubled
//! tensor space.

use crate::histories::{
    class_operator, merge_supports, pi_dense, HistoryOperator, HomogeneousHistory, LinearCombination,
};
use crate::linalg::{self, hermitian_basis, CMat, C64};
use crate::model::{SystemModel, TimeGrid};
use crate::{Error, Result};

/// Largest admissible `(dim ℌ)^{2n}` for the operator-space constructions.
pub const MAX_SECTOR_DIM: usize = 81;

/// Anything that has a temporal support and an image under π.
pub trait TemporalElement {
    fn temporal_support(&self) -> Result<Vec<f64>>;
    fn pi_image(&self, model: &SystemModel) -> Result<CMat>;
}

impl TemporalElement for HistoryOperator {
    fn temporal_support(&self) -> Result<Vec<f64>> {
        Ok(self.support().to_vec())
    }

    fn pi_image(&self, model: &SystemModel) -> Result<CMat> {
        if self.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: self.dim(),
            });
        }
        Ok(self.class_operator())
    }
}

impl TemporalElement for LinearCombination {
    fn temporal_support(&self) -> Result<Vec<f64>> {
        self.support()
    }

    fn pi_image(&self, model: &SystemModel) -> Result<CMat> {
        crate::histories::pi_extend(model, self)
    }
}

#[derive(Debug, Clone)]
pub struct DecoherenceState {
    model: SystemModel,
    grid: TimeGrid,
}

impl DecoherenceState {
    pub fn new(model: SystemModel, grid: TimeGrid) -> Result<Self> {
        if grid.origin() != model.origin() {
            return Err(Error::OriginMismatch {
                grid: grid.origin(),
                model: model.origin(),
            });
        }
        Ok(Self { model, grid })
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// `d(h, k) = tr(P_{tn} ⋯ P_{t1} ρ Q_{t1} ⋯ Q_{tn})` after padding both
    /// histories with identities to the union of their times.
    pub fn eval_homogeneous(&self, h: &HomogeneousHistory, k: &HomogeneousHistory) -> Result<C64> {
        let common = merge_supports(&h.times(), &k.times());
        let dim = self.dim();
        let ch = class_operator(&self.model, &h.padded(&common, dim))?;
        let ck = class_operator(&self.model, &k.padded(&common, dim))?;
        Ok(self.trace_form(&ch, &ck))
    }

    /// `D(b1, b2) = tr(π(b1)† ρ π(b2))`; conjugate-linear in `b1`.
    pub fn eval_extended<A, B>(&self, b1: &A, b2: &B) -> Result<C64>
    where
        A: TemporalElement + ?Sized,
        B: TemporalElement + ?Sized,
    {
        if b1.temporal_support()? != b2.temporal_support()? {
            return Err(Error::MixedSupport);
        }
        let p1 = b1.pi_image(&self.model)?;
        let p2 = b2.pi_image(&self.model)?;
        Ok(self.trace_form(&p1, &p2))
    }

    /// `tr(a† ρ b)` for single-time operators.
    pub fn trace_form(&self, a: &CMat, b: &CMat) -> C64 {
        linalg::trace(&(a.adjoint() * self.model.rho() * b))
    }

    /// Basis-sum representation with every auxiliary basis set to the
    /// eigenbasis of rho.
    pub fn eval_sum_form(&self, p: &HistoryOperator, q: &HistoryOperator) -> Result<C64> {
        let psi = self.model.eigenbasis();
        let aux = vec![psi.clone(); (2 * p.n_times()).saturating_sub(1)];
        self.eval_sum_form_with_bases(p, q, &aux)
    }

    /// Basis-sum representation with explicit auxiliary bases
    /// `e^2, …, e^{2n}` given as unitary matrices whose columns are the basis
    /// vectors.
    pub fn eval_sum_form_with_bases(&self, p: &HistoryOperator, q: &HistoryOperator, aux: &[CMat]) -> Result<C64> {
        if !p.same_sector(q) {
            return Err(Error::MixedSupport);
        }
        basis_sum(
            &self.model.weights(),
            &self.model.eigenbasis(),
            aux,
            p.op(),
            q.op(),
            self.dim(),
            p.n_times(),
        )
    }

    /// Reconstructs `X_d` on `(ℌ^{⊗n}) ⊗ (ℌ^{⊗n})` from the values of `D` on a
    /// Hermitian orthonormal operator basis `{G_a}`; with that basis the
    /// defining equations `tr((G_a ⊗ G_b) X) = D(G_a, G_b)` are diagonal and
    /// `X = Σ D(G_a, G_b) G_a ⊗ G_b`.
    pub fn ils_construct(&self, support: &[f64]) -> Result<IlsOperator> {
        let n = support.len();
        let dim = self.dim();
        let sector_dim = checked_sector_dim(dim, n)?;
        let size = dim.pow(n as u32);
        let basis = hermitian_basis(size);
        let images: Vec<CMat> = basis.iter().map(|g| pi_dense(g, dim, n)).collect();
        let gram = CMat::from_fn(sector_dim, sector_dim, |a, b| self.trace_form(&images[a], &images[b]));
        // M[a, (i, j)] = G_a[i, j]; Y = Mᵀ D M holds Σ D_ab G_a[i,j] G_b[k,l].
        let m = CMat::from_fn(sector_dim, sector_dim, |a, ij| basis[a][(ij / size, ij % size)]);
        let y = m.transpose() * gram * m;
        let xd = CMat::from_fn(sector_dim, sector_dim, |row, col| {
            let (i, k) = (row / size, row % size);
            let (j, l) = (col / size, col % size);
            y[(i * size + j, k * size + l)]
        });
        Ok(IlsOperator {
            support: support.to_vec(),
            dim,
            xd,
        })
    }

    /// `d(p, q) / tr(1)` on the support space.
    pub fn density(&self, p: &HistoryOperator, q: &HistoryOperator) -> Result<C64> {
        let value = self.eval_extended(p, q)?;
        Ok(value / p.op().nrows() as f64)
    }
}

/// `(dim)^{2n}`, or an error when it exceeds [`MAX_SECTOR_DIM`].
pub fn checked_sector_dim(dim: usize, n: usize) -> Result<usize> {
    let sector_dim = dim.checked_pow(2 * n as u32).unwrap_or(usize::MAX);
    if sector_dim > MAX_SECTOR_DIM {
        return Err(Error::SectorTooLarge {
            sector_dim,
            cap: MAX_SECTOR_DIM,
        });
    }
    Ok(sector_dim)
}

/// Operator `X_d` with `D(p, q) = tr((p ⊗ q) X_d)` for self-adjoint `p, q`.
#[derive(Debug, Clone, PartialEq)]
pub struct IlsOperator {
    support: Vec<f64>,
    dim: usize,
    xd: CMat,
}

impl IlsOperator {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.xd
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.xd)
    }

    /// `tr((p ⊗ q) X_d)` without forming the Kronecker product.
    pub fn pair_value(&self, p: &HistoryOperator, q: &HistoryOperator) -> Result<C64> {
        if p.support() != self.support.as_slice() || q.support() != self.support.as_slice() {
            return Err(Error::MixedSupport);
        }
        let size = p.op().nrows();
        // tr((p⊗q)X) = Σ p[j,i] q[l,k] X[(i,k),(j,l)]
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..size {
            for j in 0..size {
                let pji = p.op()[(j, i)];
                if pji == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..size {
                    for l in 0..size {
                        acc += pji * q.op()[(l, k)] * self.xd[(i * size + k, j * size + l)];
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// The `2n`-fold basis sum
/// `Σ ω_{j1} ⟨L_p, p R_p⟩ ⟨L_q, q R_q⟩` with
/// `L_p = e^{2n}⊗…⊗e^{n+1}`, `R_p = ψ⊗e^{2n}⊗…⊗e^{n+2}`,
/// `L_q = ψ⊗e^2⊗…⊗e^n`, `R_q = e^2⊗…⊗e^{n+1}`.
///
/// `psi` holds the eigenvectors matching `weights` as columns and `aux[k-2]`
/// is the basis `e^k`. The weights need not sum to one, so truncated spectra
/// can be evaluated directly. The form is bilinear; it agrees with the
/// sesquilinear functional whenever `p` is self-adjoint.
pub fn basis_sum(weights: &[f64], psi: &CMat, aux: &[CMat], p: &CMat, q: &CMat, dim: usize, n: usize) -> Result<C64> {
    if weights.len() != dim || psi.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: weights.len(),
        });
    }
    if n == 0 {
        let total: f64 = weights.iter().sum();
        return Ok(p[(0, 0)] * q[(0, 0)] * total);
    }
    if aux.len() != 2 * n - 1 || aux.iter().any(|b| b.shape() != (dim, dim)) {
        return Err(Error::InvalidArgument(format!(
            "expected {} auxiliary {dim}x{dim} bases",
            2 * n - 1
        )));
    }
    let size = dim.pow(n as u32);
    if p.shape() != (size, size) || q.shape() != (size, size) {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: p.nrows(),
        });
    }
    let e = |k: usize| aux[k - 2].clone();
    let kron = |fs: Vec<CMat>| linalg::tensor_product(&fs);

    let left_p = kron((n + 1..=2 * n).rev().map(e).collect())?;
    let right_p = kron(
        std::iter::once(psi.clone())
            .chain((n + 2..=2 * n).rev().map(e))
            .collect(),
    )?;
    let left_q = kron(std::iter::once(psi.clone()).chain((2..=n).map(e)).collect())?;
    let right_q = kron((2..=n + 1).map(e).collect())?;
    let pm = left_p.adjoint() * p * right_p;
    let qm = left_q.adjoint() * q * right_q;

    let compose = |digits: &mut dyn Iterator<Item = usize>| digits.fold(0, |acc, d| acc * dim + d);
    // j[1..=2n], counter over all assignments.
    let mut j = vec![0usize; 2 * n + 1];
    let mut acc = C64::new(0.0, 0.0);
    loop {
        let w = weights[j[1]];
        if w != 0.0 {
            let lp = compose(&mut (n + 1..=2 * n).rev().map(|k| j[k]));
            let rp = compose(&mut std::iter::once(j[1]).chain((n + 2..=2 * n).rev().map(|k| j[k])));
            let lq = compose(&mut std::iter::once(j[1]).chain((2..=n).map(|k| j[k])));
            let rq = compose(&mut (2..=n + 1).map(|k| j[k]));
            acc += pm[(lp, rp)] * qm[(lq, rq)] * w;
        }
        let mut slot = 1;
        loop {
            if slot > 2 * n {
                return Ok(acc);
            }
            j[slot] += 1;
            if j[slot] < dim {
                break;
            }
            j[slot] = 0;
            slot += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::embed;
    use crate::linalg::{fourier_basis, identity, matrix_unit};
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_state(rho: CMat) -> DecoherenceState {
        let model = SystemModel::new(CMat::zeros(2, 2), rho).unwrap();
        DecoherenceState::new(model, TimeGrid::new(vec![1.0, 2.0], 0.0).unwrap()).unwrap()
    }

    fn ket_proj(v: CMat) -> CMat {
        &v * v.adjoint()
    }

    fn plus() -> CMat {
        ket_proj(fourier_basis(2).columns(0, 1).into_owned())
    }

    fn minus() -> CMat {
        ket_proj(fourier_basis(2).columns(1, 1).into_owned())
    }

    #[test]
    fn homogeneous_examples() {
        let ds = qubit_state(matrix_unit(2, 0, 0));
        let unit = HomogeneousHistory::new().with(1.0, identity(2));
        assert!((ds.eval_homogeneous(&unit, &unit).unwrap() - 1.0).norm() < 1e-15);

        let hp = HomogeneousHistory::new().with(1.0, plus());
        assert!((ds.eval_homogeneous(&hp, &hp).unwrap() - 0.5).norm() < 1e-15);

        let chain = HomogeneousHistory::from_entries([(1.0, plus()), (2.0, matrix_unit(2, 0, 0))]);
        assert!((ds.eval_homogeneous(&chain, &chain).unwrap() - 0.25).norm() < 1e-15);

        let hm = HomogeneousHistory::new().with(1.0, minus());
        assert!(ds.eval_homogeneous(&hp, &hm).unwrap().norm() < 1e-15);
    }

    #[test]
    fn unit_proposition_has_unit_weight() {
        let ds = qubit_state(matrix_unit(2, 0, 0));
        let e = HistoryOperator::identity(vec![1.0], 2);
        assert!((ds.eval_extended(&e, &e).unwrap() - 1.0).norm() < 1e-15);
        assert!((ds.density(&e, &e).unwrap() - 0.5).norm() < 1e-15);
        let e2 = HistoryOperator::identity(vec![1.0, 2.0], 2);
        assert!((ds.density(&e2, &e2).unwrap() - 0.25).norm() < 1e-15);
    }

    #[test]
    fn extended_matches_homogeneous_and_is_sesquilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let model = sampling::random_model(&mut rng, 3);
        let times = [0.3, 0.9];
        let ds = DecoherenceState::new(model.clone(), TimeGrid::new(times.to_vec(), 0.0).unwrap()).unwrap();
        for _ in 0..10 {
            let h = sampling::random_history(&mut rng, 3, &times);
            let k = sampling::random_history(&mut rng, 3, &times);
            let d = ds.eval_homogeneous(&h, &k).unwrap();
            let big = ds
                .eval_extended(&embed(&model, &h).unwrap(), &embed(&model, &k).unwrap())
                .unwrap();
            assert!((d - big).norm() < 1e-12);
            let lc = ds
                .eval_extended(
                    &LinearCombination::single(h.clone()),
                    &LinearCombination::single(k.clone()),
                )
                .unwrap();
            assert!((d - lc).norm() < 1e-12);

            let alpha = C64::new(0.7, -1.3);
            let scaled = embed(&model, &h).unwrap().scaled(alpha);
            let lhs = ds.eval_extended(&scaled, &embed(&model, &k).unwrap()).unwrap();
            assert!((lhs - alpha.conj() * d).norm() < 1e-12);
            let rhs = ds.eval_extended(&embed(&model, &k).unwrap(), &scaled).unwrap();
            assert!((rhs - alpha * d.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn mixed_supports_rejected() {
        let ds = qubit_state(matrix_unit(2, 0, 0));
        let a = HistoryOperator::identity(vec![1.0], 2);
        let b = HistoryOperator::identity(vec![2.0], 2);
        assert_eq!(ds.eval_extended(&a, &b), Err(Error::MixedSupport));
    }

    #[test]
    fn sum_form_examples() {
        let mut rho = CMat::zeros(2, 2);
        rho[(0, 0)] = C64::new(0.75, 0.0);
        rho[(1, 1)] = C64::new(0.25, 0.0);
        let ds = qubit_state(rho);
        for n in 1..=2 {
            let support: Vec<f64> = (1..=n).map(|t| t as f64).collect();
            let e = HistoryOperator::identity(support, 2);
            assert!((ds.eval_sum_form(&e, &e).unwrap() - 1.0).norm() < 1e-12);
        }
        let pure = qubit_state(matrix_unit(2, 0, 0));
        let psi1 = pure.model().eigenbasis().columns(0, 1).into_owned();
        let p = HistoryOperator::new(vec![1.0], 2, ket_proj(psi1)).unwrap();
        assert!((pure.eval_sum_form(&p, &p).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn sum_form_is_basis_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let model = sampling::random_model(&mut rng, 2);
        let times = [0.2, 0.5];
        let ds = DecoherenceState::new(model.clone(), TimeGrid::new(times.to_vec(), 0.0).unwrap()).unwrap();
        let p = embed(&model, &sampling::random_history(&mut rng, 2, &times)).unwrap();
        let q = embed(&model, &sampling::random_history(&mut rng, 2, &times)).unwrap();
        let reference = ds.eval_extended(&p, &q).unwrap();
        let aux: Vec<CMat> = (0..3).map(|_| sampling::random_unitary(&mut rng, 2)).collect();
        let mixed = ds.eval_sum_form_with_bases(&p, &q, &aux).unwrap();
        assert!((mixed - reference).norm() < 1e-12);
    }

    #[test]
    fn ils_single_time_qubit() {
        let ds = qubit_state(matrix_unit(2, 0, 0));
        let ils = ds.ils_construct(&[1.0]).unwrap();
        assert!((ils.trace() - 1.0).norm() < 1e-10);
        let p = HistoryOperator::new(vec![1.0], 2, plus()).unwrap();
        assert!((ils.pair_value(&p, &p).unwrap() - 0.5).norm() < 1e-9);
    }

    #[test]
    fn ils_cap_enforced() {
        let ds = qubit_state(matrix_unit(2, 0, 0));
        let err = ds.ils_construct(&[1.0, 2.0, 3.0, 4.0]).unwrap_err();
        assert!(err.to_string().contains("support too large for ILS reconstruction"));
        assert!(ds.ils_construct(&[1.0, 2.0, 3.0]).is_ok());
    }

    /// Solves `tr((G_a ⊗ G_b) X) = D(G_a, G_b)` as a dense linear system over a
    /// random (non-orthonormal) Hermitian basis and compares with the
    /// closed-form reconstruction.
    #[test]
    fn ils_matches_generic_linear_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let model = sampling::random_model(&mut rng, 2);
        let ds = DecoherenceState::new(model, TimeGrid::new(vec![0.7], 0.0).unwrap()).unwrap();
        let basis: Vec<CMat> = (0..4).map(|_| sampling::random_hermitian(&mut rng, 2)).collect();
        let ops: Vec<HistoryOperator> = basis
            .iter()
            .map(|g| HistoryOperator::new(vec![0.7], 2, g.clone()).unwrap())
            .collect();
        let unknowns = 16;
        let mut system = CMat::zeros(unknowns, unknowns);
        let mut rhs = crate::linalg::CVec::zeros(unknowns);
        for a in 0..4 {
            for b in 0..4 {
                let row = a * 4 + b;
                let kron = basis[a].kronecker(&basis[b]);
                // tr(K X) = Σ K[c, r] X[r, c]; X flattened row-major.
                for r in 0..4 {
                    for c in 0..4 {
                        system[(row, r * 4 + c)] = kron[(c, r)];
                    }
                }
                rhs[row] = ds.eval_extended(&ops[a], &ops[b]).unwrap();
            }
        }
        let solution = system.lu().solve(&rhs).expect("basis is generic");
        let xd = ds.ils_construct(&[0.7]).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert!((solution[r * 4 + c] - xd.matrix()[(r, c)]).norm() < 1e-9);
            }
        }
    }
}
