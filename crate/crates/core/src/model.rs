//! Single-time system: Hamiltonian, initial state, unitary evolution and the
//! Heisenberg transport of projectors.

use crate::linalg::{
    self, ensure_square, hermitian_eigen, hermitian_residual, max_abs, max_abs_diff, projector_residual, CMat, CVec,
    C64,
};
use crate::{Error, Result, Tolerances};

/// One term `ω |ψ⟩⟨ψ|` of the spectral resolution of the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTerm {
    pub weight: f64,
    pub vector: CVec,
}

#[derive(Debug, Clone)]
pub struct SystemModel {
    dim: usize,
    hamiltonian: CMat,
    rho: CMat,
    /// Sorted by weight, largest first; always a full orthonormal basis.
    spectral: Vec<SpectralTerm>,
    origin: f64,
    tol: Tolerances,
}

impl SystemModel {
    pub fn new(hamiltonian: CMat, rho: CMat) -> Result<Self> {
        Self::with_tolerances(hamiltonian, rho, Tolerances::default())
    }

    pub fn with_tolerances(hamiltonian: CMat, rho: CMat, tol: Tolerances) -> Result<Self> {
        let dim = ensure_square(&hamiltonian)?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let rho_dim = ensure_square(&rho)?;
        if rho_dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: rho_dim,
            });
        }
        check_hermitian("hamiltonian", &hamiltonian, tol)?;
        let rho_residual = hermitian_residual(&rho);
        if rho_residual > tol.hermitian * max_abs(&rho).max(1.0) {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (residual {rho_residual:e})"
            )));
        }
        let tr = linalg::trace(&rho);
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace is {tr}, expected 1")));
        }
        let eig = hermitian_eigen(&rho);
        let mut spectral = Vec::with_capacity(dim);
        for (k, &w) in eig.values.iter().enumerate().rev() {
            if w < -tol.trace {
                return Err(Error::InvalidDensity(format!("negative eigenvalue {w:e}")));
            }
            spectral.push(SpectralTerm {
                weight: w.max(0.0),
                vector: eig.vectors.column(k).into_owned(),
            });
        }
        let model = Self {
            dim,
            hamiltonian,
            rho,
            spectral,
            origin: 0.0,
            tol,
        };
        let rebuilt = model.spectral_reconstruction();
        let residual = max_abs_diff(&rebuilt, &model.rho);
        if residual > tol.equality.max(tol.trace) {
            return Err(Error::InvalidDensity(format!(
                "spectral reconstruction residual {residual:e}"
            )));
        }
        Ok(model)
    }

    /// Builds the state from weights and orthonormal vectors.
    pub fn from_spectral(hamiltonian: CMat, terms: &[(f64, CVec)]) -> Result<Self> {
        let dim = hamiltonian.nrows();
        let mut rho = CMat::zeros(dim, dim);
        for (w, v) in terms {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            rho += linalg::ket_bra(v, v).scale(*w);
        }
        Self::new(hamiltonian, rho)
    }

    pub fn with_origin(mut self, t0: f64) -> Self {
        self.origin = t0;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    pub fn spectral(&self) -> &[SpectralTerm] {
        &self.spectral
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn spectral_reconstruction(&self) -> CMat {
        self.spectral.iter().fold(CMat::zeros(self.dim, self.dim), |acc, term| {
            acc + linalg::ket_bra(&term.vector, &term.vector).scale(term.weight)
        })
    }

    /// Unitary whose columns are the eigenvectors `ψ_i` of rho.
    pub fn eigenbasis(&self) -> CMat {
        CMat::from_fn(self.dim, self.dim, |r, c| self.spectral[c].vector[r])
    }

    pub fn weights(&self) -> Vec<f64> {
        self.spectral.iter().map(|t| t.weight).collect()
    }
}

fn check_hermitian(what: &'static str, m: &CMat, tol: Tolerances) -> Result<()> {
    let residual = hermitian_residual(m);
    if residual > tol.hermitian * max_abs(m) {
        return Err(Error::NotHermitian { what, residual });
    }
    Ok(())
}

/// Finite, strictly increasing list of time points with an origin `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    origin: f64,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>, origin: f64) -> Result<Self> {
        let finite = origin.is_finite() && times.iter().all(|t| t.is_finite());
        if !finite || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTimeGrid);
        }
        Ok(Self { times, origin })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn contains(&self, t: f64) -> bool {
        self.times.contains(&t)
    }
}

/// `U(t, t0) = exp(-i H (t - t0))` via the eigendecomposition of `H`.
pub fn evolve(model: &SystemModel, t: f64) -> Result<CMat> {
    check_hermitian("hamiltonian", &model.hamiltonian, model.tol)?;
    let dt = t - model.origin;
    if dt == 0.0 || max_abs(&model.hamiltonian) == 0.0 {
        return Ok(linalg::identity(model.dim));
    }
    let eig = hermitian_eigen(&model.hamiltonian);
    Ok(eig.apply(|e| C64::from_polar(1.0, -e * dt)))
}

/// Heisenberg-picture projector `U† P U`.
pub fn heisenberg(model: &SystemModel, projector: &CMat, t: f64) -> Result<CMat> {
    if projector.shape() != (model.dim, model.dim) {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: projector.nrows(),
        });
    }
    let residual = projector_residual(projector);
    if residual > model.tol.projector {
        return Err(Error::NotProjector {
            what: "heisenberg input".into(),
            residual,
        });
    }
    transport(model, projector, t)
}

/// `U† A U` for an arbitrary operator.
pub fn transport(model: &SystemModel, op: &CMat, t: f64) -> Result<CMat> {
    if t == model.origin || max_abs(&model.hamiltonian) == 0.0 {
        return Ok(op.clone());
    }
    let u = evolve(model, t)?;
    Ok(u.adjoint() * op * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, is_projector, matrix_unit, ONE, ZERO};
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sigma_x() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    fn pure_zero() -> CMat {
        matrix_unit(2, 0, 0)
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let model = SystemModel::new(CMat::zeros(2, 2), pure_zero()).unwrap();
        for t in [0.0, 0.3, -7.0] {
            assert_eq!(evolve(&model, t).unwrap(), identity(2));
        }
    }

    #[test]
    fn half_pi_sigma_x_flips_zero_to_minus_i_one() {
        // exp(-i π/2 σx) = -i σx, so U|0⟩ = -i|1⟩.
        let h = sigma_x().scale(PI / 2.0);
        let model = SystemModel::new(h, pure_zero()).unwrap();
        let u = evolve(&model, 1.0).unwrap();
        assert!((u[(0, 0)]).norm() < 1e-10);
        assert!((u[(1, 0)] - C64::new(0.0, -1.0)).norm() < 1e-10);
        let p1 = heisenberg(&model, &pure_zero(), 1.0).unwrap();
        assert!(max_abs_diff(&p1, &matrix_unit(2, 1, 1)) < 1e-10);
    }

    #[test]
    fn origin_shifts_evolution() {
        let h = sigma_x().scale(PI / 2.0);
        let model = SystemModel::new(h, pure_zero()).unwrap().with_origin(2.0);
        let u = evolve(&model, 3.0).unwrap();
        assert!((u[(1, 0)] - C64::new(0.0, -1.0)).norm() < 1e-10);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let h = matrix_unit(2, 0, 1);
        let err = SystemModel::new(h, pure_zero()).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn bad_density_rejected() {
        let rho = identity(2);
        let err = SystemModel::new(CMat::zeros(2, 2), rho).unwrap_err();
        assert!(err.to_string().contains("rho"));
        let mut neg = CMat::zeros(2, 2);
        neg[(0, 0)] = C64::new(1.5, 0.0);
        neg[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(SystemModel::new(CMat::zeros(2, 2), neg).is_err());
    }

    #[test]
    fn non_projector_rejected_by_heisenberg() {
        let model = SystemModel::new(CMat::zeros(2, 2), pure_zero()).unwrap();
        let err = heisenberg(&model, &identity(2).scale(0.5), 1.0).unwrap_err();
        assert!(matches!(err, Error::NotProjector { .. }));
    }

    #[test]
    fn spectral_resolution_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for dim in 2..=4 {
            let model = sampling::random_model(&mut rng, dim);
            let total: f64 = model.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let psi = model.eigenbasis();
            assert!(max_abs_diff(&(psi.adjoint() * &psi), &identity(dim)) < 1e-12);
            assert!(max_abs_diff(&model.spectral_reconstruction(), model.rho()) < 1e-10);
            assert!(model.weights().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn evolution_is_unitary_and_conjugation_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for dim in 2..=4 {
            let model = sampling::random_model(&mut rng, dim);
            let u = evolve(&model, 1.7).unwrap();
            assert!(max_abs_diff(&(u.adjoint() * &u), &identity(dim)) < 1e-10);
            let eig = crate::linalg::singular_values(&u);
            assert!(eig.iter().all(|s| (s - 1.0).abs() < 1e-12));
            let p = sampling::random_projector(&mut rng, dim, 1 + dim / 2);
            let q = heisenberg(&model, &p, 1.7).unwrap();
            assert!(is_projector(&q, 1e-10));
            assert!((crate::linalg::trace(&q) - crate::linalg::trace(&p)).norm() < 1e-10);
            let ep = hermitian_eigen(&p).values;
            let eq = hermitian_eigen(&q).values;
            for (a, b) in ep.iter().zip(eq.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exponential_eigenvalues_on_unit_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = sampling::random_model(&mut rng, 3);
        let u = evolve(&model, 0.9).unwrap();
        let eig = nalgebra::linalg::Schur::new(u).eigenvalues().unwrap();
        for z in eig.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(vec![0.0, 1.0, 2.5], 0.0).is_ok());
        assert_eq!(TimeGrid::new(vec![1.0, 1.0], 0.0), Err(Error::InvalidTimeGrid));
        assert_eq!(TimeGrid::new(vec![f64::NAN], 0.0), Err(Error::InvalidTimeGrid));
        assert!(TimeGrid::new(vec![], 0.0).is_ok());
    }
}
