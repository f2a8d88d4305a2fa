//! Seeded random generators for scenarios, operators and histories.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::histories::HomogeneousHistory;
use crate::linalg::{CMat, C64};
use crate::model::SystemModel;

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let g = gaussian_matrix(rng, dim, dim);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let (mut q, r) = qr.unpack();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Full-rank density matrix `G G† / tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let g = gaussian_matrix(rng, dim, dim);
    let m = &g * g.adjoint();
    let tr = crate::linalg::trace(&m).re;
    let mut rho = m.unscale(tr);
    // Exact Hermiticity after rounding.
    rho = (&rho + rho.adjoint()).scale(0.5);
    rho
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> SystemModel {
    SystemModel::new(random_hermitian(rng, dim), random_density(rng, dim))
        .expect("random model is valid by construction")
}

/// Projector of the given rank onto a Haar-random subspace.
pub fn random_projector<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    let u = random_unitary(rng, dim);
    let cols = u.columns(0, rank);
    let p = cols * cols.adjoint();
    (&p + p.adjoint()).scale(0.5)
}

/// Projector with rank drawn uniformly from `0..=dim`.
pub fn random_projector_any_rank<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let rank = rng.random_range(0..=dim);
    random_projector(rng, dim, rank)
}

/// Homogeneous history with one random projector at each time; ranks are
/// drawn from `1..dim` so no entry is trivially the identity or zero.
pub fn random_history<R: Rng + ?Sized>(rng: &mut R, dim: usize, times: &[f64]) -> HomogeneousHistory {
    let mut h = HomogeneousHistory::new();
    for &t in times {
        let rank = if dim > 1 { rng.random_range(1..dim) } else { 1 };
        h.insert(t, random_projector(rng, dim, rank));
    }
    h
}

pub fn random_operator<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    gaussian_matrix(rng, dim, dim)
}

/// Projective measurement on a Haar-random basis with the columns grouped into
/// a random number of contiguous blocks.
pub fn random_pvm<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<CMat> {
    let u = random_unitary(rng, dim);
    let mut cuts: Vec<usize> = (1..dim).filter(|_| rng.random_bool(0.5)).collect();
    cuts.push(dim);
    let mut start = 0;
    cuts.into_iter()
        .map(|end| {
            let cols = u.columns(start, end - start);
            start = end;
            let p = cols * cols.adjoint();
            (&p + p.adjoint()).scale(0.5)
        })
        .collect()
}
