//! Seeded generators for random states, unitaries and problem instances.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, CMatrix, CVector, HermitianOperator, Subspace, ToleranceContext};
use crate::model::WeightedDensityPair;

pub type UsdRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> UsdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with independent standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) / c64(2f64.sqrt(), 0.0)
    })
}

/// Haar-random unitary via QR with the phase correction on the diagonal of R.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = ginibre(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let col = q.column(k) * phase;
            q.set_column(k, &col);
        }
    }
    q
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    let v: CVector = ginibre(rng, n, 1).column(0).into_owned();
    let norm = v.norm();
    v / c64(norm, 0.0)
}

pub fn random_subspace<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Subspace {
    Subspace::span(&ginibre(rng, n, k), &ToleranceContext::default())
}

/// Unit-trace density operator of the given rank, supported on a random subspace.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermitianOperator {
    let x = ginibre(rng, n, rank);
    let m = &x * x.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    HermitianOperator::from_hermitian_part(m / c64(tr, 0.0))
}

/// Unit-trace density operator with support inside the column space of `basis`.
pub fn random_density_in<R: Rng + ?Sized>(rng: &mut R, basis: &CMatrix, rank: usize) -> HermitianOperator {
    let inner = random_density(rng, basis.ncols(), rank);
    inner.congruence(basis)
}

/// Random probability vector of length `n` (flat Dirichlet).
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// Generic pair of rank-2 states on `C^4` with prior `p1`; strictly skew with probability one.
pub fn random_skew_pair_4d<R: Rng + ?Sized>(rng: &mut R, p1: f64) -> WeightedDensityPair {
    let rho1 = random_density(rng, 4, 2);
    let rho2 = random_density(rng, 4, 2);
    WeightedDensityPair::from_states(&rho1, &rho2, p1, ToleranceContext::default()).expect("random densities are valid")
}

/// Generic pair of states of ranks `r1`, `r2` on `C^n`.
pub fn random_pair<R: Rng + ?Sized>(rng: &mut R, n: usize, r1: usize, r2: usize, p1: f64) -> WeightedDensityPair {
    let rho1 = random_density(rng, n, r1);
    let rho2 = random_density(rng, n, r2);
    WeightedDensityPair::from_states(&rho1, &rho2, p1, ToleranceContext::default()).expect("random densities are valid")
}

/// Diagonal matrix from real entries.
pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0))))
}
