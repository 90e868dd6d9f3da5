//! Reference computations shared by the integration tests. Everything here is
//! written directly against nalgebra so that it does not route through the
//! library code it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use usd::linalg::{CMatrix, HermitianOperator, ToleranceContext};
use usd::model::WeightedDensityPair;
use usd::random::{random_density, random_pure_state, random_unitary};

/// `√A` for Hermitian PSD `A`. Eigenvalues below `1e-12` of the largest are
/// roundoff on the kernel and map to zero; their square roots would not be small.
pub fn herm_sqrt(a: &CMatrix) -> CMatrix {
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    let cut = 1e-12 * eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| Complex64::new(if v > cut { v.sqrt() } else { 0.0 }, 0.0)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    nalgebra::SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `tr|A| = tr √(A†A)`.
pub fn trace_norm(a: &CMatrix) -> f64 {
    herm_sqrt(&(a.adjoint() * a)).trace().re
}

/// `tr(γ1 + γ2) − 2 tr|√γ1 √γ2|`.
pub fn fidelity_bound_direct(g1: &CMatrix, g2: &CMatrix) -> f64 {
    (g1 + g2).trace().re - 2.0 * trace_norm(&(herm_sqrt(g1) * herm_sqrt(g2)))
}

/// `γμ − √(√γμ γν √γμ)` for `(μ, ν) = (1, 2)` and `(2, 1)`: smallest eigenvalues.
pub fn fidelity_margins(g1: &CMatrix, g2: &CMatrix) -> [f64; 2] {
    let f = |a: &CMatrix, b: &CMatrix| {
        let r = herm_sqrt(a);
        min_eigenvalue(&(a - herm_sqrt(&(&r * b * &r))))
    };
    [f(g1, g2), f(g2, g1)]
}

/// Optimal success for two pure states with overlap `c = |⟨ψ1|ψ2⟩|`.
pub fn pure_state_optimum(p1: f64, c: f64) -> f64 {
    let p2 = 1.0 - p1;
    let lower = c * c / (1.0 + c * c);
    if p1 <= lower {
        p2 * (1.0 - c * c)
    } else if p1 >= 1.0 - lower {
        p1 * (1.0 - c * c)
    } else {
        1.0 - 2.0 * (p1 * p2).sqrt() * c
    }
}

pub fn pure_pair<R: Rng + ?Sized>(rng: &mut R, n: usize, p1: f64) -> (WeightedDensityPair, f64) {
    let a = random_pure_state(rng, n);
    let b = random_pure_state(rng, n);
    let c = a.dotc(&b).norm();
    let rho1 = HermitianOperator::rank_one(&a, 1.0);
    let rho2 = HermitianOperator::rank_one(&b, 1.0);
    let s = WeightedDensityPair::from_states(&rho1, &rho2, p1, ToleranceContext::default()).unwrap();
    (s, c)
}

/// Shape of an engineered pair.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    /// Directions in both supports.
    pub parallel: usize,
    /// Directions in `supp γ1 ∩ ker γ2` and in `supp γ2 ∩ ker γ1`.
    pub orth1: usize,
    pub orth2: usize,
    /// Rank of each state on the skew core.
    pub core: usize,
    /// Directions outside both supports.
    pub extra: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.parallel + self.orth1 + self.orth2 + 2 * self.core + self.extra
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            parallel: rng.random_range(0..=2),
            orth1: rng.random_range(0..=2),
            orth2: rng.random_range(0..=2),
            core: rng.random_range(1..=2),
            extra: rng.random_range(0..=1),
        }
    }
}

/// Random full-rank states on `supp γ1 = span(P, X, O1)` and
/// `supp γ2 = span(P, B, O2)`, where `X` mixes `B` with fresh directions `C`.
/// Both states are generic on their supports, not block diagonal.
pub fn engineered_pair<R: Rng + ?Sized>(rng: &mut R, layout: Layout, p1: f64) -> WeightedDensityPair {
    let n = layout.dim();
    let u = random_unitary(rng, n);
    let mut next = 0;
    let mut take = |k: usize| {
        let cols = u.columns(next, k).into_owned();
        next += k;
        cols
    };
    let par = take(layout.parallel);
    let b = take(layout.core);
    let c = take(layout.core);
    let o1 = take(layout.orth1);
    let o2 = take(layout.orth2);
    let k = layout.core;
    let mix_b = usd::random::ginibre(rng, k, k);
    let mix_c = usd::random::ginibre(rng, k, k);
    let x = &b * mix_b + &c * mix_c;
    let concat = |blocks: &[&CMatrix]| {
        let cols: Vec<_> = blocks.iter().flat_map(|m| m.column_iter().map(|c| c.into_owned())).collect();
        CMatrix::from_columns(&cols)
    };
    let v1 = orthonormalize(&concat(&[&par, &x, &o1]));
    let v2 = concat(&[&par, &b, &o2]);
    let rho1 = random_density(rng, v1.ncols(), v1.ncols()).congruence(&v1);
    let rho2 = random_density(rng, v2.ncols(), v2.ncols()).congruence(&v2);
    WeightedDensityPair::from_states(&rho1, &rho2, p1, ToleranceContext::default()).unwrap()
}

fn orthonormalize(m: &CMatrix) -> CMatrix {
    m.clone().qr().q()
}
