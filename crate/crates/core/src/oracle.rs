//! Independent numerical optimizer for the USD problem.
//!
//! The feasible set is parametrized directly: `E1 = V1 A V1†` and
//! `E2 = V2 B V2†`, where `V1` spans `ker γ2 ∩ supp S` and `V2` spans
//! `ker γ1 ∩ supp S`. Every such pair is error free and proper by
//! construction, so the only remaining constraints are `A, B ≥ 0` and
//! `1 − E1 − E2 ≥ 0` on `supp S`. The linear success probability is maximized
//! with a primal log-barrier path-following method.
//!
//! Nothing here uses the structure theory in the rest of the crate, which is
//! what makes the oracle useful as a cross-check.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, eigh, intersect, kernel, support, trace_re, CMatrix, HermitianOperator, ToleranceContext};
use crate::model::{success_probability, UsdMeasurement, WeightedDensityPair};
use crate::random::{ginibre, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    /// Independent runs; run 0 starts at the analytic center, the others at
    /// random interior points.
    pub restarts: usize,
    /// Cap on Newton steps per centering.
    pub max_iters: usize,
    /// Factor by which the barrier weight grows between centerings.
    pub barrier_growth: f64,
    /// Target bound on the optimality gap of the success probability.
    pub gap_tol: f64,
    /// Largest feasibility residual accepted at termination.
    pub convergence_tol: f64,
    /// How far below the reference optimum the uniqueness probe may go.
    pub probe_slack: f64,
    /// Largest pairwise `E?` distance still read as a unique optimum. Probed
    /// points are `probe_slack`-suboptimal, so their spread scales like
    /// `√probe_slack` even when the optimum is unique.
    pub uniqueness_threshold: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 1,
            max_iters: 100,
            barrier_growth: 8.0,
            gap_tol: 1e-12,
            convergence_tol: 1e-8,
            probe_slack: 1e-13,
            uniqueness_threshold: 1e-5,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidInstance("oracle needs at least one restart".into()));
        }
        let positive = [self.convergence_tol, self.gap_tol, self.probe_slack, self.uniqueness_threshold];
        if !(positive.iter().all(|&x| x > 0.0) && self.barrier_growth > 1.0) {
            return Err(Error::InvalidInstance("oracle tolerances must be positive, growth above one".into()));
        }
        Ok(())
    }

    /// A deliberately sloppy configuration, useful as a negative control.
    pub fn loose(seed: u64) -> Self {
        Self { seed, gap_tol: 1e-3, probe_slack: 1e-3, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub measurement: UsdMeasurement,
    pub e_q_opt: HermitianOperator,
    pub success: f64,
    /// Upper bound on `optimum − success` from the barrier parameter.
    pub gap_bound: f64,
    /// Success after each centering of the first run.
    pub history: Vec<f64>,
    /// Pairwise Frobenius distances between the `E?` of all runs.
    pub per_restart_distances: Vec<f64>,
    /// `‖γ1 E1‖ + ‖γ2 E2‖ + ‖(E1 + E2)Π⊥‖` and negativity of `E?`.
    pub feasibility_residual: f64,
    pub newton_steps: usize,
}

/// Orthonormal basis matrices of the real space of `k × k` Hermitian matrices.
fn hermitian_basis(k: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(k * k);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..k {
        let mut m = CMatrix::zeros(k, k);
        m[(i, i)] = c64(1.0, 0.0);
        out.push(m);
        for j in i + 1..k {
            let mut m = CMatrix::zeros(k, k);
            m[(i, j)] = c64(r, 0.0);
            m[(j, i)] = c64(r, 0.0);
            out.push(m);
            let mut m = CMatrix::zeros(k, k);
            m[(i, j)] = c64(0.0, -r);
            m[(j, i)] = c64(0.0, r);
            out.push(m);
        }
    }
    out
}

fn combine(basis: &[CMatrix], coeffs: &[f64], k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(k, k);
    for (b, c) in basis.iter().zip(coeffs) {
        m += b * c64(*c, 0.0);
    }
    m
}

/// Inverse of a Hermitian positive definite matrix, or `None` if it is not
/// positive definite.
fn pd_inverse(m: &CMatrix) -> Option<CMatrix> {
    let h = (m + m.adjoint()) * c64(0.5, 0.0);
    let e = eigh(&h);
    if e.values.iter().any(|v| *v <= 0.0) {
        return None;
    }
    Some(e.map(|v| 1.0 / v))
}

fn logdet_pd(m: &CMatrix) -> f64 {
    eigh(&((m + m.adjoint()) * c64(0.5, 0.0))).values.iter().map(|v| v.ln()).sum()
}

/// The parametrized feasible set of one instance.
#[derive(Debug, Clone)]
pub struct FeasibleSet {
    dim: usize,
    /// Basis of `supp S`.
    w: CMatrix,
    v1: CMatrix,
    v2: CMatrix,
    /// `W†V1`, `W†V2`.
    p1: CMatrix,
    p2: CMatrix,
    basis1: Vec<CMatrix>,
    basis2: Vec<CMatrix>,
    /// Success gradient in parameter space.
    cost: DVector<f64>,
    /// `M_i = W†Vμ H_i Vμ†W` for every parameter.
    m_dirs: Vec<CMatrix>,
    pi_perp: HermitianOperator,
    gamma1: CMatrix,
    gamma2: CMatrix,
}

impl FeasibleSet {
    pub fn new(s: &WeightedDensityPair) -> Result<Self> {
        let t = s.tol();
        let supp_s = support(&s.total(), t)?;
        let v1 = intersect(&kernel(s.gamma2(), t)?, &supp_s, t)?.basis().clone();
        let v2 = intersect(&kernel(s.gamma1(), t)?, &supp_s, t)?.basis().clone();
        let w = supp_s.basis().clone();
        let p1 = w.adjoint() * &v1;
        let p2 = w.adjoint() * &v2;
        let basis1 = hermitian_basis(v1.ncols());
        let basis2 = hermitian_basis(v2.ncols());
        let g1 = v1.adjoint() * s.gamma1().matrix() * &v1;
        let g2 = v2.adjoint() * s.gamma2().matrix() * &v2;
        let mut cost = Vec::new();
        let mut m_dirs = Vec::new();
        for h in &basis1 {
            cost.push(trace_re(&(h * &g1)));
            m_dirs.push(&p1 * h * p1.adjoint());
        }
        for h in &basis2 {
            cost.push(trace_re(&(h * &g2)));
            m_dirs.push(&p2 * h * p2.adjoint());
        }
        Ok(Self {
            dim: s.dim(),
            w,
            v1,
            v2,
            p1,
            p2,
            basis1,
            basis2,
            cost: DVector::from_vec(cost),
            m_dirs,
            pi_perp: s.pi_perp(),
            gamma1: s.gamma1().matrix().clone(),
            gamma2: s.gamma2().matrix().clone(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.basis1.len() + self.basis2.len()
    }

    /// Barrier parameter: the total size of the three positivity constraints.
    fn barrier_degree(&self) -> f64 {
        (self.v1.ncols() + self.v2.ncols() + self.w.ncols()) as f64
    }

    fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        z.split_at(self.basis1.len())
    }

    fn blocks(&self, z: &[f64]) -> (CMatrix, CMatrix, CMatrix) {
        let (za, zb) = self.split(z);
        let a = combine(&self.basis1, za, self.v1.ncols());
        let b = combine(&self.basis2, zb, self.v2.ncols());
        let m = CMatrix::identity(self.w.ncols(), self.w.ncols())
            - &self.p1 * &a * self.p1.adjoint()
            - &self.p2 * &b * self.p2.adjoint();
        (a, b, m)
    }

    fn is_interior(&self, z: &[f64]) -> bool {
        let (a, b, m) = self.blocks(z);
        [a, b, m].iter().all(|x| x.nrows() == 0 || pd_inverse(x).is_some())
    }

    /// `A = B = α·1` with `α` at half the largest feasible value.
    pub fn center(&self) -> Vec<f64> {
        let lam = eigh(&(&self.p1 * self.p1.adjoint() + &self.p2 * self.p2.adjoint())).max().max(1e-300);
        let alpha = 0.5 / lam;
        let mut z = vec![0.0; self.n_params()];
        let mut k = 0;
        for (basis, dim) in [(&self.basis1, self.v1.ncols()), (&self.basis2, self.v2.ncols())] {
            for h in basis.iter() {
                // Diagonal basis elements carry the identity.
                let diag = (0..dim).any(|i| h[(i, i)].re == 1.0);
                z[k] = if diag { alpha } else { 0.0 };
                k += 1;
            }
        }
        z
    }

    /// A random interior point: random `A, B ≥ 0` scaled into the set and
    /// mixed with the center.
    pub fn random_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k1 = self.v1.ncols();
        let k2 = self.v2.ncols();
        let x1 = ginibre(rng, k1, k1);
        let x2 = ginibre(rng, k2, k2);
        let a = &x1 * x1.adjoint();
        let b = &x2 * x2.adjoint();
        let load = &self.p1 * &a * self.p1.adjoint() + &self.p2 * &b * self.p2.adjoint();
        let lam = eigh(&load).max().max(1e-300);
        let frac: f64 = rng.random_range(0.2..0.95);
        let scale = frac / lam;
        let mut z: Vec<f64> = self
            .basis1
            .iter()
            .map(|h| trace_re(&(h * &a)) * scale)
            .chain(self.basis2.iter().map(|h| trace_re(&(h * &b)) * scale))
            .collect();
        let c = self.center();
        let mix: f64 = rng.random_range(0.05..0.5);
        for (zi, ci) in z.iter_mut().zip(c) {
            *zi = (1.0 - mix) * *zi + mix * ci;
        }
        z
    }

    pub fn measurement(&self, z: &[f64]) -> UsdMeasurement {
        let (a, b, _) = self.blocks(z);
        let e1 = HermitianOperator::from_hermitian_part(&self.v1 * a * self.v1.adjoint());
        let e2 = HermitianOperator::from_hermitian_part(&self.v2 * b * self.v2.adjoint());
        let e_q = &(&HermitianOperator::identity(self.dim) - &e1) - &e2;
        UsdMeasurement::new(e1, e2, e_q)
    }

    pub fn success(&self, z: &[f64]) -> f64 {
        self.cost.dot(&DVector::from_column_slice(z))
    }

    /// Residual of every defining constraint of a valid proper measurement.
    pub fn feasibility_residual(&self, m: &UsdMeasurement) -> f64 {
        let err = (&self.gamma2 * m.e1.matrix()).norm() + (&self.gamma1 * m.e2.matrix()).norm();
        let proper = ((m.e1.matrix() + m.e2.matrix()) * self.pi_perp.matrix()).norm();
        let neg = [m.e1.min_eigenvalue(), m.e2.min_eigenvalue(), m.e_inconclusive.min_eigenvalue()]
            .iter()
            .map(|v| (-v).max(0.0))
            .sum::<f64>();
        err + proper + neg
    }

    /// Gradient and Hessian of `−t·obj·z − Σ log det` (plus the optional
    /// lower-bound barrier `−log(cost·z − floor)`).
    fn derivatives(
        &self,
        z: &[f64],
        t: f64,
        obj: &DVector<f64>,
        floor: Option<f64>,
    ) -> Option<(DVector<f64>, DMatrix<f64>, f64)> {
        let n = self.n_params();
        let n1 = self.basis1.len();
        let (a, b, m) = self.blocks(z);
        let ai = if a.nrows() > 0 { Some(pd_inverse(&a)?) } else { None };
        let bi = if b.nrows() > 0 { Some(pd_inverse(&b)?) } else { None };
        let mi = if m.nrows() > 0 { Some(pd_inverse(&m)?) } else { None };
        let zv = DVector::from_column_slice(z);
        let mut grad = -obj * t;
        let mut hess = DMatrix::<f64>::zeros(n, n);
        let mut value = -t * obj.dot(&zv);

        let mut block = |inv: &CMatrix, x: &CMatrix, basis: &[CMatrix], offset: usize, sign: f64| {
            value -= logdet_pd(x);
            let ys: Vec<CMatrix> = basis.iter().map(|h| inv * h).collect();
            for (i, yi) in ys.iter().enumerate() {
                grad[offset + i] -= sign * yi.trace().re;
                for (j, yj) in ys.iter().enumerate().skip(i) {
                    let v = (yi * yj).trace().re;
                    hess[(offset + i, offset + j)] += v;
                    if i != j {
                        hess[(offset + j, offset + i)] += v;
                    }
                }
            }
        };
        if let Some(inv) = &ai {
            block(inv, &a, &self.basis1, 0, 1.0);
        }
        if let Some(inv) = &bi {
            block(inv, &b, &self.basis2, n1, 1.0);
        }
        if let Some(inv) = &mi {
            // M = 1 − Σ z_i M_i, so dM/dz_i = −M_i.
            block(inv, &m, &self.m_dirs, 0, -1.0);
        }
        if let Some(f) = floor {
            let slack = self.cost.dot(&zv) - f;
            if slack <= 0.0 {
                return None;
            }
            value -= slack.ln();
            grad -= &self.cost / slack;
            hess += &self.cost * self.cost.transpose() / (slack * slack);
        }
        Some((grad, hess, value))
    }

    fn feasible_with_floor(&self, z: &[f64], floor: Option<f64>) -> bool {
        self.is_interior(z) && floor.is_none_or(|f| self.success(z) > f)
    }

    /// Damped Newton centering; returns the number of steps taken.
    fn center_at(&self, z: &mut Vec<f64>, t: f64, obj: &DVector<f64>, floor: Option<f64>, max_iters: usize) -> usize {
        for step in 0..max_iters {
            let Some((grad, hess, _)) = self.derivatives(z, t, obj, floor) else {
                return step;
            };
            let dir = match hess.clone().cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => match hess.lu().solve(&(-&grad)) {
                    Some(d) => d,
                    None => return step,
                },
            };
            let dec2 = -grad.dot(&dir);
            if !(dec2.is_finite()) || dec2 < 1e-20 {
                return step;
            }
            let lambda = dec2.sqrt();
            let mut alpha = if lambda > 0.25 { 1.0 / (1.0 + lambda) } else { 1.0 };
            loop {
                let trial: Vec<f64> = z.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
                if self.feasible_with_floor(&trial, floor) {
                    *z = trial;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    return step;
                }
            }
            if dec2 < 1e-18 {
                return step + 1;
            }
        }
        max_iters
    }

    /// Path following from `z` for the objective `obj`, until the barrier
    /// gap `ν/t` drops below `gap_tol`. Returns the success after each
    /// centering and the number of Newton steps.
    fn follow_path(
        &self,
        z: &mut Vec<f64>,
        obj: &DVector<f64>,
        floor: Option<f64>,
        cfg: &OracleConfig,
    ) -> (Vec<f64>, usize, f64) {
        let nu = self.barrier_degree() + if floor.is_some() { 1.0 } else { 0.0 };
        let scale = obj.amax().max(1e-300);
        let mut t = 1.0 / scale;
        let mut history = Vec::new();
        let mut steps = 0;
        loop {
            steps += self.center_at(z, t, obj, floor, cfg.max_iters);
            history.push(self.success(z));
            if nu / t < cfg.gap_tol {
                break;
            }
            t *= cfg.barrier_growth;
        }
        (history, steps, nu / t)
    }
}

fn run(set: &FeasibleSet, start: Vec<f64>, cfg: &OracleConfig) -> (Vec<f64>, Vec<f64>, usize, f64) {
    let mut z = start;
    let (history, steps, gap) = set.follow_path(&mut z, &set.cost.clone(), None, cfg);
    (z, history, steps, gap)
}

fn pairwise_distances(ops: &[HermitianOperator]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            out.push((ops[i].matrix() - ops[j].matrix()).norm());
        }
    }
    out
}

/// Maximizes the success probability over all valid proper measurements.
pub fn oracle_optimize(s: &WeightedDensityPair, cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.validate()?;
    let set = FeasibleSet::new(s)?;
    let d = s.dim();
    if set.n_params() == 0 {
        let m = UsdMeasurement::inconclusive_only(d);
        return Ok(OracleResult {
            e_q_opt: m.e_inconclusive.clone(),
            success: 0.0,
            measurement: m,
            gap_bound: 0.0,
            history: vec![0.0],
            per_restart_distances: Vec::new(),
            feasibility_residual: 0.0,
            newton_steps: 0,
        });
    }
    let runs: Vec<(Vec<f64>, Vec<f64>, usize, f64)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                set.center()
            } else {
                let mut rng = seeded(cfg.seed.wrapping_mul(1_000_003).wrapping_add(r as u64));
                set.random_interior(&mut rng)
            };
            run(&set, start, cfg)
        })
        .collect();
    let ops: Vec<HermitianOperator> = runs.iter().map(|r| set.measurement(&r.0).e_inconclusive).collect();
    let per_restart_distances = pairwise_distances(&ops);
    let (best_idx, _) = runs
        .iter()
        .enumerate()
        .map(|(i, r)| (i, set.success(&r.0)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let (z, _, _, gap) = &runs[best_idx];
    let measurement = set.measurement(z);
    let feasibility_residual = set.feasibility_residual(&measurement);
    if feasibility_residual > cfg.convergence_tol {
        return Err(Error::NonConvergence(format!("feasibility residual {feasibility_residual:.3e}")));
    }
    Ok(OracleResult {
        e_q_opt: measurement.e_inconclusive.clone(),
        success: success_probability(&measurement, s),
        measurement,
        gap_bound: *gap,
        history: runs[0].1.clone(),
        per_restart_distances,
        feasibility_residual,
        newton_steps: runs.iter().map(|r| r.2).sum(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub unique: bool,
    pub max_distance: f64,
    pub threshold: f64,
    pub reference_success: f64,
    pub distances: Vec<f64>,
}

/// Tests uniqueness of the optimum: each restart maximizes a different random
/// linear functional of `E?` over the measurements whose success is within
/// `probe_slack` of the optimum. A unique optimum makes all of them agree.
pub fn uniqueness_probe(s: &WeightedDensityPair, cfg: &OracleConfig) -> Result<UniquenessReport> {
    cfg.validate()?;
    let reference = oracle_optimize(s, &OracleConfig { restarts: 1, ..*cfg })?;
    let set = FeasibleSet::new(s)?;
    let threshold = cfg.uniqueness_threshold;
    if set.n_params() == 0 {
        return Ok(UniquenessReport {
            unique: true,
            max_distance: 0.0,
            threshold,
            reference_success: 0.0,
            distances: Vec::new(),
        });
    }
    let start = {
        let mut z = set.center();
        let (_, _, _) = set.follow_path(&mut z, &set.cost.clone(), None, cfg);
        z
    };
    let floor = set.success(&start) - cfg.probe_slack;
    let restarts = cfg.restarts.max(2);
    let ops: Vec<HermitianOperator> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeded(cfg.seed.wrapping_mul(7_919).wrapping_add(r as u64));
            let k = set.dim;
            let g = ginibre(&mut rng, k, k);
            let dir = HermitianOperator::from_hermitian_part(g);
            // ⟨R, E?⟩ = const − ⟨R, E1 + E2⟩.
            let obj: Vec<f64> = set
                .basis1
                .iter()
                .map(|h| -trace_re(&(dir.matrix() * &set.v1 * h * set.v1.adjoint())))
                .chain(set.basis2.iter().map(|h| -trace_re(&(dir.matrix() * &set.v2 * h * set.v2.adjoint()))))
                .collect();
            let mut z = start.clone();
            set.follow_path(&mut z, &DVector::from_vec(obj), Some(floor), cfg);
            set.measurement(&z).e_inconclusive
        })
        .collect();
    let distances = pairwise_distances(&ops);
    let max_distance = distances.iter().fold(0.0_f64, |m, d| m.max(*d));
    Ok(UniquenessReport {
        unique: max_distance <= threshold,
        max_distance,
        threshold,
        reference_success: reference.success,
        distances,
    })
}

/// A random valid proper measurement strictly inside the feasible set.
pub fn random_valid_measurement<R: Rng + ?Sized>(s: &WeightedDensityPair, rng: &mut R) -> Result<UsdMeasurement> {
    let set = FeasibleSet::new(s)?;
    Ok(set.measurement(&set.random_interior(rng)))
}

/// Tolerances for judging oracle output with the operational checker.
pub fn checker_tolerances() -> ToleranceContext {
    ToleranceContext::relaxed(1e-7, 1e-7)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::fidelity_bound;
    use crate::instances::{example1_states, peres_pair, peres_success, weighted};
    use crate::linalg::CVector;
    use crate::random::random_skew_pair_4d;

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let b = hermitian_basis(3);
        assert_eq!(b.len(), 9);
        for (i, x) in b.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let ip = (x.adjoint() * y).trace();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c64(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn peres_value() {
        let r = oracle_optimize(&peres_pair(), &OracleConfig::default()).unwrap();
        assert!((r.success - peres_success()).abs() < 1e-9, "{}", r.success);
    }

    #[test]
    fn orthogonal_states_are_fully_discriminated() {
        let t = ToleranceContext::default();
        let e0 = CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let e1 = CVector::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let s =
            WeightedDensityPair::new(HermitianOperator::rank_one(&e0, 0.3), HermitianOperator::rank_one(&e1, 0.7), t)
                .unwrap();
        let r = oracle_optimize(&s, &OracleConfig::default()).unwrap();
        assert!((r.success - 1.0).abs() < 1e-9);
        assert!((r.e_q_opt.matrix() - s.pi_perp().matrix()).norm() < 1e-6);
    }

    #[test]
    fn history_is_monotone_and_within_bounds() {
        let mut rng = seeded(2);
        for _ in 0..4 {
            let s = random_skew_pair_4d(&mut rng, 0.45);
            let r = oracle_optimize(&s, &OracleConfig::default()).unwrap();
            for w in r.history.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
            assert!(r.success <= fidelity_bound(&s).unwrap() + 1e-6);
            assert!(r.feasibility_residual < 1e-8);
        }
    }

    #[test]
    fn restarts_converge_to_one_point() {
        let (r1, r2) = example1_states();
        let s = weighted(&r1, &r2, 0.5);
        let cfg = OracleConfig { restarts: 4, seed: 9, ..OracleConfig::default() };
        let r = oracle_optimize(&s, &cfg).unwrap();
        assert_eq!(r.per_restart_distances.len(), 6);
        assert!(r.per_restart_distances.iter().all(|d| *d < 1e-5), "{:?}", r.per_restart_distances);
    }

    #[test]
    fn uniqueness_probe_and_negative_control() {
        let (r1, r2) = example1_states();
        let s = weighted(&r1, &r2, 0.5);
        let good = uniqueness_probe(&s, &OracleConfig { restarts: 4, ..OracleConfig::default() }).unwrap();
        assert!(good.unique, "{}", good.max_distance);
        let loose = uniqueness_probe(&s, &OracleConfig { restarts: 4, ..OracleConfig::loose(1) }).unwrap();
        assert!(!loose.unique, "{}", loose.max_distance);
    }

    #[test]
    fn random_valid_measurements_are_valid() {
        let mut rng = seeded(4);
        let s = random_skew_pair_4d(&mut rng, 0.5);
        for _ in 0..5 {
            let m = random_valid_measurement(&s, &mut rng).unwrap();
            assert!(m.is_usd(&s));
            assert!(crate::model::is_proper(&m, &s));
            assert!(m.e_inconclusive.min_eigenvalue() > 0.0);
        }
    }
}
