//! Operational optimality conditions, structural laws of optimal measurements,
//! measurement classification and the explicit dual certificate `Z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{intersect, oblique_projector, support, CMatrix, HermitianOperator, Subspace, ToleranceContext};
use crate::model::{
    complete_measurement, completion_projector, core_operator, is_proper, projective_part, MeasurementClassTag,
    UsdMeasurement, WeightedDensityPair,
};
use crate::reductions::{reduce_fully, skew_inconclusive, tau_skew};

/// Positivity of an operator expected to be Hermitian PSD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityCheck {
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
    /// Norm of the anti-Hermitian part.
    pub anti_hermitian: f64,
    pub passed: bool,
}

impl PositivityCheck {
    fn of(m: &CMatrix, tol: &ToleranceContext) -> Self {
        let anti_hermitian = ((m - m.adjoint()) * crate::linalg::c64(0.5, 0.0)).norm();
        let min_eigenvalue = crate::linalg::eigh(m).min();
        let passed = min_eigenvalue >= -tol.psd_floor && anti_hermitian <= tol.hermitian;
        Self { min_eigenvalue, anti_hermitian, passed }
    }

    fn violation(&self) -> f64 {
        (-self.min_eigenvalue).max(0.0) + self.anti_hermitian
    }
}

/// An operator expected to vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualityCheck {
    pub residual: f64,
    pub passed: bool,
}

impl EqualityCheck {
    fn of(m: &CMatrix, tol: &ToleranceContext) -> Self {
        let residual = m.norm();
        Self { residual, passed: residual <= tol.equality }
    }
}

/// Result of the optimality test on `E?` alone.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    /// `Λ1 C Λ1 ≥ 0` with `C = E?(γ2 − γ1)E?`.
    pub cond_a1: PositivityCheck,
    /// `−Λ2 C Λ2 ≥ 0`.
    pub cond_a2: PositivityCheck,
    /// `Λ1 C Λ2 = 0`.
    pub cond_cross: EqualityCheck,
    /// `(Λ1 − Λ2) C (1 − E?) = 0`.
    pub cond_b: EqualityCheck,
    #[serde(skip)]
    pub lambda1: HermitianOperator,
    #[serde(skip)]
    pub lambda2: HermitianOperator,
    pub is_optimal: bool,
}

impl OptimalityReport {
    /// Sum of all violations, used to rank competing candidates.
    pub fn total_residual(&self) -> f64 {
        self.cond_a1.violation() + self.cond_a2.violation() + self.cond_cross.residual + self.cond_b.residual
    }

    /// Names of the conditions that failed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.cond_a1.passed {
            out.push(format!(
                "lambda1 C lambda1 >= 0 (min eigenvalue {:.3e}, anti-Hermitian {:.3e})",
                self.cond_a1.min_eigenvalue, self.cond_a1.anti_hermitian
            ));
        }
        if !self.cond_a2.passed {
            out.push(format!(
                "-lambda2 C lambda2 >= 0 (min eigenvalue {:.3e}, anti-Hermitian {:.3e})",
                self.cond_a2.min_eigenvalue, self.cond_a2.anti_hermitian
            ));
        }
        if !self.cond_cross.passed {
            out.push(format!("lambda1 C lambda2 = 0 (residual {:.3e})", self.cond_cross.residual));
        }
        if !self.cond_b.passed {
            out.push(format!("(lambda1 - lambda2) C (1 - E?) = 0 (residual {:.3e})", self.cond_b.residual));
        }
        out
    }
}

/// Decides optimality of a proper measurement from `E?` alone.
pub fn check_optimality(m: &UsdMeasurement, s: &WeightedDensityPair) -> Result<OptimalityReport> {
    if m.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: m.dim() });
    }
    if !is_proper(m, s) {
        return Err(Error::NotProper);
    }
    let t = s.tol();
    let d = s.dim();
    let (lambda1, lambda2) = s.lambdas();
    let c = core_operator(&m.e_inconclusive, s);
    let (l1, l2, cm) = (lambda1.matrix(), lambda2.matrix(), c.matrix());
    let cond_a1 = PositivityCheck::of(&(l1 * cm * l1), t);
    let cond_a2 = PositivityCheck::of(&(-(l2 * cm * l2)), t);
    let cond_cross = EqualityCheck::of(&(l1 * cm * l2), t);
    let complement = CMatrix::identity(d, d) - m.e_inconclusive.matrix();
    let cond_b = EqualityCheck::of(&((l1 - l2) * cm * complement), t);
    let is_optimal = cond_a1.passed && cond_a2.passed && cond_cross.passed && cond_b.passed;
    Ok(OptimalityReport { cond_a1, cond_a2, cond_cross, cond_b, lambda1, lambda2, is_optimal })
}

/// Outcome of the rank law `rank E? = rank γ1γ2 + dim ker S` and
/// `supp E? ∩ ker γμ = ker S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankLawReport {
    pub rank_inconclusive: usize,
    pub rank_product: usize,
    pub dim_ker_s: usize,
    pub intersections_match: bool,
    pub holds: bool,
}

pub fn rank_law_check(m: &UsdMeasurement, s: &WeightedDensityPair) -> Result<RankLawReport> {
    if m.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: m.dim() });
    }
    let t = s.tol();
    let g = s.geometry();
    let rank_inconclusive = m.e_inconclusive.rank(t);
    let rank_product = s.rank_of_product();
    let dim_ker_s = g.ker_s.dim();
    let supp_q = support(&m.e_inconclusive, t)?;
    let matches = |ker: &Subspace| -> Result<bool> {
        let i = intersect(&supp_q, ker, t)?;
        Ok(i.dim() == dim_ker_s && g.ker_s.is_subspace_of(&i, t))
    };
    let intersections_match = matches(&g.ker1)? && matches(&g.ker2)?;
    let holds = intersections_match && rank_inconclusive == rank_product + dim_ker_s;
    Ok(RankLawReport { rank_inconclusive, rank_product, dim_ker_s, intersections_match, holds })
}

/// `r` used for the admissible ranks: `rank γ1γ2` of the strictly skew core
/// plus the dimensions of the orthogonal parts, which always count as conclusive.
pub fn effective_rank(s: &WeightedDensityPair) -> Result<usize> {
    let rec = reduce_fully(s)?;
    let (_, n1, n2) = rec.dims();
    Ok(rec.reduced_pair.rank_of_product() + n1 + n2)
}

/// Ranks of `E1` and `E2`, and whether the measurement is von Neumann.
pub fn classify(m: &UsdMeasurement, s: &WeightedDensityPair) -> Result<MeasurementClassTag> {
    if m.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: m.dim() });
    }
    let t = s.tol();
    let e1_rank = m.e1.rank(t);
    let e2_rank = m.e2.rank(t);
    let r = effective_rank(s)?;
    let idempotent = |e: &HermitianOperator| (e.matrix() * e.matrix() - e.matrix()).norm() <= 1e3 * t.idempotent;
    let is_von_neumann =
        e1_rank + e2_rank == r && idempotent(&m.e1) && idempotent(&m.e2) && idempotent(&m.e_inconclusive);
    Ok(MeasurementClassTag { e1_rank, e2_rank, is_von_neumann })
}

/// Number of admissible types `(e1, e2)` and classes `[e1, e2]` for a given `r`.
pub fn count_types_classes(r: usize) -> (usize, usize) {
    let types = (r + 1) * (r + 2) / 2;
    // ⌊(r/2 + 1)²⌋ = ⌊(r + 2)² / 4⌋
    let classes = (r + 2) * (r + 2) / 4;
    (types, classes)
}

/// All `(e1, e2)` with `e1, e2 ≤ r ≤ e1 + e2`.
pub fn admissible_types(r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for e1 in 0..=r {
        for e2 in 0..=r {
            if e1 + e2 >= r {
                out.push((e1, e2));
            }
        }
    }
    out
}

/// Residuals of `C = Π?(γ2 − γ1)Π? = Δ(γ2 − γ1)Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePartReport {
    pub support_residual: f64,
    pub projective_residual: f64,
    pub holds: bool,
}

pub fn projective_part_law(m: &UsdMeasurement, s: &WeightedDensityPair) -> Result<ProjectivePartReport> {
    let t = s.tol();
    let g = s.geometry();
    if !intersect(&g.supp1, &g.supp2, t)?.is_zero() {
        return Err(Error::PreconditionViolated("supports of the two states intersect".into()));
    }
    let c = core_operator(&m.e_inconclusive, s);
    let diff = s.gamma2() - s.gamma1();
    let pi_q = support(&m.e_inconclusive, t)?.projector();
    let delta = projective_part(&m.e_inconclusive, t).projector();
    let support_residual = (c.matrix() - diff.congruence(pi_q.matrix()).matrix()).norm();
    let projective_residual = (c.matrix() - diff.congruence(delta.matrix()).matrix()).norm();
    let bound = 10.0 * t.equality;
    let holds = support_residual <= bound && projective_residual <= bound;
    Ok(ProjectivePartReport { support_residual, projective_residual, holds })
}

/// Residuals of the four conditions on `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateResiduals {
    /// `max(0, −λ_min(Z))`.
    pub z_negativity: f64,
    /// `‖Z E?‖`.
    pub z_times_inconclusive: f64,
    /// `max(0, −λ_min(Λμ(Z − γμ)Λμ))` for `μ = 1, 2`.
    pub block_negativity: [f64; 2],
    /// `‖Λμ(Z − γμ)Eμ‖` for `μ = 1, 2`.
    pub block_equality: [f64; 2],
}

impl CertificateResiduals {
    pub fn max(&self) -> f64 {
        [
            self.z_negativity,
            self.z_times_inconclusive,
            self.block_negativity[0],
            self.block_negativity[1],
            self.block_equality[0],
            self.block_equality[1],
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The dual operator proving optimality, with its intermediates.
#[derive(Debug, Clone)]
pub struct CertificateZ {
    pub z: HermitianOperator,
    pub v1: HermitianOperator,
    pub v2: HermitianOperator,
    pub w12: CMatrix,
    /// Largest over smallest non-zero eigenvalue of `V1`.
    pub v1_condition: f64,
    pub residuals: CertificateResiduals,
    /// Whether the pair had to be replaced by its skew projection first.
    pub used_skew_projection: bool,
}

/// Builds `Z = T V1 T†` with `T = Q1 + Q2 W1 V1⁻` and verifies it.
///
/// Pairs with orthogonal parts are first projected with `τ_skew`, and `E?` is
/// extended by the identity on the removed directions.
pub fn build_certificate(m: &UsdMeasurement, s: &WeightedDensityPair) -> Result<CertificateZ> {
    if !is_proper(m, s) {
        return Err(Error::NotProper);
    }
    let t = *s.tol();
    let d = s.dim();
    let (skew, pi_skew) = tau_skew(s)?;
    let used_skew_projection = (pi_skew.matrix() - CMatrix::identity(d, d)).norm() > t.equality;
    let (pair, meas) = if used_skew_projection {
        let e_q = skew_inconclusive(&m.e_inconclusive, &pi_skew);
        let completed =
            complete_measurement(&e_q, &skew).map_err(|e| Error::CertificateFailure(format!("skew lift: {e}")))?;
        (skew, completed)
    } else {
        (s.clone(), m.clone())
    };
    let g = pair.geometry();
    let (lambda1, lambda2) = pair.lambdas();
    let fail = |e: Error| Error::CertificateFailure(e.to_string());
    let r1 = oblique_projector(&g.ker2.projector(), &g.ker1.projector(), &t).map_err(fail)?;
    let q1 = completion_projector(&pair, 1).map_err(fail)?;
    let q2 = completion_projector(&pair, 2).map_err(fail)?;

    let (l1, l2) = (lambda1.matrix(), lambda2.matrix());
    let c = core_operator(&meas.e_inconclusive, &pair);
    let v1 = HermitianOperator::from_hermitian_part(l1 * c.matrix() * l1 + l1 * pair.gamma1().matrix() * l1);
    let v2 = HermitianOperator::from_hermitian_part(-(l2 * c.matrix() * l2) + l2 * pair.gamma2().matrix() * l2);
    let e1 = meas.e1.matrix();
    let w12 = (r1.matrix() * (l1 - e1) + l2 * e1) * v1.matrix();
    let v1_inv = v1.pinv(&t);
    let tt = &q1 + &q2 * &w12 * v1_inv.matrix();
    let z = HermitianOperator::from_hermitian_part(&tt * v1.matrix() * tt.adjoint());

    let eig = v1.eigh();
    let v1_condition = match t.rank_threshold(eig.largest_abs()) {
        None => f64::INFINITY,
        Some(th) => {
            let nonzero: Vec<f64> = eig.values.iter().map(|v| v.abs()).filter(|&v| v > th).collect();
            let hi = nonzero.iter().cloned().fold(0.0, f64::max);
            let lo = nonzero.iter().cloned().fold(f64::INFINITY, f64::min);
            hi / lo
        }
    };

    let block = |lam: &CMatrix, gamma: &HermitianOperator| lam * (z.matrix() - gamma.matrix()) * lam;
    let neg = |m: &CMatrix| (-crate::linalg::eigh(m).min()).max(0.0);
    let residuals = CertificateResiduals {
        z_negativity: (-z.min_eigenvalue()).max(0.0),
        z_times_inconclusive: (z.matrix() * meas.e_inconclusive.matrix()).norm(),
        block_negativity: [neg(&block(l1, pair.gamma1())), neg(&block(l2, pair.gamma2()))],
        block_equality: [
            (l1 * (z.matrix() - pair.gamma1().matrix()) * e1).norm(),
            (l2 * (z.matrix() - pair.gamma2().matrix()) * meas.e2.matrix()).norm(),
        ],
    };
    let bound = 100.0 * t.equality;
    if residuals.max() > bound {
        let r = residuals;
        let what = if r.z_negativity > bound {
            "Z >= 0"
        } else if r.z_times_inconclusive > bound {
            "Z E? = 0"
        } else if r.block_negativity.iter().any(|&x| x > bound) {
            "lambda_mu (Z - gamma_mu) lambda_mu >= 0"
        } else {
            "lambda_mu (Z - gamma_mu) E_mu = 0"
        };
        return Err(Error::CertificateFailure(format!("{what} violated (largest residual {:.3e})", r.max())));
    }
    Ok(CertificateZ { z, v1, v2, w12, v1_condition, residuals, used_skew_projection })
}

/// `E1 Σ1 = Σ1` and `E2 Σ2 = Σ2` at an optimal measurement.
pub fn orthogonal_parts_detected(m: &UsdMeasurement, s: &WeightedDensityPair) -> Result<f64> {
    let rec = reduce_fully(s)?;
    let r1 = (m.e1.matrix() * rec.sigma1.matrix() - rec.sigma1.matrix()).norm();
    let r2 = (m.e2.matrix() * rec.sigma2.matrix() - rec.sigma2.matrix()).norm();
    Ok(r1.max(r2))
}
