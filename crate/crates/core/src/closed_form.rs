//! The two measurement families with a general closed form: single-state
//! detection and the fidelity form, together with the ranges of the prior
//! `p1` in which each of them is optimal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    intersect, pseudo_inverse, sqrt_psd, support, svd, trace_re, CMatrix, HermitianOperator, ToleranceContext,
};
use crate::model::{complete_measurement, UsdMeasurement, WeightedDensityPair};
use crate::outcome::{Branch, SolverOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    SingleDetectGamma2,
    SingleDetectGamma1,
    FidelityForm,
}

/// Range of `p1` in which a family is optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityWindow {
    pub kind: WindowKind,
    pub lower: f64,
    pub upper: f64,
    /// `λμ` for single-state detection, `μμ` for the fidelity form (the
    /// first of the two for the fidelity window).
    pub spectral_quantity: f64,
    pub empty: bool,
}

impl ProbabilityWindow {
    fn empty(kind: WindowKind, spectral_quantity: f64) -> Self {
        Self { kind, lower: 0.0, upper: 0.0, spectral_quantity, empty: true }
    }

    /// Membership; the ends at `p1 = 0` and `p1 = 1` are excluded.
    pub fn contains(&self, p1: f64) -> bool {
        if self.empty || p1 <= 0.0 || p1 >= 1.0 {
            return false;
        }
        match self.kind {
            WindowKind::SingleDetectGamma2 => p1 <= self.upper,
            WindowKind::SingleDetectGamma1 => p1 >= self.lower,
            WindowKind::FidelityForm => p1 >= self.lower && p1 <= self.upper,
        }
    }
}

fn require_disjoint_supports(s: &WeightedDensityPair) -> Result<()> {
    let g = s.geometry();
    if !intersect(&g.supp1, &g.supp2, s.tol())?.is_zero() {
        return Err(Error::PreconditionViolated(
            "the supports of the two states intersect; reduce the pair first".into(),
        ));
    }
    Ok(())
}

/// Smallest eigenvalue of `basis† A basis`.
fn compressed_min(a: &CMatrix, basis: &CMatrix) -> f64 {
    if basis.ncols() == 0 {
        return f64::INFINITY;
    }
    crate::linalg::eigh(&(basis.adjoint() * a * basis)).min()
}

/// Detects only `γ2` when `γ1(γ2 − γ1)γ1 ≥ 0`, only `γ1` when
/// `γ2(γ1 − γ2)γ2 ≥ 0`; otherwise `None`.
pub fn try_single_state_detection(s: &WeightedDensityPair) -> Result<Option<SolverOutcome>> {
    require_disjoint_supports(s)?;
    let t = s.tol();
    let g = s.geometry();
    let diff = (s.gamma2() - s.gamma1()).into_matrix();
    // γ1 X γ1 ≥ 0 is equivalent to X ≥ 0 compressed to supp γ1.
    let margin2 = compressed_min(&diff, g.supp1.basis());
    let margin1 = compressed_min(&(-&diff), g.supp2.basis());
    let (lambda1, lambda2) = s.lambdas();
    let d = s.dim();
    let id = HermitianOperator::identity(d);

    let mut best: Option<SolverOutcome> = None;
    for (margin, branch) in [(margin2, Branch::SingleDetectGamma2), (margin1, Branch::SingleDetectGamma1)] {
        if margin < -t.psd_floor {
            continue;
        }
        let m = match branch {
            Branch::SingleDetectGamma2 => {
                UsdMeasurement::new(HermitianOperator::zeros(d), lambda2.clone(), &id - &lambda2)
            }
            _ => UsdMeasurement::new(lambda1.clone(), HermitianOperator::zeros(d), &id - &lambda1),
        };
        let mut out = SolverOutcome::evaluate(m, s, branch)?;
        out.boundary = margin.is_finite() && margin <= 10.0 * t.psd_floor;
        if best.as_ref().is_none_or(|b| out.success > b.success) {
            best = Some(out);
        }
    }
    Ok(best)
}

/// `√ρ^-` and an orthonormal basis of `supp ρ`.
fn inverse_root(rho: &HermitianOperator, tol: &ToleranceContext) -> Result<(CMatrix, CMatrix)> {
    let root = sqrt_psd(rho, tol)?;
    let basis = support(rho, tol)?.basis().clone();
    Ok((pseudo_inverse(root.matrix(), tol), basis))
}

/// Window `(0, ℓ1]` of single-state detection of `ρ2`, `ℓ1 = λ1/(1+λ1)` with
/// `λ1` the smallest eigenvalue of `√ρ1^- ρ2 √ρ1^-` on `supp ρ1`.
pub fn single_detection_window(
    rho1: &HermitianOperator,
    rho2: &HermitianOperator,
    tol: &ToleranceContext,
) -> Result<ProbabilityWindow> {
    let kind = WindowKind::SingleDetectGamma2;
    let (inv, basis) = inverse_root(rho1, tol)?;
    let m = &inv * rho2.matrix() * &inv;
    let lambda = compressed_min(&m, &basis);
    let largest = crate::linalg::eigh(&m).largest_abs();
    if !lambda.is_finite() || lambda <= tol.rank_cutoff * largest.max(1.0) {
        return Ok(ProbabilityWindow::empty(kind, lambda.max(0.0)));
    }
    let ell = lambda / (1.0 + lambda);
    Ok(ProbabilityWindow { kind, lower: 0.0, upper: ell, spectral_quantity: lambda, empty: false })
}

/// Window `[1 − ℓ2, 1)` of single-state detection of `ρ1`.
pub fn gamma1_detection_window(
    rho1: &HermitianOperator,
    rho2: &HermitianOperator,
    tol: &ToleranceContext,
) -> Result<ProbabilityWindow> {
    let w = single_detection_window(rho2, rho1, tol)?;
    if w.empty {
        return Ok(ProbabilityWindow { kind: WindowKind::SingleDetectGamma1, ..w });
    }
    Ok(ProbabilityWindow {
        kind: WindowKind::SingleDetectGamma1,
        lower: 1.0 - w.upper,
        upper: 1.0,
        spectral_quantity: w.spectral_quantity,
        empty: false,
    })
}

/// `μ1`: the largest eigenvalue of `√ρ1^- √(√ρ1 ρ2 √ρ1) √ρ1^-`.
fn fidelity_mu(rho1: &HermitianOperator, rho2: &HermitianOperator, tol: &ToleranceContext) -> Result<f64> {
    let root = sqrt_psd(rho1, tol)?;
    let r = sqrt_psd(&rho2.congruence(root.matrix()), tol)?;
    let inv = pseudo_inverse(root.matrix(), tol);
    Ok(crate::linalg::eigh(&(&inv * r.matrix() * &inv)).max())
}

/// Window `[m1, 1 − m2]` with `mμ = μμ²/(1 + μμ²)`; empty when `m1 + m2 > 1`.
pub fn fidelity_window(
    rho1: &HermitianOperator,
    rho2: &HermitianOperator,
    tol: &ToleranceContext,
) -> Result<ProbabilityWindow> {
    let mu1 = fidelity_mu(rho1, rho2, tol)?;
    let mu2 = fidelity_mu(rho2, rho1, tol)?;
    let m1 = mu1 * mu1 / (1.0 + mu1 * mu1);
    let m2 = mu2 * mu2 / (1.0 + mu2 * mu2);
    let kind = WindowKind::FidelityForm;
    if m1 + m2 > 1.0 {
        return Ok(ProbabilityWindow::empty(kind, mu1));
    }
    Ok(ProbabilityWindow { kind, lower: m1, upper: 1.0 - m2, spectral_quantity: mu1, empty: false })
}

/// `F1 = √(√γ1 γ2 √γ1)` and `F2 = √(√γ2 γ1 √γ2)`, plus the two roots.
pub struct FidelityOperators {
    pub root1: HermitianOperator,
    pub root2: HermitianOperator,
    pub f1: HermitianOperator,
    pub f2: HermitianOperator,
}

pub fn fidelity_operators(s: &WeightedDensityPair) -> Result<FidelityOperators> {
    let t = s.tol();
    let root1 = sqrt_psd(s.gamma1(), t)?;
    let root2 = sqrt_psd(s.gamma2(), t)?;
    let f1 = sqrt_psd(&s.gamma2().congruence(root1.matrix()), t)?;
    let f2 = sqrt_psd(&s.gamma1().congruence(root2.matrix()), t)?;
    Ok(FidelityOperators { root1, root2, f1, f2 })
}

/// `tr(γ1 + γ2) − 2 tr|√γ1 √γ2|`, an upper bound on the success probability.
pub fn fidelity_bound(s: &WeightedDensityPair) -> Result<f64> {
    let f = fidelity_operators(s)?;
    Ok(s.total_trace() - 2.0 * f.f1.trace())
}

/// `E? = 1 − S^-{√γ1(γ1 − F1)√γ1 + √γ2(γ2 − F2)√γ2}S^-`.
pub fn fidelity_inconclusive(s: &WeightedDensityPair) -> Result<HermitianOperator> {
    let f = fidelity_operators(s)?;
    let d = s.dim();
    let s_inv = s.total().pinv(s.tol());
    let part1 = (s.gamma1() - &f.f1).congruence(f.root1.matrix());
    let part2 = (s.gamma2() - &f.f2).congruence(f.root2.matrix());
    let inner = (&part1 + &part2).congruence(s_inv.matrix());
    Ok(HermitianOperator::from_hermitian_part(CMatrix::identity(d, d) - inner.matrix()))
}

/// The same operator as `Π⊥ + A A†` with `A = S^-(√γ1 + √γ2 U)√F1`, where
/// `U` is the unitary of the polar decomposition `√γ1 √γ2 U = F1`.
pub fn fidelity_inconclusive_factored(s: &WeightedDensityPair) -> Result<HermitianOperator> {
    let t = s.tol();
    let f = fidelity_operators(s)?;
    let prod = f.root1.matrix() * f.root2.matrix();
    // √γ1√γ2 = X Σ Y† gives √γ1√γ2 (Y X†) = X Σ X† = F1.
    let dec = svd(&prod);
    let u = &dec.v * dec.u.adjoint();
    let sqrt_f1 = sqrt_psd(&f.f1, t)?;
    let s_inv = s.total().pinv(t);
    let a = s_inv.matrix() * (f.root1.matrix() + f.root2.matrix() * u) * sqrt_f1.matrix();
    Ok(HermitianOperator::from_hermitian_part(s.pi_perp().matrix() + &a * a.adjoint()))
}

/// The fidelity-form measurement when `γμ − Fμ ≥ 0` for both `μ`; otherwise `None`.
pub fn try_fidelity_form(s: &WeightedDensityPair) -> Result<Option<SolverOutcome>> {
    require_disjoint_supports(s)?;
    let t = s.tol();
    let f = fidelity_operators(s)?;
    let margin1 = (s.gamma1() - &f.f1).min_eigenvalue();
    let margin2 = (s.gamma2() - &f.f2).min_eigenvalue();
    if margin1 < -t.psd_floor || margin2 < -t.psd_floor {
        return Ok(None);
    }
    let e_q = fidelity_inconclusive(s)?;
    // Roundoff right at the edge of the window can push E? marginally outside
    // the valid set; the family is then treated as not applicable.
    let m = match complete_measurement(&e_q, s) {
        Ok(m) => m,
        Err(Error::InvalidInconclusive(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut out = SolverOutcome::evaluate(m, s, Branch::FidelityForm)?;
    out.boundary = margin1.min(margin2) <= 10.0 * t.psd_floor;
    let bures = s.total_trace() - 2.0 * trace_re(f.f1.matrix());
    if (out.success - bures).abs() > 1e3 * t.equality {
        out.warnings.push(format!("success {} differs from the Bures value {bures}", out.success));
    }
    Ok(Some(out))
}
