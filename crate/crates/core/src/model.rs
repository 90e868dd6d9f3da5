//! Problem instances, USD measurements and the identities that tie a proper
//! measurement to its inconclusive operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    intersect, kernel, oblique_projector, sqrt_psd, sum, support, trace_product_re, CMatrix, HermitianOperator,
    Subspace, ToleranceContext,
};

/// A pair of weighted density operators `γμ = pμ ρμ`.
///
/// The total trace may be below one; no rescaling takes place.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDensityPair {
    gamma1: HermitianOperator,
    gamma2: HermitianOperator,
    tol: ToleranceContext,
}

/// Supports and kernels of a pair, computed together.
#[derive(Debug, Clone)]
pub struct PairGeometry {
    pub supp1: Subspace,
    pub supp2: Subspace,
    pub ker1: Subspace,
    pub ker2: Subspace,
    pub supp_s: Subspace,
    pub ker_s: Subspace,
}

impl WeightedDensityPair {
    pub fn new(gamma1: HermitianOperator, gamma2: HermitianOperator, tol: ToleranceContext) -> Result<Self> {
        tol.validate()?;
        if gamma1.dim() != gamma2.dim() {
            return Err(Error::DimensionMismatch { expected: gamma1.dim(), found: gamma2.dim() });
        }
        if gamma1.dim() == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        for g in [&gamma1, &gamma2] {
            let min = g.min_eigenvalue();
            if min < -tol.psd_floor {
                return Err(Error::NotPsd { min_eigenvalue: min });
            }
        }
        let total = gamma1.trace() + gamma2.trace();
        if total > 1.0 + tol.equality {
            return Err(Error::InvalidInstance(format!("total trace {total} exceeds one")));
        }
        Ok(Self { gamma1, gamma2, tol })
    }

    /// Validates Hermiticity of raw matrices before building the pair.
    pub fn from_matrices(gamma1: CMatrix, gamma2: CMatrix, tol: ToleranceContext) -> Result<Self> {
        let g1 = HermitianOperator::new(gamma1, &tol)?;
        let g2 = HermitianOperator::new(gamma2, &tol)?;
        Self::new(g1, g2, tol)
    }

    /// `(p1 ρ1, (1 − p1) ρ2)`.
    pub fn from_states(
        rho1: &HermitianOperator,
        rho2: &HermitianOperator,
        p1: f64,
        tol: ToleranceContext,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::InvalidInstance(format!("prior p1 = {p1} outside [0, 1]")));
        }
        Self::new(rho1.scaled(p1), rho2.scaled(1.0 - p1), tol)
    }

    pub fn dim(&self) -> usize {
        self.gamma1.dim()
    }

    pub fn gamma1(&self) -> &HermitianOperator {
        &self.gamma1
    }

    pub fn gamma2(&self) -> &HermitianOperator {
        &self.gamma2
    }

    pub fn gamma(&self, mu: usize) -> &HermitianOperator {
        match mu {
            1 => &self.gamma1,
            2 => &self.gamma2,
            _ => panic!("state index must be 1 or 2, got {mu}"),
        }
    }

    pub fn tol(&self) -> &ToleranceContext {
        &self.tol
    }

    pub fn with_tol(&self, tol: ToleranceContext) -> Self {
        Self { tol, ..self.clone() }
    }

    /// `S = γ1 + γ2`.
    pub fn total(&self) -> HermitianOperator {
        &self.gamma1 + &self.gamma2
    }

    pub fn total_trace(&self) -> f64 {
        self.gamma1.trace() + self.gamma2.trace()
    }

    /// The pair with the roles of the two states exchanged.
    pub fn swapped(&self) -> Self {
        Self { gamma1: self.gamma2.clone(), gamma2: self.gamma1.clone(), tol: self.tol }
    }

    pub fn geometry(&self) -> PairGeometry {
        let t = &self.tol;
        let s = self.total();
        PairGeometry {
            supp1: support(&self.gamma1, t).expect("validated Hermitian"),
            supp2: support(&self.gamma2, t).expect("validated Hermitian"),
            ker1: kernel(&self.gamma1, t).expect("validated Hermitian"),
            ker2: kernel(&self.gamma2, t).expect("validated Hermitian"),
            supp_s: support(&s, t).expect("validated Hermitian"),
            ker_s: kernel(&s, t).expect("validated Hermitian"),
        }
    }

    /// Projector onto `ker S`.
    pub fn pi_perp(&self) -> HermitianOperator {
        self.geometry().ker_s.projector()
    }

    /// `Λ1`, `Λ2`: projectors onto `ker γ2 ∩ supp S` and `ker γ1 ∩ supp S`.
    pub fn lambdas(&self) -> (HermitianOperator, HermitianOperator) {
        let g = self.geometry();
        let t = &self.tol;
        let l1 = intersect(&g.ker2, &g.supp_s, t).expect("same ambient space");
        let l2 = intersect(&g.ker1, &g.supp_s, t).expect("same ambient space");
        (l1.projector(), l2.projector())
    }

    /// Numerical rank of `γ1 γ2`.
    pub fn rank_of_product(&self) -> usize {
        crate::linalg::rank(&(self.gamma1.matrix() * self.gamma2.matrix()), &self.tol)
    }
}

/// A three-outcome POVM `(E1, E2, E?)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UsdMeasurement {
    pub e1: HermitianOperator,
    pub e2: HermitianOperator,
    pub e_inconclusive: HermitianOperator,
}

/// Residuals of the defining conditions of a USD measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDiagnostics {
    pub min_eigenvalue: [f64; 3],
    pub completeness_residual: f64,
    /// `tr(E2 γ1)` and `tr(E1 γ2)`.
    pub error_probabilities: [f64; 2],
    pub valid: bool,
}

impl UsdMeasurement {
    pub fn new(e1: HermitianOperator, e2: HermitianOperator, e_inconclusive: HermitianOperator) -> Self {
        Self { e1, e2, e_inconclusive }
    }

    /// The trivial measurement that always answers "?".
    pub fn inconclusive_only(dim: usize) -> Self {
        Self::new(HermitianOperator::zeros(dim), HermitianOperator::zeros(dim), HermitianOperator::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.e1.dim()
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.e2.clone(), self.e1.clone(), self.e_inconclusive.clone())
    }

    pub fn diagnostics(&self, s: &WeightedDensityPair) -> Result<MeasurementDiagnostics> {
        let d = s.dim();
        for e in [&self.e1, &self.e2, &self.e_inconclusive] {
            if e.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: e.dim() });
            }
        }
        let t = s.tol();
        let min_eigenvalue = [self.e1.min_eigenvalue(), self.e2.min_eigenvalue(), self.e_inconclusive.min_eigenvalue()];
        let sum = self.e1.matrix() + self.e2.matrix() + self.e_inconclusive.matrix();
        let completeness_residual = (sum - CMatrix::identity(d, d)).norm();
        let error_probabilities = [
            trace_product_re(self.e2.matrix(), s.gamma1().matrix()),
            trace_product_re(self.e1.matrix(), s.gamma2().matrix()),
        ];
        let valid = min_eigenvalue.iter().all(|&m| m >= -t.psd_floor)
            && completeness_residual <= t.equality
            && error_probabilities.iter().all(|&p| p <= t.equality);
        Ok(MeasurementDiagnostics { min_eigenvalue, completeness_residual, error_probabilities, valid })
    }

    /// Whether this is a USD measurement for `s`.
    pub fn is_usd(&self, s: &WeightedDensityPair) -> bool {
        self.diagnostics(s).map(|d| d.valid).unwrap_or(false)
    }
}

/// `tr(E1 γ1) + tr(E2 γ2)`.
pub fn success_probability(m: &UsdMeasurement, s: &WeightedDensityPair) -> f64 {
    trace_product_re(m.e1.matrix(), s.gamma1().matrix()) + trace_product_re(m.e2.matrix(), s.gamma2().matrix())
}

/// `tr(E? (γ1 + γ2))`.
pub fn failure_probability(m: &UsdMeasurement, s: &WeightedDensityPair) -> f64 {
    trace_product_re(m.e_inconclusive.matrix(), s.total().matrix())
}

/// `supp(E1 + E2) ⊆ supp S`.
pub fn is_proper(m: &UsdMeasurement, s: &WeightedDensityPair) -> bool {
    let pi_perp = s.pi_perp();
    let conclusive = m.e1.matrix() + m.e2.matrix();
    (conclusive * pi_perp.matrix()).norm() <= s.tol().equality
}

/// The four conditions characterising a valid inconclusive operator, each
/// with its residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InconclusiveDiagnostics {
    /// `‖(E? − 1) Π⊥‖`.
    pub kernel_identity_residual: f64,
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue of `1 − E?`.
    pub min_complement_eigenvalue: f64,
    /// `‖γ1 (1 − E?) γ2‖`.
    pub cross_residual: f64,
    pub identity_on_kernel: bool,
    pub positive: bool,
    pub complement_positive: bool,
    pub cross_vanishes: bool,
}

impl InconclusiveDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.identity_on_kernel && self.positive && self.complement_positive && self.cross_vanishes
    }

    fn first_failure(&self) -> Option<String> {
        if !self.identity_on_kernel {
            Some(format!("not the identity on ker S (residual {:.3e})", self.kernel_identity_residual))
        } else if !self.positive {
            Some(format!("not positive (minimum eigenvalue {:.3e})", self.min_eigenvalue))
        } else if !self.complement_positive {
            Some(format!("1 - E? not positive (minimum eigenvalue {:.3e})", self.min_complement_eigenvalue))
        } else if !self.cross_vanishes {
            Some(format!("gamma1 (1 - E?) gamma2 != 0 (residual {:.3e})", self.cross_residual))
        } else {
            None
        }
    }
}

pub fn validate_inconclusive(e_q: &HermitianOperator, s: &WeightedDensityPair) -> Result<InconclusiveDiagnostics> {
    let d = s.dim();
    if e_q.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: e_q.dim() });
    }
    let t = s.tol();
    let id = CMatrix::identity(d, d);
    let complement = &id - e_q.matrix();
    let kernel_identity_residual = (&complement * s.pi_perp().matrix()).norm();
    let eig = e_q.eigh();
    let min_eigenvalue = eig.min();
    let min_complement_eigenvalue = 1.0 - eig.max();
    let cross_residual = (s.gamma1().matrix() * &complement * s.gamma2().matrix()).norm();
    Ok(InconclusiveDiagnostics {
        kernel_identity_residual,
        min_eigenvalue,
        min_complement_eigenvalue,
        cross_residual,
        identity_on_kernel: kernel_identity_residual <= t.equality,
        positive: min_eigenvalue >= -t.psd_floor,
        complement_positive: min_complement_eigenvalue >= -t.psd_floor,
        cross_vanishes: cross_residual <= t.equality,
    })
}

/// Oblique projector `Q1` from `ker γ2 ∩ supp S` to `supp γ1 ∩ (ker γ1 + ker γ2)`,
/// or `Q2` for `mu = 2`.
pub fn completion_projector(s: &WeightedDensityPair, mu: usize) -> Result<CMatrix> {
    let g = s.geometry();
    let t = s.tol();
    let (supp_mu, ker_other) = match mu {
        1 => (&g.supp1, &g.ker2),
        2 => (&g.supp2, &g.ker1),
        _ => panic!("state index must be 1 or 2, got {mu}"),
    };
    let from = intersect(ker_other, &g.supp_s, t)?;
    let kernels = sum(&g.ker1, &g.ker2, t)?;
    let to = intersect(supp_mu, &kernels, t)?;
    if from.is_zero() && to.is_zero() {
        return Ok(CMatrix::zeros(s.dim(), s.dim()));
    }
    Ok(oblique_projector(&from.projector(), &to.projector(), t)?.into_matrix())
}

/// The unique proper USD measurement with the given inconclusive operator.
pub fn complete_measurement(e_q: &HermitianOperator, s: &WeightedDensityPair) -> Result<UsdMeasurement> {
    let diag = validate_inconclusive(e_q, s)?;
    if let Some(reason) = diag.first_failure() {
        return Err(Error::InvalidInconclusive(reason));
    }
    let d = s.dim();
    let complement = CMatrix::identity(d, d) - e_q.matrix();
    let q1 = completion_projector(s, 1).map_err(|e| Error::InvalidInconclusive(e.to_string()))?;
    let q2 = completion_projector(s, 2).map_err(|e| Error::InvalidInconclusive(e.to_string()))?;
    let e1 = HermitianOperator::from_hermitian_part(q1.adjoint() * &complement * &q1);
    let e2 = HermitianOperator::from_hermitian_part(q2.adjoint() * &complement * &q2);
    Ok(UsdMeasurement::new(e1, e2, e_q.clone()))
}

/// The operator `E? (γ2 − γ1) E?` from which a proper measurement can be rebuilt.
pub fn core_operator(e_q: &HermitianOperator, s: &WeightedDensityPair) -> HermitianOperator {
    let diff = s.gamma2() - s.gamma1();
    HermitianOperator::from_hermitian_part(e_q.matrix() * diff.matrix() * e_q.matrix())
}

/// How much negative spectrum had to be clamped in the two inner square roots.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReconstructionDiagnostics {
    pub clamped: [f64; 2],
    /// Clamping went beyond `psd_floor`.
    pub clamping_exceeded_floor: bool,
}

/// Rebuilds `E?` from `core = E? (γ2 − γ1) E?`.
pub fn reconstruct_from_core(core: &HermitianOperator, s: &WeightedDensityPair) -> Result<HermitianOperator> {
    reconstruct_from_core_with_diagnostics(core, s).map(|(e, _)| e)
}

/// Inner arguments more negative than this (relative to their norm) are
/// treated as inconsistent input rather than roundoff.
const RECONSTRUCTION_REJECT: f64 = 1e-6;

pub fn reconstruct_from_core_with_diagnostics(
    core: &HermitianOperator,
    s: &WeightedDensityPair,
) -> Result<(HermitianOperator, ReconstructionDiagnostics)> {
    let d = s.dim();
    if core.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: core.dim() });
    }
    let t = s.tol();
    let g1 = s.gamma1();
    let g2 = s.gamma2();
    let r1 = sqrt_psd(g1, t)?;
    let r2 = sqrt_psd(g2, t)?;
    let total = s.total();
    let s_inv = total.pinv(t);
    let pi_perp = s.pi_perp();

    let mut diagnostics = ReconstructionDiagnostics::default();
    let mut inner_root = |root: &HermitianOperator, arg: HermitianOperator, k: usize| -> Result<CMatrix> {
        let inner = arg.congruence(root.matrix());
        let min = inner.min_eigenvalue();
        let scale = inner.matrix().norm().max(t.zero_floor);
        if min < 0.0 {
            diagnostics.clamped[k] = -min;
            if min < -t.psd_floor {
                diagnostics.clamping_exceeded_floor = true;
            }
            if min < -RECONSTRUCTION_REJECT * scale.max(1.0) {
                return Err(Error::NotReconstructible(format!(
                    "inner square-root argument {} has eigenvalue {min:.3e}",
                    k + 1
                )));
            }
        }
        let clamped = HermitianOperator::from_hermitian_part(inner.eigh().map(|v| v.max(0.0)));
        let sq = sqrt_psd(&clamped, t)?;
        Ok(root.matrix() * sq.matrix() * root.matrix())
    };
    let term1 = inner_root(&r1, g2 - core, 0)?;
    let term2 = inner_root(&r2, g1 + core, 1)?;

    let products = g1.matrix() * g2.matrix() + g2.matrix() * g1.matrix();
    let bracket = products + term1 + term2;
    let e_q = pi_perp.matrix() + s_inv.matrix() * bracket * s_inv.matrix();
    Ok((HermitianOperator::from_hermitian_part(e_q), diagnostics))
}

/// `ker(1 − E?)`: eigenvectors of `E?` with eigenvalue within `10·tol.equality` of one.
pub fn projective_part(e_q: &HermitianOperator, tol: &ToleranceContext) -> Subspace {
    let eig = e_q.eigh();
    let basis = eig.select(|v| v >= 1.0 - 10.0 * tol.equality);
    Subspace::from_orthonormal(basis, tol).expect("eigenvectors are orthonormal")
}

/// The three pieces of `ker(1 − E?) = ({…} ∩ supp γ1 + {…} ∩ supp γ2) ⊕ ker S`.
#[derive(Debug, Clone)]
pub struct KernelDecomposition {
    pub projective: Subspace,
    pub in_supp1: Subspace,
    pub in_supp2: Subspace,
    pub ker_s: Subspace,
}

impl KernelDecomposition {
    /// Whether the three pieces add up to the whole projective part.
    pub fn is_complete(&self, tol: &ToleranceContext) -> bool {
        let parts = sum(&sum(&self.in_supp1, &self.in_supp2, tol).unwrap(), &self.ker_s, tol).unwrap();
        parts.dim() == self.projective.dim() && parts.is_subspace_of(&self.projective, tol)
    }
}

pub fn projective_kernel_decomposition(
    e_q: &HermitianOperator,
    s: &WeightedDensityPair,
) -> Result<KernelDecomposition> {
    if e_q.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: e_q.dim() });
    }
    let t = s.tol();
    let g = s.geometry();
    let projective = projective_part(e_q, t);
    // The projective part is only known to ~√ε, so intersect with a matching slack.
    let loose = ToleranceContext { equality: 10.0 * t.equality, ..*t };
    Ok(KernelDecomposition {
        in_supp1: intersect(&projective, &g.supp1, &loose)?,
        in_supp2: intersect(&projective, &g.supp2, &loose)?,
        ker_s: g.ker_s,
        projective,
    })
}

/// Ranks of the conclusive elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementClassTag {
    pub e1_rank: usize,
    pub e2_rank: usize,
    pub is_von_neumann: bool,
}

impl MeasurementClassTag {
    /// The unordered class `[a, b]` with `a ≤ b`.
    pub fn class(&self) -> (usize, usize) {
        (self.e1_rank.min(self.e2_rank), self.e1_rank.max(self.e2_rank))
    }
}

impl std::fmt::Display for MeasurementClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.e1_rank, self.e2_rank)
    }
}
