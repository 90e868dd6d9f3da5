//! Removing the common-support part and the mutually orthogonal parts of a pair.
//!
//! Directions in `supp γ1 ∩ supp γ2` can never be identified unambiguously,
//! while directions in `supp γ1 ∩ ker γ2` (or the reverse) are identified with
//! certainty. Projecting both out leaves a strictly skew pair whose optimal
//! measurement lifts back to the original problem.

use crate::error::{Error, Result};
use crate::linalg::{intersect, jordan_bases, rank, sum, CMatrix, HermitianOperator, Subspace, ToleranceContext};
use crate::model::{UsdMeasurement, WeightedDensityPair};

/// Everything needed to map a measurement of the reduced pair back.
#[derive(Debug, Clone)]
pub struct ReductionRecord {
    /// Projector onto `supp γ1 ∩ supp γ2`.
    pub pi_parallel: HermitianOperator,
    /// Projector onto `supp γ1 ∩ ker γ2`.
    pub sigma1: HermitianOperator,
    /// Projector onto `supp γ2 ∩ ker γ1`.
    pub sigma2: HermitianOperator,
    /// `1 − Π∥ − Σ1 − Σ2`.
    pub xi: HermitianOperator,
    /// `tr[(Σ1 + Σ2)(γ1 + γ2)]`, the success probability gained for free.
    pub lifted_offset: f64,
    pub reduced_pair: WeightedDensityPair,
    /// Jordan cosines close to a classification boundary.
    pub warnings: Vec<String>,
}

impl ReductionRecord {
    /// Whether the reduction left the pair unchanged.
    pub fn is_identity(&self) -> bool {
        self.pi_parallel.trace() < 0.5 && self.sigma1.trace() < 0.5 && self.sigma2.trace() < 0.5
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let r = |p: &HermitianOperator| p.trace().round() as usize;
        (r(&self.pi_parallel), r(&self.sigma1), r(&self.sigma2))
    }
}

fn project_pair(s: &WeightedDensityPair, p: &HermitianOperator) -> Result<WeightedDensityPair> {
    WeightedDensityPair::new(s.gamma1().congruence(p.matrix()), s.gamma2().congruence(p.matrix()), *s.tol())
}

/// `(Π∦ γ1 Π∦, Π∦ γ2 Π∦)` with `Π∦` the projector onto `ker γ1 + ker γ2`.
pub fn tau_parallel(s: &WeightedDensityPair) -> Result<(WeightedDensityPair, HermitianOperator)> {
    let g = s.geometry();
    let p = sum(&g.ker1, &g.ker2, s.tol())?.projector();
    Ok((project_pair(s, &p)?, p))
}

/// `(Π γ1 Π, Π γ2 Π)` with `Π` the projector onto `(ker γ1 + supp γ2) ∩ (ker γ2 + supp γ1)`.
pub fn tau_skew(s: &WeightedDensityPair) -> Result<(WeightedDensityPair, HermitianOperator)> {
    let t = s.tol();
    let g = s.geometry();
    let a = sum(&g.ker1, &g.supp2, t)?;
    let b = sum(&g.ker2, &g.supp1, t)?;
    let p = intersect(&a, &b, t)?.projector();
    Ok((project_pair(s, &p)?, p))
}

/// `τ∦` changes the pair iff `rank(γ1 + γ2) < rank γ1 + rank γ2`.
pub fn tau_parallel_is_nontrivial(s: &WeightedDensityPair) -> bool {
    let t = s.tol();
    s.total().rank(t) < s.gamma1().rank(t) + s.gamma2().rank(t)
}

/// `τ_skew` changes the pair iff `rank γμ > rank γ1γ2` for some `μ`.
pub fn tau_skew_is_nontrivial(s: &WeightedDensityPair) -> bool {
    let t = s.tol();
    let r12 = s.rank_of_product();
    s.gamma1().rank(t) > r12 || s.gamma2().rank(t) > r12
}

/// No common support and no support direction inside the other kernel,
/// checked both geometrically and through ranks.
pub fn is_strictly_skew(s: &WeightedDensityPair) -> bool {
    let t = s.tol();
    let g = s.geometry();
    let trivial = |a: &Subspace, b: &Subspace| intersect(a, b, t).map(|i| i.is_zero()).unwrap_or(false);
    if !(trivial(&g.supp1, &g.supp2) && trivial(&g.supp1, &g.ker2) && trivial(&g.ker1, &g.supp2)) {
        return false;
    }
    let r1 = s.gamma1().rank(t);
    let r2 = s.gamma2().rank(t);
    let r12 = s.rank_of_product();
    r1 > 0 && s.total().rank(t) == r1 + r2 && r1 == r12 && r2 == r12
}

/// Projector onto the span of the selected columns.
fn span_projector(vectors: &[CMatrix], d: usize, tol: &ToleranceContext) -> HermitianOperator {
    if vectors.is_empty() {
        return HermitianOperator::zeros(d);
    }
    let m = CMatrix::from_columns(&vectors.iter().map(|v| v.column(0).into_owned()).collect::<Vec<_>>());
    Subspace::span(&m, tol).projector()
}

/// Applies both reductions at once, using Jordan bases of `supp γ1` and `supp γ2`.
///
/// Cosines `≥ 1 − tol.equality` are common-support directions; cosines
/// `≤ tol.equality` and unpaired basis vectors are orthogonal directions.
pub fn reduce_fully(s: &WeightedDensityPair) -> Result<ReductionRecord> {
    let t = s.tol();
    let d = s.dim();
    let g = s.geometry();
    let jb = jordan_bases(&g.supp1, &g.supp2, t)?;
    let boundary = t.equality;

    let mut parallel = Vec::new();
    let mut orth1 = Vec::new();
    let mut orth2 = Vec::new();
    let mut warnings = Vec::new();
    for (k, &cos) in jb.cosines.iter().enumerate() {
        if cos >= 1.0 - boundary {
            parallel.push(jb.a.columns(k, 1).into_owned());
        } else if cos <= boundary {
            orth1.push(jb.a.columns(k, 1).into_owned());
            orth2.push(jb.b.columns(k, 1).into_owned());
        }
        let near_parallel = cos < 1.0 - boundary && cos >= 1.0 - 10.0 * boundary;
        let near_orthogonal = cos > boundary && cos <= 10.0 * boundary;
        if near_parallel || near_orthogonal {
            warnings.push(format!("Jordan cosine {cos:.3e} lies close to a classification boundary"));
        }
    }
    let paired = jb.cosines.len();
    for k in paired..jb.a.ncols() {
        orth1.push(jb.a.columns(k, 1).into_owned());
    }
    for k in paired..jb.b.ncols() {
        orth2.push(jb.b.columns(k, 1).into_owned());
    }

    let pi_parallel = span_projector(&parallel, d, t);
    let sigma1 = span_projector(&orth1, d, t);
    let sigma2 = span_projector(&orth2, d, t);
    let id = CMatrix::identity(d, d);
    let xi = HermitianOperator::from_hermitian_part(id - pi_parallel.matrix() - sigma1.matrix() - sigma2.matrix());
    let reduced_pair = project_pair(s, &xi)?;
    let sigmas = &sigma1 + &sigma2;
    let lifted_offset = crate::linalg::trace_product_re(sigmas.matrix(), s.total().matrix());
    Ok(ReductionRecord { pi_parallel, sigma1, sigma2, xi, lifted_offset, reduced_pair, warnings })
}

/// `(E1' + Σ1, E2' + Σ2, E?' − Σ1 − Σ2)`.
pub fn lift_measurement(m: &UsdMeasurement, rec: &ReductionRecord) -> Result<UsdMeasurement> {
    let d = rec.xi.dim();
    if m.dim() != d {
        return Err(Error::IncompatibleRecord(format!("measurement acts on dimension {}, record on {d}", m.dim())));
    }
    Ok(UsdMeasurement::new(&m.e1 + &rec.sigma1, &m.e2 + &rec.sigma2, &(&m.e_inconclusive - &rec.sigma1) - &rec.sigma2))
}

/// `E? + (1 − Π_skew)`: the inconclusive operator viewed on `τ_skew(S)`.
pub fn skew_inconclusive(e_q: &HermitianOperator, pi_skew: &HermitianOperator) -> HermitianOperator {
    let d = e_q.dim();
    HermitianOperator::from_hermitian_part(e_q.matrix() + CMatrix::identity(d, d) - pi_skew.matrix())
}

/// Rank of `γ1 γ2` together with `dim ker S`, used by the rank law.
pub fn rank_budget(s: &WeightedDensityPair) -> (usize, usize) {
    (rank(&(s.gamma1().matrix() * s.gamma2().matrix()), s.tol()), s.geometry().ker_s.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, CVector};
    use crate::model::success_probability;
    use crate::random::{random_density_in, random_unitary, seeded};

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    fn ket(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| c64(x, 0.0)))
    }

    fn pair(g1: HermitianOperator, g2: HermitianOperator) -> WeightedDensityPair {
        WeightedDensityPair::new(g1, g2, tol()).unwrap()
    }

    #[test]
    fn tau_parallel_on_disjoint_supports_is_identity() {
        let s = pair(
            HermitianOperator::rank_one(&ket(&[1.0, 0.0]), 0.5),
            HermitianOperator::rank_one(&ket(&[0.6, 0.8]), 0.5),
        );
        let (image, p) = tau_parallel(&s).unwrap();
        assert!((p.matrix() - CMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((image.gamma1().matrix() - s.gamma1().matrix()).norm() < 1e-12);
        assert!(!tau_parallel_is_nontrivial(&s));
    }

    #[test]
    fn equal_states_reduce_to_zero() {
        let g = HermitianOperator::from_diagonal(&[0.3, 0.2, 0.0]);
        let s = pair(g.clone(), g);
        let (image, _) = tau_parallel(&s).unwrap();
        assert!(image.total().matrix().norm() < 1e-12);
        let rec = reduce_fully(&s).unwrap();
        assert!(rec.reduced_pair.total().matrix().norm() < 1e-12);
        assert_eq!(rec.lifted_offset, 0.0);
        assert!(!is_strictly_skew(&s));
    }

    #[test]
    fn shared_direction_is_removed() {
        // γ1 = 0.3|0⟩⟨0| + 0.2|1⟩⟨1|, γ2 = 0.1|0⟩⟨0| + 0.4|v⟩⟨v| with v in span{1,2}.
        let v = ket(&[0.0, 0.6, 0.8]);
        let g1 = HermitianOperator::from_diagonal(&[0.3, 0.2, 0.0]);
        let g2 = &HermitianOperator::from_diagonal(&[0.1, 0.0, 0.0]) + &HermitianOperator::rank_one(&v, 0.4);
        let s = pair(g1, g2);
        assert!(tau_parallel_is_nontrivial(&s));
        let (image, p) = tau_parallel(&s).unwrap();
        // Oracle: ker γ1 + ker γ2 = span{|2⟩} + span{(0,0.8,-0.6)} = span{|1⟩, |2⟩}.
        assert!((p.matrix() - HermitianOperator::from_diagonal(&[0.0, 1.0, 1.0]).matrix()).norm() < 1e-10);
        let drop = s.total_trace() - image.total_trace();
        assert!((drop - 0.4).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_states_are_fully_stripped() {
        let s = pair(
            HermitianOperator::from_diagonal(&[0.4, 0.0, 0.0]),
            HermitianOperator::from_diagonal(&[0.0, 0.6, 0.0]),
        );
        let (image, _) = tau_skew(&s).unwrap();
        assert!(image.total().matrix().norm() < 1e-12);
        let rec = reduce_fully(&s).unwrap();
        assert!((rec.lifted_offset - 1.0).abs() < 1e-12);
        let reduced = UsdMeasurement::inconclusive_only(3);
        let lifted = lift_measurement(&reduced, &rec).unwrap();
        assert!((success_probability(&lifted, &s) - 1.0).abs() < 1e-12);
        assert!(!is_strictly_skew(&s));
    }

    #[test]
    fn rank_two_state_with_orthogonal_direction() {
        // γ1 has |2⟩ orthogonal to supp γ2 = span{(|0⟩+|1⟩)/√2}.
        let g1 = HermitianOperator::from_real_rows(&[&[0.2, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.3]]);
        let g2 = HermitianOperator::rank_one(&ket(&[1.0, 1.0, 0.0]).normalize(), 0.5);
        let s = pair(g1, g2);
        assert!(tau_skew_is_nontrivial(&s));
        let (image, p) = tau_skew(&s).unwrap();
        assert!((p.matrix() - HermitianOperator::from_diagonal(&[1.0, 1.0, 0.0]).matrix()).norm() < 1e-10);
        assert_eq!(image.gamma1().rank(&tol()), 1);
        let rec = reduce_fully(&s).unwrap();
        assert!((rec.lifted_offset - 0.3).abs() < 1e-12);
        assert!(is_strictly_skew(&rec.reduced_pair));
    }

    #[test]
    fn composite_block_reduces_to_skew_block() {
        let mut rng = seeded(3);
        let u = random_unitary(&mut rng, 4);
        let mut w = CMatrix::zeros(6, 4);
        w.view_mut((0, 0), (4, 4)).copy_from(&u);
        let b1 = w.columns(0, 4).into_owned();
        let r1 = random_density_in(&mut rng, &b1, 2).scaled(0.35);
        let r2 = random_density_in(&mut rng, &b1, 2).scaled(0.35);
        let e4 = ket(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let e5 = ket(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let g1 = &r1 + &HermitianOperator::rank_one(&e4, 0.1);
        let g2 = &r2 + &HermitianOperator::rank_one(&e5, 0.2);
        let s = pair(g1, g2);
        let rec = reduce_fully(&s).unwrap();
        assert!((rec.lifted_offset - 0.3).abs() < 1e-10);
        assert!((rec.reduced_pair.gamma1().matrix() - r1.matrix()).norm() < 1e-10);
        assert!((rec.reduced_pair.gamma2().matrix() - r2.matrix()).norm() < 1e-10);
        assert!(is_strictly_skew(&rec.reduced_pair));
        assert!(!is_strictly_skew(&s));
    }

    #[test]
    fn lift_rejects_dimension_mismatch() {
        let g = HermitianOperator::from_diagonal(&[0.3, 0.2]);
        let rec = reduce_fully(&pair(g.clone(), g)).unwrap();
        let m = UsdMeasurement::inconclusive_only(3);
        assert!(matches!(lift_measurement(&m, &rec), Err(Error::IncompatibleRecord(_))));
    }
}
