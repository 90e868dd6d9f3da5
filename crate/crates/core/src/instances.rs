//! Named problem instances used throughout the tests, examples and docs.

use std::f64::consts::PI;

use crate::linalg::{c64, CVector, HermitianOperator, ToleranceContext, C64};
use crate::model::{UsdMeasurement, WeightedDensityPair};

fn ket(entries: &[C64]) -> CVector {
    CVector::from_column_slice(entries)
}

fn re(x: f64) -> C64 {
    c64(x, 0.0)
}

fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Two equiprobable pure qubit states `|1⟩` and `|+⟩`, embedded in `C^3`.
pub fn peres_pair() -> WeightedDensityPair {
    let s = 1.0 / 2f64.sqrt();
    let one = ket(&[re(0.0), re(1.0), re(0.0)]);
    let plus = ket(&[re(s), re(s), re(0.0)]);
    WeightedDensityPair::new(
        HermitianOperator::rank_one(&one, 0.5),
        HermitianOperator::rank_one(&plus, 0.5),
        ToleranceContext::default(),
    )
    .expect("valid instance")
}

/// A USD measurement of [`peres_pair`] whose conclusive elements leak into
/// `|2⟩`, outside the support of both states.
pub fn peres_non_proper_measurement() -> UsdMeasurement {
    let r3 = 3f64.sqrt();
    let e1 = ket(&[re(1.0 / r3), re(-1.0 / r3), re(-1.0 / r3)]);
    let e2 = ket(&[re(2f64.sqrt() / r3), re(0.0), re(1.0 / r3)]);
    let w = 3.0 - 3.0 / 2f64.sqrt();
    let e1 = HermitianOperator::rank_one(&e1, w);
    let e2 = HermitianOperator::rank_one(&e2, w);
    let e_q = &(&HermitianOperator::identity(3) - &e1) - &e2;
    UsdMeasurement::new(e1, e2, e_q)
}

/// `1 − 1/√2`.
pub fn peres_success() -> f64 {
    1.0 - 1.0 / 2f64.sqrt()
}

/// Two rank-two states on `C^4` with rational entries.
pub fn example1_states() -> (HermitianOperator, HermitianOperator) {
    let rho1 = HermitianOperator::from_diagonal(&[1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0]);
    let rows: [[f64; 4]; 4] =
        [[11.0, 10.0, 12.0, 10.0], [10.0, 10.0, 10.0, 10.0], [12.0, 10.0, 14.0, 10.0], [10.0, 10.0, 10.0, 10.0]];
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x / 45.0).collect()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    (rho1, HermitianOperator::from_real_rows(&refs))
}

/// Two rank-two states on `C^4` with complex phases, built from eigenvectors.
pub fn example2_states() -> (HermitianOperator, HermitianOperator) {
    let a = (5.0f64 / 22.0).sqrt();
    let rho1 = HermitianOperator::from_diagonal(&[0.5 + a, 0.5 - a, 0.0, 0.0]);
    let (s22, s5, s10) = (22f64.sqrt(), 5f64.sqrt(), 10f64.sqrt());
    let nw = 1.0 / (2.0 * 41f64.sqrt());
    let p7 = phase(PI / 7.0);
    let w =
        ket(&[p7 * re((s22 + 2.0 * s5) * nw), p7 * re((s22 - 2.0 * s5) * nw), re(2.0 * s10 * nw), re(2.0 * s10 * nw)]);
    let nv = 1.0 / s10;
    let v = ket(&[
        phase(-4.0 * PI / 21.0) * re(nv),
        phase(17.0 * PI / 21.0) * re(nv),
        phase(PI / 5.0) * re(2.0 * 2f64.sqrt() * nv),
        re(0.0),
    ]);
    let rho2 = &HermitianOperator::rank_one(&v, 5.0 / 46.0) + &HermitianOperator::rank_one(&w, 41.0 / 46.0);
    (rho1, rho2)
}

/// `(p1 ρ1, (1 − p1) ρ2)` with default tolerances.
pub fn weighted(rho1: &HermitianOperator, rho2: &HermitianOperator, p1: f64) -> WeightedDensityPair {
    WeightedDensityPair::from_states(rho1, rho2, p1, ToleranceContext::default()).expect("valid prior")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_proper, success_probability};

    #[test]
    fn peres_measurement_is_usd_but_not_proper() {
        let s = peres_pair();
        let m = peres_non_proper_measurement();
        assert!(m.is_usd(&s));
        assert!(!is_proper(&m, &s));
        assert!((success_probability(&m, &s) - peres_success()).abs() < 1e-12);
    }

    #[test]
    fn example_states_are_unit_trace_rank_two() {
        let tol = ToleranceContext::default();
        for (r1, r2) in [example1_states(), example2_states()] {
            for r in [&r1, &r2] {
                assert!((r.trace() - 1.0).abs() < 1e-12);
                assert_eq!(r.rank(&tol), 2);
                assert!(r.is_psd(&tol));
            }
        }
    }
}
