//! Operational optimality test and the dual certificate, on an optimal
//! measurement and on a slightly worse one.

use usd::instances::{example1_states, weighted};
use usd::linalg::{c64, CMatrix, HermitianOperator};
use usd::model::UsdMeasurement;
use usd::optimality::{build_certificate, check_optimality};
use usd::pipeline::dispatch;

fn main() -> usd::Result<()> {
    let (rho1, rho2) = example1_states();
    let s = weighted(&rho1, &rho2, 0.35);
    let out = dispatch(&s)?;
    let z = build_certificate(&out.measurement, &s)?;
    println!("{} {} optimal {}", out.branch, out.class_tag, check_optimality(&out.measurement, &s)?.is_optimal);
    println!("certificate residual {:.2e}, V1 condition {:.2e}", z.residuals.max(), z.v1_condition);

    // Mixing in the trivial measurement keeps it valid but loses success.
    let eps = 1e-3;
    let m = &out.measurement;
    let e_q = HermitianOperator::from_hermitian_part(
        m.e_inconclusive.matrix() * c64(1.0 - eps, 0.0) + CMatrix::identity(4, 4) * c64(eps, 0.0),
    );
    let worse = UsdMeasurement::new(m.e1.scaled(1.0 - eps), m.e2.scaled(1.0 - eps), e_q);
    let report = check_optimality(&worse, &s)?;
    println!("perturbed: usd {} optimal {}", worse.is_usd(&s), report.is_optimal);
    for v in report.violations() {
        println!("  {v}");
    }
    Ok(())
}
