//! A pair whose supports share a direction and each contain a direction
//! orthogonal to the other state. Reducing, solving the core and lifting back
//! recovers the optimum of the full problem.

use usd::linalg::{HermitianOperator, ToleranceContext};
use usd::model::{success_probability, WeightedDensityPair};
use usd::pipeline::{dispatch, reduction_summary};
use usd::random::{random_density_in, seeded};
use usd::reductions::{is_strictly_skew, lift_measurement, reduce_fully};

fn main() -> usd::Result<()> {
    let mut rng = seeded(3);
    let basis = usd::random::random_unitary(&mut rng, 6);
    // supp ρ1 = span(u0, u1 + u2, u4), supp ρ2 = span(u0, u1, u5).
    let mut v1 = basis.columns(0, 3).into_owned();
    v1.set_column(1, &((basis.column(1) + basis.column(2)) * usd::linalg::c64(0.5f64.sqrt(), 0.0)));
    v1.set_column(2, &basis.column(4));
    let mut v2 = basis.columns(0, 3).into_owned();
    v2.set_column(2, &basis.column(5));
    let rho1: HermitianOperator = random_density_in(&mut rng, &v1, 3);
    let rho2: HermitianOperator = random_density_in(&mut rng, &v2, 3);
    let s = WeightedDensityPair::from_states(&rho1, &rho2, 0.4, ToleranceContext::default())?;

    println!("strictly skew: {}", is_strictly_skew(&s));
    let summary = reduction_summary(&s)?;
    println!(
        "common support {}, orthogonal parts {:?}, reduced support {} with ranks {:?}",
        summary.common_support_dim, summary.orthogonal_dims, summary.reduced_support_dim, summary.reduced_ranks
    );

    let rec = reduce_fully(&s)?;
    let core = dispatch(&rec.reduced_pair)?;
    let lifted = lift_measurement(&core.measurement, &rec)?;
    println!("core success      {:.12} ({})", core.success, core.branch);
    println!("free success      {:.12}", rec.lifted_offset);
    println!("lifted success    {:.12}", success_probability(&lifted, &s));
    println!("direct dispatch   {:.12}", dispatch(&s)?.success);
    Ok(())
}
