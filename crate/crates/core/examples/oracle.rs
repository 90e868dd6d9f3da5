//! The interior-point oracle against the constructive solver, and the
//! uniqueness probe with a deliberately sloppy configuration as contrast.

use usd::instances::{example2_states, weighted};
use usd::oracle::{oracle_optimize, uniqueness_probe, OracleConfig};
use usd::pipeline::dispatch;

fn main() -> usd::Result<()> {
    let (rho1, rho2) = example2_states();
    let s = weighted(&rho1, &rho2, 0.7);
    let solved = dispatch(&s)?;
    let cfg = OracleConfig { restarts: 4, ..OracleConfig::default() };
    let o = oracle_optimize(&s, &cfg)?;
    println!("solver  {:.12} ({})", solved.success, solved.branch);
    println!("oracle  {:.12} (gap bound {:.1e}, {} Newton steps)", o.success, o.gap_bound, o.newton_steps);
    println!("E? distance {:.2e}", (o.e_q_opt.matrix() - solved.measurement.e_inconclusive.matrix()).norm());

    let tight = uniqueness_probe(&s, &cfg)?;
    let loose = uniqueness_probe(&s, &OracleConfig { restarts: 4, ..OracleConfig::loose(1) })?;
    println!("probe: unique {} (spread {:.1e})", tight.unique, tight.max_distance);
    println!("loose probe: unique {} (spread {:.1e})", loose.unique, loose.max_distance);
    Ok(())
}
