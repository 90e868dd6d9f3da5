//! Two equiprobable pure qubit states: the optimal measurement and a
//! non-proper measurement with the same success probability.

use usd::instances::{peres_non_proper_measurement, peres_pair};
use usd::model::{is_proper, success_probability};
use usd::pipeline::dispatch;

fn main() -> usd::Result<()> {
    let s = peres_pair();
    let out = dispatch(&s)?;
    println!("optimal success   {:.15}", out.success);
    println!("closed form       {:.15}", 1.0 - 1.0 / 2f64.sqrt());
    println!("branch {} class {} optimal {}", out.branch, out.class_tag, out.is_optimal());

    let m = peres_non_proper_measurement();
    println!(
        "non-proper: usd {} proper {} success {:.15}",
        m.is_usd(&s),
        is_proper(&m, &s),
        success_probability(&m, &s)
    );
    Ok(())
}
