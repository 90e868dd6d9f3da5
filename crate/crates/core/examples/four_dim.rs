//! The four-dimensional solver: candidates of each rank-one family with the
//! reason each of them was kept or discarded.

use usd::instances::{example1_states, weighted};
use usd::solver4d::{
    enumerate_candidates_11, enumerate_candidates_12, finalize_candidate_11, finalize_candidate_12, solve_4d, Host,
    Verdict,
};

fn show(label: &str, v: &Verdict) {
    match v {
        Verdict::Accepted(_) => println!("  {label}: accepted"),
        Verdict::Rejected(r) => println!("  {label}: {r:?}"),
    }
}

fn main() -> usd::Result<()> {
    let (rho1, rho2) = example1_states();
    for p1 in [0.2, 0.4, 0.6] {
        let s = weighted(&rho1, &rho2, p1);
        println!("p1 = {p1}");
        for host in [Host::Gamma1, Host::Gamma2] {
            let en = enumerate_candidates_12(&s, host)?;
            for c in &en.candidates {
                show(&format!("{} x = {:?}", host.branch(), c.x), &finalize_candidate_12(c, &s)?);
            }
        }
        match enumerate_candidates_11(&s) {
            Ok(en) => {
                for c in &en.candidates {
                    show(&format!("class_11 {:?}", c.origin), &finalize_candidate_11(c, &s)?);
                }
            }
            Err(e) => println!("  class_11: {e}"),
        }
        let out = solve_4d(&s)?;
        println!("  -> {} {} success {:.12}", out.branch, out.class_tag, out.success);
    }
    Ok(())
}
