//! Ranges of the prior in which single-state detection and the fidelity form
//! are optimal, and the two routes to the fidelity-form inconclusive operator.

use usd::closed_form::{
    fidelity_bound, fidelity_inconclusive, fidelity_inconclusive_factored, fidelity_window, gamma1_detection_window,
    single_detection_window, try_fidelity_form,
};
use usd::instances::{example2_states, weighted};
use usd::linalg::ToleranceContext;

fn main() -> usd::Result<()> {
    let tol = ToleranceContext::default();
    let (rho1, rho2) = example2_states();
    for w in [
        single_detection_window(&rho1, &rho2, &tol)?,
        fidelity_window(&rho1, &rho2, &tol)?,
        gamma1_detection_window(&rho1, &rho2, &tol)?,
    ] {
        println!("{:<22?} [{:.6}, {:.6}] empty {}", w.kind, w.lower, w.upper, w.empty);
    }

    let s = weighted(&rho1, &rho2, 0.4);
    let direct = fidelity_inconclusive(&s)?;
    let factored = fidelity_inconclusive_factored(&s)?;
    println!("routes differ by  {:.2e}", (direct.matrix() - factored.matrix()).norm());
    let out = try_fidelity_form(&s)?.expect("p1 = 0.4 lies in the fidelity window");
    println!("success {:.12}, bound {:.12}, class {}", out.success, fidelity_bound(&s)?, out.class_tag);
    Ok(())
}
