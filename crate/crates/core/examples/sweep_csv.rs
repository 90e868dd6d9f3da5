//! A sweep over the prior written as CSV to stdout, with the class
//! transitions on stderr.

use usd::instances::example1_states;
use usd::pipeline::{class_boundaries, sweep, uniform_grid, write_csv, ProblemFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (rho1, rho2) = example1_states();
    let problem = ProblemFile::from_states(&rho1, &rho2, None);
    let rows = sweep(&problem, &uniform_grid(0.01, 0.99, 50)?)?;
    write_csv(&rows, std::io::stdout().lock())?;
    for b in class_boundaries(&rows) {
        eprintln!("{} -> {} between {:.4} and {:.4}", b.from, b.to, b.after, b.before);
    }
    Ok(())
}
