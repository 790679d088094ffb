//! Nonlinear against linear photon counting on a coherent input.
//!
//! `cargo run --release --example compare_schemes`

use nlamp::estimators::compare_schemes;
use nlamp::fock::{make_state, FockSpace, StateKind, C64};

fn main() -> nlamp::Result<()> {
    let input = make_state(FockSpace::new(20)?, StateKind::coherent(C64::new(1.0, 0.0)))?;
    for (g, eta) in [(0.4, 1.0), (1.0, 1.0), (2.0, 0.8)] {
        let c = compare_schemes(&input, g, eta, 40_000, 7)?;
        println!(
            "g={g} η={eta}: Var nonlinear {:.4} (excess {:.4}), Var linear {:.4} (excess {:.4}), improvement {}",
            c.nonlinear.variance, c.nonlinear_excess, c.linear.variance, c.linear_excess, c.improvement
        );
    }
    Ok(())
}
