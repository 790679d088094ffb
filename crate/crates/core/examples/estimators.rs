//! Seeded Monte Carlo estimation of photon number.
//!
//! `cargo run --release --example estimators`

use nlamp::amplifiers::AmplifierSpec;
use nlamp::estimators::{heterodyne_record_power, run_linear_number_estimation, run_nonlinear_estimation, TrialPlan};
use nlamp::fock::{make_state, number_op, FockSpace, StateKind};
use nlamp::measurement::DetectorSpec;

fn main() -> nlamp::Result<()> {
    let s = FockSpace::new(12)?;
    let input = make_state(s, StateKind::Fock { n: 2 })?;
    for g in [1.0, 3.0] {
        let spec = AmplifierSpec::VonNeumann { f: number_op(s), g };
        let plan = TrialPlan::nonlinear(spec, input.clone(), DetectorSpec::homodyne(1.0)?, 50_000, 42);
        let r = run_nonlinear_estimation(&plan)?;
        println!(
            "nonlinear g={g}: mean {:.4} ± {:.4} (analytic {:.4}), variance {:.4} ± {:.4} (analytic {:.4})",
            r.mean, r.standard_error_of_each.mean, r.analytic_mean, r.variance, r.standard_error_of_each.variance, r.analytic_variance
        );

        let plan = TrialPlan::linear(g, input.clone(), DetectorSpec::heterodyne(1.0)?, 50_000, 42);
        let r = run_linear_number_estimation(&plan)?;
        println!(
            "linear    g={g}: mean {:.4} ± {:.4} (analytic {:.4}), variance {:.4} ± {:.4} (analytic {:.4})",
            r.mean, r.standard_error_of_each.mean, r.analytic_mean, r.variance, r.standard_error_of_each.variance, r.analytic_variance
        );
        let p = heterodyne_record_power(&plan)?;
        println!("          E|α|² = {:.4} ± {:.4} (analytic {:.4})", p.mean, p.standard_error, p.analytic);
    }
    Ok(())
}
