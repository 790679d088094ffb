//! Added noise against gain for the nonlinear and linear amplifiers.
//!
//! The nonlinear amplifier adds half a quantum whatever the gain or input;
//! the linear one adds `(g² − 1)/2`.
//!
//! `cargo run --release --example noise_sweep`

use nlamp::amplifiers::{predict_output_moments, prepare_meters, simulate_output_moments, AmplifierSpec};
use nlamp::fock::{make_state, number_op, FockSpace, StateKind};

fn main() -> nlamp::Result<()> {
    let n = number_op(FockSpace::new(8)?);
    let input = make_state(FockSpace::new(8)?, StateKind::Fock { n: 2 })?;
    let lin_input = make_state(FockSpace::new(20)?, StateKind::Fock { n: 1 })?;
    let vac20 = make_state(FockSpace::new(20)?, StateKind::vacuum())?;

    println!("{:>5} {:>14} {:>14} {:>14}", "g", "nonlinear", "predicted", "linear");
    for g in [0.5, 1.0, 1.5, 2.0, 4.0] {
        let spec = AmplifierSpec::TwoModeNormal { f: n.clone(), g };
        let meters = prepare_meters(&spec, &[StateKind::vacuum()])?;
        let sim = simulate_output_moments(&spec, &input, &meters)?;
        let pred = predict_output_moments(&spec, &input, &meters)?;
        let lin = if g >= 1.0 {
            let m = simulate_output_moments(&AmplifierSpec::Linear { g }, &lin_input, std::slice::from_ref(&vac20))?;
            format!("{:14.9}", m.added_noise)
        } else {
            format!("{:>14}", "-")
        };
        println!("{g:>5} {:14.9} {:14.9} {lin}", sim.added_noise, pred.added_noise);
    }
    Ok(())
}
