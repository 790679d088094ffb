//! The three-mode amplifier with squeezed meters.
//!
//! Reading both meter positions gives one Gaussian record per complex
//! eigenvalue of `f`; squeezing the meters narrows it.
//!
//! `cargo run --release --example three_mode`

use nlamp::amplifiers::{prepare_meters, simulate_output_moments, AmplifierSpec};
use nlamp::fock::{make_state, normal_decompose, number_op, FockSpace, StateKind, C64};
use nlamp::measurement::{effective_povm_closed_form, ClosedFormModel, DetectorSpec, GridSpec};

fn main() -> nlamp::Result<()> {
    let f = number_op(FockSpace::new(4)?).scale(C64::new(1.0, 1.0));
    let d = normal_decompose(&f, None)?;
    let s2 = DetectorSpec::homodyne(1.0)?.sigma2();
    for r in [0.0f64, 0.5, 1.0, 2.0] {
        let model = ClosedFormModel::ThreeMode { epsilon: (-r).exp() };
        let p = effective_povm_closed_form(&d, 2.0, s2, model, &GridSpec::default())?;
        println!("r={r}: record width {:.5} at g=2", p.width);
    }

    let input = make_state(FockSpace::new(4)?, StateKind::Fock { n: 1 })?;
    for g in [0.5, 1.0] {
        let spec = AmplifierSpec::ThreeMode { f: f.clone(), g };
        let meters = prepare_meters(&spec, &[StateKind::vacuum(), StateKind::vacuum()])?;
        let m = simulate_output_moments(&spec, &input, &meters)?;
        println!("g={g}: added noise {:.6}", m.added_noise);
    }
    Ok(())
}
