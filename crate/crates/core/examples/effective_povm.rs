//! The POVM induced on the signal by heterodyne detection of the meter.
//!
//! The numeric route propagates every basis state through the amplifier and
//! integrates the detector elements; the closed form is a Gaussian record per
//! eigenvalue of `f`.
//!
//! `cargo run --release --example effective_povm [out.csv]`

use std::fs::File;

use nlamp::amplifiers::{prepare_meters, AmplifierSpec};
use nlamp::fock::{normal_decompose, number_op, FockSpace, StateKind};
use nlamp::measurement::{effective_povm_closed_form, effective_povm_numeric, ClosedFormModel, DetectorSpec, GridSpec};

fn main() -> nlamp::Result<()> {
    let f = number_op(FockSpace::new(4)?);
    let d = normal_decompose(&f, None)?;
    let grid = GridSpec::default();
    for (g, eta) in [(1.0, 1.0), (2.0, 0.5)] {
        let spec = AmplifierSpec::TwoModeNormal { f: f.clone(), g };
        let meters = prepare_meters(&spec, &[StateKind::vacuum()])?;
        let det = DetectorSpec::heterodyne(eta)?;
        let num = effective_povm_numeric(&spec, &meters, &det, &grid)?;
        let cf = effective_povm_closed_form(&d, g, det.sigma2(), ClosedFormModel::Heterodyne, &grid)?;
        println!(
            "g={g} η={eta}: {} outcomes, width {:.4}, |numeric − closed| = {:.2e}, identity residual {:.2e}, min eigenvalue {:.1e}",
            num.len(),
            cf.width,
            num.max_deviation(&cf)?,
            num.identity_residual(),
            num.min_eigenvalue()?
        );
        if let Some(path) = std::env::args().nth(1) {
            cf.write_csv(File::create(&path)?)?;
            println!("wrote {path}");
        }
    }
    Ok(())
}
