//! Decision regions and how sharply each eigenvalue of `f` is resolved.
//!
//! Each outcome is assigned to the eigenvalue whose record is most likely;
//! the weight a record puts on its own region tends to one as the gain grows.
//!
//! `cargo run --example decision_regions`

use nlamp::fock::{normal_decompose, number_op, FockSpace};
use nlamp::measurement::{
    coarse_grain, effective_povm_closed_form, own_region_weights, ClosedFormModel, DecisionRegions, GridSpec,
};

fn main() -> nlamp::Result<()> {
    let d = normal_decompose(&number_op(FockSpace::new(4)?), None)?;
    for g in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let p = effective_povm_closed_form(&d, g, 0.0, ClosedFormModel::Heterodyne, &GridSpec::default())?;
        let regions = DecisionRegions::from_povm(&p);
        let w = own_region_weights(&p, &regions)?;
        let coarse = coarse_grain(&p, &regions)?;
        let shown: Vec<String> = w.iter().map(|x| format!("{x:.6}")).collect();
        println!("g={g:<4} {} regions, own-region weights [{}], {} coarse elements", regions.len(), shown.join(", "), coarse.len());
    }
    Ok(())
}
