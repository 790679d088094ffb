//! Three routes to the two-mode amplifier unitary.
//!
//! The dense exponential of the generator, the factored product of
//! displacements, and the block form built from the eigenbasis of `f` agree
//! on every column whose meter displacement stays clear of the cutoff.
//!
//! `cargo run --release --example zassenhaus`

use nlamp::amplifiers::{guarded_columns, two_mode_unitary, two_mode_unitary_dense, two_mode_unitary_factored};
use nlamp::fock::{number_op, FockSpace};

fn main() -> nlamp::Result<()> {
    let f = number_op(FockSpace::new(6)?);
    for g in [0.5, 1.0, 2.0] {
        let block = two_mode_unitary(&f, g, 30)?;
        let keep = guarded_columns(&block, 1e-9);
        let dense = two_mode_unitary_dense(&f, g, 30)?;
        let fact = two_mode_unitary_factored(&f, g, 30)?;
        let blk = block.to_operator()?;
        println!(
            "g={g}: {:>3} guarded columns, |dense − factored| = {:.2e}, |dense − block| = {:.2e}, unitarity {:.1e}",
            keep.len(),
            dense.column_distance(&fact, &keep)?,
            dense.column_distance(&blk, &keep)?,
            blk.unitarity_residual()
        );
    }
    Ok(())
}
