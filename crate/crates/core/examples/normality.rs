//! Which quadratic signals `α a² + β a†a + γ a†² + δ` are normal.
//!
//! Only normal operators can drive the amplifiers; the others are rejected
//! before any unitary is built.
//!
//! `cargo run --example normality`

use nlamp::amplifiers::{quadratic_signal_op, AmplifierSpec};
use nlamp::fock::{guarded_levels, FockSpace, C64};

fn main() -> nlamp::Result<()> {
    let s = FockSpace::new(12)?;
    let keep: Vec<usize> = guarded_levels(12).collect();
    let c = |re: f64| C64::new(re, 0.0);
    let cases = [
        ("x²", c(0.5), c(1.0), c(0.5), c(0.5)),
        ("p²", c(-0.5), c(1.0), c(-0.5), c(0.5)),
        ("a†a", c(0.0), c(1.0), c(0.0), c(0.0)),
        ("a²", c(1.0), c(0.0), c(0.0), c(0.0)),
        ("a² + a†a", c(1.0), c(1.0), c(0.0), c(0.0)),
    ];
    for (name, a, b, g, d) in cases {
        let q = quadratic_signal_op(s, a, b, g, d);
        let brute = q.op.commutator(&q.op.adjoint())?.restricted_max_abs(&keep);
        let accepted = AmplifierSpec::TwoModeNormal { f: q.op.clone(), g: 1.0 }.validate().is_ok();
        println!("{name:<10} normal {:<5} guarded |[f,f†]| {brute:.1e}  amplifier accepts: {accepted}", q.is_normal);
    }
    Ok(())
}
