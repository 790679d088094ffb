//! The single-mode amplifier with `f(x) = x²`.
//!
//! Squeezing by `r` stretches `x` and suppresses the vacuum contribution to
//! `p`, so `Var p_out` approaches `2g² Var f(x)`.
//!
//! `cargo run --release --example single_mode`

use nlamp::amplifiers::{single_mode_operators, single_mode_output_moments, SignalFunction};
use nlamp::fock::{guarded_levels, make_state, quadrature_ops, variance, FockSpace, Operator, StateKind};

fn main() -> nlamp::Result<()> {
    let dim = 48;
    let f = SignalFunction::Polynomial(vec![0.0, 0.0, 1.0]);
    let (x, _) = quadrature_ops(FockSpace::new(dim)?);
    let xx = x.mul(&x)?;
    let input = make_state(FockSpace::new(dim)?, StateKind::Fock { n: 1 })?;
    let keep: Vec<usize> = guarded_levels(dim).collect();
    for r in [0.0, 1.0, 3.0] {
        let g = 1.0;
        let m = single_mode_output_moments(&f, g, r, &input)?;
        let ops = single_mode_operators(&f, g, r, dim)?;
        let comm = ops.a_out.commutator(&ops.a_out.adjoint())?;
        println!(
            "r={r}: Var p_out {:.6}, 2g²Var x² {:.6}, excess {:.2e}, guarded |[a,a†] − 1| {:.1e}",
            m.quad_noises.1,
            2.0 * g * g * variance(&input, &xx)?,
            m.added_noise,
            comm.restricted_distance(&Operator::identity(vec![dim]), &keep)?
        );
    }
    Ok(())
}
