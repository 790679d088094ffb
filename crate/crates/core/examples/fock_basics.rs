//! Ladder operators, states and moments on a truncated Fock space.
//!
//! `cargo run --example fock_basics`

use nlamp::fock::{
    annihilation_op, creation_op, expectation, guarded_levels, make_state, mode_moments, partial_trace,
    quadrature_ops, tensor_states, variance, FockSpace, Operator, StateKind, C64,
};

fn main() -> nlamp::Result<()> {
    let s = FockSpace::new(16)?;
    let a = annihilation_op(s);
    let ad = creation_op(s);
    let id = Operator::identity(vec![16]);
    let keep: Vec<usize> = guarded_levels(16).collect();

    // [a, a†] = 1 fails only in the top row, so compare on the guarded block
    let comm = a.commutator(&ad)?;
    println!("full |[a,a†] − 1|    = {:.1}", comm.distance(&id)?);
    println!("guarded |[a,a†] − 1| = {:.3e}  ({} of 16 levels)", comm.restricted_distance(&id, &keep)?, keep.len());

    let (x, p) = quadrature_ops(s);
    let vac = make_state(s, StateKind::vacuum())?;
    println!("vacuum Var x = {:.6}, Var p = {:.6}", variance(&vac, &x)?, variance(&vac, &p)?);

    let sq = make_state(s, StateKind::SqueezedVacuum { r: 0.5, phi: 0.0 })?;
    println!("squeezed r=0.5 Var x = {:.6} (e^-1/2 = {:.6})", variance(&sq, &x)?, (-1.0f64).exp() / 2.0);

    let coh = make_state(s, StateKind::coherent(C64::new(1.0, 0.5)))?;
    let m = mode_moments(&coh, 0)?;
    println!("coherent (1+0.5i): <a> = {:.6}, <n> = {:.6}", expectation(&coh, &a)?, m.n);

    let pair = tensor_states(&[&coh, &vac])?;
    let back = partial_trace(&pair, &[0])?;
    println!("trace out the vacuum: <n> = {:.6}", mode_moments(&back, 0)?.n);
    Ok(())
}
