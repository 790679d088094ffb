//! Phase-preserving linear amplifier evolved sector by sector.
//!
//! `exp[r(a†b† − ab)]` conserves `n_a − n_b`, so each difference sector is a
//! chain `|m + Δ⁺, m + Δ⁻⟩` on which the generator is tridiagonal. Chains are
//! lengthened until the amplified state no longer reaches the top levels.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::fock::C64;

/// Largest per-mode dimension the chain evolution will grow to.
pub const MAX_LINEAR_DIM: usize = 3000;
const TOP_TOL: f64 = 1e-14;

/// Amplified ket on `(dim, dim)`, with the chosen `dim`.
pub struct LinearEvolution {
    pub dim: usize,
    pub ket: Vec<C64>,
}

/// Evolves a two-mode ket given on `(dim_a, dim_b)` under the amplifier with gain `g ≥ 1`.
pub fn evolve_linear(g: f64, psi: &[C64], dim_a: usize, dim_b: usize) -> Result<LinearEvolution> {
    if !(g >= 1.0) || !g.is_finite() {
        return Err(Error::GainOutOfRange(g));
    }
    if psi.len() != dim_a * dim_b {
        return Err(Error::DimensionMismatch {
            expected: dim_a * dim_b,
            got: psi.len(),
        });
    }
    let r = g.acosh();
    let mut dim = 2 * dim_a.max(dim_b) + 16;
    loop {
        let ket = evolve_at(r, psi, dim_a, dim_b, dim)?;
        let mut top = 0.0;
        for na in 0..dim {
            for nb in 0..dim {
                if na + 3 >= dim || nb + 3 >= dim {
                    top += ket[na * dim + nb].norm_sqr();
                }
            }
        }
        if top < TOP_TOL {
            return Ok(LinearEvolution { dim, ket });
        }
        if dim >= MAX_LINEAR_DIM {
            return Err(Error::Truncation(format!(
                "linear amplifier output still occupies the top levels ({top:.2e}) at dimension {dim}"
            )));
        }
        dim = (dim * 3 / 2).min(MAX_LINEAR_DIM);
    }
}

fn evolve_at(r: f64, psi: &[C64], dim_a: usize, dim_b: usize, dim: usize) -> Result<Vec<C64>> {
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    let lo = -(dim_b as isize - 1);
    let hi = dim_a as isize - 1;
    for delta in lo..=hi {
        let (sa, sb) = if delta >= 0 {
            (delta as usize, 0)
        } else {
            (0, (-delta) as usize)
        };
        let len = dim - sa.max(sb);
        let mut v: Vec<C64> = (0..len)
            .map(|m| {
                let (na, nb) = (m + sa, m + sb);
                if na < dim_a && nb < dim_b {
                    psi[na * dim_b + nb]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        if v.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            continue;
        }
        // With Φ = diag(i^m) the chain generator i·r(a†b† − ab) becomes the real
        // symmetric T with off-diagonal −r√((n_a+1)(n_b+1)); exp = Φ† e^{−iT} Φ.
        let t = Mat::<f64>::from_fn(len, len, |i, j| {
            let m = i.min(j);
            if i.abs_diff(j) == 1 {
                -r * (((m + sa + 1) * (m + sb + 1)) as f64).sqrt()
            } else {
                0.0
            }
        });
        let e = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        let s = e.S().column_vector();
        let u = e.U();
        let phase = |m: usize| match m % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        for (m, vm) in v.iter_mut().enumerate() {
            *vm *= phase(m);
        }
        let mut w = vec![C64::new(0.0, 0.0); len];
        for (k, wk) in w.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (m, vm) in v.iter().enumerate() {
                acc += *vm * u[(m, k)];
            }
            *wk = acc * C64::from_polar(1.0, -s[k]);
        }
        for m in 0..len {
            let mut acc = C64::new(0.0, 0.0);
            for (k, wk) in w.iter().enumerate() {
                acc += *wk * u[(m, k)];
            }
            out[(m + sa) * dim + (m + sb)] = acc * phase(m).conj();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplifiers::linear_amp_unitary;
    use crate::fock::{make_state, tensor_states, FockSpace, StateKind};

    #[test]
    fn chains_match_dense_squeezer() {
        // chain truncation differs from the square truncation, so compare on
        // an input whose output stays far below both cutoffs
        let s = FockSpace::new(6).unwrap();
        let a = make_state(s, StateKind::coherent(C64::new(0.3, 0.1))).unwrap();
        let b = make_state(s, StateKind::vacuum()).unwrap();
        let input = tensor_states(&[&a, &b]).unwrap();
        let g = 1.05;
        let ev = evolve_linear(g, input.ket().unwrap(), 6, 6).unwrap();
        let d = 24;
        let mut padded = vec![C64::new(0.0, 0.0); d * d];
        for (k, z) in input.ket().unwrap().iter().enumerate() {
            padded[(k / 6) * d + k % 6] = *z;
        }
        let dense = linear_amp_unitary(g, d, d).unwrap();
        let want = dense.apply(&padded);
        for na in 0..8 {
            for nb in 0..8 {
                let x = ev.ket[na * ev.dim + nb];
                let y = want[na * d + nb];
                assert!((x - y).norm() < 1e-8, "({na},{nb}) {x} {y}");
            }
        }
    }

    #[test]
    fn norm_is_preserved() {
        let s = FockSpace::new(20).unwrap();
        let a = make_state(s, StateKind::Fock { n: 3 }).unwrap();
        let b = make_state(s, StateKind::vacuum()).unwrap();
        let input = tensor_states(&[&a, &b]).unwrap();
        let ev = evolve_linear(2.0, input.ket().unwrap(), 20, 20).unwrap();
        let n: f64 = ev.ket.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }
}
