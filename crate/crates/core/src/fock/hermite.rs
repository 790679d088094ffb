use super::operator::C64;
use super::state::{State, StateData};
use crate::error::{Error, Result};

/// `h_0(x), …, h_{n-1}(x)`, the position-space Fock wavefunctions.
///
/// Uses the three-term recurrence on the normalized functions themselves, which
/// stays finite for large `n` where the bare polynomials overflow.
pub fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n);
    if n == 0 {
        return h;
    }
    h.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n > 1 {
        h.push(std::f64::consts::SQRT_2 * x * h[0]);
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

fn single_mode(state: &State) -> Result<usize> {
    match state.dims() {
        [d] => Ok(*d),
        _ => Err(Error::DimensionMismatch {
            expected: state.dims().first().copied().unwrap_or(0),
            got: state.dim(),
        }),
    }
}

/// `⟨x|ψ⟩` on the grid for a ket; the diagonal `⟨x|ρ|x⟩` (as a real-valued
/// complex number) for a density matrix.
pub fn quadrature_amplitudes(state: &State, grid: &[f64]) -> Result<Vec<C64>> {
    let dim = single_mode(state)?;
    Ok(grid
        .iter()
        .map(|&x| {
            let h = hermite_functions(dim, x);
            match state.data() {
                StateData::Ket(c) => c.iter().zip(&h).map(|(c, h)| c * *h).sum(),
                StateData::Density(rho) => {
                    let mut t = C64::new(0.0, 0.0);
                    for m in 0..dim {
                        for n in 0..dim {
                            t += rho[(m, n)] * h[m] * h[n];
                        }
                    }
                    C64::new(t.re, 0.0)
                }
            }
        })
        .collect())
}

/// `⟨x|ρ|x⟩` on the grid.
pub fn quadrature_density(state: &State, grid: &[f64]) -> Result<Vec<f64>> {
    let amps = quadrature_amplitudes(state, grid)?;
    Ok(match state.data() {
        StateData::Ket(_) => amps.iter().map(|z| z.norm_sqr()).collect(),
        StateData::Density(_) => amps.iter().map(|z| z.re).collect(),
    })
}
