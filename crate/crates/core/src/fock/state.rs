use faer::Mat;
use serde::{Deserialize, Serialize};

use super::operator::{Operator, C64};
use super::space::FockSpace;
use super::spectral::hermitian_eigen;
use crate::error::{invalid, Error, Result};

const NORM_TOL: f64 = 1e-12;
/// Probability mass a preparation may lose to the cutoff before it is rejected.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;
/// Occupancy of the top three levels above which a preparation is logged as suspicious.
pub const TOP_LEVEL_WARNING: f64 = 1e-8;

#[derive(Clone, Debug)]
pub enum StateData {
    Ket(Vec<C64>),
    Density(Mat<C64>),
}

/// Normalized ket or density matrix on one mode or a product of modes.
#[derive(Clone, Debug)]
pub struct State {
    dims: Vec<usize>,
    data: StateData,
}

impl State {
    pub fn from_ket(dims: Vec<usize>, ket: Vec<C64>) -> Result<Self> {
        let side: usize = dims.iter().product();
        if ket.len() != side {
            return Err(Error::DimensionMismatch {
                expected: side,
                got: ket.len(),
            });
        }
        let norm: f64 = ket.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL || !norm.is_finite() {
            return Err(invalid("ket", format!("norm² = {norm}, expected 1")));
        }
        Ok(Self {
            dims,
            data: StateData::Ket(ket),
        })
    }

    /// Builds a ket and rescales it to unit norm.
    pub fn normalized_ket(dims: Vec<usize>, mut ket: Vec<C64>) -> Result<Self> {
        let norm: f64 = ket.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(invalid("ket", "zero or non-finite norm"));
        }
        ket.iter_mut().for_each(|c| *c /= norm);
        Self::from_ket(dims, ket)
    }

    pub fn from_density(dims: Vec<usize>, rho: Mat<C64>) -> Result<Self> {
        let op = Operator::new(dims.clone(), rho)?;
        let tr = op.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(invalid("density", format!("trace = {tr}, expected 1")));
        }
        let herm = op.hermiticity_residual();
        if herm > NORM_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let eig = hermitian_eigen(op.matrix())?;
        let min = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(invalid("density", format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self {
            dims,
            data: StateData::Density(op.into_matrix()),
        })
    }

    pub(crate) fn density_unchecked(dims: Vec<usize>, rho: Mat<C64>) -> Self {
        Self {
            dims,
            data: StateData::Density(rho),
        }
    }

    pub(crate) fn ket_unchecked(dims: Vec<usize>, ket: Vec<C64>) -> Self {
        Self {
            dims,
            data: StateData::Ket(ket),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn is_pure_ket(&self) -> bool {
        matches!(self.data, StateData::Ket(_))
    }

    pub fn ket(&self) -> Option<&[C64]> {
        match &self.data {
            StateData::Ket(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn to_density(&self) -> Mat<C64> {
        match &self.data {
            StateData::Ket(v) => Mat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj()),
            StateData::Density(m) => m.clone(),
        }
    }

    pub fn into_density_state(self) -> State {
        let rho = self.to_density();
        State {
            dims: self.dims,
            data: StateData::Density(rho),
        }
    }

    /// Pure components `(weight, ket)`: the state itself for a ket, the
    /// eigen-decomposition of `ρ` (weights above 1e-14) otherwise.
    pub fn components(&self) -> Result<Vec<(f64, Vec<C64>)>> {
        match &self.data {
            StateData::Ket(v) => Ok(vec![(1.0, v.clone())]),
            StateData::Density(rho) => {
                let e = hermitian_eigen(rho)?;
                let n = rho.nrows();
                Ok(e.values
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 1e-14)
                    .map(|(k, &w)| (w, (0..n).map(|i| e.vectors[(i, k)]).collect()))
                    .collect())
            }
        }
    }

    /// Diagonal of the density matrix in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        match &self.data {
            StateData::Ket(v) => v.iter().map(|c| c.norm_sqr()).collect(),
            StateData::Density(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    /// `|⟨self|other⟩|²` for kets, `Tr[ρσ]` otherwise (equal to the fidelity when one is pure).
    pub fn overlap(&self, other: &State) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        match (&self.data, &other.data) {
            (StateData::Ket(a), StateData::Ket(b)) => {
                let s: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                Ok(s.norm_sqr())
            }
            _ => {
                let a = self.to_density();
                let b = other.to_density();
                let n = a.nrows();
                let mut t = C64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        t += a[(i, j)] * b[(j, i)];
                    }
                }
                Ok(t.re)
            }
        }
    }
}

/// Single-mode preparations used as signal inputs and meter states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateKind {
    Fock { n: usize },
    Coherent { re: f64, im: f64 },
    /// Squeezed vacuum `S(r, φ)|0⟩`; `φ = 0` squeezes `x`, giving `Var[x] = e^{-2r}/2`.
    SqueezedVacuum { r: f64, phi: f64 },
    /// Gaussian position wavefunction `e^{-x²/2ε²}/(πε²)^{1/4}`; `ε = 1` is the vacuum.
    GaussianMeter { epsilon: f64 },
}

impl StateKind {
    pub fn vacuum() -> Self {
        StateKind::Fock { n: 0 }
    }

    pub fn coherent(alpha: C64) -> Self {
        StateKind::Coherent {
            re: alpha.re,
            im: alpha.im,
        }
    }
}

/// A prepared state together with the probability mass kept under the cutoff
/// before renormalization.
#[derive(Clone, Debug)]
pub struct Preparation {
    pub state: State,
    pub retained_mass: f64,
}

pub fn make_state(space: FockSpace, kind: StateKind) -> Result<State> {
    Ok(prepare_state(space, kind)?.state)
}

pub fn prepare_state(space: FockSpace, kind: StateKind) -> Result<Preparation> {
    let dim = space.dim();
    let coeffs = match kind {
        StateKind::Fock { n } => {
            if n >= dim {
                return Err(Error::Truncation(format!(
                    "Fock level {n} does not fit in dimension {dim}"
                )));
            }
            let mut v = vec![C64::new(0.0, 0.0); dim];
            v[n] = C64::new(1.0, 0.0);
            v
        }
        StateKind::Coherent { re, im } => coherent_coefficients(C64::new(re, im), dim),
        StateKind::SqueezedVacuum { r, phi } => {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(invalid("r", "squeezing must be finite and non-negative"));
            }
            squeezed_coefficients(r, phi, dim)
        }
        StateKind::GaussianMeter { epsilon } => {
            if !(epsilon > 0.0) || !epsilon.is_finite() {
                return Err(invalid("epsilon", "meter width must be positive"));
            }
            // signed squeezing: ε < 1 squeezes x, ε > 1 anti-squeezes it
            squeezed_coefficients(-epsilon.ln(), 0.0, dim)
        }
    };
    let retained: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if 1.0 - retained > TRUNCATION_TOLERANCE {
        return Err(Error::Truncation(format!(
            "{kind:?} loses {:.3e} of its mass at dimension {dim}",
            1.0 - retained
        )));
    }
    let top: f64 = coeffs[dim.saturating_sub(3)..]
        .iter()
        .map(|c| c.norm_sqr())
        .sum();
    if top > TOP_LEVEL_WARNING {
        log::warn!("{kind:?}: top-level occupancy {top:.2e} at dimension {dim}");
    }
    let state = State::normalized_ket(vec![dim], coeffs)?;
    Ok(Preparation {
        state,
        retained_mass: retained,
    })
}

/// `e^{-|α|²/2} αⁿ/√n!` for `n < dim`, unnormalized on the truncation.
pub(crate) fn coherent_coefficients(alpha: C64, dim: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(dim);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v.push(c);
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        v.push(c);
    }
    v
}

/// Exact squeezed-vacuum amplitudes on even levels, unnormalized on the truncation.
/// Negative `r` anti-squeezes `x`.
fn squeezed_coefficients(r: f64, phi: f64, dim: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    let ratio = -C64::from_polar(1.0, 2.0 * phi) * r.tanh();
    let mut c = C64::new(1.0 / r.cosh().sqrt(), 0.0);
    let mut n = 0usize;
    while 2 * n < dim {
        v[2 * n] = c;
        n += 1;
        // √((2n)!)/(2ⁿ n!) ratio between consecutive even levels
        c = c * ratio * (((2 * n - 1) as f64) / ((2 * n) as f64)).sqrt();
    }
    v
}
