use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{normal_decompose, Operator, SpectralDecomposition, C64};

/// Real function of the position quadrature for the single-mode amplifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFunction {
    /// `Σ_k c_k x^k`
    Polynomial(Vec<f64>),
    /// Piecewise-linear interpolation through `(x, y)` points sorted by `x`,
    /// held constant beyond the ends.
    Table(Vec<(f64, f64)>),
}

impl SignalFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SignalFunction::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            SignalFunction::Table(pts) => {
                let Some(first) = pts.first() else { return 0.0 };
                let last = pts[pts.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = pts.partition_point(|p| p.0 <= x);
                let (x0, y0) = pts[k - 1];
                let (x1, y1) = pts[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SignalFunction::Polynomial(c) if c.iter().all(|v| v.is_finite()) => Ok(()),
            SignalFunction::Polynomial(_) => Err(invalid("f", "non-finite polynomial coefficient")),
            SignalFunction::Table(pts) => {
                if pts.is_empty() {
                    return Err(invalid("f", "empty function table"));
                }
                if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(invalid("f", "table abscissae must be strictly increasing"));
                }
                Ok(())
            }
        }
    }
}

/// The amplifier variants. `f` lives on the signal mode only.
#[derive(Clone, Debug)]
pub enum AmplifierSpec {
    /// Phase-preserving two-mode squeezer with amplitude gain `g ≥ 1`; `g = 1` is the identity.
    Linear { g: f64 },
    /// `exp(g(f b† − f† b))` for normal `f`.
    TwoModeNormal { f: Operator, g: f64 },
    /// `exp(−i√2 g f p_b)` for Hermitian `f`.
    VonNeumann { f: Operator, g: f64 },
    /// `exp(−i g (f_R p_b + f_I p_c))` for normal `f = (f_R + i f_I)/√2`.
    ThreeMode { f: Operator, g: f64 },
    /// Squeeze by `r` then kick `p` by `√2 g f(x)` on a single mode.
    SingleMode { f: SignalFunction, g: f64, r: f64 },
}

/// Normality is tested at `1e-9·max|f|`, mirroring [`normal_decompose`].
pub(crate) fn normality_tol(f: &Operator) -> f64 {
    1e-9 * f.max_abs().max(f64::MIN_POSITIVE)
}

impl AmplifierSpec {
    pub fn gain(&self) -> f64 {
        match self {
            AmplifierSpec::Linear { g }
            | AmplifierSpec::TwoModeNormal { g, .. }
            | AmplifierSpec::VonNeumann { g, .. }
            | AmplifierSpec::ThreeMode { g, .. }
            | AmplifierSpec::SingleMode { g, .. } => *g,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AmplifierSpec::Linear { .. } => "linear",
            AmplifierSpec::TwoModeNormal { .. } => "two_mode",
            AmplifierSpec::VonNeumann { .. } => "von_neumann",
            AmplifierSpec::ThreeMode { .. } => "three_mode",
            AmplifierSpec::SingleMode { .. } => "single_mode",
        }
    }

    /// Number of meter modes coupled to the signal.
    pub fn meter_count(&self) -> usize {
        match self {
            AmplifierSpec::SingleMode { .. } => 0,
            AmplifierSpec::ThreeMode { .. } => 2,
            _ => 1,
        }
    }

    pub fn signal_op(&self) -> Option<&Operator> {
        match self {
            AmplifierSpec::TwoModeNormal { f, .. }
            | AmplifierSpec::VonNeumann { f, .. }
            | AmplifierSpec::ThreeMode { f, .. } => Some(f),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gain();
        if !g.is_finite() {
            return Err(Error::GainOutOfRange(g));
        }
        match self {
            AmplifierSpec::Linear { g } => {
                if *g < 1.0 {
                    return Err(Error::GainOutOfRange(*g));
                }
            }
            AmplifierSpec::TwoModeNormal { f, g } | AmplifierSpec::ThreeMode { f, g } => {
                check_gain(*g)?;
                single_mode_op(f)?;
                let c = f.normality_residual();
                if !(c < normality_tol(f)) {
                    return Err(Error::NotNormal(c));
                }
            }
            AmplifierSpec::VonNeumann { f, g } => {
                check_gain(*g)?;
                single_mode_op(f)?;
                let h = f.hermiticity_residual();
                if !(h < normality_tol(f)) {
                    return Err(Error::NotHermitian(h));
                }
            }
            AmplifierSpec::SingleMode { f, g, r } => {
                check_gain(*g)?;
                if !(*r >= 0.0) || !r.is_finite() {
                    return Err(invalid("r", "squeezing must be finite and non-negative"));
                }
                f.validate()?;
            }
        }
        Ok(())
    }

    /// Spectral decomposition of the signal operator, when there is one.
    pub fn decompose(&self) -> Result<Option<SpectralDecomposition>> {
        self.validate()?;
        match self.signal_op() {
            Some(f) => Ok(Some(normal_decompose(f, None)?)),
            None => Ok(None),
        }
    }
}

fn check_gain(g: f64) -> Result<()> {
    if g < 0.0 {
        return Err(Error::GainOutOfRange(g));
    }
    Ok(())
}

fn single_mode_op(f: &Operator) -> Result<()> {
    if f.dims().len() != 1 {
        return Err(invalid("f", "signal operator must act on a single mode"));
    }
    Ok(())
}

/// Result of [`quadratic_signal_op`].
#[derive(Clone, Debug)]
pub struct QuadraticSignal {
    pub op: Operator,
    /// `||α|² − |γ|²| < tol` and `|αβ* − βγ*| < tol`.
    pub is_normal: bool,
}

/// `f = α a² + β a†a + γ a†² + δ`.
///
/// The flag is decided from the coefficients alone, with `tol = 1e-9` scaled
/// by the largest coefficient magnitude.
pub fn quadratic_signal_op(
    space: crate::fock::FockSpace,
    alpha: C64,
    beta: C64,
    gamma: C64,
    delta: C64,
) -> QuadraticSignal {
    let n = space.dim();
    let sq = |k: usize| (k as f64).sqrt();
    let op = Operator::from_fn(vec![n], |i, j| {
        let mut z = C64::new(0.0, 0.0);
        if j == i + 2 {
            z += alpha * sq(j) * sq(j - 1);
        }
        if i == j + 2 {
            z += gamma * sq(i) * sq(i - 1);
        }
        if i == j {
            z += beta * i as f64 + delta;
        }
        z
    });
    let scale = [alpha, beta, gamma].iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale * scale;
    let is_normal = (alpha.norm_sqr() - gamma.norm_sqr()).abs() < tol
        && (alpha * beta.conj() - beta * gamma.conj()).norm() < tol;
    QuadraticSignal { op, is_normal }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{quadrature_ops, FockSpace};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn x_squared_from_quadratic_family() {
        let s = FockSpace::new(10).unwrap();
        let q = quadratic_signal_op(s, c(0.5, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0));
        assert!(q.is_normal);
        let (x, _) = quadrature_ops(s);
        let x2 = x.mul(&x).unwrap();
        // truncated x² differs from the quadratic form only in the top level
        let keep: Vec<usize> = (0..9).collect();
        assert!(q.op.restricted_distance(&x2, &keep).unwrap() < 1e-12);
    }

    #[test]
    fn pure_squeeze_term_is_not_normal() {
        let s = FockSpace::new(10).unwrap();
        let q = quadratic_signal_op(s, c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(!q.is_normal);
        assert!(q.op.normality_residual() > 1.0);
    }

    #[test]
    fn diagonal_quadratic_is_normal() {
        let s = FockSpace::new(10).unwrap();
        let q = quadratic_signal_op(s, c(0.0, 0.0), c(2.0, 1.0), c(0.0, 0.0), c(0.0, 7.0));
        assert!(q.is_normal);
        assert!(q.op.normality_residual() < 1e-12);
    }

    #[test]
    fn table_interpolates() {
        let t = SignalFunction::Table(vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(t.eval(0.5), 0.5);
        assert_eq!(t.eval(-3.0), 1.0);
        let p = SignalFunction::Polynomial(vec![1.0, 0.0, 2.0]);
        assert_eq!(p.eval(2.0), 9.0);
    }

    #[test]
    fn gain_gates() {
        assert!(matches!(
            AmplifierSpec::Linear { g: 0.5 }.validate(),
            Err(Error::GainOutOfRange(_))
        ));
        assert!(AmplifierSpec::Linear { g: 1.0 }.validate().is_ok());
        let s = FockSpace::new(4).unwrap();
        let a = crate::fock::annihilation_op(s);
        assert!(matches!(
            AmplifierSpec::TwoModeNormal { f: a.clone(), g: 1.0 }.validate(),
            Err(Error::NotNormal(_))
        ));
        assert!(matches!(
            AmplifierSpec::VonNeumann { f: a, g: 1.0 }.validate(),
            Err(Error::NotHermitian(_))
        ));
    }
}
