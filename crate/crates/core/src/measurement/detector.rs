use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{hermite_functions, FockSpace, Operator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Heterodyne,
    Homodyne,
}

/// A heterodyne or homodyne detector with efficiency `η ∈ (0, 1]`.
///
/// The inefficiency is modelled as Gaussian smearing of the ideal outcome,
/// with `σ² = (1−η)/η` for heterodyne and `σ² = (1−η)/(4η)` for homodyne.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    #[serde(default = "unit_efficiency")]
    pub efficiency: f64,
}

fn unit_efficiency() -> f64 {
    1.0
}

impl DetectorSpec {
    pub fn heterodyne(efficiency: f64) -> Result<Self> {
        let d = Self {
            kind: DetectorKind::Heterodyne,
            efficiency,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn homodyne(efficiency: f64) -> Result<Self> {
        let d = Self {
            kind: DetectorKind::Homodyne,
            efficiency,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid("efficiency", format!("{eta} is outside (0, 1]")));
        }
        Ok(())
    }

    pub fn sigma2(&self) -> f64 {
        let eta = self.efficiency;
        match self.kind {
            DetectorKind::Heterodyne => (1.0 - eta) / eta,
            DetectorKind::Homodyne => (1.0 - eta) / (4.0 * eta),
        }
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(0.0);
    for k in 1..=n {
        v.push(v[k - 1] + (k as f64).ln());
    }
    v
}

/// Smeared heterodyne matrix with no cutoff check.
///
/// `⟨n+d|M_β|n⟩ = P √(n!/(n+d)!) c^d Q_n` with `P = e^{−|β|²/(1+σ²)}/(π(1+σ²))`,
/// `c = β/(1+σ²)`, and `Q_n = τⁿ L_n^{(d)}(−|c|²/τ)`, `τ = σ²/(1+σ²)`, built
/// from the Laguerre recurrence in log scale so large `|β|` cannot overflow.
/// Entries are exact, so any leading block of the infinite matrix is correct.
pub(crate) fn heterodyne_matrix(beta: C64, sigma2: f64, dim: usize) -> Mat<C64> {
    let q = 1.0 + sigma2;
    let log_p = -beta.norm_sqr() / q - (PI * q).ln();
    let c = beta / q;
    let s = c.norm_sqr();
    let tau = sigma2 / q;
    let lf = ln_factorials(dim);
    let ln_c = c.norm().ln();
    let phase = C64::from_polar(1.0, c.arg());
    let mut m = Mat::<C64>::zeros(dim, dim);
    const RESCALE: f64 = 1e150;
    for d in 0..dim {
        if d > 0 && s == 0.0 {
            break;
        }
        let ph = phase.powi(d as i32);
        let lead = log_p + if d > 0 { d as f64 * ln_c } else { 0.0 };
        let (mut q_prev, mut q_cur, mut log_scale) = (0.0f64, 1.0f64, 0.0f64);
        for n in 0..dim - d {
            if n == 1 {
                q_prev = 1.0;
                q_cur = (1.0 + d as f64) * tau + s;
            } else if n > 1 {
                let k = (n - 1) as f64;
                let next = (((2.0 * k + 1.0 + d as f64) * tau + s) * q_cur
                    - (k + d as f64) * tau * tau * q_prev)
                    / (k + 1.0);
                q_prev = q_cur;
                q_cur = next;
                if q_cur > RESCALE {
                    q_prev /= RESCALE;
                    q_cur /= RESCALE;
                    log_scale += RESCALE.ln();
                }
            }
            if q_cur <= 0.0 {
                continue;
            }
            let ln_mag = lead + 0.5 * (lf[n] - lf[n + d]) + q_cur.ln() + log_scale;
            let v = ph * ln_mag.exp();
            m[(n + d, n)] = v;
            m[(n, n + d)] = v.conj();
        }
    }
    m
}

/// Heterodyne POVM density at outcome `β` with detector smearing `σ²`.
///
/// `σ² = 0` gives the coherent projector `|β⟩⟨β|/π`. Otherwise the element is
/// the coherent projector averaged over a complex Gaussian of variance `σ²`
/// around `β`, normalized so that `∫M_β d²β = I` (which fixes the prefactor
/// at `1/(π²σ²)`).
pub fn heterodyne_element(beta: C64, sigma2: f64, space: FockSpace) -> Result<Operator> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(invalid("sigma2", "smearing must be finite and non-negative"));
    }
    let dim = space.dim();
    if beta.norm_sqr() > dim as f64 / 2.0 {
        return Err(Error::Truncation(format!(
            "|β|² = {:.3} exceeds half the dimension {dim}",
            beta.norm_sqr()
        )));
    }
    Operator::new(vec![dim], heterodyne_matrix(beta, sigma2, dim))
}

/// Quadrature step of the homodyne smearing integral.
pub const HOMODYNE_STEP: f64 = 0.005;
/// Half-width of the smearing window in units of `σ`.
pub const HOMODYNE_WINDOW: f64 = 8.0;

/// Nodes and weights for `∫K_σ(x − y) g(y) dy`, trapezoid on `x ± 8σ`.
pub(crate) fn smearing_nodes(x: f64, sigma2: f64) -> Vec<(f64, f64)> {
    if sigma2 == 0.0 {
        return vec![(x, 1.0)];
    }
    let sigma = sigma2.sqrt();
    let h = HOMODYNE_STEP.min(sigma / 8.0);
    let k = (HOMODYNE_WINDOW * sigma / h).ceil() as i64;
    let norm = 1.0 / (PI.sqrt() * sigma);
    (-k..=k)
        .map(|j| {
            let y = x + j as f64 * h;
            let w = if j.abs() == k { 0.5 * h } else { h };
            (y, w * norm * (-((y - x) * (y - x)) / sigma2).exp())
        })
        .collect()
}

/// Homodyne POVM density for the position quadrature at outcome `x`.
///
/// `⟨m|M_x|n⟩ = ∫K_σ(x − y) h_m(y) h_n(y) dy` with the normalized Gaussian
/// kernel `K_σ(u) = e^{−u²/σ²}/(√π σ)`, integrated by the trapezoid rule at
/// step [`HOMODYNE_STEP`] over `x ± 8σ`. With `σ² = 0` this is the density
/// `h_m(x) h_n(x)`, not a projector.
pub fn homodyne_element(x: f64, sigma2: f64, space: FockSpace) -> Result<Operator> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(invalid("sigma2", "smearing must be finite and non-negative"));
    }
    let dim = space.dim();
    Operator::new(vec![dim], homodyne_matrix(x, sigma2, dim))
}

pub(crate) fn homodyne_matrix(x: f64, sigma2: f64, dim: usize) -> Mat<C64> {
    let mut acc = vec![0.0f64; dim * dim];
    for (y, w) in smearing_nodes(x, sigma2) {
        let h = hermite_functions(dim, y);
        for m in 0..dim {
            let hm = w * h[m];
            for n in m..dim {
                acc[m * dim + n] += hm * h[n];
            }
        }
    }
    Mat::from_fn(dim, dim, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        C64::new(acc[a * dim + b], 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Direct double sum over the Gaussian-averaged coherent projector.
    fn heterodyne_oracle(beta: C64, sigma2: f64, m: usize, n: usize) -> C64 {
        let q = 1.0 + sigma2;
        let p = (-beta.norm_sqr() / q).exp() / (PI * q);
        let c = beta / q;
        let tau = sigma2 / q;
        let mut t = C64::new(0.0, 0.0);
        for k in 0..=m.min(n) {
            let coef = (factorial(m) * factorial(n)).sqrt()
                / (factorial(k) * factorial(m - k) * factorial(n - k));
            t += c.powu((m - k) as u32) * c.conj().powu((n - k) as u32) * coef * tau.powi(k as i32);
        }
        t * p
    }

    #[test]
    fn closed_form_matches_double_sum() {
        for &(beta, s2) in &[
            (C64::new(0.3, -0.7), 0.0),
            (C64::new(0.3, -0.7), 1.0),
            (C64::new(-1.2, 0.4), 0.25),
            (C64::new(0.0, 0.0), 3.0),
        ] {
            let m = heterodyne_matrix(beta, s2, 10);
            for i in 0..10 {
                for j in 0..10 {
                    let want = heterodyne_oracle(beta, s2, i, j);
                    assert!((m[(i, j)] - want).norm() < 1e-13, "{beta} {s2} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn vacuum_overlap_normalization() {
        let s = FockSpace::new(16).unwrap();
        let m = heterodyne_element(C64::new(0.0, 0.0), 1.0, s).unwrap();
        assert!((m.get(0, 0).re * PI * 2.0 - 1.0).abs() < 1e-8);
        let ideal = heterodyne_element(C64::new(0.0, 0.0), 0.0, s).unwrap();
        assert!((ideal.get(0, 0).re - 1.0 / PI).abs() < 1e-15);
        assert!(ideal.get(1, 1).norm() == 0.0);
    }

    #[test]
    fn heterodyne_resolves_identity() {
        let h = 0.1;
        let mut acc = Operator::zeros(vec![10]);
        for i in -60i32..=60 {
            for j in -60i32..=60 {
                let b = C64::new(i as f64 * h, j as f64 * h);
                if b.norm() > 6.0 {
                    continue;
                }
                let m = heterodyne_matrix(b, 0.5, 10);
                acc = acc.add(&Operator::new(vec![10], m).unwrap().scale(C64::new(h * h, 0.0))).unwrap();
            }
        }
        assert!(acc.distance(&Operator::identity(vec![10])).unwrap() < 1e-3);
    }

    #[test]
    fn large_shift_stays_finite() {
        let m = heterodyne_matrix(C64::new(25.0, 10.0), 0.7, 200);
        for i in 0..200 {
            for j in 0..200 {
                assert!(m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite());
            }
        }
        assert!(heterodyne_element(C64::new(3.0, 0.0), 0.0, FockSpace::new(16).unwrap()).is_err());
    }

    #[test]
    fn homodyne_vacuum_density() {
        let s = FockSpace::new(12).unwrap();
        let m = homodyne_element(0.0, 0.0, s).unwrap();
        assert!((m.get(0, 0).re - PI.powf(-0.5)).abs() < 1e-14);
        // smeared vacuum: Gaussian with variance 1/2 + σ²/2
        let s2 = 0.25;
        let var = 0.5 + s2 / 2.0;
        for &x in &[0.0, 0.4, -1.3] {
            let m = homodyne_element(x, s2, s).unwrap();
            let want = (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            assert!((m.get(0, 0).re - want).abs() < 1e-9);
        }
    }

    #[test]
    fn homodyne_resolves_identity() {
        let h = 0.005;
        let mut acc = vec![0.0f64; 144];
        for k in -2000i32..=2000 {
            let x = k as f64 * h;
            let w = if k.abs() == 2000 { 0.5 * h } else { h };
            let m = homodyne_matrix(x, 0.25, 12);
            for i in 0..12 {
                for j in 0..12 {
                    acc[i * 12 + j] += w * m[(i, j)].re;
                }
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((acc[i * 12 + j] - t).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn smearing_widths() {
        let het = DetectorSpec::heterodyne(0.5).unwrap();
        let hom = DetectorSpec::homodyne(0.5).unwrap();
        assert_eq!(het.sigma2(), 1.0);
        assert_eq!(hom.sigma2(), 0.25);
        assert_eq!(DetectorSpec::homodyne(1.0).unwrap().sigma2(), 0.0);
        assert!(DetectorSpec::heterodyne(0.0).is_err());
        assert!(DetectorSpec::heterodyne(1.5).is_err());
    }
}
