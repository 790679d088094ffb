use super::operator::{Operator, C64};
use super::state::{State, StateData};
use crate::error::{Error, Result};

fn check(state: &State, op: &Operator) -> Result<()> {
    if state.dims() != op.dims() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: op.dim(),
        });
    }
    Ok(())
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `⟨O⟩`
pub fn expectation(state: &State, op: &Operator) -> Result<C64> {
    check(state, op)?;
    Ok(match state.data() {
        StateData::Ket(v) => dot(v, &op.apply(v)),
        StateData::Density(rho) => {
            let n = op.dim();
            let mut t = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    t += rho[(i, j)] * op.get(j, i);
                }
            }
            t
        }
    })
}

/// `⟨|ΔO|²⟩ = ½⟨OO† + O†O⟩ − |⟨O⟩|²`
pub fn symmetrized_moment(state: &State, op: &Operator) -> Result<f64> {
    check(state, op)?;
    let mean = expectation(state, op)?;
    let sym = match state.data() {
        StateData::Ket(v) => {
            let ov: f64 = op.apply(v).iter().map(|c| c.norm_sqr()).sum();
            let odv: f64 = op.adjoint().apply(v).iter().map(|c| c.norm_sqr()).sum();
            0.5 * (ov + odv)
        }
        StateData::Density(_) => {
            let od = op.adjoint();
            let s = op.mul(&od)?.add(&od.mul(op)?)?;
            0.5 * expectation(state, &s)?.re
        }
    };
    Ok(sym - mean.norm_sqr())
}

/// `⟨O²⟩ − ⟨O⟩²` for Hermitian `O`, computed without symmetrizing.
pub fn variance(state: &State, op: &Operator) -> Result<f64> {
    check(state, op)?;
    let mean = expectation(state, op)?.re;
    let second = match state.data() {
        StateData::Ket(v) => {
            let ov = op.apply(v);
            dot(&ov, &ov).re
        }
        StateData::Density(_) => expectation(state, &op.mul(op)?)?.re,
    };
    Ok(second - mean * mean)
}

/// Ladder moments of one mode of a (possibly composite) state, evaluated with
/// the truncated operators. Every field is linear in the state, so mixtures
/// can be averaged field by field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModeMoments {
    /// `⟨a⟩`
    pub a: C64,
    /// `⟨a²⟩`
    pub a2: C64,
    /// `⟨a†a⟩`
    pub n: f64,
    /// `⟨a a†⟩`, which differs from `⟨a†a⟩ + 1` only through top-level occupancy
    pub aad: f64,
    /// Occupancy of the top three levels.
    pub top: f64,
}

impl ModeMoments {
    pub fn scaled(self, w: f64) -> Self {
        Self {
            a: self.a * w,
            a2: self.a2 * w,
            n: self.n * w,
            aad: self.aad * w,
            top: self.top * w,
        }
    }

    pub fn sum(self, o: Self) -> Self {
        Self {
            a: self.a + o.a,
            a2: self.a2 + o.a2,
            n: self.n + o.n,
            aad: self.aad + o.aad,
            top: self.top + o.top,
        }
    }

    /// `⟨|Δa|²⟩`
    pub fn symmetrized_noise(&self) -> f64 {
        0.5 * (self.n + self.aad) - self.a.norm_sqr()
    }

    /// `(⟨x⟩, ⟨p⟩)`
    pub fn quad_means(&self) -> (f64, f64) {
        let s = std::f64::consts::SQRT_2;
        (s * self.a.re, s * self.a.im)
    }

    /// `(Var x, Var p)`
    pub fn quad_variances(&self) -> (f64, f64) {
        let (mx, mp) = self.quad_means();
        let half = 0.5 * (self.n + self.aad);
        (half + self.a2.re - mx * mx, half - self.a2.re - mp * mp)
    }
}

/// [`ModeMoments`] of mode `slot`.
pub fn mode_moments(state: &State, slot: usize) -> Result<ModeMoments> {
    let dims = state.dims();
    if slot >= dims.len() {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            got: slot,
        });
    }
    let d = dims[slot];
    let stride: usize = dims[slot + 1..].iter().product();
    let level = |idx: usize| (idx / stride) % d;
    let side = state.dim();
    let mut m = ModeMoments::default();
    let sq = |k: usize| (k as f64).sqrt();
    match state.data() {
        StateData::Ket(v) => {
            for (idx, &c) in v.iter().enumerate() {
                let k = level(idx);
                let p = c.norm_sqr();
                if p == 0.0 {
                    continue;
                }
                m.n += k as f64 * p;
                if k + 1 < d {
                    m.aad += (k + 1) as f64 * p;
                }
                if k + 3 >= d {
                    m.top += p;
                }
                // a|k⟩ = √k |k−1⟩, so ⟨a⟩ pairs ψ(k−1)* with ψ(k)
                if k >= 1 {
                    m.a += v[idx - stride].conj() * c * sq(k);
                }
                if k >= 2 {
                    m.a2 += v[idx - 2 * stride].conj() * c * sq(k) * sq(k - 1);
                }
            }
        }
        StateData::Density(rho) => {
            for idx in 0..side {
                let k = level(idx);
                let p = rho[(idx, idx)].re;
                m.n += k as f64 * p;
                if k + 1 < d {
                    m.aad += (k + 1) as f64 * p;
                }
                if k + 3 >= d {
                    m.top += p;
                }
                if k >= 1 {
                    m.a += rho[(idx, idx - stride)] * sq(k);
                }
                if k >= 2 {
                    m.a2 += rho[(idx, idx - 2 * stride)] * sq(k) * sq(k - 1);
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation_op, make_state, number_op, quadrature_ops, FockSpace, StateKind};

    #[test]
    fn vacuum_ladder_moment_is_half() {
        let s = FockSpace::new(10).unwrap();
        let v = make_state(s, StateKind::vacuum()).unwrap();
        let a = annihilation_op(s);
        assert!((symmetrized_moment(&v, &a).unwrap() - 0.5).abs() < 1e-14);
        let (x, _) = quadrature_ops(s);
        assert!((expectation(&v, &x.mul(&x).unwrap()).unwrap().re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fock_state_has_no_number_noise() {
        let s = FockSpace::new(10).unwrap();
        let st = make_state(s, StateKind::Fock { n: 2 }).unwrap();
        assert!(symmetrized_moment(&st, &number_op(s)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn coherent_number_variance_is_poissonian() {
        let s = FockSpace::new(32).unwrap();
        let alpha = 2f64.sqrt();
        let st = make_state(s, StateKind::coherent(C64::new(alpha, 0.0))).unwrap();
        let got = symmetrized_moment(&st, &number_op(s)).unwrap();
        // Fock-sum oracle from Poisson probabilities
        let lam = alpha * alpha;
        let mut p = (-lam).exp();
        let (mut m1, mut m2) = (0.0, 0.0);
        for n in 0..200 {
            if n > 0 {
                p *= lam / n as f64;
            }
            m1 += n as f64 * p;
            m2 += (n * n) as f64 * p;
        }
        assert!((got - (m2 - m1 * m1)).abs() < 1e-6);
    }

    #[test]
    fn ladder_moments_match_dense_operators() {
        use crate::fock::{embed, tensor_states};
        let s = FockSpace::new(12).unwrap();
        let u = make_state(s, StateKind::coherent(C64::new(0.4, 0.3))).unwrap();
        let w = make_state(s, StateKind::SqueezedVacuum { r: 0.3, phi: 0.4 }).unwrap();
        let both = tensor_states(&[&u, &w]).unwrap();
        let a = annihilation_op(s);
        for (slot, st) in [(0usize, &both), (1, &both)] {
            let m = mode_moments(st, slot).unwrap();
            let ea = embed(&a, slot, &[12, 12]).unwrap();
            assert!((m.a - expectation(st, &ea).unwrap()).norm() < 1e-13);
            assert!((m.symmetrized_noise() - symmetrized_moment(st, &ea).unwrap()).abs() < 1e-12);
            let (x, p) = quadrature_ops(s);
            let (vx, vp) = m.quad_variances();
            assert!((vx - variance(st, &embed(&x, slot, &[12, 12]).unwrap()).unwrap()).abs() < 1e-12);
            assert!((vp - variance(st, &embed(&p, slot, &[12, 12]).unwrap()).unwrap()).abs() < 1e-12);
            let md = mode_moments(&st.clone().into_density_state(), slot).unwrap();
            assert!((md.a2 - m.a2).norm() < 1e-13 && (md.n - m.n).abs() < 1e-13);
        }
    }

    #[test]
    fn density_and_ket_paths_agree() {
        let s = FockSpace::new(12).unwrap();
        let st = make_state(s, StateKind::coherent(C64::new(0.7, -0.4))).unwrap();
        let rho = st.clone().into_density_state();
        let a = annihilation_op(s);
        let d1 = symmetrized_moment(&st, &a).unwrap();
        let d2 = symmetrized_moment(&rho, &a).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
        let (x, _) = quadrature_ops(s);
        assert!((variance(&st, &x).unwrap() - variance(&rho, &x).unwrap()).abs() < 1e-12);
    }
}
