use faer::Mat;

use super::kernel::quadrature_kernel;
use super::moments::MomentReport;
use super::spec::SignalFunction;
use crate::error::{invalid, Error, Result};
use crate::fock::{
    annihilation_op, mode_moments, quadrature_ops, symmetrized_moment, unitary_from_generator,
    variance, FockSpace, Operator, State, C64,
};

impl SignalFunction {
    /// An antiderivative, zero at the origin for polynomials and at the first
    /// abscissa for tables.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match self {
            SignalFunction::Polynomial(c) => c
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * x + ck / (k + 1) as f64)
                * x,
            SignalFunction::Table(pts) => {
                let (x0, y0) = pts[0];
                if x <= x0 {
                    return y0 * (x - x0);
                }
                let mut total = 0.0;
                for w in pts.windows(2) {
                    let ((xa, ya), (xb, yb)) = (w[0], w[1]);
                    if x <= xa {
                        return total;
                    }
                    let hi = x.min(xb);
                    let yh = ya + (yb - ya) * (hi - xa) / (xb - xa);
                    total += 0.5 * (ya + yh) * (hi - xa);
                    if x <= xb {
                        return total;
                    }
                }
                let (xl, yl) = pts[pts.len() - 1];
                total + yl * (x - xl)
            }
        }
    }
}

/// Heisenberg-picture output operators of the single-mode amplifier.
#[derive(Clone, Debug)]
pub struct SingleModeOps {
    /// `f(x)` by functional calculus on the truncated `x`.
    pub f_x: Operator,
    /// `e^r x`
    pub x_out: Operator,
    /// `√2 g f(x) + e^{−r} p`
    pub p_out: Operator,
    /// `(x_out + i p_out)/√2 = i g f(x) + cosh r a + sinh r a†`
    pub a_out: Operator,
}

fn check_single_mode(g: f64, r: f64) -> Result<()> {
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::GainOutOfRange(g));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(invalid("r", "squeezing must be finite and non-negative"));
    }
    Ok(())
}

/// `h(x)` for real `h`, via the eigensystem of truncated `x`.
pub fn function_of_x(dim: usize, h: impl Fn(f64) -> C64) -> Result<Operator> {
    let k = quadrature_kernel(dim)?;
    let hv: Vec<C64> = k.values.iter().map(|&l| h(l)).collect();
    let left = Mat::from_fn(dim, dim, |i, j| hv[j] * k.vectors[(i, j)]);
    let right = Mat::from_fn(dim, dim, |i, j| C64::new(k.vectors[(j, i)], 0.0));
    Operator::new(vec![dim], &left * &right)
}

pub fn single_mode_operators(f: &SignalFunction, g: f64, r: f64, dim: usize) -> Result<SingleModeOps> {
    check_single_mode(g, r)?;
    let space = FockSpace::new(dim)?;
    let (x, p) = quadrature_ops(space);
    let f_x = function_of_x(dim, |l| C64::new(f.eval(l), 0.0))?;
    let x_out = x.scale(C64::new(r.exp(), 0.0));
    let p_out = f_x
        .scale(C64::new(std::f64::consts::SQRT_2 * g, 0.0))
        .add(&p.scale(C64::new((-r).exp(), 0.0)))?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a_out = x_out.scale(C64::new(s, 0.0)).add(&p_out.scale(C64::new(0.0, s)))?;
    Ok(SingleModeOps {
        f_x,
        x_out,
        p_out,
        a_out,
    })
}

/// Output moments from the Heisenberg operators, cross term included.
pub fn single_mode_output_moments(
    f: &SignalFunction,
    g: f64,
    r: f64,
    input: &State,
) -> Result<MomentReport> {
    let dim = match input.dims() {
        [d] => *d,
        _ => return Err(invalid("input", "single-mode amplifier takes a one-mode state")),
    };
    let ops = single_mode_operators(f, g, r, dim)?;
    let mx = crate::fock::expectation(input, &ops.x_out)?.re;
    let mp = crate::fock::expectation(input, &ops.p_out)?.re;
    let vx = variance(input, &ops.x_out)?;
    let vp = variance(input, &ops.p_out)?;
    let signal = 2.0 * g * g * variance(input, &ops.f_x)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(MomentReport {
        mean_out: C64::new(mx * s, mp * s),
        symmetrized_noise: symmetrized_moment(input, &ops.a_out)?,
        quad_means: (mx, mp),
        quad_noises: (vx, vp),
        signal_noise: signal,
        added_noise: vp - signal,
    })
}

/// `U = S(r) K` where `K = exp(−i h(x))` kicks `p` by `√2 g e^r f(x)` and
/// `S(r) = exp[(r/2)(a†² − a²)]` stretches `x` by `e^r`.
pub fn single_mode_unitary(f: &SignalFunction, g: f64, r: f64, dim: usize) -> Result<Operator> {
    check_single_mode(g, r)?;
    let c = -std::f64::consts::SQRT_2 * g * r.exp();
    let kick = function_of_x(dim, |l| C64::from_polar(1.0, -c * f.antiderivative(l)))?;
    let a = annihilation_op(FockSpace::new(dim)?);
    let a2 = a.mul(&a)?;
    let gen = a2.adjoint().sub(&a2)?.scale(C64::new(0.0, 0.5 * r));
    let h = gen.add(&gen.adjoint())?.scale(C64::new(0.5, 0.0));
    let squeeze = unitary_from_generator(&h, 1.0)?;
    squeeze.mul(&kick)
}

/// Moments read off the evolved single-mode state.
pub(crate) fn single_mode_simulated(
    f: &SignalFunction,
    g: f64,
    r: f64,
    input: &State,
) -> Result<(State, MomentReport)> {
    let dim = input.dim();
    let u = single_mode_unitary(f, g, r, dim)?;
    let out = match input.ket() {
        Some(v) => State::normalized_ket(vec![dim], u.apply(v))?,
        None => {
            let rho = Operator::new(vec![dim], input.to_density())?;
            let m = u.mul(&rho)?.mul(&u.adjoint())?;
            State::from_density(vec![dim], m.into_matrix())?
        }
    };
    let mm = mode_moments(&out, 0)?;
    if mm.top > 1e-6 {
        return Err(Error::Truncation(format!(
            "single-mode output occupies the top levels ({:.2e})",
            mm.top
        )));
    }
    let f_x = function_of_x(dim, |l| C64::new(f.eval(l), 0.0))?;
    let signal = 2.0 * g * g * variance(input, &f_x)?;
    let (vx, vp) = mm.quad_variances();
    let report = MomentReport {
        mean_out: mm.a,
        symmetrized_noise: mm.symmetrized_noise(),
        quad_means: mm.quad_means(),
        quad_noises: (vx, vp),
        signal_noise: signal,
        added_noise: vp - signal,
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{guarded_levels, make_state, StateKind};

    fn x2() -> SignalFunction {
        SignalFunction::Polynomial(vec![0.0, 0.0, 1.0])
    }

    #[test]
    fn vacuum_mean_kick() {
        let s = FockSpace::new(24).unwrap();
        let v = make_state(s, StateKind::vacuum()).unwrap();
        let m = single_mode_output_moments(&x2(), 2.0, 0.0, &v).unwrap();
        assert!((m.quad_means.1 - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn commutator_holds_on_guarded_levels() {
        let ops = single_mode_operators(&x2(), 1.3, 0.7, 32).unwrap();
        let c = ops.a_out.commutator(&ops.a_out.adjoint()).unwrap();
        let keep: Vec<usize> = guarded_levels(32).collect();
        let id = Operator::identity(vec![32]);
        assert!(c.restricted_distance(&id, &keep).unwrap() < 1e-7);
    }

    #[test]
    fn unitary_route_matches_heisenberg_moments() {
        // the cubic kick spreads the state over many levels, so the Fock
        // route converges slowly in the cutoff
        let s = FockSpace::new(96).unwrap();
        for kind in [StateKind::Fock { n: 1 }, StateKind::coherent(C64::new(0.4, 0.2))] {
            let st = make_state(s, kind).unwrap();
            let want = single_mode_output_moments(&x2(), 0.4, 0.3, &st).unwrap();
            let (_, got) = single_mode_simulated(&x2(), 0.4, 0.3, &st).unwrap();
            assert!((want.quad_means.0 - got.quad_means.0).abs() < 2e-5);
            assert!((want.quad_means.1 - got.quad_means.1).abs() < 2e-5);
            assert!((want.quad_noises.1 - got.quad_noises.1).abs() < 2e-5);
        }
    }

    #[test]
    fn antiderivatives() {
        assert!((x2().antiderivative(3.0) - 9.0).abs() < 1e-12);
        let t = SignalFunction::Table(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]);
        assert!((t.antiderivative(1.5) - 1.0).abs() < 1e-12);
        assert!((t.antiderivative(3.0) - 2.5).abs() < 1e-12);
    }
}
