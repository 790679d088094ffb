use serde::Serialize;

use super::linear::evolve_linear;
use super::single_mode::{single_mode_output_moments, single_mode_simulated};
use super::spec::{normality_tol, AmplifierSpec};
use super::unitary::{
    auto_meter_dim, three_mode_unitary, two_mode_unitary, von_neumann_unitary, BlockUnitary,
    DENSE_LIMIT,
};
use crate::error::{invalid, Error, Result};
use crate::fock::{
    expectation, make_state, mode_moments, symmetrized_moment, variance,
    FockSpace, ModeMoments, Operator, State, StateKind, C64,
};

/// Output-mode moments of an amplifier run.
///
/// For the two-mode and von Neumann amplifiers with Hermitian `f` the signal
/// rides on `x_out`, so `signal_noise` and `added_noise` refer to that
/// quadrature; otherwise they refer to the symmetrized `⟨|Δa_out|²⟩`. The
/// three-mode output is `(x_b + i x_c)/√2`, whose quadratures are the two
/// meter positions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub mean_out: C64,
    pub symmetrized_noise: f64,
    pub quad_means: (f64, f64),
    pub quad_noises: (f64, f64),
    /// Amplified input-signal noise.
    pub signal_noise: f64,
    /// Output noise minus `signal_noise`.
    pub added_noise: f64,
}

fn signal_dim(input: &State) -> Result<usize> {
    match input.dims() {
        [d] => Ok(*d),
        _ => Err(invalid("input", "signal input must be a single-mode state")),
    }
}

fn check_inputs(spec: &AmplifierSpec, input: &State, meters: &[State]) -> Result<()> {
    spec.validate()?;
    let da = signal_dim(input)?;
    if meters.len() != spec.meter_count() {
        return Err(invalid(
            "meters",
            format!("{} expects {} meter states, got {}", spec.name(), spec.meter_count(), meters.len()),
        ));
    }
    for m in meters {
        if m.dims().len() != 1 {
            return Err(invalid("meters", "each meter must be a single-mode state"));
        }
    }
    if let Some(f) = spec.signal_op() {
        if f.dim() != da {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: da,
            });
        }
    }
    if let AmplifierSpec::Linear { .. } = spec {
        if input.dims() != meters[0].dims() {
            log::debug!("linear amplifier with unequal input dimensions");
        }
    }
    Ok(())
}

fn is_hermitian(f: &Operator) -> bool {
    f.hermiticity_residual() < normality_tol(f)
}

struct SignalStats {
    mean_f: C64,
    var_r: f64,
    var_i: f64,
    sym: f64,
}

fn signal_stats(f: &Operator, input: &State) -> Result<SignalStats> {
    let (fr, fi) = super::unitary::real_imag_parts(f);
    Ok(SignalStats {
        mean_f: expectation(input, f)?,
        var_r: variance(input, &fr)?,
        var_i: variance(input, &fi)?,
        sym: symmetrized_moment(input, f)?,
    })
}

/// Analytic output moments from the input moments alone.
pub fn predict_output_moments(spec: &AmplifierSpec, input: &State, meters: &[State]) -> Result<MomentReport> {
    check_inputs(spec, input, meters)?;
    let s2 = std::f64::consts::SQRT_2;
    match spec {
        AmplifierSpec::SingleMode { f, g, r } => single_mode_output_moments(f, *g, *r, input),
        AmplifierSpec::Linear { g } => {
            let a = mode_moments(input, 0)?;
            let b = mode_moments(&meters[0], 0)?;
            let k = (g * g - 1.0).sqrt();
            let (ax, ap) = a.quad_means();
            let (bx, bp) = b.quad_means();
            let (vax, vap) = a.quad_variances();
            let (vbx, vbp) = b.quad_variances();
            let signal = g * g * a.symmetrized_noise();
            let added = (g * g - 1.0) * b.symmetrized_noise();
            Ok(MomentReport {
                mean_out: a.a * *g + b.a.conj() * k,
                symmetrized_noise: signal + added,
                quad_means: (g * ax + k * bx, g * ap - k * bp),
                quad_noises: (g * g * vax + k * k * vbx, g * g * vap + k * k * vbp),
                signal_noise: signal,
                added_noise: added,
            })
        }
        AmplifierSpec::TwoModeNormal { f, g } | AmplifierSpec::VonNeumann { f, g } => {
            let st = signal_stats(f, input)?;
            let b = mode_moments(&meters[0], 0)?;
            let (bx, bp) = b.quad_means();
            let (vbx, vbp) = b.quad_variances();
            let quad_noises = (g * g * st.var_r + vbx, g * g * st.var_i + vbp);
            let sym = g * g * st.sym + b.symmetrized_noise();
            let (signal, added) = if is_hermitian(f) {
                (g * g * st.var_r, vbx)
            } else {
                (g * g * st.sym, b.symmetrized_noise())
            };
            Ok(MomentReport {
                mean_out: st.mean_f * *g + b.a,
                symmetrized_noise: sym,
                quad_means: (s2 * g * st.mean_f.re + bx, s2 * g * st.mean_f.im + bp),
                quad_noises,
                signal_noise: signal,
                added_noise: added,
            })
        }
        AmplifierSpec::ThreeMode { f, g } => {
            let st = signal_stats(f, input)?;
            let b = mode_moments(&meters[0], 0)?;
            let c = mode_moments(&meters[1], 0)?;
            let xb = b.quad_means().0;
            let xc = c.quad_means().0;
            let vb = b.quad_variances().0;
            let vc = c.quad_variances().0;
            let qm = (s2 * g * st.mean_f.re + xb, s2 * g * st.mean_f.im + xc);
            let qn = (g * g * st.var_r + vb, g * g * st.var_i + vc);
            let signal = g * g * st.sym;
            let sym = 0.5 * (qn.0 + qn.1);
            Ok(MomentReport {
                mean_out: C64::new(qm.0, qm.1) / s2,
                symmetrized_noise: sym,
                quad_means: qm,
                quad_noises: qn,
                signal_noise: signal,
                added_noise: sym - signal,
            })
        }
    }
}

/// Meter dimension large enough for the shifted meter state.
///
/// Grows the `(g·max|𝔣| + 6)²` rule by the spread of the meter preparation
/// itself: `√n` for Fock, `|α|` for coherent, `e^r` or `max(ε, 1/ε)` for
/// squeezed meters.
pub fn auto_meter_dims(spec: &AmplifierSpec, meters: &[StateKind]) -> Result<Vec<usize>> {
    spec.validate()?;
    let max = match spec.decompose()? {
        Some(d) => d.max_abs_eigenvalue(),
        None => 0.0,
    };
    meters
        .iter()
        .map(|k| {
            let spread = match *k {
                StateKind::Fock { n } => 1.0 + (n as f64).sqrt() / 6.0,
                StateKind::Coherent { re, im } => 1.0 + C64::new(re, im).norm() / 6.0,
                StateKind::SqueezedVacuum { r, .. } => r.exp(),
                StateKind::GaussianMeter { epsilon } => epsilon.max(1.0 / epsilon),
            };
            auto_meter_dim(spec.gain(), max, spread)
        })
        .collect()
}

/// Meter states prepared at [`auto_meter_dims`].
pub fn prepare_meters(spec: &AmplifierSpec, meters: &[StateKind]) -> Result<Vec<State>> {
    let dims = auto_meter_dims(spec, meters)?;
    dims.iter()
        .zip(meters)
        .map(|(&d, &k)| make_state(FockSpace::new(d)?, k))
        .collect()
}

fn product_components(states: &[&State]) -> Result<Vec<(f64, Vec<C64>)>> {
    let mut acc = vec![(1.0, vec![C64::new(1.0, 0.0)])];
    for s in states {
        let comps = s.components()?;
        let mut next = Vec::with_capacity(acc.len() * comps.len());
        for (w, v) in &acc {
            for (u, x) in &comps {
                let prod: Vec<C64> = v.iter().flat_map(|a| x.iter().map(move |b| a * b)).collect();
                next.push((w * u, prod));
            }
        }
        acc = next;
    }
    Ok(acc)
}

pub(crate) fn block_unitary(spec: &AmplifierSpec, meters: &[State]) -> Result<BlockUnitary> {
    match spec {
        AmplifierSpec::TwoModeNormal { f, g } => two_mode_unitary(f, *g, meters[0].dim()),
        AmplifierSpec::VonNeumann { f, g } => von_neumann_unitary(f, *g, meters[0].dim()),
        AmplifierSpec::ThreeMode { f, g } => three_mode_unitary(f, *g, meters[0].dim(), meters[1].dim()),
        _ => unreachable!("only block amplifiers"),
    }
}

/// Evolved pure components and their composite dims.
fn evolve_components(spec: &AmplifierSpec, input: &State, meters: &[State]) -> Result<(Vec<usize>, Vec<(f64, Vec<C64>)>)> {
    let mut parts: Vec<&State> = vec![input];
    parts.extend(meters.iter());
    let comps = product_components(&parts)?;
    match spec {
        AmplifierSpec::Linear { g } => {
            let (da, db) = (input.dim(), meters[0].dim());
            let mut out = Vec::with_capacity(comps.len());
            let mut dim = 0;
            for (w, v) in comps {
                let ev = evolve_linear(*g, &v, da, db)?;
                dim = dim.max(ev.dim);
                out.push((w, ev.dim, ev.ket));
            }
            // re-embed every component on the largest grid so they share dims
            let mut res = Vec::with_capacity(out.len());
            for (w, d, ket) in out {
                if d == dim {
                    res.push((w, ket));
                    continue;
                }
                let mut big = vec![C64::new(0.0, 0.0); dim * dim];
                for na in 0..d {
                    for nb in 0..d {
                        big[na * dim + nb] = ket[na * d + nb];
                    }
                }
                res.push((w, big));
            }
            Ok((vec![dim, dim], res))
        }
        _ => {
            let u = block_unitary(spec, meters)?;
            let dims = u.dims().to_vec();
            let out = comps
                .into_iter()
                .map(|(w, v)| Ok((w, u.apply(&v)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((dims, out))
        }
    }
}

pub(crate) fn occupancy_check(dims: &[usize], comps: &[(f64, Vec<C64>)], slots: &[usize]) -> Result<()> {
    for &slot in slots {
        let mut top = 0.0;
        for (w, v) in comps {
            top += w * mode_moments(&State::ket_unchecked(dims.to_vec(), v.clone()), slot)?.top;
        }
        if top > 1e-6 {
            return Err(Error::Truncation(format!(
                "mode {slot} occupies its top levels with probability {top:.2e} after evolution"
            )));
        }
    }
    Ok(())
}

/// `U(ρ_a ⊗ ρ_meters)U†` as a composite state ordered (signal, meters…).
///
/// Pure inputs give a ket at any size. Mixed inputs are assembled into a
/// density matrix and are refused above the dense size limit.
pub fn simulate_output_state(spec: &AmplifierSpec, input: &State, meters: &[State]) -> Result<State> {
    check_inputs(spec, input, meters)?;
    if let AmplifierSpec::SingleMode { f, g, r } = spec {
        return Ok(single_mode_simulated(f, *g, *r, input)?.0);
    }
    let (dims, comps) = evolve_components(spec, input, meters)?;
    let slots: Vec<usize> = (0..dims.len()).filter(|&k| k > 0 || matches!(spec, AmplifierSpec::Linear { .. })).collect();
    occupancy_check(&dims, &comps, &slots)?;
    if comps.len() == 1 {
        let (_, v) = comps.into_iter().next().unwrap();
        return State::normalized_ket(dims, v);
    }
    let side: usize = dims.iter().product();
    if side > DENSE_LIMIT {
        return Err(Error::Truncation(format!(
            "mixed output of side {side} exceeds the dense limit {DENSE_LIMIT}"
        )));
    }
    let mut rho = faer::Mat::<C64>::zeros(side, side);
    for (w, v) in &comps {
        for j in 0..side {
            for i in 0..side {
                rho[(i, j)] += v[i] * v[j].conj() * *w;
            }
        }
    }
    State::from_density(dims, rho)
}

fn averaged_moments(dims: &[usize], comps: &[(f64, Vec<C64>)], slot: usize) -> Result<ModeMoments> {
    let mut acc = ModeMoments::default();
    for (w, v) in comps {
        let m = mode_moments(&State::ket_unchecked(dims.to_vec(), v.clone()), slot)?;
        acc = acc.sum(m.scaled(*w));
    }
    Ok(acc)
}

/// Output moments read from the evolved state, with the signal noise taken from
/// the input as in [`predict_output_moments`].
pub fn simulate_output_moments(spec: &AmplifierSpec, input: &State, meters: &[State]) -> Result<MomentReport> {
    check_inputs(spec, input, meters)?;
    if let AmplifierSpec::SingleMode { f, g, r } = spec {
        return Ok(single_mode_simulated(f, *g, *r, input)?.1);
    }
    let (dims, comps) = evolve_components(spec, input, meters)?;
    let slots: Vec<usize> = match spec {
        AmplifierSpec::Linear { .. } => vec![0, 1],
        AmplifierSpec::ThreeMode { .. } => vec![1, 2],
        _ => vec![1],
    };
    occupancy_check(&dims, &comps, &slots)?;
    let s2 = std::f64::consts::SQRT_2;
    match spec {
        AmplifierSpec::Linear { g } => {
            let a = averaged_moments(&dims, &comps, 0)?;
            let signal = g * g * mode_moments(input, 0)?.symmetrized_noise();
            let sym = a.symmetrized_noise();
            Ok(MomentReport {
                mean_out: a.a,
                symmetrized_noise: sym,
                quad_means: a.quad_means(),
                quad_noises: a.quad_variances(),
                signal_noise: signal,
                added_noise: sym - signal,
            })
        }
        AmplifierSpec::TwoModeNormal { f, g } | AmplifierSpec::VonNeumann { f, g } => {
            let b = averaged_moments(&dims, &comps, 1)?;
            let st = signal_stats(f, input)?;
            let qn = b.quad_variances();
            let sym = b.symmetrized_noise();
            let (signal, added) = if is_hermitian(f) {
                (g * g * st.var_r, qn.0 - g * g * st.var_r)
            } else {
                (g * g * st.sym, sym - g * g * st.sym)
            };
            Ok(MomentReport {
                mean_out: b.a,
                symmetrized_noise: sym,
                quad_means: b.quad_means(),
                quad_noises: qn,
                signal_noise: signal,
                added_noise: added,
            })
        }
        AmplifierSpec::ThreeMode { f, g } => {
            let b = averaged_moments(&dims, &comps, 1)?;
            let c = averaged_moments(&dims, &comps, 2)?;
            let st = signal_stats(f, input)?;
            let qm = (b.quad_means().0, c.quad_means().0);
            let qn = (b.quad_variances().0, c.quad_variances().0);
            let sym = 0.5 * (qn.0 + qn.1);
            let signal = g * g * st.sym;
            Ok(MomentReport {
                mean_out: C64::new(qm.0, qm.1) / s2,
                symmetrized_noise: sym,
                quad_means: qm,
                quad_noises: qn,
                signal_noise: signal,
                added_noise: sym - signal,
            })
        }
        AmplifierSpec::SingleMode { .. } => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::number_op;

    fn vac(d: usize) -> State {
        make_state(FockSpace::new(d).unwrap(), StateKind::vacuum()).unwrap()
    }

    #[test]
    fn snr_vicinity_numbers() {
        let s = FockSpace::new(6).unwrap();
        let spec = AmplifierSpec::TwoModeNormal { f: number_op(s), g: 3.0 };
        let input = make_state(s, StateKind::Fock { n: 2 }).unwrap();
        let m = predict_output_moments(&spec, &input, &[vac(20)]).unwrap();
        assert!((m.quad_means.0 - 6.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((m.quad_noises.0 - 0.5).abs() < 1e-12);
        let sq = make_state(FockSpace::new(60).unwrap(), StateKind::SqueezedVacuum { r: 1.0, phi: 0.0 }).unwrap();
        let m = predict_output_moments(&spec, &input, &[sq]).unwrap();
        assert!((m.added_noise - 0.5 * (-2.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn von_neumann_meter_shift() {
        let s = FockSpace::new(4).unwrap();
        let spec = AmplifierSpec::VonNeumann { f: number_op(s), g: 1.5 };
        let input = make_state(s, StateKind::Fock { n: 1 }).unwrap();
        let meters = prepare_meters(&spec, &[StateKind::vacuum()]).unwrap();
        let m = simulate_output_moments(&spec, &input, &meters).unwrap();
        assert!((m.quad_means.0 - 2f64.sqrt() * 1.5).abs() < 1e-6);
    }

    #[test]
    fn zero_gain_leaves_product_state() {
        let s = FockSpace::new(6).unwrap();
        let spec = AmplifierSpec::TwoModeNormal { f: number_op(s), g: 0.0 };
        let input = make_state(s, StateKind::coherent(C64::new(0.3, 0.0))).unwrap();
        let out = simulate_output_state(&spec, &input, &[vac(8)]).unwrap();
        let want = crate::fock::tensor_states(&[&input, &vac(8)]).unwrap();
        assert!(out.overlap(&want).unwrap() > 1.0 - 1e-14);
    }

    #[test]
    fn linear_amp_vacuum_noise() {
        let s = FockSpace::new(20).unwrap();
        let spec = AmplifierSpec::Linear { g: 1.25 };
        let m = simulate_output_moments(&spec, &vac(20), &[vac(20)]).unwrap();
        let g2 = 1.25f64 * 1.25;
        assert!((m.symmetrized_noise - (g2 * 0.5 + (g2 - 1.0) * 0.5)).abs() < 1e-6);
        let c = make_state(s, StateKind::coherent(C64::new(0.5, 0.0))).unwrap();
        let m = simulate_output_moments(&spec, &c, &[vac(20)]).unwrap();
        assert!((m.mean_out - C64::new(0.625, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn mixed_input_matches_prediction() {
        let s = FockSpace::new(4).unwrap();
        let spec = AmplifierSpec::TwoModeNormal { f: number_op(s), g: 0.7 };
        let rho = faer::Mat::from_fn(4, 4, |i, j| {
            if i == j {
                C64::new([0.4, 0.3, 0.2, 0.1][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let input = State::from_density(vec![4], rho).unwrap();
        let meters = [vac(30)];
        let p = predict_output_moments(&spec, &input, &meters).unwrap();
        let q = simulate_output_moments(&spec, &input, &meters).unwrap();
        assert!((p.quad_noises.0 - q.quad_noises.0).abs() < 1e-8);
        assert!((p.added_noise - q.added_noise).abs() < 1e-8);
    }
}
