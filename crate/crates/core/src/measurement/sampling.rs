use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::detector::{DetectorKind, DetectorSpec};
use crate::error::{invalid, Error, Result};
use crate::fock::{mode_moments, quadrature_density, State, C64};

/// Cell size of the inverse-CDF sampling grids.
pub const SAMPLER_STEP: f64 = 0.05;

/// Random stream for trial `index` of a run seeded with `seed`.
///
/// Streams are addressed by `(seed, index)` rather than drawn in sequence, so
/// results do not depend on how trials are scheduled across threads.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF sampler for one detector reading of a single-mode state.
///
/// Heterodyne readings come from the Husimi density `⟨β|ρ|β⟩/π` on a square
/// lattice over `|β| ≤ √dim + 4`; homodyne readings from `⟨y|ρ|y⟩` over
/// `|y| ≤ √(2 dim) + 4`. A cell is picked by its midpoint probability, the
/// point is jittered uniformly inside it, and detector noise of variance
/// `σ²/2` per axis is added.
#[derive(Clone, Debug)]
pub struct OutcomeSampler {
    kind: DetectorKind,
    points: Vec<C64>,
    cdf: Vec<f64>,
    captured: f64,
    noise: Option<Normal<f64>>,
}

fn husimi(comps: &[(f64, Vec<C64>)], beta: C64) -> f64 {
    let dim = comps[0].1.len();
    let mut basis = Vec::with_capacity(dim);
    let mut t = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    basis.push(t);
    for n in 1..dim {
        t = t * beta.conj() / (n as f64).sqrt();
        basis.push(t);
    }
    comps
        .iter()
        .map(|(w, v)| w * basis.iter().zip(v).map(|(b, c)| b * c).sum::<C64>().norm_sqr())
        .sum::<f64>()
        / PI
}

impl OutcomeSampler {
    pub fn new(state: &State, detector: &DetectorSpec) -> Result<Self> {
        detector.validate()?;
        let dim = match state.dims() {
            [d] => *d,
            _ => return Err(invalid("state", "outcome sampling needs a single-mode state")),
        };
        let top = mode_moments(state, 0)?.top;
        if top > 1e-6 {
            return Err(Error::Truncation(format!(
                "state occupies its top levels with probability {top:.2e}"
            )));
        }
        let h = SAMPLER_STEP;
        let (points, probs): (Vec<C64>, Vec<f64>) = match detector.kind {
            DetectorKind::Heterodyne => {
                let comps = state.components()?;
                let radius = (dim as f64).sqrt() + 4.0;
                let k = (radius / h).ceil() as i64;
                let rows: Vec<Vec<(C64, f64)>> = (-k..=k)
                    .into_par_iter()
                    .map(|i| {
                        (-k..=k)
                            .filter_map(|j| {
                                let b = C64::new(i as f64 * h, j as f64 * h);
                                (b.norm() <= radius).then(|| (b, husimi(&comps, b) * h * h))
                            })
                            .collect()
                    })
                    .collect();
                rows.into_iter().flatten().unzip()
            }
            DetectorKind::Homodyne => {
                let radius = (2.0 * dim as f64).sqrt() + 4.0;
                let k = (radius / h).ceil() as i64;
                let ys: Vec<f64> = (-k..=k).map(|i| i as f64 * h).collect();
                let q = quadrature_density(state, &ys)?;
                ys.iter().map(|&y| C64::new(y, 0.0)).zip(q.iter().map(|p| p.max(0.0) * h)).unzip()
            }
        };
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > 1e-3 {
            return Err(Error::Truncation(format!(
                "sampling grid captures {acc:.6} of the outcome density"
            )));
        }
        let s2 = detector.sigma2();
        let noise = (s2 > 0.0).then(|| Normal::new(0.0, (s2 / 2.0).sqrt()).expect("positive"));
        Ok(Self {
            kind: detector.kind,
            points,
            cdf,
            captured: acc,
            noise,
        })
    }

    /// Probability mass the grid holds before renormalization.
    pub fn captured_mass(&self) -> f64 {
        self.captured
    }

    /// Cell midpoints with their normalized probabilities.
    pub fn cells(&self) -> impl Iterator<Item = (C64, f64)> + '_ {
        let mut prev = 0.0;
        self.points.iter().zip(&self.cdf).map(move |(z, c)| {
            let p = (c - prev) / self.captured;
            prev = *c;
            (*z, p)
        })
    }

    /// Ideal reading without detector noise.
    pub fn sample_ideal<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        let u = rng.random::<f64>() * self.captured;
        let k = self.cdf.partition_point(|c| *c < u).min(self.points.len() - 1);
        let h = SAMPLER_STEP;
        let jx = (rng.random::<f64>() - 0.5) * h;
        match self.kind {
            DetectorKind::Heterodyne => {
                let jy = (rng.random::<f64>() - 0.5) * h;
                self.points[k] + C64::new(jx, jy)
            }
            DetectorKind::Homodyne => self.points[k] + jx,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        let z = self.sample_ideal(rng);
        match (&self.noise, self.kind) {
            (None, _) => z,
            (Some(n), DetectorKind::Heterodyne) => z + C64::new(n.sample(rng), n.sample(rng)),
            (Some(n), DetectorKind::Homodyne) => z + n.sample(rng),
        }
    }
}

/// One detector reading of `state`, reproducible from `seed`.
pub fn sample_outcome(state: &State, detector: &DetectorSpec, seed: u64) -> Result<C64> {
    let s = OutcomeSampler::new(state, detector)?;
    Ok(s.sample(&mut trial_rng(seed, 0)))
}
