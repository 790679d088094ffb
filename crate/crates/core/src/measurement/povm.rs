use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{heterodyne_matrix, homodyne_matrix, DetectorKind, DetectorSpec};
use crate::amplifiers::{block_unitary, occupancy_check, AmplifierSpec};
use crate::error::{invalid, Error, Result};
use crate::fock::{
    hermitian_eigen, mode_moments, Operator, SpectralDecomposition, State, C64,
};
use crate::table::sci;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    /// Points of the complex plane, measure `d²φ`.
    Complex,
    /// Points of the real line (imaginary part zero), measure `dx`.
    Real,
}

/// Outcome lattice around the eigenvalue centers.
///
/// Both fields are in units of the record width `√w`: the lattice keeps every
/// point within `radius_widths·√w` of some center, at spacing `step_widths·√w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub radius_widths: f64,
    pub step_widths: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            radius_widths: 5.0,
            step_widths: 0.25,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if !(self.radius_widths > 0.0 && self.step_widths > 0.0) {
            return Err(invalid("grid", "radius and step must be positive"));
        }
        Ok(())
    }
}

/// Which closed-form Gaussian record to build.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClosedFormModel {
    /// Two-mode amplifier, vacuum meter, heterodyne of the meter.
    Heterodyne,
    /// Hermitian `f`, Gaussian meter of width `ε`, homodyne of the meter position.
    Homodyne { epsilon: f64 },
    /// Three-mode amplifier, two Gaussian meters of width `ε`, homodyne of both positions.
    ThreeMode { epsilon: f64 },
}

/// Per-eigenvector Gaussian records `E(φ) = Σ_i G_w(φ − c_i) |e_i⟩⟨e_i|`.
///
/// `G_w(z) = e^{−|z|²/w}/(πw)` on the plane and `e^{−x²/w}/√(πw)` on the line,
/// so each axis has variance `w/2`.
#[derive(Clone, Debug)]
pub struct GaussianRecords {
    pub kind: OutcomeKind,
    pub decomposition: SpectralDecomposition,
    pub centers: Vec<C64>,
    pub width: f64,
}

impl GaussianRecords {
    pub fn density(&self, i: usize, z: C64) -> f64 {
        let w = self.width;
        match self.kind {
            OutcomeKind::Complex => (-(z - self.centers[i]).norm_sqr() / w).exp() / (PI * w),
            OutcomeKind::Real => {
                let d = z.re - self.centers[i].re;
                (-d * d / w).exp() / (PI * w).sqrt()
            }
        }
    }

    pub fn element(&self, z: C64) -> Operator {
        let d = &self.decomposition;
        let weights: Vec<f64> = (0..d.dim()).map(|i| self.density(i, z)).collect();
        spectral_sum(d, &weights)
    }

    /// `max |Σ_i |e_i⟩⟨e_i| − I|`: the records integrate to this exactly.
    pub fn identity_residual(&self) -> f64 {
        let d = &self.decomposition;
        spectral_sum(d, &vec![1.0; d.dim()])
            .distance(&Operator::identity(d.dims().to_vec()))
            .unwrap_or(f64::INFINITY)
    }
}

fn spectral_sum(d: &SpectralDecomposition, w: &[f64]) -> Operator {
    let n = d.dim();
    let e = &d.eigenvectors;
    let scaled = Mat::from_fn(n, n, |i, k| e[(i, k)] * w[k]);
    Operator::new(d.dims().to_vec(), &scaled * e.adjoint()).expect("square by construction")
}

#[derive(Clone, Debug)]
pub enum PovmElements {
    Explicit(Vec<Operator>),
    ClosedForm(GaussianRecords),
}

/// POVM densities on a lattice of rescaled outcomes.
///
/// Outcomes are stored divided by the gain so that widths shrink as `1/g²`
/// and decision regions do not move with `g`; the raw detector reading is
/// `outcome_scale · outcome`. Elements are densities with respect to the
/// rescaled measure.
#[derive(Clone, Debug)]
pub struct PovmGrid {
    pub kind: OutcomeKind,
    pub outcomes: Vec<C64>,
    pub cell_measure: f64,
    pub elements: PovmElements,
    pub outcome_scale: f64,
    pub decomposition: SpectralDecomposition,
    /// Record centers `c_i`, one per eigenvector.
    pub centers: Vec<C64>,
    /// Nominal record width `w`.
    pub width: f64,
    /// Distance the lattice extends beyond every center.
    pub radius: f64,
}

impl PovmGrid {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn element(&self, k: usize) -> Operator {
        match &self.elements {
            PovmElements::Explicit(v) => v[k].clone(),
            PovmElements::ClosedForm(r) => r.element(self.outcomes[k]),
        }
    }

    pub fn records(&self) -> Option<&GaussianRecords> {
        match &self.elements {
            PovmElements::ClosedForm(r) => Some(r),
            PovmElements::Explicit(_) => None,
        }
    }

    /// `max |Σ_k E_k·cell − I|` by lattice quadrature.
    pub fn quadrature_identity_residual(&self) -> f64 {
        let dims = self.decomposition.dims().to_vec();
        let mut acc = Operator::zeros(dims.clone());
        for k in 0..self.len() {
            acc = acc
                .add(&self.element(k).scale(C64::new(self.cell_measure, 0.0)))
                .expect("same dims");
        }
        acc.distance(&Operator::identity(dims)).unwrap_or(f64::INFINITY)
    }

    /// Identity residual: exact for closed-form records, by quadrature otherwise.
    pub fn identity_residual(&self) -> f64 {
        match &self.elements {
            PovmElements::ClosedForm(r) => r.identity_residual(),
            PovmElements::Explicit(_) => self.quadrature_identity_residual(),
        }
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        if let PovmElements::ClosedForm(_) = self.elements {
            // nonnegative mixtures of orthogonal projectors
            return Ok(0.0);
        }
        let mut m = f64::INFINITY;
        for k in 0..self.len() {
            let e = hermitian_eigen(self.element(k).matrix())?;
            m = m.min(e.values.iter().copied().fold(f64::INFINITY, f64::min));
        }
        Ok(m)
    }

    /// `⟨e_i|E_k|e_j⟩` for element `k`.
    pub fn in_eigenbasis(&self, k: usize) -> Mat<C64> {
        let e = &self.decomposition.eigenvectors;
        e.adjoint() * self.element(k).matrix() * e
    }

    /// Largest off-diagonal magnitude in the eigenbasis of `f`.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.decomposition.dim();
        let mut m = 0.0f64;
        for k in 0..self.len() {
            let t = self.in_eigenbasis(k);
            for j in 0..n {
                for i in 0..n {
                    if i != j {
                        m = m.max(t[(i, j)].norm());
                    }
                }
            }
        }
        m
    }

    /// `max_k max |E_k − F_k|` against a grid with the same outcomes.
    pub fn max_deviation(&self, other: &PovmGrid) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let mut m = 0.0f64;
        for k in 0..self.len() {
            if (self.outcomes[k] - other.outcomes[k]).norm() > 1e-12 {
                return Err(invalid("grid", "outcome lattices differ"));
            }
            m = m.max(self.element(k).distance(&other.element(k))?);
        }
        Ok(m)
    }

    /// Same lattice, elements from these records.
    pub fn with_records(&self, records: GaussianRecords) -> PovmGrid {
        PovmGrid {
            kind: records.kind,
            outcomes: self.outcomes.clone(),
            cell_measure: self.cell_measure,
            outcome_scale: self.outcome_scale,
            decomposition: records.decomposition.clone(),
            centers: records.centers.clone(),
            width: records.width,
            radius: self.radius,
            elements: PovmElements::ClosedForm(records),
        }
    }

    /// CSV with columns `outcome_re, outcome_im, measure, eigen_index, weight`,
    /// one row per outcome and eigenvector; `weight` is `⟨e_i|E|e_i⟩`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "outcome_re,outcome_im,measure,eigen_index,weight")?;
        let n = self.decomposition.dim();
        for k in 0..self.len() {
            let z = self.outcomes[k];
            let weights: Vec<f64> = match &self.elements {
                PovmElements::ClosedForm(r) => (0..n).map(|i| r.density(i, z)).collect(),
                PovmElements::Explicit(_) => {
                    let t = self.in_eigenbasis(k);
                    (0..n).map(|i| t[(i, i)].re).collect()
                }
            };
            for (i, wi) in weights.iter().enumerate() {
                writeln!(w, "{},{},{},{},{}", sci(z.re), sci(z.im), sci(self.cell_measure), i, sci(*wi))?;
            }
        }
        Ok(())
    }
}

/// Lattice points `(i, j)·step` within `radius` of some center.
fn lattice(kind: OutcomeKind, centers: &[C64], radius: f64, step: f64) -> Vec<(i64, i64)> {
    let lo_re = centers.iter().map(|c| c.re).fold(f64::INFINITY, f64::min) - radius;
    let hi_re = centers.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max) + radius;
    let (i0, i1) = ((lo_re / step).floor() as i64, (hi_re / step).ceil() as i64);
    let mut pts = Vec::new();
    match kind {
        OutcomeKind::Real => {
            for i in i0..=i1 {
                let x = i as f64 * step;
                if centers.iter().any(|c| (x - c.re).abs() <= radius) {
                    pts.push((i, 0));
                }
            }
        }
        OutcomeKind::Complex => {
            let lo_im = centers.iter().map(|c| c.im).fold(f64::INFINITY, f64::min) - radius;
            let hi_im = centers.iter().map(|c| c.im).fold(f64::NEG_INFINITY, f64::max) + radius;
            let (j0, j1) = ((lo_im / step).floor() as i64, (hi_im / step).ceil() as i64);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    let z = C64::new(i as f64 * step, j as f64 * step);
                    if centers.iter().any(|c| (z - c).norm() <= radius) {
                        pts.push((i, j));
                    }
                }
            }
        }
    }
    pts
}

fn lattice_points(kind: OutcomeKind, centers: &[C64], width: f64, grid: &GridSpec) -> (Vec<(i64, i64)>, f64, f64) {
    let unit = width.sqrt();
    let step = grid.step_widths * unit;
    let radius = grid.radius_widths * unit;
    (lattice(kind, centers, radius, step), step, radius)
}

/// Closed-form effective POVM of an amplifier followed by meter detection.
///
/// Widths: `(σ²+1)/g²` for heterodyne with a vacuum meter, `(σ²+ε²)/(2g²)` for
/// homodyne, `(σ²+ε²)/g²` for the three-mode amplifier, all as the `w` of
/// [`GaussianRecords`]. Three-mode centers sit at `√2 𝔣_k` because the two
/// meter positions move by `√2 g Re 𝔣` and `√2 g Im 𝔣`.
pub fn effective_povm_closed_form(
    decomp: &SpectralDecomposition,
    g: f64,
    sigma2: f64,
    model: ClosedFormModel,
    grid: &GridSpec,
) -> Result<PovmGrid> {
    grid.validate()?;
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::GainOutOfRange(g));
    }
    if !(sigma2 >= 0.0) {
        return Err(invalid("sigma2", "smearing must be non-negative"));
    }
    let (kind, centers, width, scale) = match model {
        ClosedFormModel::Heterodyne => (
            OutcomeKind::Complex,
            decomp.eigenvalues.clone(),
            (sigma2 + 1.0) / (g * g),
            g,
        ),
        ClosedFormModel::Homodyne { epsilon } => {
            check_epsilon(epsilon)?;
            let tol = 1e-9 * decomp.max_abs_eigenvalue().max(1.0);
            if !decomp.is_real(tol) {
                return Err(invalid("f", "the homodyne record needs a Hermitian signal operator"));
            }
            (
                OutcomeKind::Real,
                decomp.eigenvalues.iter().map(|z| C64::new(z.re, 0.0)).collect(),
                (sigma2 + epsilon * epsilon) / (2.0 * g * g),
                SQRT_2 * g,
            )
        }
        ClosedFormModel::ThreeMode { epsilon } => {
            check_epsilon(epsilon)?;
            (
                OutcomeKind::Complex,
                decomp.eigenvalues.iter().map(|z| z * SQRT_2).collect(),
                (sigma2 + epsilon * epsilon) / (g * g),
                g,
            )
        }
    };
    let (pts, step, radius) = lattice_points(kind, &centers, width, grid);
    let outcomes = pts.iter().map(|&(i, j)| C64::new(i as f64 * step, j as f64 * step)).collect();
    let records = GaussianRecords {
        kind,
        decomposition: decomp.clone(),
        centers: centers.clone(),
        width,
    };
    Ok(PovmGrid {
        kind,
        outcomes,
        cell_measure: cell(kind, step),
        elements: PovmElements::ClosedForm(records),
        outcome_scale: scale,
        decomposition: decomp.clone(),
        centers,
        width,
        radius,
    })
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid("epsilon", "meter width must be positive"));
    }
    Ok(())
}

fn cell(kind: OutcomeKind, step: f64) -> f64 {
    match kind {
        OutcomeKind::Complex => step * step,
        OutcomeKind::Real => step,
    }
}

/// Nonzero meter blocks `⟨a'|U|n⟩|meters⟩` of the evolved signal basis.
struct Slice {
    n: usize,
    a: usize,
    v: Vec<C64>,
}

fn evolved_slices(spec: &AmplifierSpec, meters: &[State]) -> Result<(Vec<Slice>, Vec<usize>)> {
    let u = block_unitary(spec, meters)?;
    let dims = u.dims().to_vec();
    let da = dims[0];
    let mut meter_ket = vec![C64::new(1.0, 0.0)];
    for m in meters {
        let k = m
            .ket()
            .ok_or_else(|| invalid("meters", "effective POVMs need pure meter states"))?;
        meter_ket = meter_ket.iter().flat_map(|a| k.iter().map(move |b| a * b)).collect();
    }
    let side = meter_ket.len();
    let mut slices = Vec::new();
    let mut comps = Vec::with_capacity(da);
    for n in 0..da {
        let mut psi = vec![C64::new(0.0, 0.0); da * side];
        psi[n * side..(n + 1) * side].copy_from_slice(&meter_ket);
        let out = u.apply(&psi)?;
        for a in 0..da {
            let v = out[a * side..(a + 1) * side].to_vec();
            if v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-30 {
                slices.push(Slice { n, a, v });
            }
        }
        comps.push((1.0, out));
    }
    let slots: Vec<usize> = (1..dims.len()).collect();
    occupancy_check(&dims, &comps, &slots)?;
    Ok((slices, dims))
}

/// `E[m,n] = Σ_{a'} ⟨S(m,a')|Y(n,a')⟩` with `Y = 𝓜 S`.
fn assemble(da: usize, slices: &[Slice], ys: &[Vec<C64>], jac: f64) -> Operator {
    let mut e = Mat::<C64>::zeros(da, da);
    for si in slices {
        for (j, sj) in slices.iter().enumerate() {
            if si.a != sj.a {
                continue;
            }
            let t: C64 = si.v.iter().zip(&ys[j]).map(|(x, y)| x.conj() * y).sum();
            e[(si.n, sj.n)] += t * jac;
        }
    }
    Operator::new(vec![da], e).expect("square")
}

fn mat_vec(m: &Mat<C64>, v: &[C64]) -> Vec<C64> {
    let n = v.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (j, vj) in v.iter().enumerate() {
        if *vj == C64::new(0.0, 0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * vj;
        }
    }
    out
}

/// Effective POVM `E = ⟨meters|U† 𝓜 U|meters⟩` by explicit sandwiching.
///
/// A single meter is read out by `detector` (heterodyne of `b`, or homodyne of
/// `x_b`); the three-mode amplifier needs a homodyne detector and reads `x_b`
/// and `x_c`. Outcomes are rescaled exactly as in the closed form, and the
/// lattice is laid out around the same centers, so the two can be compared
/// point by point. For `g = 0` outcomes are left unscaled.
pub fn effective_povm_numeric(
    spec: &AmplifierSpec,
    meters: &[State],
    detector: &DetectorSpec,
    grid: &GridSpec,
) -> Result<PovmGrid> {
    grid.validate()?;
    detector.validate()?;
    let decomp = spec
        .decompose()?
        .ok_or_else(|| invalid("amplifier", "effective POVMs need a meter-coupled nonlinear amplifier"))?;
    if meters.len() != spec.meter_count() {
        return Err(invalid("meters", format!("{} expects {} meters", spec.name(), spec.meter_count())));
    }
    let g = spec.gain();
    let sigma2 = detector.sigma2();
    let (slices, dims) = evolved_slices(spec, meters)?;
    let da = dims[0];
    let three = matches!(spec, AmplifierSpec::ThreeMode { .. });
    let mm: Vec<_> = meters.iter().map(|m| mode_moments(m, 0)).collect::<Result<_>>()?;
    let scaled = |s: f64| if g > 0.0 { s * g } else { 1.0 };
    let gc = if g > 0.0 { 1.0 } else { 0.0 };

    let (kind, scale, centers, width) = match (three, detector.kind) {
        (false, DetectorKind::Heterodyne) => {
            let scale = scaled(1.0);
            let off = mm[0].a / scale;
            let centers = decomp.eigenvalues.iter().map(|z| z * gc + off).collect::<Vec<_>>();
            let w = (sigma2 + 2.0 * mm[0].symmetrized_noise()) / (scale * scale);
            (OutcomeKind::Complex, scale, centers, w)
        }
        (false, DetectorKind::Homodyne) => {
            let scale = scaled(SQRT_2);
            let off = mm[0].quad_means().0 / scale;
            let centers = decomp.eigenvalues.iter().map(|z| C64::new(z.re * gc + off, 0.0)).collect();
            let w = (sigma2 + 2.0 * mm[0].quad_variances().0) / (scale * scale);
            (OutcomeKind::Real, scale, centers, w)
        }
        (true, DetectorKind::Homodyne) => {
            let scale = scaled(1.0);
            let off = C64::new(mm[0].quad_means().0, mm[1].quad_means().0) / scale;
            let centers = decomp.eigenvalues.iter().map(|z| z * SQRT_2 * gc + off).collect();
            let v = mm[0].quad_variances().0.max(mm[1].quad_variances().0);
            (OutcomeKind::Complex, scale, centers, (sigma2 + 2.0 * v) / (scale * scale))
        }
        (true, DetectorKind::Heterodyne) => {
            return Err(invalid("detector", "the three-mode amplifier is read out by homodyne detection"));
        }
    };
    let (pts, step, radius) = lattice_points(kind, &centers, width, grid);
    let elements: Vec<Operator> = match (three, detector.kind) {
        (false, DetectorKind::Heterodyne) => {
            let db = dims[1];
            let jac = scale * scale;
            pts.par_iter()
                .map(|&(i, j)| {
                    let beta = C64::new(i as f64 * step, j as f64 * step) * scale;
                    let m = heterodyne_matrix(beta, sigma2, db);
                    let ys: Vec<Vec<C64>> = slices.iter().map(|s| mat_vec(&m, &s.v)).collect();
                    assemble(da, &slices, &ys, jac)
                })
                .collect()
        }
        (false, DetectorKind::Homodyne) => {
            let db = dims[1];
            pts.par_iter()
                .map(|&(i, _)| {
                    let y = i as f64 * step * scale;
                    let m = homodyne_matrix(y, sigma2, db);
                    let ys: Vec<Vec<C64>> = slices.iter().map(|s| mat_vec(&m, &s.v)).collect();
                    assemble(da, &slices, &ys, scale)
                })
                .collect()
        }
        _ => {
            let (db, dc) = (dims[1], dims[2]);
            let rows = column_matrices(pts.iter().map(|p| p.0), step * scale, sigma2, db);
            let cols = column_matrices(pts.iter().map(|p| p.1), step * scale, sigma2, dc);
            let mats: Vec<Mat<C64>> = slices
                .iter()
                .map(|s| Mat::from_fn(db, dc, |b, c| s.v[b * dc + c]))
                .collect();
            let jac = scale * scale;
            pts.par_iter()
                .map(|&(i, j)| {
                    let mb = &rows[&i];
                    let mc = &cols[&j];
                    let ys: Vec<Vec<C64>> = mats
                        .iter()
                        .map(|s| {
                            let t = mb * s * mc;
                            (0..db).flat_map(|b| (0..dc).map(move |c| (b, c))).map(|(b, c)| t[(b, c)]).collect()
                        })
                        .collect();
                    assemble(da, &slices, &ys, jac)
                })
                .collect()
        }
    };
    Ok(PovmGrid {
        kind,
        outcomes: pts.iter().map(|&(i, j)| C64::new(i as f64 * step, j as f64 * step)).collect(),
        cell_measure: cell(kind, step),
        elements: PovmElements::Explicit(elements),
        outcome_scale: scale,
        decomposition: decomp,
        centers,
        width,
        radius,
    })
}

/// Homodyne matrices for each distinct lattice coordinate.
fn column_matrices(
    idx: impl Iterator<Item = i64>,
    step: f64,
    sigma2: f64,
    dim: usize,
) -> HashMap<i64, Mat<C64>> {
    let mut keys: Vec<i64> = idx.collect();
    keys.sort_unstable();
    keys.dedup();
    keys.par_iter()
        .map(|&k| (k, homodyne_matrix(k as f64 * step, sigma2, dim)))
        .collect()
}
