use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use faer::Mat;
use gauss_quad::legendre::GaussLegendre;
use libm::erfc;

use super::povm::{GaussianRecords, OutcomeKind, PovmElements, PovmGrid};
use crate::error::{invalid, Error, Result};
use crate::fock::{Operator, CLUSTER_TOLERANCE, C64};

/// Nearest-site tiling of the outcome space, one region per eigenvalue cluster.
#[derive(Clone, Debug)]
pub struct DecisionRegions {
    pub kind: OutcomeKind,
    pub sites: Vec<C64>,
    /// Eigenvector indices owned by each region.
    pub members: Vec<Vec<usize>>,
}

impl DecisionRegions {
    /// Regions around the record centers, merging eigenvalues that agree
    /// within [`CLUSTER_TOLERANCE`].
    pub fn from_povm(povm: &PovmGrid) -> Self {
        let members = povm.decomposition.clusters(CLUSTER_TOLERANCE);
        let sites = members
            .iter()
            .map(|m| m.iter().map(|&i| povm.centers[i]).sum::<C64>() / m.len() as f64)
            .collect();
        Self {
            kind: povm.kind,
            sites,
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Index of the region containing `z`.
    pub fn assign(&self, z: C64) -> usize {
        let dist = |s: &C64| match self.kind {
            OutcomeKind::Complex => (z - s).norm_sqr(),
            OutcomeKind::Real => (z.re - s.re).powi(2),
        };
        let mut best = 0;
        for (k, s) in self.sites.iter().enumerate() {
            if dist(s) < dist(&self.sites[best]) {
                best = k;
            }
        }
        best
    }

    /// Region that owns eigenvector `i`.
    pub fn region_of(&self, i: usize) -> Option<usize> {
        self.members.iter().position(|m| m.contains(&i))
    }
}

/// `∫_u^v e^{−t²}/√π dt`, using complementary error functions on the tails.
fn gauss_interval(u: f64, v: f64) -> f64 {
    let (u, v) = (u.clamp(-40.0, 40.0), v.clamp(-40.0, 40.0));
    if u >= 0.0 {
        0.5 * (erfc(u) - erfc(v))
    } else if v <= 0.0 {
        0.5 * (erfc(-v) - erfc(-u))
    } else {
        1.0 - 0.5 * erfc(-u) - 0.5 * erfc(v)
    }
}

/// Unit direction of the line through all sites, if they are collinear.
fn common_line(sites: &[C64]) -> Option<C64> {
    let s0 = sites[0];
    let far = sites.iter().copied().max_by(|a, b| (a - s0).norm().total_cmp(&(b - s0).norm()))?;
    let span = (far - s0).norm();
    if span == 0.0 {
        return Some(C64::new(1.0, 0.0));
    }
    let dir = (far - s0) / span;
    let off = sites
        .iter()
        .map(|s| ((s - s0) * dir.conj()).im.abs())
        .fold(0.0, f64::max);
    (off <= 1e-12 * span.max(1.0)).then_some(dir)
}

/// Masses of 1-D Gaussians (variance `w/2`) in the nearest-site intervals.
fn strip_masses(sites: &[f64], centers: &[f64], w: f64) -> Vec<Vec<f64>> {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| sites[a].total_cmp(&sites[b]));
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); sites.len()];
    for k in 0..order.len() {
        let lo = if k == 0 {
            f64::NEG_INFINITY
        } else {
            0.5 * (sites[order[k - 1]] + sites[order[k]])
        };
        let hi = if k + 1 == order.len() {
            f64::INFINITY
        } else {
            0.5 * (sites[order[k]] + sites[order[k + 1]])
        };
        bounds[order[k]] = (lo, hi);
    }
    let s = w.sqrt();
    centers
        .iter()
        .map(|&c| {
            bounds
                .iter()
                .map(|&(lo, hi)| gauss_interval((lo - c) / s, (hi - c) / s))
                .collect()
        })
        .collect()
}

/// `Re(z n̄) ≤ b`
#[derive(Clone, Copy)]
struct HalfPlane {
    n: C64,
    b: f64,
}

impl HalfPlane {
    fn value(&self, z: C64) -> f64 {
        (z * self.n.conj()).re - self.b
    }
}

fn clip(poly: &[C64], h: &HalfPlane) -> Vec<C64> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let (fp, fq) = (h.value(p), h.value(q));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            out.push(p + (q - p) * (fp / (fp - fq)));
        }
    }
    out
}

fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(16).unwrap()))
}

fn adaptive(a: f64, b: f64, f: &dyn Fn(f64) -> f64, whole: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl16().integrate(a, m, f);
    let right = gl16().integrate(m, b, f);
    let halves = left + right;
    if depth == 0 || (halves - whole).abs() <= 1e-17 + 1e-15 * halves.abs() {
        return halves;
    }
    adaptive(a, m, f, left, depth - 1) + adaptive(m, b, f, right, depth - 1)
}

/// Mass of the isotropic Gaussian `e^{−|z−c|²/w}/(πw)` inside a convex
/// polygon, by integrating the radial closed form over the polar angle.
fn polygon_mass(c: C64, w: f64, planes: &[HalfPlane], vertices: &[C64]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let ray = |theta: f64| {
        let u = C64::from_polar(1.0, theta);
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for h in planes {
            let nc = h.value(c);
            let nu = (u * h.n.conj()).re;
            if nu.abs() < 1e-300 {
                if nc > 0.0 {
                    return 0.0;
                }
            } else if nu > 0.0 {
                hi = hi.min(-nc / nu);
            } else {
                lo = lo.max(-nc / nu);
            }
        }
        if lo >= hi {
            return 0.0;
        }
        ((-lo * lo / w).exp() - (-hi * hi / w).exp()) / (2.0 * PI)
    };
    let mut cuts: Vec<f64> = vertices
        .iter()
        .map(|v| (v - c).arg().rem_euclid(2.0 * PI))
        .collect();
    cuts.push(0.0);
    cuts.push(2.0 * PI);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let panels = ((b - a) / 0.1).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for k in 0..panels {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let whole = gl16().integrate(lo, hi, ray);
            total += adaptive(lo, hi, &ray, whole, 24);
        }
    }
    total
}

/// Gaussian masses of general planar Voronoi cells.
fn polygon_masses(sites: &[C64], centers: &[C64], w: f64) -> Vec<Vec<f64>> {
    let pad = 40.0 * w.sqrt() + 10.0;
    let lo = C64::new(
        sites.iter().chain(centers).map(|z| z.re).fold(f64::INFINITY, f64::min) - pad,
        sites.iter().chain(centers).map(|z| z.im).fold(f64::INFINITY, f64::min) - pad,
    );
    let hi = C64::new(
        sites.iter().chain(centers).map(|z| z.re).fold(f64::NEG_INFINITY, f64::max) + pad,
        sites.iter().chain(centers).map(|z| z.im).fold(f64::NEG_INFINITY, f64::max) + pad,
    );
    let boxed = [
        HalfPlane { n: C64::new(1.0, 0.0), b: hi.re },
        HalfPlane { n: C64::new(-1.0, 0.0), b: -lo.re },
        HalfPlane { n: C64::new(0.0, 1.0), b: hi.im },
        HalfPlane { n: C64::new(0.0, -1.0), b: -lo.im },
    ];
    let cells: Vec<(Vec<HalfPlane>, Vec<C64>)> = (0..sites.len())
        .map(|j| {
            let mut planes = boxed.to_vec();
            for (i, si) in sites.iter().enumerate() {
                if i != j {
                    let n = si - sites[j];
                    planes.push(HalfPlane {
                        n,
                        b: 0.5 * (si.norm_sqr() - sites[j].norm_sqr()),
                    });
                }
            }
            let mut poly = vec![lo, C64::new(hi.re, lo.im), hi, C64::new(lo.re, hi.im)];
            for h in &planes[4..] {
                poly = clip(&poly, h);
            }
            (planes, poly)
        })
        .collect();
    centers
        .iter()
        .map(|&c| cells.iter().map(|(p, v)| polygon_mass(c, w, p, v)).collect())
        .collect()
}

/// `masses[i][j]`: probability that record `i` lands in region `j`.
pub fn region_masses(records: &GaussianRecords, regions: &DecisionRegions) -> Vec<Vec<f64>> {
    let n = records.centers.len();
    if regions.len() == 1 {
        return vec![vec![1.0]; n];
    }
    match (records.kind, common_line(&regions.sites)) {
        (OutcomeKind::Real, _) => {
            let sites: Vec<f64> = regions.sites.iter().map(|s| s.re).collect();
            let centers: Vec<f64> = records.centers.iter().map(|c| c.re).collect();
            strip_masses(&sites, &centers, records.width)
        }
        (OutcomeKind::Complex, Some(dir)) => {
            let s0 = regions.sites[0];
            let proj = |z: &C64| ((z - s0) * dir.conj()).re;
            let sites: Vec<f64> = regions.sites.iter().map(proj).collect();
            let centers: Vec<f64> = records.centers.iter().map(proj).collect();
            strip_masses(&sites, &centers, records.width)
        }
        (OutcomeKind::Complex, None) => polygon_masses(&regions.sites, &records.centers, records.width),
    }
}

fn check_regions(povm: &PovmGrid, regions: &DecisionRegions) -> Result<()> {
    if povm.kind != regions.kind {
        return Err(invalid("regions", "outcome kinds differ"));
    }
    let n = povm.decomposition.dim();
    let owned: usize = regions.members.iter().map(|m| m.len()).sum();
    if owned != n || (0..n).any(|i| regions.region_of(i).is_none()) {
        return Err(invalid("regions", "every eigenvector must belong to exactly one region"));
    }
    Ok(())
}

/// One operator per region: `Π_j = ∫_{R_j} E`.
///
/// Closed-form records are integrated exactly with error functions (strips)
/// or a polar quadrature of the radial closed form (general cells). Explicit
/// grids are summed cell by cell and must reach five widths beyond every
/// center.
pub fn coarse_grain(povm: &PovmGrid, regions: &DecisionRegions) -> Result<Vec<Operator>> {
    check_regions(povm, regions)?;
    let dims = povm.decomposition.dims().to_vec();
    match &povm.elements {
        PovmElements::ClosedForm(rec) => {
            let masses = region_masses(rec, regions);
            let e = &povm.decomposition.eigenvectors;
            let n = povm.decomposition.dim();
            Ok((0..regions.len())
                .map(|j| {
                    let scaled = Mat::from_fn(n, n, |r, k| e[(r, k)] * masses[k][j]);
                    Operator::new(dims.clone(), &scaled * e.adjoint()).expect("square")
                })
                .collect())
        }
        PovmElements::Explicit(elems) => {
            let need = 5.0 * povm.width.sqrt();
            if povm.radius + 1e-12 < need {
                return Err(Error::Coverage(format!(
                    "grid reaches {:.3e} beyond the centers, decision regions need {:.3e}",
                    povm.radius, need
                )));
            }
            let mut out = vec![Operator::zeros(dims); regions.len()];
            let cell = C64::new(povm.cell_measure, 0.0);
            for (z, e) in povm.outcomes.iter().zip(elems) {
                let j = regions.assign(*z);
                out[j] = out[j].add(&e.scale(cell))?;
            }
            Ok(out)
        }
    }
}

/// `⟨e_i|Π_{R(i)}|e_i⟩` for every eigenvector `i`.
pub fn own_region_weights(povm: &PovmGrid, regions: &DecisionRegions) -> Result<Vec<f64>> {
    let pis = coarse_grain(povm, regions)?;
    let d = &povm.decomposition;
    Ok((0..d.dim())
        .map(|i| {
            let j = regions.region_of(i).expect("checked");
            let v = d.eigenvector(i);
            let pv = pis[j].apply(&v);
            v.iter().zip(&pv).map(|(a, b)| a.conj() * b).sum::<C64>().re
        })
        .collect())
}
