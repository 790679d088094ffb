use std::sync::Arc;

use faer::Mat;

use super::kernel::{quadrature_kernel, QuadratureKernel};
use super::spec::normality_tol;
use crate::error::{invalid, Error, Result};
use crate::fock::{
    annihilation_op, embed, guarded_levels, normal_decompose, quadrature_ops, tensor_ops,
    unitary_from_generator, FockSpace, Operator, SpectralDecomposition, C64,
};

/// Side length above which dense composite unitaries are refused.
pub const DENSE_LIMIT: usize = 4096;

/// Unitary of the form `Σ_i |e_i⟩⟨e_i| ⊗ D(α_i¹) ⊗ … ⊗ D(α_iᵏ)`.
///
/// Every nonlinear amplifier here is of this shape once `f` is diagonalized, so
/// the composite matrix is never needed to act on a state.
#[derive(Clone, Debug)]
pub struct BlockUnitary {
    dims: Vec<usize>,
    decomp: SpectralDecomposition,
    /// `shifts[i][k]`: displacement of meter `k` in block `i`.
    shifts: Vec<Vec<C64>>,
    kernels: Vec<Arc<QuadratureKernel>>,
}

impl BlockUnitary {
    fn new(decomp: SpectralDecomposition, meter_dims: &[usize], shifts: Vec<Vec<C64>>) -> Result<Self> {
        let kernels = meter_dims
            .iter()
            .map(|&d| quadrature_kernel(d))
            .collect::<Result<Vec<_>>>()?;
        let mut dims = vec![decomp.dim()];
        dims.extend_from_slice(meter_dims);
        Ok(Self {
            dims,
            decomp,
            shifts,
            kernels,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomp
    }

    pub fn shifts(&self) -> &[Vec<C64>] {
        &self.shifts
    }

    fn meter_side(&self) -> usize {
        self.dims[1..].iter().product()
    }

    /// `v ← D(α¹) ⊗ … ⊗ D(αᵏ) v` on the meter factor.
    fn apply_meters(&self, alphas: &[C64], v: &mut [C64]) {
        match self.kernels.len() {
            1 => self.kernels[0].apply_displacement(alphas[0], v),
            2 => {
                let (db, dc) = (self.dims[1], self.dims[2]);
                let mut col = vec![C64::new(0.0, 0.0); db];
                for c in 0..dc {
                    for b in 0..db {
                        col[b] = v[b * dc + c];
                    }
                    self.kernels[0].apply_displacement(alphas[0], &mut col);
                    for b in 0..db {
                        v[b * dc + c] = col[b];
                    }
                }
                for row in v.chunks_mut(dc) {
                    self.kernels[1].apply_displacement(alphas[1], row);
                }
            }
            _ => unreachable!("at most two meters"),
        }
    }

    /// `U|ψ⟩` for a composite ket ordered (signal, meters…).
    pub fn apply(&self, psi: &[C64]) -> Result<Vec<C64>> {
        let side: usize = self.dims.iter().product();
        if psi.len() != side {
            return Err(Error::DimensionMismatch {
                expected: side,
                got: psi.len(),
            });
        }
        let da = self.dims[0];
        let m = self.meter_side();
        let mut out = vec![C64::new(0.0, 0.0); side];
        let e = &self.decomp.eigenvectors;
        for i in 0..da {
            let mut block = vec![C64::new(0.0, 0.0); m];
            for a in 0..da {
                let w = e[(a, i)].conj();
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                for (bj, pj) in block.iter_mut().zip(&psi[a * m..(a + 1) * m]) {
                    *bj += w * pj;
                }
            }
            if block.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            self.apply_meters(&self.shifts[i], &mut block);
            for a in 0..da {
                let w = e[(a, i)];
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                for (oj, bj) in out[a * m..(a + 1) * m].iter_mut().zip(&block) {
                    *oj += w * bj;
                }
            }
        }
        Ok(out)
    }

    /// Dense composite matrix; refused above [`DENSE_LIMIT`].
    pub fn to_operator(&self) -> Result<Operator> {
        let side: usize = self.dims.iter().product();
        if side > DENSE_LIMIT {
            return Err(Error::Truncation(format!(
                "dense unitary of side {side} exceeds the limit {DENSE_LIMIT}"
            )));
        }
        let da = self.dims[0];
        let m = self.meter_side();
        let e = &self.decomp.eigenvectors;
        let mut u = Mat::<C64>::zeros(side, side);
        for i in 0..da {
            let mut meter = Mat::<C64>::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
            for (k, kern) in self.kernels.iter().enumerate() {
                let dk = kern.displacement(self.shifts[i][k]);
                let (r0, c0) = (meter.nrows(), meter.ncols());
                let (r1, c1) = (dk.nrows(), dk.ncols());
                meter = Mat::from_fn(r0 * r1, c0 * c1, |p, q| meter[(p / r1, q / c1)] * dk[(p % r1, q % c1)]);
            }
            for a in 0..da {
                for a2 in 0..da {
                    let w = e[(a, i)] * e[(a2, i)].conj();
                    if w.norm() < 1e-300 {
                        continue;
                    }
                    for q in 0..m {
                        for p in 0..m {
                            u[(a * m + p, a2 * m + q)] += w * meter[(p, q)];
                        }
                    }
                }
            }
        }
        Operator::new(self.dims.clone(), u)
    }
}

fn check_meter_dims(dims: &[usize]) -> Result<()> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidDimension(*dims.iter().min().unwrap()));
    }
    Ok(())
}

fn warn_occupancy(max_shift: f64, dim: usize) {
    if (max_shift + 4.0).powi(2) > dim as f64 {
        log::warn!("meter shift {max_shift:.3} is large for meter dimension {dim}");
    }
}

/// `U = exp(g(f b† − f† b))` for normal `f`, as blocks `D(g𝔣_i)` on the meter.
pub fn two_mode_unitary(f: &Operator, g: f64, dim_b: usize) -> Result<BlockUnitary> {
    check_meter_dims(&[dim_b])?;
    let d = normal_decompose(f, None)?;
    let shifts: Vec<Vec<C64>> = d.eigenvalues.iter().map(|&z| vec![z * g]).collect();
    warn_occupancy(g * d.max_abs_eigenvalue(), dim_b);
    BlockUnitary::new(d, &[dim_b], shifts)
}

/// `V = exp(−i√2 g f p_b)` for Hermitian `f`; each block is `D(g f_i)`.
pub fn von_neumann_unitary(f: &Operator, g: f64, dim_b: usize) -> Result<BlockUnitary> {
    check_meter_dims(&[dim_b])?;
    let h = f.hermiticity_residual();
    if !(h < normality_tol(f)) {
        return Err(Error::NotHermitian(h));
    }
    let d = normal_decompose(f, None)?;
    let shifts: Vec<Vec<C64>> = d
        .eigenvalues
        .iter()
        .map(|&z| vec![C64::new(g * z.re, 0.0)])
        .collect();
    warn_occupancy(g * d.max_abs_eigenvalue(), dim_b);
    BlockUnitary::new(d, &[dim_b], shifts)
}

/// `W = exp(−i g (f_R p_b + f_I p_c))` with `f = (f_R + i f_I)/√2` normal.
///
/// `f_R` and `f_I` share the eigenvectors of `f` with eigenvalues
/// `√2 Re 𝔣_k` and `√2 Im 𝔣_k`, so block `k` is `D_b(g Re 𝔣_k) ⊗ D_c(g Im 𝔣_k)`.
pub fn three_mode_unitary(f: &Operator, g: f64, dim_b: usize, dim_c: usize) -> Result<BlockUnitary> {
    check_meter_dims(&[dim_b, dim_c])?;
    let d = normal_decompose(f, None)?;
    let shifts: Vec<Vec<C64>> = d
        .eigenvalues
        .iter()
        .map(|&z| vec![C64::new(g * z.re, 0.0), C64::new(g * z.im, 0.0)])
        .collect();
    warn_occupancy(g * d.max_abs_eigenvalue(), dim_b.min(dim_c));
    BlockUnitary::new(d, &[dim_b, dim_c], shifts)
}

fn require_dense(side: usize) -> Result<()> {
    if side > DENSE_LIMIT {
        return Err(Error::Truncation(format!(
            "dense route of side {side} exceeds the limit {DENSE_LIMIT}"
        )));
    }
    Ok(())
}

fn require_normal(f: &Operator) -> Result<()> {
    let c = f.normality_residual();
    if !(c < normality_tol(f)) {
        return Err(Error::NotNormal(c));
    }
    Ok(())
}

/// `(f_R, f_I)` with `f_R = (f + f†)/√2`, `f_I = −i(f − f†)/√2`.
pub fn real_imag_parts(f: &Operator) -> (Operator, Operator) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let fd = f.adjoint();
    let r = f.add(&fd).unwrap().scale(C64::new(s, 0.0));
    let i = f.sub(&fd).unwrap().scale(C64::new(0.0, -s));
    (r, i)
}

/// Two-mode unitary from the exponentiated composite generator.
pub fn two_mode_unitary_dense(f: &Operator, g: f64, dim_b: usize) -> Result<Operator> {
    require_normal(f)?;
    let da = f.dim();
    require_dense(da * dim_b)?;
    let b = annihilation_op(FockSpace::new(dim_b)?);
    let fb_dag = tensor_ops(&[f, &b.adjoint()])?;
    let fd_b = tensor_ops(&[&f.adjoint(), &b])?;
    // exp(A) with A = g(f b† − f† b) anti-Hermitian, i.e. exp(−iH) with H = iA
    let h = fb_dag.sub(&fd_b)?.scale(C64::new(0.0, g));
    let h = symmetrize(&h);
    unitary_from_generator(&h, 1.0)
}

/// `e^{g f b†} e^{−g f† b} e^{−g² f†f/2}`, the ordered product form.
///
/// The first two factors are exact terminating series, since `b` and `b†` are
/// nilpotent on the truncation; the last is a function of the normal `f`.
pub fn two_mode_unitary_factored(f: &Operator, g: f64, dim_b: usize) -> Result<Operator> {
    require_normal(f)?;
    let da = f.dim();
    require_dense(da * dim_b)?;
    let b = annihilation_op(FockSpace::new(dim_b)?);
    let raise = tensor_ops(&[f, &b.adjoint()])?.scale(C64::new(g, 0.0));
    let lower = tensor_ops(&[&f.adjoint(), &b])?.scale(C64::new(-g, 0.0));
    let e1 = nilpotent_exp(&raise, dim_b)?;
    let e2 = nilpotent_exp(&lower, dim_b)?;
    let dec = normal_decompose(f, None)?;
    let damp = dec.function(|z| C64::new((-0.5 * g * g * z.norm_sqr()).exp(), 0.0));
    let e3 = tensor_ops(&[&damp, &Operator::identity(vec![dim_b])])?;
    e1.mul(&e2)?.mul(&e3)
}

/// `Σ_{k<order} X^k/k!`, exact when `X^order = 0`.
fn nilpotent_exp(x: &Operator, order: usize) -> Result<Operator> {
    let mut term = Operator::identity(x.dims().to_vec());
    let mut sum = term.clone();
    for k in 1..order {
        term = term.mul(x)?.scale(C64::new(1.0 / k as f64, 0.0));
        if term.max_abs() == 0.0 {
            break;
        }
        sum = sum.add(&term)?;
    }
    Ok(sum)
}

fn symmetrize(h: &Operator) -> Operator {
    let hd = h.adjoint();
    h.add(&hd).unwrap().scale(C64::new(0.5, 0.0))
}

/// Von Neumann unitary from the exponentiated composite generator.
pub fn von_neumann_unitary_dense(f: &Operator, g: f64, dim_b: usize) -> Result<Operator> {
    let h = f.hermiticity_residual();
    if !(h < normality_tol(f)) {
        return Err(Error::NotHermitian(h));
    }
    require_dense(f.dim() * dim_b)?;
    let (_, p) = quadrature_ops(FockSpace::new(dim_b)?);
    let gen = tensor_ops(&[f, &p])?.scale(C64::new(std::f64::consts::SQRT_2 * g, 0.0));
    unitary_from_generator(&symmetrize(&gen), 1.0)
}

/// Three-mode unitary from the full generator `g(f_R p_b + f_I p_c)`.
pub fn three_mode_unitary_direct(f: &Operator, g: f64, dim_b: usize, dim_c: usize) -> Result<Operator> {
    require_normal(f)?;
    require_dense(f.dim() * dim_b * dim_c)?;
    let (fr, fi) = real_imag_parts(f);
    let (_, pb) = quadrature_ops(FockSpace::new(dim_b)?);
    let (_, pc) = quadrature_ops(FockSpace::new(dim_c)?);
    let ib = Operator::identity(vec![dim_b]);
    let ic = Operator::identity(vec![dim_c]);
    let gen = tensor_ops(&[&fr, &pb, &ic])?
        .add(&tensor_ops(&[&fi, &ib, &pc])?)?
        .scale(C64::new(g, 0.0));
    unitary_from_generator(&symmetrize(&gen), 1.0)
}

/// `e^{−i g f_R p_b} e^{−i g f_I p_c}`, each factor exponentiated separately.
pub fn three_mode_unitary_factored(f: &Operator, g: f64, dim_b: usize, dim_c: usize) -> Result<Operator> {
    require_normal(f)?;
    require_dense(f.dim() * dim_b * dim_c)?;
    let (fr, fi) = real_imag_parts(f);
    let (_, pb) = quadrature_ops(FockSpace::new(dim_b)?);
    let (_, pc) = quadrature_ops(FockSpace::new(dim_c)?);
    let ib = Operator::identity(vec![dim_b]);
    let ic = Operator::identity(vec![dim_c]);
    let gb = tensor_ops(&[&fr, &pb, &ic])?.scale(C64::new(g, 0.0));
    let gc = tensor_ops(&[&fi, &ib, &pc])?.scale(C64::new(g, 0.0));
    let wb = unitary_from_generator(&symmetrize(&gb), 1.0)?;
    let wc = unitary_from_generator(&symmetrize(&gc), 1.0)?;
    wb.mul(&wc)
}

/// Dense two-mode squeezer `exp[r(a†b† − ab)]` with `g = cosh r`, so that
/// `U† a U = g a + √(g²−1) b†`.
pub fn linear_amp_unitary(g: f64, dim_a: usize, dim_b: usize) -> Result<Operator> {
    if !(g >= 1.0) || !g.is_finite() {
        return Err(Error::GainOutOfRange(g));
    }
    require_dense(dim_a * dim_b)?;
    let r = g.acosh();
    let a = embed(&annihilation_op(FockSpace::new(dim_a)?), 0, &[dim_a, dim_b])?;
    let b = embed(&annihilation_op(FockSpace::new(dim_b)?), 1, &[dim_a, dim_b])?;
    let ab = a.mul(&b)?;
    let gen = ab.adjoint().sub(&ab)?.scale(C64::new(0.0, r));
    unitary_from_generator(&symmetrize(&gen), 1.0)
}

/// Upper bound on the probability that `D(α)|k⟩` reaches level `level` or above,
/// from a Poisson tail with mean `(|α| + √k)²`.
pub fn displaced_tail(alpha: f64, k: usize, level: usize) -> f64 {
    let mu = (alpha.abs() + (k as f64).sqrt()).powi(2);
    if mu == 0.0 {
        return if level == 0 { 1.0 } else { 0.0 };
    }
    let mut total = 0.0;
    for n in level..level + 400 {
        let lp = n as f64 * mu.ln() - mu - libm::lgamma(n as f64 + 1.0);
        let p = lp.exp();
        total += p;
        if n as f64 > mu && p < 1e-30 {
            break;
        }
    }
    total
}

/// Composite basis columns `|a, k…⟩` on which truncated input-output identities
/// are expected to hold.
///
/// `a` must lie in the guarded levels of the signal mode and every eigenvector
/// overlapping `|a⟩` must keep each displaced meter `D(α)|k⟩` below the
/// guarded cutoff up to a tail of `tail_tol`.
pub fn guarded_columns(u: &BlockUnitary, tail_tol: f64) -> Vec<usize> {
    let dims = u.dims();
    let da = dims[0];
    let meters = &dims[1..];
    let e = &u.decomposition().eigenvectors;
    let mut cols = Vec::new();
    let meter_side: usize = meters.iter().product();
    for a in guarded_levels(da) {
        let relevant: Vec<usize> = (0..da).filter(|&i| e[(a, i)].norm() > 1e-12).collect();
        'meter: for m in 0..meter_side {
            let mut rem = m;
            let mut levels = vec![0usize; meters.len()];
            for (k, &dk) in meters.iter().enumerate().rev() {
                levels[k] = rem % dk;
                rem /= dk;
            }
            for (k, &dk) in meters.iter().enumerate() {
                let cut = guarded_levels(dk).end;
                if levels[k] >= cut {
                    continue 'meter;
                }
                for &i in &relevant {
                    if displaced_tail(u.shifts()[i][k].norm(), levels[k], cut) > tail_tol {
                        continue 'meter;
                    }
                }
            }
            cols.push(a * meter_side + m);
        }
    }
    cols
}

/// Rejects builders asked for a meter dimension outside `[2, 4096]`.
pub fn auto_meter_dim(g: f64, max_eigenvalue: f64, spread: f64) -> Result<usize> {
    if !(spread >= 1.0) {
        return Err(invalid("spread", "must be at least 1"));
    }
    let need = (g * max_eigenvalue + 6.0 * spread).powi(2).ceil() as usize;
    if need > 4096 {
        return Err(Error::Truncation(format!(
            "meter dimension {need} needed for g·max|f| = {:.3} exceeds 4096",
            g * max_eigenvalue
        )));
    }
    Ok(need.max(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::number_op;

    fn parity(d: usize) -> Operator {
        Operator::from_fn(vec![d], |i, j| {
            if i == j {
                C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn block_and_dense_routes_agree() {
        let f = number_op(FockSpace::new(4).unwrap()).shift(C64::new(0.0, 0.3));
        let u = two_mode_unitary(&f, 0.6, 12).unwrap().to_operator().unwrap();
        let dense = two_mode_unitary_dense(&f, 0.6, 12).unwrap();
        assert!(u.distance(&dense).unwrap() < 1e-10);
        assert!(u.unitarity_residual() < 1e-10);
    }

    #[test]
    fn zero_gain_is_identity() {
        let f = number_op(FockSpace::new(3).unwrap());
        let u = two_mode_unitary(&f, 0.0, 6).unwrap().to_operator().unwrap();
        assert!(u.distance(&Operator::identity(vec![3, 6])).unwrap() < 1e-12);
        let w = three_mode_unitary(&f, 0.0, 4, 4).unwrap().to_operator().unwrap();
        assert!(w.distance(&Operator::identity(vec![3, 4, 4])).unwrap() < 1e-12);
    }

    #[test]
    fn parity_phase_two_mode_is_unitary() {
        let u = two_mode_unitary(&parity(6), 0.5, 16).unwrap().to_operator().unwrap();
        assert!(u.unitarity_residual() < 1e-10);
    }

    #[test]
    fn apply_matches_dense_matrix() {
        let f = number_op(FockSpace::new(3).unwrap()).scale(C64::new(0.6, 0.8));
        let u = three_mode_unitary(&f, 0.7, 5, 6).unwrap();
        let dense = u.to_operator().unwrap();
        let psi: Vec<C64> = (0..90).map(|k| C64::new((k as f64).sin(), (0.3 * k as f64).cos())).collect();
        let x = u.apply(&psi).unwrap();
        let y = dense.apply(&psi);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-11);
        }
    }

    #[test]
    fn three_mode_routes_agree() {
        let f = number_op(FockSpace::new(3).unwrap()).shift(C64::new(0.0, 0.3));
        let direct = three_mode_unitary_direct(&f, 0.7, 10, 10).unwrap();
        let factored = three_mode_unitary_factored(&f, 0.7, 10, 10).unwrap();
        let block = three_mode_unitary(&f, 0.7, 10, 10).unwrap().to_operator().unwrap();
        assert!(direct.distance(&factored).unwrap() < 1e-8);
        assert!(direct.distance(&block).unwrap() < 1e-9);
    }

    #[test]
    fn von_neumann_routes_agree() {
        let f = number_op(FockSpace::new(4).unwrap());
        let dense = von_neumann_unitary_dense(&f, 0.8, 14).unwrap();
        let block = von_neumann_unitary(&f, 0.8, 14).unwrap().to_operator().unwrap();
        assert!(dense.distance(&block).unwrap() < 1e-9);
    }

    #[test]
    fn linear_amp_at_unit_gain_is_identity() {
        let u = linear_amp_unitary(1.0, 5, 5).unwrap();
        assert!(u.distance(&Operator::identity(vec![5, 5])).unwrap() < 1e-14);
        assert!(matches!(linear_amp_unitary(0.9, 5, 5), Err(Error::GainOutOfRange(_))));
    }

    #[test]
    fn tail_bound_is_monotone() {
        assert!(displaced_tail(0.0, 0, 5) == 0.0);
        assert!(displaced_tail(2.0, 0, 20) < displaced_tail(3.0, 0, 20));
        assert!(displaced_tail(1.0, 0, 22) < 1e-9);
    }

    #[test]
    fn auto_dimension_formula() {
        assert_eq!(auto_meter_dim(4.0, 7.0, 1.0).unwrap(), 1156);
        assert!(matches!(auto_meter_dim(10.0, 7.0, 1.0), Err(Error::Truncation(_))));
    }
}
