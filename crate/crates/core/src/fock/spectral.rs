use faer::{Mat, Side};

use super::operator::{Operator, C64};
use crate::error::{Error, Result};

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const CLUSTER_TOLERANCE: f64 = 1e-8;

const HERMITIAN_GENERATOR_TOL: f64 = 1e-10;

/// Eigensystem of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(f(λ)) V†`
    pub fn function(&self, f: impl Fn(f64) -> C64) -> Mat<C64> {
        let n = self.dim();
        let fv: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let scaled = Mat::from_fn(n, n, |i, k| self.vectors[(i, k)] * fv[k]);
        &scaled * self.vectors.adjoint()
    }

    /// `exp(-i t H)`
    pub fn exp_i(&self, t: f64) -> Mat<C64> {
        self.function(|l| C64::from_polar(1.0, -l * t))
    }
}

pub fn hermitian_eigen(m: &Mat<C64>) -> Result<HermitianEigen> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok(HermitianEigen {
        values,
        vectors: e.U().to_owned(),
    })
}

/// `exp(-i H t)` by diagonalizing `H`, so the result is unitary to roundoff.
pub fn unitary_from_generator(h: &Operator, t: f64) -> Result<Operator> {
    let res = h.hermiticity_residual();
    if res >= HERMITIAN_GENERATOR_TOL {
        return Err(Error::NotHermitian(res));
    }
    if t == 0.0 || h.max_abs() == 0.0 {
        return Ok(Operator::identity(h.dims().to_vec()));
    }
    let eig = hermitian_eigen(h.matrix())?;
    Ok(Operator::from_parts(h.dims().to_vec(), eig.exp_i(t)))
}

/// `f = Σ_i 𝔣_i |e_i⟩⟨e_i|` for a normal operator.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    dims: Vec<usize>,
    pub eigenvalues: Vec<C64>,
    /// Orthonormal eigenvectors as columns.
    pub eigenvectors: Mat<C64>,
    /// `max |f − Σ 𝔣_i |e_i⟩⟨e_i||`
    pub residual: f64,
}

impl SpectralDecomposition {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        (0..self.dim()).map(|r| self.eigenvectors[(r, i)]).collect()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|z| z.im.abs() < tol)
    }

    /// `Σ_i h(𝔣_i) |e_i⟩⟨e_i|`
    pub fn function(&self, h: impl Fn(C64) -> C64) -> Operator {
        let n = self.dim();
        let hv: Vec<C64> = self.eigenvalues.iter().map(|&z| h(z)).collect();
        let scaled = Mat::from_fn(n, n, |i, k| self.eigenvectors[(i, k)] * hv[k]);
        Operator::from_parts(self.dims.clone(), &scaled * self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> Operator {
        self.function(|z| z)
    }

    /// Groups of eigenvalue indices whose members lie within `tol` of one another
    /// (transitively), in order of first appearance.
    pub fn clusters(&self, tol: f64) -> Vec<Vec<usize>> {
        cluster_indices(&self.eigenvalues, tol)
    }

    /// `max_{i≠j} |⟨e_i|e_j⟩|` together with `max_i |⟨e_i|e_i⟩ − 1|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let t = if i == j { 1.0 } else { 0.0 };
                m = m.max((g[(i, j)] - C64::new(t, 0.0)).norm());
            }
        }
        m
    }
}

pub(crate) fn cluster_indices(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() < tol {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = root(&mut label, i);
        match groups.iter_mut().find(|(k, _)| *k == r) {
            Some((_, g)) => g.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Spectral decomposition of a normal operator.
///
/// `tol` bounds `max |[f, f†]|`; the default is `1e-9·max|f|`. Hermitian input
/// goes through the self-adjoint solver, anything else through a complex Schur
/// form, which is diagonal when `f` is normal.
pub fn normal_decompose(f: &Operator, tol: Option<f64>) -> Result<SpectralDecomposition> {
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    let tol = tol.unwrap_or(1e-9 * scale).max(1e-300);
    let comm = f.normality_residual();
    if !(comm < tol) {
        return Err(Error::NotNormal(comm));
    }
    let n = f.dim();
    let (mut values, mut vectors) = if f.hermiticity_residual() < tol {
        let e = hermitian_eigen(f.matrix())?;
        (
            e.values.iter().map(|&l| C64::new(l, 0.0)).collect::<Vec<_>>(),
            e.vectors,
        )
    } else {
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| f.get(i, j));
        let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Decomposition("Schur iteration did not converge".into()))?;
        let (q, t) = schur.unpack();
        let mut off = 0.0f64;
        for j in 0..n {
            for i in 0..j {
                off = off.max(t[(i, j)].norm());
            }
        }
        if off >= 10.0 * tol {
            return Err(Error::Decomposition(format!(
                "Schur form of a normal operator has off-diagonal residual {off:.3e}"
            )));
        }
        (
            (0..n).map(|i| t[(i, i)]).collect::<Vec<_>>(),
            Mat::from_fn(n, n, |i, j| q[(i, j)]),
        )
    };

    // deterministic order: ascending real part, then imaginary part
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (values[a], values[b]);
        if (x.re - y.re).abs() < CLUSTER_TOLERANCE {
            x.im.total_cmp(&y.im)
        } else {
            x.re.total_cmp(&y.re)
        }
    });
    values = order.iter().map(|&k| values[k]).collect();
    vectors = Mat::from_fn(n, n, |i, j| vectors[(i, order[j])]);

    for cluster in cluster_indices(&values, CLUSTER_TOLERANCE) {
        if cluster.len() > 1 {
            orthonormalize_columns(&mut vectors, &cluster);
        }
    }

    let mut dec = SpectralDecomposition {
        dims: f.dims().to_vec(),
        eigenvalues: values,
        eigenvectors: vectors,
        residual: 0.0,
    };
    dec.residual = dec.reconstruct().distance(f)?;
    Ok(dec)
}

/// Modified Gram–Schmidt, two passes, over the listed columns.
fn orthonormalize_columns(v: &mut Mat<C64>, cols: &[usize]) {
    let n = v.nrows();
    for _ in 0..2 {
        for (k, &c) in cols.iter().enumerate() {
            for &p in &cols[..k] {
                let mut dot = C64::new(0.0, 0.0);
                for i in 0..n {
                    dot += v[(i, p)].conj() * v[(i, c)];
                }
                for i in 0..n {
                    let t = v[(i, p)] * dot;
                    v[(i, c)] -= t;
                }
            }
            let norm: f64 = (0..n).map(|i| v[(i, c)].norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                v[(i, c)] /= norm;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation_op, number_op, quadrature_ops, FockSpace};

    #[test]
    fn zero_generator_and_zero_time_give_identity() {
        let s = FockSpace::new(6).unwrap();
        let (x, _) = quadrature_ops(s);
        let id = Operator::identity(vec![6]);
        let u = unitary_from_generator(&Operator::zeros(vec![6]), 2.0).unwrap();
        assert!(u.distance(&id).unwrap() < 1e-15);
        let u = unitary_from_generator(&x, 0.0).unwrap();
        assert!(u.distance(&id).unwrap() < 1e-15);
    }

    #[test]
    fn x_generator_shifts_p() {
        // exact only well below the cutoff
        let s = FockSpace::new(40).unwrap();
        let (x, p) = quadrature_ops(s);
        let u = unitary_from_generator(&x, 1.0).unwrap();
        assert!(u.unitarity_residual() < 1e-10);
        let lhs = u.adjoint().mul(&p).unwrap().mul(&u).unwrap();
        let rhs = p.shift(C64::new(-1.0, 0.0));
        let keep: Vec<usize> = (0..8).collect();
        assert!(lhs.restricted_distance(&rhs, &keep).unwrap() < 1e-8);
    }

    #[test]
    fn non_hermitian_generator_is_rejected() {
        let a = annihilation_op(FockSpace::new(4).unwrap());
        assert!(matches!(unitary_from_generator(&a, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn number_operator_spectrum() {
        let d = normal_decompose(&number_op(FockSpace::new(6).unwrap()), None).unwrap();
        for (k, z) in d.eigenvalues.iter().enumerate() {
            assert!((z - C64::new(k as f64, 0.0)).norm() < 1e-12);
            assert!((d.eigenvectors[(k, k)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ladder_operator_is_not_normal() {
        let a = annihilation_op(FockSpace::new(8).unwrap());
        assert!(matches!(normal_decompose(&a, None), Err(Error::NotNormal(_))));
    }

    #[test]
    fn x_squared_matches_squared_x_eigenvalues() {
        let s = FockSpace::new(16).unwrap();
        let (x, _) = quadrature_ops(s);
        let x2 = x.mul(&x).unwrap();
        let d = normal_decompose(&x2, None).unwrap();
        assert!(d.eigenvalues.iter().all(|z| z.im.abs() < 1e-12 && z.re > -1e-8));
        let mut sq: Vec<f64> = hermitian_eigen(x.matrix())
            .unwrap()
            .values
            .iter()
            .map(|l| l * l)
            .collect();
        sq.sort_by(f64::total_cmp);
        for (z, l) in d.eigenvalues.iter().zip(&sq) {
            assert!((z.re - l).abs() < 1e-9);
        }
    }

    #[test]
    fn complex_normal_operator_through_schur() {
        let s = FockSpace::new(6).unwrap();
        let f = number_op(s)
            .scale(C64::new(0.6, 0.8))
            .shift(C64::new(0.0, 0.3));
        let d = normal_decompose(&f, None).unwrap();
        assert!(d.residual < 1e-10);
        assert!(d.orthonormality_residual() < 1e-10);
        assert!(!d.is_real(1e-6));
    }

    #[test]
    fn degenerate_cluster_is_orthonormal() {
        let parity = Operator::from_fn(vec![8], |i, j| {
            if i == j {
                C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let d = normal_decompose(&parity, None).unwrap();
        assert_eq!(d.clusters(CLUSTER_TOLERANCE).len(), 2);
        assert!(d.orthonormality_residual() < 1e-12);
    }
}
