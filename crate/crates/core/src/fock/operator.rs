use faer::Mat;

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Dense complex operator on one mode or on an ordered product of modes.
///
/// The matrix side always equals the product of `dims`; composite indices
/// are row-major with the first mode most significant.
#[derive(Clone, Debug)]
pub struct Operator {
    dims: Vec<usize>,
    mat: Mat<C64>,
}

impl Operator {
    pub fn new(dims: Vec<usize>, mat: Mat<C64>) -> Result<Self> {
        let side: usize = dims.iter().product();
        if mat.nrows() != side || mat.ncols() != side {
            return Err(Error::DimensionMismatch {
                expected: side,
                got: mat.nrows().max(mat.ncols()),
            });
        }
        for j in 0..side {
            for i in 0..side {
                let z = mat[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::Decomposition(format!(
                        "non-finite matrix entry at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { dims, mat })
    }

    pub(crate) fn from_parts(dims: Vec<usize>, mat: Mat<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), dims.iter().product::<usize>());
        Self { dims, mat }
    }

    pub fn from_fn(dims: Vec<usize>, f: impl FnMut(usize, usize) -> C64) -> Self {
        let side = dims.iter().product();
        Self {
            mat: Mat::from_fn(side, side, f),
            dims,
        }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let side = dims.iter().product();
        Self {
            mat: Mat::identity(side, side),
            dims,
        }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let side = dims.iter().product();
        Self {
            mat: Mat::zeros(side, side),
            dims,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Side length of the matrix.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: self.mat.adjoint().to_owned(),
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat - &other.mat,
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        let n = self.dim();
        Self {
            dims: self.dims.clone(),
            mat: Mat::from_fn(n, n, |i, j| c * self.mat[(i, j)]),
        }
    }

    /// `A + c·I`
    pub fn shift(&self, c: C64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.mat[(i, i)] += c;
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.mat[(i, j)].norm());
            }
        }
        m
    }

    /// `max |A - A†|`
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                m = m.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() < tol
    }

    /// `max |U†U - I|`
    pub fn unitarity_residual(&self) -> f64 {
        let prod = self.mat.adjoint() * &self.mat;
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                m = m.max((prod[(i, j)] - target).norm());
            }
        }
        m
    }

    /// `max |[A, A†]|`
    pub fn normality_residual(&self) -> f64 {
        let a = &self.mat;
        let ad = a.adjoint().to_owned();
        let c = a * &ad - &ad * a;
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(c[(i, j)].norm());
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length does not match operator");
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.mat[(i, j)] * vj;
            }
        }
        out
    }

    /// Restriction `P A P` where `P` keeps the listed basis indices.
    pub fn restricted_max_abs(&self, keep: &[usize]) -> f64 {
        let mut m = 0.0f64;
        for &j in keep {
            for &i in keep {
                m = m.max(self.mat[(i, j)].norm());
            }
        }
        m
    }

    /// `max |A - B|` restricted to rows and columns in `keep`.
    pub fn restricted_distance(&self, other: &Self, keep: &[usize]) -> Result<f64> {
        self.check_same(other)?;
        let mut m = 0.0f64;
        for &j in keep {
            for &i in keep {
                m = m.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        Ok(m)
    }

    /// `max |A - B|` over the listed columns and all rows.
    pub fn column_distance(&self, other: &Self, cols: &[usize]) -> Result<f64> {
        self.check_same(other)?;
        let mut m = 0.0f64;
        for &j in cols {
            for i in 0..self.dim() {
                m = m.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        Ok(m)
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }
}
