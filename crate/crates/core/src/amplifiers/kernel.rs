//! Cached eigensystems of the truncated position quadrature and the meter
//! displacements built from them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::fock::C64;

/// Eigensystem of truncated `x` on one mode. The eigenvectors are real.
#[derive(Debug)]
pub struct QuadratureKernel {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<QuadratureKernel>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureKernel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared kernel for dimension `dim`, computed once per process.
pub fn quadrature_kernel(dim: usize) -> Result<Arc<QuadratureKernel>> {
    if let Some(k) = cache().lock().unwrap().get(&dim) {
        return Ok(k.clone());
    }
    let x = Mat::<f64>::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            (j as f64 / 2.0).sqrt()
        } else if i == j + 1 {
            (i as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let e = x
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let k = Arc::new(QuadratureKernel {
        values: (0..dim).map(|i| s[i]).collect(),
        vectors: e.U().to_owned(),
    });
    cache().lock().unwrap().insert(dim, k.clone());
    Ok(k)
}

impl QuadratureKernel {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `v ← exp(−i s x) v`
    pub fn apply_exp_x(&self, s: f64, v: &mut [C64]) {
        let n = self.dim();
        let mut w = vec![C64::new(0.0, 0.0); n];
        for (k, wk) in w.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                acc += *vi * self.vectors[(i, k)];
            }
            *wk = acc * C64::from_polar(1.0, -s * self.values[k]);
        }
        for (i, vi) in v.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (k, wk) in w.iter().enumerate() {
                acc += *wk * self.vectors[(i, k)];
            }
            *vi = acc;
        }
    }

    /// `v ← D(α) v` with `D(α) = exp(α b† − α* b)` on the truncation.
    ///
    /// Uses `D(α) = R exp(−i√2|α| x) R†` where `R = e^{i(arg α + π/2) n}`,
    /// which is exact for the truncated ladder operators.
    pub fn apply_displacement(&self, alpha: C64, v: &mut [C64]) {
        if alpha == C64::new(0.0, 0.0) {
            return;
        }
        let theta = alpha.arg() + std::f64::consts::FRAC_PI_2;
        for (n, vn) in v.iter_mut().enumerate() {
            *vn *= C64::from_polar(1.0, -theta * n as f64);
        }
        self.apply_exp_x(std::f64::consts::SQRT_2 * alpha.norm(), v);
        for (n, vn) in v.iter_mut().enumerate() {
            *vn *= C64::from_polar(1.0, theta * n as f64);
        }
    }

    /// Dense `D(α)`.
    pub fn displacement(&self, alpha: C64) -> Mat<C64> {
        let n = self.dim();
        let theta = alpha.arg() + std::f64::consts::FRAC_PI_2;
        let s = std::f64::consts::SQRT_2 * alpha.norm();
        let phase: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(1.0, -s * self.values[k]))
            .collect();
        let left = Mat::from_fn(n, n, |i, k| {
            C64::from_polar(1.0, theta * i as f64) * self.vectors[(i, k)] * phase[k]
        });
        let right = Mat::from_fn(n, n, |k, j| {
            C64::from_polar(1.0, -theta * j as f64) * self.vectors[(j, k)]
        });
        &left * &right
    }
}
