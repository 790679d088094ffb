use faer::Mat;

use super::operator::{Operator, C64};
use super::state::{State, StateData};
use crate::error::{invalid, Error, Result};

fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

/// Kronecker product, first factor most significant.
pub fn tensor_ops(ops: &[&Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| invalid("ops", "empty tensor product"))?;
    let mut dims = first.dims().to_vec();
    let mut mat = first.matrix().clone();
    for op in rest {
        dims.extend_from_slice(op.dims());
        mat = kron(&mat, op.matrix());
    }
    Ok(Operator::from_parts(dims, mat))
}

/// Product state; stays a ket when every factor is a ket.
pub fn tensor_states(states: &[&State]) -> Result<State> {
    let (first, rest) = states
        .split_first()
        .ok_or_else(|| invalid("states", "empty tensor product"))?;
    let mut dims = first.dims().to_vec();
    for s in rest {
        dims.extend_from_slice(s.dims());
    }
    if states.iter().all(|s| s.is_pure_ket()) {
        let mut v = first.ket().unwrap().to_vec();
        for s in rest {
            let w = s.ket().unwrap();
            v = v
                .iter()
                .flat_map(|x| w.iter().map(move |y| x * y))
                .collect();
        }
        return Ok(State::ket_unchecked(dims, v));
    }
    let mut rho = first.to_density();
    for s in rest {
        rho = kron(&rho, &s.to_density());
    }
    Ok(State::density_unchecked(dims, rho))
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on mode `slot`.
pub fn embed(op: &Operator, slot: usize, dims: &[usize]) -> Result<Operator> {
    if slot >= dims.len() {
        return Err(invalid("slot", format!("{slot} out of range for {} modes", dims.len())));
    }
    if op.dims() != [dims[slot]] {
        return Err(Error::DimensionMismatch {
            expected: dims[slot],
            got: op.dim(),
        });
    }
    let before: usize = dims[..slot].iter().product();
    let after: usize = dims[slot + 1..].iter().product();
    let mid = dims[slot];
    let side = before * mid * after;
    let mut mat = Mat::zeros(side, side);
    for b in 0..before {
        for j in 0..mid {
            for i in 0..mid {
                let z = op.get(i, j);
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..after {
                    mat[((b * mid + i) * after + c, (b * mid + j) * after + c)] = z;
                }
            }
        }
    }
    Ok(Operator::from_parts(dims.to_vec(), mat))
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Reduced state on the modes listed in `keep` (in the given order).
pub fn partial_trace(state: &State, keep: &[usize]) -> Result<State> {
    let dims = state.dims();
    let mut seen = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() || seen[k] {
            return Err(invalid("keep", format!("bad mode list {keep:?} for {} modes", dims.len())));
        }
        seen[k] = true;
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !seen[*k]).collect();
    let st = strides(dims);
    let index_of = |modes: &[usize], mut flat: usize| -> usize {
        // flat index over `modes` (row-major) to offset in the full space
        let mut off = 0;
        for &m in modes.iter().rev() {
            off += (flat % dims[m]) * st[m];
            flat /= dims[m];
        }
        off
    };
    let dk: usize = keep.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();
    let koff: Vec<usize> = (0..dk).map(|i| index_of(keep, i)).collect();
    let toff: Vec<usize> = (0..dt).map(|i| index_of(&traced, i)).collect();
    let mut red = Mat::<C64>::zeros(dk, dk);
    match state.data() {
        StateData::Ket(v) => {
            for &t in &toff {
                for (i, &ki) in koff.iter().enumerate() {
                    let a = v[ki + t];
                    if a == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (j, &kj) in koff.iter().enumerate() {
                        red[(i, j)] += a * v[kj + t].conj();
                    }
                }
            }
        }
        StateData::Density(rho) => {
            for &t in &toff {
                for (j, &kj) in koff.iter().enumerate() {
                    for (i, &ki) in koff.iter().enumerate() {
                        red[(i, j)] += rho[(ki + t, kj + t)];
                    }
                }
            }
        }
    }
    Ok(State::density_unchecked(
        keep.iter().map(|&k| dims[k]).collect(),
        red,
    ))
}

/// Permutation exchanging modes `i` and `j`, which must have equal dimension.
pub fn cv_swap(dims: &[usize], i: usize, j: usize) -> Result<Operator> {
    if i >= dims.len() || j >= dims.len() {
        return Err(invalid("mode", format!("swap ({i}, {j}) out of range")));
    }
    if dims[i] != dims[j] {
        return Err(Error::DimensionMismatch {
            expected: dims[i],
            got: dims[j],
        });
    }
    let st = strides(dims);
    let side: usize = dims.iter().product();
    let mut mat = Mat::zeros(side, side);
    for col in 0..side {
        let ni = (col / st[i]) % dims[i];
        let nj = (col / st[j]) % dims[j];
        let row = col - ni * st[i] - nj * st[j] + nj * st[i] + ni * st[j];
        mat[(row, col)] = C64::new(1.0, 0.0);
    }
    Ok(Operator::from_parts(dims.to_vec(), mat))
}
