use serde::{Deserialize, Serialize};

use super::operator::{Operator, C64};
use crate::error::{Error, Result};

/// A single bosonic mode truncated to Fock levels `0..dim`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Levels `0..dim - ⌈dim/4⌉`, where truncated commutators are exact.
pub fn guarded_levels(dim: usize) -> std::ops::Range<usize> {
    0..dim - dim.div_ceil(4)
}

pub fn guarded_projector(space: FockSpace) -> Operator {
    let keep = guarded_levels(space.dim());
    Operator::from_fn(vec![space.dim()], |i, j| {
        if i == j && keep.contains(&i) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `⟨n-1|a|n⟩ = √n`
pub fn annihilation_op(space: FockSpace) -> Operator {
    Operator::from_fn(vec![space.dim()], |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn creation_op(space: FockSpace) -> Operator {
    annihilation_op(space).adjoint()
}

pub fn number_op(space: FockSpace) -> Operator {
    Operator::from_fn(vec![space.dim()], |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `(x, p)` with `x = (a + a†)/√2`, `p = -i(a - a†)/√2`.
pub fn quadrature_ops(space: FockSpace) -> (Operator, Operator) {
    let a = annihilation_op(space);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = Operator::from_fn(vec![space.dim()], |i, j| {
        (a.get(i, j) + a.get(j, i).conj()) * s
    });
    let p = Operator::from_fn(vec![space.dim()], |i, j| {
        (a.get(i, j) - a.get(j, i).conj()) * C64::new(0.0, -s)
    });
    (x, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_entries() {
        let a2 = annihilation_op(FockSpace::new(2).unwrap());
        assert_eq!(a2.get(0, 1), C64::new(1.0, 0.0));
        let a8 = annihilation_op(FockSpace::new(8).unwrap());
        assert!((a8.get(2, 3).re - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(a8.get(3, 2), C64::new(0.0, 0.0));
    }

    #[test]
    fn dimension_below_two_is_rejected() {
        assert!(matches!(FockSpace::new(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn commutator_fails_only_at_cutoff() {
        let s = FockSpace::new(8).unwrap();
        let a = annihilation_op(s);
        let c = a.commutator(&a.adjoint()).unwrap();
        // P projects onto levels 0..6
        let keep: Vec<usize> = (0..7).collect();
        let id = Operator::identity(vec![8]);
        assert!(c.restricted_distance(&id, &keep).unwrap() < 1e-14);
        assert!((c.get(7, 7).re + 7.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_commutator_on_low_levels() {
        let s = FockSpace::new(12).unwrap();
        let (x, p) = quadrature_ops(s);
        assert!(x.hermiticity_residual() < 1e-14);
        assert!(p.hermiticity_residual() < 1e-14);
        let c = x.commutator(&p).unwrap();
        let i_id = Operator::identity(vec![12]).scale(C64::new(0.0, 1.0));
        let keep: Vec<usize> = (0..10).collect();
        assert!(c.restricted_distance(&i_id, &keep).unwrap() < 1e-13);
    }

    #[test]
    fn guarded_levels_drop_top_quarter() {
        assert_eq!(guarded_levels(8), 0..6);
        assert_eq!(guarded_levels(6), 0..4);
        assert_eq!(guarded_levels(30), 0..22);
    }
}
