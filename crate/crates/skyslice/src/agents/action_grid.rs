//! Discretized joint displacement grid for the value-based learner.
//!
//! Each action dimension carries `points_per_dim` evenly spaced values
//! `a_min + k * step`; the joint table is their Cartesian product, indexed
//! row-major with the first dimension most significant. Index↔vector is a
//! bijection.

use crate::error::SimError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionGrid {
    pub a_min: f64,
    pub step: f64,
    pub points_per_dim: usize,
    pub dims: usize,
}

impl ActionGrid {
    pub fn new(a_min: f64, step: f64, points_per_dim: usize, dims: usize) -> Result<Self, SimError> {
        if !(step > 0.0) {
            return Err(SimError::InvalidActionStep(step));
        }
        assert!(points_per_dim >= 2, "need at least two points per dimension");
        assert!(dims >= 1, "need at least one action dimension");
        Ok(Self {
            a_min,
            step,
            points_per_dim,
            dims,
        })
    }

    /// 3D grid covering `[-v_max, v_max]` per axis.
    pub fn symmetric3(v_max: f64, points_per_dim: usize) -> Self {
        let step = 2.0 * v_max / (points_per_dim - 1) as f64;
        Self::new(-v_max, step, points_per_dim, 3).expect("positive step")
    }

    /// Number of joint actions: `points_per_dim^dims`.
    pub fn size(&self) -> usize {
        self.points_per_dim.pow(self.dims as u32)
    }

    pub fn value(&self, digit: usize) -> f64 {
        self.a_min + digit as f64 * self.step
    }

    /// Decode an index into its displacement vector.
    pub fn vector(&self, mut index: usize) -> Vec<f64> {
        debug_assert!(index < self.size());
        let mut out = vec![0.0; self.dims];
        for d in (0..self.dims).rev() {
            let digit = index % self.points_per_dim;
            out[d] = self.value(digit);
            index /= self.points_per_dim;
        }
        out
    }

    /// Encode per-dimension digits into an index.
    pub fn index_of_digits(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims);
        digits
            .iter()
            .fold(0, |acc, &d| acc * self.points_per_dim + d)
    }

    /// Index of the grid point nearest to `v` (used only in tests and
    /// diagnostics; the learner works in index space).
    pub fn nearest_index(&self, v: &[f64]) -> usize {
        let digits: Vec<usize> = v
            .iter()
            .map(|x| {
                let k = ((x - self.a_min) / self.step).round();
                (k.max(0.0) as usize).min(self.points_per_dim - 1)
            })
            .collect();
        self.index_of_digits(&digits)
    }
}
