//! Incremental Cholesky factorization of a growing principal submatrix.
//!
//! Appending item `i` to the current set `S` costs one triangular solve,
//! `O(|S|²)`, and yields the new pivot `d² = L_ii - ‖v‖²` where `R v = L_{S,i}`.
//! Since `det(L_{S∪i}) = det(L_S) · d²`, the running sum of `ln d²` is the
//! log-determinant of every prefix.

use crate::kernel::SimilarityKernel;

/// Squared pivots below this value are clamped, bounding each log term at `ln(1e-12) ≈ -27.6`.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Lower-triangular factor of `L_S` for the items appended so far.
///
/// When a pivot is floored the stored factor belongs to `L_S` with that
/// diagonal entry raised to make the pivot exactly [`PIVOT_FLOOR`], which keeps
/// later solves finite.
#[derive(Debug, Clone)]
pub struct IncrementalCholesky<'k> {
    kernel: &'k SimilarityKernel,
    items: Vec<usize>,
    // packed rows: row k occupies factor[k(k+1)/2 .. (k+1)(k+2)/2]
    factor: Vec<f64>,
    log_det: f64,
    floored: bool,
}

impl<'k> IncrementalCholesky<'k> {
    pub fn new(kernel: &'k SimilarityKernel) -> Self {
        Self::with_capacity(kernel, 0)
    }

    pub fn with_capacity(kernel: &'k SimilarityKernel, items: usize) -> Self {
        IncrementalCholesky {
            kernel,
            items: Vec::with_capacity(items),
            factor: Vec::with_capacity(items * (items + 1) / 2),
            log_det: 0.0,
            floored: false,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Log-determinant of the current set (0 for the empty set).
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Whether any pivot so far fell below [`PIVOT_FLOOR`].
    pub fn floored(&self) -> bool {
        self.floored
    }

    /// Determinant of the current set, reported as 0 once any pivot was floored.
    pub fn det(&self) -> f64 {
        if self.floored {
            0.0
        } else {
            self.log_det.exp()
        }
    }

    /// Append `item` and return its (floored) squared pivot.
    pub fn push(&mut self, item: usize) -> f64 {
        let k = self.items.len();
        let start = self.factor.len();
        for j in 0..k {
            let row_j = j * (j + 1) / 2;
            let mut s = self.kernel.sym(item, self.items[j]);
            for m in 0..j {
                s -= self.factor[start + m] * self.factor[row_j + m];
            }
            self.factor.push(s / self.factor[row_j + j]);
        }
        let norm2: f64 = self.factor[start..].iter().map(|v| v * v).sum();
        let raw = self.kernel.get(item, item) - norm2;
        let pivot2 = if raw < PIVOT_FLOOR {
            self.floored = true;
            PIVOT_FLOOR
        } else {
            raw
        };
        self.factor.push(pivot2.sqrt());
        self.items.push(item);
        self.log_det += pivot2.ln();
        pivot2
    }
}
