//! Small dense complex vector/matrix helpers. Instance sizes here are tiny
//! (a handful of antennas), so plain `Vec`s beat pulling in a BLAS.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type CVec = Vec<C64>;

/// `aᴴ b`.
#[inline]
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn scale(a: &[C64], s: C64) -> CVec {
    a.iter().map(|z| z * s).collect()
}

pub fn scale_re(a: &[C64], s: f64) -> CVec {
    a.iter().map(|z| z * s).collect()
}

pub fn zeros(n: usize) -> CVec {
    vec![C64::new(0.0, 0.0); n]
}

/// Column-major `rows × cols` complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_columns(cols: Vec<CVec>) -> Self {
        let rows = cols.first().map_or(0, |c| c.len());
        let ncols = cols.len();
        let mut data = Vec::with_capacity(rows * ncols);
        for c in cols {
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend(c);
        }
        Self {
            rows,
            cols: ncols,
            data,
        }
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `Hᴴ x`, one entry per column.
    pub fn herm_mul(&self, x: &[C64]) -> CVec {
        (0..self.cols).map(|j| inner(self.col(j), x)).collect()
    }

    pub fn fro_sqr(&self) -> f64 {
        norm_sqr(&self.data)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }
}
