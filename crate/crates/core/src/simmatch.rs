//! Cross-similarity between two songs' SSM sequences and its mutual
//! nearest-neighbour binarisation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::SsmImage;

/// `N x M` matrix of distances between blocks of song A (rows) and song B
/// (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CrossSimilarityMatrix {
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("CSM entries must be finite and >= 0".into()));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                values.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }
}

fn frobenius_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += (x - y) * (x - y);
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail).sqrt()
}

/// Frobenius distance between every SSM of A and every SSM of B.
pub fn compute_csm(a: &[SsmImage], b: &[SsmImage]) -> Result<CrossSimilarityMatrix> {
    if a.is_empty() {
        return Err(Error::Empty("SSM list of song A"));
    }
    if b.is_empty() {
        return Err(Error::Empty("SSM list of song B"));
    }
    let d = a[0].d();
    if let Some(bad) = a.iter().chain(b).find(|img| img.d() != d) {
        return Err(Error::DimensionMismatch(format!(
            "SSM images of size {} and {}",
            d,
            bad.d()
        )));
    }
    let values: Vec<f64> = a
        .par_iter()
        .flat_map_iter(|x| b.iter().map(move |y| frobenius_distance(x.pixels(), y.pixels())))
        .collect();
    Ok(CrossSimilarityMatrix {
        rows: a.len(),
        cols: b.len(),
        values,
    })
}

/// Binary cross-similarity: 1 where an entry is among the nearest
/// neighbours of both its row and its column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCsm {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BinaryCsm {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                bits.push(f(i, j) as u8);
            }
        }
        Self { rows, cols, bits }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged bit matrix".into()));
        }
        Ok(Self::from_fn(rows.len(), cols, |i, j| rows[i][j] != 0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j] != 0
    }

    /// Bit at signed coordinates; anything outside the matrix reads as 0.
    pub fn get_or_zero(&self, i: isize, j: isize) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.rows
            && (j as usize) < self.cols
            && self.get(i as usize, j as usize)
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        self.bits[i * self.cols + j] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

/// Neighbour count for a fraction `kappa` of `len` candidates: `round(kappa
/// * len)`, never below 1.
pub fn neighbour_count(kappa: f64, len: usize) -> usize {
    ((kappa * len as f64).round() as usize).max(1)
}

/// Mark the `count` smallest entries of each lane (ascending value, ties to
/// the smaller index).
fn lane_mask(len: usize, lanes: usize, count: usize, value: impl Fn(usize, usize) -> f64) -> Vec<bool> {
    // mask[lane * len + pos]
    let mut mask = vec![false; lanes * len];
    let mut order: Vec<usize> = (0..len).collect();
    for lane in 0..lanes {
        order.sort_by(|&a, &b| value(lane, a).total_cmp(&value(lane, b)).then(a.cmp(&b)));
        for &pos in order.iter().take(count) {
            mask[lane * len + pos] = true;
        }
    }
    mask
}

/// Keep entry `(i, j)` iff it ranks within the `round(kappa * M)` smallest of
/// row `i` and within the `round(kappa * N)` smallest of column `j`.
pub fn binarize_mutual_knn(csm: &CrossSimilarityMatrix, kappa: f64) -> Result<BinaryCsm> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa {kappa} outside (0, 1]")));
    }
    let (n, m) = (csm.rows, csm.cols);
    let row_count = neighbour_count(kappa, m);
    let col_count = neighbour_count(kappa, n);
    let in_row = lane_mask(m, n, row_count, |i, j| csm.get(i, j));
    let in_col = lane_mask(n, m, col_count, |j, i| csm.get(i, j));
    Ok(BinaryCsm::from_fn(n, m, |i, j| in_row[i * m + j] && in_col[j * n + i]))
}
