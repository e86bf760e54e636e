//! Self-similarity matrix images of block point clouds.
//!
//! A block's cloud is centred on its mean and every point is scaled to unit
//! length; the matrix of pairwise Euclidean distances is then bilinearly
//! resampled to a fixed `d x d` image so blocks of different lengths compare
//! pixel for pixel.

use serde::{Deserialize, Serialize};

use crate::embed::TimeOrderedPointCloud;
use crate::error::{Error, Result};

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n}x{n} matrix",
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// A block's self-similarity matrix resized to `d x d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsmImage(SquareMatrix);

impl SsmImage {
    pub fn from_matrix(m: SquareMatrix) -> Self {
        Self(m)
    }

    pub fn d(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.0.data
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }
}

/// A centred, unit-normalised cloud together with the indices of points that
/// sat exactly on the mean and were mapped to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCloud {
    pub cloud: TimeOrderedPointCloud,
    pub zero_points: Vec<usize>,
}

/// Centre on the mean and scale every point to unit norm.
pub fn normalize_point_cloud(cloud: &TimeOrderedPointCloud) -> Result<NormalizedCloud> {
    let k = cloud.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "normalisation needs at least 2 points, got {k}"
        )));
    }
    let first = cloud.point(0);
    if cloud.points().all(|p| p == first) {
        return Err(Error::DegenerateBlock);
    }
    let dim = cloud.dim();
    let mut mean = vec![0.0; dim];
    for p in cloud.points() {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);

    let mut out = Vec::with_capacity(k * dim);
    let mut zero_points = Vec::new();
    for (i, p) in cloud.points().enumerate() {
        let start = out.len();
        out.extend(p.iter().zip(&mean).map(|(x, m)| x - m));
        let norm = out[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            zero_points.push(i);
        } else {
            out[start..].iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(NormalizedCloud {
        cloud: cloud.with_points(out),
        zero_points,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// All pairwise Euclidean distances, `K x K`, exactly symmetric with a zero
/// diagonal.
pub fn compute_ssm(cloud: &TimeOrderedPointCloud) -> Result<SquareMatrix> {
    let k = cloud.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("SSM needs at least 2 points, got {k}")));
    }
    let mut m = SquareMatrix::zeros(k);
    for i in 0..k {
        for j in i + 1..k {
            let v = distance(cloud.point(i), cloud.point(j));
            m.data[i * k + j] = v;
            m.data[j * k + i] = v;
        }
    }
    Ok(m)
}

/// Source sample position for each output coordinate, align-corners
/// convention: output 0 maps to source 0 and output `d-1` to source `k-1`.
fn sample_positions(k: usize, d: usize) -> Vec<(usize, usize, f64)> {
    (0..d)
        .map(|u| {
            let x = (u * (k - 1)) as f64 / (d - 1) as f64;
            let i0 = (x.floor() as usize).min(k - 1);
            let i1 = (i0 + 1).min(k - 1);
            (i0, i1, x - i0 as f64)
        })
        .collect()
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Bilinear resize of a symmetric `k x k` matrix given by `value(i, j)`.
fn resize_with(k: usize, d: usize, value: impl Fn(usize, usize) -> f64) -> SquareMatrix {
    let pos = sample_positions(k, d);
    let mut out = SquareMatrix::zeros(d);
    for (u, &(r0, r1, fr)) in pos.iter().enumerate() {
        for (v, &(c0, c1, fc)) in pos.iter().enumerate().skip(u) {
            let top = lerp(value(r0, c0), value(r0, c1), fc);
            let bottom = lerp(value(r1, c0), value(r1, c1), fc);
            let x = lerp(top, bottom, fr);
            out.data[u * d + v] = x;
            out.data[v * d + u] = x;
        }
    }
    out
}

/// Bilinear resize to `d x d`. The input must be symmetric; the output is
/// mirrored from its upper triangle.
pub fn resize_ssm(raw: &SquareMatrix, d: usize) -> Result<SsmImage> {
    let k = raw.dim();
    if k < 2 || d < 2 {
        return Err(Error::InvalidArgument(format!("resize needs k, d >= 2 (got {k}, {d})")));
    }
    Ok(SsmImage(resize_with(k, d, |i, j| raw.get(i, j))))
}

/// Normalise, compute the SSM and resize, evaluating distances only at the
/// rows and columns the bilinear resize actually reads. Entries are clamped
/// to `[0, 2]`, the range of distances between unit vectors.
pub fn block_ssm(cloud: &TimeOrderedPointCloud, d: usize) -> Result<SsmImage> {
    let normed = normalize_point_cloud(cloud)?;
    let k = normed.cloud.len();
    if d < 2 {
        return Err(Error::InvalidArgument(format!("resize needs d >= 2 (got {d})")));
    }
    let pos = sample_positions(k, d);
    let mut used: Vec<usize> = pos.iter().flat_map(|&(a, b, _)| [a, b]).collect();
    used.sort_unstable();
    used.dedup();
    let mut slot = vec![usize::MAX; k];
    for (s, &i) in used.iter().enumerate() {
        slot[i] = s;
    }
    let n = used.len();
    let mut sub = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let (i, j) = (used[a], used[b]);
            let v = distance(normed.cloud.point(i), normed.cloud.point(j));
            sub[a * n + b] = v;
            sub[b * n + a] = v;
        }
    }
    let mut img = resize_with(k, d, |i, j| sub[slot[i] * n + slot[j]]);
    img.data.iter_mut().for_each(|x| *x = x.clamp(0.0, 2.0));
    Ok(SsmImage(img))
}

/// SSM images for a sequence of block clouds. Degenerate blocks are skipped
/// and their indices reported; remaining images keep their relative order.
pub fn block_ssms<'a>(
    clouds: impl IntoIterator<Item = &'a TimeOrderedPointCloud>,
    d: usize,
) -> Result<(Vec<SsmImage>, Vec<usize>)> {
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    for (i, cloud) in clouds.into_iter().enumerate() {
        match block_ssm(cloud, d) {
            Ok(img) => images.push(img),
            Err(Error::DegenerateBlock) => skipped.push(i),
            Err(e) => return Err(e),
        }
    }
    Ok((images, skipped))
}
