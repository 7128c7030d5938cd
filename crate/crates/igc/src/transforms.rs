//! Rank and probability-integral-transform machinery: pseudo-observations,
//! hard and soft rank transforms with gradients, and frozen marginal CDF
//! tables with forward/inverse evaluation.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::special::normal_quantile;
use crate::{Error, Result};

/// For each entry of `column`, the fraction of column values <= it.
/// Ties receive identical (maximum) ranks.
fn fraction_leq(column: &[f64]) -> Vec<f64> {
    let n = column.len() as f64;
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    column
        .iter()
        .map(|&v| sorted.partition_point(|&s| s <= v) as f64 / n)
        .collect()
}

/// Empirical-CDF transform of each column: u = (#values <= x) / N.
///
/// Columns without ties become exact permutations of {1/N, ..., N/N}.
pub fn pseudo_observations(x: &Matrix) -> Result<Matrix> {
    if x.rows() < 2 {
        return Err(Error::InvalidParam(format!(
            "pseudo-observations need at least 2 rows, got {}",
            x.rows()
        )));
    }
    x.require_finite("pseudo-observation input")?;
    let mut u = Matrix::zeros(x.rows(), x.cols());
    for d in 0..x.cols() {
        let ranks = fraction_leq(&x.column(d));
        for (i, r) in ranks.into_iter().enumerate() {
            u.set(i, d, r);
        }
    }
    Ok(u)
}

/// Non-differentiable empirical rank of each column of a model batch.
pub fn hard_rank(y: &Matrix) -> Result<Matrix> {
    if y.rows() < 2 {
        return Err(Error::InvalidParam(format!(
            "hard rank needs at least 2 rows, got {}",
            y.rows()
        )));
    }
    let mut v = Matrix::zeros(y.rows(), y.cols());
    for d in 0..y.cols() {
        let ranks = fraction_leq(&y.column(d));
        for (i, r) in ranks.into_iter().enumerate() {
            v.set(i, d, r);
        }
    }
    Ok(v)
}

#[inline]
fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

/// Inputs retained for `softrank_backward`.
#[derive(Clone, Debug)]
pub struct SoftrankCache {
    y: Matrix,
    alphas: Vec<f64>,
}

/// Differentiable rank surrogate: comparisons against every batch element
/// through a scaled logistic,
/// `v_m = (0.5 + sum_j sigma(alpha (y_m - y_j))) / M`,
/// with the self-comparison contributing sigma(0) = 1/2. As alpha grows the
/// output converges to `hard_rank`. O(M^2) per column.
pub fn softrank(y: &Matrix, alpha: f64) -> Result<(Matrix, SoftrankCache)> {
    softrank_scaled(y, &vec![alpha; y.cols()])
}

/// `softrank` with a separate sharpness per column.
pub fn softrank_scaled(y: &Matrix, alphas: &[f64]) -> Result<(Matrix, SoftrankCache)> {
    if y.rows() < 2 {
        return Err(Error::InvalidParam(format!(
            "softrank needs at least 2 rows, got {}",
            y.rows()
        )));
    }
    if alphas.len() != y.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{} sharpness values for {} columns",
            alphas.len(),
            y.cols()
        )));
    }
    if alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidParam(
            "softrank sharpness must be positive".into(),
        ));
    }
    let m = y.rows();
    let scale = 1.0 / m as f64;
    let mut v = Matrix::zeros(m, y.cols());
    for d in 0..y.cols() {
        let col = y.column(d);
        let alpha = alphas[d];
        for i in 0..m {
            let mut acc = 0.5;
            for &other in &col {
                acc += logistic(alpha * (col[i] - other));
            }
            v.set(i, d, acc * scale);
        }
    }
    Ok((
        v,
        SoftrankCache {
            y: y.clone(),
            alphas: alphas.to_vec(),
        },
    ))
}

/// Jacobian-vector product through the softrank layer.
pub fn softrank_backward(cache: &SoftrankCache, dl_dv: &Matrix) -> Result<Matrix> {
    let y = &cache.y;
    if dl_dv.rows() != y.rows() || dl_dv.cols() != y.cols() {
        return Err(Error::ShapeMismatch(format!(
            "softrank gradient is {}x{}, expected {}x{}",
            dl_dv.rows(),
            dl_dv.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let m = y.rows();
    let mut dl_dy = Matrix::zeros(m, y.cols());
    for d in 0..y.cols() {
        let col = y.column(d);
        let dv: Vec<f64> = (0..m).map(|i| dl_dv.get(i, d)).collect();
        let alpha = cache.alphas[d];
        let factor = alpha / m as f64;
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                if j == i {
                    continue;
                }
                let s = logistic(alpha * (col[i] - col[j]));
                let sp = s * (1.0 - s);
                acc += sp * (dv[i] - dv[j]);
            }
            dl_dy.set(i, d, factor * acc);
        }
    }
    Ok(dl_dy)
}

/// Per-column interquartile range, with a standard-deviation fallback for
/// degenerate columns. Used to make the softrank sharpness scale-adaptive.
pub fn column_iqr_scales(y: &Matrix) -> Vec<f64> {
    (0..y.cols())
        .map(|d| {
            let mut col = y.column(d);
            col.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
            let q = |p: f64| -> f64 {
                let h = p * (col.len() - 1) as f64;
                let lo = h.floor() as usize;
                let hi = h.ceil() as usize;
                col[lo] + (h - lo as f64) * (col[hi] - col[lo])
            };
            let iqr = q(0.75) - q(0.25);
            if iqr > 1e-12 {
                return iqr;
            }
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var =
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64;
            let sd = var.sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect()
}

/// Monotone piecewise-linear approximation of one latent marginal CDF,
/// compressed from T generator samples to roughly G quantile knots.
///
/// Evaluations are clamped to [1/(2T), 1 - 1/(2T)] so inverse transforms
/// stay finite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginalCdfTable {
    knots: Vec<f64>,
    probs: Vec<f64>,
    dim: usize,
    sample_count: u64,
}

impl MarginalCdfTable {
    /// Summarize `samples` (the d-th generator output over T draws) into a
    /// quantile-knot table. Knot CDF values follow the midpoint convention
    /// p_i = (i - 1/2)/T at the i-th order statistic.
    pub fn build(samples: &[f64], g: usize, dim: usize) -> Result<Self> {
        let t = samples.len();
        if g < 2 || t < g {
            return Err(Error::InvalidParam(format!(
                "need T >= G >= 2, got T={t}, G={g}"
            )));
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("marginal samples of dim {dim}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        if sorted[0] == sorted[t - 1] {
            return Err(Error::Degenerate(format!(
                "dimension {dim} has zero-width support (all samples equal)"
            )));
        }
        // 1-based order-statistic indices: the k/(G+1) quantile grid plus
        // both extremes.
        let mut indices: Vec<usize> = Vec::with_capacity(g + 2);
        indices.push(1);
        for k in 1..=g {
            let target = (k as f64 / (g + 1) as f64 * t as f64).round() as usize;
            indices.push(target.clamp(1, t));
        }
        indices.push(t);
        indices.sort_unstable();
        indices.dedup();

        let mut knots: Vec<f64> = Vec::with_capacity(indices.len());
        let mut probs: Vec<f64> = Vec::with_capacity(indices.len());
        for &i in &indices {
            let y = sorted[i - 1];
            let p = (i as f64 - 0.5) / t as f64;
            if let Some(&last) = knots.last() {
                if y == last {
                    // Tied order statistics collapse to the largest rank.
                    *probs.last_mut().expect("non-empty") = p;
                    continue;
                }
            }
            knots.push(y);
            probs.push(p);
        }
        if knots.len() < 2 {
            return Err(Error::Degenerate(format!(
                "dimension {dim} collapses to fewer than 2 distinct knots"
            )));
        }
        Ok(Self {
            knots,
            probs,
            dim,
            sample_count: t as u64,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn knot_count(&self) -> usize {
        self.knots.len()
    }

    #[inline]
    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Clamp margin 1/(2T).
    #[inline]
    pub fn boundary_eps(&self) -> f64 {
        0.5 / self.sample_count as f64
    }

    /// Piecewise-linear CDF value in (0, 1).
    pub fn cdf(&self, y: f64) -> f64 {
        let eps = self.boundary_eps();
        if y < self.knots[0] {
            return eps;
        }
        let last = self.knots.len() - 1;
        if y > self.knots[last] {
            return 1.0 - eps;
        }
        let j = self.knots.partition_point(|&k| k <= y);
        if j == 0 {
            return self.probs[0];
        }
        if j > last {
            return self.probs[last];
        }
        let (k0, k1) = (self.knots[j - 1], self.knots[j]);
        let (p0, p1) = (self.probs[j - 1], self.probs[j]);
        p0 + (p1 - p0) * (y - k0) / (k1 - k0)
    }

    /// Piecewise-linear inverse of `cdf` for u in (0, 1), clamped to the
    /// knot range.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParam(format!(
                "quantile argument must be in (0,1), got {u}"
            )));
        }
        let last = self.probs.len() - 1;
        if u <= self.probs[0] {
            return Ok(self.knots[0]);
        }
        if u >= self.probs[last] {
            return Ok(self.knots[last]);
        }
        let j = self.probs.partition_point(|&p| p <= u);
        let (p0, p1) = (self.probs[j - 1], self.probs[j]);
        let (k0, k1) = (self.knots[j - 1], self.knots[j]);
        Ok(k0 + (k1 - k0) * (u - p0) / (p1 - p0))
    }
}

/// A monotone inverse CDF, used to push copula samples back to data space.
pub trait InverseCdf {
    fn inverse_cdf(&self, u: f64) -> Result<f64>;
}

impl InverseCdf for MarginalCdfTable {
    fn inverse_cdf(&self, u: f64) -> Result<f64> {
        self.quantile(u)
    }
}

/// Inverse of the empirical CDF of one data column: linear interpolation of
/// the sorted values against p = rank/N, clamped to [min, max].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalInverseCdf {
    sorted: Vec<f64>,
}

impl EmpiricalInverseCdf {
    pub fn from_column(column: &[f64]) -> Result<Self> {
        if column.is_empty() {
            return Err(Error::InvalidParam("empty data column".into()));
        }
        if !column.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("empirical marginal column".into()));
        }
        let mut sorted = column.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        Ok(Self { sorted })
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParam(format!(
                "quantile argument must be in (0,1), got {u}"
            )));
        }
        let n = self.sorted.len();
        let s = u * n as f64;
        let i = s.floor() as usize;
        if i < 1 {
            return Ok(self.sorted[0]);
        }
        if i >= n {
            return Ok(self.sorted[n - 1]);
        }
        let t = s - i as f64;
        Ok(self.sorted[i - 1] + t * (self.sorted[i] - self.sorted[i - 1]))
    }
}

impl InverseCdf for EmpiricalInverseCdf {
    fn inverse_cdf(&self, u: f64) -> Result<f64> {
        self.quantile(u)
    }
}

/// Exact standard-normal quantile function as an inverse-CDF provider.
#[derive(Clone, Copy, Debug, Default)]
pub struct StandardNormalQuantile;

impl InverseCdf for StandardNormalQuantile {
    fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParam(format!(
                "quantile argument must be in (0,1), got {u}"
            )));
        }
        Ok(normal_quantile(u))
    }
}
