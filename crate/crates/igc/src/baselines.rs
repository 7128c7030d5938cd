//! Reference competitors implementable without external copula libraries:
//! a fitted parametric Gaussian copula and the independence copula.

use serde::{Deserialize, Serialize};

use crate::matrix::{cholesky, sym_eigen, Matrix};
use crate::special::normal_quantile;
use crate::synth::{sample_gaussian_copula, sample_independence, CorrelationMatrix};
use crate::{Error, Result};

/// Gaussian copula fitted by normal-scores correlation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianCopulaModel {
    corr: CorrelationMatrix,
    fit_rows: usize,
}

impl GaussianCopulaModel {
    pub fn corr(&self) -> &CorrelationMatrix {
        &self.corr
    }

    pub fn dim(&self) -> usize {
        self.corr.dim()
    }

    pub fn fit_rows(&self) -> usize {
        self.fit_rows
    }
}

/// Fit a Gaussian copula to unit-space data: transform columns by the
/// standard-normal quantile (clamping u = 1 down to 1 - 1/(2N) first),
/// take the sample correlation of the scores, and repair to positive
/// definite by eigenvalue flooring if needed.
pub fn fit_gaussian_copula(u: &Matrix) -> Result<GaussianCopulaModel> {
    let (n, d) = (u.rows(), u.cols());
    if n <= d {
        return Err(Error::InvalidParam(format!(
            "Gaussian copula fit needs N > D, got N={n}, D={d}"
        )));
    }
    u.require_finite("gaussian copula fit input")?;
    let margin = 1.0 / (2.0 * n as f64);
    let mut scores = Matrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let v = u.get(i, j).clamp(margin, 1.0 - margin);
            scores.set(i, j, normal_quantile(v));
        }
    }
    let mut means = vec![0.0; d];
    for j in 0..d {
        means[j] = scores.column(j).iter().sum::<f64>() / n as f64;
    }
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let row = scores.row(i);
        for a in 0..d {
            let da = row[a] - means[a];
            for b in a..d {
                cov.set(a, b, cov.get(a, b) + da * (row[b] - means[b]));
            }
        }
    }
    let mut corr = Matrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let denom = (cov.get(a, a) * cov.get(b, b)).sqrt();
            if denom <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "score column {} has zero variance",
                    if cov.get(a, a) <= 0.0 { a } else { b }
                )));
            }
            let r = if a == b { 1.0 } else { cov.get(a, b) / denom };
            corr.set(a, b, r);
            corr.set(b, a, r);
        }
    }
    if cholesky(&corr).is_none() {
        corr = nearest_pd_unit_diagonal(&corr)?;
    }
    Ok(GaussianCopulaModel {
        corr: CorrelationMatrix::new(corr)?,
        fit_rows: n,
    })
}

/// Floor eigenvalues at 1e-10 and renormalize back to unit diagonal.
fn nearest_pd_unit_diagonal(corr: &Matrix) -> Result<Matrix> {
    let d = corr.rows();
    let (eig, vectors) = sym_eigen(corr);
    let floored: Vec<f64> = eig.iter().map(|&e| e.max(1e-10)).collect();
    let mut repaired = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += vectors.get(a, k) * floored[k] * vectors.get(b, k);
            }
            repaired.set(a, b, acc);
        }
    }
    let mut out = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let denom = (repaired.get(a, a) * repaired.get(b, b)).sqrt();
            let v = if a == b {
                1.0
            } else {
                repaired.get(a, b) / denom
            };
            out.set(a, b, v);
        }
    }
    if cholesky(&out).is_none() {
        return Err(Error::Degenerate(
            "correlation matrix is rank deficient after repair".into(),
        ));
    }
    Ok(out)
}

/// A baseline copula that can be sampled.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum BaselineModel {
    Gaussian(GaussianCopulaModel),
    Independence { dim: usize },
}

impl BaselineModel {
    pub fn dim(&self) -> usize {
        match self {
            BaselineModel::Gaussian(m) => m.dim(),
            BaselineModel::Independence { dim } => *dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineModel::Gaussian(_) => "gaussian",
            BaselineModel::Independence { .. } => "independence",
        }
    }

    /// Draw n copula samples.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Matrix> {
        match self {
            BaselineModel::Gaussian(m) => sample_gaussian_copula(&m.corr, n, seed),
            BaselineModel::Independence { dim } => sample_independence(*dim, n, seed),
        }
    }
}
