//! Training loss and evaluation statistics: energy distance, empirical
//! copulas and the ISE score, Gaussian-kernel MMD with the median heuristic,
//! Kendall's tau, the KS uniformity statistic, and KDE-based test NLL.
//!
//! All reductions use a fixed summation order (parallel blocks are collected
//! and folded sequentially), so results do not depend on thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::{Error, Result};

/// A single metric evaluation with enough configuration to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub data_rows: usize,
    pub model_rows: usize,
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sample energy-distance loss between a unit-space data batch and model
/// output, with its analytic gradient with respect to each model row.
///
/// `L = (1/nM) sum ||u_n - v_m|| - (1/(2M(M-1))) sum ||v_m - v_m'||`.
/// Zero-distance pairs contribute zero gradient.
pub fn energy_loss(u: &Matrix, v: &Matrix) -> Result<(f64, Matrix)> {
    let (n, m, d) = (u.rows(), v.rows(), u.cols());
    if v.cols() != d {
        return Err(Error::ShapeMismatch(format!(
            "data has {} columns but model batch has {}",
            d,
            v.cols()
        )));
    }
    if n < 1 || m < 2 {
        return Err(Error::InvalidParam(format!(
            "energy loss needs n >= 1 and M >= 2, got n={n}, M={m}"
        )));
    }
    u.require_finite("energy loss data batch")?;
    v.require_finite("energy loss model batch")?;

    let cross_w = 1.0 / (n as f64 * m as f64);
    let self_w = 1.0 / (m as f64 * (m - 1) as f64);

    let mut loss = 0.0;
    let mut grad = Matrix::zeros(m, d);
    for i in 0..m {
        let vi = v.row(i);
        let gi = grad.row_mut(i);
        for nn in 0..n {
            let un = u.row(nn);
            let dist = euclidean(vi, un);
            loss += cross_w * dist;
            if dist > 0.0 {
                for k in 0..d {
                    gi[k] += cross_w * (vi[k] - un[k]) / dist;
                }
            }
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let dist = euclidean(v.row(i), v.row(j));
            loss -= self_w * dist;
            if dist > 0.0 {
                for k in 0..d {
                    let g = self_w * (v.get(i, k) - v.get(j, k)) / dist;
                    grad.set(i, k, grad.get(i, k) - g);
                    grad.set(j, k, grad.get(j, k) + g);
                }
            }
        }
    }
    Ok((loss, grad))
}

/// `energy_loss` without the gradient, for monitoring.
pub fn energy_loss_value(u: &Matrix, v: &Matrix) -> Result<f64> {
    let (n, m, d) = (u.rows(), v.rows(), u.cols());
    if v.cols() != d {
        return Err(Error::ShapeMismatch(format!(
            "data has {} columns but model batch has {}",
            d,
            v.cols()
        )));
    }
    if n < 1 || m < 2 {
        return Err(Error::InvalidParam(format!(
            "energy loss needs n >= 1 and M >= 2, got n={n}, M={m}"
        )));
    }
    let mut cross = 0.0;
    for i in 0..m {
        let vi = v.row(i);
        for nn in 0..n {
            cross += euclidean(vi, u.row(nn));
        }
    }
    let mut within = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            within += euclidean(v.row(i), v.row(j));
        }
    }
    Ok(cross / (n as f64 * m as f64) - within / (m as f64 * (m - 1) as f64))
}

/// Mean pairwise distance over all ordered pairs of rows (i = j included).
fn mean_cross_distance(a: &Matrix, b: &Matrix) -> f64 {
    let rows: Vec<f64> = (0..a.rows())
        .into_par_iter()
        .map(|i| {
            let ai = a.row(i);
            (0..b.rows()).map(|j| euclidean(ai, b.row(j))).sum::<f64>()
        })
        .collect();
    rows.iter().sum::<f64>() / (a.rows() as f64 * b.rows() as f64)
}

/// Plug-in (V-statistic) energy distance `2 E||A-B|| - E||A-A'|| - E||B-B'||`.
/// Evaluation-only; no gradient.
pub fn energy_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.cols() != b.cols() {
        return Err(Error::ShapeMismatch(format!(
            "dimension mismatch: {} vs {}",
            a.cols(),
            b.cols()
        )));
    }
    if a.rows() < 1 || b.rows() < 1 {
        return Err(Error::InvalidParam("energy distance needs non-empty samples".into()));
    }
    let cross = mean_cross_distance(a, b);
    let within_a = mean_cross_distance(a, a);
    let within_b = mean_cross_distance(b, b);
    Ok(2.0 * cross - within_a - within_b)
}

/// Multivariate empirical CDF of a point set in the unit cube.
#[derive(Clone, Debug)]
pub struct EmpiricalCopula {
    points: Matrix,
}

impl EmpiricalCopula {
    pub fn new(points: Matrix) -> Result<Self> {
        if points.rows() < 1 {
            return Err(Error::InvalidParam("empirical copula needs at least one point".into()));
        }
        points.require_finite("empirical copula points")?;
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    fn check_query(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "query has {} coordinates, points have {}",
                w.len(),
                self.dim()
            )));
        }
        if w.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidParam(
                "empirical copula evaluated outside the unit cube".into(),
            ));
        }
        Ok(())
    }

    /// `(1/N) sum_n prod_d 1[u_d^n <= w_d]`.
    pub fn cdf(&self, w: &[f64]) -> Result<f64> {
        self.check_query(w)?;
        let count = (0..self.points.rows())
            .filter(|&i| {
                self.points
                    .row(i)
                    .iter()
                    .zip(w)
                    .all(|(u, bound)| u <= bound)
            })
            .count();
        Ok(count as f64 / self.points.rows() as f64)
    }

    /// Evaluate at many query points. Uses an offline sweep with a Fenwick
    /// tree in two dimensions, direct counting otherwise.
    pub fn cdf_batch(&self, queries: &Matrix) -> Result<Vec<f64>> {
        if queries.cols() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "queries have {} columns, points have {}",
                queries.cols(),
                self.dim()
            )));
        }
        if queries
            .as_slice()
            .iter()
            .any(|&x| !(0.0..=1.0).contains(&x))
        {
            return Err(Error::InvalidParam(
                "empirical copula evaluated outside the unit cube".into(),
            ));
        }
        if self.dim() == 2 {
            Ok(self.cdf_batch_2d(queries))
        } else {
            let n = self.points.rows() as f64;
            Ok((0..queries.rows())
                .into_par_iter()
                .map(|q| {
                    let w = queries.row(q);
                    let count = (0..self.points.rows())
                        .filter(|&i| {
                            self.points
                                .row(i)
                                .iter()
                                .zip(w)
                                .all(|(u, bound)| u <= bound)
                        })
                        .count();
                    count as f64 / n
                })
                .collect())
        }
    }

    /// Offline dominance counting: sort points and queries by the first
    /// coordinate, sweep once, and count second coordinates with a Fenwick
    /// tree. O((N + Q) log N).
    fn cdf_batch_2d(&self, queries: &Matrix) -> Vec<f64> {
        let n = self.points.rows();
        let mut by_u1: Vec<usize> = (0..n).collect();
        by_u1.sort_by(|&a, &b| {
            self.points
                .get(a, 0)
                .partial_cmp(&self.points.get(b, 0))
                .expect("finite")
        });
        let mut sorted_u2: Vec<f64> = (0..n).map(|i| self.points.get(i, 1)).collect();
        sorted_u2.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        // Distinct Fenwick slot per point: its position in the u2 order.
        let mut by_u2: Vec<usize> = (0..n).collect();
        by_u2.sort_by(|&a, &b| {
            self.points
                .get(a, 1)
                .partial_cmp(&self.points.get(b, 1))
                .expect("finite")
        });
        let mut slot = vec![0usize; n];
        for (pos, &idx) in by_u2.iter().enumerate() {
            slot[idx] = pos + 1; // 1-based
        }

        let q = queries.rows();
        let mut q_order: Vec<usize> = (0..q).collect();
        q_order.sort_by(|&a, &b| {
            queries
                .get(a, 0)
                .partial_cmp(&queries.get(b, 0))
                .expect("finite")
        });

        let mut tree = vec![0u32; n + 1];
        let add = |tree: &mut Vec<u32>, mut i: usize| {
            while i <= n {
                tree[i] += 1;
                i += i & i.wrapping_neg();
            }
        };
        let prefix = |tree: &Vec<u32>, mut i: usize| -> u32 {
            let mut s = 0;
            while i > 0 {
                s += tree[i];
                i -= i & i.wrapping_neg();
            }
            s
        };

        let mut out = vec![0.0; q];
        let mut next_point = 0;
        for &qi in &q_order {
            let w1 = queries.get(qi, 0);
            let w2 = queries.get(qi, 1);
            while next_point < n && self.points.get(by_u1[next_point], 0) <= w1 {
                add(&mut tree, slot[by_u1[next_point]]);
                next_point += 1;
            }
            let r = sorted_u2.partition_point(|&v| v <= w2);
            out[qi] = prefix(&tree, r) as f64 / n as f64;
        }
        out
    }
}

/// Integrated squared error between two copulas, approximated at the data
/// vectors. `reference` supplies an analytic CDF for the data copula; when
/// absent the empirical copula of `u_data` is used.
///
/// Empirical-CDF comparisons get unreliable above five dimensions, so higher
/// dimensions are rejected unless `allow_high_dim` is set.
pub fn ise(
    u_data: &Matrix,
    model_samples: &Matrix,
    reference: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
    allow_high_dim: bool,
) -> Result<f64> {
    let d = u_data.cols();
    if model_samples.cols() != d {
        return Err(Error::ShapeMismatch(format!(
            "data has {} columns but model samples have {}",
            d,
            model_samples.cols()
        )));
    }
    if d > 5 && !allow_high_dim {
        return Err(Error::InvalidParam(format!(
            "ISE with empirical CDFs is unreliable for D={d} > 5; pass allow_high_dim to override"
        )));
    }
    let f_u: Vec<f64> = match reference {
        Some(cdf) => (0..u_data.rows()).map(|i| cdf(u_data.row(i))).collect(),
        None => EmpiricalCopula::new(u_data.clone())?.cdf_batch(u_data)?,
    };
    let f_v = EmpiricalCopula::new(model_samples.clone())?.cdf_batch(u_data)?;
    let sum: f64 = f_u
        .iter()
        .zip(&f_v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / u_data.rows() as f64)
}

/// Biased (V-statistic) squared MMD with kernel `exp(-||x-y||^2 / (2 sigma^2))`.
pub fn mmd_gaussian(a: &Matrix, b: &Matrix, sigma: f64) -> Result<f64> {
    if a.cols() != b.cols() {
        return Err(Error::ShapeMismatch(format!(
            "dimension mismatch: {} vs {}",
            a.cols(),
            b.cols()
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParam(format!(
            "MMD bandwidth must be positive, got {sigma}"
        )));
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mean_kernel = |x: &Matrix, y: &Matrix| -> f64 {
        let rows: Vec<f64> = (0..x.rows())
            .into_par_iter()
            .map(|i| {
                let xi = x.row(i);
                (0..y.rows())
                    .map(|j| {
                        let d2: f64 = xi
                            .iter()
                            .zip(y.row(j))
                            .map(|(p, q)| (p - q) * (p - q))
                            .sum();
                        (-d2 * inv).exp()
                    })
                    .sum::<f64>()
            })
            .collect();
        rows.iter().sum::<f64>() / (x.rows() as f64 * y.rows() as f64)
    };
    Ok(mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b))
}

/// Median pairwise Euclidean distance over a deterministic subsample of at
/// most `cap` points. Errors when the median is zero (all points identical).
pub fn median_heuristic(pooled: &Matrix, cap: usize) -> Result<f64> {
    let n = pooled.rows();
    if n < 2 {
        return Err(Error::InvalidParam(
            "median heuristic needs at least two points".into(),
        ));
    }
    let cap = cap.max(2);
    let indices: Vec<usize> = if n <= cap {
        (0..n).collect()
    } else {
        // Evenly strided subsample keeps the result seed-free.
        (0..cap).map(|i| i * n / cap).collect()
    };
    let mut dists = Vec::with_capacity(indices.len() * (indices.len() - 1) / 2);
    for (ii, &i) in indices.iter().enumerate() {
        for &j in &indices[ii + 1..] {
            dists.push(euclidean(pooled.row(i), pooled.row(j)));
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median == 0.0 {
        return Err(Error::Degenerate(
            "median pairwise distance is zero (all points identical)".into(),
        ));
    }
    Ok(median)
}

/// Count strict inversions in `vals` by merge sort.
fn merge_count_inversions(vals: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = vals.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = vals.split_at_mut(mid);
    let mut inv = merge_count_inversions(left, &mut buf[..mid])
        + merge_count_inversions(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            inv += (left.len() - i) as u64;
            j += 1;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    vals.copy_from_slice(&buf[..n]);
    inv
}

/// Kendall's tau-a via merge-sort inversion counting, O(n log n).
/// Tied pairs count as neither concordant nor discordant.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "kendall tau needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParam("kendall tau needs at least 2 observations".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i].partial_cmp(&a[j])
            .expect("finite")
            .then(b[i].partial_cmp(&b[j]).expect("finite"))
    });

    let pairs = |g: u64| g * (g - 1) / 2;
    // Ties in a, and in (a, b) jointly.
    let mut tied_a = 0u64;
    let mut tied_ab = 0u64;
    let mut run_a = 1u64;
    let mut run_ab = 1u64;
    for w in order.windows(2) {
        let same_a = a[w[0]] == a[w[1]];
        let same_ab = same_a && b[w[0]] == b[w[1]];
        if same_a {
            run_a += 1;
        } else {
            tied_a += pairs(run_a);
            run_a = 1;
        }
        if same_ab {
            run_ab += 1;
        } else {
            tied_ab += pairs(run_ab);
            run_ab = 1;
        }
    }
    tied_a += pairs(run_a);
    tied_ab += pairs(run_ab);

    // Ties in b (independent of order).
    let mut b_sorted: Vec<f64> = b.to_vec();
    b_sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let mut tied_b = 0u64;
    let mut run_b = 1u64;
    for w in b_sorted.windows(2) {
        if w[0] == w[1] {
            run_b += 1;
        } else {
            tied_b += pairs(run_b);
            run_b = 1;
        }
    }
    tied_b += pairs(run_b);

    let mut b_in_a_order: Vec<f64> = order.iter().map(|&i| b[i]).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count_inversions(&mut b_in_a_order, &mut buf);

    let total = pairs(n as u64);
    let concordant = total - tied_a - tied_b + tied_ab - discordant;
    Ok((concordant as f64 - discordant as f64) / total as f64)
}

/// Kolmogorov-Smirnov statistic of a sample against U(0, 1).
pub fn ks_uniform(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParam("KS statistic of an empty sample".into()));
    }
    if samples.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidParam(
            "KS uniformity statistic needs samples inside [0,1]".into(),
        ));
    }
    let n = samples.len() as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut stat: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n - x;
        let lo = x - i as f64 / n;
        stat = stat.max(hi).max(lo);
    }
    Ok(stat)
}

/// Mean negative log-likelihood of `test` under a Gaussian product-kernel
/// density estimate fit on `train` (Scott's-rule bandwidth per dimension).
/// Bivariate data only. Densities are floored at 1e-300 before the log.
pub fn kde_nll(train: &Matrix, test: &Matrix) -> Result<f64> {
    if train.cols() != 2 || test.cols() != 2 {
        return Err(Error::InvalidParam(format!(
            "KDE NLL is defined for D=2 only, got {} and {}",
            train.cols(),
            test.cols()
        )));
    }
    if train.rows() < 2 || test.rows() < 1 {
        return Err(Error::InvalidParam("KDE NLL needs non-trivial samples".into()));
    }
    train.require_finite("KDE train set")?;
    test.require_finite("KDE test set")?;
    let n = train.rows() as f64;
    let mut bandwidth = [0.0f64; 2];
    for d in 0..2 {
        let col = train.column(d);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        if var <= 0.0 {
            return Err(Error::Degenerate(format!(
                "train column {d} has zero variance"
            )));
        }
        bandwidth[d] = var.sqrt() * n.powf(-1.0 / 6.0);
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * bandwidth[0] * bandwidth[1]);
    let nlls: Vec<f64> = (0..test.rows())
        .into_par_iter()
        .map(|i| {
            let t = test.row(i);
            let mut density = 0.0;
            for j in 0..train.rows() {
                let r = train.row(j);
                let z0 = (t[0] - r[0]) / bandwidth[0];
                let z1 = (t[1] - r[1]) / bandwidth[1];
                density += (-0.5 * (z0 * z0 + z1 * z1)).exp();
            }
            density = (density / n * norm).max(1e-300);
            -density.ln()
        })
        .collect();
    Ok(nlls.iter().sum::<f64>() / test.rows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_noise, stream_rng};
    use proptest::prelude::*;
    use rand::Rng;

    fn uniform_matrix(seed: u64, n: usize, d: usize) -> Matrix {
        let mut rng = stream_rng(seed, 77);
        let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect();
        Matrix::from_vec(n, d, data).unwrap()
    }

    #[test]
    fn energy_loss_zero_for_identical_points() {
        let u = Matrix::from_vec(2, 2, vec![0.3, 0.4, 0.3, 0.4]).unwrap();
        let v = u.clone();
        let (loss, grad) = energy_loss(&u, &v).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn energy_loss_hand_computed_value() {
        // n=1, M=2: loss = (1/2)(1+1) - (1/4)(2 sqrt 2) = 1 - sqrt(2)/2.
        let u = Matrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        let v = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (loss, _) = energy_loss(&u, &v).unwrap();
        let expected = 1.0 - std::f64::consts::SQRT_2 / 2.0;
        assert!((loss - expected).abs() < 1e-14, "loss {loss}");
    }

    #[test]
    fn energy_loss_gradient_matches_finite_differences() {
        let u = uniform_matrix(1, 5, 3);
        let v = uniform_matrix(2, 6, 3);
        let (_, grad) = energy_loss(&u, &v).unwrap();
        let h = 1e-6;
        for idx in 0..v.as_slice().len() {
            let mut plus = v.clone();
            plus.as_mut_slice()[idx] += h;
            let mut minus = v.clone();
            minus.as_mut_slice()[idx] -= h;
            let fd = (energy_loss(&u, &plus).unwrap().0 - energy_loss(&u, &minus).unwrap().0)
                / (2.0 * h);
            let an = grad.as_slice()[idx];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            assert!(rel < 1e-5, "idx {idx}: fd {fd} vs {an}");
        }
    }

    #[test]
    fn energy_loss_rejects_nan() {
        let mut u = uniform_matrix(3, 4, 2);
        let v = uniform_matrix(4, 4, 2);
        u.as_mut_slice()[0] = f64::NAN;
        assert!(energy_loss(&u, &v).is_err());
    }

    #[test]
    fn energy_distance_identities() {
        let a = uniform_matrix(5, 50, 2);
        assert_eq!(energy_distance(&a, &a).unwrap(), 0.0);
        let x = Matrix::from_vec(1, 1, vec![0.0]).unwrap();
        let y = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        assert_eq!(energy_distance(&x, &y).unwrap(), 2.0);
        let b = uniform_matrix(6, 60, 2);
        let ab = energy_distance(&a, &b).unwrap();
        let ba = energy_distance(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-15);
        assert!(ab >= 0.0);
    }

    #[test]
    fn energy_distance_null_is_small() {
        let a = uniform_matrix(7, 2000, 2);
        let b = uniform_matrix(8, 2000, 2);
        let v = energy_distance(&a, &b).unwrap();
        assert!(v < 0.01, "null energy distance {v}");
    }

    #[test]
    fn empirical_copula_corners_and_count() {
        let u = Matrix::from_vec(2, 2, vec![0.2, 0.3, 0.6, 0.9]).unwrap();
        let cop = EmpiricalCopula::new(u).unwrap();
        assert_eq!(cop.cdf(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cop.cdf(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cop.cdf(&[0.5, 0.5]).unwrap(), 0.5);
        assert!(cop.cdf(&[1.5, 0.5]).is_err());
    }

    #[test]
    fn empirical_copula_batch_matches_direct() {
        let pts = uniform_matrix(9, 300, 2);
        let cop = EmpiricalCopula::new(pts).unwrap();
        let queries = uniform_matrix(10, 150, 2);
        let batch = cop.cdf_batch(&queries).unwrap();
        for (i, &v) in batch.iter().enumerate() {
            let direct = cop.cdf(queries.row(i)).unwrap();
            assert_eq!(v, direct, "query {i}");
        }
        // Include the points themselves as queries (exact tie handling).
        let self_batch = cop.cdf_batch(&uniform_matrix(9, 300, 2)).unwrap();
        for (i, &v) in self_batch.iter().enumerate() {
            let direct = cop.cdf(uniform_matrix(9, 300, 2).row(i)).unwrap();
            assert_eq!(v, direct);
        }
    }

    #[test]
    fn empirical_copula_batch_matches_direct_3d() {
        let pts = uniform_matrix(11, 200, 3);
        let cop = EmpiricalCopula::new(pts).unwrap();
        let queries = uniform_matrix(12, 80, 3);
        let batch = cop.cdf_batch(&queries).unwrap();
        for (i, &v) in batch.iter().enumerate() {
            assert_eq!(v, cop.cdf(queries.row(i)).unwrap());
        }
    }

    #[test]
    fn ise_of_model_against_itself_is_zero() {
        let pts = uniform_matrix(13, 500, 2);
        let v = ise(&pts, &pts, None, false).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn ise_comonotone_vs_independence_near_one_thirtieth() {
        // Comonotone data (u1 = u2) scored against an independence model.
        let n = 5000;
        let mut rng = stream_rng(21, 0);
        let mut data = Matrix::zeros(n, 2);
        for i in 0..n {
            let t = rng.random_range(0.0..1.0);
            data.set(i, 0, t);
            data.set(i, 1, t);
        }
        let model = uniform_matrix(22, 5000, 2);
        let v = ise(&data, &model, None, false).unwrap();
        assert!((0.02..=0.08).contains(&v), "ISE {v}, population ~1/30");
    }

    #[test]
    fn ise_rejects_high_dimension_without_override() {
        let pts = uniform_matrix(14, 50, 6);
        assert!(ise(&pts, &pts, None, false).is_err());
        assert!(ise(&pts, &pts, None, true).is_ok());
    }

    #[test]
    fn mmd_identities() {
        let a = uniform_matrix(15, 100, 2);
        assert_eq!(mmd_gaussian(&a, &a, 0.5).unwrap(), 0.0);
        assert!(mmd_gaussian(&a, &a, 0.0).is_err());
        // k(x, x) = 1 regardless of bandwidth: the within-sample mean kernel
        // of a single point is exactly 1.
        let single = Matrix::from_vec(1, 2, vec![0.3, 0.9]).unwrap();
        assert_eq!(mmd_gaussian(&single, &single, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn mmd_shifted_normals_in_expected_range() {
        // A ~ N(0,1), B ~ N(1,1): analytic squared MMD at sigma=1 is about 0.177.
        let a = sample_noise(30, 2000, 1).unwrap().samples().clone();
        let mut b = sample_noise(31, 2000, 1).unwrap().samples().clone();
        for v in b.as_mut_slice() {
            *v += 1.0;
        }
        let v = mmd_gaussian(&a, &b, 1.0).unwrap();
        assert!((0.1..=0.3).contains(&v), "MMD {v}");
    }

    #[test]
    fn mmd_invariant_under_joint_rigid_motion() {
        let a = uniform_matrix(16, 120, 2);
        let b = uniform_matrix(17, 140, 2);
        let base = mmd_gaussian(&a, &b, 0.7).unwrap();
        let theta: f64 = 0.83;
        let (s, c) = theta.sin_cos();
        let rotate = |m: &Matrix| -> Matrix {
            let mut out = Matrix::zeros(m.rows(), 2);
            for i in 0..m.rows() {
                let (x, y) = (m.get(i, 0), m.get(i, 1));
                out.set(i, 0, c * x - s * y + 2.5);
                out.set(i, 1, s * x + c * y - 1.0);
            }
            out
        };
        let moved = mmd_gaussian(&rotate(&a), &rotate(&b), 0.7).unwrap();
        assert!((base - moved).abs() < 1e-12);
    }

    #[test]
    fn median_heuristic_examples() {
        let two = Matrix::from_vec(2, 1, vec![0.0, 3.0]).unwrap();
        assert_eq!(median_heuristic(&two, 2000).unwrap(), 3.0);
        let pooled = uniform_matrix(18, 4000, 2);
        let sigma = median_heuristic(&pooled, 2000).unwrap();
        assert!((0.45..=0.60).contains(&sigma), "sigma {sigma}");
        // Homogeneity: scaling all points scales the bandwidth.
        let mut scaled = pooled.clone();
        for v in scaled.as_mut_slice() {
            *v *= 2.5;
        }
        let sigma2 = median_heuristic(&scaled, 2000).unwrap();
        assert!((sigma2 - 2.5 * sigma).abs() < 1e-12);
        let same = Matrix::from_vec(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        assert!(median_heuristic(&same, 10).is_err());
    }

    #[test]
    fn kendall_tau_perfect_and_reversed() {
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(kendall_tau(&a, &a).unwrap(), 1.0);
        let rev: Vec<f64> = a.iter().rev().cloned().collect();
        assert_eq!(kendall_tau(&a, &rev).unwrap(), -1.0);
    }

    #[test]
    fn kendall_tau_invariant_under_monotone_transform() {
        let a = sample_noise(40, 200, 1).unwrap().samples().column(0);
        let b = sample_noise(41, 200, 1).unwrap().samples().column(0);
        let t1 = kendall_tau(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|v| v.exp()).collect();
        let b2: Vec<f64> = b.iter().map(|v| v * 3.0 + 10.0).collect();
        let t2 = kendall_tau(&a2, &b2).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn ks_uniform_examples() {
        let n = 100;
        let grid: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let stat = ks_uniform(&grid).unwrap();
        assert!((stat - 0.5 / n as f64).abs() < 1e-14);
        let constant = vec![0.5; 7];
        assert_eq!(ks_uniform(&constant).unwrap(), 0.5);
        assert!(ks_uniform(&[1.5]).is_err());
        // 1e4 genuine uniforms stay under ~1.5x the 1% critical value.
        let mut rng = stream_rng(50, 0);
        let sample: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..1.0)).collect();
        let stat = ks_uniform(&sample).unwrap();
        assert!(stat < 0.0136 * 1.5, "KS {stat}");
    }

    #[test]
    fn kde_nll_matches_gaussian_entropy() {
        let train = sample_noise(60, 5000, 2).unwrap().samples().clone();
        let nll = kde_nll(&train, &train).unwrap();
        let entropy = (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((nll - entropy).abs() < 0.1, "NLL {nll} vs entropy {entropy}");
    }

    #[test]
    fn kde_nll_far_point_hits_floor_region() {
        let train = sample_noise(61, 500, 2).unwrap().samples().clone();
        let test = Matrix::from_vec(1, 2, vec![1e6, -1e6]).unwrap();
        let nll = kde_nll(&train, &test).unwrap();
        assert!(nll >= 50.0, "NLL {nll}");
    }

    #[test]
    fn kde_nll_change_of_variables() {
        let train = sample_noise(62, 2000, 2).unwrap().samples().clone();
        let test = sample_noise(63, 500, 2).unwrap().samples().clone();
        let base = kde_nll(&train, &test).unwrap();
        let double = |m: &Matrix| {
            let mut out = m.clone();
            for v in out.as_mut_slice() {
                *v *= 2.0;
            }
            out
        };
        let scaled = kde_nll(&double(&train), &double(&test)).unwrap();
        assert!((scaled - base - 2.0 * 2.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn kde_nll_rejects_degenerate_train() {
        let mut train = sample_noise(64, 100, 2).unwrap().samples().clone();
        for i in 0..train.rows() {
            train.set(i, 1, 4.0);
        }
        let test = sample_noise(65, 10, 2).unwrap().samples().clone();
        assert!(kde_nll(&train, &test).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn prop_kendall_tau_matches_brute_force(
            pairs in proptest::collection::vec((-100i32..100, -100i32..100), 2..60)
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let fast = kendall_tau(&a, &b).unwrap();
            let n = a.len();
            let mut concordant = 0i64;
            let mut discordant = 0i64;
            for i in 0..n {
                for j in (i + 1)..n {
                    let s = (a[i] - a[j]) * (b[i] - b[j]);
                    if s > 0.0 {
                        concordant += 1;
                    } else if s < 0.0 {
                        discordant += 1;
                    }
                }
            }
            let brute = (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64;
            prop_assert!((fast - brute).abs() < 1e-12);
        }

        #[test]
        fn prop_empirical_copula_monotone(seed in 0u64..200) {
            let pts = uniform_matrix(seed, 60, 2);
            let cop = EmpiricalCopula::new(pts).unwrap();
            let mut rng = stream_rng(seed, 3);
            for _ in 0..20 {
                let w1 = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
                let w2 = [
                    rng.random_range(w1[0]..=1.0),
                    rng.random_range(w1[1]..=1.0),
                ];
                prop_assert!(cop.cdf(&w1).unwrap() <= cop.cdf(&w2).unwrap());
            }
        }
    }
}
