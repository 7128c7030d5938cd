//! Ground-truth data generators: parametric copula samplers (Gaussian,
//! Student-t, Clayton and Gumbel with rotations), the two-component
//! Gaussian-mixture copula, bivariate toy datasets, and random benchmark
//! parameter draws.

use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::matrix::{cholesky, Matrix};
use crate::rng::stream_rng;
use crate::special::{bivariate_normal_cdf, normal_cdf, normal_quantile, student_t_cdf};
use crate::transforms::pseudo_observations;
use crate::{Error, Result};

/// Counter-clockwise copula rotation (bivariate Archimedean families only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];
}

impl FromStr for Rotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Rotation::R0),
            "90" => Ok(Rotation::R90),
            "180" => Ok(Rotation::R180),
            "270" => Ok(Rotation::R270),
            other => Err(Error::InvalidParam(format!(
                "unknown rotation '{other}' (expected 0, 90, 180 or 270)"
            ))),
        }
    }
}

/// Symmetric positive-definite matrix with unit diagonal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationMatrix(Matrix);

impl CorrelationMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let d = m.rows();
        if m.cols() != d || d < 1 {
            return Err(Error::InvalidParam("correlation matrix must be square".into()));
        }
        for i in 0..d {
            if (m.get(i, i) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParam(format!(
                    "diagonal entry ({i},{i}) = {} is not 1",
                    m.get(i, i)
                )));
            }
            for j in 0..d {
                if (m.get(i, j) - m.get(j, i)).abs() > 1e-12 {
                    return Err(Error::InvalidParam(format!(
                        "asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        if cholesky(&m).is_none() {
            return Err(Error::InvalidParam(
                "correlation matrix is not positive definite".into(),
            ));
        }
        Ok(Self(m))
    }

    /// 2x2 matrix with off-diagonal `rho`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        Self::new(Matrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]])?)
    }

    /// D-dimensional matrix with constant off-diagonal `rho`.
    pub fn equicorrelated(d: usize, rho: f64) -> Result<Self> {
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, if i == j { 1.0 } else { rho });
            }
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }
}

/// Two-component bivariate Gaussian mixture with equal weights; each
/// component has covariance `scale * [[1, off_diag], [off_diag, 1]]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub means: [[f64; 2]; 2],
    pub off_diag: [f64; 2],
    pub scale: [f64; 2],
}

impl GaussianMixtureSpec {
    pub fn validate(&self) -> Result<()> {
        for j in 0..2 {
            if self.off_diag[j].abs() >= 1.0 {
                return Err(Error::InvalidParam(format!(
                    "mixture component {j} has |off_diag| >= 1"
                )));
            }
            if self.scale[j] <= 0.0 {
                return Err(Error::InvalidParam(format!(
                    "mixture component {j} has non-positive scale"
                )));
            }
        }
        Ok(())
    }
}

/// Parametric description of a ground-truth copula.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum CopulaSpec {
    Independence { dim: usize },
    Gaussian { corr: CorrelationMatrix },
    StudentT { corr: CorrelationMatrix, nu: f64 },
    Clayton { theta: f64, rotation: Rotation },
    Gumbel { theta: f64, rotation: Rotation },
    GaussianMixture(GaussianMixtureSpec),
}

impl CopulaSpec {
    pub fn dim(&self) -> usize {
        match self {
            CopulaSpec::Independence { dim } => *dim,
            CopulaSpec::Gaussian { corr } => corr.dim(),
            CopulaSpec::StudentT { corr, .. } => corr.dim(),
            CopulaSpec::Clayton { .. } | CopulaSpec::Gumbel { .. } => 2,
            CopulaSpec::GaussianMixture(_) => 2,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            CopulaSpec::Independence { .. } => "independence",
            CopulaSpec::Gaussian { .. } => "gaussian",
            CopulaSpec::StudentT { .. } => "student_t",
            CopulaSpec::Clayton { .. } => "clayton",
            CopulaSpec::Gumbel { .. } => "gumbel",
            CopulaSpec::GaussianMixture(_) => "gaussian_mixture",
        }
    }

    /// Draw n copula samples (unit space).
    pub fn sample(&self, n: usize, seed: u64) -> Result<Matrix> {
        match self {
            CopulaSpec::Independence { dim } => sample_independence(*dim, n, seed),
            CopulaSpec::Gaussian { corr } => sample_gaussian_copula(corr, n, seed),
            CopulaSpec::StudentT { corr, nu } => sample_student_t_copula(corr, *nu, n, seed),
            CopulaSpec::Clayton { theta, rotation } => sample_clayton(*theta, *rotation, n, seed),
            CopulaSpec::Gumbel { theta, rotation } => sample_gumbel(*theta, *rotation, n, seed),
            CopulaSpec::GaussianMixture(spec) => {
                sample_gaussian_mixture_copula(spec, n, seed).map(|(_, u)| u)
            }
        }
    }
}

/// Independence copula: i.i.d. U(0,1) entries.
pub fn sample_independence(dim: usize, n: usize, seed: u64) -> Result<Matrix> {
    if dim < 1 {
        return Err(Error::InvalidParam("dimension must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let data: Vec<f64> = (0..n * dim).map(|_| rng.random_range(0.0..1.0)).collect();
    Matrix::from_vec(n, dim, data)
}

/// Rows of correlated standard normals: z L^T with L the Cholesky factor.
fn multivariate_normal_rows(l: &Matrix, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let d = l.rows();
    let mut out = Matrix::zeros(n, d);
    let mut z = vec![0.0; d];
    for i in 0..n {
        for zv in z.iter_mut() {
            *zv = StandardNormal.sample(rng);
        }
        let row = out.row_mut(i);
        for (j, rj) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..=j {
                acc += l.get(j, k) * z[k];
            }
            *rj = acc;
        }
    }
    out
}

/// Gaussian copula: correlated normals mapped through the normal CDF.
pub fn sample_gaussian_copula(corr: &CorrelationMatrix, n: usize, seed: u64) -> Result<Matrix> {
    let l = cholesky(corr.matrix())
        .ok_or_else(|| Error::InvalidParam("correlation matrix is not positive definite".into()))?;
    let mut rng = stream_rng(seed, 1);
    let mut x = multivariate_normal_rows(&l, n, &mut rng);
    for v in x.as_mut_slice() {
        *v = normal_cdf(*v);
    }
    Ok(x)
}

/// Student-t copula: multivariate t via normal/chi-square mixing, mapped
/// through the t CDF.
pub fn sample_student_t_copula(
    corr: &CorrelationMatrix,
    nu: f64,
    n: usize,
    seed: u64,
) -> Result<Matrix> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParam(format!(
            "degrees of freedom must be positive, got {nu}"
        )));
    }
    let l = cholesky(corr.matrix())
        .ok_or_else(|| Error::InvalidParam("correlation matrix is not positive definite".into()))?;
    let chi2 = Gamma::new(nu / 2.0, 2.0)
        .map_err(|e| Error::InvalidParam(format!("chi-square mixing: {e}")))?;
    let mut rng = stream_rng(seed, 2);
    let mut x = multivariate_normal_rows(&l, n, &mut rng);
    for i in 0..n {
        let w = chi2.sample(&mut rng);
        let factor = (nu / w).sqrt();
        for v in x.row_mut(i) {
            *v = student_t_cdf(*v * factor, nu);
        }
    }
    Ok(x)
}

/// Clayton copula via the Marshall-Olkin construction: a Gamma(1/theta, 1)
/// frailty V and U_d = (1 + E_d / V)^(-1/theta) with E_d ~ Exp(1).
pub fn sample_clayton(theta: f64, rotation: Rotation, n: usize, seed: u64) -> Result<Matrix> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParam(format!(
            "Clayton theta must be positive, got {theta}"
        )));
    }
    let gamma = Gamma::new(1.0 / theta, 1.0)
        .map_err(|e| Error::InvalidParam(format!("frailty distribution: {e}")))?;
    let mut rng = stream_rng(seed, 3);
    let mut u = Matrix::zeros(n, 2);
    for i in 0..n {
        let v: f64 = gamma.sample(&mut rng);
        for j in 0..2 {
            let e: f64 = Exp1.sample(&mut rng);
            u.set(i, j, (1.0 + e / v).powf(-1.0 / theta));
        }
    }
    rotate_copula(&u, rotation)
}

/// Gumbel copula via Marshall-Olkin with a positive-stable frailty of index
/// 1/theta, sampled by the Chambers-Mallows-Stuck construction (in log
/// space, which stays stable for large theta): U_d = exp(-(E_d/S)^(1/theta)).
pub fn sample_gumbel(theta: f64, rotation: Rotation, n: usize, seed: u64) -> Result<Matrix> {
    if !(theta >= 1.0) {
        return Err(Error::InvalidParam(format!(
            "Gumbel theta must be >= 1, got {theta}"
        )));
    }
    let a = 1.0 / theta;
    let mut rng = stream_rng(seed, 4);
    let mut u = Matrix::zeros(n, 2);
    for i in 0..n {
        let ln_s = if theta == 1.0 {
            0.0 // degenerate frailty: independence
        } else {
            let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let w: f64 = Exp1.sample(&mut rng);
            angle.sin().ln().mul_add(-1.0 / a, (a * angle).sin().ln())
                + ((1.0 - a) / a) * (((1.0 - a) * angle).sin().ln() - w.ln())
        };
        for j in 0..2 {
            let e: f64 = Exp1.sample(&mut rng);
            // U = exp(-(E/S)^a) evaluated as exp(-exp(a (ln E - ln S))).
            u.set(i, j, (-(a * (e.ln() - ln_s)).exp()).exp());
        }
    }
    rotate_copula(&u, rotation)
}

/// Draws from the two-component Gaussian mixture together with their
/// pseudo-observations (the mixture's empirical copula sample).
pub fn sample_gaussian_mixture_copula(
    spec: &GaussianMixtureSpec,
    n: usize,
    seed: u64,
) -> Result<(Matrix, Matrix)> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::InvalidParam(
            "mixture copula sampling needs n >= 2 for pseudo-observations".into(),
        ));
    }
    let mut factors = Vec::with_capacity(2);
    for j in 0..2 {
        let s = spec.scale[j];
        let cov = Matrix::from_rows(&[
            vec![s, s * spec.off_diag[j]],
            vec![s * spec.off_diag[j], s],
        ])?;
        factors.push(cholesky(&cov).ok_or_else(|| {
            Error::InvalidParam(format!("mixture component {j} covariance not PD"))
        })?);
    }
    let mut rng = stream_rng(seed, 5);
    let mut x = Matrix::zeros(n, 2);
    for i in 0..n {
        let j = usize::from(rng.random_range(0.0..1.0) < 0.5);
        let z0: f64 = StandardNormal.sample(&mut rng);
        let z1: f64 = StandardNormal.sample(&mut rng);
        let l = &factors[j];
        x.set(i, 0, spec.means[j][0] + l.get(0, 0) * z0);
        x.set(i, 1, spec.means[j][1] + l.get(1, 0) * z0 + l.get(1, 1) * z1);
    }
    let u = pseudo_observations(&x)?;
    Ok((x, u))
}

/// Rotate a bivariate copula sample by a multiple of 90 degrees:
/// 90 -> (u2, 1-u1), 180 -> (1-u1, 1-u2), 270 -> (1-u2, u1).
pub fn rotate_copula(u: &Matrix, rotation: Rotation) -> Result<Matrix> {
    if u.cols() != 2 {
        return Err(Error::InvalidParam(format!(
            "rotations are defined for bivariate copulas, got D={}",
            u.cols()
        )));
    }
    if rotation == Rotation::R0 {
        return Ok(u.clone());
    }
    let mut out = Matrix::zeros(u.rows(), 2);
    for i in 0..u.rows() {
        let (a, b) = (u.get(i, 0), u.get(i, 1));
        let (x, y) = match rotation {
            Rotation::R0 => (a, b),
            Rotation::R90 => (b, 1.0 - a),
            Rotation::R180 => (1.0 - a, 1.0 - b),
            Rotation::R270 => (1.0 - b, a),
        };
        out.set(i, 0, x);
        out.set(i, 1, y);
    }
    Ok(out)
}

/// 2-D toy dataset kinds (data space, not unit space).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToyKind {
    SwissRoll,
    Ring,
    Grid,
}

impl ToyKind {
    pub const ALL: [ToyKind; 3] = [ToyKind::SwissRoll, ToyKind::Ring, ToyKind::Grid];

    pub fn name(self) -> &'static str {
        match self {
            ToyKind::SwissRoll => "swiss_roll",
            ToyKind::Ring => "ring",
            ToyKind::Grid => "grid",
        }
    }
}

impl FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "swiss_roll" => Ok(ToyKind::SwissRoll),
            "ring" => Ok(ToyKind::Ring),
            "grid" => Ok(ToyKind::Grid),
            other => Err(Error::InvalidParam(format!(
                "unknown toy dataset '{other}' (expected swiss_roll, ring or grid)"
            ))),
        }
    }
}

/// Sample a 2-D toy dataset:
/// - swiss_roll: t ~ U(1.5 pi, 4.5 pi), (t cos t, t sin t)/3 + N(0, 0.05^2 I)
/// - ring: 8 equal-weight Gaussians on a radius-2 circle, sigma 0.1
/// - grid: 5x5 equal-weight Gaussians, spacing 2, centered at 0, sigma 0.1
pub fn sample_toy2d(kind: ToyKind, n: usize, seed: u64) -> Result<Matrix> {
    if n < 1 {
        return Err(Error::InvalidParam("toy dataset needs n >= 1".into()));
    }
    let mut rng = stream_rng(seed, 6);
    let mut x = Matrix::zeros(n, 2);
    match kind {
        ToyKind::SwissRoll => {
            for i in 0..n {
                let t = rng.random_range(1.5 * std::f64::consts::PI..4.5 * std::f64::consts::PI);
                let n0: f64 = StandardNormal.sample(&mut rng);
                let n1: f64 = StandardNormal.sample(&mut rng);
                x.set(i, 0, t * t.cos() / 3.0 + 0.05 * n0);
                x.set(i, 1, t * t.sin() / 3.0 + 0.05 * n1);
            }
        }
        ToyKind::Ring => {
            for i in 0..n {
                let c = rng.random_range(0..8u32) as f64;
                let angle = c * std::f64::consts::PI / 4.0;
                let n0: f64 = StandardNormal.sample(&mut rng);
                let n1: f64 = StandardNormal.sample(&mut rng);
                x.set(i, 0, 2.0 * angle.cos() + 0.1 * n0);
                x.set(i, 1, 2.0 * angle.sin() + 0.1 * n1);
            }
        }
        ToyKind::Grid => {
            for i in 0..n {
                let cx = rng.random_range(0..5u32) as f64 * 2.0 - 4.0;
                let cy = rng.random_range(0..5u32) as f64 * 2.0 - 4.0;
                let n0: f64 = StandardNormal.sample(&mut rng);
                let n1: f64 = StandardNormal.sample(&mut rng);
                x.set(i, 0, cx + 0.1 * n0);
                x.set(i, 1, cy + 0.1 * n1);
            }
        }
    }
    Ok(x)
}

/// Benchmark families whose parameters are drawn at random per repetition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchmarkFamily {
    StudentT,
    Clayton,
    Gumbel,
    GaussianMixture,
}

impl BenchmarkFamily {
    pub const ALL: [BenchmarkFamily; 4] = [
        BenchmarkFamily::StudentT,
        BenchmarkFamily::Clayton,
        BenchmarkFamily::Gumbel,
        BenchmarkFamily::GaussianMixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkFamily::StudentT => "student_t",
            BenchmarkFamily::Clayton => "clayton",
            BenchmarkFamily::Gumbel => "gumbel",
            BenchmarkFamily::GaussianMixture => "gaussian_mixture",
        }
    }
}

impl FromStr for BenchmarkFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "student_t" => Ok(BenchmarkFamily::StudentT),
            "clayton" => Ok(BenchmarkFamily::Clayton),
            "gumbel" => Ok(BenchmarkFamily::Gumbel),
            "gaussian_mixture" => Ok(BenchmarkFamily::GaussianMixture),
            other => Err(Error::InvalidParam(format!(
                "unknown benchmark family '{other}'"
            ))),
        }
    }
}

/// Random two-component Gaussian mixture: means from U(-5,5)^2, off-diagonal
/// from U(-0.95, 0.95), scale from U(0.8, 1.2).
pub fn random_gaussian_mixture_spec(rng: &mut ChaCha8Rng) -> GaussianMixtureSpec {
    let mut means = [[0.0; 2]; 2];
    let mut off_diag = [0.0; 2];
    let mut scale = [0.0; 2];
    for j in 0..2 {
        means[j][0] = rng.random_range(-5.0..5.0);
        means[j][1] = rng.random_range(-5.0..5.0);
        off_diag[j] = rng.random_range(-0.95..0.95);
        scale[j] = rng.random_range(0.8..1.2);
    }
    GaussianMixtureSpec {
        means,
        off_diag,
        scale,
    }
}

/// Draw a random benchmark parameterization:
/// Student-t: |rho| in [0.5, 0.95] (random sign), nu in [2, 10];
/// Clayton/Gumbel: theta in [2, 10] and a uniform rotation;
/// Gaussian mixture: the scheme of `random_gaussian_mixture_spec`.
pub fn random_bivariate_benchmark(
    family: BenchmarkFamily,
    rng: &mut ChaCha8Rng,
) -> Result<CopulaSpec> {
    match family {
        BenchmarkFamily::StudentT => {
            let magnitude = rng.random_range(0.5..0.95);
            let rho = if rng.random_range(0.0..1.0) < 0.5 {
                -magnitude
            } else {
                magnitude
            };
            let nu = rng.random_range(2.0..10.0);
            Ok(CopulaSpec::StudentT {
                corr: CorrelationMatrix::bivariate(rho)?,
                nu,
            })
        }
        BenchmarkFamily::Clayton => Ok(CopulaSpec::Clayton {
            theta: rng.random_range(2.0..10.0),
            rotation: Rotation::ALL[rng.random_range(0..4usize)],
        }),
        BenchmarkFamily::Gumbel => Ok(CopulaSpec::Gumbel {
            theta: rng.random_range(2.0..10.0),
            rotation: Rotation::ALL[rng.random_range(0..4usize)],
        }),
        BenchmarkFamily::GaussianMixture => Ok(CopulaSpec::GaussianMixture(
            random_gaussian_mixture_spec(rng),
        )),
    }
}

/// Kendall's tau of an elliptical copula: (2/pi) asin(rho).
pub fn elliptical_tau(rho: f64) -> f64 {
    2.0 / std::f64::consts::PI * rho.asin()
}

/// Kendall's tau of a Clayton copula: theta / (theta + 2).
pub fn clayton_tau(theta: f64) -> f64 {
    theta / (theta + 2.0)
}

/// Kendall's tau of a Gumbel copula: 1 - 1/theta.
pub fn gumbel_tau(theta: f64) -> f64 {
    1.0 - 1.0 / theta
}

/// Analytic independence copula CDF.
pub fn independence_copula_cdf(w: &[f64]) -> f64 {
    w.iter().product()
}

/// Analytic bivariate Gaussian copula CDF with correlation `rho`.
pub fn gaussian_copula_cdf_2d(rho: f64, w: &[f64]) -> f64 {
    assert_eq!(w.len(), 2, "bivariate CDF needs two coordinates");
    let (w1, w2) = (w[0], w[1]);
    if w1 <= 0.0 || w2 <= 0.0 {
        return 0.0;
    }
    if w1 >= 1.0 && w2 >= 1.0 {
        return 1.0;
    }
    if w1 >= 1.0 {
        return w2;
    }
    if w2 >= 1.0 {
        return w1;
    }
    bivariate_normal_cdf(normal_quantile(w1), normal_quantile(w2), rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{kendall_tau, ks_uniform};

    fn tau_of(u: &Matrix) -> f64 {
        kendall_tau(&u.column(0), &u.column(1)).unwrap()
    }

    fn marginals_uniform(u: &Matrix, bound: f64) {
        for d in 0..u.cols() {
            let ks = ks_uniform(&u.column(d)).unwrap();
            assert!(ks < bound, "column {d}: KS {ks} >= {bound}");
        }
    }

    #[test]
    fn gaussian_copula_independence_and_tau() {
        let eye = CorrelationMatrix::equicorrelated(2, 0.0).unwrap();
        let u = sample_gaussian_copula(&eye, 100_000, 1).unwrap();
        assert!(tau_of(&u).abs() < 0.02);
        marginals_uniform(&u, 0.005);

        let corr = CorrelationMatrix::bivariate(0.7).unwrap();
        let u = sample_gaussian_copula(&corr, 100_000, 2).unwrap();
        assert!((tau_of(&u) - elliptical_tau(0.7)).abs() < 0.01);
        marginals_uniform(&u, 0.005);
    }

    #[test]
    fn gaussian_copula_rejects_non_pd() {
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(CorrelationMatrix::new(bad).is_err());
    }

    #[test]
    fn student_t_copula_tau_and_gaussian_limit() {
        let corr = CorrelationMatrix::bivariate(0.5).unwrap();
        let u = sample_student_t_copula(&corr, 4.0, 100_000, 3).unwrap();
        assert!((tau_of(&u) - elliptical_tau(0.5)).abs() < 0.01);
        marginals_uniform(&u, 0.005);

        // Large-nu limit agrees with the Gaussian copula tau.
        let u_limit = sample_student_t_copula(&corr, 1e6, 100_000, 4).unwrap();
        assert!((tau_of(&u_limit) - elliptical_tau(0.5)).abs() < 0.01);
    }

    #[test]
    fn clayton_tau_and_rotation() {
        let u = sample_clayton(2.0, Rotation::R0, 100_000, 5).unwrap();
        assert!((tau_of(&u) - clayton_tau(2.0)).abs() < 0.01, "tau {}", tau_of(&u));
        marginals_uniform(&u, 0.005);

        let rotated = sample_clayton(2.0, Rotation::R90, 100_000, 5).unwrap();
        assert!((tau_of(&rotated) + clayton_tau(2.0)).abs() < 0.01);
        assert!(sample_clayton(0.0, Rotation::R0, 10, 0).is_err());
    }

    #[test]
    fn gumbel_tau_independence_and_tail_dependence() {
        let indep = sample_gumbel(1.0, Rotation::R0, 100_000, 6).unwrap();
        assert!(tau_of(&indep).abs() < 0.02);

        let u = sample_gumbel(2.0, Rotation::R0, 100_000, 7).unwrap();
        assert!((tau_of(&u) - gumbel_tau(2.0)).abs() < 0.01, "tau {}", tau_of(&u));
        marginals_uniform(&u, 0.005);

        // Upper-tail dependence at theta=3: P(U1 > .99 | U2 > .99) well above
        // the independence value 0.01 (population coefficient 2 - 2^(1/3)).
        let big = sample_gumbel(3.0, Rotation::R0, 1_000_000, 8).unwrap();
        let mut joint = 0usize;
        let mut tail2 = 0usize;
        for i in 0..big.rows() {
            if big.get(i, 1) > 0.99 {
                tail2 += 1;
                if big.get(i, 0) > 0.99 {
                    joint += 1;
                }
            }
        }
        let conditional = joint as f64 / tail2 as f64;
        assert!(conditional / 0.01 > 5.0, "conditional {conditional}");
        assert!(sample_gumbel(0.9, Rotation::R0, 10, 0).is_err());
    }

    #[test]
    fn mixture_copula_collapses_and_correlates() {
        // Two identical spherical components: independence.
        let spherical = GaussianMixtureSpec {
            means: [[0.0, 0.0], [0.0, 0.0]],
            off_diag: [0.0, 0.0],
            scale: [1.0, 1.0],
        };
        let (_, u) = sample_gaussian_mixture_copula(&spherical, 100_000, 9).unwrap();
        assert!(tau_of(&u).abs() < 0.02);

        // Strongly correlated components.
        let tight = GaussianMixtureSpec {
            means: [[0.0, 0.0], [1.0, 1.0]],
            off_diag: [0.9, 0.9],
            scale: [1.0, 1.0],
        };
        let (_, u) = sample_gaussian_mixture_copula(&tight, 10_000, 10).unwrap();
        assert!(tau_of(&u) > 0.4, "tau {}", tau_of(&u));
    }

    #[test]
    fn mixture_copula_is_pseudo_observation_grid() {
        let spec = GaussianMixtureSpec {
            means: [[-1.0, 2.0], [3.0, 0.5]],
            off_diag: [0.5, -0.4],
            scale: [1.1, 0.9],
        };
        let n = 500;
        let (x, u) = sample_gaussian_mixture_copula(&spec, n, 11).unwrap();
        assert_eq!(x.rows(), n);
        for d in 0..2 {
            let mut col = u.column(d);
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (i, v) in col.iter().enumerate() {
                assert_eq!(*v, (i + 1) as f64 / n as f64);
            }
        }
    }

    #[test]
    fn rotations_compose_correctly() {
        let u = sample_clayton(3.0, Rotation::R0, 1000, 12).unwrap();
        let same = rotate_copula(&u, Rotation::R0).unwrap();
        assert_eq!(u, same);
        let twice = rotate_copula(&rotate_copula(&u, Rotation::R180).unwrap(), Rotation::R180)
            .unwrap();
        for (a, b) in u.as_slice().iter().zip(twice.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
        let tall = Matrix::zeros(4, 3);
        assert!(rotate_copula(&tall, Rotation::R90).is_err());
    }

    #[test]
    fn rotation_flips_tau_sign() {
        let u = sample_gumbel(2.5, Rotation::R0, 100_000, 13).unwrap();
        let rot = rotate_copula(&u, Rotation::R90).unwrap();
        assert!((tau_of(&rot) + tau_of(&u)).abs() < 0.01);
        let rot270 = rotate_copula(&u, Rotation::R270).unwrap();
        assert!((tau_of(&rot270) + tau_of(&u)).abs() < 0.01);
    }

    #[test]
    fn toy_grid_symmetry_and_ring_radius() {
        let grid = sample_toy2d(ToyKind::Grid, 100_000, 14).unwrap();
        for d in 0..2 {
            let mean: f64 = grid.column(d).iter().sum::<f64>() / grid.rows() as f64;
            assert!(mean.abs() < 0.05, "grid mean {mean}");
        }
        let ring = sample_toy2d(ToyKind::Ring, 100_000, 15).unwrap();
        let mean_radius: f64 = (0..ring.rows())
            .map(|i| (ring.get(i, 0).powi(2) + ring.get(i, 1).powi(2)).sqrt())
            .sum::<f64>()
            / ring.rows() as f64;
        assert!((mean_radius - 2.0).abs() < 0.02, "radius {mean_radius}");
    }

    #[test]
    fn toy_datasets_deterministic() {
        let a = sample_toy2d(ToyKind::SwissRoll, 500, 16).unwrap();
        let b = sample_toy2d(ToyKind::SwissRoll, 500, 16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn benchmark_draws_stay_in_table_ranges() {
        let mut rng = stream_rng(17, 0);
        let mut rotation_counts = [0usize; 4];
        for _ in 0..10_000 {
            match random_bivariate_benchmark(BenchmarkFamily::Clayton, &mut rng).unwrap() {
                CopulaSpec::Clayton { theta, rotation } => {
                    assert!((2.0..=10.0).contains(&theta));
                    rotation_counts[match rotation {
                        Rotation::R0 => 0,
                        Rotation::R90 => 1,
                        Rotation::R180 => 2,
                        Rotation::R270 => 3,
                    }] += 1;
                }
                other => panic!("unexpected spec {other:?}"),
            }
        }
        // Uniform over four rotations: each count within 8 sigma of 2500.
        for c in rotation_counts {
            assert!((2300..=2700).contains(&c), "rotation count {c}");
        }
        for _ in 0..10_000 {
            match random_bivariate_benchmark(BenchmarkFamily::StudentT, &mut rng).unwrap() {
                CopulaSpec::StudentT { corr, nu } => {
                    let rho: f64 = corr.get(0, 1);
                    assert!((0.5..=0.95).contains(&rho.abs()), "rho {rho}");
                    assert!((2.0..=10.0).contains(&nu));
                }
                other => panic!("unexpected spec {other:?}"),
            }
        }
    }

    #[test]
    fn copula_spec_dispatch_matches_direct_sampler() {
        let spec = CopulaSpec::Clayton {
            theta: 4.0,
            rotation: Rotation::R180,
        };
        let via_spec = spec.sample(200, 18).unwrap();
        let direct = sample_clayton(4.0, Rotation::R180, 200, 18).unwrap();
        assert_eq!(via_spec, direct);
        assert_eq!(spec.dim(), 2);
        assert_eq!(spec.family_name(), "clayton");
    }

    #[test]
    fn independence_sampler_is_uniform() {
        let u = sample_independence(3, 100_000, 19).unwrap();
        marginals_uniform(&u, 0.005);
        assert!(kendall_tau(&u.column(0), &u.column(2)).unwrap().abs() < 0.02);
    }

    #[test]
    fn gaussian_copula_cdf_2d_edges() {
        assert_eq!(gaussian_copula_cdf_2d(0.5, &[0.0, 0.7]), 0.0);
        assert_eq!(gaussian_copula_cdf_2d(0.5, &[1.0, 0.7]), 0.7);
        assert_eq!(gaussian_copula_cdf_2d(0.5, &[1.0, 1.0]), 1.0);
        // rho = 0 factorizes.
        let v = gaussian_copula_cdf_2d(0.0, &[0.3, 0.8]);
        assert!((v - 0.24).abs() < 1e-12);
        assert!((independence_copula_cdf(&[0.3, 0.8]) - 0.24).abs() < 1e-15);
    }
}
