//! The implicit generative copula estimator: the training loop, marginal
//! freezing, and copula/data-space sampling of a trained model.
//!
//! Training matches the rank structure of the generator output to the
//! unit-space training data with the energy distance, differentiating
//! through a softrank layer. After training, each output marginal is frozen
//! into an empirical CDF table built from a large generator sample; pushing
//! new latent draws through those tables yields copula samples whose
//! marginals are uniform by construction, trained or not.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::metrics::{energy_loss, energy_loss_value};
use crate::mlp::{AdamHyper, GeneratorParams};
use crate::rng::{derive_seed, fill_noise, sample_noise, stream_rng, NoiseBatch};
use crate::transforms::{
    column_iqr_scales, hard_rank, softrank_backward, softrank_scaled, InverseCdf,
    MarginalCdfTable,
};
use crate::{Error, Result};

/// Archive format marker; bumped on incompatible layout changes.
const ARCHIVE_VERSION: u32 = 1;

// Independent RNG streams derived from the master seed.
const STREAM_SHUFFLE: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_FINALIZE: u64 = 3;
const STREAM_BATCH_NOISE: u64 = 1000;

/// Rows processed per forward pass while freezing marginals. Chunking only
/// batches the work; results are identical for any chunk size.
const FINALIZE_CHUNK: usize = 8192;

/// All training hyperparameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden layer widths of the generator.
    pub hidden: Vec<usize>,
    /// Noise dimension K; `None` resolves to 3 * D at training time.
    pub noise_dim: Option<usize>,
    /// Model samples M drawn per batch.
    pub model_samples: usize,
    /// Data rows per training batch.
    pub batch_size: usize,
    pub epochs: usize,
    /// Softrank sharpness, applied after per-column IQR standardization.
    pub softrank_alpha: f64,
    pub adam: AdamHyper,
    /// Generator draws T used to freeze each marginal CDF.
    pub marginal_samples: usize,
    /// Quantile knots G kept per marginal CDF table.
    pub cdf_knots: usize,
    pub seed: u64,
    /// Redraw the per-batch noise at every epoch instead of fixing it once.
    pub fresh_noise_per_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100],
            noise_dim: None,
            model_samples: 200,
            batch_size: 100,
            epochs: 500,
            softrank_alpha: 1000.0,
            adam: AdamHyper::default(),
            marginal_samples: 1_000_000,
            cdf_knots: 4096,
            seed: 0,
            fresh_noise_per_epoch: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidParam("hidden layer width of 0".into()));
        }
        if self.model_samples < 2 {
            return Err(Error::InvalidParam(format!(
                "model_samples must be >= 2, got {}",
                self.model_samples
            )));
        }
        if self.batch_size < 1 || self.epochs < 1 {
            return Err(Error::InvalidParam(
                "batch_size and epochs must be positive".into(),
            ));
        }
        if let Some(k) = self.noise_dim {
            if k < 1 {
                return Err(Error::InvalidParam("noise_dim must be >= 1".into()));
            }
        }
        if !(self.softrank_alpha > 0.0) {
            return Err(Error::InvalidParam(format!(
                "softrank_alpha must be positive, got {}",
                self.softrank_alpha
            )));
        }
        if self.cdf_knots < 2 || self.marginal_samples < self.cdf_knots {
            return Err(Error::InvalidParam(format!(
                "need marginal_samples >= cdf_knots >= 2, got T={}, G={}",
                self.marginal_samples, self.cdf_knots
            )));
        }
        Ok(())
    }

    /// Noise dimension for D-dimensional data.
    pub fn resolved_noise_dim(&self, d: usize) -> usize {
        self.noise_dim.unwrap_or(3 * d)
    }
}

/// Per-epoch mean batch losses. `soft` is the training loss on softrank
/// outputs; `hard` is the same energy loss evaluated on hard ranks.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub soft: f64,
    pub hard: f64,
}

/// A trained, marginal-finalized copula model. Immutable once built.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainedCopulaModel {
    archive_version: u32,
    params: GeneratorParams,
    tables: Vec<MarginalCdfTable>,
    config: TrainConfig,
    loss_history: Vec<EpochLoss>,
}

/// Train an IGC model on unit-space data (each entry in (0, 1]).
pub fn train(u: &Matrix, config: &TrainConfig) -> Result<TrainedCopulaModel> {
    config.validate()?;
    let (n, d) = (u.rows(), u.cols());
    if d < 2 {
        return Err(Error::InvalidParam(
            "one-dimensional data has a trivial copula; refusing to train".into(),
        ));
    }
    if n < config.batch_size {
        return Err(Error::InvalidParam(format!(
            "need at least one full batch: N={n} < batch_size={}",
            config.batch_size
        )));
    }
    if u.as_slice().iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::InvalidParam(
            "training data must lie in (0, 1]; apply pseudo_observations first".into(),
        ));
    }

    let k = config.resolved_noise_dim(d);
    let mut resolved = config.clone();
    resolved.noise_dim = Some(k);
    let master = config.seed;

    // Partition once: seeded shuffle, leftovers dropped.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(master, STREAM_SHUFFLE));
    let batches = n / config.batch_size;
    let mut data_batches = Vec::with_capacity(batches);
    for b in 0..batches {
        let mut batch = Matrix::zeros(config.batch_size, d);
        for (i, &row) in order[b * config.batch_size..(b + 1) * config.batch_size]
            .iter()
            .enumerate()
        {
            batch.row_mut(i).copy_from_slice(u.row(row));
        }
        data_batches.push(batch);
    }

    let mut params = GeneratorParams::glorot(k, &config.hidden, d, derive_seed(master, STREAM_INIT));

    let draw_noise = |epoch: usize| -> Result<Vec<NoiseBatch>> {
        (0..batches)
            .map(|b| {
                let stream = STREAM_BATCH_NOISE + (epoch * batches + b) as u64;
                sample_noise(derive_seed(master, stream), config.model_samples, k)
            })
            .collect()
    };
    // Noise is drawn once per batch before the epoch loop and reused unless
    // fresh_noise_per_epoch asks otherwise.
    let mut noise = draw_noise(0)?;

    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.fresh_noise_per_epoch && epoch > 0 {
            noise = draw_noise(epoch)?;
        }
        let mut soft_sum = 0.0;
        let mut hard_sum = 0.0;
        for (b, batch) in data_batches.iter().enumerate() {
            let diverged = |detail: String| Error::TrainingDiverged {
                epoch: epoch + 1,
                batch: b + 1,
                detail,
            };
            let (y, cache) = params.forward(noise[b].samples())?;
            if !y.is_finite() {
                return Err(diverged("non-finite generator output".into()));
            }
            let scales = column_iqr_scales(&y);
            let alphas: Vec<f64> = scales
                .iter()
                .map(|s| config.softrank_alpha / s)
                .collect();
            let (v, sr_cache) = softrank_scaled(&y, &alphas)?;
            let (loss, dl_dv) = energy_loss(batch, &v)?;
            if !loss.is_finite() {
                return Err(diverged(format!("loss = {loss}")));
            }
            let hard_loss = energy_loss_value(batch, &hard_rank(&y)?)?;
            let dl_dy = softrank_backward(&sr_cache, &dl_dv)?;
            let grads = params.backward(&cache, &dl_dy)?;
            params
                .adam_step(&grads, &config.adam)
                .map_err(|e| diverged(e.to_string()))?;
            soft_sum += loss;
            hard_sum += hard_loss;
        }
        history.push(EpochLoss {
            epoch: epoch + 1,
            soft: soft_sum / batches as f64,
            hard: hard_sum / batches as f64,
        });
    }

    let tables = finalize_marginals(&params, &resolved)?;
    Ok(TrainedCopulaModel {
        archive_version: ARCHIVE_VERSION,
        params,
        tables,
        config: resolved,
        loss_history: history,
    })
}

/// Freeze the generator's marginal CDFs: draw T fresh latent samples in
/// chunks and summarize each output dimension into a quantile-knot table.
pub fn finalize_marginals(
    params: &GeneratorParams,
    config: &TrainConfig,
) -> Result<Vec<MarginalCdfTable>> {
    finalize_marginals_chunked(params, config, FINALIZE_CHUNK)
}

/// `finalize_marginals` with an explicit forward-pass chunk size. The chunk
/// size only batches work; tables are identical for any value.
pub fn finalize_marginals_chunked(
    params: &GeneratorParams,
    config: &TrainConfig,
    chunk_rows: usize,
) -> Result<Vec<MarginalCdfTable>> {
    let t = config.marginal_samples;
    let g = config.cdf_knots;
    if g < 2 || t < g {
        return Err(Error::InvalidParam(format!(
            "need marginal_samples >= cdf_knots >= 2, got T={t}, G={g}"
        )));
    }
    if chunk_rows == 0 {
        return Err(Error::InvalidParam("chunk size must be positive".into()));
    }
    let k = params.input_dim();
    let d = params.output_dim();
    let mut rng = stream_rng(config.seed, STREAM_FINALIZE);
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(t); d];
    let mut remaining = t;
    while remaining > 0 {
        let chunk = remaining.min(chunk_rows);
        let noise = fill_noise(&mut rng, chunk, k);
        let y = params.output(&noise)?;
        y.require_finite("generator output during marginal freeze")?;
        for i in 0..chunk {
            let row = y.row(i);
            for (dim, col) in columns.iter_mut().enumerate() {
                col.push(row[dim]);
            }
        }
        remaining -= chunk;
    }
    columns
        .iter()
        .enumerate()
        .map(|(dim, col)| MarginalCdfTable::build(col, g, dim))
        .collect()
}

/// Train a model whose generator is left at its random initialization; the
/// marginals are still frozen properly. The uniformity guarantee holds for
/// this model too.
pub fn untrained_model(d: usize, config: &TrainConfig) -> Result<TrainedCopulaModel> {
    config.validate()?;
    if d < 2 {
        return Err(Error::InvalidParam(
            "one-dimensional data has a trivial copula".into(),
        ));
    }
    let k = config.resolved_noise_dim(d);
    let mut resolved = config.clone();
    resolved.noise_dim = Some(k);
    let params =
        GeneratorParams::glorot(k, &config.hidden, d, derive_seed(config.seed, STREAM_INIT));
    let tables = finalize_marginals(&params, &resolved)?;
    Ok(TrainedCopulaModel {
        archive_version: ARCHIVE_VERSION,
        params,
        tables,
        config: resolved,
        loss_history: Vec::new(),
    })
}

impl TrainedCopulaModel {
    pub fn dim(&self) -> usize {
        self.params.output_dim()
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn loss_history(&self) -> &[EpochLoss] {
        &self.loss_history
    }

    pub fn params(&self) -> &GeneratorParams {
        &self.params
    }

    pub fn tables(&self) -> &[MarginalCdfTable] {
        &self.tables
    }

    /// Latent draws y = g(z) from fresh seeded noise.
    pub fn sample_latent(&self, n: usize, seed: u64) -> Result<Matrix> {
        let k = self.params.input_dim();
        if n == 0 {
            return Ok(Matrix::zeros(0, self.dim()));
        }
        let mut rng = stream_rng(seed, 0x5a17);
        let noise = fill_noise(&mut rng, n, k);
        self.params.output(&noise)
    }

    /// Copula samples: latent draws pushed through the frozen marginal CDF
    /// tables. Every entry lies strictly inside (0, 1).
    pub fn sample_copula(&self, n: usize, seed: u64) -> Result<Matrix> {
        let y = self.sample_latent(n, seed)?;
        let mut v = Matrix::zeros(n, self.dim());
        for i in 0..n {
            for (d, table) in self.tables.iter().enumerate() {
                v.set(i, d, table.cdf(y.get(i, d)));
            }
        }
        Ok(v)
    }

    /// Copula samples pushed through caller-supplied inverse marginal CDFs,
    /// yielding data-space samples.
    pub fn sample_data_space(
        &self,
        inverses: &[&dyn InverseCdf],
        n: usize,
        seed: u64,
    ) -> Result<Matrix> {
        if inverses.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} inverse CDFs supplied for {} dimensions",
                inverses.len(),
                self.dim()
            )));
        }
        let v = self.sample_copula(n, seed)?;
        let mut x = Matrix::zeros(n, self.dim());
        for i in 0..n {
            for d in 0..self.dim() {
                x.set(i, d, inverses[d].inverse_cdf(v.get(i, d))?);
            }
        }
        Ok(x)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Archive(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let model: Self =
            serde_json::from_str(json).map_err(|e| Error::Archive(e.to_string()))?;
        if model.archive_version != ARCHIVE_VERSION {
            return Err(Error::Archive(format!(
                "archive version {} is not supported (expected {})",
                model.archive_version, ARCHIVE_VERSION
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path)?;
        Self::from_json(&json)
    }
}
