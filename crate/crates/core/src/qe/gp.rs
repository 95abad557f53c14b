use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{minimize, LbfgsConfig};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
/// Largest training set accepted by the exact GP.
pub const MAX_TRAINING_ROWS: usize = 10_000;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

// Bounds on the log hyperparameters (standardized data).
const LN_SIGNAL_BOUNDS: (f64, f64) = (-9.210340371976182, 9.210340371976182); // 1e-4 .. 1e4
const LN_LENGTH_BOUNDS: (f64, f64) = (-4.605170185988091, 6.907755278982137); // 1e-2 .. 1e3
const LN_NOISE_BOUNDS: (f64, f64) = (-13.815510557964274, std::f64::consts::LN_10); // 1e-6 .. 10

/// ARD-RBF kernel hyperparameters:
/// `k(x, x') = signal_variance * exp(-0.5 * sum_d (x_d - x'_d)^2 / l_d^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl Hyperparameters {
    /// `[ln signal, ln l_1 .. ln l_F, ln noise]`.
    pub fn to_log(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.lengthscales.len() + 2);
        v.push(self.signal_variance.ln());
        v.extend(self.lengthscales.iter().map(|l| l.ln()));
        v.push(self.noise_variance.ln());
        v
    }

    pub fn from_log(theta: &[f64]) -> Self {
        let f = theta.len() - 2;
        Hyperparameters {
            signal_variance: theta[0].exp(),
            lengthscales: theta[1..=f].iter().map(|v| v.exp()).collect(),
            noise_variance: theta[f + 1].exp(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lengthscales.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "{} lengthscales for {dim} features",
                self.lengthscales.len()
            )));
        }
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.signal_variance) || !ok(self.noise_variance) || !self.lengthscales.iter().all(|&l| ok(l)) {
            return Err(Error::InvalidArgument(
                "hyperparameters must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mean and standard deviation used to standardize one variable. A zero
/// deviation is stored as 1 so the map stays invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub sd: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        Standardizer {
            mean,
            sd: if sd > 0.0 && sd.is_finite() { sd } else { 1.0 },
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

/// Kernel matrix between the rows of `a` and `b`, without noise.
pub fn kernel_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, hyper: &Hyperparameters) -> DMatrix<f64> {
    let inv_l2: Vec<f64> = hyper.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        let d2: f64 = (0..a.ncols())
            .map(|d| (a[(i, d)] - b[(j, d)]).powi(2) * inv_l2[d])
            .sum();
        hyper.signal_variance * (-0.5 * d2).exp()
    })
}

/// Cholesky factor of `K + noise * I`, adding diagonal jitter from
/// `1e-10 * signal` up to `1e-6 * signal` if needed. Returns the jitter used.
fn factorize(k: &DMatrix<f64>, hyper: &Hyperparameters) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    let base = k + DMatrix::identity(n, n) * hyper.noise_variance;
    if let Some(c) = Cholesky::new(base.clone()) {
        return Ok((c, 0.0));
    }
    let mut jitter = JITTER_START * hyper.signal_variance;
    while jitter <= JITTER_MAX * hyper.signal_variance * (1.0 + 1e-9) {
        if let Some(c) = Cholesky::new(&base + DMatrix::identity(n, n) * jitter) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical(
        "kernel matrix is not positive definite after maximum jitter".into(),
    ))
}

/// Log marginal likelihood of standardized data and its gradient with
/// respect to the log hyperparameters (see [`Hyperparameters::to_log`]).
pub fn log_marginal_likelihood(x: &DMatrix<f64>, y: &DVector<f64>, hyper: &Hyperparameters) -> Result<(f64, Vec<f64>)> {
    let n = x.nrows();
    let kf = kernel_matrix(x, x, hyper);
    let (chol, _) = factorize(&kf, hyper)?;
    let alpha = chol.solve(y);
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let value = -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    // dL/dtheta = 0.5 * tr(W dK/dtheta) with W = alpha alpha^T - K^-1
    let w = &alpha * alpha.transpose() - chol.inverse();
    let f = x.ncols();
    let mut grad = vec![0.0; f + 2];
    let m = w.component_mul(&kf);
    grad[0] = 0.5 * m.sum();
    // sum_ij M_ij (x_id - x_jd)^2 = 2 sum_i x_id^2 r_i - 2 x_d^T M x_d for symmetric M
    let r = m.column_sum();
    let mx = &m * x;
    for d in 0..f {
        let inv_l2 = 1.0 / hyper.lengthscales[d].powi(2);
        let col = x.column(d);
        let quad: f64 = col.iter().zip(r.iter()).map(|(v, ri)| v * v * ri).sum::<f64>() - col.dot(&mx.column(d));
        grad[d + 1] = quad * inv_l2;
    }
    grad[f + 1] = 0.5 * hyper.noise_variance * w.trace();
    Ok((value, grad))
}

#[derive(Debug, Clone)]
pub struct GpConfig {
    /// Random restarts in addition to the default initialization.
    pub restarts: usize,
    pub seed: u64,
    pub optimizer: LbfgsConfig,
    /// Train on a seeded random subset of at most this many rows.
    pub max_rows: Option<usize>,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            restarts: 3,
            seed: 0,
            optimizer: LbfgsConfig::default(),
            max_rows: None,
        }
    }
}

/// An exact Gaussian-process regressor with an ARD-RBF kernel.
#[derive(Debug, Clone)]
pub struct GpModel {
    feature_names: Vec<String>,
    hyper: Hyperparameters,
    x_std: Vec<Standardizer>,
    y_std: Standardizer,
    x: DMatrix<f64>,
    alpha: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
    log_likelihood: f64,
}

#[derive(Serialize, Deserialize)]
struct GpModelJson {
    version: u32,
    feature_names: Vec<String>,
    hyperparameters: Hyperparameters,
    feature_standardization: Vec<Standardizer>,
    target_standardization: Standardizer,
    training_inputs: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    jitter: f64,
    log_marginal_likelihood: f64,
}

/// Features ranked by ARD relevance `1 / l_d`, most relevant first.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub entries: Vec<(String, f64)>,
}

impl FeatureRanking {
    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }
}

fn check_data(x: &[Vec<f64>], y: &[f64], names: &[String]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("GP training needs at least 2 rows".into()));
    }
    if x.len() > MAX_TRAINING_ROWS {
        return Err(Error::InvalidArgument(format!(
            "{} training rows exceed the exact-GP limit of {MAX_TRAINING_ROWS}",
            x.len()
        )));
    }
    let f = names.len();
    if let Some(r) = x.iter().position(|r| r.len() != f) {
        return Err(Error::InvalidArgument(format!(
            "row {r} has {} features, expected {f}",
            x[r].len()
        )));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "training data contains NaN or infinite values".into(),
        ));
    }
    Ok(f)
}

impl GpModel {
    /// Fits with fixed hyperparameters (given in standardized units).
    pub fn fit(x: &[Vec<f64>], y: &[f64], names: &[String], hyper: Hyperparameters) -> Result<Self> {
        let f = check_data(x, y, names)?;
        hyper.validate(f)?;
        let (xs, x_std, ys, y_std) = standardize(x, y, f);
        Self::assemble(names.to_vec(), hyper, x_std, y_std, xs, &ys)
    }

    fn assemble(
        feature_names: Vec<String>,
        hyper: Hyperparameters,
        x_std: Vec<Standardizer>,
        y_std: Standardizer,
        x: DMatrix<f64>,
        y: &DVector<f64>,
    ) -> Result<Self> {
        let (log_likelihood, _) = log_marginal_likelihood(&x, y, &hyper)?;
        let k = kernel_matrix(&x, &x, &hyper);
        let (chol, jitter) = factorize(&k, &hyper)?;
        let alpha = chol.solve(y);
        Ok(GpModel {
            feature_names,
            hyper,
            x_std,
            y_std,
            x,
            alpha,
            chol,
            jitter,
            log_likelihood,
        })
    }

    /// Maximizes the log marginal likelihood with L-BFGS from the default
    /// start (`l_d = 1`, signal = var(y), noise = 0.1 var(y) on standardized
    /// targets) and `config.restarts` seeded random starts.
    pub fn train(x: &[Vec<f64>], y: &[f64], names: &[String], config: &GpConfig) -> Result<Self> {
        check_data(x, y, names)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (x, y): (Vec<Vec<f64>>, Vec<f64>) = match config.max_rows {
            Some(m) if m < x.len() => {
                let idx = rand::seq::index::sample(&mut rng, x.len(), m.max(2)).into_vec();
                let mut idx = idx;
                idx.sort_unstable();
                (
                    idx.iter().map(|&i| x[i].clone()).collect(),
                    idx.iter().map(|&i| y[i]).collect(),
                )
            }
            _ => (x.to_vec(), y.to_vec()),
        };
        let f = names.len();
        let (xs, x_std, ys, y_std) = standardize(&x, &y, f);
        let var_y = {
            let m = ys.mean();
            ys.iter().map(|v| (v - m).powi(2)).sum::<f64>() / ys.len() as f64
        };
        let var_y = if var_y > 1e-12 { var_y } else { 1.0 };
        let constant: Vec<bool> = (0..f).map(|d| xs.column(d).iter().all(|&v| v == xs[(0, d)])).collect();

        let mut bounds = vec![LN_SIGNAL_BOUNDS];
        for &c in &constant {
            // a constant column carries no information; pin it at the largest lengthscale
            bounds.push(if c {
                (LN_LENGTH_BOUNDS.1, LN_LENGTH_BOUNDS.1)
            } else {
                LN_LENGTH_BOUNDS
            });
        }
        bounds.push(LN_NOISE_BOUNDS);

        let init = Hyperparameters {
            signal_variance: var_y,
            lengthscales: vec![1.0; f],
            noise_variance: 0.1 * var_y,
        }
        .to_log();
        let mut starts = vec![init.clone()];
        for _ in 0..config.restarts {
            starts.push(init.iter().map(|v| v + rng.gen_range(-1.5..1.5)).collect());
        }

        let objective = |theta: &[f64]| {
            let h = Hyperparameters::from_log(theta);
            log_marginal_likelihood(&xs, &ys, &h)
                .ok()
                .map(|(v, g)| (-v, g.into_iter().map(|d| -d).collect::<Vec<_>>()))
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for start in starts {
            if let Some(m) = minimize(objective, &start, &bounds, &config.optimizer) {
                if best.as_ref().is_none_or(|(v, _)| m.value < *v) {
                    best = Some((m.value, m.x));
                }
            }
        }
        let (_, theta) =
            best.ok_or_else(|| Error::Numerical("marginal likelihood undefined at every starting point".into()))?;
        Self::assemble(names.to_vec(), Hyperparameters::from_log(&theta), x_std, y_std, xs, &ys)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn training_rows(&self) -> usize {
        self.x.nrows()
    }

    /// Predictive mean and variance (including noise) in target units.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.feature_names.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} features, got {}",
                self.feature_names.len(),
                x.len()
            )));
        }
        let z = DMatrix::from_fn(1, x.len(), |_, d| self.x_std[d].apply(x[d]));
        let ks = kernel_matrix(&self.x, &z, &self.hyper).column(0).into_owned();
        let mean = ks.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .expect("triangular factor is non-singular");
        let var = (self.hyper.signal_variance - v.dot(&v)).max(0.0) + self.hyper.noise_variance;
        Ok((self.y_std.invert(mean), var * self.y_std.sd * self.y_std.sd))
    }

    /// Row-parallel [`predict`](Self::predict).
    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        rows.par_iter().map(|r| self.predict(r)).collect()
    }

    pub fn ranking(&self) -> FeatureRanking {
        let mut entries: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .zip(&self.hyper.lengthscales)
            .map(|(n, l)| (n.clone(), 1.0 / l))
            .collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        FeatureRanking { entries }
    }

    /// The `k` most relevant features.
    pub fn select_features(&self, k: usize) -> Result<FeatureRanking> {
        if k == 0 || k > self.feature_names.len() {
            return Err(Error::InvalidArgument(format!(
                "k must be in 1..={}, got {k}",
                self.feature_names.len()
            )));
        }
        let mut r = self.ranking();
        r.entries.truncate(k);
        Ok(r)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = GpModelJson {
            version: MODEL_FORMAT_VERSION,
            feature_names: self.feature_names.clone(),
            hyperparameters: self.hyper.clone(),
            feature_standardization: self.x_std.clone(),
            target_standardization: self.y_std,
            training_inputs: self.x.row_iter().map(|r| r.iter().copied().collect()).collect(),
            alpha: self.alpha.iter().copied().collect(),
            jitter: self.jitter,
            log_marginal_likelihood: self.log_likelihood,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GpModelJson = serde_json::from_str(text)?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Structure(format!(
                "unsupported GP model version {}",
                doc.version
            )));
        }
        let f = doc.feature_names.len();
        doc.hyperparameters.validate(f)?;
        let n = doc.training_inputs.len();
        if doc.alpha.len() != n
            || doc.feature_standardization.len() != f
            || doc.training_inputs.iter().any(|r| r.len() != f)
        {
            return Err(Error::Structure("GP model dimensions are inconsistent".into()));
        }
        let x = DMatrix::from_fn(n, f, |i, d| doc.training_inputs[i][d]);
        let k = kernel_matrix(&x, &x, &doc.hyperparameters);
        let total = k + DMatrix::identity(n, n) * (doc.hyperparameters.noise_variance + doc.jitter);
        let chol =
            Cholesky::new(total).ok_or_else(|| Error::Numerical("stored GP kernel is not positive definite".into()))?;
        Ok(GpModel {
            feature_names: doc.feature_names,
            hyper: doc.hyperparameters,
            x_std: doc.feature_standardization,
            y_std: doc.target_standardization,
            x,
            alpha: DVector::from_vec(doc.alpha),
            chol,
            jitter: doc.jitter,
            log_likelihood: doc.log_marginal_likelihood,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn standardize(x: &[Vec<f64>], y: &[f64], f: usize) -> (DMatrix<f64>, Vec<Standardizer>, DVector<f64>, Standardizer) {
    let x_std: Vec<Standardizer> = (0..f)
        .map(|d| Standardizer::fit(&x.iter().map(|r| r[d]).collect::<Vec<_>>()))
        .collect();
    let y_std = Standardizer::fit(y);
    let xs = DMatrix::from_fn(x.len(), f, |i, d| x_std[d].apply(x[i][d]));
    let ys = DVector::from_iterator(y.len(), y.iter().map(|&v| y_std.apply(v)));
    (xs, x_std, ys, y_std)
}
