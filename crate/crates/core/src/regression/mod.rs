//! Property regression: Lasso, Ridge and kernel ridge with an RBF kernel.
//!
//! Every model standardizes its (selected) input columns with statistics of
//! the rows it was fitted on and centers the target. Zero-variance columns
//! keep scale 1, so they become all-zero after centering.

mod cv;
mod linalg;

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{
    cross_validate, default_grid, fold_indices, grid_search, select_features, CvReport, FeatureSelection, GridPoint,
};

pub const MODEL_FORMAT: &str = "invdes-model";
pub const MODEL_VERSION: u32 = 1;

/// Coordinate descent stops once no coefficient moves more than this.
pub const LASSO_TOLERANCE: f64 = 1e-7;
pub const LASSO_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("dataset is empty")]
    Empty,
    #[error("row {row} has {got} columns, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("{got} targets for {expected} rows")]
    TargetLength { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("linear system is singular")]
    Singular,
    #[error("input has {got} features, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("R² needs at least two values, got {0}")]
    TooFewValues(usize),
    #[error("R² is undefined when the true values have zero variance")]
    ZeroVariance,
    #[error("{folds}-fold cross-validation needs at least {needed} rows, got {rows}")]
    TooFewRows { rows: usize, folds: usize, needed: usize },
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error("feature budget {budget} exceeds dimension {dim}")]
    Budget { budget: usize, dim: usize },
    #[error("unknown feature selection method {0:?}")]
    UnknownMethod(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Lasso,
    Ridge,
    KrrRbf,
    /// Kernel ridge with a linear kernel; exists to cross-check ridge.
    #[doc(hidden)]
    KrrLinear,
}

impl ModelKind {
    pub fn is_kernel(self) -> bool {
        matches!(self, ModelKind::KrrRbf | ModelKind::KrrLinear)
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Some(ModelKind::Lasso),
            "ridge" => Some(ModelKind::Ridge),
            "krr" | "krr-rbf" | "kernel-ridge" => Some(ModelKind::KrrRbf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lasso => "lasso",
            ModelKind::Ridge => "ridge",
            ModelKind::KrrRbf => "krr-rbf",
            ModelKind::KrrLinear => "krr-linear",
        }
    }
}

/// Penalty α and, for the RBF kernel, width γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: f64,
    pub gamma: Option<f64>,
}

impl Hyperparams {
    pub fn alpha(alpha: f64) -> Self {
        Hyperparams { alpha, gamma: None }
    }

    pub fn rbf(alpha: f64, gamma: f64) -> Self {
        Hyperparams { alpha, gamma: Some(gamma) }
    }

    fn validate(&self, kind: ModelKind) -> Result<(), RegressionError> {
        let bad = |m: String| Err(RegressionError::Hyperparameter(m));
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return bad(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if self.alpha == 0.0 && !kind.is_kernel() {
            return bad("alpha = 0 is only allowed for kernel ridge".into());
        }
        if kind == ModelKind::KrrRbf {
            match self.gamma {
                Some(g) if g.is_finite() && g > 0.0 => {}
                other => return bad(format!("krr-rbf needs gamma > 0, got {other:?}")),
            }
        }
        Ok(())
    }
}

/// Feature rows and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, RegressionError> {
        if x.is_empty() {
            return Err(RegressionError::Empty);
        }
        if x.len() != y.len() {
            return Err(RegressionError::TargetLength { expected: x.len(), got: y.len() });
        }
        let d = x[0].len();
        for (row, r) in x.iter().enumerate() {
            if r.len() != d {
                return Err(RegressionError::Ragged { row, expected: d, got: r.len() });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(RegressionError::NonFinite("features"));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(RegressionError::NonFinite("targets"));
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset { x: rows.iter().map(|&i| self.x[i].clone()).collect(), y: rows.iter().map(|&i| self.y[i]).collect() }
    }
}

/// Per-column mean and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population statistics over `columns` of `rows`; zero variance maps to scale 1.
    pub fn fit(rows: &[&[f64]], columns: &[usize]) -> Self {
        let n = rows.len() as f64;
        let mut mean = Vec::with_capacity(columns.len());
        let mut scale = Vec::with_capacity(columns.len());
        for &c in columns {
            let m = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            scale.push(if s > 1e-12 * m.abs().max(1.0) { s } else { 1.0 });
        }
        Standardizer { mean, scale }
    }

    pub fn transform_into(&self, row: &[f64], columns: &[usize], out: &mut [f64]) {
        for (k, &c) in columns.iter().enumerate() {
            out[k] = (row[c] - self.mean[k]) / self.scale[k];
        }
    }

    fn matrix(&self, rows: &[&[f64]], columns: &[usize]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows.len(), columns.len());
        let mut buf = vec![0.0; columns.len()];
        for (i, r) in rows.iter().enumerate() {
            self.transform_into(r, columns, &mut buf);
            for (j, &v) in buf.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// A fitted predictor. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    /// Input dimension before masking.
    pub input_dim: usize,
    /// Which input columns the model uses.
    pub mask: Vec<bool>,
    pub standardizer: Standardizer,
    pub y_mean: f64,
    /// Linear coefficients on standardized columns (lasso/ridge).
    pub coefficients: Vec<f64>,
    /// Dual coefficients (kernel models).
    pub dual: Vec<f64>,
    /// Standardized training rows, row-major (kernel models).
    pub support: Vec<Vec<f64>>,
    /// Mean CV R² recorded by the caller, if any.
    pub cv_r2: Option<f64>,
}

pub fn fit(kind: ModelKind, data: &Dataset, hp: Hyperparams) -> Result<RegressionModel, RegressionError> {
    fit_masked(kind, data, hp, None)
}

pub fn fit_masked(
    kind: ModelKind,
    data: &Dataset,
    hp: Hyperparams,
    mask: Option<&[bool]>,
) -> Result<RegressionModel, RegressionError> {
    hp.validate(kind)?;
    let data = Dataset::new(data.x.clone(), data.y.clone())?;
    let d = data.dim();
    let mask: Vec<bool> = match mask {
        Some(m) if m.len() != d => return Err(RegressionError::Dimension { expected: d, got: m.len() }),
        Some(m) => m.to_vec(),
        None => vec![true; d],
    };
    let columns: Vec<usize> = (0..d).filter(|&j| mask[j]).collect();
    let rows: Vec<&[f64]> = data.x.iter().map(Vec::as_slice).collect();
    let prepared = Prepared::new(&rows, &data.y, &columns);
    let mut model = RegressionModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        kind,
        hyperparams: hp,
        input_dim: d,
        mask,
        standardizer: prepared.standardizer.clone(),
        y_mean: prepared.y_mean,
        coefficients: Vec::new(),
        dual: Vec::new(),
        support: Vec::new(),
        cv_r2: None,
    };
    match kind {
        ModelKind::Ridge => model.coefficients = prepared.ridge(hp.alpha)?.as_slice().to_vec(),
        ModelKind::Lasso => model.coefficients = prepared.lasso(hp.alpha, None).as_slice().to_vec(),
        ModelKind::KrrRbf | ModelKind::KrrLinear => {
            let k = prepared.kernel_matrix(kind, hp.gamma);
            model.dual = linalg::solve_shifted(&k, hp.alpha, &prepared.yc)?.as_slice().to_vec();
            model.support = (0..prepared.z.nrows()).map(|i| prepared.z.row(i).iter().copied().collect()).collect();
        }
    }
    Ok(model)
}

/// Standardized training data shared by fitting and cross-validation.
pub(crate) struct Prepared {
    pub standardizer: Standardizer,
    pub columns: Vec<usize>,
    pub z: DMatrix<f64>,
    pub yc: DVector<f64>,
    pub y_mean: f64,
    /// Squared distances between standardized rows (filled lazily for RBF).
    sqdist: Option<DMatrix<f64>>,
}

impl Prepared {
    pub fn new(rows: &[&[f64]], y: &[f64], columns: &[usize]) -> Self {
        let standardizer = Standardizer::fit(rows, columns);
        let z = standardizer.matrix(rows, columns);
        let y_mean = y.iter().sum::<f64>() / y.len() as f64;
        let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - y_mean));
        Prepared { standardizer, columns: columns.to_vec(), z, yc, y_mean, sqdist: None }
    }

    pub fn transform(&self, rows: &[&[f64]]) -> DMatrix<f64> {
        self.standardizer.matrix(rows, &self.columns)
    }

    pub fn ridge(&self, alpha: f64) -> Result<DVector<f64>, RegressionError> {
        let gram = self.z.transpose() * &self.z;
        let rhs = self.z.transpose() * &self.yc;
        linalg::solve_shifted(&gram, alpha, &rhs)
    }

    /// Cyclic coordinate descent on (1/2n)‖y − Zw‖² + α‖w‖₁.
    pub fn lasso(&self, alpha: f64, warm: Option<&DVector<f64>>) -> DVector<f64> {
        let (n, d) = self.z.shape();
        let nf = n as f64;
        let mut w = warm.cloned().unwrap_or_else(|| DVector::zeros(d));
        let mut r = &self.yc - &self.z * &w;
        let norms: Vec<f64> = (0..d).map(|j| self.z.column(j).norm_squared() / nf).collect();
        for _ in 0..LASSO_MAX_SWEEPS {
            let mut max_change: f64 = 0.0;
            for j in 0..d {
                if norms[j] == 0.0 {
                    w[j] = 0.0;
                    continue;
                }
                let col = self.z.column(j);
                let old = w[j];
                let rho = col.dot(&r) / nf + norms[j] * old;
                let new = soft_threshold(rho, alpha) / norms[j];
                if new != old {
                    r.axpy(old - new, &col, 1.0);
                    w[j] = new;
                    max_change = max_change.max((new - old).abs());
                }
            }
            if max_change < LASSO_TOLERANCE {
                break;
            }
        }
        w
    }

    fn squared_distances(&mut self) -> &DMatrix<f64> {
        if self.sqdist.is_none() {
            self.sqdist = Some(linalg::squared_distances(&self.z, &self.z));
        }
        self.sqdist.as_ref().expect("just filled")
    }

    pub fn kernel_matrix(&self, kind: ModelKind, gamma: Option<f64>) -> DMatrix<f64> {
        match kind {
            ModelKind::KrrLinear => &self.z * self.z.transpose(),
            _ => {
                let g = gamma.expect("validated");
                linalg::squared_distances(&self.z, &self.z).map(|d| (-g * d).exp())
            }
        }
    }

    /// RBF kernel reusing cached distances.
    pub fn rbf_kernel_cached(&mut self, gamma: f64) -> DMatrix<f64> {
        self.squared_distances().map(|d| (-gamma * d).exp())
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

impl RegressionModel {
    fn check_dim(&self, x: &[f64]) -> Result<(), RegressionError> {
        if x.len() != self.input_dim {
            return Err(RegressionError::Dimension { expected: self.input_dim, got: x.len() });
        }
        Ok(())
    }

    fn columns(&self) -> Vec<usize> {
        (0..self.input_dim).filter(|&j| self.mask[j]).collect()
    }

    fn standardized(&self, x: &[f64]) -> Vec<f64> {
        let columns = self.columns();
        let mut z = vec![0.0; columns.len()];
        self.standardizer.transform_into(x, &columns, &mut z);
        z
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, RegressionError> {
        self.check_dim(x)?;
        let z = self.standardized(x);
        Ok(self.y_mean + self.predict_centered(&z))
    }

    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>, RegressionError> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    fn predict_centered(&self, z: &[f64]) -> f64 {
        match self.kind {
            ModelKind::Lasso | ModelKind::Ridge => z.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum(),
            ModelKind::KrrLinear => self
                .support
                .iter()
                .zip(&self.dual)
                .map(|(s, c)| c * s.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                .sum(),
            ModelKind::KrrRbf => {
                let g = self.hyperparams.gamma.expect("validated");
                self.support
                    .iter()
                    .zip(&self.dual)
                    .map(|(s, c)| c * (-g * sqdist(s, z)).exp())
                    .sum()
            }
        }
    }

    /// Gradient of the prediction with respect to the raw input vector.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, RegressionError> {
        self.check_dim(x)?;
        let columns = self.columns();
        let z = self.standardized(x);
        let mut gz = vec![0.0; z.len()];
        match self.kind {
            ModelKind::Lasso | ModelKind::Ridge => gz.copy_from_slice(&self.coefficients),
            ModelKind::KrrLinear => {
                for (s, c) in self.support.iter().zip(&self.dual) {
                    for (g, sv) in gz.iter_mut().zip(s) {
                        *g += c * sv;
                    }
                }
            }
            ModelKind::KrrRbf => {
                let gamma = self.hyperparams.gamma.expect("validated");
                for (s, c) in self.support.iter().zip(&self.dual) {
                    let k = c * (-gamma * sqdist(s, &z)).exp();
                    for ((g, sv), zv) in gz.iter_mut().zip(s).zip(&z) {
                        *g += -2.0 * gamma * k * (zv - sv);
                    }
                }
            }
        }
        let mut grad = vec![0.0; self.input_dim];
        for (k, &c) in columns.iter().enumerate() {
            grad[c] = gz[k] / self.standardizer.scale[k];
        }
        Ok(grad)
    }

    pub fn write_json(&self, out: impl Write) -> Result<(), RegressionError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json(input: impl Read) -> Result<RegressionModel, RegressionError> {
        let model: RegressionModel = serde_json::from_reader(input)?;
        if model.format != MODEL_FORMAT {
            return Err(RegressionError::Format(format!("unexpected format tag {:?}", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(RegressionError::Format(format!("unsupported version {}", model.version)));
        }
        if model.mask.len() != model.input_dim {
            return Err(RegressionError::Format("mask length does not match input dimension".into()));
        }
        Ok(model)
    }
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Coefficient of determination 1 − SS_res / SS_tot.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64, RegressionError> {
    if y_true.len() != y_pred.len() {
        return Err(RegressionError::TargetLength { expected: y_true.len(), got: y_pred.len() });
    }
    if y_true.len() < 2 {
        return Err(RegressionError::TooFewValues(y_true.len()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(RegressionError::ZeroVariance);
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}
