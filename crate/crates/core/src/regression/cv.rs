//! K-fold cross-validation, grid search and feature selection.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, linalg, r2_score, Dataset, Hyperparams, ModelKind, Prepared, RegressionError};

/// Mean R² of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub hyperparams: Hyperparams,
    pub fold_scores: Vec<f64>,
    pub mean_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub kind: ModelKind,
    pub folds: usize,
    pub seed: u64,
    /// Every evaluated point, in grid order.
    pub grid: Vec<GridPoint>,
    pub best: Hyperparams,
    /// Fold scores and mean of the best point.
    pub fold_scores: Vec<f64>,
    pub mean_r2: f64,
}

impl CvReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,alpha,gamma,mean_r2");
        for f in 0..self.folds {
            out.push_str(&format!(",fold{f}"));
        }
        out.push('\n');
        for p in &self.grid {
            out.push_str(&format!(
                "{},{},{},{}",
                self.kind.name(),
                p.hyperparams.alpha,
                p.hyperparams.gamma.map(|g| g.to_string()).unwrap_or_default(),
                p.mean_r2
            ));
            for s in &p.fold_scores {
                out.push_str(&format!(",{s}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One point per decade: α ∈ 1e-4..1e2, and γ ∈ 1e-3..1e2 for the RBF kernel.
pub fn default_grid(kind: ModelKind) -> Vec<Hyperparams> {
    let alphas: Vec<f64> = (-4..=2).map(|e| 10f64.powi(e)).collect();
    match kind {
        ModelKind::KrrRbf => alphas
            .iter()
            .flat_map(|&a| (-3..=2).map(move |e| Hyperparams::rbf(a, 10f64.powi(e))))
            .collect(),
        _ => alphas.into_iter().map(Hyperparams::alpha).collect(),
    }
}

/// Seeded shuffle of `0..n` cut into contiguous folds; the first `n % folds`
/// folds get one extra row.
pub fn fold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(perm[start..start + len].to_vec());
        start += len;
    }
    out
}

pub fn cross_validate(
    kind: ModelKind,
    data: &Dataset,
    hp: Hyperparams,
    folds: usize,
    seed: u64,
) -> Result<CvReport, RegressionError> {
    grid_search(kind, data, &[hp], folds, seed)
}

/// Cross-validates every grid point on the same folds. The best point has
/// the highest mean R²; ties go to larger α, then smaller γ.
pub fn grid_search(
    kind: ModelKind,
    data: &Dataset,
    grid: &[Hyperparams],
    folds: usize,
    seed: u64,
) -> Result<CvReport, RegressionError> {
    if grid.is_empty() {
        return Err(RegressionError::EmptyGrid);
    }
    for hp in grid {
        hp.validate(kind)?;
    }
    let data = Dataset::new(data.x.clone(), data.y.clone())?;
    // Two held-out rows per fold keep every fold's R² defined.
    let needed = 2 * folds.max(1);
    if folds < 2 || data.len() < needed {
        return Err(RegressionError::TooFewRows { rows: data.len(), folds, needed });
    }
    let split = fold_indices(data.len(), folds, seed);
    let per_fold: Vec<Vec<f64>> = split
        .par_iter()
        .map(|test| evaluate_fold(kind, &data, test, grid))
        .collect::<Result<_, _>>()?;

    let points: Vec<GridPoint> = grid
        .iter()
        .enumerate()
        .map(|(g, hp)| {
            let fold_scores: Vec<f64> = per_fold.iter().map(|f| f[g]).collect();
            let mean_r2 = fold_scores.iter().sum::<f64>() / folds as f64;
            GridPoint { hyperparams: *hp, fold_scores, mean_r2 }
        })
        .collect();
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        if preferred(p, &points[best]) {
            best = i;
        }
    }
    Ok(CvReport {
        kind,
        folds,
        seed,
        best: points[best].hyperparams,
        fold_scores: points[best].fold_scores.clone(),
        mean_r2: points[best].mean_r2,
        grid: points,
    })
}

fn preferred(a: &GridPoint, b: &GridPoint) -> bool {
    const TIE: f64 = 1e-12;
    if a.mean_r2 > b.mean_r2 + TIE {
        return true;
    }
    if a.mean_r2 < b.mean_r2 - TIE {
        return false;
    }
    let (ha, hb) = (a.hyperparams, b.hyperparams);
    if ha.alpha != hb.alpha {
        return ha.alpha > hb.alpha;
    }
    ha.gamma.unwrap_or(0.0) < hb.gamma.unwrap_or(0.0)
}

/// Scores of every grid point on one held-out fold.
fn evaluate_fold(kind: ModelKind, data: &Dataset, test: &[usize], grid: &[Hyperparams]) -> Result<Vec<f64>, RegressionError> {
    let mut is_test = vec![false; data.len()];
    for &i in test {
        is_test[i] = true;
    }
    let train_rows: Vec<&[f64]> = (0..data.len()).filter(|&i| !is_test[i]).map(|i| data.x[i].as_slice()).collect();
    let train_y: Vec<f64> = (0..data.len()).filter(|&i| !is_test[i]).map(|i| data.y[i]).collect();
    let test_rows: Vec<&[f64]> = test.iter().map(|&i| data.x[i].as_slice()).collect();
    let test_y: Vec<f64> = test.iter().map(|&i| data.y[i]).collect();
    let columns: Vec<usize> = (0..data.dim()).collect();
    let mut prep = Prepared::new(&train_rows, &train_y, &columns);
    let zt = prep.transform(&test_rows);

    let score = |pred: DVector<f64>, y_mean: f64| -> Result<f64, RegressionError> {
        let p: Vec<f64> = pred.iter().map(|v| v + y_mean).collect();
        r2_score(&test_y, &p)
    };
    let mut scores = vec![0.0; grid.len()];
    match kind {
        ModelKind::Ridge => {
            let gram = prep.z.transpose() * &prep.z;
            let rhs = prep.z.transpose() * &prep.yc;
            for (g, hp) in grid.iter().enumerate() {
                let w = linalg::solve_shifted(&gram, hp.alpha, &rhs)?;
                scores[g] = score(&zt * w, prep.y_mean)?;
            }
        }
        ModelKind::Lasso => {
            // Warm-started path from strong to weak penalties.
            let mut order: Vec<usize> = (0..grid.len()).collect();
            order.sort_by(|&a, &b| grid[b].alpha.total_cmp(&grid[a].alpha));
            let mut warm: Option<DVector<f64>> = None;
            for g in order {
                let w = prep.lasso(grid[g].alpha, warm.as_ref());
                scores[g] = score(&zt * &w, prep.y_mean)?;
                warm = Some(w);
            }
        }
        ModelKind::KrrLinear => {
            let k = &prep.z * prep.z.transpose();
            let kt = &zt * prep.z.transpose();
            for (g, hp) in grid.iter().enumerate() {
                let c = linalg::solve_shifted(&k, hp.alpha, &prep.yc)?;
                scores[g] = score(&kt * c, prep.y_mean)?;
            }
        }
        ModelKind::KrrRbf => {
            let dt = linalg::squared_distances(&zt, &prep.z);
            for (g, hp) in grid.iter().enumerate() {
                let gamma = hp.gamma.expect("validated");
                let k = prep.rbf_kernel_cached(gamma);
                let c = linalg::solve_shifted(&k, hp.alpha, &prep.yc)?;
                let kt: DMatrix<f64> = dt.map(|d| (-gamma * d).exp());
                scores[g] = score(kt * c, prep.y_mean)?;
            }
        }
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSelection {
    /// Drop constant columns, then keep the highest-variance ones.
    Variance,
    /// Keep columns with nonzero coefficient at the CV-best lasso α.
    LassoPath,
}

impl std::str::FromStr for FeatureSelection {
    type Err = RegressionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "variance" => Ok(FeatureSelection::Variance),
            "lasso-path" => Ok(FeatureSelection::LassoPath),
            other => Err(RegressionError::UnknownMethod(other.to_string())),
        }
    }
}

/// Column mask with at most `budget` columns. Ties resolve toward earlier
/// columns.
pub fn select_features(
    data: &Dataset,
    method: FeatureSelection,
    budget: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<bool>, RegressionError> {
    let d = data.dim();
    if budget > d {
        return Err(RegressionError::Budget { budget, dim: d });
    }
    let n = data.len() as f64;
    let variance: Vec<f64> = (0..d)
        .map(|j| {
            let m = data.x.iter().map(|r| r[j]).sum::<f64>() / n;
            data.x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n
        })
        .collect();
    // Candidate columns with a score; higher is better.
    let scored: Vec<(usize, f64)> = match method {
        FeatureSelection::Variance => (0..d).filter(|&j| variance[j] > 0.0).map(|j| (j, variance[j])).collect(),
        FeatureSelection::LassoPath => {
            let report = grid_search(ModelKind::Lasso, data, &default_grid(ModelKind::Lasso), folds, seed)?;
            let model = fit(ModelKind::Lasso, data, report.best)?;
            model
                .coefficients
                .iter()
                .enumerate()
                .filter(|&(j, w)| *w != 0.0 && variance[j] > 0.0)
                .map(|(j, w)| (j, w.abs()))
                .collect()
        }
    };
    let mut ranked = scored;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut mask = vec![false; d];
    for &(j, _) in ranked.iter().take(budget) {
        mask[j] = true;
    }
    Ok(mask)
}
