//! Feature-lattice search: particle swarm over count vectors, scored by the
//! property model plus a penalty for structural inconsistency.

pub mod constraints;
pub mod feasibility;
mod neighborhoods;
pub mod pca;

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::regression::RegressionModel;

pub use constraints::{explicit_violations, realizability_check, ConstraintContext, Rule, Violation};
pub use feasibility::FeasibilityTable;
pub use pca::{pca_project, Pca, PcaError};

/// Closed property interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub property: String,
    pub lo: f64,
    pub hi: f64,
}

impl TargetSpec {
    pub fn new(property: impl Into<String>, lo: f64, hi: f64) -> Option<Self> {
        (lo <= hi && lo.is_finite() && hi.is_finite()).then(|| TargetSpec { property: property.into(), lo, hi })
    }

    /// Distance from `y` to the interval (0 inside).
    pub fn hinge(&self, y: f64) -> f64 {
        if y < self.lo {
            self.lo - y
        } else if y > self.hi {
            y - self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        self.hinge(y) == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Penalty weight λ.
    pub lambda: f64,
    pub candidates: usize,
    pub seed: u64,
    /// Per-component upper bounds; empty means derive from training vectors.
    pub upper: Vec<u32>,
    /// Factor applied to the largest training count when deriving bounds.
    pub bound_factor: f64,
    /// The hinge is divided by this before adding the penalty, so λ can be
    /// stated in standardized-target units.
    pub target_scale: f64,
    /// Condition values appended to every vector before prediction.
    pub conditions: Vec<f64>,
    /// Extra swarms allowed while zero-loss candidates are short.
    pub restarts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            particles: 1000,
            iterations: 200,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            lambda: 10.0,
            candidates: 30,
            seed: 0,
            upper: Vec::new(),
            bound_factor: 1.5,
            target_scale: 1.0,
            conditions: Vec::new(),
            restarts: 4,
        }
    }
}

/// Upper bound per component: ceil(factor × largest training count).
pub fn bounds_from_training(training: &[FeatureVector], factor: f64) -> Vec<u32> {
    let d = training.first().map_or(0, FeatureVector::len);
    (0..d)
        .map(|j| {
            let max = training.iter().map(|v| v.0[j]).max().unwrap_or(0);
            (factor * max as f64 - 1e-9).ceil().max(0.0) as u32
        })
        .collect()
}

/// Everything known about one lattice point; the loss for any λ follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub prediction: f64,
    /// Hinge distance in property units.
    pub hinge: f64,
    /// Sum of explicit-violation magnitudes.
    pub explicit: f64,
    pub realizable: bool,
}

impl Evaluation {
    pub fn compute(
        model: &RegressionModel,
        ctx: &ConstraintContext,
        target: &TargetSpec,
        v: &FeatureVector,
        conditions: &[f64],
    ) -> Evaluation {
        let mut x = v.as_f64();
        x.extend_from_slice(conditions);
        let prediction = model.predict(&x).expect("vector matches model dimension");
        let (explicit, realizable) = ctx.penalty(v);
        Evaluation { prediction, hinge: target.hinge(prediction), explicit, realizable }
    }

    pub fn penalty(&self) -> f64 {
        self.explicit + if self.realizable { 0.0 } else { 1.0 }
    }

    pub fn feasible(&self) -> bool {
        self.penalty() == 0.0
    }

    pub fn loss(&self, lambda: f64, target_scale: f64) -> f64 {
        self.hinge / target_scale + lambda * self.penalty()
    }
}

/// Hinge distance of the prediction to the target plus λ times the
/// structural penalty.
pub fn loss(model: &RegressionModel, ctx: &ConstraintContext, v: &FeatureVector, target: &TargetSpec, lambda: f64) -> f64 {
    Evaluation::compute(model, ctx, target, v, &[]).loss(lambda, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub vector: FeatureVector,
    pub loss: f64,
    pub evaluation: Evaluation,
}

impl Candidate {
    pub fn feasible(&self) -> bool {
        self.evaluation.feasible()
    }

    pub fn in_range(&self) -> bool {
        self.evaluation.hinge == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub candidates: Vec<Candidate>,
    /// Distinct lattice points evaluated.
    pub evaluated: usize,
    /// Swarms run, including restarts.
    pub swarms: usize,
    /// Fewer candidates than requested were available.
    pub short: bool,
}

/// The `k` lowest-loss points, ties broken by the vector itself, skipping
/// anything in `exclude`.
pub fn select_candidates<'a>(
    archive: impl IntoIterator<Item = (&'a FeatureVector, &'a Evaluation)>,
    k: usize,
    lambda: f64,
    target_scale: f64,
    exclude: &HashSet<FeatureVector>,
) -> Vec<Candidate> {
    let mut all: Vec<Candidate> = archive
        .into_iter()
        .filter(|(v, _)| !exclude.contains(*v))
        .map(|(v, e)| Candidate { vector: v.clone(), loss: e.loss(lambda, target_scale), evaluation: e.clone() })
        .collect();
    all.sort_by(|a, b| a.loss.total_cmp(&b.loss).then_with(|| a.vector.cmp(&b.vector)));
    all.truncate(k);
    all
}

/// Particle swarm search over the integer lattice.
///
/// Positions are continuous; each is scored at its rounded, clamped lattice
/// point. Particles start at randomly chosen training vectors. Known
/// training vectors are never returned as candidates. While the archive
/// holds fewer zero-loss novel points than requested, up to
/// `config.restarts` further swarms are run with derived seeds, sharing the
/// evaluation cache.
pub fn pso_search(
    model: &RegressionModel,
    ctx: &ConstraintContext,
    target: &TargetSpec,
    config: &SearchConfig,
    training: &[FeatureVector],
) -> SearchResult {
    let d = ctx.dimension();
    let upper: Vec<u32> = if config.upper.is_empty() {
        bounds_from_training(training, config.bound_factor)
    } else {
        config.upper.clone()
    };
    assert_eq!(upper.len(), d, "bounds do not match schema dimension");
    let exclude: HashSet<FeatureVector> = training.iter().cloned().collect();
    let mut cache: HashMap<FeatureVector, Evaluation> = HashMap::new();
    let mut swarms = 0;
    for r in 0..=config.restarts {
        let seed = if r == 0 { config.seed } else { restart_seed(config.seed, r) };
        swarm(model, ctx, target, config, training, &upper, seed, &mut cache);
        swarms += 1;
        let solved = cache
            .iter()
            .filter(|(v, e)| e.loss(config.lambda, config.target_scale) == 0.0 && !exclude.contains(*v))
            .count();
        if solved >= config.candidates {
            break;
        }
    }
    let candidates = select_candidates(&cache, config.candidates, config.lambda, config.target_scale, &exclude);
    let short = candidates.len() < config.candidates;
    SearchResult { candidates, evaluated: cache.len(), swarms, short }
}

fn restart_seed(seed: u64, r: usize) -> u64 {
    let mut z = seed.wrapping_add((r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[allow(clippy::too_many_arguments)]
fn swarm(
    model: &RegressionModel,
    ctx: &ConstraintContext,
    target: &TargetSpec,
    config: &SearchConfig,
    training: &[FeatureVector],
    upper: &[u32],
    seed: u64,
    cache: &mut HashMap<FeatureVector, Evaluation>,
) {
    let d = upper.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span: Vec<f64> = upper.iter().map(|&u| u as f64).collect();

    let p = config.particles.max(1);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            if training.is_empty() {
                span.iter().map(|&s| rng.gen_range(0.0..=s)).collect()
            } else {
                training[rng.gen_range(0..training.len())].as_f64()
            }
        })
        .collect();
    let vmax: Vec<f64> = span.iter().map(|&s| s.max(1.0)).collect();
    let mut vel: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..d).map(|j| if span[j] > 0.0 { rng.gen_range(-1.0..1.0) * (0.1 * span[j]).max(1.0) } else { 0.0 }).collect())
        .collect();

    let mut pbest = x.clone();
    let mut pbest_loss = vec![f64::INFINITY; p];
    let mut gbest = 0usize;
    let lattice = |pos: &[f64]| FeatureVector(pos.iter().zip(upper).map(|(&v, &u)| v.round().clamp(0.0, u as f64) as u32).collect());

    for it in 0..config.iterations.max(1) {
        let points: Vec<FeatureVector> = x.iter().map(|pos| lattice(pos)).collect();
        let mut fresh: Vec<&FeatureVector> = points.iter().filter(|v| !cache.contains_key(*v)).collect();
        fresh.sort();
        fresh.dedup();
        let evaluated: Vec<Evaluation> = fresh
            .par_iter()
            .map(|v| Evaluation::compute(model, ctx, target, v, &config.conditions))
            .collect();
        for (v, e) in fresh.into_iter().zip(evaluated) {
            cache.insert(v.clone(), e);
        }
        for i in 0..p {
            let l = cache[&points[i]].loss(config.lambda, config.target_scale);
            if l < pbest_loss[i] {
                pbest_loss[i] = l;
                pbest[i].clone_from(&x[i]);
            }
        }
        for i in 0..p {
            if pbest_loss[i] < pbest_loss[gbest] {
                gbest = i;
            }
        }
        if it + 1 == config.iterations {
            break;
        }
        let g = pbest[gbest].clone();
        for i in 0..p {
            for j in 0..d {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let v = config.inertia * vel[i][j]
                    + config.cognitive * r1 * (pbest[i][j] - x[i][j])
                    + config.social * r2 * (g[j] - x[i][j]);
                vel[i][j] = v.clamp(-vmax[j], vmax[j]);
                x[i][j] = (x[i][j] + vel[i][j]).clamp(0.0, span[j]);
            }
        }
    }
}

/// Candidate table: ranking columns, then the integer vector.
pub fn write_candidates(candidates: &[Candidate], dim: usize, out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["rank", "loss", "prediction", "in_range", "explicit_ok", "realizable", "feasible"].map(String::from).to_vec();
    header.extend((0..dim).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (rank, c) in candidates.iter().enumerate() {
        let mut row = vec![
            rank.to_string(),
            c.loss.to_string(),
            c.evaluation.prediction.to_string(),
            c.in_range().to_string(),
            (c.evaluation.explicit == 0.0).to_string(),
            c.evaluation.realizable.to_string(),
            c.feasible().to_string(),
        ];
        row.extend(c.vector.0.iter().map(u32::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a candidate table.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRow {
    pub rank: usize,
    pub loss: f64,
    pub prediction: f64,
    pub in_range: bool,
    pub feasible: bool,
    pub vector: FeatureVector,
}

pub fn read_candidate_rows(input: impl std::io::Read) -> Result<Vec<CandidateRow>, csv::Error> {
    let bad = |what: &str, e: &dyn std::fmt::Display| -> csv::Error {
        std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad {what}: {e}")).into()
    };
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 7 {
            return Err(bad("row", &format!("{} fields, expected at least 7", rec.len())));
        }
        let vector = rec
            .iter()
            .skip(7)
            .map(|s| s.parse::<u32>())
            .collect::<Result<Vec<u32>, _>>()
            .map_err(|e| bad("count", &e))?;
        out.push(CandidateRow {
            rank: rec[0].parse().map_err(|e| bad("rank", &e))?,
            loss: rec[1].parse().map_err(|e| bad("loss", &e))?,
            prediction: rec[2].parse().map_err(|e| bad("prediction", &e))?,
            in_range: &rec[3] == "true",
            feasible: &rec[6] == "true",
            vector: FeatureVector(vector),
        });
    }
    Ok(out)
}

/// Reads the integer vectors and feasibility flags back from a candidate table.
pub fn read_candidates(input: impl std::io::Read) -> Result<Vec<(FeatureVector, bool)>, csv::Error> {
    Ok(read_candidate_rows(input)?.into_iter().map(|r| (r.vector, r.feasible)).collect())
}
