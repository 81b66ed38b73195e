//! End-to-end run: data → schema → model → candidate search → generation,
//! with every stage persisted under the output directory.
//!
//! Artifacts:
//!
//! | file | content |
//! |------|---------|
//! | `schema.tsv` | feature schema |
//! | `model.json` | fitted model |
//! | `cv_report.csv` | every grid point with per-fold R² |
//! | `candidates_<i>.csv` | search result for target `i` |
//! | `pca.csv`, `pca_variance.csv` | projection of training vectors and candidates |
//! | `structures_<i>.smi` | novel generated structures for target `i`, one SMILES per line |
//! | `generation_<i>.csv` | per-candidate generation outcome |
//! | `report.json` | run summary |
//! | `timings.json` | wall time per stage (the only non-reproducible file) |

pub mod config;
pub mod data;

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chem::{write_smiles, MolecularGraph, ParseOptions};
use crate::features::{build_schema_with_provenance, encode, encode_all, read_schema, write_schema, FeatureSchema, FeatureVector};
use crate::generate::{aromatic_templates, generate_all, read_templates, GenerationConfig, GenerationResult};
use crate::regression::{default_grid, grid_search, select_features, CvReport, GridPoint};
use crate::regression::{fit_masked, Dataset, Hyperparams, ModelKind, RegressionModel};
use crate::search::{pca_project, pso_search, read_candidates, write_candidates, Candidate, ConstraintContext, Evaluation, SearchConfig, TargetSpec};

pub use config::{ConfigError, RunConfig};
pub use data::{
    load_dataset, load_dataset_with, novelty_filter, read_features, write_features, DataError, FeatureTable,
    KnownStructures, LoadMode, LoadedDataset, Novelty, RejectedRow,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("data error: {0}")]
    Data(#[from] DataError),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
}

impl PipelineError {
    pub fn stage(stage: impl Into<String>, cause: impl std::fmt::Display) -> Self {
        PipelineError::Stage { stage: stage.into(), message: cause.to_string() }
    }

    /// Process exit code: 2 config, 3 data, 4 stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data(_) => 3,
            PipelineError::Stage { .. } => 4,
        }
    }
}

/// Seed for one stage, derived from the global seed and the stage name so
/// any stage can be rerun alone.
pub fn stage_seed(global: u64, stage: &str) -> u64 {
    // FNV-1a of the name, then one splitmix64 round.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = (global ^ h).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub folds: usize,
    pub cv_mean_r2: f64,
    /// Columns the model uses.
    pub features_used: usize,
    pub grid: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub lo: f64,
    pub hi: f64,
    /// Rows of the candidate table.
    pub candidates: usize,
    pub feasible: usize,
    pub in_range: usize,
    pub feasible_in_range: usize,
    /// Feasible candidates that produced at least one structure.
    pub generated_vectors: usize,
    /// Lines of the structure file.
    pub novel_structures: usize,
    /// Generated structures already in the training set (not written).
    pub known_structures: usize,
    /// Novel structures whose source candidate is predicted inside the interval.
    pub novel_in_range: usize,
    /// Candidates whose generation hit the node budget.
    pub budget_exhausted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub property: String,
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub max_bonds: usize,
    pub schema_dimension: usize,
    pub model: ModelSummary,
    pub targets: Vec<TargetReport>,
    /// Seconds per stage; written to `timings.json`, not `report.json`.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

/// Writes through a temporary file so an interrupted stage never leaves a
/// complete-looking artifact behind.
fn write_artifact(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<(), String>) -> Result<(), String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    let tmp = path.with_extension("partial");
    fs::write(&tmp, &buf).map_err(|e| format!("{}: {e}", tmp.display()))?;
    fs::rename(&tmp, path).map_err(|e| format!("{}: {e}", path.display()))
}

fn std_dev(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Default decade grid with optional α and γ overrides.
pub fn hyperparameter_grid(kind: ModelKind, alphas: Option<&[f64]>, gammas: Option<&[f64]>) -> Vec<Hyperparams> {
    let defaults = default_grid(kind);
    let mut default_alphas: Vec<f64> = defaults.iter().map(|h| h.alpha).collect();
    default_alphas.dedup();
    let mut default_gammas: Vec<f64> = defaults.iter().filter_map(|h| h.gamma).collect();
    default_gammas.sort_by(f64::total_cmp);
    default_gammas.dedup();
    let alphas = alphas.map_or(default_alphas, <[f64]>::to_vec);
    if kind == ModelKind::KrrRbf {
        let gammas = gammas.map_or(default_gammas, <[f64]>::to_vec);
        alphas.iter().flat_map(|&a| gammas.iter().map(move |&g| Hyperparams::rbf(a, g))).collect()
    } else {
        alphas.into_iter().map(Hyperparams::alpha).collect()
    }
}

fn mask_columns(data: &Dataset, mask: &[bool]) -> Dataset {
    let x = data.x.iter().map(|r| r.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect()).collect();
    Dataset { x, y: data.y.clone() }
}

/// Grid search, optional feature selection, and the final fit.
pub fn train_model(
    vectors: &[FeatureVector],
    y: &[f64],
    config: &RunConfig,
) -> Result<(RegressionModel, ModelSummary), PipelineError> {
    let stage = |e: crate::regression::RegressionError| PipelineError::stage("train", e);
    let data = Dataset::new(vectors.iter().map(FeatureVector::as_f64).collect(), y.to_vec()).map_err(stage)?;
    let mask = match config.feature_selection {
        Some((method, budget)) => {
            select_features(&data, method, budget, config.folds, stage_seed(config.seed, "select")).map_err(stage)?
        }
        None => vec![true; data.dim()],
    };
    let grid = hyperparameter_grid(config.model, config.alphas.as_deref(), config.gammas.as_deref());
    let report = grid_search(config.model, &mask_columns(&data, &mask), &grid, config.folds, stage_seed(config.seed, "cv"))
        .map_err(stage)?;
    let mut model = fit_masked(config.model, &data, report.best, Some(&mask)).map_err(stage)?;
    model.cv_r2 = Some(report.mean_r2);
    let summary = ModelSummary {
        kind: config.model,
        hyperparams: report.best,
        folds: config.folds,
        cv_mean_r2: report.mean_r2,
        features_used: mask.iter().filter(|&&m| m).count(),
        grid: report.grid,
    };
    Ok((model, summary))
}

/// Reads the grid back from `cv_report.csv`.
fn read_cv_grid(path: &Path, folds: usize) -> Result<Vec<GridPoint>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{}: {e}", path.display()));
        let gamma = if rec[2].is_empty() { None } else { Some(num(&rec[2])?) };
        let fold_scores = (0..folds).map(|f| num(&rec[4 + f])).collect::<Result<Vec<_>, _>>()?;
        out.push(GridPoint { hyperparams: Hyperparams { alpha: num(&rec[1])?, gamma }, fold_scores, mean_r2: num(&rec[3])? });
    }
    Ok(out)
}

/// The generation settings of a run.
pub fn generation_config(config: &RunConfig) -> Result<GenerationConfig, PipelineError> {
    let templates = match &config.templates {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| ConfigError::Io { path: path.clone(), message: e.to_string() })?;
            read_templates(BufReader::new(file))
                .map_err(|e| ConfigError::Invalid(format!("templates {}: {e}", path.display())))?
        }
        None => aromatic_templates(),
    };
    Ok(GenerationConfig {
        max_structures: config.max_structures,
        node_budget: config.node_budget,
        time_budget: None,
        templates,
        max_atoms: config.max_atoms,
        canonical_pruning: true,
    })
}

/// Outcome of generating from one candidate.
#[derive(Debug, Clone)]
pub struct GeneratedSet {
    pub rank: usize,
    pub in_range: bool,
    pub result: GenerationResult,
    pub novelty: Vec<Novelty>,
}

/// A vector to decode, with its place in the candidate table.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationInput {
    pub rank: usize,
    pub vector: FeatureVector,
    pub in_range: bool,
}

impl GenerationInput {
    /// The feasible candidates of a search result.
    pub fn feasible(candidates: &[Candidate]) -> Vec<GenerationInput> {
        candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.feasible())
            .map(|(rank, c)| GenerationInput { rank, vector: c.vector.clone(), in_range: c.in_range() })
            .collect()
    }
}

/// Generates from every input, checks that each structure re-encodes to its
/// vector, and tags novelty.
pub fn generate_from_candidates(
    inputs: &[GenerationInput],
    schema: &FeatureSchema,
    known: &KnownStructures,
    config: &GenerationConfig,
) -> Result<Vec<GeneratedSet>, PipelineError> {
    let vectors: Vec<FeatureVector> = inputs.iter().map(|c| c.vector.clone()).collect();
    let results = generate_all(&vectors, schema, config);
    let mut out = Vec::with_capacity(inputs.len());
    for (input, result) in inputs.iter().zip(results) {
        let result = result.map_err(|e| PipelineError::stage("generate", e))?;
        for g in &result.structures {
            if encode(g, schema) != input.vector {
                return Err(PipelineError::stage(
                    "generate",
                    format!("structure {} does not re-encode to candidate {}", write_smiles(g), input.rank),
                ));
            }
        }
        let novelty = result.structures.iter().map(|g| known.novelty(g)).collect();
        out.push(GeneratedSet { rank: input.rank, in_range: input.in_range, result, novelty });
    }
    Ok(out)
}

/// SMILES of the novel structures, one per line, in input order.
pub fn write_novel_smiles(sets: &[GeneratedSet], mut out: impl Write) -> std::io::Result<()> {
    for s in sets {
        for (g, n) in s.result.structures.iter().zip(&s.novelty) {
            if *n == Novelty::Novel {
                writeln!(out, "{}", write_smiles(g))?;
            }
        }
    }
    Ok(())
}

pub fn write_generation_table(sets: &[GeneratedSet], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "in_range", "structures", "novel", "nodes", "budget_exhausted", "capped", "failed"])?;
    for s in sets {
        let novel = s.novelty.iter().filter(|&&n| n == Novelty::Novel).count();
        w.write_record([
            s.rank.to_string(),
            s.in_range.to_string(),
            s.result.structures.len().to_string(),
            novel.to_string(),
            s.result.nodes.to_string(),
            s.result.budget_exhausted.to_string(),
            s.result.capped.to_string(),
            s.result.failed().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
struct GenerationCounts {
    generated_vectors: usize,
    novel: usize,
    known: usize,
    novel_in_range: usize,
    budget_exhausted: usize,
}

fn read_generation_table(path: &Path) -> Result<GenerationCounts, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let mut c = GenerationCounts::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |i: usize| rec[i].parse::<usize>().map_err(|e| format!("{}: {e}", path.display()));
        let (total, novel) = (num(2)?, num(3)?);
        c.generated_vectors += usize::from(total > 0);
        c.novel += novel;
        c.known += total - novel;
        if &rec[1] == "true" {
            c.novel_in_range += novel;
        }
        c.budget_exhausted += usize::from(&rec[5] == "true");
    }
    Ok(c)
}

fn time<T>(timings: &mut Vec<(String, f64)>, name: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    timings.push((name.to_string(), start.elapsed().as_secs_f64()));
    out
}

/// Runs every stage in order. With `config.resume`, a stage whose artifacts
/// already exist is loaded instead of recomputed.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let out = &config.output;
    fs::create_dir_all(out).map_err(|e| ConfigError::Io { path: out.clone(), message: e.to_string() })?;
    let artifact = |name: &str| out.join(name);
    let reuse = |p: &PathBuf| config.resume && p.exists();
    let mut timings = Vec::new();

    let mode = if config.strict { LoadMode::Strict } else { LoadMode::Lenient };
    let options = ParseOptions { max_atoms: config.max_atoms };
    let data = time(&mut timings, "load", || load_dataset_with(&config.dataset, &config.property, mode, &options))?;

    let schema_path = artifact("schema.tsv");
    let schema = time(&mut timings, "schema", || -> Result<FeatureSchema, PipelineError> {
        let stage = |e: crate::features::FeatureError| PipelineError::stage("schema", e);
        if reuse(&schema_path) {
            let file = fs::File::open(&schema_path).map_err(|e| PipelineError::stage("schema", e))?;
            let schema = read_schema(BufReader::new(file)).map_err(stage)?;
            if schema.max_bonds() != config.max_bonds {
                return Err(PipelineError::stage("schema", "existing schema.tsv was built with a different max_bonds"));
            }
            return Ok(schema);
        }
        let name = config.dataset.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        let provenance = format!("{name} ({} molecules)", data.len());
        let schema = build_schema_with_provenance(&data.graphs, config.max_bonds, &provenance).map_err(stage)?;
        write_artifact(&schema_path, |w| write_schema(&schema, w).map_err(|e| e.to_string()))
            .map_err(|e| PipelineError::stage("schema", e))?;
        Ok(schema)
    })?;
    let vectors = encode_all(&data.graphs, &schema);

    let model_path = artifact("model.json");
    let cv_path = artifact("cv_report.csv");
    let (model, model_summary) = time(&mut timings, "train", || -> Result<_, PipelineError> {
        if reuse(&model_path) && cv_path.exists() {
            let stage = |e: String| PipelineError::stage("train", e);
            let file = fs::File::open(&model_path).map_err(|e| stage(e.to_string()))?;
            let model = RegressionModel::read_json(BufReader::new(file)).map_err(|e| stage(e.to_string()))?;
            if model.input_dim != schema.dimension() {
                return Err(stage("existing model.json does not match the schema".into()));
            }
            let summary = ModelSummary {
                kind: model.kind,
                hyperparams: model.hyperparams,
                folds: config.folds,
                cv_mean_r2: model.cv_r2.unwrap_or(f64::NAN),
                features_used: model.mask.iter().filter(|&&m| m).count(),
                grid: read_cv_grid(&cv_path, config.folds).map_err(stage)?,
            };
            return Ok((model, summary));
        }
        let (model, summary) = train_model(&vectors, &data.y, config)?;
        let report = CvReport {
            kind: summary.kind,
            folds: summary.folds,
            seed: stage_seed(config.seed, "cv"),
            grid: summary.grid.clone(),
            best: summary.hyperparams,
            fold_scores: Vec::new(),
            mean_r2: summary.cv_mean_r2,
        };
        write_artifact(&cv_path, |w| w.write_all(report.to_csv().as_bytes()).map_err(|e| e.to_string()))
            .map_err(|e| PipelineError::stage("train", e))?;
        write_artifact(&model_path, |w| model.write_json(w).map_err(|e| e.to_string()))
            .map_err(|e| PipelineError::stage("train", e))?;
        Ok((model, summary))
    })?;

    let ctx = time(&mut timings, "feasibility", || ConstraintContext::with_max_atoms(&schema, config.max_atoms));
    let target_scale = match std_dev(&data.y) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let mut all_candidates: Vec<Vec<Candidate>> = Vec::new();
    for (i, &(lo, hi)) in config.targets.iter().enumerate() {
        let target = TargetSpec::new(config.property.clone(), lo, hi).expect("validated interval");
        let path = artifact(&format!("candidates_{i}.csv"));
        let candidates = time(&mut timings, &format!("search_{i}"), || -> Result<Vec<Candidate>, PipelineError> {
            let stage = |e: String| PipelineError::stage(format!("search_{i}"), e);
            if reuse(&path) {
                let file = fs::File::open(&path).map_err(|e| stage(e.to_string()))?;
                let rows = read_candidates(BufReader::new(file)).map_err(|e| stage(e.to_string()))?;
                return rows
                    .into_iter()
                    .map(|(v, _)| {
                        if v.len() != schema.dimension() {
                            return Err(stage("candidate width does not match the schema".into()));
                        }
                        let evaluation = Evaluation::compute(&model, &ctx, &target, &v, &[]);
                        let loss = evaluation.loss(config.search.lambda, target_scale);
                        Ok(Candidate { vector: v, loss, evaluation })
                    })
                    .collect();
            }
            let search = SearchConfig {
                seed: stage_seed(config.seed, &format!("search_{i}")),
                upper: Vec::new(),
                target_scale,
                conditions: Vec::new(),
                ..config.search.clone()
            };
            let result = pso_search(&model, &ctx, &target, &search, &vectors);
            write_artifact(&path, |w| write_candidates(&result.candidates, schema.dimension(), w).map_err(|e| e.to_string()))
                .map_err(stage)?;
            Ok(result.candidates)
        })?;
        all_candidates.push(candidates);
    }

    time(&mut timings, "pca", || write_pca(out, &vectors, &all_candidates, config.pca_components))?;

    let gen_config = generation_config(config)?;
    let known = KnownStructures::new(&data.graphs);
    let mut targets = Vec::new();
    for (i, candidates) in all_candidates.iter().enumerate() {
        let smi_path = artifact(&format!("structures_{i}.smi"));
        let table_path = artifact(&format!("generation_{i}.csv"));
        let counts = time(&mut timings, &format!("generate_{i}"), || -> Result<GenerationCounts, PipelineError> {
            let stage = |e: String| PipelineError::stage(format!("generate_{i}"), e);
            if reuse(&smi_path) && table_path.exists() {
                return read_generation_table(&table_path).map_err(stage);
            }
            let sets = generate_from_candidates(&GenerationInput::feasible(candidates), &schema, &known, &gen_config)?;
            write_artifact(&smi_path, |w| write_novel_smiles(&sets, w).map_err(|e| e.to_string())).map_err(stage)?;
            write_artifact(&table_path, |w| write_generation_table(&sets, w).map_err(|e| e.to_string())).map_err(stage)?;
            read_generation_table(&table_path).map_err(stage)
        })?;
        let (lo, hi) = config.targets[i];
        targets.push(TargetReport {
            lo,
            hi,
            candidates: candidates.len(),
            feasible: candidates.iter().filter(|c| c.feasible()).count(),
            in_range: candidates.iter().filter(|c| c.in_range()).count(),
            feasible_in_range: candidates.iter().filter(|c| c.feasible() && c.in_range()).count(),
            generated_vectors: counts.generated_vectors,
            novel_structures: counts.novel,
            known_structures: counts.known,
            novel_in_range: counts.novel_in_range,
            budget_exhausted: counts.budget_exhausted,
        });
    }

    let report = RunReport {
        property: config.property.clone(),
        seed: config.seed,
        dataset: DatasetSummary { rows: data.len(), skipped: data.skipped.len() },
        max_bonds: config.max_bonds,
        schema_dimension: schema.dimension(),
        model: model_summary,
        targets,
        timings,
    };
    let stage = |e: String| PipelineError::stage("report", e);
    write_artifact(&artifact("report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(|e| e.to_string())?;
        w.push(b'\n');
        Ok(())
    })
    .map_err(stage)?;
    let timings: serde_json::Map<String, serde_json::Value> =
        report.timings.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
    write_artifact(&artifact("timings.json"), |w| serde_json::to_writer_pretty(w, &timings).map_err(|e| e.to_string()))
        .map_err(stage)?;
    Ok(report)
}

/// Projects training vectors and all candidates onto the training set's
/// principal axes.
fn write_pca(out: &Path, training: &[FeatureVector], candidates: &[Vec<Candidate>], k: usize) -> Result<(), PipelineError> {
    let stage = |e: String| PipelineError::stage("pca", e);
    let rows: Vec<Vec<f64>> = training.iter().map(FeatureVector::as_f64).collect();
    let k = k.min(rows.first().map_or(0, Vec::len)).max(1);
    let pca = pca_project(&rows, k).map_err(|e| stage(e.to_string()))?;
    write_artifact(&out.join("pca.csv"), |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["set".to_string(), "row".to_string()];
        header.extend((1..=k).map(|c| format!("pc{c}")));
        w.write_record(&header).map_err(|e| e.to_string())?;
        let mut emit = |set: &str, row: usize, coords: &[f64]| {
            let mut rec = vec![set.to_string(), row.to_string()];
            rec.extend(coords.iter().map(f64::to_string));
            w.write_record(&rec).map_err(|e| e.to_string())
        };
        for (r, c) in pca.coordinates.iter().enumerate() {
            emit("train", r, c)?;
        }
        for (i, cands) in candidates.iter().enumerate() {
            for (r, c) in cands.iter().enumerate() {
                emit(&format!("target_{i}"), r, &pca.project(&c.vector.as_f64()))?;
            }
        }
        w.flush().map_err(|e| e.to_string())
    })
    .map_err(stage)?;
    write_artifact(&out.join("pca_variance.csv"), |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["component", "variance", "ratio"]).map_err(|e| e.to_string())?;
        for (c, (v, r)) in pca.explained_variance.iter().zip(&pca.explained_ratio).enumerate() {
            w.write_record([(c + 1).to_string(), v.to_string(), r.to_string()]).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())
    })
    .map_err(stage)
}

/// Reads a SMILES list, one per line.
pub fn read_smiles_list(path: &Path) -> Result<Vec<MolecularGraph>, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    let mut rejected = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match crate::chem::parse_smiles(line.trim()) {
            Ok(g) => out.push(g),
            Err(error) => rejected.push(RejectedRow { row: i + 1, smiles: line.to_string(), error }),
        }
    }
    if !rejected.is_empty() {
        return Err(DataError::Rejected { path: path.to_path_buf(), rows: rejected });
    }
    Ok(out)
}
