//! `invdes` command-line driver. Exit codes: 0 success, 2 configuration or
//! usage error, 3 data error, 4 stage failure.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use invdes::features::{build_schema_with_provenance, encode_all, read_schema, write_schema, FeatureSchema};
use invdes::pipeline::{
    generate_from_candidates, generation_config, load_dataset, read_features, run_pipeline, stage_seed, train_model,
    write_features, write_generation_table, write_novel_smiles, ConfigError, GenerationInput, KnownStructures,
    LoadMode, PipelineError, RunConfig,
};
use invdes::regression::{FeatureSelection, ModelKind, RegressionModel};
use invdes::search::{pso_search, read_candidate_rows, write_candidates, ConstraintContext, SearchConfig, TargetSpec};

#[derive(Parser)]
#[command(name = "invdes", version, about = "Inverse molecular design from substructure-count features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) a schema and write the feature table of a dataset.
    Encode(EncodeArgs),
    /// Cross-validate a model over its grid and fit the best point.
    Train(TrainArgs),
    /// Swarm search for feature vectors predicted inside a target interval.
    Search(SearchArgs),
    /// Decode candidate vectors into structures.
    Generate(GenerateArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
    /// Keep every n-th row of a table by an integer index column.
    Sample(SampleArgs),
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    property: String,
    #[arg(long, default_value_t = 2)]
    max_bonds: usize,
    /// Encode with an existing schema instead of building one.
    #[arg(long, conflicts_with = "max_bonds")]
    schema: Option<PathBuf>,
    /// Where to write a newly built schema.
    #[arg(long, default_value = "schema.tsv")]
    schema_out: PathBuf,
    #[arg(long, default_value = "features.csv")]
    out: PathBuf,
    /// Skip unparseable SMILES instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value = "krr-rbf", value_parser = parse_kind)]
    model: ModelKind,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_selection, requires = "feature_budget")]
    feature_selection: Option<FeatureSelection>,
    #[arg(long)]
    feature_budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    #[arg(long, default_value = "cv_report.csv")]
    cv_report: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Training feature table: starting points, bounds and excluded vectors.
    #[arg(long)]
    features: PathBuf,
    /// Target interval `lo,hi`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_interval)]
    target: (f64, f64),
    #[arg(long, default_value = "candidates.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    bound_factor: Option<f64>,
    /// Extra swarms while zero-loss candidates are short.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = invdes::chem::DEFAULT_MAX_ATOMS)]
    max_atoms: usize,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    /// Feature table of known molecules; generated copies of them are dropped.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value = "structures.smi")]
    out: PathBuf,
    /// Per-candidate outcome table.
    #[arg(long, default_value = "generation.csv")]
    table: PathBuf,
    /// Also try candidates not marked feasible.
    #[arg(long)]
    all: bool,
    /// Structures per vector; `none` for no cap.
    #[arg(long, default_value = "10")]
    max_structures: String,
    /// Expanded states per vector; `none` for no budget.
    #[arg(long, default_value_t = invdes::generate::DEFAULT_NODE_BUDGET.to_string())]
    node_budget: String,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long, default_value_t = invdes::chem::DEFAULT_MAX_ATOMS)]
    max_atoms: usize,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Reuse artifacts already in the output directory.
    #[arg(long)]
    resume: bool,
    /// Override the config's global seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 134)]
    every: u64,
    #[arg(long, default_value = "index")]
    index_column: String,
    /// Columns to keep, in order; default keeps all.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Drop sampled rows whose `smiles` value does not parse.
    #[arg(long)]
    drop_unparseable: bool,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| format!("unknown model `{s}` (lasso, ridge, krr-rbf)"))
}

fn parse_selection(s: &str) -> Result<FeatureSelection, String> {
    s.parse().map_err(|_| format!("unknown feature selection `{s}` (variance, lasso-path)"))
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err("need finite bounds with lo <= hi".into());
    }
    Ok((lo, hi))
}

fn parse_limit<T: std::str::FromStr>(name: &str, s: &str) -> Result<Option<T>, PipelineError> {
    if s == "none" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| ConfigError::Invalid(format!("{name}: expected a number or `none`, got `{s}`")).into())
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path).map(BufReader::new).map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() }.into())
}

/// Writes `path` in full or reports the stage that failed.
fn create(path: &Path, stage: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(|e| PipelineError::stage(stage, format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| PipelineError::stage(stage, e))?;
    w.flush().map_err(|e| PipelineError::stage(stage, e))
}

fn load_schema(path: &Path) -> Result<FeatureSchema, PipelineError> {
    read_schema(open(path)?).map_err(|e| ConfigError::Invalid(format!("schema {}: {e}", path.display())).into())
}

fn load_model(path: &Path) -> Result<RegressionModel, PipelineError> {
    RegressionModel::read_json(open(path)?).map_err(|e| ConfigError::Invalid(format!("model {}: {e}", path.display())).into())
}

fn encode(args: EncodeArgs) -> Result<(), PipelineError> {
    let mode = if args.lenient { LoadMode::Lenient } else { LoadMode::Strict };
    let data = load_dataset(&args.dataset, &args.property, mode)?;
    for r in &data.skipped {
        eprintln!("skipped row {}: `{}` ({})", r.row, r.smiles, r.error);
    }
    let schema = match &args.schema {
        Some(path) => load_schema(path)?,
        None => {
            let name = args.dataset.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            let provenance = format!("{name} ({} molecules)", data.len());
            let schema = build_schema_with_provenance(&data.graphs, args.max_bonds, &provenance)
                .map_err(|e| PipelineError::stage("encode", e))?;
            create(&args.schema_out, "encode", |w| write_schema(&schema, w).map_err(|e| e.to_string()))?;
            schema
        }
    };
    let vectors = encode_all(&data.graphs, &schema);
    create(&args.out, "encode", |w| write_features(&data.smiles, &args.property, &data.y, &vectors, w).map_err(|e| e.to_string()))?;
    eprintln!("{} molecules, {} skipped, dimension {}", data.len(), data.skipped.len(), schema.dimension());
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), PipelineError> {
    let table = read_features(&args.features)?;
    let mut config = RunConfig::new(&args.features, table.property.clone(), ".");
    config.model = args.model;
    config.folds = args.folds;
    config.alphas = args.alphas;
    config.gammas = args.gammas;
    config.feature_selection = args.feature_selection.zip(args.feature_budget);
    config.seed = args.seed;
    config.targets = vec![(0.0, 0.0)];
    config.validate()?;
    let (model, summary) = train_model(&table.vectors, &table.y, &config)?;
    let report = invdes::regression::CvReport {
        kind: summary.kind,
        folds: summary.folds,
        seed: stage_seed(config.seed, "cv"),
        grid: summary.grid.clone(),
        best: summary.hyperparams,
        fold_scores: Vec::new(),
        mean_r2: summary.cv_mean_r2,
    };
    create(&args.cv_report, "train", |w| w.write_all(report.to_csv().as_bytes()).map_err(|e| e.to_string()))?;
    create(&args.out, "train", |w| model.write_json(w).map_err(|e| e.to_string()))?;
    eprintln!(
        "best alpha {} gamma {:?}: mean CV R² {:.4}",
        summary.hyperparams.alpha, summary.hyperparams.gamma, summary.cv_mean_r2
    );
    Ok(())
}

fn search(args: SearchArgs) -> Result<(), PipelineError> {
    let schema = load_schema(&args.schema)?;
    let model = load_model(&args.model)?;
    let table = read_features(&args.features)?;
    if model.input_dim != schema.dimension() || table.vectors.iter().any(|v| v.len() != schema.dimension()) {
        return Err(ConfigError::Invalid("model, schema and feature table dimensions differ".into()).into());
    }
    let target = TargetSpec::new(table.property.clone(), args.target.0, args.target.1).expect("validated interval");
    let defaults = SearchConfig::default();
    let n = table.y.len() as f64;
    let mean = table.y.iter().sum::<f64>() / n;
    let sd = (table.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let config = SearchConfig {
        particles: args.particles.unwrap_or(defaults.particles),
        iterations: args.iterations.unwrap_or(defaults.iterations),
        lambda: args.lambda.unwrap_or(defaults.lambda),
        candidates: args.candidates.unwrap_or(defaults.candidates),
        bound_factor: args.bound_factor.unwrap_or(defaults.bound_factor),
        restarts: args.restarts.unwrap_or(defaults.restarts),
        seed: args.seed,
        target_scale: if sd > 0.0 { sd } else { 1.0 },
        ..defaults
    };
    let ctx = ConstraintContext::with_max_atoms(&schema, args.max_atoms);
    let result = pso_search(&model, &ctx, &target, &config, &table.vectors);
    create(&args.out, "search", |w| write_candidates(&result.candidates, schema.dimension(), w).map_err(|e| e.to_string()))?;
    let feasible = result.candidates.iter().filter(|c| c.feasible()).count();
    eprintln!("{} candidates ({feasible} feasible) from {} evaluated points", result.candidates.len(), result.evaluated);
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), PipelineError> {
    let schema = load_schema(&args.schema)?;
    let rows = read_candidate_rows(open(&args.candidates)?)
        .map_err(|e| ConfigError::Invalid(format!("candidates {}: {e}", args.candidates.display())))?;
    let inputs: Vec<GenerationInput> = rows
        .into_iter()
        .filter(|r| args.all || r.feasible)
        .map(|r| GenerationInput { rank: r.rank, vector: r.vector, in_range: r.in_range })
        .collect();
    if inputs.iter().any(|i| i.vector.len() != schema.dimension()) {
        return Err(ConfigError::Invalid("candidate width does not match the schema".into()).into());
    }
    let known = match &args.features {
        Some(path) => {
            let table = read_features(path)?;
            let graphs = table
                .smiles
                .iter()
                .map(|s| invdes::chem::parse_smiles(s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| PipelineError::Data(invdes::pipeline::DataError::Malformed { path: path.clone(), row: 0, message: e.to_string() }))?;
            KnownStructures::new(&graphs)
        }
        None => KnownStructures::default(),
    };
    let mut config = RunConfig::new("", "", "");
    config.templates = args.templates;
    config.max_atoms = args.max_atoms;
    config.max_structures = parse_limit("max-structures", &args.max_structures)?;
    config.node_budget = parse_limit("node-budget", &args.node_budget)?;
    let gen = generation_config(&config)?;
    let sets = generate_from_candidates(&inputs, &schema, &known, &gen)?;
    create(&args.out, "generate", |w| write_novel_smiles(&sets, w).map_err(|e| e.to_string()))?;
    create(&args.table, "generate", |w| write_generation_table(&sets, w).map_err(|e| e.to_string()))?;
    let total: usize = sets.iter().map(|s| s.result.structures.len()).sum();
    let failed = sets.iter().filter(|s| s.result.failed()).count();
    eprintln!("{} vectors, {total} structures, {failed} vectors without a structure", sets.len());
    Ok(())
}

fn pipeline(args: PipelineArgs) -> Result<(), PipelineError> {
    let mut config = RunConfig::from_file(&args.config)?;
    config.resume |= args.resume;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let report = run_pipeline(&config)?;
    eprintln!(
        "{} molecules, dimension {}, CV R² {:.4}",
        report.dataset.rows, report.schema_dimension, report.model.cv_mean_r2
    );
    for (i, t) in report.targets.iter().enumerate() {
        eprintln!(
            "target {i} [{}, {}]: {} candidates, {} feasible, {} novel structures ({} from in-range candidates)",
            t.lo, t.hi, t.candidates, t.feasible, t.novel_structures, t.novel_in_range
        );
    }
    Ok(())
}

fn sample(args: SampleArgs) -> Result<(), PipelineError> {
    let data_err = |e: csv::Error| PipelineError::Data(invdes::pipeline::DataError::Csv { path: args.input.clone(), source: e });
    let mut r = csv::Reader::from_reader(open(&args.input)?);
    let headers = r.headers().map_err(data_err)?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            PipelineError::Data(invdes::pipeline::DataError::MissingColumn { path: args.input.clone(), column: name.to_string() })
        })
    };
    let index = find(&args.index_column)?;
    let smiles = if args.drop_unparseable { Some(find("smiles")?) } else { None };
    let keep: Vec<usize> = match &args.columns {
        Some(cols) => cols.iter().map(|c| find(c)).collect::<Result<_, _>>()?,
        None => (0..headers.len()).collect(),
    };
    if args.every == 0 {
        return Err(ConfigError::Invalid("--every must be positive".into()).into());
    }
    let (mut kept, mut dropped) = (0usize, 0usize);
    create(&args.output, "sample", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(keep.iter().map(|&j| &headers[j])).map_err(|e| e.to_string())?;
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let i: u64 = rec[index].trim().parse().map_err(|_| format!("row {}: bad index `{}`", row + 1, &rec[index]))?;
            if i % args.every != 0 {
                continue;
            }
            if let Some(j) = smiles {
                if let Err(e) = invdes::chem::parse_smiles(&rec[j]) {
                    eprintln!("dropped index {i}: `{}` ({e})", &rec[j]);
                    dropped += 1;
                    continue;
                }
            }
            {
                out.write_record(keep.iter().map(|&j| &rec[j])).map_err(|e| e.to_string())?;
                kept += 1;
            }
        }
        out.flush().map_err(|e| e.to_string())
    })?;
    eprintln!("kept {kept} rows, dropped {dropped}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(a) => encode(a),
        Command::Train(a) => train(a),
        Command::Search(a) => search(a),
        Command::Generate(a) => generate(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Sample(a) => sample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
