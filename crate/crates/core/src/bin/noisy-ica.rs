use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noisy_ica::contrast::{quasi_orth_matrix, ContrastKind, ContrastVariant};
use noisy_ica::experiments::{run_experiment, Experiment, ExperimentConfig};
use noisy_ica::extract::{best_of_restarts, extract_all, ExtractOptions};
use noisy_ica::io::{read_matrix_csv, write_matrix_csv};
use noisy_ica::meta::{
    run_meta, uncorrected_meta, BuiltinOptions, Candidate, Registry, DEFAULT_PROBES_PER_DIM,
};
use noisy_ica::rng::{derive_seed, rng_from_seed};
use noisy_ica::score::{Scorer, DEFAULT_PROBES};
use noisy_ica::synth::{generate_dataset, Dataset, MixingModel, ModelSpec, SourceSpec};
use noisy_ica::{IcaError, Result};

#[derive(Parser)]
#[command(name = "noisy-ica", version, about = "Noisy ICA experiments and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a model file.
    Gen(GenArgs),
    /// Estimate a demixing matrix with one contrast.
    Demix(DemixArgs),
    /// Independence score of a demixing matrix.
    Score(ScoreArgs),
    /// Run every candidate and pick the lowest score.
    Meta(MetaArgs),
    /// Median Amari error for varying Bernoulli parameter.
    Table(ExpArgs),
    /// Median Amari error for varying noise power or sample size.
    Sweep(ExpArgs),
    /// Score against Amari error along `eps B + (1 - eps) I`.
    Interp(ExpArgs),
    /// Contrast values over a 2-d grid of directions.
    Landscape(ExpArgs),
    /// Single versus best-of-several initializations.
    Hist(ExpArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Model TOML (`k`, `rho`, `seed`, `sources`); default is five uniform sources.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long, default_value_t = 10_000)]
    n: usize,
    /// Seed of the samples (the model has its own seed).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the mixing matrix here.
    #[arg(long)]
    mixing_out: Option<PathBuf>,
}

#[derive(Args)]
struct DemixArgs {
    /// Data CSV, one observation per row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "chf")]
    contrast: ContrastVariant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random starts per column.
    #[arg(long, default_value_t = noisy_ica::extract::DEFAULT_RESTARTS)]
    restarts: usize,
    /// Full extractions; more than one selects by score.
    #[arg(long, default_value_t = 1)]
    inits: usize,
    /// Score probes used when `inits > 1`.
    #[arg(long, default_value_t = DEFAULT_PROBES)]
    probes: usize,
    /// Writes the full result as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Writes the demixing matrix as CSV here.
    #[arg(long)]
    demixer_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    data: PathBuf,
    /// k x k demixing matrix CSV.
    #[arg(long)]
    demixer: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PROBES)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    uncorrected: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetaArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PROBES)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Built-in candidates to include.
    #[arg(long, value_delimiter = ',', default_value = "pegi,chf,cgf")]
    candidates: Vec<String>,
    /// External candidate, `name=path.csv` with a k x k demixing matrix.
    #[arg(long = "candidate-file", value_parser = parse_candidate_file)]
    candidate_files: Vec<(String, PathBuf)>,
    /// True mixing matrix CSV; adds Amari errors to the output.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    uncorrected: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpArgs {
    /// Experiment TOML.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed (and `NOISY_ICA_SEED`).
    #[arg(long)]
    seed: Option<u64>,
    /// Full-scale protocol instead of the desk-scale defaults.
    #[arg(long)]
    full: bool,
    /// Score probes.
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long = "candidate-file", value_parser = parse_candidate_file)]
    candidate_files: Vec<(String, PathBuf)>,
}

fn parse_candidate_file(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected name=path.csv, got '{s}'")),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = match &a.config {
        Some(p) => ModelSpec::from_toml(&std::fs::read_to_string(p)?)?,
        None => ModelSpec {
            k: 5,
            rho: 0.2,
            seed: 0,
            sources: vec![SourceSpec::Uniform; 5],
        },
    };
    let model = MixingModel::from_spec(&spec)?;
    let ds = generate_dataset(&model, a.n, &mut rng_from_seed(a.seed))?;
    if let Some(p) = &a.mixing_out {
        write_matrix_csv(p, &model.b, None)?;
    }
    emit(a.out.as_deref(), &ds.to_csv())
}

fn demix(a: DemixArgs) -> Result<()> {
    let ds = Dataset::read_csv(&a.data)?;
    let kind = ContrastKind::new(a.contrast);
    let mut rng = rng_from_seed(a.seed);
    let c = quasi_orth_matrix(
        &kind,
        &ds,
        DEFAULT_PROBES_PER_DIM * ds.k(),
        a.contrast.default_probe_scale(),
        &mut rng,
    )?;
    let opts = ExtractOptions {
        restarts: a.restarts,
        ..ExtractOptions::default()
    };
    let res = if a.inits > 1 {
        let scorer = Scorer::new(a.probes, derive_seed(a.seed, &[1]), true);
        best_of_restarts(&kind, &ds, &c, a.inits, &mut rng, &scorer, &opts)?
    } else {
        extract_all(&kind, &ds, &c, &mut rng, &opts)?
    };
    if let Some(p) = &a.demixer_out {
        write_matrix_csv(p, &res.b_hat_inv, None)?;
    }
    let json = serde_json::to_string_pretty(&res).expect("plain struct serializes");
    emit(a.out.as_deref(), &(json + "\n"))
}

fn score(a: ScoreArgs) -> Result<()> {
    let ds = Dataset::read_csv(&a.data)?;
    let w = read_matrix_csv(&a.demixer)?;
    if w.nrows() != ds.k() || w.ncols() != ds.k() {
        return Err(IcaError::InvalidDimension(format!(
            "demixer must be {0}x{0}",
            ds.k()
        )));
    }
    let report = Scorer::new(a.probes, a.seed, !a.uncorrected).score_demixer(&w, &ds)?;
    emit(a.out.as_deref(), &(report.to_json() + "\n"))
}

fn meta(a: MetaArgs) -> Result<()> {
    let ds = Dataset::read_csv(&a.data)?;
    let mut registry = Registry::builtin(BuiltinOptions::default()).select(&a.candidates)?;
    for (name, path) in &a.candidate_files {
        registry.push(Candidate::from_csv(name.clone(), path)?)?;
    }
    let mut rng = rng_from_seed(a.seed);
    let mut res = if a.uncorrected {
        uncorrected_meta(&registry, &ds, a.probes, &mut rng)?
    } else {
        run_meta(&registry, &ds, a.probes, &mut rng)?
    };
    if let Some(p) = &a.truth {
        res.attach_truth(&read_matrix_csv(p)?);
    }
    emit(a.out.as_deref(), &(res.to_json() + "\n"))
}

fn experiment(a: ExpArgs, allowed: &[Experiment]) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig {
            experiment: allowed[0],
            ..ExperimentConfig::default()
        },
    };
    if !allowed.contains(&cfg.experiment) {
        return Err(IcaError::Config(format!(
            "config describes {}, expected one of {}",
            cfg.experiment,
            allowed
                .iter()
                .map(|e| e.name())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    cfg.apply_env_seed()?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.full {
        cfg.apply_full();
    }
    if let Some(m) = a.probes {
        cfg.probes = m;
    }
    for (name, path) in a.candidate_files {
        cfg.candidate_files.insert(name, path);
    }
    let table = run_experiment(&cfg)?;
    emit(a.out.as_deref().or(cfg.out.as_deref()), &table.render())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Demix(a) => demix(a),
        Command::Score(a) => score(a),
        Command::Meta(a) => meta(a),
        Command::Table(a) => experiment(a, &[Experiment::TableKurtosis]),
        Command::Sweep(a) => experiment(a, &[Experiment::SweepNoise, Experiment::SweepN]),
        Command::Interp(a) => experiment(a, &[Experiment::InterpolationScore]),
        Command::Landscape(a) => experiment(a, &[Experiment::Landscape]),
        Command::Hist(a) => experiment(a, &[Experiment::HistogramRestarts]),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
