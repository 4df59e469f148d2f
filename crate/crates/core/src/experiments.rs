//! Config-driven synthetic experiments that emit versioned CSV tables.
//!
//! All randomness flows from `seed` (or the explicit `seeds` list), so a
//! config file always produces the same bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contrast::{self, quasi_orth_matrix, ContrastKind, ContrastVariant};
use crate::error::{IcaError, Result};
use crate::extract::{best_of_restarts, extract_all, init_seed, ExtractOptions};
use crate::io::fmt_f64;
use crate::linalg::{self, DEFAULT_REL_CUTOFF};
use crate::meta::{
    run_candidates, select, BuiltinOptions, Candidate, Registry, DEFAULT_PROBES_PER_DIM,
};
use crate::metrics::amari_error;
use crate::rng::{derive_seed, rng_from_seed};
use crate::score::Scorer;
use crate::synth::{
    bernoulli_p_for_scaled_kurtosis, generate_dataset, scaled_kurtosis_bernoulli, Dataset,
    MixingModel, ModelSpec, SourceSpec,
};

pub const SEED_ENV: &str = "NOISY_ICA_SEED";
pub const CSV_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scaled kurtosis values of the Bernoulli table.
pub const TABLE_SCALED_KURTOSIS: [f64; 9] = [994.0, 194.0, 95.0, 15.0, 5.0, 2.0, 0.8, 0.13, 0.0];

const MIX_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;
const ALGO_STREAM: u64 = 2;
const RUN_STREAM: u64 = 3;
const PROBE_STREAM: u64 = 4;
const C_STREAM: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    TableKurtosis,
    SweepNoise,
    SweepN,
    HistogramRestarts,
    InterpolationScore,
    Landscape,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::TableKurtosis => "table_kurtosis",
            Experiment::SweepNoise => "sweep_noise",
            Experiment::SweepN => "sweep_n",
            Experiment::HistogramRestarts => "histogram_restarts",
            Experiment::InterpolationScore => "interpolation_score",
            Experiment::Landscape => "landscape",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = IcaError;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Experiment::TableKurtosis,
            Experiment::SweepNoise,
            Experiment::SweepN,
            Experiment::HistogramRestarts,
            Experiment::InterpolationScore,
            Experiment::Landscape,
        ];
        all.into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| IcaError::Config(format!("unknown experiment '{s}'")))
    }
}

/// Experiment parameters. Every key is optional in the TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Number of sources; defaults to the length of the source plan.
    pub k: Option<usize>,
    pub n: usize,
    pub rho: f64,
    pub runs: usize,
    pub seed: u64,
    /// Explicit per-run seeds; when set, `runs` is their count.
    pub seeds: Vec<u64>,
    /// Monte-Carlo probes of the independence score.
    pub probes: usize,
    pub candidates: Vec<String>,
    /// External candidates: name to CSV demixing matrix.
    pub candidate_files: BTreeMap<String, PathBuf>,
    pub sources: Option<Vec<SourceSpec>>,
    /// Bernoulli parameters for `table_kurtosis`.
    pub p_values: Vec<f64>,
    /// Noise powers (`sweep_noise`) or sample sizes (`sweep_n`).
    pub sweep_values: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub resolution: usize,
    /// Contrast for `histogram_restarts` and `landscape`.
    pub contrast: ContrastVariant,
    /// Initializations per trial in `histogram_restarts`.
    pub inits: usize,
    /// Random starts per column in every power iteration.
    pub restarts: usize,
    /// Hessian probes for `C`; defaults to four per dimension.
    pub c_probes: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::TableKurtosis,
            k: None,
            n: 20_000,
            rho: 0.2,
            runs: 20,
            seed: 0,
            seeds: Vec::new(),
            probes: crate::score::DEFAULT_PROBES,
            candidates: vec!["pegi".into(), "chf".into(), "cgf".into()],
            candidate_files: BTreeMap::new(),
            sources: None,
            p_values: TABLE_SCALED_KURTOSIS
                .iter()
                .map(|&kappa| {
                    bernoulli_p_for_scaled_kurtosis(kappa).expect("table values are valid")
                })
                .collect(),
            sweep_values: Vec::new(),
            epsilons: (0..10).map(|i| 0.55 + 0.05 * i as f64).collect(),
            resolution: 41,
            contrast: ContrastVariant::Chf,
            inits: 10,
            restarts: crate::extract::DEFAULT_RESTARTS,
            c_probes: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| IcaError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| IcaError::Config(e.to_string()))
    }

    /// Replaces `seed` with the value of `NOISY_ICA_SEED` when it is set.
    pub fn apply_env_seed(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| IcaError::Config(format!("{SEED_ENV}={v} is not a u64")))?;
        }
        Ok(())
    }

    /// Switches to the full-scale protocol: `n = 10^5` and 100 runs
    /// (40 trials of 30 initializations for the restart histogram).
    pub fn apply_full(&mut self) {
        match self.experiment {
            Experiment::TableKurtosis | Experiment::SweepNoise => {
                self.n = 100_000;
                self.runs = 100;
            }
            Experiment::SweepN => self.runs = 100,
            Experiment::HistogramRestarts => {
                self.runs = 40;
                self.inits = 30;
            }
            Experiment::InterpolationScore | Experiment::Landscape => self.n = 100_000,
        }
    }

    pub fn num_runs(&self) -> usize {
        if self.seeds.is_empty() {
            self.runs
        } else {
            self.seeds.len()
        }
    }

    /// Seed of run `r`.
    pub fn run_seed(&self, r: usize) -> u64 {
        self.seeds
            .get(r)
            .copied()
            .unwrap_or_else(|| derive_seed(self.seed, &[RUN_STREAM, r as u64]))
    }

    /// Seed of the mixing model shared by all runs.
    pub fn mixing_seed(&self) -> u64 {
        derive_seed(self.seed, &[MIX_STREAM])
    }

    fn default_sources(&self) -> Vec<SourceSpec> {
        match self.experiment {
            Experiment::TableKurtosis => vec![SourceSpec::Uniform; self.k.unwrap_or(5)],
            Experiment::Landscape => vec![SourceSpec::Uniform; self.k.unwrap_or(2)],
            _ => {
                let plan = SourceSpec::nine_source_plan();
                let k = self.k.unwrap_or(plan.len());
                plan.iter().cycle().take(k).copied().collect()
            }
        }
    }

    /// Source plan after defaults; its length is the effective `k`.
    pub fn source_plan(&self) -> Vec<SourceSpec> {
        self.sources
            .clone()
            .unwrap_or_else(|| self.default_sources())
    }

    pub fn dim(&self) -> usize {
        self.source_plan().len()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(IcaError::Config(m));
        if self.num_runs() == 0 {
            return cfg("runs must be at least 1".into());
        }
        if self.probes == 0 {
            return cfg("probes must be at least 1".into());
        }
        if self.restarts == 0 || self.inits == 0 {
            return cfg("restarts and inits must be at least 1".into());
        }
        if !(self.rho >= 0.0) {
            return cfg(format!("rho must be non-negative, got {}", self.rho));
        }
        let plan = self.source_plan();
        if let (Some(k), Some(_)) = (self.k, &self.sources) {
            if k != plan.len() {
                return cfg(format!("k = {k} but {} sources are listed", plan.len()));
            }
        }
        for s in &plan {
            s.validate().map_err(|e| IcaError::Config(e.to_string()))?;
        }
        if self.experiment != Experiment::Landscape && plan.len() < 2 {
            return cfg("need at least two sources".into());
        }
        match self.experiment {
            Experiment::TableKurtosis => {
                for &p in &self.p_values {
                    if !(p > 0.0 && p < 1.0) {
                        return cfg(format!("p must lie in (0, 1), got {p}"));
                    }
                }
            }
            Experiment::SweepNoise => {
                if self.sweep_values.iter().any(|&v| !(v >= 0.0)) {
                    return cfg("noise powers must be non-negative".into());
                }
            }
            Experiment::SweepN => {
                if self
                    .sweep_values
                    .iter()
                    .any(|&v| !(v >= 2.0) || v.fract() != 0.0)
                {
                    return cfg("sample sizes must be integers of at least 2".into());
                }
            }
            Experiment::InterpolationScore => {
                if self.epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                    return cfg("epsilon values must lie in (0, 1]".into());
                }
            }
            Experiment::Landscape => {
                if plan.len() != 2 {
                    return cfg(format!("landscape needs k = 2, got {}", plan.len()));
                }
                if self.resolution < 8 {
                    return cfg(format!(
                        "resolution must be at least 8, got {}",
                        self.resolution
                    ));
                }
            }
            Experiment::HistogramRestarts => {}
        }
        if self.uses_candidates() {
            self.registry()?;
        }
        Ok(())
    }

    fn uses_candidates(&self) -> bool {
        matches!(
            self.experiment,
            Experiment::TableKurtosis | Experiment::SweepNoise | Experiment::SweepN
        )
    }

    fn builtin_options(&self) -> BuiltinOptions {
        BuiltinOptions {
            probes: self.c_probes,
            extract: ExtractOptions {
                restarts: self.restarts,
                ..ExtractOptions::default()
            },
            ..BuiltinOptions::default()
        }
    }

    /// Candidates named in `candidates`, plus every external file, in that order.
    pub fn registry(&self) -> Result<Registry> {
        let mut all = Registry::builtin(self.builtin_options());
        for (name, path) in &self.candidate_files {
            all.push(Candidate::from_csv(name.clone(), path)?)?;
        }
        let mut names: Vec<String> = self.candidates.clone();
        for name in self.candidate_files.keys() {
            if !names.contains(name) {
                names.push(name.clone());
            }
        }
        if names.is_empty() {
            return Err(IcaError::Config("no candidates configured".into()));
        }
        all.select(&names)
    }
}

/// A CSV table with the versioned comment header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub experiment: Experiment,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(experiment: Experiment, columns: &[&str]) -> Self {
        CsvTable {
            experiment,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "# noisy-ica-kit v{CSV_VERSION} {}\n{}\n",
            self.experiment,
            self.columns.join(",")
        );
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    /// Values of `column` parsed as floats.
    pub fn column_f64(&self, column: &str) -> Result<Vec<f64>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| IcaError::InvalidParameter(format!("no column '{column}'")))?;
        self.rows
            .iter()
            .map(|r| {
                r[j].parse::<f64>()
                    .map_err(|e| IcaError::Csv(e.to_string()))
            })
            .collect()
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Amari error and score of one algorithm on one dataset. Failures count as
/// infinite error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoRun {
    pub amari: f64,
    pub score: f64,
}

/// One dataset through every candidate, Meta and uncorrected Meta, in the
/// order `candidates..., meta, unc_meta`.
pub fn evaluate_dataset(
    registry: &Registry,
    ds: &Dataset,
    b: &DMatrix<f64>,
    probes: usize,
    seed: u64,
) -> Result<Vec<AlgoRun>> {
    let runs = run_candidates(registry, ds, derive_seed(seed, &[ALGO_STREAM]))?;
    let scorer = Scorer::new(probes, derive_seed(seed, &[PROBE_STREAM]), true);
    let amari_of =
        |d: &crate::extract::DemixResult| amari_error(&d.b_hat, b).unwrap_or(f64::INFINITY);
    let mut out = Vec::with_capacity(registry.len() + 2);
    let corrected = select(&runs, ds, &scorer);
    match &corrected {
        Ok(m) => {
            for c in &m.per_candidate {
                out.push(AlgoRun {
                    amari: c.demix.as_ref().map_or(f64::INFINITY, amari_of),
                    score: c.score.mean,
                });
            }
        }
        Err(_) => out.extend(std::iter::repeat_n(
            AlgoRun {
                amari: f64::INFINITY,
                score: f64::INFINITY,
            },
            registry.len(),
        )),
    }
    for res in [corrected, select(&runs, ds, &scorer.with_corrected(false))] {
        out.push(match res {
            Ok(m) => {
                let w = m.winner_outcome();
                // the Meta score is always the corrected one
                let corrected_score = runs
                    .names
                    .iter()
                    .position(|n| *n == m.winner)
                    .map_or(f64::INFINITY, |i| out[i].score);
                AlgoRun {
                    amari: w.demix.as_ref().map_or(f64::INFINITY, amari_of),
                    score: corrected_score,
                }
            }
            Err(_) => AlgoRun {
                amari: f64::INFINITY,
                score: f64::INFINITY,
            },
        });
    }
    Ok(out)
}

fn algorithm_names(registry: &Registry) -> Vec<String> {
    let mut names: Vec<String> = registry.names().iter().map(|s| s.to_string()).collect();
    names.push("meta".into());
    names.push("unc_meta".into());
    names
}

/// Runs all candidates on `cfg.num_runs()` datasets from `model` and returns,
/// per algorithm, the list of runs.
fn run_cell(
    cfg: &ExperimentConfig,
    registry: &Registry,
    model: &MixingModel,
    n: usize,
    cell: u64,
) -> Result<Vec<Vec<AlgoRun>>> {
    let per_run: Vec<Result<Vec<AlgoRun>>> = (0..cfg.num_runs())
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(cfg.run_seed(r), &[cell]);
            let ds = generate_dataset(
                model,
                n,
                &mut rng_from_seed(derive_seed(seed, &[DATA_STREAM])),
            )?;
            evaluate_dataset(registry, &ds, &model.b, cfg.probes, seed)
        })
        .collect();
    let per_run = per_run.into_iter().collect::<Result<Vec<_>>>()?;
    let algos = registry.len() + 2;
    Ok((0..algos)
        .map(|a| per_run.iter().map(|r| r[a]).collect())
        .collect())
}

fn summary(runs: &[AlgoRun]) -> (f64, f64, f64, f64) {
    let amari: Vec<f64> = runs.iter().map(|r| r.amari).collect();
    let score: Vec<f64> = runs.iter().map(|r| r.score).collect();
    let (mean, std) = mean_std(&amari);
    (median(&amari), mean, std, mean_std(&score).0)
}

fn model_for(sources: Vec<SourceSpec>, rho: f64, seed: u64) -> Result<MixingModel> {
    MixingModel::from_spec(&ModelSpec {
        k: sources.len(),
        rho,
        seed,
        sources,
    })
}

/// Median Amari error per algorithm for each Bernoulli parameter. The mixing
/// matrix is the same for every `p` and run.
pub fn run_table_experiment(cfg: &ExperimentConfig) -> Result<CsvTable> {
    cfg.validate()?;
    let registry = cfg.registry()?;
    let k = cfg.dim();
    let names = algorithm_names(&registry);
    let mut table = CsvTable::new(
        Experiment::TableKurtosis,
        &[
            "p",
            "scaled_kurtosis",
            "algorithm",
            "median_amari",
            "mean_amari",
            "std_amari",
            "mean_score",
        ],
    );
    for (pi, &p) in cfg.p_values.iter().enumerate() {
        let model = model_for(
            vec![SourceSpec::BernoulliScaled { p }; k],
            cfg.rho,
            cfg.mixing_seed(),
        )?;
        let cell = run_cell(cfg, &registry, &model, cfg.n, pi as u64)?;
        let kappa = scaled_kurtosis_bernoulli(p)?;
        for (name, runs) in names.iter().zip(&cell) {
            let (med, mean, std, score) = summary(runs);
            table.rows.push(vec![
                fmt_f64(p),
                fmt_f64(kappa),
                name.clone(),
                fmt_f64(med),
                fmt_f64(mean),
                fmt_f64(std),
                fmt_f64(score),
            ]);
        }
    }
    Ok(table)
}

/// Median Amari error per algorithm while the noise power or the sample
/// size varies; the mixing matrix stays fixed.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<CsvTable> {
    if !matches!(cfg.experiment, Experiment::SweepNoise | Experiment::SweepN) {
        return Err(IcaError::Config(format!(
            "{} is not a sweep",
            cfg.experiment
        )));
    }
    cfg.validate()?;
    let registry = cfg.registry()?;
    let names = algorithm_names(&registry);
    let mut table = CsvTable::new(
        cfg.experiment,
        &["sweep_value", "algorithm", "median_amari", "mean_score"],
    );
    for (vi, &value) in cfg.sweep_values.iter().enumerate() {
        let (rho, n) = match cfg.experiment {
            Experiment::SweepNoise => (value, cfg.n),
            _ => (cfg.rho, value as usize),
        };
        let model = model_for(cfg.source_plan(), rho, cfg.mixing_seed())?;
        let cell = run_cell(cfg, &registry, &model, n, vi as u64)?;
        for (name, runs) in names.iter().zip(&cell) {
            let (med, _, _, score) = summary(runs);
            table.rows.push(vec![
                fmt_f64(value),
                name.clone(),
                fmt_f64(med),
                fmt_f64(score),
            ]);
        }
    }
    Ok(table)
}

/// Per trial, the Amari error of one initialization and of the best of
/// `cfg.inits` initializations chosen by the corrected score.
pub fn run_histogram(cfg: &ExperimentConfig) -> Result<CsvTable> {
    cfg.validate()?;
    let kind = ContrastKind::new(cfg.contrast);
    let model = model_for(cfg.source_plan(), cfg.rho, cfg.mixing_seed())?;
    let opts = ExtractOptions {
        restarts: cfg.restarts,
        ..ExtractOptions::default()
    };
    let c_probes = cfg.c_probes.unwrap_or(DEFAULT_PROBES_PER_DIM * model.k());
    let trials: Vec<Result<[(f64, f64); 2]>> = (0..cfg.num_runs())
        .into_par_iter()
        .map(|r| {
            let seed = cfg.run_seed(r);
            let ds = generate_dataset(
                &model,
                cfg.n,
                &mut rng_from_seed(derive_seed(seed, &[DATA_STREAM])),
            )?;
            let mut c_rng = rng_from_seed(derive_seed(seed, &[C_STREAM]));
            let c = quasi_orth_matrix(
                &kind,
                &ds,
                c_probes,
                cfg.contrast.default_probe_scale(),
                &mut c_rng,
            )?;
            let scorer = Scorer::new(cfg.probes, derive_seed(seed, &[PROBE_STREAM]), true);
            let algo_seed = derive_seed(seed, &[ALGO_STREAM]);
            // initialization 0 of the best-of run, on its own
            let base: u64 = rng_from_seed(algo_seed).random();
            let single = extract_all(
                &kind,
                &ds,
                &c,
                &mut rng_from_seed(init_seed(base, 0)),
                &opts,
            )?;
            let best = best_of_restarts(
                &kind,
                &ds,
                &c,
                cfg.inits,
                &mut rng_from_seed(algo_seed),
                &scorer,
                &opts,
            )?;
            let row = |d: &crate::extract::DemixResult| -> Result<(f64, f64)> {
                Ok((
                    amari_error(&d.b_hat, &model.b).unwrap_or(f64::INFINITY),
                    scorer.score_demixer(&d.b_hat_inv, &ds)?.mean,
                ))
            };
            Ok([row(&single)?, row(&best)?])
        })
        .collect();
    let mut table = CsvTable::new(
        Experiment::HistogramRestarts,
        &["run", "setting", "amari", "score"],
    );
    let best_label = format!("best_of_{}", cfg.inits);
    for (r, t) in trials.into_iter().enumerate() {
        let t = t?;
        for (label, (amari, score)) in ["single", best_label.as_str()].iter().zip(t) {
            table.rows.push(vec![
                r.to_string(),
                label.to_string(),
                fmt_f64(amari),
                fmt_f64(score),
            ]);
        }
    }
    Ok(table)
}

/// Score of `B' = eps B + (1 - eps) I` against its Amari error, averaged over
/// runs with a fresh mixing matrix each.
pub fn run_interpolation(cfg: &ExperimentConfig) -> Result<CsvTable> {
    cfg.validate()?;
    let per_run: Vec<Result<Vec<(f64, f64)>>> = (0..cfg.num_runs())
        .into_par_iter()
        .map(|r| {
            let seed = cfg.run_seed(r);
            let model = model_for(cfg.source_plan(), cfg.rho, derive_seed(seed, &[MIX_STREAM]))?;
            let ds = generate_dataset(
                &model,
                cfg.n,
                &mut rng_from_seed(derive_seed(seed, &[DATA_STREAM])),
            )?;
            let scorer = Scorer::new(cfg.probes, derive_seed(seed, &[PROBE_STREAM]), true);
            let eye = DMatrix::<f64>::identity(model.k(), model.k());
            cfg.epsilons
                .iter()
                .map(|&eps| {
                    let b_eps = &model.b * eps + &eye * (1.0 - eps);
                    let amari = amari_error(&b_eps, &model.b)?;
                    let w = linalg::pseudo_inverse(&b_eps, DEFAULT_REL_CUTOFF)?.matrix;
                    Ok((amari, scorer.score_demixer(&w, &ds)?.mean))
                })
                .collect()
        })
        .collect();
    let per_run = per_run.into_iter().collect::<Result<Vec<_>>>()?;
    let mut table = CsvTable::new(
        Experiment::InterpolationScore,
        &["epsilon", "amari", "score_mean", "score_std"],
    );
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let amari: Vec<f64> = per_run.iter().map(|r| r[i].0).collect();
        let score: Vec<f64> = per_run.iter().map(|r| r[i].1).collect();
        let (score_mean, score_std) = mean_std(&score);
        table.rows.push(vec![
            fmt_f64(eps),
            fmt_f64(mean_std(&amari).0),
            fmt_f64(score_mean),
            fmt_f64(score_std),
        ]);
    }
    Ok(table)
}

/// Contrast at the unit direction `(x, y) / |(x, y)|` on data expressed in
/// source coordinates `B^{-1} x`, so that the columns of `B` lie on the axes.
/// Grid points closer than `1e-9` to the origin are skipped.
pub fn landscape_grid(cfg: &ExperimentConfig) -> Result<CsvTable> {
    if cfg.experiment != Experiment::Landscape {
        return Err(IcaError::Config(format!(
            "{} is not a landscape",
            cfg.experiment
        )));
    }
    cfg.validate()?;
    let kind = ContrastKind::new(cfg.contrast);
    let model = model_for(cfg.source_plan(), cfg.rho, cfg.mixing_seed())?;
    let seed = cfg.run_seed(0);
    let ds = generate_dataset(
        &model,
        cfg.n,
        &mut rng_from_seed(derive_seed(seed, &[DATA_STREAM])),
    )?;
    let b_inv = model
        .b
        .clone()
        .try_inverse()
        .ok_or(IcaError::RankDeficient { rank: 1, dim: 2 })?;
    let rotated = ds.transform(&b_inv)?;
    let res = cfg.resolution;
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (res - 1) as f64;
    let mut table = CsvTable::new(Experiment::Landscape, &["x", "y", "value"]);
    for i in 0..res {
        for j in 0..res {
            let (x, y) = (coord(i), coord(j));
            let r = x.hypot(y);
            if r < 1e-9 {
                continue;
            }
            let u = DVector::from_vec(vec![x / r, y / r]);
            let value = contrast::eval_contrast(&kind, &u, &rotated).unwrap_or(f64::NAN);
            table
                .rows
                .push(vec![fmt_f64(x), fmt_f64(y), fmt_f64(value)]);
        }
    }
    Ok(table)
}

/// Dispatches on `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CsvTable> {
    match cfg.experiment {
        Experiment::TableKurtosis => run_table_experiment(cfg),
        Experiment::SweepNoise | Experiment::SweepN => run_sweep(cfg),
        Experiment::HistogramRestarts => run_histogram(cfg),
        Experiment::InterpolationScore => run_interpolation(cfg),
        Experiment::Landscape => landscape_grid(cfg),
    }
}
