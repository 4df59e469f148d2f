//! Candidate registry and score-based selection among demixing algorithms.
//!
//! Every candidate maps a dataset to a [`DemixResult`]. [`run_meta`] runs all
//! of them, scores each demixer on one shared probe set and picks the
//! smallest corrected score.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contrast::{quasi_orth_matrix, ContrastKind, ContrastVariant};
use crate::error::{IcaError, Result};
use crate::extract::{best_of_restarts, extract_all, DemixResult, ExtractOptions};
use crate::io::read_matrix_csv;
use crate::metrics::amari_error;
use crate::rng::{derive_seed, rng_from_seed};
use crate::score::{ScoreReport, Scorer};
use crate::synth::Dataset;

/// Hessian probes per dimension used by the built-in candidates.
pub const DEFAULT_PROBES_PER_DIM: usize = 4;

pub type Runner = dyn Fn(&Dataset, u64) -> Result<DemixResult> + Send + Sync;

/// A named demixing algorithm. The runner receives the data and a seed.
#[derive(Clone)]
pub struct Candidate {
    pub name: String,
    pub kind_tag: Option<ContrastKind>,
    runner: Arc<Runner>,
}

impl fmt::Debug for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Candidate")
            .field("name", &self.name)
            .field("kind_tag", &self.kind_tag)
            .finish()
    }
}

/// Settings of a built-in power-iteration candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuiltinOptions {
    /// Hessian probes for `C`; `None` means `DEFAULT_PROBES_PER_DIM * k`.
    pub probes: Option<usize>,
    /// Projected spread of the probes; `None` uses the contrast default.
    pub probe_scale: Option<f64>,
    /// Full extractions per run, the best one chosen by corrected score.
    pub inits: usize,
    /// Probe count of the score used to choose among `inits`.
    pub init_score_probes: usize,
    pub extract: ExtractOptions,
}

impl Default for BuiltinOptions {
    fn default() -> Self {
        BuiltinOptions {
            probes: None,
            probe_scale: None,
            inits: 1,
            init_score_probes: crate::score::DEFAULT_PROBES,
            extract: ExtractOptions::default(),
        }
    }
}

impl Candidate {
    pub fn new<F>(name: impl Into<String>, kind_tag: Option<ContrastKind>, runner: F) -> Self
    where
        F: Fn(&Dataset, u64) -> Result<DemixResult> + Send + Sync + 'static,
    {
        Candidate {
            name: name.into(),
            kind_tag,
            runner: Arc::new(runner),
        }
    }

    /// Power iteration with `kind` and its own probe-Hessian `C`.
    /// The name is `pegi` for kurtosis and the contrast name otherwise.
    pub fn builtin(kind: ContrastKind, opts: BuiltinOptions) -> Self {
        let name = match kind.variant {
            ContrastVariant::Kurtosis => "pegi".to_string(),
            v => v.to_string(),
        };
        Candidate::new(name, Some(kind), move |ds, seed| {
            let probes = opts.probes.unwrap_or(DEFAULT_PROBES_PER_DIM * ds.k());
            let scale = opts
                .probe_scale
                .unwrap_or(kind.variant.default_probe_scale());
            let mut rng = rng_from_seed(seed);
            let c = quasi_orth_matrix(&kind, ds, probes, scale, &mut rng)?;
            if opts.inits <= 1 {
                extract_all(&kind, ds, &c, &mut rng, &opts.extract)
            } else {
                let scorer = Scorer::new(opts.init_score_probes, derive_seed(seed, &[1]), true);
                best_of_restarts(&kind, ds, &c, opts.inits, &mut rng, &scorer, &opts.extract)
            }
        })
    }

    /// A fixed demixing matrix computed by some other tool.
    pub fn external(name: impl Into<String>, w: DMatrix<f64>) -> Self {
        Candidate::new(name, None, move |ds, _| {
            if w.nrows() != ds.k() {
                return Err(IcaError::InvalidDimension(format!(
                    "external demixer is {}x{}, data has k = {}",
                    w.nrows(),
                    w.ncols(),
                    ds.k()
                )));
            }
            DemixResult::from_demixing(&w)
        })
    }

    /// Reads a `k x k` demixing matrix (comma-separated, row-major) from `path`.
    pub fn from_csv(name: impl Into<String>, path: &Path) -> Result<Self> {
        let w = read_matrix_csv(path)?;
        if !w.is_square() {
            return Err(IcaError::InvalidDimension(format!(
                "{} is not square",
                path.display()
            )));
        }
        Ok(Candidate::external(name, w))
    }

    pub fn run(&self, ds: &Dataset, seed: u64) -> Result<DemixResult> {
        (self.runner)(ds, seed)
    }
}

/// Ordered list of candidates with unique names.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    candidates: Vec<Candidate>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    /// `pegi`, `chf` and `cgf` with shared options.
    pub fn builtin(opts: BuiltinOptions) -> Self {
        let mut r = Registry::new();
        for kind in [
            ContrastKind::kurtosis(),
            ContrastKind::chf(),
            ContrastKind::cgf(),
        ] {
            r.push(Candidate::builtin(kind, opts))
                .expect("built-in names are distinct");
        }
        r
    }

    pub fn push(&mut self, c: Candidate) -> Result<()> {
        if self.get(&c.name).is_some() {
            return Err(IcaError::Config(format!(
                "duplicate candidate name '{}'",
                c.name
            )));
        }
        self.candidates.push(c);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.name == name)
    }

    /// Sub-registry with the named candidates, in the order given.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<Registry> {
        let mut r = Registry::new();
        for n in names {
            let c = self
                .get(n.as_ref())
                .ok_or_else(|| IcaError::Config(format!("unknown candidate '{}'", n.as_ref())))?;
            r.push(c.clone())?;
        }
        Ok(r)
    }

    pub fn names(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter()
    }
}

fn name_key(name: &str) -> u64 {
    // FNV-1a, so a candidate's seed does not depend on its registry position
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed passed to the candidate called `name` for run seed `run_seed`.
pub fn candidate_seed(run_seed: u64, name: &str) -> u64 {
    derive_seed(run_seed, &[name_key(name)])
}

/// Output of every candidate on one dataset.
#[derive(Debug, Clone)]
pub struct CandidateRuns {
    pub run_seed: u64,
    pub names: Vec<String>,
    pub results: Vec<std::result::Result<DemixResult, String>>,
}

/// Runs every candidate once (in parallel) with seeds derived from `run_seed`.
pub fn run_candidates(registry: &Registry, ds: &Dataset, run_seed: u64) -> Result<CandidateRuns> {
    if registry.is_empty() {
        return Err(IcaError::InvalidParameter("registry is empty".into()));
    }
    let results = registry
        .candidates
        .par_iter()
        .map(|c| {
            c.run(ds, candidate_seed(run_seed, &c.name))
                .map_err(|e| e.to_string())
        })
        .collect();
    Ok(CandidateRuns {
        run_seed,
        names: registry.names().iter().map(|s| s.to_string()).collect(),
        results,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub name: String,
    /// Mean is infinite when the candidate failed.
    pub score: ScoreReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demix: Option<DemixResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaResult {
    pub winner: String,
    pub per_candidate: Vec<CandidateOutcome>,
    pub probe_seed: u64,
    pub corrected: bool,
}

impl MetaResult {
    pub fn winner_outcome(&self) -> &CandidateOutcome {
        self.per_candidate
            .iter()
            .find(|c| c.name == self.winner)
            .expect("winner is a candidate")
    }

    pub fn winner_demix(&self) -> &DemixResult {
        self.winner_outcome()
            .demix
            .as_ref()
            .expect("winner succeeded")
    }

    /// Fills in the Amari error of every successful candidate against `b`.
    pub fn attach_truth(&mut self, b: &DMatrix<f64>) {
        for c in &mut self.per_candidate {
            c.amari = c.demix.as_ref().and_then(|d| amari_error(&d.b_hat, b).ok());
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}

/// Scores finished runs with `scorer` and returns the argmin. Ties go to the
/// earlier candidate; failed candidates get an infinite score.
pub fn select(runs: &CandidateRuns, ds: &Dataset, scorer: &Scorer) -> Result<MetaResult> {
    let failed_report = ScoreReport {
        mean: f64::INFINITY,
        stddev: f64::NAN,
        num_probes: scorer.probes,
        corrected: scorer.corrected,
        probe_seed: scorer.probe_seed,
        failed_probes: 0,
    };
    let mut per_candidate = Vec::with_capacity(runs.names.len());
    for (name, res) in runs.names.iter().zip(&runs.results) {
        let outcome = match res {
            Ok(d) => match scorer.score_demixer(&d.b_hat_inv, ds) {
                Ok(score) => CandidateOutcome {
                    name: name.clone(),
                    score,
                    amari: None,
                    demix: Some(d.clone()),
                    error: None,
                },
                Err(e) => CandidateOutcome {
                    name: name.clone(),
                    score: failed_report.clone(),
                    amari: None,
                    demix: Some(d.clone()),
                    error: Some(e.to_string()),
                },
            },
            Err(e) => CandidateOutcome {
                name: name.clone(),
                score: failed_report.clone(),
                amari: None,
                demix: None,
                error: Some(e.clone()),
            },
        };
        per_candidate.push(outcome);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in per_candidate.iter().enumerate() {
        let s = c.score.mean;
        if s.is_finite() && best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    let Some((i, _)) = best else {
        let msg = per_candidate
            .iter()
            .map(|c| format!("{}: {}", c.name, c.error.as_deref().unwrap_or("no score")))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(IcaError::MetaFailure(msg));
    };
    Ok(MetaResult {
        winner: per_candidate[i].name.clone(),
        per_candidate,
        probe_seed: scorer.probe_seed,
        corrected: scorer.corrected,
    })
}

fn meta<R: Rng + ?Sized>(
    registry: &Registry,
    ds: &Dataset,
    m: usize,
    rng: &mut R,
    corrected: bool,
) -> Result<MetaResult> {
    let probe_seed: u64 = rng.random();
    let run_seed: u64 = rng.random();
    let runs = run_candidates(registry, ds, run_seed)?;
    select(&runs, ds, &Scorer::new(m, probe_seed, corrected))
}

/// Runs every candidate and keeps the one with the smallest corrected score,
/// using `m` probes shared by all candidates.
pub fn run_meta<R: Rng + ?Sized>(
    registry: &Registry,
    ds: &Dataset,
    m: usize,
    rng: &mut R,
) -> Result<MetaResult> {
    meta(registry, ds, m, rng, true)
}

/// [`run_meta`] with the uncorrected score. From the same generator state it
/// runs the candidates with the same seeds and uses the same probes.
pub fn uncorrected_meta<R: Rng + ?Sized>(
    registry: &Registry,
    ds: &Dataset,
    m: usize,
    rng: &mut R,
) -> Result<MetaResult> {
    meta(registry, ds, m, rng, false)
}
