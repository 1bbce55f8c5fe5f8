//! Grid enumeration, seeding and parallel execution.

use std::fmt;
use std::path::{Path, PathBuf};

use ldvote::dominance::{Bias, MetricKind, Radius, VoterType};
use ldvote::dynamics::{default_max_steps, run_to_equilibrium, SchedulerKind, Trace};
use ldvote::error::{DynamicsError, MetricsError, PrefGenError, PreflibError};
use ldvote::metrics::{aggregate, ResultRow};
use ldvote::prefgen::{parse_preflib, GroundTruth};
use ldvote::{Action, BallotProfile, PreferenceProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ExperimentConfig, InitialState};
use crate::trace_io;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("profile generation failed: {0}")]
    PrefGen(#[from] PrefGenError),
    #[error("cannot parse {path}: {source}")]
    Preflib { path: PathBuf, source: PreflibError },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("aggregation: {0}")]
    Metrics(#[from] MetricsError),
    #[error("trace dump: {0}")]
    TraceDump(#[from] trace_io::TraceIoError),
    #[error("keep radius {k} does not exceed r = {r}")]
    KeepRadius { k: String, r: Radius },
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into one well-mixed seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_u64, |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Profiles depend only on the electorate shape, so every radius in a sweep
/// sees the same profiles.
pub fn profile_seed(master: u64, n: usize, m: usize, profile: usize) -> u64 {
    derive_seed(&[master, 0, n as u64, m as u64, profile as u64])
}

pub fn run_seed(master: u64, cell: usize, profile: usize, rep: usize) -> u64 {
    derive_seed(&[master, 1, cell as u64, profile as u64, rep as u64])
}

/// The radius of a cell: fixed, or drawn per voter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellRadius {
    Fixed(Radius),
    Diverse,
}

impl fmt::Display for CellRadius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellRadius::Fixed(r) => write!(f, "{r}"),
            CellRadius::Diverse => f.write_str("diverse"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub m: usize,
    pub r: CellRadius,
}

/// All cells of the grid in `n`, `m`, `r` order.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &m in &cfg.m {
            let radii: Vec<CellRadius> = if cfg.diverse {
                vec![CellRadius::Diverse]
            } else {
                cfg.r.iter().map(|r| CellRadius::Fixed(r.resolve(n))).collect()
            };
            for r in radii {
                out.push(Cell { index: out.len(), n, m, r });
            }
        }
    }
    out
}

fn voter_type(cfg: &ExperimentConfig, r: Radius) -> Result<VoterType, BatchError> {
    let k = match cfg.k {
        Some(spec) => Some(spec.resolve(r).ok_or_else(|| BatchError::KeepRadius { k: spec.to_string(), r })?),
        None => None,
    };
    VoterType::new(cfg.metric, r, k, cfg.bias).map_err(|_| BatchError::KeepRadius {
        k: cfg.k.map_or_else(String::new, |k| k.to_string()),
        r,
    })
}

/// Whether every run of the cell is proved to converge.
pub fn convergence_guaranteed(cfg: &ExperimentConfig) -> bool {
    let homogeneous_truthful_singleton =
        !cfg.diverse && cfg.initial_state == InitialState::Truthful && cfg.scheduler.kind == SchedulerKind::SingletonUniform;
    let metric_ok = match cfg.bias {
        Bias::None => matches!(cfg.metric, MetricKind::L1 | MetricKind::LInf | MetricKind::Multiplicative),
        Bias::Truth | Bias::Lazy => cfg.metric == MetricKind::L1,
    };
    homogeneous_truthful_singleton && metric_ok
}

/// One preference profile with its optional ground truth.
#[derive(Clone, Debug)]
pub struct ProfileInput {
    pub profile: PreferenceProfile,
    pub ground: Option<GroundTruth>,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: Cell,
    /// Resolved keep radius, when the voters are biased and homogeneous.
    pub k: Option<Radius>,
    pub rows: Vec<ResultRow>,
    pub mean: Option<ResultRow>,
    /// Why the cell was abandoned, if it was.
    pub aborted: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub distribution: String,
    pub cells: Vec<CellResult>,
}

impl ExperimentOutput {
    pub fn aborted(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.aborted.is_some())
    }
}

/// One run's types and initial ballots, drawn from its seed.
pub fn run_setup(
    cfg: &ExperimentConfig,
    cell: &Cell,
    profile: &PreferenceProfile,
    seed: u64,
) -> Result<(Vec<VoterType>, BallotProfile), BatchError> {
    let n = profile.num_voters();
    let m = profile.num_candidates();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 2]));
    let types = match cell.r {
        CellRadius::Fixed(r) => vec![voter_type(cfg, r)?; n],
        CellRadius::Diverse => {
            let top = (n / m) as u64;
            (0..n)
                .map(|_| voter_type(cfg, Radius::integer(rng.gen_range(0..=top))))
                .collect::<Result<_, _>>()?
        }
    };
    let initial = match cfg.initial_state {
        InitialState::Truthful => profile.truthful_ballots(),
        InitialState::Random => BallotProfile::new((0..n).map(|_| Action::vote(rng.gen_range(0..m))).collect()),
    };
    Ok((types, initial))
}

fn run_one(
    cfg: &ExperimentConfig,
    cell: &Cell,
    pidx: usize,
    rep: usize,
    profile: &PreferenceProfile,
) -> Result<Trace, BatchError> {
    let seed = run_seed(cfg.master_seed, cell.index, pidx, rep);
    let (types, initial) = run_setup(cfg, cell, profile, seed)?;
    let max_steps = cfg.max_steps.unwrap_or_else(|| default_max_steps(profile.num_voters(), profile.num_candidates()));
    let trace = run_to_equilibrium(profile, &types, &initial, &cfg.scheduler, seed, max_steps)?;
    if let Some(dir) = &cfg.trace_dir {
        let path = dir.join(format!("cell{}_profile{}_rep{}.jsonl", cell.index, pidx, rep));
        trace_io::write_trace(&path, profile, &types, &trace)?;
    }
    Ok(trace)
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell, profiles: &[ProfileInput]) -> Result<CellResult, BatchError> {
    let k = match (cell.r, cfg.k) {
        (CellRadius::Fixed(r), Some(spec)) => spec.resolve(r),
        _ => None,
    };
    let strict = convergence_guaranteed(cfg);
    let rows: Vec<Result<ResultRow, String>> = profiles
        .par_iter()
        .enumerate()
        .map(|(pidx, input)| {
            let traces = (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| run_one(cfg, cell, pidx, rep, &input.profile))
                .collect::<Result<Vec<Trace>, BatchError>>()
                .map_err(|e| e.to_string())?;
            if strict {
                if let Some(rep) = traces.iter().position(|t| !t.converged) {
                    return Err(format!(
                        "profile {pidx} repetition {rep} did not converge within {} ticks",
                        traces[rep].num_ticks()
                    ));
                }
            }
            aggregate(&input.profile, &traces, input.ground.as_ref()).map_err(|e| e.to_string())
        })
        .collect();

    let mut ok = Vec::with_capacity(rows.len());
    for row in rows {
        match row {
            Ok(r) => ok.push(r),
            Err(reason) => {
                return Ok(CellResult { cell: cell.clone(), k, rows: Vec::new(), mean: None, aborted: Some(reason) });
            }
        }
    }
    let mean = ResultRow::mean(&ok);
    Ok(CellResult { cell: cell.clone(), k, rows: ok, mean, aborted: None })
}

fn run_cells(cfg: &ExperimentConfig, profiles_for: impl Fn(usize, usize) -> Result<Vec<ProfileInput>, BatchError>) -> Result<Vec<CellResult>, BatchError> {
    if let Some(dir) = &cfg.trace_dir {
        std::fs::create_dir_all(dir).map_err(|e| trace_io::TraceIoError::Io { path: dir.clone(), source: e })?;
    }
    let mut out = Vec::new();
    let mut cached: Option<((usize, usize), Vec<ProfileInput>)> = None;
    for cell in cells(cfg) {
        let key = (cell.n, cell.m);
        if cached.as_ref().map(|c| c.0) != Some(key) {
            cached = Some((key, profiles_for(cell.n, cell.m)?));
        }
        let profiles = &cached.as_ref().expect("filled above").1;
        log::info!("cell {} (n={}, m={}, r={})", cell.index, cell.n, cell.m, cell.r);
        let result = run_cell(cfg, &cell, profiles)?;
        if let Some(reason) = &result.aborted {
            log::error!("cell {} aborted: {reason}", cell.index);
        }
        out.push(result);
    }
    Ok(out)
}

/// Generates profiles for every cell of the grid and runs them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, BatchError> {
    let cells = run_cells(cfg, |n, m| {
        (0..cfg.profiles_per_cell)
            .into_par_iter()
            .map(|p| {
                let g = cfg.distribution.generate(n, m, profile_seed(cfg.master_seed, n, m, p))?;
                Ok(ProfileInput { profile: g.profile, ground: g.ground_truth })
            })
            .collect()
    })?;
    Ok(ExperimentOutput { distribution: cfg.distribution.to_string(), cells })
}

/// Runs the radius sweep of `cfg` on one PrefLib profile. Its own `n` and
/// `m` replace the configured ones.
pub fn run_preflib(cfg: &ExperimentConfig, path: &Path) -> Result<ExperimentOutput, BatchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BatchError::Read { path: path.to_path_buf(), source })?;
    let parsed = parse_preflib(&text).map_err(|source| BatchError::Preflib { path: path.to_path_buf(), source })?;
    let profile = parsed.profile;
    let mut cfg = cfg.clone();
    cfg.n = vec![profile.num_voters()];
    cfg.m = vec![profile.num_candidates()];
    let input = vec![ProfileInput { profile, ground: None }];
    let cells = run_cells(&cfg, |_, _| Ok(input.clone()))?;
    let name = path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
    Ok(ExperimentOutput { distribution: format!("preflib:{name}"), cells })
}
