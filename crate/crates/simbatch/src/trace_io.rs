//! Trace dumps: one JSON Lines file per run, and their offline audit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ldvote::dominance::VoterType;
use ldvote::dynamics::{verify_trace_invariants, StepRecord, Trace, Violation};
use ldvote::{BallotProfile, PreferenceProfile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Format { path: PathBuf, line: usize, reason: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header { profile: Vec<Vec<usize>>, types: Vec<VoterType>, initial: BallotProfile },
    Step(StepRecord),
    End {
        #[serde(rename = "final")]
        final_ballots: BallotProfile,
        converged: bool,
    },
}

/// A run read back from disk.
#[derive(Clone, Debug)]
pub struct StoredRun {
    pub profile: PreferenceProfile,
    pub types: Vec<VoterType>,
    pub trace: Trace,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceIoError + '_ {
    move |source| TraceIoError::Io { path: path.to_path_buf(), source }
}

pub fn write_trace(path: &Path, profile: &PreferenceProfile, types: &[VoterType], trace: &Trace) -> Result<(), TraceIoError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let header = Line::Header {
        profile: profile.orders().iter().map(|o| o.ranking().iter().map(|c| c.index()).collect()).collect(),
        types: types.to_vec(),
        initial: trace.initial.clone(),
    };
    let mut emit = |line: &Line| -> Result<(), TraceIoError> {
        serde_json::to_writer(&mut w, line).map_err(|e| TraceIoError::Io { path: path.to_path_buf(), source: e.into() })?;
        w.write_all(b"\n").map_err(io_err(path))
    };
    emit(&header)?;
    for s in &trace.steps {
        emit(&Line::Step(s.clone()))?;
    }
    emit(&Line::End { final_ballots: trace.final_ballots.clone(), converged: trace.converged })?;
    w.flush().map_err(io_err(path))
}

pub fn read_trace(path: &Path) -> Result<StoredRun, TraceIoError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let bad = |line: usize, reason: String| TraceIoError::Format { path: path.to_path_buf(), line, reason };
    let mut header = None;
    let mut steps = Vec::new();
    let mut end = None;
    for (idx, text) in reader.lines().enumerate() {
        let text = text.map_err(io_err(path))?;
        if text.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(&text).map_err(|e| bad(idx + 1, e.to_string()))?;
        match (line, header.is_some(), end.is_some()) {
            (_, _, true) => return Err(bad(idx + 1, "content after the end line".into())),
            (Line::Header { profile, types, initial }, false, _) => header = Some((profile, types, initial)),
            (Line::Header { .. }, true, _) => return Err(bad(idx + 1, "second header".into())),
            (_, false, _) => return Err(bad(idx + 1, "missing header".into())),
            (Line::Step(s), true, _) => steps.push(s),
            (Line::End { final_ballots, converged }, true, _) => end = Some((final_ballots, converged)),
        }
    }
    let (rankings, types, initial) = header.ok_or_else(|| bad(0, "empty file".into()))?;
    let (final_ballots, converged) = end.ok_or_else(|| bad(0, "missing end line".into()))?;
    let profile = PreferenceProfile::from_rankings(&rankings).map_err(|e| bad(1, e.to_string()))?;
    Ok(StoredRun { profile, types, trace: Trace { initial, steps, final_ballots, converged } })
}

/// The audit of one stored run.
#[derive(Clone, Debug)]
pub struct Audit {
    pub path: PathBuf,
    /// Problems with the record itself: a replay mismatch or no convergence.
    pub problems: Vec<String>,
    pub violations: Vec<Violation>,
    /// Set when the invariants do not apply to the run.
    pub skipped: Option<&'static str>,
}

impl Audit {
    pub fn is_clean(&self) -> bool {
        self.problems.is_empty() && self.violations.is_empty()
    }
}

pub fn audit_run(path: &Path, run: &StoredRun) -> Audit {
    let mut problems = Vec::new();
    if run.trace.replay() != run.trace.final_ballots {
        problems.push("replaying the steps does not reach the final ballots".to_string());
    }
    if !run.trace.converged {
        problems.push("run did not converge".to_string());
    }
    let first = run.types.first();
    let skipped = if run.types.iter().any(|t| Some(t) != first) {
        Some("heterogeneous voters")
    } else if first.is_some_and(|t| t.k().is_some()) {
        Some("biased voters")
    } else if run.trace.initial != run.profile.truthful_ballots() {
        Some("non-truthful start")
    } else if run.trace.ticks().any(|t| t.len() > 1) {
        Some("group moves")
    } else {
        None
    };
    let violations = match (skipped, first) {
        (None, Some(t)) => verify_trace_invariants(&run.profile, &run.trace, t),
        _ => Vec::new(),
    };
    Audit { path: path.to_path_buf(), problems, violations, skipped }
}

/// Audits every `.jsonl` file in `dir`, in name order.
pub fn verify_dir(dir: &Path) -> Result<Vec<Audit>, TraceIoError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<Vec<_>, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
    paths.sort();
    paths.iter().map(|p| read_trace(p).map(|run| audit_run(p, &run))).collect()
}
