//! Runtime checks of the convergence invariants on recorded traces.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{is_equilibrium, pending_moves, StepRecord, Trace};
use crate::dominance::{possible_winners, possible_winners_in, AccessibleStateSet, Bias, MetricKind, Radius, StepType, VoterType};
use crate::election::{h_bar, tally, Action, BallotProfile, Candidate, PreferenceProfile, ScoreVector};
use crate::error::DynamicsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvariantKind {
    /// A deserted candidate is still a possible winner after the step.
    DesertedStillPossible,
    /// A voter left a candidate that was a possible winner for them.
    LeftPossibleWinner,
    /// The step was not a compromise.
    NotCompromise,
    /// The winner's score went down.
    WinnerScoreDecreased,
    /// The set of possible winners grew.
    PossibleWinnersGrew,
    /// Some voter moved more than `m - 1` times.
    TooManyMoves,
    /// A non-final state had a single leader.
    SingleLeader,
    /// The final state has two leaders within `r` and a voter on a hopeless candidate.
    FinalState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub time: Option<usize>,
    pub voter: Option<usize>,
    pub kind: InvariantKind,
    pub detail: String,
}

impl Violation {
    fn at(step: &StepRecord, kind: InvariantKind, detail: String) -> Self {
        Violation { time: Some(step.time), voter: Some(step.voter), kind, detail }
    }
}

/// The possible winners of a voter whose ballot supports none of them, as a
/// function of the full tally: `h_bar(s, r + 1)` under L1, `h_bar(s, 2r + 1)`
/// under L-infinity, and computed exactly otherwise.
pub fn leader_set(s: &ScoreVector, voter_type: &VoterType) -> Vec<Candidate> {
    let r = voter_type.r().floor() as u32;
    match voter_type.metric() {
        MetricKind::L1 => h_bar(s, r + 1),
        MetricKind::LInf => h_bar(s, 2 * r + 1),
        _ => possible_winners_in(&AccessibleStateSet::new(s.clone(), voter_type.response_metric())),
    }
}

fn is_subset(a: &[Candidate], b: &[Candidate]) -> bool {
    a.iter().all(|c| b.contains(c))
}

fn max_score(s: &ScoreVector) -> u32 {
    s.counts().iter().copied().max().unwrap_or(0)
}

/// Possible-winner sets of every voter in one state, keyed by their ballot
/// (the set depends on nothing else for a fixed type).
fn possible_winners_by_ballot(ballots: &BallotProfile, m: usize, voter_type: &VoterType) -> HashMap<Action, Vec<Candidate>> {
    let mut out = HashMap::new();
    for (i, &a) in ballots.votes().iter().enumerate() {
        out.entry(a).or_insert_with(|| possible_winners(ballots, m, i, voter_type.response_metric()));
    }
    out
}

/// Checks a trace from the truthful state with homogeneous, bias-free voters
/// of `voter_type` under a singleton scheduler. Returns every violation found.
///
/// Possible-winner invariants are stated on [`leader_set`]: a deserted
/// candidate never re-enters it and it never grows. A mover's own
/// possible-winner set is exact.
pub fn verify_trace_invariants(profile: &PreferenceProfile, trace: &Trace, voter_type: &VoterType) -> Vec<Violation> {
    let m = profile.num_candidates();
    let metric = voter_type.response_metric();
    let mut out = Vec::new();

    for (voter, &k) in trace.moves_per_voter().iter().enumerate() {
        if k + 1 > m {
            out.push(Violation {
                time: None,
                voter: Some(voter),
                kind: InvariantKind::TooManyMoves,
                detail: format!("{k} moves with {m} candidates"),
            });
        }
    }

    let states = trace.states();
    let mut deserted: BTreeSet<Candidate> = BTreeSet::new();
    for (t, tick) in trace.ticks().enumerate() {
        let before = &states[t];
        let (s_before, s_after) = (&tick[0].scores_before, &tick[0].scores_after);
        for s in tick {
            if s.step_type != StepType::Type1 {
                out.push(Violation::at(s, InvariantKind::NotCompromise, format!("{} -> {} is {:?}", s.from, s.to, s.step_type)));
            }
            if let Some(c) = s.from.candidate() {
                let own = possible_winners(before, m, s.voter, metric);
                if own.contains(&c) {
                    out.push(Violation::at(s, InvariantKind::LeftPossibleWinner, format!("{c} in {:?}", own)));
                }
                deserted.insert(c);
            }
        }
        if max_score(s_after) < max_score(s_before) {
            out.push(Violation::at(&tick[0], InvariantKind::WinnerScoreDecreased, format!("{s_before} -> {s_after}")));
        }
        let (l_before, l_after) = (leader_set(s_before, voter_type), leader_set(s_after, voter_type));
        if let Some(c) = deserted.iter().find(|c| l_after.contains(c)) {
            out.push(Violation::at(&tick[0], InvariantKind::DesertedStillPossible, format!("{c} in {:?}", l_after)));
        }
        if !is_subset(&l_after, &l_before) {
            out.push(Violation::at(&tick[0], InvariantKind::PossibleWinnersGrew, format!("{:?} -> {:?}", l_before, l_after)));
        }
    }

    if voter_type.metric() == MetricKind::L1 && !trace.steps.is_empty() {
        check_single_leader(profile, trace, voter_type, &states, &mut out);
    }
    out
}

/// Under L1: more than one leader within `r + 1` until the end, and at the
/// end either a single leader within `r` or everyone on a possible winner.
fn check_single_leader(profile: &PreferenceProfile, trace: &Trace, voter_type: &VoterType, states: &[BallotProfile], out: &mut Vec<Violation>) {
    let m = profile.num_candidates();
    let r = voter_type.r().floor() as u32;
    for (t, ballots) in states.iter().enumerate() {
        let s = tally(ballots, m);
        if h_bar(&s, r + 1).len() <= 1 {
            out.push(Violation {
                time: Some(t),
                voter: None,
                kind: InvariantKind::SingleLeader,
                detail: format!("{s}"),
            });
        }
    }
    let fin = &trace.final_ballots;
    let s = tally(fin, m);
    if h_bar(&s, r).len() != 1 {
        let wins = possible_winners_by_ballot(fin, m, voter_type);
        for (i, a) in fin.votes().iter().enumerate() {
            let ok = a.candidate().is_some_and(|c| wins[a].contains(&c));
            if !ok {
                out.push(Violation {
                    time: None,
                    voter: Some(i),
                    kind: InvariantKind::FinalState,
                    detail: format!("votes {a} at {s}"),
                });
            }
        }
    }
}

/// `-n |H| + |{i : a_i in H}|` with `H = h_bar(s, r + 1)`.
pub fn chunk_potential(ballots: &BallotProfile, m: usize, r: u64) -> i64 {
    let s = tally(ballots, m);
    let leaders = h_bar(&s, r as u32 + 1);
    let n = ballots.len() as i64;
    let supporters = ballots
        .votes()
        .iter()
        .filter(|a| a.candidate().is_some_and(|c| leaders.contains(&c)))
        .count() as i64;
    -n * leaders.len() as i64 + supporters
}

/// Indices into [`Trace::states`] where chunks start: the state before each
/// Type1 tick, from the first state without pending Type2 moves on, and the
/// final state of a converged trace.
pub fn chunk_boundaries(profile: &PreferenceProfile, types: &[VoterType], trace: &Trace) -> Result<Vec<usize>, DynamicsError> {
    let states = trace.states();
    let mut start = None;
    for (t, b) in states.iter().enumerate() {
        if pending_moves(profile, b, types)?.values().all(|r| r.kind != StepType::Type2) {
            start = Some(t);
            break;
        }
    }
    let Some(start) = start else {
        return Ok(Vec::new());
    };
    let mut out: Vec<usize> = trace
        .ticks()
        .enumerate()
        .filter(|(t, tick)| *t >= start && tick.iter().any(|s| s.step_type == StepType::Type1))
        .map(|(t, _)| t)
        .collect();
    if trace.converged {
        out.push(states.len() - 1);
    }
    Ok(out)
}

/// A bias move away from the voter's favourite among the leaders (`h_bar`
/// with window `r + 1`). No such move occurs from the truthful state.
pub fn is_type_a_bias_move(profile: &PreferenceProfile, step: &StepRecord, voter_type: &VoterType) -> bool {
    if step.step_type != StepType::BiasMove {
        return false;
    }
    let Some(c) = step.from.candidate() else {
        return false;
    };
    let leaders = h_bar(&step.scores_before, voter_type.r().floor() as u32 + 1);
    profile.order(step.voter).best_of(leaders.iter().copied()) == Some(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumProperty {
    /// Neither truthful (or abstaining, for lazy voters) nor on a candidate
    /// within the keep window.
    UntruthfulOutsideKeepWindow,
    /// Votes for their least preferred of two or more possible winners.
    LeastPreferredPossibleWinner,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquilibriumViolation {
    pub voter: usize,
    pub property: EquilibriumProperty,
    pub detail: String,
}

/// The keep window of a biased voter: `h_bar(s, k)` under L1, otherwise the
/// possible winners within `k`.
fn keep_window(ballots: &BallotProfile, m: usize, voter: usize, metric: MetricKind, k: Radius) -> Vec<Candidate> {
    match metric {
        MetricKind::L1 => h_bar(&tally(ballots, m), k.floor() as u32),
        _ => possible_winners(ballots, m, voter, crate::dominance::DistanceMetric::new(metric, k)),
    }
}

/// Structural properties every equilibrium has. Fails if `ballots` is not
/// an equilibrium.
pub fn check_equilibrium_properties(
    profile: &PreferenceProfile,
    ballots: &BallotProfile,
    types: &[VoterType],
) -> Result<Vec<EquilibriumViolation>, DynamicsError> {
    if !is_equilibrium(profile, ballots, types)? {
        return Err(DynamicsError::NotAnEquilibrium);
    }
    let m = profile.num_candidates();
    let mut out = Vec::new();
    for (i, vt) in types.iter().enumerate() {
        let prefs = profile.order(i);
        let a = ballots.get(i);
        if let Some(k) = vt.k() {
            let truthful = a == Action::Vote(prefs.top()) || (vt.bias() == Bias::Lazy && a == Action::Abstain);
            if !truthful {
                let window = keep_window(ballots, m, i, vt.metric(), k);
                if !a.candidate().is_some_and(|c| window.contains(&c)) {
                    out.push(EquilibriumViolation {
                        voter: i,
                        property: EquilibriumProperty::UntruthfulOutsideKeepWindow,
                        detail: format!("votes {a}, window {:?}", window),
                    });
                }
            }
        }
        if let Some(c) = a.candidate() {
            let w = possible_winners(ballots, m, i, vt.response_metric());
            if w.len() >= 2 && prefs.worst_of(w.iter().copied()) == Some(c) {
                out.push(EquilibriumViolation {
                    voter: i,
                    property: EquilibriumProperty::LeastPreferredPossibleWinner,
                    detail: format!("votes {c}, possible winners {:?}", w),
                });
            }
        }
    }
    Ok(out)
}
