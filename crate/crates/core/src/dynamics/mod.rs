//! The iterative game: schedulers, the step loop and equilibrium checks.

mod verify;

use std::collections::{BTreeMap, HashMap};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dominance::{respond_to_tally, Response, StepType, VoterType};
use crate::election::{tally, Action, BallotProfile, PreferenceOrder, PreferenceProfile, ScoreVector};
use crate::error::{DynamicsError, ElectionError};

pub use verify::{
    check_equilibrium_properties, chunk_boundaries, chunk_potential, is_type_a_bias_move, leader_set, verify_trace_invariants,
    EquilibriumProperty, EquilibriumViolation, InvariantKind, Violation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    SingletonUniform,
    GroupRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheduler {
    pub kind: SchedulerKind,
    /// Largest group; `None` means half the electorate (at least one).
    pub group_cap: Option<usize>,
    /// Restrict a group to Type2 movers whenever any are pending.
    pub opportunity_priority: bool,
    /// Chance that a group tick selects a single voter.
    pub p_singleton: f64,
}

impl Scheduler {
    pub const DEFAULT_P_SINGLETON: f64 = 0.2;

    pub fn singleton() -> Self {
        Scheduler {
            kind: SchedulerKind::SingletonUniform,
            group_cap: None,
            opportunity_priority: false,
            p_singleton: 1.0,
        }
    }

    pub fn group(group_cap: Option<usize>, opportunity_priority: bool) -> Self {
        Scheduler {
            kind: SchedulerKind::GroupRandom,
            group_cap,
            opportunity_priority,
            p_singleton: Self::DEFAULT_P_SINGLETON,
        }
    }

    pub fn with_p_singleton(mut self, p: f64) -> Self {
        self.p_singleton = p.clamp(0.0, 1.0);
        self
    }

    fn cap(&self, n: usize) -> usize {
        self.group_cap.unwrap_or((n / 2).max(1))
    }
}

impl Default for Scheduler {
    fn default() -> Self {
        Scheduler::singleton()
    }
}

/// One voter's move. Voters selected together share `time` and both score
/// vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: usize,
    pub voter: usize,
    pub from: Action,
    pub to: Action,
    pub step_type: StepType,
    pub scores_before: ScoreVector,
    pub scores_after: ScoreVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub initial: BallotProfile,
    pub steps: Vec<StepRecord>,
    #[serde(rename = "final")]
    pub final_ballots: BallotProfile,
    pub converged: bool,
}

impl Trace {
    /// Number of scheduler ticks (a group move counts once).
    pub fn num_ticks(&self) -> usize {
        self.steps.last().map_or(0, |s| s.time + 1)
    }

    /// Steps grouped by tick.
    pub fn ticks(&self) -> impl Iterator<Item = &[StepRecord]> {
        self.steps.chunk_by(|a, b| a.time == b.time)
    }

    /// Ticks that moved exactly one voter.
    pub fn num_singleton_ticks(&self) -> usize {
        self.ticks().filter(|t| t.len() == 1).count()
    }

    /// Ballot profiles before every tick, followed by the final one.
    pub fn states(&self) -> Vec<BallotProfile> {
        let mut out = vec![self.initial.clone()];
        let mut cur = self.initial.clone();
        for tick in self.ticks() {
            for s in tick {
                cur.set(s.voter, s.to);
            }
            out.push(cur.clone());
        }
        out
    }

    /// Replays the steps on the initial ballots.
    pub fn replay(&self) -> BallotProfile {
        let mut cur = self.initial.clone();
        for s in &self.steps {
            cur.set(s.voter, s.to);
        }
        cur
    }

    /// How many times each voter moved.
    pub fn moves_per_voter(&self) -> Vec<usize> {
        let mut out = vec![0; self.initial.len()];
        for s in &self.steps {
            out[s.voter] += 1;
        }
        out
    }
}

/// Responses memoized per (voter class, current ballot) within one state.
/// Voters with equal preferences and type respond identically.
struct ResponseCache<'a> {
    profile: &'a PreferenceProfile,
    types: &'a [VoterType],
    class_of: Vec<usize>,
    memo: HashMap<(usize, Action), Option<Response>>,
}

impl<'a> ResponseCache<'a> {
    fn new(profile: &'a PreferenceProfile, types: &'a [VoterType]) -> Self {
        let mut ids: HashMap<(&PreferenceOrder, VoterType), usize> = HashMap::new();
        let class_of = (0..profile.num_voters())
            .map(|i| {
                let next = ids.len();
                *ids.entry((profile.order(i), types[i])).or_insert(next)
            })
            .collect();
        ResponseCache { profile, types, class_of, memo: HashMap::new() }
    }

    fn reset(&mut self) {
        self.memo.clear();
    }

    fn get(&mut self, full: &ScoreVector, ballots: &BallotProfile, voter: usize) -> Option<Response> {
        let current = ballots.get(voter);
        let key = (self.class_of[voter], current);
        if let Some(r) = self.memo.get(&key) {
            return *r;
        }
        let r = respond_to_tally(self.profile.order(voter), full, current, &self.types[voter]);
        self.memo.insert(key, r);
        r
    }
}

fn check_inputs(profile: &PreferenceProfile, ballots: &BallotProfile, types: &[VoterType]) -> Result<(), DynamicsError> {
    let n = profile.num_voters();
    if types.len() != n {
        return Err(DynamicsError::TypeCount { types: types.len(), voters: n });
    }
    if ballots.len() != n {
        return Err(ElectionError::BallotCount { ballots: ballots.len(), voters: n }.into());
    }
    ballots.validate(profile.num_candidates())?;
    Ok(())
}

/// Every voter's response to the current ballots, each computed as if they
/// were the only one moving.
pub fn pending_moves(
    profile: &PreferenceProfile,
    ballots: &BallotProfile,
    types: &[VoterType],
) -> Result<BTreeMap<usize, Response>, DynamicsError> {
    check_inputs(profile, ballots, types)?;
    let full = tally(ballots, profile.num_candidates());
    let mut cache = ResponseCache::new(profile, types);
    Ok((0..profile.num_voters())
        .filter_map(|i| cache.get(&full, ballots, i).map(|r| (i, r)))
        .collect())
}

pub fn is_equilibrium(profile: &PreferenceProfile, ballots: &BallotProfile, types: &[VoterType]) -> Result<bool, DynamicsError> {
    check_inputs(profile, ballots, types)?;
    let full = tally(ballots, profile.num_candidates());
    let mut cache = ResponseCache::new(profile, types);
    Ok((0..profile.num_voters()).all(|i| cache.get(&full, ballots, i).is_none()))
}

/// A step bound well above every proved bound: `10 n m`.
pub fn default_max_steps(n: usize, m: usize) -> usize {
    (10 * n * m).max(1)
}

/// Runs the game from `initial` until no voter has a move or `max_steps`
/// ticks have passed.
pub fn run_to_equilibrium(
    profile: &PreferenceProfile,
    types: &[VoterType],
    initial: &BallotProfile,
    scheduler: &Scheduler,
    seed: u64,
    max_steps: usize,
) -> Result<Trace, DynamicsError> {
    check_inputs(profile, initial, types)?;
    if max_steps == 0 {
        return Err(DynamicsError::ZeroStepBudget);
    }
    if scheduler.group_cap == Some(0) {
        return Err(DynamicsError::ZeroGroupCap);
    }
    let n = profile.num_voters();
    let m = profile.num_candidates();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = ResponseCache::new(profile, types);
    let mut ballots = initial.clone();
    let mut scores = tally(&ballots, m);
    let mut steps = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    let mut converged = false;

    for time in 0..=max_steps {
        cache.reset();
        let selected: Vec<(usize, Response)> = match scheduler.kind {
            SchedulerKind::SingletonUniform => {
                // the first mover in a fresh random order is uniform over movers
                order.shuffle(&mut rng);
                order
                    .iter()
                    .find_map(|&i| cache.get(&scores, &ballots, i).map(|r| (i, r)))
                    .into_iter()
                    .collect()
            }
            SchedulerKind::GroupRandom => {
                let pending: Vec<(usize, Response)> =
                    (0..n).filter_map(|i| cache.get(&scores, &ballots, i).map(|r| (i, r))).collect();
                select_group(pending, scheduler, n, &mut rng)
            }
        };
        if selected.is_empty() {
            converged = true;
            break;
        }
        if time == max_steps {
            break;
        }
        let before = scores.clone();
        let from: Vec<Action> = selected.iter().map(|&(i, _)| ballots.get(i)).collect();
        for &(i, r) in &selected {
            ballots.set(i, r.to);
        }
        scores = tally(&ballots, m);
        for ((i, r), from) in selected.into_iter().zip(from) {
            steps.push(StepRecord {
                time,
                voter: i,
                from,
                to: r.to,
                step_type: r.kind,
                scores_before: before.clone(),
                scores_after: scores.clone(),
            });
        }
    }

    Ok(Trace { initial: initial.clone(), steps, final_ballots: ballots, converged })
}

fn select_group(
    mut pending: Vec<(usize, Response)>,
    scheduler: &Scheduler,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, Response)> {
    if pending.is_empty() {
        return pending;
    }
    if scheduler.opportunity_priority && pending.iter().any(|(_, r)| r.kind == StepType::Type2) {
        pending.retain(|(_, r)| r.kind == StepType::Type2);
    }
    let size = if rng.gen_bool(scheduler.p_singleton) {
        1
    } else {
        rng.gen_range(1..=scheduler.cap(n).min(pending.len()))
    };
    let mut picked: Vec<usize> = index::sample(rng, pending.len(), size).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|k| pending[k]).collect()
}

/// All candidate ballots for one voter: each candidate, then abstention.
pub fn all_actions(m: usize) -> impl Iterator<Item = Action> {
    (0..m).map(Action::vote).chain(std::iter::once(Action::Abstain))
}
