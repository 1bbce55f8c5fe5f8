use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metric::{AccessibleStateSet, DistanceMetric, MetricKind, Radius};
use super::{possible_winners_in, s_beats, s_dominates};
use crate::election::{tally, Action, BallotProfile, Candidate, PreferenceOrder, ScoreVector};
use crate::error::DominanceError;

/// Lexicographic tie-in preference for a default ballot when the voter sees
/// no way to influence the outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Bias {
    #[default]
    None,
    /// Falls back to the favourite candidate.
    Truth,
    /// Falls back to abstaining.
    Lazy,
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bias::None => "none",
            Bias::Truth => "truth",
            Bias::Lazy => "lazy",
        })
    }
}

impl FromStr for Bias {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Bias::None),
            "truth" => Ok(Bias::Truth),
            "lazy" => Ok(Bias::Lazy),
            other => Err(format!("unknown bias `{other}`")),
        }
    }
}

/// The parameters of a voter's response function: the metric, the radius `r`
/// within which they make strategic moves and, for biased voters, the radius
/// `k` within which they keep a strategic vote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoterType {
    metric: MetricKind,
    r: Radius,
    k: Option<Radius>,
    bias: Bias,
}

impl VoterType {
    /// A plain strategic voter of radius `r`.
    pub fn strategic(metric: MetricKind, r: impl Into<Radius>) -> Self {
        VoterType { metric, r: r.into(), k: None, bias: Bias::None }
    }

    /// A truth- or lazy-biased voter; requires `k > r`.
    pub fn biased(metric: MetricKind, r: impl Into<Radius>, k: impl Into<Radius>, bias: Bias) -> Result<Self, DominanceError> {
        Self::new(metric, r.into(), Some(k.into()), bias)
    }

    pub fn new(metric: MetricKind, r: Radius, k: Option<Radius>, bias: Bias) -> Result<Self, DominanceError> {
        match (bias, k) {
            (Bias::None, Some(_)) => Err(DominanceError::UnexpectedKeepRadius),
            (Bias::None, None) => Ok(VoterType { metric, r, k, bias }),
            (_, Some(k)) if k > r => Ok(VoterType { metric, r, k: Some(k), bias }),
            _ => Err(DominanceError::KeepRadiusTooSmall),
        }
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn r(&self) -> Radius {
        self.r
    }

    pub fn k(&self) -> Option<Radius> {
        self.k
    }

    pub fn bias(&self) -> Bias {
        self.bias
    }

    pub fn response_metric(&self) -> DistanceMetric {
        DistanceMetric::new(self.metric, self.r)
    }

    pub fn keep_metric(&self) -> Option<DistanceMetric> {
        self.k.map(|k| DistanceMetric::new(self.metric, k))
    }

    /// The ballot a biased voter falls back to.
    pub fn default_action(&self, prefs: &PreferenceOrder) -> Option<Action> {
        match self.bias {
            Bias::None => None,
            Bias::Truth => Some(Action::Vote(prefs.top())),
            Bias::Lazy => Some(Action::Abstain),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepType {
    /// Compromise: moving to a less preferred ballot.
    Type1,
    /// Opportunity: moving to a more preferred ballot.
    Type2,
    /// A truth- or lazy-bias fallback.
    BiasMove,
}

/// Compromise or opportunity. Entering from abstention counts as an
/// opportunity and leaving for abstention as a compromise.
pub fn classify_step(prefs: &PreferenceOrder, from: Action, to: Action) -> Result<StepType, DominanceError> {
    match (from, to) {
        _ if from == to => Err(DominanceError::NotAStep),
        (Action::Vote(x), Action::Vote(y)) => {
            Ok(if prefs.prefers(y, x) { StepType::Type2 } else { StepType::Type1 })
        }
        (Action::Abstain, Action::Vote(_)) => Ok(StepType::Type2),
        (Action::Vote(_), Action::Abstain) => Ok(StepType::Type1),
        (Action::Abstain, Action::Abstain) => unreachable!(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Response {
    pub to: Action,
    pub kind: StepType,
}

fn voter_set(ballots: &BallotProfile, m: usize, voter: usize, metric: DistanceMetric) -> AccessibleStateSet {
    AccessibleStateSet::for_voter(ballots, m, voter, metric)
}

/// The candidates that `voter` could make win by voting for them, in some
/// state within `metric` of everyone else's ballots.
pub fn possible_winners(ballots: &BallotProfile, m: usize, voter: usize, metric: DistanceMetric) -> Vec<Candidate> {
    possible_winners_in(&voter_set(ballots, m, voter, metric))
}

/// Candidates that dominate `current` within `set`. Exact: the two filters
/// below only skip candidates whose outcomes coincide with `current`'s in
/// every state.
fn dominating_in(prefs: &PreferenceOrder, set: &AccessibleStateSet, current: Action) -> Vec<Candidate> {
    let winners = possible_winners_in(set);
    if winners.len() < 2 {
        // one possible winner: every ballot leads to it
        return Vec::new();
    }
    let current_can_win = current.candidate().is_some_and(|c| winners.contains(&c));
    prefs
        .ranking()
        .iter()
        .copied()
        .filter(|&c| Action::Vote(c) != current)
        .filter(|c| current_can_win || winners.contains(c))
        .filter(|&c| s_dominates(prefs, set, Action::Vote(c), current))
        .collect()
}

fn best_dominating(prefs: &PreferenceOrder, set: &AccessibleStateSet, current: Action) -> Option<Candidate> {
    let winners = possible_winners_in(set);
    if winners.len() < 2 {
        return None;
    }
    let current_can_win = current.candidate().is_some_and(|c| winners.contains(&c));
    prefs
        .ranking()
        .iter()
        .copied()
        .filter(|&c| Action::Vote(c) != current)
        .filter(|c| current_can_win || winners.contains(c))
        .find(|&c| s_dominates(prefs, set, Action::Vote(c), current))
}

/// The set `D` of candidates dominating the voter's current ballot within
/// radius `r`, most preferred first.
pub fn dominating_set(prefs: &PreferenceOrder, ballots: &BallotProfile, voter: usize, voter_type: &VoterType) -> Vec<Candidate> {
    let set = voter_set(ballots, prefs.num_candidates(), voter, voter_type.response_metric());
    dominating_in(prefs, &set, ballots.get(voter))
}

/// Plain strategic response: the favourite member of the dominating set, or
/// `None` when nothing dominates the current ballot.
pub fn strategic_response(prefs: &PreferenceOrder, ballots: &BallotProfile, voter: usize, voter_type: &VoterType) -> Option<Action> {
    let set = voter_set(ballots, prefs.num_candidates(), voter, voter_type.response_metric());
    best_dominating(prefs, &set, ballots.get(voter)).map(Action::Vote)
}

/// Biased response: a strategic move if there is one; otherwise keep the
/// current ballot if it beats the default within radius `k`; otherwise fall
/// back to the default ballot.
pub fn biased_response(prefs: &PreferenceOrder, ballots: &BallotProfile, voter: usize, voter_type: &VoterType) -> Option<Action> {
    let full = tally(ballots, prefs.num_candidates());
    respond_to_tally(prefs, &full, ballots.get(voter), voter_type).map(|r| r.to)
}

/// The response of `voter` under their type, with the kind of step it is.
pub fn respond(prefs: &PreferenceOrder, ballots: &BallotProfile, voter: usize, voter_type: &VoterType) -> Option<Response> {
    let full = tally(ballots, prefs.num_candidates());
    respond_to_tally(prefs, &full, ballots.get(voter), voter_type)
}

/// Core of [`respond`], taking the full tally so callers can share it
/// across voters.
pub(crate) fn respond_to_tally(
    prefs: &PreferenceOrder,
    full: &ScoreVector,
    current: Action,
    voter_type: &VoterType,
) -> Option<Response> {
    let base = full.without_vote(current);
    let set = AccessibleStateSet::new(base, voter_type.response_metric());
    if let Some(c) = best_dominating(prefs, &set, current) {
        let to = Action::Vote(c);
        let kind = classify_step(prefs, current, to).expect("dominating candidate differs from the ballot");
        return Some(Response { to, kind });
    }
    let default = voter_type.default_action(prefs)?;
    if current == default {
        return None;
    }
    let keep = AccessibleStateSet::new(set.base().clone(), voter_type.keep_metric().expect("biased voters have k"));
    if s_beats(prefs, &keep, current, default) {
        None
    } else {
        Some(Response { to: default, kind: StepType::BiasMove })
    }
}
