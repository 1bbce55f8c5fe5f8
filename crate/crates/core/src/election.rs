//! Plurality election primitives.
//!
//! Candidates are identified by their index; the fixed tie-breaking priority
//! is ascending index order, so candidate `0` wins every tie it takes part
//! in. Raw vote counts ([`ScoreVector`]) are kept separate from the
//! tie-break-aware comparison ([`ScoreVector::beats`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ElectionError;

/// A candidate, identified by its position in the tie-breaking order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Candidate(pub usize);

impl Candidate {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // a, b, c, ... for small elections; numeric past z.
        if self.0 < 26 {
            write!(f, "{}", (b'a' + self.0 as u8) as char)
        } else {
            write!(f, "#{}", self.0)
        }
    }
}

/// The ballot a voter casts: a single candidate, or nothing at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Vote(Candidate),
    Abstain,
}

impl Action {
    pub fn vote(index: usize) -> Self {
        Action::Vote(Candidate(index))
    }

    pub fn candidate(self) -> Option<Candidate> {
        match self {
            Action::Vote(c) => Some(c),
            Action::Abstain => None,
        }
    }

    #[inline]
    pub(crate) fn is_vote_for(self, c: usize) -> bool {
        matches!(self, Action::Vote(Candidate(x)) if x == c)
    }
}

impl From<Candidate> for Action {
    fn from(c: Candidate) -> Self {
        Action::Vote(c)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Vote(c) => write!(f, "{c}"),
            Action::Abstain => f.write_str("⊥"),
        }
    }
}

/// A strict total order over all `m` candidates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PreferenceOrder {
    ranking: Vec<Candidate>,
    /// `rank[c]` is the 1-based rank of candidate `c`.
    rank: Vec<u32>,
}

impl PreferenceOrder {
    /// Builds an order from a ranking, most preferred first. The ranking must
    /// be a permutation of `0..ranking.len()`.
    pub fn new(ranking: Vec<Candidate>) -> Result<Self, ElectionError> {
        let m = ranking.len();
        if m == 0 {
            return Err(ElectionError::NoCandidates);
        }
        let mut rank = vec![0u32; m];
        for (pos, c) in ranking.iter().enumerate() {
            if c.0 >= m {
                return Err(ElectionError::CandidateOutOfRange { candidate: c.0, m });
            }
            if rank[c.0] != 0 {
                return Err(ElectionError::DuplicateCandidate(c.0));
            }
            rank[c.0] = pos as u32 + 1;
        }
        Ok(PreferenceOrder { ranking, rank })
    }

    /// Convenience constructor from raw indices.
    pub fn from_indices(indices: &[usize]) -> Result<Self, ElectionError> {
        Self::new(indices.iter().copied().map(Candidate).collect())
    }

    pub fn num_candidates(&self) -> usize {
        self.ranking.len()
    }

    /// Candidates from most to least preferred.
    pub fn ranking(&self) -> &[Candidate] {
        &self.ranking
    }

    /// The 1-based rank of `c` (1 = favourite).
    #[inline]
    pub fn rank(&self, c: Candidate) -> u32 {
        self.rank[c.0]
    }

    pub fn top(&self) -> Candidate {
        self.ranking[0]
    }

    pub fn bottom(&self) -> Candidate {
        self.ranking[self.ranking.len() - 1]
    }

    /// `true` iff `x` is strictly preferred to `y`.
    #[inline]
    pub fn prefers(&self, x: Candidate, y: Candidate) -> bool {
        self.rank[x.0] < self.rank[y.0]
    }

    /// The most preferred member of `set`, if any.
    pub fn best_of<I: IntoIterator<Item = Candidate>>(&self, set: I) -> Option<Candidate> {
        set.into_iter().min_by_key(|&c| self.rank(c))
    }

    /// The least preferred member of `set`, if any.
    pub fn worst_of<I: IntoIterator<Item = Candidate>>(&self, set: I) -> Option<Candidate> {
        set.into_iter().max_by_key(|&c| self.rank(c))
    }
}

/// `n` preference orders over a common set of `m` candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceProfile {
    orders: Vec<PreferenceOrder>,
    m: usize,
}

impl PreferenceProfile {
    pub fn new(orders: Vec<PreferenceOrder>) -> Result<Self, ElectionError> {
        let first = orders.first().ok_or(ElectionError::NoVoters)?;
        let m = first.num_candidates();
        if let Some(bad) = orders.iter().position(|o| o.num_candidates() != m) {
            return Err(ElectionError::MismatchedOrder {
                voter: bad,
                expected: m,
                found: orders[bad].num_candidates(),
            });
        }
        Ok(PreferenceProfile { orders, m })
    }

    /// Builds a profile from raw rankings (most preferred first).
    pub fn from_rankings(rankings: &[Vec<usize>]) -> Result<Self, ElectionError> {
        let orders = rankings
            .iter()
            .map(|r| PreferenceOrder::from_indices(r))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(orders)
    }

    pub fn num_voters(&self) -> usize {
        self.orders.len()
    }

    pub fn num_candidates(&self) -> usize {
        self.m
    }

    pub fn orders(&self) -> &[PreferenceOrder] {
        &self.orders
    }

    pub fn order(&self, voter: usize) -> &PreferenceOrder {
        &self.orders[voter]
    }

    /// Everyone votes for their favourite.
    pub fn truthful_ballots(&self) -> BallotProfile {
        BallotProfile::new(self.orders.iter().map(|o| Action::Vote(o.top())).collect())
    }
}

/// The current vote of every voter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BallotProfile {
    votes: Vec<Action>,
}

impl BallotProfile {
    pub fn new(votes: Vec<Action>) -> Self {
        BallotProfile { votes }
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn votes(&self) -> &[Action] {
        &self.votes
    }

    pub fn get(&self, voter: usize) -> Action {
        self.votes[voter]
    }

    pub fn set(&mut self, voter: usize, action: Action) {
        self.votes[voter] = action;
    }

    /// Checks that every vote names one of `m` candidates.
    pub fn validate(&self, m: usize) -> Result<(), ElectionError> {
        for a in &self.votes {
            if let Action::Vote(c) = a {
                if c.0 >= m {
                    return Err(ElectionError::CandidateOutOfRange { candidate: c.0, m });
                }
            }
        }
        Ok(())
    }
}

/// Per-candidate vote counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector {
    counts: Vec<u32>,
}

impl ScoreVector {
    pub fn new(counts: Vec<u32>) -> Self {
        ScoreVector { counts }
    }

    pub fn zeros(m: usize) -> Self {
        ScoreVector { counts: vec![0; m] }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn num_candidates(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn get(&self, c: Candidate) -> u32 {
        self.counts[c.0]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&x| x as u64).sum()
    }

    /// Tie-break-aware comparison: `x` ranks above `y` when it has more votes,
    /// or the same number of votes and a lower index.
    #[inline]
    pub fn beats(&self, x: Candidate, y: Candidate) -> bool {
        beats(&self.counts, x.0, y.0)
    }

    /// The scores after one extra ballot.
    pub fn with_vote(&self, action: Action) -> ScoreVector {
        let mut out = self.clone();
        if let Action::Vote(c) = action {
            out.counts[c.0] += 1;
        }
        out
    }

    /// The scores with one ballot removed. Removing a vote from a candidate
    /// with zero votes is a caller bug.
    pub fn without_vote(&self, action: Action) -> ScoreVector {
        let mut out = self.clone();
        if let Action::Vote(c) = action {
            out.counts[c.0] -= 1;
        }
        out
    }

    /// Candidates ordered from strongest to weakest under the tie-break-aware
    /// comparison.
    pub fn ranked(&self) -> Vec<Candidate> {
        let mut order: Vec<Candidate> = (0..self.counts.len()).map(Candidate).collect();
        order.sort_by(|a, b| self.counts[b.0].cmp(&self.counts[a.0]).then(a.0.cmp(&b.0)));
        order
    }
}

impl fmt::Display for ScoreVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[inline]
pub(crate) fn beats(counts: &[u32], x: usize, y: usize) -> bool {
    counts[x] > counts[y] || (counts[x] == counts[y] && x < y)
}

/// Index of the Plurality winner of raw counts.
#[inline]
pub(crate) fn winner_index(counts: &[u32]) -> usize {
    let mut best = 0;
    for c in 1..counts.len() {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

/// Counts the ballots; abstentions contribute nothing.
pub fn tally(ballots: &BallotProfile, m: usize) -> ScoreVector {
    let mut counts = vec![0u32; m];
    for a in ballots.votes() {
        if let Action::Vote(c) = a {
            counts[c.0] += 1;
        }
    }
    ScoreVector { counts }
}

/// The candidate with the most votes, ties going to the lowest index.
pub fn plurality_winner(scores: &ScoreVector) -> Candidate {
    Candidate(winner_index(&scores.counts))
}

/// Adds one ballot to `scores`; abstention is a no-op.
pub fn with_vote(scores: &ScoreVector, action: Action) -> ScoreVector {
    scores.with_vote(action)
}

/// The least number of extra votes `c` needs to become the winner.
pub fn min_votes_to_win(scores: &ScoreVector, c: Candidate) -> u32 {
    let w = winner_index(&scores.counts);
    if w == c.0 {
        return 0;
    }
    // c has to overtake the current winner, who also ranks above every other
    // rival; a tie only suffices when c has priority.
    scores.counts[w] - scores.counts[c.0] + u32::from(c.0 > w)
}

/// Candidates that need at most `w` more votes to win. Always contains the
/// current winner.
pub fn h_bar(scores: &ScoreVector, w: u32) -> Vec<Candidate> {
    (0..scores.num_candidates())
        .map(Candidate)
        .filter(|&c| min_votes_to_win(scores, c) <= w)
        .collect()
}
