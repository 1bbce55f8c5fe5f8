//! Local dominance: how a voter who only knows the tally up to some distance
//! decides whether to change their ballot.
//!
//! Action `b` *beats* action `a` within a set of states when some state makes
//! the outcome under `b` strictly better for the voter than the outcome under
//! `a`; `b` *dominates* `a` when it beats `a` and `a` does not beat `b`.
//!
//! The beats relation is decided without enumerating states. Adding one
//! ballot to `x` changes the winner only to `x`, so a strict difference in
//! outcomes always has one of the two actions winning. For each such pair of
//! outcomes the winning conditions are difference constraints between scores,
//! which [`AccessibleStateSet::admits`] checks per metric. The enumeration in
//! [`AccessibleStateSet::enumerate`] is kept for testing this path.

mod metric;
mod response;

pub use metric::{AccessibleStateSet, DistanceMetric, MetricKind, Radius, DEFAULT_ENUMERATION_BUDGET};
pub use response::{
    biased_response, classify_step, dominating_set, possible_winners, respond, strategic_response, Bias, Response,
    StepType, VoterType,
};
pub(crate) use response::respond_to_tally;

use crate::election::{beats, winner_index, Action, Candidate, PreferenceOrder, ScoreVector};
use crate::error::DominanceError;

/// Whether some state in `set` gives the voter a strictly better winner when
/// they cast `b` than when they cast `a`.
pub fn s_beats(prefs: &PreferenceOrder, set: &AccessibleStateSet, b: Action, a: Action) -> bool {
    if b == a {
        return false;
    }
    let m = set.base().num_candidates();
    let ind = |x: bool| i64::from(x);
    // f(s'+b) = y  <=>  s'(v) - s'(y) <= [b=y] - [b=v] - [v<y]  for all v != y
    let c_b = |y: usize, v: usize| ind(b.is_vote_for(y)) - ind(b.is_vote_for(v)) - ind(v < y);
    let c_a = |z: usize, v: usize| ind(a.is_vote_for(z)) - ind(a.is_vote_for(v)) - ind(v < z);

    for y in 0..m {
        for z in 0..m {
            if y == z || !prefs.prefers(Candidate(y), Candidate(z)) {
                continue;
            }
            // outcomes differ only if one of the two ballots wins
            if !(b.is_vote_for(y) || a.is_vote_for(z)) {
                continue;
            }
            // with t = s'(y) and s'(z) = t + delta
            let lo = -c_a(z, y);
            let hi = c_b(y, z);
            for delta in lo..=hi {
                let pins = [(y, 0), (z, delta)];
                if set.admits(&pins, |v| c_b(y, v).min(delta + c_a(z, v))) {
                    return true;
                }
            }
        }
    }
    false
}

/// `b` beats `a` and `a` does not beat `b`.
pub fn s_dominates(prefs: &PreferenceOrder, set: &AccessibleStateSet, b: Action, a: Action) -> bool {
    s_beats(prefs, set, b, a) && !s_beats(prefs, set, a, b)
}

/// The least score (in the tie-break-aware sense, with ties resolved as if
/// against the leader) that still makes a candidate a possible winner, given
/// the leader's score `winner_score`.
pub fn threshold_beta(kind: MetricKind, r: Radius, winner_score: u32) -> Result<i64, DominanceError> {
    let s = winner_score as i64;
    match kind {
        MetricKind::L1 => Ok(s - r.floor() as i64 - 1),
        MetricKind::LInf => Ok(s - 2 * r.floor() as i64 - 1),
        MetricKind::Multiplicative => {
            let (p, q) = (r.numer() as u128, r.denom() as u128);
            let once = (winner_score as u128 * q).div_ceil(q + p);
            let twice = (once * q).div_ceil(q + p);
            Ok(twice as i64 - 1)
        }
        MetricKind::EarthMover => Err(DominanceError::UnsupportedMetric),
    }
}

/// Candidates that win in at least one state of `set` when given one more
/// vote.
pub fn possible_winners_in(set: &AccessibleStateSet) -> Vec<Candidate> {
    let base = set.base().counts();
    let m = base.len();
    let metric = set.metric();
    match metric.kind {
        MetricKind::L1 | MetricKind::LInf => {
            let leader = winner_index(base);
            let beta = threshold_beta(metric.kind, metric.radius, base[leader]).expect("threshold metric");
            (0..m)
                .filter(|&c| {
                    let s = base[c] as i64;
                    c == leader || s > beta || (s == beta && c < leader)
                })
                .map(Candidate)
                .collect()
        }
        MetricKind::Multiplicative => {
            // Each coordinate moves independently, so the leader-only threshold
            // is not enough: two rivals can shrink to the same score.
            (0..m)
                .filter(|&c| set.admits(&[(c, 0)], |v| 1 - i64::from(v < c)))
                .map(Candidate)
                .collect()
        }
        MetricKind::EarthMover => {
            let budget = metric.radius.floor();
            (0..m).filter(|&c| earth_mover_can_win(base, c, budget)).map(Candidate).collect()
        }
    }
}

/// Moves up to `budget` ballots to `c`, always from its strongest rival, and
/// reports whether `c` plus one more vote wins at some point.
fn earth_mover_can_win(base: &[u32], c: usize, budget: u64) -> bool {
    let mut s = base.to_vec();
    let mut moved = 0u64;
    loop {
        s[c] += 1;
        let wins = winner_index(&s) == c;
        s[c] -= 1;
        if wins {
            return true;
        }
        if moved == budget {
            return false;
        }
        let rival = (0..s.len())
            .filter(|&v| v != c && s[v] > 0)
            .fold(None, |best: Option<usize>, v| match best {
                Some(b) if beats(&s, b, v) => Some(b),
                _ => Some(v),
            });
        match rival {
            Some(v) => {
                s[v] -= 1;
                s[c] += 1;
                moved += 1;
            }
            None => return false,
        }
    }
}

/// Brute-force reference implementations over enumerated states.
pub mod oracle {
    use super::*;
    use crate::election::plurality_winner;

    pub fn s_beats(prefs: &PreferenceOrder, states: &[ScoreVector], b: Action, a: Action) -> bool {
        states.iter().any(|s| {
            let yb = plurality_winner(&s.with_vote(b));
            let ya = plurality_winner(&s.with_vote(a));
            prefs.prefers(yb, ya)
        })
    }

    pub fn s_dominates(prefs: &PreferenceOrder, states: &[ScoreVector], b: Action, a: Action) -> bool {
        s_beats(prefs, states, b, a) && !s_beats(prefs, states, a, b)
    }

    pub fn possible_winners(states: &[ScoreVector], m: usize) -> Vec<Candidate> {
        (0..m)
            .map(Candidate)
            .filter(|&c| states.iter().any(|s| plurality_winner(&s.with_vote(Action::Vote(c))) == c))
            .collect()
    }

    pub fn dominating_set(prefs: &PreferenceOrder, states: &[ScoreVector], current: Action) -> Vec<Candidate> {
        let m = prefs.num_candidates();
        (0..m)
            .map(Candidate)
            .filter(|&c| s_dominates(prefs, states, Action::Vote(c), current))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(base: &[u32], metric: DistanceMetric) -> AccessibleStateSet {
        AccessibleStateSet::new(ScoreVector::new(base.to_vec()), metric)
    }

    const A: Action = Action::Vote(Candidate(0));
    const B: Action = Action::Vote(Candidate(1));
    const C: Action = Action::Vote(Candidate(2));

    #[test]
    fn running_example_voter_prefers_b_over_futile_c() {
        // v ranks c > b > a; their own c-ballot is removed from (45, 40, 15)
        let v = PreferenceOrder::from_indices(&[2, 1, 0]).unwrap();
        let s = set(&[45, 40, 14], DistanceMetric::l1(10));
        assert!(s_beats(&v, &s, B, C));
        assert!(s_dominates(&v, &s, B, C));
        assert!(!s_beats(&v, &s, A, C));
        assert!(!s_dominates(&v, &s, A, C));
    }

    #[test]
    fn beats_is_irreflexive_and_needs_pivotality() {
        let v = PreferenceOrder::from_indices(&[2, 1, 0]).unwrap();
        let s = set(&[5, 2, 1], DistanceMetric::l1(0));
        for x in [A, B, C, Action::Abstain] {
            assert!(!s_beats(&v, &s, x, x));
            assert!(!s_dominates(&v, &s, x, x));
        }
        // nobody is one vote away from the leader, so no ballot matters
        assert!(!s_beats(&v, &s, B, C));
        assert!(!s_beats(&v, &s, C, B));
    }

    #[test]
    fn threshold_closed_forms() {
        assert_eq!(threshold_beta(MetricKind::L1, Radius::integer(10), 45), Ok(34));
        assert_eq!(threshold_beta(MetricKind::L1, Radius::integer(0), 5), Ok(4));
        assert_eq!(threshold_beta(MetricKind::LInf, Radius::integer(2), 10), Ok(5));
        assert_eq!(threshold_beta(MetricKind::Multiplicative, Radius::integer(1), 8), Ok(1));
        assert_eq!(
            threshold_beta(MetricKind::EarthMover, Radius::integer(1), 8),
            Err(DominanceError::UnsupportedMetric)
        );
    }

    #[test]
    fn threshold_is_weakly_increasing() {
        for kind in [MetricKind::L1, MetricKind::LInf, MetricKind::Multiplicative] {
            for r in [Radius::integer(0), Radius::ratio(1, 3), Radius::integer(1), Radius::integer(4)] {
                let mut prev = i64::MIN;
                for s in 0..200 {
                    let b = threshold_beta(kind, r, s).unwrap();
                    assert!(b >= prev, "{kind} r={r} s={s}");
                    prev = b;
                }
            }
        }
    }

    #[test]
    fn multiplicative_leader_threshold_misses_shrinking_rivals() {
        // Rival 0 (2 votes) and leader 2 (3 votes) both shrink to 2 under a
        // factor of 3/2, and rival 0 wins that tie against candidate 1, whose
        // score 1 can grow only to 1. The leader-only threshold says
        // ceil(ceil(3/1.5)/1.5) - 1 = 1 and would admit candidate 1.
        let r = Radius::ratio(1, 2);
        let s = set(&[2, 1, 3], DistanceMetric::multiplicative(r));
        assert_eq!(threshold_beta(MetricKind::Multiplicative, r, 3), Ok(1));
        let states = s.enumerate(DEFAULT_ENUMERATION_BUDGET).unwrap();
        let exact = oracle::possible_winners(&states, 3);
        assert!(!exact.contains(&Candidate(1)));
        assert_eq!(possible_winners_in(&s), exact);
    }

    #[test]
    fn possible_winner_examples() {
        let s = set(&[45, 40, 14], DistanceMetric::l1(10));
        assert_eq!(possible_winners_in(&s), vec![Candidate(0), Candidate(1)]);
        let s = set(&[5, 3, 2], DistanceMetric::l1(0));
        assert_eq!(possible_winners_in(&s), vec![Candidate(0)]);
        // radius n: everyone
        let s = set(&[6, 3, 0], DistanceMetric::l1(10));
        assert_eq!(possible_winners_in(&s).len(), 3);
    }

    #[test]
    fn earth_mover_takes_from_the_strongest() {
        // c=2 needs two ballots moved from a
        assert!(!earth_mover_can_win(&[5, 1, 2], 2, 1));
        assert!(earth_mover_can_win(&[5, 1, 2], 2, 2));
        assert!(earth_mover_can_win(&[0, 0, 0], 1, 0));
    }
}
