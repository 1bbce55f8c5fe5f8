//! Comparison rules on the truthful profile and per-profile outcome
//! statistics.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dynamics::Trace;
use crate::election::{plurality_winner, tally, Candidate, PreferenceProfile, ScoreVector};
use crate::error::MetricsError;
use crate::prefgen::GroundTruth;

/// `m - rank` summed over voters, with rank counted from 1.
pub fn borda_scores(profile: &PreferenceProfile) -> Vec<u64> {
    let m = profile.num_candidates();
    let mut s = vec![0u64; m];
    for o in profile.orders() {
        for (pos, c) in o.ranking().iter().enumerate() {
            s[c.0] += (m - 1 - pos) as u64;
        }
    }
    s
}

/// `w[x][y]`: number of voters preferring `x` to `y`.
pub fn pairwise_matrix(profile: &PreferenceProfile) -> Vec<Vec<u64>> {
    let m = profile.num_candidates();
    let mut w = vec![vec![0u64; m]; m];
    for o in profile.orders() {
        let r = o.ranking();
        for i in 0..m {
            for j in i + 1..m {
                w[r[i].0][r[j].0] += 1;
            }
        }
    }
    w
}

/// Pairwise wins minus losses.
pub fn copeland_scores(profile: &PreferenceProfile) -> Vec<i64> {
    let w = pairwise_matrix(profile);
    let m = w.len();
    (0..m)
        .map(|x| {
            (0..m)
                .filter(|&y| y != x)
                .map(|y| match w[x][y].cmp(&w[y][x]) {
                    std::cmp::Ordering::Greater => 1,
                    std::cmp::Ordering::Less => -1,
                    std::cmp::Ordering::Equal => 0,
                })
                .sum()
        })
        .collect()
}

/// Worst pairwise support against any rival (`n` when there is none).
pub fn maximin_scores(profile: &PreferenceProfile) -> Vec<u64> {
    let w = pairwise_matrix(profile);
    let m = w.len();
    (0..m)
        .map(|x| (0..m).filter(|&y| y != x).map(|y| w[x][y]).min().unwrap_or(profile.num_voters() as u64))
        .collect()
}

/// Highest score, ties to the lowest index.
fn argmax<T: PartialOrd + Copy>(scores: &[T]) -> Candidate {
    let mut best = 0;
    for c in 1..scores.len() {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    Candidate(best)
}

pub fn borda_winner(profile: &PreferenceProfile) -> Candidate {
    argmax(&borda_scores(profile))
}

pub fn copeland_winner(profile: &PreferenceProfile) -> Candidate {
    argmax(&copeland_scores(profile))
}

pub fn maximin_winner(profile: &PreferenceProfile) -> Candidate {
    argmax(&maximin_scores(profile))
}

/// The candidate beating every rival by a strict majority, if any.
pub fn condorcet_winner(profile: &PreferenceProfile) -> Option<Candidate> {
    let w = pairwise_matrix(profile);
    let m = w.len();
    (0..m).find(|&x| (0..m).all(|y| y == x || w[x][y] > w[y][x])).map(Candidate)
}

/// How far the winner's Borda score falls below the best, relative to the
/// largest possible spread `n (m - 1)`. Zero is best.
pub fn social_welfare_rank(profile: &PreferenceProfile, winner: Candidate) -> f64 {
    let m = profile.num_candidates();
    if m < 2 {
        return 0.0;
    }
    let s = borda_scores(profile);
    let best = *s.iter().max().expect("non-empty");
    (best - s[winner.0]) as f64 / (profile.num_voters() * (m - 1)) as f64
}

/// The three strongest candidates of a tally under the tie-breaking order.
pub fn top_three(scores: &ScoreVector) -> (Candidate, Option<Candidate>, Option<Candidate>) {
    let r = scores.ranked();
    (r[0], r.get(1).copied(), r.get(2).copied())
}

/// `a / b`, infinite when `b` is zero.
fn ratio(a: u32, b: u32) -> f64 {
    if b == 0 {
        f64::INFINITY
    } else {
        a as f64 / b as f64
    }
}

/// The observed variables of one preference profile, averaged over runs.
/// Gap fields are infinite when a denominator is zero; optional fields are
/// `None` when undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub num_step: f64,
    pub num_states: f64,
    pub num_winners: f64,
    pub winner_consistency: f64,
    pub plurality_agreement: f64,
    pub borda_agreement: f64,
    pub copland_agreement: f64,
    pub maximin_agreement: f64,
    pub condorcet_agreement: Option<f64>,
    pub social_welfare: f64,
    pub gap1_2: f64,
    pub gap2_3: f64,
    pub total_duverger: f64,
    pub relative_duverger: f64,
    pub winner_ground_rank: Option<f64>,
}

impl ResultRow {
    pub const COLUMNS: [&'static str; 15] = [
        "NumStep",
        "NumStates",
        "NumWinners",
        "WinnerConsistency",
        "PluralityAgreement",
        "BordaAgreement",
        "CoplandAgreement",
        "MaximinAgreement",
        "CondorcetAgreement",
        "SocialWelfare",
        "Gap1-2",
        "Gap2-3",
        "TotalDuverger",
        "RelativeDuverger",
        "WinnerGroundRank",
    ];

    /// Values in [`ResultRow::COLUMNS`] order.
    pub fn values(&self) -> [Option<f64>; 15] {
        [
            Some(self.num_step),
            Some(self.num_states),
            Some(self.num_winners),
            Some(self.winner_consistency),
            Some(self.plurality_agreement),
            Some(self.borda_agreement),
            Some(self.copland_agreement),
            Some(self.maximin_agreement),
            self.condorcet_agreement,
            Some(self.social_welfare),
            Some(self.gap1_2),
            Some(self.gap2_3),
            Some(self.total_duverger),
            Some(self.relative_duverger),
            self.winner_ground_rank,
        ]
    }

    /// Column-wise mean. Optional columns average over rows where present;
    /// an infinite gap makes the mean infinite.
    pub fn mean(rows: &[ResultRow]) -> Option<ResultRow> {
        if rows.is_empty() {
            return None;
        }
        let k = rows.len() as f64;
        let avg = |f: fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / k;
        let avg_opt = |f: fn(&ResultRow) -> Option<f64>| {
            let v: Vec<f64> = rows.iter().filter_map(f).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        Some(ResultRow {
            num_step: avg(|r| r.num_step),
            num_states: avg(|r| r.num_states),
            num_winners: avg(|r| r.num_winners),
            winner_consistency: avg(|r| r.winner_consistency),
            plurality_agreement: avg(|r| r.plurality_agreement),
            borda_agreement: avg(|r| r.borda_agreement),
            copland_agreement: avg(|r| r.copland_agreement),
            maximin_agreement: avg(|r| r.maximin_agreement),
            condorcet_agreement: avg_opt(|r| r.condorcet_agreement),
            social_welfare: avg(|r| r.social_welfare),
            gap1_2: avg(|r| r.gap1_2),
            gap2_3: avg(|r| r.gap2_3),
            total_duverger: avg(|r| r.total_duverger),
            relative_duverger: avg(|r| r.relative_duverger),
            winner_ground_rank: avg_opt(|r| r.winner_ground_rank),
        })
    }
}

/// Summarizes repeated runs on one profile.
pub fn aggregate(profile: &PreferenceProfile, traces: &[Trace], ground: Option<&GroundTruth>) -> Result<ResultRow, MetricsError> {
    if traces.is_empty() {
        return Err(MetricsError::NoTraces);
    }
    let m = profile.num_candidates();
    if let Some(g) = ground {
        if g.values.len() != m {
            return Err(MetricsError::GroundTruthSize { expected: m, found: g.values.len() });
        }
    }
    let n = profile.num_voters() as f64;
    let k = traces.len() as f64;
    let truthful = plurality_winner(&tally(&profile.truthful_ballots(), m));
    let borda = borda_winner(profile);
    let copeland = copeland_winner(profile);
    let maximin = maximin_winner(profile);
    let condorcet = condorcet_winner(profile);
    let ground_ranking = ground.map(|g| g.ranking());

    let mut states = HashSet::new();
    let mut winner_counts: HashMap<Candidate, usize> = HashMap::new();
    let (mut steps, mut welfare, mut gap12, mut gap23, mut total_dv, mut rel_dv, mut ground_rank) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut agree = [0usize; 5];

    for t in traces {
        let s = tally(&t.final_ballots, m);
        let (c1, c2, c3) = top_three(&s);
        let s1 = s.get(c1);
        let s2 = c2.map_or(0, |c| s.get(c));
        let s3 = c3.map_or(0, |c| s.get(c));
        states.insert(&t.final_ballots);
        *winner_counts.entry(c1).or_default() += 1;
        for (slot, rule) in [truthful, borda, copeland, maximin].into_iter().enumerate() {
            agree[slot] += usize::from(c1 == rule);
        }
        agree[4] += usize::from(Some(c1) == condorcet);
        steps += t.num_ticks() as f64;
        welfare += social_welfare_rank(profile, c1);
        gap12 += ratio(s1, s2);
        gap23 += ratio(s2, s3);
        total_dv += f64::from(u8::from(s3 == 0));
        rel_dv += f64::from(s1 + s2) / n;
        if let Some(r) = &ground_ranking {
            ground_rank += r.iter().position(|&x| x == c1).expect("candidate in range") as f64;
        }
    }

    let frac = |x: usize| x as f64 / k;
    Ok(ResultRow {
        num_step: steps / k,
        num_states: states.len() as f64,
        num_winners: winner_counts.len() as f64,
        winner_consistency: frac(*winner_counts.values().max().expect("non-empty")),
        plurality_agreement: frac(agree[0]),
        borda_agreement: frac(agree[1]),
        copland_agreement: frac(agree[2]),
        maximin_agreement: frac(agree[3]),
        condorcet_agreement: condorcet.map(|_| frac(agree[4])),
        social_welfare: welfare / k,
        gap1_2: gap12 / k,
        gap2_3: gap23 / k,
        total_duverger: total_dv / k,
        relative_duverger: rel_dv / k,
        winner_ground_rank: ground_ranking.map(|_| ground_rank / k),
    })
}
