//! Seeded preference-profile generators and a PrefLib reader.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::election::{Candidate, PreferenceOrder, PreferenceProfile};
use crate::error::{PrefGenError, PreflibError};

/// Floor on Plackett-Luce weights so every candidate can be drawn.
pub const PLACKETT_LUCE_MIN_WEIGHT: f64 = 1e-3;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_size(n: usize, m: usize) -> Result<(), PrefGenError> {
    if n == 0 {
        return Err(PrefGenError::NoVoters);
    }
    if m == 0 {
        return Err(PrefGenError::NoCandidates);
    }
    Ok(())
}

fn order(ranking: Vec<usize>) -> PreferenceOrder {
    PreferenceOrder::new(ranking.into_iter().map(Candidate).collect()).expect("generated a permutation")
}

fn profile(orders: Vec<PreferenceOrder>) -> PreferenceProfile {
    PreferenceProfile::new(orders).expect("generated a non-empty profile")
}

fn shuffled(m: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..m).collect();
    v.shuffle(rng);
    v
}

/// Every voter draws an order uniformly from all `m!`.
pub fn gen_impartial_culture(n: usize, m: usize, seed: u64) -> Result<PreferenceProfile, PrefGenError> {
    check_size(n, m)?;
    let mut rng = rng(seed);
    Ok(profile((0..n).map(|_| order(shuffled(m, &mut rng))).collect()))
}

/// A single-peaked profile together with the geometry that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SinglePeaked {
    pub profile: PreferenceProfile,
    pub positions: Vec<f64>,
    pub ideals: Vec<f64>,
}

impl SinglePeaked {
    /// Candidates sorted by position, ties by index.
    pub fn axis(&self) -> Vec<Candidate> {
        let mut c: Vec<usize> = (0..self.positions.len()).collect();
        c.sort_by(|&a, &b| self.positions[a].total_cmp(&self.positions[b]).then(a.cmp(&b)));
        c.into_iter().map(Candidate).collect()
    }

    /// Favourite of the voter whose ideal point is the (lower) median.
    pub fn median_candidate(&self) -> Candidate {
        let mut v: Vec<usize> = (0..self.ideals.len()).collect();
        v.sort_by(|&a, &b| self.ideals[a].total_cmp(&self.ideals[b]).then(a.cmp(&b)));
        self.profile.order(v[(v.len() - 1) / 2]).top()
    }
}

/// Candidates and voters uniform on `[0, 1]`; voters rank by distance.
pub fn gen_single_peaked(n: usize, m: usize, seed: u64) -> Result<SinglePeaked, PrefGenError> {
    check_size(n, m)?;
    let mut rng = rng(seed);
    let positions: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let ideals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let orders = ideals
        .iter()
        .map(|&x| {
            let mut c: Vec<usize> = (0..m).collect();
            c.sort_by(|&a, &b| (positions[a] - x).abs().total_cmp(&(positions[b] - x).abs()).then(a.cmp(&b)));
            order(c)
        })
        .collect();
    Ok(SinglePeaked { profile: profile(orders), positions, ideals })
}

/// Whether `order` is single-peaked along `axis`: peeling from the bottom,
/// each worst remaining candidate sits at an end of the remaining axis.
pub fn is_single_peaked(order: &PreferenceOrder, axis: &[Candidate]) -> bool {
    let (mut lo, mut hi) = (0, axis.len());
    for &c in order.ranking().iter().rev() {
        if lo == hi {
            return false;
        }
        if axis[lo] == c {
            lo += 1;
        } else if axis[hi - 1] == c {
            hi -= 1;
        } else {
            return false;
        }
    }
    true
}

fn factorial_capped(m: usize) -> u128 {
    (1..=m as u128).try_fold(1u128, |acc, x| acc.checked_mul(x)).unwrap_or(u128::MAX)
}

/// A `k`-urn: `k` reference orders each take `1/(k+1)` of the mass and the
/// remaining orders share the last `1/(k+1)` uniformly.
pub fn gen_urn(n: usize, m: usize, k: usize, seed: u64) -> Result<PreferenceProfile, PrefGenError> {
    check_size(n, m)?;
    if !(2..=3).contains(&k) {
        return Err(PrefGenError::UnsupportedUrn(k));
    }
    let total = factorial_capped(m);
    if total < k as u128 {
        return Err(PrefGenError::UrnTooSmall { k, m, orders: total });
    }
    let mut rng = rng(seed);
    let mut refs: Vec<Vec<usize>> = Vec::with_capacity(k);
    while refs.len() < k {
        let o = shuffled(m, &mut rng);
        if !refs.contains(&o) {
            refs.push(o);
        }
    }
    let rest_exists = total > k as u128;
    let orders = (0..n)
        .map(|_| {
            let slot = rng.gen_range(0..=k);
            if slot < k {
                return order(refs[slot].clone());
            }
            if !rest_exists {
                // nothing outside the references
                return order(refs[rng.gen_range(0..k)].clone());
            }
            loop {
                let o = shuffled(m, &mut rng);
                if !refs.contains(&o) {
                    return order(o);
                }
            }
        })
        .collect();
    Ok(profile(orders))
}

/// Two reference orders on a random split of the candidates
/// (`floor(m/2)` and `ceil(m/2)`), riffled uniformly per voter.
pub fn gen_riffle(n: usize, m: usize, seed: u64) -> Result<PreferenceProfile, PrefGenError> {
    check_size(n, m)?;
    if m < 2 {
        return Err(PrefGenError::RiffleTooSmall);
    }
    let mut rng = rng(seed);
    let deck = shuffled(m, &mut rng);
    let (left, right) = deck.split_at(m / 2);
    let orders = (0..n)
        .map(|_| {
            let mut slots = index::sample(&mut rng, m, left.len()).into_vec();
            slots.sort_unstable();
            let (mut l, mut r) = (left.iter(), right.iter());
            let mut next = slots.iter().peekable();
            let ranking = (0..m)
                .map(|pos| {
                    if next.peek() == Some(&&pos) {
                        next.next();
                        *l.next().unwrap()
                    } else {
                        *r.next().unwrap()
                    }
                })
                .collect();
            order(ranking)
        })
        .collect();
    Ok(profile(orders))
}

/// Latent candidate values behind a Plackett-Luce profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub values: Vec<f64>,
}

impl GroundTruth {
    /// Candidates by descending value, ties by index.
    pub fn ranking(&self) -> Vec<Candidate> {
        let mut c: Vec<usize> = (0..self.values.len()).collect();
        c.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        c.into_iter().map(Candidate).collect()
    }

    /// 0-based position of `c` in [`GroundTruth::ranking`].
    pub fn rank_of(&self, c: Candidate) -> usize {
        self.ranking().iter().position(|&x| x == c).expect("candidate in range")
    }
}

/// Draws one order by repeatedly picking among the remaining candidates with
/// probability proportional to their weight.
pub fn sample_sequential(weights: &[f64], rng: &mut impl Rng) -> PreferenceOrder {
    let mut left: Vec<usize> = (0..weights.len()).collect();
    let mut ranking = Vec::with_capacity(weights.len());
    while !left.is_empty() {
        let total: f64 = left.iter().map(|&c| weights[c]).sum();
        let mut u = rng.gen::<f64>() * total;
        let mut pick = left.len() - 1;
        for (j, &c) in left.iter().enumerate() {
            if u < weights[c] {
                pick = j;
                break;
            }
            u -= weights[c];
        }
        ranking.push(left.remove(pick));
    }
    order(ranking)
}

/// Values uniform on `[0, 1]`; each voter ranks by sequential choice with
/// those values as weights.
pub fn gen_plackett_luce(n: usize, m: usize, seed: u64) -> Result<(PreferenceProfile, GroundTruth), PrefGenError> {
    check_size(n, m)?;
    let mut rng = rng(seed);
    let values: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let weights: Vec<f64> = values.iter().map(|&v| v.max(PLACKETT_LUCE_MIN_WEIGHT)).collect();
    let orders = (0..n).map(|_| sample_sequential(&weights, &mut rng)).collect();
    Ok((profile(orders), GroundTruth { values }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    ImpartialCulture,
    SinglePeaked,
    Urn { k: usize },
    Riffle,
    PlackettLuce,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::ImpartialCulture => f.write_str("impartial_culture"),
            Distribution::SinglePeaked => f.write_str("single_peaked"),
            Distribution::Urn { k } => write!(f, "urn{k}"),
            Distribution::Riffle => f.write_str("riffle"),
            Distribution::PlackettLuce => f.write_str("plackett_luce"),
        }
    }
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "impartial_culture" | "uniform" | "ic" => Ok(Distribution::ImpartialCulture),
            "single_peaked" => Ok(Distribution::SinglePeaked),
            "urn" | "urn2" | "2_urn" => Ok(Distribution::Urn { k: 2 }),
            "urn3" | "3_urn" => Ok(Distribution::Urn { k: 3 }),
            "riffle" => Ok(Distribution::Riffle),
            "plackett_luce" | "placket_luce" | "pl" => Ok(Distribution::PlackettLuce),
            other => Err(format!("unknown distribution `{other}`")),
        }
    }
}

/// A generated profile and, for Plackett-Luce, its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub profile: PreferenceProfile,
    pub ground_truth: Option<GroundTruth>,
}

impl Distribution {
    pub fn generate(self, n: usize, m: usize, seed: u64) -> Result<Generated, PrefGenError> {
        let plain = |profile| Generated { profile, ground_truth: None };
        Ok(match self {
            Distribution::ImpartialCulture => plain(gen_impartial_culture(n, m, seed)?),
            Distribution::SinglePeaked => plain(gen_single_peaked(n, m, seed)?.profile),
            Distribution::Urn { k } => plain(gen_urn(n, m, k, seed)?),
            Distribution::Riffle => plain(gen_riffle(n, m, seed)?),
            Distribution::PlackettLuce => {
                let (profile, gt) = gen_plackett_luce(n, m, seed)?;
                Generated { profile, ground_truth: Some(gt) }
            }
        })
    }
}

/// A profile read from a PrefLib file, with candidate names when given.
#[derive(Clone, Debug, PartialEq)]
pub struct PreflibProfile {
    pub profile: PreferenceProfile,
    pub names: Vec<String>,
}

fn malformed(line: usize, reason: impl Into<String>) -> PreflibError {
    PreflibError::Malformed { line, reason: reason.into() }
}

/// Parses strict complete orders: `# NUMBER ALTERNATIVES: m` and
/// `# ALTERNATIVE NAME i: name` headers, then `count: c1,c2,...` lines with
/// 1-based ids. Without the count header, `m` is the length of the first
/// order.
pub fn parse_preflib(text: &str) -> Result<PreflibProfile, PreflibError> {
    let mut m: Option<usize> = None;
    let mut names: Vec<(usize, String)> = Vec::new();
    let mut orders: Vec<PreferenceOrder> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once(':') else {
                continue;
            };
            let key = key.trim().to_ascii_uppercase();
            if key == "NUMBER ALTERNATIVES" {
                let v = value.trim().parse().map_err(|_| malformed(line_no, "bad alternative count"))?;
                m = Some(v);
            } else if let Some(id) = key.strip_prefix("ALTERNATIVE NAME ") {
                let id: usize = id.trim().parse().map_err(|_| malformed(line_no, "bad alternative id"))?;
                names.push((id, value.trim().to_string()));
            }
            continue;
        }
        let (count, rest) = line.split_once(':').ok_or_else(|| malformed(line_no, "expected `count: order`"))?;
        let count: usize = count.trim().parse().map_err(|_| malformed(line_no, "bad multiplicity"))?;
        if rest.contains('{') || rest.contains('}') {
            return Err(malformed(line_no, "ties are not supported"));
        }
        let ids = rest
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| malformed(line_no, format!("bad candidate id `{}`", t.trim()))))
            .collect::<Result<Vec<_>, _>>()?;
        let m_here = *m.get_or_insert(ids.len());
        let mut seen = HashSet::new();
        let mut ranking = Vec::with_capacity(ids.len());
        for id in ids {
            if id == 0 || id > m_here {
                return Err(PreflibError::UnknownCandidate { line: line_no, id });
            }
            if !seen.insert(id) {
                return Err(PreflibError::DuplicateCandidate { line: line_no, candidate: id });
            }
            ranking.push(Candidate(id - 1));
        }
        if ranking.len() != m_here {
            return Err(PreflibError::IncompleteOrder { line: line_no, expected: m_here, found: ranking.len() });
        }
        let o = PreferenceOrder::new(ranking).expect("validated permutation");
        orders.extend(std::iter::repeat(o).take(count));
    }

    if orders.is_empty() {
        return Err(PreflibError::Empty);
    }
    let m = m.unwrap_or(0);
    let mut out_names: Vec<String> = (1..=m).map(|i| i.to_string()).collect();
    for (id, name) in names {
        if (1..=m).contains(&id) {
            out_names[id - 1] = name;
        }
    }
    let profile = PreferenceProfile::new(orders).map_err(|_| PreflibError::Empty)?;
    Ok(PreflibProfile { profile, names: out_names })
}
