//! Distances between score vectors and the accessible-state sets they induce.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::election::{tally, BallotProfile, ScoreVector};
use crate::error::DominanceError;

/// Default cap on the number of lattice points [`AccessibleStateSet::enumerate`]
/// will materialise.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Add or remove a total of `r` votes.
    L1,
    /// Add or remove up to `r` votes per candidate.
    LInf,
    /// Scale every score by a factor of at most `1 + r` either way.
    Multiplicative,
    /// Change the ballots of at most `r` voters; the total is conserved.
    EarthMover,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::L1 => "l1",
            MetricKind::LInf => "linf",
            MetricKind::Multiplicative => "multiplicative",
            MetricKind::EarthMover => "earth_mover",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(MetricKind::L1),
            "linf" | "l_inf" | "linfinity" => Ok(MetricKind::LInf),
            "multiplicative" | "mult" => Ok(MetricKind::Multiplicative),
            "earth_mover" | "em" | "emd" => Ok(MetricKind::EarthMover),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// A nonnegative exact rational radius. Integer metrics only look at its
/// floor, since their distances are integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Radius(Ratio<u64>);

impl Radius {
    pub const ZERO: Radius = Radius(Ratio::new_raw(0, 1));

    pub fn integer(r: u64) -> Self {
        Radius(Ratio::from_integer(r))
    }

    /// `num / den`; panics on a zero denominator.
    pub fn ratio(num: u64, den: u64) -> Self {
        assert!(den > 0, "radius denominator must be positive");
        Radius(Ratio::new(num, den))
    }

    pub fn numer(self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(self) -> u64 {
        *self.0.denom()
    }

    pub fn floor(self) -> u64 {
        self.0.to_integer()
    }

    pub fn is_integer(self) -> bool {
        self.0.is_integer()
    }

    pub fn checked_add(self, other: Radius) -> Option<Radius> {
        let (a, b) = (self.0, other.0);
        let den = a.denom().lcm(b.denom());
        let num = a
            .numer()
            .checked_mul(den / a.denom())?
            .checked_add(b.numer().checked_mul(den / b.denom())?)?;
        Some(Radius(Ratio::new(num, den)))
    }

    pub fn checked_mul(self, other: Radius) -> Option<Radius> {
        let num = self.numer().checked_mul(other.numer())?;
        let den = self.denom().checked_mul(other.denom())?;
        Some(Radius(Ratio::new(num, den)))
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Radius {
    type Err = String;

    /// Accepts `3`, `3/10` and `0.3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("`{s}` is not a nonnegative rational");
        if let Some((num, den)) = s.split_once('/') {
            let num: u64 = num.trim().parse().map_err(|_| bad())?;
            let den: u64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            return Ok(Radius::ratio(num, den));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let den = 10u64.pow(frac.len() as u32);
            let frac: u64 = frac.parse().map_err(|_| bad())?;
            let num = int.checked_mul(den).and_then(|x| x.checked_add(frac)).ok_or_else(bad)?;
            return Ok(Radius::ratio(num, den));
        }
        s.parse::<u64>().map(Radius::integer).map_err(|_| bad())
    }
}

impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Radius {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<u64> for Radius {
    fn from(r: u64) -> Self {
        Radius::integer(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DistanceMetric {
    pub kind: MetricKind,
    pub radius: Radius,
}

impl DistanceMetric {
    pub fn new(kind: MetricKind, radius: impl Into<Radius>) -> Self {
        DistanceMetric { kind, radius: radius.into() }
    }

    pub fn l1(r: u64) -> Self {
        Self::new(MetricKind::L1, r)
    }

    pub fn linf(r: u64) -> Self {
        Self::new(MetricKind::LInf, r)
    }

    pub fn multiplicative(r: Radius) -> Self {
        Self::new(MetricKind::Multiplicative, r)
    }

    pub fn earth_mover(r: u64) -> Self {
        Self::new(MetricKind::EarthMover, r)
    }
}

/// All score vectors within a given distance of a base tally.
///
/// The base is the tally of everyone except the voter doing the reasoning.
/// Scores never go below zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessibleStateSet {
    base: ScoreVector,
    metric: DistanceMetric,
}

impl AccessibleStateSet {
    pub fn new(base: ScoreVector, metric: DistanceMetric) -> Self {
        AccessibleStateSet { base, metric }
    }

    /// The set seen by `voter`: centred on the tally without their ballot.
    pub fn for_voter(ballots: &BallotProfile, m: usize, voter: usize, metric: DistanceMetric) -> Self {
        let base = tally(ballots, m).without_vote(ballots.get(voter));
        Self::new(base, metric)
    }

    pub fn base(&self) -> &ScoreVector {
        &self.base
    }

    pub fn metric(&self) -> DistanceMetric {
        self.metric
    }

    /// Inclusive per-coordinate range of any member; exact for the interval
    /// metrics, a bounding box for the others.
    fn coordinate_range(&self, c: usize) -> (i64, i64) {
        let b = self.base.counts()[c] as i64;
        let r = self.metric.radius;
        match self.metric.kind {
            MetricKind::L1 | MetricKind::LInf | MetricKind::EarthMover => {
                let r = r.floor().min(i64::MAX as u64 / 4) as i64;
                ((b - r).max(0), b.saturating_add(r))
            }
            MetricKind::Multiplicative => {
                let (p, q) = (r.numer() as u128, r.denom() as u128);
                let b = b as u128;
                // s' <= b(1+x)  and  b <= s'(1+x), with 1+x = (q+p)/q
                let hi = b * (q + p) / q;
                let lo = (b * q).div_ceil(q + p);
                (lo.min(i64::MAX as u128) as i64, hi.min(i64::MAX as u128 / 4) as i64)
            }
        }
    }

    pub fn contains(&self, s: &ScoreVector) -> bool {
        let base = self.base.counts();
        if s.num_candidates() != base.len() {
            return false;
        }
        let s = s.counts();
        match self.metric.kind {
            MetricKind::L1 => {
                let d: u64 = s.iter().zip(base).map(|(&x, &y)| x.abs_diff(y) as u64).sum();
                d <= self.metric.radius.floor()
            }
            MetricKind::LInf => {
                let d = s.iter().zip(base).map(|(&x, &y)| x.abs_diff(y) as u64).max().unwrap_or(0);
                d <= self.metric.radius.floor()
            }
            MetricKind::Multiplicative => {
                let (p, q) = (self.metric.radius.numer() as u128, self.metric.radius.denom() as u128);
                s.iter().zip(base).all(|(&x, &y)| {
                    let (x, y) = (x as u128, y as u128);
                    x * q <= y * (q + p) && y * q <= x * (q + p)
                })
            }
            MetricKind::EarthMover => {
                let total_s: u64 = s.iter().map(|&x| x as u64).sum();
                let total_b: u64 = base.iter().map(|&x| x as u64).sum();
                if total_s != total_b {
                    return false;
                }
                // votes moved = half the l1 displacement
                let d: u64 = s.iter().zip(base).map(|(&x, &y)| x.abs_diff(y) as u64).sum();
                d <= 2 * self.metric.radius.floor()
            }
        }
    }

    /// Size of the bounding box that enumeration walks.
    pub fn estimated_size(&self) -> u128 {
        (0..self.base.num_candidates())
            .map(|c| {
                let (lo, hi) = self.coordinate_range(c);
                (hi - lo + 1).max(0) as u128
            })
            .fold(1u128, |acc, x| acc.saturating_mul(x))
    }

    /// Every member of the set, each exactly once, in lexicographic order.
    pub fn enumerate(&self, budget: u128) -> Result<Vec<ScoreVector>, DominanceError> {
        let estimated = self.estimated_size();
        if estimated > budget {
            return Err(DominanceError::BudgetExceeded { estimated, budget });
        }
        let m = self.base.num_candidates();
        let ranges: Vec<(i64, i64)> = (0..m).map(|c| self.coordinate_range(c)).collect();
        let mut out = Vec::new();
        let mut cur = vec![0u32; m];
        fn walk(
            set: &AccessibleStateSet,
            ranges: &[(i64, i64)],
            idx: usize,
            cur: &mut Vec<u32>,
            out: &mut Vec<ScoreVector>,
        ) {
            if idx == ranges.len() {
                let s = ScoreVector::new(cur.clone());
                if set.contains(&s) {
                    out.push(s);
                }
                return;
            }
            for v in ranges[idx].0..=ranges[idx].1 {
                cur[idx] = v as u32;
                walk(set, ranges, idx + 1, cur, out);
            }
        }
        walk(self, &ranges, 0, &mut cur, &mut out);
        Ok(out)
    }

    /// Decides whether some member has the `pins` candidates at exactly
    /// `t + offset` and every other candidate `v` at most `t + bound(v)`, for
    /// some integer level `t`.
    ///
    /// This is the workhorse behind the beats relation: every "who wins with
    /// which extra ballot" question reduces to constraints of this shape.
    pub(crate) fn admits(&self, pins: &[(usize, i64)], bound: impl Fn(usize) -> i64) -> bool {
        let base = self.base.counts();
        let m = base.len();
        let is_pinned = |v: usize| pins.iter().any(|&(p, _)| p == v);

        // lowest level keeping every pinned score and every cap nonnegative
        let mut t_min = i64::MIN;
        for v in 0..m {
            let off = match pins.iter().find(|&&(p, _)| p == v) {
                Some(&(_, off)) => off,
                None => bound(v),
            };
            t_min = t_min.max(-off);
        }

        match self.metric.kind {
            MetricKind::LInf | MetricKind::Multiplicative => {
                let mut lower = t_min;
                let mut upper = i64::MAX;
                for v in 0..m {
                    let (lo, hi) = self.coordinate_range(v);
                    match pins.iter().find(|&&(p, _)| p == v) {
                        Some(&(_, off)) => {
                            lower = lower.max(lo - off);
                            upper = upper.min(hi - off);
                        }
                        None => lower = lower.max(lo - bound(v)),
                    }
                }
                lower <= upper
            }
            MetricKind::L1 => {
                let r = self.metric.radius.floor().min(i64::MAX as u64 / 4) as i64;
                let cost = |t: i64| -> i64 {
                    let mut total = 0i64;
                    for v in 0..m {
                        let b = base[v] as i64;
                        total += match pins.iter().find(|&&(p, _)| p == v) {
                            Some(&(_, off)) => (t + off - b).abs(),
                            None => (b - (t + bound(v))).max(0),
                        };
                    }
                    total
                };
                // convex piecewise linear in t: the optimum sits on t_min or
                // on a breakpoint above it
                if cost(t_min) <= r {
                    return true;
                }
                (0..m).any(|v| {
                    let b = base[v] as i64;
                    let off = match pins.iter().find(|&&(p, _)| p == v) {
                        Some(&(_, off)) => off,
                        None => bound(v),
                    };
                    let t = b - off;
                    t > t_min && cost(t) <= r
                })
            }
            MetricKind::EarthMover => {
                let r2 = 2 * self.metric.radius.floor().min(i64::MAX as u64 / 8) as i64;
                let total: i64 = base.iter().map(|&x| x as i64).sum();
                let has_others = (0..m).any(|v| !is_pinned(v));
                // pinned scores never exceed the conserved total
                let t_max = total + 2;
                let mut t = t_min.max(0);
                while t <= t_max {
                    let mut pinned_cost = 0i64;
                    let mut pinned_sum = 0i64;
                    let mut forced = 0i64; // votes that must leave capped candidates
                    let mut kept = 0i64; // others' total after capping
                    let mut room = 0i64; // others' total capacity
                    for v in 0..m {
                        let b = base[v] as i64;
                        match pins.iter().find(|&&(p, _)| p == v) {
                            Some(&(_, off)) => {
                                pinned_cost += (t + off - b).abs();
                                pinned_sum += t + off;
                            }
                            None => {
                                let cap = t + bound(v);
                                forced += (b - cap).max(0);
                                kept += b.min(cap);
                                room += cap;
                            }
                        }
                    }
                    let rest = total - pinned_sum;
                    let fits = if has_others { rest >= 0 && rest <= room } else { rest == 0 };
                    if fits && pinned_cost + forced + (rest - kept).abs() <= r2 {
                        return true;
                    }
                    t += 1;
                }
                false
            }
        }
    }
}
