use std::collections::HashMap;

use ldvote::metrics::condorcet_winner;
use ldvote::prefgen::{
    gen_impartial_culture, gen_plackett_luce, gen_riffle, gen_single_peaked, gen_urn, is_single_peaked,
};
use ldvote::{Candidate, PreferenceProfile};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson statistic against expected probabilities, checked at the 99%
/// quantile.
fn chi_square_ok(observed: &[u64], expected_p: &[f64]) -> bool {
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_p)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let crit = ChiSquared::new((observed.len() - 1) as f64).unwrap().inverse_cdf(0.99);
    stat < crit
}

fn counts(p: &PreferenceProfile) -> HashMap<Vec<usize>, u64> {
    let mut out = HashMap::new();
    for o in p.orders() {
        *out.entry(o.ranking().iter().map(|c| c.0).collect()).or_default() += 1;
    }
    out
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn impartial_culture_is_uniform() {
    let p = gen_impartial_culture(60_000, 3, 11).unwrap();
    let c = counts(&p);
    let obs: Vec<u64> = permutations(3).iter().map(|o| c.get(o).copied().unwrap_or(0)).collect();
    assert!(chi_square_ok(&obs, &[1.0 / 6.0; 6]), "{obs:?}");
}

#[test]
fn urn_mass_split() {
    for (k, seed) in [(2, 5u64), (3, 6)] {
        let m = 4;
        let p = gen_urn(10_000, m, k, seed).unwrap();
        let c = counts(&p);
        let mut sorted: Vec<(Vec<usize>, u64)> = c.into_iter().collect();
        sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        // the k references are the k most frequent orders by a wide margin
        let refs: Vec<Vec<usize>> = sorted.iter().take(k).map(|x| x.0.clone()).collect();
        let lookup: HashMap<Vec<usize>, u64> = sorted.into_iter().collect();
        let rest = 24 - k;
        let mut obs = Vec::new();
        let mut exp = Vec::new();
        for o in permutations(m) {
            obs.push(lookup.get(&o).copied().unwrap_or(0));
            exp.push(if refs.contains(&o) { 1.0 / (k + 1) as f64 } else { 1.0 / ((k + 1) * rest) as f64 });
        }
        assert!(chi_square_ok(&obs, &exp), "k={k} {obs:?}");
    }
    // three references over three candidates carry three quarters of the mass
    let p = gen_urn(40_000, 3, 3, 8).unwrap();
    let mut top: Vec<u64> = counts(&p).into_values().collect();
    top.sort_unstable_by(|a, b| b.cmp(a));
    let share = top.iter().take(3).sum::<u64>() as f64 / 40_000.0;
    assert!((share - 0.75).abs() < 0.015, "{share}");
}

#[test]
fn riffle_interleavings_are_uniform() {
    let m = 4;
    let p = gen_riffle(10_000, m, 21).unwrap();
    // the first voter's order fixes which candidates share a half only up to
    // the split; recover the halves as the pairs whose order never flips
    let first = p.order(0);
    let mut same_half = vec![vec![true; m]; m];
    for o in p.orders() {
        for x in 0..m {
            for y in 0..m {
                if x != y && o.prefers(Candidate(x), Candidate(y)) != first.prefers(Candidate(x), Candidate(y)) {
                    same_half[x][y] = false;
                }
            }
        }
    }
    let mut left: Vec<usize> = vec![0];
    left.extend((1..m).filter(|&y| same_half[0][y]));
    assert_eq!(left.len(), 2);
    let mut obs: HashMap<Vec<usize>, u64> = HashMap::new();
    for o in p.orders() {
        let slots: Vec<usize> = o.ranking().iter().enumerate().filter(|(_, c)| left.contains(&c.0)).map(|(i, _)| i).collect();
        *obs.entry(slots).or_default() += 1;
    }
    assert_eq!(obs.len(), 6);
    let v: Vec<u64> = obs.into_values().collect();
    assert!(chi_square_ok(&v, &[1.0 / 6.0; 6]), "{v:?}");

    // two candidates: both interleavings equally likely
    let p = gen_riffle(10_000, 2, 4).unwrap();
    let a_first = p.orders().iter().filter(|o| o.top() == Candidate(0)).count() as u64;
    assert!(chi_square_ok(&[a_first, 10_000 - a_first], &[0.5, 0.5]));
}

#[test]
fn plackett_luce_first_place_law() {
    let (p, g) = gen_plackett_luce(50_000, 4, 3).unwrap();
    let w: Vec<f64> = g.values.iter().map(|v| v.max(1e-3)).collect();
    let total: f64 = w.iter().sum();
    let mut obs = vec![0u64; 4];
    for o in p.orders() {
        obs[o.top().0] += 1;
    }
    let exp: Vec<f64> = w.iter().map(|x| x / total).collect();
    assert!(chi_square_ok(&obs, &exp), "{obs:?} {exp:?}");
}

#[test]
fn equal_plackett_luce_weights_are_impartial() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut obs: HashMap<Vec<usize>, u64> = HashMap::new();
    for _ in 0..30_000 {
        let o = ldvote::prefgen::sample_sequential(&[0.4; 3], &mut rng);
        *obs.entry(o.ranking().iter().map(|c| c.0).collect()).or_default() += 1;
    }
    let v: Vec<u64> = permutations(3).iter().map(|o| obs.get(o).copied().unwrap_or(0)).collect();
    assert!(chi_square_ok(&v, &[1.0 / 6.0; 6]), "{v:?}");
}

#[test]
fn single_peaked_profiles_have_the_median_as_condorcet_winner() {
    for seed in 0..300 {
        let n = 2 * (seed as usize % 25) + 1;
        let m = 2 + seed as usize % 7;
        let sp = gen_single_peaked(n, m, seed).unwrap();
        let axis = sp.axis();
        assert!(sp.profile.orders().iter().all(|o| is_single_peaked(o, &axis)));
        assert_eq!(condorcet_winner(&sp.profile), Some(sp.median_candidate()), "seed {seed}");
    }
}

#[test]
fn even_electorates_can_tie() {
    // two voters at opposite ends prefer opposite candidates: no strict majority
    let found = (0..200u64).any(|seed| {
        let sp = gen_single_peaked(2, 2, seed).unwrap();
        sp.profile.order(0).top() != sp.profile.order(1).top() && condorcet_winner(&sp.profile).is_none()
    });
    assert!(found);
}
