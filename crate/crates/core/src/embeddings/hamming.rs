//! Hamming cubes inside lamplighters of spaces that are not `K`-efficient.
//!
//! A violating pair gives an optimal closed tour from the base point. The
//! tour is cut greedily into blocks of length about `2R`; lighting any union
//! of interior blocks then realizes the cube `{0,1}^M` with distortion 5.

use super::EmbedError;
use crate::lamplighter::{efficiency_constant, free_path_length, tsp, EfficiencyCaps, EfficiencyMode, LampPoint, TspOptions, DEFAULT_TARGET_CAP};
use crate::metric::FiniteMetricSpace;
use crate::rational::{self, Q};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HammingSearch {
    /// Spaces up to this size are searched exhaustively.
    pub exact_cap: usize,
    pub target_cap: usize,
    /// Evaluation budget for the randomized local search on larger spaces.
    pub samples: u64,
    pub seed: u64,
}

impl Default for HammingSearch {
    fn default() -> Self {
        Self { exact_cap: crate::lamplighter::DEFAULT_EFFICIENCY_CAP, target_cap: DEFAULT_TARGET_CAP, samples: 2000, seed: 0 }
    }
}

/// `(S, x)` and `(∅, y)` with `TSP > K·TSCP`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HammingWitness {
    pub from: LampPoint,
    pub to: LampPoint,
    #[serde(with = "rational::serde_q")]
    pub tsp: Q,
    #[serde(with = "rational::serde_q")]
    pub tscp: Q,
}

fn witness_from(space: &FiniteMetricSpace, x: usize, y: usize, targets: Vec<usize>, cap: usize) -> Result<HammingWitness, EmbedError> {
    let tour = tsp(space, x, y, &targets, TspOptions { cap, ..TspOptions::default() })?;
    let mut all = targets.clone();
    all.extend([x, y]);
    let tscp = space.diameter_of(&all);
    Ok(HammingWitness { from: LampPoint::new(targets, x), to: LampPoint::new([], y), tsp: tour.length, tscp })
}

/// Finds a pair violating `K`-efficiency. Small spaces are settled exactly
/// (`None` certifies efficiency); larger ones get a seeded local search that
/// reports `BudgetExhausted` when it comes up empty.
pub fn hamming_witness(space: &FiniteMetricSpace, k: Q, search: HammingSearch) -> Result<Option<HammingWitness>, EmbedError> {
    let n = space.len();
    if n <= search.exact_cap {
        let caps = EfficiencyCaps { max_points: search.exact_cap, max_targets: search.target_cap };
        let rep = efficiency_constant(space, EfficiencyMode::Exact, caps)?;
        return match rep.witness {
            Some(w) if rep.k > k => Ok(Some(witness_from(space, w.x, w.y, w.targets, n)?)),
            _ => Ok(None),
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let eval = |x: usize, y: usize, s: &BTreeSet<usize>| -> Result<Option<(Q, Q)>, EmbedError> {
        let targets: Vec<usize> = s.iter().copied().collect();
        let mut all = targets.clone();
        all.extend([x, y]);
        let tscp = space.diameter_of(&all);
        if tscp.is_zero() {
            return Ok(None);
        }
        let len = tsp(space, x, y, &targets, TspOptions { cap: search.target_cap, ..TspOptions::default() })?.length;
        Ok(Some((len, tscp)))
    };
    let mut evals = 0u64;
    while evals < search.samples {
        let (mut x, mut y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let mut pool: Vec<usize> = (0..n).filter(|&p| p != x && p != y).collect();
        pool.shuffle(&mut rng);
        let size = rng.gen_range(1..=search.target_cap.min(pool.len()).max(1));
        let mut s: BTreeSet<usize> = pool.into_iter().take(size).collect();
        let mut current: Option<(Q, Q)> = None;
        let mut stale = 0;
        while evals < search.samples && stale < 4 * n {
            let mut ns = s.clone();
            let (mut cx, mut cy) = (x, y);
            if current.is_some() {
                let r = rng.gen_range(0..n + 2);
                if r < n {
                    if !ns.remove(&r) && ns.len() < search.target_cap {
                        ns.insert(r);
                    }
                } else if r == n {
                    cx = rng.gen_range(0..n);
                } else {
                    cy = rng.gen_range(0..n);
                }
            }
            evals += 1;
            let Some((len, tscp)) = eval(cx, cy, &ns)? else {
                stale += 1;
                continue;
            };
            if len > k * tscp {
                return Ok(Some(witness_from(space, cx, cy, ns.into_iter().collect(), search.target_cap)?));
            }
            let better = current.as_ref().is_none_or(|(cl, ct)| len * ct >= *cl * tscp);
            if better {
                let strictly = current.as_ref().is_none_or(|(cl, ct)| len * ct > *cl * tscp);
                stale = if strictly { 0 } else { stale + 1 };
                current = Some((len, tscp));
                (x, y, s) = (cx, cy, ns);
            } else {
                stale += 1;
            }
        }
    }
    Err(EmbedError::BudgetExhausted { samples: search.samples })
}

/// Which of the stated facts about the stopping partition hold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HammingFacts {
    /// `τ(N) = k`.
    pub a: bool,
    /// The blocks partition the tour points.
    pub b: bool,
    /// Every anchored block cost is at most `4R`.
    pub c: bool,
    /// Every interior block has free-path length at least `R`.
    pub d: bool,
    /// `N - 1 >= (K' - 4)/2`.
    pub e: bool,
    /// `N - 1 >= (K' - 3)/3`: each cut block plus its closing step costs
    /// more than `2R` and at most `3R`, and so does the final segment.
    pub e_thirds: bool,
    /// `M >= ceil((K - 5)/2)`.
    pub m_bound: bool,
    #[serde(with = "rational::serde_q_vec")]
    pub anchored_costs: Vec<Q>,
    #[serde(with = "rational::serde_q_vec")]
    pub interior_free_lengths: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HammingEmbedding {
    pub base: usize,
    #[serde(rename = "R", with = "rational::serde_q")]
    pub r: Q,
    /// `TSP(A Δ B, x) / R` for the closed tour.
    #[serde(with = "rational::serde_q")]
    pub k_prime: Q,
    pub tour: Vec<usize>,
    pub tau: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
    #[serde(rename = "M")]
    pub m: usize,
    pub facts: HammingFacts,
}

impl HammingEmbedding {
    /// `θ(S) = (∪_{n ∈ S} C_n, x)` for `S ⊆ {1, ..., M}`.
    pub fn theta(&self, s: &[usize]) -> Result<LampPoint, EmbedError> {
        let mut lamps = BTreeSet::new();
        for &n in s {
            if n == 0 || n > self.m {
                return Err(EmbedError::BadParameters(format!("block {n} is outside 1..={}", self.m)));
            }
            lamps.extend(self.blocks[n - 1].iter().copied());
        }
        Ok(LampPoint { lamps, pos: self.base })
    }
}

pub fn hamming_embed(space: &FiniteMetricSpace, witness: &HammingWitness, k: Q, cap: usize) -> Result<HammingEmbedding, EmbedError> {
    witness.from.check(space)?;
    witness.to.check(space)?;
    let flipped = witness.from.flipped(&witness.to);
    let (x, y) = (witness.from.pos, witness.to.pos);
    let open = tsp(space, x, y, &flipped, TspOptions { cap, ..TspOptions::default() })?.length;
    let mut all = flipped.clone();
    all.extend([x, y]);
    let r = space.diameter_of(&all);
    if open <= k * r {
        return Err(EmbedError::NotAWitness);
    }
    let targets: Vec<usize> = flipped.iter().copied().filter(|&p| p != x).collect();
    if targets.len() > cap {
        return Err(EmbedError::TourBudgetExceeded { targets: targets.len(), cap });
    }
    let closed = tsp(space, x, x, &targets, TspOptions { cap, ..TspOptions::default() })?;
    let tour = closed.tour;
    let last = tour.len() - 1;
    let step = |i: usize| space.d(tour[i - 1], tour[i]);

    let mut tau = vec![0usize];
    while *tau.last().unwrap() < last {
        let from = *tau.last().unwrap();
        let mut sum = Q::zero();
        let mut max_j = from + 1;
        for j in from + 1..=last {
            sum += step(j);
            if sum > r * Q::from_integer(2) {
                break;
            }
            max_j = j;
        }
        tau.push((max_j + 1).min(last));
    }
    let blocks: Vec<Vec<usize>> = tau.windows(2).map(|w| tour[w[0]..w[1]].to_vec()).collect();
    let n_blocks = blocks.len();
    let m = n_blocks.saturating_sub(1);

    let a = *tau.last().unwrap() == last;
    let tour_points: BTreeSet<usize> = tour.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let disjoint = blocks.iter().flatten().all(|&p| seen.insert(p));
    let b = disjoint && seen == tour_points;

    let anchored_costs: Vec<Q> = tau
        .windows(2)
        .map(|w| space.d(x, tour[w[0]]) + space.d(tour[w[1] - 1], x) + (w[0] + 1..w[1]).map(step).sum::<Q>())
        .collect();
    let four_r = r * Q::from_integer(4);
    let c = anchored_costs.iter().all(|cost| *cost <= four_r)
        && blocks.iter().zip(&anchored_costs).try_fold(true, |ok, (block, cost)| {
            tsp(space, x, x, block, TspOptions { cap, ..TspOptions::default() }).map(|t| ok && t.length <= *cost)
        })?;
    let interior_free_lengths = blocks[..m].iter().map(|block| free_path_length(space, block, cap)).collect::<Result<Vec<Q>, _>>()?;
    let d = interior_free_lengths.iter().all(|len| *len >= r);
    let k_prime = closed.length / r;
    let e = Q::from_integer(m as i128) * Q::from_integer(2) >= k_prime - Q::from_integer(4);
    let e_thirds = Q::from_integer(m as i128) * Q::from_integer(3) >= k_prime - Q::from_integer(3);
    let m_bound = Q::from_integer(m as i128) >= ((k - Q::from_integer(5)) / Q::from_integer(2)).ceil();

    Ok(HammingEmbedding {
        base: x,
        r,
        k_prime,
        tour,
        tau,
        blocks,
        m,
        facts: HammingFacts { a, b, c, d, e, e_thirds, m_bound, anchored_costs, interior_free_lengths },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeReport {
    pub dim: usize,
    pub pairs: u64,
    /// Extremes of `d_Lam(θ(S), θ(T)) / (R |S Δ T|)` over `S ≠ T`.
    #[serde(with = "rational::serde_q")]
    pub min_ratio: Q,
    #[serde(with = "rational::serde_q")]
    pub max_ratio: Q,
    /// `1 <= ratio <= 5` everywhere.
    pub holds: bool,
    pub worst: Option<(Vec<usize>, Vec<usize>)>,
}

/// Checks `R|SΔT| <= d_Lam(θ(S), θ(T)) <= 5R|SΔT|` for all `S, T` inside the
/// first `min(M, max_dim)` coordinates, with exact tours.
pub fn verify_cube(space: &FiniteMetricSpace, emb: &HammingEmbedding, max_dim: usize, cap: usize) -> Result<CubeReport, EmbedError> {
    let dim = emb.m.min(max_dim);
    let subsets = 1usize << dim;
    let members = |mask: usize| (0..dim).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect::<Vec<_>>();
    // d_Lam(θ(S), θ(T)) only depends on S Δ T since the blocks are disjoint.
    let mut by_diff = vec![Q::zero(); subsets];
    for (u, slot) in by_diff.iter_mut().enumerate().skip(1) {
        let lit = emb.theta(&members(u))?;
        let tour = tsp(space, emb.base, emb.base, &lit.lamps.iter().copied().collect::<Vec<_>>(), TspOptions { cap, ..TspOptions::default() })?;
        *slot = tour.length + Q::one();
    }
    let mut min_ratio: Option<Q> = None;
    let mut max_ratio: Option<Q> = None;
    let mut worst = None;
    let mut pairs = 0;
    for s in 0..subsets {
        for t in 0..subsets {
            if s == t {
                continue;
            }
            pairs += 1;
            let u = s ^ t;
            let ratio = by_diff[u] / (emb.r * Q::from_integer(u.count_ones() as i128));
            let off = ratio < Q::one() || ratio > Q::from_integer(5);
            if off && worst.is_none() {
                worst = Some((members(s), members(t)));
            }
            if min_ratio.is_none_or(|m| ratio < m) {
                min_ratio = Some(ratio);
            }
            if max_ratio.is_none_or(|m| ratio > m) {
                max_ratio = Some(ratio);
            }
        }
    }
    Ok(CubeReport {
        dim,
        pairs,
        min_ratio: min_ratio.unwrap_or(Q::one()),
        max_ratio: max_ratio.unwrap_or(Q::one()),
        holds: worst.is_none(),
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lamplighter::{lamp_distance, LampMetric};
    use crate::metric::{generate, Family};
    use crate::rational::int;

    #[test]
    fn efficient_path_has_no_witness() {
        let s = generate(&Family::Path { n: 5 }).unwrap();
        assert_eq!(hamming_witness(&s, int(3), HammingSearch::default()).unwrap(), None);
    }

    #[test]
    fn star_witness_and_partition() {
        let s = generate(&Family::Star { n: 16, k: 1 }).unwrap();
        let search = HammingSearch { exact_cap: 17, ..HammingSearch::default() };
        let w = hamming_witness(&s, int(7), search).unwrap().unwrap();
        assert!(w.tsp > int(7) * w.tscp);
        let emb = hamming_embed(&s, &w, int(7), DEFAULT_TARGET_CAP).unwrap();
        let f = &emb.facts;
        assert!(f.a && f.b && f.c && f.d && f.e_thirds && f.m_bound, "{f:?}");
        assert_eq!(emb.r, int(2));
        // Five interior blocks against K' = 16: the halved bound asks for six.
        assert_eq!(emb.k_prime, int(16));
        assert!(!f.e);
        assert_eq!(emb.tau, vec![0, 3, 6, 9, 12, 15, 17]);
        assert_eq!(emb.m, 5);
        let cube = verify_cube(&s, &emb, 6, DEFAULT_TARGET_CAP).unwrap();
        assert!(cube.holds, "{cube:?}");
        assert_eq!(cube.dim, 5);
        assert_eq!(cube.pairs, 32 * 31);
    }

    #[test]
    fn theta_matches_lamp_distance() {
        let s = generate(&Family::Star { n: 12, k: 1 }).unwrap();
        let w = hamming_witness(&s, int(5), HammingSearch { exact_cap: 13, ..HammingSearch::default() }).unwrap().unwrap();
        let emb = hamming_embed(&s, &w, int(5), DEFAULT_TARGET_CAP).unwrap();
        let (a, b) = (emb.theta(&[1]).unwrap(), emb.theta(&[2, 3]).unwrap());
        assert_eq!(emb.theta(&[]).unwrap(), LampPoint::new([], emb.base));
        let d = lamp_distance(&s, &a, &b, LampMetric::DLam, TspOptions::default()).unwrap();
        assert!(d >= emb.r * int(3) && d <= emb.r * int(15));
        assert!(emb.theta(&[emb.m + 1]).is_err());
    }

    #[test]
    fn non_witness_is_rejected() {
        let s = generate(&Family::Path { n: 4 }).unwrap();
        let w = HammingWitness { from: LampPoint::new([0, 4], 2), to: LampPoint::new([], 2), tsp: int(8), tscp: int(4) };
        assert_eq!(hamming_embed(&s, &w, int(3), DEFAULT_TARGET_CAP).unwrap_err(), EmbedError::NotAWitness);
    }

    #[test]
    fn sampled_search_is_reproducible() {
        let s = generate(&Family::Star { n: 15, k: 1 }).unwrap();
        let search = HammingSearch { exact_cap: 4, target_cap: 15, samples: 400, seed: 3 };
        let a = hamming_witness(&s, int(3), search).unwrap().unwrap();
        let b = hamming_witness(&s, int(3), search).unwrap().unwrap();
        assert_eq!(a, b);
        assert!(a.tsp > int(3) * a.tscp);
        let tight = HammingSearch { samples: 30, ..search };
        assert_eq!(hamming_witness(&s, int(40), tight).unwrap_err(), EmbedError::BudgetExhausted { samples: 30 });
    }
}
