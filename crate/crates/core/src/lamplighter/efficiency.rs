//! The efficiency constant `K(X) = sup TSP(S; x, y) / TSCP(S; x, y)`.
//!
//! Exact mode runs one subset DP per start point `x`: `g[mask][j]` is the
//! shortest path from `x` through every point of `mask` ending at `j`. Each
//! entry is itself a tour `TSP(mask \ {j}; x, j)`, and closing it back to `x`
//! gives the loops `TSP(mask; x, x)`. So one DP per start covers every triple,
//! and the diameters come from a table over all subsets.

use super::{tsp::held_karp, LampError};
use crate::metric::FiniteMetricSpace;
use crate::rational::{self, Q};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_EFFICIENCY_CAP: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EfficiencyMode {
    Exact,
    /// Random triples with exact tours; a lower bound on `K`.
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyCaps {
    /// Largest space accepted by exact mode.
    pub max_points: usize,
    /// Largest target set a sampled triple may carry.
    pub max_targets: usize,
}

impl Default for EfficiencyCaps {
    fn default() -> Self {
        Self { max_points: DEFAULT_EFFICIENCY_CAP, max_targets: super::DEFAULT_TARGET_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyWitness {
    pub x: usize,
    pub y: usize,
    pub targets: Vec<usize>,
    #[serde(with = "rational::serde_q")]
    pub tsp: Q,
    #[serde(with = "rational::serde_q")]
    pub tscp: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    #[serde(with = "rational::serde_q")]
    pub k: Q,
    /// Absent only when every triple is degenerate (a one-point space).
    pub witness: Option<EfficiencyWitness>,
    pub mode: EfficiencyMode,
    pub pairs_examined: u64,
}

/// Best ratio so far as a scaled (tsp, tscp) pair; ties keep the earlier one.
#[derive(Clone, Debug)]
struct Best {
    tsp: u64,
    tscp: u64,
    x: usize,
    y: usize,
    targets: Vec<usize>,
}

impl Best {
    fn beaten_by(this: &Option<Best>, tsp: u64, tscp: u64) -> bool {
        match this {
            None => true,
            Some(b) => (tsp as u128) * (b.tscp as u128) > (b.tsp as u128) * (tscp as u128),
        }
    }
}

pub fn efficiency_constant(space: &FiniteMetricSpace, mode: EfficiencyMode, caps: EfficiencyCaps) -> Result<EfficiencyReport, LampError> {
    let (best, examined) = match mode {
        EfficiencyMode::Exact => {
            if space.len() > caps.max_points {
                return Err(LampError::TooLargeForExact { n: space.len(), cap: caps.max_points });
            }
            if space.len() > 24 {
                return Err(LampError::InvalidOptions("exact efficiency is limited to 24 points".into()));
            }
            exact(space)
        }
        EfficiencyMode::Sampled { samples, seed } => sampled(space, samples, seed, caps.max_targets),
    };
    let (k, witness) = match best {
        None => (Q::from_integer(0), None),
        Some(b) => (
            Q::new(b.tsp as i128, b.tscp as i128),
            Some(EfficiencyWitness { x: b.x, y: b.y, targets: b.targets, tsp: space.unscale(b.tsp), tscp: space.unscale(b.tscp) }),
        ),
    };
    Ok(EfficiencyReport { k, witness, mode, pairs_examined: examined })
}

fn subset_diameters(space: &FiniteMetricSpace) -> Vec<u64> {
    let n = space.len();
    let mut diam = vec![0u64; 1 << n];
    for mask in 1usize..(1 << n) {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let rest = mask & !(1 << top);
        let mut far = diam[rest];
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            far = far.max(space.scaled_d(top, j));
        }
        diam[mask] = far;
    }
    diam
}

fn exact(space: &FiniteMetricSpace) -> (Option<Best>, u64) {
    let n = space.len();
    if n < 2 {
        return (None, 0);
    }
    let diam = subset_diameters(space);
    let per_start: Vec<(Option<Best>, u64)> = (0..n).into_par_iter().map(|x| exact_from(space, &diam, x)).collect();
    let mut best: Option<Best> = None;
    let mut examined = 0;
    for (cand, count) in per_start {
        examined += count;
        if let Some(c) = cand {
            if Best::beaten_by(&best, c.tsp, c.tscp) {
                best = Some(c);
            }
        }
    }
    (best, examined)
}

fn exact_from(space: &FiniteMetricSpace, diam: &[u64], x: usize) -> (Option<Best>, u64) {
    let n = space.len();
    let others: Vec<usize> = (0..n).filter(|&p| p != x).collect();
    let m = others.len();
    let full = (1usize << m) - 1;
    let low = (1usize << x) - 1;
    let to_global = |mask: usize| ((mask & !low) << 1) | (mask & low) | (1 << x);
    let mut g = vec![u64::MAX; (full + 1) * m];
    for j in 0..m {
        g[(1 << j) * m + j] = space.scaled_d(x, others[j]);
    }
    let mut best: Option<(u64, u64, usize, usize)> = None;
    let mut examined = 0u64;
    let mut consider = |tsp: u64, tscp: u64, mask: usize, y: usize, best: &mut Option<(u64, u64, usize, usize)>| {
        examined += 1;
        let beats = match best {
            None => true,
            Some((bt, bs, _, _)) => (tsp as u128) * (*bs as u128) > (*bt as u128) * (tscp as u128),
        };
        if beats {
            *best = Some((tsp, tscp, mask, y));
        }
    };
    for mask in 1..=full {
        let row = mask * m;
        let tscp = diam[to_global(mask)];
        let mut closed = u64::MAX;
        let mut bits = mask;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let here = g[row + j];
            consider(here, tscp, mask & !(1 << j), others[j], &mut best);
            closed = closed.min(here + space.scaled_d(others[j], x));
            let mut rest = full & !mask;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let slot = &mut g[(mask | (1 << k)) * m + k];
                let via = here + space.scaled_d(others[j], others[k]);
                if via < *slot {
                    *slot = via;
                }
            }
        }
        consider(closed, tscp, mask, x, &mut best);
    }
    let best = best.map(|(tsp, tscp, mask, y)| Best {
        tsp,
        tscp,
        x,
        y,
        targets: (0..m).filter(|&b| mask & (1 << b) != 0).map(|b| others[b]).collect(),
    });
    (best, examined)
}

fn sampled(space: &FiniteMetricSpace, samples: u64, seed: u64, max_targets: usize) -> (Option<Best>, u64) {
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Best> = None;
    let mut examined = 0;
    for _ in 0..samples {
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        let mut targets: Vec<usize> = (0..n).filter(|&p| p != x && p != y && rng.gen_bool(0.5)).collect();
        if targets.len() > max_targets {
            targets.shuffle(&mut rng);
            targets.truncate(max_targets);
            targets.sort_unstable();
        }
        let mut all = targets.clone();
        all.extend([x, y]);
        let tscp = space.diameter_of(&all);
        if tscp == Q::from_integer(0) {
            continue;
        }
        let scaled_tscp = all.iter().flat_map(|&a| all.iter().map(move |&b| (a, b))).map(|(a, b)| space.scaled_d(a, b)).max().unwrap();
        let (tsp, _) = held_karp(space, x, y, &targets);
        examined += 1;
        if Best::beaten_by(&best, tsp, scaled_tscp) {
            best = Some(Best { tsp, tscp: scaled_tscp, x, y, targets });
        }
    }
    (best, examined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lamplighter::{tsp, TspOptions};
    use crate::metric::{generate, validate_metric, Family};
    use crate::rational::int;

    /// Oracle: every (x, y, S) with exact tours and diameters.
    fn brute_force(space: &FiniteMetricSpace) -> Q {
        let n = space.len();
        let mut best = int(0);
        for x in 0..n {
            for y in 0..n {
                for mask in 0u32..(1 << n) {
                    let s: Vec<usize> = (0..n).filter(|&p| mask & (1 << p) != 0).collect();
                    let mut all = s.clone();
                    all.extend([x, y]);
                    let tscp = space.diameter_of(&all);
                    if tscp > int(0) {
                        let t = tsp(space, x, y, &s, TspOptions::default()).unwrap().length;
                        best = best.max(t / tscp);
                    }
                }
            }
        }
        best
    }

    fn check_witness(space: &FiniteMetricSpace, rep: &EfficiencyReport) {
        let w = rep.witness.as_ref().unwrap();
        let t = tsp(space, w.x, w.y, &w.targets, TspOptions::default()).unwrap().length;
        let mut all = w.targets.clone();
        all.extend([w.x, w.y]);
        assert_eq!(t, w.tsp);
        assert_eq!(space.diameter_of(&all), w.tscp);
        assert_eq!(w.tsp / w.tscp, rep.k);
    }

    #[test]
    fn path_five_is_two() {
        let s = generate(&Family::Path { n: 5 }).unwrap();
        let rep = efficiency_constant(&s, EfficiencyMode::Exact, EfficiencyCaps::default()).unwrap();
        assert_eq!(rep.k, int(2));
        check_witness(&s, &rep);
        let w = rep.witness.unwrap();
        assert_eq!(w.x, w.y);
    }

    #[test]
    fn exact_matches_brute_force() {
        let spaces = [
            generate(&Family::Cycle { n: 6 }).unwrap(),
            generate(&Family::Star { n: 3, k: 2 }).unwrap(),
            generate(&Family::Grid { dims: vec![1, 2] }).unwrap(),
            validate_metric(vec![
                vec![int(0), int(3), int(4), int(5)],
                vec![int(3), int(0), int(5), int(4)],
                vec![int(4), int(5), int(0), int(3)],
                vec![int(5), int(4), int(3), int(0)],
            ])
            .unwrap(),
        ];
        for s in &spaces {
            let rep = efficiency_constant(s, EfficiencyMode::Exact, EfficiencyCaps::default()).unwrap();
            assert_eq!(rep.k, brute_force(s));
            check_witness(s, &rep);
        }
    }

    #[test]
    fn star_grows_with_arms() {
        let s = generate(&Family::Star { n: 4, k: 1 }).unwrap();
        let rep = efficiency_constant(&s, EfficiencyMode::Exact, EfficiencyCaps::default()).unwrap();
        assert_eq!(rep.k, int(4));
    }

    #[test]
    fn sampled_is_a_lower_bound_and_reproducible() {
        let s = generate(&Family::Cycle { n: 7 }).unwrap();
        let exact = efficiency_constant(&s, EfficiencyMode::Exact, EfficiencyCaps::default()).unwrap();
        let mode = EfficiencyMode::Sampled { samples: 300, seed: 9 };
        let a = efficiency_constant(&s, mode, EfficiencyCaps::default()).unwrap();
        let b = efficiency_constant(&s, mode, EfficiencyCaps::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.k <= exact.k && a.k >= int(1));
        check_witness(&s, &a);
    }

    #[test]
    fn exact_cap_is_enforced() {
        let s = generate(&Family::Path { n: 14 }).unwrap();
        assert_eq!(
            efficiency_constant(&s, EfficiencyMode::Exact, EfficiencyCaps::default()).unwrap_err(),
            LampError::TooLargeForExact { n: 15, cap: 14 }
        );
    }

    #[test]
    fn single_point_has_no_witness() {
        let s = generate(&Family::Path { n: 0 }).unwrap();
        let rep = efficiency_constant(&s, EfficiencyMode::Exact, EfficiencyCaps::default()).unwrap();
        assert_eq!(rep.k, int(0));
        assert!(rep.witness.is_none());
    }
}
