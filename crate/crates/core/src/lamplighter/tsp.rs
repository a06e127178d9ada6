//! Fixed-endpoint traveling salesman tours.
//!
//! The exact solver is Held-Karp over (visited subset, last target). Targets
//! equal to either endpoint are visited for free and dropped up front.
//! Restricting tours to permutations of the targets loses nothing: by the
//! triangle inequality a detour through any other point, or a repeat visit,
//! can be shortcut without increasing the length.

use super::LampError;
use crate::metric::FiniteMetricSpace;
use crate::rational::{self, Q};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TARGET_CAP: usize = 18;
const INF: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TspMode {
    Exact,
    /// Nearest neighbour followed by 2-opt; an upper bound.
    Heuristic,
    /// Exact within the cap, heuristic beyond it.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TspOptions {
    pub mode: TspMode,
    pub cap: usize,
}

impl Default for TspOptions {
    fn default() -> Self {
        Self { mode: TspMode::Exact, cap: DEFAULT_TARGET_CAP }
    }
}

impl TspOptions {
    pub fn heuristic() -> Self {
        Self { mode: TspMode::Heuristic, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TourResult {
    #[serde(with = "rational::serde_q")]
    pub length: Q,
    /// `x_0 = start, ..., x_k = end`.
    pub tour: Vec<usize>,
    pub exact: bool,
}

fn reduce_targets(start: usize, end: usize, targets: &[usize]) -> Vec<usize> {
    let mut t: Vec<usize> = targets.iter().copied().filter(|&p| p != start && p != end).collect();
    t.sort_unstable();
    t.dedup();
    t
}

pub fn tsp(space: &FiniteMetricSpace, start: usize, end: usize, targets: &[usize], opts: TspOptions) -> Result<TourResult, LampError> {
    let n = space.len();
    if let Some(&index) = [start, end].iter().chain(targets).find(|&&i| i >= n) {
        return Err(LampError::PointOutOfRange { index, n });
    }
    let reduced = reduce_targets(start, end, targets);
    let exact = match opts.mode {
        TspMode::Exact if reduced.len() > opts.cap => {
            return Err(LampError::TargetsExceedCap { targets: reduced.len(), cap: opts.cap });
        }
        TspMode::Exact => true,
        TspMode::Heuristic => false,
        TspMode::Auto => reduced.len() <= opts.cap,
    };
    let (length, tour) = if exact { held_karp(space, start, end, &reduced) } else { nearest_neighbour_two_opt(space, start, end, &reduced) };
    Ok(TourResult { length: space.unscale(length), tour, exact })
}

/// Optimal tour in the integer view. The DP runs backwards from `end` so the
/// tour can be rebuilt forwards, taking the smallest target index on ties.
pub(crate) fn held_karp(space: &FiniteMetricSpace, start: usize, end: usize, targets: &[usize]) -> (u64, Vec<usize>) {
    let t = targets.len();
    if t == 0 {
        let tour = if start == end { vec![start] } else { vec![start, end] };
        return (space.scaled_d(start, end), tour);
    }
    let full = (1usize << t) - 1;
    // dp[mask][j]: shortest path from targets[j] through all of mask to end.
    let mut dp = vec![INF; (full + 1) * t];
    for (j, &p) in targets.iter().enumerate() {
        dp[(1 << j) * t + j] = space.scaled_d(p, end);
    }
    for mask in 1..=full {
        let row = mask * t;
        let mut bits = mask;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let here = dp[row + j];
            if here == INF {
                continue;
            }
            let mut rest = full & !mask;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let slot = &mut dp[(mask | (1 << k)) * t + k];
                let via = here + space.scaled_d(targets[k], targets[j]);
                if via < *slot {
                    *slot = via;
                }
            }
        }
    }
    let (mut cur, best) = (0..t)
        .map(|j| (j, space.scaled_d(start, targets[j]) + dp[full * t + j]))
        .min_by_key(|&(j, len)| (len, j))
        .unwrap();
    let mut tour = Vec::with_capacity(t + 2);
    tour.push(start);
    let mut mask = full;
    loop {
        tour.push(targets[cur]);
        let rest = mask & !(1 << cur);
        if rest == 0 {
            break;
        }
        let want = dp[mask * t + cur];
        cur = (0..t)
            .filter(|&i| rest & (1 << i) != 0)
            .find(|&i| dp[rest * t + i] != INF && space.scaled_d(targets[cur], targets[i]) + dp[rest * t + i] == want)
            .expect("Held-Karp successor");
        mask = rest;
    }
    tour.push(end);
    (best, tour)
}

fn nearest_neighbour_two_opt(space: &FiniteMetricSpace, start: usize, end: usize, targets: &[usize]) -> (u64, Vec<usize>) {
    let mut remaining: Vec<usize> = targets.to_vec();
    let mut seq = vec![start];
    let mut cur = start;
    while !remaining.is_empty() {
        let (idx, _) = remaining.iter().enumerate().min_by_key(|&(_, &p)| (space.scaled_d(cur, p), p)).unwrap();
        cur = remaining.remove(idx);
        seq.push(cur);
    }
    seq.push(end);
    let d = |a: usize, b: usize| space.scaled_d(a, b) as i128;
    let m = seq.len() - 2;
    'sweep: loop {
        for i in 1..=m {
            for j in i + 1..=m {
                let (a, b, c, e) = (seq[i - 1], seq[i], seq[j], seq[j + 1]);
                if d(a, c) + d(b, e) < d(a, b) + d(c, e) {
                    seq[i..=j].reverse();
                    continue 'sweep;
                }
            }
        }
        break;
    }
    let len = seq.windows(2).map(|w| space.scaled_d(w[0], w[1])).sum();
    if start == end && m == 0 {
        seq.pop();
    }
    (len, seq)
}

/// Shortest path visiting every point of `set`, both endpoints free.
pub fn free_path_length(space: &FiniteMetricSpace, set: &[usize], cap: usize) -> Result<Q, LampError> {
    let mut pts = set.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let t = pts.len();
    if t > cap {
        return Err(LampError::TargetsExceedCap { targets: t, cap });
    }
    if t <= 1 {
        return Ok(Q::from_integer(0));
    }
    let full = (1usize << t) - 1;
    let mut dp = vec![INF; (full + 1) * t];
    for j in 0..t {
        dp[(1 << j) * t + j] = 0;
    }
    for mask in 1..=full {
        for j in 0..t {
            let here = dp[mask * t + j];
            if mask & (1 << j) == 0 || here == INF {
                continue;
            }
            for k in 0..t {
                if mask & (1 << k) == 0 {
                    let slot = &mut dp[(mask | (1 << k)) * t + k];
                    *slot = (*slot).min(here + space.scaled_d(pts[j], pts[k]));
                }
            }
        }
    }
    Ok(space.unscale((0..t).map(|j| dp[full * t + j]).min().unwrap()))
}

/// Closed form on the line: sweep to one extreme, across to the other, then
/// to `end`, choosing the better of the two orders.
pub fn tsp_line_oracle(start: i64, end: i64, targets: &[i64]) -> i64 {
    let l = targets.iter().copied().chain([start, end]).min().unwrap();
    let r = targets.iter().copied().chain([start, end]).max().unwrap();
    ((start - l) + (r - l) + (r - end)).min((r - start) + (r - l) + (end - l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{generate, validate_metric, Family};
    use crate::rational::int;

    fn line(coords: &[i64]) -> FiniteMetricSpace {
        validate_metric(coords.iter().map(|a| coords.iter().map(|b| int((a - b).abs())).collect()).collect()).unwrap()
    }

    /// Oracle: try every ordering of the targets.
    fn brute_force(space: &FiniteMetricSpace, start: usize, end: usize, targets: &[usize]) -> Q {
        fn rec(space: &FiniteMetricSpace, cur: usize, end: usize, rest: &mut Vec<usize>, acc: Q, best: &mut Option<Q>) {
            if rest.is_empty() {
                let total = acc + space.d(cur, end);
                if best.is_none_or(|b| total < b) {
                    *best = Some(total);
                }
                return;
            }
            for i in 0..rest.len() {
                let p = rest.remove(i);
                rec(space, p, end, rest, acc + space.d(cur, p), best);
                rest.insert(i, p);
            }
        }
        let mut best = None;
        rec(space, start, end, &mut targets.to_vec(), int(0), &mut best);
        best.unwrap()
    }

    #[test]
    fn empty_targets_cost_nothing_on_a_loop() {
        let s = generate(&Family::Path { n: 4 }).unwrap();
        let r = tsp(&s, 0, 0, &[], TspOptions::default()).unwrap();
        assert_eq!(r.length, int(0));
        assert_eq!(r.tour, vec![0]);
    }

    #[test]
    fn segment_example_is_ten() {
        let coords: Vec<i64> = (-2..=3).collect();
        let s = line(&coords);
        assert_eq!(tsp_line_oracle(0, 0, &[-2, 3]), 10);
        let r = tsp(&s, 2, 2, &[0, 5], TspOptions::default()).unwrap();
        assert_eq!(r.length, int(10));
        assert_eq!(r.tour, vec![2, 0, 5, 2]);
    }

    #[test]
    fn cycle_four_loop() {
        let s = generate(&Family::Cycle { n: 4 }).unwrap();
        assert_eq!(brute_force(&s, 0, 0, &[1, 2, 3]), int(4));
        let r = tsp(&s, 0, 0, &[1, 2, 3], TspOptions::default()).unwrap();
        assert_eq!(r.length, int(4));
        assert_eq!(r.tour, vec![0, 1, 2, 3, 0]);
    }

    #[test]
    fn line_oracle_closed_forms() {
        assert_eq!(tsp_line_oracle(0, 0, &[]), 0);
        for a in 1..=6 {
            for b in 1..=6 {
                assert_eq!(tsp_line_oracle(0, 0, &[-a, b]), 2 * (a + b));
            }
        }
        assert_eq!(tsp_line_oracle(0, 5, &[1, 3, 4]), 5);
    }

    #[test]
    fn held_karp_matches_brute_force_on_grid() {
        let s = generate(&Family::Grid { dims: vec![2, 3] }).unwrap();
        let cases: [(usize, usize, &[usize]); 4] = [(0, 11, &[3, 5, 7]), (4, 4, &[0, 2, 9, 11]), (1, 6, &[10, 3, 8, 0, 5]), (7, 2, &[7, 2])];
        for (a, b, t) in cases {
            let r = tsp(&s, a, b, t, TspOptions::default()).unwrap();
            assert_eq!(r.length, brute_force(&s, a, b, t), "{a} {b} {t:?}");
            let walked: Q = r.tour.windows(2).map(|w| s.d(w[0], w[1])).sum();
            assert_eq!(walked, r.length);
            assert_eq!(r.tour.first(), Some(&a));
            assert_eq!(r.tour.last(), Some(&b));
            assert!(t.iter().all(|p| r.tour.contains(p)));
        }
    }

    #[test]
    fn cap_is_enforced_in_exact_mode() {
        let s = generate(&Family::Path { n: 30 }).unwrap();
        let targets: Vec<usize> = (1..=20).collect();
        let opts = TspOptions { mode: TspMode::Exact, cap: 18 };
        assert_eq!(tsp(&s, 0, 0, &targets, opts).unwrap_err(), LampError::TargetsExceedCap { targets: 20, cap: 18 });
        let auto = tsp(&s, 0, 0, &targets, TspOptions { mode: TspMode::Auto, cap: 18 }).unwrap();
        assert!(!auto.exact);
        assert_eq!(auto.length, int(40));
    }

    #[test]
    fn heuristic_is_an_upper_bound() {
        let s = generate(&Family::Grid { dims: vec![3, 3] }).unwrap();
        let targets = [1, 6, 11, 12, 3, 9, 14];
        let exact = tsp(&s, 0, 15, &targets, TspOptions::default()).unwrap();
        let heur = tsp(&s, 0, 15, &targets, TspOptions::heuristic()).unwrap();
        assert!(!heur.exact);
        assert!(heur.length >= exact.length);
        let walked: Q = heur.tour.windows(2).map(|w| s.d(w[0], w[1])).sum();
        assert_eq!(walked, heur.length);
    }

    #[test]
    fn free_path_drops_endpoints() {
        let s = line(&[0, 10, 1]);
        assert_eq!(free_path_length(&s, &[0, 1, 2], 18).unwrap(), int(10));
        assert_eq!(free_path_length(&s, &[1], 18).unwrap(), int(0));
    }
}
