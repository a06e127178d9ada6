//! Doubling constants via the separated-subset criterion: the largest
//! `r/2`-separated subset of a closed ball of radius `r`, maximised over
//! centers and over radii drawn from the realised distances.

use super::{FiniteMetricSpace, MetricError};
use crate::rational::{self, Q};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const EXACT_DOUBLING_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoublingMode {
    /// Maximum independent set search; requires at most 20 points.
    Exact,
    /// Index-order greedy separated sets; a lower bound on the exact value.
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub d: usize,
    pub center: usize,
    #[serde(with = "rational::serde_q")]
    pub radius: Q,
    /// Pairwise at least `radius/2` apart, all within `radius` of `center`.
    pub subset: Vec<usize>,
    pub mode: DoublingMode,
}

pub fn doubling_constant(space: &FiniteMetricSpace, mode: DoublingMode) -> Result<DoublingReport, MetricError> {
    let n = space.len();
    if mode == DoublingMode::Exact && n > EXACT_DOUBLING_CAP {
        return Err(MetricError::TooLargeForExact { n, cap: EXACT_DOUBLING_CAP });
    }
    if n == 1 {
        return Ok(DoublingReport { d: 1, center: 0, radius: Q::from_integer(0), subset: vec![0], mode });
    }
    let mut radii: Vec<u64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| space.scaled_d(i, j)).collect();
    radii.sort_unstable();
    radii.dedup();

    let per_center: Vec<(usize, u64, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|c| {
            let mut best: (usize, u64, Vec<usize>) = (0, 0, Vec::new());
            for &r in &radii {
                let ball: Vec<usize> = (0..n).filter(|&j| space.scaled_d(c, j) <= r).collect();
                if ball.len() <= best.0 {
                    continue;
                }
                let set = match mode {
                    DoublingMode::Exact => exact_separated(space, &ball, r),
                    DoublingMode::Greedy => greedy_separated(space, &ball, r),
                };
                if set.len() > best.0 {
                    best = (set.len(), r, set);
                }
            }
            best
        })
        .collect();

    // Deterministic: largest D, then smallest center (centers are in order).
    let (center, (d, r, subset)) = per_center
        .into_iter()
        .enumerate()
        .fold(None::<(usize, (usize, u64, Vec<usize>))>, |acc, (c, cand)| match acc {
            Some((_, ref cur)) if cur.0 >= cand.0 => acc,
            _ => Some((c, cand)),
        })
        .expect("at least one center");
    Ok(DoublingReport { d, center, radius: space.unscale(r), subset, mode })
}

/// `a` and `b` are too close to coexist in an `r/2`-separated set.
#[inline]
fn conflict(space: &FiniteMetricSpace, a: usize, b: usize, r: u64) -> bool {
    2 * space.scaled_d(a, b) < r
}

fn greedy_separated(space: &FiniteMetricSpace, ball: &[usize], r: u64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for &p in ball {
        if chosen.iter().all(|&q| !conflict(space, p, q, r)) {
            chosen.push(p);
        }
    }
    chosen
}

fn exact_separated(space: &FiniteMetricSpace, ball: &[usize], r: u64) -> Vec<usize> {
    let m = ball.len();
    let adj: Vec<u32> = (0..m)
        .map(|a| (0..m).filter(|&b| b != a && conflict(space, ball[a], ball[b], r)).fold(0u32, |acc, b| acc | (1 << b)))
        .collect();
    let all = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut best = 0u32;
    max_independent(all, 0, &adj, &mut best);
    (0..m).filter(|&b| best & (1 << b) != 0).map(|b| ball[b]).collect()
}

fn max_independent(cand: u32, current: u32, adj: &[u32], best: &mut u32) {
    if cand == 0 {
        if current.count_ones() > best.count_ones() {
            *best = current;
        }
        return;
    }
    if current.count_ones() + cand.count_ones() <= best.count_ones() {
        return;
    }
    let v = cand.trailing_zeros() as usize;
    let bit = 1u32 << v;
    max_independent(cand & !adj[v] & !bit, current | bit, adj, best);
    // Excluding a vertex with no remaining conflicts can never do better.
    if adj[v] & cand != 0 {
        max_independent(cand & !bit, current, adj, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{generate, Family};
    use crate::rational::int;

    /// Independent oracle: all subsets of every ball, no pruning.
    fn brute_force(space: &FiniteMetricSpace) -> usize {
        let n = space.len();
        let mut best = 1;
        for c in 0..n {
            for r in (0..n).map(|j| space.d(c, j)).chain((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| space.d(i, j))) {
                let ball: Vec<usize> = (0..n).filter(|&j| space.d(c, j) <= r).collect();
                for mask in 1u32..(1 << ball.len()) {
                    let pts: Vec<usize> = (0..ball.len()).filter(|b| mask & (1 << b) != 0).map(|b| ball[b]).collect();
                    let ok = pts.iter().all(|&a| pts.iter().all(|&b| a == b || space.d(a, b) * 2 >= r));
                    if ok {
                        best = best.max(pts.len());
                    }
                }
            }
        }
        best
    }

    #[test]
    fn single_point_is_one() {
        let s = generate(&Family::Path { n: 0 }).unwrap();
        assert_eq!(doubling_constant(&s, DoublingMode::Exact).unwrap().d, 1);
    }

    #[test]
    fn path_eight_is_five() {
        let s = generate(&Family::Path { n: 8 }).unwrap();
        assert_eq!(brute_force(&s), 5);
        let rep = doubling_constant(&s, DoublingMode::Exact).unwrap();
        assert_eq!(rep.d, 5);
        // Radius 2 about point 2 already holds five 1-separated points and
        // is found before the radius-4 ball about the midpoint.
        assert_eq!(rep.center, 2);
        assert_eq!(rep.radius, int(2));
        assert_eq!(rep.subset, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn exact_matches_brute_force_on_small_families() {
        for fam in [Family::Cycle { n: 7 }, Family::Star { n: 3, k: 2 }, Family::Grid { dims: vec![2, 2] }, Family::Rose { n: 2, k: 4 }] {
            let s = generate(&fam).unwrap();
            let exact = doubling_constant(&s, DoublingMode::Exact).unwrap();
            assert_eq!(exact.d, brute_force(&s), "{fam:?}");
            let greedy = doubling_constant(&s, DoublingMode::Greedy).unwrap();
            assert!(greedy.d <= exact.d);
        }
    }

    #[test]
    fn witness_is_separated_and_inside_ball() {
        let s = generate(&Family::Grid { dims: vec![3, 3] }).unwrap();
        let rep = doubling_constant(&s, DoublingMode::Exact).unwrap();
        assert_eq!(rep.subset.len(), rep.d);
        for &a in &rep.subset {
            assert!(s.d(rep.center, a) <= rep.radius);
            for &b in &rep.subset {
                assert!(a == b || s.d(a, b) * 2 >= rep.radius);
            }
        }
    }

    #[test]
    fn exact_mode_has_a_cap() {
        let s = generate(&Family::Path { n: 20 }).unwrap();
        assert_eq!(doubling_constant(&s, DoublingMode::Exact).unwrap_err(), MetricError::TooLargeForExact { n: 21, cap: 20 });
        assert_eq!(doubling_constant(&s, DoublingMode::Greedy).unwrap().d, 5);
    }
}
