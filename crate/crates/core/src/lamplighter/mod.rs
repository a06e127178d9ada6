//! Lamplighter spaces `Lam(X)`: pairs of a finite lamp set and a position,
//! with the traveling-salesman semimetric, its diameter shortcut, and the
//! three equivalent lamplighter metrics.

mod efficiency;
mod tsp;

pub use efficiency::{efficiency_constant, EfficiencyCaps, EfficiencyMode, EfficiencyReport, EfficiencyWitness, DEFAULT_EFFICIENCY_CAP};
pub use tsp::{free_path_length, tsp, tsp_line_oracle, TourResult, TspMode, TspOptions, DEFAULT_TARGET_CAP};

use crate::metric::FiniteMetricSpace;
use crate::rational::Q;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LampError {
    #[error("point index {index} out of range for a space of {n} points")]
    PointOutOfRange { index: usize, n: usize },
    #[error("{targets} targets exceed the exact cap of {cap}")]
    TargetsExceedCap { targets: usize, cap: usize },
    #[error("exact efficiency supports at most {cap} points, space has {n}")]
    TooLargeForExact { n: usize, cap: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

/// An element `(A, x)` of `Lam(X)`: lamps lit at `A`, lamplighter at `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LampPoint {
    pub lamps: BTreeSet<usize>,
    pub pos: usize,
}

impl LampPoint {
    pub fn new(lamps: impl IntoIterator<Item = usize>, pos: usize) -> Self {
        Self { lamps: lamps.into_iter().collect(), pos }
    }

    pub fn check(&self, space: &FiniteMetricSpace) -> Result<(), LampError> {
        let n = space.len();
        match std::iter::once(&self.pos).chain(&self.lamps).find(|&&i| i >= n) {
            Some(&index) => Err(LampError::PointOutOfRange { index, n }),
            None => Ok(()),
        }
    }

    /// `A Δ B`.
    pub fn flipped(&self, other: &LampPoint) -> Vec<usize> {
        self.lamps.symmetric_difference(&other.lamps).copied().collect()
    }
}

/// Every lamp point whose lamp set has at most `max_lamps` elements, in a
/// fixed order (lamp sets by size then lexicographically, positions inner).
pub fn enumerate_lamp_points(n: usize, max_lamps: usize) -> Vec<LampPoint> {
    let mut sets: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_lamps.min(n) {
        let mut next = Vec::new();
        for s in &frontier {
            let from = s.last().map_or(0, |&l| l + 1);
            for p in from..n {
                let mut t = s.clone();
                t.push(p);
                next.push(t);
            }
        }
        sets.extend(next.iter().cloned());
        frontier = next;
    }
    sets.into_iter().flat_map(|s| (0..n).map(move |pos| LampPoint::new(s.iter().copied(), pos))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LampMetric {
    /// `TSP + ρ`
    DLam,
    /// `TSP + |A Δ B|`
    DGraph,
    /// `max(TSP, ρ)`
    DDil,
}

/// `ρ`: 1 when the lamp configurations differ, 0 otherwise.
pub fn rho(p: &LampPoint, q: &LampPoint) -> Q {
    if p.lamps == q.lamps {
        Q::zero()
    } else {
        Q::one()
    }
}

/// `diam({x, y} ∪ (A Δ B))`.
pub fn tscp(space: &FiniteMetricSpace, p: &LampPoint, q: &LampPoint) -> Result<Q, LampError> {
    p.check(space)?;
    q.check(space)?;
    let mut pts = p.flipped(q);
    pts.push(p.pos);
    pts.push(q.pos);
    Ok(space.diameter_of(&pts))
}

/// Tour length from `p.pos` to `q.pos` through every lamp in `A Δ B`.
pub fn tsp_between(space: &FiniteMetricSpace, p: &LampPoint, q: &LampPoint, opts: TspOptions) -> Result<TourResult, LampError> {
    p.check(space)?;
    q.check(space)?;
    tsp(space, p.pos, q.pos, &p.flipped(q), opts)
}

pub fn lamp_distance(space: &FiniteMetricSpace, p: &LampPoint, q: &LampPoint, metric: LampMetric, opts: TspOptions) -> Result<Q, LampError> {
    let tour = tsp_between(space, p, q, opts)?.length;
    Ok(match metric {
        LampMetric::DLam => tour + rho(p, q),
        LampMetric::DGraph => tour + Q::from_integer(p.flipped(q).len() as i128),
        LampMetric::DDil => tour.max(rho(p, q)),
    })
}
