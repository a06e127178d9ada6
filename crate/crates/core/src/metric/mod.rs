//! Finite metric spaces with exact rational distances.
//!
//! [`FiniteMetricSpace`] is immutable once validated. Alongside the rational
//! matrix it keeps an integer view (every distance multiplied by the common
//! denominator) so that the combinatorial searches elsewhere in the crate can
//! run on machine integers without losing exactness.

mod doubling;
mod families;

pub use doubling::{doubling_constant, DoublingMode, DoublingReport, EXACT_DOUBLING_CAP};
pub use families::{generate, Family};

use crate::rational::{self, Q};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("nonzero diagonal entry at ({i},{i})")]
    NonzeroDiagonal { i: usize },
    #[error("asymmetric matrix: d({i},{j}) != d({j},{i})")]
    AsymmetricMatrix { i: usize, j: usize },
    #[error("distinct points {i} and {j} are at non-positive distance")]
    NonPositiveDistance { i: usize, j: usize },
    #[error("triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("expected {n} labels, got {got}")]
    LabelCount { n: usize, got: usize },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("operation needs at least two points")]
    SinglePoint,
    #[error("exact mode supports at most {cap} points, space has {n}")]
    TooLargeForExact { n: usize, cap: usize },
    #[error("distances do not fit the integer view")]
    Overflow,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<Q>,
    labels: Option<Vec<String>>,
    denominator: i128,
    scaled: Vec<u64>,
}

/// Checks the three metric axioms and builds the space.
///
/// Checks run in the order diagonal, symmetry, positivity, triangle; the first
/// failure is reported with the offending indices (lexicographically least).
pub fn validate_metric(matrix: Vec<Vec<Q>>) -> Result<FiniteMetricSpace, MetricError> {
    let n = matrix.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    for (row, entries) in matrix.iter().enumerate() {
        if entries.len() != n {
            return Err(MetricError::NotSquare { row, len: entries.len(), n });
        }
    }
    for (i, row) in matrix.iter().enumerate() {
        if !row[i].is_zero() {
            return Err(MetricError::NonzeroDiagonal { i });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if matrix[i][j] != matrix[j][i] {
                return Err(MetricError::AsymmetricMatrix { i, j });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if matrix[i][j] <= Q::zero() {
                return Err(MetricError::NonPositiveDistance { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if matrix[i][k] > matrix[i][j] + matrix[j][k] {
                    return Err(MetricError::TriangleViolation { i, j, k });
                }
            }
        }
    }
    FiniteMetricSpace::from_parts(n, matrix.into_iter().flatten().collect(), None)
}

impl FiniteMetricSpace {
    fn from_parts(n: usize, dist: Vec<Q>, labels: Option<Vec<String>>) -> Result<Self, MetricError> {
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(MetricError::LabelCount { n, got: l.len() });
            }
        }
        let denominator = rational::common_denominator(dist.iter());
        let scaled = dist
            .iter()
            .map(|d| (d * denominator).to_integer().to_u64().ok_or(MetricError::Overflow))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { n, dist, labels, denominator, scaled })
    }

    /// Builds a space from an integer matrix known to be a metric (generators).
    pub(crate) fn from_integer_matrix(matrix: Vec<Vec<u64>>, labels: Vec<String>) -> Self {
        let n = matrix.len();
        let dist: Vec<Q> = matrix.iter().flatten().map(|&d| Q::from_integer(d as i128)).collect();
        let space = Self {
            n,
            dist,
            labels: Some(labels),
            denominator: 1,
            scaled: matrix.into_iter().flatten().collect(),
        };
        debug_assert!(validate_metric(space.matrix()).is_ok());
        space
    }

    pub fn with_labels(self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.n {
            return Err(MetricError::LabelCount { n: self.n, got: labels.len() });
        }
        Ok(Self { labels: Some(labels), ..self })
    }

    /// Shortest-path metric of a connected graph with positive edge weights.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, Q)]) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let mut best: Vec<Option<Q>> = vec![None; n * n];
        for i in 0..n {
            best[i * n + i] = Some(Q::zero());
        }
        for (u, v, w) in edges {
            let (u, v) = (*u, *v);
            if u >= n || v >= n {
                return Err(MetricError::BadParameters(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v || *w <= Q::zero() {
                return Err(MetricError::BadParameters(format!("edge ({u},{v}) must join distinct points with positive weight")));
            }
            for (a, b) in [(u, v), (v, u)] {
                let slot = &mut best[a * n + b];
                if slot.as_ref().is_none_or(|cur| w < cur) {
                    *slot = Some(*w);
                }
            }
        }
        // Floyd-Warshall over exact rationals.
        for k in 0..n {
            for i in 0..n {
                let Some(ik) = best[i * n + k] else { continue };
                for j in 0..n {
                    let Some(kj) = best[k * n + j] else { continue };
                    let via = ik + kj;
                    let slot = &mut best[i * n + j];
                    if slot.as_ref().is_none_or(|cur| via < *cur) {
                        *slot = Some(via);
                    }
                }
            }
        }
        let dist = best.into_iter().collect::<Option<Vec<_>>>().ok_or(MetricError::Disconnected)?;
        Self::from_parts(n, dist, None)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> Q {
        self.dist[i * self.n + j]
    }

    /// Distance multiplied by [`denominator`](Self::denominator); exact.
    #[inline]
    pub fn scaled_d(&self, i: usize, j: usize) -> u64 {
        self.scaled[i * self.n + j]
    }

    pub fn denominator(&self) -> i128 {
        self.denominator
    }

    /// Converts a value of the integer view back to a rational distance.
    pub fn unscale(&self, value: u64) -> Q {
        Q::new(value as i128, self.denominator)
    }

    pub fn matrix(&self) -> Vec<Vec<Q>> {
        self.dist.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn diameter_of(&self, points: &[usize]) -> Q {
        let mut best = 0u64;
        for (a, &i) in points.iter().enumerate() {
            for &j in &points[a + 1..] {
                best = best.max(self.scaled_d(i, j));
            }
        }
        self.unscale(best)
    }

    /// The same point set with every distance multiplied by `factor > 0`.
    pub fn scaled_by(&self, factor: Q) -> Result<Self, MetricError> {
        if factor <= Q::zero() {
            return Err(MetricError::BadParameters("scale factor must be positive".into()));
        }
        let dist = self.dist.iter().map(|d| d * factor).collect();
        Self::from_parts(self.n, dist, self.labels.clone())
    }

    pub fn subspace(&self, points: &[usize]) -> Result<Self, MetricError> {
        if points.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(&bad) = points.iter().find(|&&p| p >= self.n) {
            return Err(MetricError::BadParameters(format!("point {bad} out of range")));
        }
        let dist = points.iter().flat_map(|&i| points.iter().map(move |&j| (i, j))).map(|(i, j)| self.d(i, j)).collect();
        let labels = self.labels.as_ref().map(|l| points.iter().map(|&p| l[p].clone()).collect());
        Self::from_parts(points.len(), dist, labels)
    }

    /// CSV rendering: a header row of labels followed by one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point");
        for i in 0..self.n {
            out.push(',');
            out.push_str(&csv_field(&self.label(i)));
        }
        out.push('\n');
        for i in 0..self.n {
            out.push_str(&csv_field(&self.label(i)));
            for j in 0..self.n {
                out.push(',');
                out.push_str(&rational::format(&self.d(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Minimum distance between distinct points.
pub fn separation(space: &FiniteMetricSpace) -> Result<Q, MetricError> {
    if space.len() < 2 {
        return Err(MetricError::SinglePoint);
    }
    let n = space.len();
    let min = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| space.scaled_d(i, j)).min().unwrap();
    Ok(space.unscale(min))
}

#[derive(Serialize, Deserialize)]
struct SpaceJson {
    n: usize,
    #[serde(with = "rational::serde_q_matrix")]
    matrix: Vec<Vec<Q>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Serialize for FiniteMetricSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SpaceJson { n: self.n, matrix: self.matrix(), labels: self.labels.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteMetricSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = SpaceJson::deserialize(d)?;
        if raw.matrix.len() != raw.n {
            return Err(D::Error::custom(format!("n = {} but matrix has {} rows", raw.n, raw.matrix.len())));
        }
        let space = validate_metric(raw.matrix).map_err(D::Error::custom)?;
        match raw.labels {
            Some(labels) => space.with_labels(labels).map_err(D::Error::custom),
            None => Ok(space),
        }
    }
}

/// `{"edges": [[u, v, weight]], "n": int}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphInput {
    pub n: usize,
    pub edges: Vec<(usize, usize, serde_json::Value)>,
}

impl GraphInput {
    pub fn to_space(&self) -> Result<FiniteMetricSpace, MetricError> {
        let edges = self
            .edges
            .iter()
            .map(|(u, v, w)| {
                let weight = match w {
                    serde_json::Value::Number(num) => num
                        .as_i64()
                        .map(rational::int)
                        .ok_or_else(|| MetricError::BadParameters(format!("weight {num} is not an integer; use a \"p/q\" string"))),
                    serde_json::Value::String(s) => rational::parse(s).map_err(|e| MetricError::BadParameters(e.to_string())),
                    other => Err(MetricError::BadParameters(format!("bad weight {other}"))),
                }?;
                Ok((*u, *v, weight))
            })
            .collect::<Result<Vec<_>, MetricError>>()?;
        FiniteMetricSpace::from_weighted_edges(self.n, &edges)
    }
}
