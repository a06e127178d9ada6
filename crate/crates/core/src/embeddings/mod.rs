//! Explicit embeddings of lamplighter spaces into products of R-trees, the
//! Hamming-cube construction for inefficient spaces, weak embeddings from
//! Nagata covers, and the distortion / weak-embedding verification harness.

mod coords;
mod hamming;
mod lamz;
mod perturb;
mod weak;

pub use coords::{frechet_star, lift_coordinates, prepare_coordinates, CoordinateSystem, PreparedCoordinates};
pub use hamming::{hamming_embed, hamming_witness, verify_cube, CubeReport, HammingEmbedding, HammingFacts, HammingSearch, HammingWitness};
pub use lamz::{embed_lamz, embed_lamz_space, line_coordinates, IntLampPoint};
pub use perturb::{perturb_injective, PerturbationResult, PerturbationViolation};
pub use weak::{
    interval_cover, lift_weak, nagata_constant, nagata_weak, pushforward_weak, tscp_plus_rho, weak_check, NagataCover, NagataScale, WeakBound, WeakCheck, WeakFailure, WeakFamily, WeakImage, WeakScale,
};

use crate::lamplighter::LampError;
use crate::metric::MetricError;
use crate::rational::{self, Q};
use crate::trees::TreeError;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("space is not isometric to a set of integers")]
    NotALineSpace,
    #[error("epsilon must be positive")]
    NonpositiveEpsilon,
    #[error("sigma {sigma} is below the required {required}")]
    SigmaTooSmall { sigma: Q, required: Q },
    #[error("coordinate {coordinate} takes the same value at points {a} and {b}")]
    NonInjectiveCoordinate { coordinate: usize, a: usize, b: usize },
    #[error("coordinates do not separate points {a} and {b}")]
    NotSeparating { a: usize, b: usize },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid coordinate system: {0}")]
    InvalidCoordinates(String),
    #[error("integer overflow while scaling")]
    Overflow,
    #[error("no witness found within {samples} sampled evaluations")]
    BudgetExhausted { samples: u64 },
    #[error("tour through {targets} targets exceeds the exact cap of {cap}")]
    TourBudgetExceeded { targets: usize, cap: usize },
    #[error("the pair does not violate the efficiency bound")]
    NotAWitness,
    #[error("point {point} is not covered")]
    NotACover { point: usize },
    #[error("part {part} has a component with points {a} and {b} farther apart than gamma * s")]
    CoverInvalid { part: usize, a: usize, b: usize },
    #[error("distinct points {i} and {j} are at domain distance zero")]
    ZeroDomainDistance { i: usize, j: usize },
    #[error("pair lists disagree at position {index}")]
    PairMismatch { index: usize },
    #[error("invalid parameters: {0}")]
    BadParameters(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Lamp(#[from] LampError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistortionReport {
    #[serde(with = "rational::serde_q")]
    pub lip: Q,
    #[serde(with = "rational::serde_q")]
    pub colip: Q,
    /// `lip / colip`; absent when some pair collapses to image distance 0.
    #[serde(with = "rational::serde_q_opt")]
    pub distortion: Option<Q>,
    pub pairs: u64,
    pub lip_pair: (usize, usize),
    pub colip_pair: (usize, usize),
}

/// Running max/min of image-over-domain ratios. Ties keep the earlier pair,
/// and `merge` keeps `self` on ties, so ordered merges stay deterministic.
#[derive(Clone, Debug, Default)]
pub struct DistortionAccumulator {
    lip: Option<(Q, (usize, usize))>,
    colip: Option<(Q, (usize, usize))>,
    pairs: u64,
}

impl DistortionAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, i: usize, j: usize, domain: Q, image: Q) -> Result<(), EmbedError> {
        if domain.is_zero() {
            return Err(EmbedError::ZeroDomainDistance { i, j });
        }
        let ratio = image / domain;
        self.pairs += 1;
        if self.lip.as_ref().is_none_or(|(r, _)| ratio > *r) {
            self.lip = Some((ratio, (i, j)));
        }
        if self.colip.as_ref().is_none_or(|(r, _)| ratio < *r) {
            self.colip = Some((ratio, (i, j)));
        }
        Ok(())
    }

    pub fn merge(mut self, other: Self) -> Self {
        if let Some((r, p)) = other.lip {
            if self.lip.as_ref().is_none_or(|(s, _)| r > *s) {
                self.lip = Some((r, p));
            }
        }
        if let Some((r, p)) = other.colip {
            if self.colip.as_ref().is_none_or(|(s, _)| r < *s) {
                self.colip = Some((r, p));
            }
        }
        self.pairs += other.pairs;
        self
    }

    pub fn finish(self) -> Result<DistortionReport, EmbedError> {
        let (Some((lip, lip_pair)), Some((colip, colip_pair))) = (self.lip, self.colip) else {
            return Err(EmbedError::BadParameters("no pairs to measure".into()));
        };
        let distortion = (!colip.is_zero()).then(|| lip / colip);
        Ok(DistortionReport { lip, colip, distortion, pairs: self.pairs, lip_pair, colip_pair })
    }
}

/// Distortion of a map given matching lists of labelled domain and image distances.
pub fn distortion(domain: &[(usize, usize, Q)], image: &[(usize, usize, Q)]) -> Result<DistortionReport, EmbedError> {
    if domain.len() != image.len() {
        return Err(EmbedError::LengthMismatch { expected: domain.len(), got: image.len() });
    }
    let mut acc = DistortionAccumulator::new();
    for (index, (&(i, j, d), &(a, b, e))) in domain.iter().zip(image).enumerate() {
        if (i, j) != (a, b) {
            return Err(EmbedError::PairMismatch { index });
        }
        acc.add(i, j, d, e)?;
    }
    acc.finish()
}

/// Distortion of a map on `n` indexed points, from fallible domain and image
/// distance functions, over all pairs `i < j`. Rows are measured in parallel
/// and merged in index order.
pub fn measure_distortion<D, I>(n: usize, domain: D, image: I) -> Result<DistortionReport, EmbedError>
where
    D: Fn(usize, usize) -> Result<Q, EmbedError> + Sync,
    I: Fn(usize, usize) -> Result<Q, EmbedError> + Sync,
{
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = DistortionAccumulator::new();
            for j in i + 1..n {
                acc.add(i, j, domain(i, j)?, image(i, j)?)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, EmbedError>>()?;
    rows.into_iter().fold(DistortionAccumulator::new(), DistortionAccumulator::merge).finish()
}
