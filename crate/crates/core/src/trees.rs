//! R-tree targets with exact distances: R-stars, the two horocyclic trees
//! over the integers, and weighted l1/linf products of those.

use crate::lamplighter::LampPoint;
use crate::rational::{self, Q};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree points have different shapes")]
    ShapeMismatch,
    #[error("star height must be nonnegative")]
    NegativeHeight,
    #[error("horocyclic bit at {bit} lies on the wrong side of level {level}")]
    BitOutOfRange { level: i64, bit: i64 },
    #[error("products cannot contain products")]
    NestedProduct,
    #[error("a product has {members} members but {weights} weights")]
    WeightCount { members: usize, weights: usize },
    #[error("sigma must be at least 1")]
    SigmaBelowOne,
}

/// Opaque ray label of an R-star, compared bytewise and written as hex.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RayKey(pub Vec<u8>);

impl RayKey {
    /// Distinct lamp sets give distinct keys.
    pub fn from_indices<I: IntoIterator<Item = i64>>(items: I) -> Self {
        let mut bytes = Vec::new();
        for v in items {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        RayKey(bytes)
    }

    pub fn from_lamps(lamps: &BTreeSet<usize>) -> Self {
        Self::from_indices(lamps.iter().map(|&l| l as i64))
    }
}

impl Serialize for RayKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for RayKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        hex::decode(&text).map(RayKey).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combinator {
    L1,
    Linf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreePoint {
    Star {
        ray: RayKey,
        #[serde(with = "rational::serde_q")]
        height: Q,
    },
    /// Vertex at `level` with bits supported on `[level, inf)`; its parent
    /// is one level up with the bit at `level` dropped.
    HoroRight { level: i64, bits: BTreeSet<i64> },
    /// Mirror image: bits on `(-inf, level]`, parent one level down.
    HoroLeft { level: i64, bits: BTreeSet<i64> },
    Product {
        combinator: Combinator,
        members: Vec<TreePoint>,
        #[serde(with = "rational::serde_q_vec")]
        weights: Vec<Q>,
    },
}

impl TreePoint {
    pub fn star(ray: RayKey, height: Q) -> Result<Self, TreeError> {
        if height.is_negative() {
            return Err(TreeError::NegativeHeight);
        }
        Ok(TreePoint::Star { ray, height })
    }

    pub fn wedge_point() -> Self {
        TreePoint::Star { ray: RayKey::default(), height: Q::zero() }
    }

    pub fn horo_right(level: i64, bits: BTreeSet<i64>) -> Result<Self, TreeError> {
        match bits.first() {
            Some(&bit) if bit < level => Err(TreeError::BitOutOfRange { level, bit }),
            _ => Ok(TreePoint::HoroRight { level, bits }),
        }
    }

    pub fn horo_left(level: i64, bits: BTreeSet<i64>) -> Result<Self, TreeError> {
        match bits.last() {
            Some(&bit) if bit > level => Err(TreeError::BitOutOfRange { level, bit }),
            _ => Ok(TreePoint::HoroLeft { level, bits }),
        }
    }

    pub fn product(combinator: Combinator, members: Vec<TreePoint>) -> Result<Self, TreeError> {
        let weights = vec![Q::from_integer(1); members.len()];
        Self::weighted_product(combinator, members, weights)
    }

    pub fn weighted_product(combinator: Combinator, members: Vec<TreePoint>, weights: Vec<Q>) -> Result<Self, TreeError> {
        if members.iter().any(|m| matches!(m, TreePoint::Product { .. })) {
            return Err(TreeError::NestedProduct);
        }
        if weights.len() != members.len() {
            return Err(TreeError::WeightCount { members: members.len(), weights: weights.len() });
        }
        Ok(TreePoint::Product { combinator, members, weights })
    }

    /// Checks the invariants the constructors enforce, for deserialized input.
    pub fn validate(&self) -> Result<(), TreeError> {
        match self {
            TreePoint::Star { height, .. } if height.is_negative() => Err(TreeError::NegativeHeight),
            TreePoint::Star { .. } => Ok(()),
            TreePoint::HoroRight { level, bits } => Self::horo_right(*level, bits.clone()).map(drop),
            TreePoint::HoroLeft { level, bits } => Self::horo_left(*level, bits.clone()).map(drop),
            TreePoint::Product { combinator, members, weights } => {
                members.iter().try_for_each(TreePoint::validate)?;
                Self::weighted_product(*combinator, members.clone(), weights.clone()).map(drop)
            }
        }
    }
}

fn horo_right_distance(la: i64, a: &BTreeSet<i64>, lb: i64, b: &BTreeSet<i64>) -> Q {
    let m = la.max(lb);
    // The largest disagreeing bit at or above m forces the meeting level past it.
    let mut k = m;
    let mut sa = a.range(m..).rev().peekable();
    let mut sb = b.range(m..).rev().peekable();
    loop {
        match (sa.peek(), sb.peek()) {
            (None, None) => break,
            (Some(&&x), Some(&&y)) if x == y => {
                sa.next();
                sb.next();
            }
            (Some(&&x), Some(&&y)) => {
                k = k.max(x.max(y) + 1);
                break;
            }
            (Some(&&x), None) | (None, Some(&&x)) => {
                k = k.max(x + 1);
                break;
            }
        }
    }
    Q::from_integer(((k - la) + (k - lb)) as i128)
}

fn horo_left_distance(la: i64, a: &BTreeSet<i64>, lb: i64, b: &BTreeSet<i64>) -> Q {
    let m = la.min(lb);
    let mut k = m;
    let mut sa = a.range(..=m).peekable();
    let mut sb = b.range(..=m).peekable();
    loop {
        match (sa.peek(), sb.peek()) {
            (None, None) => break,
            (Some(&&x), Some(&&y)) if x == y => {
                sa.next();
                sb.next();
            }
            (Some(&&x), Some(&&y)) => {
                k = k.min(x.min(y) - 1);
                break;
            }
            (Some(&&x), None) | (None, Some(&&x)) => {
                k = k.min(x - 1);
                break;
            }
        }
    }
    Q::from_integer(((la - k) + (lb - k)) as i128)
}

pub fn tree_distance(a: &TreePoint, b: &TreePoint) -> Result<Q, TreeError> {
    use TreePoint::*;
    match (a, b) {
        (Star { ray: ra, height: ha }, Star { ray: rb, height: hb }) => {
            // Height zero on any ray is the wedge point.
            if ra == rb || ha.is_zero() || hb.is_zero() {
                Ok((ha - hb).abs())
            } else {
                Ok(ha + hb)
            }
        }
        (HoroRight { level: la, bits: ba }, HoroRight { level: lb, bits: bb }) => Ok(horo_right_distance(*la, ba, *lb, bb)),
        (HoroLeft { level: la, bits: ba }, HoroLeft { level: lb, bits: bb }) => Ok(horo_left_distance(*la, ba, *lb, bb)),
        (Product { combinator: ca, members: ma, weights: wa }, Product { combinator: cb, members: mb, weights: wb }) => {
            if ca != cb || ma.len() != mb.len() || wa != wb {
                return Err(TreeError::ShapeMismatch);
            }
            let mut acc = Q::zero();
            for ((x, y), w) in ma.iter().zip(mb).zip(wa) {
                let part = tree_distance(x, y)? * w;
                acc = match ca {
                    Combinator::L1 => acc + part,
                    Combinator::Linf => acc.max(part),
                };
            }
            Ok(acc)
        }
        _ => Err(TreeError::ShapeMismatch),
    }
}

/// Distinct lamp sets sit on distinct rays at height `(σ-1)/2`, so they are
/// exactly `σ-1` apart; equal lamp sets coincide.
pub fn rho_star_embed(p: &LampPoint, sigma: Q) -> Result<TreePoint, TreeError> {
    rho_star_for_key(RayKey::from_lamps(&p.lamps), sigma)
}

pub(crate) fn rho_star_for_key(ray: RayKey, sigma: Q) -> Result<TreePoint, TreeError> {
    if sigma.cmp(&Q::from_integer(1)) == Ordering::Less {
        return Err(TreeError::SigmaBelowOne);
    }
    TreePoint::star(ray, (sigma - Q::from_integer(1)) / Q::from_integer(2))
}
