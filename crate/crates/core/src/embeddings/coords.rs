//! Coordinate systems of line-valued maps and their lift to lamplighters:
//! each coordinate pushes `Lam(X)` into `Lam(Z)`, which then goes into three
//! trees, and the weighted l1 sum of all factors approximates `TSCP + ρ`.

use super::{embed_lamz, perturb_injective, EmbedError, IntLampPoint};
use crate::lamplighter::LampPoint;
use crate::metric::{generate, Family, FiniteMetricSpace};
use crate::rational::{self, Q};
use crate::trees::{Combinator, TreePoint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Weighted integer coordinates `φ_1..φ_m`. Each `φ_i / lips[i]` is expected
/// to be 1-Lipschitz.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinateSystem {
    #[serde(with = "rational::serde_q_vec")]
    pub weights: Vec<Q>,
    pub maps: Vec<Vec<i64>>,
    /// Missing in JSON means "measure it": see [`CoordinateSystem::fill_lips`].
    #[serde(default, with = "rational::serde_q_vec")]
    pub lips: Vec<Q>,
}

impl CoordinateSystem {
    /// Sets each recorded Lipschitz constant to the measured one (1 for constant maps).
    pub fn fill_lips(&mut self, space: &FiniteMetricSpace) {
        self.lips = self
            .maps
            .iter()
            .map(|map| {
                let mut lip = Q::zero();
                for i in 0..space.len() {
                    for j in i + 1..space.len() {
                        lip = lip.max(Q::from_integer(map[i].abs_diff(map[j]) as i128) / space.d(i, j));
                    }
                }
                if lip.is_zero() {
                    Q::one()
                } else {
                    lip
                }
            })
            .collect();
    }

    pub fn validate(&self, space: &FiniteMetricSpace) -> Result<(), EmbedError> {
        let m = self.maps.len();
        let bad = |msg: String| Err(EmbedError::InvalidCoordinates(msg));
        if m == 0 {
            return bad("no coordinates".into());
        }
        if self.weights.len() != m || self.lips.len() != m {
            return bad(format!("{m} maps need {m} weights and {m} Lipschitz constants"));
        }
        if self.weights.iter().any(|w| w.is_negative()) || self.weights.iter().sum::<Q>() != Q::one() {
            return bad("weights must be nonnegative and sum to 1".into());
        }
        for (i, (map, lip)) in self.maps.iter().zip(&self.lips).enumerate() {
            if map.len() != space.len() {
                return Err(EmbedError::LengthMismatch { expected: space.len(), got: map.len() });
            }
            if !lip.is_positive() {
                return bad(format!("coordinate {i} has a nonpositive Lipschitz constant"));
            }
            for a in 0..space.len() {
                for b in a + 1..space.len() {
                    if Q::from_integer(map[a].abs_diff(map[b]) as i128) > lip * space.d(a, b) {
                        return bad(format!("coordinate {i} exceeds its Lipschitz constant on ({a}, {b})"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `D = max d(x,y) / Σ α_i |φ_i x - φ_i y| / lip_i`, the quality of the
    /// system as a lower bound for `d`.
    pub fn quality(&self, space: &FiniteMetricSpace) -> Result<Q, EmbedError> {
        self.validate(space)?;
        let mut worst = Q::one();
        for a in 0..space.len() {
            for b in a + 1..space.len() {
                let spread: Q = self
                    .maps
                    .iter()
                    .zip(&self.weights)
                    .zip(&self.lips)
                    .map(|((map, w), lip)| w * Q::from_integer(map[a].abs_diff(map[b]) as i128) / lip)
                    .sum();
                if spread.is_zero() {
                    return Err(EmbedError::NotSeparating { a, b });
                }
                worst = worst.max(space.d(a, b) / spread);
            }
        }
        Ok(worst)
    }
}

/// Coordinates of the star `St_{n,k}`: for every nonempty set of arms, the
/// distance to the nearest of their tips, all with weight `1/(2^n - 1)`.
pub fn frechet_star(n: usize, k: usize) -> Result<(FiniteMetricSpace, CoordinateSystem), EmbedError> {
    if n > 16 {
        return Err(EmbedError::BadParameters("frechet_star supports at most 16 arms".into()));
    }
    let space = generate(&Family::Star { n, k })?;
    let tip = |arm: usize| arm * k;
    let count = (1usize << n) - 1;
    let maps: Vec<Vec<i64>> = (1..=count)
        .map(|mask| {
            (0..space.len())
                .map(|x| {
                    (1..=n)
                        .filter(|arm| mask & (1 << (arm - 1)) != 0)
                        .map(|arm| space.d(x, tip(arm)).to_integer() as i64)
                        .min()
                        .unwrap()
                })
                .collect()
        })
        .collect();
    let weight = Q::new(1, count as i128);
    let coords = CoordinateSystem { weights: vec![weight; count], maps, lips: vec![Q::one(); count] };
    Ok((space, coords))
}

/// Injective integer coordinates ready for lifting, all at one scale `σ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedCoordinates {
    #[serde(with = "rational::serde_q")]
    pub sigma: Q,
    #[serde(with = "rational::serde_q")]
    pub epsilon: Q,
    /// Quality `D` of the system before perturbation, when known.
    #[serde(with = "rational::serde_q_opt")]
    pub quality: Option<Q>,
    #[serde(with = "rational::serde_q_vec")]
    pub weights: Vec<Q>,
    pub maps: Vec<Vec<i64>>,
}

impl PreparedCoordinates {
    /// Uses maps that are already injective and `σ`-Lipschitz as they stand.
    pub fn from_injective(weights: Vec<Q>, maps: Vec<Vec<i64>>, sigma: Q) -> Result<Self, EmbedError> {
        if weights.len() != maps.len() {
            return Err(EmbedError::LengthMismatch { expected: maps.len(), got: weights.len() });
        }
        for (coordinate, map) in maps.iter().enumerate() {
            check_injective(coordinate, map)?;
        }
        Ok(Self { sigma, epsilon: Q::zero(), quality: None, weights, maps })
    }
}

fn check_injective(coordinate: usize, map: &[i64]) -> Result<(), EmbedError> {
    let mut seen: Vec<(i64, usize)> = map.iter().copied().zip(0..).collect();
    seen.sort_unstable();
    match seen.windows(2).find(|w| w[0].0 == w[1].0) {
        Some(w) => Err(EmbedError::NonInjectiveCoordinate { coordinate, a: w[0].1, b: w[1].1 }),
        None => Ok(()),
    }
}

/// Normalizes each coordinate to be 1-Lipschitz and perturbs all of them at
/// a common scale, using `ε' = min(ε, ε·δ_X/D)` so that the weighted spread
/// stays above `σ(1-ε)d/D`.
pub fn prepare_coordinates(space: &FiniteMetricSpace, coords: &CoordinateSystem, epsilon: Q) -> Result<PreparedCoordinates, EmbedError> {
    if !epsilon.is_positive() || epsilon >= Q::one() {
        return Err(EmbedError::BadParameters("epsilon must lie in (0, 1)".into()));
    }
    let quality = coords.quality(space)?;
    let separation = crate::metric::separation(space).unwrap_or(Q::one());
    let eps = epsilon.min(epsilon * separation / quality);
    let normalized: Vec<Vec<Q>> =
        coords.maps.iter().zip(&coords.lips).map(|(map, lip)| map.iter().map(|&v| Q::from_integer(v as i128) / lip).collect()).collect();
    let mut sigma = Q::one();
    for f in &normalized {
        sigma = sigma.max(perturb_injective(space, f, eps, None)?.big_sigma);
    }
    let maps = normalized.iter().map(|f| perturb_injective(space, f, eps, Some(sigma)).map(|r| r.f_tilde)).collect::<Result<Vec<_>, _>>()?;
    Ok(PreparedCoordinates { sigma, epsilon, quality: Some(quality), weights: coords.weights.clone(), maps })
}

/// The image of `(A, x)` in the weighted l1 product of `3m` trees.
pub fn lift_coordinates(prepared: &PreparedCoordinates, p: &LampPoint) -> Result<TreePoint, EmbedError> {
    let star_sigma = prepared.sigma * (Q::one() + prepared.epsilon);
    let mut members = Vec::with_capacity(3 * prepared.maps.len());
    let mut weights = Vec::with_capacity(3 * prepared.maps.len());
    for (map, w) in prepared.maps.iter().zip(&prepared.weights) {
        let at = |i: usize| map.get(i).copied().ok_or(EmbedError::LengthMismatch { expected: map.len(), got: i + 1 });
        let pushed = IntLampPoint { lamps: p.lamps.iter().map(|&l| at(l)).collect::<Result<_, _>>()?, pos: at(p.pos)? };
        let TreePoint::Product { members: trio, .. } = embed_lamz(&pushed, star_sigma, Combinator::L1)? else {
            unreachable!("embed_lamz returns a product");
        };
        members.extend(trio);
        weights.extend([*w; 3]);
    }
    Ok(TreePoint::weighted_product(Combinator::L1, members, weights)?)
}
