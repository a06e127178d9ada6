//! Weak biLipschitz families: the checker, the Nagata-cover construction
//! into products of R-stars, and the lift of integer-valued families from a
//! base space to its lamplighter.

use super::{embed_lamz, line_coordinates, EmbedError, IntLampPoint};
use crate::lamplighter::{tscp, LampPoint};
use crate::metric::FiniteMetricSpace;
use crate::rational::{self, Q};
use crate::trees::{tree_distance, Combinator, RayKey, TreePoint};
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeakImage {
    Trees { points: Vec<TreePoint> },
    /// Integer vectors under the linf norm.
    Vectors { points: Vec<Vec<i64>> },
    /// Tuples in `Lam(Z)^m` under `max_i (TSCP + rho_weight * ρ)`.
    LampZ {
        #[serde(with = "rational::serde_q")]
        rho_weight: Q,
        points: Vec<Vec<IntLampPoint>>,
    },
}

impl WeakImage {
    pub fn len(&self) -> usize {
        match self {
            WeakImage::Trees { points } => points.len(),
            WeakImage::Vectors { points } => points.len(),
            WeakImage::LampZ { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn distance(&self, i: usize, j: usize) -> Result<Q, EmbedError> {
        match self {
            WeakImage::Trees { points } => Ok(tree_distance(&points[i], &points[j])?),
            WeakImage::Vectors { points } => {
                let gap = points[i].iter().zip(&points[j]).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0);
                Ok(Q::from_integer(gap as i128))
            }
            WeakImage::LampZ { rho_weight, points } => Ok(points[i]
                .iter()
                .zip(&points[j])
                .map(|(p, q)| Q::from_integer(p.tscp(q) as i128) + rho_weight * Q::from_integer(p.rho(q) as i128))
                .max()
                .unwrap_or_else(Q::zero)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakScale {
    #[serde(with = "rational::serde_q")]
    pub t: Q,
    #[serde(with = "rational::serde_q")]
    pub sigma: Q,
    pub image: WeakImage,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakFamily {
    #[serde(with = "rational::serde_q")]
    pub constant: Q,
    pub scales: Vec<WeakScale>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakBound {
    /// Image distance exceeded `σ_t` times the domain distance.
    Lipschitz,
    /// Domain distance at least `Ct` but image distance below `tσ_t`.
    Separation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakFailure {
    #[serde(with = "rational::serde_q")]
    pub t: Q,
    pub i: usize,
    pub j: usize,
    pub bound: WeakBound,
    #[serde(with = "rational::serde_q")]
    pub domain: Q,
    #[serde(with = "rational::serde_q")]
    pub image: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakCheck {
    pub passed: bool,
    pub pairs_checked: u64,
    /// The first failing (scale, pair) in scale order then pair order.
    pub failure: Option<WeakFailure>,
}

/// Checks both bullets of the weak `C`-biLipschitz definition on every pair
/// of the `n` domain points at every scale of the family.
pub fn weak_check<F>(n: usize, domain: F, family: &WeakFamily, c: Q) -> Result<WeakCheck, EmbedError>
where
    F: Fn(usize, usize) -> Q + Sync,
{
    let mut pairs_checked = 0u64;
    for scale in &family.scales {
        if scale.image.len() != n {
            return Err(EmbedError::LengthMismatch { expected: n, got: scale.image.len() });
        }
        let threshold = c * scale.t;
        let floor = scale.t * scale.sigma;
        let failure = (0..n)
            .into_par_iter()
            .map(|i| -> Result<Option<WeakFailure>, EmbedError> {
                for j in i + 1..n {
                    let d = domain(i, j);
                    let e = scale.image.distance(i, j)?;
                    let bound = if e > scale.sigma * d {
                        Some(WeakBound::Lipschitz)
                    } else if d >= threshold && e < floor {
                        Some(WeakBound::Separation)
                    } else {
                        None
                    };
                    if let Some(bound) = bound {
                        return Ok(Some(WeakFailure { t: scale.t, i, j, bound, domain: d, image: e }));
                    }
                }
                Ok(None)
            })
            .find_map_first(|r| match r {
                Ok(None) => None,
                other => Some(other),
            });
        pairs_checked += (n * n.saturating_sub(1) / 2) as u64;
        if let Some(found) = failure {
            return Ok(WeakCheck { passed: false, pairs_checked, failure: found? });
        }
    }
    Ok(WeakCheck { passed: true, pairs_checked, failure: None })
}

/// A cover at scale `s` by `n + 1` parts, claimed to have `s`-chain
/// components of diameter at most `γ s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NagataCover {
    #[serde(with = "rational::serde_q")]
    pub scale: Q,
    #[serde(with = "rational::serde_q")]
    pub gamma: Q,
    pub parts: Vec<Vec<usize>>,
}

/// Two-part cover of a line space: consecutive blocks of length `s = 4t`
/// alternate between the parts, so same-part blocks are more than `s` apart
/// and every component has diameter below `s`.
pub fn interval_cover(space: &FiniteMetricSpace, t: Q) -> Result<NagataCover, EmbedError> {
    if !t.is_positive() {
        return Err(EmbedError::BadParameters("scale must be positive".into()));
    }
    let coords = line_coordinates(space)?;
    let lowest = coords.iter().copied().min().unwrap_or(0);
    let s = t * Q::from_integer(4);
    let mut parts = vec![Vec::new(), Vec::new()];
    for (i, &c) in coords.iter().enumerate() {
        let block = (Q::from_integer((c - lowest) as i128) / s).floor().to_integer();
        parts[(block % 2) as usize].push(i);
    }
    Ok(NagataCover { scale: s, gamma: Q::from_integer(1), parts })
}

/// The constant for which the Nagata construction is weakly biLipschitz:
/// a point `y` at distance `Ct` from `x ∈ Y_α` is at least `(C - 4γ)t` from
/// `Y_α`, which must reach `2t`.
pub fn nagata_constant(gamma: Q) -> Q {
    (Q::from_integer(6) + gamma).max(Q::from_integer(2) + Q::from_integer(4) * gamma)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NagataScale {
    #[serde(with = "rational::serde_q")]
    pub t: Q,
    /// Per part, its `4t`-components.
    pub components: Vec<Vec<Vec<usize>>>,
    /// Linf products of one R-star per part.
    pub images: Vec<TreePoint>,
    /// Largest number of components at which one point has a nonzero value.
    pub max_active: usize,
}

impl NagataScale {
    pub fn to_weak_scale(&self) -> WeakScale {
        WeakScale { t: self.t, sigma: Q::from_integer(2), image: WeakImage::Trees { points: self.images.clone() } }
    }
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

pub fn nagata_weak(space: &FiniteMetricSpace, cover: &NagataCover, t: Q) -> Result<NagataScale, EmbedError> {
    let n = space.len();
    let s = t * Q::from_integer(4);
    if cover.scale != s {
        return Err(EmbedError::BadParameters(format!("cover scale {} does not equal 4t = {s}", cover.scale)));
    }
    let mut covered = vec![false; n];
    for &p in cover.parts.iter().flatten() {
        if p >= n {
            return Err(EmbedError::BadParameters(format!("cover mentions point {p} of a {n}-point space")));
        }
        covered[p] = true;
    }
    if let Some(point) = covered.iter().position(|c| !c) {
        return Err(EmbedError::NotACover { point });
    }

    let limit = cover.gamma * s;
    let mut components = Vec::with_capacity(cover.parts.len());
    for (part_index, part) in cover.parts.iter().enumerate() {
        let mut parent: Vec<usize> = (0..part.len()).collect();
        for a in 0..part.len() {
            for b in a + 1..part.len() {
                if space.d(part[a], part[b]) <= s {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot_of_root = vec![usize::MAX; part.len()];
        for a in 0..part.len() {
            let root = find(&mut parent, a);
            if slot_of_root[root] == usize::MAX {
                slot_of_root[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot_of_root[root]].push(part[a]);
        }
        for group in &groups {
            for (ia, &a) in group.iter().enumerate() {
                if let Some(&b) = group[ia + 1..].iter().find(|&&b| space.d(a, b) > limit) {
                    return Err(EmbedError::CoverInvalid { part: part_index, a, b });
                }
            }
        }
        components.push(groups);
    }

    let two_t = t * Q::from_integer(2);
    let mut max_active = 0;
    let mut images = Vec::with_capacity(n);
    for x in 0..n {
        let mut stars = Vec::with_capacity(components.len());
        for (part_index, groups) in components.iter().enumerate() {
            let values: Vec<(usize, Q)> = groups
                .iter()
                .enumerate()
                .map(|(alpha, g)| {
                    let dist = g.iter().map(|&y| space.d(x, y)).min().expect("components are nonempty");
                    (alpha, (two_t - dist).max(Q::zero()))
                })
                .filter(|(_, v)| v.is_positive())
                .collect();
            max_active = max_active.max(values.len());
            stars.push(match values.first() {
                Some(&(alpha, height)) => TreePoint::star(RayKey::from_indices([part_index as i64, alpha as i64]), height)?,
                None => TreePoint::wedge_point(),
            });
        }
        images.push(TreePoint::product(Combinator::Linf, stars)?);
    }
    Ok(NagataScale { t, components, images, max_active })
}

fn check_family_shape(points: &[LampPoint], family: &WeakFamily) -> Result<usize, EmbedError> {
    let mut width = None;
    for scale in &family.scales {
        let WeakImage::Vectors { points: vectors } = &scale.image else {
            return Err(EmbedError::BadParameters("lifting needs an integer-vector family".into()));
        };
        for v in vectors {
            if *width.get_or_insert(v.len()) != v.len() {
                return Err(EmbedError::BadParameters("vectors of different dimensions".into()));
            }
        }
        for coordinate in 0..width.unwrap_or(0) {
            let mut seen: Vec<(i64, usize)> = vectors.iter().map(|v| v[coordinate]).zip(0..).collect();
            seen.sort_unstable();
            if let Some(w) = seen.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(EmbedError::NonInjectiveCoordinate { coordinate, a: w[0].1, b: w[1].1 });
            }
        }
        let base = vectors.len();
        if let Some(&index) = points.iter().flat_map(|p| std::iter::once(&p.pos).chain(&p.lamps)).find(|&&i| i >= base) {
            return Err(EmbedError::LengthMismatch { expected: base, got: index + 1 });
        }
    }
    Ok(width.unwrap_or(0))
}

fn push(points: &[LampPoint], vectors: &[Vec<i64>], m: usize) -> Vec<Vec<IntLampPoint>> {
    points
        .iter()
        .map(|p| (0..m).map(|i| IntLampPoint { lamps: p.lamps.iter().map(|&a| vectors[a][i]).collect(), pos: vectors[p.pos][i] }).collect())
        .collect()
}

/// Coordinatewise pushforward of lamp points into `Lam(Z)^m` with the metric
/// `max_i (TSCP + σ_t ρ)`; weak with constant `C_1 + 1` and the same `σ_t`.
pub fn pushforward_weak(points: &[LampPoint], family: &WeakFamily) -> Result<WeakFamily, EmbedError> {
    let m = check_family_shape(points, family)?;
    let scales = family
        .scales
        .iter()
        .map(|scale| {
            let WeakImage::Vectors { points: vectors } = &scale.image else { unreachable!() };
            WeakScale { t: scale.t, sigma: scale.sigma, image: WeakImage::LampZ { rho_weight: scale.sigma, points: push(points, vectors, m) } }
        })
        .collect();
    Ok(WeakFamily { constant: family.constant + Q::from_integer(1), scales })
}

/// The pushforward composed with the tree embedding of `Lam(Z)` in each
/// coordinate, as one linf product of `3m` trees. The tree step distorts
/// `TSCP + σρ` by a factor within `[1/3, 4]` under linf, so scale `t` is
/// reindexed to `t/18` with scaling factor `4σ_t`, and the constant becomes
/// `18(C_1 + 1)`.
pub fn lift_weak(points: &[LampPoint], family: &WeakFamily) -> Result<WeakFamily, EmbedError> {
    let m = check_family_shape(points, family)?;
    let eighteen = Q::from_integer(18);
    let mut scales = Vec::with_capacity(family.scales.len());
    for scale in &family.scales {
        let WeakImage::Vectors { points: vectors } = &scale.image else { unreachable!() };
        let images = push(points, vectors, m)
            .into_iter()
            .map(|tuple| {
                let mut members = Vec::with_capacity(3 * m);
                for p in &tuple {
                    let TreePoint::Product { members: trio, .. } = embed_lamz(p, scale.sigma, Combinator::Linf)? else { unreachable!() };
                    members.extend(trio);
                }
                Ok(TreePoint::product(Combinator::Linf, members)?)
            })
            .collect::<Result<Vec<_>, EmbedError>>()?;
        scales.push(WeakScale { t: scale.t / eighteen, sigma: scale.sigma * Q::from_integer(4), image: WeakImage::Trees { points: images } });
    }
    Ok(WeakFamily { constant: eighteen * (family.constant + Q::from_integer(1)), scales })
}

/// `TSCP + ρ` between two lamp points, the domain metric for lifted families.
pub fn tscp_plus_rho(space: &FiniteMetricSpace, p: &LampPoint, q: &LampPoint) -> Result<Q, EmbedError> {
    Ok(tscp(space, p, q)? + crate::lamplighter::rho(p, q))
}
