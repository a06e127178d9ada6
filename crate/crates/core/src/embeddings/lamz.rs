use super::EmbedError;
use crate::lamplighter::{tsp_line_oracle, LampPoint};
use crate::metric::FiniteMetricSpace;
use crate::rational::Q;
use crate::trees::{rho_star_for_key, Combinator, RayKey, TreePoint};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A point of `Lam(Z)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IntLampPoint {
    pub lamps: BTreeSet<i64>,
    pub pos: i64,
}

impl IntLampPoint {
    pub fn new(lamps: impl IntoIterator<Item = i64>, pos: i64) -> Self {
        Self { lamps: lamps.into_iter().collect(), pos }
    }

    pub fn tscp(&self, other: &Self) -> i64 {
        let flipped = self.lamps.symmetric_difference(&other.lamps);
        let lo = flipped.clone().copied().chain([self.pos, other.pos]).min().unwrap();
        let hi = flipped.copied().chain([self.pos, other.pos]).max().unwrap();
        hi - lo
    }

    pub fn tsp(&self, other: &Self) -> i64 {
        let flipped: Vec<i64> = self.lamps.symmetric_difference(&other.lamps).copied().collect();
        tsp_line_oracle(self.pos, other.pos, &flipped)
    }

    pub fn rho(&self, other: &Self) -> i64 {
        i64::from(self.lamps != other.lamps)
    }
}

/// Integer positions realizing `space` isometrically inside `Z`, with point
/// 0 at the origin.
pub fn line_coordinates(space: &FiniteMetricSpace) -> Result<Vec<i64>, EmbedError> {
    let n = space.len();
    let anchor = (0..n).max_by_key(|&j| (space.d(0, j), std::cmp::Reverse(j))).unwrap_or(0);
    let from_anchor: Vec<i64> = (0..n)
        .map(|i| {
            let d = space.d(anchor, i);
            if d.is_integer() {
                d.to_integer().to_i64().ok_or(EmbedError::Overflow)
            } else {
                Err(EmbedError::NotALineSpace)
            }
        })
        .collect::<Result<_, _>>()?;
    let coords: Vec<i64> = from_anchor.iter().map(|c| from_anchor.first().copied().unwrap_or(0) - c).collect();
    for i in 0..n {
        for j in i + 1..n {
            if Q::from_integer(coords[i].abs_diff(coords[j]) as i128) != space.d(i, j) {
                return Err(EmbedError::NotALineSpace);
            }
        }
    }
    Ok(coords)
}

/// `(A, x) -> (right horocyclic tree, left horocyclic tree, ρ-star)`: the
/// right tree remembers the lamps at or after `x`, the left tree the lamps
/// strictly before `x`, and the star separates distinct lamp sets by `σ-1`.
pub fn embed_lamz(p: &IntLampPoint, sigma: Q, combinator: Combinator) -> Result<TreePoint, EmbedError> {
    let right = TreePoint::horo_right(p.pos, p.lamps.range(p.pos..).copied().collect())?;
    let left = TreePoint::horo_left(p.pos, p.lamps.range(..p.pos).copied().collect())?;
    let star = rho_star_for_key(RayKey::from_indices(p.lamps.iter().copied()), sigma)?;
    Ok(TreePoint::product(combinator, vec![right, left, star])?)
}

/// `embed_lamz` for a lamp point over a space isometric to a subset of `Z`,
/// with `coords` from [`line_coordinates`].
pub fn embed_lamz_space(coords: &[i64], p: &LampPoint, sigma: Q, combinator: Combinator) -> Result<TreePoint, EmbedError> {
    let at = |i: usize| coords.get(i).copied().ok_or(EmbedError::LengthMismatch { expected: coords.len(), got: i + 1 });
    let lamps = p.lamps.iter().map(|&l| at(l)).collect::<Result<BTreeSet<i64>, _>>()?;
    embed_lamz(&IntLampPoint { lamps, pos: at(p.pos)? }, sigma, combinator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{generate, validate_metric, Family};
    use crate::rational::int;
    use crate::trees::tree_distance;

    #[test]
    fn basepoint_and_single_lamp() {
        let empty = IntLampPoint::new([], 0);
        let lit = IntLampPoint::new([0], 0);
        let e = embed_lamz(&empty, int(1), Combinator::L1).unwrap();
        let l = embed_lamz(&lit, int(1), Combinator::L1).unwrap();
        assert_eq!(tree_distance(&e, &e).unwrap(), int(0));
        assert_eq!(tree_distance(&e, &l).unwrap(), int(2));
        assert_eq!(empty.tscp(&lit) + empty.rho(&lit), 1);
    }

    #[test]
    fn lamp_semimetrics_on_z() {
        let a = IntLampPoint::new([-2], 0);
        let b = IntLampPoint::new([3], 0);
        assert_eq!(a.tscp(&b), 5);
        assert_eq!(a.tsp(&b), 10);
        assert_eq!(a.rho(&b), 1);
    }

    #[test]
    fn line_coordinates_detect_lines() {
        let s = generate(&Family::Path { n: 4 }).unwrap();
        assert_eq!(line_coordinates(&s).unwrap(), vec![0, 1, 2, 3, 4]);
        let c = generate(&Family::Cycle { n: 5 }).unwrap();
        assert_eq!(line_coordinates(&c).unwrap_err(), EmbedError::NotALineSpace);
        let gaps = validate_metric(vec![vec![int(0), int(3)], vec![int(3), int(0)]]).unwrap();
        assert_eq!(line_coordinates(&gaps).unwrap(), vec![0, 3]);
    }

    #[test]
    fn space_version_matches_integer_version() {
        let s = generate(&Family::Path { n: 6 }).unwrap();
        let coords = line_coordinates(&s).unwrap();
        let p = LampPoint::new([1, 5], 3);
        let direct = IntLampPoint::new([coords[1], coords[5]], coords[3]);
        assert_eq!(embed_lamz_space(&coords, &p, int(2), Combinator::Linf).unwrap(), embed_lamz(&direct, int(2), Combinator::Linf).unwrap());
    }
}
