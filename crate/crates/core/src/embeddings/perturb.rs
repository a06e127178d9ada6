//! Turning a real-valued Lipschitz map into an injective integer-valued one
//! at a large scale `σ`, at the cost of an additive `ε` in both Lipschitz
//! bounds.

use super::EmbedError;
use crate::metric::FiniteMetricSpace;
use crate::rational::{self, Q};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationResult {
    #[serde(with = "rational::serde_q")]
    pub sigma: Q,
    pub f_tilde: Vec<i64>,
    #[serde(with = "rational::serde_q")]
    pub r1: Q,
    /// Smallest gap between distinct values of `f`; absent when `f` is constant.
    #[serde(with = "rational::serde_q_opt")]
    pub r2: Option<Q>,
    #[serde(with = "rational::serde_q")]
    pub delta: Q,
    #[serde(rename = "Sigma", with = "rational::serde_q")]
    pub big_sigma: Q,
}

/// Which of the three guarantees failed, and where.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "bullet", rename_all = "snake_case")]
pub enum PerturbationViolation {
    Injectivity { a: usize, b: usize },
    Upper { a: usize, b: usize },
    Lower { a: usize, b: usize },
}

fn lipschitz(space: &FiniteMetricSpace, f: &[Q]) -> Q {
    let n = space.len();
    let mut lip = Q::zero();
    for i in 0..n {
        for j in i + 1..n {
            lip = lip.max((f[i] - f[j]).abs() / space.d(i, j));
        }
    }
    lip
}

pub fn perturb_injective(space: &FiniteMetricSpace, f: &[Q], epsilon: Q, sigma: Option<Q>) -> Result<PerturbationResult, EmbedError> {
    let n = space.len();
    if f.len() != n {
        return Err(EmbedError::LengthMismatch { expected: n, got: f.len() });
    }
    if !epsilon.is_positive() {
        return Err(EmbedError::NonpositiveEpsilon);
    }
    let min_d = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| space.d(i, j)).min();
    let r1 = min_d.map_or(Q::one(), |d| d.min(Q::one()));

    let mut values: Vec<Q> = f.to_vec();
    values.sort();
    values.dedup();
    let r2 = values.windows(2).map(|w| w[1] - w[0]).min();

    let half_r1_eps = r1 * epsilon / Q::from_integer(2);
    let delta = match r2 {
        Some(gap) => (gap / Q::from_integer(3)).min(half_r1_eps),
        None => half_r1_eps,
    };
    let big_sigma = Q::from_integer(n as i128) / delta;
    let sigma = match sigma {
        Some(s) if s < big_sigma => return Err(EmbedError::SigmaTooSmall { sigma: s, required: big_sigma }),
        Some(s) => s,
        None => big_sigma,
    };

    // Points sharing an f-value take consecutive integers from floor(σ v);
    // a group of g points stays within g/σ <= n/σ <= δ of v.
    let mut next_slot: BTreeMap<Q, i64> = BTreeMap::new();
    let mut f_tilde = Vec::with_capacity(n);
    for v in f {
        let slot = match next_slot.get_mut(v) {
            Some(s) => s,
            None => {
                let base = (sigma * v).floor().to_integer().to_i64().ok_or(EmbedError::Overflow)?;
                next_slot.entry(*v).or_insert(base)
            }
        };
        f_tilde.push(*slot);
        *slot = slot.checked_add(1).ok_or(EmbedError::Overflow)?;
    }
    Ok(PerturbationResult { sigma, f_tilde, r1, r2, delta, big_sigma })
}

impl PerturbationResult {
    /// Checks injectivity, `|f~x - f~y| <= σ(Lip f + ε) d(x,y)` and
    /// `|f~x - f~y| >= σ(|fx - fy| - ε)` over all pairs.
    pub fn verify(&self, space: &FiniteMetricSpace, f: &[Q], epsilon: Q) -> Result<(), PerturbationViolation> {
        let lip = lipschitz(space, f);
        let n = space.len();
        for a in 0..n {
            for b in a + 1..n {
                if self.f_tilde[a] == self.f_tilde[b] {
                    return Err(PerturbationViolation::Injectivity { a, b });
                }
                let gap = Q::from_integer(self.f_tilde[a].abs_diff(self.f_tilde[b]) as i128);
                if gap > self.sigma * (lip + epsilon) * space.d(a, b) {
                    return Err(PerturbationViolation::Upper { a, b });
                }
                if gap < self.sigma * ((f[a] - f[b]).abs() - epsilon) {
                    return Err(PerturbationViolation::Lower { a, b });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{generate, Family};
    use crate::rational::{frac, int};

    #[test]
    fn constant_map_on_two_points() {
        let s = generate(&Family::Path { n: 1 }).unwrap();
        let f = [int(0), int(0)];
        let r = perturb_injective(&s, &f, int(1), None).unwrap();
        assert_eq!(r.r1, int(1));
        assert_eq!(r.r2, None);
        assert_eq!(r.delta, frac(1, 2));
        assert_eq!(r.big_sigma, int(4));
        assert_eq!(r.sigma, int(4));
        assert_eq!(r.f_tilde, vec![0, 1]);
        r.verify(&s, &f, int(1)).unwrap();
    }

    #[test]
    fn injective_integer_map_is_scaled() {
        let s = generate(&Family::Path { n: 3 }).unwrap();
        let f: Vec<Q> = (0..4).map(int).collect();
        let eps = frac(1, 10);
        let r = perturb_injective(&s, &f, eps, None).unwrap();
        assert_eq!(r.delta, frac(1, 20));
        assert_eq!(r.sigma, int(80));
        assert_eq!(r.f_tilde, vec![0, 80, 160, 240]);
        r.verify(&s, &f, eps).unwrap();
    }

    #[test]
    fn larger_sigma_is_accepted_smaller_rejected() {
        let s = generate(&Family::Cycle { n: 5 }).unwrap();
        let f = [frac(1, 3), int(0), frac(1, 3), int(1), frac(1, 2)];
        let eps = frac(1, 4);
        let base = perturb_injective(&s, &f, eps, None).unwrap();
        let big = perturb_injective(&s, &f, eps, Some(base.sigma * int(3))).unwrap();
        big.verify(&s, &f, eps).unwrap();
        assert!(matches!(perturb_injective(&s, &f, eps, Some(base.sigma / int(2))), Err(EmbedError::SigmaTooSmall { .. })));
    }

    #[test]
    fn rejects_bad_input() {
        let s = generate(&Family::Path { n: 1 }).unwrap();
        assert_eq!(perturb_injective(&s, &[int(0), int(0)], int(0), None).unwrap_err(), EmbedError::NonpositiveEpsilon);
        assert_eq!(perturb_injective(&s, &[int(0)], int(1), None).unwrap_err(), EmbedError::LengthMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn verify_catches_a_collision() {
        let s = generate(&Family::Path { n: 1 }).unwrap();
        let f = [int(0), int(0)];
        let mut r = perturb_injective(&s, &f, int(1), None).unwrap();
        r.f_tilde = vec![3, 3];
        assert_eq!(r.verify(&s, &f, int(1)).unwrap_err(), PerturbationViolation::Injectivity { a: 0, b: 1 });
    }
}
