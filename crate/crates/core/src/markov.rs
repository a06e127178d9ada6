//! Empirical Markov-type ratios.
//!
//! For a stationary reversible chain `Z_t` and a map `f` into a metric space,
//! the ratio at time `t` is `E[d(f(Z_t), f(Z_0))^p] / (t E[d(f(Z_1), f(Z_0))^p])`.
//! The largest ratio over a scanned range is a lower bound on `M^p` for the
//! chosen chain and map; it is evidence, never a verdict on Markov type.

use crate::metric::FiniteMetricSpace;
use crate::rational::{self, Q};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::collections::VecDeque;
use thiserror::Error;

/// Chains with at most this many states are evaluated by exact matrix powers.
pub const EXACT_STATE_LIMIT: usize = 4096;
const CHUNK: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarkovError {
    #[error("chain has no states")]
    Empty,
    #[error("row {row} has length or index out of range")]
    Shape { row: usize },
    #[error("transition {i} -> {j} is negative")]
    NegativeEntry { i: usize, j: usize },
    #[error("row {row} does not sum to 1")]
    NotStochastic { row: usize },
    #[error("stationary weight of state {state} is not positive, or the weights do not sum to 1")]
    BadStationary { state: usize },
    #[error("detailed balance fails for states {i} and {j}")]
    NotReversible { i: usize, j: usize },
    #[error("graph is disconnected (state {unreached} is unreachable from 0)")]
    Disconnected { unreached: usize },
    #[error("laziness must lie in [0, 1)")]
    BadLaziness,
    #[error("exponent must lie in [1, 2]")]
    BadExponent,
    #[error("time values must be positive and nonempty")]
    BadTimes,
    #[error("E[d(f(Z_1), f(Z_0))^p] is zero")]
    DegenerateChain,
    #[error("negative distance between states {i} and {j}")]
    NegativeDistance { i: usize, j: usize },
    #[error("exact evaluation needs at most {limit} states, chain has {states}")]
    TooLargeForExact { states: usize, limit: usize },
    #[error("integer overflow while scaling")]
    Overflow,
}

/// A finite chain with rational transitions stored as sorted sparse rows,
/// checked for stochasticity, positivity of `π` and detailed balance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReversibleChain {
    rows: Vec<Vec<(usize, Q)>>,
    pi: Vec<Q>,
}

impl ReversibleChain {
    pub fn new(rows: Vec<Vec<(usize, Q)>>, pi: Vec<Q>) -> Result<Self, MarkovError> {
        let n = rows.len();
        if n == 0 {
            return Err(MarkovError::Empty);
        }
        if pi.len() != n {
            return Err(MarkovError::Shape { row: n.min(pi.len()) });
        }
        let mut sorted = Vec::with_capacity(n);
        for (i, row) in rows.into_iter().enumerate() {
            let mut row: Vec<(usize, Q)> = row.into_iter().filter(|(_, p)| !p.is_zero()).collect();
            row.sort_by_key(|&(j, _)| j);
            if row.iter().any(|&(j, _)| j >= n) || row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(MarkovError::Shape { row: i });
            }
            if let Some(&(j, _)) = row.iter().find(|(_, p)| p.is_negative()) {
                return Err(MarkovError::NegativeEntry { i, j });
            }
            if row.iter().map(|(_, p)| *p).sum::<Q>() != Q::one() {
                return Err(MarkovError::NotStochastic { row: i });
            }
            sorted.push(row);
        }
        if let Some(state) = pi.iter().position(|w| !w.is_positive()) {
            return Err(MarkovError::BadStationary { state });
        }
        if pi.iter().sum::<Q>() != Q::one() {
            return Err(MarkovError::BadStationary { state: 0 });
        }
        let chain = Self { rows: sorted, pi };
        for i in 0..n {
            for &(j, p) in &chain.rows[i] {
                if chain.pi[i] * p != chain.pi[j] * chain.transition(j, i) {
                    return Err(MarkovError::NotReversible { i: i.min(j), j: i.max(j) });
                }
            }
        }
        Ok(chain)
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    pub fn pi(&self) -> &[Q] {
        &self.pi
    }

    pub fn row(&self, i: usize) -> &[(usize, Q)] {
        &self.rows[i]
    }

    pub fn transition(&self, i: usize, j: usize) -> Q {
        match self.rows[i].binary_search_by_key(&j, |&(k, _)| k) {
            Ok(at) => self.rows[i][at].1,
            Err(_) => Q::zero(),
        }
    }

    /// The dense transition matrix, for small chains and reports.
    pub fn matrix(&self) -> Vec<Vec<Q>> {
        let n = self.states();
        (0..n).map(|i| (0..n).map(|j| self.transition(i, j)).collect()).collect()
    }
}

/// Reversible chain from a symmetric matrix of nonnegative conductances:
/// `P_ij = w_ij / w_i` and `π_i ∝ w_i`.
pub fn chain_from_weights(weights: &[Vec<Q>]) -> Result<ReversibleChain, MarkovError> {
    let n = weights.len();
    let mut totals = Vec::with_capacity(n);
    for (i, row) in weights.iter().enumerate() {
        if row.len() != n {
            return Err(MarkovError::Shape { row: i });
        }
        if let Some(j) = row.iter().position(|w| w.is_negative()) {
            return Err(MarkovError::NegativeEntry { i, j });
        }
        let total: Q = row.iter().sum();
        if total.is_zero() {
            return Err(MarkovError::BadStationary { state: i });
        }
        totals.push(total);
    }
    let grand: Q = totals.iter().sum();
    let rows = weights
        .iter()
        .zip(&totals)
        .map(|(row, total)| row.iter().enumerate().map(|(j, w)| (j, w / total)).collect())
        .collect();
    ReversibleChain::new(rows, totals.iter().map(|t| t / grand).collect())
}

/// Lazy simple random walk on an undirected graph given by its edges.
pub fn chain_from_adjacency(n: usize, edges: &[(usize, usize)], laziness: Q) -> Result<ReversibleChain, MarkovError> {
    if n == 0 {
        return Err(MarkovError::Empty);
    }
    if laziness.is_negative() || laziness >= Q::one() {
        return Err(MarkovError::BadLaziness);
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(MarkovError::Shape { row: a.max(b) });
        }
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(unreached) = seen.iter().position(|s| !s) {
        return Err(MarkovError::Disconnected { unreached });
    }
    if n == 1 {
        return ReversibleChain::new(vec![vec![(0, Q::one())]], vec![Q::one()]);
    }
    let degree_sum: usize = adj.iter().map(Vec::len).sum();
    let rows = adj
        .iter()
        .enumerate()
        .map(|(i, list)| {
            let step = (Q::one() - laziness) / Q::from_integer(list.len() as i128);
            let mut row: Vec<(usize, Q)> = list.iter().map(|&j| (j, step)).collect();
            row.push((i, laziness));
            row
        })
        .collect();
    let pi = adj.iter().map(|list| Q::new(list.len() as i128, degree_sum as i128)).collect();
    ReversibleChain::new(rows, pi)
}

/// Lazy simple random walk on the graph joining points at distance exactly 1.
pub fn chain_from_graph(space: &FiniteMetricSpace, laziness: Q) -> Result<ReversibleChain, MarkovError> {
    let n = space.len();
    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| space.d(i, j) == Q::one()).collect();
    chain_from_adjacency(n, &edges, laziness)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MarkovMethod {
    /// Exact below [`EXACT_STATE_LIMIT`] states, Monte Carlo above.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MarkovOptions {
    pub method: MarkovMethod,
    pub samples: u64,
    pub seed: u64,
}

impl Default for MarkovOptions {
    fn default() -> Self {
        Self { method: MarkovMethod::Auto, samples: 100_000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkovRow {
    pub t: u64,
    /// The exact ratio, present for integer exponents under exact evaluation.
    #[serde(serialize_with = "serialize_big_opt")]
    pub exact: Option<BigRational>,
    pub ratio: f64,
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkovReport {
    pub states: usize,
    #[serde(with = "rational::serde_q")]
    pub p: Q,
    pub method: &'static str,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub rows: Vec<MarkovRow>,
    /// Largest ratio over the scanned times: an empirical lower bound on `M^p`.
    pub max_ratio: f64,
    #[serde(serialize_with = "serialize_big_opt")]
    pub max_ratio_exact: Option<BigRational>,
    pub argmax_t: u64,
}

impl MarkovReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,ratio,exact,stderr\n");
        for row in &self.rows {
            let exact = row.exact.as_ref().map(ToString::to_string).unwrap_or_default();
            let stderr = row.stderr.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", row.t, row.ratio, exact, stderr));
        }
        out
    }
}

fn serialize_big_opt<S: Serializer>(value: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

fn big_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Markov-type ratios of `chain` under the pairwise image distances `dist`
/// (which must be symmetric and nonnegative), for exponent `p ∈ [1, 2]`.
pub fn markov_ratio<F>(chain: &ReversibleChain, dist: F, p: Q, t_values: &[u64], opts: MarkovOptions) -> Result<MarkovReport, MarkovError>
where
    F: Fn(usize, usize) -> Q + Sync,
{
    if p < Q::one() || p > Q::from_integer(2) {
        return Err(MarkovError::BadExponent);
    }
    let mut times: Vec<u64> = t_values.to_vec();
    times.sort_unstable();
    times.dedup();
    if times.is_empty() || times[0] == 0 {
        return Err(MarkovError::BadTimes);
    }
    let n = chain.states();
    let method = match opts.method {
        MarkovMethod::Auto if n <= EXACT_STATE_LIMIT => MarkovMethod::Exact,
        MarkovMethod::Auto => MarkovMethod::MonteCarlo,
        MarkovMethod::Exact if n > EXACT_STATE_LIMIT => return Err(MarkovError::TooLargeForExact { states: n, limit: EXACT_STATE_LIMIT }),
        other => other,
    };
    let rows = match method {
        MarkovMethod::Exact if p.is_integer() => exact_rows(chain, &dist, p.to_integer() as u32, &times)?,
        MarkovMethod::Exact => float_rows(chain, &dist, rational::to_f64(&p), &times)?,
        _ => monte_carlo_rows(chain, &dist, rational::to_f64(&p), &times, opts.samples, opts.seed)?,
    };
    let mut best = 0;
    for (k, row) in rows.iter().enumerate().skip(1) {
        let better = match (&row.exact, &rows[best].exact) {
            (Some(a), Some(b)) => a > b,
            _ => row.ratio > rows[best].ratio,
        };
        if better {
            best = k;
        }
    }
    let monte_carlo = method == MarkovMethod::MonteCarlo;
    Ok(MarkovReport {
        states: n,
        p,
        method: if monte_carlo { "monte_carlo" } else { "exact" },
        samples: monte_carlo.then_some(opts.samples),
        seed: monte_carlo.then_some(opts.seed),
        max_ratio: rows[best].ratio,
        max_ratio_exact: rows[best].exact.clone(),
        argmax_t: rows[best].t,
        rows,
    })
}

/// `markov_ratio` with `f` given as a state-to-point assignment into `space`.
pub fn markov_ratio_space(
    chain: &ReversibleChain,
    space: &FiniteMetricSpace,
    map: &[usize],
    p: Q,
    t_values: &[u64],
    opts: MarkovOptions,
) -> Result<MarkovReport, MarkovError> {
    if map.len() != chain.states() || map.iter().any(|&x| x >= space.len()) {
        return Err(MarkovError::Shape { row: map.len() });
    }
    markov_ratio(chain, |i, j| space.d(map[i], map[j]), p, t_values, opts)
}

fn checked_distance<F: Fn(usize, usize) -> Q>(dist: &F, i: usize, j: usize) -> Result<Q, MarkovError> {
    let d = dist(i, j);
    if d.is_negative() {
        return Err(MarkovError::NegativeDistance { i, j });
    }
    Ok(d)
}

fn checked_lcm(a: i128, b: i128) -> Result<i128, MarkovError> {
    (a / a.gcd(&b)).checked_mul(b).ok_or(MarkovError::Overflow)
}

/// `P = M / L` with `M` integral, and `π = π' / πden` with `π'` integral.
fn integer_chain(chain: &ReversibleChain) -> Result<(Vec<Vec<(usize, BigInt)>>, BigInt, Vec<BigInt>, BigInt), MarkovError> {
    let mut l: i128 = 1;
    for row in &chain.rows {
        for (_, p) in row {
            l = checked_lcm(l, *p.denom())?;
        }
    }
    let m = chain
        .rows
        .iter()
        .map(|row| row.iter().map(|(j, p)| (*j, BigInt::from(*p.numer()) * (l / p.denom()))).collect())
        .collect();
    let pden = rational::common_denominator(&chain.pi);
    let pnum = chain.pi.iter().map(|w| BigInt::from(*w.numer()) * (pden / w.denom())).collect();
    Ok((m, BigInt::from(l), pnum, BigInt::from(pden)))
}

fn exact_rows<F>(chain: &ReversibleChain, dist: &F, p: u32, times: &[u64]) -> Result<Vec<MarkovRow>, MarkovError>
where
    F: Fn(usize, usize) -> Q,
{
    let n = chain.states();
    let mut dden: i128 = 1;
    for i in 0..n {
        for j in 0..n {
            dden = checked_lcm(dden, *checked_distance(dist, i, j)?.denom())?;
        }
    }
    let (m, l, pnum, _) = integer_chain(chain)?;
    let tmax = *times.last().unwrap_or(&1);
    let wanted: Vec<u64> = std::iter::once(1).chain(times.iter().copied()).collect();
    let mut numerators = vec![BigInt::zero(); wanted.len()];
    let scaled = |i: usize, j: usize| -> BigInt {
        let d = dist(i, j);
        (BigInt::from(*d.numer()) * (dden / d.denom())).pow(p)
    };
    for i in 0..n {
        let mut v = vec![BigInt::zero(); n];
        v[i] = BigInt::one();
        for step in 1..=tmax {
            let mut next = vec![BigInt::zero(); n];
            for (k, mass) in v.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                for (j, w) in &m[k] {
                    next[*j] += mass * w;
                }
            }
            v = next;
            for (slot, &t) in wanted.iter().enumerate() {
                if t == step {
                    let mut acc = BigInt::zero();
                    for (j, mass) in v.iter().enumerate() {
                        if !mass.is_zero() && j != i {
                            acc += mass * scaled(i, j);
                        }
                    }
                    numerators[slot] += acc * &pnum[i];
                }
            }
        }
    }
    let first = numerators[0].clone();
    if first.is_zero() {
        return Err(MarkovError::DegenerateChain);
    }
    Ok(times
        .iter()
        .zip(&numerators[1..])
        .map(|(&t, num)| {
            let den = &first * BigInt::from(t) * num_traits::pow(l.clone(), (t - 1) as usize);
            let ratio = BigRational::new(num.clone(), den);
            MarkovRow { t, ratio: big_to_f64(&ratio), exact: Some(ratio), stderr: None }
        })
        .collect())
}

fn float_rows<F>(chain: &ReversibleChain, dist: &F, p: f64, times: &[u64]) -> Result<Vec<MarkovRow>, MarkovError>
where
    F: Fn(usize, usize) -> Q,
{
    let n = chain.states();
    let rows: Vec<Vec<(usize, f64)>> = chain.rows.iter().map(|r| r.iter().map(|(j, q)| (*j, rational::to_f64(q))).collect()).collect();
    let tmax = *times.last().unwrap_or(&1);
    let wanted: Vec<u64> = std::iter::once(1).chain(times.iter().copied()).collect();
    let mut sums = vec![0.0f64; wanted.len()];
    for i in 0..n {
        let powered: Vec<f64> = (0..n).map(|j| checked_distance(dist, i, j).map(|d| rational::to_f64(&d).powf(p))).collect::<Result<_, _>>()?;
        let weight = rational::to_f64(&chain.pi[i]);
        let mut v = vec![0.0f64; n];
        v[i] = 1.0;
        for step in 1..=tmax {
            let mut next = vec![0.0f64; n];
            for (k, mass) in v.iter().enumerate() {
                if *mass != 0.0 {
                    for (j, w) in &rows[k] {
                        next[*j] += mass * w;
                    }
                }
            }
            v = next;
            for (slot, &t) in wanted.iter().enumerate() {
                if t == step {
                    sums[slot] += weight * v.iter().zip(&powered).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }
    if sums[0] == 0.0 {
        return Err(MarkovError::DegenerateChain);
    }
    Ok(times.iter().zip(&sums[1..]).map(|(&t, s)| MarkovRow { t, exact: None, ratio: s / (t as f64 * sums[0]), stderr: None }).collect())
}

#[derive(Clone, Default)]
struct Moments {
    count: u64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    cross: Vec<f64>,
    first: f64,
    first_sq: f64,
}

impl Moments {
    fn merge(mut self, other: Moments) -> Moments {
        if self.sum.is_empty() {
            return other;
        }
        self.count += other.count;
        self.first += other.first;
        self.first_sq += other.first_sq;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
            self.cross[k] += other.cross[k];
        }
        self
    }
}

fn monte_carlo_rows<F>(chain: &ReversibleChain, dist: &F, p: f64, times: &[u64], samples: u64, seed: u64) -> Result<Vec<MarkovRow>, MarkovError>
where
    F: Fn(usize, usize) -> Q + Sync,
{
    if samples < 2 {
        return Err(MarkovError::BadTimes);
    }
    let to_weights = |ws: Vec<f64>| WeightedIndex::new(ws).map_err(|_| MarkovError::BadStationary { state: 0 });
    let start = to_weights(chain.pi.iter().map(rational::to_f64).collect())?;
    let steps: Vec<(Vec<usize>, WeightedIndex<f64>)> = chain
        .rows
        .iter()
        .map(|r| Ok((r.iter().map(|(j, _)| *j).collect(), to_weights(r.iter().map(|(_, q)| rational::to_f64(q)).collect())?)))
        .collect::<Result<_, MarkovError>>()?;
    let tmax = *times.last().unwrap_or(&1);
    let chunks = samples.div_ceil(CHUNK);
    let moments = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Moments, MarkovError> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut m = Moments { count, sum: vec![0.0; times.len()], sum_sq: vec![0.0; times.len()], cross: vec![0.0; times.len()], ..Moments::default() };
            let mut values = vec![0.0; times.len()];
            for _ in 0..count {
                let z0 = start.sample(&mut rng);
                let mut z = z0;
                let mut first = 0.0;
                let mut slot = 0;
                for step in 1..=tmax {
                    let (targets, law) = &steps[z];
                    z = targets[law.sample(&mut rng)];
                    let x = if step == 1 || times[slot] == step {
                        rational::to_f64(&checked_distance(dist, z0, z)?).powf(p)
                    } else {
                        0.0
                    };
                    if step == 1 {
                        first = x;
                    }
                    while slot < times.len() && times[slot] == step {
                        values[slot] = x;
                        slot += 1;
                    }
                }
                m.first += first;
                m.first_sq += first * first;
                for k in 0..times.len() {
                    m.sum[k] += values[k];
                    m.sum_sq[k] += values[k] * values[k];
                    m.cross[k] += values[k] * first;
                }
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    let n = moments.count as f64;
    let a1 = moments.first / n;
    if a1 == 0.0 {
        return Err(MarkovError::DegenerateChain);
    }
    let var1 = (moments.first_sq / n - a1 * a1) * n / (n - 1.0);
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let at = moments.sum[k] / n;
            let vart = (moments.sum_sq[k] / n - at * at) * n / (n - 1.0);
            let cov = (moments.cross[k] / n - at * a1) * n / (n - 1.0);
            let r = at / a1;
            let var_r = ((vart - 2.0 * r * cov + r * r * var1) / (a1 * a1 * n)).max(0.0);
            MarkovRow { t, exact: None, ratio: r / t as f64, stderr: Some(var_r.sqrt() / t as f64) }
        })
        .collect())
}
