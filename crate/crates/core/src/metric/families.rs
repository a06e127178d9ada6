use super::{FiniteMetricSpace, MetricError};
use crate::rational::Q;
use serde::{Deserialize, Serialize};

/// The example families, all carrying their exact integer graph distance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `{0, 1, ..., n}` with the line distance.
    Path { n: usize },
    /// The cycle group `Z_n` with shortest-arc distance.
    Cycle { n: usize },
    /// The box `[0, d_1] x ... x [0, d_m]` of integer points with the l1 distance.
    Grid { dims: Vec<usize> },
    /// One-point coalescence of `n` paths of length `k`.
    Star { n: usize, k: usize },
    /// One-point coalescence of `n` cycles `Z_k`.
    Rose { n: usize, k: usize },
    /// Weighted tree on `n` vertices with shortest-path distance.
    Tree { n: usize, edges: Vec<(usize, usize, u64)> },
}

impl Family {
    /// `{0,1}^n` with the Hamming distance, as the grid with unit sides.
    pub fn hypercube(n: usize) -> Self {
        Family::Grid { dims: vec![1; n] }
    }
}

pub fn generate(family: &Family) -> Result<FiniteMetricSpace, MetricError> {
    match family {
        Family::Path { n } => Ok(path(*n)),
        Family::Cycle { n } => cycle(*n),
        Family::Grid { dims } => grid(dims),
        Family::Star { n, k } => star(*n, *k),
        Family::Rose { n, k } => rose(*n, *k),
        Family::Tree { n, edges } => tree(*n, edges),
    }
}

fn bad(msg: impl Into<String>) -> MetricError {
    MetricError::BadParameters(msg.into())
}

fn path(n: usize) -> FiniteMetricSpace {
    let size = n + 1;
    let matrix = (0..size).map(|i| (0..size).map(|j| i.abs_diff(j) as u64).collect()).collect();
    FiniteMetricSpace::from_integer_matrix(matrix, (0..size).map(|i| i.to_string()).collect())
}

fn cycle(n: usize) -> Result<FiniteMetricSpace, MetricError> {
    if n < 2 {
        return Err(bad(format!("cycle({n}) needs n >= 2")));
    }
    let matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let arc = i.abs_diff(j);
                    arc.min(n - arc) as u64
                })
                .collect()
        })
        .collect();
    Ok(FiniteMetricSpace::from_integer_matrix(matrix, (0..n).map(|i| i.to_string()).collect()))
}

fn grid(dims: &[usize]) -> Result<FiniteMetricSpace, MetricError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(bad("grid needs at least one dimension, each side >= 1"));
    }
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d + 1)).filter(|&t| t <= 4096);
    let Some(total) = total else {
        return Err(bad("grid has more than 4096 points"));
    };
    // Last coordinate varies fastest.
    let coords: Vec<Vec<usize>> = (0..total)
        .map(|mut idx| {
            let mut c = vec![0; dims.len()];
            for (slot, &d) in c.iter_mut().zip(dims).rev() {
                *slot = idx % (d + 1);
                idx /= d + 1;
            }
            c
        })
        .collect();
    let matrix = coords
        .iter()
        .map(|a| coords.iter().map(|b| a.iter().zip(b).map(|(x, y)| x.abs_diff(*y) as u64).sum()).collect())
        .collect();
    let labels = coords
        .iter()
        .map(|c| format!("({})", c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    Ok(FiniteMetricSpace::from_integer_matrix(matrix, labels))
}

/// Point 0 is the center; arm `i` (1-based) at height `a` is index `1 + (i-1)k + (a-1)`.
fn star(n: usize, k: usize) -> Result<FiniteMetricSpace, MetricError> {
    if n == 0 || k == 0 {
        return Err(bad("star(n,k) needs n >= 1 and k >= 1"));
    }
    let mut place = vec![(0usize, 0u64)];
    for arm in 1..=n {
        for a in 1..=k {
            place.push((arm, a as u64));
        }
    }
    let matrix = place
        .iter()
        .map(|&(ai, ha)| place.iter().map(|&(bi, hb)| if ai == bi || ha == 0 || hb == 0 { ha.abs_diff(hb) } else { ha + hb }).collect())
        .collect();
    let labels = place.iter().map(|&(arm, h)| if h == 0 { "0".to_string() } else { format!("{h}e{arm}") }).collect();
    Ok(FiniteMetricSpace::from_integer_matrix(matrix, labels))
}

/// Point 0 is the shared vertex; cycle `c` (1-based) contributes positions `1..k`.
fn rose(n: usize, k: usize) -> Result<FiniteMetricSpace, MetricError> {
    if n == 0 || k < 2 {
        return Err(bad("rose(n,k) needs n >= 1 and k >= 2"));
    }
    let mut place = vec![(0usize, 0usize)];
    for c in 1..=n {
        for a in 1..k {
            place.push((c, a));
        }
    }
    let arc = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        d.min(k - d) as u64
    };
    let matrix = place
        .iter()
        .map(|&(ca, a)| place.iter().map(|&(cb, b)| if ca == cb || a == 0 || b == 0 { arc(a, b) } else { arc(a, 0) + arc(0, b) }).collect())
        .collect();
    let labels = place.iter().map(|&(c, a)| if a == 0 { "0".to_string() } else { format!("c{c}:{a}") }).collect();
    Ok(FiniteMetricSpace::from_integer_matrix(matrix, labels))
}

fn tree(n: usize, edges: &[(usize, usize, u64)]) -> Result<FiniteMetricSpace, MetricError> {
    if n == 0 {
        return Err(bad("tree needs at least one vertex"));
    }
    if edges.len() != n - 1 {
        return Err(bad(format!("a tree on {n} vertices has {} edges, got {}", n - 1, edges.len())));
    }
    let weighted: Vec<(usize, usize, Q)> = edges.iter().map(|&(u, v, w)| (u, v, Q::from_integer(w as i128))).collect();
    // n-1 edges plus connectivity rules out cycles.
    let space = FiniteMetricSpace::from_weighted_edges(n, &weighted)?;
    space.with_labels((0..n).map(|i| i.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn path_is_a_line() {
        let s = generate(&Family::Path { n: 3 }).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.d(0, 3), int(3));
    }

    #[test]
    fn cycle_uses_shortest_arc() {
        let s = generate(&Family::Cycle { n: 6 }).unwrap();
        assert_eq!(s.d(0, 3), int(3));
        assert_eq!(s.d(0, 5), int(1));
        assert!(matches!(generate(&Family::Cycle { n: 1 }), Err(MetricError::BadParameters(_))));
    }

    #[test]
    fn star_two_two() {
        let s = generate(&Family::Star { n: 2, k: 2 }).unwrap();
        assert_eq!(s.len(), 5);
        let tip1 = s.labels().unwrap().iter().position(|l| l == "2e1").unwrap();
        let tip2 = s.labels().unwrap().iter().position(|l| l == "2e2").unwrap();
        assert_eq!(s.d(tip1, tip2), int(4));
        assert_eq!(s.d(0, tip1), int(2));
    }

    #[test]
    fn grid_is_l1_box() {
        let s = generate(&Family::Grid { dims: vec![2, 3] }).unwrap();
        assert_eq!(s.len(), 12);
        assert_eq!(s.label(0), "(0,0)");
        assert_eq!(s.label(11), "(2,3)");
        assert_eq!(s.d(0, 11), int(5));
        let cube = generate(&Family::hypercube(3)).unwrap();
        assert_eq!(cube.len(), 8);
        assert_eq!(cube.d(0, 7), int(3));
    }

    #[test]
    fn rose_passes_through_center() {
        let s = generate(&Family::Rose { n: 2, k: 4 }).unwrap();
        assert_eq!(s.len(), 7);
        // c1:2 is antipodal on its cycle; c2:1 is one step from the center.
        let a = s.labels().unwrap().iter().position(|l| l == "c1:2").unwrap();
        let b = s.labels().unwrap().iter().position(|l| l == "c2:1").unwrap();
        assert_eq!(s.d(a, b), int(3));
    }

    #[test]
    fn tree_family_checks_edge_count() {
        let s = generate(&Family::Tree { n: 3, edges: vec![(0, 1, 2), (1, 2, 3)] }).unwrap();
        assert_eq!(s.d(0, 2), int(5));
        assert!(generate(&Family::Tree { n: 3, edges: vec![(0, 1, 2)] }).is_err());
        assert_eq!(
            generate(&Family::Tree { n: 4, edges: vec![(0, 1, 1), (1, 0, 1), (2, 3, 1)] }).unwrap_err(),
            MetricError::Disconnected
        );
    }

    #[test]
    fn shorter_path_is_isometric_prefix() {
        let short = generate(&Family::Path { n: 4 }).unwrap();
        let long = generate(&Family::Path { n: 9 }).unwrap();
        for i in 0..short.len() {
            for j in 0..short.len() {
                assert_eq!(short.d(i, j), long.d(i, j));
            }
        }
    }
}
