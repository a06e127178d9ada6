use lamplab::embeddings::{embed_lamz, perturb_injective, IntLampPoint};
use lamplab::lamplighter::{
    efficiency_constant, lamp_distance, rho, tscp, tsp, tsp_between, tsp_line_oracle, EfficiencyCaps, EfficiencyMode, LampMetric, LampPoint, TspOptions,
};
use lamplab::markov::{chain_from_weights, markov_ratio, MarkovMethod, MarkovOptions};
use lamplab::metric::{generate, validate_metric, Family, FiniteMetricSpace};
use lamplab::rational::{frac, int, Q};
use lamplab::trees::{tree_distance, Combinator, RayKey, TreePoint};
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use std::collections::BTreeSet;

/// A random weighted tree on up to `max` vertices, as a metric space.
fn tree_space(max: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    (2..=max).prop_flat_map(|n| {
        let edges = (1..n).map(|v| (0..v, 1u64..5).prop_map(move |(u, w)| (u, v, w))).collect::<Vec<_>>();
        edges.prop_map(move |edges| generate(&Family::Tree { n, edges }).unwrap())
    })
}

fn lamp_point(n: usize) -> impl Strategy<Value = LampPoint> {
    (proptest::collection::btree_set(0..n, 0..n.min(7)), 0..n).prop_map(|(lamps, pos)| LampPoint { lamps, pos })
}

fn space_with_points(max: usize) -> impl Strategy<Value = (FiniteMetricSpace, LampPoint, LampPoint)> {
    tree_space(max).prop_flat_map(|s| {
        let n = s.len();
        (Just(s), lamp_point(n), lamp_point(n))
    })
}

fn int_lamp_point() -> impl Strategy<Value = IntLampPoint> {
    (proptest::collection::btree_set(-4i64..=4, 0..5), -4i64..=4).prop_map(|(lamps, pos)| IntLampPoint { lamps, pos })
}

fn horo_right() -> impl Strategy<Value = TreePoint> {
    (-3i64..=3, proptest::collection::btree_set(-3i64..=6, 0..4)).prop_map(|(level, bits)| {
        let bits: BTreeSet<i64> = bits.into_iter().filter(|&b| b >= level).collect();
        TreePoint::horo_right(level, bits).unwrap()
    })
}

fn star_point() -> impl Strategy<Value = TreePoint> {
    (0u8..3, 0i64..6, 1i64..3).prop_map(|(ray, num, den)| TreePoint::star(RayKey(vec![ray]), frac(num, den)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tsp_dominates_tscp((space, p, q) in space_with_points(9)) {
        let tour = tsp_between(&space, &p, &q, TspOptions::default()).unwrap();
        prop_assert!(tour.length >= tscp(&space, &p, &q).unwrap());
    }

    #[test]
    fn held_karp_matches_line_oracle(n in 1usize..12, start in 0usize..12, end in 0usize..12, targets in proptest::collection::vec(0usize..12, 0..8)) {
        let space = generate(&Family::Path { n }).unwrap();
        let (start, end) = (start % (n + 1), end % (n + 1));
        let targets: Vec<usize> = targets.into_iter().map(|t| t % (n + 1)).collect();
        let exact = tsp(&space, start, end, &targets, TspOptions::default()).unwrap();
        let line: Vec<i64> = targets.iter().map(|&t| t as i64).collect();
        prop_assert_eq!(exact.length, int(tsp_line_oracle(start as i64, end as i64, &line)));
    }

    #[test]
    fn heuristic_never_beats_exact((space, p, q) in space_with_points(10)) {
        let exact = tsp_between(&space, &p, &q, TspOptions::default()).unwrap();
        let rough = tsp_between(&space, &p, &q, TspOptions::heuristic()).unwrap();
        prop_assert!(rough.length >= exact.length);
        prop_assert!(exact.exact);
    }

    #[test]
    fn tours_visit_every_target((space, p, q) in space_with_points(9)) {
        let tour = tsp_between(&space, &p, &q, TspOptions::default()).unwrap();
        prop_assert_eq!(tour.tour.first(), Some(&p.pos));
        prop_assert_eq!(tour.tour.last(), Some(&q.pos));
        for lamp in p.flipped(&q) {
            prop_assert!(tour.tour.contains(&lamp));
        }
        let walked: Q = tour.tour.windows(2).map(|w| space.d(w[0], w[1])).sum();
        prop_assert_eq!(walked, tour.length);
    }

    #[test]
    fn lamp_metrics_are_symmetric_and_ordered((space, p, q) in space_with_points(8)) {
        let opts = TspOptions::default();
        for metric in [LampMetric::DLam, LampMetric::DGraph, LampMetric::DDil] {
            prop_assert_eq!(lamp_distance(&space, &p, &q, metric, opts).unwrap(), lamp_distance(&space, &q, &p, metric, opts).unwrap());
        }
        let dil = lamp_distance(&space, &p, &q, LampMetric::DDil, opts).unwrap();
        let lam = lamp_distance(&space, &p, &q, LampMetric::DLam, opts).unwrap();
        let graph = lamp_distance(&space, &p, &q, LampMetric::DGraph, opts).unwrap();
        prop_assert!(dil <= lam && lam <= graph && graph <= int(3) * dil);
        prop_assert_eq!(lam == int(0), p == q);
    }

    #[test]
    fn dlam_triangle_inequality(space in tree_space(7), seeds in proptest::collection::vec((proptest::collection::btree_set(0usize..7, 0..4), 0usize..7), 3)) {
        let n = space.len();
        let pts: Vec<LampPoint> = seeds.into_iter().map(|(l, x)| LampPoint { lamps: l.into_iter().filter(|&v| v < n).collect(), pos: x % n }).collect();
        let d = |a: &LampPoint, b: &LampPoint| lamp_distance(&space, a, b, LampMetric::DLam, TspOptions::default()).unwrap();
        prop_assert!(d(&pts[0], &pts[2]) <= d(&pts[0], &pts[1]) + d(&pts[1], &pts[2]));
    }

    #[test]
    fn rho_is_lamp_indicator((_, p, q) in space_with_points(6)) {
        prop_assert_eq!(rho(&p, &q) == Q::one(), p.lamps != q.lamps);
    }

    #[test]
    fn horocyclic_distance_is_a_tree_metric(a in horo_right(), b in horo_right(), c in horo_right(), d in horo_right()) {
        let dist = |x: &TreePoint, y: &TreePoint| tree_distance(x, y).unwrap();
        prop_assert_eq!(dist(&a, &b), dist(&b, &a));
        prop_assert_eq!(dist(&a, &a), int(0));
        prop_assert!(dist(&a, &c) <= dist(&a, &b) + dist(&b, &c));
        let mut sums = [dist(&a, &b) + dist(&c, &d), dist(&a, &c) + dist(&b, &d), dist(&a, &d) + dist(&b, &c)];
        sums.sort();
        prop_assert_eq!(sums[1], sums[2]);
    }

    #[test]
    fn star_distance_is_a_tree_metric(a in star_point(), b in star_point(), c in star_point(), d in star_point()) {
        let dist = |x: &TreePoint, y: &TreePoint| tree_distance(x, y).unwrap();
        prop_assert_eq!(dist(&a, &b), dist(&b, &a));
        prop_assert!(dist(&a, &c) <= dist(&a, &b) + dist(&b, &c));
        let mut sums = [dist(&a, &b) + dist(&c, &d), dist(&a, &c) + dist(&b, &d), dist(&a, &d) + dist(&b, &c)];
        sums.sort();
        prop_assert_eq!(sums[1], sums[2]);
    }

    #[test]
    fn lamz_embedding_stays_within_six(p in int_lamp_point(), q in int_lamp_point(), sigma in 1i64..5) {
        let domain = int(p.tscp(&q)) + int(sigma) * int(p.rho(&q));
        let image = tree_distance(&embed_lamz(&p, int(sigma), Combinator::L1).unwrap(), &embed_lamz(&q, int(sigma), Combinator::L1).unwrap()).unwrap();
        prop_assert!(image <= int(6) * domain);
        prop_assert!(domain <= image);
    }

    #[test]
    fn lamz_tsp_matches_space_tsp(p in int_lamp_point(), q in int_lamp_point()) {
        let space = generate(&Family::Path { n: 8 }).unwrap();
        let shift = |s: &BTreeSet<i64>| s.iter().map(|&v| (v + 4) as usize).collect::<BTreeSet<usize>>();
        let (a, b) = (LampPoint { lamps: shift(&p.lamps), pos: (p.pos + 4) as usize }, LampPoint { lamps: shift(&q.lamps), pos: (q.pos + 4) as usize });
        prop_assert_eq!(int(p.tsp(&q)), tsp_between(&space, &a, &b, TspOptions::default()).unwrap().length);
        prop_assert_eq!(int(p.tscp(&q)), tscp(&space, &a, &b).unwrap());
    }

    #[test]
    fn perturbation_bullets_hold(space in tree_space(8), raw in proptest::collection::vec(-6i64..6, 8), eps_den in 2i64..12) {
        let f: Vec<Q> = (0..space.len()).map(|i| frac(raw[i], 2)).collect();
        let eps = frac(1, eps_den);
        let out = perturb_injective(&space, &f, eps, None).unwrap();
        prop_assert!(out.verify(&space, &f, eps).is_ok());
        let distinct: BTreeSet<i64> = out.f_tilde.iter().copied().collect();
        prop_assert_eq!(distinct.len(), space.len());
    }

    #[test]
    fn sampled_efficiency_is_a_lower_bound(space in tree_space(7), seed in 0u64..1000) {
        let exact = efficiency_constant(&space, EfficiencyMode::Exact, EfficiencyCaps::default()).unwrap();
        let sampled = efficiency_constant(&space, EfficiencyMode::Sampled { samples: 200, seed }, EfficiencyCaps::default()).unwrap();
        prop_assert!(sampled.k <= exact.k);
        prop_assert!(exact.k >= int(1));
    }

    #[test]
    fn generated_tree_metrics_validate(space in tree_space(9)) {
        prop_assert_eq!(validate_metric(space.matrix()).unwrap().matrix(), space.matrix());
    }

    #[test]
    fn first_markov_ratio_is_one(weights in proptest::collection::vec(0i64..4, 25), n in 2usize..6) {
        let mut w = vec![vec![int(0); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = if j == i + 1 { int(weights[i * 5 + j] + 1) } else { int(weights[i * 5 + j]) };
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        let chain = chain_from_weights(&w).unwrap();
        let opts = MarkovOptions { method: MarkovMethod::Exact, ..MarkovOptions::default() };
        let rep = markov_ratio(&chain, |i, j| int((i as i64 - j as i64).abs()), int(2), &[1, 3], opts).unwrap();
        prop_assert_eq!(rep.rows[0].exact.clone(), Some(BigRational::one()));
    }
}
