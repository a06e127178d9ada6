use super::{Cli, CliError, Command, DistMetric, DoublingArg, FamilyName, MarkovArg, Outcome, ProductArg, SearchMode, SpaceArgs, TourMode};
use crate::embeddings::{
    embed_lamz, frechet_star, hamming_embed, hamming_witness, interval_cover, line_coordinates, lift_coordinates, measure_distortion, nagata_constant,
    nagata_weak, prepare_coordinates, tscp_plus_rho, verify_cube, weak_check, CoordinateSystem, DistortionReport, HammingSearch, IntLampPoint, WeakFamily,
};
use crate::lamplighter::{
    efficiency_constant, enumerate_lamp_points, lamp_distance, rho, tscp, tsp_between, EfficiencyCaps, EfficiencyMode, LampMetric, LampPoint, TspMode,
    TspOptions,
};
use crate::markov::{chain_from_graph, markov_ratio, MarkovMethod, MarkovOptions};
use crate::metric::{doubling_constant, generate, DoublingMode, Family, FiniteMetricSpace, GraphInput};
use crate::rational::{self, Q};
use crate::trees::{tree_distance, Combinator, TreePoint};
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

fn to_value(value: impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(value).map_err(|e| CliError::failed("serializing report", e))
}

fn q(value: &Q) -> String {
    rational::format(value)
}

fn load_space(args: &SpaceArgs) -> Result<FiniteMetricSpace, CliError> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this family")));
    let family = match (args.family, &args.input) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --family or --input".into())),
        (None, None) => return Err(CliError::Usage("a space is required: --family or --input".into())),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::failed(&format!("reading {}", path.display()), e))?;
            let raw: Value = serde_json::from_str(&text).map_err(|e| CliError::failed(&format!("parsing {}", path.display()), e))?;
            return if raw.get("edges").is_some() {
                let graph: GraphInput = serde_json::from_value(raw).map_err(|e| CliError::failed("graph input", e))?;
                graph.to_space().map_err(|e| CliError::failed("graph input", e))
            } else {
                serde_json::from_value(raw).map_err(|e| CliError::failed("space input", e))
            };
        }
        (Some(name), None) => match name {
            FamilyName::Path => Family::Path { n: need(args.n, "n")? },
            FamilyName::Cycle => Family::Cycle { n: need(args.n, "n")? },
            FamilyName::Hypercube => Family::hypercube(need(args.n, "n")?),
            FamilyName::Grid if args.dims.is_empty() => return Err(CliError::Usage("--dims is required for grid".into())),
            FamilyName::Grid => Family::Grid { dims: args.dims.clone() },
            FamilyName::Star => Family::Star { n: need(args.n, "n")?, k: need(args.k, "k")? },
            FamilyName::Rose => Family::Rose { n: need(args.n, "n")?, k: need(args.k, "k")? },
        },
    };
    generate(&family).map_err(|e| CliError::failed("generating space", e))
}

fn parse_point(text: &str, space: &FiniteMetricSpace, flag: &str) -> Result<LampPoint, CliError> {
    let p: LampPoint = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))?;
    p.check(space).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))?;
    Ok(p)
}

fn tour_options(mode: TourMode, cap: usize) -> TspOptions {
    let mode = match mode {
        TourMode::Exact => TspMode::Exact,
        TourMode::Heuristic => TspMode::Heuristic,
        TourMode::Auto => TspMode::Auto,
    };
    TspOptions { mode, cap }
}

/// A distortion report together with the points realizing its extremes.
fn distortion_body<P: Serialize>(report: &DistortionReport, points: &[P], bound: Q) -> Result<(Value, bool), CliError> {
    let passed = report.distortion.is_some_and(|d| d <= bound);
    let pair = |(i, j): (usize, usize)| json!([&points[i], &points[j]]);
    let body = json!({
        "points": points.len(),
        "distortion": to_value(report)?,
        "bound": q(&bound),
        "lip_witness": pair(report.lip_pair),
        "colip_witness": pair(report.colip_pair),
    });
    Ok((body, passed))
}

fn distortion_csv(report: &DistortionReport) -> String {
    format!(
        "lip,colip,distortion,pairs,lip_i,lip_j,colip_i,colip_j\n{},{},{},{},{},{},{},{}\n",
        q(&report.lip),
        q(&report.colip),
        report.distortion.as_ref().map(q).unwrap_or_default(),
        report.pairs,
        report.lip_pair.0,
        report.lip_pair.1,
        report.colip_pair.0,
        report.colip_pair.1
    )
}

pub(super) fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::Gen { space } => {
            let space = load_space(space)?;
            Ok(Outcome { report: to_value(&space)?, csv: Some(space.to_csv()), passed: true })
        }

        Command::Dist { space, metric, a, b, mode } => {
            let space = load_space(space)?;
            let (a, b) = (parse_point(a, &space, "a")?, parse_point(b, &space, "b")?);
            let opts = tour_options(*mode, common.cap_targets);
            let lamp_err = |e| CliError::failed("distance", e);
            let mut tour = None;
            let value = match metric {
                DistMetric::Tsp => {
                    let t = tsp_between(&space, &a, &b, opts).map_err(lamp_err)?;
                    let length = t.length;
                    tour = Some(t);
                    length
                }
                DistMetric::Tscp => tscp(&space, &a, &b).map_err(lamp_err)?,
                DistMetric::Rho => rho(&a, &b),
                DistMetric::Dlam => lamp_distance(&space, &a, &b, LampMetric::DLam, opts).map_err(lamp_err)?,
                DistMetric::Dgraph => lamp_distance(&space, &a, &b, LampMetric::DGraph, opts).map_err(lamp_err)?,
                DistMetric::Ddil => lamp_distance(&space, &a, &b, LampMetric::DDil, opts).map_err(lamp_err)?,
            };
            let report = json!({ "metric": metric, "a": a, "b": b, "value": q(&value), "tour": tour });
            Ok(Outcome { report, csv: Some(format!("metric,value\n{},{}\n", to_value(metric)?.as_str().unwrap_or(""), q(&value))), passed: true })
        }

        Command::Efficiency { space, mode, samples, k_bound } => {
            let space = load_space(space)?;
            let mode = match mode {
                SearchMode::Exact => EfficiencyMode::Exact,
                SearchMode::Sampled => EfficiencyMode::Sampled { samples: *samples, seed: common.seed },
            };
            let caps = EfficiencyCaps { max_points: common.cap_n, max_targets: common.cap_targets };
            let rep = efficiency_constant(&space, mode, caps).map_err(|e| CliError::failed("efficiency", e))?;
            let passed = k_bound.is_none_or(|k| rep.k <= k);
            let w = rep.witness.as_ref();
            let csv = format!(
                "k,x,y,targets,tsp,tscp,pairs_examined\n{},{},{},{},{},{},{}\n",
                q(&rep.k),
                w.map(|w| w.x.to_string()).unwrap_or_default(),
                w.map(|w| w.y.to_string()).unwrap_or_default(),
                w.map(|w| w.targets.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")).unwrap_or_default(),
                w.map(|w| q(&w.tsp)).unwrap_or_default(),
                w.map(|w| q(&w.tscp)).unwrap_or_default(),
                rep.pairs_examined
            );
            Ok(Outcome { report: to_value(&rep)?, csv: Some(csv), passed })
        }

        Command::Doubling { space, mode, k_bound } => {
            let space = load_space(space)?;
            let mode = match mode {
                DoublingArg::Exact => DoublingMode::Exact,
                DoublingArg::Greedy => DoublingMode::Greedy,
            };
            let rep = doubling_constant(&space, mode).map_err(|e| CliError::failed("doubling", e))?;
            let (k, source) = match k_bound {
                Some(k) => (Some(*k), Some("given")),
                None if space.len() <= common.cap_n => {
                    let caps = EfficiencyCaps { max_points: common.cap_n, max_targets: common.cap_targets };
                    let eff = efficiency_constant(&space, EfficiencyMode::Exact, caps).map_err(|e| CliError::failed("efficiency", e))?;
                    (Some(eff.k), Some("certified"))
                }
                None => (None, None),
            };
            let bound = k.map(|k| Q::from_integer(4) * k + Q::one());
            let passed = bound.is_none_or(|b| Q::from_integer(rep.d as i128) <= b);
            let report = json!({
                "doubling": to_value(&rep)?,
                "K": k.as_ref().map(q),
                "K_source": source,
                "bound": bound.as_ref().map(q),
            });
            let csv = format!("d,center,radius,K,bound\n{},{},{},{},{}\n", rep.d, rep.center, q(&rep.radius), k.as_ref().map(q).unwrap_or_default(), bound.as_ref().map(q).unwrap_or_default());
            Ok(Outcome { report, csv: Some(csv), passed })
        }

        Command::EmbedLamz { space, sigma, product, max_lamps } => {
            let space = load_space(space)?;
            if *sigma < Q::one() {
                return Err(CliError::Usage("--sigma must be at least 1".into()));
            }
            let coords = line_coordinates(&space).map_err(|e| CliError::failed("embed-lamz", e))?;
            let points: Vec<IntLampPoint> = enumerate_lamp_points(space.len(), max_lamps.unwrap_or(space.len()))
                .into_iter()
                .map(|p| IntLampPoint { lamps: p.lamps.iter().map(|&l| coords[l]).collect(), pos: coords[p.pos] })
                .collect();
            let combinator = match product {
                ProductArg::L1 => Combinator::L1,
                ProductArg::Linf => Combinator::Linf,
            };
            let images: Vec<TreePoint> =
                points.par_iter().map(|p| embed_lamz(p, *sigma, combinator)).collect::<Result<_, _>>().map_err(|e| CliError::failed("embed-lamz", e))?;
            let rep = measure_distortion(
                points.len(),
                |i, j| Ok(Q::from_integer(points[i].tscp(&points[j]) as i128) + sigma * Q::from_integer(points[i].rho(&points[j]) as i128)),
                |i, j| Ok(tree_distance(&images[i], &images[j])?),
            )
            .map_err(|e| CliError::failed("embed-lamz", e))?;
            let bound = Q::from_integer(if combinator == Combinator::L1 { 6 } else { 18 });
            let (mut body, passed) = distortion_body(&rep, &points, bound)?;
            body["sigma"] = json!(q(sigma));
            body["product"] = to_value(product)?;
            body["coordinates"] = json!(coords);
            Ok(Outcome { report: body, csv: Some(distortion_csv(&rep)), passed })
        }

        Command::Lift { space: space_args, coords, epsilon, max_lamps } => {
            let space = load_space(space_args)?;
            let system = match (coords, space_args.family) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::failed(&format!("reading {}", path.display()), e))?;
                    let mut system: CoordinateSystem = serde_json::from_str(&text).map_err(|e| CliError::failed("coordinate system", e))?;
                    if system.lips.is_empty() {
                        system.fill_lips(&space);
                    }
                    system
                }
                (None, Some(FamilyName::Star)) => {
                    frechet_star(space_args.n.unwrap_or(0), space_args.k.unwrap_or(0)).map_err(|e| CliError::failed("frechet-star", e))?.1
                }
                (None, _) => return Err(CliError::Usage("--coords is required unless the family is star".into())),
            };
            system.validate(&space).map_err(|e| CliError::failed("coordinate system", e))?;
            let prepared = prepare_coordinates(&space, &system, *epsilon).map_err(|e| CliError::failed("lift", e))?;
            let points = enumerate_lamp_points(space.len(), *max_lamps);
            let images: Vec<TreePoint> =
                points.par_iter().map(|p| lift_coordinates(&prepared, p)).collect::<Result<_, _>>().map_err(|e| CliError::failed("lift", e))?;
            let rep = measure_distortion(points.len(), |i, j| tscp_plus_rho(&space, &points[i], &points[j]), |i, j| Ok(tree_distance(&images[i], &images[j])?))
                .map_err(|e| CliError::failed("lift", e))?;
            let quality = prepared.quality.unwrap_or_else(Q::one);
            let bound = Q::from_integer(6) * quality * (Q::one() + epsilon) / (Q::one() - epsilon);
            let (mut body, passed) = distortion_body(&rep, &points, bound)?;
            body["prepared"] = to_value(&prepared)?;
            Ok(Outcome { report: body, csv: Some(distortion_csv(&rep)), passed })
        }

        Command::FrechetStar { n, k } => {
            let (space, coords) = frechet_star(*n, *k).map_err(|e| CliError::failed("frechet-star", e))?;
            let quality = coords.quality(&space).map_err(|e| CliError::failed("frechet-star", e))?;
            let passed = quality <= Q::from_integer(2);
            let report = json!({ "space": to_value(&space)?, "coordinates": to_value(&coords)?, "quality": q(&quality) });
            Ok(Outcome { report, csv: None, passed })
        }

        Command::Hamming { space, k_bound, max_dim, samples } => {
            let space = load_space(space)?;
            let search = HammingSearch { exact_cap: common.cap_n, target_cap: common.cap_targets, samples: *samples, seed: common.seed };
            let witness = hamming_witness(&space, *k_bound, search).map_err(|e| CliError::failed("hamming witness", e))?;
            let Some(witness) = witness else {
                let report = json!({ "witness": null, "certified_efficient": true });
                return Ok(Outcome { report, csv: None, passed: true });
            };
            let emb = hamming_embed(&space, &witness, *k_bound, common.cap_targets).map_err(|e| CliError::failed("hamming embedding", e))?;
            let cube = verify_cube(&space, &emb, *max_dim, common.cap_targets).map_err(|e| CliError::failed("cube check", e))?;
            let mut theta = Vec::new();
            for mask in 0usize..1 << cube.dim {
                let s: Vec<usize> = (0..cube.dim).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect();
                let image = emb.theta(&s).map_err(|e| CliError::failed("theta", e))?;
                theta.push(json!({ "S": s, "image": image }));
            }
            let f = &emb.facts;
            let passed = cube.holds && f.a && f.b && f.c && f.d && f.e_thirds;
            let report = json!({ "witness": witness, "embedding": emb, "cube": cube, "theta": theta });
            Ok(Outcome { report, csv: None, passed })
        }

        Command::NagataWeak { space, scales } => {
            let space = load_space(space)?;
            let mut family = WeakFamily { constant: Q::one(), scales: Vec::new() };
            let mut summaries = Vec::new();
            let mut gamma = Q::one();
            let mut max_active = 0;
            for t in scales {
                let cover = interval_cover(&space, *t).map_err(|e| CliError::failed("interval cover", e))?;
                gamma = cover.gamma;
                let scale = nagata_weak(&space, &cover, *t).map_err(|e| CliError::failed("nagata", e))?;
                max_active = max_active.max(scale.max_active);
                summaries.push(json!({ "t": q(t), "parts": cover.parts, "components": scale.components, "max_active": scale.max_active }));
                family.scales.push(scale.to_weak_scale());
            }
            family.constant = nagata_constant(gamma);
            let check = weak_check(space.len(), |i, j| space.d(i, j), &family, family.constant).map_err(|e| CliError::failed("weak check", e))?;
            let passed = check.passed && max_active <= 1;
            let report = json!({ "constant": q(&family.constant), "gamma": q(&gamma), "scales": summaries, "check": check });
            Ok(Outcome { report, csv: None, passed })
        }

        Command::CheckDistortion { domain, image, bound } => {
            let read = |path: &std::path::PathBuf| -> Result<FiniteMetricSpace, CliError> {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::failed(&format!("reading {}", path.display()), e))?;
                serde_json::from_str(&text).map_err(|e| CliError::failed(&format!("parsing {}", path.display()), e))
            };
            let (dom, img) = (read(domain)?, read(image)?);
            if dom.len() != img.len() {
                return Err(CliError::Usage(format!("domain has {} points but image has {}", dom.len(), img.len())));
            }
            let rep = measure_distortion(dom.len(), |i, j| Ok(dom.d(i, j)), |i, j| Ok(img.d(i, j))).map_err(|e| CliError::failed("distortion", e))?;
            let passed = match bound {
                Some(b) => rep.distortion.is_some_and(|d| d <= *b),
                None => true,
            };
            Ok(Outcome { report: to_value(&rep)?, csv: Some(distortion_csv(&rep)), passed })
        }

        Command::Markov { space, laziness, p, t_max, mode, samples } => {
            let space = load_space(space)?;
            let chain = chain_from_graph(&space, *laziness).map_err(|e| CliError::failed("markov chain", e))?;
            let method = match mode {
                MarkovArg::Auto => MarkovMethod::Auto,
                MarkovArg::Exact => MarkovMethod::Exact,
                MarkovArg::MonteCarlo => MarkovMethod::MonteCarlo,
            };
            let times: Vec<u64> = (1..=*t_max).collect();
            let opts = MarkovOptions { method, samples: *samples, seed: common.seed };
            let rep = markov_ratio(&chain, |i, j| space.d(i, j), *p, &times, opts).map_err(|e| CliError::failed("markov ratio", e))?;
            Ok(Outcome { report: to_value(&rep)?, csv: Some(rep.to_csv()), passed: true })
        }
    }
}
