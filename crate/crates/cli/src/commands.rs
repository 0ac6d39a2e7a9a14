//! Command implementations. Each writes its artifacts under the config's
//! output directory and prints a one-line summary.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use horonet_core::carnot::{rescale_lattice, CarnotPoint, LatticeSpec};
use horonet_core::coarse::{
    bounded_displacement_matching, folner_profile, free2_window, z_lattice_window,
    FiniteMetricSpace, MatchingOutcome,
};
use horonet_core::lie::{iwasawa_decompose, restricted_roots, GroupElement, MatrixFamily};
use horonet_core::net::{build_net, NetWindow};
use horonet_core::quotient::{coarse_model_check, net_quotient};
use horonet_core::symspace::Model;

use crate::config::ExperimentConfig;
use crate::output::{fmt, OutDir};
use crate::CliError;

fn out_dir(config: &ExperimentConfig) -> Result<OutDir, CliError> {
    OutDir::new(&config.out, &config.hash())
}

fn random_det_one(tag: MatrixFamily, rng: &mut ChaCha8Rng) -> GroupElement {
    let n = tag.dim();
    loop {
        let mut m: DMatrix<f64> = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = rng.gen_range(-2.0..2.0);
            }
        }
        let det: f64 = m.determinant();
        if det.abs() < 1e-2 {
            continue;
        }
        let normalized = if n == 2 {
            let m = if det < 0.0 {
                let mut f = m.clone();
                f.swap_columns(0, 1);
                f
            } else {
                m
            };
            let d: f64 = m.determinant();
            m / d.sqrt()
        } else {
            m * det.cbrt().recip()
        };
        if let Ok(g) = GroupElement::new(tag, normalized) {
            return g;
        }
    }
}

pub fn group_info(config: &ExperimentConfig) -> Result<(), CliError> {
    let model = config.model()?;
    let out = out_dir(config)?;

    let blocks: Vec<_> = model
        .metric
        .blocks()
        .iter()
        .map(|b| {
            json!({
                "character": b.character,
                "stratum": b.stratum,
                "dims": b.dims,
            })
        })
        .collect();

    let roots = match model.family {
        Some(family) => {
            let datum = restricted_roots(family)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut max_residual = 0.0_f64;
            let mut max_orth = 0.0_f64;
            for _ in 0..16 {
                let g = random_det_one(family, &mut rng);
                let f = iwasawa_decompose(&g)?;
                max_residual = max_residual.max(f.reconstruction_residual(&g));
                max_orth = max_orth.max(f.orthogonality_defect());
            }
            Some(json!({
                "rank": datum.rank(),
                "positive_roots": datum.positive.len(),
                "simple_roots": datum.simple.len(),
                "grading_sizes": datum.grading.iter().map(|g| g.len()).collect::<Vec<_>>(),
                "step": datum.step(),
                "kan_max_reconstruction_residual": max_residual,
                "kan_max_orthogonality_defect": max_orth,
            }))
        }
        None => None,
    };

    let report = json!({
        "model": model.tag.to_string(),
        "rank": model.rank(),
        "leaf_dim": model.metric.algebra().dim(),
        "leaf_step": model.metric.algebra().step(),
        "blocks": blocks,
        "closed_form": model.metric.has_closed_form(),
        "lattice": model.lattice.description,
        "roots": roots,
    });
    out.json("group_info.json", &report)?;
    println!(
        "{}: rank {}, leaf dim {}, {} root blocks",
        model.tag,
        model.rank(),
        model.metric.algebra().dim(),
        model.metric.blocks().len()
    );
    Ok(())
}

fn build_window(config: &ExperimentConfig) -> Result<(Model, LatticeSpec, NetWindow), CliError> {
    let model = config.model()?;
    let zero = vec![0.0; model.rank()];
    let leaf_metric = model.metric.leaf_metric_at(&zero)?;
    let spec = if (config.rescale - 1.0).abs() > 1e-12 {
        let (spec, _margin) = rescale_lattice(&model.lattice, config.rescale, &leaf_metric)?;
        spec
    } else {
        model.lattice.clone()
    };
    let a_box = config.a_box(model.rank())?;
    let window = build_net(&model, &spec, &a_box, config.ball_radius)?;
    Ok((model, spec, window))
}

pub fn net_build(config: &ExperimentConfig) -> Result<(), CliError> {
    let (model, _spec, window) = build_window(config)?;
    let out = out_dir(config)?;

    let rank = model.rank();
    let dim = model.metric.algebra().dim();
    let mut header: Vec<String> = (0..rank).map(|i| format!("a_{i}")).collect();
    header.push("word_len".into());
    header.extend((0..dim).map(|i| format!("g_{i}")));
    header.extend((0..dim).map(|i| format!("n_{i}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = out.csv("net_points.csv", &header_refs)?;
    for p in &window.points {
        let mut row: Vec<String> = p.a.iter().map(|x| x.to_string()).collect();
        row.push(p.word_len.map(|w| w.to_string()).unwrap_or_else(|| "-".into()));
        row.extend(p.g.coords.iter().map(|&x| fmt(x)));
        row.extend(p.embedded.leaf.coords.iter().map(|&x| fmt(x)));
        csv.write_record(&row).map_err(|e| CliError::Config(e.to_string()))?;
    }
    csv.flush().map_err(|e| CliError::Config(e.to_string()))?;

    let probes = window.make_probes(config.probes, config.seed);
    let density = window.density_report(&probes)?;
    out.json(
        "net_window.json",
        &json!({
            "window": &window,
            "density": density,
        }),
    )?;
    println!(
        "net: {} points over {} leaves, margin [{:.6}, {:.6}], covering radius {:.6}",
        window.len(),
        window.leaves().len(),
        window.margin.lower,
        window.margin.upper,
        density.epsilon
    );
    Ok(())
}

pub fn displace(config: &ExperimentConfig) -> Result<(), CliError> {
    let (model, spec, window) = build_window(config)?;
    let out = out_dir(config)?;
    let generators: Vec<CarnotPoint> = match &config.action_generators {
        Some(gs) => gs.iter().map(|g| CarnotPoint::new(g.clone())).collect(),
        None => spec.generators.clone(),
    };

    let rank = model.rank();
    let mut header: Vec<String> = (0..rank).map(|i| format!("a_{i}")).collect();
    header.push("word".into());
    header.push("displacement_lower".into());
    header.push("displacement_upper".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = out.csv("displacement.csv", &header_refs)?;

    let mut summaries = Vec::new();
    for delta in generators.iter() {
        let word: String =
            delta.coords.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(";");
        let profile = window.displacement_profile(delta)?;
        for leaf in &profile.per_leaf {
            let mut row: Vec<String> = leaf.a.iter().map(|x| x.to_string()).collect();
            row.push(word.clone());
            row.push(fmt(leaf.displacement.lower));
            row.push(fmt(leaf.displacement.upper));
            csv.write_record(&row).map_err(|e| CliError::Config(e.to_string()))?;
        }
        summaries.push(json!({
            "generator": delta.coords,
            "sup_upper": profile.sup_upper,
            "sup_lower": profile.sup_lower,
            "mean_upper": profile.mean_upper,
            "d0": profile.d0_delta,
            "admissible_c": profile.admissible_c,
            "sample_residual": profile.sample_residual,
        }));
    }
    csv.flush().map_err(|e| CliError::Config(e.to_string()))?;

    let freeness = window.freeness_check(config.word_length)?;
    out.json(
        "displacement.json",
        &json!({ "generators": summaries, "freeness": freeness }),
    )?;
    println!(
        "displace: {} generators over {} leaves; freeness at word length {}: {} fixed points",
        generators.len(),
        window.leaves().len(),
        config.word_length,
        freeness.fixed_points
    );
    Ok(())
}

pub fn udbg(config: &ExperimentConfig) -> Result<(), CliError> {
    let (model, spec, window) = build_window(config)?;
    let out = out_dir(config)?;
    let report = window.udbg_report(&config.radii)?;
    let mut csv = out.csv("udbg.csv", &["r", "max_count"])?;
    for (r, c) in &report.ball_profile {
        csv.write_record([fmt(*r), c.to_string()])
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    csv.flush().map_err(|e| CliError::Config(e.to_string()))?;
    out.json("udbg.json", &report)?;

    // Per-leaf distortion table at dyadic multiples of the first lattice
    // generator, the mechanism behind the same-leaf separation bounds.
    let rank = model.rank();
    let mut header: Vec<String> = (0..rank).map(|i| format!("a_{i}")).collect();
    header.extend(["d0", "dGK_lower", "dGK_upper", "ratio"].map(String::from));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = out.csv("distortion.csv", &header_refs)?;
    let gen = &spec.generators[0];
    let opts = horonet_core::pathopt::OptimizeOptions::fast();
    for a in window.leaves() {
        let flat: Vec<f64> = a.iter().map(|&x| x as f64).collect();
        let pairs: Vec<(CarnotPoint, CarnotPoint)> = [2.0, 4.0, 8.0]
            .iter()
            .map(|k| {
                let scaled = CarnotPoint::new(gen.coords.iter().map(|c| c * k).collect());
                (CarnotPoint::new(vec![0.0; gen.dim()]), scaled)
            })
            .collect();
        let profile =
            horonet_core::symspace::distortion_profile(&model.metric, &flat, &pairs, &opts)?;
        for row in &profile.rows {
            let mut record: Vec<String> = a.iter().map(|x| x.to_string()).collect();
            record.push(fmt(row.d0.estimate()));
            record.push(fmt(row.ambient.lower));
            record.push(fmt(row.ambient.upper));
            record.push(fmt(row.ratio));
            csv.write_record(&record).map_err(|e| CliError::Config(e.to_string()))?;
        }
    }
    csv.flush().map_err(|e| CliError::Config(e.to_string()))?;

    println!(
        "udbg: {} points, min separation lower {:?}, estimate {:?}, log slope {:?}",
        report.num_points,
        report.min_separation_lower,
        report.min_separation_estimate,
        report.log_slope
    );
    Ok(())
}

pub fn quotient(config: &ExperimentConfig) -> Result<(), CliError> {
    let (_, spec, window) = build_window(config)?;
    let out = out_dir(config)?;
    let (_, _, q) = net_quotient(&window, &spec.generators)?;
    let axioms = q.metric_axiom_check();
    let matrix = q.distance_matrix();

    let mut csv = out.csv("quotient_distances.csv", &["class_i", "class_j", "distance"])?;
    let mut disconnected = 0usize;
    for (i, row) in matrix.iter().enumerate() {
        for (j, d) in row.iter().enumerate() {
            let cell = match d {
                Some(v) => fmt(*v),
                None => {
                    if i != j {
                        disconnected += 1;
                    }
                    "unreachable".to_string()
                }
            };
            csv.write_record([i.to_string(), j.to_string(), cell])
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
    }
    csv.flush().map_err(|e| CliError::Config(e.to_string()))?;

    let cm = coarse_model_check(&window, &q, None)?;
    out.json(
        "quotient_report.json",
        &json!({ "classes": q.num_classes(), "axioms": axioms, "coarse_model": cm }),
    )?;
    if disconnected > 0 {
        return Err(CliError::Degenerate(format!(
            "{disconnected} class pairs are unreachable by window chains"
        )));
    }
    if !axioms.all_pass() {
        return Err(CliError::Degenerate("metric axioms failed on this window".into()));
    }
    println!(
        "quotient: {} classes, axioms pass, class-map constants {:?}",
        q.num_classes(),
        cm.class_map_constants
    );
    Ok(())
}

pub fn folner(config: &ExperimentConfig) -> Result<(), CliError> {
    let out = out_dir(config)?;
    let f = &config.folner;
    let (sets, space, sizes): (Vec<Vec<usize>>, FiniteMetricSpace, Vec<usize>) = match f
        .group
        .as_str()
    {
        "z1" | "z2" | "z3" => {
            let k = f.group[1..].parse::<usize>().expect("digit");
            let radius = f.n_max as i64 + f.r.ceil() as i64 + 1;
            let (points, space) = z_lattice_window(k, radius);
            let sets: Vec<Vec<usize>> = (1..=f.n_max as i64)
                .map(|n| {
                    points
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.iter().map(|x| x.abs()).sum::<i64>() <= n)
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect();
            let sizes = sets.iter().map(|s| s.len()).collect();
            (sets, space, sizes)
        }
        "f2" => {
            if f.n_max > 7 {
                return Err(CliError::Config(
                    "f2 windows above n_max = 7 are too large; lower folner.n_max".into(),
                ));
            }
            let (words, space) = free2_window(f.n_max + f.r.ceil() as usize);
            let sets: Vec<Vec<usize>> = (1..=f.n_max)
                .map(|n| {
                    words
                        .iter()
                        .enumerate()
                        .filter(|(_, w)| w.len() <= n)
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect();
            let sizes = sets.iter().map(|s| s.len()).collect();
            (sets, space, sizes)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown folner group '{other}'; use z1, z2, z3 or f2"
            )))
        }
    };
    let profile = folner_profile(&space, &sets, f.r)?;
    let mut csv = out.csv("folner.csv", &["n", "size", "boundary", "ratio"])?;
    for (k, row) in profile.rows.iter().enumerate() {
        csv.write_record([
            (k + 1).to_string(),
            row.size.to_string(),
            row.boundary.to_string(),
            fmt(row.ratio),
        ])
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    csv.flush().map_err(|e| CliError::Config(e.to_string()))?;
    out.json(
        "folner.json",
        &json!({ "group": f.group, "r": f.r, "rows": profile.rows, "verdict": profile.verdict }),
    )?;
    let last = profile.rows.last().expect("nonempty");
    println!(
        "folner {}: {} sets (max size {}), last ratio {:.6}, verdict {}",
        f.group,
        profile.rows.len(),
        sizes.last().unwrap(),
        last.ratio,
        profile.verdict
    );
    Ok(())
}

pub fn matching(config: &ExperimentConfig) -> Result<(), CliError> {
    let out = out_dir(config)?;
    let m = &config.matching;
    let mut a = Vec::with_capacity(m.n * m.n);
    let mut b = Vec::with_capacity(m.n * m.n);
    for x in 0..m.n {
        for y in 0..m.n {
            a.push(vec![x as f64, y as f64]);
            b.push(vec![x as f64 + m.offset.0, y as f64 + m.offset.1]);
        }
    }
    let outcome = bounded_displacement_matching(&a, &b, m.radius)?;
    match &outcome {
        MatchingOutcome::Perfect { pairs, max_pair_distance } => {
            let mut csv = out.csv("matching.csv", &["a_index", "b_index", "distance"])?;
            for (i, &j) in pairs.iter().enumerate() {
                let d: f64 = a[i]
                    .iter()
                    .zip(&b[j])
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt();
                csv.write_record([i.to_string(), j.to_string(), fmt(d)])
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            csv.flush().map_err(|e| CliError::Config(e.to_string()))?;
            out.json(
                "matching.json",
                &json!({ "perfect": true, "max_displacement": max_pair_distance, "pairs": pairs.len() }),
            )?;
            println!(
                "match: perfect on {} pairs, max displacement {:.6}",
                pairs.len(),
                max_pair_distance
            );
        }
        MatchingOutcome::Infeasible { witness, neighbourhood } => {
            let mut csv = out.csv("matching.csv", &["witness_a_index"])?;
            for w in witness {
                csv.write_record([w.to_string()])
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            csv.flush().map_err(|e| CliError::Config(e.to_string()))?;
            out.json(
                "matching.json",
                &json!({
                    "perfect": false,
                    "witness_size": witness.len(),
                    "neighbourhood_size": neighbourhood.len(),
                }),
            )?;
            println!(
                "match: infeasible, Hall witness of size {} with neighbourhood {}",
                witness.len(),
                neighbourhood.len()
            );
        }
    }
    Ok(())
}

