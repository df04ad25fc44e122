//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.
//!
//! Run with `cargo test -p edurec-core --test acceptance -- --nocapture`.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use edurec::datagen::{generate_synthetic, GeneratorConfig};
use edurec::gnn::{self, build_view, grad_check, learn_pairs, sample_triples, Embeddings, FeatureConfig, GcnModel};
use edurec::groups::{cohesion, form_groups, group_sizes};
use edurec::io::{self, IngestOptions};
use edurec::stats::special::chi_square_sf;
use edurec::stats::{
    chi_square_independence, eligible_students, kmeans, preference_engagement_association, preference_profile,
    rand_index, AssociationParams, IndicatorScenario, PreferenceDimension,
};
use edurec::{EdgeKind, NodeKind};

fn verdict(id: u32, name: &str, pass: bool, detail: impl std::fmt::Display) {
    println!(
        "acceptance {id} {name}: {} | {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {id} {name} failed: {detail}");
}

fn pair_enumeration(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

#[test]
fn a1_rand_index_matches_pair_enumeration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=12);
        let (ka, kb) = (rng.random_range(1..=n), rng.random_range(1..=n));
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..kb)).collect();
        worst = worst.max((rand_index(&a, &b).unwrap() - pair_enumeration(&a, &b)).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "rand index vs pair enumeration",
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("200 pairs, max abs err {worst:e}, {elapsed:?}"),
    );
}

#[test]
fn a2_chi_square_reference_and_monotone_tail() {
    // 1 - chi2.cdf(20/3, 1) = erfc(sqrt(10/3))
    const REFERENCE_P: f64 = 0.009_823_274_507_519_235;
    let r = chi_square_independence(&[vec![10, 20], vec![20, 10]]).unwrap();
    let stat_err = (r.statistic - 100.0 / 15.0).abs();
    let p_err = (r.p_value - REFERENCE_P).abs();
    let mut monotone = true;
    for dof in 1..=10 {
        let tail: Vec<f64> = (0..100).map(|i| chi_square_sf(i as f64 * 0.5, dof)).collect();
        monotone &= tail[0] == 1.0 && tail.windows(2).all(|w| w[1] <= w[0]);
    }
    verdict(
        2,
        "chi-square reference table",
        stat_err <= 1e-9 && p_err <= 1e-6 && r.dof == 1 && monotone,
        format!("stat err {stat_err:e}, p = {:.6e} (err {p_err:e}), monotone {monotone}", r.p_value),
    );
}

fn best_two_partition(points: &[Vec<f64>]) -> BTreeSet<BTreeSet<usize>> {
    let n = points.len();
    let sse = |idx: &[usize]| -> f64 {
        let d = points[0].len();
        let mean: Vec<f64> = (0..d)
            .map(|j| idx.iter().map(|&i| points[i][j]).sum::<f64>() / idx.len() as f64)
            .collect();
        idx.iter()
            .map(|&i| (0..d).map(|j| (points[i][j] - mean[j]).powi(2)).sum::<f64>())
            .sum()
    };
    let mut best = (f64::INFINITY, BTreeSet::new());
    for mask in 1..(1u32 << n) - 1 {
        if mask & 1 == 0 {
            continue;
        }
        let a: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let b: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 0).collect();
        let cost = sse(&a) + sse(&b);
        if cost < best.0 {
            best = (cost, [a, b].into_iter().map(|v| v.into_iter().collect()).collect());
        }
    }
    best.1
}

#[test]
fn a3_kmeans_monotone_and_two_blob_recovery() {
    let mut monotone_runs = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..120)
            .map(|i| {
                let c = (i % 3) as f64 * 3.0;
                let (x, y): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                vec![c + x, c * 0.5 + y]
            })
            .collect();
        let m = kmeans(&points, 3, seed).unwrap();
        if m.inertia_trace.windows(2).all(|w| w[1] <= w[0]) {
            monotone_runs += 1;
        }
    }

    let fixture = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 10.0], vec![10.0, 11.0]];
    let optimum = best_two_partition(&fixture);
    let mut recovered = 0;
    for seed in 0..50u64 {
        let m = kmeans(&fixture, 2, seed).unwrap();
        let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (i, &c) in m.assignments.iter().enumerate() {
            groups.entry(c).or_default().insert(i);
        }
        if groups.into_values().collect::<BTreeSet<_>>() == optimum {
            recovered += 1;
        }
    }
    verdict(
        3,
        "k-means inertia and brute-force optimum",
        monotone_runs == 50 && recovered >= 49,
        format!("monotone traces {monotone_runs}/50, optimum recovered {recovered}/50"),
    );
}

#[test]
fn a4_gcn_gradient_check() {
    let start = Instant::now();
    let cfg = GeneratorConfig {
        n_students: 12,
        n_courses: 10,
        n_teachers: 5,
        n_schools: 2,
        n_categories: 2,
        n_majors: 2,
        courses_per_student: (2, 4),
        seed: 4,
        ..Default::default()
    };
    let graph = generate_synthetic(&cfg).unwrap();
    let view = build_view(&graph, FeatureConfig::default()).unwrap();
    let positives = learn_pairs(&view);
    let courses: Vec<usize> = view.nodes_of_kind(NodeKind::Course).collect();
    let triples = sample_triples(&positives, &courses, 2, &mut ChaCha8Rng::seed_from_u64(4));
    let mut worst: f64 = 0.0;
    let mut weights = 0;
    for seed in 0..3 {
        let model = GcnModel::init(view.feature_config, 32, 16, seed);
        weights = model.w1.len() + model.w2.len();
        worst = worst.max(grad_check(&view, &model, &triples, 1e-5));
    }
    let elapsed = start.elapsed();
    verdict(
        4,
        "GCN gradient check",
        view.len() <= 30 && worst <= 1e-4 && elapsed < Duration::from_secs(10),
        format!(
            "{} nodes, {weights} weights x 3 inits, max rel err {worst:.2e}, {elapsed:?}",
            view.len()
        ),
    );
}

#[test]
fn a5_pipeline_detects_injected_coupling() {
    let start = Instant::now();
    let (dim, scenario) = (PreferenceDimension::Category, IndicatorScenario::TT);
    let mut significant = BTreeMap::new();
    let mut failures = Vec::new();
    for coupling in [1.0, 0.0] {
        let mut hits = 0;
        for seed in 0..20u64 {
            let graph = generate_synthetic(&common::scaled_config(2000, coupling, seed)).unwrap();
            let params = AssociationParams { k: 3, seed, min_courses: 27 };
            match preference_engagement_association(&graph, dim, scenario, &params) {
                Ok(a) if a.chi_square.p_value < 0.05 => hits += 1,
                Ok(_) => {}
                Err(e) => failures.push(format!("coupling {coupling} seed {seed}: {e}")),
            }
        }
        significant.insert(coupling.to_string(), hits);
    }
    let elapsed = start.elapsed();
    let (strong, null) = (significant["1"], significant["0"]);
    verdict(
        5,
        "association under coupling 1.0 vs 0.0",
        strong >= 18 && null <= 3 && elapsed < Duration::from_secs(300),
        format!(
            "{}/{}: p < 0.05 in {strong}/20 (coupled) and {null}/20 (null), errors {failures:?}, {elapsed:?}",
            dim.as_str(),
            scenario.as_str()
        ),
    );
}

#[test]
fn a6_recommendations_follow_favourite_category() {
    let start = Instant::now();
    let (mut model_share, mut random_share) = (0.0, 0.0);
    for seed in 0..20u64 {
        let cfg = GeneratorConfig {
            n_students: 300,
            n_courses: 400,
            n_teachers: 100,
            n_schools: 10,
            n_categories: 10,
            n_majors: 5,
            courses_per_student: (5, 15),
            preference_strength: 1.0,
            seed,
            ..Default::default()
        };
        let graph = generate_synthetic(&cfg).unwrap();
        let category: HashMap<&str, &str> = graph
            .edges()
            .iter()
            .filter(|e| e.kind == EdgeKind::Belong)
            .map(|e| (e.head.as_str(), e.tail.as_str()))
            .collect();
        let view = build_view(&graph, FeatureConfig { seed, ..Default::default() }).unwrap();
        let trained = gnn::train(&view, &gnn::TrainConfig { seed, ..Default::default() }).unwrap();
        let emb = Embeddings::new(&trained.model, &view).unwrap();
        let courses: Vec<&str> = graph.nodes_of_kind(NodeKind::Course).map(|n| n.id.as_str()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut hits, mut random_hits, mut shown, mut random_shown) = (0, 0, 0, 0);
        for s in graph.nodes_of_kind(NodeKind::Student) {
            let profile = preference_profile(&graph, &s.id, PreferenceDimension::Category).unwrap();
            let favourite = profile.top_terminal().unwrap();
            let rec = emb.recommend(&graph, &s.id, 10).unwrap();
            hits += rec.ranked.iter().filter(|(c, _)| category[c.as_str()] == favourite).count();
            shown += rec.ranked.len();

            let mut scored: Vec<(f64, &str)> = courses
                .iter()
                .filter(|c| !profile_enrolled(&graph, &s.id, c))
                .map(|&c| (rng.random::<f64>(), c))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            let top = &scored[..scored.len().min(10)];
            random_hits += top.iter().filter(|(_, c)| category[c] == favourite).count();
            random_shown += top.len();
        }
        model_share += hits as f64 / shown as f64 / 20.0;
        random_share += random_hits as f64 / random_shown as f64 / 20.0;
    }
    verdict(
        6,
        "recommendation favourite-category share",
        model_share >= 0.60 && random_share <= 0.25,
        format!(
            "model {:.1}% vs random {:.1}% over 20 seeds, {:?}",
            model_share * 100.0,
            random_share * 100.0,
            start.elapsed()
        ),
    );
}

fn profile_enrolled(graph: &edurec::HeteroGraph, student: &str, course: &str) -> bool {
    let s = graph.node_ix(student).unwrap();
    graph
        .neighbors(s, EdgeKind::Learn, edurec::Direction::Out)
        .any(|c| graph.node_at(c).id == course)
}

/// Every set partition of `items` into groups with the sizes in `sizes`.
fn partitions(items: &[usize], sizes: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let Some((&first, rest)) = items.split_first() else {
        return vec![Vec::new()];
    };
    let distinct: BTreeSet<usize> = sizes.iter().copied().collect();
    let mut out = Vec::new();
    for size in distinct {
        let mut remaining_sizes = sizes.to_vec();
        let at = remaining_sizes.iter().position(|&s| s == size).unwrap();
        remaining_sizes.remove(at);
        for mask in 0u32..(1 << rest.len()) {
            if mask.count_ones() as usize != size - 1 {
                continue;
            }
            let mut group = vec![first];
            let mut others = Vec::new();
            for (i, &x) in rest.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    group.push(x);
                } else {
                    others.push(x);
                }
            }
            for mut tail in partitions(&others, &remaining_sizes) {
                tail.push(group.clone());
                out.push(tail);
            }
        }
    }
    out
}

fn exhaustive_best(ids: &[String], embeddings: &BTreeMap<String, Vec<f64>>, g: usize) -> (f64, BTreeSet<BTreeSet<String>>) {
    let sizes = group_sizes(ids.len(), g);
    let idx: Vec<usize> = (0..ids.len()).collect();
    let mut best = (f64::NEG_INFINITY, BTreeSet::new());
    for p in partitions(&idx, &sizes) {
        let scores: Vec<f64> = p
            .iter()
            .filter(|grp| grp.len() >= 2)
            .map(|grp| {
                let members: Vec<&str> = grp.iter().map(|&i| ids[i].as_str()).collect();
                cohesion(&members, embeddings).unwrap()
            })
            .collect();
        let mean = scores.iter().sum::<f64>() / scores.len().max(1) as f64;
        if mean > best.0 {
            let sets = p
                .iter()
                .map(|grp| grp.iter().map(|&i| ids[i].clone()).collect())
                .collect();
            best = (mean, sets);
        }
    }
    best
}

/// Blobs of the given sizes around directions with pairwise cosine below 0.5.
fn blob_fixture(sizes: &[usize], rng: &mut ChaCha8Rng) -> (Vec<String>, BTreeMap<String, Vec<f64>>) {
    let mut centers: Vec<Vec<f64>> = Vec::new();
    while centers.len() < sizes.len() {
        let c: Vec<f64> = (0..8).map(|_| StandardNormal.sample(rng)).collect();
        let ok = centers.iter().all(|o| {
            let dot: f64 = o.iter().zip(&c).map(|(a, b)| a * b).sum();
            let n1: f64 = o.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n2: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            dot / (n1 * n2) < 0.5
        });
        if ok {
            centers.push(c);
        }
    }
    let mut embeddings = BTreeMap::new();
    let mut ids = Vec::new();
    for (center, &size) in centers.iter().zip(sizes) {
        for _ in 0..size {
            let id = format!("s{}", ids.len());
            let scale = 0.5 + rng.random::<f64>();
            let v: Vec<f64> = center
                .iter()
                .map(|&x| scale * x + 0.05 * Distribution::<f64>::sample(&StandardNormal, rng))
                .collect();
            embeddings.insert(id.clone(), v);
            ids.push(id);
        }
    }
    (ids, embeddings)
}

#[test]
fn a7_greedy_groups_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // (group size, blob count) with n = g * blobs <= 8
    let shapes = [(2, 2), (2, 3), (2, 4), (3, 2), (4, 2)];
    let mut matched = 0;
    let mut uneven = (0, 0);
    for case in 0..40 {
        let spec_shaped = case < 20;
        let (g, sizes) = if spec_shaped {
            let (g, blobs) = shapes[case % shapes.len()];
            (g, vec![g; blobs])
        } else {
            let n = 5 + case % 4;
            let g = 2 + case % 3;
            (g, group_sizes(n, g))
        };
        let (ids, embeddings) = blob_fixture(&sizes, &mut rng);
        let assignments: BTreeMap<String, usize> = ids.iter().map(|id| (id.clone(), 0)).collect();
        let greedy = form_groups(&assignments, &embeddings, g, case as u64).unwrap();
        let greedy_sets: BTreeSet<BTreeSet<String>> = greedy.iter().map(|gr| gr.members.clone()).collect();
        let (_, best) = exhaustive_best(&ids, &embeddings, g);
        let hit = greedy_sets == best;
        if spec_shaped {
            matched += usize::from(hit);
        } else {
            uneven = (uneven.0 + usize::from(hit), uneven.1 + 1);
        }
    }

    // partition property on generated data with trained embeddings
    let mut partition_ok = true;
    for seed in 0..3u64 {
        let cfg = GeneratorConfig {
            n_students: 120,
            n_courses: 150,
            n_teachers: 40,
            n_schools: 6,
            n_categories: 6,
            n_majors: 4,
            courses_per_student: (20, 40),
            seed,
            ..Default::default()
        };
        let graph = generate_synthetic(&cfg).unwrap();
        let view = build_view(&graph, FeatureConfig::default()).unwrap();
        let model = gnn::train(&view, &gnn::TrainConfig { epochs: 30, seed, ..Default::default() }).unwrap().model;
        let emb = Embeddings::new(&model, &view).unwrap();
        let students = eligible_students(&graph, 27);
        let (features, clusters) =
            edurec::stats::preference_clusters(&graph, &students, PreferenceDimension::Category, 3, seed).unwrap();
        let assignments: BTreeMap<String, usize> =
            features.students.iter().cloned().zip(clusters.assignments.iter().copied()).collect();
        let groups = form_groups(&assignments, &emb.by_kind(NodeKind::Student), 4, seed).unwrap();
        let mut seen = BTreeSet::new();
        for gr in &groups {
            for m in &gr.members {
                partition_ok &= seen.insert(m.clone()) && assignments[m] == gr.cluster;
            }
        }
        partition_ok &= seen.len() == assignments.len();
    }
    verdict(
        7,
        "greedy groups vs exhaustive partition",
        matched == 20 && partition_ok,
        format!(
            "matched {matched}/20 blob fixtures, partition property {partition_ok} (uneven remainder sizes, not asserted: {}/{})",
            uneven.0, uneven.1
        ),
    );
}

#[test]
fn a8_round_trip_and_end_to_end_budget() {
    let start = Instant::now();
    let cfg = GeneratorConfig {
        n_students: 5000,
        n_courses: 2000,
        n_teachers: 1000,
        n_schools: 100,
        n_categories: 32,
        n_majors: 50,
        seed: 8,
        ..Default::default()
    };
    let graph = generate_synthetic(&cfg).unwrap();
    let generated = start.elapsed();

    let dir = tempfile::tempdir().unwrap();
    let (nodes, edges, gml) = (dir.path().join("n.jsonl"), dir.path().join("e.jsonl"), dir.path().join("g.graphml"));
    io::write_jsonl(&graph, &nodes, &edges).unwrap();
    io::export_graphml(&graph, &gml).unwrap();
    let (from_jsonl, rep_j) = io::load_jsonl(&nodes, &edges, IngestOptions::default()).unwrap();
    let (from_gml, rep_g) = io::read_graphml(&gml, IngestOptions::default()).unwrap();
    let counts = graph.counts_by_kind();
    let same = from_jsonl.counts_by_kind() == counts && from_gml.counts_by_kind() == counts;
    let clean = rep_j.is_clean()
        && rep_g.is_clean()
        && graph.schema_validate().is_empty()
        && from_jsonl.schema_validate().is_empty()
        && from_gml.schema_validate().is_empty();

    let t_analyze = Instant::now();
    let mut analyzed = 0;
    let mut skipped = Vec::new();
    for dim in PreferenceDimension::ALL {
        for sc in IndicatorScenario::ALL {
            match preference_engagement_association(&from_jsonl, dim, sc, &AssociationParams { seed: 8, ..Default::default() }) {
                Ok(_) => analyzed += 1,
                Err(e) => skipped.push(format!("{}/{}: {e}", dim.as_str(), sc.as_str())),
            }
        }
    }
    let analyze = t_analyze.elapsed();
    let t_train = Instant::now();
    let view = build_view(&from_jsonl, FeatureConfig::default()).unwrap();
    let trained = gnn::train(&view, &gnn::TrainConfig { seed: 8, ..Default::default() }).unwrap();
    let train = t_train.elapsed();
    let budget = generated + analyze + train;
    let learned = trained.losses.last().unwrap() <= trained.losses.first().unwrap();
    verdict(
        8,
        "round trip at 5000 students and time budget",
        same && clean && learned && budget < Duration::from_secs(60),
        format!(
            "{} nodes / {} edges preserved {same}, clean {clean}; generate {generated:?} + analyze {analyze:?} ({analyzed}/12 cells{}) + train {train:?} = {budget:?}",
            counts.total_nodes(),
            counts.total_edges(),
            if skipped.is_empty() { String::new() } else { format!(", skipped {skipped:?}") }
        ),
    );
}

#[test]
fn a9_eligibility_boundary() {
    let graph = common::enrolment_graph(&[27, 26, 28, 0, 27], 30);
    let eligible = eligible_students(&graph, 27);
    let want: BTreeSet<String> = ["student:0", "student:2", "student:4"].iter().map(|s| s.to_string()).collect();
    // exactly one more edge turns the 26-course student eligible
    let mut bumped = common::enrolment_graph(&[26], 30);
    bumped.add_edge(EdgeKind::Learn, "student:0", "course:29").unwrap();
    let bumped_ok = eligible_students(&bumped, 27).contains("student:0");
    verdict(
        9,
        "eligibility boundary at 27 courses",
        eligible == want && bumped_ok,
        format!("eligible {eligible:?}, 26 + 1 edge eligible {bumped_ok}"),
    );
}
