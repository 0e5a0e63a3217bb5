//! Acceptance suite: ten numbered end-to-end checks over the whole stack.
//! Each test prints one `criterion NN ...: PASS/FAIL` line (visible with
//! `--nocapture`) and asserts its verdict; tolerances are pinned right
//! next to the checks they guard. The heavyweight fixtures (a 10⁴-vertex
//! instance with a 100-landmark oracle, and a four-level hierarchy) are
//! built once and shared.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdoracle_core::bench::{
    freeflow_blowup, sample_vertices, validate_assumptions, QuerySet, RangeClass,
};
use tdoracle_core::codec::{bucket, decode_time, encode_block, encode_time, CodecConfig, Store};
use tdoracle_core::flat::{FlatOracle, QueryError, QueryResult, SummarySource};
use tdoracle_core::graph::{static_metric, MetricKind, NodeId, NodeInfo, TdGraph};
use tdoracle_core::horn::{HornOracle, HornParams, RECURSION_BUDGET};
use tdoracle_core::landmarks::{
    build_hierarchy, select_sparse_random, HierarchyMethod, HierarchySpec, LandmarkSet,
    SelectionMethod,
};
use tdoracle_core::live::{
    affected_landmarks, modified_graph, Change, Disruption, LiveFlat, PatchedSource,
};
use tdoracle_core::search::{static_dijkstra, tdd, Direction, StopCriterion};
use tdoracle_core::synth::{generate, GeneratorConfig, InstanceKind};
use tdoracle_core::time::{Delay, Timestamp};
use tdoracle_core::trap::{
    estimate_slope_bounds, BuildStats, SlopeBounds, Summary, SummarySet, TrapConfig,
};
use tdoracle_core::ttf::{Ttf, TtfPoint};

/// Relative slack for floating-point `>=` comparisons against exact values.
const FP_REL: f64 = 1e-9;
/// Absolute slack for comparisons of near-zero quantities.
const FP_ABS: f64 = 1e-9;

fn verdict(no: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {no:02} {name}: {tag} ({detail})");
    assert!(pass, "criterion {no:02} {name}: FAIL ({detail})");
}

/// Slope bounds measured on the instance with a 1.5x safety margin.
fn trap_config(g: &TdGraph, tau: f64) -> TrapConfig {
    let measured = estimate_slope_bounds(g, 40, 64, 9);
    let bounds = SlopeBounds::new(measured.lambda_max * 1.5, 1.0);
    let mut cfg = TrapConfig::new(g.period(), bounds);
    cfg.tau = tau;
    cfg
}

static GRAPH: LazyLock<&'static TdGraph> = LazyLock::new(|| {
    let mut cfg = GeneratorConfig::new(InstanceKind::Grid, 10_000, 11);
    cfg.td_fraction = 0.12;
    Box::leak(Box::new(generate(&cfg)))
});

struct FlatSetup {
    oracle: FlatOracle<'static>,
    trap: TrapConfig,
    queries: Vec<(NodeId, NodeId, Timestamp)>,
    /// Exact travel time and Dijkstra rank per query.
    exact: Vec<Option<(f64, usize)>>,
}

static FLAT: LazyLock<FlatSetup> = LazyLock::new(|| {
    let g = *GRAPH;
    let landmarks = select_sparse_random(g, 100, 25, 5);
    assert!(!landmarks.truncated, "pool exhausted before 100 landmarks");
    let trap = trap_config(g, g.period() / 32.0);
    assert_eq!(trap.epsilon, 0.1);
    let oracle =
        FlatOracle::preprocess(g, &landmarks, &trap, CodecConfig::default()).expect("preprocess");
    let qs = QuerySet::random(g, 1_000, (0.0, g.period()), 21);
    let exact = qs
        .queries
        .iter()
        .map(|&(o, d, t)| {
            let sr = tdd(g, o, t, &StopCriterion::at_target(d));
            sr.delay_to(d).map(|x| (x.0, sr.rank()))
        })
        .collect();
    FlatSetup {
        oracle,
        trap,
        queries: qs.queries,
        exact,
    }
});

/// (value, rank) per query for FCA, FCA⁺(6) and RQA(1).
static RUNS: LazyLock<Vec<[Option<(f64, usize)>; 3]>> = LazyLock::new(|| {
    let f = &*FLAT;
    let run = |r: Result<QueryResult, QueryError>| match r {
        Ok(q) => Some((q.value.0, q.rank)),
        Err(QueryError::Unreachable { .. }) => None,
        Err(e) => panic!("query failed: {e}"),
    };
    f.queries
        .iter()
        .map(|&(o, d, t)| {
            [
                run(f.oracle.fca(o, d, t)),
                run(f.oracle.fca_plus(o, d, t, 6)),
                run(f.oracle.rqa(o, d, t, 1)),
            ]
        })
        .collect()
});

struct HornSetup {
    g: &'static TdGraph,
    horn: HornOracle<'static>,
    /// FLAT oracle over the global (top-level) landmarks only.
    top_flat: FlatOracle<'static>,
}

static HORN: LazyLock<HornSetup> = LazyLock::new(|| {
    let g = *GRAPH;
    // Level-1 coverage spans the mid query band and the top level stays
    // sparse; both are needed for the hierarchy to pay off at this size.
    let spec = HierarchySpec {
        level_sizes: vec![220, 45, 22, 9],
        coverage_sizes: vec![1_000, 2_500, 5_300, 10_000],
        exclusion_sizes: vec![0; 4],
        method: HierarchyMethod::HR,
        xi: 0.1,
    };
    let hierarchy = build_hierarchy(g, &spec, 7).expect("hierarchy");
    let trap = trap_config(g, g.period() / 32.0);
    let horn = HornOracle::preprocess(g, &hierarchy, &trap, CodecConfig::default(), HornParams::default())
        .expect("horn preprocess");
    let top_flat = FlatOracle::preprocess(g, &hierarchy.levels[3].set, &trap, CodecConfig::default())
        .expect("top-level preprocess");
    HornSetup { g, horn, top_flat }
});

/// Breadth-first induced subinstance of at most `cap` vertices around
/// `root`, with vertex ids remapped to 0..k (0 is the root).
fn induced_subinstance(g: &TdGraph, root: NodeId, cap: usize) -> TdGraph {
    let mut picked = vec![root];
    let mut seen = BTreeSet::from([root]);
    let mut qi = 0;
    while qi < picked.len() && picked.len() < cap {
        let v = picked[qi];
        qi += 1;
        for a in g.out_arcs(v) {
            let h = g.arc(a).head;
            if seen.insert(h) {
                picked.push(h);
                if picked.len() == cap {
                    break;
                }
            }
        }
    }
    let index: BTreeMap<NodeId, NodeId> = picked
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as NodeId))
        .collect();
    let mut arcs = Vec::new();
    for &v in &picked {
        for a in g.out_arcs(v) {
            let arc = g.arc(a);
            if let Some(&h) = index.get(&arc.head) {
                arcs.push((index[&v], h, arc.ttf.clone()));
            }
        }
    }
    TdGraph::build(g.period(), vec![NodeInfo::default(); picked.len()], arcs)
        .expect("induced subinstance builds")
}

/// Minimum travel time by exhaustive enumeration of simple paths, folding
/// arrivals with the same arithmetic the label-setting search uses.
fn enumerate_min_delay(g: &TdGraph, o: NodeId, d: NodeId, t0: Timestamp) -> Option<Delay> {
    fn dfs(
        g: &TdGraph,
        v: NodeId,
        d: NodeId,
        now: Timestamp,
        on_path: &mut Vec<bool>,
        best: &mut Option<Timestamp>,
    ) {
        if v == d {
            if best.map_or(true, |b| now.0 < b.0) {
                *best = Some(now);
            }
            return;
        }
        // Arrivals only grow along a path, so a prefix at or past the
        // incumbent cannot improve on it.
        if best.is_some_and(|b| now.0 >= b.0) {
            return;
        }
        for a in g.out_arcs(v) {
            let h = g.arc(a).head;
            if on_path[h as usize] {
                continue;
            }
            on_path[h as usize] = true;
            dfs(g, h, d, now + g.eval_arc(a, now), on_path, best);
            on_path[h as usize] = false;
        }
    }
    let mut on_path = vec![false; g.n()];
    on_path[o as usize] = true;
    let mut best = None;
    dfs(g, o, d, t0, &mut on_path, &mut best);
    best.map(|b| b - t0)
}

#[test]
fn c01_exact_search_matches_exhaustive_path_enumeration() {
    let g = *GRAPH;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let active: Vec<NodeId> = g.active_nodes().collect();
    let mut compared = 0;
    let mut mismatches = 0;
    for _ in 0..20 {
        let root = active[rng.gen_range(0..active.len())];
        let sub = induced_subinstance(g, root, 10);
        if sub.n() < 2 {
            continue;
        }
        let d = rng.gen_range(1..sub.n() as NodeId);
        let t0 = Timestamp(rng.gen_range(0.0..g.period()));
        let searched = tdd(&sub, 0, t0, &StopCriterion::at_target(d)).delay_to(d);
        let enumerated = enumerate_min_delay(&sub, 0, d, t0);
        compared += 1;
        // Zero tolerance: both fold the same arc evaluations.
        match (searched, enumerated) {
            (Some(a), Some(b)) if a.0 == b.0 => {}
            (None, None) => {}
            _ => mismatches += 1,
        }
    }
    verdict(
        1,
        "exact search vs path enumeration",
        compared == 20 && mismatches == 0,
        &format!("{compared} triples, {mismatches} mismatches"),
    );
}

#[test]
fn c02_summaries_stay_inside_the_soundness_envelope() {
    let f = &*FLAT;
    let g = *GRAPH;
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let active: Vec<NodeId> = g.active_nodes().collect();
    let all = f.oracle.landmarks();
    let mut landmarks = BTreeSet::new();
    while landmarks.len() < 5 {
        landmarks.insert(all[rng.gen_range(0..all.len())]);
    }
    let scale = f.oracle.store.config.scale;
    let mut checks = 0usize;
    let mut violations = 0usize;
    for &l in &landmarks {
        let mut dests = BTreeSet::new();
        while dests.len() < 20 {
            let d = active[rng.gen_range(0..active.len())];
            if d != l {
                dests.insert(d);
            }
        }
        let decoded: Vec<(NodeId, Ttf)> = dests
            .iter()
            .map(|&d| (d, f.oracle.store.lookup(l, d).unwrap().expect("covered")))
            .collect();
        let mut flags = vec![false; g.n()];
        for &d in &dests {
            flags[d as usize] = true;
        }
        let stop = StopCriterion::landmark_count(dests.len(), &flags);
        for _ in 0..1_000 {
            let t = Timestamp(rng.gen_range(0.0..g.period()));
            let sr = tdd(g, l, t, &stop);
            for (d, ttf) in &decoded {
                let exact = sr.delay_to(*d).expect("destination settled").0;
                let dec = ttf.eval(t).0;
                let hi = (1.0 + f.trap.epsilon) * exact + 2.0 * scale + FP_REL * exact;
                checks += 1;
                if dec < exact * (1.0 - FP_REL) || dec > hi {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        2,
        "summary soundness envelope",
        checks == 100_000 && violations == 0,
        &format!("{checks} samples, {violations} violations"),
    );
}

#[test]
fn c03_answers_never_underestimate_the_exact_travel_time() {
    let f = &*FLAT;
    let runs = &*RUNS;
    let mut checks = 0usize;
    let mut violations = 0usize;
    for (ex, outcomes) in f.exact.iter().zip(runs) {
        let Some((exact, _)) = ex else { continue };
        for outcome in outcomes.iter().flatten() {
            checks += 1;
            if outcome.0 < exact * (1.0 - FP_REL) {
                violations += 1;
            }
        }
    }
    let h = &*HORN;
    let qs = QuerySet::random(h.g, 1_000, (0.0, h.g.period()), 23);
    for &(o, d, t) in &qs.queries {
        let exact = tdd(h.g, o, t, &StopCriterion::at_target(d)).delay_to(d);
        match (h.horn.hqa(o, d, t), exact) {
            (Ok(q), Some(x)) => {
                checks += 1;
                if q.value.0 < x.0 * (1.0 - FP_REL) {
                    violations += 1;
                }
            }
            (Err(QueryError::Unreachable { .. }), None) => {}
            (r, x) => panic!("outcome mismatch: {r:?} vs exact {x:?}"),
        }
    }
    verdict(
        3,
        "never underestimates",
        checks >= 4_000 && violations == 0,
        &format!("{checks} values, {violations} below exact"),
    );
}

fn mean_error(algo: usize) -> f64 {
    let f = &*FLAT;
    let runs = &*RUNS;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (ex, outcomes) in f.exact.iter().zip(runs) {
        if let (Some((exact, _)), Some((value, _))) = (ex, outcomes[algo]) {
            sum += (value - exact) / exact;
            count += 1;
        }
    }
    sum / count as f64
}

#[test]
fn c04_refined_queries_beat_the_basic_one_on_mean_error() {
    let fca = mean_error(0);
    let fca6 = mean_error(1);
    let rqa1 = mean_error(2);
    verdict(
        4,
        "error ordering",
        fca6 < fca && rqa1 < fca,
        &format!("mean rel err FCA {fca:.5}, FCA+(6) {fca6:.5}, RQA(1) {rqa1:.5}"),
    );
}

#[test]
fn c05_basic_query_rank_speedup_reaches_the_floor() {
    let f = &*FLAT;
    let runs = &*RUNS;
    let mut exact_sum = 0.0;
    let mut fca_sum = 0.0;
    let mut count = 0usize;
    for (ex, outcomes) in f.exact.iter().zip(runs) {
        if let (Some((_, exact_rank)), Some((_, fca_rank))) = (ex, outcomes[0]) {
            exact_sum += *exact_rank as f64;
            fca_sum += fca_rank as f64;
            count += 1;
        }
    }
    let speedup = exact_sum / fca_sum;
    verdict(
        5,
        "rank speedup",
        count >= 990 && speedup >= 10.0,
        &format!(
            "mean exact rank {:.0}, mean FCA rank {:.0}, speedup {speedup:.1}",
            exact_sum / count as f64,
            fca_sum / count as f64
        ),
    );
}

/// Periodic FIFO test function: a gentle harmonic plus noise, slopes far
/// above -1 by construction.
fn harmonic_points(rng: &mut ChaCha8Rng, period: f64, count: usize) -> Vec<(f64, f64)> {
    let dt = period / count as f64;
    let base = rng.gen_range(600.0..1500.0);
    let amp = rng.gen_range(50.0..500.0);
    let harm = rng.gen_range(1..4) as f64;
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    (0..count)
        .map(|i| {
            let t = (i as f64 + rng.gen_range(0.0..0.4)) * dt;
            let angle = std::f64::consts::TAU * harm * (i as f64) / count as f64 + phase;
            (t, base + amp * angle.sin() + rng.gen_range(0.0..2.0))
        })
        .collect()
}

fn build_store(summaries: BTreeMap<NodeId, Vec<(f64, f64)>>, cfg: CodecConfig, period: f64) -> Store {
    let set = SummarySet {
        landmark: 0,
        summaries: summaries
            .into_iter()
            .map(|(d, pts)| {
                let ttf = Ttf::new(
                    period,
                    pts.iter().map(|&(t, v)| TtfPoint::new(t, v)).collect(),
                )
                .expect("valid test function");
                (
                    d,
                    Summary {
                        destination: d,
                        ttf,
                        const_pred: None,
                    },
                )
            })
            .collect(),
        stats: BuildStats::default(),
    };
    let block = encode_block(&set, &cfg);
    Store::build(vec![block], &BTreeMap::new(), cfg, period)
}

fn ttf_bits_equal(a: &Ttf, b: &Ttf) -> bool {
    a.points().len() == b.points().len()
        && a.points().iter().zip(b.points()).all(|(x, y)| {
            x.at.0.to_bits() == y.at.0.to_bits() && x.delay.0.to_bits() == y.delay.0.to_bits()
        })
}

#[test]
fn c06_codec_round_trips_within_two_scale_units() {
    let period = 86_400.0;
    let mut rng = ChaCha8Rng::seed_from_u64(47);

    // One million raw time values: ceiling quantization only drifts up,
    // by at most two scale units.
    let cfg = CodecConfig::default();
    let mut checks = 0usize;
    let mut round_trip_ok = true;
    let mut max_err: f64 = 0.0;
    for _ in 0..1_000_000 {
        let t = rng.gen_range(0.0..period);
        let err = decode_time(encode_time(t, cfg.scale), cfg.scale) - t;
        max_err = max_err.max(err);
        checks += 1;
        if err < 0.0 || err > 2.0 * cfg.scale {
            round_trip_ok = false;
        }
    }
    let round_trip_ok = round_trip_ok && checks == 1_000_000;

    // Whole records shaped like real summaries: stored knot values stay
    // within the same two-unit band (read back at the quantized knot
    // positions) and the decoded function never dips below the input.
    let originals: BTreeMap<NodeId, Vec<(f64, f64)>> = (1..=1_200)
        .map(|d| {
            let count = rng.gen_range(16..96);
            (d as NodeId, harmonic_points(&mut rng, period, count))
        })
        .collect();
    let store = build_store(originals.clone(), cfg.clone(), period);
    let mut block_ok = true;
    let mut knot_max: f64 = 0.0;
    for (d, pts) in &originals {
        let dec = store.lookup(0, *d).unwrap().expect("record present");
        for &(t, v) in pts {
            let q = Timestamp((t / cfg.scale).round() * cfg.scale);
            let err = dec.eval(q).0 - v;
            knot_max = knot_max.max(err);
            if err < -(FP_ABS + FP_REL * v) || err > 2.0 * cfg.scale + FP_ABS + FP_REL * v {
                block_ok = false;
            }
        }
        let f = Ttf::new(period, pts.iter().map(|&(t, v)| TtfPoint::new(t, v)).collect())
            .expect("valid test function");
        for w in pts.windows(2) {
            let t = Timestamp(0.5 * (w[0].0 + w[1].0));
            if dec.eval(t).0 < f.eval(t).0 - FP_ABS {
                block_ok = false;
            }
        }
    }

    // Compression fuzz: decoded functions match bit for bit across
    // write/read and against an uncompressed build.
    let mut fuzz_ok = true;
    for _ in 0..50 {
        let small: BTreeMap<NodeId, Vec<(f64, f64)>> = (1..=20)
            .map(|d| {
                let count = rng.gen_range(8..64);
                (d as NodeId, harmonic_points(&mut rng, period, count))
            })
            .collect();
        let on = build_store(small.clone(), CodecConfig::default(), period);
        let off = build_store(
            small.clone(),
            CodecConfig {
                compress: false,
                ..CodecConfig::default()
            },
            period,
        );
        let mut buf = Vec::new();
        on.write(&mut buf).expect("store serializes");
        let back = Store::read(&mut &buf[..]).expect("store reads back");
        for d in small.keys() {
            let a = on.lookup(0, *d).unwrap().unwrap();
            let b = back.lookup(0, *d).unwrap().unwrap();
            let c = off.lookup(0, *d).unwrap().unwrap();
            if !ttf_bits_equal(&a, &b) || !ttf_bits_equal(&a, &c) {
                fuzz_ok = false;
            }
        }
    }

    // Bucketing merges breakpoints but never lowers a delay, neither as
    // a bare transform nor through the full pipeline.
    let mut bucket_ok = true;
    for round in 0..200 {
        let c = [2.0, 8.0, 15.0][round % 3];
        let count = rng.gen_range(50..200);
        let pts = harmonic_points(&mut rng, period, count);
        let f = Ttf::new(period, pts.iter().map(|&(t, v)| TtfPoint::new(t, v)).collect())
            .expect("valid test function");
        let b = bucket(&f, c);
        for w in pts.windows(2) {
            for t in [w[0].0, 0.5 * (w[0].0 + w[1].0), rng.gen_range(w[0].0..w[1].0)] {
                let t = Timestamp(t);
                if b.eval(t).0 < f.eval(t).0 - FP_ABS {
                    bucket_ok = false;
                }
            }
        }
    }
    let medium: BTreeMap<NodeId, Vec<(f64, f64)>> = (1..=100)
        .map(|d| (d as NodeId, harmonic_points(&mut rng, period, 120)))
        .collect();
    let bucketed = build_store(
        medium.clone(),
        CodecConfig {
            bucket: 8.0,
            ..CodecConfig::default()
        },
        period,
    );
    for (d, pts) in &medium {
        let b = bucketed.lookup(0, *d).unwrap().unwrap();
        let f = Ttf::new(period, pts.iter().map(|&(t, v)| TtfPoint::new(t, v)).collect())
            .expect("valid test function");
        for w in pts.windows(2) {
            for t in [w[0].0, 0.5 * (w[0].0 + w[1].0)] {
                let t = Timestamp(t);
                if b.eval(t).0 < f.eval(t).0 - FP_ABS {
                    bucket_ok = false;
                }
            }
        }
    }

    verdict(
        6,
        "storage codec",
        round_trip_ok && block_ok && fuzz_ok && bucket_ok,
        &format!(
            "{checks} values, max drift {max_err:.3}s / knot drift {knot_max:.3}s of {:.3}s allowed, fuzz {}, bucketing {}",
            2.0 * cfg.scale,
            if fuzz_ok { "bit-exact" } else { "diverged" },
            if bucket_ok { "never lowers" } else { "lowered" },
        ),
    );
}

#[test]
fn c07_degree_two_contraction_preserves_exact_travel_times() {
    let mut cfg = GeneratorConfig::new(InstanceKind::Grid, 1_600, 41);
    cfg.td_fraction = 0.3;
    cfg.subdivide_fraction = 0.35;
    let g = generate(&cfg);
    let gc = g.contract_degree2();
    let active: Vec<NodeId> = gc.active_nodes().collect();
    assert!(active.len() < g.active_nodes().count(), "nothing contracted");
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut compared = 0;
    let mut mismatches = 0;
    for _ in 0..50 {
        let o = active[rng.gen_range(0..active.len())];
        let d = active[rng.gen_range(0..active.len())];
        if o == d {
            continue;
        }
        for _ in 0..20 {
            let t = Timestamp(rng.gen_range(0.0..g.period()));
            let before = tdd(&g, o, t, &StopCriterion::at_target(d)).delay_to(d);
            let after = tdd(&gc, o, t, &StopCriterion::at_target(d)).delay_to(d);
            compared += 1;
            match (before, after) {
                (Some(a), Some(b)) if a.0.to_bits() == b.0.to_bits() => {}
                (None, None) => {}
                _ => mismatches += 1,
            }
        }
    }
    verdict(
        7,
        "contraction equivalence",
        compared >= 900 && mismatches == 0,
        &format!("{compared} comparisons, {mismatches} mismatches"),
    );
}

#[test]
fn c08_live_patches_track_the_disrupted_graph() {
    let mut cfg = GeneratorConfig::new(InstanceKind::Grid, 1_600, 43);
    cfg.td_fraction = 0.3;
    let g = generate(&cfg);
    let landmarks = select_sparse_random(&g, 24, 16, 3);
    let trap = trap_config(&g, g.period() / 96.0);
    let oracle =
        FlatOracle::preprocess(&g, &landmarks, &trap, CodecConfig::default()).expect("preprocess");
    let scale = oracle.store.config.scale;
    let epsilon = trap.epsilon;

    let dis = Disruption {
        arc: g.out_arcs(820).next().expect("center vertex has arcs"),
        change: Change::Factor(3.0),
        window: (Timestamp(28_800.0), Timestamp(30_600.0)),
    };
    let disrupted = modified_graph(&g, &dis).expect("disruption applies");
    let trap_live = trap_config(&disrupted, g.period() / 96.0);
    let live = LiveFlat::new(oracle);
    live.apply_disruption(dis.clone(), &trap_live).expect("install");
    let state = live.snapshot();
    let m = &state.graph;

    // Patched values stay inside the soundness envelope of the modified
    // graph for departures inside the disruption window.
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let affected: Vec<NodeId> = state.patches.keys().copied().collect();
    let active: Vec<NodeId> = g.active_nodes().collect();
    let mut envelope_violations = 0;
    for i in 0..50 {
        let l = affected[i % affected.len()];
        let d = loop {
            let d = active[rng.gen_range(0..active.len())];
            if d != l {
                break d;
            }
        };
        let t = Timestamp(rng.gen_range(dis.window.0 .0..dis.window.1 .0));
        let src = PatchedSource {
            store: &live.oracle.store,
            patches: &state.patches,
            now: t,
        };
        let dec = src.summary_delay(l, d, t).unwrap().expect("covered").0;
        let exact = tdd(m, l, t, &StopCriterion::at_target(d))
            .delay_to(d)
            .expect("reachable")
            .0;
        let hi = (1.0 + epsilon) * exact + 2.0 * scale + FP_REL * exact;
        if dec < exact * (1.0 - FP_REL) || dec > hi {
            envelope_violations += 1;
        }
    }

    // Inside their window the patches agree with a from-scratch rebuild
    // of the affected landmarks on the modified graph, up to codec slack.
    let rebuilt = FlatOracle::preprocess(
        m,
        &LandmarkSet {
            method: SelectionMethod::SparseRandom,
            vertices: affected.clone(),
            seed: 0,
            truncated: false,
        },
        &trap_live,
        CodecConfig::default(),
    )
    .expect("rebuild");
    let mut rebuild_violations = 0;
    let mut rebuild_max: f64 = 0.0;
    for i in 0..100 {
        let l = affected[i % affected.len()];
        let (_, patch) = state.patches[&l].last().expect("patch installed");
        let d = loop {
            let d = active[rng.gen_range(0..active.len())];
            if d != l {
                break d;
            }
        };
        let raw = rng.gen_range(patch.window.0 .0..patch.window.1 .0);
        let t = Timestamp(raw.rem_euclid(g.period()));
        let src = PatchedSource {
            store: &live.oracle.store,
            patches: &state.patches,
            now: t,
        };
        let patched = src.summary_delay(l, d, t).unwrap().expect("covered").0;
        let fresh = rebuilt.store.lookup(l, d).unwrap().expect("covered").eval(t).0;
        let diff = (patched - fresh).abs();
        rebuild_max = rebuild_max.max(diff);
        if diff > 2.0 * scale + FP_ABS {
            rebuild_violations += 1;
        }
    }

    // The affected set matches a per-landmark brute-force filter: forward
    // free-flow distance to the arc tail within the window length.
    let u = m.arc(dis.arc).tail;
    let radius = dis.window.1 - dis.window.0;
    let ff = static_metric(m, MetricKind::FreeFlow);
    let mut brute: Vec<NodeId> = live
        .oracle
        .landmarks()
        .iter()
        .copied()
        .filter(|&l| {
            static_dijkstra(m, &ff, l, Direction::Forward, &StopCriterion::at_target(u))
                .delay_to(u)
                .is_some_and(|x| x.0 <= radius.0 + 1e-7)
        })
        .collect();
    brute.sort_unstable();
    let mut reported = affected_landmarks(m, &live.oracle.store, &dis);
    reported.sort_unstable();
    let mut patched_set = affected.clone();
    patched_set.sort_unstable();
    let sets_match = brute == reported && brute == patched_set;
    let proper_subset = !brute.is_empty() && brute.len() < live.oracle.landmarks().len();

    verdict(
        8,
        "live traffic",
        envelope_violations == 0 && rebuild_violations == 0 && sets_match && proper_subset,
        &format!(
            "{} affected of {}, envelope violations {envelope_violations}, rebuild max diff {rebuild_max:.4}s, sets match: {sets_match}",
            brute.len(),
            live.oracle.landmarks().len()
        ),
    );
}

#[test]
fn c09_hierarchy_beats_flat_on_rank_without_losing_accuracy() {
    let h = &*HORN;
    let qs = QuerySet::ranked(h.g, 200, RangeClass::Mixed, (0.0, h.g.period()), 29);
    let mut hqa_ranks = Vec::new();
    let mut fca_ranks = Vec::new();
    let mut hqa_err_sum = 0.0;
    let mut fca_err_sum = 0.0;
    let mut count = 0usize;
    for &(o, d, t) in &qs.queries {
        let exact = tdd(h.g, o, t, &StopCriterion::at_target(d))
            .delay_to(d)
            .expect("ranked queries are reachable")
            .0;
        let hqa = h.horn.hqa(o, d, t).expect("hqa answers");
        let fca = h.top_flat.fca(o, d, t).expect("global fca answers");
        hqa_ranks.push(hqa.rank);
        fca_ranks.push(fca.rank);
        hqa_err_sum += (hqa.value.0 - exact) / exact;
        fca_err_sum += (fca.value.0 - exact) / exact;
        count += 1;
    }
    hqa_ranks.sort_unstable();
    fca_ranks.sort_unstable();
    let hqa_median = hqa_ranks[count / 2];
    let fca_median = fca_ranks[count / 2];
    let hqa_err = hqa_err_sum / count as f64;
    let fca_err = fca_err_sum / count as f64;

    // A one-level hierarchy answers exactly like the recursive flat query.
    let mut cfg = GeneratorConfig::new(InstanceKind::Grid, 400, 31);
    cfg.td_fraction = 0.3;
    let g1 = generate(&cfg);
    let spec = HierarchySpec {
        level_sizes: vec![8],
        coverage_sizes: vec![400],
        exclusion_sizes: vec![0],
        method: HierarchyMethod::HR,
        xi: 0.1,
    };
    let hier = build_hierarchy(&g1, &spec, 17).expect("hierarchy");
    let trap = trap_config(&g1, g1.period() / 96.0);
    let horn1 = HornOracle::preprocess(&g1, &hier, &trap, CodecConfig::default(), HornParams::default())
        .expect("horn preprocess");
    let flat1 = FlatOracle::preprocess(&g1, &hier.levels[0].set, &trap, CodecConfig::default())
        .expect("flat preprocess");
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut compared = 0;
    let mut diverged = 0;
    for _ in 0..60 {
        let o = rng.gen_range(0..g1.n() as NodeId);
        let d = rng.gen_range(0..g1.n() as NodeId);
        let t = Timestamp(rng.gen_range(0.0..g1.period()));
        match (horn1.hqa(o, d, t), flat1.rqa(o, d, t, RECURSION_BUDGET)) {
            (Ok(a), Ok(b)) => {
                compared += 1;
                if a.value.0.to_bits() != b.value.0.to_bits() {
                    diverged += 1;
                }
            }
            (Err(QueryError::Unreachable { .. }), Err(QueryError::Unreachable { .. })) => {}
            other => panic!("outcomes diverge: {other:?}"),
        }
    }
    let single_level_ok = compared > 40 && diverged == 0;

    verdict(
        9,
        "hierarchy vs flat",
        count == 200 && hqa_median < fca_median && hqa_err <= fca_err && single_level_ok,
        &format!(
            "median rank {hqa_median} vs {fca_median}, mean err {hqa_err:.5} vs {fca_err:.5}, single-level {compared} compared {diverged} diverged"
        ),
    );
}

#[test]
fn c10_constant_symmetric_instances_validate_exactly() {
    // Delays snapped to a dyadic grid add exactly in floating point, so
    // mirrored paths agree bit for bit in both directions.
    let mut cfg = GeneratorConfig::new(InstanceKind::Grid, 400, 3);
    cfg.td_fraction = 0.0;
    cfg.symmetric = true;
    let mut g = generate(&cfg);
    const Q: f64 = 1_048_576.0;
    for id in 0..g.m() as u32 {
        let snapped = (g.arc(id).ttf.min_delay().0 * Q).round() / Q;
        g.set_arc_ttf(id, Ttf::constant(g.period(), Delay(snapped)))
            .unwrap();
    }

    let report = validate_assumptions(&g, 240, 17);
    let zeta_exact = report.zeta_max == 1.0 && report.zeta_avg == 1.0;
    let slopes_exact = report.slope_max == 0.0 && report.slope_min == 0.0;

    let origins = sample_vertices(&g, 10, 19);
    let blowup = freeflow_blowup(&g, &origins, &[25, 60, 400]);
    let ratios_exact = blowup.rows.iter().all(|r| r.ratio == 1.0);

    verdict(
        10,
        "assumption validators",
        zeta_exact && slopes_exact && ratios_exact,
        &format!(
            "zeta_max {}, slope_max {}, blow-up ratios {:?}",
            report.zeta_max,
            report.slope_max,
            blowup.rows.iter().map(|r| r.ratio).collect::<Vec<_>>()
        ),
    );
}
