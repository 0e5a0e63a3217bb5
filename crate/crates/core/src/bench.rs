//! Benchmark harness: assumption validation, query-set generation, and
//! error/rank experiments against the exact time-dependent search.
//!
//! Every cost in these reports is machine-independent: search effort is
//! counted in Dijkstra ranks (settled vertices) and answer quality in
//! travel-time error relative to an exact run, never in wall-clock time.
//! All experiments are deterministic under a fixed seed.

use crate::flat::{Exactness, FlatOracle, QueryError, QueryResult};
use crate::graph::{static_metric, MetricKind, NodeId, TdGraph};
use crate::horn::HornOracle;
use crate::search::{static_dijkstra, tdd, Direction, StopCriterion};
use crate::time::{Delay, Timestamp};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Departure window used by the standard experiments: 09:00-20:00.
pub const DAYTIME_RANGE: (f64, f64) = (32_400.0, 72_000.0);

/// Departure-grid resolution when sampling travel-time profiles.
const PROFILE_STEPS: usize = 16;

/// Attempts before rank-banded query generation settles for the closest
/// achievable rank (only relevant on instances with small components).
const BAND_ATTEMPTS: usize = 64;

/// Observed statistics behind the oracle's structural assumptions: the
/// spread between opposite-direction travel times, and the slopes and
/// offsets of minimum-travel-time profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Sampled (o, d, t) triples that were reachable in both directions.
    pub samples: usize,
    /// Mean ratio max{D[o,d](t), D[d,o](t)} / min{...} over the samples.
    pub zeta_avg: f64,
    pub zeta_max: f64,
    /// Steepest rise among the sampled minimum-travel-time profiles.
    pub slope_max: f64,
    /// Steepest descent; stays above -1 on FIFO instances.
    pub slope_min: f64,
    /// Extreme intercepts of the profile segments (delay extrapolated to
    /// departure 0), mirroring the usual path-travel-time statistics.
    pub offset_max: f64,
    pub offset_min: f64,
    pub travel_time_max: f64,
}

impl ValidationReport {
    /// Key-value lines, one statistic per line.
    pub fn table(&self) -> String {
        format!(
            "samples\t{}\nzeta_avg\t{}\nzeta_max\t{}\nslope_max\t{}\nslope_min\t{}\noffset_max\t{}\noffset_min\t{}\ntravel_time_max\t{}\n",
            self.samples,
            self.zeta_avg,
            self.zeta_max,
            self.slope_max,
            self.slope_min,
            self.offset_max,
            self.offset_min,
            self.travel_time_max,
        )
    }
}

/// Samples random (o, d, t) triples, compares the two opposite-direction
/// travel times at the shared departure, and estimates profile slopes by
/// finite differences of `tdd` values on a departure grid over one period.
pub fn validate_assumptions(g: &TdGraph, samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active: Vec<NodeId> = g.active_nodes().collect();
    let mut report = ValidationReport {
        samples: 0,
        zeta_avg: f64::NAN,
        zeta_max: f64::NAN,
        slope_max: f64::NAN,
        slope_min: f64::NAN,
        offset_max: f64::NAN,
        offset_min: f64::NAN,
        travel_time_max: f64::NAN,
    };
    if active.len() < 2 {
        return report;
    }

    let mut zeta_sum = 0.0;
    let mut zeta_max = f64::NEG_INFINITY;
    let mut slope_max = f64::NEG_INFINITY;
    let mut slope_min = f64::INFINITY;
    let mut offset_max = f64::NEG_INFINITY;
    let mut offset_min = f64::INFINITY;
    let mut tt_max = f64::NEG_INFINITY;
    for _ in 0..samples {
        let o = active[rng.gen_range(0..active.len())];
        let d = active[rng.gen_range(0..active.len())];
        let t = Timestamp(rng.gen_range(0.0..g.period()));
        if o == d {
            continue;
        }
        let fwd = tdd(g, o, t, &StopCriterion::at_target(d)).delay_to(d);
        let bwd = tdd(g, d, t, &StopCriterion::at_target(o)).delay_to(o);
        let (Some(fw), Some(bw)) = (fwd, bwd) else {
            continue;
        };
        report.samples += 1;
        let zeta = fw.max(bw) / fw.min(bw);
        zeta_sum += zeta;
        zeta_max = zeta_max.max(zeta);
        tt_max = tt_max.max(fw.0).max(bw.0);

        // Profile of D[o,d] on the departure grid; grid steps where the
        // target became unreachable would desynchronize the differences,
        // but reachability is departure-independent on FIFO instances.
        let step = g.period() / PROFILE_STEPS as f64;
        let mut profile = Vec::with_capacity(PROFILE_STEPS + 1);
        for i in 0..=PROFILE_STEPS {
            let ti = i as f64 * step;
            let Some(del) = tdd(g, o, Timestamp(ti), &StopCriterion::at_target(d)).delay_to(d)
            else {
                profile.clear();
                break;
            };
            profile.push((ti, del.0));
        }
        for w in profile.windows(2) {
            let ((t0, d0), (t1, d1)) = (w[0], w[1]);
            let slope = (d1 - d0) / (t1 - t0);
            slope_max = slope_max.max(slope);
            slope_min = slope_min.min(slope);
            offset_max = offset_max.max(d0 - slope * t0);
            offset_min = offset_min.min(d0 - slope * t0);
            tt_max = tt_max.max(d0).max(d1);
        }
    }

    if report.samples > 0 {
        report.zeta_avg = zeta_sum / report.samples as f64;
        report.zeta_max = zeta_max;
        report.slope_max = slope_max;
        report.slope_min = slope_min;
        report.offset_max = offset_max;
        report.offset_min = offset_min;
        report.travel_time_max = tt_max;
    }
    report
}

/// One ball-size row of the free-flow blow-up experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupRow {
    /// Free-flow ball size the experiment grows first.
    pub f: usize,
    /// Extended-ball sizes after widening the radius to the ball's
    /// full-congestion reach, aggregated over the origins.
    pub avg_extended: f64,
    pub max_extended: usize,
    /// Worst extended-to-plain size ratio across the origins.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub origins: usize,
    pub rows: Vec<BlowupRow>,
}

impl BlowupReport {
    pub fn table(&self) -> String {
        let mut out = String::from("f\tavg_extended\tmax_extended\tratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                r.f, r.avg_extended, r.max_extended, r.ratio
            ));
        }
        out
    }
}

/// Grows a free-flow ball of each requested size around every origin,
/// measures the full-congestion radius of that ball, and counts how many
/// vertices the free-flow ball holds once widened to this larger radius.
/// A small worst-case ratio is what keeps landmark balls effective.
pub fn freeflow_blowup(g: &TdGraph, origins: &[NodeId], f_values: &[usize]) -> BlowupReport {
    let ff = static_metric(g, MetricKind::FreeFlow);
    let fc = static_metric(g, MetricKind::FullCongestion);
    let mut rows: Vec<BlowupRow> = f_values
        .iter()
        .map(|&f| BlowupRow {
            f,
            avg_extended: 0.0,
            max_extended: 0,
            ratio: 0.0,
        })
        .collect();
    let mut counted = vec![0usize; rows.len()];

    for &l in origins {
        let ball = static_dijkstra(g, &ff, l, Direction::Forward, &StopCriterion::exhaustive());
        let congested =
            static_dijkstra(g, &fc, l, Direction::Forward, &StopCriterion::exhaustive());
        for (row, counted) in rows.iter_mut().zip(counted.iter_mut()) {
            let size = row.f.min(ball.settled.len());
            if size == 0 {
                continue;
            }
            let mut radius = Delay::ZERO;
            for &(v, _) in &ball.settled[..size] {
                let dv = congested
                    .delay_to(v)
                    .expect("free-flow reachable vertices stay reachable under congestion");
                radius = radius.max(dv);
            }
            // Settle order is ascending, so the widened ball is a prefix.
            let extended = ball.settled.partition_point(|&(_, a)| a.0 <= radius.0);
            row.avg_extended += extended as f64;
            row.max_extended = row.max_extended.max(extended);
            row.ratio = row.ratio.max(extended as f64 / size as f64);
            *counted += 1;
        }
    }
    for (row, counted) in rows.iter_mut().zip(counted) {
        if counted > 0 {
            row.avg_extended /= counted as f64;
        }
    }
    BlowupReport {
        origins: origins.len(),
        rows,
    }
}

/// Uniform random active vertices, e.g. blow-up origins.
pub fn sample_vertices(g: &TdGraph, count: usize, seed: u64) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active: Vec<NodeId> = g.active_nodes().collect();
    (0..count)
        .map(|_| active[rng.gen_range(0..active.len())])
        .collect()
}

/// Query-distance class, expressed as a Dijkstra-rank band of the target:
/// short reaches at most n/100 vertices, mid at most n/10, long anything
/// beyond. `Mixed` cycles through the three bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeClass {
    Short,
    Mid,
    Long,
    Mixed,
}

/// A reproducible batch of (origin, destination, departure) triples.
#[derive(Debug, Clone)]
pub struct QuerySet {
    pub queries: Vec<(NodeId, NodeId, Timestamp)>,
    pub departure_range: (f64, f64),
    pub seed: u64,
    pub class: RangeClass,
}

impl QuerySet {
    /// Uniform random endpoints and departures; no rank targeting.
    pub fn random(
        g: &TdGraph,
        count: usize,
        departure_range: (f64, f64),
        seed: u64,
    ) -> QuerySet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let active: Vec<NodeId> = g.active_nodes().collect();
        let mut queries = Vec::with_capacity(count);
        while queries.len() < count {
            let o = active[rng.gen_range(0..active.len())];
            let d = active[rng.gen_range(0..active.len())];
            if o == d {
                continue;
            }
            queries.push((o, d, sample_departure(&mut rng, departure_range)));
        }
        QuerySet {
            queries,
            departure_range,
            seed,
            class: RangeClass::Mixed,
        }
    }

    /// Queries whose targets sit at a sampled Dijkstra rank inside the
    /// class band: the generator grows an exact ball of that size and
    /// takes the last settled vertex as the destination.
    pub fn ranked(
        g: &TdGraph,
        count: usize,
        class: RangeClass,
        departure_range: (f64, f64),
        seed: u64,
    ) -> QuerySet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let active: Vec<NodeId> = g.active_nodes().collect();
        let n = active.len();
        let mut queries = Vec::with_capacity(count);
        for i in 0..count {
            let band = match class {
                RangeClass::Mixed => rank_band(n, [RangeClass::Short, RangeClass::Mid, RangeClass::Long][i % 3]),
                c => rank_band(n, c),
            };
            queries.push(sample_in_band(g, &active, band, departure_range, &mut rng));
        }
        QuerySet {
            queries,
            departure_range,
            seed,
            class,
        }
    }
}

/// Inclusive rank band of a class on an instance with `n` active vertices.
pub fn rank_band(n: usize, class: RangeClass) -> (usize, usize) {
    let short_hi = (n / 100).max(2);
    let mid_hi = (n / 10).max(short_hi);
    match class {
        RangeClass::Short => (2, short_hi),
        RangeClass::Mid => (short_hi.min(mid_hi - 1) + 1, mid_hi),
        RangeClass::Long | RangeClass::Mixed => (mid_hi.min(n - 1) + 1, n),
    }
}

fn sample_departure(rng: &mut ChaCha8Rng, range: (f64, f64)) -> Timestamp {
    if range.1 > range.0 {
        Timestamp(rng.gen_range(range.0..range.1))
    } else {
        Timestamp(range.0)
    }
}

fn sample_in_band(
    g: &TdGraph,
    active: &[NodeId],
    band: (usize, usize),
    departure_range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> (NodeId, NodeId, Timestamp) {
    let mut best: Option<(usize, (NodeId, NodeId, Timestamp))> = None;
    for _ in 0..BAND_ATTEMPTS {
        let o = active[rng.gen_range(0..active.len())];
        let t = sample_departure(rng, departure_range);
        let want = rng.gen_range(band.0..=band.1);
        let ball = tdd(g, o, t, &StopCriterion::ball_size(want));
        let got = ball.settled.len();
        if got < 2 {
            continue;
        }
        let d = ball.settled[got - 1].0;
        if got == want {
            return (o, d, t);
        }
        // The component was smaller than the sampled rank; remember the
        // closest miss in case every attempt lands in such a component.
        if best.map_or(true, |(miss, _)| want - got < miss) {
            best = Some((want - got, (o, d, t)));
        }
    }
    best.expect("an instance with at least one arc").1
}

/// Algorithm roster and ground-truth switch for a benchmark run.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Landmark count for the best-of-N flat query.
    pub fca_plus_n: usize,
    /// Recursion budget for the recursive flat query.
    pub rqa_budget: usize,
    /// Compare every answer against an exact `tdd` run.
    pub ground_truth: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            fca_plus_n: 6,
            rqa_budget: 1,
            ground_truth: true,
        }
    }
}

/// Aggregated outcome of one algorithm over a query set. Error fields are
/// NaN when ground truth was off or nothing was comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoStats {
    pub label: String,
    /// Queries answered with a value (the rest were unreachable).
    pub answered: usize,
    /// Answers that were provably exact.
    pub exact: usize,
    /// Relative error vs the exact value, over answered queries.
    pub mean_rel_error: f64,
    pub max_rel_error: f64,
    /// Vertices settled per query, the machine-independent cost.
    pub mean_rank: f64,
    /// Mean exact-search rank over mean algorithm rank.
    pub rank_speedup: f64,
}

/// Everything one query produced, kept for plot output.
#[derive(Debug, Clone)]
pub struct QueryRecord {
    pub origin: NodeId,
    pub destination: NodeId,
    pub departure: Timestamp,
    /// Exact travel time and target rank, when ground truth ran.
    pub exact: Option<(f64, usize)>,
    /// Per algorithm (same order as the stats rows): value, rank, and
    /// whether the answer was exact; None when unreachable.
    pub outcomes: Vec<Option<(f64, usize, bool)>>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub queries: usize,
    /// Queries no algorithm (and no exact run) could connect.
    pub unreachable: usize,
    /// Mean exact-search target rank; NaN when ground truth was off.
    pub mean_tdd_rank: f64,
    pub stats: Vec<AlgoStats>,
    /// Serialized size of each oracle store, labelled `flat` / `horn`.
    pub store_bytes: Vec<(String, u64)>,
    pub records: Vec<QueryRecord>,
}

impl BenchReport {
    /// Summary table, one algorithm per line, tab-separated.
    pub fn table(&self) -> String {
        let mut out = format!(
            "queries\t{}\nunreachable\t{}\nmean_tdd_rank\t{}\n",
            self.queries,
            self.unreachable,
            fmt_stat(self.mean_tdd_rank)
        );
        for (label, bytes) in &self.store_bytes {
            out.push_str(&format!("store_bytes_{label}\t{bytes}\n"));
        }
        out.push_str("algo\tanswered\texact\tmean_rel_err\tmax_rel_err\tmean_rank\trank_speedup\n");
        for s in &self.stats {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                s.label,
                s.answered,
                s.exact,
                fmt_stat(s.mean_rel_error),
                fmt_stat(s.max_rel_error),
                fmt_stat(s.mean_rank),
                fmt_stat(s.rank_speedup)
            ));
        }
        out
    }

    /// Per-query plot data as CSV: one row per (query, algorithm).
    pub fn plot_csv(&self) -> String {
        let mut out =
            String::from("query,origin,destination,departure,algo,value,rank,exact_hit,exact_value,exact_rank,rel_err\n");
        for (qi, rec) in self.records.iter().enumerate() {
            for (ai, outcome) in rec.outcomes.iter().enumerate() {
                let mut row = format!(
                    "{},{},{},{},{},",
                    qi, rec.origin, rec.destination, rec.departure.0, self.stats[ai].label
                );
                match outcome {
                    Some((value, rank, hit)) => {
                        row.push_str(&format!("{},{},{}", value, rank, hit));
                    }
                    None => row.push_str(",,"),
                }
                match (rec.exact, outcome) {
                    (Some((ev, er)), Some((value, _, _))) => {
                        row.push_str(&format!(",{},{},{}", ev, er, (value - ev) / ev));
                    }
                    (Some((ev, er)), None) => row.push_str(&format!(",{},{},", ev, er)),
                    (None, _) => row.push_str(",,,"),
                }
                row.push('\n');
                out.push_str(&row);
            }
        }
        out
    }
}

fn fmt_stat(x: f64) -> String {
    if x.is_nan() {
        "-".to_string()
    } else {
        x.to_string()
    }
}

type QueryFn<'a> = Box<dyn Fn(NodeId, NodeId, Timestamp) -> Result<QueryResult, QueryError> + Sync + 'a>;

/// Runs every configured algorithm over the query set, in parallel across
/// queries, and aggregates errors and ranks in query order so the report
/// does not depend on scheduling.
pub fn run_benchmark(
    g: &TdGraph,
    flat: Option<&FlatOracle>,
    horn: Option<&HornOracle>,
    qs: &QuerySet,
    cfg: &BenchConfig,
) -> Result<BenchReport, QueryError> {
    let mut algos: Vec<(String, QueryFn)> = Vec::new();
    if let Some(o) = flat {
        algos.push(("FCA".to_string(), Box::new(move |a, b, t| o.fca(a, b, t))));
        let n = cfg.fca_plus_n;
        algos.push((
            format!("FCA+({n})"),
            Box::new(move |a, b, t| o.fca_plus(a, b, t, n)),
        ));
        let budget = cfg.rqa_budget;
        algos.push((
            format!("RQA({budget})"),
            Box::new(move |a, b, t| o.rqa(a, b, t, budget)),
        ));
    }
    if let Some(h) = horn {
        algos.push(("HQA".to_string(), Box::new(move |a, b, t| h.hqa(a, b, t))));
    }

    let records: Vec<QueryRecord> = qs
        .queries
        .par_iter()
        .map(|&(o, d, t)| -> Result<QueryRecord, QueryError> {
            let exact = if cfg.ground_truth {
                let run = tdd(g, o, t, &StopCriterion::at_target(d));
                run.delay_to(d).map(|del| (del.0, run.rank()))
            } else {
                None
            };
            let mut outcomes = Vec::with_capacity(algos.len());
            for (_, query) in &algos {
                match query(o, d, t) {
                    Ok(r) => outcomes.push(Some((r.value.0, r.rank, r.exactness == Exactness::Exact))),
                    Err(QueryError::Unreachable { .. }) => outcomes.push(None),
                    Err(e) => return Err(e),
                }
            }
            Ok(QueryRecord {
                origin: o,
                destination: d,
                departure: t,
                exact,
                outcomes,
            })
        })
        .collect::<Result<_, _>>()?;

    let truth_ranks: Vec<usize> = records.iter().filter_map(|r| r.exact.map(|(_, rank)| rank)).collect();
    let mean_tdd_rank = if truth_ranks.is_empty() {
        f64::NAN
    } else {
        truth_ranks.iter().sum::<usize>() as f64 / truth_ranks.len() as f64
    };

    let mut stats = Vec::with_capacity(algos.len());
    for (i, (label, _)) in algos.iter().enumerate() {
        let mut answered = 0usize;
        let mut exact_hits = 0usize;
        let mut rank_sum = 0usize;
        let mut err_sum = 0.0;
        let mut err_max = f64::NEG_INFINITY;
        let mut err_count = 0usize;
        for rec in &records {
            let Some((value, rank, hit)) = rec.outcomes[i] else {
                continue;
            };
            answered += 1;
            rank_sum += rank;
            exact_hits += hit as usize;
            if let Some((exact_value, _)) = rec.exact {
                let err = (value - exact_value) / exact_value;
                err_sum += err;
                err_max = err_max.max(err);
                err_count += 1;
            }
        }
        let mean_rank = if answered > 0 {
            rank_sum as f64 / answered as f64
        } else {
            f64::NAN
        };
        stats.push(AlgoStats {
            label: label.clone(),
            answered,
            exact: exact_hits,
            mean_rel_error: if err_count > 0 { err_sum / err_count as f64 } else { f64::NAN },
            max_rel_error: if err_count > 0 { err_max } else { f64::NAN },
            mean_rank,
            rank_speedup: mean_tdd_rank / mean_rank,
        });
    }

    let unreachable = records
        .iter()
        .filter(|r| r.exact.is_none() && r.outcomes.iter().all(|o| o.is_none()))
        .count();

    let mut store_bytes = Vec::new();
    if let Some(o) = flat {
        store_bytes.push(("flat".to_string(), store_size(&o.store)?));
    }
    if let Some(h) = horn {
        store_bytes.push(("horn".to_string(), store_size(&h.store)?));
    }

    Ok(BenchReport {
        queries: qs.queries.len(),
        unreachable,
        mean_tdd_rank,
        stats,
        store_bytes,
        records,
    })
}

fn store_size(store: &crate::codec::Store) -> Result<u64, QueryError> {
    let mut buf = Vec::new();
    store.write(&mut buf)?;
    Ok(buf.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::CodecConfig;
    use crate::graph::ArcId;
    use crate::landmarks::select_sparse_random;
    use crate::synth::{generate, GeneratorConfig, InstanceKind};
    use crate::time::Delay;
    use crate::trap::{estimate_slope_bounds, SlopeBounds, TrapConfig};
    use crate::ttf::Ttf;

    fn trap_cfg(g: &TdGraph) -> TrapConfig {
        let measured = estimate_slope_bounds(g, 40, 64, 9);
        let bounds = SlopeBounds::new(measured.lambda_max * 1.5, 1.0);
        TrapConfig::new(g.period(), bounds)
    }

    fn td_grid(n: usize, seed: u64) -> TdGraph {
        let mut cfg = GeneratorConfig::new(InstanceKind::Grid, n, seed);
        cfg.td_fraction = 0.3;
        generate(&cfg)
    }

    // Snapping delays to a dyadic grid makes every path sum exact in
    // floating point, so mirrored paths add up identically in both
    // directions regardless of summation order.
    fn snap_constant_delays(g: &mut TdGraph) {
        const Q: f64 = 1_048_576.0;
        for id in 0..g.m() as ArcId {
            let snapped = (g.arc(id).ttf.min_delay().0 * Q).round() / Q;
            g.set_arc_ttf(id, Ttf::constant(g.period(), Delay(snapped)))
                .unwrap();
        }
    }

    fn constant_symmetric_grid(n: usize, seed: u64) -> TdGraph {
        let mut cfg = GeneratorConfig::new(InstanceKind::Grid, n, seed);
        cfg.td_fraction = 0.0;
        cfg.symmetric = true;
        let mut g = generate(&cfg);
        snap_constant_delays(&mut g);
        g
    }

    #[test]
    fn constant_symmetric_instance_validates_exactly() {
        let g = constant_symmetric_grid(196, 11);
        let r = validate_assumptions(&g, 60, 5);
        assert!(r.samples >= 50);
        assert_eq!(r.zeta_avg, 1.0);
        assert_eq!(r.zeta_max, 1.0);
        assert_eq!(r.slope_max, 0.0);
        assert_eq!(r.slope_min, 0.0);
        assert!(r.travel_time_max > 0.0);
        assert_eq!(r.offset_max, r.travel_time_max);

        let origins = sample_vertices(&g, 12, 3);
        let rep = freeflow_blowup(&g, &origins, &[25, 60, 196]);
        assert_eq!(rep.origins, 12);
        for row in &rep.rows {
            assert_eq!(row.ratio, 1.0, "f={}", row.f);
        }
    }

    #[test]
    fn congested_instance_reports_positive_spread() {
        let g = td_grid(400, 2);
        let r = validate_assumptions(&g, 40, 7);
        assert!(r.samples >= 30);
        assert!(r.zeta_avg >= 1.0);
        assert!(r.zeta_max > 1.0);
        assert!(r.slope_max > 0.0);
        assert!(r.slope_min < 0.0);
        assert!(r.slope_min > -1.0);
        assert!(r.offset_min < r.offset_max);
        assert!(r.travel_time_max > 0.0);
    }

    #[test]
    fn blowup_saturates_at_the_full_ball() {
        let g = td_grid(300, 4);
        let origins = sample_vertices(&g, 8, 5);
        let rep = freeflow_blowup(&g, &origins, &[30, 300]);
        assert!(rep.rows[0].ratio >= 1.0);
        assert!(rep.rows[0].avg_extended >= 30.0);
        assert_eq!(rep.rows[1].max_extended, 300);
        assert_eq!(rep.rows[1].ratio, 1.0);
    }

    #[test]
    fn ranked_query_sets_land_in_their_bands() {
        let g = td_grid(2500, 6);
        for class in [RangeClass::Short, RangeClass::Mid, RangeClass::Long] {
            let qs = QuerySet::ranked(&g, 12, class, DAYTIME_RANGE, 9);
            assert_eq!(qs.queries.len(), 12);
            let band = rank_band(2500, class);
            for &(o, d, t) in &qs.queries {
                let rank = tdd(&g, o, t, &StopCriterion::at_target(d)).rank();
                assert!(
                    band.0 <= rank && rank <= band.1,
                    "{class:?}: rank {rank} outside {band:?}"
                );
            }
        }
        // Mixed cycles short, mid, long: check one query of each class.
        let mixed = QuerySet::ranked(&g, 12, RangeClass::Mixed, DAYTIME_RANGE, 10);
        for (i, class) in [RangeClass::Short, RangeClass::Mid, RangeClass::Long]
            .into_iter()
            .enumerate()
        {
            let (o, d, t) = mixed.queries[i];
            let rank = tdd(&g, o, t, &StopCriterion::at_target(d)).rank();
            let band = rank_band(2500, class);
            assert!(band.0 <= rank && rank <= band.1);
        }
    }

    #[test]
    fn fca_plus_one_row_matches_fca_row() {
        let g = td_grid(400, 3);
        let landmarks = select_sparse_random(&g, 16, 4, 21);
        let orc = FlatOracle::preprocess(&g, &landmarks, &trap_cfg(&g), CodecConfig::default())
            .unwrap();
        let qs = QuerySet::random(&g, 40, DAYTIME_RANGE, 13);
        let cfg = BenchConfig {
            fca_plus_n: 1,
            rqa_budget: 1,
            ground_truth: true,
        };
        let rep = run_benchmark(&g, Some(&orc), None, &qs, &cfg).unwrap();
        let mut expect = rep.stats[1].clone();
        expect.label = "FCA".to_string();
        assert_eq!(rep.stats[0], expect);
    }

    #[test]
    fn empty_query_set_yields_an_empty_report() {
        let g = td_grid(100, 8);
        let landmarks = select_sparse_random(&g, 4, 2, 22);
        let orc = FlatOracle::preprocess(&g, &landmarks, &trap_cfg(&g), CodecConfig::default())
            .unwrap();
        let qs = QuerySet {
            queries: Vec::new(),
            departure_range: DAYTIME_RANGE,
            seed: 0,
            class: RangeClass::Mixed,
        };
        let rep = run_benchmark(&g, Some(&orc), None, &qs, &BenchConfig::default()).unwrap();
        assert_eq!(rep.queries, 0);
        assert!(rep.stats.iter().all(|s| s.answered == 0));
        assert!(rep.mean_tdd_rank.is_nan());
        assert_eq!(rep.plot_csv().lines().count(), 1);
    }

    #[test]
    fn error_and_rank_orderings_match_query_guarantees() {
        let g = td_grid(900, 5);
        let landmarks = select_sparse_random(&g, 36, 6, 23);
        let orc = FlatOracle::preprocess(&g, &landmarks, &trap_cfg(&g), CodecConfig::default())
            .unwrap();
        let qs = QuerySet::random(&g, 60, DAYTIME_RANGE, 14);
        let rep = run_benchmark(&g, Some(&orc), None, &qs, &BenchConfig::default()).unwrap();

        let fca = &rep.stats[0];
        let fca_plus = &rep.stats[1];
        let rqa = &rep.stats[2];
        assert_eq!(fca.answered, 60);
        assert!(fca_plus.mean_rel_error <= fca.mean_rel_error);
        assert!(rqa.mean_rel_error <= fca.mean_rel_error);
        assert!(fca.rank_speedup > 1.0);
        for rec in &rep.records {
            let (exact_value, _) = rec.exact.expect("grid instances are connected");
            for outcome in rec.outcomes.iter().flatten() {
                assert!(outcome.0 >= exact_value - 1e-9 * exact_value.abs());
            }
        }
        assert_eq!(rep.store_bytes.len(), 1);
        assert!(rep.store_bytes[0].1 > 0);
    }

    #[test]
    fn reports_are_deterministic_under_fixed_seeds() {
        let g = td_grid(400, 9);
        let landmarks = select_sparse_random(&g, 16, 4, 24);
        let orc = FlatOracle::preprocess(&g, &landmarks, &trap_cfg(&g), CodecConfig::default())
            .unwrap();
        let run = || {
            let qs = QuerySet::ranked(&g, 18, RangeClass::Mixed, DAYTIME_RANGE, 15);
            let rep = run_benchmark(&g, Some(&orc), None, &qs, &BenchConfig::default()).unwrap();
            (rep.table(), rep.plot_csv())
        };
        let (table_a, plot_a) = run();
        let (table_b, plot_b) = run();
        assert_eq!(table_a, table_b);
        assert_eq!(plot_a, plot_b);

        let va = validate_assumptions(&g, 20, 4).table();
        let vb = validate_assumptions(&g, 20, 4).table();
        assert_eq!(va, vb);
    }
}
