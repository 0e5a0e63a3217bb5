//! Flat distance oracle: every landmark keeps summaries towards all
//! active vertices, and queries grow origin balls that stop at the
//! nearest landmark(s). Three query algorithms share the machinery:
//! a single-landmark lookup, the best of the N nearest landmarks, and
//! recursive re-centering on the ball boundary.

use crate::codec::{encode_block, CodecConfig, CodecError, FlatIndex, Store};
use crate::graph::{ArcId, NodeId, TdGraph};
use crate::landmarks::LandmarkSet;
use crate::search::{tdd, SearchResult, StopCriterion};
use crate::time::{Delay, Timestamp};
use crate::trap::{build_summaries, TrapConfig};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlatError {
    #[error("no landmarks supplied")]
    NoLandmarks,
    #[error("landmark {0} is not an active vertex")]
    InactiveLandmark(NodeId),
    #[error("landmark {0} reaches no other vertex (disconnected instance)")]
    DisconnectedLandmark(NodeId),
    #[error("store error: {0}")]
    Store(#[from] CodecError),
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("no route from {origin} to {dest} at the queried departure")]
    Unreachable { origin: NodeId, dest: NodeId },
    #[error("vertex {0} is not active")]
    InactiveVertex(NodeId),
    #[error("store error: {0}")]
    Store(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    ViaLandmark,
}

/// The bound the returned value is known to satisfy relative to the true
/// travel time. The additive codec slack (two scale units) applies to
/// every via-landmark guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Guarantee {
    Exact,
    /// 1+ε+ψ: one landmark hop; ψ depends on ε, ζ and the slope bound
    /// but not on the instance size.
    EpsilonPsi { epsilon: f64 },
    /// 1+σ: recursive refinement with the given budget.
    Sigma { epsilon: f64, budget: usize },
}

impl fmt::Display for Guarantee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guarantee::Exact => write!(f, "exact"),
            Guarantee::EpsilonPsi { epsilon } => write!(f, "1+eps+psi (eps={epsilon})"),
            Guarantee::Sigma { epsilon, budget } => {
                write!(f, "1+sigma (eps={epsilon}, budget={budget})")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryResult {
    pub value: Delay,
    /// Full path when exact; the realized prefix onto the via landmark
    /// otherwise.
    pub path: Option<Vec<ArcId>>,
    pub exactness: Exactness,
    /// Vertices settled across every ball grown for this query.
    pub rank: usize,
    /// Via landmarks of the winning candidate; empty for exact hits.
    pub landmarks: Vec<NodeId>,
    pub guarantee: Guarantee,
}

impl QueryResult {
    fn exact(ball: &SearchResult, d: NodeId, rank: usize) -> QueryResult {
        QueryResult {
            value: ball.delay_to(d).expect("settled target has a label"),
            path: ball.path_to(d),
            exactness: Exactness::Exact,
            rank,
            landmarks: Vec::new(),
            guarantee: Guarantee::Exact,
        }
    }
}

/// One via-landmark candidate: the realized head onto some vertex plus a
/// decoded summary tail from a landmark.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub value: f64,
    /// None when the candidate is a realized path all the way to the
    /// target rather than a summary lookup.
    pub landmark: Option<NodeId>,
    pub path: Option<Vec<ArcId>>,
}

fn consider(c: Candidate, best: &mut Option<Candidate>) {
    if best.as_ref().is_none_or(|b| c.value < b.value) {
        *best = Some(c);
    }
}

/// Where queries read landmark summaries from: the plain store, or the
/// store overlaid with live-traffic patches.
pub trait SummarySource {
    /// Delay from landmark `l` to `d` when departing `l` at `t`, or
    /// `None` when the source keeps no summary for the pair.
    fn summary_delay(
        &self,
        l: NodeId,
        d: NodeId,
        t: Timestamp,
    ) -> Result<Option<Delay>, CodecError>;
}

impl SummarySource for Store {
    fn summary_delay(
        &self,
        l: NodeId,
        d: NodeId,
        t: Timestamp,
    ) -> Result<Option<Delay>, CodecError> {
        Ok(self.lookup(l, d)?.map(|s| s.eval(t)))
    }
}

/// Via-landmark value for a ball departing at `t0` whose head reaches the
/// summary of `l` at `arrival`: head delay plus the decoded tail.
fn lookup_via(
    src: &dyn SummarySource,
    l: NodeId,
    d: NodeId,
    t0: Timestamp,
    arrival: Timestamp,
) -> Result<Option<f64>, QueryError> {
    Ok(src
        .summary_delay(l, d, arrival)?
        .map(|tail| (arrival - t0).0 + tail.0))
}

/// Shared recursive-query engine: the best candidate reachable from a
/// grown ball, combining via-landmark tails of settled flagged vertices
/// with, while budget remains, re-centered sub-balls from the frontier
/// (nearest first). Landmarks without a summary for `d` yield nothing.
/// Values and paths are relative to the ball's own departure `(·, t)`.
pub(crate) fn ball_candidates(
    g: &TdGraph,
    src: &dyn SummarySource,
    flags: &[bool],
    settled: &[(NodeId, Timestamp)],
    frontier: &[(NodeId, Timestamp)],
    path_to: &dyn Fn(NodeId) -> Option<Vec<ArcId>>,
    t: Timestamp,
    d: NodeId,
    budget: usize,
    rank: &mut usize,
) -> Result<Option<Candidate>, QueryError> {
    let mut best: Option<Candidate> = None;
    for &(l, arrival) in settled {
        if !flags[l as usize] {
            continue;
        }
        if let Some(value) = lookup_via(src, l, d, t, arrival)? {
            consider(
                Candidate {
                    value,
                    landmark: Some(l),
                    path: path_to(l),
                },
                &mut best,
            );
        }
    }
    if budget > 0 {
        for &(w, label) in frontier {
            let Some(sub) = recenter(g, src, flags, w, label, d, budget - 1, rank)? else {
                continue;
            };
            let head = (label - t).0;
            let path = match (path_to(w), sub.path) {
                (Some(mut a), Some(b)) => {
                    a.extend(b);
                    Some(a)
                }
                _ => None,
            };
            consider(
                Candidate {
                    value: head + sub.value,
                    landmark: sub.landmark,
                    path,
                },
                &mut best,
            );
        }
    }
    Ok(best)
}

/// Grows a fresh ball from `(w, t)` until the target or the nearest
/// flagged landmark settles, then delegates to `ball_candidates`. A
/// settled target becomes a realized-path candidate.
fn recenter(
    g: &TdGraph,
    src: &dyn SummarySource,
    flags: &[bool],
    w: NodeId,
    t: Timestamp,
    d: NodeId,
    budget: usize,
    rank: &mut usize,
) -> Result<Option<Candidate>, QueryError> {
    let stop = StopCriterion::landmark_count(1, flags).with_target(d);
    let ball = tdd(g, w, t, &stop);
    *rank += ball.rank();
    if ball.is_settled(d) {
        return Ok(Some(Candidate {
            value: ball.delay_to(d).expect("settled target has a label").0,
            landmark: None,
            path: ball.path_to(d),
        }));
    }
    ball_candidates(
        g,
        src,
        flags,
        &ball.settled,
        &ball.frontier,
        &|v| ball.path_to(v),
        t,
        d,
        budget,
        rank,
    )
}

pub struct FlatOracle<'g> {
    graph: &'g TdGraph,
    pub store: Store,
    pub index: FlatIndex,
    landmark_ids: Vec<NodeId>,
    flags: Vec<bool>,
    pub epsilon: f64,
}

impl<'g> FlatOracle<'g> {
    /// Builds summaries for every landmark over all active vertices (in
    /// parallel), encodes them, and indexes the store.
    pub fn preprocess(
        g: &'g TdGraph,
        landmarks: &LandmarkSet,
        trap_cfg: &TrapConfig,
        codec_cfg: CodecConfig,
    ) -> Result<FlatOracle<'g>, FlatError> {
        if landmarks.is_empty() {
            return Err(FlatError::NoLandmarks);
        }
        for &l in &landmarks.vertices {
            if !g.is_node_active(l) {
                return Err(FlatError::InactiveLandmark(l));
            }
        }
        let coverage: Vec<NodeId> = g.active_nodes().collect();
        let sets: Vec<_> = landmarks
            .vertices
            .par_iter()
            .map(|&l| build_summaries(g, l, &coverage, trap_cfg))
            .collect();
        for set in &sets {
            if set.summaries.is_empty() {
                return Err(FlatError::DisconnectedLandmark(set.landmark));
            }
        }
        let blocks: Vec<_> = sets
            .par_iter()
            .map(|s| encode_block(s, &codec_cfg))
            .collect();
        let store = Store::build(blocks, &BTreeMap::new(), codec_cfg, g.period());
        Ok(FlatOracle::from_store(g, store, trap_cfg.epsilon))
    }

    /// Wraps an existing store, e.g. one read back from disk.
    pub fn from_store(g: &'g TdGraph, store: Store, epsilon: f64) -> FlatOracle<'g> {
        let index = FlatIndex::build(&store, g.n());
        let landmark_ids: Vec<NodeId> = store.landmarks().collect();
        let mut flags = vec![false; g.n()];
        for &l in &landmark_ids {
            flags[l as usize] = true;
        }
        FlatOracle {
            graph: g,
            store,
            index,
            landmark_ids,
            flags,
            epsilon,
        }
    }

    pub fn graph(&self) -> &'g TdGraph {
        self.graph
    }

    pub fn landmarks(&self) -> &[NodeId] {
        &self.landmark_ids
    }

    fn check_endpoints(g: &TdGraph, o: NodeId, d: NodeId) -> Result<(), QueryError> {
        for v in [o, d] {
            if v as usize >= g.n() || !g.is_node_active(v) {
                return Err(QueryError::InactiveVertex(v));
            }
        }
        Ok(())
    }

    /// Nearest-landmark query: grows one ball until the target or the
    /// closest landmark settles.
    pub fn fca(&self, o: NodeId, d: NodeId, t0: Timestamp) -> Result<QueryResult, QueryError> {
        self.fca_plus(o, d, t0, 1)
    }

    /// Best-of-N query: the ball keeps growing until N landmarks have
    /// settled and the smallest via-landmark value wins.
    pub fn fca_plus(
        &self,
        o: NodeId,
        d: NodeId,
        t0: Timestamp,
        n: usize,
    ) -> Result<QueryResult, QueryError> {
        self.fca_plus_on(self.graph, &self.store, o, d, t0, n)
    }

    /// `fca_plus` against an overridden graph and summary source, e.g.
    /// the live graph plus patched summaries.
    pub fn fca_plus_on(
        &self,
        g: &TdGraph,
        src: &dyn SummarySource,
        o: NodeId,
        d: NodeId,
        t0: Timestamp,
        n: usize,
    ) -> Result<QueryResult, QueryError> {
        Self::check_endpoints(g, o, d)?;
        let stop = StopCriterion::landmark_count(n.max(1), &self.flags).with_target(d);
        let ball = tdd(g, o, t0, &stop);
        let rank = ball.rank();
        if ball.is_settled(d) {
            return Ok(QueryResult::exact(&ball, d, rank));
        }
        let mut best: Option<Candidate> = None;
        for &(v, arrival) in &ball.settled {
            if !self.flags[v as usize] {
                continue;
            }
            if let Some(value) = lookup_via(src, v, d, t0, arrival)? {
                consider(
                    Candidate {
                        value,
                        landmark: Some(v),
                        path: ball.path_to(v),
                    },
                    &mut best,
                );
            }
        }
        match best {
            Some(c) => Ok(self.via_result(c, rank)),
            None => Err(QueryError::Unreachable { origin: o, dest: d }),
        }
    }

    /// Recursive query: the nearest-landmark solution plus, per recursion
    /// level, a re-centered ball from every boundary vertex of the
    /// previous ball (nearest first), keeping the overall minimum.
    pub fn rqa(
        &self,
        o: NodeId,
        d: NodeId,
        t0: Timestamp,
        budget: usize,
    ) -> Result<QueryResult, QueryError> {
        self.rqa_on(self.graph, &self.store, o, d, t0, budget)
    }

    /// `rqa` against an overridden graph and summary source.
    pub fn rqa_on(
        &self,
        g: &TdGraph,
        src: &dyn SummarySource,
        o: NodeId,
        d: NodeId,
        t0: Timestamp,
        budget: usize,
    ) -> Result<QueryResult, QueryError> {
        Self::check_endpoints(g, o, d)?;
        let stop = StopCriterion::landmark_count(1, &self.flags).with_target(d);
        let ball = tdd(g, o, t0, &stop);
        let mut rank = ball.rank();
        if ball.is_settled(d) {
            return Ok(QueryResult::exact(&ball, d, rank));
        }
        let best = ball_candidates(
            g,
            src,
            &self.flags,
            &ball.settled,
            &ball.frontier,
            &|v| ball.path_to(v),
            t0,
            d,
            budget,
            &mut rank,
        )?;
        match best {
            Some(c) => Ok(QueryResult {
                value: Delay(c.value),
                path: c.path,
                exactness: Exactness::ViaLandmark,
                rank,
                landmarks: c.landmark.into_iter().collect(),
                guarantee: Guarantee::Sigma {
                    epsilon: self.epsilon,
                    budget,
                },
            }),
            None => Err(QueryError::Unreachable { origin: o, dest: d }),
        }
    }

    fn via_result(&self, c: Candidate, rank: usize) -> QueryResult {
        QueryResult {
            value: Delay(c.value),
            path: c.path,
            exactness: Exactness::ViaLandmark,
            rank,
            landmarks: c.landmark.into_iter().collect(),
            guarantee: Guarantee::EpsilonPsi {
                epsilon: self.epsilon,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MetricKind;
    use crate::landmarks::{select_random, select_sparse_random};
    use crate::search::{static_dijkstra, Direction};
    use crate::synth::{generate, GeneratorConfig, InstanceKind};
    use crate::trap::{estimate_slope_bounds, SlopeBounds};
    use crate::ttf::{Ttf, TtfPoint};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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

    fn oracle<'g>(g: &'g TdGraph, landmarks: &LandmarkSet) -> FlatOracle<'g> {
        FlatOracle::preprocess(g, landmarks, &trap_cfg(g), CodecConfig::default()).unwrap()
    }

    #[test]
    fn constant_graph_summaries_match_static_distances() {
        let mut cfg = GeneratorConfig::new(InstanceKind::Grid, 36, 5);
        cfg.td_fraction = 0.0;
        let g = generate(&cfg);
        let landmarks = select_random(&g, 1, 7);
        let orc = oracle(&g, &landmarks);
        let l = orc.landmarks()[0];
        let dist = static_dijkstra(
            &g,
            &crate::graph::static_metric(&g, MetricKind::FreeFlow),
            l,
            Direction::Forward,
            &StopCriterion::exhaustive(),
        );
        let scale = orc.store.config.scale;
        for &(v, _) in &dist.settled {
            if v == l {
                continue;
            }
            let summary = orc.store.lookup(l, v).unwrap().unwrap();
            assert!(summary.is_constant());
            let d = dist.delay_to(v).unwrap().0;
            let got = summary.eval(Timestamp::ZERO).0;
            assert!(got >= d - 1e-9 && got <= d + 2.0 * scale, "{got} vs {d}");
        }
    }

    #[test]
    fn trivial_queries_are_exact() {
        let g = td_grid(100, 11);
        let landmarks = select_random(&g, 4, 3);
        let orc = oracle(&g, &landmarks);
        let r = orc.fca(17, 17, Timestamp(1000.0)).unwrap();
        assert_eq!(r.value, Delay::ZERO);
        assert_eq!(r.exactness, Exactness::Exact);
        assert_eq!(r.rank, 1);
        assert!(r.landmarks.is_empty());
    }

    #[test]
    fn origin_landmark_answers_from_the_summary_alone() {
        let g = td_grid(100, 12);
        let landmarks = select_random(&g, 3, 4);
        let orc = oracle(&g, &landmarks);
        let o = orc.landmarks()[0];
        let t0 = Timestamp(30000.0);
        for d in [5u32, 40, 77] {
            if d == o {
                continue;
            }
            let r = orc.fca(o, d, t0).unwrap();
            let exact = tdd(&g, o, t0, &StopCriterion::at_target(d))
                .delay_to(d)
                .unwrap()
                .0;
            assert_eq!(r.rank, 1, "ball stops immediately at the origin landmark");
            if r.exactness == Exactness::ViaLandmark {
                assert_eq!(r.landmarks, vec![o]);
                let slack = 2.0 * orc.store.config.scale;
                assert!(r.value.0 >= exact - 1e-9);
                assert!(
                    r.value.0 <= (1.0 + orc.epsilon) * exact + slack + 1e-6,
                    "{} vs {exact}",
                    r.value.0
                );
            }
        }
    }

    #[test]
    fn never_underestimates_and_detects_exact_hits() {
        let g = td_grid(400, 13);
        let landmarks = select_sparse_random(&g, 8, 12, 5);
        let orc = oracle(&g, &landmarks);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..120 {
            let o = rng.gen_range(0..g.n() as u32);
            let d = rng.gen_range(0..g.n() as u32);
            let t0 = Timestamp(rng.gen_range(0.0..g.period()));
            let exact = tdd(&g, o, t0, &StopCriterion::at_target(d)).delay_to(d);
            let got = orc.fca(o, d, t0);
            match (exact, got) {
                (Some(e), Ok(r)) => {
                    assert!(r.value.0 >= e.0 - 1e-9, "underestimate {} < {}", r.value.0, e.0);
                    if r.exactness == Exactness::Exact {
                        assert_eq!(r.value, e);
                    }
                }
                (None, Err(QueryError::Unreachable { .. })) => {}
                (e, r) => panic!("disagree on reachability: {e:?} vs {r:?}"),
            }
        }
    }

    #[test]
    fn wider_stops_never_hurt_on_a_fixed_query() {
        let g = td_grid(400, 14);
        let landmarks = select_sparse_random(&g, 10, 10, 6);
        let orc = oracle(&g, &landmarks);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let o = rng.gen_range(0..g.n() as u32);
            let d = rng.gen_range(0..g.n() as u32);
            let t0 = Timestamp(rng.gen_range(0.0..g.period()));
            let Ok(fca) = orc.fca(o, d, t0) else { continue };
            let plus = orc.fca_plus(o, d, t0, 6).unwrap();
            let rqa = orc.rqa(o, d, t0, 1).unwrap();
            assert!(plus.value.0 <= fca.value.0 + 1e-12);
            assert!(rqa.value.0 <= fca.value.0 + 1e-12);
            assert!(plus.rank >= fca.rank);
            assert!(rqa.rank >= fca.rank);
        }
    }

    #[test]
    fn degenerate_budgets_reduce_to_fca() {
        let g = td_grid(225, 15);
        let landmarks = select_random(&g, 6, 8);
        let orc = oracle(&g, &landmarks);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let o = rng.gen_range(0..g.n() as u32);
            let d = rng.gen_range(0..g.n() as u32);
            let t0 = Timestamp(rng.gen_range(0.0..g.period()));
            let fca = orc.fca(o, d, t0);
            let plus1 = orc.fca_plus(o, d, t0, 1);
            let rqa0 = orc.rqa(o, d, t0, 0);
            match (fca, plus1, rqa0) {
                (Ok(a), Ok(b), Ok(c)) => {
                    assert_eq!(a.value, b.value);
                    assert_eq!(a.rank, b.rank);
                    assert_eq!(a.landmarks, b.landmarks);
                    assert_eq!(a.value, c.value);
                    assert_eq!(a.rank, c.rank);
                    assert_eq!(a.landmarks, c.landmarks);
                }
                (Err(_), Err(_), Err(_)) => {}
                other => panic!("divergent outcomes: {other:?}"),
            }
        }
    }

    #[test]
    fn exact_paths_expand_and_replay_to_the_value() {
        let g = td_grid(144, 16);
        let landmarks = select_random(&g, 2, 9);
        let orc = oracle(&g, &landmarks);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut checked = 0;
        while checked < 10 {
            let o = rng.gen_range(0..g.n() as u32);
            let d = rng.gen_range(0..g.n() as u32);
            let t0 = Timestamp(rng.gen_range(0.0..g.period()));
            let Ok(r) = orc.fca(o, d, t0) else { continue };
            if r.exactness != Exactness::Exact || o == d {
                continue;
            }
            let arcs = r.path.as_ref().unwrap();
            let mut t = t0;
            for &a in arcs {
                t = t + g.eval_arc(a, t);
            }
            assert!(((t - t0).0 - r.value.0).abs() < 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn via_paths_end_at_the_reported_landmark() {
        let g = td_grid(400, 17);
        let landmarks = select_sparse_random(&g, 6, 15, 10);
        let orc = oracle(&g, &landmarks);
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut checked = 0;
        while checked < 10 {
            let o = rng.gen_range(0..g.n() as u32);
            let d = rng.gen_range(0..g.n() as u32);
            let t0 = Timestamp(rng.gen_range(0.0..g.period()));
            let Ok(r) = orc.fca(o, d, t0) else { continue };
            if r.exactness != Exactness::ViaLandmark {
                continue;
            }
            let l = r.landmarks[0];
            let arcs = r.path.as_ref().unwrap();
            let mut v = o;
            for &a in arcs {
                assert_eq!(g.arc(a).tail, v);
                v = g.arc(a).head;
            }
            assert_eq!(v, l, "prefix must end at the via landmark");
            checked += 1;
        }
    }

    #[test]
    fn unreachable_targets_and_disconnected_landmarks_error() {
        // Two vertices joined one-way: 1 cannot reach 0.
        let ttf = Ttf::new(1000.0, vec![TtfPoint::new(0.0, 5.0)]).unwrap();
        let g = TdGraph::build(
            1000.0,
            vec![Default::default(), Default::default()],
            vec![(0, 1, ttf)],
        )
        .unwrap();
        let cfg = TrapConfig::new(g.period(), SlopeBounds::fifo_safe(0.5));
        let set = LandmarkSet {
            method: crate::landmarks::SelectionMethod::Random,
            vertices: vec![0],
            seed: 0,
            truncated: false,
        };
        let orc = FlatOracle::preprocess(&g, &set, &cfg, CodecConfig::default()).unwrap();
        assert!(matches!(
            orc.fca(1, 0, Timestamp::ZERO),
            Err(QueryError::Unreachable { .. })
        ));

        let sink = LandmarkSet {
            method: crate::landmarks::SelectionMethod::Random,
            vertices: vec![1],
            seed: 0,
            truncated: false,
        };
        assert!(matches!(
            FlatOracle::preprocess(&g, &sink, &cfg, CodecConfig::default()),
            Err(FlatError::DisconnectedLandmark(1))
        ));
    }

    #[test]
    fn store_round_trip_preserves_query_results() {
        let g = td_grid(144, 18);
        let landmarks = select_random(&g, 4, 10);
        let orc = oracle(&g, &landmarks);
        let mut bytes = Vec::new();
        orc.store.write(&mut bytes).unwrap();
        let reloaded = Store::read(&mut bytes.as_slice()).unwrap();
        let orc2 = FlatOracle::from_store(&g, reloaded, orc.epsilon);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let o = rng.gen_range(0..g.n() as u32);
            let d = rng.gen_range(0..g.n() as u32);
            let t0 = Timestamp(rng.gen_range(0.0..g.period()));
            match (orc.fca(o, d, t0), orc2.fca(o, d, t0)) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(a.value, b.value);
                    assert_eq!(a.rank, b.rank);
                }
                (Err(_), Err(_)) => {}
                other => panic!("round trip changed outcome: {other:?}"),
            }
        }
    }
}
