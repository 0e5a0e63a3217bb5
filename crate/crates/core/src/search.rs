//! Exact search primitives: time-dependent Dijkstra (TDD) with configurable
//! stop criteria, static Dijkstra over a scalar metric, and ball growth to
//! the nearest landmark.
//!
//! All searches are label-setting with deterministic priority-queue ties
//! (vertex id breaks equal keys), so settle orders and Dijkstra ranks are
//! reproducible. Ranks count settled vertices, not stale queue pops.

use crate::graph::{ArcId, NodeId, StaticMetric, TdGraph};
use crate::time::{Delay, Timestamp, EPSILON};
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetSettled,
    LandmarksSettled,
    SizeReached,
    RadiusExceeded,
    Exhausted,
}

/// Stop rule for a search; any combination of criteria, first to fire wins.
/// With no criteria set the search runs to exhaustion.
#[derive(Debug, Clone, Copy, Default)]
pub struct StopCriterion<'a> {
    pub target: Option<NodeId>,
    /// Stop once this many flagged vertices have settled.
    pub landmarks: Option<(usize, &'a [bool])>,
    /// Stop once this many vertices have settled (ball of size F).
    pub size: Option<usize>,
    /// Stop before settling any vertex farther than this (ball of radius R).
    pub radius: Option<Delay>,
}

impl<'a> StopCriterion<'a> {
    pub fn at_target(d: NodeId) -> Self {
        StopCriterion {
            target: Some(d),
            ..Default::default()
        }
    }

    pub fn ball_size(f: usize) -> Self {
        StopCriterion {
            size: Some(f),
            ..Default::default()
        }
    }

    pub fn ball_radius(r: Delay) -> Self {
        StopCriterion {
            radius: Some(r),
            ..Default::default()
        }
    }

    pub fn landmark_count(k: usize, flags: &'a [bool]) -> Self {
        StopCriterion {
            landmarks: Some((k, flags)),
            ..Default::default()
        }
    }

    pub fn exhaustive() -> Self {
        StopCriterion::default()
    }

    pub fn with_target(mut self, d: NodeId) -> Self {
        self.target = Some(d);
        self
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no landmark reachable from vertex {origin}")]
    NoLandmarkReachable { origin: NodeId },
}

/// Outcome of a search: settle order with arrival labels, the touched but
/// unsettled frontier, and predecessor links for path extraction.
#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Settled vertices in settle order with their (absolute) labels.
    pub settled: Vec<(NodeId, Timestamp)>,
    /// Touched but not settled vertices with tentative labels, ascending by
    /// (label, id). Labels are upper bounds realized by actual journeys.
    pub frontier: Vec<(NodeId, Timestamp)>,
    pub stop_reason: StopReason,
    origin: NodeId,
    t0: Timestamp,
    arrival: HashMap<NodeId, Timestamp>,
    pred: HashMap<NodeId, (NodeId, ArcId)>,
}

impl SearchResult {
    /// Dijkstra rank: the number of settled vertices.
    #[inline]
    pub fn rank(&self) -> usize {
        self.settled.len()
    }

    #[inline]
    pub fn origin(&self) -> NodeId {
        self.origin
    }

    #[inline]
    pub fn departure(&self) -> Timestamp {
        self.t0
    }

    #[inline]
    pub fn is_settled(&self, v: NodeId) -> bool {
        self.arrival.contains_key(&v)
    }

    /// Arrival label of a settled vertex.
    pub fn arrival_of(&self, v: NodeId) -> Option<Timestamp> {
        self.arrival.get(&v).copied()
    }

    /// Travel time from the origin to a settled vertex.
    pub fn delay_to(&self, v: NodeId) -> Option<Delay> {
        self.arrival_of(v).map(|a| a - self.t0)
    }

    /// Arc path from the origin to a touched vertex (optimal if settled).
    pub fn path_to(&self, v: NodeId) -> Option<Vec<ArcId>> {
        if v == self.origin {
            return Some(Vec::new());
        }
        self.pred.get(&v)?;
        let mut arcs = Vec::new();
        let mut cur = v;
        while cur != self.origin {
            let &(prev, arc) = self.pred.get(&cur)?;
            arcs.push(arc);
            cur = prev;
        }
        arcs.reverse();
        Some(arcs)
    }
}

#[derive(PartialEq)]
struct QueueKey(f64, NodeId);

impl Eq for QueueKey {}

impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| self.1.cmp(&other.1))
    }
}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Incrementally growing time-dependent Dijkstra ball. `settle_next`
/// yields vertices in label order; expansion of a settled vertex is
/// deferred until the next call, so a caller that stops right after a
/// settle leaves the frontier exactly as a bounded [`tdd`] run would.
pub struct Ball<'g> {
    g: &'g TdGraph,
    origin: NodeId,
    t0: Timestamp,
    labels: HashMap<NodeId, f64>,
    pred: HashMap<NodeId, (NodeId, ArcId)>,
    arrival: HashMap<NodeId, Timestamp>,
    settled: Vec<(NodeId, Timestamp)>,
    heap: BinaryHeap<Reverse<QueueKey>>,
    pending_expand: Option<(NodeId, f64)>,
}

impl<'g> Ball<'g> {
    pub fn new(g: &'g TdGraph, o: NodeId, t0: Timestamp) -> Ball<'g> {
        let mut labels = HashMap::new();
        let mut heap = BinaryHeap::new();
        labels.insert(o, t0.0);
        heap.push(Reverse(QueueKey(t0.0, o)));
        Ball {
            g,
            origin: o,
            t0,
            labels,
            pred: HashMap::new(),
            arrival: HashMap::new(),
            settled: Vec::new(),
            heap,
            pending_expand: None,
        }
    }

    fn flush_expand(&mut self) {
        let Some((node, key)) = self.pending_expand.take() else {
            return;
        };
        for a in self.g.out_arcs(node) {
            let to = self.g.arc(a).head;
            if self.arrival.contains_key(&to) {
                continue;
            }
            let new_key = key + self.g.eval_arc(a, Timestamp(key)).0;
            let better = self.labels.get(&to).map_or(true, |&old| new_key < old);
            if better {
                self.labels.insert(to, new_key);
                self.pred.insert(to, (node, a));
                self.heap.push(Reverse(QueueKey(new_key, to)));
            }
        }
    }

    /// Key of the vertex the next `settle_next` would settle.
    pub fn peek_key(&mut self) -> Option<f64> {
        self.flush_expand();
        while let Some(Reverse(QueueKey(_, node))) = self.heap.peek() {
            if self.arrival.contains_key(node) {
                self.heap.pop();
                continue;
            }
            return self.heap.peek().map(|Reverse(QueueKey(k, _))| *k);
        }
        None
    }

    pub fn settle_next(&mut self) -> Option<(NodeId, Timestamp)> {
        self.flush_expand();
        while let Some(Reverse(QueueKey(key, node))) = self.heap.pop() {
            if self.arrival.contains_key(&node) {
                continue;
            }
            self.arrival.insert(node, Timestamp(key));
            self.settled.push((node, Timestamp(key)));
            self.pending_expand = Some((node, key));
            return Some((node, Timestamp(key)));
        }
        None
    }

    pub fn rank(&self) -> usize {
        self.settled.len()
    }

    pub fn is_settled(&self, v: NodeId) -> bool {
        self.arrival.contains_key(&v)
    }

    pub fn settled(&self) -> &[(NodeId, Timestamp)] {
        &self.settled
    }

    /// Largest settled delay so far: the current ball radius.
    pub fn radius(&self) -> Delay {
        self.settled
            .last()
            .map_or(Delay::ZERO, |&(_, a)| a - self.t0)
    }

    pub fn departure(&self) -> Timestamp {
        self.t0
    }

    pub fn arrival_of(&self, v: NodeId) -> Option<Timestamp> {
        self.arrival.get(&v).copied()
    }

    /// Touched-but-unsettled vertices with their tentative labels, nearest
    /// first; identical to the frontier of the finished result.
    pub fn frontier(&self) -> Vec<(NodeId, Timestamp)> {
        let mut frontier: Vec<(NodeId, Timestamp)> = self
            .labels
            .iter()
            .filter(|(v, _)| !self.arrival.contains_key(v))
            .map(|(&v, &k)| (v, Timestamp(k)))
            .collect();
        frontier.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then_with(|| a.0.cmp(&b.0)));
        frontier
    }

    /// Arc path from the origin to a touched vertex (optimal if settled).
    pub fn path_to(&self, v: NodeId) -> Option<Vec<ArcId>> {
        if v == self.origin {
            return Some(Vec::new());
        }
        self.pred.get(&v)?;
        let mut arcs = Vec::new();
        let mut cur = v;
        while cur != self.origin {
            let &(prev, arc) = self.pred.get(&cur)?;
            arcs.push(arc);
            cur = prev;
        }
        arcs.reverse();
        Some(arcs)
    }

    pub fn into_result(self, reason: StopReason) -> SearchResult {
        let mut frontier: Vec<(NodeId, Timestamp)> = self
            .labels
            .iter()
            .filter(|(v, _)| !self.arrival.contains_key(v))
            .map(|(&v, &k)| (v, Timestamp(k)))
            .collect();
        frontier.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then_with(|| a.0.cmp(&b.0)));
        SearchResult {
            settled: self.settled,
            frontier,
            stop_reason: reason,
            origin: self.origin,
            t0: self.t0,
            arrival: self.arrival,
            pred: self.pred,
        }
    }
}

/// Time-dependent Dijkstra from `(o, t0)`. Labels are absolute arrival
/// times; arc TTFs reduce them modulo the period internally, so journeys may
/// wrap across any number of periods.
pub fn tdd(g: &TdGraph, o: NodeId, t0: Timestamp, stop: &StopCriterion) -> SearchResult {
    let mut ball = Ball::new(g, o, t0);
    let mut landmarks_found = 0usize;
    let mut reason = StopReason::Exhausted;
    loop {
        if let Some(r) = stop.radius {
            // Keys pop in ascending order: once one vertex exceeds the
            // radius, every remaining one does.
            match ball.peek_key() {
                Some(k) if k - t0.0 > r.0 + EPSILON => {
                    reason = StopReason::RadiusExceeded;
                    break;
                }
                _ => {}
            }
        }
        let Some((node, _)) = ball.settle_next() else {
            break;
        };
        if stop.target == Some(node) {
            reason = StopReason::TargetSettled;
            break;
        }
        if let Some((k, flags)) = stop.landmarks {
            if flags[node as usize] {
                landmarks_found += 1;
                if landmarks_found >= k {
                    reason = StopReason::LandmarksSettled;
                    break;
                }
            }
        }
        if let Some(f) = stop.size {
            if ball.rank() >= f {
                reason = StopReason::SizeReached;
                break;
            }
        }
    }
    ball.into_result(reason)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Classic Dijkstra over a scalar metric; `Backward` walks reverse arcs and
/// yields distances *towards* the origin.
pub fn static_dijkstra(
    g: &TdGraph,
    metric: &StaticMetric,
    o: NodeId,
    direction: Direction,
    stop: &StopCriterion,
) -> SearchResult {
    run_search(o, 0.0, stop, |node, key, relax| match direction {
        Direction::Forward => {
            for a in g.out_arcs(node) {
                relax(g.arc(a).head, key + metric.weight[a as usize].0, a);
            }
        }
        Direction::Backward => {
            for a in g.in_arcs(node) {
                relax(g.arc(a).tail, key + metric.weight[a as usize].0, a);
            }
        }
    })
}

/// Grows a TDD ball from `(o, t0)` until the first landmark settles.
/// The settled landmark minimizes `D[o, l](t0)` over the whole set.
pub fn grow_ball_to_nearest_landmark(
    g: &TdGraph,
    o: NodeId,
    t0: Timestamp,
    landmark_flags: &[bool],
) -> Result<(NodeId, Delay, SearchResult), SearchError> {
    let stop = StopCriterion::landmark_count(1, landmark_flags);
    let res = tdd(g, o, t0, &stop);
    match res.stop_reason {
        StopReason::LandmarksSettled => {
            let &(l, arr) = res.settled.last().expect("landmark was settled");
            Ok((l, arr - t0, res))
        }
        _ => Err(SearchError::NoLandmarkReachable { origin: o }),
    }
}

/// Shared label-setting loop. `expand` receives the settled vertex, its
/// key, and a relaxation callback `(neighbor, new_key, via_arc)`.
fn run_search(
    o: NodeId,
    k0: f64,
    stop: &StopCriterion,
    mut expand: impl FnMut(NodeId, f64, &mut dyn FnMut(NodeId, f64, ArcId)),
) -> SearchResult {
    let mut labels: HashMap<NodeId, f64> = HashMap::new();
    let mut pred: HashMap<NodeId, (NodeId, ArcId)> = HashMap::new();
    let mut arrival: HashMap<NodeId, Timestamp> = HashMap::new();
    let mut settled: Vec<(NodeId, Timestamp)> = Vec::new();
    let mut heap: BinaryHeap<Reverse<QueueKey>> = BinaryHeap::new();
    let mut landmarks_found = 0usize;
    let mut reason = StopReason::Exhausted;

    labels.insert(o, k0);
    heap.push(Reverse(QueueKey(k0, o)));

    while let Some(Reverse(QueueKey(key, node))) = heap.pop() {
        if arrival.contains_key(&node) {
            continue; // stale entry
        }
        if let Some(r) = stop.radius {
            // Keys pop in ascending order: once one vertex exceeds the
            // radius, every remaining one does.
            if key - k0 > r.0 + EPSILON {
                reason = StopReason::RadiusExceeded;
                break;
            }
        }
        arrival.insert(node, Timestamp(key));
        settled.push((node, Timestamp(key)));

        if stop.target == Some(node) {
            reason = StopReason::TargetSettled;
            break;
        }
        if let Some((k, flags)) = stop.landmarks {
            if flags[node as usize] {
                landmarks_found += 1;
                if landmarks_found >= k {
                    reason = StopReason::LandmarksSettled;
                    break;
                }
            }
        }
        if let Some(f) = stop.size {
            if settled.len() >= f {
                reason = StopReason::SizeReached;
                break;
            }
        }

        let mut relax = |to: NodeId, new_key: f64, via: ArcId| {
            if arrival.contains_key(&to) {
                return;
            }
            let better = labels.get(&to).map_or(true, |&old| new_key < old);
            if better {
                labels.insert(to, new_key);
                pred.insert(to, (node, via));
                heap.push(Reverse(QueueKey(new_key, to)));
            }
        };
        expand(node, key, &mut relax);
    }

    let mut frontier: Vec<(NodeId, Timestamp)> = labels
        .iter()
        .filter(|(v, _)| !arrival.contains_key(v))
        .map(|(&v, &k)| (v, Timestamp(k)))
        .collect();
    frontier.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then_with(|| a.0.cmp(&b.0)));

    SearchResult {
        settled,
        frontier,
        stop_reason: reason,
        origin: o,
        t0: Timestamp(k0),
        arrival,
        pred,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{static_metric, MetricKind, NodeInfo};
    use crate::ttf::{Ttf, TtfPoint};

    fn line_graph(delays: &[f64]) -> TdGraph {
        let n = delays.len() + 1;
        let arcs = delays
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                (
                    i as NodeId,
                    i as NodeId + 1,
                    Ttf::constant(86400.0, Delay(d)),
                )
            })
            .collect();
        TdGraph::build(86400.0, vec![NodeInfo::default(); n], arcs).unwrap()
    }

    /// 4x4 torus grid with a mix of constant and pwl delays.
    fn small_grid() -> TdGraph {
        let period = 86400.0;
        let n = 16u32;
        let mut arcs = Vec::new();
        let idx = |r: u32, c: u32| (r % 4) * 4 + (c % 4);
        for r in 0..4 {
            for c in 0..4 {
                let v = idx(r, c);
                for (to, base) in [(idx(r, c + 1), 60.0), (idx(r + 1, c), 75.0)] {
                    let bump = (v as f64) * 3.0;
                    let ttf = if (v + to) % 3 == 0 {
                        Ttf::new(
                            period,
                            vec![
                                TtfPoint::new(0.0, base + bump),
                                TtfPoint::new(21600.0, base + bump + 40.0),
                                TtfPoint::new(43200.0, base + bump),
                            ],
                        )
                        .unwrap()
                    } else {
                        Ttf::constant(period, Delay(base + bump))
                    };
                    arcs.push((v, to, ttf));
                    arcs.push((to, v, Ttf::constant(period, Delay(base + bump + 5.0))));
                }
            }
        }
        arcs.sort_by_key(|&(t, h, _)| (t, h));
        arcs.dedup_by_key(|&mut (t, h, _)| (t, h));
        let n_nodes = n as usize;
        TdGraph::build(period, vec![NodeInfo::default(); n_nodes], arcs).unwrap()
    }

    #[test]
    fn origin_equals_target() {
        let g = line_graph(&[2.0]);
        let res = tdd(&g, 0, Timestamp(0.0), &StopCriterion::at_target(0));
        assert_eq!(res.rank(), 1);
        assert_eq!(res.stop_reason, StopReason::TargetSettled);
        assert_eq!(res.delay_to(0).unwrap().0, 0.0);
        assert_eq!(res.path_to(0).unwrap(), Vec::<ArcId>::new());
    }

    #[test]
    fn three_node_line() {
        let g = line_graph(&[2.0, 3.0]);
        let res = tdd(&g, 0, Timestamp(0.0), &StopCriterion::at_target(2));
        assert_eq!(res.delay_to(2).unwrap().0, 5.0);
        assert_eq!(res.path_to(2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn unreachable_target_reports_exhausted() {
        // Arc points away from the target.
        let arcs = vec![(1u32, 0u32, Ttf::constant(86400.0, Delay(1.0)))];
        let g = TdGraph::build(86400.0, vec![NodeInfo::default(); 2], arcs).unwrap();
        let res = tdd(&g, 0, Timestamp(0.0), &StopCriterion::at_target(1));
        assert_eq!(res.stop_reason, StopReason::Exhausted);
        assert!(!res.is_settled(1));
    }

    #[test]
    fn settle_order_is_label_monotone() {
        let g = small_grid();
        for &t0 in &[0.0, 30000.0, 80000.0] {
            let res = tdd(&g, 0, Timestamp(t0), &StopCriterion::exhaustive());
            assert_eq!(res.rank(), 16);
            for w in res.settled.windows(2) {
                assert!(w[1].1 .0 >= w[0].1 .0 - EPSILON);
            }
        }
    }

    #[test]
    fn rerun_with_size_equal_to_rank_is_deterministic() {
        let g = small_grid();
        let first = tdd(&g, 3, Timestamp(100.0), &StopCriterion::at_target(12));
        let again = tdd(&g, 3, Timestamp(100.0), &StopCriterion::ball_size(first.rank()));
        let a: Vec<NodeId> = first.settled.iter().map(|s| s.0).collect();
        let b: Vec<NodeId> = again.settled.iter().map(|s| s.0).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn static_radius_zero_settles_origin_only() {
        let g = line_graph(&[1.0, 1.0, 1.0]);
        let m = static_metric(&g, MetricKind::FreeFlow);
        let res = static_dijkstra(&g, &m, 0, Direction::Forward, &StopCriterion::ball_radius(Delay(0.0)));
        assert_eq!(res.rank(), 1);
        assert_eq!(res.stop_reason, StopReason::RadiusExceeded);
    }

    #[test]
    fn static_line_radius_two() {
        let g = line_graph(&[1.0, 1.0, 1.0]);
        let m = static_metric(&g, MetricKind::FreeFlow);
        let res = static_dijkstra(&g, &m, 0, Direction::Forward, &StopCriterion::ball_radius(Delay(2.0)));
        assert_eq!(res.rank(), 3);
        // Backward from the far end under reverse adjacency.
        let back = static_dijkstra(&g, &m, 3, Direction::Backward, &StopCriterion::ball_radius(Delay(2.0)));
        assert_eq!(back.rank(), 3);
        assert_eq!(back.delay_to(1).unwrap().0, 2.0);
    }

    #[test]
    fn static_bounds_bracket_tdd_labels() {
        let g = small_grid();
        let ff = static_metric(&g, MetricKind::FreeFlow);
        let fc = static_metric(&g, MetricKind::FullCongestion);
        for &(o, t0) in &[(0u32, 0.0), (5, 25000.0), (10, 50000.0), (15, 86000.0)] {
            let res = tdd(&g, o, Timestamp(t0), &StopCriterion::exhaustive());
            let lo = static_dijkstra(&g, &ff, o, Direction::Forward, &StopCriterion::exhaustive());
            let hi = static_dijkstra(&g, &fc, o, Direction::Forward, &StopCriterion::exhaustive());
            for &(v, arr) in &res.settled {
                let d = arr.0 - t0;
                assert!(lo.delay_to(v).unwrap().0 <= d + EPSILON, "free-flow lower bound");
                assert!(hi.delay_to(v).unwrap().0 >= d - EPSILON, "full-congestion upper bound");
            }
        }
    }

    #[test]
    fn ball_growth_stops_at_first_landmark() {
        let g = line_graph(&[1.0, 1.0, 1.0, 1.0]);
        let mut flags = vec![false; 5];
        flags[3] = true;
        let (l, d, res) = grow_ball_to_nearest_landmark(&g, 0, Timestamp(0.0), &flags).unwrap();
        assert_eq!(l, 3);
        assert_eq!(d.0, 3.0);
        assert_eq!(res.rank(), 4);

        // Origin being a landmark short-circuits at rank 1.
        flags[0] = true;
        let (l, d, res) = grow_ball_to_nearest_landmark(&g, 0, Timestamp(0.0), &flags).unwrap();
        assert_eq!((l, d.0, res.rank()), (0, 0.0, 1));
    }

    #[test]
    fn ball_growth_fails_without_reachable_landmark() {
        let g = line_graph(&[1.0]);
        let flags = vec![false; 2];
        assert!(grow_ball_to_nearest_landmark(&g, 0, Timestamp(0.0), &flags).is_err());
    }

    #[test]
    fn frontier_is_sorted_and_disjoint_from_settled() {
        let g = small_grid();
        let res = tdd(&g, 0, Timestamp(0.0), &StopCriterion::ball_size(6));
        assert_eq!(res.rank(), 6);
        for w in res.frontier.windows(2) {
            assert!(w[0].1 .0 <= w[1].1 .0);
        }
        for &(v, _) in &res.frontier {
            assert!(!res.is_settled(v));
        }
    }
}
