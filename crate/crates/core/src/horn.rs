//! Hierarchical distance oracle: landmarks live on levels with growing
//! areas of coverage (the top level covers the whole graph), and one
//! query ball adapts the level it aims for as it grows. Three events can
//! end the growth: the target settles (exact), a settled nearby landmark
//! already covers the target (early stop), or a landmark of the current
//! level settles and the recursive engine takes over on that level's
//! landmark union.

use crate::codec::{encode_block, CodecConfig, HornIndex, Store};
use crate::flat::{
    ball_candidates, Exactness, FlatError, Guarantee, QueryError, QueryResult, SummarySource,
};
use crate::graph::{NodeId, TdGraph};
use crate::landmarks::LandmarkHierarchy;
use crate::search::Ball;
use crate::time::{Delay, Timestamp};
use crate::trap::{build_summaries, TrapConfig};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Recursion budget handed to the engine once the appropriate level is
/// reached; mirrors the flat oracle's default.
pub const RECURSION_BUDGET: usize = 1;

#[derive(Debug, Clone, Copy)]
pub struct HornParams {
    /// Sublinearity degree: level-i balls aim at c_i^{1/(1+a)} vertices.
    pub a: f64,
    /// Early-stop control: smaller values demand a relatively closer
    /// landmark before stopping early.
    pub beta: f64,
    /// Escalation control: the ball may grow to gamma times the level's
    /// target size before aiming one level higher.
    pub gamma: f64,
    /// Coverage slackness used when building hierarchies.
    pub xi: f64,
}

impl Default for HornParams {
    fn default() -> Self {
        HornParams {
            a: 1.0,
            beta: 1.0,
            gamma: 1.88,
            xi: 0.1,
        }
    }
}

pub struct HornOracle<'g> {
    graph: &'g TdGraph,
    pub store: Store,
    pub index: HornIndex,
    pub params: HornParams,
    pub epsilon: f64,
    /// Landmark ids per level; index 0 = level 1.
    levels: Vec<Vec<NodeId>>,
    /// Configured coverage size per level, non-decreasing.
    coverage_targets: Vec<usize>,
    /// m_flags[i][v]: v is a landmark of level >= i+1 (the set M_{i+1}).
    m_flags: Vec<Vec<bool>>,
    /// Level of each vertex, 0 when not a landmark.
    level_of: Vec<u8>,
    active_count: usize,
}

impl<'g> HornOracle<'g> {
    /// Builds per-landmark summaries restricted to each landmark's area
    /// of coverage, in parallel, and assembles the store and horn index.
    pub fn preprocess(
        g: &'g TdGraph,
        hierarchy: &LandmarkHierarchy,
        trap_cfg: &TrapConfig,
        codec_cfg: CodecConfig,
        params: HornParams,
    ) -> Result<HornOracle<'g>, FlatError> {
        let mut jobs: Vec<(NodeId, &[NodeId], u8)> = Vec::new();
        let mut levels_map: BTreeMap<NodeId, u8> = BTreeMap::new();
        for (i, level) in hierarchy.levels.iter().enumerate() {
            for &l in &level.set.vertices {
                if !g.is_node_active(l) {
                    return Err(FlatError::InactiveLandmark(l));
                }
                let coverage = level.coverage.get(&l).map(|c| c.as_slice()).unwrap_or(&[]);
                jobs.push((l, coverage, (i + 1) as u8));
                levels_map.insert(l, (i + 1) as u8);
            }
        }
        if jobs.is_empty() {
            return Err(FlatError::NoLandmarks);
        }
        let sets: Vec<_> = jobs
            .par_iter()
            .map(|&(l, coverage, _)| build_summaries(g, l, coverage, trap_cfg))
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
        let mut store = Store::build(blocks, &levels_map, codec_cfg, g.period());
        // The directory carries each level's configured coverage size so a
        // reread store selects levels exactly like the freshly built one.
        let targets: Vec<u32> = hierarchy
            .levels
            .iter()
            .map(|l| l.coverage_target as u32)
            .collect();
        for e in &mut store.entries {
            e.coverage = targets[(e.level.max(1) as usize) - 1];
        }
        Ok(HornOracle::assemble(g, store, params, trap_cfg.epsilon))
    }

    /// Wraps a store read back from disk.
    pub fn from_store(
        g: &'g TdGraph,
        store: Store,
        params: HornParams,
        epsilon: f64,
    ) -> HornOracle<'g> {
        HornOracle::assemble(g, store, params, epsilon)
    }

    fn assemble(g: &'g TdGraph, store: Store, params: HornParams, epsilon: f64) -> HornOracle<'g> {
        let top = store
            .entries
            .iter()
            .map(|e| e.level.max(1))
            .max()
            .unwrap_or(1) as usize;
        let mut coverage_targets = vec![0usize; top];
        for e in &store.entries {
            let i = (e.level.clamp(1, top as u8) as usize) - 1;
            coverage_targets[i] = coverage_targets[i].max(e.coverage as usize);
        }
        let mut levels = vec![Vec::new(); top];
        let mut level_of = vec![0u8; g.n()];
        for e in &store.entries {
            let lv = e.level.clamp(1, top as u8);
            levels[lv as usize - 1].push(e.landmark);
            level_of[e.landmark as usize] = lv;
        }
        let mut m_flags = vec![vec![false; g.n()]; top];
        for (i, flags) in m_flags.iter_mut().enumerate() {
            for ids in levels.iter().skip(i) {
                for &l in ids {
                    flags[l as usize] = true;
                }
            }
        }
        let index = HornIndex::build(&store, g.n());
        let active_count = g.active_nodes().count();
        HornOracle {
            graph: g,
            store,
            index,
            params,
            epsilon,
            levels,
            coverage_targets,
            m_flags,
            level_of,
            active_count,
        }
    }

    pub fn graph(&self) -> &'g TdGraph {
        self.graph
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn landmarks_of_level(&self, level: usize) -> &[NodeId] {
        &self.levels[level - 1]
    }

    fn check_endpoints(g: &TdGraph, o: NodeId, d: NodeId) -> Result<(), QueryError> {
        for v in [o, d] {
            if v as usize >= g.n() || !g.is_node_active(v) {
                return Err(QueryError::InactiveVertex(v));
            }
        }
        Ok(())
    }

    /// Smallest level whose coverage target reaches `guess` vertices.
    fn level_for(&self, guess: usize) -> usize {
        for (i, &c) in self.coverage_targets.iter().enumerate() {
            if c >= guess {
                return i + 1;
            }
        }
        self.levels.len()
    }

    /// Settled count at which the ball outgrows the given level and aims
    /// one higher: gamma * c_i^{1/(1+a)}.
    fn escalation_threshold(&self, level: usize) -> f64 {
        let c = self.coverage_targets[level - 1].max(1) as f64;
        self.params.gamma * c.powf(1.0 / (1.0 + self.params.a))
    }

    /// Hierarchical query: one adaptive ball, stopped by target, early
    /// stop, or appropriate-level landmark plus the recursive engine.
    pub fn hqa(&self, o: NodeId, d: NodeId, t0: Timestamp) -> Result<QueryResult, QueryError> {
        self.hqa_on(self.graph, &self.store, o, d, t0)
    }

    /// `hqa` against an overridden graph and summary source, e.g. the
    /// live graph plus patched summaries.
    pub fn hqa_on(
        &self,
        g: &TdGraph,
        src: &dyn SummarySource,
        o: NodeId,
        d: NodeId,
        t0: Timestamp,
    ) -> Result<QueryResult, QueryError> {
        Self::check_endpoints(g, o, d)?;
        let top = self.levels.len();
        let initial_guess = (self.active_count as f64).sqrt().ceil() as usize;
        let mut level = self.level_for(initial_guess);
        let mut ball = Ball::new(g, o, t0);
        // First settled landmark with a summary for d, for early stopping.
        let mut close_informed: Option<(NodeId, Timestamp)> = None;
        let mut extra_rank = 0usize;

        loop {
            let Some((u, arrival)) = ball.settle_next() else {
                // Exhausted: fall back to the best informed landmark seen.
                if let Some((l, arr)) = close_informed {
                    return self.single_hop(src, &ball, l, arr, d, t0, extra_rank);
                }
                return Err(QueryError::Unreachable { origin: o, dest: d });
            };
            if u == d {
                return Ok(QueryResult {
                    value: arrival - t0,
                    path: ball.path_to(d),
                    exactness: Exactness::Exact,
                    rank: ball.rank() + extra_rank,
                    landmarks: Vec::new(),
                    guarantee: Guarantee::Exact,
                });
            }

            let u_level = self.level_of[u as usize] as usize;
            if u_level >= level {
                // Appropriate level reached: hand over to the recursive
                // engine on this level's landmark union.
                let mut rank = ball.rank() + extra_rank;
                let best = ball_candidates(
                    g,
                    src,
                    &self.m_flags[level - 1],
                    ball.settled(),
                    &ball.frontier(),
                    &|v| ball.path_to(v),
                    t0,
                    d,
                    RECURSION_BUDGET,
                    &mut rank,
                )?;
                match best {
                    Some(c) => {
                        return Ok(QueryResult {
                            value: Delay(c.value),
                            path: c.path,
                            exactness: Exactness::ViaLandmark,
                            rank,
                            landmarks: c.landmark.into_iter().collect(),
                            guarantee: Guarantee::Sigma {
                                epsilon: self.epsilon,
                                budget: RECURSION_BUDGET,
                            },
                        });
                    }
                    None => {
                        // No informed landmark on this level; aim higher
                        // and keep growing. Count the recursion work.
                        extra_rank = rank - ball.rank();
                        if level < top {
                            level += 1;
                            continue;
                        }
                    }
                }
            }

            if close_informed.is_none()
                && u_level > 0
                && self.index.lookup_landmark(d, u).is_some()
            {
                close_informed = Some((u, arrival));
            }
            if let Some((l, arr)) = close_informed {
                let threshold = ball.radius().0 * self.epsilon / self.params.beta;
                if (arr - t0).0 <= threshold {
                    return self.single_hop(src, &ball, l, arr, d, t0, extra_rank);
                }
            }

            if level < top && ball.rank() as f64 > self.escalation_threshold(level) {
                level += 1;
            }
        }
    }

    /// Early-stop / fallback result: the one-landmark composition through
    /// a settled informed landmark.
    fn single_hop(
        &self,
        src: &dyn SummarySource,
        ball: &Ball,
        l: NodeId,
        arrival: Timestamp,
        d: NodeId,
        t0: Timestamp,
        extra_rank: usize,
    ) -> Result<QueryResult, QueryError> {
        let tail = src
            .summary_delay(l, d, arrival)?
            .expect("early-stop landmark is informed by construction");
        let value = (arrival - t0).0 + tail.0;
        Ok(QueryResult {
            value: Delay(value),
            path: ball.path_to(l),
            exactness: Exactness::ViaLandmark,
            rank: ball.rank() + extra_rank,
            landmarks: vec![l],
            guarantee: Guarantee::EpsilonPsi {
                epsilon: self.epsilon,
            },
        })
    }
}
