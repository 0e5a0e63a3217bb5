//! Landmark selection: random (R), sparse-random (SR), important-random
//! (IR), partition-boundary (K), sparse-partition (SK) and hybrid (H) sets,
//! plus 4-level hierarchies with areas of coverage.
//!
//! All methods draw sequentially from a shrinking pool with one seeded RNG,
//! so a fixed seed reproduces the set exactly and SR with exclusion size 0
//! coincides with R bit for bit. Exclusion balls count settled vertices of
//! a forward free-flow Dijkstra, the ball's own center included.

use crate::graph::{static_metric, MetricKind, NodeId, StaticMetric, TdGraph};
use crate::search::{static_dijkstra, Direction, StopCriterion};
use crate::time::Delay;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::BufRead;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMethod {
    Random,
    SparseRandom,
    ImportantRandom,
    PartitionBoundary,
    SparsePartition,
    Hybrid,
}

#[derive(Debug, Error)]
pub enum LandmarkError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("partition file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("active vertex {0} missing from partition")]
    MissingVertex(NodeId),
    #[error("bad hierarchy spec: {0}")]
    BadSpec(String),
}

#[derive(Debug, Clone)]
pub struct LandmarkSet {
    pub method: SelectionMethod,
    /// Landmarks in selection order, no duplicates, all active.
    pub vertices: Vec<NodeId>,
    pub seed: u64,
    /// Set when the pool emptied before the requested size was reached.
    pub truncated: bool,
}

impl LandmarkSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Membership bitmap sized for the graph, as stop criteria expect.
    pub fn flags(&self, n: usize) -> Vec<bool> {
        let mut flags = vec![false; n];
        for &v in &self.vertices {
            flags[v as usize] = true;
        }
        flags
    }
}

/// Uniform draws without replacement from a shrinking candidate pool.
struct Pool {
    available: Vec<bool>,
    remaining: usize,
}

impl Pool {
    fn of_active(g: &TdGraph) -> Pool {
        let mut available = vec![false; g.n()];
        let mut remaining = 0;
        for v in g.active_nodes() {
            available[v as usize] = true;
            remaining += 1;
        }
        Pool {
            available,
            remaining,
        }
    }

    fn of_candidates(n: usize, candidates: &[NodeId]) -> Pool {
        let mut available = vec![false; n];
        let mut remaining = 0;
        for &v in candidates {
            if !available[v as usize] {
                available[v as usize] = true;
                remaining += 1;
            }
        }
        Pool {
            available,
            remaining,
        }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Option<NodeId> {
        if self.remaining == 0 {
            return None;
        }
        let pick = rng.gen_range(0..self.remaining);
        let v = self
            .available
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .nth(pick)
            .map(|(i, _)| i as NodeId)?;
        self.exclude(v);
        Some(v)
    }

    fn exclude(&mut self, v: NodeId) {
        if std::mem::replace(&mut self.available[v as usize], false) {
            self.remaining -= 1;
        }
    }
}

/// k distinct uniform landmarks.
pub fn select_random(g: &TdGraph, k: usize, seed: u64) -> LandmarkSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Pool::of_active(g);
    draw_with_exclusion(g, None, &mut pool, &mut rng, k, 0, SelectionMethod::Random, seed)
}

/// Sequential random picks; after each, its free-flow ball of
/// `exclusion_ball` settled vertices leaves the pool.
pub fn select_sparse_random(
    g: &TdGraph,
    k: usize,
    exclusion_ball: usize,
    seed: u64,
) -> LandmarkSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let metric = static_metric(g, MetricKind::FreeFlow);
    let mut pool = Pool::of_active(g);
    let mut set = draw_with_exclusion(
        g,
        Some(&metric),
        &mut pool,
        &mut rng,
        k,
        exclusion_ball,
        SelectionMethod::SparseRandom,
        seed,
    );
    set.method = SelectionMethod::SparseRandom;
    set
}

fn draw_with_exclusion(
    g: &TdGraph,
    metric: Option<&StaticMetric>,
    pool: &mut Pool,
    rng: &mut ChaCha8Rng,
    k: usize,
    exclusion_ball: usize,
    method: SelectionMethod,
    seed: u64,
) -> LandmarkSet {
    let mut vertices = Vec::with_capacity(k.min(pool.remaining));
    while vertices.len() < k {
        let Some(v) = pool.draw(rng) else { break };
        vertices.push(v);
        if exclusion_ball > 1 {
            let metric = metric.expect("exclusion needs a metric");
            let stop = StopCriterion::ball_size(exclusion_ball);
            let ball = static_dijkstra(g, metric, v, Direction::Forward, &stop);
            for &(w, _) in &ball.settled {
                pool.exclude(w);
            }
        }
    }
    let truncated = vertices.len() < k;
    LandmarkSet {
        method,
        vertices,
        seed,
        truncated,
    }
}

fn category_of(g: &TdGraph, v: NodeId) -> u32 {
    g.node(v).category.unwrap_or(u32::MAX)
}

/// Moves a tentative landmark to the most important vertex (lowest road
/// category at most `threshold`) inside its free-flow ball. The center
/// stays put unless some ball vertex is strictly more important; ties
/// between better candidates break towards the lowest id.
pub fn relocate_important(
    g: &TdGraph,
    metric: &StaticMetric,
    center: NodeId,
    ball_size: usize,
    threshold: u32,
) -> NodeId {
    let stop = StopCriterion::ball_size(ball_size.max(1));
    let ball = static_dijkstra(g, metric, center, Direction::Forward, &stop);
    let center_cat = category_of(g, center);
    let mut best: Option<(u32, NodeId)> = None;
    for &(v, _) in &ball.settled {
        let cat = category_of(g, v);
        if v == center || cat > threshold || cat >= center_cat {
            continue;
        }
        if best.map_or(true, |(bc, bv)| cat < bc || (cat == bc && v < bv)) {
            best = Some((cat, v));
        }
    }
    best.map_or(center, |(_, v)| v)
}

/// Random picks relocated towards important road segments; duplicates
/// after relocation are resolved by re-drawing.
pub fn select_important_random(
    g: &TdGraph,
    k: usize,
    seed: u64,
    category_threshold: u32,
    ball_size: usize,
) -> LandmarkSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let metric = static_metric(g, MetricKind::FreeFlow);
    let mut pool = Pool::of_active(g);
    let mut vertices: Vec<NodeId> = Vec::with_capacity(k);
    while vertices.len() < k {
        let Some(pick) = pool.draw(&mut rng) else { break };
        let relocated = relocate_important(g, &metric, pick, ball_size, category_threshold);
        if vertices.contains(&relocated) {
            continue; // re-draw
        }
        pool.exclude(relocated);
        vertices.push(relocated);
    }
    let truncated = vertices.len() < k;
    LandmarkSet {
        method: SelectionMethod::ImportantRandom,
        vertices,
        seed,
        truncated,
    }
}

/// Cell assignment for every active vertex.
#[derive(Debug, Clone)]
pub struct Partition {
    cells: Vec<Option<u32>>,
}

impl Partition {
    pub fn parse(reader: impl BufRead) -> Result<Partition, LandmarkError> {
        let mut pairs = Vec::new();
        let mut max_vertex = 0;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>, what: &str| {
                tok.and_then(|t| t.parse::<u32>().ok())
                    .ok_or_else(|| LandmarkError::Parse {
                        line: idx + 1,
                        msg: format!("expected {what}"),
                    })
            };
            let v = parse(it.next(), "vertex id")?;
            let cell = parse(it.next(), "cell id")?;
            if it.next().is_some() {
                return Err(LandmarkError::Parse {
                    line: idx + 1,
                    msg: "trailing tokens".into(),
                });
            }
            max_vertex = max_vertex.max(v);
            pairs.push((v, cell));
        }
        let mut cells = vec![None; max_vertex as usize + 1];
        for (v, cell) in pairs {
            cells[v as usize] = Some(cell);
        }
        Ok(Partition { cells })
    }

    pub fn cell_of(&self, v: NodeId) -> Option<u32> {
        self.cells.get(v as usize).copied().flatten()
    }

    /// Builds a partition directly from cell ids indexed by vertex.
    pub fn from_cells(cells: Vec<u32>) -> Partition {
        Partition {
            cells: cells.into_iter().map(Some).collect(),
        }
    }

    fn require(&self, v: NodeId) -> Result<u32, LandmarkError> {
        self.cell_of(v).ok_or(LandmarkError::MissingVertex(v))
    }
}

/// All active vertices with a neighbor in a different cell, ascending by
/// id. A single-cell partition yields an empty, flagged set.
pub fn select_partition_boundary(
    g: &TdGraph,
    partition: &Partition,
) -> Result<LandmarkSet, LandmarkError> {
    let mut vertices = Vec::new();
    for v in g.active_nodes() {
        let cell = partition.require(v)?;
        let mut cross = false;
        for a in g.out_arcs(v) {
            if partition.require(g.arc(a).head)? != cell {
                cross = true;
                break;
            }
        }
        if !cross {
            for a in g.in_arcs(v) {
                if partition.require(g.arc(a).tail)? != cell {
                    cross = true;
                    break;
                }
            }
        }
        if cross {
            vertices.push(v);
        }
    }
    let truncated = vertices.is_empty();
    Ok(LandmarkSet {
        method: SelectionMethod::PartitionBoundary,
        vertices,
        seed: 0,
        truncated,
    })
}

/// Sequential random picks from the partition boundary with free-flow ball
/// exclusion, as in sparse-random.
pub fn select_sparse_partition(
    g: &TdGraph,
    partition: &Partition,
    k: usize,
    exclusion_ball: usize,
    seed: u64,
) -> Result<LandmarkSet, LandmarkError> {
    let boundary = select_partition_boundary(g, partition)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let metric = static_metric(g, MetricKind::FreeFlow);
    let mut pool = Pool::of_candidates(g.n(), &boundary.vertices);
    let mut set = draw_with_exclusion(
        g,
        Some(&metric),
        &mut pool,
        &mut rng,
        k,
        exclusion_ball,
        SelectionMethod::SparsePartition,
        seed,
    );
    set.method = SelectionMethod::SparsePartition;
    Ok(set)
}

/// Half boundary vertices, half uniform picks balanced across cells.
pub fn select_hybrid(
    g: &TdGraph,
    partition: &Partition,
    k: usize,
    seed: u64,
) -> Result<LandmarkSet, LandmarkError> {
    let boundary = select_partition_boundary(g, partition)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = vec![false; g.n()];
    let mut vertices = Vec::with_capacity(k);

    let boundary_quota = k.div_ceil(2);
    let mut pool = Pool::of_candidates(g.n(), &boundary.vertices);
    while vertices.len() < boundary_quota {
        let Some(v) = pool.draw(&mut rng) else { break };
        selected[v as usize] = true;
        vertices.push(v);
    }

    // Per-cell membership, cells visited in seeded random order so the
    // remainder quotas do not always favour low cell ids.
    let mut members: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    for v in g.active_nodes() {
        members.entry(partition.require(v)?).or_default().push(v);
    }
    let mut cells: Vec<u32> = members.keys().copied().collect();
    for i in (1..cells.len()).rev() {
        cells.swap(i, rng.gen_range(0..=i));
    }
    let random_quota = k / 2;
    if !cells.is_empty() {
        let base = random_quota / cells.len();
        let extra = random_quota % cells.len();
        for (i, &cell) in cells.iter().enumerate() {
            let quota = base + usize::from(i < extra);
            let mut pool = Pool::of_candidates(g.n(), &members[&cell]);
            let mut taken = 0;
            while taken < quota {
                let Some(v) = pool.draw(&mut rng) else { break };
                if selected[v as usize] {
                    continue;
                }
                selected[v as usize] = true;
                vertices.push(v);
                taken += 1;
            }
        }
    }

    let truncated = vertices.len() < k;
    Ok(LandmarkSet {
        method: SelectionMethod::Hybrid,
        vertices,
        seed,
        truncated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierarchyMethod {
    /// Random selection per level.
    HR,
    /// Sparse-random selection with per-level exclusion sizes.
    HSR,
}

#[derive(Debug, Clone)]
pub struct HierarchySpec {
    /// Landmark counts per level, index 0 = level 1 (largest, most local).
    pub level_sizes: Vec<usize>,
    /// Coverage-size targets per level, non-decreasing.
    pub coverage_sizes: Vec<usize>,
    /// Exclusion-ball sizes per level (HSR only).
    pub exclusion_sizes: Vec<usize>,
    pub method: HierarchyMethod,
    /// Coverage slackness: size targets are inflated by (1 + xi).
    pub xi: f64,
}

#[derive(Debug, Clone)]
pub struct HierarchyLevel {
    pub set: LandmarkSet,
    pub coverage_target: usize,
    /// Area of coverage per landmark, ascending vertex ids.
    pub coverage: BTreeMap<NodeId, Vec<NodeId>>,
}

#[derive(Debug, Clone)]
pub struct LandmarkHierarchy {
    /// `levels[i]` holds level i+1; the last level covers the whole graph.
    pub levels: Vec<HierarchyLevel>,
}

impl LandmarkHierarchy {
    /// 1-based level of a landmark, if it is one.
    pub fn level_of(&self, v: NodeId) -> Option<usize> {
        self.levels
            .iter()
            .position(|lv| lv.set.vertices.contains(&v))
            .map(|i| i + 1)
    }

    pub fn landmark_count(&self) -> usize {
        self.levels.iter().map(|lv| lv.set.len()).sum()
    }

    /// Active vertices not inside any top-level coverage set (must be
    /// empty: the top level covers the entire graph by construction).
    pub fn audit_top_coverage(&self, g: &TdGraph) -> Vec<NodeId> {
        let mut covered = vec![false; g.n()];
        if let Some(top) = self.levels.last() {
            for cov in top.coverage.values() {
                for &v in cov {
                    covered[v as usize] = true;
                }
            }
        }
        g.active_nodes().filter(|&v| !covered[v as usize]).collect()
    }
}

/// Selects disjoint per-level landmark sets (top level first, so global
/// landmarks claim their spots before local ones) and computes each
/// landmark's area of coverage: the free-flow ball of the level's inflated
/// size target, extended to the free-flow ball whose radius matches the
/// largest full-congestion distance inside the initial ball. The top
/// level always covers every active vertex.
pub fn build_hierarchy(
    g: &TdGraph,
    spec: &HierarchySpec,
    seed: u64,
) -> Result<LandmarkHierarchy, LandmarkError> {
    let l = spec.level_sizes.len();
    if l == 0 {
        return Err(LandmarkError::BadSpec("no levels".into()));
    }
    if spec.coverage_sizes.len() != l
        || (spec.method == HierarchyMethod::HSR && spec.exclusion_sizes.len() != l)
    {
        return Err(LandmarkError::BadSpec(
            "level, coverage and exclusion lists must have equal length".into(),
        ));
    }
    if spec.coverage_sizes.windows(2).any(|w| w[1] < w[0]) {
        return Err(LandmarkError::BadSpec(
            "coverage sizes must be non-decreasing per level".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free_flow = static_metric(g, MetricKind::FreeFlow);
    let full_congestion = static_metric(g, MetricKind::FullCongestion);
    let all_active: Vec<NodeId> = g.active_nodes().collect();
    let mut pool = Pool::of_active(g);
    let mut levels: Vec<HierarchyLevel> = Vec::with_capacity(l);

    for idx in (0..l).rev() {
        let exclusion = match spec.method {
            HierarchyMethod::HR => 0,
            HierarchyMethod::HSR => spec.exclusion_sizes[idx],
        };
        let set = draw_with_exclusion(
            g,
            Some(&free_flow),
            &mut pool,
            &mut rng,
            spec.level_sizes[idx],
            exclusion,
            SelectionMethod::SparseRandom,
            seed,
        );

        let mut coverage = BTreeMap::new();
        let is_top = idx == l - 1;
        let target = ((spec.coverage_sizes[idx] as f64) * (1.0 + spec.xi)).ceil() as usize;
        for &lm in &set.vertices {
            let cov = if is_top || target >= g.active_nodes().count() {
                all_active.clone()
            } else {
                extended_coverage(g, &free_flow, &full_congestion, lm, target.max(1))
            };
            coverage.insert(lm, cov);
        }
        levels.push(HierarchyLevel {
            set,
            coverage_target: spec.coverage_sizes[idx],
            coverage,
        });
    }

    levels.reverse();
    Ok(LandmarkHierarchy { levels })
}

/// Assumption-3 coverage: free-flow ball of `size` vertices, then the
/// free-flow ball whose radius is the largest full-congestion distance to
/// any member of the initial ball.
fn extended_coverage(
    g: &TdGraph,
    free_flow: &StaticMetric,
    full_congestion: &StaticMetric,
    lm: NodeId,
    size: usize,
) -> Vec<NodeId> {
    let ball = static_dijkstra(g, free_flow, lm, Direction::Forward, &StopCriterion::ball_size(size));
    let mut flags = vec![false; g.n()];
    for &(v, _) in &ball.settled {
        flags[v as usize] = true;
    }
    let members = ball.settled.len();
    let stop = StopCriterion::landmark_count(members, &flags);
    let congested = static_dijkstra(g, full_congestion, lm, Direction::Forward, &stop);
    let radius = ball
        .settled
        .iter()
        .filter_map(|&(v, _)| congested.delay_to(v))
        .fold(Delay::ZERO, Delay::max);
    let extended = static_dijkstra(
        g,
        free_flow,
        lm,
        Direction::Forward,
        &StopCriterion::ball_radius(radius),
    );
    let mut cov: Vec<NodeId> = extended.settled.iter().map(|&(v, _)| v).collect();
    cov.sort_unstable();
    cov
}
