//! Trapezoidal travel-time summaries: upper approximations of the
//! landmark-to-vertex travel-time profile D[l,v](t), built from exact
//! samples on a coarse departure grid plus adaptive bisection.
//!
//! Each grid cell [a, b] is covered by the lower envelope of two lines
//! through the sampled endpoints — rising with slope Λ_max from (a, D(a))
//! and falling towards (b, D(b)) with slope -Λ_min. Provided the profile's
//! slopes really lie in [-Λ_min, Λ_max], that envelope can never dip below
//! the profile. Tightness is enforced against the matching *lower* bound
//! (the mirrored envelope): when the ratio of the two envelopes exceeds
//! 1 + ε anywhere in the cell, the cell is bisected and the midpoint is
//! sampled exactly. Since both envelopes bracket the profile, a ratio
//! within 1 + ε certifies the summary invariant without further sampling.
//!
//! Sampling is shared: one exact search per grid boundary serves every
//! destination, and refinement searches stop at their destination but leave
//! their settled prefix in a memo keyed by departure time, so nearby
//! destinations piggyback on each other's midpoints.

use crate::graph::{NodeId, TdGraph};
use crate::search::{tdd, SearchResult, StopCriterion};
use crate::time::{Delay, Timestamp};
use crate::ttf::{Ttf, TtfPoint};
use std::collections::{BTreeMap, HashMap};

/// Global slope bounds for travel-time profiles (magnitudes, both >= 0).
#[derive(Debug, Clone, Copy)]
pub struct SlopeBounds {
    pub lambda_max: f64,
    pub lambda_min: f64,
}

impl SlopeBounds {
    pub fn new(lambda_max: f64, lambda_min: f64) -> Self {
        SlopeBounds {
            lambda_max: lambda_max.max(0.0),
            lambda_min: lambda_min.max(0.0),
        }
    }

    /// Falling slopes are always above -1 in a FIFO network, so pairing a
    /// measured Λ_max with Λ_min = 1 is sound without further knowledge.
    pub fn fifo_safe(lambda_max: f64) -> Self {
        SlopeBounds::new(lambda_max, 1.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrapConfig {
    /// Initial subinterval length in seconds.
    pub tau: f64,
    /// Target relative overshoot of the summaries.
    pub epsilon: f64,
    pub slope_bounds: SlopeBounds,
    pub max_refinement_depth: usize,
}

impl TrapConfig {
    /// 15-minute grid, 10% overshoot target.
    pub fn new(period: f64, slope_bounds: SlopeBounds) -> Self {
        TrapConfig {
            tau: period / 96.0,
            epsilon: 0.1,
            slope_bounds,
            max_refinement_depth: 12,
        }
    }
}

/// Upper approximation for one (landmark, destination) pair.
#[derive(Debug, Clone)]
pub struct Summary {
    pub destination: NodeId,
    pub ttf: Ttf,
    /// Head of the maximal constant-arc suffix of the shortest path at the
    /// first grid boundary, with the suffix delay: a sharing candidate the
    /// codec verifies sample-by-sample before using.
    pub const_pred: Option<(NodeId, Delay)>,
}

#[derive(Debug, Clone, Default)]
pub struct BuildStats {
    /// Full-coverage searches, one per distinct grid boundary.
    pub boundary_runs: usize,
    /// Destination-bounded searches triggered by bisection.
    pub refinement_runs: usize,
    pub deepest_refinement: usize,
}

/// All summaries of one landmark, keyed by destination.
#[derive(Debug, Clone)]
pub struct SummarySet {
    pub landmark: NodeId,
    pub summaries: BTreeMap<NodeId, Summary>,
    pub stats: BuildStats,
}

/// Lower envelope of the two bounding lines over [t_s, t_f], as 2 or 3
/// points with absolute (non-periodic) times. With valid slope bounds this
/// upper-bounds every compliant profile through the endpoints.
pub fn trap_interval(
    d_ts: Delay,
    d_tf: Delay,
    t_s: f64,
    t_f: f64,
    bounds: &SlopeBounds,
) -> Vec<TtfPoint> {
    assert!(t_f > t_s, "degenerate interval");
    let (a, b) = (bounds.lambda_max, bounds.lambda_min);
    if a + b == 0.0 {
        let v = d_ts.0.min(d_tf.0);
        return vec![TtfPoint::new(t_s, v), TtfPoint::new(t_f, v)];
    }
    let rising = |t: f64| d_ts.0 + a * (t - t_s);
    let falling = |t: f64| d_tf.0 + b * (t_f - t);
    let cross = (d_tf.0 - d_ts.0 + b * t_f + a * t_s) / (a + b);
    if cross <= t_s + 1e-9 {
        vec![
            TtfPoint::new(t_s, falling(t_s).min(rising(t_s))),
            TtfPoint::new(t_f, d_tf.0),
        ]
    } else if cross >= t_f - 1e-9 {
        vec![
            TtfPoint::new(t_s, d_ts.0),
            TtfPoint::new(t_f, rising(t_f).min(falling(t_f))),
        ]
    } else {
        vec![
            TtfPoint::new(t_s, d_ts.0),
            TtfPoint::new(cross, rising(cross)),
            TtfPoint::new(t_f, d_tf.0),
        ]
    }
}

/// True when the upper/lower envelope ratio stays within 1 + ε over the
/// whole cell. Both envelopes are piecewise linear with one kink each, and
/// a ratio of linear functions is monotone between kinks, so checking the
/// kinks suffices (the endpoints have ratio exactly 1).
fn cell_is_tight(da: f64, db: f64, a: f64, b: f64, cfg: &TrapConfig) -> bool {
    let (up, down) = (cfg.slope_bounds.lambda_max, cfg.slope_bounds.lambda_min);
    let upper = |t: f64| (da + up * (t - a)).min(db + down * (b - t));
    let lower = |t: f64| (da - down * (t - a)).max(db - up * (b - t));
    let mut candidates = Vec::with_capacity(2);
    if up + down > 0.0 {
        candidates.push((db - da + down * b + up * a) / (up + down));
        candidates.push((da - db + up * b + down * a) / (up + down));
    }
    for t in candidates {
        if t <= a || t >= b {
            continue;
        }
        let low = lower(t);
        if low <= 1e-9 {
            return false;
        }
        if upper(t) > (1.0 + cfg.epsilon) * low {
            return false;
        }
    }
    true
}

/// Emits the envelope for [a, b], bisecting while the tightness check
/// fails and depth remains. `sample` must return the exact profile value.
fn refine(
    sample: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    da: f64,
    db: f64,
    cfg: &TrapConfig,
    depth: usize,
    out: &mut Vec<TtfPoint>,
    deepest: &mut usize,
) {
    if depth > 0 && b - a > 1e-6 && !cell_is_tight(da, db, a, b, cfg) {
        let m = 0.5 * (a + b);
        let dm = sample(m);
        *deepest = (*deepest).max(cfg.max_refinement_depth - depth + 1);
        refine(sample, a, m, da, dm, cfg, depth - 1, out, deepest);
        refine(sample, m, b, dm, db, cfg, depth - 1, out, deepest);
        return;
    }
    let piece = trap_interval(Delay(da), Delay(db), a, b, &cfg.slope_bounds);
    let skip = out
        .last()
        .map_or(0, |p| usize::from((p.at.0 - a).abs() < 1e-12));
    out.extend_from_slice(&piece[skip..]);
}

/// Exact profile sampler with cross-destination sharing. Boundary samples
/// run until the whole coverage set settles; refinement samples stop at
/// their destination and merge the settled prefix into the memo (searches
/// are deterministic, so prefixes of longer runs coincide bit for bit).
struct Sampler<'a> {
    g: &'a TdGraph,
    landmark: NodeId,
    flags: Vec<bool>,
    flagged: usize,
    memo: HashMap<u64, HashMap<NodeId, f64>>,
    stats: BuildStats,
}

impl<'a> Sampler<'a> {
    fn new(g: &'a TdGraph, landmark: NodeId, coverage: &[NodeId]) -> Self {
        let mut flags = vec![false; g.n()];
        for &v in coverage {
            if v != landmark {
                flags[v as usize] = true;
            }
        }
        let flagged = flags.iter().filter(|&&f| f).count();
        Sampler {
            g,
            landmark,
            flags,
            flagged,
            memo: HashMap::new(),
            stats: BuildStats::default(),
        }
    }

    fn canon(&self, t: f64) -> f64 {
        if (t - self.g.period()).abs() < 1e-9 {
            0.0
        } else {
            t
        }
    }

    fn boundary(&mut self, t: f64) -> SearchResult {
        let t = self.canon(t);
        let stop = StopCriterion::landmark_count(self.flagged.max(1), &self.flags);
        let res = tdd(self.g, self.landmark, Timestamp(t), &stop);
        self.stats.boundary_runs += 1;
        let map = res
            .settled
            .iter()
            .map(|&(v, arr)| (v, arr.0 - t))
            .collect();
        self.memo.insert(t.to_bits(), map);
        res
    }

    fn value(&mut self, t: f64, v: NodeId) -> f64 {
        let t = self.canon(t);
        if let Some(&d) = self.memo.get(&t.to_bits()).and_then(|m| m.get(&v)) {
            return d;
        }
        let res = tdd(self.g, self.landmark, Timestamp(t), &StopCriterion::at_target(v));
        self.stats.refinement_runs += 1;
        let entry = self.memo.entry(t.to_bits()).or_default();
        for &(w, arr) in &res.settled {
            entry.insert(w, arr.0 - t);
        }
        entry[&v]
    }
}

/// Builds summaries from `landmark` to every reachable vertex of
/// `coverage`. Unreachable destinations (and the landmark itself, whose
/// profile is identically zero) are omitted.
pub fn build_summaries(
    g: &TdGraph,
    landmark: NodeId,
    coverage: &[NodeId],
    cfg: &TrapConfig,
) -> SummarySet {
    let period = g.period();
    let mut boundaries = Vec::new();
    let mut t = 0.0;
    while t < period - 1e-9 {
        boundaries.push(t);
        t += cfg.tau;
    }
    boundaries.push(period);

    let mut sampler = Sampler::new(g, landmark, coverage);
    let mut base_results: Vec<SearchResult> = Vec::with_capacity(boundaries.len());
    for &b in &boundaries {
        if sampler.memo.contains_key(&sampler.canon(b).to_bits()) {
            continue;
        }
        base_results.push(sampler.boundary(b));
    }
    let at_zero = &base_results[0];

    let mut destinations: Vec<NodeId> = coverage
        .iter()
        .copied()
        .filter(|&v| v != landmark && at_zero.is_settled(v))
        .collect();
    destinations.sort_unstable();
    destinations.dedup();

    let mut summaries = BTreeMap::new();
    for &v in &destinations {
        let const_pred = constant_suffix(g, at_zero, landmark, v);
        let mut points: Vec<TtfPoint> = Vec::new();
        let mut deepest = 0usize;
        for w in boundaries.windows(2) {
            let (a, b) = (w[0], w[1]);
            let da = sampler.value(a, v);
            let db = sampler.value(b, v);
            let mut sample = |t: f64| sampler.value(t, v);
            refine(
                &mut sample,
                a,
                b,
                da,
                db,
                cfg,
                cfg.max_refinement_depth,
                &mut points,
                &mut deepest,
            );
        }
        sampler.stats.deepest_refinement = sampler.stats.deepest_refinement.max(deepest);
        if points.last().map_or(false, |p| (p.at.0 - period).abs() < 1e-9) {
            points.pop();
        }
        let ttf = Ttf::canonical(period, points);
        summaries.insert(
            v,
            Summary {
                destination: v,
                ttf,
                const_pred,
            },
        );
    }

    SummarySet {
        landmark,
        summaries,
        stats: sampler.stats,
    }
}

/// Walks the shortest path to `v` backwards while arcs have constant
/// delay, returning the first vertex whose outgoing path arc is constant
/// and the summed suffix delay.
fn constant_suffix(
    g: &TdGraph,
    at_zero: &SearchResult,
    landmark: NodeId,
    v: NodeId,
) -> Option<(NodeId, Delay)> {
    let path = at_zero.path_to(v)?;
    let mut offset = 0.0;
    let mut head = v;
    for &a in path.iter().rev() {
        let arc = g.arc(a);
        if !arc.ttf.is_constant() {
            break;
        }
        offset += arc.ttf.min_delay().0;
        head = arc.tail;
    }
    if head == v || (head == landmark && offset == 0.0) {
        None
    } else {
        Some((head, Delay(offset)))
    }
}

/// Measures slope extremes of travel-time profiles by finite differences
/// over a departure grid, for seeding `SlopeBounds` from an instance.
pub fn estimate_slope_bounds(g: &TdGraph, pairs: usize, steps: usize, seed: u64) -> SlopeBounds {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let period = g.period();
    let dt = period / steps as f64;
    let (mut up, mut down) = (0.0f64, 0.0f64);
    for _ in 0..pairs {
        let o = rng.gen_range(0..g.n() as NodeId);
        let d = rng.gen_range(0..g.n() as NodeId);
        if o == d {
            continue;
        }
        let mut profile = Vec::with_capacity(steps);
        for j in 0..steps {
            let t = j as f64 * dt;
            let res = tdd(g, o, Timestamp(t), &StopCriterion::at_target(d));
            match res.delay_to(d) {
                Some(delay) => profile.push(delay.0),
                None => break,
            }
        }
        if profile.len() < steps {
            continue;
        }
        for j in 0..steps {
            let slope = (profile[(j + 1) % steps] - profile[j]) / dt;
            up = up.max(slope);
            down = down.max(-slope);
        }
    }
    SlopeBounds::new(up, down)
}
