//! Live-traffic updates: a disruption raises (or, explicitly flagged,
//! lowers) one arc's travel time over a time window. Landmarks within
//! backward free-flow radius of the arc get their summaries rebuilt on
//! the modified graph and layered over the base store as patches, valid
//! only for departure times that can reach the arc inside the window.
//! The base store is never mutated, so expiring a disruption is an
//! atomic swap back.

use crate::codec::{decode_block, encode_block, Store};
use crate::flat::{FlatOracle, QueryError, QueryResult, SummarySource};
use crate::graph::{static_metric, ArcId, MetricKind, NodeId, TdGraph};
use crate::horn::HornOracle;
use crate::search::{static_dijkstra, Direction, StopCriterion};
use crate::time::{Delay, Timestamp};
use crate::trap::{build_summaries, TrapConfig};
use crate::ttf::{Ttf, TtfPoint};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use thiserror::Error;

/// Lead-in for rising edges: the modified function climbs from the base
/// value to the disrupted one over this many seconds.
const RISE_LEAD: f64 = 1e-3;
/// Downward ramp rate for falling edges, safely above the FIFO bound of
/// -1 (a steeper descent would let later departures overtake earlier
/// ones).
const FALL_RATE: f64 = 0.95;

pub const PATCH_MAGIC: &[u8; 5] = b"TDPT1";

#[derive(Debug, Error)]
pub enum LiveError {
    #[error("window [{start}, {end}] is not an ordered range inside (0, {period}]")]
    BadWindow { start: f64, end: f64, period: f64 },
    #[error("delay factor {0} must be positive and finite")]
    BadFactor(f64),
    #[error("arc {0} does not exist or is inactive")]
    UnknownArc(ArcId),
    #[error("disruption plus its FIFO ramps does not fit inside one period")]
    SpansPeriod,
    #[error("modified arc {0} violates FIFO")]
    NonFifo(ArcId),
    #[error("replacement dips below the base function inside the window")]
    ReplacementBelowBase,
    #[error("delay-decreasing disruption needs the full-coverage flag")]
    DelayDecrease,
    #[error("patch file: {0}")]
    Io(#[from] io::Error),
    #[error("patch file truncated at byte {0}")]
    Truncated(usize),
    #[error("patch file has wrong magic")]
    BadMagic,
}

/// What happens to the arc inside the window.
#[derive(Debug, Clone)]
pub enum Change {
    /// Delays multiplied by the factor; factors below 1 shorten them and
    /// require the full-coverage flag.
    Factor(f64),
    /// Delays replaced by this function, which must dominate the base
    /// inside the window.
    Replace(Ttf),
    /// The arc is impassable: a traveller entering during the window
    /// waits it out, so the delay is the time until the window ends plus
    /// the post-window traversal.
    Block,
}

#[derive(Debug, Clone)]
pub struct Disruption {
    pub arc: ArcId,
    pub change: Change,
    /// Absolute time window `[start, end]` within one period.
    pub window: (Timestamp, Timestamp),
}

/// Rebuilt summaries of one landmark, authoritative for departures (from
/// the landmark) inside the window; outside it the base store applies.
#[derive(Debug, Clone)]
pub struct TemporalSummaryPatch {
    pub landmark: NodeId,
    /// Departure-time window `[t_s, t_e]`; may extend below zero, in
    /// which case membership wraps around the period.
    pub window: (Timestamp, Timestamp),
    pub summaries: BTreeMap<NodeId, Ttf>,
    /// Queries departing after this absolute time ignore the patch.
    pub expiry: Option<Timestamp>,
}

/// One consistent view of the live world: the modified graph plus every
/// active patch. Queries clone the `Arc` once and never see a mix of
/// pre- and post-install state.
#[derive(Debug, Clone)]
pub struct LiveState {
    pub graph: TdGraph,
    pub patches: BTreeMap<NodeId, Vec<(u64, TemporalSummaryPatch)>>,
    pub disruptions: BTreeMap<u64, Disruption>,
}

/// `true` when `t` falls inside the window, treating it as a circular
/// interval of the period.
pub fn in_window(t: f64, window: (Timestamp, Timestamp), period: f64) -> bool {
    let (ts, te) = (window.0 .0, window.1 .0);
    let span = te - ts;
    if span >= period {
        return true;
    }
    (t - ts).rem_euclid(period) <= span
}

/// The base store overlaid with patches: inside a patch window the
/// rebuilt summary answers, elsewhere the base one does.
pub struct PatchedSource<'a> {
    pub store: &'a Store,
    pub patches: &'a BTreeMap<NodeId, Vec<(u64, TemporalSummaryPatch)>>,
    /// Departure time of the query, checked against patch expiries.
    pub now: Timestamp,
}

impl SummarySource for PatchedSource<'_> {
    fn summary_delay(
        &self,
        l: NodeId,
        d: NodeId,
        t: Timestamp,
    ) -> Result<Option<Delay>, crate::codec::CodecError> {
        if let Some(list) = self.patches.get(&l) {
            for (_, p) in list.iter().rev() {
                if p.expiry.is_some_and(|e| self.now.0 > e.0) {
                    continue;
                }
                if !in_window(t.0, p.window, self.store.period) {
                    continue;
                }
                if let Some(ttf) = p.summaries.get(&d) {
                    return Ok(Some(ttf.eval(t)));
                }
            }
        }
        self.store.summary_delay(l, d, t)
    }
}

fn validate_window(w: (Timestamp, Timestamp), period: f64) -> Result<(), LiveError> {
    let (rs, re) = (w.0 .0, w.1 .0);
    if !(rs.is_finite() && re.is_finite() && rs >= RISE_LEAD && rs < re && re <= period) {
        return Err(LiveError::BadWindow {
            start: rs,
            end: re,
            period,
        });
    }
    Ok(())
}

/// The arc's travel-time function with the disruption folded in. The
/// disrupted stretch is stitched to the base with FIFO-safe edges: rises
/// are near-instant, falls ramp down at `FALL_RATE`.
pub fn modified_ttf(f: &Ttf, change: &Change, window: (Timestamp, Timestamp)) -> Result<Ttf, LiveError> {
    let period = f.period();
    validate_window(window, period)?;
    let (rs, re) = (window.0 .0, window.1 .0);
    let eval = |t: f64| f.eval(Timestamp(t)).0;
    let inner_kinks = |lo: f64, hi: f64| -> Vec<f64> {
        f.points()
            .iter()
            .map(|p| p.at.0)
            .filter(|&t| t > lo && t < hi)
            .collect()
    };

    let g = match change {
        Change::Factor(x) if !(x.is_finite() && *x > 0.0) => {
            return Err(LiveError::BadFactor(*x));
        }
        Change::Factor(x) if *x >= 1.0 => {
            // Overlay sits below the base outside the window and is
            // max-combined, so only the disrupted stretch changes.
            let tiny = f.min_delay().0 * 0.5;
            let mut pts = vec![
                TtfPoint::new(rs - RISE_LEAD, tiny),
                TtfPoint::new(rs, x * eval(rs)),
            ];
            for t in inner_kinks(rs, re) {
                pts.push(TtfPoint::new(t, x * eval(t)));
            }
            let end = x * eval(re);
            pts.push(TtfPoint::new(re, end));
            let ramp_end = re + (end - tiny) / FALL_RATE;
            if ramp_end >= period {
                return Err(LiveError::SpansPeriod);
            }
            pts.push(TtfPoint::new(ramp_end, tiny));
            f.maximum(&Ttf::canonical(period, pts))
        }
        Change::Factor(x) => {
            // Decrease: underlay sits far above the base outside the
            // window and is min-combined; the entry edge ramps down.
            let big = f.max_delay().0 * 2.0 + (re - rs);
            let first = x * eval(rs);
            let ramp_start = rs - (big - first) / FALL_RATE;
            if ramp_start < 0.0 {
                return Err(LiveError::SpansPeriod);
            }
            let mut pts = vec![
                TtfPoint::new(ramp_start, big),
                TtfPoint::new(rs, first),
            ];
            for t in inner_kinks(rs, re) {
                pts.push(TtfPoint::new(t, x * eval(t)));
            }
            pts.push(TtfPoint::new(re, x * eval(re)));
            if re + RISE_LEAD >= period {
                return Err(LiveError::SpansPeriod);
            }
            pts.push(TtfPoint::new(re + RISE_LEAD, big));
            f.minimum(&Ttf::canonical(period, pts))
        }
        Change::Replace(r) => {
            let reval = |t: f64| r.eval(Timestamp(t)).0;
            let mut probes: Vec<f64> = vec![rs, re];
            probes.extend(inner_kinks(rs, re));
            probes.extend(
                r.points()
                    .iter()
                    .map(|p| p.at.0)
                    .filter(|&t| t > rs && t < re),
            );
            if probes.iter().any(|&t| reval(t) < eval(t) - 1e-9) {
                return Err(LiveError::ReplacementBelowBase);
            }
            let tiny = f.min_delay().0.min(r.min_delay().0) * 0.5;
            let mut pts = vec![
                TtfPoint::new(rs - RISE_LEAD, tiny),
                TtfPoint::new(rs, reval(rs)),
            ];
            let mut kinks: Vec<f64> = inner_kinks(rs, re);
            kinks.extend(
                r.points()
                    .iter()
                    .map(|p| p.at.0)
                    .filter(|&t| t > rs && t < re),
            );
            kinks.sort_by(f64::total_cmp);
            kinks.dedup();
            for t in kinks {
                pts.push(TtfPoint::new(t, reval(t)));
            }
            let end = reval(re);
            pts.push(TtfPoint::new(re, end));
            let ramp_end = re + (end - tiny) / FALL_RATE;
            if ramp_end >= period {
                return Err(LiveError::SpansPeriod);
            }
            pts.push(TtfPoint::new(ramp_end, tiny));
            f.maximum(&Ttf::canonical(period, pts))
        }
        Change::Block => {
            // Waiting out the window: delay is (almost) the time until
            // the window ends plus the traversal right after it. The
            // slope stays a whisker above -1 so FIFO holds strictly.
            let tiny = f.min_delay().0 * 0.5;
            let out = eval(re);
            if re + RISE_LEAD >= period {
                return Err(LiveError::SpansPeriod);
            }
            let pts = vec![
                TtfPoint::new(rs - RISE_LEAD, tiny),
                TtfPoint::new(rs, FALL_RATE * (re - rs) + out),
                TtfPoint::new(re, out),
                TtfPoint::new(re + RISE_LEAD, tiny),
            ];
            f.maximum(&Ttf::canonical(period, pts))
        }
    };
    if !g.is_fifo() {
        return Err(LiveError::NonFifo(0));
    }
    Ok(g)
}

/// The whole graph with one disruption folded into its arc.
pub fn modified_graph(g: &TdGraph, dis: &Disruption) -> Result<TdGraph, LiveError> {
    if dis.arc as usize >= g.m() || !g.arc(dis.arc).active {
        return Err(LiveError::UnknownArc(dis.arc));
    }
    let ttf = modified_ttf(&g.arc(dis.arc).ttf, &dis.change, dis.window)
        .map_err(|e| match e {
            LiveError::NonFifo(_) => LiveError::NonFifo(dis.arc),
            other => other,
        })?;
    let mut g2 = g.clone();
    g2.set_arc_ttf(dis.arc, ttf)
        .map_err(|_| LiveError::NonFifo(dis.arc))?;
    Ok(g2)
}

/// Landmarks whose summaries the disruption can touch: those within
/// backward free-flow radius `end - start` of the arc's tail. Faraway
/// landmarks keep their base summaries.
pub fn affected_landmarks(g: &TdGraph, store: &Store, dis: &Disruption) -> Vec<NodeId> {
    let u = g.arc(dis.arc).tail;
    let radius = dis.window.1 - dis.window.0;
    let ff = static_metric(g, MetricKind::FreeFlow);
    let back = static_dijkstra(g, &ff, u, Direction::Backward, &StopCriterion::ball_radius(radius));
    store
        .landmarks()
        .filter(|&l| back.delay_to(l).is_some())
        .collect()
}

/// Departure-time window of a landmark: departures from `l` outside
/// `[start - full-congestion dist, end - free-flow dist]` cannot reach
/// the arc's tail while the disruption is active. Both bounds widen the
/// true window (per-arc extrema over- and under-estimate path travel
/// times), so the result is a conservative superset. `None` when the
/// landmark cannot reach the arc at all.
pub fn compute_window(
    g: &TdGraph,
    l: NodeId,
    dis: &Disruption,
) -> Option<(Timestamp, Timestamp)> {
    compute_windows(g, &[l], dis).remove(&l)
}

/// `compute_window` for many landmarks off two shared backward scans.
pub fn compute_windows(
    g: &TdGraph,
    landmarks: &[NodeId],
    dis: &Disruption,
) -> BTreeMap<NodeId, (Timestamp, Timestamp)> {
    let u = g.arc(dis.arc).tail;
    let ff = static_metric(g, MetricKind::FreeFlow);
    let fc = static_metric(g, MetricKind::FullCongestion);
    let stop = StopCriterion::exhaustive();
    let back_ff = static_dijkstra(g, &ff, u, Direction::Backward, &stop);
    let back_fc = static_dijkstra(g, &fc, u, Direction::Backward, &stop);
    let mut out = BTreeMap::new();
    for &l in landmarks {
        let (Some(lo), Some(hi)) = (back_ff.delay_to(l), back_fc.delay_to(l)) else {
            continue;
        };
        let ts = dis.window.0 .0 - hi.0;
        let te = dis.window.1 .0 - lo.0;
        out.insert(l, (Timestamp(ts), Timestamp(te)));
    }
    out
}

/// Rebuilds the affected landmarks' summaries on the modified graph,
/// running the exact preprocessing pipeline (TRAP plus the codec), and
/// wraps them as window-gated patches.
pub fn build_patches(
    g_live: &TdGraph,
    store: &Store,
    dis: &Disruption,
    affected: &[NodeId],
    trap_cfg: &TrapConfig,
) -> Vec<TemporalSummaryPatch> {
    let windows = compute_windows(g_live, affected, dis);
    affected
        .par_iter()
        .filter_map(|&l| {
            let window = *windows.get(&l)?;
            let coverage: Vec<NodeId> = store.record_offsets(l)?.keys().copied().collect();
            let set = build_summaries(g_live, l, &coverage, trap_cfg);
            if set.summaries.is_empty() {
                return None;
            }
            let block = encode_block(&set, &store.config);
            let summaries = decode_block(&block.bytes, &store.config, store.period)
                .expect("freshly encoded block decodes");
            Some(TemporalSummaryPatch {
                landmark: l,
                window,
                summaries,
                expiry: None,
            })
        })
        .collect()
}

/// Shared install/expire machinery: an atomically swapped state plus a
/// writer lock serializing installs (readers never block on a build).
struct LiveCore<'g> {
    base: &'g TdGraph,
    state: RwLock<Arc<LiveState>>,
    writer: Mutex<()>,
    next_id: AtomicU64,
}

impl<'g> LiveCore<'g> {
    fn new(base: &'g TdGraph) -> LiveCore<'g> {
        LiveCore {
            base,
            state: RwLock::new(Arc::new(LiveState {
                graph: base.clone(),
                patches: BTreeMap::new(),
                disruptions: BTreeMap::new(),
            })),
            writer: Mutex::new(()),
            next_id: AtomicU64::new(1),
        }
    }

    fn snapshot(&self) -> Arc<LiveState> {
        self.state.read().expect("state lock").clone()
    }

    fn swap(&self, next: LiveState) {
        *self.state.write().expect("state lock") = Arc::new(next);
    }

    /// Rebuilds the live graph from the base plus the given disruptions,
    /// in install order.
    fn rebuild_graph(
        &self,
        disruptions: &BTreeMap<u64, Disruption>,
    ) -> Result<TdGraph, LiveError> {
        let mut g = self.base.clone();
        for dis in disruptions.values() {
            g = modified_graph(&g, dis)?;
        }
        Ok(g)
    }

    fn install(
        &self,
        store: &Store,
        trap_cfg: &TrapConfig,
        dis: Disruption,
        full_coverage: bool,
    ) -> Result<(u64, usize), LiveError> {
        let decreases = match &dis.change {
            Change::Factor(x) => *x < 1.0,
            _ => false,
        };
        if decreases && !full_coverage {
            return Err(LiveError::DelayDecrease);
        }
        let _guard = self.writer.lock().expect("writer lock");
        let current = self.snapshot();
        let mut disruptions = current.disruptions.clone();
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        disruptions.insert(id, dis.clone());
        let graph = self.rebuild_graph(&disruptions)?;
        let affected = if full_coverage {
            store.landmarks().collect()
        } else {
            affected_landmarks(&graph, store, &dis)
        };
        let built = build_patches(&graph, store, &dis, &affected, trap_cfg);
        let count = built.len();
        let mut patches = current.patches.clone();
        for p in built {
            patches.entry(p.landmark).or_default().push((id, p));
        }
        self.swap(LiveState {
            graph,
            patches,
            disruptions,
        });
        Ok((id, count))
    }

    fn expire(&self, id: u64) -> bool {
        let _guard = self.writer.lock().expect("writer lock");
        let current = self.snapshot();
        if !current.disruptions.contains_key(&id) {
            return false;
        }
        let mut disruptions = current.disruptions.clone();
        disruptions.remove(&id);
        let graph = self
            .rebuild_graph(&disruptions)
            .expect("previously accepted disruptions still apply");
        let mut patches = current.patches.clone();
        for list in patches.values_mut() {
            list.retain(|(pid, _)| *pid != id);
        }
        patches.retain(|_, list| !list.is_empty());
        self.swap(LiveState {
            graph,
            patches,
            disruptions,
        });
        true
    }
}

/// A flat oracle that answers on the live graph, consulting patches
/// before base summaries.
pub struct LiveFlat<'g> {
    pub oracle: FlatOracle<'g>,
    core: LiveCore<'g>,
}

impl<'g> LiveFlat<'g> {
    pub fn new(oracle: FlatOracle<'g>) -> LiveFlat<'g> {
        let core = LiveCore::new(oracle.graph());
        LiveFlat { oracle, core }
    }

    pub fn snapshot(&self) -> Arc<LiveState> {
        self.core.snapshot()
    }

    /// Installs a disruption: modifies the live graph and patches every
    /// affected landmark. Returns the disruption id and patch count.
    pub fn apply_disruption(
        &self,
        dis: Disruption,
        trap_cfg: &TrapConfig,
    ) -> Result<(u64, usize), LiveError> {
        self.core.install(&self.oracle.store, trap_cfg, dis, false)
    }

    /// Like `apply_disruption` but rebuilds every landmark, which makes
    /// delay-decreasing disruptions sound.
    pub fn apply_disruption_full(
        &self,
        dis: Disruption,
        trap_cfg: &TrapConfig,
    ) -> Result<(u64, usize), LiveError> {
        self.core.install(&self.oracle.store, trap_cfg, dis, true)
    }

    /// Removes a disruption atomically; `false` when the id is unknown.
    pub fn expire_disruption(&self, id: u64) -> bool {
        self.core.expire(id)
    }

    pub fn fca(&self, o: NodeId, d: NodeId, t0: Timestamp) -> Result<QueryResult, QueryError> {
        self.fca_plus(o, d, t0, 1)
    }

    pub fn fca_plus(
        &self,
        o: NodeId,
        d: NodeId,
        t0: Timestamp,
        n: usize,
    ) -> Result<QueryResult, QueryError> {
        let snap = self.snapshot();
        let src = PatchedSource {
            store: &self.oracle.store,
            patches: &snap.patches,
            now: t0,
        };
        self.oracle.fca_plus_on(&snap.graph, &src, o, d, t0, n)
    }

    pub fn rqa(
        &self,
        o: NodeId,
        d: NodeId,
        t0: Timestamp,
        budget: usize,
    ) -> Result<QueryResult, QueryError> {
        let snap = self.snapshot();
        let src = PatchedSource {
            store: &self.oracle.store,
            patches: &snap.patches,
            now: t0,
        };
        self.oracle.rqa_on(&snap.graph, &src, o, d, t0, budget)
    }
}

/// The hierarchical twin of `LiveFlat`.
pub struct LiveHorn<'g> {
    pub oracle: HornOracle<'g>,
    core: LiveCore<'g>,
}

impl<'g> LiveHorn<'g> {
    pub fn new(oracle: HornOracle<'g>) -> LiveHorn<'g> {
        let core = LiveCore::new(oracle.graph());
        LiveHorn { oracle, core }
    }

    pub fn snapshot(&self) -> Arc<LiveState> {
        self.core.snapshot()
    }

    pub fn apply_disruption(
        &self,
        dis: Disruption,
        trap_cfg: &TrapConfig,
    ) -> Result<(u64, usize), LiveError> {
        self.core.install(&self.oracle.store, trap_cfg, dis, false)
    }

    pub fn apply_disruption_full(
        &self,
        dis: Disruption,
        trap_cfg: &TrapConfig,
    ) -> Result<(u64, usize), LiveError> {
        self.core.install(&self.oracle.store, trap_cfg, dis, true)
    }

    pub fn expire_disruption(&self, id: u64) -> bool {
        self.core.expire(id)
    }

    pub fn hqa(&self, o: NodeId, d: NodeId, t0: Timestamp) -> Result<QueryResult, QueryError> {
        let snap = self.snapshot();
        let src = PatchedSource {
            store: &self.oracle.store,
            patches: &snap.patches,
            now: t0,
        };
        self.oracle.hqa_on(&snap.graph, &src, o, d, t0)
    }
}

fn write_ttf(w: &mut impl Write, ttf: &Ttf) -> io::Result<()> {
    w.write_all(&(ttf.len() as u32).to_le_bytes())?;
    for p in ttf.points() {
        w.write_all(&p.at.0.to_le_bytes())?;
        w.write_all(&p.delay.0.to_le_bytes())?;
    }
    Ok(())
}

struct PatchReader<R> {
    r: R,
    at: usize,
}

impl<R: Read> PatchReader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], LiveError> {
        let mut buf = [0u8; N];
        self.r
            .read_exact(&mut buf)
            .map_err(|_| LiveError::Truncated(self.at))?;
        self.at += N;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8, LiveError> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32, LiveError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64, LiveError> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64, LiveError> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn ttf(&mut self, period: f64) -> Result<Ttf, LiveError> {
        let n = self.u32()? as usize;
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let at = self.f64()?;
            let delay = self.f64()?;
            pts.push(TtfPoint::new(at, delay));
        }
        Ttf::new(period, pts).map_err(|_| LiveError::Truncated(self.at))
    }
}

/// Persists the live state (disruptions plus patches) so a later process
/// can reproduce it next to the same base store and graph.
pub fn save_live_state(w: &mut impl Write, state: &LiveState) -> io::Result<()> {
    w.write_all(PATCH_MAGIC)?;
    w.write_all(&[1u8])?;
    w.write_all(&state.graph.period().to_le_bytes())?;
    w.write_all(&(state.disruptions.len() as u32).to_le_bytes())?;
    for (&id, dis) in &state.disruptions {
        w.write_all(&id.to_le_bytes())?;
        w.write_all(&dis.arc.to_le_bytes())?;
        w.write_all(&dis.window.0 .0.to_le_bytes())?;
        w.write_all(&dis.window.1 .0.to_le_bytes())?;
        match &dis.change {
            Change::Factor(x) => {
                w.write_all(&[0u8])?;
                w.write_all(&x.to_le_bytes())?;
            }
            Change::Replace(ttf) => {
                w.write_all(&[1u8])?;
                write_ttf(w, ttf)?;
            }
            Change::Block => w.write_all(&[2u8])?,
        }
    }
    let total: usize = state.patches.values().map(Vec::len).sum();
    w.write_all(&(total as u32).to_le_bytes())?;
    for list in state.patches.values() {
        for (id, p) in list {
            w.write_all(&id.to_le_bytes())?;
            w.write_all(&p.landmark.to_le_bytes())?;
            w.write_all(&p.window.0 .0.to_le_bytes())?;
            w.write_all(&p.window.1 .0.to_le_bytes())?;
            match p.expiry {
                Some(e) => {
                    w.write_all(&[1u8])?;
                    w.write_all(&e.0.to_le_bytes())?;
                }
                None => w.write_all(&[0u8])?,
            }
            w.write_all(&(p.summaries.len() as u32).to_le_bytes())?;
            for (&dest, ttf) in &p.summaries {
                w.write_all(&dest.to_le_bytes())?;
                write_ttf(w, ttf)?;
            }
        }
    }
    Ok(())
}

/// Reads a live state back, replaying the stored disruptions onto a
/// clone of the base graph.
pub fn load_live_state(r: impl Read, base: &TdGraph) -> Result<LiveState, LiveError> {
    let mut pr = PatchReader { r, at: 0 };
    if &pr.bytes::<5>()? != PATCH_MAGIC {
        return Err(LiveError::BadMagic);
    }
    let _version = pr.u8()?;
    let period = pr.f64()?;
    let n_dis = pr.u32()? as usize;
    let mut disruptions = BTreeMap::new();
    for _ in 0..n_dis {
        let id = pr.u64()?;
        let arc = pr.u32()?;
        let ws = pr.f64()?;
        let we = pr.f64()?;
        let change = match pr.u8()? {
            0 => Change::Factor(pr.f64()?),
            1 => Change::Replace(pr.ttf(period)?),
            _ => Change::Block,
        };
        disruptions.insert(
            id,
            Disruption {
                arc,
                change,
                window: (Timestamp(ws), Timestamp(we)),
            },
        );
    }
    let n_patches = pr.u32()? as usize;
    let mut patches: BTreeMap<NodeId, Vec<(u64, TemporalSummaryPatch)>> = BTreeMap::new();
    for _ in 0..n_patches {
        let id = pr.u64()?;
        let landmark = pr.u32()?;
        let ws = pr.f64()?;
        let we = pr.f64()?;
        let expiry = match pr.u8()? {
            1 => Some(Timestamp(pr.f64()?)),
            _ => None,
        };
        let n_dest = pr.u32()? as usize;
        let mut summaries = BTreeMap::new();
        for _ in 0..n_dest {
            let dest = pr.u32()?;
            summaries.insert(dest, pr.ttf(period)?);
        }
        patches.entry(landmark).or_default().push((
            id,
            TemporalSummaryPatch {
                landmark,
                window: (Timestamp(ws), Timestamp(we)),
                summaries,
                expiry,
            },
        ));
    }
    let mut graph = base.clone();
    for dis in disruptions.values() {
        graph = modified_graph(&graph, dis)?;
    }
    Ok(LiveState {
        graph,
        patches,
        disruptions,
    })
}
