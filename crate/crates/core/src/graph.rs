//! Time-dependent graph container: instance ingestion, degree-2 contraction,
//! and derived static metrics.
//!
//! Arc ids are stable across contraction: contracted nodes and replaced arcs
//! are flagged inactive rather than deleted, and shortcuts are appended with
//! fresh ids. A shortcut records the chains of arcs it replaces
//! (alternatives, for parallel chains merged by pointwise minimum) and is
//! *evaluated* by composing those chains, so travel times through a
//! contracted graph are bit-identical to the uncontracted ones; the linked
//! TTF is still materialized on the shortcut for inspection and statistics.

use crate::time::{Delay, Timestamp};
use crate::ttf::{Ttf, TtfError, TtfPoint};
use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::path::Path;
use thiserror::Error;

pub type NodeId = u32;
pub type ArcId = u32;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeInfo {
    pub coords: Option<(f64, f64)>,
    pub category: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArcKind {
    Original,
    /// Replaces one or more parallel chains of arcs; each alternative is a
    /// sequence of (possibly themselves shortcut) arc ids.
    Shortcut { alts: Vec<Vec<ArcId>> },
}

#[derive(Debug, Clone)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    pub ttf: Ttf,
    pub kind: ArcKind,
    pub active: bool,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("arc {arc} ({tail} -> {head}) violates FIFO (some slope <= -1)")]
    FifoViolation { arc: ArcId, tail: NodeId, head: NodeId },
    #[error("duplicate arc {tail} -> {head}")]
    DuplicateArc { tail: NodeId, head: NodeId },
    #[error("arc {arc} references vertex {node} outside 0..{n}")]
    DanglingEndpoint { arc: ArcId, node: NodeId, n: usize },
    #[error("arc {arc}: {source}")]
    BadTtf { arc: ArcId, source: TtfError },
    #[error("declared {declared} {what}, found {found}")]
    CountMismatch {
        what: &'static str,
        declared: usize,
        found: usize,
    },
}

#[derive(Debug, Clone)]
pub struct TdGraph {
    period: f64,
    nodes: Vec<NodeInfo>,
    node_active: Vec<bool>,
    arcs: Vec<Arc>,
    out: Vec<Vec<ArcId>>,
    inn: Vec<Vec<ArcId>>,
}

impl TdGraph {
    /// Assembles a graph from parts, running the same validation as the
    /// instance loader (endpoint range, duplicate arcs, FIFO).
    pub fn build(
        period: f64,
        nodes: Vec<NodeInfo>,
        arcs: Vec<(NodeId, NodeId, Ttf)>,
    ) -> Result<TdGraph, GraphError> {
        let n = nodes.len();
        let mut g = TdGraph {
            period,
            nodes,
            node_active: vec![true; n],
            arcs: Vec::with_capacity(arcs.len()),
            out: vec![Vec::new(); n],
            inn: vec![Vec::new(); n],
        };
        let mut seen: HashMap<(NodeId, NodeId), ()> = HashMap::new();
        for (tail, head, ttf) in arcs {
            let id = g.arcs.len() as ArcId;
            for node in [tail, head] {
                if node as usize >= n {
                    return Err(GraphError::DanglingEndpoint { arc: id, node, n });
                }
            }
            if seen.insert((tail, head), ()).is_some() {
                return Err(GraphError::DuplicateArc { tail, head });
            }
            if !ttf.is_fifo() {
                return Err(GraphError::FifoViolation { arc: id, tail, head });
            }
            debug_assert_eq!(ttf.period(), period);
            g.out[tail as usize].push(id);
            g.inn[head as usize].push(id);
            g.arcs.push(Arc {
                tail,
                head,
                ttf,
                kind: ArcKind::Original,
                active: true,
            });
        }
        Ok(g)
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.arcs.len()
    }

    #[inline]
    pub fn node(&self, v: NodeId) -> &NodeInfo {
        &self.nodes[v as usize]
    }

    #[inline]
    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id as usize]
    }

    #[inline]
    pub fn is_node_active(&self, v: NodeId) -> bool {
        self.node_active[v as usize]
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n() as NodeId).filter(move |&v| self.node_active[v as usize])
    }

    /// Active outgoing arc ids of `v`.
    pub fn out_arcs(&self, v: NodeId) -> impl Iterator<Item = ArcId> + '_ {
        self.out[v as usize]
            .iter()
            .copied()
            .filter(move |&a| self.arcs[a as usize].active)
    }

    /// Active incoming arc ids of `v`.
    pub fn in_arcs(&self, v: NodeId) -> impl Iterator<Item = ArcId> + '_ {
        self.inn[v as usize]
            .iter()
            .copied()
            .filter(move |&a| self.arcs[a as usize].active)
    }

    /// Replaces the travel-time function of one original arc, re-running
    /// the FIFO check. Used to layer live-traffic changes onto a clone.
    pub fn set_arc_ttf(&mut self, id: ArcId, ttf: Ttf) -> Result<(), GraphError> {
        let arc = &mut self.arcs[id as usize];
        if !ttf.is_fifo() {
            return Err(GraphError::FifoViolation {
                arc: id,
                tail: arc.tail,
                head: arc.head,
            });
        }
        debug_assert_eq!(ttf.period(), self.period);
        arc.ttf = ttf;
        Ok(())
    }

    /// Delay of an arc for a departure at absolute time `t`. Shortcuts
    /// evaluate their replacement chains compositionally (minimum over
    /// alternatives), which reproduces the uncontracted graph bit for bit.
    pub fn eval_arc(&self, id: ArcId, t: Timestamp) -> Delay {
        let arc = &self.arcs[id as usize];
        match &arc.kind {
            ArcKind::Original => arc.ttf.eval(t),
            ArcKind::Shortcut { alts } => {
                let mut best = Delay::INFINITY;
                for alt in alts {
                    let mut cur = t;
                    for &sub in alt {
                        cur = cur + self.eval_arc(sub, cur);
                    }
                    best = best.min(cur - t);
                }
                best
            }
        }
    }

    /// Expands an arc traversed at absolute time `t` into original arc ids,
    /// choosing the alternative a time-dependent shortest path would take.
    pub fn expand_arc(&self, id: ArcId, t: Timestamp, out: &mut Vec<ArcId>) {
        let arc = &self.arcs[id as usize];
        match &arc.kind {
            ArcKind::Original => out.push(id),
            ArcKind::Shortcut { alts } => {
                let mut best: Option<(Delay, &Vec<ArcId>)> = None;
                for alt in alts {
                    let mut cur = t;
                    for &sub in alt {
                        cur = cur + self.eval_arc(sub, cur);
                    }
                    let d = cur - t;
                    if best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, alt));
                    }
                }
                let (_, alt) = best.expect("shortcut has at least one alternative");
                let mut cur = t;
                for &sub in alt {
                    let next = cur + self.eval_arc(sub, cur);
                    self.expand_arc(sub, cur, out);
                    cur = next;
                }
            }
        }
    }

    /// Expands a path of (possibly shortcut) arcs departing at `t0` into the
    /// corresponding sequence of original arcs.
    pub fn expand_path(&self, arcs: &[ArcId], t0: Timestamp) -> Vec<ArcId> {
        let mut out = Vec::with_capacity(arcs.len());
        let mut t = t0;
        for &a in arcs {
            self.expand_arc(a, t, &mut out);
            t = t + self.eval_arc(a, t);
        }
        out
    }

    /// Contracts maximal chains of non-junction vertices (undirected degree
    /// two) into shortcut arcs. Distances between vertices that remain
    /// active are preserved exactly.
    pub fn contract_degree2(&self) -> TdGraph {
        let mut g = self.clone();
        loop {
            let mut changed = false;
            // Scan high to low so a pure cycle keeps its lowest-id vertex
            // as the designated junction.
            for v in (0..g.n() as NodeId).rev() {
                if g.try_contract_node(v) {
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        g
    }

    fn try_contract_node(&mut self, v: NodeId) -> bool {
        if !self.node_active[v as usize] {
            return false;
        }
        let ins: Vec<ArcId> = self.in_arcs(v).collect();
        let outs: Vec<ArcId> = self.out_arcs(v).collect();
        if ins.len() > 2 || outs.len() > 2 || ins.is_empty() || outs.is_empty() {
            return false;
        }
        let mut neighbors: Vec<NodeId> = ins
            .iter()
            .map(|&a| self.arcs[a as usize].tail)
            .chain(outs.iter().map(|&a| self.arcs[a as usize].head))
            .filter(|&u| u != v)
            .collect();
        neighbors.sort_unstable();
        neighbors.dedup();
        if neighbors.len() != 2 {
            return false;
        }
        let (a, b) = (neighbors[0], neighbors[1]);

        let arc_between = |arcs: &[ArcId], from: NodeId, to: NodeId| -> Option<ArcId> {
            arcs.iter()
                .copied()
                .find(|&id| self.arcs[id as usize].tail == from && self.arcs[id as usize].head == to)
        };
        let av = arc_between(&ins, a, v);
        let bv = arc_between(&ins, b, v);
        let va = arc_between(&outs, v, a);
        let vb = arc_between(&outs, v, b);

        let chains: Vec<(NodeId, NodeId, ArcId, ArcId)> = match (av, vb, bv, va) {
            (Some(x), Some(y), None, None) => vec![(a, b, x, y)],
            (None, None, Some(x), Some(y)) => vec![(b, a, x, y)],
            (Some(x1), Some(y1), Some(x2), Some(y2)) => {
                vec![(a, b, x1, y1), (b, a, x2, y2)]
            }
            _ => return false, // mixed pattern: keep v as a junction
        };

        for (from, to, first, second) in chains {
            self.arcs[first as usize].active = false;
            self.arcs[second as usize].active = false;
            self.add_shortcut(from, to, vec![first, second]);
        }
        self.node_active[v as usize] = false;
        true
    }

    fn add_shortcut(&mut self, from: NodeId, to: NodeId, chain: Vec<ArcId>) {
        let linked = self.arcs[chain[0] as usize]
            .ttf
            .link(&self.arcs[chain[1] as usize].ttf);
        // Merge with an existing parallel arc by pointwise minimum.
        let existing = self
            .out_arcs(from)
            .find(|&id| self.arcs[id as usize].head == to);
        let (ttf, alts) = match existing {
            Some(id) => {
                let old = &self.arcs[id as usize];
                let mut alts = match &old.kind {
                    ArcKind::Original => vec![vec![id]],
                    ArcKind::Shortcut { alts } => alts.clone(),
                };
                alts.push(chain);
                let ttf = old.ttf.minimum(&linked);
                self.arcs[id as usize].active = false;
                (ttf, alts)
            }
            None => (linked, vec![chain]),
        };
        let id = self.arcs.len() as ArcId;
        self.arcs.push(Arc {
            tail: from,
            head: to,
            ttf,
            kind: ArcKind::Shortcut { alts },
            active: true,
        });
        self.out[from as usize].push(id);
        self.inn[to as usize].push(id);
    }
}

/// Scalar metric derived from the TTFs: per-arc minimum (free-flow) or
/// maximum (full-congestion) delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    FreeFlow,
    FullCongestion,
}

#[derive(Debug, Clone)]
pub struct StaticMetric {
    pub kind: MetricKind,
    /// Weight per arc id. For shortcuts this is the chain-sum bound (sum of
    /// per-arc extremes, minimum over alternatives), which brackets every
    /// chain evaluation without float slack.
    pub weight: Vec<Delay>,
}

pub fn static_metric(g: &TdGraph, kind: MetricKind) -> StaticMetric {
    let mut weight = Vec::with_capacity(g.m());
    for id in 0..g.m() {
        let arc = g.arc(id as ArcId);
        let w = match &arc.kind {
            ArcKind::Original => match kind {
                MetricKind::FreeFlow => arc.ttf.min_delay(),
                MetricKind::FullCongestion => arc.ttf.max_delay(),
            },
            ArcKind::Shortcut { alts } => {
                // Alternatives only reference earlier arc ids.
                let mut best = Delay::INFINITY;
                for alt in alts {
                    let mut sum = Delay::ZERO;
                    for &sub in alt {
                        sum += weight[sub as usize];
                    }
                    best = best.min(sum);
                }
                best
            }
        };
        weight.push(w);
    }
    StaticMetric { kind, weight }
}

/// Aggregate description of the active part of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceStats {
    pub nodes: usize,
    pub active_nodes: usize,
    pub arcs: usize,
    pub active_arcs: usize,
    pub constant_arcs: usize,
    pub pwl_arcs: usize,
    pub breakpoints_total: usize,
    pub breakpoints_min: usize,
    pub breakpoints_max: usize,
    pub breakpoints_avg: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    pub min_delay: f64,
    pub max_delay: f64,
    /// Concavity-spoiling breakpoints: interior breakpoints of the [0,T]
    /// expansion where the segment slope strictly increases.
    pub kstar: usize,
    pub period: f64,
}

/// Counts the concavity-spoiling breakpoints of one TTF.
pub fn concavity_spoiling(ttf: &Ttf) -> usize {
    let pts = ttf.points();
    if pts.len() <= 1 {
        return 0;
    }
    // Segment slopes over [0, T]: stored segments plus the wrap segment.
    let mut slopes = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        slopes.push((w[1].delay.0 - w[0].delay.0) / (w[1].at.0 - w[0].at.0));
    }
    let first = pts[0];
    let last = pts[pts.len() - 1];
    slopes.push((first.delay.0 - last.delay.0) / (first.at.0 + ttf.period() - last.at.0));
    slopes
        .windows(2)
        .filter(|w| w[1] - w[0] > 1e-9 * (1.0 + w[0].abs()))
        .count()
}

pub fn instance_stats(g: &TdGraph) -> InstanceStats {
    let mut s = InstanceStats {
        nodes: g.n(),
        active_nodes: g.active_nodes().count(),
        arcs: g.m(),
        active_arcs: 0,
        constant_arcs: 0,
        pwl_arcs: 0,
        breakpoints_total: 0,
        breakpoints_min: usize::MAX,
        breakpoints_max: 0,
        breakpoints_avg: 0.0,
        slope_min: 0.0,
        slope_max: 0.0,
        min_delay: f64::INFINITY,
        max_delay: f64::NEG_INFINITY,
        kstar: 0,
        period: g.period(),
    };
    for id in 0..g.m() as ArcId {
        let arc = g.arc(id);
        if !arc.active {
            continue;
        }
        s.active_arcs += 1;
        let k = arc.ttf.len();
        if k == 1 {
            s.constant_arcs += 1;
        } else {
            s.pwl_arcs += 1;
        }
        s.breakpoints_total += k;
        s.breakpoints_min = s.breakpoints_min.min(k);
        s.breakpoints_max = s.breakpoints_max.max(k);
        let (lo, hi) = arc.ttf.slope_range();
        s.slope_min = s.slope_min.min(lo);
        s.slope_max = s.slope_max.max(hi);
        s.min_delay = s.min_delay.min(arc.ttf.min_delay().0);
        s.max_delay = s.max_delay.max(arc.ttf.max_delay().0);
        s.kstar += concavity_spoiling(&arc.ttf);
    }
    if s.active_arcs > 0 {
        s.breakpoints_avg = s.breakpoints_total as f64 / s.active_arcs as f64;
    } else {
        s.breakpoints_min = 0;
        s.min_delay = 0.0;
        s.max_delay = 0.0;
    }
    s
}

pub fn load_instance_file(path: &Path) -> Result<TdGraph, GraphError> {
    let file = std::fs::File::open(path)?;
    load_instance(io::BufReader::new(file))
}

pub fn load_instance(reader: impl BufRead) -> Result<TdGraph, GraphError> {
    let mut lines = reader.lines().enumerate();
    let (mut lineno, header) = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break (i + 1, line);
                }
            }
            None => {
                return Err(GraphError::Parse {
                    line: 0,
                    msg: "empty file".into(),
                })
            }
        }
    };

    let parse_err = |line: usize, msg: String| GraphError::Parse { line, msg };
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 5 || head[0] != "TDGRAPH" || head[1] != "v1" {
        return Err(parse_err(
            lineno,
            "expected header `TDGRAPH v1 <n> <m> <T-seconds>`".into(),
        ));
    }
    let n: usize = head[2]
        .parse()
        .map_err(|e| parse_err(lineno, format!("bad node count: {e}")))?;
    let m: usize = head[3]
        .parse()
        .map_err(|e| parse_err(lineno, format!("bad arc count: {e}")))?;
    let period: f64 = head[4]
        .parse()
        .map_err(|e| parse_err(lineno, format!("bad period: {e}")))?;
    if !(period.is_finite() && period > 0.0) {
        return Err(parse_err(lineno, format!("period must be positive, got {period}")));
    }

    let mut nodes = vec![NodeInfo::default(); n];
    let mut node_seen = vec![false; n];
    let mut arcs: Vec<(NodeId, NodeId, Ttf)> = Vec::with_capacity(m);

    for (i, line) in lines {
        lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "node" => {
                if tok.len() < 2 || tok.len() > 5 {
                    return Err(parse_err(lineno, "node line needs 1 to 4 fields".into()));
                }
                let id: usize = tok[1]
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad node id: {e}")))?;
                if id >= n {
                    return Err(parse_err(lineno, format!("node id {id} out of range 0..{n}")));
                }
                if node_seen[id] {
                    return Err(parse_err(lineno, format!("node {id} declared twice")));
                }
                node_seen[id] = true;
                let mut info = NodeInfo::default();
                match tok.len() {
                    2 => {}
                    3 => {
                        info.category = Some(tok[2].parse().map_err(|e| {
                            parse_err(lineno, format!("bad category: {e}"))
                        })?);
                    }
                    4 | 5 => {
                        let lon: f64 = tok[2]
                            .parse()
                            .map_err(|e| parse_err(lineno, format!("bad lon: {e}")))?;
                        let lat: f64 = tok[3]
                            .parse()
                            .map_err(|e| parse_err(lineno, format!("bad lat: {e}")))?;
                        info.coords = Some((lon, lat));
                        if tok.len() == 5 {
                            info.category = Some(tok[4].parse().map_err(|e| {
                                parse_err(lineno, format!("bad category: {e}"))
                            })?);
                        }
                    }
                    _ => unreachable!(),
                }
                nodes[id] = info;
            }
            "arc" => {
                if tok.len() < 4 {
                    return Err(parse_err(lineno, "arc line needs tail, head, k".into()));
                }
                let tail: NodeId = tok[1]
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad tail: {e}")))?;
                let head_id: NodeId = tok[2]
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad head: {e}")))?;
                let k: usize = tok[3]
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad breakpoint count: {e}")))?;
                if tok.len() != 4 + 2 * k {
                    return Err(parse_err(
                        lineno,
                        format!("arc declares {k} breakpoints but carries {}", (tok.len() - 4) / 2),
                    ));
                }
                let mut pts = Vec::with_capacity(k);
                for j in 0..k {
                    let t: f64 = tok[4 + 2 * j]
                        .parse()
                        .map_err(|e| parse_err(lineno, format!("bad breakpoint time: {e}")))?;
                    let d: f64 = tok[5 + 2 * j]
                        .parse()
                        .map_err(|e| parse_err(lineno, format!("bad delay: {e}")))?;
                    pts.push(TtfPoint::new(t, d));
                }
                let arc_id = arcs.len() as ArcId;
                let ttf = Ttf::new(period, pts)
                    .map_err(|source| GraphError::BadTtf { arc: arc_id, source })?;
                arcs.push((tail, head_id, ttf));
            }
            other => {
                return Err(parse_err(lineno, format!("unknown directive `{other}`")));
            }
        }
    }

    if arcs.len() != m {
        return Err(GraphError::CountMismatch {
            what: "arcs",
            declared: m,
            found: arcs.len(),
        });
    }
    TdGraph::build(period, nodes, arcs)
}

/// Writes the original instance (nodes plus original arcs) in the text
/// format. Floats use shortest round-trip formatting, so load→save→load is
/// the identity.
pub fn save_instance(g: &TdGraph, mut w: impl Write) -> io::Result<()> {
    let originals: Vec<ArcId> = (0..g.m() as ArcId)
        .filter(|&id| matches!(g.arc(id).kind, ArcKind::Original))
        .collect();
    writeln!(w, "TDGRAPH v1 {} {} {}", g.n(), originals.len(), g.period())?;
    for v in 0..g.n() as NodeId {
        let info = g.node(v);
        match (info.coords, info.category) {
            (Some((lon, lat)), Some(c)) => writeln!(w, "node {v} {lon} {lat} {c}")?,
            (Some((lon, lat)), None) => writeln!(w, "node {v} {lon} {lat}")?,
            (None, Some(c)) => writeln!(w, "node {v} {c}")?,
            (None, None) => writeln!(w, "node {v}")?,
        }
    }
    for id in originals {
        let arc = g.arc(id);
        write!(w, "arc {} {} {}", arc.tail, arc.head, arc.ttf.len())?;
        for p in arc.ttf.points() {
            write!(w, " {} {}", p.at.0, p.delay.0)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
