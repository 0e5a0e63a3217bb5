//! Synthetic instance generation: grid, ring, and random geometric
//! ("random-planar") networks with seeded, FIFO-valid piecewise-linear
//! delays shaped like a morning/evening rush-hour profile.
//!
//! All randomness flows through one ChaCha stream per call, so a fixed
//! config reproduces the instance byte for byte.

use crate::graph::{NodeId, NodeInfo, TdGraph};
use crate::time::Delay;
use crate::ttf::{Ttf, TtfPoint};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Grid,
    Ring,
    RandomPlanar,
}

impl std::str::FromStr for InstanceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(InstanceKind::Grid),
            "ring" => Ok(InstanceKind::Ring),
            "random-planar" => Ok(InstanceKind::RandomPlanar),
            other => Err(format!(
                "unknown instance kind `{other}` (expected grid, ring or random-planar)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub kind: InstanceKind,
    pub n: usize,
    /// Fraction of road segments that receive a time-dependent delay.
    pub td_fraction: f64,
    /// Breakpoints per time-dependent arc (at least 2 are used).
    pub breakpoints: usize,
    pub seed: u64,
    pub period: f64,
    /// Mirror each forward delay function onto the reverse arc.
    pub symmetric: bool,
    /// Fraction of segments split in two through a fresh degree-2 node.
    pub subdivide_fraction: f64,
}

impl GeneratorConfig {
    pub fn new(kind: InstanceKind, n: usize, seed: u64) -> Self {
        GeneratorConfig {
            kind,
            n,
            td_fraction: 0.12,
            breakpoints: 5,
            seed,
            period: 86400.0,
            symmetric: false,
            subdivide_fraction: 0.0,
        }
    }
}

/// An undirected road segment before directed arcs are materialized.
struct Segment {
    a: NodeId,
    b: NodeId,
    class: u32,
    length: f64,
}

/// Builds a synthetic instance. The output always satisfies the FIFO
/// property and loads back through the instance file format unchanged.
pub fn generate(cfg: &GeneratorConfig) -> TdGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (coords, mut segments) = match cfg.kind {
        InstanceKind::Grid => grid_layout(cfg.n),
        InstanceKind::Ring => ring_layout(cfg.n),
        InstanceKind::RandomPlanar => planar_layout(cfg.n, &mut rng),
    };

    let mut nodes: Vec<NodeInfo> = coords
        .iter()
        .map(|&(x, y)| NodeInfo {
            coords: Some((x, y)),
            category: None,
        })
        .collect();
    for seg in &segments {
        for v in [seg.a, seg.b] {
            let cat = &mut nodes[v as usize].category;
            *cat = Some(cat.map_or(seg.class, |c| c.min(seg.class)));
        }
    }

    let mean_len = if segments.is_empty() {
        1.0
    } else {
        segments.iter().map(|s| s.length).sum::<f64>() / segments.len() as f64
    };

    // Subdivision inserts a midpoint vertex and splits the segment in two;
    // the new vertex has undirected degree 2 by construction.
    if cfg.subdivide_fraction > 0.0 {
        let picks: Vec<bool> = segments
            .iter()
            .map(|_| rng.gen_bool(cfg.subdivide_fraction.clamp(0.0, 1.0)))
            .collect();
        let mut extra = Vec::new();
        for (seg, pick) in segments.iter_mut().zip(picks) {
            if !pick {
                continue;
            }
            let w = nodes.len() as NodeId;
            let (ax, ay) = coords[seg.a as usize];
            let (bx, by) = coords[seg.b as usize];
            nodes.push(NodeInfo {
                coords: Some(((ax + bx) / 2.0, (ay + by) / 2.0)),
                category: Some(seg.class),
            });
            let b = seg.b;
            seg.b = w;
            seg.length /= 2.0;
            extra.push(Segment {
                a: w,
                b,
                class: seg.class,
                length: seg.length,
            });
        }
        segments.extend(extra);
    }

    let mut arcs = Vec::new();
    for seg in &segments {
        let base = delay_base(seg, mean_len, &mut rng);
        let td = cfg.td_fraction > 0.0 && rng.gen_bool(cfg.td_fraction.clamp(0.0, 1.0));
        let forward = if td {
            rush_hour_ttf(cfg, base, &mut rng)
        } else {
            Ttf::constant(cfg.period, Delay(base))
        };
        let backward = if cfg.symmetric {
            forward.clone()
        } else {
            let rbase = delay_base(seg, mean_len, &mut rng);
            if td {
                rush_hour_ttf(cfg, rbase, &mut rng)
            } else {
                Ttf::constant(cfg.period, Delay(rbase))
            }
        };
        arcs.push((seg.a, seg.b, forward));
        arcs.push((seg.b, seg.a, backward));
    }

    TdGraph::build(cfg.period, nodes, arcs).expect("generated instance is valid")
}

fn delay_base(seg: &Segment, mean_len: f64, rng: &mut ChaCha8Rng) -> f64 {
    let class_factor = [0.9, 1.0, 1.3][seg.class.min(2) as usize];
    let jitter = rng.gen_range(0.8..1.25);
    (seg.length / mean_len * 90.0 * class_factor * jitter).max(2.0)
}

/// Piecewise-linear delay with peaks around 08:00 and 17:30. Breakpoint
/// spacing and amplitude are coupled so every slope stays above -0.8,
/// which keeps the arc FIFO with margin.
fn rush_hour_ttf(cfg: &GeneratorConfig, base: f64, rng: &mut ChaCha8Rng) -> Ttf {
    let t = cfg.period;
    let k = rng.gen_range(2..=cfg.breakpoints.max(2));
    let slot = t / k as f64;
    let min_gap = 0.2 * slot;
    let amp = (base * rng.gen_range(0.4..1.6)).min(0.7 * min_gap);
    let mut points = Vec::with_capacity(k);
    for i in 0..k {
        let at = (i as f64 + 0.1 + 0.8 * rng.gen::<f64>()) * slot;
        let profile = rush_profile(at, t);
        let jitter = rng.gen_range(0.9..1.1);
        points.push(TtfPoint::new(at, base + amp * profile * jitter));
    }
    let ttf = Ttf::canonical(cfg.period, points);
    debug_assert!(ttf.is_fifo());
    ttf
}

/// Two-hump congestion profile in [0, 1], normalized to a 24h period.
fn rush_profile(at: f64, period: f64) -> f64 {
    let h = at / period * 24.0;
    let hump = |center: f64, width: f64| (-((h - center) / width).powi(2)).exp();
    hump(8.0, 2.0) + 0.8 * hump(17.5, 2.5)
}

fn grid_layout(n: usize) -> (Vec<(f64, f64)>, Vec<Segment>) {
    let cols = (n as f64).sqrt().ceil() as usize;
    let cols = cols.max(1);
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|i| ((i % cols) as f64 * 0.01, (i / cols) as f64 * 0.01))
        .collect();
    let mut segments = Vec::new();
    // Every fourth line is a secondary road, every eighth a major one.
    let line_class = |i: usize| {
        if i % 8 == 0 {
            0
        } else if i % 4 == 0 {
            1
        } else {
            2
        }
    };
    for i in 0..n {
        let (r, c) = (i / cols, i % cols);
        if c + 1 < cols && i + 1 < n {
            segments.push(Segment {
                a: i as NodeId,
                b: (i + 1) as NodeId,
                class: line_class(r),
                length: 0.01,
            });
        }
        if i + cols < n {
            segments.push(Segment {
                a: i as NodeId,
                b: (i + cols) as NodeId,
                class: line_class(c),
                length: 0.01,
            });
        }
    }
    (coords, segments)
}

fn ring_layout(n: usize) -> (Vec<(f64, f64)>, Vec<Segment>) {
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let angle = i as f64 / n as f64 * std::f64::consts::TAU;
            (angle.cos(), angle.sin())
        })
        .collect();
    let mut segments = Vec::new();
    if n == 2 {
        segments.push(Segment {
            a: 0,
            b: 1,
            class: 1,
            length: 1.0,
        });
    } else if n >= 3 {
        for i in 0..n {
            segments.push(Segment {
                a: i as NodeId,
                b: ((i + 1) % n) as NodeId,
                class: 1,
                length: 1.0,
            });
        }
    }
    (coords, segments)
}

/// Random points in the unit square joined to their nearest neighbours,
/// then patched into one component. Not strictly planar, but geometric and
/// sparse, which is what the experiments need.
fn planar_layout(n: usize, rng: &mut ChaCha8Rng) -> (Vec<(f64, f64)>, Vec<Segment>) {
    const NEIGHBOURS: usize = 4;
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let dist = |i: usize, j: usize| {
        let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
        (dx * dx + dy * dy).sqrt()
    };

    // Spatial hash so k-nearest-neighbour search stays near-linear.
    let cell = (1.0 / (n.max(1) as f64).sqrt()).max(1e-3);
    let cells_per_side = (1.0 / cell).ceil() as i64 + 1;
    let key = |x: f64, y: f64| ((x / cell) as i64, (y / cell) as i64);
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, &(x, y)) in coords.iter().enumerate() {
        buckets.entry(key(x, y)).or_default().push(i);
    }

    let mut edges: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();
    for i in 0..n {
        let (cx, cy) = key(coords[i].0, coords[i].1);
        let mut ring = 1i64;
        let mut candidates: Vec<usize> = Vec::new();
        while candidates.len() <= NEIGHBOURS && ring <= cells_per_side {
            candidates.clear();
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if let Some(bucket) = buckets.get(&(cx + dx, cy + dy)) {
                        candidates.extend(bucket.iter().filter(|&&j| j != i));
                    }
                }
            }
            ring += 1;
        }
        candidates.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)).then(a.cmp(&b)));
        for &j in candidates.iter().take(NEIGHBOURS) {
            edges.insert((i.min(j), i.max(j)));
        }
    }

    // Union-find pass: connect remaining components through their nearest
    // outside vertex so every instance is strongly connected.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    loop {
        let root0 = if n == 0 { break } else { find(&mut parent, 0) };
        let outside: Vec<usize> = (0..n).filter(|&v| find(&mut parent, v) != root0).collect();
        if outside.is_empty() {
            break;
        }
        let mut best = (f64::INFINITY, 0usize, 0usize);
        for &u in &outside {
            for v in 0..n {
                if find(&mut parent, v) == root0 {
                    let d = dist(u, v);
                    if d < best.0 {
                        best = (d, u, v);
                    }
                }
            }
        }
        edges.insert((best.1.min(best.2), best.1.max(best.2)));
        let (ru, rv) = (find(&mut parent, best.1), find(&mut parent, best.2));
        parent[ru] = rv;
    }

    let segments = edges
        .into_iter()
        .map(|(a, b)| {
            let class = match rng.gen_range(0..10) {
                0 => 0,
                1..=3 => 1,
                _ => 2,
            };
            Segment {
                a: a as NodeId,
                b: b as NodeId,
                class,
                length: dist(a, b).max(1e-6),
            }
        })
        .collect();
    (coords, segments)
}
