//! Storage codec for travel-time summaries: fixed-range integer time
//! encoding, breakpoint bucketing, predecessor-composed records, narrow
//! delay shifts, and zlib block compression, plus the store container and
//! the flat/horn index files.
//!
//! The decoded function must never fall below the function it encodes, so
//! every lossy stage errs upward: delay values round up to the next scale
//! unit, bucketing carries the maximum of a merged run, and both stages
//! re-check domination against their input afterwards, backing out of any
//! merge (or bumping a value by one unit) that would dip below it.
//! Breakpoint positions round to nearest; the domination repair absorbs
//! the value drift that can cause.

use crate::graph::NodeId;
use crate::time::{Delay, Timestamp};
use crate::trap::SummarySet;
use crate::ttf::{Ttf, TtfError, TtfPoint};
use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use thiserror::Error;

pub const STORE_MAGIC: &[u8; 5] = b"TDOR1";
pub const FLAT_INDEX_MAGIC: &[u8; 6] = b"TDIXF1";
pub const HORN_INDEX_MAGIC: &[u8; 6] = b"TDIXH1";

#[derive(Debug, Clone, Copy)]
pub struct CodecConfig {
    /// Seconds per stored integer unit.
    pub scale: f64,
    /// Bucketing threshold in seconds; 0 disables merging.
    pub bucket: f64,
    pub compress: bool,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            scale: 1.32,
            bucket: 0.0,
            compress: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("store data truncated at byte {0}")]
    Truncated(usize),
    #[error("bad magic bytes (not a summary store)")]
    BadMagic,
    #[error("unsupported store version {0}")]
    BadVersion(u8),
    #[error("unknown record type {ty} for destination {dest}")]
    UnknownRecordType { dest: NodeId, ty: u8 },
    #[error("record for destination {dest} references missing predecessor {pred}")]
    MissingPredecessor { dest: NodeId, pred: NodeId },
    #[error("cyclic predecessor references involving destination {0}")]
    CyclicReference(NodeId),
    #[error("decoded function rejected: {0}")]
    BadFunction(#[from] TtfError),
    #[error("no block stored for landmark {0}")]
    MissingBlock(NodeId),
}

/// Ceiling quantization for delay values: always errs upward, by less
/// than one unit.
#[inline]
pub fn encode_time(t: f64, s: f64) -> u32 {
    (t / s).ceil().max(0.0) as u32
}

#[inline]
pub fn decode_time(units: u32, s: f64) -> f64 {
    units as f64 * s
}

/// Nearest-unit quantization for breakpoint positions.
#[inline]
fn quantize_position(t: f64, s: f64) -> u32 {
    (t / s).round().max(0.0) as u32
}

/// Merges runs of consecutive breakpoints whose delays stay within `c`,
/// keeping the first position and the largest delay of each run. Merges
/// that would let the interpolated result dip below the input anywhere
/// are backed out, so the returned function dominates the input pointwise.
pub fn bucket(f: &Ttf, c: f64) -> Ttf {
    let pts = f.points();
    if c <= 0.0 || pts.len() < 2 {
        return f.clone();
    }
    // merge_with_prev[i]: point i may join the run of point i-1.
    let mut merge_with_prev = vec![false; pts.len()];
    for i in 1..pts.len() {
        merge_with_prev[i] = (pts[i].delay.0 - pts[i - 1].delay.0).abs() < c;
    }
    loop {
        let mut candidate: Vec<TtfPoint> = Vec::with_capacity(pts.len());
        let mut run_of: Vec<usize> = Vec::with_capacity(pts.len());
        let mut swing_lo = f64::INFINITY;
        let mut swing_hi = f64::NEG_INFINITY;
        for (i, p) in pts.iter().enumerate() {
            let extends = i > 0 && merge_with_prev[i] && {
                let lo = swing_lo.min(p.delay.0);
                let hi = swing_hi.max(p.delay.0);
                hi - lo <= c
            };
            if extends {
                swing_lo = swing_lo.min(p.delay.0);
                swing_hi = swing_hi.max(p.delay.0);
                let last = candidate.last_mut().unwrap();
                last.delay = Delay(last.delay.0.max(p.delay.0));
            } else {
                swing_lo = p.delay.0;
                swing_hi = p.delay.0;
                candidate.push(*p);
            }
            run_of.push(candidate.len() - 1);
        }
        if candidate.len() == pts.len() {
            return f.clone();
        }
        let merged = Ttf::canonical(f.period(), candidate);
        // Domination check at every kink of either function; piecewise
        // linear differences attain their minimum at a kink.
        let mut offending: Option<usize> = None;
        for p in pts.iter().chain(merged.points()) {
            if merged.eval(p.at).0 < f.eval(p.at).0 - 1e-9 {
                let idx = pts.partition_point(|q| q.at.0 <= p.at.0).max(1) - 1;
                offending = Some(idx);
                break;
            }
        }
        match offending {
            None => return merged,
            Some(idx) => {
                // Dissolve the runs around the violation and retry.
                let run = run_of[idx];
                let mut cleared = false;
                for i in 1..pts.len() {
                    if run_of[i] == run || run_of[i - 1] == run {
                        cleared |= std::mem::replace(&mut merge_with_prev[i], false);
                    }
                }
                if !cleared {
                    return f.clone();
                }
            }
        }
    }
}

/// zlib round trip, bit-exact.
pub fn compress_block(bytes: &[u8]) -> Vec<u8> {
    let mut enc = ZlibEncoder::new(Vec::new(), Compression::default());
    enc.write_all(bytes).expect("in-memory write");
    enc.finish().expect("in-memory finish")
}

pub fn decompress_block(bytes: &[u8]) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    ZlibDecoder::new(bytes).read_to_end(&mut out)?;
    Ok(out)
}

const TYPE_CONST_REF: u8 = 0;
const TYPE_NARROW: u8 = 1;
const TYPE_WIDE: u8 = 2;
const TYPE_CONSTANT: u8 = 3;

const WIDTH_POS_32: u8 = 0b01;
const WIDTH_VAL_32: u8 = 0b10;

#[derive(Debug, Clone, Default)]
pub struct EncodeStats {
    pub records: usize,
    pub const_refs: usize,
    pub narrow: usize,
    pub wide: usize,
    pub constants: usize,
    pub points_before_bucket: usize,
    pub points_after_bucket: usize,
    pub repair_bumps: usize,
}

/// One landmark's encoded block with per-destination record offsets.
#[derive(Debug, Clone)]
pub struct EncodedBlock {
    pub landmark: NodeId,
    pub bytes: Vec<u8>,
    pub offsets: BTreeMap<NodeId, u32>,
    pub stats: EncodeStats,
}

struct Quantized {
    positions: Vec<u32>,
    values: Vec<u32>,
    const_pred: Option<(NodeId, Delay)>,
}

/// Quantizes one summary: nearest positions (deduplicated keeping the
/// larger value), delay ceil, then upward value bumps until the decoded
/// function dominates the bucketed input at every kink of either.
fn quantize(ttf: &Ttf, cfg: &CodecConfig, bumps: &mut usize) -> (Vec<u32>, Vec<u32>) {
    let s = cfg.scale;
    let mut positions: Vec<u32> = Vec::with_capacity(ttf.len());
    let mut values: Vec<u32> = Vec::with_capacity(ttf.len());
    for p in ttf.points() {
        let pos = quantize_position(p.at.0, s);
        let val = encode_time(p.delay.0, s).max(1);
        if positions.last() == Some(&pos) {
            let last = values.last_mut().unwrap();
            *last = (*last).max(val);
        } else {
            positions.push(pos);
            values.push(val);
        }
    }
    // A final position can round up onto the period boundary, which
    // aliases the start of the cycle; fold it into the first point.
    let period_units = quantize_position(ttf.period(), s);
    if positions.len() > 1 && *positions.last().unwrap() >= period_units {
        let last = values.pop().unwrap();
        positions.pop();
        values[0] = values[0].max(last);
    }

    for round in 0..8 {
        let decoded = decoded_ttf(&positions, &values, cfg, ttf.period())
            .expect("quantized points form a valid function");
        let mut worst: Option<(Timestamp, f64)> = None;
        for p in ttf.points().iter().chain(decoded.points()) {
            let deficit = ttf.eval(p.at).0 - decoded.eval(p.at).0;
            if deficit > 1e-9 && deficit > worst.map_or(0.0, |(_, d)| d) {
                worst = Some((p.at, deficit));
            }
        }
        let Some((at, deficit)) = worst else { break };
        *bumps += 1;
        if round < 7 {
            // Bump the segment bracketing the worst violation by one unit.
            let t_units = at.0 / s;
            let i = positions.partition_point(|&p| (p as f64) <= t_units);
            let lo = if i == 0 { positions.len() - 1 } else { i - 1 };
            let hi = i % positions.len();
            values[lo] += 1;
            if hi != lo {
                values[hi] += 1;
            }
        } else {
            // Last resort: lift the whole record clear of the deficit.
            let lift = (deficit / s).ceil() as u32 + 1;
            for v in &mut values {
                *v += lift;
            }
        }
    }
    (positions, values)
}

fn decoded_ttf(
    positions: &[u32],
    values: &[u32],
    cfg: &CodecConfig,
    period: f64,
) -> Result<Ttf, TtfError> {
    let points = positions
        .iter()
        .zip(values)
        .map(|(&p, &v)| TtfPoint::new(decode_time(p, cfg.scale), decode_time(v, cfg.scale)))
        .collect();
    Ttf::new(period, points)
}

struct ByteWriter {
    buf: Vec<u8>,
    widths: u8,
}

impl ByteWriter {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn pos(&mut self, v: u32) {
        if self.widths & WIDTH_POS_32 != 0 {
            self.u32(v);
        } else {
            self.buf.extend_from_slice(&(v as u16).to_le_bytes());
        }
    }
    fn val(&mut self, v: u32) {
        if self.widths & WIDTH_VAL_32 != 0 {
            self.u32(v);
        } else {
            self.buf.extend_from_slice(&(v as u16).to_le_bytes());
        }
    }
}

/// Encodes all summaries of one landmark into a block: bucketing,
/// quantization, predecessor references where the quantized samples
/// decompose exactly, and base-plus-shift delay storage.
pub fn encode_block(set: &SummarySet, cfg: &CodecConfig) -> EncodedBlock {
    let mut stats = EncodeStats::default();
    let mut quantized: BTreeMap<NodeId, Quantized> = BTreeMap::new();
    for (&v, summary) in &set.summaries {
        stats.points_before_bucket += summary.ttf.len();
        let bucketed = bucket(&summary.ttf, cfg.bucket);
        stats.points_after_bucket += bucketed.len();
        let (positions, values) = quantize(&bucketed, cfg, &mut stats.repair_bumps);
        quantized.insert(
            v,
            Quantized {
                positions,
                values,
                const_pred: summary.const_pred,
            },
        );
    }

    let mut widths = 0u8;
    for q in quantized.values() {
        if q.positions.iter().any(|&p| p > u16::MAX as u32) {
            widths |= WIDTH_POS_32;
        }
        if q.values.iter().any(|&v| v > u16::MAX as u32) {
            widths |= WIDTH_VAL_32;
        }
    }

    let mut w = ByteWriter {
        buf: Vec::new(),
        widths,
    };
    w.u32(quantized.len() as u32);
    w.u8(widths);

    let mut offsets = BTreeMap::new();
    for (&v, q) in &quantized {
        offsets.insert(v, w.buf.len() as u32);
        stats.records += 1;
        w.u32(v);

        // Predecessor reference: valid only when the quantized samples
        // decompose as an exact constant offset from the referenced record.
        if let Some((pred, _)) = q.const_pred {
            if let Some(p) = quantized.get(&pred).filter(|_| pred != v) {
                let fits_u16 = widths & WIDTH_VAL_32 == 0;
                let exact = p.positions == q.positions
                    && q.values[0] >= p.values[0]
                    && {
                        let off = q.values[0] - p.values[0];
                        (!fits_u16 || off <= u16::MAX as u32)
                            && q.values
                                .iter()
                                .zip(&p.values)
                                .all(|(&qv, &pv)| qv == pv + off)
                    };
                if exact {
                    w.u8(TYPE_CONST_REF);
                    w.u32(pred);
                    w.val(q.values[0] - p.values[0]);
                    stats.const_refs += 1;
                    continue;
                }
            }
        }

        if q.values.len() == 1 {
            w.u8(TYPE_CONSTANT);
            w.val(q.values[0]);
            stats.constants += 1;
            continue;
        }

        let base = *q.values.iter().min().unwrap();
        let narrow = q.values.iter().all(|&v| v - base <= u8::MAX as u32);
        w.u8(if narrow { TYPE_NARROW } else { TYPE_WIDE });
        w.u32(q.values.len() as u32);
        for &p in &q.positions {
            w.pos(p);
        }
        w.val(base);
        for &val in &q.values {
            if narrow {
                w.u8((val - base) as u8);
            } else {
                w.u32(val - base);
            }
        }
        if narrow {
            stats.narrow += 1;
        } else {
            stats.wide += 1;
        }
    }

    EncodedBlock {
        landmark: set.landmark,
        bytes: w.buf,
        offsets,
        stats,
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    at: usize,
    widths: u8,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.at.checked_add(n).ok_or(CodecError::Truncated(self.at))?;
        if end > self.buf.len() {
            return Err(CodecError::Truncated(self.at));
        }
        let slice = &self.buf[self.at..end];
        self.at = end;
        Ok(slice)
    }
    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn pos(&mut self) -> Result<u32, CodecError> {
        if self.widths & WIDTH_POS_32 != 0 {
            self.u32()
        } else {
            Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()) as u32)
        }
    }
    fn val(&mut self) -> Result<u32, CodecError> {
        if self.widths & WIDTH_VAL_32 != 0 {
            self.u32()
        } else {
            Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()) as u32)
        }
    }
}

enum RawRecord {
    ConstRef { pred: NodeId, offset: u32 },
    Points { positions: Vec<u32>, values: Vec<u32> },
}

fn read_record(r: &mut ByteReader) -> Result<(NodeId, RawRecord), CodecError> {
    let dest = r.u32()?;
    let ty = r.u8()?;
    let record = match ty {
        TYPE_CONST_REF => RawRecord::ConstRef {
            pred: r.u32()?,
            offset: r.val()?,
        },
        TYPE_CONSTANT => RawRecord::Points {
            positions: vec![0],
            values: vec![r.val()?],
        },
        TYPE_NARROW | TYPE_WIDE => {
            let k = r.u32()? as usize;
            let mut positions = Vec::with_capacity(k);
            for _ in 0..k {
                positions.push(r.pos()?);
            }
            let base = r.val()?;
            let mut values = Vec::with_capacity(k);
            for _ in 0..k {
                let shift = if ty == TYPE_NARROW {
                    r.u8()? as u32
                } else {
                    r.u32()?
                };
                values.push(base + shift);
            }
            RawRecord::Points { positions, values }
        }
        other => return Err(CodecError::UnknownRecordType { dest, ty: other }),
    };
    Ok((dest, record))
}

/// Decodes a whole block back into per-destination functions.
pub fn decode_block(
    bytes: &[u8],
    cfg: &CodecConfig,
    period: f64,
) -> Result<BTreeMap<NodeId, Ttf>, CodecError> {
    let mut r = ByteReader {
        buf: bytes,
        at: 0,
        widths: 0,
    };
    let count = r.u32()? as usize;
    r.widths = r.u8()?;
    let mut raw = BTreeMap::new();
    for _ in 0..count {
        let (dest, record) = read_record(&mut r)?;
        raw.insert(dest, record);
    }

    let mut done: BTreeMap<NodeId, Ttf> = BTreeMap::new();
    for &dest in raw.keys() {
        resolve(dest, &raw, &mut done, cfg, period, 0)?;
    }
    Ok(done)
}

fn resolve(
    dest: NodeId,
    raw: &BTreeMap<NodeId, RawRecord>,
    done: &mut BTreeMap<NodeId, Ttf>,
    cfg: &CodecConfig,
    period: f64,
    depth: usize,
) -> Result<(), CodecError> {
    if done.contains_key(&dest) {
        return Ok(());
    }
    if depth > raw.len() {
        return Err(CodecError::CyclicReference(dest));
    }
    match raw.get(&dest) {
        None => Err(CodecError::MissingPredecessor { dest, pred: dest }),
        Some(RawRecord::Points { positions, values }) => {
            done.insert(dest, decoded_ttf(positions, values, cfg, period)?);
            Ok(())
        }
        Some(&RawRecord::ConstRef { pred, offset }) => {
            if !raw.contains_key(&pred) {
                return Err(CodecError::MissingPredecessor { dest, pred });
            }
            resolve(pred, raw, done, cfg, period, depth + 1)?;
            let base = done[&pred].clone();
            done.insert(dest, base.plus_const(Delay(decode_time(offset, cfg.scale))));
            Ok(())
        }
    }
}

/// Decodes a single record at a known offset; predecessor references
/// resolve through the same block via `offset_of`.
pub fn decode_record(
    bytes: &[u8],
    offset: u32,
    cfg: &CodecConfig,
    period: f64,
    offset_of: &impl Fn(NodeId) -> Option<u32>,
) -> Result<Ttf, CodecError> {
    if bytes.len() < 5 {
        return Err(CodecError::Truncated(bytes.len()));
    }
    let widths = bytes[4];
    let mut hops = 0usize;
    let mut at = offset as usize;
    let mut extra = 0.0f64;
    loop {
        let mut r = ByteReader { buf: bytes, at, widths };
        let (dest, record) = read_record(&mut r)?;
        match record {
            RawRecord::Points { positions, values } => {
                let ttf = decoded_ttf(&positions, &values, cfg, period)?;
                return Ok(if extra > 0.0 { ttf.plus_const(Delay(extra)) } else { ttf });
            }
            RawRecord::ConstRef { pred, offset } => {
                extra += decode_time(offset, cfg.scale);
                at = offset_of(pred)
                    .ok_or(CodecError::MissingPredecessor { dest, pred })?
                    as usize;
                hops += 1;
                if hops > bytes.len() {
                    return Err(CodecError::CyclicReference(dest));
                }
            }
        }
    }
}

/// Directory entry of one landmark block inside a store file.
#[derive(Debug, Clone, Copy)]
pub struct DirEntry {
    pub landmark: NodeId,
    pub level: u8,
    pub coverage: u32,
    pub offset: u64,
    pub stored_len: u32,
    pub raw_len: u32,
}

/// In-memory summary store: codec parameters plus one decompressed block
/// per landmark with its record offsets. Blocks are immutable after
/// construction, so concurrent readers are safe.
#[derive(Debug, Clone)]
pub struct Store {
    pub config: CodecConfig,
    pub period: f64,
    pub entries: Vec<DirEntry>,
    blocks: BTreeMap<NodeId, Vec<u8>>,
    offsets: BTreeMap<NodeId, BTreeMap<NodeId, u32>>,
}

impl Store {
    pub fn build(
        blocks: Vec<EncodedBlock>,
        levels: &BTreeMap<NodeId, u8>,
        cfg: CodecConfig,
        period: f64,
    ) -> Store {
        let mut entries = Vec::with_capacity(blocks.len());
        let mut raw = BTreeMap::new();
        let mut offsets = BTreeMap::new();
        for b in blocks {
            entries.push(DirEntry {
                landmark: b.landmark,
                level: levels.get(&b.landmark).copied().unwrap_or(1),
                coverage: b.offsets.len() as u32,
                offset: 0,
                stored_len: 0,
                raw_len: b.bytes.len() as u32,
            });
            raw.insert(b.landmark, b.bytes);
            offsets.insert(b.landmark, b.offsets);
        }
        entries.sort_by_key(|e| e.landmark);
        Store {
            config: cfg,
            period,
            entries,
            blocks: raw,
            offsets,
        }
    }

    pub fn landmarks(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.landmark)
    }

    pub fn block(&self, landmark: NodeId) -> Result<&[u8], CodecError> {
        self.blocks
            .get(&landmark)
            .map(|b| b.as_slice())
            .ok_or(CodecError::MissingBlock(landmark))
    }

    pub fn record_offsets(&self, landmark: NodeId) -> Option<&BTreeMap<NodeId, u32>> {
        self.offsets.get(&landmark)
    }

    /// Flat lookup: the decoded summary for (landmark, destination), or
    /// None when the destination lies outside the landmark's coverage.
    pub fn lookup(&self, landmark: NodeId, dest: NodeId) -> Result<Option<Ttf>, CodecError> {
        let Some(offsets) = self.offsets.get(&landmark) else {
            return Ok(None);
        };
        let Some(&off) = offsets.get(&dest) else {
            return Ok(None);
        };
        let block = self.block(landmark)?;
        let resolve = |v: NodeId| offsets.get(&v).copied();
        decode_record(block, off, &self.config, self.period, &resolve).map(Some)
    }

    /// Landmarks covering `dest`, ascending, with record offsets.
    pub fn covering(&self, dest: NodeId) -> Vec<(NodeId, u32)> {
        let mut list: Vec<(NodeId, u32)> = self
            .offsets
            .iter()
            .filter_map(|(&l, m)| m.get(&dest).map(|&o| (l, o)))
            .collect();
        list.sort_unstable();
        list
    }

    pub fn level_of(&self, landmark: NodeId) -> Option<u8> {
        self.entries
            .iter()
            .find(|e| e.landmark == landmark)
            .map(|e| e.level)
    }

    pub fn write(&self, w: &mut impl Write) -> Result<(), CodecError> {
        let mut stored: Vec<(DirEntry, Vec<u8>)> = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let raw = &self.blocks[&e.landmark];
            let bytes = if self.config.compress {
                compress_block(raw)
            } else {
                raw.clone()
            };
            let mut entry = *e;
            entry.stored_len = bytes.len() as u32;
            entry.raw_len = raw.len() as u32;
            stored.push((entry, bytes));
        }
        let header_len = 5 + 1 + 8 * 3 + 1 + 4;
        let dir_len = stored.len() * 25;
        let mut offset = (header_len + dir_len) as u64;
        for (entry, bytes) in &mut stored {
            entry.offset = offset;
            offset += bytes.len() as u64;
        }

        w.write_all(STORE_MAGIC)?;
        w.write_all(&[1u8])?;
        w.write_all(&self.period.to_le_bytes())?;
        w.write_all(&self.config.scale.to_le_bytes())?;
        w.write_all(&self.config.bucket.to_le_bytes())?;
        w.write_all(&[u8::from(self.config.compress)])?;
        w.write_all(&(stored.len() as u32).to_le_bytes())?;
        for (entry, _) in &stored {
            w.write_all(&entry.landmark.to_le_bytes())?;
            w.write_all(&[entry.level])?;
            w.write_all(&entry.coverage.to_le_bytes())?;
            w.write_all(&entry.offset.to_le_bytes())?;
            w.write_all(&entry.stored_len.to_le_bytes())?;
            w.write_all(&entry.raw_len.to_le_bytes())?;
        }
        for (_, bytes) in &stored {
            w.write_all(bytes)?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Store, CodecError> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        let mut rd = ByteReader {
            buf: &data,
            at: 0,
            widths: 0,
        };
        if rd.take(5)? != STORE_MAGIC {
            return Err(CodecError::BadMagic);
        }
        let version = rd.u8()?;
        if version != 1 {
            return Err(CodecError::BadVersion(version));
        }
        let f64_at = |rd: &mut ByteReader| -> Result<f64, CodecError> {
            Ok(f64::from_le_bytes(rd.take(8)?.try_into().unwrap()))
        };
        let period = f64_at(&mut rd)?;
        let scale = f64_at(&mut rd)?;
        let bucket = f64_at(&mut rd)?;
        let compress = rd.u8()? != 0;
        let count = rd.u32()? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let landmark = rd.u32()?;
            let level = rd.u8()?;
            let coverage = rd.u32()?;
            let offset = u64::from_le_bytes(rd.take(8)?.try_into().unwrap());
            let stored_len = rd.u32()?;
            let raw_len = rd.u32()?;
            entries.push(DirEntry {
                landmark,
                level,
                coverage,
                offset,
                stored_len,
                raw_len,
            });
        }

        let config = CodecConfig {
            scale,
            bucket,
            compress,
        };
        let mut blocks = BTreeMap::new();
        let mut offsets = BTreeMap::new();
        for e in &entries {
            let start = e.offset as usize;
            let end = start + e.stored_len as usize;
            if end > data.len() {
                return Err(CodecError::Truncated(start));
            }
            let raw = if compress {
                decompress_block(&data[start..end])?
            } else {
                data[start..end].to_vec()
            };
            if raw.len() != e.raw_len as usize {
                return Err(CodecError::Truncated(end));
            }
            offsets.insert(e.landmark, scan_offsets(&raw)?);
            blocks.insert(e.landmark, raw);
        }
        Ok(Store {
            config,
            period,
            entries,
            blocks,
            offsets,
        })
    }
}

/// Rebuilds the destination-offset table of a raw block by scanning its
/// self-describing records.
fn scan_offsets(block: &[u8]) -> Result<BTreeMap<NodeId, u32>, CodecError> {
    let mut r = ByteReader {
        buf: block,
        at: 0,
        widths: 0,
    };
    let count = r.u32()? as usize;
    r.widths = r.u8()?;
    let mut offsets = BTreeMap::new();
    for _ in 0..count {
        let at = r.at as u32;
        let (dest, _) = read_record(&mut r)?;
        offsets.insert(dest, at);
    }
    Ok(offsets)
}

/// Flat index: per landmark, an offset per destination id (u32::MAX when
/// uncovered), giving constant-time record lookup.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    pub per_landmark: BTreeMap<NodeId, Vec<u32>>,
}

pub const ABSENT: u32 = u32::MAX;

impl FlatIndex {
    pub fn build(store: &Store, n: usize) -> FlatIndex {
        let mut per_landmark = BTreeMap::new();
        for l in store.landmarks() {
            let mut table = vec![ABSENT; n];
            if let Some(offsets) = store.record_offsets(l) {
                for (&dest, &off) in offsets {
                    table[dest as usize] = off;
                }
            }
            per_landmark.insert(l, table);
        }
        FlatIndex { per_landmark }
    }

    pub fn lookup(&self, landmark: NodeId, dest: NodeId) -> Option<u32> {
        self.per_landmark
            .get(&landmark)
            .and_then(|t| t.get(dest as usize))
            .copied()
            .filter(|&o| o != ABSENT)
    }

    pub fn write(&self, w: &mut impl Write) -> Result<(), CodecError> {
        w.write_all(FLAT_INDEX_MAGIC)?;
        w.write_all(&(self.per_landmark.len() as u32).to_le_bytes())?;
        for (&l, table) in &self.per_landmark {
            w.write_all(&l.to_le_bytes())?;
            w.write_all(&(table.len() as u32).to_le_bytes())?;
            for &off in table {
                w.write_all(&off.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<FlatIndex, CodecError> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        let mut rd = ByteReader {
            buf: &data,
            at: 0,
            widths: 0,
        };
        if rd.take(6)? != FLAT_INDEX_MAGIC {
            return Err(CodecError::BadMagic);
        }
        let count = rd.u32()? as usize;
        let mut per_landmark = BTreeMap::new();
        for _ in 0..count {
            let l = rd.u32()?;
            let n = rd.u32()? as usize;
            let mut table = Vec::with_capacity(n);
            for _ in 0..n {
                table.push(rd.u32()?);
            }
            per_landmark.insert(l, table);
        }
        Ok(FlatIndex { per_landmark })
    }
}

/// Horn index: per vertex, the covering landmarks ascending by id with
/// their record offsets; lookups binary-search the sorted list.
#[derive(Debug, Clone)]
pub struct HornIndex {
    pub per_vertex: Vec<Vec<(NodeId, u32)>>,
}

impl HornIndex {
    pub fn build(store: &Store, n: usize) -> HornIndex {
        let mut per_vertex = vec![Vec::new(); n];
        for l in store.landmarks() {
            if let Some(offsets) = store.record_offsets(l) {
                for (&dest, &off) in offsets {
                    per_vertex[dest as usize].push((l, off));
                }
            }
        }
        for list in &mut per_vertex {
            list.sort_unstable();
        }
        HornIndex { per_vertex }
    }

    /// All covering landmarks of `dest`, ascending by landmark id.
    pub fn lookup(&self, dest: NodeId) -> &[(NodeId, u32)] {
        self.per_vertex
            .get(dest as usize)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Record offset for one specific landmark, by binary search.
    pub fn lookup_landmark(&self, dest: NodeId, landmark: NodeId) -> Option<u32> {
        let list = self.lookup(dest);
        list.binary_search_by_key(&landmark, |&(l, _)| l)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn write(&self, w: &mut impl Write) -> Result<(), CodecError> {
        w.write_all(HORN_INDEX_MAGIC)?;
        w.write_all(&(self.per_vertex.len() as u32).to_le_bytes())?;
        for list in &self.per_vertex {
            w.write_all(&(list.len() as u32).to_le_bytes())?;
            for &(l, off) in list {
                w.write_all(&l.to_le_bytes())?;
                w.write_all(&off.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<HornIndex, CodecError> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        let mut rd = ByteReader {
            buf: &data,
            at: 0,
            widths: 0,
        };
        if rd.take(6)? != HORN_INDEX_MAGIC {
            return Err(CodecError::BadMagic);
        }
        let n = rd.u32()? as usize;
        let mut per_vertex = Vec::with_capacity(n);
        for _ in 0..n {
            let k = rd.u32()? as usize;
            let mut list = Vec::with_capacity(k);
            for _ in 0..k {
                list.push((rd.u32()?, rd.u32()?));
            }
            per_vertex.push(list);
        }
        Ok(HornIndex { per_vertex })
    }
}
