//! Pen device frame stream and on-disk dataset format.
//!
//! # Wire format
//!
//! One framed unit is 19 bytes:
//!
//! | offset | size | field                                         |
//! |--------|------|-----------------------------------------------|
//! | 0      | 1    | sync `0xA5`                                   |
//! | 1      | 1    | flags: bit0 = button pressed, bits 1-7 zero   |
//! | 2      | 4    | `t_ms`, u32 little-endian                     |
//! | 6      | 12   | six i16 little-endian: ax, ay, az, gx, gy, gz |
//! | 18     | 1    | XOR of bytes 0..18                            |
//!
//! The [`FrameScanner`] strips the sync byte; [`parse_frame`] consumes the
//! remaining 18 bytes.
//!
//! # Dataset layout
//!
//! A manifest CSV with columns `id,writer_id,alphabet,label_index,glyph,origin,file`,
//! preceded by `#`-prefixed header lines carrying the class list and
//! metadata, and one CSV per sequence with columns
//! `t_ms,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    CharacterLabel, Dataset, LabeledSequence, Origin, SensorSample, SensorSequence, SAMPLE_INTERVAL_MS,
};

pub const SYNC: u8 = 0xA5;
/// Sync + flags + time + payload + checksum.
pub const FRAMED_LEN: usize = 19;
/// What [`parse_frame`] consumes: the framed unit minus the sync byte.
pub const BODY_LEN: usize = FRAMED_LEN - 1;
/// Default minimum button-press run kept by [`segment_sessions`] (100 ms).
pub const DEFAULT_MIN_SESSION_FRAMES: usize = 10;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MANIFEST_HEADER: [&str; 7] = ["id", "writer_id", "alphabet", "label_index", "glyph", "origin", "file"];
pub const SEQUENCE_HEADER: [&str; 7] = ["t_ms", "ax_g", "ay_g", "az_g", "gx_dps", "gy_dps", "gz_dps"];
const CLASSES_TAG: &str = "#classes";
const META_TAG: &str = "#meta";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub button: bool,
    pub t_ms: u32,
    /// Raw sensor words, `[ax, ay, az, gx, gy, gz]`.
    pub raw: [i16; 6],
}

/// Sensor sensitivity used to turn raw words into physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationScale {
    pub accel_lsb_per_g: f64,
    pub gyro_lsb_per_dps: f64,
}

impl Default for CalibrationScale {
    fn default() -> Self {
        CalibrationScale { accel_lsb_per_g: 16384.0, gyro_lsb_per_dps: 131.0 }
    }
}

impl CalibrationScale {
    pub fn new(accel_lsb_per_g: f64, gyro_lsb_per_dps: f64) -> Result<Self> {
        if !(accel_lsb_per_g > 0.0 && gyro_lsb_per_dps > 0.0) {
            return Err(Error::Config("calibration scales must be strictly positive".into()));
        }
        Ok(CalibrationScale { accel_lsb_per_g, gyro_lsb_per_dps })
    }
}

fn xor(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

/// Serializes a frame into its 19-byte framed unit.
pub fn encode_frame(f: &Frame) -> [u8; FRAMED_LEN] {
    let mut out = [0u8; FRAMED_LEN];
    out[0] = SYNC;
    out[1] = u8::from(f.button);
    out[2..6].copy_from_slice(&f.t_ms.to_le_bytes());
    for (k, w) in f.raw.iter().enumerate() {
        out[6 + 2 * k..8 + 2 * k].copy_from_slice(&w.to_le_bytes());
    }
    out[FRAMED_LEN - 1] = xor(&out[..FRAMED_LEN - 1]);
    out
}

/// Decodes the 18 bytes following a sync byte.
pub fn parse_frame(body: &[u8]) -> Result<Frame> {
    if body.len() < BODY_LEN {
        return Err(Error::Truncated);
    }
    let body = &body[..BODY_LEN];
    if SYNC ^ xor(&body[..BODY_LEN - 1]) != body[BODY_LEN - 1] {
        return Err(Error::CorruptFrame);
    }
    let flags = body[0];
    if flags & !1 != 0 {
        return Err(Error::CorruptFrame);
    }
    let t_ms = u32::from_le_bytes(body[1..5].try_into().expect("4 bytes"));
    let raw = std::array::from_fn(|k| i16::from_le_bytes([body[5 + 2 * k], body[6 + 2 * k]]));
    Ok(Frame { button: flags & 1 == 1, t_ms, raw })
}

/// Decodes a full framed unit including its sync byte.
pub fn parse_framed(unit: &[u8]) -> Result<Frame> {
    match unit.first() {
        None => Err(Error::Truncated),
        Some(&SYNC) => parse_frame(&unit[1..]),
        Some(_) => Err(Error::Desync),
    }
}

/// A decoded frame and the stream offset of its sync byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScannedFrame {
    pub offset: u64,
    pub frame: Frame,
}

/// Incremental decoder over a byte stream that resynchronizes after lost or
/// corrupted bytes by scanning for the next sync byte that yields a valid checksum.
#[derive(Debug, Default)]
pub struct FrameScanner {
    buf: Vec<u8>,
    /// Stream offset of `buf[0]`.
    base: u64,
    skipped: u64,
}

impl FrameScanner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bytes discarded while hunting for sync.
    pub fn skipped_bytes(&self) -> u64 {
        self.skipped
    }

    /// Appends bytes and returns every frame that is now complete.
    pub fn push(&mut self, bytes: &[u8]) -> Vec<ScannedFrame> {
        self.buf.extend_from_slice(bytes);
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < self.buf.len() {
            if self.buf[pos] != SYNC {
                pos += 1;
                self.skipped += 1;
                continue;
            }
            if self.buf.len() - pos < FRAMED_LEN {
                break;
            }
            match parse_frame(&self.buf[pos + 1..pos + FRAMED_LEN]) {
                Ok(frame) => {
                    out.push(ScannedFrame { offset: self.base + pos as u64, frame });
                    pos += FRAMED_LEN;
                }
                Err(_) => {
                    pos += 1;
                    self.skipped += 1;
                }
            }
        }
        self.buf.drain(..pos);
        self.base += pos as u64;
        out
    }

    /// Bytes left over that never formed a frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }
}

/// Decodes a complete byte stream.
pub fn scan_stream(bytes: &[u8]) -> Vec<Frame> {
    FrameScanner::new().push(bytes).into_iter().map(|s| s.frame).collect()
}

/// Converts raw words to physical units, rebasing time to the first frame.
pub fn frames_to_samples(frames: &[Frame], cal: &CalibrationScale) -> Vec<SensorSample> {
    let Some(first) = frames.first() else {
        return Vec::new();
    };
    let t0 = first.t_ms;
    frames
        .iter()
        .map(|f| {
            let r = f.raw.map(f64::from);
            SensorSample::new(
                u64::from(f.t_ms.saturating_sub(t0)),
                [
                    r[0] / cal.accel_lsb_per_g,
                    r[1] / cal.accel_lsb_per_g,
                    r[2] / cal.accel_lsb_per_g,
                    r[3] / cal.gyro_lsb_per_dps,
                    r[4] / cal.gyro_lsb_per_dps,
                    r[5] / cal.gyro_lsb_per_dps,
                ],
            )
        })
        .collect()
}

/// Splits a frame stream into one sequence per maximal run of pressed-button
/// frames, dropping runs shorter than `min_len`.
pub fn segment_sessions(frames: &[Frame], cal: &CalibrationScale, min_len: usize) -> Vec<SensorSequence> {
    frames
        .chunk_by(|a, b| a.button == b.button)
        .filter(|run| run[0].button && run.len() >= min_len)
        .map(|run| SensorSequence::new(frames_to_samples(run, cal)))
        .collect()
}

/// Inverse of [`frames_to_samples`]: quantizes a sequence to raw words.
/// Values outside the i16 range saturate.
pub fn sequence_to_frames(seq: &SensorSequence, cal: &CalibrationScale, t0_ms: u32, button: bool) -> Vec<Frame> {
    let q = |v: f64, lsb: f64| (v * lsb).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
    seq.samples
        .iter()
        .map(|s| {
            let c = s.channels();
            Frame {
                button,
                t_ms: t0_ms.wrapping_add(s.t_ms as u32),
                raw: [
                    q(c[0], cal.accel_lsb_per_g),
                    q(c[1], cal.accel_lsb_per_g),
                    q(c[2], cal.accel_lsb_per_g),
                    q(c[3], cal.gyro_lsb_per_dps),
                    q(c[4], cal.gyro_lsb_per_dps),
                    q(c[5], cal.gyro_lsb_per_dps),
                ],
            }
        })
        .collect()
}

/// Renders sequences as one continuous stream: each press run is followed by
/// `gap_frames` released-button frames at rest.
pub fn sessions_to_stream(sequences: &[SensorSequence], cal: &CalibrationScale, gap_frames: usize) -> Vec<u8> {
    let mut out = Vec::new();
    let mut t = 0u32;
    let step = SAMPLE_INTERVAL_MS as u32;
    for seq in sequences {
        for f in sequence_to_frames(seq, cal, t, true) {
            out.extend_from_slice(&encode_frame(&f));
        }
        t = t.wrapping_add(step * seq.len() as u32);
        for _ in 0..gap_frames {
            let idle = Frame { button: false, t_ms: t, raw: [0, 0, cal.accel_lsb_per_g.round() as i16, 0, 0, 0] };
            out.extend_from_slice(&encode_frame(&idle));
            t = t.wrapping_add(step);
        }
    }
    out
}

fn fmt_value(v: f64) -> String {
    // 9 significant digits.
    format!("{v:.8e}")
}

fn write_sequence_csv(path: &Path, seq: &SensorSequence) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(SEQUENCE_HEADER).map_err(|e| Error::csv(path, e))?;
    for s in &seq.samples {
        let mut rec = vec![s.t_ms.to_string()];
        rec.extend(s.channels().iter().map(|&v| fmt_value(v)));
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::MalformedCsv { path: path.to_path_buf(), line, message: message.into() }
}

/// Reads one sequence CSV.
pub fn read_sequence_csv(path: &Path) -> Result<SensorSequence> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(SEQUENCE_HEADER) {
        return Err(malformed(path, 1, "unexpected sequence header"));
    }
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let t_ms = rec[0].trim().parse::<u64>().map_err(|e| malformed(path, line, format!("t_ms: {e}")))?;
        let mut ch = [0.0; 6];
        for (k, slot) in ch.iter_mut().enumerate() {
            *slot = rec[k + 1]
                .trim()
                .parse::<f64>()
                .map_err(|e| malformed(path, line, format!("{}: {e}", SEQUENCE_HEADER[k + 1])))?;
        }
        samples.push(SensorSample::new(t_ms, ch));
    }
    Ok(SensorSequence::new(samples))
}

/// Writes `ds` under `dir` and returns the manifest path.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<PathBuf> {
    let seq_dir = dir.join("sequences");
    fs::create_dir_all(&seq_dir).map_err(|e| Error::io(&seq_dir, e))?;
    let manifest = dir.join(MANIFEST_FILE);

    let mut head = String::new();
    head.push_str(CLASSES_TAG);
    for c in &ds.class_list {
        head.push(',');
        head.push_str(&c.to_string());
    }
    head.push('\n');
    for (k, v) in &ds.metadata {
        if k.contains([',', '\n']) || v.contains('\n') {
            return Err(Error::InvalidDataset(format!("metadata entry {k:?} cannot be stored")));
        }
        head.push_str(&format!("{META_TAG},{k},{v}\n"));
    }

    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(MANIFEST_HEADER).map_err(|e| Error::csv(&manifest, e))?;
    for (k, it) in ds.items.iter().enumerate() {
        let rel = format!("sequences/{k:06}.csv");
        write_sequence_csv(&dir.join(&rel), &it.sequence)?;
        w.write_record([
            it.id.as_str(),
            it.writer_id.as_str(),
            &it.label.alphabet.to_string(),
            &it.label.char_index.to_string(),
            &it.label.glyph.to_string(),
            &it.origin.to_string(),
            &rel,
        ])
        .map_err(|e| Error::csv(&manifest, e))?;
    }
    let body = w.into_inner().map_err(|e| Error::io(&manifest, e.into_error()))?;
    let mut f = fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    f.write_all(head.as_bytes()).and_then(|_| f.write_all(&body)).map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}

/// Loads a dataset from its manifest. `manifest` may also be the dataset directory.
pub fn read_dataset(manifest: &Path) -> Result<Dataset> {
    let manifest = if manifest.is_dir() { manifest.join(MANIFEST_FILE) } else { manifest.to_path_buf() };
    let root = manifest.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;

    let mut explicit_classes: Option<Vec<CharacterLabel>> = None;
    let mut metadata = BTreeMap::new();
    let mut header_lines = 0u64;
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        header_lines += 1;
        body_start += line.len();
        let line = line.trim_end_matches(['\n', '\r']);
        if let Some(rest) = line.strip_prefix(CLASSES_TAG) {
            let labels = rest
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<Vec<CharacterLabel>>>()
                .map_err(|e| malformed(&manifest, header_lines, e.to_string()))?;
            explicit_classes = Some(labels);
        } else if let Some(rest) = line.strip_prefix(META_TAG) {
            let mut kv = rest.trim_start_matches(',').splitn(2, ',');
            let k = kv.next().unwrap_or_default();
            let v = kv.next().unwrap_or_default();
            metadata.insert(k.to_string(), v.to_string());
        }
    }

    let mut r = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
    let header = r.headers().map_err(|e| malformed(&manifest, header_lines + 1, e.to_string()))?.clone();
    if header.iter().ne(MANIFEST_HEADER) {
        return Err(malformed(&manifest, header_lines + 1, "unexpected manifest header"));
    }

    let mut items = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut appearance: Vec<CharacterLabel> = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let row = row + 1;
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0) + header_lines;
            malformed(&manifest, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0) + header_lines;
        let id = rec[0].to_string();
        if !seen_ids.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let alphabet = rec[2].parse().map_err(|e: Error| malformed(&manifest, line, e.to_string()))?;
        let char_index = rec[3].parse().map_err(|_| malformed(&manifest, line, "label_index is not an integer"))?;
        let mut glyphs = rec[4].chars();
        let glyph = match (glyphs.next(), glyphs.next()) {
            (Some(g), None) => g,
            _ => return Err(malformed(&manifest, line, "glyph must be one character")),
        };
        let origin: Origin = rec[5].parse().map_err(|e: Error| malformed(&manifest, line, e.to_string()))?;
        let path = root.join(&rec[6]);
        if !path.is_file() {
            return Err(Error::MissingSequenceFile { row, path });
        }
        let sequence = read_sequence_csv(&path)?;
        let label = CharacterLabel::new(alphabet, char_index, glyph);
        if !appearance.contains(&label) {
            appearance.push(label);
        }
        let parent_id = match origin {
            Origin::Augmented => Some(
                LabeledSequence::parent_from_id(&id)
                    .ok_or_else(|| malformed(&manifest, line, "augmented id lacks a parent"))?
                    .to_string(),
            ),
            _ => None,
        };
        items.push(LabeledSequence { id, sequence, label, writer_id: rec[1].to_string(), origin, parent_id });
    }
    let class_list = explicit_classes.unwrap_or(appearance);
    let ds = Dataset { items, class_list, metadata };
    ds.check()?;
    Ok(ds)
}
