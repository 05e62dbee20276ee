//! Sensor data model shared by every stage of the pipeline.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of sensor channels: three accelerometer axes then three gyroscope axes.
pub const CHANNELS: usize = 6;
/// Channel names in canonical row order.
pub const CHANNEL_NAMES: [&str; CHANNELS] = ["ax", "ay", "az", "gx", "gy", "gz"];
/// Device sampling interval.
pub const SAMPLE_INTERVAL_MS: u64 = 10;
/// Allowed per-step deviation from the nominal interval on ingested data.
pub const TIMING_TOLERANCE_MS: u64 = 2;
/// Accelerometer full-scale bound, g.
pub const MAX_ACCEL_G: f64 = 16.0;
/// Gyroscope full-scale bound, degrees per second.
pub const MAX_GYRO_DPS: f64 = 2000.0;

/// One reading: acceleration in g and angular velocity in degrees per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub t_ms: u64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
}

impl SensorSample {
    pub fn new(t_ms: u64, channels: [f64; CHANNELS]) -> Self {
        let [ax, ay, az, gx, gy, gz] = channels;
        SensorSample { t_ms, ax, ay, az, gx, gy, gz }
    }

    pub fn channels(&self) -> [f64; CHANNELS] {
        [self.ax, self.ay, self.az, self.gx, self.gy, self.gz]
    }
}

/// A rule broken by a sequence; produced by [`SensorSequence::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at index {}", self.rule, self.index)
    }
}

/// Time-ordered readings captured while one character was written.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorSequence {
    pub samples: Vec<SensorSample>,
}

impl SensorSequence {
    pub fn new(samples: Vec<SensorSample>) -> Self {
        SensorSequence { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamps(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.t_ms).collect()
    }

    /// Checks every sequence invariant and reports each broken rule.
    ///
    /// With `strict_timing` the step between samples must be exactly 10 ms,
    /// otherwise 10 ± 2 ms is accepted.
    pub fn validate(&self, strict_timing: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.samples.is_empty() {
            out.push(Violation { index: 0, rule: "empty sequence".into() });
            return out;
        }
        let tolerance = if strict_timing { 0 } else { TIMING_TOLERANCE_MS };
        for (i, s) in self.samples.iter().enumerate() {
            for (c, v) in s.channels().iter().enumerate() {
                let name = CHANNEL_NAMES[c];
                if !v.is_finite() {
                    out.push(Violation { index: i, rule: format!("non-finite channel {name}") });
                    continue;
                }
                let bound = if c < 3 { MAX_ACCEL_G } else { MAX_GYRO_DPS };
                if v.abs() > bound {
                    out.push(Violation { index: i, rule: format!("channel {name} out of sensor range") });
                }
            }
            if i > 0 {
                let prev = self.samples[i - 1].t_ms;
                if s.t_ms <= prev {
                    out.push(Violation { index: i, rule: "non-increasing timestamp".into() });
                } else if (s.t_ms - prev).abs_diff(SAMPLE_INTERVAL_MS) > tolerance {
                    out.push(Violation { index: i, rule: format!("timestep {} ms off nominal", s.t_ms - prev) });
                }
            }
        }
        out
    }

    /// 6×T view, rows `[ax, ay, az, gx, gy, gz]`, column j = sample j.
    pub fn to_matrix(&self) -> Result<ChannelMatrix> {
        if self.samples.is_empty() {
            return Err(Error::EmptySequence);
        }
        let t = self.samples.len();
        let mut m = ChannelMatrix::zeros(t);
        for (j, s) in self.samples.iter().enumerate() {
            for (c, v) in s.channels().into_iter().enumerate() {
                m.set(c, j, v);
            }
        }
        Ok(m)
    }

    /// Inverse of [`to_matrix`](Self::to_matrix) given the original timestamps.
    pub fn from_matrix(m: &ChannelMatrix, timestamps: &[u64]) -> Result<Self> {
        if m.cols() != timestamps.len() {
            return Err(Error::LengthMismatch(m.cols(), timestamps.len()));
        }
        let samples = timestamps.iter().enumerate().map(|(j, &t)| SensorSample::new(t, m.column(j))).collect();
        Ok(SensorSequence { samples })
    }

    /// Like [`from_matrix`](Self::from_matrix) with timestamps on the nominal 10 ms grid.
    pub fn from_matrix_nominal(m: &ChannelMatrix) -> Self {
        let ts: Vec<u64> = (0..m.cols() as u64).map(|j| j * SAMPLE_INTERVAL_MS).collect();
        Self::from_matrix(m, &ts).expect("lengths agree by construction")
    }
}

/// Dense 6×T matrix stored row-major (one contiguous row per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    cols: usize,
    data: Vec<f64>,
}

impl ChannelMatrix {
    pub fn zeros(cols: usize) -> Self {
        ChannelMatrix { cols, data: vec![0.0; CHANNELS * cols] }
    }

    /// Builds from six rows of equal length.
    pub fn from_rows(rows: [Vec<f64>; CHANNELS]) -> Result<Self> {
        let cols = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Shape(format!("row lengths differ: {} vs {}", r.len(), cols)));
        }
        Ok(ChannelMatrix { cols, data: rows.concat() })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> [f64; CHANNELS] {
        std::array::from_fn(|c| self.get(c, col))
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Time-major copy (T×6, row-major), the layout the network consumes.
    pub fn to_time_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            out.extend(self.column(j));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    Latin,
    Georgian,
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alphabet::Latin => "latin",
            Alphabet::Georgian => "georgian",
        })
    }
}

impl FromStr for Alphabet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "latin" => Ok(Alphabet::Latin),
            "georgian" => Ok(Alphabet::Georgian),
            other => Err(Error::InvalidDataset(format!("unknown alphabet {other:?}"))),
        }
    }
}

/// A character class: position within its alphabet's class list plus the glyph drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharacterLabel {
    pub alphabet: Alphabet,
    pub char_index: usize,
    pub glyph: char,
}

impl CharacterLabel {
    pub fn new(alphabet: Alphabet, char_index: usize, glyph: char) -> Self {
        CharacterLabel { alphabet, char_index, glyph }
    }
}

impl fmt::Display for CharacterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.alphabet, self.char_index, self.glyph)
    }
}

impl FromStr for CharacterLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDataset(format!("malformed class label {s:?}"));
        let mut parts = s.splitn(3, ':');
        let alphabet = parts.next().ok_or_else(bad)?.parse()?;
        let char_index = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let mut glyph_chars = parts.next().ok_or_else(bad)?.chars();
        let glyph = glyph_chars.next().ok_or_else(bad)?;
        if glyph_chars.next().is_some() {
            return Err(bad());
        }
        Ok(CharacterLabel::new(alphabet, char_index, glyph))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Recorded,
    Synthetic,
    Augmented,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Recorded => "recorded",
            Origin::Synthetic => "synthetic",
            Origin::Augmented => "augmented",
        })
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recorded" => Ok(Origin::Recorded),
            "synthetic" => Ok(Origin::Synthetic),
            "augmented" => Ok(Origin::Augmented),
            other => Err(Error::InvalidDataset(format!("unknown origin {other:?}"))),
        }
    }
}

/// Separator between a parent id and the augmentation tag in derived ids.
pub const AUGMENT_ID_SEPARATOR: char = '~';

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub id: String,
    pub sequence: SensorSequence,
    pub label: CharacterLabel,
    pub writer_id: String,
    pub origin: Origin,
    /// Set exactly when `origin` is `Augmented`.
    pub parent_id: Option<String>,
}

impl LabeledSequence {
    /// The id of the original recording this item descends from (itself if not augmented).
    pub fn lineage_root(&self) -> &str {
        self.parent_id.as_deref().unwrap_or(&self.id)
    }

    /// Parent id encoded in an augmented item's id, if any.
    pub fn parent_from_id(id: &str) -> Option<&str> {
        id.rfind(AUGMENT_ID_SEPARATOR).map(|p| &id[..p])
    }
}

/// Labeled sequences plus the ordered class list that fixes the model's output index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<LabeledSequence>,
    pub class_list: Vec<CharacterLabel>,
    pub metadata: BTreeMap<String, String>,
}

impl Dataset {
    /// Builds a dataset and checks its invariants.
    pub fn new(items: Vec<LabeledSequence>, class_list: Vec<CharacterLabel>) -> Result<Self> {
        let ds = Dataset { items, class_list, metadata: BTreeMap::new() };
        ds.check()?;
        Ok(ds)
    }

    /// Same class list and metadata, different items. Not re-validated.
    pub fn with_items(&self, items: Vec<LabeledSequence>) -> Self {
        Dataset { items, class_list: self.class_list.clone(), metadata: self.metadata.clone() }
    }

    pub fn num_classes(&self) -> usize {
        self.class_list.len()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn class_index(&self, label: &CharacterLabel) -> Option<usize> {
        self.class_list.iter().position(|c| c == label)
    }

    /// Class index for every item, in item order.
    pub fn targets(&self) -> Result<Vec<usize>> {
        self.items
            .iter()
            .map(|it| {
                self.class_index(&it.label)
                    .ok_or_else(|| Error::InvalidDataset(format!("label {} of {} not in class list", it.label, it.id)))
            })
            .collect()
    }

    /// Distinct writer ids in first-appearance order.
    pub fn writers(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.items.iter().filter(|it| seen.insert(it.writer_id.as_str())).map(|it| it.writer_id.clone()).collect()
    }

    pub fn check(&self) -> Result<()> {
        if self.class_list.len() < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 classes, have {}", self.class_list.len())));
        }
        let mut seen = HashSet::new();
        for c in &self.class_list {
            if !seen.insert(c) {
                return Err(Error::InvalidDataset(format!("duplicate class {c}")));
            }
        }
        let mut ids = HashSet::new();
        for it in &self.items {
            if !ids.insert(it.id.as_str()) {
                return Err(Error::DuplicateId(it.id.clone()));
            }
            if it.writer_id.is_empty() {
                return Err(Error::InvalidDataset(format!("{}: empty writer id", it.id)));
            }
            if (it.origin == Origin::Augmented) != it.parent_id.is_some() {
                return Err(Error::InvalidDataset(format!("{}: augmented items must reference a parent", it.id)));
            }
            if self.class_index(&it.label).is_none() {
                return Err(Error::InvalidDataset(format!("{}: label {} not in class list", it.id, it.label)));
            }
        }
        Ok(())
    }
}
