//! Scaling, augmentation, batch padding and the train/test split protocols.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{ChannelMatrix, Dataset, LabeledSequence, Origin, SensorSequence, AUGMENT_ID_SEPARATOR, CHANNELS};

/// Min-max scales every channel independently to [-1, 1]. Constant rows map to 0.
pub fn scale_sequence(m: &ChannelMatrix) -> Result<ChannelMatrix> {
    if m.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scale_sequence input".into()));
    }
    let mut out = m.clone();
    for c in 0..CHANNELS {
        let row = out.row_mut(c);
        let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi == lo {
            row.fill(0.0);
            continue;
        }
        let span = hi - lo;
        for v in row.iter_mut() {
            *v = if *v == lo {
                -1.0
            } else if *v == hi {
                1.0
            } else {
                (2.0 * (*v - lo) / span - 1.0).clamp(-1.0, 1.0)
            };
        }
    }
    Ok(out)
}

/// Averages each channel over windows of `window` columns advanced by `stride`.
/// Output length is `(T - window) / stride + 1`.
pub fn window_average(m: &ChannelMatrix, window: usize, stride: usize) -> Result<ChannelMatrix> {
    if window == 0 || stride == 0 {
        return Err(Error::Config("window and stride must be at least 1".into()));
    }
    let t = m.cols();
    if window > t {
        return Err(Error::WindowTooLarge);
    }
    let out_len = (t - window) / stride + 1;
    let mut out = ChannelMatrix::zeros(out_len);
    let n = window as f64;
    for c in 0..CHANNELS {
        let src = m.row(c);
        for (k, dst) in out.row_mut(c).iter_mut().enumerate() {
            let start = k * stride;
            *dst = src[start..start + window].iter().sum::<f64>() / n;
        }
    }
    Ok(out)
}

/// Adds i.i.d. normal noise with standard deviation `sigma` to every entry.
pub fn add_gaussian_noise(m: &ChannelMatrix, sigma: f64, seed: u64) -> ChannelMatrix {
    add_row_noise(m, &[sigma; CHANNELS], seed)
}

/// Per-row standard deviations; draws are taken row by row, column by column.
fn add_row_noise(m: &ChannelMatrix, sigmas: &[f64; CHANNELS], seed: u64) -> ChannelMatrix {
    let mut out = m.clone();
    if sigmas.iter().all(|&s| s == 0.0) {
        return out;
    }
    let mut r = rng::stream(seed);
    for (c, &sigma) in sigmas.iter().enumerate() {
        for v in out.row_mut(c) {
            *v += sigma * rng::standard_normal(&mut r);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Window sizes N.
    pub windows: Vec<usize>,
    /// Strides M; every (N, M) pair yields one averaged copy.
    pub strides: Vec<usize>,
    /// Noise standard deviation in scaled ([-1, 1]) units.
    pub noise_sigma: f64,
    pub noise_copies: usize,
    /// Replace each sequence by its average over the first (N, M) pair instead
    /// of adding copies.
    pub in_place: bool,
    pub rng_seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            windows: vec![2, 3],
            strides: vec![1, 2],
            noise_sigma: 0.05,
            noise_copies: 2,
            in_place: false,
            rng_seed: 0,
        }
    }
}

impl AugmentConfig {
    /// Leaves datasets untouched.
    pub fn none() -> Self {
        AugmentConfig {
            windows: vec![],
            strides: vec![],
            noise_sigma: 0.0,
            noise_copies: 0,
            in_place: false,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.windows.contains(&0) || self.strides.contains(&0) {
            return Err(Error::Config("window sizes and strides must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be finite and >= 0".into()));
        }
        if self.in_place && (self.windows.is_empty() || self.strides.is_empty()) {
            return Err(Error::Config("in-place averaging needs a window and a stride".into()));
        }
        Ok(())
    }
}

fn derived(parent: &LabeledSequence, tag: &str, m: &ChannelMatrix) -> Result<LabeledSequence> {
    Ok(LabeledSequence {
        id: format!("{}{AUGMENT_ID_SEPARATOR}{tag}", parent.id),
        sequence: SensorSequence::from_matrix_nominal(&scale_sequence(m)?),
        label: parent.label,
        writer_id: parent.writer_id.clone(),
        origin: Origin::Augmented,
        parent_id: Some(parent.id.clone()),
    })
}

/// Expands a dataset with window-averaged and noisy copies of every original.
///
/// Copies are scaled to [-1, 1] after averaging and noise, and carry timestamps
/// on the nominal 10 ms grid. Items that are already augmented pass through
/// without spawning further copies. With `in_place`, each original is replaced
/// by its (first window, first stride) average (when it fits) and keeps its id
/// and origin; noisy copies are then drawn from the averaged version.
pub fn augment(ds: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut items = Vec::with_capacity(ds.len());
    for item in &ds.items {
        if item.origin == Origin::Augmented {
            items.push(item.clone());
            continue;
        }
        let mut base_item = item.clone();
        let mut m = item.sequence.to_matrix()?;
        if cfg.in_place {
            let (n, s) = (cfg.windows[0], cfg.strides[0]);
            if n <= m.cols() {
                m = window_average(&m, n, s)?;
                base_item.sequence = SensorSequence::from_matrix_nominal(&m);
            }
            items.push(base_item.clone());
        } else {
            items.push(base_item.clone());
            for &n in &cfg.windows {
                for &s in &cfg.strides {
                    if n <= m.cols() {
                        let avg = window_average(&m, n, s)?;
                        items.push(derived(&base_item, &format!("avg{n}x{s}"), &avg)?);
                    }
                }
            }
        }
        if cfg.noise_copies > 0 {
            // sigma is given in scaled units; convert per row with the row's half-range.
            let sigmas: [f64; CHANNELS] = std::array::from_fn(|c| {
                let row = m.row(c);
                let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                cfg.noise_sigma * (hi - lo) / 2.0
            });
            let item_seed = rng::derive_seed_str(cfg.rng_seed, &item.id);
            for k in 0..cfg.noise_copies {
                let noisy = add_row_noise(&m, &sigmas, rng::derive_seed(item_seed, k as u64));
                items.push(derived(&base_item, &format!("noise{k}"), &noisy)?);
            }
        }
    }
    Ok(ds.with_items(items))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Train on one group of writers, test on a disjoint group.
    WriterDisjoint,
    /// Stratified random split over all writers.
    Pooled,
    /// Train on part of the known writers' data; test on the rest of it plus unknown writers.
    Mixed,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::WriterDisjoint => "writer-disjoint",
            Protocol::Pooled => "pooled",
            Protocol::Mixed => "mixed",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "writer-disjoint" | "writer_disjoint" | "disjoint" => Ok(Protocol::WriterDisjoint),
            "pooled" => Ok(Protocol::Pooled),
            "mixed" => Ok(Protocol::Mixed),
            other => Err(Error::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub protocol: Protocol,
    pub train_writers: BTreeSet<String>,
    pub test_writers: BTreeSet<String>,
    pub test_fraction: f64,
    pub rng_seed: u64,
}

impl SplitSpec {
    pub fn pooled(test_fraction: f64, rng_seed: u64) -> Self {
        SplitSpec {
            protocol: Protocol::Pooled,
            train_writers: BTreeSet::new(),
            test_writers: BTreeSet::new(),
            test_fraction,
            rng_seed,
        }
    }

    pub fn writer_disjoint<S: Into<String>>(
        train: impl IntoIterator<Item = S>,
        test: impl IntoIterator<Item = S>,
        rng_seed: u64,
    ) -> Self {
        SplitSpec {
            protocol: Protocol::WriterDisjoint,
            train_writers: train.into_iter().map(Into::into).collect(),
            test_writers: test.into_iter().map(Into::into).collect(),
            test_fraction: 0.2,
            rng_seed,
        }
    }

    /// `unknown` writers are added to the test writers next to the known ones.
    pub fn mixed<S: Into<String>>(
        known: impl IntoIterator<Item = S>,
        unknown: impl IntoIterator<Item = S>,
        test_fraction: f64,
        rng_seed: u64,
    ) -> Self {
        let train_writers: BTreeSet<String> = known.into_iter().map(Into::into).collect();
        let mut test_writers = train_writers.clone();
        test_writers.extend(unknown.into_iter().map(Into::into));
        SplitSpec { protocol: Protocol::Mixed, train_writers, test_writers, test_fraction, rng_seed }
    }

    /// Builds the spec for `protocol` from the first `n_train` writers (in
    /// sorted order) as the known group and the rest as the other group.
    pub fn for_writers(
        protocol: Protocol,
        writers: &[String],
        n_train: usize,
        test_fraction: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        let mut sorted = writers.to_vec();
        sorted.sort();
        sorted.dedup();
        if protocol != Protocol::Pooled && (n_train == 0 || n_train >= sorted.len()) {
            return Err(Error::InvalidSplit(format!(
                "need between 1 and {} training writers, got {n_train}",
                sorted.len().saturating_sub(1)
            )));
        }
        let (known, other) = sorted.split_at(n_train.min(sorted.len()));
        Ok(match protocol {
            Protocol::Pooled => SplitSpec::pooled(test_fraction, rng_seed),
            Protocol::WriterDisjoint => {
                SplitSpec { test_fraction, ..SplitSpec::writer_disjoint(known.to_vec(), other.to_vec(), rng_seed) }
            }
            Protocol::Mixed => SplitSpec::mixed(known.to_vec(), other.to_vec(), test_fraction, rng_seed),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidSplit("test_fraction must lie in (0, 1)".into()));
        }
        match self.protocol {
            Protocol::Pooled => Ok(()),
            Protocol::WriterDisjoint => {
                if self.train_writers.is_empty() || self.test_writers.is_empty() {
                    return Err(Error::InvalidSplit("writer sets must be nonempty".into()));
                }
                if !self.train_writers.is_disjoint(&self.test_writers) {
                    return Err(Error::InvalidSplit("writer sets must be disjoint".into()));
                }
                Ok(())
            }
            Protocol::Mixed => {
                if self.train_writers.is_empty() {
                    return Err(Error::InvalidSplit("no known writers".into()));
                }
                if !self.test_writers.is_superset(&self.train_writers)
                    || self.test_writers.len() == self.train_writers.len()
                {
                    return Err(Error::InvalidSplit(
                        "mixed test writers must include every known writer plus an unknown one".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Writers tested on but never trained on.
    pub fn unknown_writers(&self) -> BTreeSet<String> {
        self.test_writers.difference(&self.train_writers).cloned().collect()
    }
}

/// Original items grouped with their augmented descendants, keyed by lineage root.
struct Lineage<'a> {
    roots: Vec<&'a LabeledSequence>,
    children: HashMap<&'a str, Vec<&'a LabeledSequence>>,
}

impl<'a> Lineage<'a> {
    fn of(ds: &'a Dataset) -> Self {
        let mut roots = Vec::new();
        let mut children: HashMap<&str, Vec<&LabeledSequence>> = HashMap::new();
        for it in &ds.items {
            match &it.parent_id {
                Some(p) => children.entry(p.as_str()).or_default().push(it),
                None => roots.push(it),
            }
        }
        Lineage { roots, children }
    }
}

/// Per-class stratified random selection of `fraction` of `items` (rounded).
/// Returns (selected, rest), each in input order.
fn stratified<'a>(
    items: &[&'a LabeledSequence],
    fraction: f64,
    seed: u64,
) -> (Vec<&'a LabeledSequence>, Vec<&'a LabeledSequence>) {
    let mut by_class: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for (k, it) in items.iter().enumerate() {
        by_class.entry(&it.label).or_default().push(k);
    }
    let mut chosen = vec![false; items.len()];
    let mut r = rng::stream(seed);
    for idx in by_class.values_mut() {
        rng::shuffle(idx, &mut r);
        let n = (fraction * idx.len() as f64).round() as usize;
        for &k in &idx[..n.min(idx.len())] {
            chosen[k] = true;
        }
    }
    let mut sel = Vec::new();
    let mut rest = Vec::new();
    for (k, it) in items.iter().enumerate() {
        if chosen[k] {
            sel.push(*it);
        } else {
            rest.push(*it);
        }
    }
    (sel, rest)
}

/// Partitions a dataset into (train, test) under one of the three protocols.
///
/// Decisions are made on original items; augmented descendants follow their
/// parent into train and are dropped when the parent lands in test.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let present: BTreeSet<String> = ds.writers().into_iter().collect();
    if spec.protocol != Protocol::Pooled {
        if let Some(w) = spec.train_writers.union(&spec.test_writers).find(|w| !present.contains(*w)) {
            return Err(Error::InvalidSplit(format!("writer {w} not in dataset")));
        }
    }
    let lineage = Lineage::of(ds);
    let of_writers = |set: &BTreeSet<String>| -> Vec<&LabeledSequence> {
        lineage.roots.iter().copied().filter(|it| set.contains(&it.writer_id)).collect()
    };
    let (train_roots, test_roots) = match spec.protocol {
        Protocol::Pooled => {
            let (test, train) = stratified(&lineage.roots, spec.test_fraction, spec.rng_seed);
            (train, test)
        }
        Protocol::WriterDisjoint => (of_writers(&spec.train_writers), of_writers(&spec.test_writers)),
        Protocol::Mixed => {
            let known = of_writers(&spec.train_writers);
            let (held, train) = stratified(&known, spec.test_fraction, spec.rng_seed);
            let mut test = held;
            test.extend(of_writers(&spec.unknown_writers()));
            (train, test)
        }
    };
    if train_roots.is_empty() || test_roots.is_empty() {
        return Err(Error::DegenerateSplit(format!("{} train / {} test items", train_roots.len(), test_roots.len())));
    }
    let mut train = Vec::new();
    for root in &train_roots {
        train.push((*root).clone());
        if let Some(kids) = lineage.children.get(root.id.as_str()) {
            train.extend(kids.iter().map(|k| (*k).clone()));
        }
    }
    // Orphaned augmented items (parent absent) stay out of both sides.
    let test = test_roots.into_iter().cloned().collect();
    Ok((ds.with_items(train), ds.with_items(test)))
}

/// Stratified subset of original items: `fraction` of each class goes to
/// the first returned dataset. Used for validation carving.
pub fn stratified_holdout(ds: &Dataset, fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let lineage = Lineage::of(ds);
    let (held, _) = stratified(&lineage.roots, fraction, seed);
    let held_ids: HashSet<&str> = held.iter().map(|it| it.id.as_str()).collect();
    let held_items = held.into_iter().cloned().collect();
    let rest_items = ds.items.iter().filter(|it| !held_ids.contains(it.lineage_root())).cloned().collect();
    (ds.with_items(held_items), ds.with_items(rest_items))
}

/// Keeps at most `per_class` original items of each class (seeded choice),
/// together with their augmented descendants.
pub fn subsample_per_class(ds: &Dataset, per_class: usize, seed: u64) -> Dataset {
    let lineage = Lineage::of(ds);
    let mut by_class: BTreeMap<_, Vec<&LabeledSequence>> = BTreeMap::new();
    for it in &lineage.roots {
        by_class.entry(&it.label).or_default().push(*it);
    }
    let mut r = rng::stream(seed);
    let mut keep: HashSet<&str> = HashSet::new();
    for items in by_class.values_mut() {
        rng::shuffle(items, &mut r);
        keep.extend(items.iter().take(per_class).map(|it| it.id.as_str()));
    }
    ds.with_items(ds.items.iter().filter(|it| keep.contains(it.lineage_root())).cloned().collect())
}

/// Zero-padded batch in time-major layout: `data[b][t][c]` flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBatch {
    pub data: Vec<f64>,
    pub batch: usize,
    pub max_len: usize,
    pub lengths: Vec<usize>,
}

impl PaddedBatch {
    /// The `T_max × 6` block of item `b`.
    pub fn item(&self, b: usize) -> &[f64] {
        let stride = self.max_len * CHANNELS;
        &self.data[b * stride..(b + 1) * stride]
    }
}

/// Transposes each matrix to T×6 and zero-pads at the end to the longest length.
pub fn pad_batch(items: &[ChannelMatrix]) -> Result<PaddedBatch> {
    if items.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let max_len = items.iter().map(ChannelMatrix::cols).max().unwrap_or(0);
    let stride = max_len * CHANNELS;
    let mut data = vec![0.0; items.len() * stride];
    for (b, m) in items.iter().enumerate() {
        let tm = m.to_time_major();
        data[b * stride..b * stride + tm.len()].copy_from_slice(&tm);
    }
    Ok(PaddedBatch { data, batch: items.len(), max_len, lengths: items.iter().map(ChannelMatrix::cols).collect() })
}
