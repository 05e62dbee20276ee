use serde::{Deserialize, Serialize};

use super::template::{cubic, smooth_chain, GlyphTemplate, Point};
use crate::error::{Error, Result};
use crate::rng;
use crate::types::{SensorSample, SensorSequence, MAX_ACCEL_G, MAX_GYRO_DPS, SAMPLE_INTERVAL_MS};

/// Standard gravity, m/s² per g.
pub const STANDARD_GRAVITY: f64 = 9.80665;
/// Side of the unit box in metres at `size_scale = 1`.
pub const GLYPH_SIZE_M: f64 = 0.02;
/// Pen travel between strokes of one glyph.
pub const BRIDGE_MS: u64 = 50;
/// Gyro tremor in °/s per g of accelerometer tremor.
pub const TREMOR_GYRO_DPS_PER_G: f64 = 50.0;

const ARC_TABLE_STEPS: usize = 64;
const DT_S: f64 = SAMPLE_INTERVAL_MS as f64 / 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WriterStyle {
    pub id: String,
    pub speed_scale: f64,
    pub size_scale: f64,
    pub slant_rad: f64,
    /// Additive sensor tremor, in g on the accelerometer channels.
    pub tremor_sigma: f64,
    /// Per-glyph control-point offset fixed for this writer (unit-box units).
    pub glyph_jitter_sigma: f64,
    /// Fresh control-point offset for every sample (unit-box units).
    pub sample_jitter_sigma: f64,
    pub rng_seed: u64,
}

impl WriterStyle {
    /// A neutral writer with no noise of any kind.
    pub fn plain(id: impl Into<String>) -> Self {
        WriterStyle {
            id: id.into(),
            speed_scale: 1.0,
            size_scale: 1.0,
            slant_rad: 0.0,
            tremor_sigma: 0.0,
            glyph_jitter_sigma: 0.0,
            sample_jitter_sigma: 0.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.speed_scale > 0.0
            && self.size_scale > 0.0
            && self.slant_rad.is_finite()
            && self.slant_rad.abs() < std::f64::consts::FRAC_PI_2
            && self.tremor_sigma >= 0.0
            && self.glyph_jitter_sigma >= 0.0
            && self.sample_jitter_sigma >= 0.0;
        if !ok || self.id.is_empty() {
            return Err(Error::Config(format!("invalid writer style {:?}", self.id)));
        }
        Ok(())
    }

    /// `n` writers `w0..`, with speed and slant spread evenly over fixed ranges
    /// (the slant order is shuffled) so every pair differs in both.
    pub fn population(n: usize, seed: u64) -> Vec<WriterStyle> {
        let mut r = rng::stream(rng::derive_seed_str(seed, "writers"));
        let mut slant_rank: Vec<usize> = (0..n).collect();
        rng::shuffle(&mut slant_rank, &mut r);
        let frac = |k: usize| {
            if n > 1 {
                k as f64 / (n - 1) as f64
            } else {
                0.5
            }
        };
        (0..n)
            .map(|k| WriterStyle {
                id: format!("w{k}"),
                speed_scale: 0.8 + 0.4 * frac(k),
                size_scale: rng::uniform(&mut r, 0.85, 1.15),
                slant_rad: -0.3 + 0.6 * frac(slant_rank[k]),
                tremor_sigma: 0.05,
                glyph_jitter_sigma: 0.05,
                sample_jitter_sigma: 0.07,
                rng_seed: rng::derive_seed(seed, k as u64),
            })
            .collect()
    }
}

/// Arc-length lookup for one Bezier chain: cumulative length at evenly spaced
/// parameter values.
struct ArcTable<'a> {
    chain: &'a [Point],
    cum: Vec<f64>,
}

impl<'a> ArcTable<'a> {
    fn new(chain: &'a [Point]) -> Self {
        let segs = (chain.len() - 1) / 3;
        let mut cum = vec![0.0];
        let mut prev = chain[0];
        for s in 0..segs {
            for k in 1..=ARC_TABLE_STEPS {
                let p = cubic(&chain[3 * s..3 * s + 4], k as f64 / ARC_TABLE_STEPS as f64);
                let last = *cum.last().unwrap();
                cum.push(last + dist(prev, p));
                prev = p;
            }
        }
        ArcTable { chain, cum }
    }

    fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Point at arc length `s`, via the parameter interpolated from the table.
    fn at(&self, s: f64) -> Point {
        let last = self.cum.len() - 1;
        let s = s.clamp(0.0, self.length());
        let k = self.cum.partition_point(|&c| c < s).clamp(1, last);
        let span = self.cum[k] - self.cum[k - 1];
        let frac = if span > 0.0 { (s - self.cum[k - 1]) / span } else { 0.0 };
        let global = (k - 1) as f64 + frac;
        let seg = ((global / ARC_TABLE_STEPS as f64) as usize).min((self.chain.len() - 1) / 3 - 1);
        let u = global / ARC_TABLE_STEPS as f64 - seg as f64;
        cubic(&self.chain[3 * seg..3 * seg + 4], u)
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Splits `total` samples across strokes in proportion to length, at least
/// two each (largest remainder).
fn allocate(lengths: &[f64], total: usize) -> Vec<usize> {
    let n = lengths.len();
    let spare = total.saturating_sub(2 * n);
    let sum: f64 = lengths.iter().sum();
    let shares: Vec<f64> =
        lengths.iter().map(|&l| if sum > 0.0 { spare as f64 * l / sum } else { spare as f64 / n as f64 }).collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut left = spare - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts.iter().map(|c| c + 2).collect()
}

/// Samples a glyph as pen positions (metres) every 10 ms.
///
/// Control points get the writer's persistent per-glyph offset and a fresh
/// per-sample offset, joints are re-smoothed, then slant and size are applied.
/// Each stroke moves at constant speed; strokes are joined by a smoothstep
/// bridge of [`BRIDGE_MS`].
pub fn glyph_trajectory(tmpl: &GlyphTemplate, style: &WriterStyle, seed: u64) -> Result<Vec<Point>> {
    tmpl.validate()?;
    style.validate()?;
    let mut persistent = rng::stream(rng::derive_seed_str(style.rng_seed, &tmpl.glyph.to_string()));
    let mut fresh = rng::stream(seed);
    let shear = style.slant_rad.tan();
    let scale = style.size_scale * GLYPH_SIZE_M;
    let strokes: Vec<Vec<Point>> = tmpl
        .strokes
        .iter()
        .map(|s| {
            let closed = s.first() == s.last();
            let mut pts: Vec<Point> = s
                .iter()
                .map(|p| {
                    let mut q = *p;
                    for v in &mut q {
                        *v += rng::normal(&mut persistent, 0.0, style.glyph_jitter_sigma)
                            + rng::normal(&mut fresh, 0.0, style.sample_jitter_sigma);
                    }
                    q
                })
                .collect();
            if closed {
                let n = pts.len();
                pts[n - 1] = pts[0];
            }
            smooth_chain(&mut pts);
            pts.iter()
                .map(|&[x, y]| {
                    let (x, y) = (x - 0.5, y - 0.5);
                    [(x + y * shear) * scale, y * scale]
                })
                .collect()
        })
        .collect();

    let tables: Vec<ArcTable> = strokes.iter().map(|s| ArcTable::new(s)).collect();
    if tables.iter().all(|t| t.length() == 0.0) {
        return Err(Error::DegenerateTemplate(format!("{}: zero-length path", tmpl.glyph.glyph)));
    }
    let bridge = (BRIDGE_MS / SAMPLE_INTERVAL_MS) as usize - 1;
    let target = (tmpl.duration_ms / SAMPLE_INTERVAL_MS as f64 / style.speed_scale).round() as usize;
    let stroke_samples = target.saturating_sub(bridge * (strokes.len() - 1));
    let lengths: Vec<f64> = tables.iter().map(ArcTable::length).collect();
    let counts = allocate(&lengths, stroke_samples);

    let mut path: Vec<Point> = Vec::with_capacity(target);
    for (i, (table, &n)) in tables.iter().zip(&counts).enumerate() {
        if i > 0 {
            let from = *path.last().unwrap();
            let to = table.at(0.0);
            for k in 1..=bridge {
                let u = k as f64 / (bridge + 1) as f64;
                let w = u * u * (3.0 - 2.0 * u);
                path.push([from[0] + (to[0] - from[0]) * w, from[1] + (to[1] - from[1]) * w]);
            }
        }
        let len = table.length();
        for k in 0..n {
            path.push(table.at(len * k as f64 / (n - 1) as f64));
        }
    }
    Ok(path)
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    a - two_pi * ((a + std::f64::consts::PI) / two_pi).floor()
}

/// Converts a planar path (metres, 10 ms steps) to IMU samples under a fixed
/// device orientation.
///
/// Planar acceleration comes from second central differences, heading rate
/// from the turn between consecutive path segments; both copy their
/// neighbour at the endpoints. `gravity_g` is added to the accelerometer and
/// every channel gets normal tremor. Values are clamped to the sensor range.
pub fn trajectory_to_imu(
    path: &[Point],
    style: &WriterStyle,
    gravity_g: [f64; 3],
    seed: u64,
) -> Result<SensorSequence> {
    let n = path.len();
    if n < 3 {
        return Err(Error::PathTooShort(n));
    }
    let mut accel = vec![[0.0; 2]; n];
    for t in 1..n - 1 {
        for a in 0..2 {
            accel[t][a] = (path[t + 1][a] - 2.0 * path[t][a] + path[t - 1][a]) / (DT_S * DT_S) / STANDARD_GRAVITY;
        }
    }
    accel[0] = accel[1];
    accel[n - 1] = accel[n - 2];

    // Heading of each segment p[t] → p[t+1]; a stationary segment keeps the previous one.
    let mut heading = vec![0.0; n - 1];
    let mut last = None;
    for t in 0..n - 1 {
        let (vx, vy) = (path[t + 1][0] - path[t][0], path[t + 1][1] - path[t][1]);
        heading[t] = if vx.hypot(vy) > 1e-15 { vy.atan2(vx) } else { last.unwrap_or(0.0) };
        last = Some(heading[t]);
    }
    let mut yaw = vec![0.0; n];
    for t in 1..n - 1 {
        yaw[t] = wrap_angle(heading[t] - heading[t - 1]).to_degrees() / DT_S;
    }
    yaw[0] = yaw[1];
    yaw[n - 1] = yaw[n - 2];

    let mut r = rng::stream(seed);
    let sa = style.tremor_sigma;
    let sg = style.tremor_sigma * TREMOR_GYRO_DPS_PER_G;
    let samples = (0..n)
        .map(|t| {
            let mut ch = [
                accel[t][0] + gravity_g[0] + rng::normal(&mut r, 0.0, sa),
                accel[t][1] + gravity_g[1] + rng::normal(&mut r, 0.0, sa),
                gravity_g[2] + rng::normal(&mut r, 0.0, sa),
                rng::normal(&mut r, 0.0, sg),
                rng::normal(&mut r, 0.0, sg),
                yaw[t] + rng::normal(&mut r, 0.0, sg),
            ];
            for (k, v) in ch.iter_mut().enumerate() {
                let lim = if k < 3 { MAX_ACCEL_G } else { MAX_GYRO_DPS };
                *v = v.clamp(-lim, lim);
            }
            SensorSample::new(t as u64 * SAMPLE_INTERVAL_MS, ch)
        })
        .collect();
    Ok(SensorSequence::new(samples))
}
