use std::f64::consts::{PI, TAU};

use strokesense::synth::{
    bundled_templates, default_glyphs, generate_dataset, glyph_trajectory, trajectory_to_imu, GlyphTemplate, Point,
    WriterStyle, DEFAULT_GRAVITY_G, STANDARD_GRAVITY,
};
use strokesense::types::{Alphabet, CharacterLabel, MAX_GYRO_DPS};

pub const DT: f64 = 0.01;

pub fn circle_path(radius: f64, period_s: f64, n: usize) -> Vec<Point> {
    let w = TAU / period_s;
    (0..n)
        .map(|k| {
            let t = k as f64 * DT;
            [radius * (w * t).cos(), radius * (w * t).sin()]
        })
        .collect()
}

/// Worst relative deviation of |a| and yaw rate from ω²r and ω, ignoring
/// `skip` samples at each end.
pub fn circle_imu_error(path: &[Point], radius: f64, period_s: f64, skip: usize) -> f64 {
    let imu = trajectory_to_imu(path, &WriterStyle::plain("w"), DEFAULT_GRAVITY_G, 0).unwrap();
    let w = TAU / period_s;
    let accel_g = w * w * radius / STANDARD_GRAVITY;
    let yaw_dps = w.to_degrees();
    let n = imu.len();
    let mut worst: f64 = 0.0;
    for s in &imu.samples[skip..n - skip] {
        let a = s.ax.hypot(s.ay);
        worst = worst.max((a - accel_g).abs() / accel_g).max((s.gz - yaw_dps).abs() / yaw_dps);
        assert!((s.az - 1.0).abs() < 1e-12 && s.gx == 0.0 && s.gy == 0.0);
    }
    worst
}

pub fn sampled_circles_error() -> f64 {
    [(0.01, 1.0), (0.005, 0.4), (0.02, 2.5)]
        .into_iter()
        .map(|(r, period)| {
            let n = (2.0 * period / DT) as usize;
            circle_imu_error(&circle_path(r, period, n), r, period, 0)
        })
        .fold(0.0, f64::max)
}

/// Eight-segment Bezier circle of radius 0.4 in the unit box.
pub fn circle_template(duration_ms: f64) -> GlyphTemplate {
    let segs = 8;
    let step = TAU / segs as f64;
    let k = 4.0 / 3.0 * (step / 4.0).tan();
    let on = |a: f64| [0.5 + 0.4 * a.cos(), 0.5 + 0.4 * a.sin()];
    let mut pts = vec![on(0.0)];
    for s in 0..segs {
        let (a0, a1) = (s as f64 * step, (s + 1) as f64 * step);
        let (p0, p1) = (on(a0), on(a1));
        pts.push([p0[0] - 0.4 * k * a0.sin(), p0[1] + 0.4 * k * a0.cos()]);
        pts.push([p1[0] + 0.4 * k * a1.sin(), p1[1] - 0.4 * k * a1.cos()]);
        pts.push(p1);
    }
    GlyphTemplate { glyph: CharacterLabel::new(Alphabet::Latin, 14, 'o'), strokes: vec![pts], duration_ms }
}

/// A one-second circle template through the trajectory and IMU stages.
pub fn template_circle_error() -> f64 {
    let tmpl = circle_template(1000.0);
    let path = glyph_trajectory(&tmpl, &WriterStyle::plain("w"), 0).unwrap();
    assert_eq!(path.len(), 100);
    let first = path[0];
    let last = *path.last().unwrap();
    assert!((first[0] - last[0]).hypot(first[1] - last[1]) < 1e-9);
    // 0.4 of the unit box at 2 cm per box; one lap in 99 steps.
    let radius = 0.4 * 0.02;
    circle_imu_error(&path, radius, 0.99, 1)
}

/// Inverts the central second difference: p[t+1] = 2p[t] - p[t-1] + a[t] dt².
pub fn integrate(accel: &[[f64; 2]], p0: Point, p1: Point) -> Vec<Point> {
    let mut out = vec![p0, p1];
    for t in 1..accel.len() - 1 {
        let (a, b) = (out[t - 1], out[t]);
        out.push([2.0 * b[0] - a[0] + accel[t][0] * DT * DT, 2.0 * b[1] - a[1] + accel[t][1] * DT * DT]);
    }
    out
}

/// Zero-tremor paths for every template and four writers, recovered from the
/// accelerometer. Also checks the yaw rate against the per-step turn where the
/// gyro is not saturated. Returns the worst relative RMS error.
pub fn double_integration_error() -> f64 {
    let writers = WriterStyle::population(4, 5);
    let mut worst: f64 = 0.0;
    for tmpl in bundled_templates() {
        for w in &writers {
            let style = WriterStyle { tremor_sigma: 0.0, ..w.clone() };
            let path = glyph_trajectory(&tmpl, &style, 3).unwrap();
            let imu = trajectory_to_imu(&path, &style, DEFAULT_GRAVITY_G, 3).unwrap();
            let accel: Vec<[f64; 2]> = imu
                .samples
                .iter()
                .map(|s| {
                    [(s.ax - DEFAULT_GRAVITY_G[0]) * STANDARD_GRAVITY, (s.ay - DEFAULT_GRAVITY_G[1]) * STANDARD_GRAVITY]
                })
                .collect();
            let rec = integrate(&accel, path[0], path[1]);
            let n = path.len() as f64;
            let cx = path.iter().map(|p| p[0]).sum::<f64>() / n;
            let cy = path.iter().map(|p| p[1]).sum::<f64>() / n;
            let err: f64 = path.iter().zip(&rec).map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sum();
            let size: f64 = path.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sum();
            worst = worst.max((err / size).sqrt());

            let heading = |t: usize| (path[t + 1][1] - path[t][1]).atan2(path[t + 1][0] - path[t][0]);
            for t in 1..path.len() - 1 {
                let gz = imu.samples[t].gz;
                if gz.abs() >= MAX_GYRO_DPS {
                    continue;
                }
                let diff = (heading(t) - heading(t - 1) - gz.to_radians() * DT + PI).rem_euclid(TAU) - PI;
                assert!(diff.abs() < 1e-9, "{} step {t}", tmpl.glyph);
            }
        }
    }
    worst
}

/// Generates both alphabets and validates every sequence strictly.
/// Returns the number of sequences checked.
pub fn strict_validation() -> usize {
    let mut n = 0;
    for alphabet in [Alphabet::Latin, Alphabet::Georgian] {
        let glyphs = default_glyphs(alphabet, usize::MAX);
        assert!(glyphs.len() >= 8);
        let ds = generate_dataset(alphabet, &glyphs, &WriterStyle::population(6, 9), 5, 9).unwrap();
        assert_eq!(ds.len(), glyphs.len() * 6 * 5);
        for it in &ds.items {
            let v = it.sequence.validate(true);
            assert!(v.is_empty(), "{}: {:?}", it.id, v);
        }
        n += ds.len();
    }
    n
}
