use strokesense::preprocess::{add_gaussian_noise, scale_sequence, window_average};
use strokesense::rng::{self, SplitMix64};
use strokesense::types::{ChannelMatrix, CHANNELS};
use strokesense::Error;

pub fn random_matrix(cols: usize, r: &mut SplitMix64) -> ChannelMatrix {
    let rows = std::array::from_fn(|_| (0..cols).map(|_| rng::uniform(r, -5.0, 5.0)).collect());
    ChannelMatrix::from_rows(rows).unwrap()
}

pub fn naive_window(m: &ChannelMatrix, n: usize, s: usize) -> Vec<Vec<f64>> {
    let t = m.cols();
    let mut out = vec![Vec::new(); CHANNELS];
    for (c, row) in out.iter_mut().enumerate() {
        let mut k = 0;
        while k * s + n <= t {
            let mut acc = 0.0;
            for j in k * s..k * s + n {
                acc += m.get(c, j);
            }
            row.push(acc / n as f64);
            k += 1;
        }
    }
    out
}

/// Every T ≤ 20, N ≤ 5, M ≤ 5 against the double loop, exact equality.
/// Returns the number of (T, N, M) cases compared.
pub fn window_average_exhaustive() -> usize {
    let mut r = rng::stream(1);
    let mut cases = 0;
    for t in 1..=20 {
        let m = random_matrix(t, &mut r);
        for n in 1..=5 {
            for s in 1..=5 {
                cases += 1;
                if n > t {
                    assert!(matches!(window_average(&m, n, s), Err(Error::WindowTooLarge)));
                    continue;
                }
                let got = window_average(&m, n, s).unwrap();
                assert_eq!(got.cols(), (t - n) / s + 1);
                let want = naive_window(&m, n, s);
                for c in 0..CHANNELS {
                    assert_eq!(got.row(c), want[c].as_slice(), "T={t} N={n} M={s} row {c}");
                }
            }
        }
    }
    cases
}

/// Scales random rows, some constant and some with a huge offset, and checks
/// range and endpoint mapping. Returns the number of rows checked.
pub fn scaling_random_rows(min_rows: usize) -> usize {
    let mut r = rng::stream(2);
    let mut rows_seen = 0;
    while rows_seen < min_rows {
        let t = 1 + (rng::unit_f64(&mut r) * 30.0) as usize;
        let mut m = random_matrix(t, &mut r);
        if rng::unit_f64(&mut r) < 0.1 {
            m.row_mut(0).fill(3.25);
        }
        if rng::unit_f64(&mut r) < 0.1 {
            m.row_mut(1).iter_mut().for_each(|v| *v = 1e6 + *v * 1e-3);
        }
        let out = scale_sequence(&m).unwrap();
        for c in 0..CHANNELS {
            let (row, src) = (out.row(c), m.row(c));
            assert!(row.iter().all(|v| (-1.0..=1.0).contains(v)));
            let lo = src.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = src.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                assert!(row.iter().all(|&v| v == 0.0));
            } else {
                for (x, y) in src.iter().zip(row) {
                    if *x == lo {
                        assert_eq!(*y, -1.0);
                    }
                    if *x == hi {
                        assert_eq!(*y, 1.0);
                    }
                    let want = 2.0 * (x - lo) / (hi - lo) - 1.0;
                    assert!((y - want).abs() < 1e-12);
                }
            }
            rows_seen += 1;
        }
    }
    rows_seen
}

/// Sample mean and std of σ=0.1 noise over 6×10⁴ values must sit within
/// ±0.002 and 0.1 ± 0.003. Returns the worst (|mean|, |std − 0.1|).
pub fn noise_moments() -> (f64, f64) {
    let m = ChannelMatrix::zeros(10_000);
    let mut worst = (0.0f64, 0.0f64);
    for seed in [0, 1, 2, 99] {
        let out = add_gaussian_noise(&m, 0.1, seed);
        let e = out.values();
        assert_eq!(e.len(), 60_000);
        let n = e.len() as f64;
        let mean = e.iter().sum::<f64>() / n;
        let std = (e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() <= 0.002, "seed {seed}: mean {mean}");
        assert!((std - 0.1).abs() <= 0.003, "seed {seed}: std {std}");
        worst = (worst.0.max(mean.abs()), worst.1.max((std - 0.1).abs()));
    }
    worst
}
