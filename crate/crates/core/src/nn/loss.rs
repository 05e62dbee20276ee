/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Categorical cross-entropy of the softmax of `logits` against class `target`.
///
/// Returns `(loss, d_logits, probs)` with `d_logits = probs - onehot(target)`.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&z| (z - m).exp()).sum();
    let log_norm = m + sum.ln();
    let probs: Vec<f64> = logits.iter().map(|&z| (z - log_norm).exp()).collect();
    let loss = log_norm - logits[target];
    let mut d = probs.clone();
    d[target] -= 1.0;
    (loss, d, probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let (loss, d, p) = softmax_cross_entropy(&[0.0, 0.0], 0);
        assert_eq!(p, vec![0.5, 0.5]);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(d, vec![-0.5, 0.5]);
    }

    #[test]
    fn closed_form_two_thirds() {
        let (_, _, p) = softmax_cross_entropy(&[2f64.ln(), 0.0], 1);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn large_logits_stay_finite() {
        let (loss, d, p) = softmax_cross_entropy(&[1000.0, 0.0], 1);
        assert!(loss.is_finite());
        assert!((loss - 1000.0).abs() < 1e-9);
        assert!(d.iter().chain(&p).all(|v| v.is_finite()));
    }

    #[test]
    fn normalization_and_shift_invariance() {
        let mut state = 0x1234_5678_u64;
        for _ in 0..1000 {
            let logits: Vec<f64> = (0..7)
                .map(|_| {
                    state = crate::rng::derive_seed(state, 1);
                    (state >> 11) as f64 / (1u64 << 53) as f64 * 60.0 - 30.0
                })
                .collect();
            let p = softmax(&logits);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = logits.iter().map(|z| z + 17.25).collect();
            for (a, b) in p.iter().zip(softmax(&shifted)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
