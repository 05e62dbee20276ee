/// Breakpoints of the hard sigmoid are at `±HARD_SIGMOID_KINK`.
pub const HARD_SIGMOID_KINK: f64 = 2.5;

/// `clamp(0.2 x + 0.5, 0, 1)`.
#[inline]
pub fn hard_sigmoid(x: f64) -> f64 {
    (0.2 * x + 0.5).clamp(0.0, 1.0)
}

/// Slope of [`hard_sigmoid`]; the kinks take the interior slope 0.2.
#[inline]
pub fn hard_sigmoid_grad(x: f64) -> f64 {
    if (-HARD_SIGMOID_KINK..=HARD_SIGMOID_KINK).contains(&x) {
        0.2
    } else {
        0.0
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(hard_sigmoid(0.0), 0.5);
        assert_eq!(hard_sigmoid(2.5), 1.0);
        assert_eq!(hard_sigmoid(-2.5), 0.0);
        assert!((hard_sigmoid(1.0) - 0.7).abs() < 1e-15);
        assert_eq!(hard_sigmoid_grad(2.5), 0.2);
        assert_eq!(hard_sigmoid_grad(3.0), 0.0);
        assert_eq!(relu(-1.0), 0.0);
    }

    #[test]
    fn monotone_and_bounded_on_grid() {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..1_000_000 {
            let x = -10.0 + 20.0 * k as f64 / 999_999.0;
            let y = hard_sigmoid(x);
            assert!((0.0..=1.0).contains(&y));
            assert!(y >= prev);
            prev = y;
        }
    }
}
