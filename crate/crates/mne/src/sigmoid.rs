//! Sigmoid evaluation for the training hot loop: an interpolated lookup
//! table saturating outside [-6, 6], plus an exact mode used by gradient
//! checks.
//!
//! Both modes satisfy σ(x) + σ(-x) = 1 to within 1e-12 (the table mode
//! exactly, by mirrored lookup) and neither overflows for any finite x.

use std::sync::LazyLock;

const TABLE_SIZE: usize = 8192;
const TABLE_MAX: f64 = 6.0;

static TABLE: LazyLock<Vec<f64>> = LazyLock::new(|| {
    (0..TABLE_SIZE)
        .map(|i| {
            let x = i as f64 * TABLE_MAX / (TABLE_SIZE - 1) as f64;
            sigmoid_exact(x)
        })
        .collect()
});

/// Numerically stable exact sigmoid 1 / (1 + e^{-x}).
pub fn sigmoid_exact(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn positive_lookup(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x >= TABLE_MAX {
        return 1.0;
    }
    let u = x * (TABLE_SIZE - 1) as f64 / TABLE_MAX;
    let i = u as usize;
    let frac = u - i as f64;
    let lo = TABLE[i];
    let hi = TABLE[(i + 1).min(TABLE_SIZE - 1)];
    lo + (hi - lo) * frac
}

/// Table sigmoid with linear interpolation, saturating to exactly 0 or 1
/// outside [-6, 6]. Negative inputs are mirrored so σ(x) + σ(-x) = 1
/// holds exactly.
pub fn sigmoid_table(x: f64) -> f64 {
    if x >= 0.0 {
        positive_lookup(x)
    } else {
        1.0 - positive_lookup(-x)
    }
}

/// Stable log σ(x) = -ln(1 + e^{-x}), finite for all finite x.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Sigmoid evaluation mode for the trainer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sigmoid {
    Table,
    Exact,
}

impl Sigmoid {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Sigmoid::Table => sigmoid_table(x),
            Sigmoid::Exact => sigmoid_exact(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_matches_definition() {
        for &x in &[-5.0f64, -1.0, 0.0, 0.5, 3.0] {
            let direct = 1.0 / (1.0 + (-x).exp());
            assert!((sigmoid_exact(x) - direct).abs() < 1e-15);
        }
        assert_eq!(sigmoid_exact(0.0), 0.5);
    }

    #[test]
    fn table_is_close_to_exact_inside_the_range() {
        for i in 0..=1198 {
            let x = -5.99 + i as f64 * 0.01;
            let err = (sigmoid_table(x) - sigmoid_exact(x)).abs();
            assert!(err < 1e-7, "x={x}: err={err}");
        }
        // Saturation beyond the table range clamps to the extremes.
        assert_eq!(sigmoid_table(6.0), 1.0);
        assert!((sigmoid_exact(6.0) - 1.0).abs() < 3e-3);
    }

    #[test]
    fn complement_identity_holds_for_both_modes() {
        let xs: Vec<f64> = (0..2000).map(|i| -10_000.0 + i as f64 * 10.0).collect();
        for &x in &xs {
            let t = sigmoid_table(x) + sigmoid_table(-x);
            assert!((t - 1.0).abs() < 1e-12, "table at {x}: {t}");
            let e = sigmoid_exact(x) + sigmoid_exact(-x);
            assert!((e - 1.0).abs() < 1e-12, "exact at {x}: {e}");
        }
    }

    #[test]
    fn no_overflow_for_large_inputs() {
        for &x in &[1e4, -1e4, 1e8, -1e8] {
            for mode in [Sigmoid::Table, Sigmoid::Exact] {
                let y = mode.eval(x);
                assert!(y.is_finite());
                assert!((0.0..=1.0).contains(&y));
            }
        }
        assert_eq!(sigmoid_table(1e4), 1.0);
        assert_eq!(sigmoid_table(-1e4), 0.0);
    }

    #[test]
    fn log_sigmoid_is_stable_and_consistent() {
        for &x in &[-700.0, -10.0, 0.0, 10.0, 700.0] {
            let ls = log_sigmoid(x);
            assert!(ls.is_finite());
            if x.abs() < 30.0 {
                assert!((ls - sigmoid_exact(x).ln()).abs() < 1e-12);
            }
        }
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
    }
}
