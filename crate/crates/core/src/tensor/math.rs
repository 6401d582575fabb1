//! Numerically stable scalar link functions.

/// Probabilities inside `log(1 - p)` and `log(p)` terms are kept at least
/// this far from 0 and 1.
pub const EPS_PROB: f64 = 1e-7;

/// `ln(EPS_PROB)`, the floor of every clamped log-probability.
pub fn log_eps() -> f64 {
    EPS_PROB.ln()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln σ(x) = -softplus(-x)`
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// `ln σ(x)` floored at `ln(EPS_PROB)`, with its derivative (zero on the floor).
pub fn log_sigmoid_clamped(x: f64) -> (f64, f64) {
    let v = log_sigmoid(x);
    if v < log_eps() {
        (log_eps(), 0.0)
    } else {
        (v, sigmoid(-x))
    }
}

/// `ln(1 - σ(x))` floored at `ln(EPS_PROB)`, with its derivative.
pub fn log1m_sigmoid_clamped(x: f64) -> (f64, f64) {
    let v = -softplus(x);
    if v < log_eps() {
        (log_eps(), 0.0)
    } else {
        (v, -sigmoid(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn values_at_zero() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((log_sigmoid(0.0) + LN_2).abs() < 1e-16);
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        assert!(sigmoid(-50.0) > 0.0);
        assert!(log1m_sigmoid_clamped(50.0).0.is_finite());
        assert!(log_sigmoid(-800.0).is_finite());
        assert_eq!(log1m_sigmoid_clamped(50.0).0, log_eps());
        assert_eq!(log_sigmoid_clamped(-50.0), (log_eps(), 0.0));
    }

    #[test]
    fn complementary_identity() {
        let mut x = -40.0;
        while x <= 40.0 {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() <= 1e-15, "x={x}");
            x += 0.25;
        }
    }

    #[test]
    fn clamped_derivatives_match_differences() {
        for &x in &[-3.0, -0.5, 0.0, 0.7, 4.0] {
            let h = 1e-6;
            let fd = (log1m_sigmoid_clamped(x + h).0 - log1m_sigmoid_clamped(x - h).0) / (2.0 * h);
            assert!((fd - log1m_sigmoid_clamped(x).1).abs() < 1e-8);
            let fd = (log_sigmoid_clamped(x + h).0 - log_sigmoid_clamped(x - h).0) / (2.0 * h);
            assert!((fd - log_sigmoid_clamped(x).1).abs() < 1e-8);
        }
    }
}
