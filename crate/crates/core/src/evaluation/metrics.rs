use crate::error::{Error, Result};

/// Coefficient of determination with its zero-variance flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R2 {
    pub value: f64,
    /// `y_true` was constant; `value` is 0 by convention.
    pub zero_variance: bool,
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("metric of an empty sample".into()));
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(())
}

/// `1 - SS_res / SS_tot`, with SS_tot taken about the mean of `y_true`.
/// Constant `y_true` gives 0 and sets the flag.
pub fn r2_detail(y_true: &[f64], y_pred: &[f64]) -> Result<R2> {
    check_lengths(y_true, y_pred)?;
    let first = y_true[0];
    if y_true.iter().all(|&v| v == first) {
        return Ok(R2 { value: 0.0, zero_variance: true });
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(R2 { value: 1.0 - ss_res / ss_tot, zero_variance: false })
}

pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    r2_detail(y_true, y_pred).map(|r| r.value)
}

pub fn mean_squared_error(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    Ok(y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum::<f64>() / y_true.len() as f64)
}

/// Mean absolute deviation of `y` from `mu`. `y` must be non-empty.
pub fn mae(y: &[f64], mu: f64) -> f64 {
    debug_assert!(!y.is_empty());
    y.iter().map(|v| (v - mu).abs()).sum::<f64>() / y.len() as f64
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation; exactly 0 when all scores are equal.
pub fn fold_std(scores: &[f64]) -> f64 {
    if scores.iter().all(|&s| s == scores[0]) {
        return 0.0;
    }
    let m = mean(scores);
    (scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / scores.len() as f64).sqrt()
}
