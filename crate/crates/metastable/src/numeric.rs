//! Small numeric helpers shared across modules.

/// Compensated (Neumaier) summation. Probabilities built from thousands of
/// atom weights land on the exact rational far more often this way.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Ceiling of a nonnegative finite real as an index, or `None` when it does
/// not fit.
pub fn ceil_index(x: f64) -> Option<usize> {
    index_of(x.ceil())
}

/// Floor of a nonnegative finite real as an index, or `None` when it does
/// not fit.
pub fn floor_index(x: f64) -> Option<usize> {
    index_of(x.floor())
}

fn index_of(x: f64) -> Option<usize> {
    if x.is_finite() && x >= 0.0 && x < usize::MAX as f64 {
        Some(x as usize)
    } else {
        None
    }
}
