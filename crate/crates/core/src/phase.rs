//! Arithmetic on the suspension circle `R / T_f Z`.

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Reduces `t` into `[0, period)`.
pub fn reduce(t: f64, period: f64) -> f64 {
    let r = t - period * (t / period).floor();
    // rounding can land exactly on `period` for t slightly below a multiple
    if r >= period || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two phases measured along the circle of length `period`.
pub fn circle_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = reduce(a - b, period);
    d.min(period - d)
}
