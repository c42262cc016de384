//! Ordinary least-squares line fits for scaling laws.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use thiserror::Error;

/// Fits need at least this many points.
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {MIN_POINTS} points, got {0}")]
    InsufficientData(usize),
    #[error("abscissae are all equal; slope undefined")]
    Degenerate,
    #[error("non-finite data at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits `y = intercept + slope * x`.
pub fn linear(xs: &[f64], ys: &[f64]) -> Result<FitResult, FitError> {
    let n = xs.len().min(ys.len());
    if n < MIN_POINTS {
        return Err(FitError::InsufficientData(n));
    }
    if let Some(i) = (0..n).find(|&i| !(xs[i].is_finite() && ys[i].is_finite())) {
        return Err(FitError::NonFinite(i));
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        n_points: n,
    })
}

/// Fits `ln y = intercept + slope * ln x`. All data must be positive.
pub fn log_log(xs: &[f64], ys: &[f64]) -> Result<FitResult, FitError> {
    let n = xs.len().min(ys.len());
    let mut lx = alloc::vec::Vec::with_capacity(n);
    let mut ly = alloc::vec::Vec::with_capacity(n);
    for i in 0..n {
        if !(xs[i] > 0.0 && ys[i] > 0.0) {
            return Err(FitError::NonFinite(i));
        }
        lx.push(xs[i].ln());
        ly.push(ys[i].ln());
    }
    linear(&lx, &ly)
}
