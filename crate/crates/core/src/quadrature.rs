//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.
//!
//! The error estimate follows QUADPACK's `qk15`: the Kronrod–Gauss
//! difference is sharpened with the `(200 e / resasc)^1.5` heuristic and
//! floored at `50 eps |f|` so that intervals dominated by rounding are
//! accepted instead of bisected forever.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not reach tolerance: estimate {value}, error {error} after {intervals} intervals")]
    NonConvergence { value: f64, error: f64, intervals: usize },
    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },
    #[error("invalid integration interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-13,
            max_intervals: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Relative accuracy, against the integral of `|f|`, that rounding allows.
const ROUNDOFF: f64 = 100.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Integral of `|f|` over the panel.
    l1: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Panel, QuadratureError> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite { at: centre });
    }
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.abs() * WGK[7];
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (lo, hi) = (centre - dx, centre + dx);
        let (fl, fh) = (f(lo), f(hi));
        if !fl.is_finite() {
            return Err(QuadratureError::NonFinite { at: lo });
        }
        if !fh.is_finite() {
            return Err(QuadratureError::NonFinite { at: hi });
        }
        f1[j] = fl;
        f2[j] = fh;
        res_k += WGK[j] * (fl + fh);
        res_abs += WGK[j] * (fl.abs() + fh.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (fl + fh);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let h = half.abs();
    res_asc *= h;
    res_abs *= h;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        a,
        b,
        value: res_k * half,
        error,
        l1: res_abs,
    })
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadratureOptions,
) -> Result<Estimate, QuadratureError> {
    integrate_segmented(f, a, b, f64::INFINITY, opts)
}

/// Integrates `f` over `[a, b]` after splitting it into panels no longer
/// than `segment`. Oscillatory integrands should pass their period here.
pub fn integrate_segmented<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    segment: f64,
    opts: QuadratureOptions,
) -> Result<Estimate, QuadratureError> {
    if !(a.is_finite() && b.is_finite()) || !(segment > 0.0) {
        return Err(QuadratureError::BadInterval { a, b });
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let len = b - a;
    let pieces = if segment.is_finite() {
        ((len.abs() / segment).ceil() as usize).max(1)
    } else {
        1
    };
    let mut heap = BinaryHeap::with_capacity(pieces * 2);
    let (mut value, mut error, mut l1) = (0.0, 0.0, 0.0);
    for i in 0..pieces {
        let lo = a + len * (i as f64) / (pieces as f64);
        let hi = if i + 1 == pieces {
            b
        } else {
            a + len * ((i + 1) as f64) / (pieces as f64)
        };
        let p = gauss_kronrod(&mut f, lo, hi)?;
        value += p.value;
        error += p.error;
        l1 += p.l1;
        heap.push(p);
    }
    loop {
        // cancellation in sign-changing integrands bounds the attainable accuracy
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs()).max(ROUNDOFF * l1);
        if error <= tol {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(QuadratureError::NonConvergence {
                value,
                error,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            // cannot bisect further in double precision
            return Err(QuadratureError::NonConvergence {
                value,
                error,
                intervals: heap.len() + 1,
            });
        }
        let left = gauss_kronrod(&mut f, worst.a, mid)?;
        let right = gauss_kronrod(&mut f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        l1 += left.l1 + right.l1 - worst.l1;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed the drift of the running updates
    let (mut value, mut error) = (0.0, 0.0);
    let intervals = heap.len();
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    for p in &panels {
        value += p.value;
        error += p.error;
    }
    Ok(Estimate {
        value,
        error,
        intervals,
    })
}
