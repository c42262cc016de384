//! Bracketed scalar root finding (Brent's method).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("root is not bracketed: f({a}) = {fa}, f({b}) = {fb}")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("no convergence after {iterations} iterations (bracket width {width})")]
    NonConvergence { iterations: usize, width: f64 },
}

/// Finds a root of `f` in `[a, b]` to absolute tolerance `tol` in the
/// argument. `f(a)` and `f(b)` must differ in sign (or one must vanish).
///
/// Bisection safeguards inverse quadratic and secant steps, so each
/// iteration at least halves the bracket every other step.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<f64, RootError> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
    }
    Err(RootError::NonConvergence {
        iterations: max_iter,
        width: (c - b).abs(),
    })
}

/// Plain bisection on a bracket; used as an independent check of [`brent`].
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, RootError> {
    let (mut lo, mut hi) = (a, b);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NotBracketed { a, b, fa: flo, fb: fhi });
    }
    let neg_at_lo = flo < 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(RootError::NonConvergence {
        iterations: 2000,
        width: (hi - lo).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = brent(|x| x * x * x - 2.0 * x - 5.0, 2.0, 3.0, 1e-14, 100).unwrap();
        assert!((r - 2.094_551_481_542_326_5).abs() < 1e-13);
    }

    #[test]
    fn agrees_with_bisection() {
        let f = |x: f64| x.cos() - x;
        let a = brent(f, 0.0, 1.0, 1e-13, 100).unwrap();
        let b = bisect(f, 0.0, 1.0, 1e-13).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn endpoint_root() {
        assert_eq!(brent(|x| x - 1.0, 1.0, 2.0, 1e-12, 10).unwrap(), 1.0);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50),
            Err(RootError::NotBracketed { .. })
        ));
    }

    #[test]
    fn flat_then_steep() {
        // grazing-like shape: nearly flat over most of the bracket
        let r = brent(|x: f64| (x - 0.7).powi(3) * 1e3, 0.0, 1.0, 1e-12, 200).unwrap();
        assert!((r - 0.7).abs() < 1e-4);
    }
}
