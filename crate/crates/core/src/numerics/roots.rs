//! Bracketed scalar root finding.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Brent's method on a sign-changing bracket. `xtol` is absolute.
pub fn brent<T, F>(mut f: F, a: T, b: T, xtol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::RootNotBracketed(format!(
            "f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    let two = T::c(2.0);
    let mut c = a;
    let mut fc = fa;
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
        let tol = two * T::epsilon() * b.abs() + xtol * T::c(0.5);
        let m = (c - b) * T::c(0.5);
        if m.abs() <= tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::c(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
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
        b = if d.abs() > tol {
            b + d
        } else {
            b + tol * m.signum()
        };
        fb = f(b);
    }
    Err(Error::RootNotBracketed(format!(
        "Brent iteration limit reached near {b}"
    )))
}

/// Newton's method safeguarded by bisection on a sign-changing bracket.
///
/// `f` returns the value and the derivative. Converges to (near) machine
/// precision; used where Brent's superlinear rate is not enough.
pub fn newton_bracketed<T, F>(mut f: F, lo: T, hi: T, guess: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> (T, T),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootNotBracketed(format!(
            "f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    // Orient so that f(xl) < 0 < f(xh).
    let (mut xl, mut xh) = if flo < T::zero() { (lo, hi) } else { (hi, lo) };
    let mut x = if guess > lo.min(hi) && guess < lo.max(hi) {
        guess
    } else {
        (lo + hi) * T::c(0.5)
    };
    let mut dx_old = (hi - lo).abs();
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == T::zero() {
            return Ok(x);
        }
        if fx < T::zero() {
            xl = x;
        } else {
            xh = x;
        }
        let newton = x - fx / dfx;
        let inside = (newton - xl) * (newton - xh) < T::zero();
        let (next, dx) = if inside && dfx != T::zero() && (fx / dfx).abs() * T::c(2.0) < dx_old {
            (newton, (fx / dfx).abs())
        } else {
            let mid = (xl + xh) * T::c(0.5);
            (mid, (mid - x).abs())
        };
        dx_old = dx;
        if dx <= T::epsilon() * x.abs().max(T::min_positive_value()) * T::c(2.0) || next == x {
            return Ok(next);
        }
        x = next;
        if (xh - xl).abs() <= T::epsilon() * x.abs() * T::c(2.0) {
            return Ok(x);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x: f64| x * x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_unbracketed() {
        let e = brent(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 100).unwrap_err();
        assert!(matches!(e, Error::RootNotBracketed(_)));
    }

    #[test]
    fn newton_reaches_machine_precision() {
        let r = newton_bracketed(|x: f64| (x.sin() - 0.5, x.cos()), 0.0, 1.5, 1.0, 100).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_6).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn newton_survives_flat_derivative() {
        // Triple root: Newton degrades to linear convergence but stays bracketed.
        let r = newton_bracketed(|x: f64| (x * x * x, 3.0 * x * x), -1.0, 2.0, 1.9, 200).unwrap();
        assert!(r.abs() < 1e-20);
    }
}
