//! Arithmetic classification of rotation numbers by continued fractions.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RotationClass {
    /// ω = m/n in lowest terms; `height = |m| + n`.
    Rational { m: i64, n: i64, height: i64 },
    /// `|ω − p/q| ≥ α/q^{2+d}` verified for every `q ≤ q_max`.
    DiophantineCertified { alpha: f64, d: f64, q_max: u64 },
    Unresolved,
}

impl RotationClass {
    pub fn label(&self) -> &'static str {
        match self {
            RotationClass::Rational { .. } => "rational",
            RotationClass::DiophantineCertified { .. } => "diophantine",
            RotationClass::Unresolved => "unresolved",
        }
    }

    pub fn height(&self) -> Option<i64> {
        match self {
            RotationClass::Rational { height, .. } => Some(*height),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, RotationClass::Rational { .. })
    }

    pub fn is_diophantine(&self) -> bool {
        matches!(self, RotationClass::DiophantineCertified { .. })
    }
}

/// A convergent `p/q` of a continued fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Convergent {
    pub p: i64,
    pub q: i64,
}

/// Convergents of `x` with denominators up to `q_max`, computed from the
/// floating-point expansion (terminates early when `x` is exactly rational
/// at working precision).
pub fn convergents<T: Real>(x: T, q_max: u64) -> Vec<Convergent> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let a0 = x.floor();
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let mut p = a0.to_i64().unwrap_or(0);
    let mut q = 1i64;
    out.push(Convergent { p, q });
    let mut frac = x - a0;
    while frac > T::zero() {
        let y = T::one() / frac;
        let a = y.floor();
        frac = y - a;
        let Some(ai) = a.to_i64() else { break };
        let (Some(pn), Some(qn)) = (
            ai.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            ai.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) else {
            break;
        };
        if qn as u64 > q_max {
            break;
        }
        p_prev = p;
        q_prev = q;
        p = pn;
        q = qn;
        out.push(Convergent { p, q });
    }
    out
}

fn gap<T: Real>(omega: T, p: i64, q: i64) -> T {
    let qf = T::from_i64(q).unwrap();
    let pf = T::from_i64(p).unwrap();
    (omega * qf - pf).abs() / qf
}

const RATIONAL_SLACK: f64 = 1e-12;

/// Classifies `omega` as rational, Diophantine-certified or unresolved.
///
/// Certification only inspects convergents, which suffices for α ≤ 1/2: any
/// fraction with `|ω − p/q| < 1/(2q²)` is a convergent. Larger α fall back
/// to checking every denominator up to `q_max`.
pub fn classify<T: Real>(omega: T, q_max: u64, alpha: T, d: T) -> RotationClass {
    let cs = convergents(omega, q_max);
    for c in &cs {
        let qf = T::from_i64(c.q).unwrap();
        if gap(omega, c.p, c.q) <= T::c(RATIONAL_SLACK) / (qf * qf) {
            return RotationClass::Rational {
                m: c.p,
                n: c.q,
                height: c.p.abs() + c.q,
            };
        }
    }
    let bound = |q: i64| alpha / T::from_i64(q).unwrap().powf(T::c(2.0) + d);
    let mut ok = cs.iter().all(|c| gap(omega, c.p, c.q) >= bound(c.q));
    if ok && alpha > T::c(0.5) {
        ok = (1..=q_max as i64).all(|q| {
            let p = (omega * T::from_i64(q).unwrap()).round().to_i64().unwrap_or(0);
            gap(omega, p, q) >= bound(q)
        });
    }
    if ok && !cs.is_empty() {
        RotationClass::DiophantineCertified {
            alpha: alpha.to_f64_lossy(),
            d: d.to_f64_lossy(),
            q_max,
        }
    } else {
        RotationClass::Unresolved
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// All reduced fractions `m/n` (n ≥ 1) of the given height `|m| + n`.
pub fn rationals_of_height(height: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for n in 1..=height {
        let am = height - n;
        for m in [am, -am] {
            if gcd(m, n) == 1 && !(m == 0 && n != 1) && !out.contains(&(m, n)) {
                out.push((m, n));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_is_rational() {
        assert_eq!(
            classify(0.5f64, 100, 0.3, 0.5),
            RotationClass::Rational { m: 1, n: 2, height: 3 }
        );
    }

    #[test]
    fn golden_mean_is_diophantine() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let c = classify(g, 1_000_000, 0.3, 0.5);
        assert!(c.is_diophantine(), "{c:?}");
        // Fibonacci denominators
        let cs = convergents(g, 1_000_000);
        let qs: Vec<i64> = cs.iter().map(|c| c.q).take(8).collect();
        assert_eq!(qs, vec![1, 1, 2, 3, 5, 8, 13, 21]);
        assert_eq!(cs.last().unwrap().q, 832_040);
    }

    #[test]
    fn near_half_is_unresolved() {
        assert_eq!(classify(0.5 + 1e-9, 100, 0.3, 0.5), RotationClass::Unresolved);
    }

    #[test]
    fn negative_and_integer_rotation_numbers() {
        assert_eq!(
            classify(-0.75f64, 100, 0.1, 0.5),
            RotationClass::Rational { m: -3, n: 4, height: 7 }
        );
        assert_eq!(
            classify(1.0f64, 100, 0.1, 0.5),
            RotationClass::Rational { m: 1, n: 1, height: 2 }
        );
    }

    #[test]
    fn large_alpha_uses_all_denominators() {
        // √2 − 1 = [0; 2, 2, …]; already q = 1 gives a gap 0.414 < 0.9.
        let x = 2f64.sqrt() - 1.0;
        assert_eq!(classify(x, 50, 0.9, 0.5), RotationClass::Unresolved);
        assert!(classify(x, 50, 0.1, 0.5).is_diophantine());
    }

    #[test]
    fn heights() {
        assert_eq!(rationals_of_height(3), vec![(2, 1), (-2, 1), (1, 2), (-1, 2)]);
        let h7 = rationals_of_height(7);
        assert!(h7.contains(&(3, 4)) && h7.contains(&(-1, 6)) && !h7.contains(&(0, 7)));
    }

    #[test]
    fn single_precision_classification() {
        assert!(classify(0.25f32, 100, 0.3, 0.5).is_rational());
    }
}
