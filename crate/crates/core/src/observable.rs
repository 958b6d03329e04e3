//! Perturbations `q(s, θ)` given as trigonometric polynomials.
//!
//! Each term is `coef · sinᵃ(s) · cosᵇ(s) · A(kθ)` with `A ∈ {1, cos, sin}`.
//! Monomials in `sin s`, `cos s` cover every analytic profile the
//! experiments need (e.g. `cos 2s = cos²s − sin²s`).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Angular {
    Const,
    Cos { k: u32 },
    Sin { k: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term<T> {
    pub coef: T,
    #[serde(default)]
    pub sin_pow: u32,
    #[serde(default)]
    pub cos_pow: u32,
    #[serde(default = "const_angular")]
    pub angular: Angular,
}

fn const_angular() -> Angular {
    Angular::Const
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable<T> {
    pub terms: Vec<Term<T>>,
}

impl<T: Real> Term<T> {
    pub fn new(coef: T, sin_pow: u32, cos_pow: u32, angular: Angular) -> Self {
        Self {
            coef,
            sin_pow,
            cos_pow,
            angular,
        }
    }

    #[inline]
    fn profile(&self, sn: T, cs: T) -> T {
        self.coef * sn.powi(self.sin_pow as i32) * cs.powi(self.cos_pow as i32)
    }

    fn degree(&self) -> u32 {
        match self.angular {
            Angular::Const => 0,
            Angular::Cos { k } | Angular::Sin { k } => k,
        }
    }
}

impl<T: Real> Observable<T> {
    pub fn new(terms: Vec<Term<T>>) -> Self {
        Self { terms }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![Term::new(c, 0, 0, Angular::Const)])
    }

    /// `cos 2s`.
    pub fn cos_2s() -> Self {
        Self::new(vec![
            Term::new(T::one(), 0, 2, Angular::Const),
            Term::new(-T::one(), 2, 0, Angular::Const),
        ])
    }

    /// `cos² s`.
    pub fn cos_sq() -> Self {
        Self::new(vec![Term::new(T::one(), 0, 2, Angular::Const)])
    }

    pub fn cos_theta(k: u32) -> Self {
        Self::new(vec![Term::new(T::one(), 0, 0, Angular::Cos { k })])
    }

    pub fn eval(&self, s: T, theta: T) -> T {
        let (sn, cs) = s.sin_cos();
        self.terms
            .iter()
            .map(|t| {
                let p = t.profile(sn, cs);
                match t.angular {
                    Angular::Const => p,
                    Angular::Cos { k } => p * (T::from_u32(k).unwrap() * theta).cos(),
                    Angular::Sin { k } => p * (T::from_u32(k).unwrap() * theta).sin(),
                }
            })
            .sum()
    }

    /// θ-mean `q̄(s)`.
    pub fn theta_mean(&self, s: T) -> T {
        self.fourier(0, s).re
    }

    /// θ-Fourier coefficient `q̂_k(s)` with `q = Σ_k q̂_k(s) e^{ikθ}`.
    pub fn fourier(&self, k: i32, s: T) -> Complex<T> {
        let (sn, cs) = s.sin_cos();
        let half = T::c(0.5);
        let mut acc = Complex::new(T::zero(), T::zero());
        for t in &self.terms {
            let n = t.degree() as i32;
            let matches_const = n == 0 && k == 0;
            if !(matches_const || (n != 0 && (k == n || k == -n))) {
                continue;
            }
            let p = t.profile(sn, cs);
            acc += match t.angular {
                Angular::Const => Complex::new(p, T::zero()),
                Angular::Cos { k: 0 } => Complex::new(p, T::zero()),
                Angular::Sin { k: 0 } => Complex::new(T::zero(), T::zero()),
                Angular::Cos { .. } => Complex::new(p * half, T::zero()),
                // sin(nθ) = (e^{inθ} − e^{−inθ}) / 2i
                Angular::Sin { .. } => {
                    let sign = if k > 0 { -T::one() } else { T::one() };
                    Complex::new(T::zero(), sign * p * half)
                }
            };
        }
        acc
    }

    /// Highest angular frequency present.
    pub fn theta_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.degree()).max().unwrap_or(0)
    }

    pub fn is_rotational(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t.angular, Angular::Const | Angular::Cos { k: 0 } | Angular::Sin { k: 0 }))
    }

    /// Range of `q` sampled on an `n × n` grid of `[0, L] × [0, 2π)`.
    pub fn sampled_range(&self, length: T, n: usize) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..=n {
            let s = length * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            for j in 0..n {
                let th = T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(n);
                let v = self.eval(s, th);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    pub fn is_constant(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.coef == T::zero() || (t.degree() == 0 && t.sin_pow == 0 && t.cos_pow == 0 && !matches!(t.angular, Angular::Sin { .. })))
    }

    pub fn cast<U: Real>(&self) -> Observable<U> {
        Observable {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coef: U::c(t.coef.to_f64_lossy()),
                    sin_pow: t.sin_pow,
                    cos_pow: t.cos_pow,
                    angular: t.angular,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cos_2s_identity() {
        let q = Observable::<f64>::cos_2s();
        for &s in &[0.0, 0.3, 1.1, 2.9] {
            assert!((q.eval(s, 0.7) - (2.0 * s).cos()).abs() < 1e-15);
        }
        assert!(q.is_rotational());
        assert_eq!(q.theta_degree(), 0);
    }

    #[test]
    fn fourier_coefficients_reassemble_q() {
        let q = Observable::<f64>::new(vec![
            Term::new(0.3, 1, 0, Angular::Cos { k: 2 }),
            Term::new(-0.7, 2, 1, Angular::Sin { k: 1 }),
            Term::new(1.5, 0, 2, Angular::Const),
        ]);
        let s = 0.9;
        for &th in &[0.0, 0.4, 2.5] {
            let mut v = Complex::new(0.0, 0.0);
            for k in -3..=3 {
                v += q.fourier(k, s) * Complex::new(0.0, k as f64 * th).exp();
            }
            assert!((v.re - q.eval(s, th)).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
        assert!((q.theta_mean(s) - 1.5 * s.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn constants_are_recognized() {
        assert!(Observable::<f64>::constant(2.0).is_constant());
        assert!(!Observable::<f64>::cos_theta(1).is_constant());
        assert!(!Observable::<f64>::cos_sq().is_constant());
    }

    #[test]
    fn serde_round_trip() {
        let q = Observable::<f64>::new(vec![Term::new(0.5, 3, 0, Angular::Cos { k: 3 })]);
        let js = serde_json::to_string(&q).unwrap();
        let back: Observable<f64> = serde_json::from_str(&js).unwrap();
        assert_eq!(q, back);
    }
}
