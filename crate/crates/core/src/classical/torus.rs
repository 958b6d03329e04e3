//! Invariant tori Λ_a and integrals over them.
//!
//! Every torus integral has the form `∫_{s₋}^{s₊} g(s) / σ(s) ds` with
//! `σ = √(1 − a²/u²)`, which blows up like an inverse square root at the
//! turning points. Tanh-sinh quadrature absorbs the singularities provided
//! `u − a` keeps its relative accuracy next to the endpoints, so it is
//! evaluated as a profile difference from the nearest turning point rather
//! than by subtraction.

use crate::error::{Error, Result};
use crate::geometry::{turning_points, SurfaceProfile};
use crate::numerics::TanhSinh;
use crate::observable::Observable;
use crate::scalar::Real;

/// Λ_{E,F}: the level set `p = E`, `θ* = F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torus<T> {
    pub e: T,
    pub f: T,
    /// `F / √E`
    pub a: T,
    pub s_bounds: (T, T),
}

impl<T: Real> Torus<T> {
    pub fn new(surface: &SurfaceProfile<T>, e: T, f: T) -> Result<Self> {
        if !(e > T::zero()) {
            return Err(Error::DomainError(format!("energy {e} must be positive")));
        }
        let a = f / e.sqrt();
        if a.abs() >= surface.u_max() {
            return Err(Error::DomainError(format!(
                "|F| = {} exceeds u_max·√E = {}",
                f.abs(),
                surface.u_max() * e.sqrt()
            )));
        }
        let s_bounds = if a == T::zero() {
            (T::zero(), surface.length())
        } else {
            turning_points(surface, a.abs())?
        };
        Ok(Self { e, f, a, s_bounds })
    }

    /// The unit-energy torus Λ_a.
    pub fn from_a(surface: &SurfaceProfile<T>, a: T) -> Result<Self> {
        Self::new(surface, T::one(), a)
    }
}

/// `∫ g(s, u, u − a) u/√(u² − a²) ds` over the s-range of Λ_a. For `a = 0`
/// the range is the whole meridian and the weight is 1.
///
/// `g` receives the accurately computed `u − a` so that integrands which
/// vanish at the turning points can be formed without cancellation.
pub fn torus_integral<T, G>(surface: &SurfaceProfile<T>, a: T, g: G) -> Result<(T, T)>
where
    T: Real,
    G: Fn(T, T, T) -> T,
{
    let a = a.abs();
    let um = surface.u_max();
    let ts = TanhSinh::<T>::default();
    if a == T::zero() {
        let q = ts.integrate(T::zero(), surface.length(), |s, _, _| {
            let u = surface.u(s);
            g(s, u, u)
        })?;
        return Ok((q.value, q.error));
    }
    if a >= um {
        return Err(Error::DomainError(format!("a = {a} outside (0, u_max = {um})")));
    }
    let (sm, sp) = turning_points(surface, a)?;
    let q = ts.integrate(sm, sp, |s, xa, xb| {
        let u = surface.u(s);
        let du_a = if xa <= xb {
            surface.u_shift(sm, xa)
        } else {
            surface.u_shift(sp, -xb)
        };
        g(s, u, du_a) * u / (du_a * (u + a)).sqrt()
    })?;
    Ok((q.value, q.error))
}

const QUAD_TOL: f64 = 1e-10;

fn checked<T: Real>(v: (T, T), what: &str) -> Result<T> {
    let tol = T::c(QUAD_TOL).max(T::epsilon().sqrt());
    if !(v.1 <= tol * v.0.abs().max(T::one())) || !v.0.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "{what}: error estimate {} exceeds tolerance",
            v.1
        )));
    }
    Ok(v.0)
}

/// Rotation number ω(Λ_a) = (a/π) ∫ u⁻² σ⁻¹ ds; odd in `a`.
pub fn rotation_number<T: Real>(surface: &SurfaceProfile<T>, a: T) -> Result<T> {
    let um = surface.u_max();
    if a == T::zero() || a.abs() >= um || !a.is_finite() {
        return Err(Error::DomainError(format!(
            "a = {a} outside (-u_max, u_max) \\ {{0}}"
        )));
    }
    let aa = a.abs();
    let i = checked(
        torus_integral(surface, aa, |_, u, _| T::one() / (u * u))?,
        "rotation number",
    )?;
    Ok(a.signum() * aa * i / T::PI())
}

/// Haar average of `q` over Λ_a. Only the θ-mean of `q` contributes.
///
/// Also accepts `a = 0`, the meridian limit where the density is uniform in `s`.
pub fn torus_average<T: Real>(surface: &SurfaceProfile<T>, q: &Observable<T>, a: T) -> Result<T> {
    if a.abs() >= surface.u_max() || !a.is_finite() {
        return Err(Error::DomainError(format!("a = {a} outside (-u_max, u_max)")));
    }
    if q.is_constant() {
        return Ok(q.theta_mean(surface.s0()));
    }
    let num = checked(torus_integral(surface, a, |s, _, _| q.theta_mean(s))?, "torus average")?;
    let den = checked(torus_integral(surface, a, |_, _, _| T::one())?, "torus measure")?;
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_profile;

    #[test]
    fn sphere_rotation_number_is_one() {
        let sp = SurfaceProfile::<f64>::sphere();
        for &a in &[0.05, 0.3, 0.5, 0.9, 0.999] {
            let w = rotation_number(&sp, a).unwrap();
            assert!((w - 1.0).abs() < 1e-12, "a = {a}: {w}");
        }
    }

    #[test]
    fn oddness() {
        let p = make_profile::<f64>("deformed-sphere", &[0.2]).unwrap();
        for &a in &[0.1, 0.55, 1.1] {
            let w = rotation_number(&p, a).unwrap();
            let wm = rotation_number(&p, -a).unwrap();
            assert!((w + wm).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        let sp = SurfaceProfile::<f64>::sphere();
        assert!(matches!(rotation_number(&sp, 0.0), Err(Error::DomainError(_))));
        assert!(matches!(rotation_number(&sp, 1.2), Err(Error::DomainError(_))));
    }

    #[test]
    fn sphere_cos_sq_average_closed_form() {
        // On Λ_a of the sphere, with u = sin s, the Haar density in s is
        // proportional to sin s/√(sin²s − a²); the average of cos² s is
        // (1 − a²)/2.
        let sp = SurfaceProfile::<f64>::sphere();
        let q = Observable::cos_sq();
        for &a in &[0.2, 0.5, 0.8] {
            let v = torus_average(&sp, &q, a).unwrap();
            assert!((v - (1.0 - a * a) / 2.0).abs() < 1e-12, "{a}: {v}");
        }
    }

    #[test]
    fn torus_integral_of_one_on_sphere_is_pi() {
        // ∫ sin s/√(sin²s − a²) ds over the torus = π for every a.
        let sp = SurfaceProfile::<f64>::sphere();
        for &a in &[0.0, 0.1, 0.6, 0.95] {
            let (v, _) = torus_integral(&sp, a, |_, _, _| 1.0).unwrap();
            assert!((v - std::f64::consts::PI).abs() < 1e-12, "{a}: {v}");
        }
    }

    #[test]
    fn averages_of_constants_and_pure_angular_terms() {
        let p = make_profile::<f64>("deformed-sphere", &[0.2]).unwrap();
        assert_eq!(torus_average(&p, &Observable::constant(2.5), 0.4).unwrap(), 2.5);
        assert!(torus_average(&p, &Observable::cos_theta(1), 0.4).unwrap().abs() < 1e-15);
    }

    #[test]
    fn single_precision_rotation_number() {
        let sp = SurfaceProfile::<f32>::sphere();
        let w = rotation_number(&sp, 0.4f32).unwrap();
        assert!((w - 1.0).abs() < 1e-4);
    }
}
