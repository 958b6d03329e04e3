//! Surfaces of revolution `ds² + u(s)² dθ²` and the geodesic symbol.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::newton_bracketed;
use crate::scalar::Real;

/// Builtin analytic profile families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `u(s) = sin s · (1 + β sin² s)` on `[0, π]`; β = 0 is the round sphere.
    DeformedSphere { beta: f64 },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::DeformedSphere { .. } => "deformed-sphere",
        }
    }
}

/// Profile values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint<T> {
    pub u: T,
    pub du: T,
    pub d2u: T,
}

/// A validated simple surface of revolution.
///
/// Immutable after construction; `s0` and `u_max` are located numerically
/// even when a closed form exists so that every family goes through the
/// same checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProfile<T> {
    family: Family,
    beta: T,
    length: T,
    s0: T,
    u_max: T,
    max_slope_sq: T,
}

const SCAN_POINTS: usize = 4096;

/// Builds a profile from a family tag and its parameter list.
pub fn make_profile<T: Real>(family: &str, params: &[T]) -> Result<SurfaceProfile<T>> {
    match family {
        "deformed-sphere" => {
            let [beta] = params else {
                return Err(Error::InvalidProfile(format!(
                    "deformed-sphere takes one parameter (beta), got {}",
                    params.len()
                )));
            };
            SurfaceProfile::new(Family::DeformedSphere {
                beta: beta.to_f64_lossy(),
            })
        }
        "sphere" if params.is_empty() => SurfaceProfile::new(Family::DeformedSphere { beta: 0.0 }),
        other => Err(Error::InvalidProfile(format!("unknown family '{other}'"))),
    }
}

impl<T: Real> SurfaceProfile<T> {
    pub fn new(family: Family) -> Result<Self> {
        let (beta, length) = match family {
            Family::DeformedSphere { beta } => (T::c(beta), T::PI()),
        };
        if !beta.is_finite() {
            return Err(Error::InvalidProfile("non-finite beta".into()));
        }
        // u' = cos s (1 + 3β sin² s): the bracket never vanishes iff β > -1/3.
        if beta <= T::c(-1.0 / 3.0) {
            return Err(Error::InvalidProfile(format!(
                "beta = {beta} <= -1/3: u' has interior zeros besides the equator"
            )));
        }
        let mut p = Self {
            family,
            beta,
            length,
            s0: T::zero(),
            u_max: T::zero(),
            max_slope_sq: T::zero(),
        };
        p.validate_and_locate()?;
        Ok(p)
    }

    /// Round sphere of radius one.
    pub fn sphere() -> Self {
        Self::new(Family::DeformedSphere { beta: 0.0 }).expect("sphere is valid")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Meridian length L.
    pub fn length(&self) -> T {
        self.length
    }

    pub fn s0(&self) -> T {
        self.s0
    }

    pub fn u_max(&self) -> T {
        self.u_max
    }

    /// Whether the profile embeds isometrically in R³, i.e. |u′| ≤ 1.
    /// Spectral computations only need the abstract metric.
    pub fn embeddable(&self) -> bool {
        self.max_slope_sq <= T::one() + T::epsilon() * T::c(16.0)
    }

    pub fn max_slope_sq(&self) -> T {
        self.max_slope_sq
    }

    #[inline]
    pub fn eval(&self, s: T) -> ProfilePoint<T> {
        match self.family {
            Family::DeformedSphere { .. } => {
                let b = self.beta;
                let (sn, cs) = s.sin_cos();
                let s2 = sn * sn;
                let three = T::c(3.0);
                let u = sn * (T::one() + b * s2);
                let du = cs * (T::one() + three * b * s2);
                let d2u = -sn * (T::one() + three * b * s2) + T::c(6.0) * b * sn * cs * cs;
                ProfilePoint { u, du, d2u }
            }
        }
    }

    #[inline]
    pub fn u(&self, s: T) -> T {
        self.eval(s).u
    }

    /// `u(t + d) − u(t)` without cancellation for small `d` or near the
    /// equator.
    pub fn u_shift(&self, t: T, d: T) -> T {
        match self.family {
            Family::DeformedSphere { .. } => {
                let two = T::c(2.0);
                // sin(t + d) − sin t = 2 cos(t + d/2) sin(d/2)
                let ds = two * (t + d / two).cos() * (d / two).sin();
                let (x, y) = ((t + d).sin(), t.sin());
                ds * (T::one() + self.beta * (x * x + x * y + y * y))
            }
        }
    }

    fn validate_and_locate(&mut self) -> Result<()> {
        let l = self.length;
        let tol = T::c(1e-10).max(T::epsilon() * T::c(64.0));
        let at0 = self.eval(T::zero());
        let at_l = self.eval(l);
        if at0.u.abs() > tol || at_l.u.abs() > tol {
            return Err(Error::InvalidProfile("u does not vanish at the poles".into()));
        }
        if (at0.du - T::one()).abs() > tol || (at_l.du + T::one()).abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "pole slopes are {} and {}, expected 1 and -1",
                at0.du, at_l.du
            )));
        }
        let n = SCAN_POINTS;
        let mut crit = Vec::new();
        let mut prev = self.eval(T::zero());
        let mut max_slope_sq = prev.du * prev.du;
        for i in 1..=n {
            let s = l * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            let cur = self.eval(s);
            if i < n && cur.u <= T::zero() {
                return Err(Error::InvalidProfile(format!("u({s}) = {} is not positive", cur.u)));
            }
            if prev.du > T::zero() && cur.du <= T::zero() || prev.du < T::zero() && cur.du >= T::zero() {
                crit.push(i);
            }
            max_slope_sq = max_slope_sq.max(cur.du * cur.du);
            prev = cur;
        }
        if crit.len() != 1 {
            return Err(Error::InvalidProfile(format!(
                "expected one interior critical point, found {}",
                crit.len()
            )));
        }
        let i = crit[0];
        let lo = l * T::from_usize_lossy(i - 1) / T::from_usize_lossy(n);
        let hi = l * T::from_usize_lossy(i) / T::from_usize_lossy(n);
        let s0 = newton_bracketed(
            |s| {
                let p = self.eval(s);
                (p.du, p.d2u)
            },
            lo,
            hi,
            (lo + hi) * T::c(0.5),
            200,
        )?;
        let p0 = self.eval(s0);
        if !(p0.d2u < T::zero()) {
            return Err(Error::InvalidProfile(format!(
                "critical point at s = {s0} is not a strict maximum (u'' = {})",
                p0.d2u
            )));
        }
        self.s0 = s0;
        self.u_max = p0.u;
        self.max_slope_sq = max_slope_sq;
        Ok(())
    }

    /// The branch `s(u)` of the inverse profile on one side of the equator.
    pub fn inverse(&self, u: T, side: Side, guess: Option<T>) -> Result<T> {
        if !(u > T::zero() && u <= self.u_max) {
            return Err(Error::DomainError(format!("u = {u} outside (0, u_max]")));
        }
        let (lo, hi) = match side {
            Side::South => (T::zero(), self.s0),
            Side::North => (self.s0, self.length),
        };
        let g = guess.unwrap_or((lo + hi) * T::c(0.5));
        newton_bracketed(
            |s| {
                let p = self.eval(s);
                (p.u - u, p.du)
            },
            lo,
            hi,
            g,
            200,
        )
    }
}

/// Side of the equator on a meridian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `s < s0`
    South,
    /// `s > s0`
    North,
}

/// Principal symbol `σ² + θ*²/u(s)²`.
pub fn symbol_p<T: Real>(surface: &SurfaceProfile<T>, s: T, sigma: T, theta_star: T) -> Result<T> {
    if s < T::zero() || s > surface.length() || !s.is_finite() {
        return Err(Error::DomainError(format!("s = {s} outside [0, L]")));
    }
    let u = surface.u(s);
    if u <= T::zero() {
        if theta_star != T::zero() {
            return Err(Error::DomainError(format!(
                "pole s = {s} with nonzero angular momentum {theta_star}"
            )));
        }
        return Ok(sigma * sigma);
    }
    Ok(sigma * sigma + theta_star * theta_star / (u * u))
}

/// Points where the parallel `u = a` is tangent to the torus Λ_a.
pub fn turning_points<T: Real>(surface: &SurfaceProfile<T>, a: T) -> Result<(T, T)> {
    let um = surface.u_max();
    if !(a > T::zero() && a <= um) {
        return Err(Error::DomainError(format!("a = {a} outside (0, u_max = {um})")));
    }
    if um - a <= T::c(1e-12) * um {
        return Err(Error::DegenerateTorus(format!(
            "a = {a} coincides with the equator u_max = {um}"
        )));
    }
    let sm = surface.inverse(a, Side::South, None)?;
    let sp = surface.inverse(a, Side::North, None)?;
    Ok((sm, sp))
}

/// Meridian profile `v(s) = ∫₀^s √(1 − u′²)` of the embedding, sampled on
/// a uniform grid (for plotting only).
pub fn embedding_height<T: Real>(surface: &SurfaceProfile<T>, n: usize) -> Result<Vec<(T, T, T)>> {
    if !surface.embeddable() {
        return Err(Error::DomainError(format!(
            "profile is not embeddable: max u'^2 = {}",
            surface.max_slope_sq()
        )));
    }
    let gl = crate::numerics::GaussLegendre::<T>::new(8);
    let l = surface.length();
    let mut out = Vec::with_capacity(n + 1);
    let mut v = T::zero();
    let mut prev = T::zero();
    out.push((T::zero(), T::zero(), T::zero()));
    for i in 1..=n {
        let s = l * T::from_usize_lossy(i) / T::from_usize_lossy(n);
        v += gl.integrate(prev, s, |x| {
            let d = surface.eval(x).du;
            (T::one() - d * d).max(T::zero()).sqrt()
        });
        out.push((s, surface.u(s), v));
        prev = s;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_constants() {
        let p = SurfaceProfile::<f64>::sphere();
        assert!((p.s0() - PI / 2.0).abs() < 1e-12);
        assert!((p.u_max() - 1.0).abs() < 1e-15);
        assert!(p.embeddable());
    }

    #[test]
    fn deformed_profile_equator() {
        let p = make_profile::<f64>("deformed-sphere", &[0.2]).unwrap();
        assert!((p.s0() - PI / 2.0).abs() < 1e-12 * PI);
        assert!((p.u_max() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = make_profile::<f64>("deformed-sphere", &[0.37]).unwrap();
        let h = 1e-5;
        for &s in &[0.1, 0.7, 1.3, 2.2, 3.0] {
            let e = p.eval(s);
            let fd1 = (p.u(s + h) - p.u(s - h)) / (2.0 * h);
            let fd2 = (p.eval(s + h).du - p.eval(s - h).du) / (2.0 * h);
            assert!((e.du - fd1).abs() < 1e-9);
            assert!((e.d2u - fd2).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_extra_critical_points() {
        let e = make_profile::<f64>("deformed-sphere", &[-0.5]).unwrap_err();
        assert!(matches!(e, Error::InvalidProfile(_)));
    }

    #[test]
    fn rejects_unknown_family_and_bad_arity() {
        assert!(make_profile::<f64>("torus", &[1.0]).is_err());
        assert!(make_profile::<f64>("deformed-sphere", &[]).is_err());
    }

    #[test]
    fn symbol_values() {
        let sp = SurfaceProfile::<f64>::sphere();
        assert_eq!(symbol_p(&sp, PI / 2.0, 0.0, 1.0).unwrap(), 1.0);
        assert!((symbol_p(&sp, PI / 6.0, 0.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(symbol_p(&sp, 1.0, 1.0, 0.0).unwrap(), 1.0);
        assert!(matches!(symbol_p(&sp, 0.0, 0.0, 1.0), Err(Error::DomainError(_))));
        assert_eq!(symbol_p(&sp, 0.0, 0.5, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn sphere_turning_points_are_arcsin() {
        let sp = SurfaceProfile::<f64>::sphere();
        let (a, b) = turning_points(&sp, 0.5).unwrap();
        assert!((a - PI / 6.0).abs() < 1e-12);
        assert!((b - 5.0 * PI / 6.0).abs() < 1e-12);
        let (a, b) = turning_points(&sp, 1.0 - 1e-9).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-4 && (b - PI / 2.0).abs() < 1e-4);
        assert!(matches!(turning_points(&sp, 1.5), Err(Error::DomainError(_))));
        assert!(matches!(turning_points(&sp, 1.0), Err(Error::DegenerateTorus(_))));
    }

    #[test]
    fn slope_bound_flags_non_embeddable_profiles() {
        let p = make_profile::<f64>("deformed-sphere", &[0.2]).unwrap();
        // max u'^2 ≈ 1.0114 near cos² s = 8/9
        assert!(!p.embeddable());
        assert!((p.max_slope_sq() - 1.0114).abs() < 1e-3);
        assert!(embedding_height(&p, 10).is_err());
        let q = make_profile::<f64>("deformed-sphere", &[0.1]).unwrap();
        assert!(q.embeddable());
    }

    #[test]
    fn single_precision_profile() {
        let p = make_profile::<f32>("deformed-sphere", &[0.2]).unwrap();
        assert!((p.u_max() - 1.2).abs() < 1e-6);
    }
}
