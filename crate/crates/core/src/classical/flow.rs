//! Geodesic flow, smoothed flow averages and the Q_∞ intervals.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::torus::Torus;
use crate::error::{Error, Result};
use crate::geometry::{symbol_p, SurfaceProfile};
use crate::numerics::{Gbs, OdeSystem, TanhSinh};
use crate::observable::Observable;
use crate::scalar::Real;

/// Averaging kernels on `(-1, 1)`, even with unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `exp(−1/(1 − t²))`, normalized.
    #[default]
    Bump,
    /// Uniform weight 1/2.
    Box,
}

const BUMP_HAT_CUTOFF: f64 = 1000.0;

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        TanhSinh::<f64>::default()
            .integrate(-1.0, 1.0, |_, xa, xb| (-1.0 / (xa * xb)).exp())
            .expect("bump mass quadrature")
            .value
    })
}

impl Kernel {
    pub fn eval<T: Real>(&self, t: T) -> T {
        if t.abs() >= T::one() {
            return match self {
                Kernel::Box if t.abs() == T::one() => T::c(0.5),
                _ => T::zero(),
            };
        }
        match self {
            Kernel::Bump => {
                let one_minus = (T::one() - t) * (T::one() + t);
                (-T::one() / one_minus).exp() / T::c(bump_mass())
            }
            Kernel::Box => T::c(0.5),
        }
    }

    /// `K_T(t) = K(t/T)/T`.
    pub fn scaled<T: Real>(&self, t: T, horizon: T) -> T {
        self.eval(t / horizon) / horizon
    }

    /// `1 − K̂(τ)` with `K̂(τ) = ∫ K(t) e^{−itτ} dt`, evaluated as
    /// `∫ 2K(t) sin²(tτ/2) dt` to avoid cancellation at small τ.
    pub fn one_minus_hat(&self, tau: f64) -> f64 {
        match self {
            Kernel::Box => {
                if tau.abs() < 1e-4 {
                    let t2 = tau * tau;
                    t2 / 6.0 - t2 * t2 / 120.0
                } else {
                    1.0 - tau.sin() / tau
                }
            }
            Kernel::Bump => {
                // |K̂(τ)| ~ e^{−√(2τ)}: below 1e-15 from τ = 1000 on.
                if tau.abs() >= BUMP_HAT_CUTOFF {
                    return 1.0;
                }
                let half = 0.5 * tau;
                // The integrand oscillates ~|τ|/π times; split into panels.
                let panels = ((tau.abs() / std::f64::consts::PI).ceil() as usize).clamp(1, 4096);
                let ts = TanhSinh::<f64>::default();
                let mut acc = 0.0;
                for j in 0..panels {
                    let a = -1.0 + 2.0 * j as f64 / panels as f64;
                    let b = -1.0 + 2.0 * (j + 1) as f64 / panels as f64;
                    acc += ts
                        .integrate(a, b, |t, _, _| {
                            let s = (t * half).sin();
                            2.0 * Kernel::Bump.eval(t) * s * s
                        })
                        .map(|q| q.value)
                        .unwrap_or(f64::NAN);
                }
                acc
            }
        }
    }

    pub fn hat(&self, tau: f64) -> f64 {
        1.0 - self.one_minus_hat(tau)
    }
}

/// A point `(s, θ, σ, θ*)` of T*M in geodesic polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint<T> {
    pub s: T,
    pub theta: T,
    pub sigma: T,
    pub theta_star: T,
}

impl<T: Real> PhasePoint<T> {
    /// The point of Λ on the transverse circle `s = s0`, `σ > 0`.
    pub fn on_transverse_circle(surface: &SurfaceProfile<T>, torus: &Torus<T>, theta: T) -> Self {
        let um = surface.u_max();
        let sig2 = torus.e - torus.f * torus.f / (um * um);
        Self {
            s: surface.s0(),
            theta,
            sigma: sig2.max(T::zero()).sqrt(),
            theta_star: torus.f,
        }
    }
}

/// Hamilton's equations for `p = σ² + F²/u²`, plus an accumulator
/// `İ = K_T(t) q(s, θ)`.
struct Geodesic<'a, T: Real> {
    surface: &'a SurfaceProfile<T>,
    f: T,
    q: Option<&'a Observable<T>>,
    kernel: Kernel,
    horizon: T,
}

impl<T: Real> OdeSystem<T> for Geodesic<'_, T> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) {
        let two = T::c(2.0);
        let p = self.surface.eval(y[0]);
        let inv_u2 = T::one() / (p.u * p.u);
        dy[0] = two * y[2];
        dy[1] = two * self.f * inv_u2;
        dy[2] = two * self.f * self.f * p.du * inv_u2 / p.u;
        dy[3] = match self.q {
            Some(q) => self.kernel.scaled(t, self.horizon) * q.eval(y[0], y[1]),
            None => T::zero(),
        };
    }
}

fn integrator<T: Real>() -> Gbs<T> {
    Gbs {
        h_init: T::c(0.01),
        h_max: T::c(0.5),
        ..Gbs::default()
    }
}

fn energy_drift<T: Real>(surface: &SurfaceProfile<T>, e: T, f: T, y: &[T]) -> Result<T> {
    let pe = symbol_p(surface, y[0], y[2], f)?;
    Ok(((pe - e) / e).abs())
}

const DRIFT_TOL: f64 = 1e-9;

/// Smoothed flow average `∫ K_T(t) q(exp(tH_p)(start)) dt`.
pub fn flow_average<T: Real>(
    surface: &SurfaceProfile<T>,
    q: &Observable<T>,
    torus: &Torus<T>,
    start: &PhasePoint<T>,
    horizon: T,
    kernel: Kernel,
) -> Result<T> {
    if !(horizon > T::zero()) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let e = torus.e;
    let on_torus = symbol_p(surface, start.s, start.sigma, start.theta_star)
        .map(|p| (p - e).abs() <= T::c(1e-10).max(T::epsilon() * T::c(64.0)) * e.max(T::one()))
        .unwrap_or(false);
    if !on_torus || (start.theta_star - torus.f).abs() > T::c(1e-10).max(T::epsilon() * T::c(64.0)) {
        return Err(Error::DomainError("start point does not lie on the torus".into()));
    }
    if q.is_constant() {
        return Ok(q.eval(start.s, start.theta));
    }
    let sys = Geodesic {
        surface,
        f: torus.f,
        q: Some(q),
        kernel,
        horizon,
    };
    let y0 = [start.s, start.theta, start.sigma, T::zero()];
    let gbs = integrator::<T>();
    let mut total = T::zero();
    for end in [horizon, -horizon] {
        let y = gbs.integrate(&sys, T::zero(), &y0, end, |_, _| {})?;
        let drift = energy_drift(surface, e, torus.f, &y)?;
        if drift > T::c(DRIFT_TOL).max(T::epsilon().sqrt()) {
            return Err(Error::IntegrationFailure(format!(
                "relative energy drift {drift} over horizon {horizon}"
            )));
        }
        total += if end > T::zero() { y[3] } else { -y[3] };
    }
    Ok(total)
}

/// Closed interval of reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn point(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> T {
        (self.lo + self.hi) * T::c(0.5)
    }

    pub fn contains(&self, v: T, slack: T) -> bool {
        v >= self.lo - slack && v <= self.hi + slack
    }

    pub fn distance_to(&self, v: T) -> T {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            T::zero()
        }
    }
}

/// Finite-(T, n_starts) approximation of Q_∞(Λ_a) on the unit-energy
/// torus: the hull of flow averages over starts evenly spaced in θ on the
/// transverse circle.
pub fn q_infinity<T: Real>(
    surface: &SurfaceProfile<T>,
    q: &Observable<T>,
    a: T,
    horizon: T,
    n_starts: usize,
    kernel: Kernel,
) -> Result<Interval<T>> {
    q_infinity_sector(surface, q, a, horizon, n_starts, T::TAU(), kernel)
}

/// [`q_infinity`] with start phases spread over `[0, sector)` only.
///
/// On a torus with ω = m/n the orbit through θ₀ also passes θ₀ + 2πj/n, so
/// `sector = 2π/n` already visits every closed orbit.
pub fn q_infinity_sector<T: Real>(
    surface: &SurfaceProfile<T>,
    q: &Observable<T>,
    a: T,
    horizon: T,
    n_starts: usize,
    sector: T,
    kernel: Kernel,
) -> Result<Interval<T>> {
    if n_starts < 8 {
        return Err(Error::InvalidArgument(format!("n_starts = {n_starts} < 8")));
    }
    if !(sector > T::zero()) {
        return Err(Error::InvalidArgument(format!("sector {sector} must be positive")));
    }
    let torus = Torus::from_a(surface, a)?;
    let values: Vec<Result<T>> = (0..n_starts)
        .into_par_iter()
        .map(|j| {
            let th = sector * T::from_usize_lossy(j) / T::from_usize_lossy(n_starts);
            let start = PhasePoint::on_transverse_circle(surface, &torus, th);
            flow_average(surface, q, &torus, &start, horizon, kernel)
        })
        .collect();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for v in values {
        let v = v?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(Interval { lo, hi })
}

/// Angle advanced per meridian oscillation, divided by 2π — an ODE route
/// to the rotation number independent of the quadrature formula.
pub fn rotation_number_by_flow<T: Real>(surface: &SurfaceProfile<T>, a: T) -> Result<T> {
    let torus = Torus::from_a(surface, a)?;
    let start = PhasePoint::on_transverse_circle(surface, &torus, T::zero());
    let sys = Geodesic {
        surface,
        f: torus.f,
        q: None,
        kernel: Kernel::Bump,
        horizon: T::one(),
    };
    let s0 = surface.s0();
    let y0 = [start.s, start.theta, start.sigma, T::zero()];
    let gbs = integrator::<T>();
    let (_, y) = gbs.integrate_to_event(&sys, T::zero(), &y0, T::c(1e4), |_, y| y[0] - s0)?;
    Ok(y[1] / T::TAU())
}
