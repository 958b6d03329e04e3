//! Action variables and the EBK quasi-eigenvalue lattice.

use std::cell::RefCell;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{classify, rotation_number, torus_average, torus_integral, RotationClass};
use crate::error::{Error, Result};
use crate::geometry::SurfaceProfile;
use crate::numerics::brent;
use crate::observable::Observable;
use crate::scalar::Real;

/// Meridian action `I1` and angular action `I2 = F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionPair<T> {
    pub i1: T,
    pub i2: T,
}

/// Relative distance to the equator below which the harmonic expansion
/// replaces quadrature.
const EQUATOR_BAND: f64 = 1e-12;

/// `I1 = (1/π) ∫ √(E − F²/u²) ds`, `I2 = F`.
pub fn actions<T: Real>(surface: &SurfaceProfile<T>, e: T, f: T) -> Result<ActionPair<T>> {
    if !(e > T::zero()) || !f.is_finite() {
        return Err(Error::DomainError(format!("actions need E > 0, got E = {e}, F = {f}")));
    }
    let um = surface.u_max();
    let re = e.sqrt();
    let a = f.abs() / re;
    if a > um {
        return Err(Error::DomainError(format!(
            "|F| = {} exceeds u_max·√E = {}",
            f.abs(),
            um * re
        )));
    }
    let gap = um - a;
    let i1 = if gap <= T::c(EQUATOR_BAND) * um {
        // u ≈ u_max − κx²/2 near the equator gives I1 ≈ √E·(u_max − a)/√(u_max·κ).
        let kappa = -surface.eval(surface.s0()).d2u;
        re * gap / (um * kappa).sqrt()
    } else {
        // √(1 − a²/u²) = (1 − a²/u²) · u/√(u² − a²)
        let (v, err) = torus_integral(surface, a, |_, u, du_a| du_a * (u + a) / (u * u))?;
        let tol = T::c(1e-10).max(T::epsilon().sqrt());
        if !(err <= tol * v.abs().max(T::one())) {
            return Err(Error::QuadratureFailure(format!("action integral error estimate {err}")));
        }
        re * v / T::PI()
    };
    Ok(ActionPair { i1, i2: f })
}

/// Energy `E` with `actions(E, F).i1 = i1_target`.
pub fn invert_actions<T: Real>(surface: &SurfaceProfile<T>, i1_target: T, f: T) -> Result<T> {
    if !(i1_target >= T::zero()) || !f.is_finite() {
        return Err(Error::DomainError(format!("I1 target {i1_target} must be >= 0")));
    }
    let um = surface.u_max();
    let r_lo = f.abs() / um;
    if i1_target == T::zero() {
        return Ok(r_lo * r_lo);
    }
    if f == T::zero() {
        // The meridian torus: I1 = √E·L/π.
        let r = T::PI() * i1_target / surface.length();
        return Ok(r * r);
    }
    // Work in r = √E, where I1 is close to linear.
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let residual = |r: T| -> T {
        if r <= r_lo {
            return -i1_target;
        }
        match actions(surface, r * r, f) {
            Ok(p) => p.i1 - i1_target,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::nan()
            }
        }
    };
    let cap = T::c(1e6);
    let mut r_hi = r_lo.max(T::c(1e-3)) * T::c(1.5) + i1_target;
    while residual(r_hi) < T::zero() {
        r_hi = r_hi * T::c(2.0);
        if r_hi > cap {
            return Err(Error::RootNotBracketed(format!(
                "I1 = {i1_target} not reached for E up to {}",
                cap * cap
            )));
        }
    }
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let r = brent(residual, r_lo, r_hi, T::zero(), 200)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let e = r * r;
    let got = actions(surface, e, f)?.i1;
    let slack = T::c(1e-9).max(T::epsilon().sqrt() * i1_target.max(T::one()));
    if (got - i1_target).abs() > slack {
        return Err(Error::RootNotBracketed(format!(
            "inversion stalled: I1(E = {e}) = {got}, target {i1_target}"
        )));
    }
    Ok(e)
}

/// Knobs for [`ebk_lattice`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    pub q_max: u64,
    pub alpha: f64,
    pub d: f64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        Self {
            q_max: 1000,
            alpha: 1e-3,
            d: 0.5,
        }
    }
}

/// One EBK lattice point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiEigenvalue<T> {
    pub k1: i64,
    pub k2: i64,
    pub e: T,
    pub f: T,
    pub z: Complex<T>,
    pub class: RotationClass,
    /// Torus within 1e-3 (relative) of the equatorial orbit.
    pub near_equator: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice<T> {
    pub surface: String,
    pub h: T,
    pub eps: T,
    pub window: (T, T),
    pub entries: Vec<QuasiEigenvalue<T>>,
}

const NEAR_EQUATOR: f64 = 1e-3;

/// Quantized tori `I1 = h(k1 + 1/2)`, `I2 = h·k2` with energies in `window`,
/// ordered by `k2` then `k1`.
pub fn ebk_lattice<T: Real>(
    surface: &SurfaceProfile<T>,
    q: &Observable<T>,
    h: T,
    eps: T,
    window: (T, T),
    opts: &LatticeOptions,
) -> Result<Lattice<T>> {
    let (lo, hi) = window;
    if !(h > T::zero() && h <= T::c(0.5)) {
        return Err(Error::InvalidArgument(format!("h = {h} outside (0, 0.5]")));
    }
    if !(lo > T::zero() && hi >= lo) || !(eps >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "window [{lo}, {hi}] must lie in (0, ∞) and eps = {eps} must be >= 0"
        )));
    }
    let um = surface.u_max();
    let k2_max = (um * hi.sqrt() / h).ceil().to_i64().unwrap_or(0);
    let half = T::c(0.5);
    let per_k2: Vec<Result<Vec<QuasiEigenvalue<T>>>> = (-k2_max..=k2_max)
        .into_par_iter()
        .map(|k2| {
            let f = h * T::from_i64(k2).unwrap();
            if f.abs() >= um * hi.sqrt() {
                return Ok(Vec::new());
            }
            // I1 is increasing in E: bound k1 from the window edges.
            let i1_of = |e: T| -> Result<T> {
                if f.abs() >= um * e.sqrt() {
                    Ok(T::zero())
                } else {
                    Ok(actions(surface, e, f)?.i1)
                }
            };
            let (i_lo, i_hi) = (i1_of(lo)?, i1_of(hi)?);
            let k1_lo = (i_lo / h - half).ceil().max(T::zero()).to_i64().unwrap_or(0);
            let k1_hi = (i_hi / h - half).floor().to_i64().unwrap_or(-1);
            let mut out = Vec::new();
            for k1 in k1_lo..=k1_hi {
                let i1 = h * (T::from_i64(k1).unwrap() + half);
                let e = invert_actions(surface, i1, f)?;
                if e < lo || e > hi {
                    continue;
                }
                out.push(lattice_point(surface, q, eps, k1, k2, e, f, opts)?);
            }
            Ok(out)
        })
        .collect();
    let mut entries = Vec::new();
    for r in per_k2 {
        entries.extend(r?);
    }
    Ok(Lattice {
        surface: format!("{}(beta={})", surface.family().tag(), surface.beta()),
        h,
        eps,
        window,
        entries,
    })
}

#[allow(clippy::too_many_arguments)]
fn lattice_point<T: Real>(
    surface: &SurfaceProfile<T>,
    q: &Observable<T>,
    eps: T,
    k1: i64,
    k2: i64,
    e: T,
    f: T,
    opts: &LatticeOptions,
) -> Result<QuasiEigenvalue<T>> {
    let um = surface.u_max();
    let a = f / e.sqrt();
    let near_equator = um - a.abs() <= T::c(NEAR_EQUATOR) * um;
    let avg = if um - a.abs() <= T::c(EQUATOR_BAND) * um {
        q.theta_mean(surface.s0())
    } else {
        torus_average(surface, q, a)?
    };
    let class = if a == T::zero() {
        RotationClass::Unresolved
    } else {
        match rotation_number(surface, a) {
            Ok(w) => classify(w, opts.q_max, T::c(opts.alpha), T::c(opts.d)),
            Err(Error::DegenerateTorus(_)) => RotationClass::Unresolved,
            Err(e) => return Err(e),
        }
    };
    Ok(QuasiEigenvalue {
        k1,
        k2,
        e,
        f,
        z: Complex::new(e, eps * avg),
        class,
        near_equator,
    })
}
