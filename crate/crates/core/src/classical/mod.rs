//! Classical dynamics on the invariant tori: rotation numbers, averages,
//! Q_∞ intervals and arithmetic classification.

pub mod classify;
pub mod flow;
pub mod torus;

pub use classify::{classify, convergents, rationals_of_height, RotationClass};
pub use flow::{flow_average, q_infinity, q_infinity_sector, rotation_number_by_flow, Interval, Kernel, PhasePoint};
pub use torus::{rotation_number, torus_average, torus_integral, Torus};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfaceProfile;
use crate::numerics::brent;
use crate::observable::Observable;

/// Knobs shared by scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Flow-averaging horizon T.
    pub horizon: f64,
    pub n_starts: usize,
    pub kernel: Kernel,
    pub q_max: u64,
    pub alpha: f64,
    pub d: f64,
    /// Rational tori up to this height are located and inserted into scans.
    pub max_height: i64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            horizon: 200.0,
            n_starts: 16,
            kernel: Kernel::Bump,
            q_max: 1000,
            alpha: 1e-3,
            d: 0.5,
            max_height: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub a: f64,
    pub omega: f64,
    pub class: RotationClass,
    pub q_avg: f64,
    pub q_inf: Interval<f64>,
    /// Horizon used for Q_∞ (0 when the singleton {⟨q⟩} was recorded).
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalScan {
    pub surface: String,
    pub u_max: f64,
    pub rows: Vec<ScanRow>,
}

/// Scans tori over an a-grid (plus located low-height rational tori).
///
/// Rational tori get Q_∞ from flow sampling; for all others Q_∞ is recorded
/// as the singleton {⟨q⟩}, which is what it converges to off resonance.
pub fn scan(
    surface: &SurfaceProfile<f64>,
    q: &Observable<f64>,
    a_grid: &[f64],
    opts: &ScanOptions,
) -> Result<ClassicalScan> {
    let mut grid: Vec<f64> = a_grid.to_vec();
    grid.sort_by(|x, y| x.total_cmp(y));
    grid.dedup();
    let omegas: Vec<f64> = grid
        .par_iter()
        .map(|&a| rotation_number(surface, a))
        .collect::<Result<_>>()?;

    let mut points: Vec<(f64, f64, Option<(i64, i64)>)> =
        grid.iter().zip(&omegas).map(|(&a, &w)| (a, w, None)).collect();
    for w in 0..grid.len().saturating_sub(1) {
        let (a0, a1) = (grid[w], grid[w + 1]);
        if a0.signum() != a1.signum() || a0 == 0.0 || a1 == 0.0 {
            continue;
        }
        for h in 2..=opts.max_height {
            for (m, n) in rationals_of_height(h) {
                let target = m as f64 / n as f64;
                let (w0, w1) = (omegas[w] - target, omegas[w + 1] - target);
                // Grid points already resolving the resonance are classified as is.
                if w0 * w1 < 0.0 && w0.abs().min(w1.abs()) > 1e-9 {
                    let a = locate_resonance(surface, target, a0, a1)?;
                    points.push((a, target, Some((m, n))));
                }
            }
        }
    }
    points.sort_by(|x, y| x.0.total_cmp(&y.0));

    let rows: Vec<Result<ScanRow>> = points
        .par_iter()
        .map(|&(a, omega, located)| {
            let class = match located {
                Some((m, n)) => RotationClass::Rational {
                    m,
                    n,
                    height: m.abs() + n,
                },
                None => classify(omega, opts.q_max, opts.alpha, opts.d),
            };
            let q_avg = torus_average(surface, q, a)?;
            let (q_inf, horizon) = if let RotationClass::Rational { n, .. } = class {
                let sector = std::f64::consts::TAU / n as f64;
                (
                    q_infinity_sector(surface, q, a, opts.horizon, opts.n_starts, sector, opts.kernel)?,
                    opts.horizon,
                )
            } else {
                (Interval::point(q_avg), 0.0)
            };
            Ok(ScanRow {
                a,
                omega,
                class,
                q_avg,
                q_inf,
                horizon,
            })
        })
        .collect();
    Ok(ClassicalScan {
        surface: surface_id(surface),
        u_max: surface.u_max(),
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

pub fn surface_id(surface: &SurfaceProfile<f64>) -> String {
    format!("{}(beta={})", surface.family().tag(), surface.beta())
}

/// Solves `ω(a) = target` on `[lo, hi]`.
pub fn locate_resonance(surface: &SurfaceProfile<f64>, target: f64, lo: f64, hi: f64) -> Result<f64> {
    let mut failure = None;
    let a = brent(
        |a| match rotation_number(surface, a) {
            Ok(w) => w - target,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-14,
        200,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(a),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub height: i64,
    pub m: i64,
    pub n: i64,
    pub a: f64,
    pub width: f64,
}

/// Q_∞ width at a rational torus of each requested height inside `edge`.
///
/// When several fractions of one height occur, the one with the smallest
/// denominator is used.
pub fn width_vs_height(
    surface: &SurfaceProfile<f64>,
    q: &Observable<f64>,
    edge: (f64, f64),
    heights: &[i64],
    opts: &ScanOptions,
) -> Result<Vec<WidthRow>> {
    let (lo, hi) = (edge.0.min(edge.1), edge.0.max(edge.1));
    const SAMPLES: usize = 64;
    let grid: Vec<f64> = (0..=SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / SAMPLES as f64)
        .collect();
    let omegas: Vec<f64> = grid
        .par_iter()
        .map(|&a| rotation_number(surface, a))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for &h in heights {
        let mut found = None;
        'search: for (m, n) in rationals_of_height(h) {
            let target = m as f64 / n as f64;
            for i in 0..SAMPLES {
                let (w0, w1) = (omegas[i] - target, omegas[i + 1] - target);
                if w0 == 0.0 {
                    found = Some((m, n, grid[i]));
                    break 'search;
                }
                if w0 * w1 < 0.0 {
                    found = Some((m, n, locate_resonance(surface, target, grid[i], grid[i + 1])?));
                    break 'search;
                }
            }
        }
        let Some((m, n, a)) = found else {
            return Err(Error::RootNotBracketed(format!(
                "no rotation number of height {h} on a ∈ [{lo}, {hi}] (ω ranges over [{}, {}])",
                omegas.iter().cloned().fold(f64::INFINITY, f64::min),
                omegas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            )));
        };
        let sector = std::f64::consts::TAU / n as f64;
        let qi = q_infinity_sector(surface, q, a, opts.horizon, opts.n_starts, sector, opts.kernel)?;
        out.push(WidthRow {
            height: h,
            m,
            n,
            a,
            width: qi.width(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_profile;

    #[test]
    fn sphere_scan_is_all_rational_one() {
        let sp = SurfaceProfile::<f64>::sphere();
        let grid: Vec<f64> = (1..10).map(|i| i as f64 * 0.1).collect();
        let opts = ScanOptions {
            n_starts: 8,
            horizon: 30.0,
            ..Default::default()
        };
        let s = scan(&sp, &Observable::cos_sq(), &grid, &opts).unwrap();
        assert_eq!(s.rows.len(), 9);
        for r in &s.rows {
            assert!((r.omega - 1.0).abs() < 1e-9);
            assert_eq!(r.class, RotationClass::Rational { m: 1, n: 1, height: 2 });
        }
    }

    #[test]
    fn deformed_scan_inserts_resonances() {
        let p = make_profile::<f64>("deformed-sphere", &[0.2]).unwrap();
        let grid = [0.3, 0.6, 0.9];
        let opts = ScanOptions {
            max_height: 9,
            n_starts: 8,
            horizon: 50.0,
            ..Default::default()
        };
        let s = scan(&p, &Observable::cos_2s(), &grid, &opts).unwrap();
        // ω decreases from 0.899 to 0.761: 4/5 (height 9) lies inside.
        let rational: Vec<_> = s.rows.iter().filter(|r| r.class.is_rational()).collect();
        assert_eq!(rational.len(), 1);
        assert!((rational[0].omega - 0.8).abs() < 1e-15);
        assert!((rotation_number(&p, rational[0].a).unwrap() - 0.8).abs() < 1e-12);
        for w in s.rows.windows(2) {
            assert!(w[0].a < w[1].a);
        }
    }

    #[test]
    fn width_fails_without_resonance() {
        let p = make_profile::<f64>("deformed-sphere", &[0.2]).unwrap();
        let e = width_vs_height(&p, &Observable::cos_2s(), (0.05, 1.19), &[3], &ScanOptions::default())
            .unwrap_err();
        assert!(matches!(e, Error::RootNotBracketed(_)));
    }
}
