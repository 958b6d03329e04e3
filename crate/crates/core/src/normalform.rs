//! Fourier–Taylor symbols on `T² × (ξ-grid)`: secular averaging in `x2`,
//! the homological equation and the smoothed weight `G_T`.
//!
//! A symbol is `Σ_k c_k(ξ) e^{ik·x}` over `|k|∞ ≤ K`, with each coefficient
//! sampled on a rectangular ξ-grid. `x`-derivatives are exact (multiplication
//! by `ik`); ξ-derivatives are second-order finite differences.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::Kernel;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default divisor floor for [`solve_homological`].
pub const DEFAULT_FLOOR: f64 = 1e-6;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Uniform rectangular grid in `(ξ1, ξ2)`; index `i1·n[1] + i2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
}

impl XiGrid {
    pub fn new(lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        for j in 0..2 {
            if n[j] < 3 || !(hi[j] > lo[j]) || !lo[j].is_finite() || !hi[j].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "xi grid axis {j}: need n >= 3 and lo < hi, got n = {}, [{}, {}]",
                    n[j], lo[j], hi[j]
                )));
            }
        }
        Ok(Self { lo, hi, n })
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.n[axis] - 1) as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.n[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        [self.coord(0, idx / self.n[1]), self.coord(1, idx % self.n[1])]
    }

    /// Second-order derivative along `axis` of grid samples (one-sided at the
    /// edges, exact for quadratics).
    fn derivative<S>(&self, v: &[S], axis: usize) -> Vec<S>
    where
        S: Copy + std::ops::Sub<Output = S> + std::ops::Add<Output = S> + std::ops::Mul<f64, Output = S>,
    {
        let (n0, n1) = (self.n[0], self.n[1]);
        let d = self.spacing(axis);
        let (len, stride) = if axis == 0 { (n0, n1) } else { (n1, 1) };
        let mut out = v.to_vec();
        let lines: Vec<usize> = if axis == 0 {
            (0..n1).collect()
        } else {
            (0..n0).map(|i| i * n1).collect()
        };
        let c = 0.5 / d;
        for base in lines {
            let at = |i: usize| v[base + i * stride];
            for i in 0..len {
                out[base + i * stride] = if i == 0 {
                    (at(1) * 4.0 - at(0) * 3.0 - at(2)) * c
                } else if i + 1 == len {
                    (at(len - 1) * 3.0 - at(len - 2) * 4.0 + at(len - 3)) * c
                } else {
                    (at(i + 1) - at(i - 1)) * c
                };
            }
        }
        out
    }
}

/// An `x`-independent real symbol `p(ξ)` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiSymbol {
    pub grid: XiGrid,
    pub values: Vec<f64>,
}

impl XiSymbol {
    pub fn from_fn(grid: &XiGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self {
            values: (0..grid.len()).map(|i| f(grid.point(i))).collect(),
            grid: grid.clone(),
        }
    }

    /// `p(ξ) = ξ2 + ξ1²`, the model symbol near a rational torus.
    pub fn model(grid: &XiGrid) -> Self {
        Self::from_fn(grid, |[x1, x2]| x2 + x1 * x1)
    }

    /// `p′(ξ)` at every grid point.
    pub fn gradient(&self) -> Vec<[f64; 2]> {
        let d1 = self.grid.derivative(&self.values, 0);
        let d2 = self.grid.derivative(&self.values, 1);
        d1.into_iter().zip(d2).map(|(a, b)| [a, b]).collect()
    }

    pub fn to_symbol(&self, k_max: i32) -> FourierTaylorSymbol {
        let mut s = FourierTaylorSymbol::zeros(k_max, &self.grid, true);
        let c = s.coeff_mut([0, 0]).expect("zero mode");
        for (z, v) in c.iter_mut().zip(&self.values) {
            *z = C64::new(*v, 0.0);
        }
        s
    }
}

/// `Σ_{|k|∞ ≤ K} c_k(ξ) e^{ik·x}`; dense in `k`, mode index
/// `(k1 + K)(2K + 1) + (k2 + K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTaylorSymbol {
    pub k_max: i32,
    pub grid: XiGrid,
    /// Declares `c_{−k} = conj(c_k)`.
    pub real: bool,
    pub coeffs: Vec<Vec<C64>>,
}

impl FourierTaylorSymbol {
    pub fn zeros(k_max: i32, grid: &XiGrid, real: bool) -> Self {
        let k_max = k_max.max(0);
        let w = (2 * k_max + 1) as usize;
        Self {
            k_max,
            grid: grid.clone(),
            real,
            coeffs: vec![vec![ZERO; grid.len()]; w * w],
        }
    }

    fn width(&self) -> i32 {
        2 * self.k_max + 1
    }

    fn index(&self, k: [i32; 2]) -> Option<usize> {
        let km = self.k_max;
        if k[0].abs() > km || k[1].abs() > km {
            return None;
        }
        Some(((k[0] + km) * self.width() + (k[1] + km)) as usize)
    }

    fn mode_of(&self, idx: usize) -> [i32; 2] {
        let w = self.width();
        let idx = idx as i32;
        [idx / w - self.k_max, idx % w - self.k_max]
    }

    /// All modes in storage order.
    pub fn modes(&self) -> impl Iterator<Item = [i32; 2]> + '_ {
        (0..self.coeffs.len()).map(|i| self.mode_of(i))
    }

    pub fn coeff(&self, k: [i32; 2]) -> Option<&[C64]> {
        self.index(k).map(|i| self.coeffs[i].as_slice())
    }

    pub fn coeff_mut(&mut self, k: [i32; 2]) -> Option<&mut Vec<C64>> {
        self.index(k).map(move |i| &mut self.coeffs[i])
    }

    /// Adds `f(ξ)·e^{ik·x}`. Returns `InvalidArgument` for `|k|∞ > K`.
    pub fn add_mode(&mut self, k: [i32; 2], f: impl Fn([f64; 2]) -> C64) -> Result<()> {
        let grid = self.grid.clone();
        let c = self
            .coeff_mut(k)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {k:?} beyond the cutoff")))?;
        for (i, z) in c.iter_mut().enumerate() {
            *z += f(grid.point(i));
        }
        Ok(())
    }

    /// Adds the real term `a(ξ)·cos(k·x)`.
    pub fn add_cos(&mut self, k: [i32; 2], a: impl Fn([f64; 2]) -> f64) -> Result<()> {
        if k == [0, 0] {
            return self.add_mode(k, |xi| C64::new(a(xi), 0.0));
        }
        self.add_mode(k, |xi| C64::new(0.5 * a(xi), 0.0))?;
        self.add_mode([-k[0], -k[1]], |xi| C64::new(0.5 * a(xi), 0.0))
    }

    /// Adds the real term `a(ξ)·sin(k·x)`.
    pub fn add_sin(&mut self, k: [i32; 2], a: impl Fn([f64; 2]) -> f64) -> Result<()> {
        self.add_mode(k, |xi| C64::new(0.0, -0.5 * a(xi)))?;
        self.add_mode([-k[0], -k[1]], |xi| C64::new(0.0, 0.5 * a(xi)))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.k_max != other.k_max {
            return Err(Error::GridMismatch(format!(
                "K = {} vs {}, grids {:?} vs {:?}",
                self.k_max, other.k_max, self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        out.real = self.real && other.real;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Multiplies every coefficient by `c` (the result stays real only for real `c`).
    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for z in out.coeffs.iter_mut().flatten() {
            *z *= c;
        }
        out.real = self.real && c.im == 0.0;
        out
    }

    /// Keeps only the modes selected by `keep`.
    fn filter(&self, keep: impl Fn([i32; 2]) -> bool) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if !keep(self.mode_of(i)) {
                c.iter_mut().for_each(|z| *z = ZERO);
            }
        }
        out
    }

    /// `sup_ξ Σ_k |c_k(ξ)|`, an upper bound for `sup_{x,ξ}` of the symbol.
    pub fn norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.coeffs.iter().map(|c| c[i].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest `|c_{−k} − conj(c_k)|`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.mode_of(i);
            let mirror = &self.coeffs[self.index([-k[0], -k[1]]).expect("symmetric mode set")];
            for (a, b) in c.iter().zip(mirror) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Value at `x` for grid point `xi_index`.
    pub fn eval(&self, x: [f64; 2], xi_index: usize) -> C64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.mode_of(i);
                c[xi_index] * C64::from_polar(1.0, k[0] as f64 * x[0] + k[1] as f64 * x[1])
            })
            .sum()
    }

    /// `sup_x |symbol(x, ξ)|` over an `nx × nx` grid on the torus.
    pub fn sup_over_x(&self, xi_index: usize, nx: usize) -> f64 {
        let step = std::f64::consts::TAU / nx as f64;
        let mut worst: f64 = 0.0;
        for a in 0..nx {
            for b in 0..nx {
                worst = worst.max(self.eval([a as f64 * step, b as f64 * step], xi_index).norm());
            }
        }
        worst
    }

    /// True when every `k ≠ 0` coefficient is exactly zero.
    pub fn is_x_independent(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| self.mode_of(i) == [0, 0] || c.iter().all(|z| *z == ZERO))
    }

    fn is_zero_mode(&self, idx: usize) -> bool {
        self.coeffs[idx].iter().all(|z| *z == ZERO)
    }
}

/// `⟨sym⟩₂`: the `k2 = 0` modes.
pub fn average_x2(sym: &FourierTaylorSymbol) -> FourierTaylorSymbol {
    sym.filter(|k| k[1] == 0)
}

/// `⟨sym⟩₁`: the `k1 = 0` modes.
pub fn average_x1(sym: &FourierTaylorSymbol) -> FourierTaylorSymbol {
    sym.filter(|k| k[0] == 0)
}

/// The `x2`-dependent part `sym − ⟨sym⟩₂`.
pub fn off_average_x2(sym: &FourierTaylorSymbol) -> FourierTaylorSymbol {
    sym.filter(|k| k[1] != 0)
}

/// `{f, g} = ∂_ξf·∂_xg − ∂_xf·∂_ξg`, truncated to `|k|∞ ≤ K`. The second
/// value is the norm of the discarded product modes.
pub fn poisson_bracket(
    f: &FourierTaylorSymbol,
    g: &FourierTaylorSymbol,
) -> Result<(FourierTaylorSymbol, f64)> {
    f.check_compatible(g)?;
    let grid = &f.grid;
    let npts = grid.len();
    let live = |s: &FourierTaylorSymbol| -> Vec<usize> {
        (0..s.coeffs.len()).filter(|&i| !s.is_zero_mode(i)).collect()
    };
    let (fl, gl) = (live(f), live(g));
    let grads = |s: &FourierTaylorSymbol, idx: &[usize]| -> Vec<[Vec<C64>; 2]> {
        idx.iter()
            .map(|&i| [grid.derivative(&s.coeffs[i], 0), grid.derivative(&s.coeffs[i], 1)])
            .collect()
    };
    let (fd, gd) = (grads(f, &fl), grads(g, &gl));
    let mut out = FourierTaylorSymbol::zeros(f.k_max, grid, f.real && g.real);
    let mut dropped = vec![0.0; npts];
    for (a, &fi) in fl.iter().enumerate() {
        let kf = f.mode_of(fi);
        for (b, &gi) in gl.iter().enumerate() {
            let kg = g.mode_of(gi);
            let k = [kf[0] + kg[0], kf[1] + kg[1]];
            let (ikf, ikg) = (
                [I * kf[0] as f64, I * kf[1] as f64],
                [I * kg[0] as f64, I * kg[1] as f64],
            );
            let (fc, gc) = (&f.coeffs[fi], &g.coeffs[gi]);
            let term = |p: usize| -> C64 {
                let mut t = ZERO;
                for j in 0..2 {
                    t += fd[a][j][p] * ikg[j] * gc[p] - ikf[j] * fc[p] * gd[b][j][p];
                }
                t
            };
            match out.index(k) {
                Some(oi) => {
                    let dst = &mut out.coeffs[oi];
                    for (p, z) in dst.iter_mut().enumerate() {
                        *z += term(p);
                    }
                }
                None => {
                    for (p, d) in dropped.iter_mut().enumerate() {
                        *d += term(p).norm();
                    }
                }
            }
        }
    }
    Ok((out, dropped.into_iter().fold(0.0, f64::max)))
}

/// `H_p G = {p, G} = i(p′(ξ)·k)·Ĝ(k, ξ)` for `x`-independent `p`.
pub fn hamilton_derivative(p: &XiSymbol, g: &FourierTaylorSymbol) -> Result<FourierTaylorSymbol> {
    check_grid(p, g)?;
    let grad = p.gradient();
    let mut out = g.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        let k = g.mode_of(i);
        for (z, dp) in c.iter_mut().zip(&grad) {
            *z *= I * (dp[0] * k[0] as f64 + dp[1] * k[1] as f64);
        }
    }
    Ok(out)
}

fn check_grid(p: &XiSymbol, g: &FourierTaylorSymbol) -> Result<()> {
    if p.grid != g.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", p.grid, g.grid)));
    }
    Ok(())
}

/// Solves `H_p G = rhs − ⟨rhs⟩` modewise. Coefficients whose divisor
/// `|p′(ξ)·k|` falls below `floor` go to the second return value, so that
/// `H_p G + dropped = rhs − (k = 0 modes)`.
pub fn solve_homological(
    p: &XiSymbol,
    rhs: &FourierTaylorSymbol,
    floor: f64,
) -> Result<(FourierTaylorSymbol, FourierTaylorSymbol)> {
    check_grid(p, rhs)?;
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument(format!("divisor floor {floor} must be > 0")));
    }
    let grad = p.gradient();
    let mut g = FourierTaylorSymbol::zeros(rhs.k_max, &rhs.grid, rhs.real);
    let mut dropped = FourierTaylorSymbol::zeros(rhs.k_max, &rhs.grid, rhs.real);
    for i in 0..rhs.coeffs.len() {
        let k = rhs.mode_of(i);
        if k == [0, 0] {
            continue;
        }
        for (pt, dp) in grad.iter().enumerate() {
            let r = rhs.coeffs[i][pt];
            let div = dp[0] * k[0] as f64 + dp[1] * k[1] as f64;
            if div.abs() >= floor {
                g.coeffs[i][pt] = r / (I * div);
            } else {
                dropped.coeffs[i][pt] = r;
            }
        }
    }
    Ok((g, dropped))
}

/// Per-run diagnostics of [`secular_reduce`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    /// Steps completed.
    pub order: usize,
    /// `x2`-dependent residual before the first step.
    pub initial_residual: f64,
    /// `x2`-dependent residual after each step.
    pub step_residuals: Vec<f64>,
    /// Norm of the small-divisor modes left in place at each step.
    pub dropped_norms: Vec<f64>,
    /// Norm of the last Lie-series term kept at each step.
    pub lie_tails: Vec<f64>,
    /// Norm of the product modes cut by the `K` truncation at each step.
    pub truncation_norms: Vec<f64>,
    pub final_residual: f64,
    /// Set when some step residual exceeds its predecessor.
    pub divergence_warning: bool,
}

/// Removes the `x2`-dependence of `p + iεq` order by order: at step `j`,
/// `G_j` solves `H_p G_j = (x2-part of the current symbol)/(iε^j)` and the
/// symbol is replaced by the truncated Lie series
/// `Σ_{n ≤ lie_order} (iε^j)ⁿ/n! · ad_{G_j}ⁿ(·)`, `ad_G = {G, ·}`.
pub fn secular_reduce(
    p: &XiSymbol,
    q: &FourierTaylorSymbol,
    eps: f64,
    steps: usize,
    lie_order: usize,
) -> Result<(FourierTaylorSymbol, ReductionReport)> {
    check_grid(p, q)?;
    if lie_order < steps + 1 {
        return Err(Error::InvalidArgument(format!(
            "lie_order = {lie_order} must be >= steps + 1 = {}",
            steps + 1
        )));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be finite and >= 0")));
    }
    let mut sym = p.to_symbol(q.k_max).add(&q.scale(I * eps))?;
    let initial_residual = off_average_x2(&sym).norm();
    let mut report = ReductionReport {
        order: 0,
        initial_residual,
        step_residuals: Vec::new(),
        dropped_norms: Vec::new(),
        lie_tails: Vec::new(),
        truncation_norms: Vec::new(),
        final_residual: initial_residual,
        divergence_warning: false,
    };
    let mut prev = initial_residual;
    for j in 1..=steps {
        let t = I * eps.powi(j as i32);
        let off = off_average_x2(&sym);
        let (g, dropped) = if off.norm() == 0.0 || eps == 0.0 {
            let z = FourierTaylorSymbol::zeros(q.k_max, &q.grid, true);
            (z.clone(), z)
        } else {
            solve_homological(p, &off.scale(t.inv()), DEFAULT_FLOOR)?
        };
        let mut acc = sym.clone();
        let mut term = sym;
        let mut tail = 0.0;
        let mut cut: f64 = 0.0;
        for n in 1..=lie_order {
            let (b, d) = poisson_bracket(&g, &term)?;
            term = b.scale(t / n as f64);
            cut = cut.max(d * (t.norm().powi(n as i32)));
            tail = term.norm();
            acc = acc.add(&term)?;
        }
        sym = acc;
        let res = off_average_x2(&sym).norm();
        report.step_residuals.push(res);
        report.dropped_norms.push(dropped.norm() * t.norm());
        report.lie_tails.push(tail);
        report.truncation_norms.push(cut);
        if res > prev {
            report.divergence_warning = true;
        }
        prev = res;
        report.order = j;
        report.final_residual = res;
    }
    Ok((sym, report))
}

/// `τ ↦ (1 − K̂(τ), K̂(τ))` for the weight computations.
fn kernel_pair(kernel: Kernel, tau: f64) -> (f64, f64) {
    let om = kernel.one_minus_hat(tau);
    (om, 1.0 - om)
}

fn modewise_in_tau(
    p: &XiSymbol,
    q: &FourierTaylorSymbol,
    horizon: f64,
    f: impl Fn(f64, C64) -> C64 + Sync,
) -> Result<FourierTaylorSymbol> {
    check_grid(p, q)?;
    if !(horizon >= 1.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("T = {horizon} must be >= 1")));
    }
    let grad = p.gradient();
    let coeffs: Vec<Vec<C64>> = (0..q.coeffs.len())
        .into_par_iter()
        .map(|i| {
            let k = q.mode_of(i);
            grad.iter()
                .zip(&q.coeffs[i])
                .map(|(dp, &c)| {
                    if c == ZERO {
                        return ZERO;
                    }
                    f(horizon * (dp[0] * k[0] as f64 + dp[1] * k[1] as f64), c)
                })
                .collect()
        })
        .collect();
    Ok(FourierTaylorSymbol {
        coeffs,
        ..q.clone()
    })
}

/// `Ĝ_T(k, ξ) = T·Ĵ(T p′(ξ)·k)·q̂(k, ξ)` with `Ĵ(τ) = (1 − K̂(τ))/(iτ)`,
/// `Ĵ(0) = 0`.
pub fn gt_weight(
    p: &XiSymbol,
    q: &FourierTaylorSymbol,
    horizon: f64,
    kernel: Kernel,
) -> Result<FourierTaylorSymbol> {
    modewise_in_tau(p, q, horizon, |tau, c| {
        if tau == 0.0 {
            return ZERO;
        }
        let (om, _) = kernel_pair(kernel, tau);
        c * (horizon * om / (I * tau))
    })
}

/// `⟨q⟩_{T,K}`: each mode damped by `K̂(T p′(ξ)·k)`.
pub fn kernel_average(
    p: &XiSymbol,
    q: &FourierTaylorSymbol,
    horizon: f64,
    kernel: Kernel,
) -> Result<FourierTaylorSymbol> {
    modewise_in_tau(p, q, horizon, |tau, c| {
        if tau == 0.0 {
            return c;
        }
        c * kernel_pair(kernel, tau).1
    })
}

/// Fitted constant of `sup_x |G_T(·, ξ)| ≤ C(1 + T/(T|ξ1| + 1))` at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtBoundRow {
    pub horizon: f64,
    /// `sup_{x, ξ} |G_T|`
    pub sup: f64,
    /// Smallest C for which the bound holds at every grid ξ.
    pub constant: f64,
}

/// [`GtBoundRow`] for each horizon; `sup_x` is sampled on an `nx × nx` grid.
pub fn gt_bound_fit(
    p: &XiSymbol,
    q: &FourierTaylorSymbol,
    horizons: &[f64],
    kernel: Kernel,
    nx: usize,
) -> Result<Vec<GtBoundRow>> {
    if nx < 4 {
        return Err(Error::InvalidArgument(format!("nx = {nx} < 4")));
    }
    horizons
        .iter()
        .map(|&t| {
            let g = gt_weight(p, q, t, kernel)?;
            let (mut sup, mut constant) = (0.0f64, 0.0f64);
            for i in 0..g.grid.len() {
                let s = g.sup_over_x(i, nx);
                let xi1 = g.grid.point(i)[0];
                sup = sup.max(s);
                constant = constant.max(s / (1.0 + t / (t * xi1.abs() + 1.0)));
            }
            Ok(GtBoundRow {
                horizon: t,
                sup,
                constant,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> XiGrid {
        XiGrid::new([-0.3, -0.2], [0.3, 0.2], [13, 9]).unwrap()
    }

    #[test]
    fn averages_keep_the_right_modes() {
        let g = grid();
        let mut s = FourierTaylorSymbol::zeros(2, &g, true);
        s.add_cos([1, 0], |_| 1.0).unwrap();
        s.add_cos([0, 1], |_| 2.0).unwrap();
        s.add_cos([0, 0], |[a, _]| a).unwrap();
        assert_eq!(average_x2(&average_x2(&s)), average_x2(&s));
        assert!(average_x2(&s).coeff([0, 1]).unwrap().iter().all(|z| *z == ZERO));
        assert!(average_x1(&s).coeff([1, 0]).unwrap().iter().all(|z| *z == ZERO));
        assert_eq!(average_x1(&average_x2(&s)), s.filter(|k| k == [0, 0]));
    }

    #[test]
    fn generator_bracket() {
        let g = grid();
        let xi1 = XiSymbol::from_fn(&g, |[a, _]| a).to_symbol(2);
        let mut e = FourierTaylorSymbol::zeros(2, &g, false);
        e.add_mode([1, 0], |_| C64::new(1.0, 0.0)).unwrap();
        let (b, cut) = poisson_bracket(&xi1, &e).unwrap();
        assert_eq!(cut, 0.0);
        assert!(b.sub(&e.scale(I)).unwrap().norm() < 1e-13);
    }

    #[test]
    fn homological_single_mode() {
        let g = grid();
        let p = XiSymbol::model(&g);
        let mut rhs = FourierTaylorSymbol::zeros(2, &g, false);
        rhs.add_mode([1, 1], |_| C64::new(1.0, 0.0)).unwrap();
        let (sol, dropped) = solve_homological(&p, &rhs, DEFAULT_FLOOR).unwrap();
        assert_eq!(dropped.norm(), 0.0);
        for (i, z) in sol.coeff([1, 1]).unwrap().iter().enumerate() {
            let [x1, _] = g.point(i);
            let expect = C64::new(1.0, 0.0) / (I * (2.0 * x1 + 1.0));
            assert!((z - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn small_divisors_are_dropped() {
        let g = grid(); // ξ1-grid contains 0
        let p = XiSymbol::model(&g);
        let mut rhs = FourierTaylorSymbol::zeros(2, &g, true);
        rhs.add_cos([1, 0], |_| 1.0).unwrap();
        let (sol, dropped) = solve_homological(&p, &rhs, DEFAULT_FLOOR).unwrap();
        let mid = (0..g.len()).filter(|&i| g.point(i)[0] == 0.0).collect::<Vec<_>>();
        assert!(!mid.is_empty());
        for i in mid {
            assert_eq!(dropped.coeff([1, 0]).unwrap()[i], C64::new(0.5, 0.0));
            assert_eq!(sol.coeff([1, 0]).unwrap()[i], ZERO);
        }
    }

    #[test]
    fn x_independent_q_is_untouched() {
        let g = grid();
        let p = XiSymbol::model(&g);
        let q = XiSymbol::from_fn(&g, |[a, b]| 1.0 + a * b).to_symbol(2);
        let (nf, rep) = secular_reduce(&p, &q, 0.1, 2, 3).unwrap();
        assert_eq!(nf, p.to_symbol(2).add(&q.scale(I * 0.1)).unwrap());
        assert!(rep.step_residuals.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn gt_of_x_independent_q_vanishes() {
        let g = grid();
        let p = XiSymbol::model(&g);
        let q = XiSymbol::from_fn(&g, |[a, _]| a).to_symbol(2);
        assert_eq!(gt_weight(&p, &q, 10.0, Kernel::Bump).unwrap().norm(), 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = FourierTaylorSymbol::zeros(1, &grid(), true);
        let b = FourierTaylorSymbol::zeros(2, &grid(), true);
        assert!(matches!(poisson_bracket(&a, &b), Err(Error::GridMismatch(_))));
    }
}
