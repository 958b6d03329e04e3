//! Bargmann–Fock space on `C` with weight `e^{−|z|²/h}`: Bergman kernel,
//! Toeplitz matrices in the monomial basis, trace bounds, and the cylinder
//! Legendre/Parseval checks.

use std::f64::consts::PI;

use faer::{Mat, MatRef, Side};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{GaussLegendre, TanhSinh};

pub type C64 = Complex<f64>;

/// Largest basis [`verify_trace_bound`] will try before giving up.
pub const MAX_DIM: usize = 4000;
/// Truncation tail allowed by [`verify_trace_bound`].
pub const TAIL_TOL: f64 = 1e-8;

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Orthonormal monomials `e_k(z) = z^k / √(π h^{k+1} k!)`, `k < dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockBasis {
    pub h: f64,
    pub dim: usize,
    /// `ln √(π h^{k+1} k!)`.
    pub log_norms: Vec<f64>,
}

impl FockBasis {
    pub fn new(h: f64, dim: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() || dim == 0 {
            return Err(Error::InvalidArgument(format!("Fock basis needs h > 0 and dim > 0, got h = {h}, dim = {dim}")));
        }
        let mut log_norms = Vec::with_capacity(dim);
        let mut lf = 0.0;
        for k in 0..dim {
            if k > 0 {
                lf += (k as f64).ln();
            }
            log_norms.push(0.5 * (PI.ln() + (k + 1) as f64 * h.ln() + lf));
        }
        Ok(Self { h, dim, log_norms })
    }

    pub fn eval(&self, k: usize, z: C64) -> C64 {
        if z == C64::new(0.0, 0.0) {
            return if k == 0 { C64::new((-self.log_norms[0]).exp(), 0.0) } else { C64::new(0.0, 0.0) };
        }
        let (r, phi) = z.to_polar();
        C64::from_polar((k as f64 * r.ln() - self.log_norms[k]).exp(), k as f64 * phi)
    }
}

/// `(πh)⁻¹ exp(x·ȳ/h)`, the reproducing kernel of the Fock space.
pub fn bergman_kernel(x: C64, y: C64, h: f64) -> C64 {
    (x * y.conj() / h).exp() / (PI * h)
}

/// Builtin compactly supported symbols `p(r, φ) = ρ(r)·(Σ c_n e^{inφ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FockSymbol {
    Zero,
    /// `exp(1 − 1/(1 − r²/R²))` on `r < R`; maximum 1 at the origin.
    Bump { radius: f64 },
    /// Indicator of the disc `r ≤ R`.
    Disc { radius: f64 },
    /// `exp(−r²/w²)` times the bump of radius `R`.
    GaussianBump { width: f64, radius: f64 },
    /// Bump times `1 + a·cos(nφ)`.
    Modulated { radius: f64, harmonic: u32, amplitude: f64 },
}

impl FockSymbol {
    pub fn radius(&self) -> f64 {
        match *self {
            FockSymbol::Zero => 0.0,
            FockSymbol::Bump { radius }
            | FockSymbol::Disc { radius }
            | FockSymbol::GaussianBump { radius, .. }
            | FockSymbol::Modulated { radius, .. } => radius,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            FockSymbol::Zero => true,
            FockSymbol::Bump { radius } | FockSymbol::Disc { radius } => radius > 0.0 && radius.is_finite(),
            FockSymbol::GaussianBump { width, radius } => radius > 0.0 && width > 0.0 && radius.is_finite(),
            FockSymbol::Modulated { radius, harmonic, amplitude } => {
                radius > 0.0 && radius.is_finite() && harmonic > 0 && amplitude.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad symbol parameters {self:?}")))
        }
    }

    pub fn radial(&self, r: f64) -> f64 {
        let bump = |r: f64, big: f64| {
            let t = r / big;
            if t >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / ((1.0 - t) * (1.0 + t))).exp()
            }
        };
        match *self {
            FockSymbol::Zero => 0.0,
            FockSymbol::Bump { radius } | FockSymbol::Modulated { radius, .. } => bump(r, radius),
            FockSymbol::Disc { radius } => {
                if r <= radius {
                    1.0
                } else {
                    0.0
                }
            }
            FockSymbol::GaussianBump { width, radius } => (-(r * r) / (width * width)).exp() * bump(r, radius),
        }
    }

    /// Angular Fourier coefficient `c_n`.
    pub fn angular(&self, n: i64) -> f64 {
        match *self {
            FockSymbol::Modulated { harmonic, amplitude, .. } if n.unsigned_abs() == harmonic as u64 => 0.5 * amplitude,
            _ if n == 0 => 1.0,
            _ => 0.0,
        }
    }

    pub fn eval(&self, z: C64) -> f64 {
        let (r, phi) = z.to_polar();
        let ang = match *self {
            FockSymbol::Modulated { harmonic, amplitude, .. } => 1.0 + amplitude * (harmonic as f64 * phi).cos(),
            _ => 1.0,
        };
        self.radial(r) * ang
    }

    pub fn is_nonnegative(&self) -> bool {
        match *self {
            FockSymbol::Modulated { amplitude, .. } => amplitude.abs() <= 1.0,
            _ => true,
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            FockSymbol::Zero => 0.0,
            FockSymbol::Modulated { amplitude, .. } => 1.0 + amplitude.abs(),
            _ => 1.0,
        }
    }

    /// `∫ p dL` by tanh-sinh in `r` (the angular part integrates to `2π c_0`).
    pub fn l1_norm(&self) -> Result<f64> {
        self.validate()?;
        if matches!(self, FockSymbol::Zero) {
            return Ok(0.0);
        }
        let q = TanhSinh::<f64>::with_tol(1e-14).integrate(0.0, self.radius(), |r, _, _| r * self.radial(r))?;
        Ok(2.0 * PI * q.value)
    }
}

/// Radial quadrature layout: `panels` Gauss–Legendre panels of `order` nodes on `[0, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub panels: usize,
    pub order: usize,
}

impl QuadSpec {
    /// Panels no wider than `√h/4`, so the Gaussian factor is resolved.
    pub fn for_symbol(p: &FockSymbol, h: f64) -> Self {
        let panels = (4.0 * p.radius() / h.sqrt()).ceil().max(8.0) as usize;
        Self { panels, order: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct ToeplitzMatrix {
    pub entries: Mat<C64>,
    pub symbol: FockSymbol,
    pub h: f64,
    pub dim: usize,
    pub quadrature: QuadSpec,
    /// Largest relative change of the radial moments under panel doubling.
    pub quadrature_error: f64,
    /// `max |T − T*|`.
    pub hermitian_defect: f64,
}

/// Radial moments `∫ ρ(r) r^{d+1} e^{−r²/h} dr` for `d < count`, as
/// `(mantissa, log-scale)` pairs.
fn radial_moments(p: &FockSymbol, h: f64, count: usize, spec: QuadSpec) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::<f64>::new(spec.order);
    let big = p.radius();
    let mut nodes = Vec::new();
    for j in 0..spec.panels {
        let a = big * j as f64 / spec.panels as f64;
        let b = big * (j + 1) as f64 / spec.panels as f64;
        let (x, w) = gl.mapped(a, b);
        for (r, wt) in x.into_iter().zip(w) {
            let rho = p.radial(r);
            if rho > 0.0 {
                nodes.push((r.ln(), r * r / h, rho * wt));
            }
        }
    }
    (0..count)
        .map(|d| {
            let e = |(lr, r2h, _): &(f64, f64, f64)| (d + 1) as f64 * lr - r2h;
            let top = nodes.iter().map(e).fold(f64::NEG_INFINITY, f64::max);
            if !top.is_finite() {
                return (0.0, 0.0);
            }
            let sum: f64 = nodes.iter().map(|n| n.2 * (e(n) - top).exp()).sum();
            (sum, top)
        })
        .collect()
}

/// `T_{jk} = ⟨p e_k, e_j⟩` in the Fock space, `j, k < basis.dim`.
///
/// With `p = ρ(r)Σc_n e^{inφ}` the angular integral is exact:
/// `T_{jk} = 2π c_{j−k} ∫ρ r^{j+k+1} e^{−r²/h} dr / (‖z^j‖‖z^k‖)`.
pub fn toeplitz_matrix(p: &FockSymbol, basis: &FockBasis) -> Result<ToeplitzMatrix> {
    p.validate()?;
    let m = basis.dim;
    let h = basis.h;
    let spec = QuadSpec::for_symbol(p, h);
    let mut entries = Mat::<C64>::zeros(m, m);
    let mut quadrature_error: f64 = 0.0;
    if !matches!(p, FockSymbol::Zero) {
        let count = 2 * m - 1;
        let coarse = radial_moments(p, h, count, spec);
        let fine = radial_moments(p, h, count, QuadSpec { panels: 2 * spec.panels, ..spec });
        for (a, b) in coarse.iter().zip(&fine) {
            if b.0 > 0.0 {
                let rel = (a.0 * (a.1 - b.1).exp() / b.0 - 1.0).abs();
                quadrature_error = quadrature_error.max(rel);
            }
        }
        if !(quadrature_error <= 1e-8) {
            return Err(Error::QuadratureFailure(format!(
                "radial moments changed by {quadrature_error:e} under panel doubling"
            )));
        }
        for j in 0..m {
            for k in 0..m {
                let c = p.angular(j as i64 - k as i64);
                if c == 0.0 {
                    continue;
                }
                let (mant, scale) = fine[j + k];
                let v = 2.0 * PI * c * mant * (scale - basis.log_norms[j] - basis.log_norms[k]).exp();
                entries[(j, k)] = C64::new(v, 0.0);
            }
        }
    }
    let mut hermitian_defect: f64 = 0.0;
    for j in 0..m {
        for k in 0..m {
            hermitian_defect = hermitian_defect.max((entries[(j, k)] - entries[(k, j)].conj()).norm());
        }
    }
    Ok(ToeplitzMatrix {
        entries,
        symbol: *p,
        h,
        dim: m,
        quadrature: spec,
        quadrature_error,
        hermitian_defect,
    })
}

/// Singular values, largest first.
pub fn singular_values(m: MatRef<'_, C64>) -> Result<Vec<f64>> {
    m.singular_values()
        .map_err(|e| Error::ConvergenceFailure(format!("SVD failed: {e:?}")))
}

/// `Σ σ_i(T)`.
pub fn trace_norm(m: MatRef<'_, C64>) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

impl ToeplitzMatrix {
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.entries[(k, k)].re).sum()
    }

    pub fn trace_norm(&self) -> Result<f64> {
        trace_norm(self.entries.as_ref())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let herm = Mat::<C64>::from_fn(self.dim, self.dim, |j, k| {
            (self.entries[(j, k)] + self.entries[(k, j)].conj()) * 0.5
        });
        herm.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::ConvergenceFailure(format!("Hermitian eigensolve failed: {e:?}")))
    }
}

/// One row of [`verify_trace_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBoundRow {
    pub h: f64,
    pub dim: usize,
    pub trace: f64,
    pub trace_norm: f64,
    pub l1_norm: f64,
    /// `tr·πh/‖p‖_{L¹}`; `None` for `p ≡ 0`.
    pub ratio: Option<f64>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Bound on `Σ_{k ≥ dim} T_kk`.
    pub tail_estimate: f64,
}

/// `Σ_{k ≥ m} P(N > k)` for `N ~ Poisson(x)`, i.e. `E[(N − m)⁺]`.
fn poisson_excess(x: f64, m: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut n = m + 1;
    loop {
        let ln_pmf = n as f64 * x.ln() - x - ln_factorial(n);
        let term = (n - m) as f64 * ln_pmf.exp();
        total += term;
        if n as f64 > x && term < 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        if n > m + 100_000 {
            break;
        }
        n += 1;
    }
    total
}

/// Upper bound for the diagonal tail `Σ_{k ≥ m} T_kk`: since `ρ ≤ sup p` on
/// `r ≤ R`, `T_kk ≤ sup p · P(Poisson(R²/h) ≥ k + 1)`.
pub fn truncation_tail(p: &FockSymbol, h: f64, m: usize) -> f64 {
    let x = p.radius().powi(2) / h;
    p.sup() * poisson_excess(x, m)
}

/// Checks `tr Top(p) = (πh)⁻¹‖p‖_{L¹}` and `‖Top(p)‖_tr = tr Top(p)` at
/// the given `dim`.
pub fn trace_bound_row(p: &FockSymbol, h: f64, dim: usize) -> Result<TraceBoundRow> {
    if !p.is_nonnegative() {
        return Err(Error::InvalidArgument(format!("symbol {p:?} is not nonnegative")));
    }
    let tail = truncation_tail(p, h, dim);
    if !(tail < TAIL_TOL) {
        return Err(Error::TruncationTooSmall(format!(
            "dim = {dim} leaves a tail of {tail:e} at h = {h}"
        )));
    }
    let t = toeplitz_matrix(p, &FockBasis::new(h, dim)?)?;
    let trace = t.trace();
    let l1 = p.l1_norm()?;
    let eig = t.hermitian_eigenvalues()?;
    Ok(TraceBoundRow {
        h,
        dim,
        trace,
        trace_norm: t.trace_norm()?,
        l1_norm: l1,
        ratio: (l1 > 0.0).then(|| trace * PI * h / l1),
        min_eigenvalue: eig.first().copied().unwrap_or(0.0),
        max_eigenvalue: eig.last().copied().unwrap_or(0.0),
        tail_estimate: tail,
    })
}

/// [`trace_bound_row`] for each `h`, with the smallest basis whose tail is
/// below [`TAIL_TOL`].
pub fn verify_trace_bound(p: &FockSymbol, h_list: &[f64]) -> Result<Vec<TraceBoundRow>> {
    h_list
        .iter()
        .map(|&h| {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!("h = {h} must be > 0")));
            }
            let x = p.radius().powi(2) / h;
            let mut dim = (x + 6.0 * x.sqrt()).ceil().max(8.0) as usize;
            while truncation_tail(p, h, dim) >= TAIL_TOL {
                dim += (dim / 8).max(4);
                if dim > MAX_DIM {
                    return Err(Error::TruncationTooSmall(format!(
                        "no basis up to {MAX_DIM} reaches tail {TAIL_TOL:e} at h = {h}"
                    )));
                }
            }
            trace_bound_row(p, h, dim)
        })
        .collect()
}

/// A function sampled on the uniform grid `lo + i·(hi − lo)/(n − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampled {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl Sampled {
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let mut s = Self { lo, hi, values: vec![0.0; n] };
        for i in 0..n {
            s.values[i] = f(s.x(i));
        }
        s
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.len() {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    fn check_convex(&self) -> Result<()> {
        if self.len() < 3 || !(self.hi > self.lo) {
            return Err(Error::InvalidArgument("need at least 3 samples on a proper interval".into()));
        }
        for (i, w) in self.values.windows(3).enumerate() {
            if !(w[0] - 2.0 * w[1] + w[2] > 0.0) {
                return Err(Error::NotConvex(format!("second difference <= 0 at x = {}", self.x(i + 1))));
            }
        }
        Ok(())
    }
}

/// `Lf(ξ) = max_x (xξ − f(x))` on the grid of discrete slopes of `f`
/// (same number of points), refined by a parabola through the maximizer.
pub fn legendre_transform(f: &Sampled) -> Result<Sampled> {
    f.check_convex()?;
    let n = f.len();
    let d = f.spacing();
    let lo = (f.values[1] - f.values[0]) / d;
    let hi = (f.values[n - 1] - f.values[n - 2]) / d;
    legendre_transform_on(f, lo, hi, n)
}

/// [`legendre_transform`] on a caller-chosen ξ-grid.
pub fn legendre_transform_on(f: &Sampled, xi_lo: f64, xi_hi: f64, n: usize) -> Result<Sampled> {
    f.check_convex()?;
    if n < 2 || !(xi_hi > xi_lo) {
        return Err(Error::InvalidArgument(format!("bad xi grid [{xi_lo}, {xi_hi}] with {n} points")));
    }
    let mut out = Sampled { lo: xi_lo, hi: xi_hi, values: vec![0.0; n] };
    // The maximizer is nondecreasing in ξ for convex f.
    let mut best = 0;
    let g = |i: usize, xi: f64| f.x(i) * xi - f.values[i];
    for j in 0..n {
        let xi = out.x(j);
        while best + 1 < f.len() && g(best + 1, xi) >= g(best, xi) {
            best += 1;
        }
        let mut v = g(best, xi);
        if best > 0 && best + 1 < f.len() {
            let (a, c) = (g(best - 1, xi), g(best + 1, xi));
            let curv = 2.0 * v - a - c;
            if curv > 0.0 {
                v += (c - a).powi(2) / (8.0 * curv);
            }
        }
        out.values[j] = v;
    }
    Ok(out)
}

/// Outcome of [`legendre_duality_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    /// `max |(LΦ₃)(−η) − (η²/2 − √ε Φ₁(η))|` over interior ξ-nodes.
    pub max_defect: f64,
    /// Grid spacing of the `Im z₂` samples.
    pub spacing: f64,
    pub points: usize,
}

/// Builds `Φ₃(t) = sup_η (√ε Φ₁(η) − η²/2 − ηt)` by direct maximization in `η`,
/// Legendre-transforms the samples, and compares `(LΦ₃)(−η)` with
/// `η²/2 − √ε Φ₁(η)` for `η ∈ [eta_lo, eta_hi]`.
pub fn legendre_duality_check(
    phi1: impl Fn(f64) -> f64,
    eps: f64,
    eta_lo: f64,
    eta_hi: f64,
    n: usize,
) -> Result<DualityReport> {
    if !(eps >= 0.0) || !(eta_hi > eta_lo) || n < 5 {
        return Err(Error::InvalidArgument("duality check needs eps >= 0, eta_lo < eta_hi, n >= 5".into()));
    }
    let se = eps.sqrt();
    let f = |eta: f64| 0.5 * eta * eta - se * phi1(eta);
    let fp = |eta: f64| {
        let d = 1e-5 * (1.0 + eta.abs());
        (f(eta + d) - f(eta - d)) / (2.0 * d)
    };
    // The maximizer η*(t) solves f′(η) = −t; cover η-targets with some margin.
    let margin = 0.25 * (eta_hi - eta_lo);
    let (search_lo, search_hi) = (eta_lo - 4.0 * margin, eta_hi + 4.0 * margin);
    let (t_lo, t_hi) = (-fp(eta_hi + margin), -fp(eta_lo - margin));
    if !(t_hi > t_lo) {
        return Err(Error::NotConvex("η²/2 − √ε Φ₁ is not increasing in slope".into()));
    }
    let phi3 = Sampled::from_fn(t_lo, t_hi, n, |t| {
        let eta = golden_max(|e| -(f(e) + e * t), search_lo, search_hi);
        -(f(eta) + eta * t)
    });
    let lphi3 = legendre_transform(&phi3)?;
    let mut max_defect: f64 = 0.0;
    let mut points = 0;
    for j in 1..lphi3.len() - 1 {
        let eta = -lphi3.x(j);
        if eta < eta_lo || eta > eta_hi {
            continue;
        }
        max_defect = max_defect.max((lphi3.values[j] - f(eta)).abs());
        points += 1;
    }
    Ok(DualityReport { max_defect, spacing: phi3.spacing(), points })
}

/// Maximizer of a unimodal function on `[a, b]`.
fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-13 * (1.0 + a.abs().max(b.abs())) {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// Polynomial weight `Φ(t) = Σ c_n tⁿ` of `t = Im z` on the cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyWeight {
    pub coeffs: Vec<f64>,
}

impl PolyWeight {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn derivative(&self) -> PolyWeight {
        PolyWeight {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(n, c)| n as f64 * c).collect(),
        }
    }

    /// Even degree ≥ 2 with positive leading and `Φ″ > 0` on `[−span, span]`.
    fn check_convex(&self, span: f64) -> Result<()> {
        let deg = self.coeffs.len().saturating_sub(1);
        let lead = self.coeffs.last().copied().unwrap_or(0.0);
        let d2 = self.derivative().derivative();
        let ok = deg >= 2 && deg % 2 == 0 && lead > 0.0 && (0..=400).all(|i| d2.eval(-span + 2.0 * span * i as f64 / 400.0) > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::NotConvex(format!("weight {:?} is not strictly convex", self.coeffs)))
        }
    }
}

/// Norm of `e^{ikz/h}`-type modes computed two ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsevalRow {
    pub k: i64,
    /// Critical point of `Φ(t) + kh·t`.
    pub t_crit: f64,
    /// `(2π∫exp(−(2/h)(Φ + kht)) dt)·exp(−(2/h)LΦ(−kh))`.
    pub direct: f64,
    /// `2π√(πh/Φ″(t*))`, the Laplace leading term on the same scale.
    pub laplace: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsevalReport {
    pub h: f64,
    pub rows: Vec<ParsevalRow>,
    pub max_discrepancy: f64,
}

/// Compares the exact mode norms with their Laplace asymptotics, both
/// scaled by `exp(−(2/h)LΦ(−kh))`.
pub fn parseval_check(phi: &PolyWeight, h: f64, k_range: (i64, i64)) -> Result<ParsevalReport> {
    if !(h > 0.0) || k_range.1 < k_range.0 {
        return Err(Error::InvalidArgument(format!("h = {h} and k range {k_range:?}")));
    }
    let d1 = phi.derivative();
    let d2 = d1.derivative();
    let kmax = k_range.0.unsigned_abs().max(k_range.1.unsigned_abs()) as f64 * h;
    let mut rows = Vec::new();
    for k in k_range.0..=k_range.1 {
        let xi = k as f64 * h;
        // Φ′(t) + ξ = 0 by safeguarded Newton on a growing bracket.
        let (mut lo, mut hi) = (-1.0, 1.0);
        while d1.eval(lo) + xi > 0.0 {
            lo *= 2.0;
        }
        while d1.eval(hi) + xi < 0.0 {
            hi *= 2.0;
        }
        phi.check_convex(lo.abs().max(hi.abs()).max(kmax))?;
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = d1.eval(t) + xi;
            if g == 0.0 {
                break;
            }
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let step = t - g / d2.eval(t);
            t = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if (hi - lo) < 1e-15 || g.abs() < 1e-15 {
                break;
            }
        }
        let m = phi.eval(t) + xi * t;
        let curv = d2.eval(t);
        let width = (h / curv).sqrt();
        let span = 40.0 * width;
        let q = TanhSinh::<f64>::with_tol(1e-14).integrate(t - span, t + span, |s, _, _| {
            (-(2.0 / h) * (phi.eval(s) + xi * s - m)).exp()
        })?;
        let direct = 2.0 * PI * q.value;
        let laplace = 2.0 * PI * (PI * h / curv).sqrt();
        rows.push(ParsevalRow {
            k,
            t_crit: t,
            direct,
            laplace,
            discrepancy: (direct / laplace - 1.0).abs(),
        });
    }
    let max_discrepancy = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    Ok(ParsevalReport { h, rows, max_discrepancy })
}
