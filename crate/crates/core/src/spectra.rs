//! Discretizations of `P_ε = −h²Δ + iεq` and their complex spectra.
//!
//! Angular Fourier modes `e^{imθ}` reduce the Laplacian to
//! `−h²u⁻¹(u ψ′)′ + h²m²u⁻²ψ` on `(0, L)`. The radial part is discretized as
//! a finite-volume flux on the cell-centred grid `s_i = (i + ½)·L/N`, with the
//! flux through the poles vanishing because `u(0) = u(L) = 0`. Two
//! equivalent matrix forms are provided:
//!
//! * [`Scheme::Symmetric`] — conjugated by `u^{1/2}`, so the matrix is complex
//!   symmetric (real symmetric for ε = 0) and tridiagonal;
//! * [`Scheme::Weighted`] — the raw flux form, self-adjoint only in the
//!   `u`-weighted inner product.

use faer::Mat;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfaceProfile;
use crate::numerics::{symmetric_tridiagonal_eigenvalues, Tridiagonal};
use crate::observable::Observable;

pub type C64 = Complex<f64>;

/// Default cap on dense matrix dimension.
pub const DENSE_CAP: usize = 6000;

/// Residual threshold every reported eigenpair must meet.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Grid points per semiclassical wavelength `2πh` required at unit energy.
pub const POINTS_PER_WAVELENGTH: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Symmetric,
    Weighted,
}

/// Cell-centred grid on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub spacing: f64,
    pub length: f64,
}

impl GridSpec {
    pub fn new(length: f64, n: usize) -> Self {
        Self {
            n,
            spacing: length / n as f64,
            length,
        }
    }

    pub fn centre(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing
    }

    pub fn face(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModeTag {
    Mode { m: i64 },
    Coupled2d { m_theta: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Tridiagonal(Tridiagonal),
    Dense(Mat<C64>),
}

/// A discretized operator with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub entries: Entries,
    pub grid: GridSpec,
    pub mode: ModeTag,
    pub h: f64,
    pub eps: f64,
    pub q_id: String,
    pub scheme: Scheme,
}

impl OperatorMatrix {
    pub fn n(&self) -> usize {
        match &self.entries {
            Entries::Tridiagonal(t) => t.n(),
            Entries::Dense(m) => m.nrows(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.entries {
            Entries::Tridiagonal(t) => {
                if i == j {
                    t.diag[i]
                } else if i == j + 1 {
                    t.lower[j]
                } else if j == i + 1 {
                    t.upper[i]
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Entries::Dense(m) => m[(i, j)],
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match &self.entries {
            Entries::Dense(m) => m.clone(),
            Entries::Tridiagonal(_) => Mat::from_fn(self.n(), self.n(), |i, j| self.get(i, j)),
        }
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n();
        match &self.entries {
            Entries::Tridiagonal(t) => t
                .lower
                .iter()
                .zip(&t.upper)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
            Entries::Dense(m) => {
                let mut worst = 0.0f64;
                for j in 0..n {
                    for i in j + 1..n {
                        worst = worst.max((m[(i, j)] - m[(j, i)]).norm());
                    }
                }
                worst
            }
        }
    }
}

fn check_grid(surface: &SurfaceProfile<f64>, h: f64, n: usize) -> Result<GridSpec> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h = {h} must be positive")));
    }
    if n < 200 {
        return Err(Error::InvalidArgument(format!("N = {n} < 200")));
    }
    let grid = GridSpec::new(surface.length(), n);
    let ppw = std::f64::consts::TAU * h / grid.spacing;
    if ppw < POINTS_PER_WAVELENGTH {
        return Err(Error::GridTooCoarse(format!(
            "{ppw:.1} points per wavelength 2πh (h = {h}, N = {n}); need {POINTS_PER_WAVELENGTH}"
        )));
    }
    Ok(grid)
}

/// `u` at cell faces (exactly zero at the poles) and centres.
fn profile_samples(surface: &SurfaceProfile<f64>, grid: &GridSpec) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n;
    let mut faces: Vec<f64> = (0..=n).map(|i| surface.u(grid.face(i))).collect();
    faces[0] = 0.0;
    faces[n] = 0.0;
    let centres = (0..n).map(|i| surface.u(grid.centre(i))).collect();
    (faces, centres)
}

/// Short identifier for an observable, echoed into results.
pub fn observable_id(q: &Observable<f64>) -> String {
    serde_json::to_string(q).unwrap_or_default()
}

/// The operator on the angular mode `m` for a θ-independent `q`.
pub fn mode_operator(
    surface: &SurfaceProfile<f64>,
    h: f64,
    m: i64,
    eps: f64,
    q: &Observable<f64>,
    n: usize,
    scheme: Scheme,
) -> Result<OperatorMatrix> {
    if !q.is_rotational() {
        return Err(Error::InvalidArgument(
            "mode_operator needs a θ-independent observable".into(),
        ));
    }
    let grid = check_grid(surface, h, n)?;
    let qs: Vec<f64> = (0..n).map(|i| q.theta_mean(grid.centre(i))).collect();
    let t = radial_block(surface, &grid, h, m, eps, &qs, scheme);
    Ok(OperatorMatrix {
        entries: Entries::Tridiagonal(t),
        grid,
        mode: ModeTag::Mode { m },
        h,
        eps,
        q_id: observable_id(q),
        scheme,
    })
}

fn radial_block(
    surface: &SurfaceProfile<f64>,
    grid: &GridSpec,
    h: f64,
    m: i64,
    eps: f64,
    q_diag: &[f64],
    scheme: Scheme,
) -> Tridiagonal {
    let n = grid.n;
    let (uf, uc) = profile_samples(surface, grid);
    let h2 = h * h;
    let inv_d2 = 1.0 / (grid.spacing * grid.spacing);
    let m2 = (m * m) as f64;
    let diag = (0..n)
        .map(|i| {
            let flux = (uf[i] + uf[i + 1]) / uc[i] * inv_d2;
            C64::new(h2 * (flux + m2 / (uc[i] * uc[i])), eps * q_diag[i])
        })
        .collect();
    let (lower, upper) = match scheme {
        Scheme::Symmetric => {
            let off: Vec<C64> = (0..n - 1)
                .map(|i| C64::new(-h2 * uf[i + 1] / (uc[i] * uc[i + 1]).sqrt() * inv_d2, 0.0))
                .collect();
            (off.clone(), off)
        }
        Scheme::Weighted => (
            (0..n - 1)
                .map(|i| C64::new(-h2 * uf[i + 1] / uc[i + 1] * inv_d2, 0.0))
                .collect(),
            (0..n - 1)
                .map(|i| C64::new(-h2 * uf[i + 1] / uc[i] * inv_d2, 0.0))
                .collect(),
        ),
    };
    Tridiagonal { diag, lower, upper }
}

/// Block operator over the angular modes `|m| ≤ M_θ`, coupled by the
/// θ-Fourier coefficients of `q`.
#[allow(clippy::too_many_arguments)]
pub fn operator_2d(
    surface: &SurfaceProfile<f64>,
    h: f64,
    eps: f64,
    q: &Observable<f64>,
    n_s: usize,
    m_theta: usize,
    scheme: Scheme,
    cap: usize,
) -> Result<OperatorMatrix> {
    let degree = q.theta_degree() as usize;
    if 4 * degree > m_theta {
        return Err(Error::InvalidArgument(format!(
            "θ-degree {degree} of q exceeds M_θ/4 = {}",
            m_theta as f64 / 4.0
        )));
    }
    let blocks = 2 * m_theta + 1;
    let dim = blocks * n_s;
    if dim > cap {
        return Err(Error::SizeLimit(format!(
            "dimension (2·{m_theta} + 1)·{n_s} = {dim} exceeds the cap {cap}"
        )));
    }
    let grid = check_grid(surface, h, n_s)?;
    let centres: Vec<f64> = (0..n_s).map(|i| grid.centre(i)).collect();
    let q0: Vec<f64> = centres.iter().map(|&s| q.fourier(0, s).re).collect();
    let coupling: Vec<Vec<C64>> = (1..=degree as i32)
        .flat_map(|k| [k, -k])
        .map(|k| centres.iter().map(|&s| q.fourier(k, s)).collect())
        .collect();
    let mut a = Mat::<C64>::zeros(dim, dim);
    let mt = m_theta as i64;
    for (b, m) in (-mt..=mt).enumerate() {
        let t = radial_block(surface, &grid, h, m, eps, &q0, scheme);
        let o = b * n_s;
        for i in 0..n_s {
            a[(o + i, o + i)] = t.diag[i];
            if i + 1 < n_s {
                a[(o + i + 1, o + i)] = t.lower[i];
                a[(o + i, o + i + 1)] = t.upper[i];
            }
        }
        // Row mode m couples to column mode m − k through iε q̂_k.
        for (idx, k) in (1..=degree as i64).flat_map(|k| [k, -k]).enumerate() {
            let mc = m - k;
            if mc < -mt || mc > mt {
                continue;
            }
            let oc = (mc + mt) as usize * n_s;
            for i in 0..n_s {
                a[(o + i, oc + i)] = C64::new(0.0, eps) * coupling[idx][i];
            }
        }
    }
    Ok(OperatorMatrix {
        entries: Entries::Dense(a),
        grid,
        mode: ModeTag::Coupled2d { m_theta },
        h,
        eps,
        q_id: observable_id(q),
        scheme,
    })
}

/// Axis-aligned rectangle of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Rect {
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re.0 && z.re <= self.re.1 && z.im >= self.im.0 && z.im <= self.im.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: C64,
    pub mode: ModeTag,
    /// `‖(A − λ)v‖ / (‖A‖_∞ ‖v‖)`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub surface: String,
    pub q_id: String,
    pub h: f64,
    pub eps: f64,
    pub grid: GridSpec,
    pub scheme: Scheme,
    /// Highest |m| included (rotational) or M_θ (coupled).
    pub m_max: usize,
    pub rect: Option<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Eigenpair>,
    pub params: SpectrumParams,
    /// Eigenvalues of modes `m > 0` stand for both `±m`; each is stored once.
    pub mirrored: bool,
}

impl SpectrumResult {
    /// Eigenvalues with multiplicity, expanding mirrored modes to `±m`.
    pub fn expanded(&self) -> Vec<Eigenpair> {
        let mut out = Vec::with_capacity(self.eigenvalues.len() * 2);
        for e in &self.eigenvalues {
            out.push(*e);
            if self.mirrored {
                if let ModeTag::Mode { m } = e.mode {
                    if m != 0 {
                        out.push(Eigenpair {
                            mode: ModeTag::Mode { m: -m },
                            ..*e
                        });
                    }
                }
            }
        }
        out
    }
}

fn sort_pairs(v: &mut [Eigenpair]) {
    let key = |e: &Eigenpair| match e.mode {
        ModeTag::Mode { m } => m,
        ModeTag::Coupled2d { .. } => 0,
    };
    v.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
            .then(key(a).cmp(&key(b)))
    });
}

/// All eigenpairs of `matrix`, optionally restricted to `rect`, sorted by
/// real part. Fails if any kept pair misses [`RESIDUAL_TOL`].
pub fn eigensolve_in(matrix: &OperatorMatrix, rect: Option<&Rect>) -> Result<Vec<Eigenpair>> {
    let mode = matrix.mode;
    let keep = |z: &C64| rect.is_none_or(|r| r.contains(*z));
    let mut out = match &matrix.entries {
        Entries::Tridiagonal(t) if t.is_symmetric() => {
            let values = symmetric_tridiagonal_eigenvalues(&t.diag, &t.lower)?;
            values
                .into_iter()
                .filter(keep)
                .map(|z| Eigenpair {
                    value: z,
                    mode,
                    residual: t.eigenvector(z).1,
                })
                .collect::<Vec<_>>()
        }
        _ => dense_eigenpairs(&matrix.to_dense(), mode)?
            .into_iter()
            .filter(|e| keep(&e.value))
            .collect(),
    };
    if let Some(bad) = out.iter().find(|e| !(e.residual <= RESIDUAL_TOL)) {
        return Err(Error::ConvergenceFailure(format!(
            "eigenvalue {} has residual {:e} > {RESIDUAL_TOL:e}",
            bad.value, bad.residual
        )));
    }
    sort_pairs(&mut out);
    Ok(out)
}

/// Full eigendecomposition by the dense non-Hermitian solver.
pub fn dense_eigenpairs(a: &Mat<C64>, mode: ModeTag) -> Result<Vec<Eigenpair>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let evd = a
        .eigen()
        .map_err(|e| Error::ConvergenceFailure(format!("dense eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let au = a * u;
    Ok((0..n)
        .map(|j| {
            let lambda = s[j];
            let mut r2 = 0.0;
            let mut v2 = 0.0;
            for i in 0..n {
                r2 += (au[(i, j)] - lambda * u[(i, j)]).norm_sqr();
                v2 += u[(i, j)].norm_sqr();
            }
            Eigenpair {
                value: lambda,
                mode,
                residual: r2.sqrt() / (norm * v2.sqrt()),
            }
        })
        .collect())
}

/// Full spectrum of one operator.
pub fn eigensolve(matrix: &OperatorMatrix, surface: &SurfaceProfile<f64>) -> Result<SpectrumResult> {
    if matrix.n() > DENSE_CAP && !matches!(&matrix.entries, Entries::Tridiagonal(t) if t.is_symmetric()) {
        return Err(Error::SizeLimit(format!("dimension {} exceeds {DENSE_CAP}", matrix.n())));
    }
    let eigenvalues = eigensolve_in(matrix, None)?;
    Ok(SpectrumResult {
        eigenvalues,
        params: params_of(matrix, surface, None),
        mirrored: false,
    })
}

fn params_of(matrix: &OperatorMatrix, surface: &SurfaceProfile<f64>, rect: Option<Rect>) -> SpectrumParams {
    SpectrumParams {
        surface: crate::classical::surface_id(surface),
        q_id: matrix.q_id.clone(),
        h: matrix.h,
        eps: matrix.eps,
        grid: matrix.grid,
        scheme: matrix.scheme,
        m_max: match matrix.mode {
            ModeTag::Mode { m } => m.unsigned_abs() as usize,
            ModeTag::Coupled2d { m_theta } => m_theta,
        },
        rect,
    }
}

/// Union of the mode spectra for `m = 0..=m_max` (each `m > 0` also stands
/// for `−m`), restricted to `rect` when given.
#[allow(clippy::too_many_arguments)]
pub fn full_spectrum_rotational(
    surface: &SurfaceProfile<f64>,
    h: f64,
    eps: f64,
    q: &Observable<f64>,
    m_max: usize,
    n: usize,
    rect: Option<Rect>,
    scheme: Scheme,
) -> Result<SpectrumResult> {
    let grid = check_grid(surface, h, n)?;
    let per_mode: Vec<Result<Vec<Eigenpair>>> = (0..=m_max as i64)
        .into_par_iter()
        .map(|m| {
            let op = mode_operator(surface, h, m, eps, q, n, scheme)?;
            eigensolve_in(&op, rect.as_ref())
        })
        .collect();
    let mut eigenvalues = Vec::new();
    for r in per_mode {
        eigenvalues.extend(r?);
    }
    sort_pairs(&mut eigenvalues);
    Ok(SpectrumResult {
        eigenvalues,
        params: SpectrumParams {
            surface: crate::classical::surface_id(surface),
            q_id: observable_id(q),
            h,
            eps,
            grid,
            scheme,
            m_max,
            rect,
        },
        mirrored: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere() -> SurfaceProfile<f64> {
        SurfaceProfile::sphere()
    }

    #[test]
    fn real_symmetric_without_eps() {
        let op = mode_operator(&sphere(), 1.0, 2, 0.0, &Observable::cos_sq(), 400, Scheme::Symmetric).unwrap();
        assert_eq!(op.max_asymmetry(), 0.0);
        let Entries::Tridiagonal(t) = &op.entries else { panic!() };
        assert!(t.diag.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn low_sphere_eigenvalues() {
        let op = mode_operator(&sphere(), 1.0, 1, 0.0, &Observable::constant(0.0), 1000, Scheme::Symmetric).unwrap();
        let ev = eigensolve_in(&op, None).unwrap();
        for (i, e) in ev.iter().take(3).enumerate() {
            let l = (i + 1) as f64;
            assert!((e.value.re - l * (l + 1.0)).abs() < 1e-3, "{:?}", e.value);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let e = mode_operator(&sphere(), 0.01, 0, 0.0, &Observable::cos_sq(), 300, Scheme::Symmetric).unwrap_err();
        assert!(matches!(e, Error::GridTooCoarse(_)));
    }

    #[test]
    fn jordan_block() {
        let eps = 0.1;
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C64::new(1.0, 0.0),
            (0, 0) | (1, 1) => C64::new(0.0, eps),
            _ => C64::new(0.0, 0.0),
        });
        let pairs = dense_eigenpairs(&a, ModeTag::Coupled2d { m_theta: 0 }).unwrap();
        for p in pairs {
            assert!((p.value - C64::new(0.0, eps)).norm() < 1e-7);
            assert!(p.residual < 1e-8);
        }
    }
}
