//! Complex tridiagonal eigenvalue kernels.
//!
//! The mode operators are complex symmetric (not Hermitian) tridiagonal
//! matrices; an implicit QL sweep with complex orthogonal rotations
//! (`c² + s² = 1`) finds all eigenvalues in O(n²) without forming the dense
//! matrix. Eigenvectors come from inverse iteration with a pivoted
//! tridiagonal LU.

use num_complex::Complex;

use crate::error::{Error, Result};

type C64 = Complex<f64>;

const MAX_SWEEPS: usize = 60;

/// Eigenvalues of the complex symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() == diag.len() − 1`).
pub fn symmetric_tridiagonal_eigenvalues(diag: &[C64], off: &[C64]) -> Result<Vec<C64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "off-diagonal has length {}, expected {}",
            off.len(),
            n - 1
        )));
    }
    let mut d = diag.to_vec();
    let mut e: Vec<C64> = off.to_vec();
    e.push(C64::new(0.0, 0.0));
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].norm() + d[m + 1].norm();
                if e[m].norm() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::ConvergenceFailure(format!(
                    "QL: eigenvalue {l} not converged after {MAX_SWEEPS} sweeps"
                )));
            }
            // Wilkinson-type shift from the leading 2×2 block.
            let mut g = (d[l + 1] - d[l]) / (e[l] * 2.0);
            let r = (g * g + one).sqrt();
            let denom = if (g + r).norm() >= (g - r).norm() { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c, mut p) = (one, one, zero);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                let r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r.norm() == 0.0 {
                    d[i + 1] -= p;
                    e[m] = zero;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let r = (d[i] - g) * s + c * b * 2.0;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = zero;
        }
    }
    if d.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ConvergenceFailure("QL produced non-finite eigenvalues".into()));
    }
    Ok(d)
}

/// General tridiagonal matrix: `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<C64>,
    pub lower: Vec<C64>,
    pub upper: Vec<C64>,
}

impl Tridiagonal {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i].norm();
                if i > 0 {
                    r += self.lower[i - 1].norm();
                }
                if i + 1 < n {
                    r += self.upper[i].norm();
                }
                r
            })
            .fold(0.0, f64::max)
    }

    /// Unit eigenvector for the (approximate) eigenvalue `lambda` by
    /// inverse iteration, and the relative residual
    /// `‖(A − λ)v‖ / (‖A‖_∞ ‖v‖)`.
    pub fn eigenvector(&self, lambda: C64) -> (Vec<C64>, f64) {
        let n = self.n();
        let norm = self.norm_inf().max(f64::MIN_POSITIVE);
        let lu = PivotedLu::new(self, lambda, norm);
        // Deterministic, generic start vector.
        let mut v: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0 + ((i * 7919) % 97) as f64 / 97.0, 0.0))
            .collect();
        let mut best = (v.clone(), f64::INFINITY);
        for _ in 0..4 {
            lu.solve(&mut v);
            let nv = l2(&v);
            if !(nv.is_finite() && nv > 0.0) {
                break;
            }
            for z in v.iter_mut() {
                *z /= nv;
            }
            let res = self.residual(lambda, &v, norm);
            if res < best.1 {
                best = (v.clone(), res);
            }
            if res <= 1e-14 {
                break;
            }
        }
        best
    }

    fn residual(&self, lambda: C64, v: &[C64], norm: f64) -> f64 {
        let av = self.apply(v);
        let r: f64 = av
            .iter()
            .zip(v)
            .map(|(a, x)| (a - lambda * x).norm_sqr())
            .sum::<f64>()
            .sqrt();
        r / (norm * l2(v))
    }
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// LU of `A − σI` with partial pivoting (one extra super-diagonal).
struct PivotedLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swapped: Vec<bool>,
}

impl PivotedLu {
    fn new(a: &Tridiagonal, sigma: C64, norm: f64) -> Self {
        let n = a.n();
        let mut dl = a.lower.clone();
        let mut d: Vec<C64> = a.diag.iter().map(|&x| x - sigma).collect();
        let mut du = a.upper.clone();
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * norm;
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    d[i] = C64::new(tiny, 0.0);
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for z in d.iter_mut() {
            if z.norm() == 0.0 {
                *z = C64::new(tiny, 0.0);
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [C64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                let t = b[i];
                b[i + 1] -= self.dl[i] * t;
            }
        }
        for i in (0..n).rev() {
            let mut x = b[i];
            if i + 1 < n {
                x -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                x -= self.du2[i] * b[i + 2];
            }
            b[i] = x / self.d[i];
        }
    }
}
