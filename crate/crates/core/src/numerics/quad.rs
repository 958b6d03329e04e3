//! Double-exponential (tanh-sinh) and Gauss–Legendre quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Quad<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
}

/// Tanh-sinh rule on a finite interval.
///
/// The integrand receives `(x, x - a, b - x)`. Both distances are computed
/// without cancellation, so integrands with algebraic endpoint singularities
/// should be written in terms of them rather than of `x`.
#[derive(Debug, Clone, Copy)]
pub struct TanhSinh<T> {
    /// Relative tolerance, measured against the L¹ mass of the integrand.
    pub tol: T,
    pub max_level: usize,
}

impl<T: Real> Default for TanhSinh<T> {
    fn default() -> Self {
        Self {
            tol: T::epsilon() * T::c(64.0),
            max_level: 12,
        }
    }
}

struct Node<T> {
    /// 1 - tanh(π/2 sinh t), always in (0, 1].
    comp: T,
    weight: T,
}

fn node<T: Real>(t: T) -> Node<T> {
    let half_pi = T::FRAC_PI_2();
    let u = half_pi * t.sinh();
    let e = (-(u + u)).exp();
    let comp = (e + e) / (T::one() + e);
    // 1 - tanh² u = comp (2 - comp)
    let weight = half_pi * t.cosh() * comp * (T::c(2.0) - comp);
    Node { comp, weight }
}

impl<T: Real> TanhSinh<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn integrate<F>(&self, a: T, b: T, mut f: F) -> Result<Quad<T>>
    where
        F: FnMut(T, T, T) -> T,
    {
        if a == b {
            return Ok(Quad {
                value: T::zero(),
                error: T::zero(),
                evals: 0,
            });
        }
        if b < a {
            let q = self.forward(b, a, |x, xa, xb| f(x, xb, xa))?;
            return Ok(Quad {
                value: -q.value,
                ..q
            });
        }
        self.forward(a, b, f)
    }

    fn forward<F>(&self, a: T, b: T, mut f: F) -> Result<Quad<T>>
    where
        F: FnMut(T, T, T) -> T,
    {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::QuadratureFailure(format!("non-finite interval [{a}, {b}]")));
        }
        let c = (b - a) * T::c(0.5);
        let two_c = c + c;
        // Nodes closer to the endpoints than this carry no representable mass.
        let floor = T::min_positive_value().sqrt();
        let centre = node(T::zero()).weight * f(a + c, c, c);
        let mut evals = 1usize;

        // Contribution of one abscissa pair ±t; returns (sum, |sum|) and
        // whether both sides are negligible.
        let mut pair = |t: T, evals: &mut usize| -> (T, T, bool) {
            let n = node(t);
            if n.comp < floor {
                return (T::zero(), T::zero(), true);
            }
            let d = c * n.comp;
            let right = f(b - d, two_c - d, d);
            let left = f(a + d, d, two_c - d);
            *evals += 2;
            let wr = n.weight * right;
            let wl = n.weight * left;
            let mut s = T::zero();
            let mut m = T::zero();
            for v in [wr, wl] {
                if v.is_finite() {
                    s += v;
                    m += v.abs();
                }
            }
            (s, m, false)
        };

        // Level 0: unit spacing, also fixes the truncation point of the tails.
        let mut sum = centre;
        let mut l1 = centre.abs();
        let mut t_max;
        let mut k = 1usize;
        loop {
            let t = T::from_usize_lossy(k);
            let (s, m, dead) = pair(t, &mut evals);
            sum += s;
            l1 += m;
            t_max = t;
            if dead || (m <= T::epsilon() * T::epsilon() * l1 && k > 2) {
                break;
            }
            k += 1;
        }

        let mut step = T::one();
        let mut prev = sum * step * c;
        let mut last_err = T::infinity();
        for level in 1..=self.max_level {
            step = step * T::c(0.5);
            let mut t = step;
            while t <= t_max {
                let (s, m, _) = pair(t, &mut evals);
                sum += s;
                l1 += m;
                t = t + step + step;
            }
            let cur = sum * step * c;
            let err = (cur - prev).abs();
            let scale = l1 * step * c;
            if level >= 3 && (err <= self.tol * scale || err == T::zero()) {
                return Ok(Quad {
                    value: cur,
                    error: err,
                    evals,
                });
            }
            last_err = err;
            prev = cur;
        }
        Err(Error::QuadratureFailure(format!(
            "tanh-sinh did not converge on [{a}, {b}]: last difference {last_err}"
        )))
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::from_usize_lossy(n);
        for i in 0..n.div_ceil(2) {
            let fi = T::from_usize_lossy(i + 1);
            let mut x = (T::PI() * (fi - T::c(0.25)) / (nf + T::c(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= T::epsilon() * T::c(4.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = T::c(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let c = (b - a) * T::c(0.5);
        let m = (b + a) * T::c(0.5);
        let mut s = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += *w * f(m + c * *x);
        }
        s * c
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: T, b: T) -> (Vec<T>, Vec<T>) {
        let c = (b - a) * T::c(0.5);
        let m = (b + a) * T::c(0.5);
        (
            self.nodes.iter().map(|x| m + c * *x).collect(),
            self.weights.iter().map(|w| *w * c).collect(),
        )
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_handles_inverse_sqrt_endpoints() {
        // ∫_0^1 dx / sqrt(x(1-x)) = π
        let q = TanhSinh::<f64>::default()
            .integrate(0.0, 1.0, |_, xa, xb| 1.0 / (xa * xb).sqrt())
            .unwrap();
        assert!((q.value - std::f64::consts::PI).abs() < 1e-13, "{q:?}");
    }

    #[test]
    fn tanh_sinh_log_singularity() {
        // ∫_0^1 ln x dx = -1
        let q = TanhSinh::<f64>::default()
            .integrate(0.0, 1.0, |_, xa, _| xa.ln())
            .unwrap();
        assert!((q.value + 1.0).abs() < 1e-13);
    }

    #[test]
    fn tanh_sinh_reversed_interval_flips_sign() {
        let ts = TanhSinh::<f64>::default();
        let f = |x: f64, _: f64, _: f64| x.exp();
        let fwd = ts.integrate(0.0, 2.0, f).unwrap().value;
        let back = ts.integrate(2.0, 0.0, f).unwrap().value;
        assert!((fwd + back).abs() < 1e-14);
        assert!((fwd - (2f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn tanh_sinh_in_single_precision() {
        let q = TanhSinh::<f32>::default()
            .integrate(0.0, 1.0, |_, xa, xb| 1.0 / (xa * xb).sqrt())
            .unwrap();
        assert!((q.value - std::f32::consts::PI).abs() < 1e-5);
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_2n_minus_1() {
        let gl = GaussLegendre::<f64>::new(6);
        // ∫_{-1}^{2} x^11 dx
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(11));
        let exact = (2f64.powi(12) - 1.0) / 12.0;
        assert!((v - exact).abs() < 1e-11 * exact);
        let wsum: f64 = gl.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_odd_order_has_centre_node() {
        let gl = GaussLegendre::<f64>::new(7);
        assert!(gl.nodes[3].abs() < 1e-15);
        assert!((gl.weights[3] - 512.0 / 1225.0).abs() < 1e-14);
    }
}
