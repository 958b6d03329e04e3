use std::f64::consts::PI;

use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma_lr;
use toruslab::bargmann::*;
use toruslab::numerics::GaussLegendre;
use toruslab::Error;

const BUMP: FockSymbol = FockSymbol::Bump { radius: 1.0 };

/// `∫ f dL(z)` over the disc of radius `big` by polar Gauss–Legendre.
fn disc_quadrature(big: f64, f: impl Fn(C64) -> C64) -> C64 {
    let (rs, rw) = GaussLegendre::<f64>::new(80).mapped(0.0, big);
    let nphi = 128;
    let mut acc = C64::new(0.0, 0.0);
    for (r, w) in rs.iter().zip(&rw) {
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            acc += f(C64::from_polar(*r, phi)) * (w * r * 2.0 * PI / nphi as f64);
        }
    }
    acc
}

#[test]
fn gram_matrix_is_identity() {
    let h = 0.1;
    let b = FockBasis::new(h, 12).unwrap();
    // R = 3: the Gaussian weight is below e^{-90} outside.
    for j in 0..12 {
        for k in 0..12 {
            let g = disc_quadrature(3.0, |z| b.eval(k, z) * b.eval(j, z).conj() * (-z.norm_sqr() / h).exp());
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((g - want).norm() < 1e-10, "({j},{k}): {g}");
        }
    }
}

#[test]
fn kernel_reproduces_basis_elements() {
    let h = 0.1;
    let b = FockBasis::new(h, 6).unwrap();
    let x = C64::new(0.2, -0.1);
    for k in 0..6 {
        let v = disc_quadrature(3.0, |y| bergman_kernel(x, y, h) * b.eval(k, y) * (-y.norm_sqr() / h).exp());
        assert!((v - b.eval(k, x)).norm() < 1e-9, "k = {k}");
    }
}

#[test]
fn disc_indicator_gives_identity_block() {
    // T_kk = P(k + 1, R²/h), the regularized lower incomplete gamma.
    let h = 0.005;
    let p = FockSymbol::Disc { radius: 1.0 };
    let m = (1.0 / (4.0 * h)) as usize;
    let t = toeplitz_matrix(&p, &FockBasis::new(h, m).unwrap()).unwrap();
    for k in 0..m {
        assert!((t.entries[(k, k)].re - 1.0).abs() < 1e-6);
        assert!((t.entries[(k, k)].re - gamma_lr(k as f64 + 1.0, 1.0 / h)).abs() < 1e-12);
    }
    let t = toeplitz_matrix(&p, &FockBasis::new(0.05, 40).unwrap()).unwrap();
    for k in 0..40 {
        assert!((t.entries[(k, k)].re - gamma_lr(k as f64 + 1.0, 20.0)).abs() < 1e-10, "k = {k}");
    }
}

#[test]
fn real_symbol_gives_hermitian_matrix() {
    let p = FockSymbol::Modulated { radius: 1.0, harmonic: 3, amplitude: 0.8 };
    let t = toeplitz_matrix(&p, &FockBasis::new(0.05, 60).unwrap()).unwrap();
    assert!(t.hermitian_defect <= 1e-10);
    assert!(t.entries[(5, 2)].norm() > 0.0 && t.entries[(5, 3)].norm() == 0.0);
    // Off-diagonal entries against direct 2D quadrature.
    let b = FockBasis::new(0.05, 60).unwrap();
    let direct = disc_quadrature(1.0, |z| {
        b.eval(2, z) * b.eval(5, z).conj() * (p.eval(z) * (-z.norm_sqr() / 0.05).exp())
    });
    assert!((direct - t.entries[(5, 2)]).norm() < 1e-6, "{direct} vs {}", t.entries[(5, 2)]);
}

#[test]
fn trace_identity_and_positivity() {
    for row in verify_trace_bound(&BUMP, &[0.2, 0.1, 0.05]).unwrap() {
        let ratio = row.ratio.unwrap();
        assert!((ratio - 1.0).abs() <= 1e-6, "h = {}: {ratio}", row.h);
        assert!((row.trace_norm - row.trace).abs() <= 1e-8 * row.trace.max(1.0));
        assert!(row.min_eigenvalue >= -1e-10);
        assert!(row.max_eigenvalue <= BUMP.sup() + 1e-8);
    }
    let g = FockSymbol::GaussianBump { width: 0.5, radius: 1.0 };
    let row = &verify_trace_bound(&g, &[0.1]).unwrap()[0];
    assert!((row.ratio.unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn trace_scales_like_one_over_h() {
    let rows = verify_trace_bound(&BUMP, &[0.05, 0.1]).unwrap();
    let r = rows[0].trace / rows[1].trace;
    assert!((r - 2.0).abs() <= 1e-4, "{r}");
}

#[test]
fn zero_symbol_has_zero_norms() {
    let row = &verify_trace_bound(&FockSymbol::Zero, &[0.1]).unwrap()[0];
    assert_eq!((row.trace, row.trace_norm, row.l1_norm), (0.0, 0.0, 0.0));
    assert!(row.ratio.is_none());
}

#[test]
fn small_basis_is_refused() {
    assert!(matches!(trace_bound_row(&BUMP, 0.05, 10), Err(Error::TruncationTooSmall(_))));
}

#[test]
fn trace_norm_oracles() {
    let id = Mat::<C64>::identity(7, 7);
    assert!((trace_norm(id.as_ref()).unwrap() - 7.0).abs() < 1e-12);
    let u: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 1.0)).collect();
    let v: Vec<C64> = (0..5).map(|i| C64::new(1.0, -(i as f64) * 0.5)).collect();
    let outer = Mat::<C64>::from_fn(5, 5, |i, j| u[i] * v[j].conj());
    let nrm = |x: &[C64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert!((trace_norm(outer.as_ref()).unwrap() - nrm(&u) * nrm(&v)).abs() < 1e-12);
}

#[test]
fn top_singular_value_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = Mat::<C64>::from_fn(50, 50, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let mut x: Vec<C64> = (0..50).map(|i| C64::new(1.0 + i as f64 * 0.01, 0.0)).collect();
    let mut sigma = 0.0;
    for _ in 0..3000 {
        // x ← A*A x / ‖·‖
        let ax: Vec<C64> = (0..50).map(|i| (0..50).map(|j| a[(i, j)] * x[j]).sum()).collect();
        let y: Vec<C64> = (0..50).map(|j| (0..50).map(|i| a[(i, j)].conj() * ax[i]).sum()).collect();
        let n = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        sigma = n.sqrt();
        x = y.into_iter().map(|z| z / n).collect();
    }
    let s = singular_values(a.as_ref()).unwrap();
    assert!((s[0] - sigma).abs() < 1e-8 * s[0], "{} vs {sigma}", s[0]);
}

fn random_quartic(seed: u64) -> impl Fn(f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b, c, d) = (
        rng.random_range(0.05..1.0),
        rng.random_range(0.2..1.5),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    move |t: f64| a * t.powi(4) + b * t * t + c * t + d
}

#[test]
fn legendre_is_an_involution() {
    for seed in 0..8 {
        let f = random_quartic(seed);
        let s = Sampled::from_fn(-1.5, 1.5, 301, &f);
        let back = legendre_transform(&legendre_transform(&s).unwrap()).unwrap();
        let dx = s.spacing();
        // The double transform lives on the slope grid of Lf; compare at its nodes.
        let worst = (0..back.len())
            .map(|i| (back.values[i] - f(back.x(i))).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 5.0 * dx * dx, "seed {seed}: {worst} vs {}", 5.0 * dx * dx);
    }
}

#[test]
fn legendre_duality_on_synthetic_weights() {
    let phi1 = |eta: f64| 0.4 * (1.3 * eta).sin() + 0.2 * eta * eta + 0.1 * eta;
    for eps in [0.01, 0.1, 0.5] {
        let r = legendre_duality_check(phi1, eps, -1.0, 1.0, 801).unwrap();
        assert!(r.points > 300);
        assert!(r.max_defect <= 5.0 * r.spacing * r.spacing, "eps {eps}: {r:?}");
    }
}

#[test]
fn parseval_gaussian_weight_is_exact() {
    let phi = PolyWeight { coeffs: vec![0.0, 0.0, 0.5] };
    let r = parseval_check(&phi, 0.05, (0, 20)).unwrap();
    assert!(r.max_discrepancy <= 1e-10, "{r:?}");
}

#[test]
fn parseval_discrepancy_is_first_order() {
    let phi = PolyWeight { coeffs: vec![0.0, 0.0, 0.5, 0.0, 0.25] };
    // Same ξ = kh ∈ {0, 0.2, 0.4} at both h.
    let fine = parseval_check(&phi, 0.025, (0, 16)).unwrap();
    let coarse = parseval_check(&phi, 0.05, (0, 8)).unwrap();
    for (c, f) in coarse.rows.iter().step_by(4).zip(fine.rows.iter().step_by(8)) {
        let r = c.discrepancy / f.discrepancy;
        assert!((r - 2.0).abs() <= 0.8, "k = {}: ratio {r}", c.k);
    }
}

#[test]
fn concave_weight_is_rejected() {
    let phi = PolyWeight { coeffs: vec![0.0, 0.0, -0.5, 0.0, 0.1] };
    assert!(matches!(parseval_check(&phi, 0.1, (0, 1)), Err(Error::NotConvex(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kernel_hermitian_symmetry(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0, h in 0.05f64..1.0) {
        let (x, y) = (C64::new(a, b), C64::new(c, d));
        let k1 = bergman_kernel(x, y, h);
        let k2 = bergman_kernel(y, x, h).conj();
        prop_assert!((k1 - k2).norm() <= 1e-13 * k1.norm());
    }

    #[test]
    fn bump_toeplitz_is_positive_and_bounded(h in 0.05f64..0.3, amp in 0.0f64..1.0) {
        let p = FockSymbol::Modulated { radius: 1.0, harmonic: 2, amplitude: amp };
        let t = toeplitz_matrix(&p, &FockBasis::new(h, 40).unwrap()).unwrap();
        let eig = t.hermitian_eigenvalues().unwrap();
        prop_assert!(eig[0] >= -1e-10);
        prop_assert!(*eig.last().unwrap() <= p.sup() + 1e-8);
    }
}
