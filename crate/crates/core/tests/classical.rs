use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use toruslab::classical::*;
use toruslab::geometry::{make_profile, turning_points, SurfaceProfile};
use toruslab::observable::{Angular, Observable, Term};

fn deformed() -> SurfaceProfile<f64> {
    make_profile("deformed-sphere", &[0.2]).unwrap()
}

fn three_quarter_torus(p: &SurfaceProfile<f64>) -> f64 {
    locate_resonance(p, 0.75, 0.9, 1.1).unwrap()
}

#[test]
fn rotation_number_range_on_the_deformed_profile() {
    let p = deformed();
    let um = p.u_max();
    let ws: Vec<f64> = (1..200).map(|i| rotation_number(&p, um * i as f64 / 200.0).unwrap()).collect();
    let (lo, hi) = ws.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &w| (l.min(w), h.max(w)));
    // Twist: ω genuinely varies, and stays strictly between 2/3 and 1.
    assert!(hi - lo > 0.2, "{lo} {hi}");
    assert!(lo > 2.0 / 3.0 && hi < 1.0, "{lo} {hi}");
}

#[test]
fn sphere_flow_average_of_cos_squared() {
    // Great circle with Clairaut constant a: ⟨z²⟩ = (1 − a²)/2.
    let p = SurfaceProfile::<f64>::sphere();
    let q = Observable::cos_sq();
    for a in [0.1, 0.5, 0.9] {
        let tor = Torus::from_a(&p, a).unwrap();
        let st = PhasePoint::on_transverse_circle(&p, &tor, 0.7);
        let v = flow_average(&p, &q, &tor, &st, 100.0, Kernel::Bump).unwrap();
        assert!((v - (1.0 - a * a) / 2.0).abs() < 1e-9, "a = {a}: {v}");
    }
}

fn generic_q() -> Observable<f64> {
    Observable::new(vec![
        Term::new(1.0, 1, 0, Angular::Cos { k: 1 }),
        Term::new(0.5, 2, 0, Angular::Const),
        Term::new(0.3, 1, 1, Angular::Sin { k: 2 }),
    ])
}

#[test]
fn box_average_error_decays_like_one_over_t() {
    let p = deformed();
    let a = locate_resonance(&p, (5f64.sqrt() - 1.0) / 2.0 + 0.2, 0.05, 1.19).unwrap();
    assert!(classify(rotation_number(&p, a).unwrap(), 1000, 1e-3, 0.5).is_diophantine());
    let q = generic_q();
    let avg = torus_average(&p, &q, a).unwrap();
    let tor = Torus::from_a(&p, a).unwrap();
    let st = PhasePoint::on_transverse_circle(&p, &tor, 0.3);
    for t in [50.0, 100.0, 200.0, 400.0] {
        let err = (flow_average(&p, &q, &tor, &st, t, Kernel::Box).unwrap() - avg).abs();
        assert!(err * t <= 1.0, "T = {t}: {err}");
    }
}

#[test]
fn irrational_torus_width_shrinks_with_horizon() {
    let p = deformed();
    let a = locate_resonance(&p, (5f64.sqrt() - 1.0) / 2.0 + 0.2, 0.05, 1.19).unwrap();
    let q = generic_q();
    let avg = torus_average(&p, &q, a).unwrap();
    let w: Vec<Interval<f64>> = [50.0, 100.0, 200.0]
        .iter()
        .map(|&t| q_infinity(&p, &q, a, t, 8, Kernel::Bump).unwrap())
        .collect();
    assert!(w[0].width() > w[1].width() && w[1].width() > w[2].width());
    assert!(w[2].width() < 1e-8);
    assert!(w[2].contains(avg, 1e-8));
}

#[test]
fn resonant_observable_has_two_stable_limits() {
    let p = deformed();
    let a = three_quarter_torus(&p);
    let tor = Torus::from_a(&p, a).unwrap();
    // sin⁴s(1 + cos s)cos 4θ: θ-mode 4 meets the resonance of ω = 3/4.
    let q = Observable::new(vec![
        Term::new(1.0, 4, 0, Angular::Cos { k: 4 }),
        Term::new(1.0, 4, 1, Angular::Cos { k: 4 }),
    ]);
    let avg = |t: f64, th: f64| {
        flow_average(&p, &q, &tor, &PhasePoint::on_transverse_circle(&p, &tor, th), t, Kernel::Bump).unwrap()
    };
    let (x, y) = (avg(250.0, PI / 8.0), avg(250.0, 3.0 * PI / 8.0));
    assert!((x - y).abs() > 0.05, "{x} {y}");
    assert!((avg(1000.0, PI / 8.0) - x).abs() < 1e-9);
    assert!((avg(1000.0, 3.0 * PI / 8.0) - y).abs() < 1e-9);
}

#[test]
fn mirror_symmetric_resonant_term_averages_out() {
    // The profile is symmetric about the equator; sin⁴s cos 4θ is even
    // there and its resonant harmonic is odd, so every orbit averages to 0.
    let p = deformed();
    let a = three_quarter_torus(&p);
    let q = Observable::new(vec![Term::new(1.0, 4, 0, Angular::Cos { k: 4 })]);
    let w = q_infinity_sector(&p, &q, a, 500.0, 8, FRAC_PI_2, Kernel::Bump).unwrap();
    assert!(w.lo.abs() < 1e-10 && w.hi.abs() < 1e-10, "{w:?}");
}

#[test]
fn non_resonant_modes_have_no_width() {
    let p = deformed();
    let a = three_quarter_torus(&p);
    let q = Observable::new(vec![
        Term::new(1.0, 1, 0, Angular::Cos { k: 1 }),
        Term::new(1.0, 2, 1, Angular::Cos { k: 2 }),
        Term::new(1.0, 3, 0, Angular::Sin { k: 3 }),
    ]);
    let w = q_infinity_sector(&p, &q, a, 1000.0, 8, FRAC_PI_2, Kernel::Bump).unwrap();
    assert!(w.width() < 1e-6, "{w:?}");
}

#[test]
fn constant_observable_has_zero_widths() {
    let rows = width_vs_height(
        &deformed(),
        &Observable::constant(0.4),
        (0.05, 1.19),
        &[7, 9],
        &ScanOptions::default(),
    )
    .unwrap();
    assert!(rows.iter().all(|r| r.width == 0.0), "{rows:?}");
    assert_eq!((rows[0].m, rows[0].n, rows[1].m, rows[1].n), (3, 4, 4, 5));
}

#[test]
fn scan_marks_located_resonances() {
    let p = deformed();
    let s = scan(&p, &generic_q(), &[0.3, 0.6, 0.9], &ScanOptions::default()).unwrap();
    assert!(s.rows.windows(2).all(|w| w[0].a <= w[1].a));
    let res: Vec<&ScanRow> = s.rows.iter().filter(|r| r.class.is_rational()).collect();
    assert!(!res.is_empty());
    for r in res {
        assert!(r.horizon > 0.0);
        if let RotationClass::Rational { m, n, .. } = r.class {
            assert!((r.omega - m as f64 / n as f64).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotation_number_is_odd(a in 0.05f64..1.15) {
        let p = deformed();
        let (w, wm) = (rotation_number(&p, a).unwrap(), rotation_number(&p, -a).unwrap());
        prop_assert!((w + wm).abs() <= 1e-14);
    }

    #[test]
    fn turning_points_move_inward_as_a_grows(a in 0.05f64..1.1, da in 1e-4f64..0.09) {
        let p = deformed();
        let (l0, r0) = turning_points(&p, a).unwrap();
        let (l1, r1) = turning_points(&p, a + da).unwrap();
        prop_assert!(l1 > l0 && r1 < r0);
        prop_assert!((l0 + r0 - PI).abs() < 1e-12);
    }

    #[test]
    fn u_shift_agrees_with_direct_difference(t in 0.0f64..3.1, d in -0.5f64..0.5) {
        let p = deformed();
        let direct = p.u(t + d) - p.u(t);
        prop_assert!((p.u_shift(t, d) - direct).abs() <= 1e-14 * (1.0 + p.u(t).abs()));
    }

    #[test]
    fn rotation_number_agrees_with_flow_route(a in 0.1f64..1.15) {
        let p = deformed();
        let (w1, w2) = (rotation_number(&p, a).unwrap(), rotation_number_by_flow(&p, a).unwrap());
        prop_assert!((w1 - w2).abs() < 1e-9, "{} vs {}", w1, w2);
    }
}
