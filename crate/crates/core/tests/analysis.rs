use std::sync::OnceLock;

use toruslab::analysis::*;
use toruslab::classical::*;
use toruslab::geometry::make_profile;
use toruslab::observable::{Angular, Observable, Term};

const DIO: RotationClass = RotationClass::DiophantineCertified { alpha: 1e-3, d: 0.5, q_max: 1000 };

fn row(a: f64, class: RotationClass, q_avg: f64, q_inf: (f64, f64)) -> ScanRow {
    ScanRow {
        a,
        omega: 0.7 + 0.2 * a,
        class,
        q_avg,
        q_inf: Interval { lo: q_inf.0, hi: q_inf.1 },
        horizon: if class.is_rational() { 200.0 } else { 0.0 },
    }
}

/// ⟨q⟩(a) = a on a ∈ [0.02, 1.1], all tori Diophantine.
fn linear_scan() -> ClassicalScan {
    let rows = (1..=55)
        .map(|i| {
            let a = 0.02 * i as f64;
            row(a, DIO, a, (a, a))
        })
        .collect();
    ClassicalScan { surface: "synthetic".into(), u_max: 1.2, rows }
}

fn check(scan: &ClassicalScan, f0: f64) -> GoodVerdict {
    good_value_check(scan, f0, 0.05, 0.2, 0.01, 0.5).unwrap()
}

#[test]
fn level_above_everything_is_vacuously_good() {
    let v = check(&linear_scan(), 5.0);
    assert!(v.good && v.family.is_empty(), "{v:?}");
}

#[test]
fn transversal_diophantine_level_is_good() {
    let v = good_value_check(&linear_scan(), 0.51, 1e-3, 0.2, 0.01, 0.5).unwrap();
    assert!(v.good, "{v:?}");
    assert_eq!(v.family.len(), 1);
    assert!((v.family[0] - 0.51).abs() < 1e-12);
}

#[test]
fn level_near_the_singular_leaf_fails_first_condition() {
    let v = check(&linear_scan(), 0.03);
    assert_eq!(v.failed_condition, Some(1), "{v:?}");
    assert!(v.witness.unwrap().a <= 0.06);
}

#[test]
fn weak_certificate_fails_second_condition() {
    // α = 0.05 demands more than the scan's 1e-3 certificate.
    let v = check(&linear_scan(), 0.51);
    assert_eq!(v.failed_condition, Some(2), "{v:?}");
}

#[test]
fn rational_torus_at_its_own_average_fails_third_condition() {
    let mut s = linear_scan();
    let rat = RotationClass::Rational { m: 3, n: 4, height: 7 };
    s.rows[24] = row(0.5, rat, 0.5, (0.48, 0.52));
    let v = good_value_check(&s, 0.5, 1e-3, 0.2, 0.01, 0.5).unwrap();
    assert_eq!(v.failed_condition, Some(3), "{v:?}");
    let w = v.witness.unwrap();
    assert_eq!(w.a, 0.5);
    assert!(w.detail.contains("⟨q⟩"), "{}", w.detail);
}

#[test]
fn high_rational_height_fails_third_condition() {
    let mut s = linear_scan();
    s.rows[24] = row(0.5, RotationClass::Rational { m: 12, n: 13, height: 25 }, 0.4, (0.45, 0.55));
    let v = check(&s, 0.52);
    assert_eq!(v.failed_condition, Some(3), "{v:?}");
    assert!(v.witness.unwrap().detail.contains("height"));
}

#[test]
fn far_torus_close_to_the_level_fails_fourth_condition() {
    let mut s = linear_scan();
    // A rational torus far from the family whose Q_∞ stops just short of F0.
    s.rows[49] = row(1.0, RotationClass::Rational { m: 4, n: 5, height: 9 }, 0.3, (0.3, 0.505));
    let v = good_value_check(&s, 0.51, 1e-3, 0.2, 0.01, 0.5).unwrap();
    assert_eq!(v.failed_condition, Some(4), "{v:?}");
    assert_eq!(v.witness.unwrap().a, 1.0);
}

#[test]
fn coarse_scan_is_refused() {
    let rows = (0..5).map(|i| row(0.1 + 0.2 * i as f64, DIO, 0.0, (0.0, 0.0))).collect();
    let s = ClassicalScan { surface: "synthetic".into(), u_max: 1.2, rows };
    assert!(matches!(
        good_value_check(&s, 0.0, 0.01, 0.2, 0.01, 0.5),
        Err(toruslab::Error::ScanTooCoarse(_))
    ));
}

fn deformed_scan() -> &'static ClassicalScan {
    static S: OnceLock<ClassicalScan> = OnceLock::new();
    S.get_or_init(|| {
        let p = make_profile("deformed-sphere", &[0.2]).unwrap();
        let q = Observable::new(vec![
            Term::new(1.0, 0, 2, Angular::Const),
            Term::new(0.3, 2, 1, Angular::Cos { k: 4 }),
        ]);
        let grid: Vec<f64> = (0..=56).map(|i| 0.03 + 0.02 * i as f64).collect();
        scan(&p, &q, &grid, &ScanOptions::default()).unwrap()
    })
}

#[test]
fn good_set_is_open_on_a_real_scan() {
    let s = deformed_scan();
    let (alpha, beta, gamma) = (1e-3, 0.2, 1e-3);
    let lo = s.rows.iter().map(|r| r.q_avg).fold(f64::INFINITY, f64::min);
    let hi = s.rows.iter().map(|r| r.q_avg).fold(f64::NEG_INFINITY, f64::max);
    let passing: Vec<f64> = (1..40)
        .map(|i| lo + (hi - lo) * i as f64 / 40.0)
        .filter(|&f0| good_value_check(s, f0, alpha, beta, gamma, 0.5).unwrap().good)
        .collect();
    assert!(!passing.is_empty(), "no good level among 39 candidates");
    for f0 in passing {
        for df in [-1e-4, 1e-4] {
            let v = good_value_check(s, f0 + df, 0.9 * alpha, 0.9 * beta, 0.9 * gamma, 0.5).unwrap();
            assert!(v.good, "F0 = {f0} passes but F0 {df:+} fails: {v:?}");
        }
    }
}

#[test]
fn scan_rational_rows_fail_at_their_average() {
    let s = deformed_scan();
    let r = s
        .rows
        .iter()
        .find(|r| r.class.is_rational() && r.a > 0.3)
        .expect("a located resonance");
    let v = good_value_check(s, r.q_avg, 1e-3, 0.2, 1e-3, 0.5).unwrap();
    assert!(!v.good);
}
