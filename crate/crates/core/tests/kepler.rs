use mpsplit::orbit::{
    energy, extract_error_coefficient, kepler_field, kepler_init, loglog_slope, lrl_vector,
    measured_order, period_step, precession, precession_per_period, signed_angle, System,
};
use mpsplit::{DoubleDouble, Error, MethodSpec, PhaseState, Real};
use proptest::prelude::*;

fn method(text: &str) -> mpsplit::Method<f64> {
    text.parse::<MethodSpec>().unwrap().prepare()
}

proptest! {
    #[test]
    fn initial_conditions_fix_energy_and_eccentricity(e in 0.0f64..1.0) {
        let s = kepler_init::<f64>(e).unwrap();
        prop_assert!((energy(&s).unwrap() + 0.5).abs() <= 4.0 * f64::EPSILON);
        let a = lrl_vector(&s).unwrap();
        prop_assert!(((a[0] * a[0] + a[1] * a[1]).sqrt() - e).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn angle_lies_in_half_open_interval(
        x0 in -2.0f64..2.0, y0 in -2.0f64..2.0, x1 in -2.0f64..2.0, y1 in -2.0f64..2.0,
    ) {
        let t = signed_angle([x0, y0], [x1, y1]);
        prop_assert!(t > -std::f64::consts::PI && t <= std::f64::consts::PI);
    }
}

#[test]
fn extended_initial_conditions() {
    let s = kepler_init::<mpsplit::DoubleDouble>(0.75).unwrap();
    let e = energy(&s).unwrap();
    assert!((e.to_f64() + 0.5).abs() < 1e-30);
}

fn energy_errors(text: &str, e: f64, steps: u64, periods: u64) -> Vec<f64> {
    energy_errors_in::<f64>(text, e, steps, periods)
}

fn energy_errors_in<T: Real>(text: &str, e: f64, steps: u64, periods: u64) -> Vec<f64> {
    let m = text.parse::<MethodSpec>().unwrap().prepare::<T>();
    let a = kepler_field::<T>();
    let h = period_step::<T>(steps);
    let mut s = kepler_init::<T>(e).unwrap();
    let e0 = energy(&s).unwrap();
    let mut out = Vec::with_capacity((steps * periods) as usize);
    for _ in 0..steps * periods {
        s = m.step(&s, h, &a).unwrap();
        out.push((energy(&s).unwrap() - e0).to_f64().abs());
    }
    out
}

#[test]
fn symplectic_energy_error_stays_bounded() {
    let steps = 200;
    for text in ["vv", "pv", "fr"] {
        let errs = energy_errors(text, 0.5, steps, 100);
        let first = errs[..steps as usize].iter().cloned().fold(0.0, f64::max);
        let all = errs.iter().cloned().fold(0.0, f64::max);
        assert!(all < 10.0 * first, "{text}: {all} vs {first}");
    }
}

#[test]
fn extrapolated_energy_error_per_period_scales_with_order() {
    // The largest deviation within a period goes as h^2n; the net change over
    // a whole period is one power smaller.
    for (text, order) in [
        ("mpe:pv:1,2", 4.0),
        ("mpe:pv:1,2,3", 6.0),
        ("m4", 4.0),
        ("mpe6vv", 6.0),
    ] {
        let schedule = [200u64, 400, 800, 1600];
        let hs: Vec<f64> = schedule.iter().map(|&n| period_step::<f64>(n)).collect();
        let runs: Vec<Vec<f64>> = schedule
            .iter()
            .map(|&n| energy_errors_in::<DoubleDouble>(text, 0.5, n, 1))
            .collect();
        let peak: Vec<f64> = runs
            .iter()
            .map(|r| r.iter().cloned().fold(0.0, f64::max))
            .collect();
        let p = loglog_slope(&hs, &peak);
        assert!((p - order).abs() < 0.2, "{text}: {p} {peak:?}");
        let net: Vec<f64> = runs.iter().map(|r| *r.last().unwrap()).collect();
        let p = loglog_slope(&hs, &net);
        assert!((p - order - 1.0).abs() < 0.2, "{text}: {p} {net:?}");
    }
}

#[test]
fn circular_orbit_has_no_precession_direction() {
    assert_eq!(
        precession_per_period(&method("m4"), 0.0, 100),
        Err(Error::DegenerateOrbit)
    );
}

#[test]
fn quoted_coefficients_at_high_eccentricity() {
    let schedule = [1000u64, 2000, 4000, 8000];
    for (text, quoted) in [("fr", -23.1e4), ("nystrom4", 7.1e4), ("m4", -1.1e4)] {
        let est = extract_error_coefficient(&method(text), 0.9, 4, &schedule).unwrap();
        assert!(
            ((est.value - quoted) / quoted).abs() < 0.1,
            "{text}: {}",
            est.value
        );
    }
}

#[test]
fn coarse_schedule_reports_no_limit_for_forest_ruth() {
    match extract_error_coefficient(&method("fr"), 0.9, 4, &[1000, 2000, 4000]) {
        Err(Error::NoLimit { ratios, .. }) => {
            assert_eq!(ratios.len(), 3);
            assert!(((ratios[2] + 23.1e4) / 23.1e4).abs() < 0.1, "{ratios:?}");
        }
        other => panic!("{other:?}"),
    }
    let est = extract_error_coefficient(&method("m4"), 0.9, 4, &[1000, 2000, 4000]).unwrap();
    assert_eq!(est.steps_per_period, 4000);
}

#[test]
fn precession_signs_and_eccentricity_growth() {
    let ratio = |text: &str, e: f64| precession_per_period(&method(text), e, 4000).unwrap().ratio;
    let fr = ratio("fr", 0.9);
    let n = ratio("nystrom4", 0.9);
    let m4 = ratio("m4", 0.9);
    assert!(fr.signum() == m4.signum() && fr.signum() != n.signum());
    for text in ["fr", "nystrom4", "m4"] {
        let growth = (ratio(text, 0.9) / ratio(text, 0.4)).abs();
        assert!((1e3..=1e5).contains(&growth), "{text}: {growth}");
    }
}

#[test]
fn precession_accumulates_linearly() {
    for text in ["fr", "m4"] {
        let m = method(text);
        let single = precession(&m, 0.5, 200, 1).unwrap().dtheta;
        for periods in [2u64, 8, 32] {
            let total = precession(&m, 0.5, 200, periods).unwrap().dtheta;
            let rel = (total / (periods as f64 * single) - 1.0).abs();
            assert!(rel < 0.05, "{text} m={periods}: {rel}");
        }
    }
}

#[test]
fn kepler_order_against_extended_reference() {
    let fit = measured_order(
        &method("m4"),
        System::Kepler { e: 0.5 },
        &[100, 200, 400, 800],
    )
    .unwrap();
    assert!((fit.slope - 4.0).abs() < 0.15, "{fit:?}");
}

#[test]
fn order_fit_refuses_roundoff_dominated_schedules() {
    let m = method("mpe:pv:1,2,3,4");
    assert!(matches!(
        measured_order(&m, System::Harmonic, &[100, 200, 400, 800]),
        Err(Error::RoundoffDominated(_))
    ));
    assert!(matches!(
        measured_order(&m, System::Harmonic, &[10, 20, 40]),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn singular_start_is_reported() {
    let s = PhaseState::<f64>::from_f64(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
    let err = method("pv").step(&s, 0.1, &kepler_field()).map(|_| ());
    assert_eq!(err, Ok(()));
    let err = method("vv").step(&s, 0.1, &kepler_field()).unwrap_err();
    assert!(matches!(err, Error::Singularity { .. }), "{err}");
}
