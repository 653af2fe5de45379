//! Property tests tying the audit to the scheduler: optimal price-taking
//! behavior must never be flagged, and interval classification must not
//! depend on the unit system.

use proptest::prelude::*;
use storbid_core::model::{
    classify_intervals, DispatchProfile, PriceKind, PriceSeries, StorageSpec,
    DEFAULT_CLASSIFY_TOL_FRAC,
};
use storbid_core::monitor::{audit, AuditClassification, MonitorOptions, ObservationWindow};
use storbid_core::schedule::ScheduleProblem;

const POWER_CAP: f64 = 2.5;

fn min_gap(prices: &[f64]) -> f64 {
    let mut sorted = prices.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// A certificate of non-exercise must cover every optimal taker: solve,
    /// observe the outcome at the forecast prices, audit the window.
    #[test]
    fn optimal_taker_windows_always_certify(
        prices in prop::collection::vec(1.0f64..200.0, 3..=10),
        eta in 0.75f64..=1.0,
    ) {
        prop_assume!(min_gap(&prices) > 1e-3);
        let t_len = prices.len();
        let energy = 2.0 * t_len as f64 * POWER_CAP;
        let spec = StorageSpec::new(
            POWER_CAP,
            energy,
            eta,
            energy / 2.0,
            Some(energy / 2.0),
        ).unwrap();

        let forecast = PriceSeries::hourly(prices.clone(), PriceKind::Forecast).unwrap();
        let solution = ScheduleProblem::taker(forecast, spec.clone())
            .unwrap()
            .solve()
            .unwrap();

        let observed = PriceSeries::hourly(prices, PriceKind::Realized).unwrap();
        let window = ObservationWindow::new(solution.profile, observed, spec, t_len).unwrap();
        let verdict = audit(&window, &MonitorOptions::default()).unwrap();
        prop_assert_eq!(
            verdict.classification,
            AuditClassification::NotEvidentlyExercising,
            "verdict: {:?}",
            verdict
        );
        prop_assert!(verdict.withholding_count <= 1);
    }

    /// Interval classes depend only on dispatch relative to the rating, so
    /// rescaling the whole system (a bigger unit, the same shape) must not
    /// change them.
    #[test]
    fn classification_is_scale_invariant(
        shape in prop::collection::vec((0usize..3, 0.0f64..=1.0), 2..=8),
        scale in 0.01f64..100.0,
        eta in 0.75f64..=1.0,
    ) {
        let t_len = shape.len();
        let energy = 4.0 * t_len as f64 * POWER_CAP;
        let classes_at = |s: f64| {
            let cap = POWER_CAP * s;
            let spec = StorageSpec::new(cap, energy * s, eta, energy * s / 2.0, None).unwrap();
            let mut p = vec![0.0; t_len];
            let mut b = vec![0.0; t_len];
            for (t, &(mode, frac)) in shape.iter().enumerate() {
                match mode {
                    1 => p[t] = frac * cap,
                    2 => b[t] = frac * cap,
                    _ => {}
                }
            }
            let profile = DispatchProfile::from_dispatch(p, b, &spec, 1.0).unwrap();
            classify_intervals(&profile, &spec, DEFAULT_CLASSIFY_TOL_FRAC * cap).unwrap()
        };
        prop_assert_eq!(classes_at(1.0), classes_at(scale));
    }
}
