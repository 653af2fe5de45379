//! The closed-form two-interval policies, the general solver, and a
//! brute-force grid search must agree on profit over randomized prices,
//! efficiencies, and price-impact levels.
//!
//! The closed forms assume an unconstrained energy budget, a state of
//! charge that returns to its starting level, and one charge-discharge
//! cycle per horizon, so the solver runs with the energy box relaxed, a
//! terminal pin, and the off-cycle variables pinned per orientation. The
//! last pin matters once a negative price enters a horizon with price
//! impact: the unrestricted program can then pad profit by cycling energy
//! through the round-trip loss to reposition its net output, a move the
//! closed forms never consider. With all prices non-negative that padding
//! is a strict loss, and the unrestricted product path must agree too.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storbid_core::model::{AlphaSeries, DispatchProfile, PriceKind, PriceSeries, StorageSpec};
use storbid_core::schedule::{
    policy_two_interval_maker, policy_two_interval_taker, profit_influenced, ScheduleProblem,
};
use storbid_core::solver::{solve, SolveOptions, SolveStatus};

const POWER_CAP: f64 = 2.5;
const GRID_STEPS: usize = 500;

fn spec() -> StorageSpec {
    StorageSpec::new(POWER_CAP, 20.0, 0.9, 10.0, Some(10.0)).unwrap()
}

fn spec_with_eta(eta: f64) -> StorageSpec {
    StorageSpec::new(POWER_CAP, 20.0, eta, 10.0, Some(10.0)).unwrap()
}

/// Best profit over both one-shot cycles, scanning the free quantity on a
/// uniform grid. Idle (zero) is always a candidate, and an orientation is
/// skipped when its selling interval has a negative price.
fn grid_oracle(l1: f64, l2: f64, a1: f64, a2: f64, cap: f64, eta: f64) -> f64 {
    let eta2 = eta * eta;
    let mut best = 0.0f64;
    if l1 >= 0.0 {
        // Discharge x now, buy x / eta^2 back; the buy-back hits its power
        // bound first, capping x at cap * eta^2.
        let x_max = cap * eta2;
        for i in 0..=GRID_STEPS {
            let x = x_max * i as f64 / GRID_STEPS as f64;
            let q2 = -x / eta2;
            let profit = (l1 - a1 * x) * x + (l2 - a2 * q2) * q2;
            best = best.max(profit);
        }
    }
    if l2 >= 0.0 {
        // Buy y now, sell y * eta^2 later.
        for i in 0..=GRID_STEPS {
            let y = cap * i as f64 / GRID_STEPS as f64;
            let q2 = y * eta2;
            let profit = (l1 + a1 * y) * (-y) + (l2 - a2 * q2) * q2;
            best = best.max(profit);
        }
    }
    best
}

fn problem(l1: f64, l2: f64, a1: f64, a2: f64, spec: &StorageSpec) -> ScheduleProblem {
    let prices = PriceSeries::hourly(vec![l1, l2], PriceKind::Forecast).unwrap();
    let alpha = AlphaSeries::new(vec![a1, a2]).unwrap();
    ScheduleProblem::maker(prices, alpha, spec.clone())
        .unwrap()
        .with_soc_bounds(false)
}

/// Best solver profit over the two single-cycle orientations, each imposed
/// by zeroing the off-cycle dispatch variables in the canonical program.
fn solver_profit(l1: f64, l2: f64, a1: f64, a2: f64, spec: &StorageSpec) -> f64 {
    let prices = PriceSeries::hourly(vec![l1, l2], PriceKind::Forecast).unwrap();
    let alpha = AlphaSeries::new(vec![a1, a2]).unwrap();
    let base = problem(l1, l2, a1, a2, spec).canonical_program();
    // Variables are laid out [p | b | q | e]: discharge-first zeroes b_1 and
    // p_2, charge-first the mirror.
    let mut best = f64::NEG_INFINITY;
    for (p_fix, b_fix) in [(1, 0), (0, 1)] {
        let mut program = base.clone();
        program.upper[p_fix] = 0.0;
        program.upper[2 + b_fix] = 0.0;
        let report = solve(&program, &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        let profile = DispatchProfile::from_dispatch(
            report.primal[0..2].to_vec(),
            report.primal[2..4].to_vec(),
            spec,
            1.0,
        )
        .unwrap();
        best = best.max(profit_influenced(&profile, &prices, &alpha).unwrap());
    }
    best
}

fn policy_profit(l1: f64, l2: f64, a1: f64, a2: f64, spec: &StorageSpec) -> f64 {
    let policy = policy_two_interval_maker(l1, l2, a1, a2, spec, 1.0).unwrap();
    let prices = PriceSeries::hourly(vec![l1, l2], PriceKind::Forecast).unwrap();
    let alpha = AlphaSeries::new(vec![a1, a2]).unwrap();
    profit_influenced(&policy.profile, &prices, &alpha).unwrap()
}

#[test]
fn policy_solver_and_grid_agree_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2b1d_5701);
    let etas = [0.8, 0.9, 1.0];
    let alphas = [0.0, 0.5, 2.0];
    for round in 0..300 {
        let l1: f64 = rng.gen_range(-10.0..100.0);
        let l2: f64 = rng.gen_range(-10.0..100.0);
        let eta = etas[rng.gen_range(0..etas.len())];
        let a1 = alphas[rng.gen_range(0..alphas.len())];
        let a2 = alphas[rng.gen_range(0..alphas.len())];
        let spec = spec_with_eta(eta);
        let cap = spec.interval_cap(1.0);
        let tol = 1e-3 * cap * l1.abs().max(l2.abs()).max(1.0);

        let oracle = grid_oracle(l1, l2, a1, a2, cap, eta);
        let policy = policy_profit(l1, l2, a1, a2, &spec);
        let solver = solver_profit(l1, l2, a1, a2, &spec);

        let ctx = format!(
            "round {round}: l=({l1:.4}, {l2:.4}) eta={eta} alpha=({a1}, {a2}) \
             oracle={oracle:.9} policy={policy:.9} solver={solver:.9}"
        );
        assert!((policy - oracle).abs() <= tol, "policy vs grid: {ctx}");
        assert!((solver - oracle).abs() <= tol, "solver vs grid: {ctx}");
        assert!((solver - policy).abs() <= tol, "solver vs policy: {ctx}");

        if l1 >= 0.0 && l2 >= 0.0 {
            let product = problem(l1, l2, a1, a2, &spec)
                .solve()
                .unwrap()
                .forecast_profit;
            assert!((product - oracle).abs() <= tol, "product solve: {ctx}");
        }
    }
}

#[test]
fn taker_policy_matches_maker_policy_at_zero_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0ddc_0ffe);
    let spec = spec();
    for _ in 0..100 {
        let l1 = rng.gen_range(-10.0..100.0);
        let l2 = rng.gen_range(-10.0..100.0);
        let taker = policy_two_interval_taker(l1, l2, &spec, 1.0).unwrap();
        let maker = policy_two_interval_maker(l1, l2, 0.0, 0.0, &spec, 1.0).unwrap();
        assert_eq!(taker.regime, maker.regime, "l=({l1}, {l2})");
        assert_eq!(taker.profile, maker.profile, "l=({l1}, {l2})");
    }
}

#[test]
fn price_impact_never_raises_dispatch() {
    // More price impact can only shrink the traded quantity: each extra MWh
    // depresses the unit's own margin.
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de_ba5e);
    let spec = spec();
    for _ in 0..100 {
        let l1 = rng.gen_range(-10.0..100.0);
        let l2 = rng.gen_range(-10.0..100.0);
        let lo = policy_two_interval_maker(l1, l2, 0.1, 0.1, &spec, 1.0).unwrap();
        let hi = policy_two_interval_maker(l1, l2, 1.5, 1.5, &spec, 1.0).unwrap();
        assert!(
            hi.profile.throughput() <= lo.profile.throughput() + 1e-12,
            "l=({l1}, {l2})"
        );
    }
}
