//! Multi-interval charge/discharge scheduling.
//!
//! [`ScheduleProblem`] turns a price series, a price-impact series, and a
//! storage spec into a convex program over per-interval discharge `p`,
//! charge `b`, net output `q = p - b`, and state of charge `e`:
//!
//! ```text
//! maximize    sum_t (lambda_t - alpha_t q_t) q_t
//! subject to  q_t = p_t - b_t
//!             e_t = e_{t-1} - p_t / eta + b_t * eta
//!             0 <= p_t, b_t <= power_cap * h     (p_t = 0 if lambda_t < 0)
//!             0 <= e_t <= energy_cap             (optional)
//!             e_{T-1} = soc_terminal             (optional)
//! ```
//!
//! With `alpha = 0` the unit is a price taker; positive `alpha_t` prices in
//! its own impact on the market. The solution carries the dispatch profile
//! plus a KKT certificate: the storage shadow price per interval and the
//! multipliers on the dispatch bounds, with independently recomputed
//! residuals.

use crate::model::{
    AlphaSeries, DispatchProfile, KktCertificate, ModelError, PriceSeries, StorageSpec,
};
use crate::solver::{
    solve, ConvexProgram, SolveOptions, SolveStatus, SolverError, SparseRow,
};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use core::fmt;

/// Relative weight of the throughput tie-break in the objective. It scales
/// with the price level so solutions are invariant under price rescaling,
/// and it is small enough to never move profit beyond the solver tolerance;
/// its job is to pick the minimal-throughput optimum when several dispatches
/// earn the same profit, e.g. simultaneous charge and discharge at unit
/// efficiency. It must stay well above the solver's reduced-cost tolerance
/// or the cleanup never triggers.
const THROUGHPUT_TIE_BREAK: f64 = 1e-8;

/// A scheduling instance: prices, price impact, storage limits, and the
/// operational toggles.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleProblem {
    prices: PriceSeries,
    alpha: AlphaSeries,
    spec: StorageSpec,
    enforce_soc_bounds: bool,
    enforce_negative_price_rule: bool,
}

impl ScheduleProblem {
    /// Price-taking problem: the unit optimizes against `prices` as given.
    pub fn taker(prices: PriceSeries, spec: StorageSpec) -> Result<Self, ScheduleError> {
        let alpha = AlphaSeries::zeros(prices.len())?;
        Self::maker(prices, alpha, spec)
    }

    /// Price-influencing problem: the unit sees the realized price
    /// `prices_t - alpha_t * q_t` and optimizes revenue under that impact.
    pub fn maker(
        prices: PriceSeries,
        alpha: AlphaSeries,
        spec: StorageSpec,
    ) -> Result<Self, ScheduleError> {
        spec.validate()?;
        if alpha.len() != prices.len() {
            return Err(ScheduleError::Model(ModelError::LengthMismatch {
                what: "alpha and price series",
            }));
        }
        Ok(Self {
            prices,
            alpha,
            spec,
            enforce_soc_bounds: true,
            enforce_negative_price_rule: true,
        })
    }

    /// Keep or drop the `[0, energy_cap]` box on the state of charge.
    /// Dropping it models a unit whose energy capacity never binds.
    pub fn with_soc_bounds(mut self, enforce: bool) -> Self {
        self.enforce_soc_bounds = enforce;
        self
    }

    /// Keep or drop the rule that forbids discharging in intervals whose
    /// (forecast or nominal) price is negative.
    pub fn with_negative_price_rule(mut self, enforce: bool) -> Self {
        self.enforce_negative_price_rule = enforce;
        self
    }

    pub fn prices(&self) -> &PriceSeries {
        &self.prices
    }

    pub fn alpha(&self) -> &AlphaSeries {
        &self.alpha
    }

    pub fn spec(&self) -> &StorageSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// The convex program behind [`ScheduleProblem::solve`], in minimization
    /// form with variables laid out `[p | b | q | e]`, linking rows first and
    /// storage-dynamics rows second.
    pub fn canonical_program(&self) -> ConvexProgram {
        let t_len = self.len();
        let h = self.prices.interval_hours();
        let cap = self.spec.interval_cap(h);
        let eta = self.spec.efficiency;
        let lambda = self.prices.values();
        let alpha = self.alpha.values();
        let tie = THROUGHPUT_TIE_BREAK * self.prices.max_abs().max(1.0);

        let (p0, b0, q0, e0) = (0, t_len, 2 * t_len, 3 * t_len);
        let mut program = ConvexProgram::new(4 * t_len);
        for t in 0..t_len {
            program.linear[p0 + t] = tie;
            program.linear[b0 + t] = tie;
            program.linear[q0 + t] = -lambda[t];
            program.quadratic_diag[q0 + t] = 2.0 * alpha[t];

            program.lower[p0 + t] = 0.0;
            program.upper[p0 + t] = if self.enforce_negative_price_rule && lambda[t] < 0.0 {
                0.0
            } else {
                cap
            };
            program.lower[b0 + t] = 0.0;
            program.upper[b0 + t] = cap;
            program.lower[q0 + t] = -cap;
            program.upper[q0 + t] = cap;
            if self.enforce_soc_bounds {
                program.lower[e0 + t] = 0.0;
                program.upper[e0 + t] = self.spec.energy_cap;
            }
        }
        if let Some(v) = self.spec.soc_terminal {
            program.lower[e0 + t_len - 1] = v;
            program.upper[e0 + t_len - 1] = v;
        }
        for t in 0..t_len {
            // q_t - p_t + b_t = 0
            program.equalities.push(SparseRow::new(vec![
                (q0 + t, 1.0),
                (p0 + t, -1.0),
                (b0 + t, 1.0),
            ]));
            program.eq_rhs.push(0.0);
        }
        for t in 0..t_len {
            // e_t - e_{t-1} + p_t / eta - b_t * eta = [t == 0] * soc_init
            let mut entries = vec![(e0 + t, 1.0), (p0 + t, 1.0 / eta), (b0 + t, -eta)];
            if t > 0 {
                entries.push((e0 + t - 1, -1.0));
            }
            program.equalities.push(SparseRow::new(entries));
            program
                .eq_rhs
                .push(if t == 0 { self.spec.soc_init } else { 0.0 });
        }
        program
    }

    /// Solve for the profit-maximal dispatch.
    pub fn solve(&self) -> Result<ScheduleSolution, ScheduleError> {
        let t_len = self.len();
        let program = self.canonical_program();
        let report = solve(&program, &SolveOptions::default())?;
        match report.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible { row } => {
                let detail = if row < t_len {
                    format!("net-output link at interval {row}")
                } else {
                    format!(
                        "storage limits cannot be met from interval {} onward \
                         (check energy capacity, terminal state, and initial state)",
                        row - t_len
                    )
                };
                return Err(ScheduleError::Infeasible { detail });
            }
            SolveStatus::IterationLimit => return Err(ScheduleError::IterationLimit),
        }

        let (p0, b0, _q0, e0) = (0, t_len, 2 * t_len, 3 * t_len);
        let profile = DispatchProfile {
            discharge: report.primal[p0..p0 + t_len].to_vec(),
            charge: report.primal[b0..b0 + t_len].to_vec(),
            soc: report.primal[e0..e0 + t_len].to_vec(),
            interval_hours: self.prices.interval_hours(),
        };
        let certificate = KktCertificate {
            theta: report.duals.equality[t_len..2 * t_len].to_vec(),
            delta_minus: report.duals.bound_lower[p0..p0 + t_len].to_vec(),
            delta_plus: report.duals.bound_upper[p0..p0 + t_len].to_vec(),
            beta_minus: report.duals.bound_lower[b0..b0 + t_len].to_vec(),
            beta_plus: report.duals.bound_upper[b0..b0 + t_len].to_vec(),
            stationarity_residual: report.residuals.stationarity,
            primal_residual: report.residuals.primal,
            dual_residual: report.residuals.dual,
            complementarity_residual: report.residuals.complementarity,
        };
        let forecast_profit = profit_influenced(&profile, &self.prices, &self.alpha)?;
        Ok(ScheduleSolution {
            profile,
            certificate,
            objective: report.objective,
            forecast_profit,
            iterations: report.iterations,
        })
    }
}

/// Optimal dispatch with its optimality evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSolution {
    pub profile: DispatchProfile,
    /// Storage shadow prices and dispatch-bound multipliers, with
    /// independently recomputed KKT residuals.
    pub certificate: KktCertificate,
    /// Solver objective (negated profit plus the throughput tie-break).
    pub objective: f64,
    /// Profit under the prices the schedule was built against, including the
    /// unit's own price impact when `alpha > 0`.
    pub forecast_profit: f64,
    pub iterations: usize,
}

/// Revenue of a dispatch against a price series the unit does not move:
/// `sum_t lambda_t (p_t - b_t)`.
pub fn profit(profile: &DispatchProfile, prices: &PriceSeries) -> Result<f64, ModelError> {
    if profile.len() != prices.len() {
        return Err(ModelError::LengthMismatch {
            what: "profile and price series",
        });
    }
    Ok(prices
        .values()
        .iter()
        .enumerate()
        .map(|(t, lambda)| lambda * profile.net_output(t))
        .sum())
}

/// Revenue of a dispatch when the unit's own net output moves the price:
/// `sum_t (lambda_t - alpha_t q_t) q_t`.
pub fn profit_influenced(
    profile: &DispatchProfile,
    nominal: &PriceSeries,
    alpha: &AlphaSeries,
) -> Result<f64, ModelError> {
    if profile.len() != nominal.len() || profile.len() != alpha.len() {
        return Err(ModelError::LengthMismatch {
            what: "profile, price, and alpha series",
        });
    }
    Ok(nominal
        .values()
        .iter()
        .zip(alpha.values())
        .enumerate()
        .map(|(t, (lambda, a))| {
            let q = profile.net_output(t);
            (lambda - a * q) * q
        })
        .sum())
}

/// Which way a two-interval unit moves energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoIntervalRegime {
    /// Sell stored energy in the first interval, buy it back in the second.
    DischargeFirst,
    Idle,
    /// Buy in the first interval, sell in the second.
    ChargeFirst,
}

/// Closed-form two-interval dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoIntervalPolicy {
    pub profile: DispatchProfile,
    pub regime: TwoIntervalRegime,
}

/// Closed-form optimal dispatch of a price taker over two intervals,
/// assuming the energy capacity never binds and the state of charge returns
/// to its initial value.
///
/// Writing `cap = power_cap * h` and `eta` for the one-way efficiency, the
/// unit discharges `cap * eta^2` now and buys back `cap` later when
/// `lambda_1 > lambda_2 / eta^2`, mirrors that when `lambda_1 < lambda_2 *
/// eta^2`, and stays idle in the band between, where the round-trip loss
/// eats the price spread.
///
/// An orientation is ruled out when its selling interval has a negative
/// price, matching the scheduler's no-discharge-at-negative-price rule. With
/// both prices non-negative the branch conditions partition the price plane
/// and the gates never fire; with both negative the unit stays idle.
pub fn policy_two_interval_taker(
    lambda_1: f64,
    lambda_2: f64,
    spec: &StorageSpec,
    interval_hours: f64,
) -> Result<TwoIntervalPolicy, ScheduleError> {
    spec.validate()?;
    let eta = spec.efficiency;
    let eta2 = eta * eta;
    let cap = spec.interval_cap(interval_hours);
    let (p, b, regime) = if lambda_1 >= 0.0 && lambda_1 > lambda_2 / eta2 {
        (
            [cap * eta2, 0.0],
            [0.0, cap],
            TwoIntervalRegime::DischargeFirst,
        )
    } else if lambda_2 >= 0.0 && lambda_1 < lambda_2 * eta2 {
        (
            [0.0, cap * eta2],
            [cap, 0.0],
            TwoIntervalRegime::ChargeFirst,
        )
    } else {
        ([0.0, 0.0], [0.0, 0.0], TwoIntervalRegime::Idle)
    };
    two_interval_profile(p, b, spec, interval_hours, regime)
}

/// Closed-form optimal dispatch over two intervals for a unit whose net
/// output moves the price by `alpha_t` per MWh, under the same assumptions
/// as [`policy_two_interval_taker`].
///
/// Price impact shrinks the dispatch: inside each active branch the interior
/// quantity solves the first-order condition, and the unit only swings fully
/// when even the last MWh still earns a positive margin after depressing its
/// own price. The same negative-price gates as the taker policy apply to the
/// nominal prices.
pub fn policy_two_interval_maker(
    lambda_1: f64,
    lambda_2: f64,
    alpha_1: f64,
    alpha_2: f64,
    spec: &StorageSpec,
    interval_hours: f64,
) -> Result<TwoIntervalPolicy, ScheduleError> {
    spec.validate()?;
    if !(alpha_1.is_finite() && alpha_1 >= 0.0 && alpha_2.is_finite() && alpha_2 >= 0.0) {
        return Err(ScheduleError::Model(ModelError::BadValue {
            what: "alpha must be finite and non-negative",
        }));
    }
    let eta = spec.efficiency;
    let eta2 = eta * eta;
    let eta4 = eta2 * eta2;
    let cap = spec.interval_cap(interval_hours);
    let (p, b, regime) = if lambda_1 >= 0.0 && lambda_1 > lambda_2 / eta2 {
        // Discharge x now, buy back x / eta^2 later; x is capped by the
        // buy-back power limit at cap * eta^2.
        if lambda_1 - 2.0 * alpha_1 * cap * eta2 >= (lambda_2 + 2.0 * alpha_2 * cap) / eta2 {
            (
                [cap * eta2, 0.0],
                [0.0, cap],
                TwoIntervalRegime::DischargeFirst,
            )
        } else {
            let x = (lambda_1 - lambda_2 / eta2) / (2.0 * (alpha_1 + alpha_2 / eta4));
            (
                [x, 0.0],
                [0.0, x / eta2],
                TwoIntervalRegime::DischargeFirst,
            )
        }
    } else if lambda_2 >= 0.0 && lambda_1 < lambda_2 * eta2 {
        // Buy y now, sell y * eta^2 later.
        if (lambda_1 + 2.0 * alpha_1 * cap) / eta2 <= lambda_2 - 2.0 * alpha_2 * cap * eta2 {
            (
                [0.0, cap * eta2],
                [cap, 0.0],
                TwoIntervalRegime::ChargeFirst,
            )
        } else {
            let y = (lambda_2 * eta2 - lambda_1) / (2.0 * (alpha_1 + alpha_2 * eta4));
            ([0.0, y * eta2], [y, 0.0], TwoIntervalRegime::ChargeFirst)
        }
    } else {
        ([0.0, 0.0], [0.0, 0.0], TwoIntervalRegime::Idle)
    };
    two_interval_profile(p, b, spec, interval_hours, regime)
}

fn two_interval_profile(
    p: [f64; 2],
    b: [f64; 2],
    spec: &StorageSpec,
    interval_hours: f64,
    regime: TwoIntervalRegime,
) -> Result<TwoIntervalPolicy, ScheduleError> {
    let profile = DispatchProfile::from_dispatch(p.to_vec(), b.to_vec(), spec, interval_hours)?;
    Ok(TwoIntervalPolicy { profile, regime })
}

/// Whether upgrading a partial charge in an interval priced `lambda_1` to a
/// full charge, selling the extra energy in an interval priced `lambda_2`,
/// loses money for a unit with price impacts `alpha_1`, `alpha_2`. `cap` is
/// the per-interval dispatch limit `power_cap * h`.
///
/// When this holds, observing a partial charge next to a later discharge is
/// consistent with profit-maximizing behavior rather than withholding.
pub fn charge_upgrade_unprofitable(
    lambda_1: f64,
    lambda_2: f64,
    alpha_1: f64,
    alpha_2: f64,
    cap: f64,
    eta: f64,
) -> bool {
    (lambda_1 + 2.0 * alpha_1 * cap) / (eta * eta) > lambda_2 - 2.0 * alpha_2 * cap
}

/// Errors from building or solving a schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleError {
    Model(ModelError),
    Solver(SolverError),
    /// The storage limits admit no dispatch at all.
    Infeasible { detail: String },
    IterationLimit,
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::Model(e) => e.fmt(f),
            ScheduleError::Solver(e) => e.fmt(f),
            ScheduleError::Infeasible { detail } => {
                write!(f, "schedule is infeasible: {detail}")
            }
            ScheduleError::IterationLimit => {
                f.write_str("solver hit its iteration limit before converging")
            }
        }
    }
}

impl From<ModelError> for ScheduleError {
    fn from(e: ModelError) -> Self {
        ScheduleError::Model(e)
    }
}

impl From<SolverError> for ScheduleError {
    fn from(e: SolverError) -> Self {
        ScheduleError::Solver(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ScheduleError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ScheduleError::Model(e) => Some(e),
            ScheduleError::Solver(e) => Some(e),
            _ => None,
        }
    }
}
