//! Market-impact scenarios: what one storage unit does to prices.
//!
//! A scenario starts from a competitive price series (what the market
//! clears at when the unit bids its true value) and a price-impact level,
//! then plays out four roles:
//!
//! 1. the *benchmark*: price-taking dispatch against competitive prices;
//! 2. the *strategic* unit: it faces nominal prices built so that bidding
//!    the benchmark would reproduce the competitive outcome exactly, and
//!    optimizes knowing its net output `q_t` moves the price by
//!    `alpha_t * q_t`;
//! 3. the *realized* market: nominal minus the strategic unit's impact;
//! 4. a *free rider*: an identical price taker that re-optimizes against
//!    the realized prices without moving them.
//!
//! By construction `realized_t - competitive_t = alpha_t * withheld_t`, so
//! the price effect of withholding is visible interval by interval.

use crate::model::{AlphaSeries, DispatchProfile, ModelError, PriceKind, PriceSeries, StorageSpec};
use crate::schedule::{profit, profit_influenced, ScheduleError, ScheduleProblem};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// How much market power the scenario grants the unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioLabel {
    NoMarketPower,
    LowMarketPower,
    HighMarketPower,
    /// A caller-chosen impact level outside the named conventions.
    Custom,
}

impl ScenarioLabel {
    /// Conventional price-impact level for the named labels: the mean
    /// sensitivity in $/MWh per MWh, 1.0 for low and 2.0 for high market
    /// power. Custom scenarios carry their own level.
    pub fn default_level(self) -> Option<f64> {
        match self {
            ScenarioLabel::NoMarketPower => Some(0.0),
            ScenarioLabel::LowMarketPower => Some(1.0),
            ScenarioLabel::HighMarketPower => Some(2.0),
            ScenarioLabel::Custom => None,
        }
    }
}

impl fmt::Display for ScenarioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioLabel::NoMarketPower => "no-market-power",
            ScenarioLabel::LowMarketPower => "low-market-power",
            ScenarioLabel::HighMarketPower => "high-market-power",
            ScenarioLabel::Custom => "custom",
        })
    }
}

/// A validated scenario request: the label must match the level (zero for
/// [`ScenarioLabel::NoMarketPower`], positive otherwise), and the horizon
/// may be split into equal scheduling periods, each solved as its own bid
/// cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    label: ScenarioLabel,
    alpha_level: f64,
    period_length: Option<usize>,
}

impl ScenarioConfig {
    pub fn new(label: ScenarioLabel, alpha_level: f64) -> Result<Self, SimError> {
        if !alpha_level.is_finite() || alpha_level < 0.0 {
            return Err(SimError::BadScenario {
                detail: String::from("alpha level must be finite and >= 0"),
            });
        }
        let zero = alpha_level == 0.0;
        let wants_zero = label == ScenarioLabel::NoMarketPower;
        if zero != wants_zero {
            return Err(SimError::BadScenario {
                detail: String::from(
                    "alpha level must be zero exactly for the no-market-power label",
                ),
            });
        }
        Ok(Self {
            label,
            alpha_level,
            period_length: None,
        })
    }

    /// The named scenario at its conventional level; `None` for
    /// [`ScenarioLabel::Custom`], which has no convention.
    pub fn for_label(label: ScenarioLabel) -> Option<Self> {
        Some(Self {
            label,
            alpha_level: label.default_level()?,
            period_length: None,
        })
    }

    /// A custom-labeled scenario at `alpha_level` (which must be positive;
    /// zero impact is the no-market-power scenario).
    pub fn custom(alpha_level: f64) -> Result<Self, SimError> {
        Self::new(ScenarioLabel::Custom, alpha_level)
    }

    /// Splits the horizon into scheduling periods of `length` intervals;
    /// the default is one period spanning the whole series.
    pub fn with_period_length(mut self, length: usize) -> Result<Self, SimError> {
        if length == 0 {
            return Err(SimError::BadScenario {
                detail: String::from("scheduling period length must be positive"),
            });
        }
        self.period_length = Some(length);
        Ok(self)
    }

    pub fn label(&self) -> ScenarioLabel {
        self.label
    }

    pub fn alpha_level(&self) -> f64 {
        self.alpha_level
    }

    pub fn period_length(&self) -> Option<usize> {
        self.period_length
    }
}

/// Everything a scenario produced, prices and dispatches side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub label: ScenarioLabel,
    pub alpha_level: f64,
    pub competitive: PriceSeries,
    pub alpha: AlphaSeries,
    pub nominal: PriceSeries,
    pub realized: PriceSeries,
    /// Price-taking dispatch against the competitive prices.
    pub benchmark: DispatchProfile,
    pub benchmark_profit: f64,
    /// Price-taking dispatch re-optimized against the realized prices (the
    /// free rider).
    pub taker: DispatchProfile,
    pub taker_profit: f64,
    /// Strategic dispatch, absent when the scenario has no market power.
    pub maker: Option<DispatchProfile>,
    /// Strategic profit at the realized prices.
    pub maker_profit: Option<f64>,
    /// Benchmark net output minus strategic net output per interval.
    pub withheld: Vec<f64>,
}

/// Per-interval price impact scaled off the competitive prices:
/// `alpha_t = level * max(lambda_t, 0) / mean(max(lambda, 0))`.
///
/// Negative-price intervals get zero impact. With `level == 0` the result
/// is all zeros regardless of the prices; otherwise the competitive series
/// must be positive somewhere.
pub fn build_alpha(competitive: &PriceSeries, level: f64) -> Result<AlphaSeries, SimError> {
    if !level.is_finite() || level < 0.0 {
        return Err(SimError::BadScenario {
            detail: String::from("alpha level must be finite and >= 0"),
        });
    }
    let n = competitive.len();
    if level == 0.0 {
        return Ok(AlphaSeries::zeros(n)?);
    }
    let clipped: Vec<f64> = competitive.values().iter().map(|v| v.max(0.0)).collect();
    let mean = clipped.iter().sum::<f64>() / n as f64;
    if mean <= 0.0 {
        return Err(SimError::BadScenario {
            detail: String::from(
                "cannot scale price impact: competitive prices are never positive",
            ),
        });
    }
    Ok(AlphaSeries::new(
        clipped.iter().map(|v| level * v / mean).collect(),
    )?)
}

/// Nominal prices that make the benchmark dispatch price-neutral: with
/// `lambda_bar_t = competitive_t + alpha_t * q_benchmark_t`, a unit that
/// dispatches the benchmark sees realized prices equal to the competitive
/// ones exactly.
pub fn build_nominal(
    competitive: &PriceSeries,
    alpha: &AlphaSeries,
    benchmark: &DispatchProfile,
) -> Result<PriceSeries, SimError> {
    let n = competitive.len();
    if alpha.len() != n || benchmark.len() != n {
        return Err(SimError::Model(ModelError::LengthMismatch {
            what: "competitive prices, alpha, and benchmark profile",
        }));
    }
    let values: Vec<f64> = competitive
        .values()
        .iter()
        .zip(alpha.values())
        .enumerate()
        .map(|(t, (lambda, a))| lambda + a * benchmark.net_output(t))
        .collect();
    Ok(PriceSeries::new(
        values,
        PriceKind::Nominal,
        competitive.interval_hours(),
    )?)
}

/// Concatenated per-period solves over `prices`: price-taking when `alpha`
/// is `None`, price-making otherwise. Each scheduling period is its own bid
/// cycle against its slice of the series.
fn solve_by_period(
    prices: &PriceSeries,
    alpha: Option<&AlphaSeries>,
    spec: &StorageSpec,
    period: usize,
) -> Result<DispatchProfile, SimError> {
    let n = prices.len();
    let h = prices.interval_hours();
    let mut discharge = Vec::with_capacity(n);
    let mut charge = Vec::with_capacity(n);
    for start in (0..n).step_by(period) {
        let window = PriceSeries::new(
            prices.values()[start..start + period].to_vec(),
            prices.kind(),
            h,
        )?;
        let problem = match alpha {
            Some(a) => ScheduleProblem::maker(
                window,
                AlphaSeries::new(a.values()[start..start + period].to_vec())?,
                spec.clone(),
            )?,
            None => ScheduleProblem::taker(window, spec.clone())?,
        };
        let solution = problem.solve()?;
        discharge.extend_from_slice(&solution.profile.discharge);
        charge.extend_from_slice(&solution.profile.charge);
    }
    // Periods chain only because each one returns the state of charge to
    // its starting point, so the concatenated profile re-derives the same
    // trajectory.
    Ok(DispatchProfile::from_dispatch(discharge, charge, spec, h)?)
}

/// Run one scenario end to end. See the module docs for the pipeline.
///
/// With a period length configured, every role re-enters the market each
/// scheduling period; the spec must then pin the terminal state of charge
/// back to the initial one so consecutive periods chain.
pub fn run_scenario(
    competitive: &PriceSeries,
    spec: &StorageSpec,
    config: &ScenarioConfig,
) -> Result<ScenarioResult, SimError> {
    let competitive = competitive.rekind(PriceKind::Forecast);
    let n = competitive.len();
    let period = config.period_length().unwrap_or(n);
    if n % period != 0 {
        return Err(SimError::BadScenario {
            detail: String::from("series length is not a whole number of scheduling periods"),
        });
    }
    if period < n && spec.soc_terminal != Some(spec.soc_init) {
        return Err(SimError::BadScenario {
            detail: String::from(
                "multi-period scenarios need the terminal state of charge pinned to the initial one",
            ),
        });
    }

    let benchmark = solve_by_period(&competitive, None, spec, period)?;
    let benchmark_profit = profit(&benchmark, &competitive)?;

    if config.alpha_level() == 0.0 {
        // No impact: nominal, realized, and competitive coincide, and the
        // free rider is the benchmark itself.
        return Ok(ScenarioResult {
            label: config.label(),
            alpha_level: 0.0,
            alpha: AlphaSeries::zeros(n)?,
            nominal: competitive.rekind(PriceKind::Nominal),
            realized: competitive.rekind(PriceKind::Realized),
            competitive,
            taker: benchmark.clone(),
            taker_profit: benchmark_profit,
            benchmark,
            benchmark_profit,
            maker: None,
            maker_profit: None,
            withheld: vec![0.0; n],
        });
    }

    let alpha = build_alpha(&competitive, config.alpha_level())?;
    let nominal = build_nominal(&competitive, &alpha, &benchmark)?;
    let maker = solve_by_period(&nominal, Some(&alpha), spec, period)?;
    let maker_profit = profit_influenced(&maker, &nominal, &alpha)?;

    let realized_values: Vec<f64> = nominal
        .values()
        .iter()
        .zip(alpha.values())
        .enumerate()
        .map(|(t, (lambda, a))| lambda - a * maker.net_output(t))
        .collect();
    let realized = PriceSeries::new(
        realized_values,
        PriceKind::Realized,
        competitive.interval_hours(),
    )?;

    let taker = solve_by_period(&realized.rekind(PriceKind::Forecast), None, spec, period)?;
    let taker_profit = profit(&taker, &realized)?;

    let withheld: Vec<f64> = (0..n)
        .map(|t| benchmark.net_output(t) - maker.net_output(t))
        .collect();

    Ok(ScenarioResult {
        label: config.label(),
        alpha_level: config.alpha_level(),
        competitive,
        alpha,
        nominal,
        realized,
        benchmark,
        benchmark_profit,
        taker,
        taker_profit,
        maker: Some(maker),
        maker_profit: Some(maker_profit),
        withheld,
    })
}

/// Errors from scenario construction or execution.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Model(ModelError),
    Schedule(ScheduleError),
    BadScenario { detail: String },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Model(e) => e.fmt(f),
            SimError::Schedule(e) => e.fmt(f),
            SimError::BadScenario { detail } => write!(f, "invalid scenario: {detail}"),
        }
    }
}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::Model(e)
    }
}

impl From<ScheduleError> for SimError {
    fn from(e: ScheduleError) -> Self {
        SimError::Schedule(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SimError::Model(e) => Some(e),
            SimError::Schedule(e) => Some(e),
            SimError::BadScenario { .. } => None,
        }
    }
}
