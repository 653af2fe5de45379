//! Ex-post audit of observed dispatch against market prices.
//!
//! The monitor sees what a market operator sees: per-interval discharge and
//! charge in MWh, the realized clearing prices, and the unit's ratings. It
//! asks whether the record is consistent with competitive price-taking
//! behaviour, via two checks over an observation window split into
//! scheduling periods (one period per bid cycle):
//!
//! 1. *counting*: a competitive taker pins at most one interval per bid
//!    cycle strictly inside its power range, so the number of withholding
//!    intervals must not exceed the number of non-idle periods;
//! 2. *price-decision consistency*: within each period, the price at a
//!    fully dispatched or idle interval must order correctly against the
//!    price at every withholding interval, after adjusting prices by the
//!    round-trip efficiency where a charge is valued through later
//!    discharge.
//!
//! A window passing both checks is certified [`NotEvidentlyExercising`];
//! anything else is [`NotCertified`]. The audit is one-sided: it can clear
//! a unit, never convict one, because strategic and competitive withholding
//! produce the same observables outside the checked inequalities.
//!
//! [`NotEvidentlyExercising`]: AuditClassification::NotEvidentlyExercising
//! [`NotCertified`]: AuditClassification::NotCertified

use crate::model::{
    classify_intervals, DispatchProfile, IntervalClass, ModelError, PriceKind, PriceSeries,
    StorageSpec, DEFAULT_CLASSIFY_TOL_FRAC,
};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Default additive slack, in $/MWh, for the strict price inequalities of
/// the consistency check. Observed prices carry market-system rounding, so
/// `lhs > rhs` is accepted whenever `lhs > rhs - slack`.
pub const DEFAULT_PRICE_SLACK: f64 = 1e-6;

/// Price impact, in $/MWh, that one full-capacity interval of the
/// catalogue's strategic unit exerts on its own clearing price. Fixed in
/// dollars so the synthesized violations keep the same decisive margins for
/// any unit rating.
const CATALOGUE_IMPACT: f64 = 2.5;

/// Tunable tolerances for the audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorOptions {
    /// Dispatch classification tolerance as a fraction of the per-interval
    /// energy bound: values within `frac * cap` of zero read as idle and
    /// within `frac * cap` of the bound read as full.
    pub classify_tol_frac: f64,
    /// Additive slack for the strict price inequalities, $/MWh.
    pub price_slack: f64,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        Self {
            classify_tol_frac: DEFAULT_CLASSIFY_TOL_FRAC,
            price_slack: DEFAULT_PRICE_SLACK,
        }
    }
}

impl MonitorOptions {
    fn validate(&self) -> Result<(), MonitorError> {
        if !(self.classify_tol_frac.is_finite() && self.classify_tol_frac >= 0.0) {
            return Err(MonitorError::BadOption {
                what: "classify_tol_frac must be finite and >= 0",
            });
        }
        if !(self.price_slack.is_finite() && self.price_slack >= 0.0) {
            return Err(MonitorError::BadOption {
                what: "price_slack must be finite and >= 0",
            });
        }
        Ok(())
    }
}

/// An observed dispatch record paired with the realized prices it cleared
/// at, split into equal-length scheduling periods.
///
/// The window stores everything the audit needs and nothing it infers:
/// state of charge is carried by the profile for context but never read by
/// the checks, since an operator cannot observe it reliably.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    profile: DispatchProfile,
    prices: PriceSeries,
    spec: StorageSpec,
    period_length: usize,
}

impl ObservationWindow {
    /// Validates and assembles a window.
    ///
    /// Requirements: a valid spec; equal, nonzero profile and price lengths
    /// that split evenly into periods of `period_length`; matching interval
    /// durations; finite nonnegative dispatch; prices of kind
    /// [`PriceKind::Realized`] (rekind other series explicitly to assert
    /// they are observations).
    pub fn new(
        profile: DispatchProfile,
        prices: PriceSeries,
        spec: StorageSpec,
        period_length: usize,
    ) -> Result<Self, MonitorError> {
        spec.validate()?;
        if profile.is_empty() {
            return Err(MonitorError::Model(ModelError::EmptySeries));
        }
        if profile.len() != prices.len() {
            return Err(MonitorError::Model(ModelError::LengthMismatch {
                what: "observed dispatch and prices",
            }));
        }
        if prices.kind() != PriceKind::Realized {
            return Err(MonitorError::BadWindow {
                detail: "observation prices must carry the realized kind",
            });
        }
        if profile.interval_hours != prices.interval_hours() {
            return Err(MonitorError::BadWindow {
                detail: "dispatch and price interval durations differ",
            });
        }
        for t in 0..profile.len() {
            let p = profile.discharge[t];
            let b = profile.charge[t];
            if !(p.is_finite() && p >= 0.0 && b.is_finite() && b >= 0.0) {
                return Err(MonitorError::BadWindow {
                    detail: "dispatch values must be finite and nonnegative",
                });
            }
        }
        if period_length == 0 || profile.len() % period_length != 0 {
            return Err(MonitorError::BadPeriod {
                len: profile.len(),
                period_length,
            });
        }
        Ok(Self {
            profile,
            prices,
            spec,
            period_length,
        })
    }

    pub fn profile(&self) -> &DispatchProfile {
        &self.profile
    }

    pub fn prices(&self) -> &PriceSeries {
        &self.prices
    }

    pub fn spec(&self) -> &StorageSpec {
        &self.spec
    }

    /// Intervals per scheduling period.
    pub fn period_length(&self) -> usize {
        self.period_length
    }

    /// Number of scheduling periods in the window.
    pub fn periods(&self) -> usize {
        self.profile.len() / self.period_length
    }

    /// Total intervals in the window.
    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }
}

/// One scheduling period of a window: the half-open interval range
/// `[start, end)` and whether every interval in it classifies idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodSegment {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub idle: bool,
}

/// Outcome of the audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditClassification {
    /// Both checks pass: the record is consistent with competitive
    /// price-taking behaviour.
    NotEvidentlyExercising,
    /// At least one check fails: the window cannot be certified. Not a
    /// finding of market-power exercise, only the absence of a certificate.
    NotCertified,
}

impl fmt::Display for AuditClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditClassification::NotEvidentlyExercising => "not-evidently-exercising",
            AuditClassification::NotCertified => "not-certified",
        })
    }
}

/// A price-decision consistency rule: each names the strict inequality that
/// competitive behaviour forces between the price at a fully dispatched or
/// idle interval and the price at a withholding interval of the same
/// period. "Value" marks the side adjusted by the squared one-way
/// efficiency, converting between a market price and the worth of energy
/// held in storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Full discharge must out-price a partial discharge.
    FullDischargeAbovePartialDischarge,
    /// Full discharge must out-price a partial charge's stored value.
    FullDischargeAbovePartialChargeValue,
    /// Partial discharge must out-price a full charge's stored value.
    PartialDischargeAboveFullChargeValue,
    /// Partial charge must price above a full charge.
    PartialChargeAboveFullCharge,
    /// An idle interval's stored value must exceed a partial discharge.
    IdleValueAbovePartialDischarge,
    /// Partial discharge must price above an idle interval.
    PartialDischargeAboveIdle,
    /// An idle interval must price above a partial charge.
    IdleAbovePartialCharge,
    /// Partial charge must exceed an idle interval's discounted value.
    PartialChargeAboveIdleValue,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::FullDischargeAbovePartialDischarge => {
                "full-discharge-above-partial-discharge"
            }
            RuleKind::FullDischargeAbovePartialChargeValue => {
                "full-discharge-above-partial-charge-value"
            }
            RuleKind::PartialDischargeAboveFullChargeValue => {
                "partial-discharge-above-full-charge-value"
            }
            RuleKind::PartialChargeAboveFullCharge => "partial-charge-above-full-charge",
            RuleKind::IdleValueAbovePartialDischarge => "idle-value-above-partial-discharge",
            RuleKind::PartialDischargeAboveIdle => "partial-discharge-above-idle",
            RuleKind::IdleAbovePartialCharge => "idle-above-partial-charge",
            RuleKind::PartialChargeAboveIdleValue => "partial-charge-above-idle-value",
        })
    }
}

/// A failed consistency rule: within `period`, the full or idle interval
/// `subject` and the withholding interval `withholding` carry prices whose
/// required ordering `lhs > rhs` (already efficiency-adjusted) failed even
/// with the slack applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleViolation {
    pub period: usize,
    pub subject: usize,
    pub withholding: usize,
    pub rule: RuleKind,
    pub lhs: f64,
    pub rhs: f64,
}

/// The audit's full result. `classification` is derived: certified exactly
/// when both condition flags are true.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditVerdict {
    pub classification: AuditClassification,
    /// Intervals dispatched strictly inside the power range.
    pub withholding_count: usize,
    /// Periods with any non-idle interval.
    pub nonidle_periods: usize,
    /// `nonidle_periods - withholding_count`; negative when the count check
    /// fails, and a small nonnegative margin flags windows that lean on the
    /// allowance for energy-limited (storage-saturated) behaviour.
    pub count_margin: i64,
    pub condition1_ok: bool,
    pub condition2_ok: bool,
    pub violations: Vec<RuleViolation>,
}

/// Classification shared by every audit entry point.
struct WindowClasses {
    classes: Vec<IntervalClass>,
    period_idle: Vec<bool>,
}

fn classify_window(
    window: &ObservationWindow,
    options: &MonitorOptions,
) -> Result<WindowClasses, MonitorError> {
    options.validate()?;
    let tol =
        options.classify_tol_frac * window.spec.interval_cap(window.profile.interval_hours);
    let classes = classify_intervals(&window.profile, &window.spec, tol)?;
    let period_idle = classes
        .chunks(window.period_length)
        .map(|chunk| chunk.iter().all(|c| *c == IntervalClass::Idle))
        .collect();
    Ok(WindowClasses {
        classes,
        period_idle,
    })
}

fn tally(wc: &WindowClasses) -> (usize, usize) {
    let count = wc.classes.iter().filter(|c| c.is_withholding()).count();
    let nonidle = wc.period_idle.iter().filter(|idle| !**idle).count();
    (count, nonidle)
}

fn consistency_violations(
    window: &ObservationWindow,
    wc: &WindowClasses,
    slack: f64,
) -> Vec<RuleViolation> {
    let prices = window.prices.values();
    let eta2 = window.spec.efficiency * window.spec.efficiency;
    let t_len = window.period_length;
    let mut violations = Vec::new();
    for (pi, chunk) in wc.classes.chunks(t_len).enumerate() {
        if wc.period_idle[pi] {
            continue;
        }
        let base = pi * t_len;
        let partials: Vec<usize> = (0..t_len)
            .filter(|&j| chunk[j].is_withholding())
            .map(|j| base + j)
            .collect();
        if partials.is_empty() {
            continue;
        }
        for j in 0..t_len {
            let subject = base + j;
            let sc = wc.classes[subject];
            let sp = prices[subject];
            // An idle interval at a negative price is forced conduct (the
            // unit must not discharge into it), so it carries no evidence
            // and is excluded as a comparison subject.
            if sc.is_withholding() || (sc == IntervalClass::Idle && sp < 0.0) {
                continue;
            }
            for &held in &partials {
                let hp = prices[held];
                let mut check = |rule: RuleKind, lhs: f64, rhs: f64| {
                    if !(lhs > rhs - slack) {
                        violations.push(RuleViolation {
                            period: pi,
                            subject,
                            withholding: held,
                            rule,
                            lhs,
                            rhs,
                        });
                    }
                };
                match (sc, wc.classes[held]) {
                    (IntervalClass::DischargeFull, IntervalClass::DischargeWithhold) => {
                        check(RuleKind::FullDischargeAbovePartialDischarge, sp, hp);
                    }
                    (IntervalClass::DischargeFull, IntervalClass::ChargeWithhold) => {
                        check(RuleKind::FullDischargeAbovePartialChargeValue, sp, hp / eta2);
                    }
                    (IntervalClass::ChargeFull, IntervalClass::DischargeWithhold) => {
                        check(RuleKind::PartialDischargeAboveFullChargeValue, hp, sp / eta2);
                    }
                    (IntervalClass::ChargeFull, IntervalClass::ChargeWithhold) => {
                        check(RuleKind::PartialChargeAboveFullCharge, hp, sp);
                    }
                    (IntervalClass::Idle, IntervalClass::DischargeWithhold) => {
                        check(RuleKind::IdleValueAbovePartialDischarge, sp / eta2, hp);
                        check(RuleKind::PartialDischargeAboveIdle, hp, sp);
                    }
                    (IntervalClass::Idle, IntervalClass::ChargeWithhold) => {
                        check(RuleKind::IdleAbovePartialCharge, sp, hp);
                        check(RuleKind::PartialChargeAboveIdleValue, hp, sp * eta2);
                    }
                    // Subjects are full or idle, held intervals are partial.
                    _ => unreachable!("subject and withholding classes are disjoint"),
                }
            }
        }
    }
    violations
}

/// Splits the window into its scheduling periods, tagging each idle when
/// every interval in it classifies idle.
pub fn segment(
    window: &ObservationWindow,
    options: &MonitorOptions,
) -> Result<Vec<PeriodSegment>, MonitorError> {
    let wc = classify_window(window, options)?;
    Ok((0..window.periods())
        .map(|i| PeriodSegment {
            index: i,
            start: i * window.period_length,
            end: (i + 1) * window.period_length,
            idle: wc.period_idle[i],
        })
        .collect())
}

/// Counts intervals dispatched strictly inside the power range, on either
/// side of the market.
pub fn count_withholding(
    window: &ObservationWindow,
    options: &MonitorOptions,
) -> Result<usize, MonitorError> {
    let wc = classify_window(window, options)?;
    Ok(tally(&wc).0)
}

/// Counting check: withholding intervals must not outnumber non-idle
/// scheduling periods.
pub fn check_condition1(
    window: &ObservationWindow,
    options: &MonitorOptions,
) -> Result<bool, MonitorError> {
    let wc = classify_window(window, options)?;
    let (count, nonidle) = tally(&wc);
    Ok(count <= nonidle)
}

/// Price-decision consistency check. Returns every failed rule; an empty
/// list means the check passes.
pub fn check_condition2(
    window: &ObservationWindow,
    options: &MonitorOptions,
) -> Result<Vec<RuleViolation>, MonitorError> {
    let wc = classify_window(window, options)?;
    Ok(consistency_violations(window, &wc, options.price_slack))
}

/// Runs both checks and classifies the window.
pub fn audit(
    window: &ObservationWindow,
    options: &MonitorOptions,
) -> Result<AuditVerdict, MonitorError> {
    let wc = classify_window(window, options)?;
    let (count, nonidle) = tally(&wc);
    let condition1_ok = count <= nonidle;
    let violations = consistency_violations(window, &wc, options.price_slack);
    let condition2_ok = violations.is_empty();
    let classification = if condition1_ok && condition2_ok {
        AuditClassification::NotEvidentlyExercising
    } else {
        AuditClassification::NotCertified
    };
    Ok(AuditVerdict {
        classification,
        withholding_count: count,
        nonidle_periods: nonidle,
        count_margin: nonidle as i64 - count as i64,
        condition1_ok,
        condition2_ok,
        violations,
    })
}

/// A named fixture pair: the same market situation recorded once for a
/// competitive price taker and once for a strategic unit whose single
/// withheld interval the audit flags.
#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub taker: ObservationWindow,
    pub maker: ObservationWindow,
}

/// Builds the fixture catalogue of one-interval withholding patterns.
///
/// Each of the 13 entries pairs a competitive record with a strategic one
/// over the same five-interval cycle (padded to six where a two-interval
/// period split is needed): the taker window passes the audit while the
/// maker window, despite showing exactly one withholding interval, fails
/// the price-decision consistency check. Maker prices embed the unit's own
/// impact: the nominal level minus [`CATALOGUE_IMPACT`]`/cap` dollars per
/// MWh of net output, so a full-capacity interval moves its price by 2.5
/// $/MWh regardless of the rating. Price ladders scale with the square of
/// the inverse efficiency, keeping every entry decisive for any efficiency
/// in (0, 1]. Withheld intervals sit at half capacity, safely inside the
/// classification bands; each window starts at the charge level that keeps
/// its trajectory nonnegative (clamped to the energy rating, which the
/// supplied spec's own initial level does not enter).
///
/// The downgrade entries thin a full interval to partial while dropping
/// the taker's withheld interval to idle; the upgrade entries raise one of
/// two equal-price partials to full; the switch entries relocate or
/// reorder dispatch the taker would not perform at the observed prices,
/// four of them against flat prices where the taker stays idle outright.
/// Mirror entries transpose a pattern's charge and discharge roles.
pub fn counterexample_catalogue(
    spec: &StorageSpec,
) -> Result<Vec<CatalogueEntry>, MonitorError> {
    spec.validate()?;
    let cap = spec.interval_cap(1.0);
    let f = cap;
    let w = 0.5 * cap;
    let r = 1.0 / (spec.efficiency * spec.efficiency);
    let alpha = CATALOGUE_IMPACT / cap;
    let entry = |id, description, period_length, tp, tb, mp, mb, nominal| {
        build_entry(
            id,
            description,
            period_length,
            tp,
            tb,
            mp,
            mb,
            nominal,
            spec,
            alpha,
        )
    };
    Ok(vec![
        entry(
            "discharge-thinned-charge-dropped",
            "competitive: two full discharges, then a partial and two full charges; \
             strategic: thins one discharge to partial and drops the partial charge",
            5,
            vec![f, f, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, w, f, f],
            vec![f, w, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, f, f],
            vec![20.0 * r + 30.0, 20.0 * r + 25.0, 20.0, 10.0, 5.0],
        )?,
        entry(
            "charge-thinned-discharge-dropped",
            "mirror of discharge-thinned-charge-dropped: full charges lead, a partial \
             discharge is dropped and one charge thinned",
            5,
            vec![0.0, 0.0, w, f, f],
            vec![f, f, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, f, f],
            vec![f, w, 0.0, 0.0, 0.0],
            vec![15.0, 20.0, 32.5 * r, 32.5 * r + 10.0, 32.5 * r + 15.0],
        )?,
        entry(
            "discharge-dropped-charge-thinned",
            "competitive: discharges ending in a partial, then two full charges; \
             strategic: drops the partial discharge and thins one charge",
            5,
            vec![f, f, w, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, f, f],
            vec![f, f, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, w, f],
            vec![22.5 * r + 15.0, 22.5 * r + 10.0, 22.5 * r, 10.0, 5.0],
        )?,
        entry(
            "charge-dropped-discharge-thinned",
            "mirror of discharge-dropped-charge-thinned: charges ending in a partial \
             lead, the partial charge is dropped and one discharge thinned",
            5,
            vec![0.0, 0.0, 0.0, f, f],
            vec![f, f, w, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, w, f],
            vec![f, f, 0.0, 0.0, 0.0],
            vec![10.0, 15.0, 20.0, 20.0 * r + 25.0, 20.0 * r + 30.0],
        )?,
        entry(
            "split-charge-topped-up",
            "competitive: a charge split across two equal-price partials; strategic: \
             tops one partial up to full, overpaying next to the one it keeps",
            2,
            vec![f, f, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, w, w, f, 0.0],
            vec![f, f, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, w, f, f, 0.0],
            vec![20.0 * r + 30.0, 20.0 * r + 25.0, 20.0, 20.0, 10.0, 15.0],
        )?,
        entry(
            "split-discharge-topped-up",
            "mirror of split-charge-topped-up: a discharge split across two partials, \
             one topped up to full and undersold next to the one kept",
            2,
            vec![0.0, 0.0, w, w, f, 0.0],
            vec![f, f, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, w, f, f, 0.0],
            vec![f, f, 0.0, 0.0, 0.0, 0.0],
            vec![10.0, 5.0, 20.0, 20.0, 20.0 * r + 30.0, 15.0],
        )?,
        entry(
            "trailing-split-discharge-topped-up",
            "competitive: a full discharge then two equal-price partial discharges; \
             strategic: tops the earlier partial up to full and undersells it",
            2,
            vec![f, 0.0, w, w, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, f, f],
            vec![f, 0.0, f, w, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, f, f],
            vec![20.0 * r + 30.0, 15.0, 20.0 * r + 20.0, 20.0 * r + 20.0, 10.0, 5.0],
        )?,
        entry(
            "cycle-into-flat-prices-partial-charge-last",
            "flat prices idle the competitive unit; the strategic one runs a cycle \
             ending in a partial charge priced above an interval it left idle",
            5,
            vec![0.0; 5],
            vec![0.0; 5],
            vec![f, f, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, f, w],
            vec![22.0; 5],
        )?,
        entry(
            "partial-charge-moved-beside-discharge",
            "strategic unit relocates its partial charge into the period of a full \
             discharge whose own impact has depressed the price",
            2,
            vec![f, 0.0, f, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, w, f, 0.0],
            vec![f, 0.0, f, 0.0, 0.0, 0.0],
            vec![0.0, w, 0.0, 0.0, f, 0.0],
            vec![20.0, 20.0, 20.0 * r + 30.0, 20.0, 10.0, 15.0],
        )?,
        entry(
            "cycle-into-flat-prices-charge-reordered",
            "flat prices idle the competitive unit; the strategic one charges fully \
             before its partial charge, paying more for the full interval",
            5,
            vec![0.0; 5],
            vec![0.0; 5],
            vec![f, f, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, f, w, 0.0],
            vec![22.0; 5],
        )?,
        entry(
            "cycle-into-flat-prices-partial-discharge-first",
            "flat prices idle the competitive unit; the strategic one opens with a \
             partial discharge priced above the full one that follows",
            5,
            vec![w, f, 0.0, 0.0, 0.0],
            vec![0.0; 5],
            vec![w, f, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, f, f],
            vec![22.0; 5],
        )?,
        entry(
            "partial-discharge-delayed-behind-idle",
            "strategic unit delays its partial discharge into a cheaper interval, \
             idling the one the competitive unit would use",
            2,
            vec![f, w, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, f, f],
            vec![f, 0.0, w, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, f, f],
            vec![40.0, 30.0, 20.0, 25.0, 10.0, 5.0],
        )?,
        entry(
            "cycle-into-flat-prices-partial-discharge-before-full",
            "flat prices idle the competitive unit; the strategic one places a \
             partial discharge ahead of a full one at a depressed price",
            5,
            vec![0.0; 5],
            vec![0.0; 5],
            vec![0.0, w, f, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, f, f],
            vec![22.0; 5],
        )?,
    ])
}

#[allow(clippy::too_many_arguments)]
fn build_entry(
    id: &'static str,
    description: &'static str,
    period_length: usize,
    taker_p: Vec<f64>,
    taker_b: Vec<f64>,
    maker_p: Vec<f64>,
    maker_b: Vec<f64>,
    nominal: Vec<f64>,
    spec: &StorageSpec,
    alpha: f64,
) -> Result<CatalogueEntry, MonitorError> {
    let maker_prices: Vec<f64> = nominal
        .iter()
        .enumerate()
        .map(|(t, lam)| lam - alpha * (maker_p[t] - maker_b[t]))
        .collect();
    let taker = build_window(taker_p, taker_b, nominal, spec, period_length)?;
    let maker = build_window(maker_p, maker_b, maker_prices, spec, period_length)?;
    Ok(CatalogueEntry {
        id,
        description,
        taker,
        maker,
    })
}

fn build_window(
    discharge: Vec<f64>,
    charge: Vec<f64>,
    prices: Vec<f64>,
    spec: &StorageSpec,
    period_length: usize,
) -> Result<ObservationWindow, MonitorError> {
    let eta = spec.efficiency;
    // Start at the charge level that keeps the trajectory nonnegative.
    let mut level = 0.0f64;
    let mut lowest = 0.0f64;
    for t in 0..discharge.len() {
        level = level - discharge[t] / eta + charge[t] * eta;
        lowest = lowest.min(level);
    }
    let start = (-lowest).clamp(0.0, spec.energy_cap);
    let wspec = StorageSpec::new(spec.power_cap, spec.energy_cap, eta, start, None)?;
    let profile = DispatchProfile::from_dispatch(discharge, charge, &wspec, 1.0)?;
    let series = PriceSeries::new(prices, PriceKind::Realized, 1.0)?;
    ObservationWindow::new(profile, series, wspec, period_length)
}

/// Audit and window construction failures.
#[derive(Debug, Clone, PartialEq)]
pub enum MonitorError {
    Model(ModelError),
    /// The window's pieces disagree with each other.
    BadWindow { detail: &'static str },
    /// The window does not split into whole periods.
    BadPeriod { len: usize, period_length: usize },
    /// An audit tolerance is unusable.
    BadOption { what: &'static str },
}

impl fmt::Display for MonitorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonitorError::Model(e) => e.fmt(f),
            MonitorError::BadWindow { detail } => write!(f, "invalid observation window: {detail}"),
            MonitorError::BadPeriod { len, period_length } => write!(
                f,
                "window of {len} intervals does not split into periods of {period_length}"
            ),
            MonitorError::BadOption { what } => write!(f, "invalid monitor option: {what}"),
        }
    }
}

impl From<ModelError> for MonitorError {
    fn from(e: ModelError) -> Self {
        MonitorError::Model(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MonitorError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            MonitorError::Model(e) => Some(e),
            _ => None,
        }
    }
}
