//! Shared data model: price and sensitivity series, storage parameters,
//! dispatch profiles, interval classification, and optimality certificates.
//!
//! Conventions used across the crate:
//!
//! * prices are $/MWh, dispatch quantities are MWh per interval, and the
//!   per-interval dispatch bound is `power_cap * interval_hours`;
//! * state of charge is MWh and evolves as
//!   `soc[t] = soc[t-1] - p[t] / eta + b[t] * eta`;
//! * net output `q[t] = p[t] - b[t]` is positive when the unit sells.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Default interval classification tolerance, as a fraction of the
/// per-interval dispatch bound.
pub const DEFAULT_CLASSIFY_TOL_FRAC: f64 = 1e-6;

/// Absolute slack (MWh) allowed when validating profile invariants.
pub const PROFILE_TOL: f64 = 1e-9;

/// What a price sequence represents in the clearing pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceKind {
    /// A forecast the unit takes as given.
    Forecast,
    /// The pre-impact price level a strategic unit bids against.
    Nominal,
    /// The post-clearing outcome after any unit's price impact.
    Realized,
}

impl fmt::Display for PriceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriceKind::Forecast => "forecast",
            PriceKind::Nominal => "nominal",
            PriceKind::Realized => "realized",
        })
    }
}

/// A per-interval price sequence with a fixed interval duration.
///
/// Values may be negative. The kind is fixed at construction; derive a new
/// series to reinterpret the same numbers in another role.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    values: Vec<f64>,
    kind: PriceKind,
    interval_hours: f64,
}

impl PriceSeries {
    /// Validates that all prices are finite, the series is non-empty, and
    /// the interval duration is positive.
    pub fn new(values: Vec<f64>, kind: PriceKind, interval_hours: f64) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptySeries);
        }
        if let Some(t) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                what: format!("price at interval {t}"),
            });
        }
        if !(interval_hours.is_finite() && interval_hours > 0.0) {
            return Err(ModelError::BadValue {
                what: "interval_hours must be finite and positive",
            });
        }
        Ok(Self {
            values,
            kind,
            interval_hours,
        })
    }

    /// Hourly convenience constructor.
    pub fn hourly(values: Vec<f64>, kind: PriceKind) -> Result<Self, ModelError> {
        Self::new(values, kind, 1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> PriceKind {
        self.kind
    }

    pub fn interval_hours(&self) -> f64 {
        self.interval_hours
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same numbers under a different role.
    pub fn rekind(&self, kind: PriceKind) -> PriceSeries {
        PriceSeries {
            values: self.values.clone(),
            kind,
            interval_hours: self.interval_hours,
        }
    }

    /// A contiguous sub-series with the same interval duration and kind.
    pub fn slice(&self, start: usize, end: usize) -> Result<PriceSeries, ModelError> {
        if start >= end || end > self.values.len() {
            return Err(ModelError::BadValue {
                what: "slice bounds out of range",
            });
        }
        Ok(PriceSeries {
            values: self.values[start..end].to_vec(),
            kind: self.kind,
            interval_hours: self.interval_hours,
        })
    }

    /// Largest absolute price, used to scale tolerances and tie-breaks.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Per-interval price sensitivity coefficients ($/MWh per MWh).
///
/// `alpha[t]` is how much the interval-`t` price drops per MWh of extra net
/// output from the unit. All entries are non-negative; zero everywhere means
/// the unit has no price impact.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSeries {
    values: Vec<f64>,
}

impl AlphaSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptySeries);
        }
        if let Some(t) = values
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(ModelError::NonFinite {
                what: format!("alpha at interval {t} must be finite and >= 0"),
            });
        }
        Ok(Self { values })
    }

    /// All-zero sensitivities (a pure price taker) of the given length.
    pub fn zeros(len: usize) -> Result<Self, ModelError> {
        Self::new(alloc::vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Physical parameters of the storage unit.
///
/// `efficiency` is the one-way efficiency applied symmetrically: discharging
/// `p` MWh drains `p / efficiency` from storage, charging `b` MWh stores
/// `b * efficiency`.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageSpec {
    /// Maximum charge or discharge power, MW.
    pub power_cap: f64,
    /// Usable energy capacity, MWh.
    pub energy_cap: f64,
    /// One-way efficiency in (0, 1].
    pub efficiency: f64,
    /// State of charge entering the horizon, MWh.
    pub soc_init: f64,
    /// Optional state of charge required at the end of the horizon, MWh.
    pub soc_terminal: Option<f64>,
}

impl StorageSpec {
    pub fn new(
        power_cap: f64,
        energy_cap: f64,
        efficiency: f64,
        soc_init: f64,
        soc_terminal: Option<f64>,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            power_cap,
            energy_cap,
            efficiency,
            soc_init,
            soc_terminal,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what| Err(ModelError::BadValue { what });
        if !(self.power_cap.is_finite() && self.power_cap > 0.0) {
            return bad("power_cap must be finite and positive");
        }
        if !(self.energy_cap.is_finite() && self.energy_cap > 0.0) {
            return bad("energy_cap must be finite and positive");
        }
        if !(self.efficiency.is_finite() && self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad("efficiency must be in (0, 1]");
        }
        if !(self.soc_init.is_finite() && self.soc_init >= 0.0 && self.soc_init <= self.energy_cap)
        {
            return bad("soc_init must lie in [0, energy_cap]");
        }
        if let Some(v) = self.soc_terminal {
            if !(v.is_finite() && v >= 0.0 && v <= self.energy_cap) {
                return bad("soc_terminal must lie in [0, energy_cap]");
            }
        }
        Ok(())
    }

    /// Per-interval dispatch bound in MWh.
    pub fn interval_cap(&self, interval_hours: f64) -> f64 {
        self.power_cap * interval_hours
    }
}

/// A dispatch plan: per-interval discharge, charge, and the resulting state
/// of charge, all in MWh.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchProfile {
    /// Energy sold per interval (MWh), `>= 0`.
    pub discharge: Vec<f64>,
    /// Energy bought per interval (MWh), `>= 0`.
    pub charge: Vec<f64>,
    /// State of charge after each interval (MWh).
    pub soc: Vec<f64>,
    /// Interval duration backing the MWh quantities.
    pub interval_hours: f64,
}

impl DispatchProfile {
    /// Builds a profile from raw dispatch vectors, deriving the state of
    /// charge from the spec's initial level and efficiency.
    pub fn from_dispatch(
        discharge: Vec<f64>,
        charge: Vec<f64>,
        spec: &StorageSpec,
        interval_hours: f64,
    ) -> Result<Self, ModelError> {
        if discharge.len() != charge.len() || discharge.is_empty() {
            return Err(ModelError::LengthMismatch {
                what: "discharge and charge vectors",
            });
        }
        let eta = spec.efficiency;
        let mut soc = Vec::with_capacity(discharge.len());
        let mut level = spec.soc_init;
        for t in 0..discharge.len() {
            level = level - discharge[t] / eta + charge[t] * eta;
            soc.push(level);
        }
        Ok(Self {
            discharge,
            charge,
            soc,
            interval_hours,
        })
    }

    pub fn len(&self) -> usize {
        self.discharge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discharge.is_empty()
    }

    /// Net market output `discharge - charge` at interval `t`, MWh.
    pub fn net_output(&self, t: usize) -> f64 {
        self.discharge[t] - self.charge[t]
    }

    /// Net output for every interval.
    pub fn net_outputs(&self) -> Vec<f64> {
        (0..self.len()).map(|t| self.net_output(t)).collect()
    }

    /// Total traded energy, the tie-break objective between equal-profit
    /// plans.
    pub fn throughput(&self) -> f64 {
        let mut s = 0.0;
        for t in 0..self.len() {
            s += self.discharge[t] + self.charge[t];
        }
        s
    }

    /// True when every interval is (numerically) idle.
    pub fn is_idle(&self, tol: f64) -> bool {
        (0..self.len()).all(|t| self.discharge[t] <= tol && self.charge[t] <= tol)
    }
}

/// How an interval's dispatch relates to the unit's capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalClass {
    /// Discharging at the per-interval bound.
    DischargeFull,
    /// Discharging strictly between zero and the bound.
    DischargeWithhold,
    /// Charging at the per-interval bound.
    ChargeFull,
    /// Charging strictly between zero and the bound.
    ChargeWithhold,
    /// No dispatch either way.
    Idle,
}

impl IntervalClass {
    /// True for the two partial-dispatch classes.
    pub fn is_withholding(self) -> bool {
        matches!(
            self,
            IntervalClass::DischargeWithhold | IntervalClass::ChargeWithhold
        )
    }
}

impl fmt::Display for IntervalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntervalClass::DischargeFull => "discharge-full",
            IntervalClass::DischargeWithhold => "discharge-withhold",
            IntervalClass::ChargeFull => "charge-full",
            IntervalClass::ChargeWithhold => "charge-withhold",
            IntervalClass::Idle => "idle",
        })
    }
}

/// Classifies every interval of a profile against the dispatch bound.
///
/// `tol` is an absolute MWh tolerance; pass
/// `DEFAULT_CLASSIFY_TOL_FRAC * spec.interval_cap(h)` for the default.
/// Values within `tol` of zero count as idle and values within `tol` of the
/// bound count as full, so the classification is total on valid profiles.
///
/// Fails if any interval both discharges and charges beyond `tol`: such a
/// profile has no meaningful capacity reading.
pub fn classify_intervals(
    profile: &DispatchProfile,
    spec: &StorageSpec,
    tol: f64,
) -> Result<Vec<IntervalClass>, ModelError> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(ModelError::BadValue {
            what: "classification tolerance must be finite and >= 0",
        });
    }
    let cap = spec.interval_cap(profile.interval_hours);
    let mut out = Vec::with_capacity(profile.len());
    for t in 0..profile.len() {
        let p = profile.discharge[t];
        let b = profile.charge[t];
        if p > tol && b > tol {
            return Err(ModelError::SimultaneousDispatch { interval: t });
        }
        let class = if p > tol {
            if p >= cap - tol {
                IntervalClass::DischargeFull
            } else {
                IntervalClass::DischargeWithhold
            }
        } else if b > tol {
            if b >= cap - tol {
                IntervalClass::ChargeFull
            } else {
                IntervalClass::ChargeWithhold
            }
        } else {
            IntervalClass::Idle
        };
        out.push(class);
    }
    Ok(out)
}

/// A specific way a profile breaks its invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileViolation {
    /// Discharge or charge outside `[0, power_cap * interval_hours]`.
    PowerBound(usize),
    /// Discharge and charge simultaneously positive.
    SimultaneousDispatch(usize),
    /// Stored state of charge disagrees with the dynamics recursion.
    SocDynamics(usize),
    /// State of charge below zero.
    SocLowerBound(usize),
    /// State of charge above the energy capacity.
    SocUpperBound(usize),
    /// A non-finite entry.
    NonFinite(usize),
}

impl fmt::Display for ProfileViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileViolation::PowerBound(t) => write!(f, "dispatch bound violated at interval {t}"),
            ProfileViolation::SimultaneousDispatch(t) => {
                write!(f, "simultaneous charge and discharge at interval {t}")
            }
            ProfileViolation::SocDynamics(t) => {
                write!(f, "state of charge inconsistent with dynamics at interval {t}")
            }
            ProfileViolation::SocLowerBound(t) => {
                write!(f, "state of charge below zero at interval {t}")
            }
            ProfileViolation::SocUpperBound(t) => {
                write!(f, "state of charge above capacity at interval {t}")
            }
            ProfileViolation::NonFinite(t) => write!(f, "non-finite value at interval {t}"),
        }
    }
}

/// Checks every profile invariant and returns all violations found.
///
/// The list is empty exactly when the profile is valid for `spec` within
/// absolute tolerance [`PROFILE_TOL`] on energy quantities (the simultaneity
/// check uses `PROFILE_TOL * power_cap`).
pub fn validate_profile(profile: &DispatchProfile, spec: &StorageSpec) -> Vec<ProfileViolation> {
    let mut out = Vec::new();
    let n = profile.len();
    if profile.charge.len() != n || profile.soc.len() != n {
        out.push(ProfileViolation::NonFinite(0));
        return out;
    }
    let cap = spec.interval_cap(profile.interval_hours);
    let eta = spec.efficiency;
    let sim_tol = PROFILE_TOL * spec.power_cap;
    let mut level = spec.soc_init;
    for t in 0..n {
        let p = profile.discharge[t];
        let b = profile.charge[t];
        let e = profile.soc[t];
        if !(p.is_finite() && b.is_finite() && e.is_finite()) {
            out.push(ProfileViolation::NonFinite(t));
            continue;
        }
        if p < -PROFILE_TOL || p > cap + PROFILE_TOL || b < -PROFILE_TOL || b > cap + PROFILE_TOL {
            out.push(ProfileViolation::PowerBound(t));
        }
        if p > sim_tol && b > sim_tol {
            out.push(ProfileViolation::SimultaneousDispatch(t));
        }
        level = level - p / eta + b * eta;
        if (e - level).abs() > PROFILE_TOL * (1.0 + level.abs()) {
            out.push(ProfileViolation::SocDynamics(t));
        }
        if e < -PROFILE_TOL {
            out.push(ProfileViolation::SocLowerBound(t));
        }
        if e > spec.energy_cap + PROFILE_TOL {
            out.push(ProfileViolation::SocUpperBound(t));
        }
    }
    out
}

/// First-order optimality certificate for a schedule.
///
/// One multiplier per energy-balance row (`theta`, $/MWh of stored energy)
/// plus the four per-interval bound multipliers: `delta_*` for the discharge
/// bounds and `beta_*` for the charge bounds (`minus` = lower, `plus` =
/// upper). Residuals are max-norms recomputed from the solved program, not
/// accumulated by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    pub theta: Vec<f64>,
    pub delta_minus: Vec<f64>,
    pub delta_plus: Vec<f64>,
    pub beta_minus: Vec<f64>,
    pub beta_plus: Vec<f64>,
    pub stationarity_residual: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity_residual: f64,
}

impl KktCertificate {
    /// True when every residual is within `tol`.
    pub fn is_certified(&self, tol: f64) -> bool {
        self.stationarity_residual <= tol
            && self.primal_residual <= tol
            && self.dual_residual <= tol
            && self.complementarity_residual <= tol
    }
}

/// Validation and consistency errors for the data model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    EmptySeries,
    NonFinite { what: String },
    BadValue { what: &'static str },
    LengthMismatch { what: &'static str },
    SimultaneousDispatch { interval: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::EmptySeries => f.write_str("series must be non-empty"),
            ModelError::NonFinite { what } => write!(f, "{what} is not finite"),
            ModelError::BadValue { what } => f.write_str(what),
            ModelError::LengthMismatch { what } => write!(f, "{what} must have matching lengths"),
            ModelError::SimultaneousDispatch { interval } => {
                write!(f, "simultaneous charge and discharge at interval {interval}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec() -> StorageSpec {
        StorageSpec::new(2.5, 10.0, 0.9, 5.0, None).unwrap()
    }

    #[test]
    fn price_series_rejects_non_finite() {
        let err = PriceSeries::hourly(vec![1.0, f64::NAN], PriceKind::Forecast).unwrap_err();
        assert!(matches!(err, ModelError::NonFinite { .. }));
    }

    #[test]
    fn alpha_series_rejects_negative() {
        assert!(AlphaSeries::new(vec![0.5, -0.1]).is_err());
        assert!(AlphaSeries::zeros(3).unwrap().is_zero());
    }

    #[test]
    fn spec_validation_bounds() {
        assert!(StorageSpec::new(2.5, 10.0, 1.1, 5.0, None).is_err());
        assert!(StorageSpec::new(2.5, 10.0, 0.9, 11.0, None).is_err());
        assert!(StorageSpec::new(2.5, 10.0, 0.9, 5.0, Some(-1.0)).is_err());
    }

    #[test]
    fn classify_full_withhold_idle() {
        let s = spec();
        let profile =
            DispatchProfile::from_dispatch(vec![2.5, 0.0, 0.0], vec![0.0, 1.0, 0.0], &s, 1.0)
                .unwrap();
        let tol = DEFAULT_CLASSIFY_TOL_FRAC * s.interval_cap(1.0);
        let classes = classify_intervals(&profile, &s, tol).unwrap();
        assert_eq!(
            classes,
            vec![
                IntervalClass::DischargeFull,
                IntervalClass::ChargeWithhold,
                IntervalClass::Idle
            ]
        );
    }

    #[test]
    fn classify_partial_discharge_and_full_charge() {
        let s = spec();
        let profile =
            DispatchProfile::from_dispatch(vec![2.025, 0.0], vec![0.0, 2.5], &s, 1.0).unwrap();
        let tol = DEFAULT_CLASSIFY_TOL_FRAC * s.interval_cap(1.0);
        let classes = classify_intervals(&profile, &s, tol).unwrap();
        assert_eq!(
            classes,
            vec![IntervalClass::DischargeWithhold, IntervalClass::ChargeFull]
        );
    }

    #[test]
    fn classify_rejects_simultaneous_dispatch() {
        let s = spec();
        let profile = DispatchProfile::from_dispatch(vec![1.0], vec![1.0], &s, 1.0).unwrap();
        let tol = DEFAULT_CLASSIFY_TOL_FRAC * s.interval_cap(1.0);
        assert!(matches!(
            classify_intervals(&profile, &s, tol),
            Err(ModelError::SimultaneousDispatch { interval: 0 })
        ));
    }

    #[test]
    fn validate_flags_power_bound() {
        let s = spec();
        let profile = DispatchProfile::from_dispatch(vec![3.0], vec![0.0], &s, 1.0).unwrap();
        let violations = validate_profile(&profile, &s);
        assert!(violations.contains(&ProfileViolation::PowerBound(0)));
    }

    #[test]
    fn validate_flags_soc_overflow() {
        let s = spec();
        // Charging 2.5 MWh for four hours from 5 MWh exceeds the 10 MWh cap.
        let profile = DispatchProfile::from_dispatch(
            vec![0.0; 4],
            vec![2.5; 4],
            &s,
            1.0,
        )
        .unwrap();
        let violations = validate_profile(&profile, &s);
        assert!(violations
            .iter()
            .any(|v| matches!(v, ProfileViolation::SocUpperBound(_))));
    }

    #[test]
    fn validate_accepts_consistent_profile() {
        let s = spec();
        let profile =
            DispatchProfile::from_dispatch(vec![2.025, 0.0], vec![0.0, 2.5], &s, 1.0).unwrap();
        assert!(validate_profile(&profile, &s).is_empty());
        // Round trip: soc returns to its start when discharge = eta^2 * charge.
        assert!((profile.soc[1] - s.soc_init).abs() < 1e-12);
    }

    #[test]
    fn validate_flags_tampered_soc() {
        let s = spec();
        let mut profile =
            DispatchProfile::from_dispatch(vec![1.0, 0.0], vec![0.0, 1.0], &s, 1.0).unwrap();
        profile.soc[0] += 0.5;
        let violations = validate_profile(&profile, &s);
        assert!(violations.contains(&ProfileViolation::SocDynamics(0)));
    }
}
