//! Single-interval affine supply bids and market clearing.
//!
//! A unit with quadratic cost `C(q) = c2 q^2 + c1 q` sells `q(lambda) =
//! a * lambda + b` under the profit-maximal affine bid. A price taker bids
//! its marginal cost; a unit whose output moves the price by `alpha` per MWh
//! shades its bid, which steepens the inverse curve and withholds quantity
//! at every price above marginal cost. [`equivalent_withholding`] measures
//! that gap at the strategic clearing price.

use crate::model::ModelError;
use alloc::string::String;
use core::fmt;

/// Convex quadratic production cost `C(q) = c2 q^2 + c1 q` with `c2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    pub c2: f64,
    pub c1: f64,
}

impl QuadraticCost {
    pub fn new(c2: f64, c1: f64) -> Result<Self, BidError> {
        if !(c2.is_finite() && c2 > 0.0) {
            return Err(BidError::BadParameter("c2 must be finite and positive"));
        }
        if !c1.is_finite() {
            return Err(BidError::BadParameter("c1 must be finite"));
        }
        Ok(Self { c2, c1 })
    }

    /// Marginal cost at output `q`.
    pub fn marginal(&self, q: f64) -> f64 {
        self.c1 + 2.0 * self.c2 * q
    }

    pub fn cost(&self, q: f64) -> f64 {
        self.c2 * q * q + self.c1 * q
    }
}

/// Affine supply bid `q(lambda) = slope * lambda + intercept`, valid over
/// `lambda >= 0` with output clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidCurve {
    pub slope: f64,
    pub intercept: f64,
}

impl BidCurve {
    pub fn new(slope: f64, intercept: f64) -> Result<Self, BidError> {
        if !(slope.is_finite() && slope >= 0.0) {
            return Err(BidError::BadParameter("bid slope must be finite and >= 0"));
        }
        if !intercept.is_finite() {
            return Err(BidError::BadParameter("bid intercept must be finite"));
        }
        Ok(Self { slope, intercept })
    }

    /// Offered quantity at price `lambda`, clamped at zero.
    pub fn quantity_at(&self, lambda: f64) -> f64 {
        (self.slope * lambda + self.intercept).max(0.0)
    }
}

/// Everything the unit clears against: an aggregate affine supply curve and
/// an inelastic demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestOfSystem {
    pub slope: f64,
    pub intercept: f64,
    pub demand: f64,
}

impl RestOfSystem {
    pub fn new(slope: f64, intercept: f64, demand: f64) -> Result<Self, BidError> {
        if !(slope.is_finite() && slope > 0.0) {
            return Err(BidError::BadParameter(
                "rest-of-system slope must be finite and positive",
            ));
        }
        if !intercept.is_finite() {
            return Err(BidError::BadParameter(
                "rest-of-system intercept must be finite",
            ));
        }
        if !(demand.is_finite() && demand >= 0.0) {
            return Err(BidError::BadParameter("demand must be finite and >= 0"));
        }
        Ok(Self {
            slope,
            intercept,
            demand,
        })
    }

    pub fn quantity_at(&self, lambda: f64) -> f64 {
        (self.slope * lambda + self.intercept).max(0.0)
    }
}

/// Result of clearing one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingOutcome {
    /// Market clearing price, $/MWh.
    pub price: f64,
    /// Quantity supplied by the unit, MWh.
    pub unit_quantity: f64,
    /// Quantity supplied by the rest of the system, MWh.
    pub rest_quantity: f64,
}

/// Price seen after the unit's net output moves the market:
/// `nominal - alpha * net_output`.
pub fn influenced_price(nominal: f64, alpha: f64, net_output: f64) -> Result<f64, BidError> {
    if !nominal.is_finite() || !net_output.is_finite() {
        return Err(BidError::BadParameter("price inputs must be finite"));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(BidError::BadParameter("alpha must be finite and >= 0"));
    }
    Ok(nominal - alpha * net_output)
}

/// Profit-maximal bid for a unit that takes the price as given: bid the
/// marginal cost, so `q = (lambda - c1) / (2 c2)`.
pub fn optimal_bid_taker(cost: &QuadraticCost) -> BidCurve {
    BidCurve {
        slope: 1.0 / (2.0 * cost.c2),
        intercept: -cost.c1 / (2.0 * cost.c2),
    }
}

/// Profit-maximal bid for a unit whose output lowers the realized price by
/// `alpha` per MWh. Expressed against the realized price the curve is
/// `q = (lambda - c1) / (alpha + 2 c2)`: same zero-output price as the
/// taker bid, strictly flatter whenever `alpha > 0`.
pub fn optimal_bid_maker(cost: &QuadraticCost, alpha: f64) -> Result<BidCurve, BidError> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(BidError::BadParameter("alpha must be finite and >= 0"));
    }
    let denom = alpha + 2.0 * cost.c2;
    Ok(BidCurve {
        slope: 1.0 / denom,
        intercept: -cost.c1 / denom,
    })
}

/// Clears one interval: finds `lambda* >= 0` where offered supply meets
/// demand, honouring the zero clamps on both curves.
///
/// Fails when demand cannot be met at a non-negative price, i.e. when the
/// zero-price offers already exceed demand.
pub fn clear_single_interval(
    unit: &BidCurve,
    rest: &RestOfSystem,
) -> Result<ClearingOutcome, BidError> {
    let supply_at = |lambda: f64| unit.quantity_at(lambda) + rest.quantity_at(lambda);
    if supply_at(0.0) > rest.demand {
        return Err(BidError::InfeasibleMarket {
            detail: String::from("zero-price supply already exceeds demand"),
        });
    }
    // Supply is piecewise linear and non-decreasing in lambda with at most
    // two kinks (where each curve leaves its zero clamp). Scan the segments
    // in order and solve the one that brackets demand.
    let mut knots = [0.0_f64; 3];
    let mut k = 1;
    if unit.slope > 0.0 && unit.intercept < 0.0 {
        knots[k] = -unit.intercept / unit.slope;
        k += 1;
    }
    if rest.intercept < 0.0 {
        knots[k] = -rest.intercept / rest.slope;
        k += 1;
    }
    knots[..k].sort_by(|a, b| a.total_cmp(b));
    for i in 0..k {
        let lo = knots[i];
        let hi = if i + 1 < k { knots[i + 1] } else { f64::INFINITY };
        // Active slopes and intercepts on this segment.
        let mut slope = 0.0;
        let mut icept = 0.0;
        let probe = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
        if unit.slope * probe + unit.intercept > 0.0 {
            slope += unit.slope;
            icept += unit.intercept;
        }
        if rest.slope * probe + rest.intercept > 0.0 {
            slope += rest.slope;
            icept += rest.intercept;
        }
        if slope == 0.0 {
            // Fully clamped segment supplies nothing; demand == 0 clears at
            // the segment start.
            if rest.demand <= 0.0 {
                return Ok(ClearingOutcome {
                    price: lo,
                    unit_quantity: 0.0,
                    rest_quantity: 0.0,
                });
            }
            continue;
        }
        let lambda = (rest.demand - icept) / slope;
        if lambda >= lo - 1e-12 && lambda <= hi {
            let lambda = lambda.max(lo);
            let unit_quantity = unit.quantity_at(lambda);
            return Ok(ClearingOutcome {
                price: lambda,
                unit_quantity,
                rest_quantity: rest.demand - unit_quantity,
            });
        }
    }
    // Unreachable for valid inputs: supply grows without bound.
    Err(BidError::InfeasibleMarket {
        detail: String::from("no clearing price found"),
    })
}

/// Quantity the strategic bid withholds relative to the price-taking bid,
/// both evaluated at the strategic clearing price.
pub fn equivalent_withholding(
    taker: &BidCurve,
    maker: &BidCurve,
    rest: &RestOfSystem,
) -> Result<f64, BidError> {
    let outcome = clear_single_interval(maker, rest)?;
    Ok(taker.quantity_at(outcome.price) - maker.quantity_at(outcome.price))
}

/// Errors from bid construction and clearing.
#[derive(Debug, Clone, PartialEq)]
pub enum BidError {
    BadParameter(&'static str),
    InfeasibleMarket { detail: String },
}

impl fmt::Display for BidError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BidError::BadParameter(what) => f.write_str(what),
            BidError::InfeasibleMarket { detail } => write!(f, "market cannot clear: {detail}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BidError {}

impl From<BidError> for ModelError {
    fn from(_: BidError) -> Self {
        ModelError::BadValue {
            what: "invalid bid parameters",
        }
    }
}
