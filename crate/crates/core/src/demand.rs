//! Consumer choice rule and the piecewise-linear demand functions for
//! both perceived-value regimes.

use serde::Serialize;
use thiserror::Error;

use crate::scenario::{common_market_share, ScenarioParams};

/// A candidate price pair. Negative prices are rejected here rather than
/// extrapolating the linear demand formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricePair {
    p_i: f64,
    p_e: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PriceError {
    #[error("price must be finite and nonnegative, got p_i = {0}, p_e = {1}")]
    Invalid(f64, f64),
}

impl PricePair {
    pub fn new(p_i: f64, p_e: f64) -> Result<Self, PriceError> {
        if p_i.is_finite() && p_e.is_finite() && p_i >= 0.0 && p_e >= 0.0 {
            Ok(PricePair { p_i, p_e })
        } else {
            Err(PriceError::Invalid(p_i, p_e))
        }
    }

    pub fn p_i(&self) -> f64 {
        self.p_i
    }

    pub fn p_e(&self) -> f64 {
        self.p_e
    }
}

/// What a single customer with perceived value `v` does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConsumerChoice {
    BuyInterior,
    BuyExterior,
    BuyNeither,
}

/// Realized demand quantities at a price pair. `q_s` is the component
/// demand of the supplier and equals `q_i + q_e` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemandBundle {
    pub q_i: f64,
    pub q_e: f64,
    pub q_s: f64,
}

impl DemandBundle {
    pub fn new(q_i: f64, q_e: f64) -> Self {
        DemandBundle {
            q_i,
            q_e,
            q_s: q_i + q_e,
        }
    }
}

/// Surplus-maximizing feasible choice of a customer with perceived value
/// `v` for the interior product and `theta * v` for the exterior one.
/// Exact indifference between the two products resolves to the interior
/// brand.
pub fn consumer_choice(v: f64, prices: PricePair, theta: f64) -> ConsumerChoice {
    let s_i = v - prices.p_i;
    let s_e = theta * v - prices.p_e;
    match (s_i >= 0.0, s_e >= 0.0) {
        (true, true) => {
            if s_i >= s_e {
                ConsumerChoice::BuyInterior
            } else {
                ConsumerChoice::BuyExterior
            }
        }
        (true, false) => ConsumerChoice::BuyInterior,
        (false, true) => ConsumerChoice::BuyExterior,
        (false, false) => ConsumerChoice::BuyNeither,
    }
}

/// Piecewise demand quantities at `prices`, scaled by the common market
/// share. Dispatches on the perceived-value regime.
pub fn demand(prices: PricePair, p: &ScenarioParams) -> DemandBundle {
    let a_hat = common_market_share(p);
    demand_with(p.theta, a_hat, prices)
}

/// Same as [`demand`] with the regime inputs passed explicitly; used by
/// tests that sweep `a_hat` directly.
pub fn demand_with(theta: f64, a_hat: f64, prices: PricePair) -> DemandBundle {
    let (q_i, q_e) = if theta < 1.0 {
        quantities_lt1(theta, prices.p_i, prices.p_e)
    } else {
        quantities_gt1(theta, prices.p_i, prices.p_e)
    };
    DemandBundle::new(a_hat * q_i, a_hat * q_e)
}

/// Unscaled quantities for `theta < 1`. Branch selection follows the
/// printed weak/strict inequality pattern; the clamps only bind where a
/// price exceeds every perceived value, so branch values stay continuous.
fn quantities_lt1(theta: f64, p_i: f64, p_e: f64) -> (f64, f64) {
    if p_i >= 1.0 - theta + p_e {
        // Interior priced out; exterior serves the whole common market.
        (0.0, (1.0 - p_e / theta).max(0.0))
    } else if p_i >= p_e / theta {
        // Shared market, indifferent customer interior to [0, 1].
        (
            1.0 - (p_i - p_e) / (1.0 - theta),
            (theta * p_i - p_e) / (theta * (1.0 - theta)),
        )
    } else {
        // Exterior priced out.
        ((1.0 - p_i).max(0.0), 0.0)
    }
}

/// Unscaled quantities for `theta > 1`; the exterior brand now wins the
/// high-valuation customers.
fn quantities_gt1(theta: f64, p_i: f64, p_e: f64) -> (f64, f64) {
    if p_i > p_e / theta {
        (0.0, (1.0 - p_e / theta).max(0.0))
    } else if p_i > p_e - theta + 1.0 {
        (
            (p_e - theta * p_i) / (theta - 1.0),
            1.0 - (p_e - p_i) / (theta - 1.0),
        )
    } else {
        ((1.0 - p_i).max(0.0), 0.0)
    }
}
