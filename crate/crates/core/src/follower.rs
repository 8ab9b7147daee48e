//! The exterior manufacturer's stage-3 sourcing decision: region
//! classification of the leader's `(p_i, w)` offer and the optimal
//! response price in each region.

use serde::Serialize;

use crate::demand::{demand, PricePair};
use crate::scenario::{baselines, Baselines, ScenarioParams};

/// Tolerance on the region inequality systems. Equilibrium candidates sit
/// exactly on the binding indifference curves, so exact comparisons would
/// reject them through rounding alone.
pub(crate) const REGION_EPS: f64 = 1e-9;

/// Feasible-response regions: `R1`-`R3` for `theta < 1`, `R4`-`R6` for
/// `theta > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RegionId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
}

impl std::fmt::Display for RegionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcingChoice {
    SwitchToS,
    StayWithIncumbent,
}

/// The exterior manufacturer's best response to a posted `(p_i, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FollowerDecision {
    pub source: SourcingChoice,
    pub region: Option<RegionId>,
    #[serde(rename = "p_e")]
    pub p_e_star: f64,
    pub profit: f64,
}

/// Does `(p_i, w)` satisfy `region`'s full inequality system (including
/// the participation constraint against the stay-put profit)?
pub(crate) fn region_contains(
    region: RegionId,
    p_i: f64,
    w: f64,
    p: &ScenarioParams,
    base: &Baselines,
) -> bool {
    let theta = p.theta;
    let m_e = p.m_e;
    let a_hat = base.a_hat;
    let pi0 = base.pi_e0;
    let e = REGION_EPS;
    let le = |a: f64, b: f64| a <= b + e;
    match region {
        RegionId::R1 => {
            theta < 1.0
                && le(w, 2.0 * p_i - 2.0 + theta - m_e)
                && le(w, p_i - m_e)
                && le(w, theta - m_e - 2.0 * (theta * pi0 / a_hat).sqrt())
        }
        RegionId::R2 => {
            theta < 1.0
                && le((2.0 - theta) * p_i - 2.0 + 2.0 * theta - m_e, w)
                && le(w, p_i - m_e)
                && le(
                    w,
                    theta * p_i - m_e - 2.0 * (theta * (1.0 - theta) * pi0 / a_hat).sqrt(),
                )
        }
        RegionId::R3 => {
            theta < 1.0
                && le(2.0 * p_i - 2.0 + theta - m_e, w)
                && le(w, (2.0 - theta) * p_i - 2.0 + 2.0 * theta - m_e)
                && le(w, p_i - m_e)
                && a_hat * (1.0 - p_i) / theta * (p_i - 1.0 + theta - w - m_e) >= pi0 - e
        }
        RegionId::R4 => {
            theta > 1.0
                && w < 2.0 * theta * p_i - theta - m_e + e
                && le(w, p_i - m_e)
                && le(w, theta - m_e - 2.0 * (theta * pi0 / a_hat).sqrt())
        }
        RegionId::R5 => {
            theta > 1.0
                && le((2.0 * theta - 1.0) * p_i - theta + 1.0 - m_e, w)
                && le(w, p_i - m_e)
                && le(
                    w,
                    p_i - m_e + theta - 1.0 - 2.0 * ((theta - 1.0) * pi0 / a_hat).sqrt(),
                )
        }
        RegionId::R6 => {
            theta > 1.0
                && le(2.0 * theta * p_i - theta - m_e, w)
                && le(w, (2.0 * theta - 1.0) * p_i - theta + 1.0 - m_e)
                && le(w, p_i - m_e)
                && a_hat * (1.0 - p_i) * (theta * p_i - w - m_e) >= pi0 - e
        }
    }
}

/// Regions applicable to the scenario's perceived-value regime, in
/// increasing index order.
fn regime_regions(theta: f64) -> [RegionId; 3] {
    if theta < 1.0 {
        [RegionId::R1, RegionId::R2, RegionId::R3]
    } else {
        [RegionId::R4, RegionId::R5, RegionId::R6]
    }
}

/// The unique region whose inequality system holds at `(p_i, w)`, or
/// `None` if switching is never weakly profitable there. Points on shared
/// boundaries report the lowest-numbered region.
pub fn classify_region(p_i: f64, w: f64, p: &ScenarioParams) -> Option<RegionId> {
    let base = baselines(p);
    classify_region_with(p_i, w, p, &base)
}

pub(crate) fn classify_region_with(
    p_i: f64,
    w: f64,
    p: &ScenarioParams,
    base: &Baselines,
) -> Option<RegionId> {
    regime_regions(p.theta)
        .into_iter()
        .find(|&r| region_contains(r, p_i, w, p, base))
}

/// Region-wise optimal response price of the exterior manufacturer.
pub(crate) fn region_price(region: RegionId, p_i: f64, w: f64, p: &ScenarioParams) -> f64 {
    let theta = p.theta;
    let m_e = p.m_e;
    match region {
        RegionId::R1 | RegionId::R4 => (theta + w + m_e) / 2.0,
        RegionId::R2 => (theta * p_i + w + m_e) / 2.0,
        RegionId::R3 => p_i - 1.0 + theta,
        RegionId::R5 => (theta - 1.0 + p_i + w + m_e) / 2.0,
        RegionId::R6 => theta * p_i,
    }
}

/// The exterior manufacturer's full stage-3 decision: switch to the
/// opened supply (with the region's optimal price) when that is weakly
/// more profitable than staying with the incumbent supplier.
pub fn follower_best_response(p_i: f64, w: f64, p: &ScenarioParams) -> FollowerDecision {
    let base = baselines(p);
    follower_best_response_with(p_i, w, p, &base)
}

pub(crate) fn follower_best_response_with(
    p_i: f64,
    w: f64,
    p: &ScenarioParams,
    base: &Baselines,
) -> FollowerDecision {
    if let Some(region) = classify_region_with(p_i, w, p, base) {
        let p_e = region_price(region, p_i, w, p).max(0.0);
        let d = demand(PricePair::new(p_i, p_e).expect("region prices are nonnegative"), p);
        FollowerDecision {
            source: SourcingChoice::SwitchToS,
            region: Some(region),
            p_e_star: p_e,
            profit: d.q_e * (p_e - w - p.m_e),
        }
    } else {
        FollowerDecision {
            source: SourcingChoice::StayWithIncumbent,
            region: None,
            p_e_star: base.p_e0,
            profit: base.pi_e0,
        }
    }
}

/// Exactly the regions declared nonempty for these parameters.
pub fn nonempty_regions(p: &ScenarioParams) -> Vec<RegionId> {
    let base = baselines(p);
    let theta = p.theta;
    let m_e = p.m_e;
    let a_hat = base.a_hat;
    let pi0 = base.pi_e0;
    let entry = base.a_hat_entry_min;
    if a_hat < entry {
        return Vec::new();
    }
    if theta < 1.0 {
        let t_r2 = theta * (2.0 - theta).powi(2) * pi0 / ((1.0 - theta) * (theta - m_e).powi(2));
        if a_hat >= t_r2 {
            vec![RegionId::R1, RegionId::R2, RegionId::R3]
        } else {
            vec![RegionId::R1, RegionId::R3]
        }
    } else {
        let t_r5 =
            (2.0 * theta - 1.0).powi(2) * pi0 / ((theta - 1.0) * (theta - m_e).powi(2));
        let m_mid = theta / (2.0 * theta - 1.0);
        if m_e > m_mid {
            vec![RegionId::R4]
        } else if m_e <= 0.5 && a_hat >= t_r5 {
            vec![RegionId::R4, RegionId::R5, RegionId::R6]
        } else {
            vec![RegionId::R4, RegionId::R6]
        }
    }
}
