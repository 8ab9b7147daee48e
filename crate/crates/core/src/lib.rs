//! Solver for a three-stage component-supply pricing game: a vertically
//! integrated manufacturer decides whether to open its component to an
//! outside brand, prices the component and its own end product, and the
//! outside manufacturer responds with a sourcing choice and retail price.
//!
//! Module layout follows the game stages: [`scenario`] holds parameters
//! and no-game baselines, [`demand`] the consumer choice model,
//! [`follower`] the stage-3 response, [`leader`] the stage-2 pricing
//! equilibrium, [`strategy`] the stage-1 open/close decision and zone
//! sweeps, and [`oracle`] the independent brute-force certification of
//! all of the above.

pub mod demand;
pub mod follower;
pub mod leader;
pub mod oracle;
pub mod scenario;
pub mod strategy;

pub use demand::{consumer_choice, demand, ConsumerChoice, DemandBundle, PricePair};
pub use follower::{
    classify_region, follower_best_response, nonempty_regions, FollowerDecision, RegionId,
    SourcingChoice,
};
pub use leader::{
    equilibrium, leader_profit, region_optimum, threshold_a0, threshold_a1, LeaderDecision,
    LeaderError, ThresholdOutcome,
};
pub use oracle::{
    brute_force_follower, brute_force_leader, integrate_demand, verify_scenario, GridSpec,
    OracleError, ToleranceSpec, VerificationReport,
};
pub use scenario::{baselines, validate_params, Baselines, ParamError, ScenarioParams};
pub use strategy::{pareto_sweep, stage1_decide, write_csv, AxisSpec, StrategyOutcome, ZoneMap};

/// Render a number rounded to nine significant digits using the shortest
/// representation that round-trips; keeps emitted files identical across
/// runs without trailing-digit noise.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(8 - magnitude);
    format!("{}", (x * scale).round() / scale)
}

#[cfg(test)]
mod test_util {
    use crate::scenario::ScenarioParams;

    /// The recurring worked scenario; only `theta` varies between the
    /// two regime examples.
    pub fn default_scenario(theta: f64) -> ScenarioParams {
        ScenarioParams {
            theta,
            a: 0.3,
            gamma1: 0.4,
            gamma2: 0.5,
            m_i: 0.1,
            m_e: 0.1,
            w0: 0.05,
            k: 0.0,
        }
    }
}
