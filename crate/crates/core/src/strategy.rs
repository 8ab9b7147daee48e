//! Stage-1 supply decision, leader role classification, and the
//! Pareto-zone sweep over the original market share and the spillover
//! intensity.

use std::io;

use rayon::prelude::*;
use serde::Serialize;

use crate::demand::{demand, PricePair};
use crate::follower::{follower_best_response, RegionId};
use crate::leader::{equilibrium, LeaderDecision, LeaderError};
use crate::scenario::{baselines, ScenarioParams};
use crate::sig9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ProductManufacturer,
    ComponentManufacturer,
    DualManufacturer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyReason {
    BelowEntryThreshold,
    OpenDominated,
    OpenWeaklyBetter,
}

/// Stage-1 outcome: whether to open component supply, and what kind of
/// manufacturer the integrated firm ends up being.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub role: Role,
    /// Equilibrium open-supply profit net of the opening investment;
    /// absent when no open equilibrium exists.
    pub profit_open: Option<f64>,
    pub profit_closed: f64,
    pub decision: Option<LeaderDecision>,
    pub reason: StrategyReason,
}

/// Decide whether the supplier opens its component to the outside
/// manufacturer. Ties in the profit comparison open supply.
pub fn stage1_decide(p: &ScenarioParams) -> StrategyOutcome {
    let base = baselines(p);
    let profit_closed = base.pi_i0;
    match equilibrium(p) {
        Err(LeaderError::BelowEntryThreshold { .. }) => StrategyOutcome {
            strategy: Strategy::Closed,
            role: Role::ProductManufacturer,
            profit_open: None,
            profit_closed,
            decision: None,
            reason: StrategyReason::BelowEntryThreshold,
        },
        Err(e) => unreachable!("equilibrium failed on valid parameters: {e}"),
        Ok(dec) => {
            let profit_open = dec.profit2 - p.k;
            if profit_open >= profit_closed {
                let role = if open_interior_demand(&dec, p) > 1e-12 {
                    Role::DualManufacturer
                } else {
                    Role::ComponentManufacturer
                };
                StrategyOutcome {
                    strategy: Strategy::Open,
                    role,
                    profit_open: Some(profit_open),
                    profit_closed,
                    decision: Some(dec),
                    reason: StrategyReason::OpenWeaklyBetter,
                }
            } else {
                StrategyOutcome {
                    strategy: Strategy::Closed,
                    role: Role::ProductManufacturer,
                    profit_open: Some(profit_open),
                    profit_closed,
                    decision: Some(dec),
                    reason: StrategyReason::OpenDominated,
                }
            }
        }
    }
}

fn open_interior_demand(dec: &LeaderDecision, p: &ScenarioParams) -> f64 {
    let resp = follower_best_response(dec.p_i_star, dec.w_star, p);
    demand(
        PricePair::new(dec.p_i_star, resp.p_e_star).expect("equilibrium prices are nonnegative"),
        p,
    )
    .q_i
}

/// One swept axis: `steps` evenly spaced values from `min` to `max`
/// inclusive (a single value when `steps == 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        assert!(self.steps >= 1 && self.min <= self.max);
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneCell {
    pub a: f64,
    pub gamma1: f64,
    pub a_hat: f64,
    pub p_e: Option<f64>,
    pub outcome: StrategyOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneMap {
    /// The non-swept parameters; `a` and `gamma1` hold the sweep origin
    /// and are overridden per cell.
    pub fixed: ScenarioParams,
    pub a_axis: AxisSpec,
    pub gamma1_axis: AxisSpec,
    /// Row-major over (a, gamma1); cells with `gamma1 > 1 - gamma2` are
    /// outside the spillover budget and omitted.
    pub cells: Vec<ZoneCell>,
}

/// Sweep the stage-1 decision over the (A, gamma1) lattice. Cells are
/// independent and evaluated in parallel; output order is by A row, then
/// gamma1 column.
pub fn pareto_sweep(fixed: &ScenarioParams, a_axis: AxisSpec, gamma1_axis: AxisSpec) -> ZoneMap {
    let a_values = a_axis.values();
    let g_values = gamma1_axis.values();
    let mut coords: Vec<(f64, f64)> = Vec::new();
    for &a in &a_values {
        for &g in &g_values {
            if g <= 1.0 - fixed.gamma2 + 1e-12 {
                coords.push((a, g));
            }
        }
    }
    let cells = coords
        .into_par_iter()
        .map(|(a, gamma1)| {
            let mut p = *fixed;
            p.a = a;
            p.gamma1 = gamma1;
            let outcome = stage1_decide(&p);
            let p_e = outcome
                .decision
                .as_ref()
                .filter(|_| outcome.strategy == Strategy::Open)
                .map(|d| follower_best_response(d.p_i_star, d.w_star, &p).p_e_star);
            ZoneCell {
                a,
                gamma1,
                a_hat: baselines(&p).a_hat,
                p_e,
                outcome,
            }
        })
        .collect();
    ZoneMap {
        fixed: *fixed,
        a_axis,
        gamma1_axis,
        cells,
    }
}

fn strategy_str(s: Strategy) -> &'static str {
    match s {
        Strategy::Open => "open",
        Strategy::Closed => "closed",
    }
}

fn role_str(r: Role) -> &'static str {
    match r {
        Role::ProductManufacturer => "product_manufacturer",
        Role::ComponentManufacturer => "component_manufacturer",
        Role::DualManufacturer => "dual_manufacturer",
    }
}

fn region_str(r: RegionId) -> &'static str {
    match r {
        RegionId::R1 => "R1",
        RegionId::R2 => "R2",
        RegionId::R3 => "R3",
        RegionId::R4 => "R4",
        RegionId::R5 => "R5",
        RegionId::R6 => "R6",
    }
}

/// CSV emission; open-only columns stay empty on closed cells so the
/// file diff-compares cleanly across runs and thread counts.
pub fn write_csv<W: io::Write>(zm: &ZoneMap, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "A,gamma1,A_hat,strategy,role,region,case,p_i,w,p_e,profit_open,profit_closed"
    )?;
    for cell in &zm.cells {
        let o = &cell.outcome;
        let (region, case, p_i, w, p_e, profit_open) = if o.strategy == Strategy::Open {
            let d = o.decision.as_ref().expect("open cells carry a decision");
            (
                region_str(d.region).to_string(),
                d.case_label.clone(),
                sig9(d.p_i_star),
                sig9(d.w_star),
                cell.p_e.map(sig9).unwrap_or_default(),
                o.profit_open.map(sig9).unwrap_or_default(),
            )
        } else {
            Default::default()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            sig9(cell.a),
            sig9(cell.gamma1),
            sig9(cell.a_hat),
            strategy_str(o.strategy),
            role_str(o.role),
            region,
            case,
            p_i,
            w,
            p_e,
            profit_open,
            sig9(o.profit_closed),
        )?;
    }
    Ok(())
}
