//! Stage-2 pricing of the vertically integrated manufacturer: region-wise
//! closed-form optima, the threshold roots that split the decision
//! tables, and the global equilibrium tree with an enumeration safety
//! net.

use serde::Serialize;
use thiserror::Error;

use crate::demand::{demand, PricePair};
use crate::follower::{
    follower_best_response_with, nonempty_regions, region_contains, RegionId, SourcingChoice,
};
use crate::scenario::{baselines, Baselines, ScenarioParams};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LeaderError {
    /// The follower stays with its incumbent at this price pair; the
    /// open-supply objective is undefined there.
    #[error("follower is not attracted at (p_i = {p_i}, w = {w})")]
    NoEntry { p_i: f64, w: f64 },
    /// No open-supply equilibrium exists at all for these parameters.
    #[error("common market share {a_hat} is below the entry threshold {threshold}")]
    BelowEntryThreshold { a_hat: f64, threshold: f64 },
    #[error("region {0} is empty for these parameters")]
    EmptyRegion(RegionId),
    /// Threshold-root bracket is degenerate (bounds cross or a divisor
    /// vanishes).
    #[error("threshold bracket [{lo}, {hi}] is empty or degenerate")]
    EmptyBracket { lo: f64, hi: f64 },
}

/// One lemma-case candidate for the stage-2 optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderCandidate {
    pub region: RegionId,
    pub label: String,
    pub p_i: f64,
    pub w: f64,
    pub profit: f64,
    /// Flat-profit candidates where any `p_i` keeping the point inside
    /// the region yields the same profit.
    pub p_i_arbitrary: bool,
    pub p_i_interval: Option<(f64, f64)>,
}

/// The stage-2 equilibrium decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderDecision {
    #[serde(rename = "p_i")]
    pub p_i_star: f64,
    #[serde(rename = "w")]
    pub w_star: f64,
    #[serde(rename = "case")]
    pub case_label: String,
    pub region: RegionId,
    #[serde(rename = "profit")]
    pub profit2: f64,
    pub p_i_interval: Option<(f64, f64)>,
    /// Set when the decision-table pick was beaten by another feasible
    /// candidate and the enumeration maximum was returned instead.
    #[serde(skip)]
    pub tree_mismatch: bool,
}

/// Outcome of a table-note threshold definition: either the root of the
/// candidate-profit difference, or no root with a statement of which
/// candidate dominates over the whole bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThresholdOutcome {
    Root(f64),
    NoRoot { dominant: RegionId },
}

/// Open-supply stage-2 profit `(p_i - m_i) Q_i + w Q_e` evaluated at the
/// follower's best response. The internal component transfer nets out at
/// zero production cost and is not priced at `w`.
pub fn leader_profit(p_i: f64, w: f64, p: &ScenarioParams) -> Result<f64, LeaderError> {
    let base = baselines(p);
    leader_profit_with(p_i, w, p, &base)
}

pub(crate) fn leader_profit_with(
    p_i: f64,
    w: f64,
    p: &ScenarioParams,
    base: &Baselines,
) -> Result<f64, LeaderError> {
    let resp = follower_best_response_with(p_i, w, p, base);
    if resp.source == SourcingChoice::StayWithIncumbent {
        return Err(LeaderError::NoEntry { p_i, w });
    }
    let d = demand(
        PricePair::new(p_i, resp.p_e_star).expect("response prices are nonnegative"),
        p,
    );
    Ok((p_i - p.m_i) * d.q_i + w * d.q_e)
}

// --- closed-form candidates, one constructor per lemma case ------------

struct Ctx {
    theta: f64,
    m_i: f64,
    m_e: f64,
    a_hat: f64,
    pi0: f64,
}

impl Ctx {
    fn new(p: &ScenarioParams, base: &Baselines) -> Self {
        Ctx {
            theta: p.theta,
            m_i: p.m_i,
            m_e: p.m_e,
            a_hat: base.a_hat,
            pi0: base.pi_e0,
        }
    }

    /// Component-only profit in the monopoly regions R1/R4.
    fn whole_market_component_profit(&self, w: f64) -> f64 {
        w * self.a_hat * (self.theta - w - self.m_e) / (2.0 * self.theta)
    }

    /// Eq-style shared-market profit, `theta < 1` (region R2).
    fn r2_profit(&self, p_i: f64, w: f64) -> f64 {
        let t = self.theta;
        self.a_hat * (p_i - self.m_i)
            * (1.0 - ((2.0 - t) * p_i - w - self.m_e) / (2.0 * (1.0 - t)))
            + w * self.a_hat * (t * p_i - w - self.m_e) / (2.0 * t * (1.0 - t))
    }

    /// Shared-market profit, `theta > 1` (region R5).
    fn r5_profit(&self, p_i: f64, w: f64) -> f64 {
        let t = self.theta;
        self.a_hat * (p_i - self.m_i)
            * (0.5 - ((2.0 * t - 1.0) * p_i - w - self.m_e) / (2.0 * (t - 1.0)))
            + w * self.a_hat * (0.5 - (w + self.m_e - p_i) / (2.0 * (t - 1.0)))
    }

    /// Kink-price component profit, `theta < 1` (region R3).
    fn r3_profit(&self, p_i: f64, w: f64) -> f64 {
        w * self.a_hat * (1.0 - p_i) / self.theta
    }

    /// Kink-price component profit, `theta > 1` (region R6).
    fn r6_profit(&self, p_i: f64, w: f64) -> f64 {
        w * self.a_hat * (1.0 - p_i)
    }
}

/// Canonical sale price reported for the flat-profit regions R1/R4; own
/// demand is zero there regardless, so the highest perceived value is as
/// good a representative as any.
const PLATEAU_CANONICAL_PI: f64 = 1.0;

fn plateau_interval(region: RegionId, w: f64, c: &Ctx) -> (f64, f64) {
    let lo = match region {
        RegionId::R1 => ((w + 2.0 - c.theta + c.m_e) / 2.0).max(w + c.m_e),
        RegionId::R4 => ((w + c.theta + c.m_e) / (2.0 * c.theta)).max(w + c.m_e),
        _ => unreachable!("plateau regions are R1/R4 only"),
    };
    (lo.max(0.0), PLATEAU_CANONICAL_PI)
}

fn plateau_candidate(region: RegionId, label: &str, w: f64, c: &Ctx) -> LeaderCandidate {
    // No-arbitrage caps the wholesale price at p_i - m_e; the component
    // profit is concave in w, so when the unconstrained optimum exceeds
    // the cap (theta > 2 - m_e) the capped value is the true optimum at
    // the canonical price.
    let w = w.min(PLATEAU_CANONICAL_PI - c.m_e);
    LeaderCandidate {
        region,
        label: label.to_string(),
        p_i: PLATEAU_CANONICAL_PI,
        w,
        profit: c.whole_market_component_profit(w),
        p_i_arbitrary: true,
        p_i_interval: Some(plateau_interval(region, w, c)),
    }
}

fn point_candidate(
    region: RegionId,
    label: &str,
    p_i: f64,
    w: f64,
    profit: f64,
) -> LeaderCandidate {
    LeaderCandidate {
        region,
        label: label.to_string(),
        p_i,
        w,
        profit,
        p_i_arbitrary: false,
        p_i_interval: None,
    }
}

fn lemma1_case1(c: &Ctx) -> LeaderCandidate {
    plateau_candidate(RegionId::R1, "Lemma1-case1", (c.theta - c.m_e) / 2.0, c)
}

fn lemma1_case2(c: &Ctx) -> LeaderCandidate {
    let w = c.theta - c.m_e - 2.0 * (c.theta * c.pi0 / c.a_hat).sqrt();
    plateau_candidate(RegionId::R1, "Lemma1-case2", w, c)
}

fn lemma2_case1(c: &Ctx) -> LeaderCandidate {
    let p_i = (4.0 - 3.0 * c.theta + c.m_e) / (2.0 * (2.0 - c.theta));
    let w = (c.theta - c.m_e) / 2.0;
    point_candidate(RegionId::R3, "Lemma2-case1", p_i, w, c.r3_profit(p_i, w))
}

fn lemma2_case2(c: &Ctx) -> LeaderCandidate {
    let s = (c.theta * c.pi0 / (c.a_hat * (1.0 - c.theta))).sqrt();
    let p_i = 1.0 - s;
    let w = c.theta - c.m_e - (2.0 - c.theta) * s;
    point_candidate(RegionId::R3, "Lemma2-case2", p_i, w, c.r3_profit(p_i, w))
}

fn lemma2_case3(c: &Ctx) -> LeaderCandidate {
    let p_i = (2.0 - c.theta + c.m_e) / 2.0;
    let w = (c.theta - c.m_e) / 2.0 - 2.0 * c.theta * c.pi0 / (c.a_hat * (c.theta - c.m_e));
    point_candidate(RegionId::R3, "Lemma2-case3", p_i, w, c.r3_profit(p_i, w))
}

fn lemma3_case1(c: &Ctx) -> LeaderCandidate {
    let p_i = (1.0 + c.m_i) / 2.0;
    let w = (c.theta - c.m_e) / 2.0;
    point_candidate(RegionId::R2, "Lemma3-case1", p_i, w, c.r2_profit(p_i, w))
}

fn lemma3_case3(c: &Ctx) -> LeaderCandidate {
    let p_i = (1.0 + c.m_i) / 2.0;
    let w = c.theta * (1.0 + c.m_i) / 2.0
        - c.m_e
        - 2.0 * (c.theta * (1.0 - c.theta) * c.pi0 / c.a_hat).sqrt();
    point_candidate(RegionId::R2, "Lemma3-case3", p_i, w, c.r2_profit(p_i, w))
}

fn lemma4_case1(c: &Ctx) -> LeaderCandidate {
    plateau_candidate(RegionId::R4, "Lemma4-case1", (c.theta - c.m_e) / 2.0, c)
}

fn lemma4_case2(c: &Ctx) -> LeaderCandidate {
    let w = c.theta - c.m_e - 2.0 * (c.theta * c.pi0 / c.a_hat).sqrt();
    plateau_candidate(RegionId::R4, "Lemma4-case2", w, c)
}

fn lemma5_case1(c: &Ctx) -> LeaderCandidate {
    let p_i = c.theta / (2.0 * c.theta - 1.0);
    let w = p_i - c.m_e;
    point_candidate(RegionId::R6, "Lemma5-case1", p_i, w, c.r6_profit(p_i, w))
}

fn lemma5_case2(c: &Ctx) -> LeaderCandidate {
    let p_i = (1.0 + c.m_e) / 2.0;
    let w = (1.0 - c.m_e) / 2.0;
    point_candidate(RegionId::R6, "Lemma5-case2", p_i, w, c.r6_profit(p_i, w))
}

fn lemma5_case3(c: &Ctx) -> LeaderCandidate {
    let root = (1.0 - 4.0 * c.pi0 / (c.a_hat * (c.theta - 1.0))).max(0.0).sqrt();
    let p_i = 0.5 * (1.0 + root);
    let w = p_i - c.m_e;
    point_candidate(RegionId::R6, "Lemma5-case3", p_i, w, c.r6_profit(p_i, w))
}

fn lemma5_case4(c: &Ctx) -> LeaderCandidate {
    let p_i = (c.theta + c.m_e) / (2.0 * c.theta);
    let w = (c.theta - c.m_e) / 2.0 - 2.0 * c.theta * c.pi0 / (c.a_hat * (c.theta - c.m_e));
    point_candidate(RegionId::R6, "Lemma5-case4", p_i, w, c.r6_profit(p_i, w))
}

fn lemma6_case1(c: &Ctx) -> LeaderCandidate {
    point_candidate(
        RegionId::R5,
        "Lemma6-case1",
        0.5,
        0.5 - c.m_e,
        c.r5_profit(0.5, 0.5 - c.m_e),
    )
}

fn lemma6_case2(c: &Ctx) -> LeaderCandidate {
    // Printed with a (1 - theta) radicand; the stated optimum is the
    // l2/l5 intersection, which carries (theta - 1).
    let s = (c.pi0 / (c.a_hat * (c.theta - 1.0))).sqrt();
    let p_i = 1.0 - s;
    let w = c.theta - c.m_e - (2.0 * c.theta - 1.0) * s;
    point_candidate(RegionId::R5, "Lemma6-case2", p_i, w, c.r5_profit(p_i, w))
}

/// Constrained optimum of the shared-market objective on the `w = 0`
/// boundary. When `theta m_i < m_e` the stationary wholesale price of the
/// boundary solution is negative; with free components the leader still
/// earns product profit, and its maximum is the concave 1-D optimum in
/// `p_i` clamped to the prices that keep the follower participating
/// inside the region. The lemma cases never cover this corner.
fn r2_zero_wholesale(c: &Ctx) -> Option<LeaderCandidate> {
    let t = c.theta;
    let s = (t * (1.0 - t) * c.pi0 / c.a_hat).sqrt();
    let lo = ((c.m_e + 2.0 * s) / t).max(c.m_e);
    let hi = (2.0 - 2.0 * t + c.m_e) / (2.0 - t);
    if lo > hi {
        return None;
    }
    let stationary = (2.0 * (1.0 - t) + c.m_e + (2.0 - t) * c.m_i) / (2.0 * (2.0 - t));
    let p_i = stationary.clamp(lo, hi);
    Some(point_candidate(
        RegionId::R2,
        "R2-zero-wholesale",
        p_i,
        0.0,
        c.r2_profit(p_i, 0.0),
    ))
}

/// `theta > 1` analogue of [`r2_zero_wholesale`] for region R5.
fn r5_zero_wholesale(c: &Ctx) -> Option<LeaderCandidate> {
    let t = c.theta;
    let s = ((t - 1.0) * c.pi0 / c.a_hat).sqrt();
    let lo = (1.0 - t + c.m_e + 2.0 * s).max(c.m_e);
    let hi = (t - 1.0 + c.m_e) / (2.0 * t - 1.0);
    if lo > hi {
        return None;
    }
    let stationary = (t - 1.0 + c.m_e + (2.0 * t - 1.0) * c.m_i) / (2.0 * (2.0 * t - 1.0));
    let p_i = stationary.clamp(lo, hi);
    Some(point_candidate(
        RegionId::R5,
        "R5-zero-wholesale",
        p_i,
        0.0,
        c.r5_profit(p_i, 0.0),
    ))
}

// --- region-wise optima -------------------------------------------------

/// Every lemma case whose market-share and cost conditions hold for
/// `region`, instantiated with its closed form. Candidates whose formula
/// yields a negative wholesale price, or whose point fails the region's
/// own inequality system, are dropped.
pub fn region_optimum(
    region: RegionId,
    p: &ScenarioParams,
) -> Result<Vec<LeaderCandidate>, LeaderError> {
    let base = baselines(p);
    if !nonempty_regions(p).contains(&region) {
        return Err(LeaderError::EmptyRegion(region));
    }
    Ok(region_candidates(region, p, &base))
}

fn region_candidates(region: RegionId, p: &ScenarioParams, base: &Baselines) -> Vec<LeaderCandidate> {
    let c = Ctx::new(p, base);
    let t = c.theta;
    let m_e = c.m_e;
    let a = c.a_hat;
    let pi0 = c.pi0;
    let entry = base.a_hat_entry_min;
    let mut out: Vec<LeaderCandidate> = Vec::new();
    match region {
        RegionId::R1 => {
            let t16 = 16.0 * t * pi0 / (t - m_e).powi(2);
            if a >= t16 {
                out.push(lemma1_case1(&c));
            } else if a >= entry {
                out.push(lemma1_case2(&c));
            }
        }
        RegionId::R3 => {
            let scale = 4.0 * t * pi0 / (t - m_e).powi(2);
            let hi1 = (2.0 - t).powi(2) / (1.0 - t) * scale;
            let hi2 = scale / (1.0 - t);
            if a >= hi1 {
                out.push(lemma2_case1(&c));
            }
            if a >= hi2 && a < hi1 {
                out.push(lemma2_case2(&c));
            }
            if a >= scale && a < hi2 {
                out.push(lemma2_case3(&c));
            }
        }
        RegionId::R2 => {
            // The interior stationary point charges the follower margin
            // (theta m_i - m_e)/2; when that is nonpositive the point
            // violates participation for every market share, so the
            // boundary solution takes over unconditionally.
            let diff = t * c.m_i - m_e;
            let t1 = if diff <= 0.0 {
                f64::INFINITY
            } else {
                16.0 * t * (1.0 - t) * pi0 / diff.powi(2)
            };
            let t2 = 4.0 * t * pi0 / ((1.0 - c.m_i).powi(2) * (1.0 - t));
            let t4 = 4.0 * t * (2.0 - t).powi(2) * pi0 / ((1.0 - t) * (t - m_e).powi(2));
            let cost_slack = 1.0 - c.m_i >= (t - m_e) / (2.0 - t);
            if a >= t1 && cost_slack {
                out.push(lemma3_case1(&c));
            }
            if a >= t4 && !cost_slack {
                let mut cand = lemma2_case1(&c);
                cand.label = "Lemma3-case2".into();
                cand.region = RegionId::R2;
                out.push(cand);
            }
            if a >= t2 && a < t1 {
                out.push(lemma3_case3(&c));
            }
            if a < t2.min(t4) {
                let mut cand = lemma2_case2(&c);
                cand.label = "Lemma3-case4".into();
                cand.region = RegionId::R2;
                out.push(cand);
            }
            out.extend(r2_zero_wholesale(&c));
        }
        RegionId::R4 => {
            let t16 = 16.0 * t * pi0 / (t - m_e).powi(2);
            if a >= t16 {
                out.push(lemma4_case1(&c));
            } else if a >= entry {
                out.push(lemma4_case2(&c));
            }
        }
        RegionId::R6 => {
            let d1 = (2.0 * t - 1.0).powi(2) * pi0 / (t * (t - 1.0).powi(2));
            let d2 = 4.0 * pi0 / ((t - 1.0) * (1.0 - m_e * m_e));
            let d3 = 4.0 * t * t * pi0 / ((t - 1.0) * (t * t - m_e * m_e));
            let m_lo = 1.0 / (2.0 * t - 1.0);
            let m_hi = t / (2.0 * t - 1.0);
            if a > d1 && m_e > m_lo && m_e <= m_hi {
                out.push(lemma5_case1(&c));
            }
            if a > d2 && m_e <= m_lo {
                out.push(lemma5_case2(&c));
            }
            if a > d3 && a <= d2 {
                out.push(lemma5_case3(&c));
            }
            if a >= entry && a <= d3 {
                out.push(lemma5_case4(&c));
            }
        }
        RegionId::R5 => {
            let d_hi = 4.0 * pi0 / (t - 1.0);
            let d_lo = (2.0 * t - 1.0).powi(2) * pi0 / ((t - 1.0) * (t - m_e).powi(2));
            if a > d_hi && m_e <= 0.5 {
                out.push(lemma6_case1(&c));
            }
            if a >= d_lo && a <= d_hi {
                out.push(lemma6_case2(&c));
            }
            out.extend(r5_zero_wholesale(&c));
        }
    }
    // Interior-solution guard: each closed form is an assumption until the
    // point verifiably sits in its region with a nonnegative wholesale
    // price.
    out.retain(|cand| cand.w >= 0.0 && region_contains(cand.region, cand.p_i, cand.w, p, base));
    out
}

// --- threshold roots ----------------------------------------------------

fn bisect_threshold(
    lo: f64,
    hi: f64,
    diff: impl Fn(f64) -> f64,
    dominant_when_positive: RegionId,
    dominant_when_negative: RegionId,
) -> Result<ThresholdOutcome, LeaderError> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(LeaderError::EmptyBracket { lo, hi });
    }
    // The profit difference need not be monotone; scan for the leftmost
    // sign change before bisecting.
    const SCAN: usize = 200;
    let mut prev_x = lo;
    let mut prev_f = diff(lo);
    let mut bracket = None;
    for i in 1..=SCAN {
        let x = lo + (hi - lo) * i as f64 / SCAN as f64;
        let f = diff(x);
        if prev_f == 0.0 {
            return Ok(ThresholdOutcome::Root(prev_x));
        }
        if prev_f.signum() != f.signum() {
            bracket = Some((prev_x, x, prev_f));
            break;
        }
        prev_x = x;
        prev_f = f;
    }
    let Some((mut a, mut b, fa)) = bracket else {
        let dominant = if diff(0.5 * (lo + hi)) > 0.0 {
            dominant_when_positive
        } else {
            dominant_when_negative
        };
        return Ok(ThresholdOutcome::NoRoot { dominant });
    };
    let mut fa = fa;
    while b - a > 1e-10 {
        let mid = 0.5 * (a + b);
        let fm = diff(mid);
        if fm == 0.0 {
            return Ok(ThresholdOutcome::Root(mid));
        }
        if fa.signum() == fm.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(ThresholdOutcome::Root(0.5 * (a + b)))
}

/// Market-share root where the R3 and R2 shared-boundary candidates of
/// decision case i.1.2 tie (`theta < 1`).
pub fn threshold_a0(p: &ScenarioParams) -> Result<ThresholdOutcome, LeaderError> {
    assert!(p.theta < 1.0, "threshold_a0 requires theta < 1");
    let base = baselines(p);
    let t = p.theta;
    let m_e = p.m_e;
    let pi0 = base.pi_e0;
    let diff = t * p.m_i - m_e;
    if diff <= 0.0 {
        // No interior R2 optimum exists at any market share; callers
        // fall back to comparing the boundary candidates directly.
        return Err(LeaderError::EmptyBracket {
            lo: f64::NAN,
            hi: f64::INFINITY,
        });
    }
    let lo = 4.0 * t * pi0 / ((1.0 - p.m_i).powi(2) * (1.0 - t));
    let hi = 16.0 * t * (1.0 - t) * pi0 / diff.powi(2);
    let profit_gap = |a_hat: f64| {
        let mut b = base;
        b.a_hat = a_hat;
        let c = Ctx::new(p, &b);
        lemma2_case3(&c).profit - lemma3_case3(&c).profit
    };
    bisect_threshold(lo, hi, profit_gap, RegionId::R3, RegionId::R2)
}

/// Market-share root where the R6 and R4 candidates of decision case
/// i.2.2 tie (`theta > 1`).
pub fn threshold_a1(p: &ScenarioParams) -> Result<ThresholdOutcome, LeaderError> {
    assert!(p.theta > 1.0, "threshold_a1 requires theta > 1");
    let base = baselines(p);
    let t = p.theta;
    let m_e = p.m_e;
    let pi0 = base.pi_e0;
    if m_e >= 1.0 {
        return Err(LeaderError::EmptyBracket {
            lo: f64::NAN,
            hi: f64::NAN,
        });
    }
    let lo = (4.0 * pi0 / ((t - 1.0) * (1.0 - m_e * m_e)))
        .max(4.0 * t * pi0 / (t - m_e).powi(2));
    let hi = 16.0 * t * pi0 / (t - m_e).powi(2);
    let profit_gap = |a_hat: f64| {
        let mut b = base;
        b.a_hat = a_hat;
        let c = Ctx::new(p, &b);
        lemma5_case2(&c).profit - lemma4_case2(&c).profit
    };
    bisect_threshold(lo, hi, profit_gap, RegionId::R6, RegionId::R4)
}

// --- equilibrium tree ---------------------------------------------------

fn tree_pick_lt1(p: &ScenarioParams, base: &Baselines) -> (String, LeaderCandidate) {
    let c = Ctx::new(p, base);
    let t = c.theta;
    let m_e = c.m_e;
    let a = c.a_hat;
    let pi0 = c.pi0;
    let t_r2 = t * (2.0 - t).powi(2) * pi0 / ((1.0 - t) * (t - m_e).powi(2));
    if a < t_r2 {
        return ("ii".into(), lemma2_case3(&c));
    }
    if 1.0 - c.m_i >= (t - m_e) / (2.0 - t) {
        let diff = t * c.m_i - m_e;
        let t1 = if diff <= 0.0 {
            f64::INFINITY
        } else {
            16.0 * t * (1.0 - t) * pi0 / diff.powi(2)
        };
        let t2 = 4.0 * t * pi0 / ((1.0 - c.m_i).powi(2) * (1.0 - t));
        let t3u = 4.0 * t * pi0 / ((1.0 - t) * (t - m_e).powi(2));
        if a >= t1 {
            ("i.1.1".into(), lemma3_case1(&c))
        } else if a >= t2 {
            let r3_wins = match threshold_a0(p) {
                Ok(ThresholdOutcome::Root(a0)) => a < a0,
                Ok(ThresholdOutcome::NoRoot { dominant }) => dominant == RegionId::R3,
                // Degenerate bracket: fall back to a direct comparison.
                Err(_) => lemma2_case3(&c).profit > lemma3_case3(&c).profit,
            };
            if r3_wins {
                ("i.1.2.2".into(), lemma2_case3(&c))
            } else {
                ("i.1.2.1".into(), lemma3_case3(&c))
            }
        } else if a > t3u {
            ("i.1.3".into(), lemma2_case2(&c))
        } else {
            ("i.1.4".into(), lemma2_case3(&c))
        }
    } else {
        let t4 = 4.0 * t * (2.0 - t).powi(2) * pi0 / ((1.0 - t) * (t - m_e).powi(2));
        let t3u = 4.0 * t * pi0 / ((1.0 - t) * (t - m_e).powi(2));
        if a >= t4 {
            ("i.2.1".into(), lemma2_case1(&c))
        } else if a > t3u {
            ("i.2.2".into(), lemma2_case2(&c))
        } else {
            ("i.2.3".into(), lemma2_case3(&c))
        }
    }
}

fn tree_pick_gt1(p: &ScenarioParams, base: &Baselines) -> (String, LeaderCandidate) {
    let c = Ctx::new(p, base);
    let t = c.theta;
    let m_e = c.m_e;
    let a = c.a_hat;
    let pi0 = c.pi0;
    let t16 = 16.0 * t * pi0 / (t - m_e).powi(2);
    let m_lo = 1.0 / (2.0 * t - 1.0);
    let m_hi = t / (2.0 * t - 1.0);
    if m_e > m_hi {
        return if a >= t16 {
            ("ii.1".into(), lemma4_case1(&c))
        } else {
            ("ii.2".into(), lemma4_case2(&c))
        };
    }
    let r5_like = (2.0 * t - 1.0).powi(2) * pi0 / (t * (t - 1.0).powi(2));
    let d2 = 4.0 * pi0 / ((t - 1.0) * (1.0 - m_e * m_e));
    let d3 = 4.0 * t * t * pi0 / ((t - 1.0) * (t * t - m_e * m_e));
    if m_e > m_lo && a > r5_like {
        if a >= t16 {
            ("i.1.1".into(), lemma4_case1(&c))
        } else {
            ("i.1.2".into(), lemma4_case2(&c))
        }
    } else if m_e <= m_lo && a > d2 {
        if a >= t16 {
            ("i.2.1".into(), lemma4_case1(&c))
        } else {
            let r4_wins = match threshold_a1(p) {
                Ok(ThresholdOutcome::Root(a1)) => a >= a1,
                Ok(ThresholdOutcome::NoRoot { dominant }) => dominant == RegionId::R4,
                Err(_) => lemma4_case2(&c).profit >= lemma5_case2(&c).profit,
            };
            if r4_wins {
                ("i.2.2.1".into(), lemma4_case2(&c))
            } else {
                ("i.2.2.2".into(), lemma5_case2(&c))
            }
        }
    } else if a > d3 {
        ("i.3".into(), lemma5_case3(&c))
    } else {
        ("i.4".into(), lemma5_case4(&c))
    }
}

/// Stage-2 equilibrium `(p_i*, w*)`: walk the regime's decision table
/// top-down, then cross-check the pick against every feasible closed-form
/// candidate; the enumeration maximum wins on disagreement.
pub fn equilibrium(p: &ScenarioParams) -> Result<LeaderDecision, LeaderError> {
    let base = baselines(p);
    if base.a_hat < base.a_hat_entry_min {
        return Err(LeaderError::BelowEntryThreshold {
            a_hat: base.a_hat,
            threshold: base.a_hat_entry_min,
        });
    }

    let (case_label, pick) = if p.theta < 1.0 {
        tree_pick_lt1(p, &base)
    } else {
        tree_pick_gt1(p, &base)
    };

    let mut candidates: Vec<LeaderCandidate> = Vec::new();
    for region in nonempty_regions(p) {
        candidates.extend(region_candidates(region, p, &base));
    }
    let best = candidates
        .iter()
        .cloned()
        .max_by(|a, b| a.profit.total_cmp(&b.profit));

    let pick_feasible =
        pick.w >= 0.0 && region_contains(pick.region, pick.p_i, pick.w, p, &base);
    let (chosen, label, mismatch) = match best {
        Some(best) if !pick_feasible || best.profit > pick.profit + 1e-9 => {
            let label = format!("enumeration:{}", best.label);
            (best, label, true)
        }
        _ => (pick, case_label, false),
    };

    Ok(LeaderDecision {
        p_i_star: chosen.p_i,
        w_star: chosen.w,
        case_label: label,
        region: chosen.region,
        profit2: chosen.profit,
        p_i_interval: chosen.p_i_interval,
        tree_mismatch: mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::default_scenario;

    #[test]
    fn leader_profit_worked_examples() {
        let p = default_scenario(0.8);
        let w = 0.35 - 2.0 * 0.8 * 0.06321875 / (0.58 * 0.7);
        let profit = leader_profit(0.65, w, &p).unwrap();
        assert!((profit - 0.02559375).abs() < 1e-9);

        let q = default_scenario(1.25);
        let w = 0.575 - 2.5 * 0.06321875 / (0.58 * 1.15);
        let profit = leader_profit(0.54, w, &q).unwrap();
        assert!((profit - 0.09019125).abs() < 1e-7);
    }

    #[test]
    fn leader_profit_zero_at_free_components() {
        let p = default_scenario(0.8);
        // w = 0 classifies into a whole-market region where Q_i = 0.
        let profit = leader_profit(0.65, 0.0, &p).unwrap();
        assert!(profit.abs() < 1e-15);
    }

    #[test]
    fn leader_profit_no_entry() {
        let mut p = default_scenario(0.8);
        p.gamma1 = 0.1; // below entry threshold
        assert!(matches!(
            leader_profit(0.65, 0.1, &p),
            Err(LeaderError::NoEntry { .. })
        ));
    }

    #[test]
    fn region_optimum_r3_small_pi0() {
        let mut p = default_scenario(0.8);
        p.gamma2 = 0.2; // pi0 = 0.0252875
        let cands = region_optimum(RegionId::R3, &p).unwrap();
        assert_eq!(cands.len(), 1);
        let c = &cands[0];
        assert_eq!(c.label, "Lemma2-case3");
        assert!((c.p_i - 0.65).abs() < 1e-12);
        assert!((c.w - 0.2503448275862069).abs() < 1e-9);
        assert!((c.profit - 0.063525).abs() < 1e-6);
    }

    #[test]
    fn region_optimum_r2_small_pi0() {
        let mut p = default_scenario(0.8);
        p.gamma2 = 0.2;
        let cands = region_optimum(RegionId::R2, &p).unwrap();
        let c = cands
            .iter()
            .find(|c| c.label == "Lemma3-case3")
            .expect("boundary candidate present");
        assert!((c.p_i - 0.55).abs() < 1e-12);
        assert!((c.w - 0.1729566).abs() < 1e-6);
        assert!((c.profit - 0.060820).abs() < 1e-6);
        // The w = 0 corner is dominated here but must price consistently.
        for corner in cands.iter().filter(|c| c.label == "R2-zero-wholesale") {
            assert_eq!(corner.w, 0.0);
            assert!(corner.profit <= c.profit + 1e-12);
        }
    }

    #[test]
    fn region_optimum_r6_default() {
        let p = default_scenario(1.25);
        let cands = region_optimum(RegionId::R6, &p).unwrap();
        assert_eq!(cands.len(), 1);
        let c = &cands[0];
        assert_eq!(c.label, "Lemma5-case4");
        assert!((c.p_i - 0.54).abs() < 1e-12);
        assert!((c.w - 0.33804816341829085).abs() < 1e-9);
        assert!((c.profit - 0.090191).abs() < 1e-6);
    }

    #[test]
    fn region_optimum_empty_region() {
        let p = default_scenario(0.8); // R2 empty at a_hat = 0.58
        assert!(matches!(
            region_optimum(RegionId::R2, &p),
            Err(LeaderError::EmptyRegion(RegionId::R2))
        ));
    }

    #[test]
    fn equilibrium_worked_lt1() {
        let p = default_scenario(0.8);
        let eq = equilibrium(&p).unwrap();
        assert_eq!(eq.case_label, "ii");
        assert_eq!(eq.region, RegionId::R3);
        assert!((eq.p_i_star - 0.65).abs() < 1e-6);
        assert!((eq.w_star - 0.100862).abs() < 1e-6);
        assert!((eq.profit2 - 0.025594).abs() < 1e-6);
        assert!(!eq.tree_mismatch);
    }

    #[test]
    fn equilibrium_worked_gt1() {
        let p = default_scenario(1.25);
        let eq = equilibrium(&p).unwrap();
        assert_eq!(eq.case_label, "i.4");
        assert_eq!(eq.region, RegionId::R6);
        assert!((eq.p_i_star - 0.54).abs() < 1e-6);
        assert!((eq.w_star - 0.338048).abs() < 1e-6);
        assert!((eq.profit2 - 0.090191).abs() < 1e-6);
        assert!(!eq.tree_mismatch);
    }

    #[test]
    fn equilibrium_below_entry_threshold() {
        let mut p = default_scenario(0.8);
        p.gamma1 = 1.0 / 7.0; // a_hat = 0.40 < 0.4129
        assert!(matches!(
            equilibrium(&p),
            Err(LeaderError::BelowEntryThreshold { .. })
        ));
    }

    #[test]
    fn equilibrium_case_i11_anchors_closed_supply_price() {
        // Small theta, large original market, cheap interior cost gap:
        // lands in case i.1.1 where p_i* equals the closed-supply price.
        let p = ScenarioParams {
            theta: 0.2,
            a: 0.9,
            gamma1: 0.5,
            gamma2: 0.02,
            m_i: 0.5,
            m_e: 0.0,
            w0: 0.0,
            k: 0.0,
        };
        crate::scenario::validate_params(p).unwrap();
        let eq = equilibrium(&p).unwrap();
        assert_eq!(eq.case_label, "i.1.1");
        assert_eq!(eq.region, RegionId::R2);
        assert!((eq.p_i_star - (1.0 + p.m_i) / 2.0).abs() < 1e-12);
        assert!(!eq.tree_mismatch);
    }

    #[test]
    fn gt1_equilibrium_invariant_to_interior_cost() {
        let mut p = default_scenario(1.25);
        let reference = equilibrium(&p).unwrap();
        for m_i in [0.0, 0.2, 0.4] {
            p.m_i = m_i;
            let eq = equilibrium(&p).unwrap();
            assert_eq!(eq.p_i_star.to_bits(), reference.p_i_star.to_bits());
            assert_eq!(eq.w_star.to_bits(), reference.w_star.to_bits());
            assert_eq!(eq.profit2.to_bits(), reference.profit2.to_bits());
        }
    }

    #[test]
    fn candidate_profit_matches_leader_profit() {
        for p in [default_scenario(0.8), default_scenario(1.25)] {
            for region in nonempty_regions(&p) {
                for cand in region_optimum(region, &p).unwrap() {
                    let direct = leader_profit(cand.p_i, cand.w, &p).unwrap();
                    assert!(
                        (direct - cand.profit).abs() < 1e-9,
                        "{}: closed form {} vs evaluated {}",
                        cand.label,
                        cand.profit,
                        direct
                    );
                }
            }
        }
    }

    #[test]
    fn plateau_profit_constant_over_interval() {
        // theta > 1 default scenario has a Lemma 4 candidate in R4.
        let p = default_scenario(1.25);
        let cands = region_optimum(RegionId::R4, &p).unwrap();
        assert_eq!(cands.len(), 1);
        let cand = &cands[0];
        assert!(cand.p_i_arbitrary);
        let (lo, hi) = cand.p_i_interval.unwrap();
        assert!(lo < hi);
        let at_lo = leader_profit(lo + 1e-6, cand.w, &p).unwrap();
        for k in 1..=10 {
            let p_i = lo + 1e-6 + (hi - lo - 1e-6) * k as f64 / 10.0;
            let v = leader_profit(p_i, cand.w, &p).unwrap();
            assert!((v - at_lo).abs() <= 1e-12);
        }
    }

    #[test]
    fn threshold_a0_root_ties_candidates() {
        // theta m_i > m_e so the interior R2 optimum exists and the
        // bracket is nondegenerate.
        let mut p = default_scenario(0.8);
        p.gamma2 = 0.05;
        p.m_i = 0.3;
        match threshold_a0(&p).unwrap() {
            ThresholdOutcome::Root(a0) => {
                let base = baselines(&p);
                let mut b = base;
                b.a_hat = a0;
                let c = Ctx::new(&p, &b);
                assert!((lemma2_case3(&c).profit - lemma3_case3(&c).profit).abs() < 1e-8);
            }
            ThresholdOutcome::NoRoot { dominant } => {
                assert!(dominant == RegionId::R2 || dominant == RegionId::R3);
            }
        }
    }

    #[test]
    fn threshold_a0_degenerate_when_interior_margin_nonpositive() {
        // Equal unit costs: theta m_i - m_e < 0 for theta < 1, so no
        // interior R2 candidate exists at any market share.
        let p = default_scenario(0.8);
        assert!(matches!(
            threshold_a0(&p),
            Err(LeaderError::EmptyBracket { .. })
        ));
        let mut q = p;
        q.m_i = q.m_e / q.theta; // exactly zero margin
        assert!(matches!(
            threshold_a0(&q),
            Err(LeaderError::EmptyBracket { .. })
        ));
    }

    #[test]
    fn threshold_a1_root_ties_candidates() {
        // theta = 2 satisfies (theta - m_e)^2 < 4 theta (theta - 1)(1 - m_e^2),
        // so the a1 bracket is nondegenerate.
        let p = default_scenario(2.0);
        match threshold_a1(&p).unwrap() {
            ThresholdOutcome::Root(a1) => {
                let base = baselines(&p);
                let mut b = base;
                b.a_hat = a1;
                let c = Ctx::new(&p, &b);
                assert!((lemma5_case2(&c).profit - lemma4_case2(&c).profit).abs() < 1e-8);
            }
            ThresholdOutcome::NoRoot { dominant } => {
                assert!(dominant == RegionId::R4 || dominant == RegionId::R6);
            }
        }
    }

    #[test]
    fn equilibrium_never_beaten_on_feasible_grid() {
        // Coarse Stackelberg-optimality sanity check; the acceptance
        // suite runs the full-resolution version.
        for p in [default_scenario(0.8), default_scenario(1.25)] {
            let eq = equilibrium(&p).unwrap();
            for i in 0..=100 {
                for j in 0..=100 {
                    let p_i = i as f64 / 100.0;
                    let w = p.theta * j as f64 / 100.0;
                    if let Ok(profit) = leader_profit(p_i, w, &p) {
                        assert!(
                            eq.profit2 >= profit - 1e-3,
                            "beaten at ({p_i}, {w}): {profit} > {}",
                            eq.profit2
                        );
                    }
                }
            }
        }
    }
}
