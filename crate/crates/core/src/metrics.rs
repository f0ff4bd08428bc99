//! Daily cost rates, service levels and launch-capacity checks for a solved
//! policy.

use serde::Serialize;

use crate::config::{CostParams, PolicyParams, ScenarioConfig, DAYS_PER_YEAR};
use crate::error::Result;
use crate::hybrid::HybridSolution;
use crate::orbital::{OrbitPair, TransferModel};

/// Cost rates in M$/day.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub build: f64,
    pub hold: f64,
    pub launch: f64,
    pub transfer: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(build: f64, hold: f64, launch: f64, transfer: f64) -> Self {
        Self {
            build,
            hold,
            launch,
            transfer,
            total: build + hold + launch + transfer,
        }
    }
}

/// Payload and service constraints; `slack >= 0` means satisfied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub satisfied: bool,
}

impl ConstraintCheck {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            satisfied: value <= limit,
        }
    }

    /// Normalized violation, zero when satisfied.
    pub fn violation(&self) -> f64 {
        if self.satisfied {
            0.0
        } else if self.limit > 0.0 {
            (self.value - self.limit) / self.limit
        } else {
            self.value - self.limit
        }
    }
}

/// Replenishment-cycle timing of one channel; `None` means the channel never
/// places an order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelTiming {
    pub tau_lt: f64,
    pub tau_io: Option<f64>,
    pub tau_rc: Option<f64>,
    pub c_io: f64,
    pub c_lt: f64,
}

impl From<crate::chain::CycleStats> for ChannelTiming {
    fn from(s: crate::chain::CycleStats) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            tau_lt: s.tau_lt,
            tau_io: finite(s.tau_io),
            tau_rc: finite(s.tau_rc),
            c_io: s.c_io,
            c_lt: s.c_lt,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub policy: PolicyParams,
    pub costs: CostBreakdown,
    /// Expected operational shortfall per plane.
    pub shortage: f64,
    /// Probability that a parking orbit is empty; `None` when parking is
    /// never restocked.
    pub p_stockout: Option<f64>,
    pub mean_stock_plane: f64,
    pub mean_stock_parking: f64,
    pub direct: ChannelTiming,
    pub indirect: ChannelTiming,
    /// Share of delivered satellites that came by the direct channel.
    pub direct_share: f64,
    /// Satellites launched per day, both channels.
    pub launch_rate_sats: f64,
    pub transfer_fuel_kg: f64,
    pub transfer_dry_kg: f64,
    pub tau_c: f64,
    pub tau_p: f64,
    pub constraints: Vec<ConstraintCheck>,
    pub feasible: bool,
    pub fixed_point_iterations: usize,
    pub fixed_point_residual: f64,
}

/// Payload limits of both launch vehicles.
pub fn launch_capacity_check(policy: &PolicyParams, costs: &CostParams, pair: &OrbitPair) -> [ConstraintCheck; 2] {
    let transfer = TransferModel {
        v_ex: costs.v_ex,
        m_sat: costs.m_sat,
        m_bus: costs.m_bus,
    };
    let stack = transfer.fuel(pair, policy.q_ci) + transfer.dry_mass(policy.q_ci);
    [
        ConstraintCheck::at_most("direct_payload", costs.m_sat * f64::from(policy.q_cd), costs.m_payload_d),
        ConstraintCheck::at_most("indirect_payload", stack * f64::from(policy.q_p), costs.m_payload_i),
    ]
}

/// Stockout limit used when the scenario does not set one.
pub fn default_stockout_limit(policy: &PolicyParams) -> f64 {
    1.0 / (policy.n_sat_p() as f64 + 1.0)
}

/// Prices a solved policy. Per-year holding rates become per-day rates.
pub fn evaluate_metrics(cfg: &ScenarioConfig, solution: &HybridSolution) -> Result<MetricsReport> {
    evaluate_policy_metrics(cfg, &cfg.policy, solution)
}

pub fn evaluate_policy_metrics(cfg: &ScenarioConfig, policy: &PolicyParams, sol: &HybridSolution) -> Result<MetricsReport> {
    let c = &cfg.costs;
    let n_c = f64::from(cfg.constellation.n_orbit_c);
    let n_p = f64::from(policy.n_orbit_p);
    let n_bar = cfg.constellation.n_bar_sat as usize;
    let q_ci = f64::from(policy.q_ci);
    let pair = OrbitPair::from_altitudes(cfg.constellation.h_c, policy.h_p, cfg.constellation.incl)?;
    let transfer = TransferModel {
        v_ex: c.v_ex,
        m_sat: c.m_sat,
        m_bus: c.m_bus,
    };
    let fuel = transfer.fuel(&pair, policy.q_ci);
    let dry = transfer.dry_mass(policy.q_ci);

    let lc = sol.constellation.levels;
    let lp = sol.parking.levels;
    let mut surplus = 0.0;
    let mut shortage = 0.0;
    let mut mean_c = 0.0;
    for (i, p) in sol.constellation.average.iter().enumerate() {
        let x = lc.level(i);
        surplus += x.saturating_sub(n_bar) as f64 * p;
        shortage += n_bar.saturating_sub(x) as f64 * p;
        mean_c += x as f64 * p;
    }
    let mean_p: f64 = sol
        .parking
        .average
        .iter()
        .enumerate()
        .map(|(i, p)| lp.level(i) as f64 * p)
        .sum();
    let delivered: f64 = sol
        .pi_q_ci
        .iter()
        .zip(&sol.pi_r_ci)
        .enumerate()
        .map(|(i, (q, r))| lc.level(i) as f64 * (q - r))
        .sum();

    let rate_d = sol.constellation.stats.order_rate();
    let rate_i = sol.parking.stats.order_rate();
    let sats_d = n_c * f64::from(policy.q_cd) * rate_d;
    let sats_i = n_p * q_ci * f64::from(policy.q_p) * rate_i;

    let build = c.c_build * (sats_d + sats_i);
    let hold = c.c_hold_c / DAYS_PER_YEAR * n_c * surplus + c.c_hold_p / DAYS_PER_YEAR * n_p * q_ci * mean_p;
    let launch = n_c * c.c_full_d * rate_d + n_p * c.c_full_i * rate_i;
    let transfer_cost = n_c / (sol.grid.tau_c * q_ci) * (c.c_fuel * fuel + c.c_trans) * delivered;

    let p_stockout = sol.parking.stats.tau_rc.is_finite().then(|| sol.parking.prob_at(0));
    let eps1 = cfg.optimization.eps1;
    let eps2 = cfg.optimization.eps2.unwrap_or_else(|| default_stockout_limit(policy));
    let [direct_payload, indirect_payload] = launch_capacity_check(policy, c, &pair);
    let constraints = vec![
        ConstraintCheck::at_most("shortage", shortage, eps1),
        ConstraintCheck::at_most("stockout", p_stockout.unwrap_or(0.0), eps2),
        direct_payload,
        indirect_payload,
    ];
    let feasible = constraints.iter().all(|k| k.satisfied);
    let total_sats = sats_d + sats_i;
    Ok(MetricsReport {
        policy: *policy,
        costs: CostBreakdown::new(build, hold, launch, transfer_cost),
        shortage,
        p_stockout,
        mean_stock_plane: mean_c,
        mean_stock_parking: mean_p,
        direct: sol.constellation.stats.into(),
        indirect: sol.parking.stats.into(),
        direct_share: if total_sats > 0.0 { sats_d / total_sats } else { 0.0 },
        launch_rate_sats: total_sats,
        transfer_fuel_kg: fuel,
        transfer_dry_kg: dry,
        tau_c: sol.grid.tau_c,
        tau_p: sol.grid.tau_p,
        constraints,
        feasible,
        fixed_point_iterations: sol.iterations,
        fixed_point_residual: sol.residual,
    })
}
