//! Reduced model: drops plane stock levels that are practically unreachable
//! and lumps the fixed lead-time delay into a few geometric stages.

use crate::config::{PolicyParams, ScenarioConfig, TimeGrid};
use crate::error::{Error, Result};
use crate::stochastic::Levels;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ApproxConfig {
    /// Standard deviations of failures kept below the lowest reorder point.
    pub k_sigma: f64,
    /// Steps per lumped delay stage.
    pub steps_per_stage: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            k_sigma: 3.0,
            steps_per_stage: 3.0,
        }
    }
}

/// Lowest plane stock level retained by the reduced model.
///
/// Over the slower of the two replenishment paths a plane starting at the
/// smallest trigger level loses `F` satellites with mean `E[F]`; levels more
/// than `k_sigma` deviations below that are dropped. A zero reorder point
/// switches its channel off and does not count as a trigger.
pub fn truncation_bound(cfg: &ScenarioConfig, policy: &PolicyParams, grid: &TimeGrid, approx: &ApproxConfig) -> usize {
    let s = &cfg.stochastic;
    let tau_slow = grid.tau_c.max(s.mu_lv_d + s.tau_lv_d);
    let active = |r: u32| if r == 0 { u32::MAX } else { r };
    let lowest = active(policy.r_ci).min(active(policy.r_cd));
    if lowest == u32::MAX {
        return 0;
    }
    let start = (policy.n_sat_c() as u32).min(lowest) as f64;
    let steps = tau_slow / cfg.constellation.tau_mc;
    let mean = steps * start * grid.lambda_step;
    let bound = (start - mean - approx.k_sigma * mean.sqrt()).floor();
    if bound > 0.0 {
        bound as usize
    } else {
        0
    }
}

/// Number of lumped stages for a delay of `m` steps.
pub fn stage_count(m: usize, steps_per_stage: f64) -> usize {
    if m == 0 {
        0
    } else {
        ((m as f64 / steps_per_stage).round() as usize).max(1)
    }
}

/// Splits `m` delay steps into `s` stages as evenly as possible, longer
/// stages first.
pub fn reduce_delay_stages(m: usize, s: usize) -> Result<Vec<usize>> {
    if s > m {
        return Err(Error::validation(format!("cannot split {m} delay steps into {s} stages")));
    }
    if s == 0 {
        return if m == 0 {
            Ok(Vec::new())
        } else {
            Err(Error::validation("a positive delay needs at least one stage"))
        };
    }
    let base = m / s;
    let extra = m % s;
    Ok((0..s).map(|l| base + usize::from(l < extra)).collect())
}

/// Stage lengths and level window of the reduced constellation layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedShape {
    pub levels_c: Levels,
    pub stages_d: Vec<usize>,
    pub stages_i: Vec<usize>,
}

pub fn reduced_shape(cfg: &ScenarioConfig, policy: &PolicyParams, grid: &TimeGrid, approx: &ApproxConfig) -> Result<ReducedShape> {
    let n = policy.n_sat_c();
    let min = truncation_bound(cfg, policy, grid, approx).min(n);
    Ok(ReducedShape {
        levels_c: Levels::truncated(n, min),
        stages_d: reduce_delay_stages(grid.m_d, stage_count(grid.m_d, approx.steps_per_stage))?,
        stages_i: reduce_delay_stages(grid.m_i, stage_count(grid.m_i, approx.steps_per_stage))?,
    })
}

/// Shape of the exact model: every level, one block per delay step.
pub fn exact_shape(policy: &PolicyParams, grid: &TimeGrid) -> ReducedShape {
    ReducedShape {
        levels_c: Levels::full(policy.n_sat_c()),
        stages_d: vec![1; grid.m_d],
        stages_i: vec![1; grid.m_i],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::derive_time_grid;

    #[test]
    fn stage_split_examples() {
        assert_eq!(reduce_delay_stages(8, 3).unwrap(), vec![3, 3, 2]);
        assert_eq!(reduce_delay_stages(20, 7).unwrap(), vec![3, 3, 3, 3, 3, 3, 2]);
        assert_eq!(reduce_delay_stages(5, 5).unwrap(), vec![1; 5]);
        assert_eq!(reduce_delay_stages(0, 0).unwrap(), Vec::<usize>::new());
        assert!(reduce_delay_stages(2, 3).is_err());
        assert_eq!(stage_count(20, 3.0), 7);
        assert_eq!(stage_count(40, 3.0), 13);
        assert_eq!(stage_count(1, 3.0), 1);
        assert_eq!(stage_count(0, 3.0), 0);
    }

    #[test]
    fn baseline_bound_is_below_triggers() {
        let cfg = ScenarioConfig::baseline();
        let grid = derive_time_grid(&cfg, &cfg.policy).unwrap();
        let m = truncation_bound(&cfg, &cfg.policy, &grid, &ApproxConfig::default());
        let start = cfg.policy.r_cd.min(cfg.policy.r_ci) as usize;
        assert!(m > 0 && m < start, "{m}");
        let mut zero = cfg.clone();
        zero.stochastic.lambda_sat_yr = 0.0;
        let g0 = derive_time_grid(&zero, &zero.policy).unwrap();
        assert_eq!(truncation_bound(&zero, &zero.policy, &g0, &ApproxConfig::default()), start);
        let mut indirect = cfg.policy;
        indirect.r_cd = 0;
        indirect.q_cd = 1;
        let bound = truncation_bound(&cfg, &indirect, &grid, &ApproxConfig::default());
        assert!(bound > 0 && bound < indirect.r_ci as usize);
        indirect.r_ci = 0;
        assert_eq!(truncation_bound(&cfg, &indirect, &grid, &ApproxConfig::default()), 0);
    }
}
