//! Coupled solve of the constellation and parking layers: planes see parking
//! availability, parking sees plane demand, iterated to a fixed point.

use crate::approx::{self, ApproxConfig, ReducedShape};
use crate::chain::{
    summarize_cycle, CycleStats, CycleSummary, PeriodicSolver, SolverMethod, SolverOptions, TransitionBundle,
};
use crate::config::{derive_time_grid, PolicyParams, ScenarioConfig, TimeGrid};
use crate::constellation::{self, AvailabilityVector, ConstellationModel, DemandVector};
use crate::error::{Error, Result};
use crate::linalg;
use crate::parking::{self, ParkingModel};
use crate::stochastic::Levels;

#[derive(Clone, Debug)]
pub struct HybridOptions {
    /// Stop when successive availability vectors differ by at most this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Relaxation weight on the new availability vector, in (0, 1].
    pub damping: f64,
    /// Use the reduced model.
    pub approximate: bool,
    pub approx: ApproxConfig,
    pub solver: SolverOptions,
    /// Keep per-step marginals of the stationary cycles.
    pub keep_steps: bool,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 100,
            damping: 1.0,
            approximate: false,
            approx: ApproxConfig::default(),
            solver: SolverOptions::default(),
            keep_steps: false,
        }
    }
}

impl HybridOptions {
    pub fn approximate() -> Self {
        Self {
            approximate: true,
            ..Self::default()
        }
    }
}

/// Stationary cycle of one layer.
#[derive(Clone, Debug)]
pub struct LayerSolution {
    pub levels: Levels,
    pub bundle: TransitionBundle,
    pub pi1: Vec<f64>,
    /// Cycle-averaged stock distribution over `levels`.
    pub average: Vec<f64>,
    /// Stock distribution just before the alignment event.
    pub pre_event: Vec<f64>,
    pub stats: CycleStats,
    pub stationary_residual: f64,
    pub method: SolverMethod,
    pub steps: Option<Vec<Vec<f64>>>,
}

impl LayerSolution {
    fn new(levels: Levels, bundle: TransitionBundle, sol: crate::chain::Stationary, summary: CycleSummary, stats: CycleStats) -> Self {
        Self {
            levels,
            bundle,
            pi1: sol.pi1,
            average: summary.average,
            pre_event: summary.pre_event,
            stats,
            stationary_residual: sol.residual,
            method: sol.method,
            steps: summary.steps,
        }
    }

    /// Cycle-averaged distribution over every level `0..=max`, highest first.
    pub fn average_full(&self) -> Vec<f64> {
        embed(self.levels, &self.average)
    }

    /// `P(X = level)` under the cycle average.
    pub fn prob_at(&self, level: usize) -> f64 {
        if level < self.levels.min || level > self.levels.max {
            0.0
        } else {
            self.average[self.levels.index(level)]
        }
    }
}

/// Pads a distribution over a level window with zeros down to level 0.
pub fn embed(levels: Levels, dist: &[f64]) -> Vec<f64> {
    let mut out = dist.to_vec();
    out.resize(levels.max + 1, 0.0);
    out
}

#[derive(Clone, Debug)]
pub struct HybridSolution {
    pub grid: TimeGrid,
    pub shape: ReducedShape,
    pub constellation: LayerSolution,
    pub parking: LayerSolution,
    /// Plane stock just before an alignment, over the constellation levels.
    pub pi_r_ci: Vec<f64>,
    /// The same distribution right after the indirect delivery.
    pub pi_q_ci: Vec<f64>,
    pub chi: DemandVector,
    /// Availability seen by the final constellation solve.
    pub kappa: AvailabilityVector,
    pub iterations: usize,
    /// Last change of the availability vector.
    pub residual: f64,
    pub trace: Vec<f64>,
}

/// Stock distribution just before the alignment event.
fn pre_event(solver: &PeriodicSolver, bundle: &TransitionBundle, pi1: &[f64]) -> Vec<f64> {
    let last = solver.last_step_state(bundle, pi1);
    constellation::pre_event_distribution(bundle, &last)
}

fn full_stock_anchor(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = 1.0;
    v
}

/// Solves the coupled model for the scenario's own policy.
pub fn solve_hybrid(cfg: &ScenarioConfig, opts: &HybridOptions) -> Result<HybridSolution> {
    solve_policy(cfg, &cfg.policy, opts)
}

/// Solves the coupled model for `policy` under the scenario's environment.
pub fn solve_policy(cfg: &ScenarioConfig, policy: &PolicyParams, opts: &HybridOptions) -> Result<HybridSolution> {
    cfg.constellation.validate()?;
    cfg.stochastic.validate()?;
    policy.validate(&cfg.constellation)?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::validation("damping must lie in (0, 1]"));
    }
    let grid = derive_time_grid(cfg, policy)?;
    let shape = if opts.approximate {
        approx::reduced_shape(cfg, policy, &grid, &opts.approx)?
    } else {
        approx::exact_shape(policy, &grid)
    };
    let c_model = ConstellationModel::new(cfg, policy, &grid, shape.levels_c, shape.stages_d.clone())?;
    let p_model = ParkingModel::new(policy, &grid, shape.stages_i.clone())?;
    let tau_mc = cfg.constellation.tau_mc;
    let sto = &cfg.stochastic;

    let kappa_len = (constellation::max_demand(policy.r_ci as usize, policy.q_ci as usize) + 1)
        .max(policy.n_sat_p() + 1);
    let mut kappa = AvailabilityVector::all_ones(kappa_len);
    let mut c_solver = PeriodicSolver::new();
    let mut p_solver = PeriodicSolver::new();
    let mut c_anchor = full_stock_anchor(c_model.ops.layout().dim());
    let mut p_anchor = full_stock_anchor(p_model.ops.layout().dim());
    let mut trace = Vec::new();

    for iteration in 1..=opts.max_iterations {
        kappa.validate(1e-9)?;
        let c_bundle = c_model.bundle(&kappa)?;
        let c_sol = c_solver.solve(&c_bundle, &c_anchor, &opts.solver)?;
        let c_pre = pre_event(&c_solver, &c_bundle, &c_sol.pi1);
        let chi = constellation::demand_distribution(&c_pre, shape.levels_c, c_model.r_ci, c_model.q_ci);

        let p_bundle = p_model.bundle(&chi)?;
        let p_sol = p_solver.solve(&p_bundle, &p_anchor, &opts.solver)?;
        let p_pre = pre_event(&p_solver, &p_bundle, &p_sol.pi1);
        let new_kappa = parking::availability_vector(&p_pre, p_model.levels(), kappa_len);

        let change = linalg::max_abs_diff(&new_kappa.0, &kappa.0);
        if !change.is_finite() {
            return Err(Error::FixedPoint {
                iterations: iteration,
                last_change: change,
                trace,
            });
        }
        trace.push(change);
        if change <= opts.tol {
            let c_sum = summarize_cycle(&c_bundle, &c_sol.pi1, opts.keep_steps);
            let p_sum = summarize_cycle(&p_bundle, &p_sol.pi1, opts.keep_steps);
            let c_stats = CycleStats::from_weights(c_sum.c_io, c_sum.c_lt, grid.m_d, tau_mc, sto.mu_lv_d);
            let p_stats = CycleStats::from_weights(p_sum.c_io, p_sum.c_lt, grid.m_i, tau_mc, sto.mu_lv_i);
            let pi_r_ci = c_sum.pre_event.clone();
            let pi_q_ci = c_model.indirect(&kappa)?.mul_vec(&pi_r_ci);
            return Ok(HybridSolution {
                grid,
                shape: shape.clone(),
                constellation: LayerSolution::new(shape.levels_c, c_bundle, c_sol, c_sum, c_stats),
                parking: LayerSolution::new(p_model.levels(), p_bundle, p_sol, p_sum, p_stats),
                pi_r_ci,
                pi_q_ci,
                chi,
                kappa,
                iterations: iteration,
                residual: change,
                trace,
            });
        }
        c_anchor = c_sol.pi1;
        p_anchor = p_sol.pi1;
        kappa = if opts.damping < 1.0 {
            AvailabilityVector(
                kappa
                    .0
                    .iter()
                    .zip(&new_kappa.0)
                    .map(|(old, new)| old + opts.damping * (new - old))
                    .collect(),
            )
        } else {
            new_kappa
        };
    }
    Err(Error::FixedPoint {
        iterations: opts.max_iterations,
        last_change: trace.last().copied().unwrap_or(f64::INFINITY),
        trace,
    })
}
