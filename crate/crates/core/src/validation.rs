//! Analysis against the Monte Carlo oracle, and the reduced model against the
//! exact one, over a Latin hypercube of scenarios.

use std::time::Instant;

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::hybrid::{solve_policy, HybridOptions, HybridSolution};
use crate::metrics::evaluate_policy_metrics;
use crate::simulate::{lhs_sample, simulate, LhsBounds, SimMetrics, SimOptions};

/// The four compared quantities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StockMetrics {
    pub m_c: f64,
    pub m_p: f64,
    pub s_c: f64,
    pub p_stockout: f64,
}

impl StockMetrics {
    pub fn of_solution(cfg: &ScenarioConfig, sol: &HybridSolution) -> Result<Self> {
        let report = evaluate_policy_metrics(cfg, &cfg.policy, sol)?;
        Ok(Self {
            m_c: report.mean_stock_plane,
            m_p: report.mean_stock_parking,
            s_c: report.shortage,
            p_stockout: sol.parking.prob_at(0),
        })
    }

    pub fn of_simulation(m: &SimMetrics) -> Self {
        Self {
            m_c: m.m_c,
            m_p: m.m_p,
            s_c: m.s_c,
            p_stockout: m.p_stockout,
        }
    }

    fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::MeanPlane => self.m_c,
            Metric::MeanParking => self.m_p,
            Metric::Shortage => self.s_c,
            Metric::Stockout => self.p_stockout,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanPlane,
    MeanParking,
    Shortage,
    Stockout,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::MeanPlane, Metric::MeanParking, Metric::Shortage, Metric::Stockout];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MeanPlane => "m_c",
            Metric::MeanParking => "m_p",
            Metric::Shortage => "s_c",
            Metric::Stockout => "p_stockout",
        }
    }

    /// Stockout probability is compared in percentage points, the rest in
    /// percent of the reference.
    pub fn is_absolute(self) -> bool {
        self == Metric::Stockout
    }

    /// Error of `value` against `reference`, in percent or percentage points.
    pub fn error(self, value: f64, reference: f64) -> f64 {
        let diff = (value - reference).abs();
        if self.is_absolute() {
            100.0 * diff
        } else if reference == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            100.0 * diff / reference.abs()
        }
    }

    fn is_parking(self) -> bool {
        matches!(self, Metric::MeanParking | Metric::Stockout)
    }
}

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    pub n_cases: usize,
    pub lhs_seed: u64,
    pub bounds: LhsBounds,
    pub sim: SimOptions,
    pub exact: HybridOptions,
    /// Also solve the reduced model.
    pub reduced: Option<HybridOptions>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            n_cases: 10,
            lhs_seed: 1,
            bounds: LhsBounds::default(),
            sim: SimOptions::default(),
            exact: HybridOptions::default(),
            reduced: Some(HybridOptions::approximate()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationCase {
    pub index: usize,
    pub cfg: ScenarioConfig,
    pub exact: StockMetrics,
    pub exact_seconds: f64,
    pub reduced: Option<StockMetrics>,
    pub reduced_seconds: Option<f64>,
    pub mc: StockMetrics,
    pub mc_stderr: StockMetrics,
    /// The direct channel triggers well above the indirect one, so parking
    /// sees too little traffic for a finite run to resolve.
    pub parking_excluded: bool,
    /// The parking stock keeps its saw-tooth profile, which the independent
    /// plane assumption needs.
    pub within_threshold: bool,
}

impl ValidationCase {
    /// Whether `metric` of this case enters the analysis-vs-simulation table.
    pub fn compared(&self, metric: Metric) -> bool {
        self.within_threshold && !(metric.is_parking() && self.parking_excluded)
    }

    pub fn mc_error(&self, metric: Metric) -> f64 {
        metric.error(self.exact.get(metric), self.mc.get(metric))
    }

    pub fn reduced_error(&self, metric: Metric) -> Option<f64> {
        self.reduced.map(|r| metric.error(r.get(metric), self.exact.get(metric)))
    }
}

/// Mean and 95th percentile of one error column.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorSummary {
    pub metric: Metric,
    pub cases: usize,
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

impl ErrorSummary {
    pub fn from_errors(metric: Metric, mut errors: Vec<f64>) -> Self {
        errors.sort_by(f64::total_cmp);
        let n = errors.len();
        let (mean, p95, max) = if n == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            // Nearest-rank percentile.
            let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
            (errors.iter().sum::<f64>() / n as f64, errors[rank - 1], errors[n - 1])
        };
        Self {
            metric,
            cases: n,
            mean,
            p95,
            max,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub cases: Vec<ValidationCase>,
    pub mc_vs_exact: Vec<ErrorSummary>,
    /// Empty when the reduced model was not solved.
    pub reduced_vs_exact: Vec<ErrorSummary>,
}

pub fn run_validation(base: &ScenarioConfig, opts: &ValidationOptions) -> Result<ValidationReport> {
    let lhs = lhs_sample(base, &opts.bounds, opts.n_cases, opts.lhs_seed)?;
    let mut cases = Vec::with_capacity(lhs.len());
    for case in lhs {
        let cfg = case.cfg;
        let t = Instant::now();
        let sol = solve_policy(&cfg, &cfg.policy, &opts.exact)?;
        let exact_seconds = t.elapsed().as_secs_f64();
        let exact = StockMetrics::of_solution(&cfg, &sol)?;
        let (reduced, reduced_seconds) = match &opts.reduced {
            Some(ro) => {
                let t = Instant::now();
                let rs = solve_policy(&cfg, &cfg.policy, ro)?;
                let secs = t.elapsed().as_secs_f64();
                (Some(StockMetrics::of_solution(&cfg, &rs)?), Some(secs))
            }
            None => (None, None),
        };
        let run = simulate(&cfg, &cfg.policy, &opts.sim)?;
        let threshold = 1.0 / (cfg.policy.n_sat_p() as f64 + 1.0);
        cases.push(ValidationCase {
            index: case.index,
            exact,
            exact_seconds,
            reduced,
            reduced_seconds,
            mc: StockMetrics::of_simulation(&run.mean),
            mc_stderr: StockMetrics::of_simulation(&run.stderr),
            parking_excluded: case.excluded_parking,
            within_threshold: exact.p_stockout < threshold,
            cfg,
        });
    }
    let mc_vs_exact = Metric::ALL
        .iter()
        .map(|&m| {
            let errs = cases.iter().filter(|c| c.compared(m)).map(|c| c.mc_error(m)).collect();
            ErrorSummary::from_errors(m, errs)
        })
        .collect();
    let reduced_vs_exact = if opts.reduced.is_some() {
        Metric::ALL
            .iter()
            .map(|&m| ErrorSummary::from_errors(m, cases.iter().filter_map(|c| c.reduced_error(m)).collect()))
            .collect()
    } else {
        Vec::new()
    };
    Ok(ValidationReport {
        cases,
        mc_vs_exact,
        reduced_vs_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_conventions() {
        assert_eq!(Metric::MeanPlane.error(101.0, 100.0), 1.0);
        assert!((Metric::Stockout.error(0.021, 0.02) - 0.1).abs() < 1e-12);
        assert_eq!(Metric::Shortage.error(0.0, 0.0), 0.0);
        assert!(Metric::Shortage.error(1e-3, 0.0).is_infinite());
    }

    #[test]
    fn nearest_rank_summary() {
        let s = ErrorSummary::from_errors(Metric::MeanPlane, (1..=20).map(f64::from).collect());
        assert_eq!(s.cases, 20);
        assert_eq!(s.p95, 19.0);
        assert_eq!(s.max, 20.0);
        assert_eq!(s.mean, 10.5);
        assert!(ErrorSummary::from_errors(Metric::Shortage, Vec::new()).mean.is_nan());
    }

    #[test]
    fn near_failure_free_case_agrees() {
        let opts = ValidationOptions {
            n_cases: 1,
            bounds: LhsBounds {
                lambda: (0.001, 0.001),
                ..LhsBounds::default()
            },
            sim: SimOptions {
                horizon_years: 5.0,
                replications: 2,
                ..SimOptions::default()
            },
            ..ValidationOptions::default()
        };
        let report = run_validation(&ScenarioConfig::baseline(), &opts).unwrap();
        let case = &report.cases[0];
        assert!(case.mc_error(Metric::MeanPlane) < 0.5, "{case:?}");
        assert!(case.mc_error(Metric::Stockout) < 1.0);
    }
}
