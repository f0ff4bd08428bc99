use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hybrid_spares::config::load_scenario;
use hybrid_spares::exec::{self, Execution};
use hybrid_spares::hybrid::{solve_hybrid, HybridOptions, LayerSolution};
use hybrid_spares::optimize::{
    self, beta_sweep, dominance_crossover, failure_sweep, genes_of, Evaluator, GaOptions, OptProblem, OptResult,
    Strategy, SweepRow,
};
use hybrid_spares::simulate::{simulate, SimOptions};
use hybrid_spares::validation::{run_validation, Metric, ValidationOptions};
use hybrid_spares::{evaluate_metrics, Error, ScenarioConfig};

mod output;

use output::{num, opt, Manifest, OutDir};

const EXIT_CONFIG: u8 = 2;
const EXIT_NON_CONVERGENCE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(name = "hybrid-spares", version, about = "Hybrid spare-satellite replenishment analysis")]
struct Cli {
    /// Worker threads for replications and candidate evaluation; 1 runs
    /// everything on the calling thread.
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the coupled chains for the configured policy.
    Analyze(AnalyzeArgs),
    /// Monte Carlo run of the configured policy.
    Simulate(SimulateArgs),
    /// Analysis and reduced model against Monte Carlo over sampled cases.
    Validate(ValidateArgs),
    /// Genetic search for the cheapest feasible policy.
    Optimize(OptimizeArgs),
    /// Re-optimize all strategies across launch price factors or failure rates.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use the reduced model.
    #[arg(long, conflicts_with = "full")]
    approx: bool,
    /// Use the exact model (default).
    #[arg(long)]
    full: bool,
    /// Skip the per-step cycle profiles.
    #[arg(long)]
    no_profile: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    years: f64,
    #[arg(long, default_value_t = 2.0)]
    burn_in: f64,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Fixed parameters of the sampled cases.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    cases: usize,
    #[arg(long, default_value_t = 20.0)]
    years: f64,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Seeds both the case sample and the simulation.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skip the reduced-model comparison.
    #[arg(long)]
    no_reduced: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Hybrid,
    Direct,
    Indirect,
    All,
}

#[derive(Args, Clone)]
struct GaArgs {
    #[arg(long, default_value_t = 64)]
    population: usize,
    #[arg(long, default_value_t = 100)]
    generations: usize,
    /// Skip the local search on the final incumbent.
    #[arg(long)]
    no_polish: bool,
    /// Evaluate candidates with the exact model instead of the reduced one.
    #[arg(long)]
    full: bool,
}

impl GaArgs {
    fn options(&self, execution: Execution) -> GaOptions {
        GaOptions {
            population: self.population,
            generations: self.generations,
            polish: !self.no_polish,
            execution,
            ..GaOptions::default()
        }
    }

    fn model(&self) -> HybridOptions {
        if self.full {
            HybridOptions::default()
        } else {
            HybridOptions::approximate()
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = StrategyArg::All)]
    strategy: StrategyArg,
    /// Independent GA seeds; the best run is reported.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    seeds: Vec<u64>,
    /// Multiplier on the direct launch price.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[command(flatten)]
    ga: GaArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    /// Direct launch price factor.
    Beta,
    /// Annual satellite failure rate.
    Failure,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    kind: SweepKind,
    /// Sweep values; defaults depend on the kind.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Price factor held fixed in a failure sweep.
    #[arg(long, default_value_t = 0.38)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    ga: GaArgs,
}

/// Shared per-invocation context.
struct Run {
    argv: Vec<String>,
    jobs: usize,
    execution: Execution,
}

impl Run {
    fn manifest(&self, command: &str, cfg: &ScenarioConfig, seeds: Vec<u64>, options: serde_json::Value, exit_code: u8) -> Manifest {
        Manifest {
            command: command.to_string(),
            argv: self.argv.clone(),
            jobs: self.jobs,
            parallel: self.execution.is_parallel(),
            seeds,
            options,
            scenario: cfg.to_toml_string(),
            exit_code: i32::from(exit_code),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = match cli.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let execution = if jobs == 1 {
        Execution::Sequential
    } else {
        exec::set_worker_threads(jobs);
        Execution::Parallel
    };
    let run = Run {
        argv: std::env::args().collect(),
        jobs,
        execution,
    };
    let outcome = match &cli.command {
        Command::Analyze(a) => analyze(&run, a),
        Command::Simulate(a) => simulate_cmd(&run, a),
        Command::Validate(a) => validate(&run, a),
        Command::Optimize(a) => optimize_cmd(&run, a),
        Command::Sweep(a) => sweep(&run, a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::NonConvergence { .. } | Error::FixedPoint { .. } | Error::Singular(_)) => EXIT_NON_CONVERGENCE,
        Some(_) => EXIT_CONFIG,
        None => 1,
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    load_scenario(path).map_err(anyhow::Error::from)
}

fn analyze(run: &Run, a: &AnalyzeArgs) -> Result<u8> {
    let cfg = load(&a.config)?;
    let opts = HybridOptions {
        keep_steps: !a.no_profile,
        ..if a.approx { HybridOptions::approximate() } else { HybridOptions::default() }
    };
    let sol = solve_hybrid(&cfg, &opts)?;
    let report = evaluate_metrics(&cfg, &sol)?;
    let mut out = OutDir::create(&a.out)?;
    out.json(
        "metrics.json",
        &json!({
            "model": if a.approx { "reduced" } else { "exact" },
            "metrics": report,
            "grid": sol.grid,
            "plane_levels": [sol.shape.levels_c.min, sol.shape.levels_c.max],
            "direct_stages": sol.shape.stages_d,
            "indirect_stages": sol.shape.stages_i,
            "state_dims": [sol.constellation.bundle.layout.dim(), sol.parking.bundle.layout.dim()],
            "fixed_point_trace": sol.trace,
            "stationary_residuals": [sol.constellation.stationary_residual, sol.parking.stationary_residual],
        }),
    )?;
    let c = &sol.constellation;
    let post = hybrid_spares::hybrid::embed(c.levels, &sol.pi_q_ci);
    let pre = hybrid_spares::hybrid::embed(c.levels, &sol.pi_r_ci);
    let avg = c.average_full();
    out.csv(
        "plane_distribution.csv",
        "plane_distribution",
        &["level", "cycle_average", "before_alignment", "after_transfer"],
        (0..avg.len()).map(|i| [(c.levels.max - i).to_string(), num(avg[i]), num(pre[i]), num(post[i])]),
    )?;
    let p = &sol.parking;
    let p_avg = p.average_full();
    let p_pre = hybrid_spares::hybrid::embed(p.levels, &p.pre_event);
    out.csv(
        "parking_distribution.csv",
        "parking_distribution",
        &["batches", "cycle_average", "before_alignment"],
        (0..p_avg.len()).map(|i| [(p.levels.max - i).to_string(), num(p_avg[i]), num(p_pre[i])]),
    )?;
    out.csv(
        "availability.csv",
        "availability",
        &["batches", "probability_at_least"],
        sol.kappa.0.iter().enumerate().map(|(j, k)| [j.to_string(), num(*k)]),
    )?;
    out.csv(
        "demand.csv",
        "demand",
        &["batches", "probability"],
        sol.chi.0.iter().enumerate().map(|(j, x)| [j.to_string(), num(*x)]),
    )?;
    if !a.no_profile {
        let mut rows = Vec::new();
        profile_rows("plane", c, &mut rows);
        profile_rows("parking", p, &mut rows);
        out.csv("cycle_profile.csv", "cycle_profile", &["layer", "step", "level", "probability"], rows)?;
    }
    let options = json!({ "model": if a.approx { "reduced" } else { "exact" }, "profile": !a.no_profile });
    out.finish(run.manifest("analyze", &cfg, Vec::new(), options, 0))?;
    println!(
        "total cost {:.6} M$/day, shortage {:.6}, parking stockout {}, fixed point in {} iterations",
        report.costs.total,
        report.shortage,
        report.p_stockout.map_or("n/a".to_string(), |p| format!("{p:.6}")),
        report.fixed_point_iterations
    );
    Ok(0)
}

fn profile_rows(layer: &str, l: &LayerSolution, rows: &mut Vec<[String; 4]>) {
    let Some(steps) = &l.steps else { return };
    for (k, marg) in steps.iter().enumerate() {
        for (i, p) in marg.iter().enumerate() {
            if *p > 0.0 {
                rows.push([layer.to_string(), (k + 1).to_string(), (l.levels.max - i).to_string(), num(*p)]);
            }
        }
    }
}

fn simulate_cmd(run: &Run, a: &SimulateArgs) -> Result<u8> {
    let cfg = load(&a.config)?;
    let opts = SimOptions {
        horizon_years: a.years,
        burn_in_years: a.burn_in,
        replications: a.reps,
        seed: a.seed,
        execution: run.execution,
    };
    let sim = simulate(&cfg, &cfg.policy, &opts)?;
    let mut out = OutDir::create(&a.out)?;
    out.json(
        "simulation.json",
        &json!({ "horizon_years": sim.horizon_years, "replications": sim.replications, "seed": sim.seed, "mean": sim.mean, "stderr": sim.stderr }),
    )?;
    out.csv(
        "replications.csv",
        "replications",
        &["replication", "m_c", "m_p", "s_c", "p_stockout", "tau_rc_c", "tau_rc_p"],
        sim.samples.iter().enumerate().map(|(r, s)| {
            [r.to_string(), num(s.m_c), num(s.m_p), num(s.s_c), num(s.p_stockout), num(s.tau_rc_c), num(s.tau_rc_p)]
        }),
    )?;
    out.finish(run.manifest("simulate", &cfg, vec![a.seed], serde_json::to_value(&opts)?, 0))?;
    println!(
        "M_c {:.5} ± {:.5}, M_p {:.5} ± {:.5}, S_c {:.6} ± {:.6}, P(X_p=0) {:.5} ± {:.5}",
        sim.mean.m_c, sim.stderr.m_c, sim.mean.m_p, sim.stderr.m_p, sim.mean.s_c, sim.stderr.s_c, sim.mean.p_stockout, sim.stderr.p_stockout
    );
    Ok(0)
}

fn validate(run: &Run, a: &ValidateArgs) -> Result<u8> {
    let base = load(&a.config)?;
    let opts = ValidationOptions {
        n_cases: a.cases,
        lhs_seed: a.seed,
        sim: SimOptions {
            horizon_years: a.years,
            replications: a.reps,
            seed: a.seed,
            execution: run.execution,
            ..SimOptions::default()
        },
        reduced: (!a.no_reduced).then(HybridOptions::approximate),
        ..ValidationOptions::default()
    };
    let report = run_validation(&base, &opts)?;
    let mut out = OutDir::create(&a.out)?;
    out.csv(
        "cases.csv",
        "validation_cases",
        &[
            "case", "lambda_sat_yr", "tau_lv_d", "tau_lv_i", "mu_lv_d", "mu_lv_i", "q_cd", "q_ci", "q_p", "r_cd", "r_ci", "r_p",
            "n_orbit_p", "h_p", "parking_excluded", "within_threshold", "exact_seconds", "reduced_seconds",
        ],
        report.cases.iter().map(|c| {
            let s = &c.cfg.stochastic;
            let p = &c.cfg.policy;
            vec![
                c.index.to_string(),
                num(s.lambda_sat_yr),
                num(s.tau_lv_d),
                num(s.tau_lv_i),
                num(s.mu_lv_d),
                num(s.mu_lv_i),
                p.q_cd.to_string(),
                p.q_ci.to_string(),
                p.q_p.to_string(),
                p.r_cd.to_string(),
                p.r_ci.to_string(),
                p.r_p.to_string(),
                p.n_orbit_p.to_string(),
                num(p.h_p),
                c.parking_excluded.to_string(),
                c.within_threshold.to_string(),
                num(c.exact_seconds),
                opt(c.reduced_seconds),
            ]
        }),
    )?;
    let mut rows = Vec::new();
    for c in &report.cases {
        for m in Metric::ALL {
            let pick = |s: &hybrid_spares::validation::StockMetrics| match m {
                Metric::MeanPlane => s.m_c,
                Metric::MeanParking => s.m_p,
                Metric::Shortage => s.s_c,
                Metric::Stockout => s.p_stockout,
            };
            rows.push(vec![
                c.index.to_string(),
                m.name().to_string(),
                num(pick(&c.exact)),
                num(pick(&c.mc)),
                num(pick(&c.mc_stderr)),
                num(c.mc_error(m)),
                c.compared(m).to_string(),
                opt(c.reduced.as_ref().map(pick)),
                opt(c.reduced_error(m)),
            ]);
        }
    }
    out.csv(
        "metrics.csv",
        "validation_metrics",
        &["case", "metric", "exact", "mc_mean", "mc_stderr", "mc_error", "compared", "reduced", "reduced_error"],
        rows,
    )?;
    let summary_rows = report
        .mc_vs_exact
        .iter()
        .map(|s| ("exact_vs_mc", s))
        .chain(report.reduced_vs_exact.iter().map(|s| ("reduced_vs_exact", s)))
        .map(|(cmp, s)| {
            vec![
                cmp.to_string(),
                s.metric.name().to_string(),
                if s.metric.is_absolute() { "pp" } else { "percent" }.to_string(),
                s.cases.to_string(),
                num(s.mean),
                num(s.p95),
                num(s.max),
            ]
        });
    out.csv("error_summary.csv", "error_summary", &["comparison", "metric", "unit", "cases", "mean", "p95", "max"], summary_rows)?;
    let options = json!({ "cases": a.cases, "years": a.years, "reps": a.reps, "seed": a.seed, "reduced": !a.no_reduced });
    out.finish(run.manifest("validate", &base, vec![a.seed], options, 0))?;
    println!("{:<18} {:<11} {:>5} {:>10} {:>10}", "comparison", "metric", "cases", "mean", "p95");
    for (cmp, s) in report
        .mc_vs_exact
        .iter()
        .map(|s| ("exact vs MC", s))
        .chain(report.reduced_vs_exact.iter().map(|s| ("reduced vs exact", s)))
    {
        let unit = if s.metric.is_absolute() { "pp" } else { "%" };
        println!("{cmp:<18} {:<11} {:>5} {:>9.4}{unit} {:>9.4}{unit}", s.metric.name(), s.cases, s.mean, s.p95);
    }
    Ok(0)
}

fn strategies(arg: StrategyArg) -> Vec<Strategy> {
    match arg {
        StrategyArg::Hybrid => vec![Strategy::Hybrid],
        StrategyArg::Direct => vec![Strategy::DirectOnly],
        StrategyArg::Indirect => vec![Strategy::IndirectOnly],
        // Pure strategies first so their optima can seed the hybrid search.
        StrategyArg::All => vec![Strategy::DirectOnly, Strategy::IndirectOnly, Strategy::Hybrid],
    }
}

fn history_rows(r: &OptResult, rows: &mut Vec<Vec<String>>) {
    for h in &r.history {
        rows.push(vec![
            r.strategy.name().to_string(),
            r.seed.to_string(),
            h.generation.to_string(),
            opt(h.best_cost),
            num(h.best_violation),
            opt(h.mean_feasible_cost),
            h.feasible.to_string(),
            h.solves.to_string(),
        ]);
    }
}

fn optimize_cmd(run: &Run, a: &OptimizeArgs) -> Result<u8> {
    let cfg = load(&a.config)?;
    if !(0.0..=1.0).contains(&a.beta) {
        return Err(Error::Validation(format!("--beta {} outside [0, 1]", a.beta)).into());
    }
    if a.seeds.is_empty() {
        bail!("at least one seed is required");
    }
    let ga = a.ga.options(run.execution);
    let eval = Evaluator::new(cfg.clone(), a.ga.model());
    let mut best = Vec::new();
    let mut history = Vec::new();
    let mut pure_optima = Vec::new();
    for strategy in strategies(a.strategy) {
        let problem = OptProblem {
            beta: a.beta,
            seeds: if strategy == Strategy::Hybrid { pure_optima.clone() } else { Vec::new() },
            ..OptProblem::new(strategy)
        };
        let runs = optimize::optimize_multistart(&eval, &problem, &ga, &a.seeds)?;
        for r in &runs {
            history_rows(r, &mut history);
        }
        let top = optimize::best_of(&runs).context("no optimization run finished")?.clone();
        if strategy != Strategy::Hybrid {
            pure_optima.push(genes_of(&top.best_policy));
        }
        eprintln!(
            "{:<8} cost {} feasible {} policy {:?}",
            strategy.name(),
            top.best.as_ref().map_or("n/a".to_string(), |m| format!("{:.6}", m.costs.total)),
            top.feasible,
            genes_of(&top.best_policy)
        );
        best.push(top);
    }
    let infeasible = best.iter().any(|r| !r.feasible);
    let code = if infeasible { EXIT_INFEASIBLE } else { 0 };
    let mut out = OutDir::create(&a.out)?;
    let summary: Vec<_> = best
        .iter()
        .map(|r| {
            json!({
                "strategy": r.strategy,
                "seed": r.seed,
                "beta": r.beta,
                "feasible": r.feasible,
                "policy": r.best_policy,
                "metrics": r.best,
                "solves": r.solves,
                "evaluations": r.evaluations,
            })
        })
        .collect();
    out.json("optimization.json", &json!({ "beta": a.beta, "results": summary, "solves": eval.solves() }))?;
    out.csv(
        "history.csv",
        "ga_history",
        &["strategy", "seed", "generation", "best_cost", "best_violation", "mean_feasible_cost", "feasible", "solves"],
        history,
    )?;
    for r in &best {
        out.text(&format!("best_{}.toml", r.strategy.name()), &cfg.with_policy(r.best_policy).to_toml_string())?;
    }
    let options = json!({ "strategy": strategies(a.strategy), "beta": a.beta, "ga": ga, "model": if a.ga.full { "exact" } else { "reduced" } });
    out.finish(run.manifest("optimize", &cfg, a.seeds.clone(), options, code))?;
    if infeasible {
        eprintln!("no feasible policy found for at least one strategy");
    }
    Ok(code)
}

fn default_betas() -> Vec<f64> {
    let mut v: Vec<f64> = (1..=10).map(|i| f64::from(i) / 10.0).collect();
    v.extend([0.35, 0.40]);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn sweep_rows(rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let g = genes_of(&r.policy);
            let mut row = vec![
                num(r.value),
                r.strategy.name().to_string(),
                opt(r.cost),
                opt(r.normalized),
                opt(r.direct_share),
                r.feasible.to_string(),
            ];
            row.extend(g.iter().map(|x| x.to_string()));
            row
        })
        .collect()
}

fn sweep(run: &Run, a: &SweepArgs) -> Result<u8> {
    let cfg = load(&a.config)?;
    let ga = a.ga.options(run.execution);
    let (name, values, rows) = match a.kind {
        SweepKind::Beta => {
            let values = a.values.clone().unwrap_or_else(default_betas);
            let eval = Evaluator::new(cfg.clone(), a.ga.model());
            let rows = beta_sweep(&eval, &OptProblem::new(Strategy::Hybrid), &values, &ga, a.seed)?;
            ("beta", values, rows)
        }
        SweepKind::Failure => {
            if !(0.0..=1.0).contains(&a.beta) {
                return Err(Error::Validation(format!("--beta {} outside [0, 1]", a.beta)).into());
            }
            let values = a.values.clone().unwrap_or_else(|| vec![0.01, 0.05, 0.2, 0.5]);
            let base = OptProblem {
                beta: a.beta,
                ..OptProblem::new(Strategy::Hybrid)
            };
            let rows = failure_sweep(&cfg, &a.ga.model(), &base, &values, &ga, a.seed)?;
            ("lambda_sat_yr", values, rows)
        }
    };
    let crossover = dominance_crossover(&rows);
    let infeasible = rows.iter().any(|r| r.strategy == Strategy::Hybrid && !r.feasible);
    let code = if infeasible { EXIT_INFEASIBLE } else { 0 };
    let mut out = OutDir::create(&a.out)?;
    let mut header = vec![name, "strategy", "cost", "normalized_cost", "direct_share", "feasible"];
    header.extend(optimize::GENE_NAMES);
    out.csv("sweep.csv", "sweep", &header, sweep_rows(&rows))?;
    out.json("sweep.json", &json!({ "kind": name, "values": values, "crossover": crossover, "rows": rows }))?;
    let options = json!({ "kind": name, "values": values, "beta": a.beta, "ga": ga, "model": if a.ga.full { "exact" } else { "reduced" } });
    out.finish(run.manifest("sweep", &cfg, vec![a.seed], options, code))?;
    for r in rows.iter().filter(|r| r.strategy == Strategy::Hybrid) {
        println!(
            "{name} {:<6} hybrid cost {} direct share {}",
            r.value,
            opt(r.cost),
            opt(r.direct_share)
        );
    }
    match crossover {
        Some(x) => println!("channel dominance crossover at {name} = {x:.4}"),
        None => println!("no channel dominance crossover in the swept range"),
    }
    Ok(code)
}
