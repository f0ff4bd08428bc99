//! Constrained policy search: a mixed-integer genetic algorithm with
//! feasibility-first ranking, pure-strategy restrictions, and the launch
//! discount and failure-rate sweeps.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::config::{PolicyParams, ScenarioConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hybrid::{solve_policy, HybridOptions};
use crate::metrics::{evaluate_policy_metrics, launch_capacity_check, MetricsReport};
use crate::orbital::OrbitPair;

/// Gene order: q_cd, q_ci, q_p, r_cd, r_ci, r_p, n_orbit_p, h_p (km).
pub type Genes = [i64; 8];

pub const GENE_NAMES: [&str; 8] = ["q_cd", "q_ci", "q_p", "r_cd", "r_ci", "r_p", "n_orbit_p", "h_p"];

pub fn genes_of(p: &PolicyParams) -> Genes {
    [
        i64::from(p.q_cd),
        i64::from(p.q_ci),
        i64::from(p.q_p),
        i64::from(p.r_cd),
        i64::from(p.r_ci),
        i64::from(p.r_p),
        i64::from(p.n_orbit_p),
        p.h_p.round() as i64,
    ]
}

pub fn policy_of(g: &Genes) -> PolicyParams {
    let u = |v: i64| v.max(0) as u32;
    PolicyParams {
        q_cd: u(g[0]),
        q_ci: u(g[1]),
        q_p: u(g[2]),
        r_cd: u(g[3]),
        r_ci: u(g[4]),
        r_p: u(g[5]),
        n_orbit_p: u(g[6]),
        h_p: g[7] as f64,
    }
}

/// Inclusive per-gene bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarBounds {
    pub lo: Genes,
    pub hi: Genes,
}

impl VarBounds {
    /// Decision ranges used for sampling and search.
    pub fn standard() -> Self {
        Self {
            lo: [1, 1, 1, 30, 30, 0, 1, 500],
            hi: [10, 10, 20, 45, 45, 10, 10, 1100],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..8 {
            if self.lo[i] > self.hi[i] {
                return Err(Error::validation(format!("empty range for {}", GENE_NAMES[i])));
            }
        }
        if self.lo[0] < 1 || self.lo[1] < 1 || self.lo[2] < 1 || self.lo[6] < 1 {
            return Err(Error::validation("order quantities and parking orbits must be at least 1"));
        }
        if self.lo[3] < 0 || self.lo[4] < 0 || self.lo[5] < 0 || self.lo[7] < 1 {
            return Err(Error::validation("reorder points and altitude must be non-negative"));
        }
        Ok(())
    }

    pub fn clamp(&self, g: &mut Genes) {
        for i in 0..8 {
            g[i] = g[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    fn fix(&mut self, i: usize, v: i64) {
        self.lo[i] = v;
        self.hi[i] = v;
    }
}

/// Channel restriction applied through the bounds; the evaluator is the
/// same for every strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Hybrid,
    DirectOnly,
    IndirectOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Hybrid, Strategy::DirectOnly, Strategy::IndirectOnly];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Hybrid => "hybrid",
            Strategy::DirectOnly => "direct",
            Strategy::IndirectOnly => "indirect",
        }
    }

    /// Direct-only keeps the smallest possible idle parking orbit and never
    /// triggers an indirect request above an empty plane; indirect-only only
    /// orders directly once a plane is empty.
    pub fn restrict(self, bounds: &VarBounds) -> VarBounds {
        let mut b = bounds.clone();
        match self {
            Strategy::Hybrid => {}
            Strategy::DirectOnly => {
                b.fix(1, 1);
                b.fix(2, 1);
                b.fix(4, 0);
                b.fix(5, 0);
                b.fix(6, 1);
            }
            Strategy::IndirectOnly => {
                b.fix(0, 1);
                b.fix(3, 0);
            }
        }
        b
    }
}

/// Solved (or rejected) candidate. Costs are at full direct launch price.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: Option<MetricsReport>,
    pub feasible: bool,
    /// Sum of normalized constraint violations; infinite when the solve failed.
    pub violation: f64,
    pub error: Option<String>,
}

/// Ranking key: feasible before infeasible, then cost or violation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub feasible: bool,
    pub cost: f64,
    pub violation: f64,
}

impl Score {
    pub fn better_than(&self, other: &Score) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.cost < other.cost,
            (false, false) => self.violation < other.violation,
        }
    }
}

/// Applies the direct launch price factor to a report priced at `beta = 1`.
pub fn reprice(report: &MetricsReport, cfg: &ScenarioConfig, beta: f64) -> MetricsReport {
    let mut r = report.clone();
    let rate_d = report.direct.tau_rc.map_or(0.0, |t| 1.0 / t);
    let launch_d = f64::from(cfg.constellation.n_orbit_c) * cfg.costs.c_full_d * rate_d;
    r.costs.launch -= (1.0 - beta) * launch_d;
    r.costs.total = r.costs.build + r.costs.hold + r.costs.launch + r.costs.transfer;
    r
}

/// Cached hybrid evaluator for one scenario (everything except the direct
/// launch price factor is fixed).
pub struct Evaluator {
    pub cfg: ScenarioConfig,
    pub options: HybridOptions,
    cache: Mutex<HashMap<Genes, Evaluation>>,
    solves: Mutex<usize>,
}

impl Evaluator {
    pub fn new(cfg: ScenarioConfig, options: HybridOptions) -> Self {
        Self {
            cfg,
            options,
            cache: Mutex::new(HashMap::new()),
            solves: Mutex::new(0),
        }
    }

    pub fn solves(&self) -> usize {
        *self.solves.lock().unwrap()
    }

    pub fn cached(&self, g: &Genes) -> Option<Evaluation> {
        self.cache.lock().unwrap().get(g).cloned()
    }

    fn compute(&self, g: &Genes) -> Evaluation {
        let policy = policy_of(g);
        let c = &self.cfg.constellation;
        let pair = match OrbitPair::from_altitudes(c.h_c, policy.h_p, c.incl) {
            Ok(p) => p,
            Err(e) => return failed(e),
        };
        let payload = launch_capacity_check(&policy, &self.cfg.costs, &pair);
        if payload.iter().any(|k| !k.satisfied) {
            // No solve needed to reject on payload.
            return Evaluation {
                report: None,
                feasible: false,
                violation: 1.0 + payload.iter().map(|k| k.violation()).sum::<f64>(),
                error: None,
            };
        }
        *self.solves.lock().unwrap() += 1;
        let result = solve_policy(&self.cfg, &policy, &self.options)
            .and_then(|sol| evaluate_policy_metrics(&self.cfg, &policy, &sol));
        match result {
            Ok(report) => {
                let violation: f64 = report.constraints.iter().map(|k| k.violation()).sum();
                Evaluation {
                    feasible: report.feasible,
                    violation,
                    report: Some(report),
                    error: None,
                }
            }
            Err(e) => failed(e),
        }
    }

    /// Evaluates every distinct gene vector once, in parallel when allowed.
    pub fn evaluate_all(&self, pop: &[Genes], exec: Execution) -> Vec<Evaluation> {
        let missing: Vec<Genes> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            pop.iter().filter(|g| !cache.contains_key(*g) && seen.insert(**g)).copied().collect()
        };
        let fresh = exec.map(&missing, |g| self.compute(g));
        let mut cache = self.cache.lock().unwrap();
        for (g, e) in missing.into_iter().zip(fresh) {
            cache.insert(g, e);
        }
        pop.iter().map(|g| cache[g].clone()).collect()
    }

    pub fn evaluate(&self, g: &Genes) -> Evaluation {
        self.evaluate_all(std::slice::from_ref(g), Execution::Sequential).remove(0)
    }
}

fn failed(e: Error) -> Evaluation {
    Evaluation {
        report: None,
        feasible: false,
        violation: f64::INFINITY,
        error: Some(e.to_string()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaOptions {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover: f64,
    pub mutation: f64,
    /// Best individuals copied unchanged into the next generation.
    pub elite: usize,
    /// Coordinate descent on the incumbent after the last generation.
    pub polish: bool,
    pub execution: Execution,
}

impl Default for GaOptions {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 100,
            tournament: 3,
            crossover: 0.9,
            mutation: 0.1,
            elite: 2,
            polish: true,
            execution: Execution::Parallel,
        }
    }
}

/// A search problem: scenario, bounds, channel restriction and price factor.
#[derive(Clone, Debug)]
pub struct OptProblem {
    pub bounds: VarBounds,
    pub strategy: Strategy,
    /// Multiplier on the direct launch price.
    pub beta: f64,
    /// Individuals inserted into the first generation.
    pub seeds: Vec<Genes>,
}

impl OptProblem {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            bounds: VarBounds::standard(),
            strategy,
            beta: 1.0,
            seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_cost: Option<f64>,
    pub best_violation: f64,
    pub mean_feasible_cost: Option<f64>,
    pub feasible: usize,
    pub solves: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptResult {
    pub strategy: Strategy,
    pub beta: f64,
    pub seed: u64,
    pub best_policy: PolicyParams,
    /// Metrics of the best individual at this problem's price factor.
    pub best: Option<MetricsReport>,
    pub feasible: bool,
    pub history: Vec<GenerationRecord>,
    /// Fresh hybrid solves triggered by this run.
    pub solves: usize,
    pub evaluations: usize,
}

fn score(e: &Evaluation, cfg: &ScenarioConfig, beta: f64) -> Score {
    let cost = e
        .report
        .as_ref()
        .map_or(f64::INFINITY, |r| reprice(r, cfg, beta).costs.total);
    Score {
        feasible: e.feasible,
        cost,
        violation: e.violation,
    }
}

fn random_genes(b: &VarBounds, rng: &mut ChaCha8Rng) -> Genes {
    let mut g = [0i64; 8];
    for i in 0..8 {
        g[i] = rng.random_range(b.lo[i]..=b.hi[i]);
    }
    g
}

fn mutate(g: &mut Genes, b: &VarBounds, p: f64, rng: &mut ChaCha8Rng) {
    for i in 0..8 {
        let span = b.hi[i] - b.lo[i];
        if span == 0 || !rng.random_bool(p) {
            continue;
        }
        let sigma = (0.1 * span as f64).max(1.0);
        let step = Normal::new(0.0, sigma).unwrap().sample(rng).round() as i64;
        let step = if step == 0 {
            if rng.random_bool(0.5) { 1 } else { -1 }
        } else {
            step
        };
        g[i] = (g[i] + step).clamp(b.lo[i], b.hi[i]);
    }
}

fn tournament(scores: &[Score], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.random_range(0..scores.len());
    for _ in 1..size.max(1) {
        let c = rng.random_range(0..scores.len());
        if scores[c].better_than(&scores[best]) {
            best = c;
        }
    }
    best
}

/// Runs the genetic search. Deterministic for a given seed, whatever the
/// execution mode.
pub fn optimize(eval: &Evaluator, problem: &OptProblem, ga: &GaOptions, seed: u64) -> Result<OptResult> {
    let bounds = problem.strategy.restrict(&problem.bounds);
    bounds.validate()?;
    if ga.population < 2 || ga.generations == 0 {
        return Err(Error::validation("population must be at least 2 and generations at least 1"));
    }
    let cfg = &eval.cfg;
    let beta = problem.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solves_before = eval.solves();

    let mut pop: Vec<Genes> = problem
        .seeds
        .iter()
        .take(ga.population)
        .map(|s| {
            let mut g = *s;
            bounds.clamp(&mut g);
            g
        })
        .collect();
    while pop.len() < ga.population {
        pop.push(random_genes(&bounds, &mut rng));
    }

    let mut history = Vec::with_capacity(ga.generations);
    let mut best: Option<(Genes, Score)> = None;
    let mut evaluations = 0;
    for generation in 0..ga.generations {
        let evals = eval.evaluate_all(&pop, ga.execution);
        evaluations += pop.len();
        let scores: Vec<Score> = evals.iter().map(|e| score(e, cfg, beta)).collect();
        for (g, s) in pop.iter().zip(&scores) {
            if best.as_ref().is_none_or(|(_, b)| s.better_than(b)) {
                best = Some((*g, *s));
            }
        }
        let feas: Vec<f64> = scores.iter().filter(|s| s.feasible).map(|s| s.cost).collect();
        let (_, b) = best.as_ref().unwrap();
        history.push(GenerationRecord {
            generation,
            best_cost: b.feasible.then_some(b.cost),
            best_violation: if b.feasible { 0.0 } else { b.violation },
            mean_feasible_cost: (!feas.is_empty()).then(|| feas.iter().sum::<f64>() / feas.len() as f64),
            feasible: feas.len(),
            solves: eval.solves() - solves_before,
        });
        if generation + 1 == ga.generations {
            break;
        }

        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| {
            if scores[a].better_than(&scores[b]) {
                std::cmp::Ordering::Less
            } else if scores[b].better_than(&scores[a]) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let mut next: Vec<Genes> = order.iter().take(ga.elite.min(pop.len())).map(|&i| pop[i]).collect();
        while next.len() < ga.population {
            let a = pop[tournament(&scores, ga.tournament, &mut rng)];
            let b = pop[tournament(&scores, ga.tournament, &mut rng)];
            let (mut c1, mut c2) = (a, b);
            if rng.random_bool(ga.crossover) {
                for i in 0..8 {
                    if rng.random_bool(0.5) {
                        c1[i] = b[i];
                        c2[i] = a[i];
                    }
                }
            }
            mutate(&mut c1, &bounds, ga.mutation, &mut rng);
            mutate(&mut c2, &bounds, ga.mutation, &mut rng);
            next.push(c1);
            if next.len() < ga.population {
                next.push(c2);
            }
        }
        pop = next;
    }

    let (mut g, mut s) = best.expect("at least one generation ran");
    if ga.polish && s.feasible {
        (g, s) = polish(eval, &bounds, beta, g, s, ga.execution);
    }
    let report = eval.cached(&g).and_then(|e| e.report).map(|r| reprice(&r, cfg, beta));
    Ok(OptResult {
        strategy: problem.strategy,
        beta,
        seed,
        best_policy: policy_of(&g),
        best: report,
        feasible: s.feasible,
        history,
        solves: eval.solves() - solves_before,
        evaluations,
    })
}

/// Descent over single-gene moves and joint unit moves of two genes; each
/// sweep evaluates all neighbours at once.
fn polish(eval: &Evaluator, bounds: &VarBounds, beta: f64, mut g: Genes, mut s: Score, exec: Execution) -> (Genes, Score) {
    loop {
        let mut neighbours = Vec::new();
        for i in 0..8 {
            let steps: &[i64] = if i == 7 { &[-40, -10, -3, -1, 1, 3, 10, 40] } else { &[-2, -1, 1, 2] };
            for d in steps {
                let mut n = g;
                n[i] += d;
                bounds.clamp(&mut n);
                if n != g {
                    neighbours.push(n);
                }
            }
        }
        let unit = |i: usize| if i == 7 { 10 } else { 1 };
        for i in 0..8 {
            for j in i + 1..8 {
                for (di, dj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                    let mut n = g;
                    n[i] += di * unit(i);
                    n[j] += dj * unit(j);
                    bounds.clamp(&mut n);
                    if n != g && !neighbours.contains(&n) {
                        neighbours.push(n);
                    }
                }
            }
        }
        let evals = eval.evaluate_all(&neighbours, exec);
        let mut moved = false;
        for (n, e) in neighbours.iter().zip(&evals) {
            let ns = score(e, &eval.cfg, beta);
            if ns.better_than(&s) {
                g = *n;
                s = ns;
                moved = true;
            }
        }
        if !moved {
            return (g, s);
        }
    }
}

/// Best of several independent seeds.
pub fn optimize_multistart(eval: &Evaluator, problem: &OptProblem, ga: &GaOptions, seeds: &[u64]) -> Result<Vec<OptResult>> {
    seeds.iter().map(|&s| optimize(eval, problem, ga, s)).collect()
}

pub fn best_of(results: &[OptResult]) -> Option<&OptResult> {
    results.iter().reduce(|a, b| {
        let sa = result_score(a);
        let sb = result_score(b);
        if sb.better_than(&sa) {
            b
        } else {
            a
        }
    })
}

fn result_score(r: &OptResult) -> Score {
    Score {
        feasible: r.feasible,
        cost: r.best.as_ref().map_or(f64::INFINITY, |m| m.costs.total),
        violation: if r.feasible { 0.0 } else { f64::INFINITY },
    }
}

/// One (sweep value, strategy) outcome.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub strategy: Strategy,
    pub cost: Option<f64>,
    /// Cost divided by the hybrid cost at the same sweep value.
    pub normalized: Option<f64>,
    pub direct_share: Option<f64>,
    pub feasible: bool,
    pub policy: PolicyParams,
}

/// Optimizes the pure strategies first and seeds the hybrid search with
/// their optima, so the hybrid never starts behind either channel.
fn sweep_point(eval: &Evaluator, base: &OptProblem, beta: f64, ga: &GaOptions, seed: u64, value: f64) -> Result<Vec<SweepRow>> {
    let mut results = Vec::new();
    for strategy in [Strategy::DirectOnly, Strategy::IndirectOnly] {
        let problem = OptProblem {
            strategy,
            beta,
            seeds: Vec::new(),
            bounds: base.bounds.clone(),
        };
        results.push(optimize(eval, &problem, ga, seed)?);
    }
    let hybrid = OptProblem {
        strategy: Strategy::Hybrid,
        beta,
        seeds: results.iter().map(|r| genes_of(&r.best_policy)).chain(base.seeds.iter().copied()).collect(),
        bounds: base.bounds.clone(),
    };
    results.insert(0, optimize(eval, &hybrid, ga, seed)?);
    let hybrid_cost = results[0].best.as_ref().map(|m| m.costs.total);
    Ok(results
        .into_iter()
        .map(|r| {
            let cost = r.best.as_ref().map(|m| m.costs.total);
            SweepRow {
                value,
                strategy: r.strategy,
                cost,
                normalized: cost.zip(hybrid_cost).map(|(c, h)| c / h),
                direct_share: r.best.as_ref().map(|m| m.direct_share),
                feasible: r.feasible,
                policy: r.best_policy,
            }
        })
        .collect())
}

/// Re-optimizes all three strategies for each direct launch price factor.
/// Candidate solves are shared across factors.
pub fn beta_sweep(eval: &Evaluator, base: &OptProblem, betas: &[f64], ga: &GaOptions, seed: u64) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &beta in betas {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::validation(format!("price factor {beta} outside [0, 1]")));
        }
        rows.extend(sweep_point(eval, base, beta, ga, seed, beta)?);
    }
    Ok(rows)
}

/// Re-optimizes all three strategies for each failure rate at a fixed price
/// factor.
pub fn failure_sweep(
    cfg: &ScenarioConfig,
    options: &HybridOptions,
    base: &OptProblem,
    lambdas: &[f64],
    ga: &GaOptions,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let mut c = cfg.clone();
        c.stochastic.lambda_sat_yr = lambda;
        c.stochastic.validate()?;
        let eval = Evaluator::new(c, options.clone());
        rows.extend(sweep_point(&eval, base, base.beta, ga, seed, lambda)?);
    }
    Ok(rows)
}

/// Price factor at which the hybrid optimum's direct share crosses one half,
/// by linear interpolation; `None` when it never crosses.
pub fn dominance_crossover(rows: &[SweepRow]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.strategy == Strategy::Hybrid)
        .filter_map(|r| r.direct_share.map(|s| (r.value, s)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if (y0 - 0.5) * (y1 - 0.5) <= 0.0 && y0 != y1 {
            return Some(x0 + (0.5 - y0) * (x1 - x0) / (y1 - y0));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gene_round_trip() {
        let p = ScenarioConfig::baseline().policy;
        assert_eq!(policy_of(&genes_of(&p)), p);
    }

    #[test]
    fn restrictions_fix_channel_genes() {
        let b = Strategy::DirectOnly.restrict(&VarBounds::standard());
        assert_eq!((b.lo[4], b.hi[4]), (0, 0));
        assert_eq!((b.lo[6], b.hi[6]), (1, 1));
        let b = Strategy::IndirectOnly.restrict(&VarBounds::standard());
        assert_eq!((b.lo[3], b.hi[3]), (0, 0));
        b.validate().unwrap();
    }

    #[test]
    fn feasibility_dominates_cost() {
        let f = Score { feasible: true, cost: 10.0, violation: 0.0 };
        let i = Score { feasible: false, cost: 1.0, violation: 0.1 };
        let j = Score { feasible: false, cost: 1.0, violation: 0.2 };
        assert!(f.better_than(&i));
        assert!(!i.better_than(&f));
        assert!(i.better_than(&j));
    }

    #[test]
    fn crossover_interpolates() {
        let row = |v: f64, s: f64| SweepRow {
            value: v,
            strategy: Strategy::Hybrid,
            cost: Some(1.0),
            normalized: Some(1.0),
            direct_share: Some(s),
            feasible: true,
            policy: ScenarioConfig::baseline().policy,
        };
        let rows = [row(0.5, 0.0), row(0.3, 1.0), row(0.4, 0.8)];
        let x = dominance_crossover(&rows).unwrap();
        assert!((x - (0.4 + 0.3 * 0.1 / 0.8)).abs() < 1e-12, "{x}");
        assert!(dominance_crossover(&rows[..1]).is_none());
    }

    #[test]
    fn reprice_only_touches_direct_launches() {
        let cfg = ScenarioConfig::baseline();
        let ev = Evaluator::new(cfg.clone(), HybridOptions::approximate());
        let e = ev.evaluate(&genes_of(&cfg.policy));
        let r = e.report.unwrap();
        let same = reprice(&r, &cfg, 1.0);
        assert!((same.costs.total - r.costs.total).abs() < 1e-15);
        let cheap = reprice(&r, &cfg, 0.5);
        assert!(cheap.costs.total <= r.costs.total);
        assert_eq!(cheap.costs.hold, r.costs.hold);
        assert_eq!(ev.solves(), 1);
        ev.evaluate(&genes_of(&cfg.policy));
        assert_eq!(ev.solves(), 1);
    }
}
