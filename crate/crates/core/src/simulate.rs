//! Monte Carlo oracle: every plane and parking orbit tracked individually on
//! the same step grid as the chains, with a shared parking pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{derive_time_grid, PolicyParams, ScenarioConfig, DAYS_PER_YEAR};
use crate::constellation::demand_batches;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Clone, Debug, Serialize)]
pub struct SimOptions {
    pub horizon_years: f64,
    /// Discarded start-up period.
    pub burn_in_years: f64,
    pub replications: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            horizon_years: 20.0,
            burn_in_years: 2.0,
            replications: 20,
            seed: 1,
            execution: Execution::Parallel,
        }
    }
}

/// Time averages of one replication.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SimMetrics {
    /// Mean plane stock.
    pub m_c: f64,
    /// Mean parking stock, batches.
    pub m_p: f64,
    /// Mean operational shortfall per plane.
    pub s_c: f64,
    /// Fraction of time a parking orbit is empty.
    pub p_stockout: f64,
    /// Mean days between direct orders of one plane (infinite if none).
    pub tau_rc_c: f64,
    /// Mean days between launches to one parking orbit (infinite if none).
    pub tau_rc_p: f64,
}

impl SimMetrics {
    fn fields(&self) -> [f64; 6] {
        [self.m_c, self.m_p, self.s_c, self.p_stockout, self.tau_rc_c, self.tau_rc_p]
    }

    fn from_fields(f: [f64; 6]) -> Self {
        Self {
            m_c: f[0],
            m_p: f[1],
            s_c: f[2],
            p_stockout: f[3],
            tau_rc_c: f[4],
            tau_rc_p: f[5],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimRun {
    pub horizon_years: f64,
    pub replications: usize,
    pub seed: u64,
    pub samples: Vec<SimMetrics>,
    pub mean: SimMetrics,
    /// Standard error of the mean across replications.
    pub stderr: SimMetrics,
}

/// An order in transit: fixed delay left, then a per-step arrival chance.
#[derive(Clone, Copy, Debug)]
struct Pending {
    delay: usize,
}

fn advance(order: &mut Option<Pending>, rho: f64, rng: &mut ChaCha8Rng) -> bool {
    match order {
        Some(p) if p.delay > 0 => {
            p.delay -= 1;
            false
        }
        Some(_) => {
            if rng.random::<f64>() < rho {
                *order = None;
                true
            } else {
                false
            }
        }
        None => false,
    }
}

/// Poisson draw by inversion; the per-step means here are small.
fn poisson(mean: f64, cap: usize, rng: &mut ChaCha8Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0;
    while u > cdf && k < cap {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

struct Layout {
    n_c: usize,
    n_p: usize,
    k_c: usize,
    /// Offset of each plane's alignment schedule.
    phase: Vec<usize>,
}

impl Layout {
    /// Plane `c` meets a parking orbit at steps `s` with
    /// `(s + phase_c) % k_c == 0`; which orbit follows from the full
    /// relative revolution of `n_p * k_c` steps.
    fn new(n_c: usize, n_p: usize, k_c: usize) -> Self {
        let period = (n_p * k_c) as f64;
        let phase = (0..n_c)
            .map(|c| ((c as f64 * period / n_c as f64).round() as usize) % (n_p * k_c))
            .collect();
        Self { n_c, n_p, k_c, phase }
    }

    fn parking_for(&self, c: usize, step: usize) -> Option<usize> {
        let s = step + self.phase[c];
        (s % self.k_c == 0).then(|| (s / self.k_c) % self.n_p)
    }
}

fn replicate(cfg: &ScenarioConfig, policy: &PolicyParams, opts: &SimOptions, rep: usize) -> Result<SimMetrics> {
    let grid = derive_time_grid(cfg, policy)?;
    let tau_mc = cfg.constellation.tau_mc;
    let n_bar = cfg.constellation.n_bar_sat as usize;
    let lay = Layout::new(cfg.constellation.n_orbit_c as usize, policy.n_orbit_p as usize, grid.k_c);
    let (q_cd, q_ci, q_p) = (policy.q_cd as usize, policy.q_ci as usize, policy.q_p as usize);
    let (r_cd, r_ci, r_p) = (policy.r_cd as usize, policy.r_ci as usize, policy.r_p as usize);

    // Independent substreams: failures and direct lead times per plane,
    // launch lead times per parking orbit.
    let stream = |id: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream((rep * (2 * lay.n_c + lay.n_p) + id) as u64);
        rng
    };
    let mut fail_rng: Vec<ChaCha8Rng> = (0..lay.n_c).map(stream).collect();
    let mut direct_rng: Vec<ChaCha8Rng> = (0..lay.n_c).map(|c| stream(lay.n_c + c)).collect();
    let mut park_rng: Vec<ChaCha8Rng> = (0..lay.n_p).map(|p| stream(2 * lay.n_c + p)).collect();

    // Start every orbit somewhere in its reorder cycle rather than full, so
    // slow cycles do not bias a finite horizon.
    let (lo_c, hi_c) = if r_ci >= r_cd { (r_ci, r_ci + q_ci) } else { (r_cd, r_cd + q_cd) };
    let mut x_c: Vec<usize> = fail_rng.iter_mut().map(|rng| rng.random_range(lo_c + 1..=hi_c)).collect();
    let n_sat_p = policy.n_sat_p();
    let cap_c = policy.n_sat_c();
    let mut x_p: Vec<usize> = park_rng
        .iter_mut()
        .map(|rng| rng.random_range(r_p.min(n_sat_p - 1) + 1..=n_sat_p))
        .collect();
    let mut direct: Vec<Option<Pending>> = vec![None; lay.n_c];
    let mut launch: Vec<Option<Pending>> = vec![None; lay.n_p];

    let steps_per_year = DAYS_PER_YEAR / tau_mc;
    let burn = (opts.burn_in_years * steps_per_year).round() as usize;
    let total = burn + (opts.horizon_years * steps_per_year).round() as usize;
    let (mut sum_c, mut sum_s, mut sum_p, mut empty) = (0.0, 0.0, 0.0, 0.0);
    let (mut orders_c, mut orders_p) = (0usize, 0usize);
    let mut aligned: Vec<(usize, usize)> = Vec::with_capacity(lay.n_c);

    for step in 1..=total {
        let measured = step > burn;
        for p in 0..lay.n_p {
            if advance(&mut launch[p], grid.rho_i, &mut park_rng[p]) {
                x_p[p] += q_p;
                debug_assert!(x_p[p] <= n_sat_p);
            }
        }
        for c in 0..lay.n_c {
            if advance(&mut direct[c], grid.rho_d, &mut direct_rng[c]) {
                x_c[c] += q_cd;
            }
            let up = x_c[c].min(n_bar);
            let lost = poisson(up as f64 * grid.lambda_step, n_bar, &mut fail_rng[c]);
            x_c[c] = x_c[c].saturating_sub(lost);
        }
        aligned.clear();
        for c in 0..lay.n_c {
            if let Some(p) = lay.parking_for(c, step) {
                aligned.push((c, p));
            }
        }
        for &(c, p) in &aligned {
            let want = demand_batches(x_c[c], r_ci, q_ci);
            let sent = want.min(x_p[p]);
            x_p[p] -= sent;
            x_c[c] += sent * q_ci;
        }
        debug_assert!(x_c.iter().all(|&x| x <= cap_c));
        for c in 0..lay.n_c {
            if direct[c].is_none() && x_c[c] <= r_cd {
                direct[c] = Some(Pending { delay: grid.m_d });
                if measured {
                    orders_c += 1;
                }
            }
        }
        for &(_, p) in &aligned {
            if launch[p].is_none() && x_p[p] <= r_p {
                launch[p] = Some(Pending { delay: grid.m_i });
                if measured {
                    orders_p += 1;
                }
            }
        }
        if measured {
            for &x in &x_c {
                sum_c += x as f64;
                sum_s += n_bar.saturating_sub(x) as f64;
            }
            for &x in &x_p {
                sum_p += x as f64;
                if x == 0 {
                    empty += 1.0;
                }
            }
        }
    }
    let n = (total - burn) as f64;
    let days = n * tau_mc;
    let per = |orders: usize, units: usize| {
        if orders == 0 {
            f64::INFINITY
        } else {
            days * units as f64 / orders as f64
        }
    };
    Ok(SimMetrics {
        m_c: sum_c / (n * lay.n_c as f64),
        m_p: sum_p / (n * lay.n_p as f64),
        s_c: sum_s / (n * lay.n_c as f64),
        p_stockout: empty / (n * lay.n_p as f64),
        tau_rc_c: per(orders_c, lay.n_c),
        tau_rc_p: per(orders_p, lay.n_p),
    })
}

/// Runs independent replications; bit-reproducible for a given seed in
/// either execution mode.
pub fn simulate(cfg: &ScenarioConfig, policy: &PolicyParams, opts: &SimOptions) -> Result<SimRun> {
    cfg.validate()?;
    policy.validate(&cfg.constellation)?;
    if !(opts.horizon_years >= 1.0) {
        return Err(Error::validation("horizon must be at least one year"));
    }
    if !(opts.burn_in_years >= 0.0) || opts.replications == 0 {
        return Err(Error::validation("burn-in must be non-negative and replications positive"));
    }
    let reps: Vec<usize> = (0..opts.replications).collect();
    let samples = opts
        .execution
        .map(&reps, |&r| replicate(cfg, policy, opts, r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = samples.len() as f64;
    let mut mean = [0.0; 6];
    for s in &samples {
        for (m, v) in mean.iter_mut().zip(s.fields()) {
            *m += v / n;
        }
    }
    let mut var = [0.0; 6];
    if samples.len() > 1 {
        for s in &samples {
            for ((v, x), m) in var.iter_mut().zip(s.fields()).zip(mean) {
                *v += (x - m).powi(2) / (n - 1.0);
            }
        }
    }
    let stderr = var.map(|v| (v / n).sqrt());
    Ok(SimRun {
        horizon_years: opts.horizon_years,
        replications: opts.replications,
        seed: opts.seed,
        samples,
        mean: SimMetrics::from_fields(mean),
        stderr: SimMetrics::from_fields(stderr),
    })
}

/// Sampling ranges for validation cases.
#[derive(Clone, Debug, Serialize)]
pub struct LhsBounds {
    pub lambda: (f64, f64),
    pub tau_lv: (f64, f64),
    pub mu_lv: (f64, f64),
    pub q_c: (u32, u32),
    pub q_p: (u32, u32),
    pub r_c: (u32, u32),
    pub r_p: (u32, u32),
    pub h_p: (f64, f64),
    pub n_orbit_p: (u32, u32),
}

impl Default for LhsBounds {
    fn default() -> Self {
        Self {
            lambda: (0.001, 0.5),
            tau_lv: (0.0, 60.0),
            mu_lv: (5.0, 60.0),
            q_c: (1, 10),
            q_p: (1, 20),
            r_c: (30, 45),
            r_p: (0, 10),
            h_p: (500.0, 1100.0),
            n_orbit_p: (1, 10),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LhsCase {
    pub index: usize,
    pub cfg: ScenarioConfig,
    /// Some sampled value had to be moved to make the case valid.
    pub repaired: bool,
    /// Parking-side comparisons are not meaningful: the direct channel
    /// triggers well above the indirect one.
    pub excluded_parking: bool,
}

/// Latin hypercube sample over `bounds`, applied to `base`.
pub fn lhs_sample(base: &ScenarioConfig, bounds: &LhsBounds, n_cases: usize, seed: u64) -> Result<Vec<LhsCase>> {
    let real = [bounds.lambda, bounds.tau_lv, bounds.tau_lv, bounds.mu_lv, bounds.mu_lv, bounds.h_p];
    let int = [bounds.q_c, bounds.q_c, bounds.q_p, bounds.r_c, bounds.r_c, bounds.r_p, bounds.n_orbit_p];
    if real.iter().any(|(lo, hi)| !(lo <= hi)) || int.iter().any(|(lo, hi)| lo > hi) {
        return Err(Error::validation("sampling range is empty"));
    }
    if n_cases == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = real.len() + int.len();
    // One stratified, shuffled column per dimension.
    let columns: Vec<Vec<f64>> = (0..dims)
        .map(|_| {
            let mut strata: Vec<f64> = (0..n_cases)
                .map(|i| (i as f64 + rng.random::<f64>()) / n_cases as f64)
                .collect();
            for i in (1..n_cases).rev() {
                let j = rng.random_range(0..=i);
                strata.swap(i, j);
            }
            strata
        })
        .collect();
    let mut cases = Vec::with_capacity(n_cases);
    for i in 0..n_cases {
        let r = |d: usize| {
            let (lo, hi) = real[d];
            lo + columns[d][i] * (hi - lo)
        };
        let k = |d: usize| {
            let (lo, hi) = int[d];
            // Equal-width bins, one per integer.
            let span = (hi - lo + 1) as f64;
            (lo + (columns[real.len() + d][i] * span).floor() as u32).min(hi)
        };
        let mut cfg = base.clone();
        cfg.stochastic.lambda_sat_yr = r(0);
        cfg.stochastic.tau_lv_d = r(1);
        cfg.stochastic.tau_lv_i = r(2);
        cfg.stochastic.mu_lv_d = r(3);
        cfg.stochastic.mu_lv_i = r(4);
        let mut h_p = r(5).round();
        let mut repaired = false;
        if h_p >= cfg.constellation.h_c {
            h_p = cfg.constellation.h_c - 1.0;
            repaired = true;
        }
        cfg.policy = PolicyParams {
            q_cd: k(0),
            q_ci: k(1),
            q_p: k(2),
            r_cd: k(3),
            r_ci: k(4),
            r_p: k(5),
            n_orbit_p: k(6),
            h_p,
        };
        cfg.validate()?;
        let excluded_parking = cfg.policy.r_cd > cfg.policy.r_ci + 4;
        cases.push(LhsCase {
            index: i,
            cfg,
            repaired,
            excluded_parking,
        });
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> SimOptions {
        SimOptions {
            horizon_years: 2.0,
            burn_in_years: 0.5,
            replications: 2,
            seed: 7,
            execution: Execution::Sequential,
        }
    }

    #[test]
    fn failure_free_keeps_stock() {
        let mut cfg = ScenarioConfig::baseline();
        cfg.stochastic.lambda_sat_yr = 0.0;
        let run = simulate(&cfg, &cfg.policy, &short()).unwrap();
        assert_eq!(run.mean.s_c, 0.0);
        // Stock never moves from its starting level inside the reorder cycle.
        let p = &cfg.policy;
        assert!(run.mean.m_c > p.r_ci.max(p.r_cd) as f64 && run.mean.m_c <= p.n_sat_c() as f64);
        let planes = cfg.constellation.n_orbit_c as f64;
        for s in &run.samples {
            let total = s.m_c * planes;
            assert!((total - total.round()).abs() < 1e-6, "{total}");
        }
        assert_eq!(run.mean.p_stockout, 0.0);
        assert!(run.mean.tau_rc_c.is_infinite());
    }

    #[test]
    fn same_seed_same_answer() {
        let cfg = ScenarioConfig::baseline();
        let a = simulate(&cfg, &cfg.policy, &short()).unwrap();
        let b = simulate(&cfg, &cfg.policy, &SimOptions { execution: Execution::Parallel, ..short() }).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = simulate(&cfg, &cfg.policy, &SimOptions { seed: 8, ..short() }).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn immediate_single_replacement() {
        let mut cfg = ScenarioConfig::baseline();
        cfg.stochastic.lambda_sat_yr = 0.18;
        cfg.stochastic.tau_lv_d = 0.0;
        cfg.stochastic.mu_lv_d = 1e-6;
        let n_bar = cfg.constellation.n_bar_sat;
        cfg.policy = PolicyParams {
            q_cd: 1,
            r_cd: n_bar - 1,
            q_ci: 1,
            r_ci: 0,
            q_p: 1,
            r_p: 0,
            ..cfg.policy
        };
        let grid = derive_time_grid(&cfg, &cfg.policy).unwrap();
        assert_eq!((grid.m_d, grid.rho_d), (0, 1.0));
        let opts = SimOptions {
            horizon_years: 10.0,
            replications: 4,
            ..short()
        };
        let run = simulate(&cfg, &cfg.policy, &opts).unwrap();
        // Failures of one step are all that is ever missing.
        let one_step = f64::from(n_bar) * grid.lambda_step;
        assert!((run.mean.s_c / one_step - 1.0).abs() < 0.05, "{} vs {one_step}", run.mean.s_c);
    }

    #[test]
    fn alignment_schedule() {
        let lay = Layout::new(40, 10, 51);
        for c in 0..40 {
            let hits: Vec<usize> = (1..=2000).filter(|&s| lay.parking_for(c, s).is_some()).collect();
            assert!(hits.windows(2).all(|w| w[1] - w[0] == 51));
        }
        // A plane visits the parking orbits in turn.
        let seq: Vec<usize> = (1..=51 * 12).filter_map(|s| lay.parking_for(0, s)).collect();
        assert_eq!(seq.len(), 12);
        assert!(seq.windows(2).all(|w| (w[0] + 1) % 10 == w[1]));
    }

    #[test]
    fn lhs_strata_and_bounds() {
        let base = ScenarioConfig::baseline();
        let b = LhsBounds::default();
        let cases = lhs_sample(&base, &b, 20, 3).unwrap();
        assert_eq!(cases.len(), 20);
        let mut bins = vec![0; 20];
        for c in &cases {
            let l = c.cfg.stochastic.lambda_sat_yr;
            assert!((b.lambda.0..=b.lambda.1).contains(&l));
            bins[((l - b.lambda.0) / (b.lambda.1 - b.lambda.0) * 20.0).min(19.0) as usize] += 1;
            assert!((1..=10).contains(&c.cfg.policy.n_orbit_p));
            assert!((30..=45).contains(&c.cfg.policy.r_cd));
        }
        assert!(bins.iter().all(|&n| n == 1));
        let one = lhs_sample(&base, &b, 1, 3).unwrap();
        assert_eq!(one.len(), 1);
        let mut fixed = b.clone();
        fixed.lambda = (0.1, 0.1);
        fixed.q_p = (4, 4);
        for c in lhs_sample(&base, &fixed, 5, 1).unwrap() {
            assert_eq!(c.cfg.stochastic.lambda_sat_yr, 0.1);
            assert_eq!(c.cfg.policy.q_p, 4);
        }
        let mut bad = b;
        bad.r_p = (5, 1);
        assert!(lhs_sample(&base, &bad, 3, 1).is_err());
    }
}
