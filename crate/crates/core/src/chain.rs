//! Periodic chain numerics shared by the constellation and parking layers:
//! block assembly of the IO/LT state, the periodic stationary solve, cycle
//! propagation and replenishment-cycle statistics.
//!
//! A layer state is the concatenation of weighted sub-distributions
//! `(io, lt_0, ..., lt_s)`, each over the same stock [`Levels`]. Block 0 is the
//! inter-order phase; blocks `1..` are the lead-time stages, the last one
//! being the memoryless tail that exits with probability `rho` per step.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, BlockBuilder, SparseMatrix, TransitionMatrix};
use crate::stochastic::Levels;

/// Shape of a block state vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub levels: Levels,
    /// IO block plus every lead-time stage.
    pub n_blocks: usize,
}

impl BlockLayout {
    pub fn dim(&self) -> usize {
        self.levels.dim() * self.n_blocks
    }

    pub fn block(&self) -> usize {
        self.levels.dim()
    }

    /// Sums all blocks into one stock distribution.
    pub fn marginal(&self, x: &[f64]) -> Vec<f64> {
        let b = self.block();
        let mut out = vec![0.0; b];
        for chunk in x.chunks(b) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    /// Total weight of the IO block and of all lead-time blocks.
    pub fn phase_weights(&self, x: &[f64]) -> (f64, f64) {
        let b = self.block();
        let io: f64 = x[..b].iter().sum();
        let lt: f64 = x[b..].iter().sum();
        (io, lt)
    }
}

/// Regular-step and alignment-step block matrices of one layer.
#[derive(Clone, Debug)]
pub struct TransitionBundle {
    pub layout: BlockLayout,
    pub reg: TransitionMatrix,
    pub raan: TransitionMatrix,
    /// Steps per alignment cycle; the last one uses `raan`.
    pub k_cycle: usize,
}

impl TransitionBundle {
    pub fn new(layout: BlockLayout, reg: TransitionMatrix, raan: TransitionMatrix, k_cycle: usize) -> Result<Self> {
        if reg.dim() != layout.dim() || raan.dim() != layout.dim() {
            return Err(Error::dimension(format!(
                "block matrices of size {} and {} do not match layout size {}",
                reg.dim(),
                raan.dim(),
                layout.dim()
            )));
        }
        if k_cycle == 0 {
            return Err(Error::dimension("cycle length must be at least one step"));
        }
        Ok(Self {
            layout,
            reg,
            raan,
            k_cycle,
        })
    }

    /// Worst deviation from column-stochasticity across both matrices.
    pub fn stochasticity_error(&self) -> f64 {
        self.reg
            .stochasticity_error()
            .max(self.raan.stochasticity_error())
    }

    /// One full cycle `raan * reg^(k-1) * x`.
    pub fn apply_cycle(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = vec![0.0; x.len()];
        for _ in 1..self.k_cycle {
            self.reg.mul_vec_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        self.raan.mul_vec_into(&cur, &mut next);
        next
    }

    /// `|| P_trn x - x ||_inf`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        linalg::max_abs_diff(&self.apply_cycle(x), x)
    }
}

/// Operators describing one layer's dynamics, from which the block matrices
/// are assembled.
#[derive(Clone, Debug)]
pub struct LayerOps {
    pub levels: Levels,
    /// Per-step stock change applied to every block (failures).
    pub step: SparseMatrix,
    /// Keeps stock above the reorder point (IO) and at or below it (new order).
    pub c_plus: SparseMatrix,
    pub c_minus: SparseMatrix,
    /// Delivery of an arriving order.
    pub arrival: SparseMatrix,
    /// Per-step exit probability of the final lead-time stage.
    pub rho: f64,
    /// Step counts of the lead-time stages; all ones for the exact model.
    pub stages: Vec<usize>,
    /// Whether orders are reviewed on regular steps (continuous review) or
    /// only at alignments (periodic review).
    pub review_every_step: bool,
}

impl LayerOps {
    pub fn layout(&self) -> BlockLayout {
        BlockLayout {
            levels: self.levels,
            n_blocks: self.stages.len() + 2,
        }
    }

    /// Assembles the step matrix. `post` is applied to every block after the
    /// step's failures (the alignment event); `review` toggles the split of
    /// the entry flow into IO and a new lead-time phase.
    pub fn assemble(&self, post: Option<&SparseMatrix>, review: bool) -> SparseMatrix {
        let layout = self.layout();
        let n = layout.n_blocks;
        let s = self.stages.len();
        let last = n - 1;
        let lift = |m: &SparseMatrix| match post {
            Some(p) => p.mul(m),
            None => m.clone(),
        };
        let mut b = BlockBuilder::new(layout.block(), n);

        // Entry flow: the IO block plus arrivals leaving the final stage.
        let from_io = lift(&self.step);
        let from_arrival = lift(&self.step.mul(&self.arrival));
        if review {
            b.add(0, 0, &self.c_plus.mul(&from_io), 1.0);
            b.add(1, 0, &self.c_minus.mul(&from_io), 1.0);
            b.add(0, last, &self.c_plus.mul(&from_arrival), self.rho);
            b.add(1, last, &self.c_minus.mul(&from_arrival), self.rho);
        } else {
            b.add(0, 0, &from_io, 1.0);
            b.add(0, last, &from_arrival, self.rho);
        }

        let hold = lift(&SparseMatrix::identity(layout.block()));
        let mut powers: Vec<(usize, SparseMatrix)> = Vec::new();
        for (l, &m_l) in self.stages.iter().enumerate() {
            let adv = match powers.iter().find(|(m, _)| *m == m_l) {
                Some((_, p)) => p.clone(),
                None => {
                    let p = lift(&self.step.pow(m_l));
                    powers.push((m_l, p.clone()));
                    p
                }
            };
            // Stage l occupies block l + 1 and advances into block l + 2.
            b.add(l + 2, l + 1, &adv, 1.0 / m_l as f64);
            b.add(l + 1, l + 1, &hold, 1.0 - 1.0 / m_l as f64);
        }
        debug_assert_eq!(last, s + 1);
        b.add(last, last, &lift(&self.step), 1.0 - self.rho);
        b.build()
    }
}

/// Which algorithm solves the periodic stationary equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Direct solve for small or cheap-to-form systems, Krylov otherwise.
    #[default]
    Auto,
    /// Form the cycle matrix and LU-solve with a normalization term.
    Dense,
    /// Matrix-free restarted GMRES on the cycle operator.
    Krylov,
    /// Matrix-free power iteration.
    Power,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Required `|| P_trn x - x ||_inf` after the solve.
    pub residual_tol: f64,
    /// Largest state dimension handled by the direct solve.
    pub dense_limit: usize,
    /// Flop budget for forming the cycle matrix in `Auto` mode.
    pub dense_budget: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            residual_tol: 1e-11,
            dense_limit: 2000,
            dense_budget: 4e8,
            restart: 120,
            max_iterations: 20_000,
        }
    }
}

/// Result of a periodic stationary solve.
#[derive(Clone, Debug)]
pub struct Stationary {
    /// Start-of-cycle state, normalized.
    pub pi1: Vec<f64>,
    pub residual: f64,
    pub method: SolverMethod,
    pub iterations: usize,
}

/// Periodic stationary solver for one bundle. Keeps the dense power of the
/// regular matrix so that repeated solves with a changing alignment matrix
/// (fixed-point iteration) only pay for it once.
#[derive(Default)]
pub struct PeriodicSolver {
    reg_power: Option<DMatrix<f64>>,
    factor: Option<LuFactor>,
}

impl PeriodicSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets cached data; call when the regular matrix changes.
    pub fn reset(&mut self) {
        self.reg_power = None;
        self.factor = None;
    }

    fn dense_cost(&self, bundle: &TransitionBundle) -> f64 {
        if self.reg_power.is_some() {
            return 0.0;
        }
        let d = bundle.layout.dim() as f64;
        let by_vectors = d * (bundle.k_cycle.saturating_sub(1)) as f64 * bundle.reg.nnz() as f64;
        let mults = 2.0 * (bundle.k_cycle.max(2) as f64).log2().ceil();
        // Dense products run several times faster per flop than sparse loops.
        let by_squaring = 0.25 * mults * d * d * d;
        by_vectors.min(by_squaring)
    }

    fn choose(&self, bundle: &TransitionBundle, opts: &SolverOptions) -> SolverMethod {
        match opts.method {
            SolverMethod::Auto => {
                let d = bundle.layout.dim();
                if d <= opts.dense_limit && self.dense_cost(bundle) <= opts.dense_budget {
                    SolverMethod::Dense
                } else {
                    SolverMethod::Krylov
                }
            }
            m => m,
        }
    }

    /// Solves `pi1 = raan * reg^(k-1) * pi1` with `1 . pi1 = 1`.
    ///
    /// `anchor` is the normalized vector used in the rank-one normalization
    /// term (and the starting point of the iterative methods); it selects
    /// the answer when the stationary distribution is not unique.
    pub fn solve(&mut self, bundle: &TransitionBundle, anchor: &[f64], opts: &SolverOptions) -> Result<Stationary> {
        let d = bundle.layout.dim();
        if anchor.len() != d {
            return Err(Error::dimension(format!(
                "start vector has length {} but the chain has {d} states",
                anchor.len()
            )));
        }
        let method = self.choose(bundle, opts);
        let attempt = match method {
            SolverMethod::Dense => self.solve_dense(bundle, anchor, opts),
            SolverMethod::Krylov => solve_krylov(bundle, anchor, opts),
            SolverMethod::Power | SolverMethod::Auto => solve_power(bundle, anchor, opts),
        };
        match attempt {
            Ok(sol) if sol.residual <= opts.residual_tol => Ok(sol),
            first => {
                // The normalization trick fails for chains with several
                // closed classes; power iteration from the anchor still
                // finds the stationary state reached from it.
                let mut best = first.ok();
                if method != SolverMethod::Power {
                    // Restart from the failed answer only when it is close.
                    let start = match best.as_ref() {
                        Some(s) if s.residual < 1e-6 => &s.pi1[..],
                        _ => anchor,
                    };
                    if let Ok(p) = solve_power(bundle, start, opts) {
                        if best.as_ref().is_none_or(|b| p.residual < b.residual) {
                            best = Some(p);
                        }
                    }
                }
                match best {
                    Some(sol) if sol.residual <= opts.residual_tol => Ok(sol),
                    Some(sol) => Err(Error::NonConvergence {
                        iterations: sol.iterations,
                        residual: sol.residual,
                    }),
                    None => Err(Error::NonConvergence {
                        iterations: opts.max_iterations,
                        residual: f64::INFINITY,
                    }),
                }
            }
        }
    }

    fn ensure_reg_power(&mut self, bundle: &TransitionBundle) {
        if self.reg_power.as_ref().is_some_and(|q| q.nrows() == bundle.layout.dim()) {
            return;
        }
        let d = bundle.layout.dim();
        let k = bundle.k_cycle;
        let by_vectors = d as f64 * (k - 1) as f64 * bundle.reg.nnz() as f64;
        let mults = 2.0 * (k.max(2) as f64).log2().ceil();
        let q = if by_vectors <= 0.25 * mults * (d as f64).powi(3) {
            let mut q = DMatrix::<f64>::zeros(d, d);
            let mut cur = vec![0.0; d];
            let mut next = vec![0.0; d];
            for j in 0..d {
                cur.iter_mut().for_each(|v| *v = 0.0);
                cur[j] = 1.0;
                for _ in 1..k {
                    bundle.reg.mul_vec_into(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
                q.column_mut(j).copy_from_slice(&cur);
            }
            q
        } else {
            dense_power(&to_dense(&bundle.reg), k - 1)
        };
        self.reg_power = Some(q);
        self.factor = None;
    }

    /// State at the last step of the cycle, `reg^(k-1) x`, using the cached
    /// dense power when there is one.
    pub fn last_step_state(&self, bundle: &TransitionBundle, x: &[f64]) -> Vec<f64> {
        match &self.reg_power {
            Some(q) if q.nrows() == x.len() => (q * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec(),
            _ => {
                let mut cur = x.to_vec();
                let mut next = vec![0.0; x.len()];
                for _ in 1..bundle.k_cycle {
                    bundle.reg.mul_vec_into(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
                cur
            }
        }
    }

    /// `P_trn x` through the cached dense regular power.
    fn apply_cached(&self, bundle: &TransitionBundle, x: &[f64]) -> Vec<f64> {
        let q = self.reg_power.as_ref().expect("regular power is formed first");
        let qx = q * nalgebra::DVector::from_column_slice(x);
        bundle.raan.mul_vec(qx.as_slice())
    }

    /// Refines `x` towards `A x = u`, `A = I - P + u 1^T`, preconditioned by a
    /// factorization of a nearby `A`. Returns the stationarity residual.
    fn refine(&self, bundle: &TransitionBundle, lu: &LuFactor, anchor: &[f64], x: &mut Vec<f64>, max_steps: usize, tol: f64) -> (f64, usize) {
        let mut residual = f64::INFINITY;
        let mut steps = 0;
        while steps < max_steps {
            let px = self.apply_cached(bundle, x);
            let s: f64 = x.iter().sum();
            residual = px.iter().zip(x.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / s.abs().max(f64::MIN_POSITIVE);
            if residual <= tol {
                break;
            }
            let r: Vec<f64> = (0..x.len()).map(|i| anchor[i] - (x[i] - px[i] + anchor[i] * s)).collect();
            match lu.solve(&nalgebra::DVector::from_vec(r)) {
                Some(dx) => x.iter_mut().zip(dx.iter()).for_each(|(xi, d)| *xi += d),
                None => break,
            }
            steps += 1;
        }
        (residual, steps)
    }

    fn solve_dense(&mut self, bundle: &TransitionBundle, anchor: &[f64], opts: &SolverOptions) -> Result<Stationary> {
        let d = bundle.layout.dim();
        let target = opts.residual_tol * 0.1;
        self.ensure_reg_power(bundle);
        if let Some(lu) = self.factor.take() {
            // Reuse the previous factorization while it still contracts.
            let mut x = anchor.to_vec();
            let (residual, steps) = self.refine(bundle, &lu, anchor, &mut x, 8, target);
            self.factor = Some(lu);
            if residual <= target {
                return self.finish(bundle, x, steps);
            }
        }
        let q = self.reg_power.as_ref().unwrap();
        let mut a = DMatrix::<f64>::zeros(d, d);
        let mut col = vec![0.0; d];
        for j in 0..d {
            bundle.raan.mul_vec_into(q.column(j).as_slice(), &mut col);
            for i in 0..d {
                a[(i, j)] = anchor[i] - col[i];
            }
            a[(j, j)] += 1.0;
        }
        let lu = a.lu();
        let pivots = lu.u().diagonal().map(f64::abs);
        if pivots.min() <= 1e-13 * pivots.max() {
            return Err(Error::Singular("cycle matrix has several closed classes".into()));
        }
        let mut x = lu
            .solve(&nalgebra::DVector::from_column_slice(anchor))
            .ok_or_else(|| Error::Singular("cycle matrix has several closed classes".into()))?
            .as_slice()
            .to_vec();
        let (_, steps) = self.refine(bundle, &lu, anchor, &mut x, 3, target);
        self.factor = Some(lu);
        self.finish(bundle, x, steps + 1)
    }

    fn finish(&self, bundle: &TransitionBundle, x: Vec<f64>, iterations: usize) -> Result<Stationary> {
        // A nearly singular system can return a signed vector that still
        // satisfies the equation; that is not a distribution.
        let mass: f64 = x.iter().sum();
        let negative: f64 = x.iter().filter(|v| **v < 0.0).sum();
        let valid = mass.is_finite() && mass > 0.0 && -negative <= 1e-9 * mass;
        let pi1 = normalize(x);
        let residual = if valid {
            linalg::max_abs_diff(&self.apply_cached(bundle, &pi1), &pi1)
        } else {
            f64::INFINITY
        };
        Ok(Stationary {
            pi1,
            residual,
            method: SolverMethod::Dense,
            iterations,
        })
    }
}

type LuFactor = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

fn to_dense(m: &SparseMatrix) -> DMatrix<f64> {
    let d = m.dim();
    let mut out = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        for (i, v) in m.column(j) {
            out[(i, j)] += v;
        }
    }
    out
}

fn dense_power(m: &DMatrix<f64>, mut exp: usize) -> DMatrix<f64> {
    let mut result: Option<DMatrix<f64>> = None;
    let mut base = m.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = Some(match result {
                Some(r) => &base * &r,
                None => base.clone(),
            });
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    result.unwrap_or_else(|| DMatrix::identity(m.nrows(), m.ncols()))
}

/// Clamps round-off negatives and rescales to unit mass.
fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
    x
}

fn solve_power(bundle: &TransitionBundle, start: &[f64], opts: &SolverOptions) -> Result<Stationary> {
    let mut x = normalize(start.to_vec());
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let next = bundle.apply_cycle(&x);
        residual = linalg::max_abs_diff(&next, &x);
        x = next;
        if residual <= opts.residual_tol * 0.1 {
            let pi1 = normalize(x);
            let residual = bundle.residual(&pi1);
            return Ok(Stationary {
                pi1,
                residual,
                method: SolverMethod::Power,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn solve_krylov(bundle: &TransitionBundle, anchor: &[f64], opts: &SolverOptions) -> Result<Stationary> {
    let d = bundle.layout.dim();
    let apply = |v: &[f64]| -> Vec<f64> {
        let pv = bundle.apply_cycle(v);
        let s: f64 = v.iter().sum();
        v.iter()
            .zip(&pv)
            .zip(anchor)
            .map(|((vi, pi), ui)| vi - pi + ui * s)
            .collect()
    };
    let b = anchor.to_vec();
    let mut x = anchor.to_vec();
    let restart = opts.restart.clamp(1, d.max(1));
    let mut matvecs = 0;
    let mut residual = bundle.residual(&normalize(x.clone()));
    while matvecs < opts.max_iterations {
        let ax = apply(&x);
        matvecs += 1;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta == 0.0 {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        for j in 0..restart {
            let mut w = apply(&basis[j]);
            matvecs += 1;
            let mut col = vec![0.0; j + 2];
            // Modified Gram-Schmidt, applied twice for stability.
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    col[i] += hij;
                    w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
                }
            }
            let wn = norm2(&w);
            col[j + 1] = wn;
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            let done = g[j + 1].abs() <= 1e-15 * norm2(&b) || wn == 0.0;
            if done || j + 1 == restart || matvecs >= opts.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // Back-substitution on the triangularized Hessenberg system.
        let m = h.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut acc = g[i];
            for (k, yk) in y.iter().enumerate().take(m).skip(i + 1) {
                acc -= h[k][i] * yk;
            }
            y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
        }
        for (k, yk) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[k]).for_each(|(xi, vi)| *xi += yk * vi);
        }
        residual = bundle.residual(&normalize(x.clone()));
        if residual <= opts.residual_tol * 0.1 {
            break;
        }
    }
    let pi1 = normalize(x);
    let residual_final = bundle.residual(&pi1);
    if !residual_final.is_finite() {
        return Err(Error::NonConvergence {
            iterations: matvecs,
            residual,
        });
    }
    Ok(Stationary {
        pi1,
        residual: residual_final,
        method: SolverMethod::Krylov,
        iterations: matvecs,
    })
}

/// Convenience wrapper: solve once with a fresh solver.
pub fn solve_periodic_stationary(bundle: &TransitionBundle, anchor: &[f64], opts: &SolverOptions) -> Result<Stationary> {
    PeriodicSolver::new().solve(bundle, anchor, opts)
}

/// One step of a layer's cycle with the state split into phases.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleState {
    /// Position in the cycle, 1-based.
    pub k: usize,
    pub io: Vec<f64>,
    pub lt: Vec<Vec<f64>>,
}

impl CycleState {
    pub fn from_flat(layout: &BlockLayout, x: &[f64], k: usize) -> Self {
        let b = layout.block();
        let mut chunks = x.chunks(b).map(<[f64]>::to_vec);
        let io = chunks.next().unwrap_or_default();
        Self {
            k,
            io,
            lt: chunks.collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.io.clone();
        for lt in &self.lt {
            out.extend_from_slice(lt);
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.io.iter().sum::<f64>() + self.lt.iter().flatten().sum::<f64>()
    }

    pub fn marginal(&self) -> Vec<f64> {
        let mut m = self.io.clone();
        for lt in &self.lt {
            m.iter_mut().zip(lt).for_each(|(a, b)| *a += b);
        }
        m
    }
}

/// States at every step `k = 1..=k_cycle` of the stationary cycle.
pub fn propagate_cycle(bundle: &TransitionBundle, pi1: &[f64]) -> Vec<CycleState> {
    let mut out = Vec::with_capacity(bundle.k_cycle);
    let mut cur = pi1.to_vec();
    for k in 1..=bundle.k_cycle {
        out.push(CycleState::from_flat(&bundle.layout, &cur, k));
        if k < bundle.k_cycle {
            cur = bundle.reg.mul_vec(&cur);
        }
    }
    out
}

/// Average stock distribution over one cycle.
pub fn cycle_average(states: &[CycleState]) -> Vec<f64> {
    let n = states.len() as f64;
    let mut avg = vec![0.0; states.first().map_or(0, |s| s.io.len())];
    for s in states {
        avg.iter_mut().zip(s.marginal()).for_each(|(a, m)| *a += m / n);
    }
    avg
}

/// Replenishment-cycle timing of one channel.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CycleStats {
    pub c_io: f64,
    pub c_lt: f64,
    /// Mean lead-time duration, days.
    pub tau_lt: f64,
    /// Mean inter-order duration, days (infinite when orders never occur).
    pub tau_io: f64,
    pub tau_rc: f64,
}

impl CycleStats {
    pub fn from_weights(c_io: f64, c_lt: f64, m: usize, tau_mc: f64, mu_lv: f64) -> Self {
        let tau_lt = m as f64 * tau_mc + mu_lv;
        let (tau_io, tau_rc) = if c_lt > 0.0 {
            let tau_io = c_io / c_lt * tau_lt;
            (tau_io, tau_lt + tau_io)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Self {
            c_io,
            c_lt,
            tau_lt,
            tau_io,
            tau_rc,
        }
    }

    /// Orders per day, zero for a channel that is never used.
    pub fn order_rate(&self) -> f64 {
        if self.tau_rc.is_finite() {
            1.0 / self.tau_rc
        } else {
            0.0
        }
    }
}

pub fn cycle_stats(states: &[CycleState], m: usize, tau_mc: f64, mu_lv: f64) -> CycleStats {
    let c_io: f64 = states.iter().map(|s| s.io.iter().sum::<f64>()).sum();
    let c_lt: f64 = states.iter().map(|s| s.lt.iter().flatten().sum::<f64>()).sum();
    CycleStats::from_weights(c_io, c_lt, m, tau_mc, mu_lv)
}

/// Everything downstream code needs from one stationary cycle, accumulated
/// without storing every state.
#[derive(Clone, Debug)]
pub struct CycleSummary {
    /// Cycle-averaged stock distribution over the layout's levels.
    pub average: Vec<f64>,
    /// Stock distribution after one more regular step from the last cycle
    /// state, i.e. just before the alignment event.
    pub pre_event: Vec<f64>,
    /// Sum over the cycle of the IO weight and of the lead-time weight.
    pub c_io: f64,
    pub c_lt: f64,
    /// Per-step marginals, when requested.
    pub steps: Option<Vec<Vec<f64>>>,
    /// Largest per-step loss of total weight.
    pub weight_drift: f64,
    /// `|| raan * pi_k - pi_1 ||_inf`.
    pub closure: f64,
}

pub fn summarize_cycle(bundle: &TransitionBundle, pi1: &[f64], keep_steps: bool) -> CycleSummary {
    let layout = bundle.layout;
    let k = bundle.k_cycle;
    let mut average = vec![0.0; layout.block()];
    let mut steps = keep_steps.then(|| Vec::with_capacity(k));
    let mut c_io = 0.0;
    let mut c_lt = 0.0;
    let mut weight_drift: f64 = 0.0;
    let mut cur = pi1.to_vec();
    let mut next = vec![0.0; cur.len()];
    let w0: f64 = pi1.iter().sum();
    for step in 1..=k {
        let marg = layout.marginal(&cur);
        average.iter_mut().zip(&marg).for_each(|(a, m)| *a += m);
        if let Some(s) = steps.as_mut() {
            s.push(marg);
        }
        let (io, lt) = layout.phase_weights(&cur);
        c_io += io;
        c_lt += lt;
        weight_drift = weight_drift.max((io + lt - w0).abs());
        if step < k {
            bundle.reg.mul_vec_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    average.iter_mut().for_each(|a| *a /= k as f64);
    bundle.reg.mul_vec_into(&cur, &mut next);
    let pre_event = layout.marginal(&next);
    bundle.raan.mul_vec_into(&cur, &mut next);
    let closure = linalg::max_abs_diff(&next, pi1);
    CycleSummary {
        average,
        pre_event,
        c_io,
        c_lt,
        steps,
        weight_drift,
        closure,
    }
}
