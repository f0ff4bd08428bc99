//! In-plane layer: indirect replenishment from parking availability, the
//! continuous-review direct channel, and the batch demand placed on parking.

use crate::chain::{LayerOps, TransitionBundle};
use crate::config::{PolicyParams, ScenarioConfig, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TransitionMatrix};
use crate::stochastic::{self, Levels};

/// `kappa[j]`: probability that at least `j` batches wait in the parking
/// orbit at an alignment. Entries past the end are zero.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AvailabilityVector(pub Vec<f64>);

impl AvailabilityVector {
    /// Full availability for demands up to `len - 1` batches.
    pub fn all_ones(len: usize) -> Self {
        Self(vec![1.0; len.max(1)])
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0.get(j).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks `kappa_0 = 1`, entries in `[0, 1]` and monotone decrease.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if (self.get(0) - 1.0).abs() > tol {
            return Err(Error::validation(format!("kappa_0 = {} is not one", self.get(0))));
        }
        for (j, w) in self.0.windows(2).enumerate() {
            if w[1] > w[0] + tol || w[1] < -tol {
                return Err(Error::validation(format!(
                    "kappa is not a valid availability vector at j = {}",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// `chi[j]`: probability that a plane asks for exactly `j` batches at an
/// alignment.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DemandVector(pub Vec<f64>);

impl DemandVector {
    pub fn point(j: usize, len: usize) -> Self {
        let mut v = vec![0.0; len.max(j + 1)];
        v[j] = 1.0;
        Self(v)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Expected number of batches requested.
    pub fn mean(&self) -> f64 {
        self.0.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }
}

/// Batches needed to lift stock `x` above `r_ci`.
pub fn demand_batches(x: usize, r_ci: usize, q_ci: usize) -> usize {
    if x > r_ci {
        0
    } else {
        (r_ci + 1 - x).div_ceil(q_ci)
    }
}

/// Largest batch demand a plane can place.
pub fn max_demand(r_ci: usize, q_ci: usize) -> usize {
    (r_ci + 1).div_ceil(q_ci)
}

/// Indirect delivery at an alignment on the full level range.
pub fn indirect_replenishment_matrix(
    n_sat_c: usize,
    r_ci: usize,
    q_ci: usize,
    kappa: &AvailabilityVector,
) -> Result<TransitionMatrix> {
    indirect_replenishment_matrix_on(Levels::full(n_sat_c), r_ci, q_ci, kappa)
}

/// A plane at `x <= r_ci` asks for `j` batches; it receives all of them with
/// probability `kappa_j` and exactly `l < j` with `kappa_l - kappa_(l+1)`.
pub fn indirect_replenishment_matrix_on(
    levels: Levels,
    r_ci: usize,
    q_ci: usize,
    kappa: &AvailabilityVector,
) -> Result<TransitionMatrix> {
    let mut cols = Vec::with_capacity(levels.dim());
    for x in levels.iter() {
        let j = demand_batches(x, r_ci, q_ci);
        let top = x + j * q_ci;
        if top > levels.max {
            return Err(Error::dimension(format!(
                "indirect delivery from {x} reaches {top}, above the plane capacity {}",
                levels.max
            )));
        }
        let mut col = Vec::with_capacity(j + 1);
        for l in 0..j {
            let p = kappa.get(l) - kappa.get(l + 1);
            if p != 0.0 {
                col.push((levels.index(x + l * q_ci), p));
            }
        }
        let p_all = kappa.get(j);
        if p_all != 0.0 {
            col.push((levels.index(top), p_all));
        }
        cols.push(col);
    }
    Ok(SparseMatrix::from_columns(levels.dim(), cols))
}

/// Batch-demand pmf from the stock distribution just before an alignment.
/// `pre_event` is indexed over `levels`.
pub fn demand_distribution(pre_event: &[f64], levels: Levels, r_ci: usize, q_ci: usize) -> DemandVector {
    let mut chi = vec![0.0; max_demand(r_ci, q_ci) + 1];
    for (i, p) in pre_event.iter().enumerate() {
        chi[demand_batches(levels.level(i), r_ci, q_ci)] += p;
    }
    DemandVector(chi)
}

/// Poisson demand used by earlier single-echelon models, for comparison.
pub fn poisson_demand_baseline(cfg: &ScenarioConfig, policy: &PolicyParams, grid: &TimeGrid) -> DemandVector {
    let c = &cfg.constellation;
    let lambda_day = cfg.stochastic.lambda_sat_yr / crate::config::DAYS_PER_YEAR;
    let rate = f64::from(c.n_orbit_c) * f64::from(c.n_bar_sat) * lambda_day * grid.tau_c
        / (f64::from(policy.q_ci) * f64::from(policy.n_orbit_p));
    let len = max_demand(policy.r_ci as usize, policy.q_ci as usize) + 1;
    let mut pmf = Vec::with_capacity(len);
    let mut term = (-rate).exp();
    for j in 0..len {
        if j > 0 {
            term *= rate / j as f64;
        }
        pmf.push(term);
    }
    let total: f64 = pmf.iter().sum();
    DemandVector(pmf.into_iter().map(|p| p / total).collect())
}

/// In-plane layer with its fixed regular-step matrix.
#[derive(Clone, Debug)]
pub struct ConstellationModel {
    pub ops: LayerOps,
    pub r_ci: usize,
    pub q_ci: usize,
    pub k_c: usize,
    pub reg: TransitionMatrix,
}

impl ConstellationModel {
    /// Builds the layer over `levels` with lead-time stage lengths `stages`
    /// (all ones for the exact model).
    pub fn new(cfg: &ScenarioConfig, policy: &PolicyParams, grid: &TimeGrid, levels: Levels, stages: Vec<usize>) -> Result<Self> {
        let n_sat_c = policy.n_sat_c();
        if levels.max != n_sat_c {
            return Err(Error::dimension(format!(
                "constellation levels end at {} but the plane capacity is {n_sat_c}",
                levels.max
            )));
        }
        let (r_cd, q_cd) = (policy.r_cd as usize, policy.q_cd as usize);
        if r_cd + q_cd > n_sat_c {
            return Err(Error::dimension("direct order overflows the plane capacity"));
        }
        let step = stochastic::failure_matrix_on(levels, cfg.constellation.n_bar_sat as usize, grid.lambda_step);
        let (c_plus, c_minus) = stochastic::projections_on(levels, r_cd.max(levels.min))?;
        let (c_plus, c_minus) = if r_cd < levels.min {
            // No retained level triggers a direct order.
            let id = SparseMatrix::identity(levels.dim());
            (id, SparseMatrix::zeros(levels.dim()))
        } else {
            (c_plus, c_minus)
        };
        // A direct batch always lands in full; the capacity leaves room for
        // it after any indirect delivery.
        let arrival = stochastic::replenishment_matrix_on(levels, n_sat_c - q_cd, q_cd)?;
        let ops = LayerOps {
            levels,
            step,
            c_plus,
            c_minus,
            arrival,
            rho: grid.rho_d,
            stages,
            review_every_step: true,
        };
        let reg = ops.assemble(None, true);
        Ok(Self {
            ops,
            r_ci: policy.r_ci as usize,
            q_ci: policy.q_ci as usize,
            k_c: grid.k_c,
            reg,
        })
    }

    pub fn levels(&self) -> Levels {
        self.ops.levels
    }

    pub fn indirect(&self, kappa: &AvailabilityVector) -> Result<TransitionMatrix> {
        indirect_replenishment_matrix_on(self.ops.levels, self.r_ci, self.q_ci, kappa)
    }

    pub fn bundle(&self, kappa: &AvailabilityVector) -> Result<TransitionBundle> {
        let post = self.indirect(kappa)?;
        let raan = self.ops.assemble(Some(&post), true);
        TransitionBundle::new(self.ops.layout(), self.reg.clone(), raan, self.k_c)
    }
}

/// Exact (untruncated, unstaged) constellation bundle.
pub fn assemble_constellation_bundle(
    cfg: &ScenarioConfig,
    policy: &PolicyParams,
    grid: &TimeGrid,
    kappa: &AvailabilityVector,
) -> Result<TransitionBundle> {
    let model = ConstellationModel::new(cfg, policy, grid, Levels::full(policy.n_sat_c()), vec![1; grid.m_d])?;
    model.bundle(kappa)
}

/// Stock distribution just before the alignment: one regular step from the
/// last state of the cycle, marginalized.
pub fn pre_event_distribution(bundle: &TransitionBundle, last: &[f64]) -> Vec<f64> {
    bundle.layout.marginal(&bundle.reg.mul_vec(last))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_function() {
        assert_eq!(demand_batches(5, 3, 2), 0);
        assert_eq!(demand_batches(3, 3, 2), 1);
        assert_eq!(demand_batches(2, 3, 2), 1);
        assert_eq!(demand_batches(1, 3, 2), 2);
        assert_eq!(demand_batches(0, 3, 2), 2);
        assert_eq!(max_demand(3, 2), 2);
    }

    #[test]
    fn hand_enumerated_column() {
        let kappa = AvailabilityVector(vec![1.0, 0.8, 0.5]);
        let p = indirect_replenishment_matrix(7, 3, 2, &kappa).unwrap();
        let lv = Levels::full(7);
        let col = lv.index(1);
        assert!((p.get(lv.index(5), col) - 0.5).abs() < 1e-15);
        assert!((p.get(lv.index(3), col) - 0.3).abs() < 1e-15);
        assert!((p.get(lv.index(1), col) - 0.2).abs() < 1e-15);
        assert_eq!(p.column(col).count(), 3);
        assert!(p.is_column_stochastic(1e-15));
    }

    #[test]
    fn full_availability_and_none() {
        let ones = AvailabilityVector::all_ones(5);
        let p = indirect_replenishment_matrix(9, 4, 3, &ones).unwrap();
        let lv = Levels::full(9);
        for x in 0..=4 {
            let j = demand_batches(x, 4, 3);
            assert_eq!(p.get(lv.index(x + 3 * j), lv.index(x)), 1.0);
            assert!(x + 3 * j > 4);
        }
        let none = AvailabilityVector(vec![1.0]);
        assert_eq!(indirect_replenishment_matrix(9, 4, 3, &none).unwrap(), SparseMatrix::identity(10));
    }

    #[test]
    fn overflow_is_reported() {
        let ones = AvailabilityVector::all_ones(3);
        assert!(indirect_replenishment_matrix(5, 4, 3, &ones).is_err());
    }

    #[test]
    fn chi_sums_states_by_demand() {
        let lv = Levels::full(5);
        let pi = [0.1, 0.2, 0.3, 0.15, 0.15, 0.1];
        let chi = demand_distribution(&pi, lv, 3, 2);
        // Levels 5 and 4 need nothing.
        assert!((chi.0[0] - 0.3).abs() < 1e-15);
        assert!((chi.0[1] - 0.45).abs() < 1e-15);
        assert!((chi.0[2] - 0.25).abs() < 1e-15);
        let full = demand_distribution(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], lv, 3, 2);
        assert_eq!(full.0, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn uniform_stock_gives_preimage_sizes() {
        let lv = Levels::full(11);
        let pi = vec![1.0 / 12.0; 12];
        let chi = demand_distribution(&pi, lv, 7, 3);
        let mut counts = [0usize; 4];
        for x in 0..=11 {
            counts[demand_batches(x, 7, 3)] += 1;
        }
        for (c, p) in counts.iter().zip(&chi.0) {
            assert!((p - *c as f64 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn poisson_baseline_scaling() {
        let mut cfg = ScenarioConfig::baseline();
        let grid = crate::config::derive_time_grid(&cfg, &cfg.policy).unwrap();
        let a = poisson_demand_baseline(&cfg, &cfg.policy, &grid);
        assert!((a.total() - 1.0).abs() < 1e-12);
        cfg.stochastic.lambda_sat_yr = 0.0;
        let zero = poisson_demand_baseline(&cfg, &cfg.policy, &grid);
        assert_eq!(zero.0[0], 1.0);
    }
}
