//! Parking layer: stock counted in transfer batches, depleted only at
//! alignments by plane demand, restocked by periodic-review (r, q) launches.

use crate::chain::{LayerOps, TransitionBundle};
use crate::config::{PolicyParams, TimeGrid};
use crate::constellation::{AvailabilityVector, DemandVector};
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TransitionMatrix};
use crate::stochastic::{self, Levels};

/// Depletion of a parking orbit by one plane's batch demand.
pub fn parking_failure_matrix(n_sat_p: usize, chi: &DemandVector) -> TransitionMatrix {
    stochastic::demand_matrix(Levels::full(n_sat_p), &chi.0)
}

/// `kappa[j] = P(X_p >= j)` from the parking stock just before an alignment,
/// padded with zeros to `len`.
pub fn availability_vector(pre_event: &[f64], levels: Levels, len: usize) -> AvailabilityVector {
    let mut kappa = vec![0.0; len.max(levels.max + 1)];
    for (i, p) in pre_event.iter().enumerate() {
        kappa[levels.level(i)] += p;
    }
    for j in (0..kappa.len() - 1).rev() {
        kappa[j] += kappa[j + 1];
    }
    // Exact normalization guards against drift in the fixed point.
    let total = kappa[0];
    if total > 0.0 {
        kappa.iter_mut().for_each(|k| *k /= total);
    }
    kappa.truncate(len.max(1));
    AvailabilityVector(kappa)
}

/// Parking layer with its fixed regular-step matrix.
#[derive(Clone, Debug)]
pub struct ParkingModel {
    pub ops: LayerOps,
    pub k_p: usize,
    pub reg: TransitionMatrix,
}

impl ParkingModel {
    pub fn new(policy: &PolicyParams, grid: &TimeGrid, stages: Vec<usize>) -> Result<Self> {
        let n = policy.n_sat_p();
        let levels = Levels::full(n);
        let (r_p, q_p) = (policy.r_p as usize, policy.q_p as usize);
        if q_p == 0 {
            return Err(Error::validation("q_p must be at least 1"));
        }
        let (c_plus, c_minus) = stochastic::projections_on(levels, r_p)?;
        let ops = LayerOps {
            levels,
            step: SparseMatrix::identity(levels.dim()),
            c_plus,
            c_minus,
            arrival: stochastic::replenishment_matrix_on(levels, r_p, q_p)?,
            rho: grid.rho_i,
            stages,
            review_every_step: false,
        };
        let reg = ops.assemble(None, false);
        Ok(Self { ops, k_p: grid.k_p, reg })
    }

    pub fn levels(&self) -> Levels {
        self.ops.levels
    }

    /// Bundle with the alignment step depleting stock by `chi` and then
    /// reviewing the position.
    pub fn bundle(&self, chi: &DemandVector) -> Result<TransitionBundle> {
        let post = stochastic::demand_matrix(self.ops.levels, &chi.0);
        let raan = self.ops.assemble(Some(&post), true);
        TransitionBundle::new(self.ops.layout(), self.reg.clone(), raan, self.k_p)
    }
}

/// Exact (unstaged) parking bundle.
pub fn assemble_parking_bundle(policy: &PolicyParams, grid: &TimeGrid, chi: &DemandVector) -> Result<TransitionBundle> {
    ParkingModel::new(policy, grid, vec![1; grid.m_i])?.bundle(chi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn availability_is_upper_tail() {
        let lv = Levels::full(3);
        // Levels 3, 2, 1, 0.
        let pre = [0.4, 0.3, 0.2, 0.1];
        let k = availability_vector(&pre, lv, 6);
        let want = [1.0, 0.9, 0.7, 0.4, 0.0, 0.0];
        for (a, b) in k.0.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        k.validate(1e-12).unwrap();
    }

    #[test]
    fn no_demand_leaves_stock() {
        let chi = DemandVector::point(0, 3);
        assert_eq!(parking_failure_matrix(4, &chi), SparseMatrix::identity(5));
    }

    #[test]
    fn depletion_clamps_at_zero() {
        let chi = DemandVector(vec![0.2, 0.3, 0.5]);
        let p = parking_failure_matrix(3, &chi);
        let lv = Levels::full(3);
        assert!((p.get(lv.index(0), lv.index(1)) - 0.8).abs() < 1e-15);
        assert!((p.get(lv.index(0), lv.index(3)) - 0.0).abs() < 1e-15);
        assert!((p.get(lv.index(1), lv.index(3)) - 0.5).abs() < 1e-15);
        assert!(p.is_column_stochastic(1e-15));
    }

    #[test]
    fn regular_steps_only_move_lead_time() {
        let cfg = crate::config::ScenarioConfig::baseline();
        let grid = crate::config::derive_time_grid(&cfg, &cfg.policy).unwrap();
        let model = ParkingModel::new(&cfg.policy, &grid, vec![1; 4]).unwrap();
        let mut x = vec![0.0; model.ops.layout().dim()];
        x[0] = 1.0;
        // Full stock in the IO phase is a fixed point of the regular step.
        assert_eq!(model.reg.mul_vec(&x), x);
        assert!(model.reg.is_column_stochastic(1e-14));
    }
}
