//! Elementary probability objects: failure pmf and matrix, lead-time arrival
//! probability, reorder projections and (r, q) replenishment matrices.
//!
//! Distributions are indexed from the highest stock level down to the lowest
//! retained level, so index `i` is level `max - i`.

use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TransitionMatrix};

/// Entries of a failure column smaller than this are folded into the
/// bottom row instead of being stored.
const BAND_CUTOFF: f64 = 1e-18;

/// A contiguous window of stock levels `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Levels {
    pub max: usize,
    pub min: usize,
}

impl Levels {
    pub fn full(max: usize) -> Self {
        Self { max, min: 0 }
    }

    pub fn truncated(max: usize, min: usize) -> Self {
        assert!(min <= max, "lower level {min} above upper level {max}");
        Self { max, min }
    }

    pub fn dim(&self) -> usize {
        self.max - self.min + 1
    }

    pub fn index(&self, level: usize) -> usize {
        debug_assert!(level >= self.min && level <= self.max);
        self.max - level
    }

    pub fn level(&self, index: usize) -> usize {
        self.max - index
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        (self.min..=self.max).rev()
    }
}

pub use crate::config::arrival_prob;

fn poisson_ln(k: usize, mean: f64, ln_fact: f64) -> f64 {
    k as f64 * mean.ln() - mean - ln_fact
}

/// Probability of `k` failures in one step from a plane holding `n`
/// satellites. Only the `min(n, n_bar)` operational satellites can fail, and
/// more than `n_bar` failures is impossible.
pub fn failure_pmf(k: usize, n: usize, n_bar: usize, lambda_step: f64) -> f64 {
    if k > n_bar {
        return 0.0;
    }
    let mean = n.min(n_bar) as f64 * lambda_step;
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
    poisson_ln(k, mean, ln_fact).exp()
}

/// Poisson probabilities `P(F = k)` for `k < limit`, stopping early once the
/// terms fall below the band cutoff past the mode, together with the mass of
/// everything not returned.
fn poisson_band(mean: f64, limit: usize) -> (Vec<f64>, f64) {
    if mean == 0.0 || limit == 0 {
        return if limit == 0 { (Vec::new(), 1.0) } else { (vec![1.0], 0.0) };
    }
    let mut band = Vec::new();
    let mut ln_fact = 0.0;
    for k in 0..limit {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        let p = poisson_ln(k, mean, ln_fact).exp();
        if p < BAND_CUTOFF && k as f64 > mean {
            break;
        }
        band.push(p);
    }
    let tail = poisson_tail(mean, band.len(), &band);
    (band, tail)
}

/// `P(F >= start)` for a Poisson variable, summed directly when the terms
/// decay so the result keeps full relative precision.
fn poisson_tail(mean: f64, start: usize, head: &[f64]) -> f64 {
    if start as f64 <= mean {
        return (1.0 - head.iter().sum::<f64>()).max(0.0);
    }
    let ln_fact: f64 = (2..=start).map(|j| (j as f64).ln()).sum();
    let mut term = poisson_ln(start, mean, ln_fact).exp();
    let mut sum = 0.0;
    let mut k = start;
    while term > 0.0 && term > sum * 1e-17 {
        sum += term;
        k += 1;
        term *= mean / k as f64;
    }
    sum
}

/// Builds a lower-triangular stochastic matrix on `levels` whose column for
/// level `n` is produced by `column(n)` as the probabilities of dropping by
/// 0, 1, 2, ... levels plus the residual mass. Drops landing at or below the
/// lowest level, and the residual, all go to the bottom row.
fn drop_matrix(levels: Levels, column: impl Fn(usize) -> (Vec<f64>, f64)) -> TransitionMatrix {
    let dim = levels.dim();
    let mut cols = Vec::with_capacity(dim);
    for n in levels.iter() {
        let span = n - levels.min;
        let (probs, residual) = column(n);
        let mut col = Vec::with_capacity(probs.len().min(span) + 1);
        let mut bottom = residual;
        for (k, &p) in probs.iter().enumerate() {
            if k < span {
                col.push((levels.index(n - k), p));
            } else {
                bottom += p;
            }
        }
        col.push((levels.index(levels.min), bottom.max(0.0)));
        cols.push(col);
    }
    SparseMatrix::from_columns(dim, cols)
}

/// One-step failure matrix on the full level range `0..=n_max`.
pub fn failure_matrix(n_max: usize, n_bar: usize, lambda_step: f64) -> TransitionMatrix {
    failure_matrix_on(Levels::full(n_max), n_bar, lambda_step)
}

/// Failure matrix restricted to `levels`; mass that would fall below the
/// lowest level is kept in the bottom row.
pub fn failure_matrix_on(levels: Levels, n_bar: usize, lambda_step: f64) -> TransitionMatrix {
    drop_matrix(levels, |n| {
        let mean = n.min(n_bar) as f64 * lambda_step;
        // Never more than n_bar failures; everything beyond the cut is
        // residual mass for the bottom row.
        poisson_band(mean, n.min(n_bar + 1))
    })
}

/// Lower-triangular matrix that removes `j` units with probability `pmf[j]`,
/// clamping at the bottom level (parking depletion from batch demand).
pub fn demand_matrix(levels: Levels, pmf: &[f64]) -> TransitionMatrix {
    drop_matrix(levels, |n| {
        let span = n - levels.min;
        let head: Vec<f64> = pmf.iter().take(span).copied().collect();
        let residual = (1.0 - head.iter().sum::<f64>()).max(0.0);
        (head, residual)
    })
}

fn check_threshold(levels: Levels, r: usize) -> Result<()> {
    if r > levels.max {
        return Err(Error::dimension(format!(
            "reorder point {r} exceeds the largest level {}",
            levels.max
        )));
    }
    Ok(())
}

/// Selectors `(C+, C-)` for stock above and at-or-below the reorder point.
pub fn projections(n_max: usize, r: usize) -> Result<(SparseMatrix, SparseMatrix)> {
    projections_on(Levels::full(n_max), r)
}

pub fn projections_on(levels: Levels, r: usize) -> Result<(SparseMatrix, SparseMatrix)> {
    check_threshold(levels, r)?;
    let above: Vec<f64> = levels
        .iter()
        .map(|x| if x > r { 1.0 } else { 0.0 })
        .collect();
    let below: Vec<f64> = above.iter().map(|a| 1.0 - a).collect();
    Ok((SparseMatrix::diagonal(&above), SparseMatrix::diagonal(&below)))
}

/// (r, q) delivery: levels at or below `r` move up by `q`, others stay.
pub fn replenishment_matrix(n_max: usize, r: usize, q: usize) -> Result<TransitionMatrix> {
    replenishment_matrix_on(Levels::full(n_max), r, q)
}

pub fn replenishment_matrix_on(levels: Levels, r: usize, q: usize) -> Result<TransitionMatrix> {
    if r + q > levels.max {
        return Err(Error::dimension(format!(
            "delivery of {q} above reorder point {r} overflows the largest level {}",
            levels.max
        )));
    }
    let cols = levels
        .iter()
        .map(|x| {
            let to = if x <= r { x + q } else { x };
            vec![(levels.index(to), 1.0)]
        })
        .collect();
    Ok(SparseMatrix::from_columns(levels.dim(), cols))
}

/// Point mass at `level`.
pub fn point_mass(levels: Levels, level: usize) -> Vec<f64> {
    let mut v = vec![0.0; levels.dim()];
    v[levels.index(level)] = 1.0;
    v
}

/// First moment of a distribution over `levels`.
pub fn mean_level(levels: Levels, dist: &[f64]) -> f64 {
    dist.iter()
        .enumerate()
        .map(|(i, p)| levels.level(i) as f64 * p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        assert_eq!(failure_pmf(0, 12, 10, 0.0), 1.0);
        assert_eq!(failure_pmf(3, 12, 10, 0.0), 0.0);
        assert_eq!(failure_matrix(15, 10, 0.0), SparseMatrix::identity(16));
    }

    #[test]
    fn spares_do_not_fail() {
        let lam = 0.01;
        for k in 0..5 {
            assert_eq!(failure_pmf(k, 60, 40, lam), failure_pmf(k, 40, 40, lam));
        }
        assert_eq!(failure_pmf(41, 60, 40, 0.5), 0.0);
    }

    #[test]
    fn single_failure_oracle() {
        // 40 * 6.849e-5 expected failures per step.
        let mean: f64 = 40.0 * 6.849e-5;
        let want = mean * (-mean).exp();
        assert!((failure_pmf(1, 40, 40, 6.849e-5) / want - 1.0).abs() < 1e-13);
        assert!((want - 0.002732104863365999).abs() < 1e-15);
    }

    #[test]
    fn two_state_failure_matrix() {
        let lam = 0.3;
        let m = failure_matrix(1, 1, lam).to_dense();
        assert!((m[0][0] - (-lam).exp()).abs() < 1e-15);
        assert_eq!(m[0][1], 0.0);
        assert!((m[1][0] - (1.0 - (-lam).exp())).abs() < 1e-15);
        assert_eq!(m[1][1], 1.0);
    }

    #[test]
    fn band_truncation_keeps_bottom_row_exact() {
        let lam = 1e-4;
        let p = failure_matrix(60, 40, lam);
        assert!(p.is_column_stochastic(1e-15));
        // Only negligible far-tail mass is pooled at the bottom of the
        // full-stock column.
        let bottom = p.get(60, 0);
        assert!((0.0..1e-18).contains(&bottom), "{bottom}");
        // From level 3 the bottom row is the Poisson tail P(F >= 3), kept to
        // full relative precision.
        let col3 = p.get(60, 57);
        let m = 3.0 * lam;
        let want = m.powi(3) / 6.0 * (-m).exp() * (1.0 + m / 4.0 + m * m / 20.0);
        assert!(((col3 - want) / want).abs() < 1e-12, "{col3} vs {want}");
    }

    #[test]
    fn truncated_failure_matrix_pools_bottom_mass() {
        let lv = Levels::truncated(10, 6);
        let p = failure_matrix_on(lv, 8, 0.2);
        assert_eq!(p.dim(), 5);
        assert!(p.is_column_stochastic(1e-14));
        // From level 7 one drop reaches the floor; two or more drops also land there.
        let stay = (-(7.0 * 0.2f64)).exp();
        assert!((p.get(lv.index(6), lv.index(7)) - (1.0 - stay)).abs() < 1e-14);
    }

    #[test]
    fn demand_matrix_shapes() {
        let lv = Levels::full(4);
        assert_eq!(demand_matrix(lv, &[1.0]), SparseMatrix::identity(5));
        let shift = demand_matrix(lv, &[0.0, 1.0]);
        for n in 1..=4 {
            assert_eq!(shift.get(lv.index(n - 1), lv.index(n)), 1.0);
        }
        assert_eq!(shift.get(lv.index(0), lv.index(0)), 1.0);
    }

    #[test]
    fn projection_at_zero() {
        let (plus, minus) = projections(5, 0).unwrap();
        assert_eq!(minus.nnz(), 1);
        assert_eq!(minus.get(5, 5), 1.0);
        assert_eq!(plus.add(&minus), SparseMatrix::identity(6));
        assert!(projections(5, 6).is_err());
    }

    #[test]
    fn replenishment_moves_each_state_once() {
        let (n, r, q) = (9, 4, 3);
        let p = replenishment_matrix(n, r, q).unwrap();
        assert!(p.is_column_stochastic(0.0));
        let lv = Levels::full(n);
        for x in 0..=n {
            let to = if x <= r { x + q } else { x };
            assert_eq!(p.get(lv.index(to), lv.index(x)), 1.0, "state {x}");
            assert_eq!(p.column(lv.index(x)).count(), 1);
        }
        assert!(replenishment_matrix(6, 4, 3).is_err());
    }
}
