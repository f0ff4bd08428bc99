//! Secular J2 plane drift, alignment periods and transfer propellant.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH: f64 = 398_600.441_8;
/// Earth equatorial radius, km.
pub const R_EARTH: f64 = 6_378.137;
pub const J2: f64 = 1.082_63e-3;
const SECONDS_PER_DAY: f64 = 86_400.0;

/// Circular constellation and parking orbits sharing one inclination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPair {
    /// Constellation semi-major axis, km.
    pub a_c: f64,
    /// Parking semi-major axis, km.
    pub a_p: f64,
    /// Inclination, degrees.
    pub incl: f64,
}

impl OrbitPair {
    pub fn from_altitudes(h_c: f64, h_p: f64, incl: f64) -> Result<Self> {
        let pair = Self {
            a_c: R_EARTH + h_c,
            a_p: R_EARTH + h_p,
            incl,
        };
        if !(h_c > 0.0 && h_p > 0.0) {
            return Err(Error::Geometry("orbits must lie above the Earth's surface".into()));
        }
        if pair.a_p > pair.a_c {
            return Err(Error::Geometry(
                "parking orbit must lie below the constellation".into(),
            ));
        }
        Ok(pair)
    }
}

/// Nodal regression rate of a circular orbit, rad/day (negative for prograde).
pub fn raan_drift_rate(a: f64, incl_deg: f64) -> f64 {
    let n = (MU_EARTH / a.powi(3)).sqrt();
    -1.5 * J2 * (R_EARTH / a).powi(2) * n * incl_deg.to_radians().cos() * SECONDS_PER_DAY
}

/// Time between successive alignments of a given constellation plane with
/// any parking plane, and of a given parking plane with any constellation
/// plane, in days.
pub fn alignment_periods(pair: &OrbitPair, n_orbit_c: u32, n_orbit_p: u32) -> Result<(f64, f64)> {
    let rel = (raan_drift_rate(pair.a_c, pair.incl) - raan_drift_rate(pair.a_p, pair.incl)).abs();
    // Below this the alignment period exceeds any mission horizon by far.
    if !(rel > 1e-12) || !rel.is_finite() {
        return Err(Error::Geometry(
            "constellation and parking planes drift at the same rate".into(),
        ));
    }
    let tau_c = 2.0 * PI / (f64::from(n_orbit_p) * rel);
    let tau_p = 2.0 * PI / (f64::from(n_orbit_c) * rel);
    Ok((tau_c, tau_p))
}

/// Two-burn coplanar Hohmann transfer between the two circular orbits, km/s.
pub fn hohmann_dv(pair: &OrbitPair) -> f64 {
    let (lo, hi) = if pair.a_p <= pair.a_c {
        (pair.a_p, pair.a_c)
    } else {
        (pair.a_c, pair.a_p)
    };
    let sum = lo + hi;
    let burn1 = (MU_EARTH / lo).sqrt() * ((2.0 * hi / sum).sqrt() - 1.0);
    let burn2 = (MU_EARTH / hi).sqrt() * (1.0 - (2.0 * lo / sum).sqrt());
    (burn1 + burn2).max(0.0)
}

/// Propellant needed to give `dry_mass` a velocity change `dv` (rocket equation).
pub fn fuel_mass(dv: f64, dry_mass: f64, v_ex: f64) -> f64 {
    dry_mass * (dv / v_ex).exp_m1()
}

/// Bus, satellites and propellant of one parking-to-plane transfer stack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferModel {
    pub v_ex: f64,
    pub m_sat: f64,
    pub m_bus: f64,
}

impl TransferModel {
    pub fn dry_mass(&self, q_ci: u32) -> f64 {
        f64::from(q_ci) * self.m_sat + self.m_bus
    }

    pub fn fuel(&self, pair: &OrbitPair, q_ci: u32) -> f64 {
        fuel_mass(hohmann_dv(pair), self.dry_mass(q_ci), self.v_ex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline_pair() -> OrbitPair {
        OrbitPair::from_altitudes(1200.0, 500.0, 50.0).unwrap()
    }

    #[test]
    fn drift_rate_oracle() {
        let rate = raan_drift_rate(7578.137, 50.0);
        assert!((rate - -0.0611421276394433).abs() < 1e-13, "{rate}");
        assert!(raan_drift_rate(7578.137, 90.0).abs() < 1e-17);
        assert!(raan_drift_rate(7578.137, 130.0) > 0.0);
    }

    #[test]
    fn alignment_scaling() {
        let pair = baseline_pair();
        let (tc1, tp1) = alignment_periods(&pair, 40, 5).unwrap();
        let (tc2, tp2) = alignment_periods(&pair, 40, 10).unwrap();
        assert!((tc1 / tc2 - 2.0).abs() < 1e-12);
        assert_eq!(tp1, tp2);
        let (tc, tp) = alignment_periods(&pair, 7, 7).unwrap();
        assert_eq!(tc, tp);
    }

    #[test]
    fn equal_drift_is_degenerate() {
        let pair = OrbitPair {
            a_c: 7000.0,
            a_p: 7000.0,
            incl: 50.0,
        };
        assert!(matches!(alignment_periods(&pair, 40, 2), Err(Error::Geometry(_))));
        let polar = OrbitPair {
            a_c: 7500.0,
            a_p: 7000.0,
            incl: 90.0,
        };
        assert!(alignment_periods(&polar, 40, 2).is_err());
    }

    #[test]
    fn hohmann_oracle() {
        let dv = hohmann_dv(&baseline_pair());
        assert!((dv - 0.35989819852007265).abs() < 1e-12, "{dv}");
        let same = OrbitPair { a_c: 7000.0, a_p: 7000.0, incl: 0.0 };
        assert_eq!(hohmann_dv(&same), 0.0);
    }

    #[test]
    fn hohmann_grows_with_separation() {
        let a_c = R_EARTH + 1200.0;
        let mut last = 0.0;
        for h_p in (200..1200).rev().step_by(50) {
            let dv = hohmann_dv(&OrbitPair { a_c, a_p: R_EARTH + h_p as f64, incl: 50.0 });
            assert!(dv > last);
            last = dv;
        }
    }

    #[test]
    fn fuel_identities() {
        assert_eq!(fuel_mass(0.0, 1000.0, 2.0), 0.0);
        assert_eq!(fuel_mass(1.0, 0.0, 2.0), 0.0);
        let m = fuel_mass(2.16, 10.0, 2.16);
        assert!((m - 10.0 * (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn transfer_stack_oracle() {
        let model = TransferModel { v_ex: 2.16, m_sat: 150.0, m_bus: 100.0 };
        assert_eq!(model.dry_mass(10), 1600.0);
        let fuel = model.fuel(&baseline_pair(), 10);
        assert!((fuel - 290.0875780632884).abs() < 1e-9, "{fuel}");
    }

    #[test]
    fn parking_above_constellation_is_rejected() {
        assert!(OrbitPair::from_altitudes(1200.0, 1300.0, 50.0).is_err());
    }
}
