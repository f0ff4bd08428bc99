//! Scenario and policy parameters, TOML loading and the discrete time grid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbital::{self, OrbitPair};

/// Days per year used for every annual-to-daily rate conversion.
pub const DAYS_PER_YEAR: f64 = 365.25;

/// Fixed constellation geometry and Markov step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationConfig {
    /// Altitude of the constellation planes, km.
    pub h_c: f64,
    /// Inclination shared by constellation and parking planes, degrees.
    pub incl: f64,
    pub n_orbit_c: u32,
    /// Nominal operational satellites per plane.
    pub n_bar_sat: u32,
    /// Markov time step, days.
    pub tau_mc: f64,
}

/// The eight decision variables of a hybrid policy.
///
/// `q_p` and `r_p` count batches of `q_ci` satellites; the other order
/// quantities and reorder points count satellites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyParams {
    pub q_cd: u32,
    pub q_ci: u32,
    pub q_p: u32,
    pub r_cd: u32,
    pub r_ci: u32,
    pub r_p: u32,
    pub n_orbit_p: u32,
    /// Parking orbit altitude, km.
    pub h_p: f64,
}

/// Failure rate and shifted-exponential lead-time parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochParams {
    /// Failures per operational satellite per year.
    pub lambda_sat_yr: f64,
    /// Fixed processing delay of the direct launcher, days.
    pub tau_lv_d: f64,
    pub tau_lv_i: f64,
    /// Mean of the exponential part of the direct lead time, days.
    pub mu_lv_d: f64,
    pub mu_lv_i: f64,
}

/// Cost coefficients, masses and launcher capacities.
///
/// Holding rates are per satellite per year; every other cost is a one-off
/// amount in M$.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    pub c_build: f64,
    pub c_hold_c: f64,
    pub c_hold_p: f64,
    pub c_full_d: f64,
    pub c_full_i: f64,
    /// M$ per kg of transfer propellant.
    pub c_fuel: f64,
    /// Non-fuel cost of one parking-to-plane transfer.
    pub c_trans: f64,
    pub m_sat: f64,
    pub m_bus: f64,
    pub m_payload_d: f64,
    pub m_payload_i: f64,
    /// Effective exhaust velocity of the transfer bus, km/s.
    pub v_ex: f64,
}

/// Constraint thresholds used by the optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationSettings {
    /// Upper bound on the expected per-plane shortage.
    #[serde(default = "default_eps1")]
    pub eps1: f64,
    /// Upper bound on the parking out-of-stock probability. When absent the
    /// per-candidate heuristic `1 / (r_p + q_p + 1)` is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
}

fn default_eps1() -> f64 {
    0.25
}

impl Default for OptimizationSettings {
    fn default() -> Self {
        Self {
            eps1: default_eps1(),
            eps2: None,
        }
    }
}

/// A complete scenario: geometry, stochastic model, costs and a policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub constellation: ConstellationConfig,
    pub policy: PolicyParams,
    pub stochastic: StochParams,
    pub costs: CostParams,
    #[serde(default)]
    pub optimization: OptimizationSettings,
}

/// Discrete time grid derived from a scenario and a policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    /// Alignment period seen by one constellation plane, days.
    pub tau_c: f64,
    /// Alignment period seen by one parking orbit, days.
    pub tau_p: f64,
    pub k_c: usize,
    pub k_p: usize,
    /// Fixed direct-channel delay in steps.
    pub m_d: usize,
    pub m_i: usize,
    /// Per-step failure rate of one operational satellite.
    pub lambda_step: f64,
    /// Per-step arrival probability once the fixed delay has elapsed.
    pub rho_d: f64,
    pub rho_i: f64,
}

impl ConstellationConfig {
    /// Table 1 geometry.
    pub fn baseline() -> Self {
        Self {
            h_c: 1200.0,
            incl: 50.0,
            n_orbit_c: 40,
            n_bar_sat: 40,
            tau_mc: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_c > 0.0 && self.h_c.is_finite()) {
            return Err(Error::validation("h_c must be positive"));
        }
        if !(0.0..=180.0).contains(&self.incl) {
            return Err(Error::validation("incl must lie in [0, 180] degrees"));
        }
        if self.n_orbit_c < 1 {
            return Err(Error::validation("n_orbit_c must be at least 1"));
        }
        if self.n_bar_sat < 1 {
            return Err(Error::validation("n_bar_sat must be at least 1"));
        }
        if !(self.tau_mc > 0.0 && self.tau_mc.is_finite()) {
            return Err(Error::validation("tau_mc must be positive"));
        }
        Ok(())
    }
}

impl PolicyParams {
    pub fn validate(&self, constellation: &ConstellationConfig) -> Result<()> {
        for (name, v) in [("q_cd", self.q_cd), ("q_ci", self.q_ci), ("q_p", self.q_p)] {
            if v < 1 {
                return Err(Error::validation(format!("{name} must be at least 1")));
            }
        }
        if self.n_orbit_p < 1 {
            return Err(Error::validation("n_orbit_p must be at least 1"));
        }
        if !(self.h_p > 0.0 && self.h_p.is_finite()) {
            return Err(Error::validation("h_p must be positive"));
        }
        if self.h_p == constellation.h_c {
            return Err(Error::validation(
                "parking altitude equals constellation altitude",
            ));
        }
        if self.h_p > constellation.h_c {
            return Err(Error::validation(
                "parking altitude must be below the constellation altitude",
            ));
        }
        Ok(())
    }

    /// Plane capacity: the worst case of a direct batch landing right after
    /// an indirect delivery.
    pub fn n_sat_c(&self) -> usize {
        let direct = self.r_cd + self.q_cd;
        let indirect = self.r_ci + self.q_ci + self.q_cd;
        direct.max(indirect) as usize
    }

    /// Parking capacity in batches.
    pub fn n_sat_p(&self) -> usize {
        (self.r_p + self.q_p) as usize
    }
}

impl StochParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_sat_yr >= 0.0 && self.lambda_sat_yr.is_finite()) {
            return Err(Error::validation("lambda_sat_yr must be non-negative"));
        }
        if !(self.tau_lv_d >= 0.0 && self.tau_lv_i >= 0.0)
            || !self.tau_lv_d.is_finite()
            || !self.tau_lv_i.is_finite()
        {
            return Err(Error::validation("tau_lv_d and tau_lv_i must be non-negative"));
        }
        if !(self.mu_lv_d > 0.0 && self.mu_lv_i > 0.0)
            || !self.mu_lv_d.is_finite()
            || !self.mu_lv_i.is_finite()
        {
            return Err(Error::validation("mu_lv_d and mu_lv_i must be positive"));
        }
        Ok(())
    }
}

impl CostParams {
    /// Table 5 coefficients.
    pub fn baseline() -> Self {
        Self {
            c_build: 0.5,
            c_hold_c: 0.5,
            c_hold_p: 0.5,
            c_full_d: 7.5,
            c_full_i: 67.0,
            c_fuel: 0.001,
            c_trans: 0.5,
            m_sat: 150.0,
            m_bus: 100.0,
            m_payload_d: 300.0,
            m_payload_i: 18500.0,
            v_ex: 2.16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_build", self.c_build),
            ("c_hold_c", self.c_hold_c),
            ("c_hold_p", self.c_hold_p),
            ("c_full_d", self.c_full_d),
            ("c_full_i", self.c_full_i),
            ("c_fuel", self.c_fuel),
            ("c_trans", self.c_trans),
            ("m_sat", self.m_sat),
            ("m_bus", self.m_bus),
            ("m_payload_d", self.m_payload_d),
            ("m_payload_i", self.m_payload_i),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{name} must be non-negative")));
            }
        }
        if !(self.v_ex > 0.0 && self.v_ex.is_finite()) {
            return Err(Error::validation("v_ex must be positive"));
        }
        Ok(())
    }
}

impl ScenarioConfig {
    /// Baseline scenario: Table 1 geometry, Table 5 costs, a 0.05/yr failure
    /// rate and a representative indirect-leaning policy.
    pub fn baseline() -> Self {
        Self {
            constellation: ConstellationConfig::baseline(),
            policy: PolicyParams {
                q_cd: 2,
                q_ci: 10,
                q_p: 9,
                r_cd: 30,
                r_ci: 40,
                r_p: 1,
                n_orbit_p: 2,
                h_p: 500.0,
            },
            stochastic: StochParams {
                lambda_sat_yr: 0.05,
                tau_lv_d: 10.0,
                tau_lv_i: 20.0,
                mu_lv_d: 10.0,
                mu_lv_i: 20.0,
            },
            costs: CostParams::baseline(),
            optimization: OptimizationSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constellation.validate()?;
        self.policy.validate(&self.constellation)?;
        self.stochastic.validate()?;
        self.costs.validate()?;
        if !(self.optimization.eps1 >= 0.0) {
            return Err(Error::validation("eps1 must be non-negative"));
        }
        if let Some(e) = self.optimization.eps2 {
            if !(e >= 0.0) {
                return Err(Error::validation("eps2 must be non-negative"));
            }
        }
        Ok(())
    }

    /// Returns a copy with a different policy (not validated).
    pub fn with_policy(&self, policy: PolicyParams) -> Self {
        Self {
            policy,
            ..self.clone()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}

fn steps(days: f64, tau_mc: f64) -> usize {
    (days / tau_mc).round() as usize
}

/// Probability that an order still outstanding after its fixed delay arrives
/// within the next step.
pub fn arrival_prob(tau_mc: f64, mu_lv: f64) -> f64 {
    -(-tau_mc / mu_lv).exp_m1()
}

/// Derives alignment periods, step counts and per-step rates.
pub fn derive_time_grid(cfg: &ScenarioConfig, policy: &PolicyParams) -> Result<TimeGrid> {
    let c = &cfg.constellation;
    let s = &cfg.stochastic;
    let pair = OrbitPair::from_altitudes(c.h_c, policy.h_p, c.incl)?;
    let (tau_c, tau_p) = orbital::alignment_periods(&pair, c.n_orbit_c, policy.n_orbit_p)?;
    Ok(TimeGrid {
        tau_c,
        tau_p,
        k_c: steps(tau_c, c.tau_mc).max(1),
        k_p: steps(tau_p, c.tau_mc).max(1),
        m_d: steps(s.tau_lv_d, c.tau_mc),
        m_i: steps(s.tau_lv_i, c.tau_mc),
        lambda_step: s.lambda_sat_yr * c.tau_mc / DAYS_PER_YEAR,
        rho_d: arrival_prob(c.tau_mc, s.mu_lv_d),
        rho_i: arrival_prob(c.tau_mc, s.mu_lv_i),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_round_trips_through_toml() {
        let cfg = ScenarioConfig::baseline();
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn zero_step_is_rejected() {
        let mut cfg = ScenarioConfig::baseline();
        cfg.constellation.tau_mc = 0.0;
        let err = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap_err();
        assert!(err.to_string().contains("tau_mc must be positive"), "{err}");
    }

    #[test]
    fn coincident_altitudes_are_rejected() {
        let mut cfg = ScenarioConfig::baseline();
        cfg.policy.h_p = cfg.constellation.h_c;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("parking altitude equals constellation altitude"));
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = ScenarioConfig::from_toml_str("[constellation]\nh_c = = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn delays_round_to_steps() {
        let mut cfg = ScenarioConfig::baseline();
        let grid = derive_time_grid(&cfg, &cfg.policy).unwrap();
        assert_eq!(grid.m_d, 20);
        assert_eq!(grid.m_i, 40);
        cfg.stochastic.tau_lv_d = 0.0;
        assert_eq!(derive_time_grid(&cfg, &cfg.policy).unwrap().m_d, 0);
    }

    #[test]
    fn baseline_alignment_grid() {
        // Independent evaluation with h_p = 500 km and ten parking planes.
        let mut cfg = ScenarioConfig::baseline();
        cfg.policy.n_orbit_p = 10;
        let grid = derive_time_grid(&cfg, &cfg.policy).unwrap();
        assert!((grid.tau_c - 25.445983053496867).abs() < 1e-9);
        assert!((grid.tau_p - 6.361495763374217).abs() < 1e-9);
        assert_eq!((grid.k_c, grid.k_p), (51, 13));
        assert!((grid.lambda_step - 0.05 * 0.5 / 365.25).abs() < 1e-18);
    }

    #[test]
    fn arrival_probability_identity() {
        assert!((arrival_prob(2.0, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((arrival_prob(0.5, 10.0) - 0.04877057549928599).abs() < 1e-15);
        assert!(arrival_prob(0.5, 1e12) < 1e-11);
    }
}
