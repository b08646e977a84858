//! Flat key/value run configuration in TOML.
//!
//! Keys are the parameter symbols (`mu_R`, `sigma_S`, `eta_tilde`, ...).
//! Missing keys keep their case-study values, except `hours_per_year`,
//! which defaults to the Julian year. An optional `[overrides]` table is
//! applied last, so a sweep can reuse one base file. Unknown keys are
//! errors.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::aggregate::{calibrate_wealth_income, PopulationSpec};
use crate::error::{Error, Result};
use crate::params::{ModelParams, UnitConventions};
use crate::stochastic::PathSpec;
use crate::subsidy::PlannerParams;

/// Level costs and efficiencies for the depth study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthSpec {
    /// Cost of the non-energy part of the renovation (EUR).
    pub k_min: f64,
    /// `(K_ee, η̃)` per level.
    pub points: Vec<(f64, f64)>,
}

impl Default for DepthSpec {
    fn default() -> Self {
        Self { k_min: 57_000.0, points: vec![(63_000.0, 0.025), (68_000.0, 0.030), (80_000.0, 0.039)] }
    }
}

/// Lognormal targets behind [`PopulationSpec::wealth_income`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WealthIncomeTargets {
    pub median_w: f64,
    pub mean_w: f64,
    pub median_y: f64,
    pub mean_y: f64,
    pub loglog_slope: f64,
}

impl Default for WealthIncomeTargets {
    fn default() -> Self {
        Self { median_w: 45_000.0, mean_w: 90_000.0, median_y: 47_000.0, mean_y: 55_000.0, loglog_slope: 1.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub model: ModelParams,
    pub planner: PlannerParams,
    pub n_agents: usize,
    pub width: f64,
    pub cohort_size: f64,
    pub wealth_income: WealthIncomeTargets,
    pub paths: PathSpec,
    pub depth: DepthSpec,
}

impl Default for Config {
    fn default() -> Self {
        let mut model = ModelParams::case_study();
        model.units = UnitConventions::default();
        Self {
            model,
            planner: PlannerParams::case_study(),
            n_agents: 10_000,
            width: 0.10,
            cohort_size: 750_000.0,
            wealth_income: WealthIncomeTargets::default(),
            paths: PathSpec { horizon: 25.0, ..PathSpec::default() },
            depth: DepthSpec::default(),
        }
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "mu_R", "mu_S", "sigma_S", "P", "Y", "w", "beta", "gamma", "delta", "lambda", "x_sub", "s_sub", "A",
    "eta", "eta_tilde", "rho", "K", "hours_per_year", "epsilon", "mu_varpi", "sigma_varpi", "carbon_price",
    "emissions_factor", "xi0", "xi1", "money_unit", "n_agents", "width", "cohort_size", "median_w", "mean_w",
    "median_Y", "mean_Y", "loglog_slope", "seed", "dt", "horizon", "n_paths", "antithetic", "bridge", "K_min",
    "depth_K_ee", "depth_eta_tilde",
];

fn number(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("{key}: expected a number, got {v}"))),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::Config(format!("{key}: expected a non-negative integer, got {v}"))),
    }
}

fn flag(key: &str, v: &toml::Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| Error::Config(format!("{key}: expected true or false, got {v}")))
}

fn numbers(key: &str, v: &toml::Value) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::Config(format!("{key}: expected an array")))?;
    arr.iter().map(|x| number(key, x)).collect()
}

impl Config {
    /// The case study with the hour count that reproduces its reported
    /// threshold.
    pub fn case_study() -> Self {
        let mut c = Self::default();
        c.model.units = UnitConventions::calibrated();
        c
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let mut cfg = Self::default();
        let mut overrides = None;
        let mut depth_k = None;
        let mut depth_eta = None;
        for (k, v) in &table {
            if k == "overrides" {
                overrides = Some(v.as_table().ok_or_else(|| Error::Config("overrides must be a table".into()))?);
                continue;
            }
            cfg.set(k, v, &mut depth_k, &mut depth_eta)?;
        }
        if let Some(o) = overrides {
            for (k, v) in o {
                cfg.set(k, v, &mut depth_k, &mut depth_eta)?;
            }
        }
        match (depth_k, depth_eta) {
            (None, None) => {}
            (Some(k), Some(e)) if k.len() == e.len() => cfg.depth.points = k.into_iter().zip(e).collect(),
            (Some(_), Some(_)) => {
                return Err(Error::Config("depth_K_ee and depth_eta_tilde differ in length".into()))
            }
            _ => return Err(Error::Config("depth_K_ee and depth_eta_tilde go together".into())),
        }
        Ok(cfg)
    }

    /// Sets one key.
    pub fn set_value(&mut self, key: &str, v: &toml::Value) -> Result<()> {
        let mut k = None;
        let mut e = None;
        self.set(key, v, &mut k, &mut e)?;
        if let Some(k) = k {
            self.depth.points = k.into_iter().zip(self.depth.points.iter().map(|p| p.1)).collect();
        }
        if let Some(e) = e {
            self.depth.points = self.depth.points.iter().map(|p| p.0).zip(e).collect();
        }
        Ok(())
    }

    fn set(
        &mut self,
        key: &str,
        v: &toml::Value,
        depth_k: &mut Option<Vec<f64>>,
        depth_eta: &mut Option<Vec<f64>>,
    ) -> Result<()> {
        let m = &mut self.model;
        let pl = &mut self.planner;
        let wi = &mut self.wealth_income;
        let slot: &mut f64 = match key {
            "mu_R" => &mut m.market.mu_r,
            "mu_S" => &mut m.market.mu_s,
            "sigma_S" => &mut m.market.sigma_s,
            "P" => &mut m.market.price,
            "Y" => &mut m.agent.income,
            "w" => &mut m.agent.w0,
            "beta" => &mut m.agent.beta,
            "gamma" => &mut m.agent.gamma,
            "delta" => &mut m.agent.delta,
            "lambda" => &mut m.agent.lambda,
            "x_sub" => &mut m.agent.x_sub,
            "s_sub" => &mut m.agent.s_sub,
            "A" => &mut m.retrofit.area,
            "eta" => &mut m.retrofit.eta,
            "eta_tilde" => &mut m.retrofit.eta_tilde,
            "rho" => &mut m.retrofit.rho,
            "K" => &mut m.retrofit.cost,
            "hours_per_year" => &mut m.units.hours_per_year,
            "epsilon" => &mut pl.social.epsilon,
            "mu_varpi" => &mut pl.social.mu_varpi,
            "sigma_varpi" => &mut pl.social.sigma_varpi,
            "carbon_price" => &mut pl.social.carbon_price,
            "emissions_factor" => &mut pl.social.emissions_factor,
            "xi0" => &mut pl.xi0,
            "xi1" => &mut pl.xi1,
            "money_unit" => &mut pl.money_unit,
            "width" => &mut self.width,
            "cohort_size" => &mut self.cohort_size,
            "median_w" => &mut wi.median_w,
            "mean_w" => &mut wi.mean_w,
            "median_Y" => &mut wi.median_y,
            "mean_Y" => &mut wi.mean_y,
            "loglog_slope" => &mut wi.loglog_slope,
            "dt" => &mut self.paths.dt,
            "horizon" => &mut self.paths.horizon,
            "K_min" => &mut self.depth.k_min,
            "n_agents" => {
                self.n_agents = count(key, v)? as usize;
                return Ok(());
            }
            "n_paths" => {
                self.paths.n_paths = count(key, v)? as usize;
                return Ok(());
            }
            "seed" => {
                self.paths.seed = count(key, v)?;
                return Ok(());
            }
            "antithetic" => {
                self.paths.antithetic = flag(key, v)?;
                return Ok(());
            }
            "bridge" => {
                self.paths.bridge = flag(key, v)?;
                return Ok(());
            }
            "depth_K_ee" => {
                *depth_k = Some(numbers(key, v)?);
                return Ok(());
            }
            "depth_eta_tilde" => {
                *depth_eta = Some(numbers(key, v)?);
                return Ok(());
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        };
        *slot = number(key, v)?;
        Ok(())
    }

    pub fn population_spec(&self) -> Result<PopulationSpec> {
        let t = &self.wealth_income;
        Ok(PopulationSpec {
            n: self.n_agents,
            market: self.model.market,
            units: self.model.units,
            centre: self.model.agent,
            retrofit: self.model.retrofit,
            width: self.width,
            wealth_income: calibrate_wealth_income(t.median_w, t.mean_w, t.median_y, t.mean_y, t.loglog_slope)?,
            seed: self.paths.seed,
            cohort_size: self.cohort_size,
        })
    }

    /// SHA-256 of the resolved configuration and any extra run inputs.
    pub fn digest(&self, extra: &str) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        h.update([0u8]);
        h.update(extra.as_bytes());
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_case_study_on_julian_hours() {
        let c = Config::from_toml_str("").unwrap();
        assert_eq!(c.model.units.hours_per_year, 8766.0);
        assert_eq!(c.model.market, ModelParams::case_study().market);
    }

    #[test]
    fn overrides_apply_last() {
        let c = Config::from_toml_str("sigma_S = 0.2\nseed = 5\n[overrides]\nsigma_S = 0.22\n").unwrap();
        assert_eq!(c.model.market.sigma_s, 0.22);
        assert_eq!(c.paths.seed, 5);
    }

    #[test]
    fn unknown_and_mistyped_keys_fail() {
        assert!(matches!(Config::from_toml_str("sigma = 0.2"), Err(Error::Config(_))));
        assert!(matches!(Config::from_toml_str("beta = \"x\""), Err(Error::Config(_))));
        assert!(matches!(Config::from_toml_str("n_paths = 1.5"), Err(Error::Config(_))));
        assert!(matches!(Config::from_toml_str("depth_K_ee = [1, 2]"), Err(Error::Config(_))));
    }

    #[test]
    fn every_key_is_accepted() {
        for k in KEYS {
            let v = match *k {
                "n_agents" | "n_paths" | "seed" => "3".to_string(),
                "antithetic" | "bridge" => "true".to_string(),
                "depth_K_ee" | "depth_eta_tilde" => "[1.0, 2.0, 3.0]".to_string(),
                _ => "0.5".to_string(),
            };
            let extra = match *k {
                "depth_K_ee" => "\ndepth_eta_tilde = [1.0, 2.0, 3.0]",
                "depth_eta_tilde" => "\ndepth_K_ee = [1.0, 2.0, 3.0]",
                _ => "",
            };
            Config::from_toml_str(&format!("{k} = {v}{extra}")).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
    }

    #[test]
    fn digest_tracks_inputs() {
        let a = Config::case_study();
        let mut b = a.clone();
        assert_eq!(a.digest("x"), b.digest("x"));
        assert_ne!(a.digest("x"), a.digest("y"));
        b.paths.seed += 1;
        assert_ne!(a.digest("x"), b.digest("x"));
    }
}
