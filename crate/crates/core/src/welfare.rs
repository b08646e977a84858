//! Rebound and backfire, the social cost of fuel use and the welfare
//! decomposition `V = V_ev − V_sc`.
//!
//! Before adoption a waiting household follows the never-adopt controls,
//! so rebound and backfire are zero until the first passage of `z*`.
//! Post-passage moments are exact: for a GBM `Z` with drift `μ`,
//! `E[Z_t 1{τ ≤ t}] = z e^{μt} P*(τ ≤ t)` where `P*` is the passage law
//! under drift `μ + σ²` (change of measure with density `Z_t e^{−μt}/z`).

use serde::{Deserialize, Serialize};

use crate::agent_solution::{Agent, Regime};
use crate::error::{Error, Result};
use crate::numerics::norm_cdf;
use crate::stochastic::{hitting_cdf, laplace_exponent, passage_growth};

/// Social cost of fuel and its discounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocialParams {
    /// Social discount rate (1/year).
    pub epsilon: f64,
    /// Drift of the marginal social cost (1/year).
    pub mu_varpi: f64,
    /// Volatility of the marginal social cost; only the simulation uses it.
    pub sigma_varpi: f64,
    /// Carbon price (EUR/tC).
    pub carbon_price: f64,
    /// Emissions factor of the fuel (tC/kWh).
    pub emissions_factor: f64,
}

impl SocialParams {
    pub fn case_study() -> Self {
        Self {
            epsilon: 0.02,
            mu_varpi: 0.013,
            sigma_varpi: 0.1,
            carbon_price: 45.0,
            emissions_factor: 0.24e-3,
        }
    }

    /// Initial marginal social cost (EUR/kWh).
    pub fn pi0(&self) -> f64 {
        self.carbon_price * self.emissions_factor
    }

    pub fn with_carbon_price(mut self, carbon_price: f64) -> Self {
        self.carbon_price = carbon_price;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareReport {
    /// Present value of the social cost of the change in fuel use (EUR).
    pub v_sc: f64,
    /// Equivalent variation of the adoption option (EUR).
    pub v_ev: f64,
    pub v_total: f64,
    pub regime: Regime,
}

/// Probability that fuel use after adoption exceeds the never-adopt level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackfireOdds {
    pub probability: f64,
    /// Set when the probability is zero by construction.
    pub note: Option<String>,
}

/// ε + λ.
pub fn epsilon_hat(agent: &Agent, social: &SocialParams) -> f64 {
    social.epsilon + agent.params.agent.lambda
}

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("disposable capital must be positive, got {z}")));
    }
    Ok(())
}

/// `(waiting, passage probability, E[e^{μ(t−τ)}1{τ≤t}])` from capital `z`.
fn passage_terms(agent: &Agent, t: f64, z: f64) -> (bool, f64, f64) {
    let c = &agent.consts;
    match c.threshold.finite() {
        Some(th) if z < th.z_star => (
            true,
            hitting_cdf(z, th.z_star, c.mu_z, c.sigma_z, t),
            passage_growth(z, th.z_star, c.mu_z, c.sigma_z, t),
        ),
        _ => (false, 1.0, (c.mu_z * t).exp()),
    }
}

/// Expected rebound in energy service (°C) at time `t` for disposable
/// capital `z` at time zero.
pub fn rebound_expectation(agent: &Agent, t: f64, z: f64) -> Result<f64> {
    check_z(z)?;
    let c = &agent.consts;
    let r = &agent.params.retrofit;
    let scale = agent.params.agent.beta * c.phi / c.annual_price;
    let (waiting, _, growth) = passage_terms(agent, t, z);
    let z_switch = if waiting { c.z_star().unwrap() } else { z };
    Ok(scale * (r.eta_tilde * (z_switch + c.theta) - r.eta * z_switch) * growth)
}

/// Expected backfire in fuel (W) at time `t` for disposable capital `z`.
pub fn backfire_expectation(agent: &Agent, t: f64, z: f64) -> Result<f64> {
    check_z(z)?;
    let c = &agent.consts;
    let r = &agent.params.retrofit;
    let floor = agent.params.agent.s_sub * (1.0 / r.eta_tilde - 1.0 / r.eta);
    let scale = agent.params.agent.beta * c.phi / c.annual_price;
    let (_, prob, growth) = passage_terms(agent, t, z);
    Ok(floor * prob + scale * c.theta * growth)
}

/// P(Q_t > 0) for a household that adopted at time zero.
pub fn prob_backfire(agent: &Agent, t: f64) -> Result<BackfireOdds> {
    let c = &agent.consts;
    if c.theta <= 0.0 {
        return Ok(BackfireOdds {
            probability: 0.0,
            note: Some("theta <= 0: post-adoption fuel never exceeds the counterfactual".into()),
        });
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let d = (c.kappa_q.ln() - c.theta.ln() - c.log_drift() * t) / (c.sigma_z * t.sqrt());
    Ok(BackfireOdds { probability: norm_cdf(-d), note: None })
}

/// Present value per unit initial social cost of post-adoption backfire,
/// `I(π)` in EUR for `pi0` in EUR/kWh.
pub fn social_cost_integral(agent: &Agent, social: &SocialParams, pi0: f64) -> Result<f64> {
    let c = &agent.consts;
    let r = &agent.params.retrofit;
    let a = &agent.params.agent;
    let r1 = epsilon_hat(agent, social) - social.mu_varpi;
    let r2 = r1 - c.mu_z;
    if !(r1 > 0.0) {
        return Err(Error::Domain(format!("need eps + lambda - mu_varpi > 0, got {r1}")));
    }
    if !(r2 > 0.0) {
        return Err(Error::Domain(format!("need eps + lambda - mu_varpi - mu_Z > 0, got {r2}")));
    }
    let pi_annual = agent.params.units.annual_price(pi0);
    let term0 = a.s_sub * (1.0 / r.eta_tilde - 1.0 / r.eta) / r1;
    let term1 = a.beta * c.phi * c.theta / (r2 * c.annual_price);
    Ok((term0 + term1) * pi_annual)
}

/// E[e^{−ρτ}] for the first passage of `z*` from `z`.
pub fn laplace_hitting(agent: &Agent, z: f64, rho: f64) -> Result<f64> {
    check_z(z)?;
    let c = &agent.consts;
    let th = c.threshold.finite().ok_or_else(|| {
        Error::Regime("theta >= 0: no passage time in the immediate regime".into())
    })?;
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("discount rate must be positive, got {rho}")));
    }
    if z >= th.z_star {
        return Ok(1.0);
    }
    let e = laplace_exponent(c.mu_z, c.sigma_z, rho);
    Ok((e * (th.z_star / z).ln()).exp())
}

/// Present value of the social cost of adoption, V_sc (EUR).
pub fn social_cost(agent: &Agent, social: &SocialParams, z: f64, pi0: f64) -> Result<f64> {
    check_z(z)?;
    let i = social_cost_integral(agent, social, pi0)?;
    match agent.consts.threshold.finite() {
        Some(th) if z < th.z_star => {
            let rho = epsilon_hat(agent, social) - social.mu_varpi;
            Ok(laplace_hitting(agent, z, rho)? * i)
        }
        _ => Ok(i),
    }
}

/// Wealth the household would need without the option to be as well off as
/// with it (EUR).
pub fn equivalent_variation(agent: &Agent, w: f64) -> Result<f64> {
    let z = agent.disposable(w);
    let c = &agent.consts;
    let r = &agent.params.retrofit;
    let beta = agent.params.agent.beta;
    match agent.regime_at(w) {
        Regime::ImmediateInvest => {
            if !(z + c.theta > 0.0) {
                return Err(Error::Domain(format!("post-adoption capital non-positive at w = {w}")));
            }
            Ok((r.eta_tilde / r.eta).powf(beta) * (z + c.theta) - z)
        }
        _ => {
            let f = agent.primal_value(w)?;
            let g = agent.params.agent.gamma;
            let ln_z = (((1.0 - g) * f).ln() + g * c.gamma_hat.ln()) / (1.0 - g);
            Ok(ln_z.exp() - z)
        }
    }
}

pub fn total_welfare(agent: &Agent, social: &SocialParams, w: f64, pi0: f64) -> Result<WelfareReport> {
    let v_ev = equivalent_variation(agent, w)?;
    let v_sc = social_cost(agent, social, agent.disposable(w), pi0)?;
    Ok(WelfareReport { v_sc, v_ev, v_total: v_ev - v_sc, regime: agent.regime_at(w) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use crate::params::ModelParams;
    use crate::stochastic::hitting_pdf;
    use approx::assert_relative_eq;

    fn case() -> (Agent, SocialParams) {
        (Agent::case_study(), SocialParams::case_study())
    }

    fn cheap(cost: f64) -> Agent {
        let mut p = ModelParams::case_study();
        p.retrofit.cost = cost;
        Agent::new(p).unwrap()
    }

    #[test]
    fn positive_theta_rebounds_always() {
        let ag = cheap(40_000.0);
        let z = ag.disposable(45_000.0);
        for t in [0.0, 1.0, 10.0, 50.0] {
            assert!(rebound_expectation(&ag, t, z).unwrap() > 0.0);
        }
    }

    #[test]
    fn rebound_sign_above_threshold() {
        let (ag, _) = case();
        let r = &ag.params.retrofit;
        let cut = -r.eta_tilde * ag.consts.theta / (r.eta_tilde - r.eta);
        let zs = ag.consts.z_star().unwrap();
        assert!(cut < zs);
        assert!(rebound_expectation(&ag, 3.0, zs * 1.5).unwrap() > 0.0);
    }

    #[test]
    fn rebound_at_time_zero_is_initial_value() {
        let ag = cheap(40_000.0);
        let z = 1e6;
        let c = &ag.consts;
        let s_post = ag.optimal_controls(z - c.h, Regime::PostInvest).unwrap().s;
        let s_cf = ag.optimal_controls(z - c.h, Regime::Counterfactual).unwrap().s;
        assert_relative_eq!(rebound_expectation(&ag, 0.0, z).unwrap(), s_post - s_cf, max_relative = 1e-10);
    }

    #[test]
    fn negative_theta_never_backfires_in_expectation() {
        let (ag, _) = case();
        for w in [0.0, 45_000.0, 600_000.0] {
            for t in [0.5, 5.0, 25.0] {
                assert!(backfire_expectation(&ag, t, ag.disposable(w)).unwrap() <= 0.0);
            }
        }
    }

    #[test]
    fn zero_theta_backfire_is_subsistence_saving() {
        let mut p = ModelParams::case_study();
        let c0 = Agent::new(p).unwrap().consts;
        // cost that makes θ vanish
        p.retrofit.cost += c0.theta * p.market.mu_r / p.retrofit.rho;
        let ag = Agent::new(p).unwrap();
        assert!(ag.consts.theta.abs() < 1e-6);
        let r = &ag.params.retrofit;
        let expect = ag.params.agent.s_sub * (1.0 / r.eta_tilde - 1.0 / r.eta);
        assert_relative_eq!(backfire_expectation(&ag, 7.0, 1e6).unwrap(), expect, max_relative = 1e-9);
    }

    #[test]
    fn waiting_expectations_match_density_quadrature() {
        let (ag, _) = case();
        let c = &ag.consts;
        let zs = c.z_star().unwrap();
        let z = ag.disposable(45_000.0);
        let r = &ag.params.retrofit;
        let scale = ag.params.agent.beta * c.phi / c.annual_price;
        for t in [2.0, 10.0, 25.0] {
            let growth = integrate(
                |u| hitting_pdf(z, zs, c.mu_z, c.sigma_z, u) * (c.mu_z * (t - u)).exp(),
                0.0,
                t,
                1e-10,
                1e-300,
            );
            let prob = integrate(|u| hitting_pdf(z, zs, c.mu_z, c.sigma_z, u), 0.0, t, 1e-10, 1e-300);
            let q = ag.params.agent.s_sub * (1.0 / r.eta_tilde - 1.0 / r.eta) * prob
                + scale * c.theta * growth;
            let rb = scale * (r.eta_tilde * (zs + c.theta) - r.eta * zs) * growth;
            assert_relative_eq!(backfire_expectation(&ag, t, z).unwrap(), q, max_relative = 1e-7);
            assert_relative_eq!(rebound_expectation(&ag, t, z).unwrap(), rb, max_relative = 1e-7);
        }
    }

    #[test]
    fn backfire_probability_properties() {
        let ag = cheap(40_000.0);
        // κ_Q is only reachable for service-heavy preferences
        let mut p = ag.params;
        p.agent.beta = 0.9;
        let heavy = Agent::new(p).unwrap();
        let kq = heavy.consts.kappa_q;
        // pick K so that θ = κ_Q
        p.retrofit.cost += (heavy.consts.theta - kq) * p.market.mu_r / p.retrofit.rho;
        let at = Agent::new(p).unwrap();
        assert_relative_eq!(at.consts.theta, kq, max_relative = 1e-9);
        assert_relative_eq!(prob_backfire(&at, 1e-12).unwrap().probability, 0.5, epsilon = 1e-3);
        // θ below κ_Q: increasing in t
        p.retrofit.cost += 0.5 * kq * p.market.mu_r / p.retrofit.rho;
        let half = Agent::new(p).unwrap();
        let mut last = 0.0;
        for t in [1.0, 5.0, 20.0, 100.0] {
            let pr = prob_backfire(&half, t).unwrap().probability;
            assert!(pr > last && pr <= 1.0);
            last = pr;
        }
        let (neg, _) = case();
        let odds = prob_backfire(&neg, 5.0).unwrap();
        assert_eq!(odds.probability, 0.0);
        assert!(odds.note.is_some());
    }

    #[test]
    fn social_cost_integral_is_linear_and_negative() {
        let (ag, s) = case();
        let i = social_cost_integral(&ag, &s, s.pi0()).unwrap();
        assert!(i < 0.0);
        let i3 = social_cost_integral(&ag, &s, 3.0 * s.pi0()).unwrap();
        assert_relative_eq!(i3, 3.0 * i, max_relative = 1e-14);
    }

    #[test]
    fn social_cost_integral_vanishes_on_boundary() {
        let s = SocialParams::case_study();
        let mut p = ModelParams::case_study();
        p.agent.beta = 0.9;
        let ag = Agent::new(p).unwrap();
        let c = &ag.consts;
        let r = &ag.params.retrofit;
        let a = &ag.params.agent;
        let r1 = epsilon_hat(&ag, &s) - s.mu_varpi;
        let r2 = r1 - c.mu_z;
        // θ at which the two terms of I cancel
        let theta_b = a.s_sub * (1.0 / r.eta - 1.0 / r.eta_tilde) / r1 * r2 * c.annual_price
            / (a.beta * c.phi);
        p.retrofit.cost += (c.theta - theta_b) * p.market.mu_r / p.retrofit.rho;
        let b = Agent::new(p).unwrap();
        let i = social_cost_integral(&b, &s, s.pi0()).unwrap();
        let scale = a.s_sub * (1.0 / r.eta - 1.0 / r.eta_tilde) / r1 * p.units.annual_price(s.pi0());
        assert!(i.abs() < 1e-9 * scale);
    }

    #[test]
    fn laplace_limits() {
        let (ag, _) = case();
        let zs = ag.consts.z_star().unwrap();
        assert_eq!(laplace_hitting(&ag, zs, 0.03).unwrap(), 1.0);
        assert!(laplace_hitting(&ag, zs * 0.5, 1e-12).unwrap() > 1.0 - 1e-6);
        let l1 = laplace_hitting(&ag, zs * 0.5, 0.01).unwrap();
        let l2 = laplace_hitting(&ag, zs * 0.5, 0.05).unwrap();
        let l3 = laplace_hitting(&ag, zs * 0.7, 0.05).unwrap();
        assert!(l1 > l2 && l3 > l2);
    }

    #[test]
    fn social_cost_constant_above_threshold_and_signed_below() {
        let (ag, s) = case();
        let zs = ag.consts.z_star().unwrap();
        let a = social_cost(&ag, &s, zs, s.pi0()).unwrap();
        let b = social_cost(&ag, &s, 2.0 * zs, s.pi0()).unwrap();
        assert_eq!(a, b);
        let mut last = 0.0;
        for c in [10.0, 30.0, 50.0, 70.0] {
            let s2 = s.with_carbon_price(c);
            let v = social_cost(&ag, &s2, zs * 0.9, s2.pi0()).unwrap();
            assert!(v <= 0.0 && v.abs() > last);
            last = v.abs();
        }
    }

    #[test]
    fn equivalent_variation_continuous_and_nonnegative() {
        let (ag, _) = case();
        let ws = ag.consts.w_star().unwrap();
        let below = equivalent_variation(&ag, ws - 1e-3).unwrap();
        let at = equivalent_variation(&ag, ws).unwrap();
        assert_relative_eq!(below, at, max_relative = 1e-5);
        for i in 0..=30 {
            assert!(equivalent_variation(&ag, ws * i as f64 / 25.0).unwrap() >= 0.0);
        }
    }

    #[test]
    fn no_retrofit_no_variation() {
        let mut p = ModelParams::case_study();
        p.retrofit.eta_tilde = p.retrofit.eta * (1.0 + 1e-12);
        p.retrofit.cost = 1e-9;
        let ag = Agent::new(p).unwrap();
        assert!(equivalent_variation(&ag, 45_000.0).unwrap().abs() < 1e-3);
    }

    #[test]
    fn report_decomposes() {
        let (ag, s) = case();
        let r = total_welfare(&ag, &s, 45_000.0, s.pi0()).unwrap();
        assert_eq!(r.v_total, r.v_ev - r.v_sc);
        assert!(r.v_total >= 0.0);
        assert_eq!(r.regime, Regime::Waiting);
    }

    #[test]
    fn cheap_retrofit_shows_social_cost() {
        // service-heavy preferences with a tiny subsistence level
        let mut p = ModelParams::case_study();
        p.agent.beta = 0.9;
        p.agent.s_sub = 1.0;
        p.retrofit.cost = 100.0;
        let ag = Agent::new(p).unwrap();
        assert!(ag.consts.theta > 0.0);
        let s = SocialParams::case_study();
        let r = total_welfare(&ag, &s, 45_000.0, s.pi0()).unwrap();
        assert!(r.v_sc > 0.0, "{r:?}");
    }
}
