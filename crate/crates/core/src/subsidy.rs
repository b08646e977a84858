//! The planner's choice of a subsidy rate `m` on the retrofit cost.
//!
//! A subsidy lowers the loan service, raising θ by `B₁Km` with
//! `B₁ = ρ/μ_R`, and so lowers the household's threshold `z*(m) = Λθ(m)`.
//! The planner trades the social cost of earlier adoption against the cost
//! of public funds `Ψ`. Money in `Ψ` is counted in units of
//! [`PlannerParams::money_unit`] EUR.

use serde::{Deserialize, Serialize};

use crate::agent_solution::{Agent, Regime};
use crate::error::{Error, Result};
use crate::numerics::{brent, golden_min, linspace};
use crate::stochastic::laplace_exponent;
use crate::welfare::{epsilon_hat, social_cost_integral, SocialParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Marginal cost of public funds, ≥ 1.
    pub xi0: f64,
    /// Quadratic friction per money unit.
    pub xi1: f64,
    /// EUR per money unit of `Ψ`.
    pub money_unit: f64,
    pub social: SocialParams,
}

impl PlannerParams {
    pub fn case_study() -> Self {
        Self { xi0: 2.12, xi1: 1.0, money_unit: 1000.0, social: SocialParams::case_study() }
    }

    /// Cost of transferring `x` EUR.
    pub fn psi(&self, x: f64) -> f64 {
        let v = x / self.money_unit;
        self.money_unit * (self.xi0 * v + 0.5 * self.xi1 * v * v)
    }

    /// dΨ/dx.
    pub fn psi_prime(&self, x: f64) -> f64 {
        self.xi0 + self.xi1 * x / self.money_unit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsidyResult {
    pub m_star: f64,
    /// Planner objective at the optimum (EUR).
    pub j_star: f64,
    pub regime: Regime,
    /// The optimum sits at `0`, at `m̄`, or at the rate that makes the
    /// household adopt immediately.
    pub boundary_hit: bool,
}

/// Constants of the reduced planner objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsidyTerms {
    /// Social cost of adoption without subsidy, `I(π)` (EUR).
    pub c0: f64,
    /// Change of `I(π)` per unit subsidy rate (EUR).
    pub c1: f64,
    /// ρ/μ_R.
    pub b1: f64,
    pub m_bar: f64,
}

pub fn subsidy_terms(agent: &Agent, planner: &PlannerParams, pi0: f64) -> Result<SubsidyTerms> {
    let c = &agent.consts;
    let social = &planner.social;
    let r2 = epsilon_hat(agent, social) - social.mu_varpi - c.mu_z;
    let c0 = social_cost_integral(agent, social, pi0)?;
    let pi_annual = agent.params.units.annual_price(pi0);
    let a1 = agent.params.agent.beta * c.phi * pi_annual / (c.annual_price * r2);
    let b1 = agent.params.retrofit.rho / agent.params.market.mu_r;
    Ok(SubsidyTerms { c0, c1: a1 * b1 * agent.params.retrofit.cost, b1, m_bar: c.m_bar })
}

/// Waiting-regime pieces: threshold ratio `D₀ + D₁m` and Laplace exponents.
struct Waiting {
    t: SubsidyTerms,
    d0: f64,
    d1: f64,
    e_sc: f64,
    e_psi: f64,
    cost: f64,
}

impl Waiting {
    fn new(agent: &Agent, z: f64, pi0: f64, planner: &PlannerParams) -> Result<Self> {
        let c = &agent.consts;
        let th = c
            .threshold
            .finite()
            .filter(|th| z < th.z_star && z > 0.0)
            .ok_or_else(|| Error::Regime(format!("z = {z} is not in the waiting region")))?;
        let t = subsidy_terms(agent, planner, pi0)?;
        let cost = agent.params.retrofit.cost;
        let eh = epsilon_hat(agent, &planner.social);
        Ok(Self {
            t,
            d0: th.lambda * c.theta / z,
            d1: th.lambda * t.b1 * cost / z,
            e_sc: laplace_exponent(c.mu_z, c.sigma_z, eh - planner.social.mu_varpi),
            e_psi: laplace_exponent(c.mu_z, c.sigma_z, eh),
            cost,
        })
    }

    /// Rate at which the threshold falls to the household's capital.
    fn m_hit(&self) -> f64 {
        (self.d0 - 1.0) / -self.d1
    }

    fn objective(&self, m: f64, planner: &PlannerParams) -> f64 {
        let base = (self.d0 + self.d1 * m).max(1.0);
        base.powf(self.e_sc) * (self.t.c0 + self.t.c1 * m)
            + base.powf(self.e_psi) * planner.psi(m * self.cost)
    }

    fn slope(&self, m: f64, planner: &PlannerParams) -> f64 {
        let base = self.d0 + self.d1 * m;
        let sc = self.t.c0 + self.t.c1 * m;
        let psi = planner.psi(m * self.cost);
        let dpsi = planner.psi_prime(m * self.cost) * self.cost;
        if base <= 1.0 {
            return self.t.c1 + dpsi;
        }
        self.e_sc * base.powf(self.e_sc - 1.0) * self.d1 * sc
            + base.powf(self.e_sc) * self.t.c1
            + self.e_psi * base.powf(self.e_psi - 1.0) * self.d1 * psi
            + base.powf(self.e_psi) * dpsi
    }
}

fn is_immediate(agent: &Agent, z: f64) -> bool {
    match agent.consts.z_star() {
        None => true,
        Some(zs) => z >= zs,
    }
}

/// Planner objective `J(m)` (EUR) for a household with disposable capital `z`.
pub fn planner_objective(agent: &Agent, m: f64, z: f64, pi0: f64, planner: &PlannerParams) -> Result<f64> {
    if is_immediate(agent, z) {
        let t = subsidy_terms(agent, planner, pi0)?;
        return Ok(t.c0 + t.c1 * m + planner.psi(m * agent.params.retrofit.cost));
    }
    let w = Waiting::new(agent, z, pi0, planner)?;
    if m < 0.0 || m > w.t.m_bar * (1.0 + 1e-15) {
        return Err(Error::Domain(format!(
            "subsidy rate {m} outside [0, {}] in the waiting regime",
            w.t.m_bar
        )));
    }
    Ok(w.objective(m, planner))
}

/// Optimal rate when the household adopts at once: a penalty, `m* < 0`.
pub fn optimal_subsidy_immediate(agent: &Agent, z: f64, pi0: f64, planner: &PlannerParams) -> Result<SubsidyResult> {
    if !is_immediate(agent, z) {
        return Err(Error::Regime(format!("z = {z} lies in the waiting region")));
    }
    let t = subsidy_terms(agent, planner, pi0)?;
    let k = agent.params.retrofit.cost / planner.money_unit;
    let m = -(t.c1 / planner.money_unit + planner.xi0 * k) / (planner.xi1 * k * k);
    Ok(SubsidyResult {
        m_star: m,
        j_star: planner_objective(agent, m, z, pi0, planner)?,
        regime: Regime::ImmediateInvest,
        boundary_hit: false,
    })
}

/// Number of grid points scanned before local refinement.
pub const SCAN_POINTS: usize = 512;

/// Optimal rate in `[0, m̄]` for a waiting household.
pub fn optimal_subsidy_waiting(agent: &Agent, z: f64, pi0: f64, planner: &PlannerParams) -> Result<SubsidyResult> {
    let w = Waiting::new(agent, z, pi0, planner)?;
    let m_bar = w.t.m_bar;
    if !(m_bar > 0.0) {
        return Err(Error::Domain(format!("no admissible subsidy: m_bar = {m_bar}")));
    }
    let j = |m: f64| w.objective(m, planner);
    let grid = linspace(0.0, m_bar, SCAN_POINTS);
    let vals: Vec<f64> = grid.iter().map(|&m| j(m)).collect();
    if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "planner objective not finite at m = {} (z = {z}, pi0 = {pi0})",
            grid[bad]
        )));
    }
    let i = (0..vals.len()).fold(0, |b, k| if vals[k] < vals[b] { k } else { b });
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let slope = |m: f64| w.slope(m, planner);
    let interior = if slope(lo) < 0.0 && slope(hi) > 0.0 {
        brent(slope, lo, hi, 1e-16, 1e-14, 200)?
    } else {
        golden_min(j, lo, hi, 1e-12).0
    };

    let m_hit = w.m_hit();
    let mut best = (interior, j(interior), false);
    let mut cands = vec![0.0, m_bar];
    if m_hit > 0.0 && m_hit < m_bar {
        cands.push(m_hit);
    }
    let scale = best.1.abs().max(1.0);
    for m in cands {
        let v = j(m);
        if v < best.1 - 1e-10 * scale {
            best = (m, v, true);
        }
    }
    // a refined point on top of a candidate is that candidate
    if !best.2 && ((best.0 - m_hit).abs() < 1e-9 || best.0 < 1e-12 || (m_bar - best.0) < 1e-12) {
        best.2 = true;
    }
    let grid_min = vals[i];
    if best.1 > grid_min + 1e-9 * grid_min.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "refined optimum {} above grid minimum {grid_min}",
            best.1
        )));
    }
    Ok(SubsidyResult { m_star: best.0, j_star: best.1, regime: Regime::Waiting, boundary_hit: best.2 })
}

/// Optimal rate for a household at wealth `w`, in whichever regime applies.
pub fn optimal_subsidy(agent: &Agent, w: f64, pi0: f64, planner: &PlannerParams) -> Result<SubsidyResult> {
    let z = agent.disposable(w);
    if is_immediate(agent, z) {
        optimal_subsidy_immediate(agent, z, pi0, planner)
    } else {
        optimal_subsidy_waiting(agent, z, pi0, planner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::welfare::social_cost;
    use approx::assert_relative_eq;

    fn case() -> (Agent, PlannerParams) {
        (Agent::case_study(), PlannerParams::case_study())
    }

    #[test]
    fn penalty_rate_is_flat_in_carbon_price() {
        let (ag, pl) = case();
        let z = 2.0 * ag.consts.z_star().unwrap();
        for c in [10.0, 30.0, 45.0, 70.0] {
            let pi0 = pl.social.with_carbon_price(c).pi0();
            let r = optimal_subsidy_immediate(&ag, z, pi0, &pl).unwrap();
            assert!(r.m_star < 0.0);
            assert!((r.m_star + 0.01767).abs() < 2e-4, "{}", r.m_star);
        }
    }

    #[test]
    fn penalty_limits() {
        let (ag, mut pl) = case();
        let z = 2.0 * ag.consts.z_star().unwrap();
        pl.xi1 = 1e12;
        let r = optimal_subsidy_immediate(&ag, z, pl.social.pi0(), &pl).unwrap();
        assert!(r.m_star < 0.0 && r.m_star > -1e-12);
        let (_, mut pl) = case();
        pl.xi0 = 0.0;
        assert_eq!(optimal_subsidy_immediate(&ag, z, 0.0, &pl).unwrap().m_star, 0.0);
    }

    #[test]
    fn zero_subsidy_objective_is_social_cost() {
        let (ag, pl) = case();
        let z = ag.disposable(45_000.0);
        let pi0 = pl.social.pi0();
        assert_relative_eq!(
            planner_objective(&ag, 0.0, z, pi0, &pl).unwrap(),
            social_cost(&ag, &pl.social, z, pi0).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn objective_is_convex_before_the_kink() {
        let (ag, pl) = case();
        let z = ag.disposable(45_000.0);
        let w = Waiting::new(&ag, z, pl.social.pi0(), &pl).unwrap();
        let ms = linspace(0.0, w.m_hit(), 400);
        let js: Vec<f64> = ms.iter().map(|&m| w.objective(m, &pl)).collect();
        for k in 1..js.len() - 1 {
            assert!(js[k + 1] - 2.0 * js[k] + js[k - 1] > -1e-9 * js[k].abs());
        }
    }

    #[test]
    fn full_subsidy_means_immediate_weights() {
        let (ag, pl) = case();
        let z = ag.disposable(45_000.0);
        let pi0 = pl.social.pi0();
        let t = subsidy_terms(&ag, &pl, pi0).unwrap();
        let m = t.m_bar;
        let j = planner_objective(&ag, m, z, pi0, &pl).unwrap();
        let direct = t.c0 + t.c1 * m + pl.psi(m * ag.params.retrofit.cost);
        assert_relative_eq!(j, direct, max_relative = 1e-12);
        assert!(planner_objective(&ag, 1.01 * m, z, pi0, &pl).is_err());
    }

    #[test]
    fn slope_matches_finite_difference() {
        let (ag, pl) = case();
        let z = ag.disposable(45_000.0);
        let w = Waiting::new(&ag, z, pl.social.pi0(), &pl).unwrap();
        for m in [0.001, 0.01, 0.02] {
            let h = 1e-7;
            let fd = (w.objective(m + h, &pl) - w.objective(m - h, &pl)) / (2.0 * h);
            assert_relative_eq!(fd, w.slope(m, &pl), max_relative = 1e-6);
        }
    }

    #[test]
    fn case_study_subsidy_and_stackelberg_consistency() {
        let (ag, pl) = case();
        let r = optimal_subsidy(&ag, 45_000.0, pl.social.pi0(), &pl).unwrap();
        assert!(r.m_star > 0.005 && r.m_star < 0.01, "{r:?}");
        assert!(!r.boundary_hit);
        assert!(r.j_star <= planner_objective(&ag, 0.0, ag.disposable(45_000.0), pl.social.pi0(), &pl).unwrap());
        let mut p = ag.params;
        p.retrofit.cost *= 1.0 - r.m_star;
        let sub = Agent::new(p).unwrap();
        assert!(sub.consts.theta < 0.0);
        assert!(sub.regime_at(45_000.0) == Regime::Waiting);
    }

    #[test]
    fn max_subsidy_rate_near_eight_percent() {
        let ag = Agent::new(ModelParams::case_study()).unwrap();
        assert!((ag.consts.m_bar - 0.0844).abs() < 5e-4);
    }
}
