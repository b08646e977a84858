//! A population of households with dispersed preferences, wealth and
//! income, and the expected diffusion of the retrofit through it.
//!
//! Curves are exact expectations over each household's own market risk:
//! the adoption share averages first-passage probabilities, and expected
//! fuel use combines the passage law with the post-adoption jump of
//! disposable capital by θ.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent_solution::{Agent, Regime};
use crate::error::{Error, Result};
use crate::numerics::{mean_se, pairwise_sum};
use crate::params::{
    derive_constants, validate, AgentParams, MarketParams, ModelParams, RetrofitParams, Threshold,
    UnitConventions,
};
use crate::stochastic::{hitting_cdf, hitting_pdf, path_rng, McEstimate};
use crate::subsidy::{optimal_subsidy_waiting, PlannerParams};

/// Joint lognormal law of income `Y` and wealth `w`:
/// `ln w = μ_w + slope·(ln Y − μ_Y) + e` with independent normal `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WealthIncomeLaw {
    pub mu_y: f64,
    pub sigma_y: f64,
    pub mu_w: f64,
    pub sigma_w: f64,
    pub slope: f64,
    /// Standard deviation of `ln w` given `ln Y`.
    pub sigma_cond: f64,
}

impl WealthIncomeLaw {
    pub fn case_study() -> Self {
        calibrate_wealth_income(45_000.0, 90_000.0, 47_000.0, 55_000.0, 1.2)
            .expect("case-study moments are consistent")
    }

    /// One draw of `(Y, w)`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let ly = self.mu_y + self.sigma_y * e1;
        let lw = self.mu_w + self.slope * (ly - self.mu_y) + self.sigma_cond * e2;
        (ly.exp(), lw.exp())
    }
}

fn lognormal_from(median: f64, mean: f64, what: &str) -> Result<(f64, f64)> {
    if !(median > 0.0) || !(mean > median) {
        return Err(Error::Config(format!(
            "{what}: need mean > median > 0 for a lognormal, got median {median}, mean {mean}"
        )));
    }
    Ok((median.ln(), (2.0 * (mean / median).ln()).sqrt()))
}

/// Fits the joint law to marginal medians and means and a log-log slope.
///
/// The conditional variance follows from the law of total variance,
/// `σ_w² = slope²σ_Y² + σ_cond²`.
pub fn calibrate_wealth_income(
    median_w: f64,
    mean_w: f64,
    median_y: f64,
    mean_y: f64,
    slope: f64,
) -> Result<WealthIncomeLaw> {
    let (mu_w, sigma_w) = lognormal_from(median_w, mean_w, "wealth")?;
    let (mu_y, sigma_y) = lognormal_from(median_y, mean_y, "income")?;
    let cond = sigma_w * sigma_w - slope * slope * sigma_y * sigma_y;
    if cond < 0.0 {
        return Err(Error::Config(format!(
            "log-log slope {slope} explains more than the whole variance of log wealth"
        )));
    }
    Ok(WealthIncomeLaw { mu_y, sigma_y, mu_w, sigma_w, slope, sigma_cond: cond.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n: usize,
    pub market: MarketParams,
    pub units: UnitConventions,
    /// Centres of the dispersed preference parameters; income and wealth
    /// come from `wealth_income`.
    pub centre: AgentParams,
    pub retrofit: RetrofitParams,
    /// Relative half-width of the uniform preference dispersion.
    pub width: f64,
    pub wealth_income: WealthIncomeLaw,
    pub seed: u64,
    /// Dwellings represented by the population.
    pub cohort_size: f64,
}

impl PopulationSpec {
    pub fn case_study() -> Self {
        let m = ModelParams::case_study();
        Self {
            n: 10_000,
            market: m.market,
            units: m.units,
            centre: m.agent,
            retrofit: m.retrofit,
            width: 0.10,
            wealth_income: WealthIncomeLaw::case_study(),
            seed: 20_240_601,
            cohort_size: 750_000.0,
        }
    }
}

/// One sampled household and its initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Member {
    pub agent: Agent,
    /// Disposable capital at t = 0.
    pub z0: f64,
    /// Subsidy rate applied to the retrofit cost.
    pub subsidy: f64,
}

impl Member {
    pub fn immediate(&self) -> bool {
        match self.agent.consts.threshold {
            Threshold::Immediate => true,
            Threshold::Finite(t) => self.z0 >= t.z_star,
        }
    }

    /// Probability of having adopted by `t`.
    pub fn adopted_by(&self, t: f64) -> f64 {
        let c = &self.agent.consts;
        match c.z_star() {
            Some(zs) if self.z0 < zs => hitting_cdf(self.z0, zs, c.mu_z, c.sigma_z, t),
            _ => 1.0,
        }
    }

    /// Adoption density at `t` (1/year).
    pub fn adoption_density(&self, t: f64) -> f64 {
        let c = &self.agent.consts;
        match c.z_star() {
            Some(zs) if self.z0 < zs => hitting_pdf(self.z0, zs, c.mu_z, c.sigma_z, t),
            _ => 0.0,
        }
    }

    /// Expected fuel use at `t` (W).
    pub fn expected_fuel(&self, t: f64) -> f64 {
        let p = &self.agent.params;
        let c = &self.agent.consts;
        let (a, r) = (&p.agent, &p.retrofit);
        let k = a.beta * c.phi / c.annual_price;
        let growth = (c.mu_z * t).exp();
        match c.z_star() {
            Some(zs) if self.z0 < zs => {
                let g = hitting_cdf(self.z0, zs, c.mu_z, c.sigma_z, t);
                let g_star = hitting_cdf(self.z0, zs, c.mu_z + c.sigma_z * c.sigma_z, c.sigma_z, t);
                a.s_sub / r.eta * (1.0 - g)
                    + a.s_sub / r.eta_tilde * g
                    + k * self.z0 * growth * (1.0 + g_star * c.theta / zs)
            }
            _ => a.s_sub / r.eta_tilde + k * (self.z0 + c.theta) * growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    pub members: Vec<Member>,
    pub immediate_share: f64,
    /// Draws rejected by validation while sampling.
    pub rejected: usize,
    /// Dwellings represented.
    pub cohort_size: f64,
    /// Members whose parameters violate the patience condition.
    pub patience_violations: usize,
}

impl Population {
    pub fn from_members(members: Vec<Member>, rejected: usize, cohort_size: f64) -> Self {
        let n = members.len().max(1) as f64;
        let immediate_share = members.iter().filter(|m| m.immediate()).count() as f64 / n;
        let patience_violations = members
            .iter()
            .filter(|m| validate(&m.agent.params).is_violated("patience"))
            .count();
        Self { members, immediate_share, rejected, cohort_size, patience_violations }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The same households under different market conditions.
    ///
    /// Patience violations are counted, not rejected.
    pub fn with_market(&self, market: MarketParams) -> Result<Self> {
        let members = self
            .members
            .par_iter()
            .map(|m| {
                let mut p = m.agent.params;
                p.market = market;
                let agent = Agent::new(p)?;
                Ok(Member { agent, z0: agent.disposable(p.agent.w0), subsidy: m.subsidy })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_members(members, self.rejected, self.cohort_size))
    }
}

fn spread<R: Rng>(rng: &mut R, centre: f64, width: f64) -> f64 {
    if width == 0.0 {
        centre
    } else {
        centre * (1.0 + width * (2.0 * rng.random::<f64>() - 1.0))
    }
}

/// Draws `spec.n` households; draws failing validation are redrawn.
pub fn sample_population(spec: &PopulationSpec) -> Result<Population> {
    if spec.n == 0 {
        return Err(Error::Domain("population needs n >= 1".into()));
    }
    if !(0.0..0.5).contains(&spec.width) {
        return Err(Error::Domain(format!("dispersion width {} outside [0, 0.5)", spec.width)));
    }
    let cap = 100 * spec.n;
    let mut members = Vec::with_capacity(spec.n);
    let mut attempt: u64 = 0;
    let mut rejected = 0;
    while members.len() < spec.n {
        if rejected >= cap {
            return Err(Error::Domain(format!(
                "population sampling rejected {rejected} draws, cap is {cap}"
            )));
        }
        let mut rng = path_rng(spec.seed, attempt);
        attempt += 1;
        let c = &spec.centre;
        let (income, w0) = spec.wealth_income.sample(&mut rng);
        let agent = AgentParams {
            beta: spread(&mut rng, c.beta, spec.width),
            gamma: spread(&mut rng, c.gamma, spec.width),
            delta: spread(&mut rng, c.delta, spec.width),
            lambda: spread(&mut rng, c.lambda, spec.width),
            x_sub: spread(&mut rng, c.x_sub, spec.width),
            s_sub: spread(&mut rng, c.s_sub, spec.width),
            income,
            w0,
        };
        let params = ModelParams { market: spec.market, agent, retrofit: spec.retrofit, units: spec.units };
        let consts = match validate(&params).passed() {
            true => derive_constants(&params).ok(),
            false => None,
        };
        match consts {
            Some(consts) => {
                let agent = Agent { params, consts };
                members.push(Member { agent, z0: agent.disposable(w0), subsidy: 0.0 });
            }
            None => rejected += 1,
        }
    }
    Ok(Population::from_members(members, rejected, spec.cohort_size))
}

/// Expected share of households that have adopted by `t`.
pub fn expected_adoption_share(pop: &Population, t: f64) -> f64 {
    let v: Vec<f64> = pop.members.par_iter().map(|m| m.adopted_by(t)).collect();
    pairwise_sum(&v) / pop.len() as f64
}

/// Instantaneous adoption rate at `t` (share per year).
pub fn adoption_rate(pop: &Population, t: f64) -> f64 {
    let v: Vec<f64> = pop.members.par_iter().map(|m| m.adoption_density(t)).collect();
    pairwise_sum(&v) / pop.len() as f64
}

/// Expected fuel use per dwelling at `t` (W).
pub fn expected_fuel(pop: &Population, t: f64) -> f64 {
    let v: Vec<f64> = pop.members.par_iter().map(|m| m.expected_fuel(t)).collect();
    pairwise_sum(&v) / pop.len() as f64
}

/// Expected fuel use of the whole cohort at `t` (kWh/year).
pub fn expected_total_consumption(pop: &Population, t: f64) -> f64 {
    let hours = pop.members.first().map_or(UnitConventions::JULIAN_HOURS, |m| m.agent.params.units.hours_per_year);
    expected_fuel(pop, t) * hours * UnitConventions::WATT_TO_KILOWATT * pop.cohort_size
}

/// Subsidises every waiting household at its own optimal rate.
///
/// Only positive rates are applied; households adopting at once would face
/// a penalty, which is dropped.
pub fn apply_subsidy_policy(pop: &Population, planner: &PlannerParams, pi0: f64) -> Result<Population> {
    let members = pop
        .members
        .par_iter()
        .map(|m| {
            if m.immediate() {
                return Ok(*m);
            }
            let r = optimal_subsidy_waiting(&m.agent, m.z0, pi0, planner)?;
            if r.m_star <= 0.0 {
                return Ok(*m);
            }
            let mut p = m.agent.params;
            p.retrofit.cost *= 1.0 - r.m_star;
            let agent = Agent::new(p)?;
            Ok(Member { agent, z0: m.z0, subsidy: r.m_star })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Population::from_members(members, pop.rejected, pop.cohort_size))
}

/// One row of a diffusion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionPoint {
    pub t: f64,
    pub share: f64,
    pub rate: f64,
    /// Cohort fuel use (kWh/year).
    pub consumption: f64,
}

pub fn diffusion_curve(pop: &Population, times: &[f64]) -> Vec<DiffusionPoint> {
    times
        .iter()
        .map(|&t| DiffusionPoint {
            t,
            share: expected_adoption_share(pop, t),
            rate: adoption_rate(pop, t),
            consumption: expected_total_consumption(pop, t),
        })
        .collect()
}

/// Whether households share one market shock in simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShockMode {
    Common,
    Independent,
}

/// Monte-Carlo mean fuel per dwelling (W) at each of `times`.
///
/// Each replication moves every member along a path of its own disposable
/// capital; adoption is detected on a grid of step `dt` with the
/// Brownian-bridge correction. Standard errors are across replications.
pub fn mc_expected_fuel(
    pop: &Population,
    times: &[f64],
    dt: f64,
    replications: usize,
    seed: u64,
    mode: ShockMode,
) -> Result<Vec<McEstimate>> {
    if replications < 2 || !(dt > 0.0) {
        return Err(Error::Domain("need at least two replications and dt > 0".into()));
    }
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let steps = (horizon / dt).round() as usize;
    let n = pop.len();
    let per_rep: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut common = path_rng(seed, r as u64);
            let shocks: Vec<f64> = match mode {
                ShockMode::Common => (0..steps).map(|_| common.sample(StandardNormal)).collect(),
                ShockMode::Independent => Vec::new(),
            };
            let mut totals = vec![0.0; times.len()];
            let mut fuel = vec![0.0; n];
            for (i, m) in pop.members.iter().enumerate() {
                let mut rng = path_rng(seed ^ 0x9e37_79b9_7f4a_7c15, (r * n + i) as u64);
                let c = &m.agent.consts;
                let p = &m.agent.params;
                let k = p.agent.beta * c.phi / c.annual_price;
                let zs = c.z_star().unwrap_or(0.0);
                let lb = zs.max(f64::MIN_POSITIVE).ln();
                let drift = c.log_drift() * dt;
                let vol = c.sigma_z * dt.sqrt();
                let var = vol * vol;
                let mut x = m.z0.ln();
                let mut adopted = m.immediate();
                // post-adoption capital relative to the never-adopt path
                let shift = if adopted { 1.0 + c.theta / m.z0 } else { 1.0 + c.theta / zs };
                let mut out = 0;
                for step in 0..=steps {
                    if step > 0 {
                        let e: f64 = match mode {
                            ShockMode::Common => shocks[step - 1],
                            ShockMode::Independent => rng.sample(StandardNormal),
                        };
                        let x1 = x + drift + vol * e;
                        if !adopted {
                            let u: f64 = rng.random();
                            let crossed = x1 >= lb || {
                                let q = (-2.0 * (lb - x) * (lb - x1) / var).exp();
                                u < q
                            };
                            adopted = crossed;
                        }
                        x = x1;
                    }
                    let t = step as f64 * dt;
                    while out < times.len() && (times[out] - t).abs() < 0.5 * dt {
                        let z = x.exp();
                        fuel[out] = if adopted {
                            p.agent.s_sub / p.retrofit.eta_tilde + k * z * shift
                        } else {
                            p.agent.s_sub / p.retrofit.eta + k * z
                        };
                        out += 1;
                    }
                }
                for (tot, f) in totals.iter_mut().zip(&fuel) {
                    *tot += f;
                }
            }
            totals.iter().map(|v| v / n as f64).collect()
        })
        .collect();
    Ok((0..times.len())
        .map(|j| {
            let col: Vec<f64> = per_rep.iter().map(|row| row[j]).collect();
            let (mean, se) = mean_se(&col);
            McEstimate { mean, se, truncation_bound: 0.0 }
        })
        .collect())
}

/// Number of members in each regime at t = 0.
pub fn regime_counts(pop: &Population) -> (usize, usize) {
    let immediate = pop.members.iter().filter(|m| m.immediate()).count();
    (immediate, pop.len() - immediate)
}

/// Regime of a member at t = 0.
pub fn initial_regime(m: &Member) -> Regime {
    if m.immediate() {
        Regime::ImmediateInvest
    } else {
        Regime::Waiting
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use approx::assert_relative_eq;

    fn small(n: usize) -> Population {
        let mut spec = PopulationSpec::case_study();
        spec.n = n;
        sample_population(&spec).unwrap()
    }

    #[test]
    fn lognormal_round_trip() {
        let law = calibrate_wealth_income(45_000.0, 90_000.0, 47_000.0, 55_000.0, 0.0).unwrap();
        assert_relative_eq!(law.mu_w.exp() * (0.5 * law.sigma_w.powi(2)).exp(), 90_000.0, max_relative = 1e-12);
        assert_relative_eq!(law.sigma_cond, law.sigma_w, max_relative = 1e-15);
        assert!(calibrate_wealth_income(45_000.0, 40_000.0, 47_000.0, 55_000.0, 1.0).is_err());
        assert!(calibrate_wealth_income(45_000.0, 46_000.0, 47_000.0, 55_000.0, 5.0).is_err());
    }

    #[test]
    fn sampled_marginals_hit_targets() {
        let law = WealthIncomeLaw::case_study();
        let mut rng = path_rng(7, 0);
        let draws: Vec<(f64, f64)> = (0..100_000).map(|_| law.sample(&mut rng)).collect();
        let mut y: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let mut w: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let mean = |v: &[f64]| pairwise_sum(v) / v.len() as f64;
        assert!((mean(&y) / 55_000.0 - 1.0).abs() < 0.01);
        assert!((mean(&w) / 90_000.0 - 1.0).abs() < 0.01);
        y.sort_by(f64::total_cmp);
        w.sort_by(f64::total_cmp);
        assert!((y[50_000] / 47_000.0 - 1.0).abs() < 0.01);
        assert!((w[50_000] / 45_000.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn zero_width_keeps_centres_and_seed_is_deterministic() {
        let mut spec = PopulationSpec::case_study();
        spec.n = 50;
        spec.width = 0.0;
        let pop = sample_population(&spec).unwrap();
        assert!(pop.members.iter().all(|m| m.agent.params.agent.beta == spec.centre.beta
            && m.agent.params.agent.s_sub == spec.centre.s_sub));
        assert_eq!(pop, sample_population(&spec).unwrap());
    }

    #[test]
    fn share_starts_at_immediate_share_and_rises() {
        let pop = small(500);
        assert_eq!(expected_adoption_share(&pop, 0.0), pop.immediate_share);
        let mut last = 0.0;
        for t in 0..=25 {
            let s = expected_adoption_share(&pop, t as f64);
            assert!(s >= last && s <= 1.0);
            last = s;
        }
    }

    #[test]
    fn rate_integrates_to_share_increment() {
        let pop = small(100);
        let inc = expected_adoption_share(&pop, 10.0) - expected_adoption_share(&pop, 0.0);
        let q = integrate(|t| adoption_rate(&pop, t), 0.0, 10.0, 1e-10, 1e-14);
        assert!((q - inc).abs() < 1e-6, "{q} vs {inc}");
        let tail: Vec<f64> = [50.0, 500.0, 5000.0].iter().map(|&t| adoption_rate(&pop, t)).collect();
        assert!(tail[2] < tail[1] && tail[1] < tail[0], "{tail:?}");
        assert!(adoption_rate(&pop, 1e6) < 1e-6);
    }

    #[test]
    fn immediate_member_fuel_is_post_adoption_fuel() {
        let pop = small(200);
        let m = pop.members.iter().find(|m| m.immediate()).unwrap();
        let c = &m.agent.consts;
        let w = m.agent.params.agent.w0;
        let post = m.agent.optimal_controls(w, Regime::PostInvest).unwrap();
        assert_relative_eq!(m.expected_fuel(0.0), post.c, max_relative = 1e-12);
        assert!(c.theta.is_finite());
    }

    #[test]
    fn subsidy_raises_immediate_share_and_lowers_fuel() {
        let pop = small(300);
        let pl = PlannerParams::case_study();
        let sub = apply_subsidy_policy(&pop, &pl, pl.social.pi0()).unwrap();
        assert!(sub.immediate_share >= pop.immediate_share);
        for t in 0..=25 {
            let t = t as f64;
            assert!(expected_fuel(&sub, t) <= expected_fuel(&pop, t) * (1.0 + 1e-12));
        }
        for (a, b) in pop.members.iter().zip(&sub.members) {
            if b.subsidy == 0.0 {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn monte_carlo_fuel_agrees() {
        let pop = small(200);
        let times = [0.0, 5.0, 10.0];
        for mode in [ShockMode::Independent, ShockMode::Common] {
            let mc = mc_expected_fuel(&pop, &times, 1.0 / 52.0, 200, 11, mode).unwrap();
            for (t, e) in times.iter().zip(&mc) {
                let exact = expected_fuel(&pop, *t);
                assert!((e.mean - exact).abs() < 3.0 * e.se + 1e-9 * exact, "{mode:?} t={t}: {} ± {} vs {exact}", e.mean, e.se);
            }
        }
    }
}
