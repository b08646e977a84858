//! Path simulation, first-passage law of a GBM, and Monte-Carlo oracles
//! for the closed forms.
//!
//! Every path `i` draws from its own ChaCha stream `(seed, i)`, so results
//! do not depend on how paths are scheduled across threads. Per-path
//! results are collected in path order and reduced by pairwise summation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent_solution::{Agent, ControlTriple, Regime};
use crate::error::{Error, Result};
use crate::numerics::{mean_se, norm_cdf, norm_pdf};
use crate::welfare::{epsilon_hat, SocialParams};

/// Discretisation and sampling settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    /// Years.
    pub horizon: f64,
    /// Step in years.
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Pair path `2k + 1` with the mirrored shocks of path `2k`.
    pub antithetic: bool,
    /// Detect barrier crossings between grid points with the Brownian-bridge
    /// crossing probability.
    pub bridge: bool,
}

impl Default for PathSpec {
    fn default() -> Self {
        Self { horizon: 50.0, dt: 1.0 / 52.0, n_paths: 10_000, seed: 20_240_601, antithetic: false, bridge: false }
    }
}

impl PathSpec {
    /// Number of steps; the horizon must be a whole number of steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Domain("path spec needs dt > 0 and horizon > 0".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::Domain("path spec needs n_paths >= 1".into()));
        }
        let n = self.horizon / self.dt;
        let k = n.round();
        if (n - k).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::Domain(format!(
                "horizon {} is not a whole number of steps of {}",
                self.horizon, self.dt
            )));
        }
        Ok(k as usize)
    }

    /// Shortest horizon on this step grid with `e^{−rate·T}` below `1e-8`.
    pub fn with_discount_horizon(mut self, rate: f64) -> Self {
        let t = (1e8f64).ln() / rate;
        self.horizon = (t / self.dt).ceil() * self.dt;
        self
    }
}

/// Random stream of path `index`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Shock source for one path honouring the antithetic pairing.
struct Shocks {
    rng: ChaCha8Rng,
    sign: f64,
}

impl Shocks {
    fn new(spec: &PathSpec, path: usize) -> Self {
        if spec.antithetic {
            let sign = if path % 2 == 0 { 1.0 } else { -1.0 };
            Self { rng: path_rng(spec.seed, (path / 2) as u64), sign }
        } else {
            Self { rng: path_rng(spec.seed, path as u64), sign: 1.0 }
        }
    }

    fn normal(&mut self) -> f64 {
        let e: f64 = self.rng.sample(StandardNormal);
        self.sign * e
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Mean and standard error, pairing antithetic partners.
fn estimate(values: &[f64], antithetic: bool) -> (f64, f64) {
    if antithetic && values.len() >= 4 {
        let pairs: Vec<f64> = values.chunks(2).map(|p| p.iter().sum::<f64>() / p.len() as f64).collect();
        mean_se(&pairs)
    } else {
        mean_se(values)
    }
}

/// Exact log-scheme GBM paths, one row per path including `z0` at t = 0.
pub fn simulate_gbm(z0: f64, mu: f64, sigma: f64, spec: &PathSpec) -> Result<Vec<Vec<f64>>> {
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("initial value must be positive, got {z0}")));
    }
    let n = spec.steps()?;
    let drift = (mu - 0.5 * sigma * sigma) * spec.dt;
    let vol = sigma * spec.dt.sqrt();
    Ok((0..spec.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut sh = Shocks::new(spec, i);
            let mut x = z0.ln();
            let mut path = Vec::with_capacity(n + 1);
            path.push(z0);
            for _ in 0..n {
                x += drift + vol * sh.normal();
                path.push(x.exp());
            }
            path
        })
        .collect())
}

/// ln Φ(x), accurate in the far left tail.
fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// P(τ ≤ t) for the first passage of `z_star` by a GBM started at `z`.
pub fn hitting_cdf(z: f64, z_star: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    if z >= z_star {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    let nu = (mu - 0.5 * sigma * sigma) / sigma;
    let b = (z_star / z).ln() / sigma;
    let st = t.sqrt();
    let first = norm_cdf((nu * t - b) / st);
    let second = (2.0 * nu * b + ln_norm_cdf((-b - nu * t) / st)).exp();
    (first + second).min(1.0)
}

/// Density of the first passage time (1/year); zero when `z ≥ z_star`,
/// where the law is a point mass at zero.
pub fn hitting_pdf(z: f64, z_star: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    if z >= z_star || t <= 0.0 {
        return 0.0;
    }
    let nu = (mu - 0.5 * sigma * sigma) / sigma;
    let b = (z_star / z).ln() / sigma;
    b / (t * t.sqrt()) * norm_pdf((b - nu * t) / t.sqrt())
}

/// E[e^{μ(t−τ)} 1{τ ≤ t}] for the passage of `z_star` from `z`.
pub fn passage_growth(z: f64, z_star: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    if z >= z_star {
        return (mu * t).exp();
    }
    z / z_star * (mu * t).exp() * hitting_cdf(z, z_star, mu + sigma * sigma, sigma, t)
}

/// Negative exponent `a` with E[e^{−ρτ}] = (z*/z)^a.
pub fn laplace_exponent(mu: f64, sigma: f64, rho: f64) -> f64 {
    let nu = (mu - 0.5 * sigma * sigma) / sigma;
    (nu - (nu * nu + 2.0 * rho).sqrt()) / sigma
}

/// Probability that a Brownian bridge with variance `var` between `x0`
/// and `x1`, both below `b`, touches `b`.
fn bridge_cross(x0: f64, x1: f64, b: f64, var: f64) -> f64 {
    let e = 2.0 * (b - x0) * (b - x1) / var;
    if e > 40.0 {
        0.0
    } else {
        (-e).exp()
    }
}

/// One simulated household.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub wealth: Vec<f64>,
    pub disposable: Vec<f64>,
    pub controls: Vec<ControlTriple>,
    pub regime: Vec<Regime>,
    /// Adoption time; `None` if the threshold is not reached within the horizon.
    pub tau_hat: Option<f64>,
    /// Rebound in energy service (°C).
    pub rebound: Vec<f64>,
    /// Backfire in fuel (W).
    pub backfire: Vec<f64>,
    /// Set when a state left the model domain.
    pub flagged: bool,
}

/// Optimally controlled paths from wealth `w0`.
///
/// Before adoption the household uses the never-adopt controls. At the
/// first grid point with `z ≥ z*` it adopts, disposable capital jumps by θ
/// and the post-adoption controls apply from then on. Rebound and backfire
/// compare against the never-adopt path driven by the same shocks.
pub fn simulate_trajectory(agent: &Agent, w0: f64, spec: &PathSpec) -> Result<Vec<Trajectory>> {
    let c = agent.consts;
    let z0 = agent.disposable(w0);
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("disposable capital non-positive at w0 = {w0}")));
    }
    let n = spec.steps()?;
    let drift = c.log_drift() * spec.dt;
    let vol = c.sigma_z * spec.dt.sqrt();
    let z_star = c.z_star().unwrap_or(0.0);
    (0..spec.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut sh = Shocks::new(spec, i);
            let mut tr = Trajectory {
                times: Vec::with_capacity(n + 1),
                wealth: Vec::with_capacity(n + 1),
                disposable: Vec::with_capacity(n + 1),
                controls: Vec::with_capacity(n + 1),
                regime: Vec::with_capacity(n + 1),
                tau_hat: None,
                rebound: Vec::with_capacity(n + 1),
                backfire: Vec::with_capacity(n + 1),
                flagged: false,
            };
            let mut x = z0.ln();
            // post-adoption capital relative to the never-adopt path
            let mut shift: Option<f64> = None;
            for k in 0..=n {
                if k > 0 {
                    x += drift + vol * sh.normal();
                }
                let t = k as f64 * spec.dt;
                let z_cf = x.exp();
                if shift.is_none() && z_cf >= z_star {
                    shift = Some(1.0 + c.theta / z_cf);
                    tr.tau_hat = Some(t);
                }
                let w_cf = z_cf - c.h;
                let cf = agent.optimal_controls(w_cf, Regime::Counterfactual)?;
                let (z, w, ctl, regime, r, q) = match shift {
                    None => (z_cf, w_cf, cf, Regime::Waiting, 0.0, 0.0),
                    Some(f) => {
                        let z_post = z_cf * f;
                        let w_post = z_post - c.h_tilde;
                        let post = agent.optimal_controls(w_post, Regime::PostInvest)?;
                        (z_post, w_post, post, Regime::PostInvest, post.s - cf.s, post.c - cf.c)
                    }
                };
                if !(z > 0.0) || !z.is_finite() {
                    tr.flagged = true;
                }
                tr.times.push(t);
                tr.wealth.push(w);
                tr.disposable.push(z);
                tr.controls.push(ctl);
                tr.regime.push(regime);
                tr.rebound.push(r);
                tr.backfire.push(q);
            }
            Ok(tr)
        })
        .collect()
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    /// Bound on the relative error from truncating the horizon.
    pub truncation_bound: f64,
}

/// Policy simulated by [`mc_value_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    PostInvest,
    Counterfactual,
    /// Never-adopt controls until the first grid crossing of `z*`, then adopt.
    ApproxWaiting,
}

/// ln of the consumption bundle per unit disposable capital under Merton
/// controls at efficiency `eff`.
fn ln_bundle(agent: &Agent, eff: f64) -> f64 {
    let a = &agent.params.agent;
    let c = &agent.consts;
    c.phi.ln() + (1.0 - a.beta) * (1.0 - a.beta).ln() + a.beta * (a.beta * eff / c.annual_price).ln()
}

/// Discounted felicity along simulated paths of the given policy.
///
/// Integrates `e^{−δ̂t} U` with the trapezoid rule over the horizon of
/// `spec`; see [`PathSpec::with_discount_horizon`].
pub fn mc_value_oracle(agent: &Agent, w0: f64, policy: Policy, spec: &PathSpec) -> Result<McEstimate> {
    let c = agent.consts;
    let g = agent.params.agent.gamma;
    let r = &agent.params.retrofit;
    let n = spec.steps()?;
    let (z0, start_post) = match policy {
        Policy::PostInvest => (w0 + c.h_tilde, true),
        Policy::Counterfactual => (w0 + c.h, false),
        Policy::ApproxWaiting => {
            if agent.regime_at(w0) != Regime::Waiting {
                return Err(Error::Regime("approx_waiting needs a waiting-region start".into()));
            }
            (w0 + c.h, false)
        }
    };
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("disposable capital non-positive at w0 = {w0}")));
    }
    let lb_post = ln_bundle(agent, r.eta_tilde);
    let lb_cf = ln_bundle(agent, r.eta);
    let z_star = c.z_star().unwrap_or(0.0);
    let drift = c.log_drift() * spec.dt;
    let vol = c.sigma_z * spec.dt.sqrt();
    let felicity = |ln_z: f64, lb: f64| -((1.0 - g) * (ln_z + lb)).exp() / (g - 1.0);
    let values: Vec<f64> = (0..spec.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut sh = Shocks::new(spec, i);
            let mut x = z0.ln();
            let mut post = start_post;
            // log of the adoption jump factor once adopted
            let mut jump = 0.0;
            let mut total = 0.0;
            for k in 0..=n {
                if k > 0 {
                    x += drift + vol * sh.normal();
                }
                if policy == Policy::ApproxWaiting && !post && x.exp() >= z_star {
                    post = true;
                    jump = (1.0 + c.theta / x.exp()).ln();
                }
                let u = if post { felicity(x + jump, lb_post) } else { felicity(x, lb_cf) };
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                total += w * (-c.delta_hat * k as f64 * spec.dt).exp() * u;
            }
            total * spec.dt
        })
        .collect();
    let (mean, se) = estimate(&values, spec.antithetic);
    Ok(McEstimate { mean, se, truncation_bound: (-c.phi * spec.horizon).exp() })
}

/// Simulated first-passage times of `z_star` from `z0`, one per path,
/// detected on the grid every `stride` steps for each stride. `None` when
/// no crossing happens within the horizon. With `spec.bridge` the
/// finest grid also counts bridge crossings and the time is the midpoint of
/// the crossing step.
pub fn passage_times(
    z0: f64,
    z_star: f64,
    mu: f64,
    sigma: f64,
    spec: &PathSpec,
    strides: &[usize],
) -> Result<Vec<Vec<Option<f64>>>> {
    let n = spec.steps()?;
    if !(z0 > 0.0 && z_star > 0.0) {
        return Err(Error::Domain("passage needs positive start and barrier".into()));
    }
    if strides.iter().any(|&s| s == 0 || n % s != 0) {
        return Err(Error::Domain("strides must divide the number of steps".into()));
    }
    let drift = (mu - 0.5 * sigma * sigma) * spec.dt;
    let var = sigma * sigma * spec.dt;
    let vol = var.sqrt();
    let b = z_star.ln();
    let rows: Vec<Vec<Option<f64>>> = (0..spec.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut sh = Shocks::new(spec, i);
            let mut out = vec![None; strides.len()];
            let mut x = z0.ln();
            if x >= b {
                return vec![Some(0.0); strides.len()];
            }
            for k in 1..=n {
                let x0 = x;
                x += drift + vol * sh.normal();
                let u = if spec.bridge { sh.uniform() } else { 1.0 };
                for (j, &s) in strides.iter().enumerate() {
                    if out[j].is_some() || k % s != 0 {
                        continue;
                    }
                    let t = k as f64 * spec.dt;
                    if x >= b {
                        out[j] = Some(if spec.bridge && s == 1 { t - 0.5 * spec.dt } else { t });
                    } else if spec.bridge && s == 1 && u < bridge_cross(x0, x, b, var) {
                        out[j] = Some(t - 0.5 * spec.dt);
                    }
                }
                if out.iter().all(|o| o.is_some()) {
                    break;
                }
            }
            out
        })
        .collect();
    Ok(rows)
}

/// Empirical P(τ ≤ t) with binomial standard errors.
pub fn mc_hitting_frequencies(agent: &Agent, z0: f64, times: &[f64], spec: &PathSpec) -> Result<Vec<(f64, f64)>> {
    let c = agent.consts;
    let z_star = c.z_star().ok_or_else(|| Error::Regime("no threshold in the immediate regime".into()))?;
    let tau = passage_times(z0, z_star, c.mu_z, c.sigma_z, spec, &[1])?;
    Ok(times
        .iter()
        .map(|&t| {
            // bridge-detected times sit mid-step, before their grid time
            let hits = tau.iter().filter(|r| matches!(r[0], Some(s) if s <= t + 1e-9)).count();
            let p = hits as f64 / tau.len() as f64;
            (p, (p * (1.0 - p) / tau.len() as f64).sqrt())
        })
        .collect())
}

/// E[e^{−ρτ}] by simulation.
pub fn mc_laplace_oracle(agent: &Agent, z0: f64, rho: f64, spec: &PathSpec) -> Result<McEstimate> {
    let c = agent.consts;
    let z_star = c.z_star().ok_or_else(|| Error::Regime("no threshold in the immediate regime".into()))?;
    let tau = passage_times(z0, z_star, c.mu_z, c.sigma_z, spec, &[1])?;
    let values: Vec<f64> = tau.iter().map(|r| r[0].map_or(0.0, |t| (-rho * t).exp())).collect();
    let (mean, se) = estimate(&values, spec.antithetic);
    Ok(McEstimate { mean, se, truncation_bound: (-rho * spec.horizon).exp() })
}

/// Simulated welfare processes at a set of times plus the social cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareMc {
    pub times: Vec<f64>,
    pub rebound: Vec<(f64, f64)>,
    pub backfire: Vec<(f64, f64)>,
    /// Frequency of `Q_t > 0` with its binomial standard error.
    pub prob_backfire: Vec<(f64, f64)>,
    pub v_sc: McEstimate,
}

/// Joint simulation of disposable capital and the marginal social cost
/// (independent GBMs) from disposable capital `z0` at carbon cost `pi0`.
///
/// `times` must lie on the step grid. The social cost is integrated with
/// the trapezoid rule over the horizon of `spec`.
pub fn mc_welfare_oracle(
    agent: &Agent,
    social: &SocialParams,
    z0: f64,
    pi0: f64,
    times: &[f64],
    spec: &PathSpec,
) -> Result<WelfareMc> {
    let c = agent.consts;
    let a = &agent.params.agent;
    let r = &agent.params.retrofit;
    let n = spec.steps()?;
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("disposable capital must be positive, got {z0}")));
    }
    let idx: Vec<usize> = times
        .iter()
        .map(|&t| {
            let k = (t / spec.dt).round();
            if (k * spec.dt - t).abs() > 1e-9 || k as usize > n {
                Err(Error::Domain(format!("time {t} is not on the simulation grid")))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<_>>()?;
    let (waiting, z_star) = match c.z_star() {
        Some(zs) if z0 < zs => (true, zs),
        _ => (false, z0),
    };
    let floor = a.s_sub * (1.0 / r.eta_tilde - 1.0 / r.eta);
    let scale = a.beta * c.phi / c.annual_price;
    let eps_hat = epsilon_hat(agent, social);
    let drift = c.log_drift() * spec.dt;
    let var = c.sigma_z * c.sigma_z * spec.dt;
    let vol = var.sqrt();
    let b = z_star.ln();
    let sp = social.sigma_varpi;
    let s_drift = (social.mu_varpi - 0.5 * sp * sp) * spec.dt;
    let s_vol = sp * spec.dt.sqrt();
    let pi_annual = agent.params.units.annual_price(pi0);

    struct PathOut {
        r: Vec<f64>,
        q: Vec<f64>,
        v: f64,
    }
    let outs: Vec<PathOut> = (0..spec.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut sh = Shocks::new(spec, i);
            let mut x = z0.ln();
            let mut hit = if waiting { None } else { Some(0usize) };
            // log social cost, drawn exactly at adoption
            let mut lv = 0.0;
            let mut rr = vec![0.0; idx.len()];
            let mut qq = vec![0.0; idx.len()];
            let mut v = 0.0;
            let mut next = 0;
            if hit.is_some() {
                lv = pi_annual.ln();
            }
            for k in 0..=n {
                if k > 0 {
                    let x0 = x;
                    x += drift + vol * sh.normal();
                    if hit.is_none() {
                        let u = if spec.bridge { sh.uniform() } else { 1.0 };
                        let crossed = x >= b || (spec.bridge && u < bridge_cross(x0, x, b, var));
                        if crossed {
                            hit = Some(k);
                            let t = k as f64 * spec.dt;
                            lv = pi_annual.ln()
                                + (social.mu_varpi - 0.5 * sp * sp) * t
                                + sp * t.sqrt() * sh.normal();
                        }
                    } else {
                        lv += s_drift + s_vol * sh.normal();
                    }
                }
                let (rk, qk) = match hit {
                    Some(_) => {
                        let m = (x - b).exp();
                        (
                            scale * (r.eta_tilde * (z_star + c.theta) - r.eta * z_star) * m,
                            floor + scale * c.theta * m,
                        )
                    }
                    None => (0.0, 0.0),
                };
                if hit.is_some() {
                    let t = k as f64 * spec.dt;
                    let w = if k == 0 || k == n || hit == Some(k) && k > 0 { 0.5 } else { 1.0 };
                    v += w * (-eps_hat * t + lv).exp() * qk;
                }
                while next < idx.len() && idx[next] == k {
                    rr[next] = rk;
                    qq[next] = qk;
                    next += 1;
                }
            }
            PathOut { r: rr, q: qq, v: v * spec.dt }
        })
        .collect();

    let col = |f: &dyn Fn(&PathOut) -> f64| -> (f64, f64) {
        let xs: Vec<f64> = outs.iter().map(f).collect();
        estimate(&xs, spec.antithetic)
    };
    let rebound = (0..idx.len()).map(|j| col(&|o: &PathOut| o.r[j])).collect();
    let backfire = (0..idx.len()).map(|j| col(&|o: &PathOut| o.q[j])).collect();
    let prob_backfire = (0..idx.len())
        .map(|j| {
            let p = outs.iter().filter(|o| o.q[j] > 0.0).count() as f64 / outs.len() as f64;
            (p, (p * (1.0 - p) / outs.len() as f64).sqrt())
        })
        .collect();
    let (mean, se) = col(&|o: &PathOut| o.v);
    let rate = eps_hat - social.mu_varpi;
    Ok(WelfareMc {
        times: times.to_vec(),
        rebound,
        backfire,
        prob_backfire,
        v_sc: McEstimate { mean, se, truncation_bound: (-rate * spec.horizon).exp() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use approx::assert_relative_eq;

    fn spec(n_paths: usize, horizon: f64, dt: f64) -> PathSpec {
        PathSpec { horizon, dt, n_paths, ..PathSpec::default() }
    }

    #[test]
    fn gbm_terminal_moments() {
        let (mu, sigma) = (0.05, 0.3);
        let s = spec(20_000, 2.0, 0.5);
        let paths = simulate_gbm(1.0, mu, sigma, &s).unwrap();
        let last: Vec<f64> = paths.iter().map(|p| *p.last().unwrap()).collect();
        let (m, se) = mean_se(&last);
        assert!((m - (2.0 * mu).exp()).abs() < 4.0 * se);
        let logs: Vec<f64> = last.iter().map(|x| x.ln()).collect();
        let (lm, lse) = mean_se(&logs);
        assert!((lm - 2.0 * (mu - 0.5 * sigma * sigma)).abs() < 4.0 * lse);
    }

    #[test]
    fn zero_volatility_is_deterministic() {
        let paths = simulate_gbm(2.0, 0.03, 0.0, &spec(3, 1.0, 0.25)).unwrap();
        for p in &paths {
            for (k, z) in p.iter().enumerate() {
                assert_relative_eq!(*z, 2.0 * (0.03 * 0.25 * k as f64).exp(), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn same_seed_same_paths() {
        let s = spec(64, 1.0, 0.1);
        assert_eq!(simulate_gbm(1.0, 0.0, 0.2, &s).unwrap(), simulate_gbm(1.0, 0.0, 0.2, &s).unwrap());
        let other = PathSpec { seed: 1, ..s };
        assert_ne!(simulate_gbm(1.0, 0.0, 0.2, &s).unwrap(), simulate_gbm(1.0, 0.0, 0.2, &other).unwrap());
    }

    #[test]
    fn antithetic_partners_mirror() {
        let s = PathSpec { antithetic: true, ..spec(4, 1.0, 0.5) };
        let p = simulate_gbm(1.0, 0.0, 0.2, &s).unwrap();
        let drift = -0.5 * 0.04 * 0.5;
        for k in 1..p[0].len() {
            let a = (p[0][k] / p[0][k - 1]).ln() - drift;
            let b = (p[1][k] / p[1][k - 1]).ln() - drift;
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn horizon_must_fit_the_grid() {
        assert!(spec(1, 1.0, 0.3).steps().is_err());
        assert_eq!(spec(1, 1.0, 0.25).steps().unwrap(), 4);
    }

    #[test]
    fn hitting_cdf_is_a_distribution() {
        let (z, zs, mu, s) = (1.0, 1.5, 0.04, 0.2);
        assert_eq!(hitting_cdf(z, zs, mu, s, 0.0), 0.0);
        assert_eq!(hitting_cdf(2.0, zs, mu, s, 1.0), 1.0);
        let mut last = 0.0;
        for t in 1..200 {
            let p = hitting_cdf(z, zs, mu, s, t as f64);
            assert!(p >= last && p <= 1.0);
            last = p;
        }
        assert!(last > 0.9 && hitting_cdf(z, zs, mu, s, 5000.0) > 0.999_999);
        let q = integrate(|t| hitting_pdf(z, zs, mu, s, t), 1e-9, 10.0, 1e-10, 1e-14);
        assert_relative_eq!(q, hitting_cdf(z, zs, mu, s, 10.0), max_relative = 1e-7);
    }

    #[test]
    fn negative_drift_may_never_hit() {
        let (z, zs, mu, s): (f64, f64, f64, f64) = (1.0, 2.0, -0.05, 0.2);
        let nu = mu - 0.5 * s * s;
        let never = (2.0 * nu / (s * s) * (zs / z).ln()).exp();
        assert_relative_eq!(hitting_cdf(z, zs, mu, s, 1e6), never, max_relative = 1e-9);
    }

    #[test]
    fn laplace_exponent_matches_transform_of_density() {
        let (z, zs, mu, s, rho) = (1.0, 1.3, 0.02, 0.15, 0.05);
        let q = integrate(|t| (-rho * t).exp() * hitting_pdf(z, zs, mu, s, t), 1e-9, 2000.0, 1e-10, 1e-14);
        assert_relative_eq!(q, (zs / z).powf(laplace_exponent(mu, s, rho)), max_relative = 1e-6);
    }

    #[test]
    fn passage_growth_matches_quadrature() {
        let (z, zs, mu, s, t) = (1.0, 1.4, 0.03, 0.2, 12.0);
        let q = integrate(|u| (mu * (t - u)).exp() * hitting_pdf(z, zs, mu, s, u), 1e-9, t, 1e-11, 1e-14);
        assert_relative_eq!(passage_growth(z, zs, mu, s, t), q, max_relative = 1e-7);
    }

    #[test]
    fn finer_grids_detect_more_crossings() {
        let s = spec(2000, 10.0, 1.0 / 64.0);
        let tau = passage_times(1.0, 1.2, 0.0, 0.2, &s, &[1, 4, 16, 64]).unwrap();
        let counts: Vec<usize> = (0..4).map(|j| tau.iter().filter(|r| r[j].is_some()).count()).collect();
        assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
        for r in &tau {
            for j in 1..4 {
                if let (Some(a), Some(b)) = (r[j - 1], r[j]) {
                    assert!(a <= b);
                }
            }
        }
    }

    #[test]
    fn trajectory_adopts_once_and_jumps_by_theta() {
        let agent = Agent::case_study();
        let s = PathSpec { n_paths: 20, horizon: 25.0, ..PathSpec::default() };
        let w_star = agent.consts.w_star().unwrap();
        for tr in simulate_trajectory(&agent, 0.999 * w_star, &s).unwrap() {
            assert!(!tr.flagged);
            if let Some(t) = tr.tau_hat {
                let k = (t / s.dt).round() as usize;
                assert_eq!(tr.regime[k], Regime::PostInvest);
                assert!(k == 0 || tr.regime[k - 1] == Regime::Waiting);
                assert!(tr.regime[k..].iter().all(|r| *r == Regime::PostInvest));
            } else {
                assert!(tr.rebound.iter().all(|r| *r == 0.0));
            }
        }
    }
}
