//! Studies built on the solvers: local elasticities, the accuracy of the
//! approximate waiting controls, the optimal depth of a retrofit and
//! volatility scenarios for the population.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent_solution::{Agent, Regime};
use crate::aggregate::{apply_subsidy_policy, diffusion_curve, DiffusionPoint, Population};
use crate::error::{Error, Result};
use crate::numerics::{golden_min, linspace};
use crate::params::{characteristic_root, ModelParams};
use crate::subsidy::{optimal_subsidy, PlannerParams};
use crate::welfare::total_welfare;

/// A household, its market and the planner, at one wealth level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub model: ModelParams,
    pub planner: PlannerParams,
}

impl Scenario {
    pub fn case_study() -> Self {
        Self { model: ModelParams::case_study(), planner: PlannerParams::case_study() }
    }

    pub fn agent(&self) -> Result<Agent> {
        Agent::new(self.model)
    }

    pub fn pi0(&self) -> f64 {
        self.planner.social.pi0()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    MuR,
    MuS,
    SigmaS,
    Price,
    Income,
    Wealth,
    Beta,
    Gamma,
    Delta,
    Lambda,
    XSub,
    SSub,
    Eta,
    EtaTilde,
    Rho,
    Cost,
    Epsilon,
    CarbonPrice,
    MuVarpi,
    Xi0,
    Xi1,
}

impl Param {
    pub const ALL: [Param; 21] = [
        Param::MuR,
        Param::MuS,
        Param::SigmaS,
        Param::Price,
        Param::Income,
        Param::Wealth,
        Param::Beta,
        Param::Gamma,
        Param::Delta,
        Param::Lambda,
        Param::XSub,
        Param::SSub,
        Param::Eta,
        Param::EtaTilde,
        Param::Rho,
        Param::Cost,
        Param::Epsilon,
        Param::CarbonPrice,
        Param::MuVarpi,
        Param::Xi0,
        Param::Xi1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Param::MuR => "mu_R",
            Param::MuS => "mu_S",
            Param::SigmaS => "sigma_S",
            Param::Price => "P",
            Param::Income => "Y",
            Param::Wealth => "w",
            Param::Beta => "beta",
            Param::Gamma => "gamma",
            Param::Delta => "delta",
            Param::Lambda => "lambda",
            Param::XSub => "x_sub",
            Param::SSub => "s_sub",
            Param::Eta => "eta",
            Param::EtaTilde => "eta_tilde",
            Param::Rho => "rho",
            Param::Cost => "K",
            Param::Epsilon => "epsilon",
            Param::CarbonPrice => "carbon_price",
            Param::MuVarpi => "mu_varpi",
            Param::Xi0 => "xi0",
            Param::Xi1 => "xi1",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Whether the parameter moves the household's threshold.
    pub fn affects_threshold(&self) -> bool {
        !matches!(
            self,
            Param::Wealth | Param::Epsilon | Param::CarbonPrice | Param::MuVarpi | Param::Xi0 | Param::Xi1
        )
    }

    pub fn get(&self, s: &Scenario) -> f64 {
        let (m, a, r, pl) = (&s.model.market, &s.model.agent, &s.model.retrofit, &s.planner);
        match self {
            Param::MuR => m.mu_r,
            Param::MuS => m.mu_s,
            Param::SigmaS => m.sigma_s,
            Param::Price => m.price,
            Param::Income => a.income,
            Param::Wealth => a.w0,
            Param::Beta => a.beta,
            Param::Gamma => a.gamma,
            Param::Delta => a.delta,
            Param::Lambda => a.lambda,
            Param::XSub => a.x_sub,
            Param::SSub => a.s_sub,
            Param::Eta => r.eta,
            Param::EtaTilde => r.eta_tilde,
            Param::Rho => r.rho,
            Param::Cost => r.cost,
            Param::Epsilon => pl.social.epsilon,
            Param::CarbonPrice => pl.social.carbon_price,
            Param::MuVarpi => pl.social.mu_varpi,
            Param::Xi0 => pl.xi0,
            Param::Xi1 => pl.xi1,
        }
    }

    pub fn with(&self, s: &Scenario, v: f64) -> Scenario {
        let mut s = *s;
        let (m, a, r, pl) = (&mut s.model.market, &mut s.model.agent, &mut s.model.retrofit, &mut s.planner);
        let slot = match self {
            Param::MuR => &mut m.mu_r,
            Param::MuS => &mut m.mu_s,
            Param::SigmaS => &mut m.sigma_s,
            Param::Price => &mut m.price,
            Param::Income => &mut a.income,
            Param::Wealth => &mut a.w0,
            Param::Beta => &mut a.beta,
            Param::Gamma => &mut a.gamma,
            Param::Delta => &mut a.delta,
            Param::Lambda => &mut a.lambda,
            Param::XSub => &mut a.x_sub,
            Param::SSub => &mut a.s_sub,
            Param::Eta => &mut r.eta,
            Param::EtaTilde => &mut r.eta_tilde,
            Param::Rho => &mut r.rho,
            Param::Cost => &mut r.cost,
            Param::Epsilon => &mut pl.social.epsilon,
            Param::CarbonPrice => &mut pl.social.carbon_price,
            Param::MuVarpi => &mut pl.social.mu_varpi,
            Param::Xi0 => &mut pl.xi0,
            Param::Xi1 => &mut pl.xi1,
        };
        *slot = v;
        s
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    WStar,
    MStar,
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::WStar => "w_star",
            Target::MStar => "m_star",
        }
    }

    /// Target value at a scenario.
    pub fn eval(&self, s: &Scenario) -> Result<f64> {
        let agent = s.agent()?;
        match self {
            Target::WStar => agent
                .consts
                .w_star()
                .ok_or_else(|| Error::Regime("adoption is immediate: no finite threshold".into())),
            Target::MStar => Ok(optimal_subsidy(&agent, s.model.agent.w0, s.pi0(), &s.planner)?.m_star),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedFormDerivative,
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElasticityEntry {
    pub param: Param,
    pub target: Target,
    pub value: f64,
    pub method: Method,
    /// Relative change of the estimate when the step is halved; zero for
    /// closed forms.
    pub richardson_gap: f64,
}

/// Relative step of the central differences.
pub const FD_STEP: f64 = 1e-4;

fn regime_signature(s: &Scenario) -> Result<(Regime, bool)> {
    let agent = s.agent()?;
    let r = optimal_subsidy(&agent, s.model.agent.w0, s.pi0(), &s.planner)?;
    Ok((r.regime, r.boundary_hit))
}

fn central(target: Target, param: Param, base: &Scenario, y0: f64, h: f64) -> Result<f64> {
    let p0 = param.get(base);
    let up = param.with(base, p0 * (1.0 + h));
    let dn = param.with(base, p0 * (1.0 - h));
    let sig = regime_signature(base)?;
    if target == Target::MStar && (regime_signature(&up)? != sig || regime_signature(&dn)? != sig) {
        return Err(Error::Regime(format!(
            "elasticity undefined across regime boundary ({param})"
        )));
    }
    Ok((target.eval(&up)? - target.eval(&dn)?) / (2.0 * h * y0))
}

/// Elasticity by central differences with a Richardson check.
pub fn elasticity_fd(target: Target, param: Param, base: &Scenario) -> Result<ElasticityEntry> {
    let y0 = target.eval(base)?;
    let e1 = central(target, param, base, y0, FD_STEP)?;
    let e2 = central(target, param, base, y0, 0.5 * FD_STEP)?;
    let gap = if e2 != 0.0 { ((e1 - e2) / e2).abs() } else { (e1 - e2).abs() };
    Ok(ElasticityEntry {
        param,
        target,
        value: (4.0 * e2 - e1) / 3.0,
        method: Method::CentralDifference,
        richardson_gap: gap,
    })
}

/// dw*/dp from the analytic chain through `Λ`, `a₀`, `θ` and `H`.
fn w_star_derivative(param: Param, s: &Scenario) -> Result<f64> {
    let ModelParams { market: m, agent: a, retrofit: r, .. } = s.model;
    let agent = s.agent()?;
    let c = &agent.consts;
    let th = c
        .threshold
        .finite()
        .ok_or_else(|| Error::Regime("adoption is immediate: no finite threshold".into()))?;
    let g = a.gamma;
    let kappa = c.kappa_mpr;
    let a0 = c.a0;
    let pa = c.annual_price;
    let ln_ratio = (r.eta_tilde / r.eta).ln();
    let rr = (a.beta * c.gamma_exp * ln_ratio).exp();
    let num = (1.0 + a0) * (g - 1.0) / (rr - 1.0) - a0;
    let den = a0 * g + g - 1.0;
    let lam = th.lambda;
    debug_assert!(((num / den) - lam).abs() <= 1e-9 * lam.abs());

    // partials of Λ in (a₀, γ, r)
    let dl = |dnum: f64, dden: f64| (dnum * den - num * dden) / (den * den);
    let l_a0 = dl((g - 1.0) / (rr - 1.0) - 1.0, g);
    let l_r = dl(-(1.0 + a0) * (g - 1.0) / ((rr - 1.0) * (rr - 1.0)), 0.0);
    let l_g_direct = dl((1.0 + a0) / (rr - 1.0), a0 + 1.0);

    // implicit derivative of a₀
    let q_a = 0.5 * kappa * kappa * (2.0 * a0 + 1.0) - (c.delta_hat - m.mu_r);
    let a0_kappa = -(kappa * a0 * (a0 + 1.0)) / q_a;
    let a0_dhat = (a0 + 1.0) / q_a;
    let a0_mur = -a0 / q_a;
    debug_assert!((characteristic_root(kappa, c.delta_hat, m.mu_r) - a0).abs() < 1e-12);

    let saving = a.s_sub * (1.0 / r.eta - 1.0 / r.eta_tilde) * pa;
    let theta = c.theta;
    let h = c.h;
    let (mut d_lam, mut d_theta, mut d_h) = (0.0, 0.0, 0.0);
    match param {
        Param::MuR => {
            d_lam = l_a0 * (a0_kappa * (-1.0 / m.sigma_s) + a0_mur);
            d_theta = -theta / m.mu_r;
            d_h = -h / m.mu_r;
        }
        Param::MuS => d_lam = l_a0 * a0_kappa / m.sigma_s,
        Param::SigmaS => d_lam = l_a0 * a0_kappa * (-kappa / m.sigma_s),
        Param::Price => {
            d_theta = saving / m.price / m.mu_r;
            d_h = -a.s_sub * pa / (r.eta * m.price * m.mu_r);
        }
        Param::Income => d_h = 1.0 / m.mu_r,
        Param::Beta => d_lam = l_r * rr * c.gamma_exp * ln_ratio,
        Param::Gamma => {
            let r_g = rr * a.beta * ln_ratio * (-1.0 / (g * g));
            d_lam = l_g_direct + l_r * r_g;
        }
        Param::Delta | Param::Lambda => d_lam = l_a0 * a0_dhat,
        Param::XSub => d_h = -1.0 / m.mu_r,
        Param::SSub => {
            d_theta = saving / a.s_sub / m.mu_r;
            d_h = -pa / (r.eta * m.mu_r);
        }
        Param::Eta => {
            d_lam = l_r * rr * a.beta * c.gamma_exp * (-1.0 / r.eta);
            d_theta = -a.s_sub * pa / (r.eta * r.eta) / m.mu_r;
            d_h = a.s_sub * pa / (r.eta * r.eta) / m.mu_r;
        }
        Param::EtaTilde => {
            d_lam = l_r * rr * a.beta * c.gamma_exp / r.eta_tilde;
            d_theta = a.s_sub * pa / (r.eta_tilde * r.eta_tilde) / m.mu_r;
        }
        Param::Rho => d_theta = -r.cost / m.mu_r,
        Param::Cost => d_theta = -r.rho / m.mu_r,
        Param::Wealth | Param::Epsilon | Param::CarbonPrice | Param::MuVarpi | Param::Xi0 | Param::Xi1 => {
            return Err(Error::Domain(format!("{param} does not enter w*")));
        }
    }
    Ok(d_lam * theta + lam * d_theta - d_h)
}

/// Elasticity of `target` with respect to `param` at `base`: closed form
/// for `w*`, central differences for `m*`.
pub fn elasticity(target: Target, param: Param, base: &Scenario) -> Result<ElasticityEntry> {
    match target {
        Target::WStar => {
            let w = target.eval(base)?;
            let d = w_star_derivative(param, base)?;
            Ok(ElasticityEntry {
                param,
                target,
                value: d * param.get(base) / w,
                method: Method::ClosedFormDerivative,
                richardson_gap: 0.0,
            })
        }
        Target::MStar => elasticity_fd(target, param, base),
    }
}

/// Every elasticity of `w*` and `m*`, in table order.
pub fn elasticity_table(base: &Scenario) -> Result<Vec<ElasticityEntry>> {
    let cells: Vec<(Param, Target)> = Param::ALL
        .iter()
        .flat_map(|&p| {
            let w = p.affects_threshold().then_some((p, Target::WStar));
            w.into_iter().chain(std::iter::once((p, Target::MStar)))
        })
        .collect();
    cells.par_iter().map(|&(p, t)| elasticity(t, p, base)).collect()
}

/// Relative error of the approximate waiting controls at one wealth level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxErrorRow {
    pub w: f64,
    pub err_a: f64,
    pub err_x: f64,
    pub err_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxErrorStudy {
    pub rows: Vec<ApproxErrorRow>,
    pub max_abs_a: f64,
    pub max_abs_x: f64,
    pub max_abs_s: f64,
    /// Approximation never overstates the risky allocation.
    pub a_underestimated: bool,
    /// Approximation never understates consumption or service.
    pub xs_overestimated: bool,
}

/// Compares approximate and exact waiting controls on `n` wealth levels in
/// `(0, w*)`.
pub fn approximation_error_study(agent: &Agent, n: usize) -> Result<ApproxErrorStudy> {
    if agent.consts.theta >= 0.0 {
        return Err(Error::Regime("approximation study needs theta < 0".into()));
    }
    let w_star = agent.consts.w_star().expect("theta < 0 has a finite threshold");
    let rows = (1..=n)
        .into_par_iter()
        .map(|k| {
            let w = w_star * k as f64 / (n + 1) as f64;
            let exact = agent.optimal_controls(w, Regime::Waiting)?;
            let approx = agent.approx_controls(w)?;
            Ok(ApproxErrorRow {
                w,
                err_a: approx.exposure / exact.exposure - 1.0,
                err_x: approx.x / exact.x - 1.0,
                err_s: approx.s / exact.s - 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&ApproxErrorRow) -> f64| rows.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
    Ok(ApproxErrorStudy {
        max_abs_a: max(|r| r.err_a),
        max_abs_x: max(|r| r.err_x),
        max_abs_s: max(|r| r.err_s),
        a_underestimated: rows.iter().all(|r| r.err_a <= 0.0),
        xs_overestimated: rows.iter().all(|r| r.err_x >= 0.0 && r.err_s >= 0.0),
        rows,
    })
}

/// `L / (1 + e^{−k(x − x0)})` with `x` in kEUR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub l: f64,
    pub k: f64,
    pub x0: f64,
}

impl Logistic {
    pub fn eval(&self, x: f64) -> f64 {
        self.l / (1.0 + (-self.k * (x - self.x0)).exp())
    }

    /// Gradient in `(L, k, x0)`.
    fn grad(&self, x: f64) -> [f64; 3] {
        let e = (-self.k * (x - self.x0)).exp();
        let d = 1.0 + e;
        let s = self.l * e / (d * d);
        [1.0 / d, s * (x - self.x0), -s * self.k]
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-300 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][j] = b[i];
        }
        *o = det(m) / d;
    }
    Some(out)
}

/// Least-squares logistic through `(x, y)` points by damped Gauss-Newton.
pub fn fit_logistic(points: &[(f64, f64)]) -> Result<Logistic> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "logistic fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    let span = xs[xs.len() - 1] - xs[0];
    if !(span > 0.0) {
        return Err(Error::Domain("logistic fit needs distinct abscissae".into()));
    }
    let ymax = points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let mut p = Logistic { l: 1.05 * ymax, k: 4.0 / span, x0: xs[xs.len() / 2] };
    let sse = |q: &Logistic| points.iter().map(|&(x, y)| (q.eval(x) - y).powi(2)).sum::<f64>();
    let mut cost = sse(&p);
    let mut mu = 1e-3;
    for _ in 0..500 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(x, y) in points {
            let g = p.grad(x);
            let r = y - p.eval(x);
            for i in 0..3 {
                jtr[i] += g[i] * r;
                for j in 0..3 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let mut improved = false;
        while mu < 1e12 {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += mu * jtj[i][i].max(1e-300);
            }
            if let Some(step) = solve3(a, jtr) {
                let cand = Logistic { l: p.l + step[0], k: p.k + step[1], x0: p.x0 + step[2] };
                let c = sse(&cand);
                if c.is_finite() && c < cost {
                    let done = (cost - c) <= 1e-30 + 1e-15 * cost;
                    p = cand;
                    cost = c;
                    mu = (mu * 0.3).max(1e-12);
                    improved = !done;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !(p.l.is_finite() && p.k.is_finite() && p.x0.is_finite()) {
        return Err(Error::Numeric("logistic fit diverged".into()));
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthRow {
    /// Total retrofit cost (EUR).
    pub k: f64,
    pub eta_tilde: f64,
    /// Household value at the scenario wealth.
    pub f: f64,
    /// Total welfare (EUR).
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthCurve {
    /// `(K_ee, η̃)` inputs, `K_ee` in EUR.
    pub points: Vec<(f64, f64)>,
    pub logistic: Logistic,
    pub k_min: f64,
    pub k_star_f: f64,
    pub k_star_v: f64,
    pub curve: Vec<DepthRow>,
    pub warnings: Vec<String>,
}

/// Points scanned by [`retrofit_depth`].
pub const DEPTH_SCAN: usize = 200;

/// Optimal depth of a retrofit whose efficiency depends on its
/// energy-efficiency cost `K_ee` through a fitted logistic; the total cost
/// is `k_min + K_ee`.
pub fn retrofit_depth(points: &[(f64, f64)], k_min: f64, base: &Scenario) -> Result<DepthCurve> {
    let kilo: Vec<(f64, f64)> = points.iter().map(|&(k, e)| (k / 1000.0, e)).collect();
    let logistic = fit_logistic(&kilo)?;
    let mut warnings = Vec::new();
    if logistic.k <= 0.0 {
        warnings.push(format!("fitted efficiency is not increasing in cost (k = {})", logistic.k));
    }
    for &(x, y) in &kilo {
        let rel = (logistic.eval(x) / y - 1.0).abs();
        if rel > 0.05 {
            warnings.push(format!("fit misses point ({x} kEUR, {y}) by {:.1}%", 100.0 * rel));
        }
    }
    let scenario_at = |k_ee: f64| {
        let mut s = *base;
        s.model.retrofit.cost = k_min + k_ee;
        s.model.retrofit.eta_tilde = logistic.eval(k_ee / 1000.0);
        s
    };
    let values = |k_ee: f64| -> Result<(f64, f64, f64)> {
        let s = scenario_at(k_ee);
        let agent = s.agent()?;
        let w = s.model.agent.w0;
        let f = agent.primal_value(w)?;
        let v = total_welfare(&agent, &s.planner.social, w, s.pi0())?.v_total;
        Ok((s.model.retrofit.eta_tilde, f, v))
    };
    let lo = kilo.iter().map(|p| p.0).fold(f64::MAX, f64::min) * 1000.0;
    let hi = kilo.iter().map(|p| p.0).fold(f64::MIN, f64::max) * 1000.0;
    let grid = linspace(lo, hi, DEPTH_SCAN);
    let curve = grid
        .par_iter()
        .map(|&k_ee| {
            let (eta_tilde, f, v) = values(k_ee)?;
            Ok(DepthRow { k: k_min + k_ee, eta_tilde, f, v })
        })
        .collect::<Result<Vec<_>>>()?;
    let step = grid[1] - grid[0];
    let refine = |pick: fn(&DepthRow) -> f64, which: usize| -> f64 {
        let i = (0..curve.len()).fold(0, |b, k| if pick(&curve[k]) > pick(&curve[b]) { k } else { b });
        let a = grid[i] - step;
        let b = grid[i] + step;
        let (x, _) = golden_min(
            |k| {
                let k = k.clamp(lo, hi);
                values(k).map_or(f64::INFINITY, |t| -[t.1, t.2][which])
            },
            a.max(lo),
            b.min(hi),
            1e-3,
        );
        k_min + x
    };
    let k_star_f = refine(|r| r.f, 0);
    let k_star_v = refine(|r| r.v, 1);
    Ok(DepthCurve {
        points: points.to_vec(),
        logistic,
        k_min,
        k_star_f,
        k_star_v,
        curve,
        warnings,
    })
}

/// Population curves under one volatility setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolatilityScenario {
    /// Relative change of σ_S.
    pub delta: f64,
    pub sigma_s: f64,
    pub immediate_share: f64,
    pub patience_violations: usize,
    pub subsidized: bool,
    pub curve: Vec<DiffusionPoint>,
}

/// Recomputes the population curves with σ_S scaled by `1 + delta` for
/// each delta, optionally under the subsidy policy.
pub fn volatility_scenarios(
    pop: &Population,
    deltas: &[f64],
    times: &[f64],
    policy: Option<(&PlannerParams, f64)>,
) -> Result<Vec<VolatilityScenario>> {
    let base = pop
        .members
        .first()
        .ok_or_else(|| Error::Domain("empty population".into()))?
        .agent
        .params
        .market;
    deltas
        .iter()
        .map(|&d| {
            let mut market = base;
            market.sigma_s *= 1.0 + d;
            let p = if d == 0.0 { pop.clone() } else { pop.with_market(market)? };
            let p = match policy {
                Some((planner, pi0)) => apply_subsidy_policy(&p, planner, pi0)?,
                None => p,
            };
            Ok(VolatilityScenario {
                delta: d,
                sigma_s: market.sigma_s,
                immediate_share: p.immediate_share,
                patience_violations: p.patience_violations,
                subsidized: policy.is_some(),
                curve: diffusion_curve(&p, times),
            })
        })
        .collect()
}

/// Largest minus smallest adoption share across scenarios at grid index `i`.
pub fn share_spread(scenarios: &[VolatilityScenario], i: usize) -> f64 {
    let shares = scenarios.iter().map(|s| s.curve[i].share);
    let (lo, hi) = shares.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_matches_differences() {
        let base = Scenario::case_study();
        for p in Param::ALL.iter().filter(|p| p.affects_threshold()) {
            let cf = elasticity(Target::WStar, *p, &base).unwrap();
            let fd = elasticity_fd(Target::WStar, *p, &base).unwrap();
            assert!((cf.value - fd.value).abs() < 1e-6 * cf.value.abs().max(1.0), "{p}: {} vs {}", cf.value, fd.value);
        }
    }

    #[test]
    fn threshold_combinations_share_elasticities() {
        let base = Scenario::case_study();
        let e = |p| elasticity(Target::WStar, p, &base).unwrap().value;
        assert!((e(Param::Rho) - e(Param::Cost)).abs() < 1e-10);
        assert!((e(Param::SSub) - e(Param::Price)).abs() < 1e-10 * e(Param::Price).abs());
    }

    #[test]
    fn wealth_has_no_threshold_elasticity() {
        assert!(elasticity(Target::WStar, Param::Wealth, &Scenario::case_study()).is_err());
    }

    #[test]
    fn richardson_steps_agree() {
        let base = Scenario::case_study();
        for p in [Param::SigmaS, Param::CarbonPrice, Param::Wealth] {
            let e = elasticity(Target::MStar, p, &base).unwrap();
            assert!(e.richardson_gap < 0.01, "{p}: {}", e.richardson_gap);
        }
    }

    #[test]
    fn param_round_trip() {
        let base = Scenario::case_study();
        for p in Param::ALL {
            assert_eq!(p.get(&p.with(&base, 1.234)), 1.234);
            assert_eq!(Param::from_name(p.name()), Some(p));
        }
    }

    #[test]
    fn logistic_interpolates_three_points() {
        let pts = [(63.0, 0.025), (68.0, 0.030), (80.0, 0.039)];
        let l = fit_logistic(&pts).unwrap();
        for (x, y) in pts {
            assert_relative_eq!(l.eval(x), y, max_relative = 1e-8);
        }
        assert!(fit_logistic(&pts[..1]).is_err());
    }

    #[test]
    fn approximation_errors_have_expected_signs() {
        let s = approximation_error_study(&Agent::case_study(), 50).unwrap();
        assert!(s.a_underestimated && s.xs_overestimated);
        assert!(s.max_abs_s < 2e-3);
        assert!(s.rows[0].err_s.abs() < s.rows[49].err_s.abs());
    }
}
