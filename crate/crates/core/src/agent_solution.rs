//! Value functions and optimal controls of the consumption, portfolio and
//! adoption problem.
//!
//! After adoption the problem is a Merton problem in disposable capital
//! `Z̃ = W̃ + H̃`. Before adoption the value is the Legendre transform of a
//! dual value `f̂` with an explicit free boundary ẑ*; the primal value and
//! the exact waiting controls are recovered by one bracketed root solve.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::brent;
use crate::params::{derive_constants, DerivedConstants, FiniteThreshold, ModelParams, Threshold};

/// Which policy branch applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// Adoption is optimal now (θ ≥ 0 or z ≥ z*).
    ImmediateInvest,
    /// θ < 0 and z < z*: wait for the threshold.
    Waiting,
    /// The retrofit has been made.
    PostInvest,
    /// The retrofit is never made.
    Counterfactual,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::ImmediateInvest => "immediate",
            Regime::Waiting => "waiting",
            Regime::PostInvest => "post_invest",
            Regime::Counterfactual => "counterfactual",
        }
    }
}

/// Controls at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlTriple {
    /// Risky share of wealth; infinite at zero wealth.
    pub a: f64,
    /// Numeraire consumption (EUR/year).
    pub x: f64,
    /// Energy service (°C).
    pub s: f64,
    /// Fuel (W).
    pub c: f64,
    /// Amount held in the risky asset, `a * w` (EUR).
    pub exposure: f64,
}

/// Constants of the dual value on the waiting region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualSolution {
    pub a0_dual: f64,
    pub z_hat_star: f64,
    pub a0: f64,
    /// Counterfactual value constant.
    pub phi: f64,
}

/// Result of the Legendre-Fenchel transform of the felicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualUtility {
    pub value: f64,
    /// Maximising numeraire consumption (EUR/year).
    pub b0: f64,
    /// Maximising energy service (°C).
    pub b1: f64,
}

/// A household with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agent {
    pub params: ModelParams,
    pub consts: DerivedConstants,
}

/// Relative guard band around domain boundaries.
const GUARD: f64 = 1e-12;

impl Agent {
    pub fn new(params: ModelParams) -> Result<Self> {
        let consts = derive_constants(&params)?;
        Ok(Self { params, consts })
    }

    pub fn case_study() -> Self {
        Self::new(ModelParams::case_study()).expect("case study is valid")
    }

    /// Disposable capital `w + H` without the retrofit.
    pub fn disposable(&self, w: f64) -> f64 {
        w + self.consts.h
    }

    /// Regime of a household that has not yet adopted, at wealth `w`.
    pub fn regime_at(&self, w: f64) -> Regime {
        match self.consts.threshold {
            Threshold::Immediate => Regime::ImmediateInvest,
            Threshold::Finite(t) if self.disposable(w) >= t.z_star => Regime::ImmediateInvest,
            Threshold::Finite(_) => Regime::Waiting,
        }
    }

    pub fn dual_solution(&self) -> Result<DualSolution> {
        let t = self.finite()?;
        Ok(DualSolution {
            a0_dual: t.a0_dual,
            z_hat_star: t.z_hat_star,
            a0: self.consts.a0,
            phi: self.consts.gamma_hat,
        })
    }

    fn finite(&self) -> Result<&FiniteThreshold> {
        self.consts.threshold.finite().ok_or_else(|| {
            Error::Regime("theta >= 0: immediate-investment regime has no threshold".into())
        })
    }

    fn guard(&self, z: f64, what: &str) -> Result<()> {
        if !(z > GUARD * self.consts.h.abs().max(1.0)) {
            return Err(Error::Domain(format!("disposable capital non-positive ({what} = {z})")));
        }
        Ok(())
    }

    /// Γ^{−γ} z^{1−γ}/(1−γ) evaluated in log space.
    fn crra_value(&self, constant: f64, z: f64) -> f64 {
        let g = self.params.agent.gamma;
        -((-g * constant.ln() + (1.0 - g) * z.ln()).exp()) / (g - 1.0)
    }

    /// Value of adopting now at wealth `w`.
    pub fn terminal_gain(&self, w: f64) -> Result<f64> {
        let z = w + self.consts.h_tilde;
        self.guard(z, "w + H_tilde")?;
        Ok(self.crra_value(self.consts.gamma_post, z))
    }

    /// Value of never adopting at wealth `w`.
    pub fn counterfactual_value(&self, w: f64) -> Result<f64> {
        let z = w + self.consts.h;
        self.guard(z, "w + H")?;
        Ok(self.crra_value(self.consts.gamma_hat, z))
    }

    /// û(y)/Γ for `constant` Γ, û(y) = y^{−γ̂}/γ̂.
    fn u_hat_scaled(&self, constant: f64, y: f64) -> f64 {
        let ge = self.consts.gamma_exp;
        (-ge * y.ln() - constant.ln()).exp() / ge
    }

    /// Dual value f̂ at marginal utility `y`.
    pub fn dual_value(&self, y: f64) -> Result<f64> {
        let t = self.finite()?;
        if !(y > 0.0) {
            return Err(Error::Domain(format!("dual variable must be positive, got {y}")));
        }
        if y <= t.z_hat_star {
            Ok(self.u_hat_scaled(self.consts.gamma_post, y) + self.consts.theta * y)
        } else {
            Ok(self.u_hat_scaled(self.consts.gamma_hat, y)
                + t.a0_dual * (-self.consts.a0 * (y / t.z_hat_star).ln()).exp())
        }
    }

    /// f̂′(y).
    pub fn dual_derivative(&self, y: f64) -> Result<f64> {
        let t = self.finite()?;
        let g = self.params.agent.gamma;
        let c = &self.consts;
        let ly = y.ln();
        if y <= t.z_hat_star {
            Ok(-(-ly / g - c.gamma_post.ln()).exp() + c.theta)
        } else {
            let opt = c.a0 * t.a0_dual / t.z_hat_star
                * (-(c.a0 + 1.0) * (y / t.z_hat_star).ln()).exp();
            Ok(-(-ly / g - c.gamma_hat.ln()).exp() - opt)
        }
    }

    /// f̂″(y).
    pub fn dual_second(&self, y: f64) -> Result<f64> {
        let t = self.finite()?;
        let g = self.params.agent.gamma;
        let c = &self.consts;
        let ly = y.ln();
        if y <= t.z_hat_star {
            Ok((-(1.0 / g + 1.0) * ly - c.gamma_post.ln()).exp() / g)
        } else {
            let opt = c.a0 * (c.a0 + 1.0) * t.a0_dual / (t.z_hat_star * t.z_hat_star)
                * (-(c.a0 + 2.0) * (y / t.z_hat_star).ln()).exp();
            Ok((-(1.0 / g + 1.0) * ly - c.gamma_hat.ln()).exp() / g + opt)
        }
    }

    /// Marginal utility ẑ(z) on the waiting region: the root of f̂′(ẑ) = −z.
    pub fn dual_root(&self, z: f64) -> Result<f64> {
        let t = *self.finite()?;
        self.guard(z, "w + H")?;
        if z >= t.z_star {
            return Err(Error::Regime(format!("z = {z} is not below z* = {}", t.z_star)));
        }
        let lo = t.z_hat_star.ln();
        // −f̂′ decreases from z* at ẑ* towards zero; widen until it drops below z
        let excess = |ly: f64| -> f64 {
            let v = -self.dual_derivative(ly.exp()).unwrap_or(f64::NAN);
            v.ln() - z.ln()
        };
        let mut hi = lo + 1.0;
        let mut tries = 0;
        while excess(hi) > 0.0 {
            hi += 2.0 * (hi - lo);
            tries += 1;
            if tries > 60 {
                return Err(Error::Numeric("no bracket for the dual root".into()));
            }
        }
        let ly = brent(excess, lo, hi, 1e-14, 1e-15, 200)?;
        Ok(ly.exp())
    }

    /// Optimal value at wealth `w` for a household that has not adopted.
    pub fn primal_value(&self, w: f64) -> Result<f64> {
        match self.regime_at(w) {
            Regime::ImmediateInvest => self.terminal_gain(w),
            _ => {
                let z = self.disposable(w);
                let y = self.dual_root(z)?;
                Ok(self.dual_value(y)? + y * z)
            }
        }
    }

    /// Transform of the Stone-Geary felicity at shadow prices `(pi, xi)`.
    pub fn dual_utility(&self, pi: f64, xi: f64) -> Result<DualUtility> {
        dual_utility(&self.params, pi, xi)
    }

    fn merton_controls(&self, w: f64, z: f64, eff: f64) -> ControlTriple {
        let a = &self.params.agent;
        let c = &self.consts;
        let exposure = c.kappa_mpr / (a.gamma * self.params.market.sigma_s) * z;
        let x = a.x_sub + (1.0 - a.beta) * c.phi * z;
        let s = a.s_sub + a.beta * c.phi * z * eff / c.annual_price;
        ControlTriple { a: exposure / w, x, s, c: s / eff, exposure }
    }

    /// Optimal controls at wealth `w` in `regime`.
    pub fn optimal_controls(&self, w: f64, regime: Regime) -> Result<ControlTriple> {
        let r = &self.params.retrofit;
        match regime {
            Regime::PostInvest => {
                let z = w + self.consts.h_tilde;
                self.guard(z, "w + H_tilde")?;
                Ok(self.merton_controls(w, z, r.eta_tilde))
            }
            Regime::ImmediateInvest => {
                if self.regime_at(w) != Regime::ImmediateInvest {
                    return Err(Error::Regime(format!("w = {w} lies in the waiting region")));
                }
                self.optimal_controls(w, Regime::PostInvest)
            }
            Regime::Counterfactual => {
                let z = self.disposable(w);
                self.guard(z, "w + H")?;
                Ok(self.merton_controls(w, z, r.eta))
            }
            Regime::Waiting => {
                if self.regime_at(w) != Regime::Waiting {
                    return Err(Error::Regime(format!("w = {w} is outside the waiting region")));
                }
                let y = self.dual_root(self.disposable(w))?;
                let exposure = self.consts.kappa_mpr / self.params.market.sigma_s
                    * y
                    * self.dual_second(y)?;
                let xi = self.consts.annual_price / r.eta * y;
                let du = self.dual_utility(y, xi)?;
                Ok(ControlTriple { a: exposure / w, x: du.b0, s: du.b1, c: du.b1 / r.eta, exposure })
            }
        }
    }

    /// Waiting-region controls approximated by the never-adopt controls.
    pub fn approx_controls(&self, w: f64) -> Result<ControlTriple> {
        if self.regime_at(w) != Regime::Waiting {
            return Err(Error::Regime(format!("w = {w} is outside the waiting region")));
        }
        self.optimal_controls(w, Regime::Counterfactual)
    }
}

/// Stone-Geary felicity ((x − x̲)^{1−β}(s − s̲)^β)^{1−γ}/(1−γ).
pub fn felicity(params: &ModelParams, x: f64, s: f64) -> f64 {
    let a = &params.agent;
    let ln_v = (1.0 - a.beta) * (x - a.x_sub).ln() + a.beta * (s - a.s_sub).ln();
    -((1.0 - a.gamma) * ln_v).exp() / (a.gamma - 1.0)
}

/// sup over (x, s) of felicity − πx − ξs, with its maximisers.
pub fn dual_utility(params: &ModelParams, pi: f64, xi: f64) -> Result<DualUtility> {
    if !(pi > 0.0 && xi > 0.0) {
        return Err(Error::Domain(format!("shadow prices must be positive, got ({pi}, {xi})")));
    }
    let a = &params.agent;
    let ge = (1.0 - a.gamma) / a.gamma;
    let ln_q = (1.0 - a.beta) * (pi / (1.0 - a.beta)).ln() + a.beta * (xi / a.beta).ln();
    let m = (-ge * ln_q).exp();
    Ok(DualUtility {
        value: -a.x_sub * pi - a.s_sub * xi + m / ge,
        b0: a.x_sub + m * (1.0 - a.beta) / pi,
        b1: a.s_sub + m * a.beta / xi,
    })
}
