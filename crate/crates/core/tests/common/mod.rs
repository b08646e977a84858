#![allow(dead_code)]

use rand::Rng;
use retrofit::params::{patience_bound, validate, ModelParams};
use retrofit::Agent;

/// A valid household with a finite threshold, drawn from wide ranges
/// around the case study. `u` supplies uniforms in [0, 1).
pub fn draw_params(mut u: impl FnMut() -> f64) -> ModelParams {
    let mut lerp = |a: f64, b: f64| a + (b - a) * u();
    let mut p = ModelParams::case_study();
    let m = &mut p.market;
    m.mu_r = lerp(0.01, 0.04);
    m.mu_s = m.mu_r + lerp(0.02, 0.08);
    m.sigma_s = lerp(0.15, 0.35);
    m.price = lerp(0.1, 0.4);
    let bound = patience_bound(m);
    let a = &mut p.agent;
    a.beta = lerp(0.002, 0.05);
    a.gamma = lerp(1.5, 8.0);
    let dhat = bound * lerp(0.3, 0.95);
    let share = lerp(0.2, 0.8);
    a.delta = dhat * share;
    a.lambda = dhat * (1.0 - share);
    a.x_sub = lerp(5_000.0, 20_000.0);
    a.s_sub = lerp(10.0, 20.0);
    a.income = lerp(30_000.0, 80_000.0);
    a.w0 = lerp(0.0, 200_000.0);
    let r = &mut p.retrofit;
    r.eta = lerp(0.003, 0.008);
    r.eta_tilde = r.eta * lerp(1.5, 8.0);
    r.rho = m.mu_r + lerp(0.0, 0.03);
    r.cost = lerp(20_000.0, 200_000.0);
    p
}

/// Draws until the household is valid and waits for a finite threshold.
pub fn draw_agent<R: Rng>(rng: &mut R) -> (Agent, usize) {
    let mut rejected = 0;
    loop {
        let p = draw_params(|| rng.random::<f64>());
        if validate(&p).passed() {
            if let Ok(a) = Agent::new(p) {
                if a.consts.theta < 0.0 {
                    return (a, rejected);
                }
            }
        }
        rejected += 1;
    }
}

/// The four residuals checked on random households.
pub fn residuals(agent: &Agent) -> [f64; 4] {
    use retrofit::params::characteristic_residual;
    let c = &agent.consts;
    let g = agent.params.agent.gamma;
    let phi = c.phi_identity_residual(g);
    let quad = characteristic_residual(c.a0, c.kappa_mpr, c.delta_hat, agent.params.market.mu_r).abs();
    let zs = c.z_star().expect("finite threshold");
    let mut legendre: f64 = 0.0;
    for k in [0.05, 0.3, 0.7, 0.95, 0.999] {
        let z = k * zs;
        let y = agent.dual_root(z).expect("dual root");
        let back = -agent.dual_derivative(y).expect("dual derivative");
        legendre = legendre.max((back / z - 1.0).abs());
    }
    let yh = c.threshold.finite().unwrap().z_hat_star;
    let (lo, hi) = (yh * (1.0 - 1e-13), yh * (1.0 + 1e-13));
    let rel = |a: f64, b: f64| ((a - b) / a.abs().max(b.abs())).abs();
    let pasting = rel(agent.dual_value(lo).unwrap(), agent.dual_value(hi).unwrap())
        .max(rel(agent.dual_derivative(lo).unwrap(), agent.dual_derivative(hi).unwrap()));
    [phi, quad, legendre, pasting]
}
