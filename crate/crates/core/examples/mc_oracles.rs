//! Closed forms against simulation: the value of never adopting and the
//! discount factor of the adoption time.
use retrofit::stochastic::{mc_laplace_oracle, mc_value_oracle, PathSpec, Policy};
use retrofit::welfare::laplace_hitting;
use retrofit::Agent;

fn main() -> retrofit::Result<()> {
    let agent = Agent::case_study();
    let w0 = agent.params.agent.w0;
    let spec = PathSpec { n_paths: 4000, antithetic: true, ..PathSpec::default() }
        .with_discount_horizon(agent.consts.delta_hat);
    let mc = mc_value_oracle(&agent, w0, Policy::Counterfactual, &spec)?;
    let exact = agent.counterfactual_value(w0)?;
    println!("never adopt: closed {exact:.6e}  mc {:.6e} +- {:.1e}", mc.mean, mc.se);

    let z0 = agent.disposable(w0);
    let spec = PathSpec { horizon: 200.0, n_paths: 20_000, antithetic: true, bridge: true, ..PathSpec::default() };
    let rho = 0.03;
    let mc = mc_laplace_oracle(&agent, z0, rho, &spec)?;
    println!("E[exp(-rho tau)]: closed {:.5}  mc {:.5} +- {:.5}", laplace_hitting(&agent, z0, rho)?, mc.mean, mc.se);
    Ok(())
}
