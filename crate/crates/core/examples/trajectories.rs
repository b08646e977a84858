//! A few optimally controlled households and when they retrofit.
use retrofit::stochastic::{simulate_trajectory, PathSpec};
use retrofit::Agent;

fn main() -> retrofit::Result<()> {
    let agent = Agent::case_study();
    let spec = PathSpec { horizon: 40.0, n_paths: 8, seed: 7, ..PathSpec::default() };
    let w0 = 250e3;
    for (i, tr) in simulate_trajectory(&agent, w0, &spec)?.iter().enumerate() {
        let end = tr.wealth.len() - 1;
        let tau = tr.tau_hat.map_or("never".to_string(), |t| format!("{t:.2} y"));
        println!(
            "path {i}: adopts {tau:>8}, final wealth {:>12.0}, final rebound {:>7.3} degC",
            tr.wealth[end], tr.rebound[end]
        );
    }
    Ok(())
}
