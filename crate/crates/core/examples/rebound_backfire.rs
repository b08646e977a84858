//! Expected rebound and backfire over time, and the odds of backfire.
use retrofit::welfare::{backfire_expectation, prob_backfire, rebound_expectation};
use retrofit::Agent;

fn main() -> retrofit::Result<()> {
    let agent = Agent::case_study();
    let z = agent.disposable(agent.params.agent.w0);
    println!("{:>4} {:>12} {:>12}", "t", "E[R] degC", "E[Q] W");
    for t in [0.0, 1.0, 5.0, 10.0, 20.0, 40.0] {
        println!("{t:>4} {:>12.4} {:>12.3}", rebound_expectation(&agent, t, z)?, backfire_expectation(&agent, t, z)?);
    }
    let odds = prob_backfire(&agent, 10.0)?;
    println!("P(backfire at t = 10) = {:.4} {}", odds.probability, odds.note.unwrap_or_default());
    Ok(())
}
