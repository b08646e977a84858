//! Option value of waiting against adopting now and never adopting.
use retrofit::Agent;

fn main() -> retrofit::Result<()> {
    let agent = Agent::case_study();
    let w_star = agent.consts.w_star().expect("case study waits");
    println!("{:>10} {:>12} {:>14} {:>14} {:>14}", "w/w*", "regime", "F", "F^ (adopt)", "never");
    for i in 1..=12 {
        let w = w_star * f64::from(i) / 10.0;
        println!(
            "{:>10.1} {:>12} {:>14.6e} {:>14.6e} {:>14.6e}",
            w / w_star,
            agent.regime_at(w).label(),
            agent.primal_value(w)?,
            agent.terminal_gain(w)?,
            agent.counterfactual_value(w)?
        );
    }
    Ok(())
}
