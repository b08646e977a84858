//! Portfolio share, consumption and heating under the exact waiting-region
//! controls and their never-adopt approximation.
use retrofit::Agent;

fn main() -> retrofit::Result<()> {
    let agent = Agent::case_study();
    println!("{:>8} {:>9} {:>9} {:>10} {:>10} {:>8} {:>8}", "w kEUR", "a", "a~", "x", "x~", "s", "s~");
    for w in (25..=400).step_by(25).map(|k| f64::from(k) * 1e3) {
        let exact = agent.optimal_controls(w, agent.regime_at(w))?;
        let approx = agent.approx_controls(w)?;
        println!(
            "{:>8.0} {:>9.4} {:>9.4} {:>10.1} {:>10.1} {:>8.3} {:>8.3}",
            w / 1e3, exact.a, approx.a, exact.x, approx.x, exact.s, approx.s
        );
    }
    Ok(())
}
