//! Optimal subsidy rate by wealth and carbon price.
use retrofit::subsidy::{optimal_subsidy, PlannerParams};
use retrofit::Agent;

fn main() -> retrofit::Result<()> {
    let agent = Agent::case_study();
    println!("m_bar = {:.4}", agent.consts.m_bar);
    println!("{:>8} {:>7} {:>10} {:>9} {:>12}", "w kEUR", "carbon", "regime", "m* %", "J*");
    for w in [45e3, 200e3, 500e3] {
        for carbon in [10.0, 30.0, 50.0, 70.0] {
            let mut planner = PlannerParams::case_study();
            planner.social = planner.social.with_carbon_price(carbon);
            let r = optimal_subsidy(&agent, w, planner.social.pi0(), &planner)?;
            let edge = if r.boundary_hit { " (edge)" } else { "" };
            println!("{:>8.0} {carbon:>7} {:>10} {:>9.3} {:>12.1}{edge}", w / 1e3, r.regime.label(), 100.0 * r.m_star, r.j_star);
        }
    }
    Ok(())
}
