//! Adoption under a ±10% change in market volatility, with and without
//! the subsidy policy.
use retrofit::aggregate::{sample_population, PopulationSpec};
use retrofit::analysis::{share_spread, volatility_scenarios};
use retrofit::subsidy::PlannerParams;

fn main() -> retrofit::Result<()> {
    let pop = sample_population(&PopulationSpec::case_study())?;
    let planner = PlannerParams::case_study();
    let times: Vec<f64> = (0..=25).map(f64::from).collect();
    let deltas = [-0.1, 0.0, 0.1];
    let plain = volatility_scenarios(&pop, &deltas, &times, None)?;
    let sub = volatility_scenarios(&pop, &deltas, &times, Some((&planner, planner.social.pi0())))?;
    for s in plain.iter().chain(&sub) {
        println!(
            "sigma_S {:.3} subsidised {:<5} E[S_0] {:.4} E[S_25] {:.4} patience violations {}",
            s.sigma_s, s.subsidized, s.curve[0].share, s.curve[25].share, s.patience_violations
        );
    }
    println!("spread at t = 25: {:.4} without, {:.4} with subsidy", share_spread(&plain, 25), share_spread(&sub, 25));
    Ok(())
}
