//! Expected adoption and fuel use of a dispersed population, with and
//! without the subsidy policy.
use retrofit::aggregate::{apply_subsidy_policy, diffusion_curve, sample_population, PopulationSpec};
use retrofit::subsidy::PlannerParams;

fn main() -> retrofit::Result<()> {
    let pop = sample_population(&PopulationSpec::case_study())?;
    let planner = PlannerParams::case_study();
    let sub = apply_subsidy_policy(&pop, &planner, planner.social.pi0())?;
    println!("immediate share: {:.3} (subsidised {:.3}), rejected draws {}", pop.immediate_share, sub.immediate_share, pop.rejected);
    let times: Vec<f64> = (0..=25).map(f64::from).collect();
    let (a, b) = (diffusion_curve(&pop, &times), diffusion_curve(&sub, &times));
    println!("{:>4} {:>8} {:>8} {:>14} {:>14}", "t", "E[S]", "E[S] sub", "E[C] GWh/yr", "E[C] sub");
    for (p, q) in a.iter().zip(&b).step_by(5) {
        println!("{:>4} {:>8.4} {:>8.4} {:>14.1} {:>14.1}", p.t, p.share, q.share, p.consumption / 1e6, q.consumption / 1e6);
    }
    Ok(())
}
