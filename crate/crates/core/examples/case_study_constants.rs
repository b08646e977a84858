//! Validation report and derived constants of the case-study household.
use retrofit::params::{derive_constants, patience_bound, validate};
use retrofit::ModelParams;

fn main() -> retrofit::Result<()> {
    let p = ModelParams::case_study();
    let report = validate(&p);
    for c in &report.checks {
        println!("{:<28} {:<5} margin {:.4e}", c.name, c.passed, c.margin);
    }
    println!("patience bound on delta + lambda: {:.4}", patience_bound(&p.market));
    let c = derive_constants(&p)?;
    println!("theta   {:>14.1} EUR", c.theta);
    println!("H       {:>14.1} EUR", c.h);
    println!("H~      {:>14.1} EUR", c.h_tilde);
    println!("phi     {:>14.6}", c.phi);
    println!("a0      {:>14.5}", c.a0);
    println!("m_bar   {:>14.4}", c.m_bar);
    match (c.z_star(), c.w_star()) {
        (Some(z), Some(w)) => println!("z*      {z:>14.1} EUR\nw*      {w:>14.1} EUR"),
        _ => println!("adoption is immediate at any wealth"),
    }
    Ok(())
}
