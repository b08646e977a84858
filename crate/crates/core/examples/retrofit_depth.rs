//! Optimal depth of a retrofit from three efficiency levels.
use retrofit::analysis::{retrofit_depth, Scenario};

fn main() -> retrofit::Result<()> {
    let levels = [(63_000.0, 0.025), (68_000.0, 0.030), (80_000.0, 0.039)];
    let d = retrofit_depth(&levels, 57_000.0, &Scenario::case_study())?;
    let l = d.logistic;
    println!("logistic: L = {:.5}, k = {:.5}/kEUR, x0 = {:.2} kEUR", l.l, l.k, l.x0);
    println!("K*_F = {:.0} EUR, K*_V = {:.0} EUR", d.k_star_f, d.k_star_v);
    for w in &d.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
