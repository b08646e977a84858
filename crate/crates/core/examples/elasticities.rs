//! Local elasticities of the adoption threshold and the optimal subsidy.
use retrofit::analysis::{elasticity_table, Scenario};

fn main() -> retrofit::Result<()> {
    let table = elasticity_table(&Scenario::case_study())?;
    println!("{:<14}{:<8}{:>10}  method", "param", "target", "value");
    for e in table {
        println!("{:<14}{:<8}{:>10.3}  {:?}", e.param.name(), e.target.name(), e.value, e.method);
    }
    Ok(())
}
