//! Error of the never-adopt controls as a proxy for the exact ones below
//! the threshold.
use retrofit::analysis::approximation_error_study;
use retrofit::Agent;

fn main() -> retrofit::Result<()> {
    let study = approximation_error_study(&Agent::case_study(), 40)?;
    for r in study.rows.iter().step_by(5) {
        println!("w {:>9.0}  a {:+.2e}  x {:+.2e}  s {:+.2e}", r.w, r.err_a, r.err_x, r.err_s);
    }
    println!("max |err|: a {:.2e}  x {:.2e}  s {:.2e}", study.max_abs_a, study.max_abs_x, study.max_abs_s);
    println!("a underestimated: {}, x and s overestimated: {}", study.a_underestimated, study.xs_overestimated);
    Ok(())
}
