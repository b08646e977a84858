//! Equivalent variation, social cost and net welfare over wealth and the
//! carbon price.
use retrofit::welfare::{total_welfare, SocialParams};
use retrofit::Agent;

fn main() -> retrofit::Result<()> {
    let agent = Agent::case_study();
    println!("{:>8} {:>7} {:>12} {:>12} {:>12}", "w kEUR", "carbon", "EV", "SC", "total");
    for w in [50e3, 150e3, 300e3, 450e3] {
        for carbon in [10.0, 45.0, 70.0] {
            let social = SocialParams::case_study().with_carbon_price(carbon);
            let r = total_welfare(&agent, &social, w, social.pi0())?;
            println!("{:>8.0} {carbon:>7} {:>12.1} {:>12.1} {:>12.1}", w / 1e3, r.v_ev, r.v_sc, r.v_total);
        }
    }
    Ok(())
}
