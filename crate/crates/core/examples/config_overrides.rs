//! Load a config, override a few keys and compare run digests.
use retrofit::config::Config;

fn main() -> retrofit::Result<()> {
    let base = Config::load(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/case_study.toml")))?;
    // a file without hours_per_year falls back to the Julian year
    let tweaked = Config::from_toml_str("[overrides]\nsigma_S = 0.22\nn_agents = 500\n")?;
    let mut manual = base.clone();
    manual.set_value("carbon_price", &toml::Value::Float(60.0))?;
    for (name, cfg) in [("file", &base), ("overrides", &tweaked), ("manual", &manual)] {
        let agent = retrofit::Agent::new(cfg.model)?;
        println!(
            "{name:<10} sigma_s {:.2}  carbon {:>4}  w* {:>10.0}  digest {}",
            cfg.model.market.sigma_s,
            cfg.planner.social.carbon_price,
            agent.consts.w_star().unwrap_or(f64::NAN),
            &cfg.digest("")[..12]
        );
    }
    Ok(())
}
