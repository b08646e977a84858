//! Command-line front end. Every command writes long-format CSV tables,
//! a JSON mirror of each and a `manifest.json`; the first CSV line carries
//! the manifest hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::agent_solution::{Agent, Regime};
use crate::aggregate::{
    adoption_rate, apply_subsidy_policy, expected_adoption_share, expected_total_consumption, sample_population,
};
use crate::analysis::{elasticity_table, retrofit_depth, Method, Scenario};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::params::validate;
use crate::stochastic::simulate_trajectory;
use crate::subsidy::optimal_subsidy;
use crate::welfare::total_welfare;

#[derive(Debug, Parser)]
#[command(name = "retrofit", version, about = "Household energy-retrofit adoption model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration; the case study when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Grid axes, e.g. `w=0:400000:21,carbon=10:70:13`.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every parameter constraint.
    Validate(Common),
    /// Derived constants and value and controls over wealth.
    Solve(Common),
    /// Simulated household paths.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        n_paths: usize,
    },
    /// Welfare decomposition over wealth and carbon price.
    Welfare(Common),
    /// Optimal subsidy rate over wealth and carbon price.
    Subsidy(Common),
    /// Expected adoption and fuel use of a sampled population.
    Diffuse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        subsidized: bool,
    },
    /// Local elasticities of the threshold and the subsidy rate.
    Statics(Common),
    /// Optimal retrofit depth.
    Depth(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate(c)
            | Command::Solve(c)
            | Command::Welfare(c)
            | Command::Subsidy(c)
            | Command::Statics(c)
            | Command::Depth(c) => c,
            Command::Simulate { common, .. } | Command::Diffuse { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Solve(_) => "solve",
            Command::Simulate { .. } => "simulate",
            Command::Welfare(_) => "welfare",
            Command::Subsidy(_) => "subsidy",
            Command::Diffuse { .. } => "diffuse",
            Command::Statics(_) => "statics",
            Command::Depth(_) => "depth",
        }
    }
}

/// Inputs and outputs of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => String::new(),
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// A named long-format table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Self { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path, hash: &str) -> Result<Vec<String>> {
        let io = |e: std::io::Error| Error::Config(format!("cannot write to {}: {e}", dir.display()));
        let csv_name = format!("{}.csv", self.name);
        let mut buf = format!("# manifest: {hash}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
            let fail = |e: csv::Error| Error::Config(format!("csv: {e}"));
            w.write_record(&self.columns).map_err(fail)?;
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::csv)).map_err(fail)?;
            }
            w.flush().map_err(io)?;
        }
        fs::write(dir.join(&csv_name), buf).map_err(io)?;
        let json_name = format!("{}.json", self.name);
        let doc = json!({
            "manifest": hash,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json");
        text.push('\n');
        fs::write(dir.join(&json_name), text).map_err(io)?;
        Ok(vec![csv_name, json_name])
    }
}

/// Parses `name=a:b:n` axes separated by commas.
pub fn parse_grid(spec: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out = BTreeMap::new();
    for axis in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let bad = || Error::Config(format!("bad grid axis `{axis}`, expected name=start:stop:count"));
        let (name, range) = axis.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        out.insert(name.trim().to_string(), linspace(a, b, n));
    }
    Ok(out)
}

fn axis(grid: &BTreeMap<String, Vec<f64>>, name: &str, default: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
    grid.get(name).cloned().unwrap_or_else(default)
}

fn check_axes(grid: &BTreeMap<String, Vec<f64>>, allowed: &[&str]) -> Result<()> {
    match grid.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::Config(format!("grid axis `{k}` not used here; expected one of {allowed:?}"))),
        None => Ok(()),
    }
}

fn threshold_wealth(agent: &Agent) -> Result<f64> {
    agent
        .consts
        .w_star()
        .ok_or_else(|| Error::Regime("adoption is immediate for these parameters".into()))
}

fn cmd_validate(cfg: &Config) -> Result<Vec<Table>> {
    let report = validate(&cfg.model);
    let mut t = Table::new("validate", &["check", "passed", "margin", "message"]);
    for c in &report.checks {
        t.push(vec![c.name.into(), c.passed.into(), c.margin.into(), c.message.clone().into()]);
    }
    Ok(vec![t])
}

fn cmd_solve(cfg: &Config, grid: &BTreeMap<String, Vec<f64>>) -> Result<Vec<Table>> {
    check_axes(grid, &["w"])?;
    let agent = Agent::new(cfg.model)?;
    let c = &agent.consts;
    let mut k = Table::new("constants", &["name", "value"]);
    let mut add = |n: &str, v: f64| k.push(vec![n.into(), v.into()]);
    add("kappa", c.kappa_mpr);
    add("delta_hat", c.delta_hat);
    add("phi", c.phi);
    add("annual_price", c.annual_price);
    add("H", c.h);
    add("H_tilde", c.h_tilde);
    add("theta", c.theta);
    add("mu_Z", c.mu_z);
    add("sigma_Z", c.sigma_z);
    add("a0", c.a0);
    add("kappa_Q", c.kappa_q);
    add("m_bar", c.m_bar);
    if let Some(t) = c.threshold.finite() {
        add("Lambda", t.lambda);
        add("z_star", t.z_star);
        add("w_star", t.w_star);
    }
    let top = c.w_star().map_or(4.0e5, |w| 1.2 * w);
    let ws = axis(grid, "w", || linspace(top / 48.0, top, 48));
    let mut g = Table::new(
        "solve",
        &["w", "regime", "value", "a", "x", "s", "c", "exposure", "a_approx", "x_approx", "s_approx"],
    );
    for w in ws {
        let regime = agent.regime_at(w);
        let (value, ctl, approx) = match regime {
            Regime::Waiting => {
                (agent.primal_value(w)?, agent.optimal_controls(w, Regime::Waiting)?, Some(agent.approx_controls(w)?))
            }
            _ => (agent.terminal_gain(w)?, agent.optimal_controls(w, Regime::PostInvest)?, None),
        };
        let ap = |f: fn(&crate::agent_solution::ControlTriple) -> f64| approx.as_ref().map_or(f64::NAN, f);
        g.push(vec![
            w.into(),
            regime.label().into(),
            value.into(),
            ctl.a.into(),
            ctl.x.into(),
            ctl.s.into(),
            ctl.c.into(),
            ctl.exposure.into(),
            ap(|c| c.a).into(),
            ap(|c| c.x).into(),
            ap(|c| c.s).into(),
        ]);
    }
    Ok(vec![k, g])
}

fn cmd_simulate(cfg: &Config, grid: &BTreeMap<String, Vec<f64>>, n_paths: usize) -> Result<Vec<Table>> {
    check_axes(grid, &[])?;
    let agent = Agent::new(cfg.model)?;
    let spec = crate::stochastic::PathSpec { n_paths, ..cfg.paths };
    let paths = simulate_trajectory(&agent, cfg.model.agent.w0, &spec)?;
    let mut t = Table::new(
        "simulate",
        &["path", "t", "wealth", "disposable", "regime", "a", "x", "s", "c", "rebound", "backfire"],
    );
    let mut summary = Table::new("simulate_summary", &["path", "tau_hat", "flagged"]);
    for (i, p) in paths.iter().enumerate() {
        for k in 0..p.times.len() {
            let c = &p.controls[k];
            t.push(vec![
                i.into(),
                p.times[k].into(),
                p.wealth[k].into(),
                p.disposable[k].into(),
                p.regime[k].label().into(),
                c.a.into(),
                c.x.into(),
                c.s.into(),
                c.c.into(),
                p.rebound[k].into(),
                p.backfire[k].into(),
            ]);
        }
        summary.push(vec![i.into(), p.tau_hat.unwrap_or(f64::NAN).into(), p.flagged.into()]);
    }
    Ok(vec![t, summary])
}

fn wealth_carbon(cfg: &Config, grid: &BTreeMap<String, Vec<f64>>) -> Result<(Vec<f64>, Vec<f64>)> {
    check_axes(grid, &["w", "carbon"])?;
    let agent = Agent::new(cfg.model)?;
    let w_star = threshold_wealth(&agent)?;
    let ws = axis(grid, "w", || linspace(0.0, 0.98 * w_star, 20));
    let cs = axis(grid, "carbon", || linspace(10.0, 70.0, 20));
    Ok((ws, cs))
}

fn cmd_welfare(cfg: &Config, grid: &BTreeMap<String, Vec<f64>>) -> Result<Vec<Table>> {
    let (ws, cs) = wealth_carbon(cfg, grid)?;
    let agent = Agent::new(cfg.model)?;
    let mut t = Table::new("welfare", &["w", "carbon", "regime", "v_sc", "v_ev", "v_total"]);
    for &c in &cs {
        let social = cfg.planner.social.with_carbon_price(c);
        for &w in &ws {
            let r = total_welfare(&agent, &social, w, social.pi0())?;
            t.push(vec![w.into(), c.into(), r.regime.label().into(), r.v_sc.into(), r.v_ev.into(), r.v_total.into()]);
        }
    }
    Ok(vec![t])
}

fn cmd_subsidy(cfg: &Config, grid: &BTreeMap<String, Vec<f64>>) -> Result<Vec<Table>> {
    let (ws, cs) = wealth_carbon(cfg, grid)?;
    let agent = Agent::new(cfg.model)?;
    let mut t = Table::new("subsidy", &["w", "carbon", "regime", "m_star", "j_star", "boundary_hit"]);
    for &c in &cs {
        let mut planner = cfg.planner;
        planner.social = planner.social.with_carbon_price(c);
        for &w in &ws {
            let r = optimal_subsidy(&agent, w, planner.social.pi0(), &planner)?;
            t.push(vec![w.into(), c.into(), r.regime.label().into(), r.m_star.into(), r.j_star.into(), r.boundary_hit.into()]);
        }
    }
    Ok(vec![t])
}

fn cmd_diffuse(cfg: &Config, grid: &BTreeMap<String, Vec<f64>>, subsidized: bool) -> Result<Vec<Table>> {
    check_axes(grid, &["t"])?;
    let times = axis(grid, "t", || linspace(0.0, 25.0, 26));
    let pop = sample_population(&cfg.population_spec()?)?;
    let sub = match subsidized {
        true => Some(apply_subsidy_policy(&pop, &cfg.planner, cfg.planner.social.pi0())?),
        false => None,
    };
    let mut cols = vec!["t", "E_S", "rate", "E_C_baseline"];
    if subsidized {
        cols.extend(["E_S_subsidized", "rate_subsidized", "E_C_subsidized"]);
    }
    let mut t = Table::new("diffuse", &cols);
    for &x in &times {
        let mut row: Vec<Cell> = vec![
            x.into(),
            expected_adoption_share(&pop, x).into(),
            adoption_rate(&pop, x).into(),
            expected_total_consumption(&pop, x).into(),
        ];
        if let Some(s) = &sub {
            row.extend([
                expected_adoption_share(s, x).into(),
                adoption_rate(s, x).into(),
                expected_total_consumption(s, x).into(),
            ]);
        }
        t.push(row);
    }
    let mut d = Table::new(
        "population",
        &[
            "agent", "beta", "gamma", "delta", "lambda", "x_sub", "s_sub", "Y", "w", "theta", "z0", "z_star", "w_star",
            "immediate", "subsidy",
        ],
    );
    let members = sub.as_ref().unwrap_or(&pop).members.iter();
    for (i, m) in members.enumerate() {
        let (a, c) = (&m.agent.params.agent, &m.agent.consts);
        d.push(vec![
            i.into(),
            a.beta.into(),
            a.gamma.into(),
            a.delta.into(),
            a.lambda.into(),
            a.x_sub.into(),
            a.s_sub.into(),
            a.income.into(),
            a.w0.into(),
            c.theta.into(),
            m.z0.into(),
            c.z_star().unwrap_or(f64::NAN).into(),
            c.w_star().unwrap_or(f64::NAN).into(),
            m.immediate().into(),
            m.subsidy.into(),
        ]);
    }
    let mut s = Table::new("diffuse_summary", &["name", "value"]);
    s.push(vec!["immediate_share".into(), pop.immediate_share.into()]);
    s.push(vec!["rejected_draws".into(), pop.rejected.into()]);
    if let Some(p) = &sub {
        s.push(vec!["immediate_share_subsidized".into(), p.immediate_share.into()]);
    }
    Ok(vec![t, d, s])
}

fn cmd_statics(cfg: &Config) -> Result<Vec<Table>> {
    let table = elasticity_table(&Scenario { model: cfg.model, planner: cfg.planner })?;
    let mut t = Table::new("statics", &["param", "target", "value", "method", "richardson_gap"]);
    for e in table {
        let method = match e.method {
            Method::ClosedFormDerivative => "closed_form_derivative",
            Method::CentralDifference => "central_difference",
        };
        t.push(vec![e.param.name().into(), e.target.name().into(), e.value.into(), method.into(), e.richardson_gap.into()]);
    }
    Ok(vec![t])
}

fn cmd_depth(cfg: &Config) -> Result<Vec<Table>> {
    let d = retrofit_depth(&cfg.depth.points, cfg.depth.k_min, &Scenario { model: cfg.model, planner: cfg.planner })?;
    let mut t = Table::new("depth", &["K", "eta_tilde_fit", "F", "V"]);
    for r in &d.curve {
        t.push(vec![r.k.into(), r.eta_tilde.into(), r.f.into(), r.v.into()]);
    }
    let mut s = Table::new("depth_summary", &["name", "value"]);
    for (n, v) in [
        ("L", d.logistic.l),
        ("k", d.logistic.k),
        ("x0", d.logistic.x0),
        ("K_star_F", d.k_star_f),
        ("K_star_V", d.k_star_v),
    ] {
        s.push(vec![n.into(), v.into()]);
    }
    for w in &d.warnings {
        eprintln!("warning: {w}");
    }
    Ok(vec![t, s])
}

/// Runs one parsed command and returns its manifest.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    let common = cli.command.common();
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::case_study(),
    };
    if let Some(s) = common.seed {
        cfg.paths.seed = s;
    }
    let grid = parse_grid(common.grid.as_deref().unwrap_or(""))?;
    let extra = format!("{:?}|{grid:?}", cli.command.name());
    let extra = match &cli.command {
        Command::Simulate { n_paths, .. } => format!("{extra}|n_paths={n_paths}"),
        Command::Diffuse { subsidized, .. } => format!("{extra}|subsidized={subsidized}"),
        _ => extra,
    };
    let hash = cfg.digest(&extra);

    let is_validate = matches!(cli.command, Command::Validate(_));
    let report = validate(&cfg.model);
    if !is_validate {
        report.clone().into_result()?;
    }
    let tables = match &cli.command {
        Command::Validate(_) => cmd_validate(&cfg)?,
        Command::Solve(_) => cmd_solve(&cfg, &grid)?,
        Command::Simulate { n_paths, .. } => cmd_simulate(&cfg, &grid, *n_paths)?,
        Command::Welfare(_) => cmd_welfare(&cfg, &grid)?,
        Command::Subsidy(_) => cmd_subsidy(&cfg, &grid)?,
        Command::Diffuse { subsidized, .. } => cmd_diffuse(&cfg, &grid, *subsidized)?,
        Command::Statics(_) => cmd_statics(&cfg)?,
        Command::Depth(_) => cmd_depth(&cfg)?,
    };

    fs::create_dir_all(&common.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", common.out.display())))?;
    let mut outputs = Vec::new();
    for t in &tables {
        outputs.extend(t.write(&common.out, &hash)?);
    }
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        config_hash: hash,
        seed: cfg.paths.seed,
        version: concat!("retrofit ", env!("CARGO_PKG_VERSION")).to_string(),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("json");
    text.push('\n');
    fs::write(common.out.join("manifest.json"), text)
        .map_err(|e| Error::Config(format!("cannot write manifest: {e}")))?;
    if is_validate {
        report.into_result()?;
    }
    Ok(manifest)
}

/// Entry point; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(m) => {
            for o in &m.outputs {
                println!("{o}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parses() {
        let g = parse_grid("w=0:400000:5, carbon=10:70:3").unwrap();
        assert_eq!(g["w"], vec![0.0, 100_000.0, 200_000.0, 300_000.0, 400_000.0]);
        assert_eq!(g["carbon"], vec![10.0, 40.0, 70.0]);
        assert!(parse_grid("w=0:1").is_err());
        assert!(parse_grid("w=0:1:0").is_err());
    }

    #[test]
    fn cells_format_stably() {
        assert_eq!(Cell::Num(0.1).csv(), "0.1");
        assert_eq!(Cell::Num(f64::NAN).csv(), "");
        assert_eq!(Cell::Num(f64::NAN).json(), Value::Null);
        assert_eq!(Cell::from(true).csv(), "1");
    }
}
