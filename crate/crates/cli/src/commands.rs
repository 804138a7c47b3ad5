use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use tandem_clearing::bounds::{checks_csv, verify_all, CHECK_TOL};
use tandem_clearing::evaluation::{evaluate_policy, fmt_sig, relative_error, run_sweep};
use tandem_clearing::policy::{PolicyContext, PolicyRegistry};
use tandem_clearing::simulator::{episodes_csv, run_with_policy, RNG_NAME};
use tandem_clearing::space::enumerate_states;
use tandem_clearing::structure::analyze;
use tandem_clearing::{solve_with, ModelParams, SolveOptions, SolveResult, SystemState};

use crate::config::{self, FileConfig};
use crate::{CliError, GlobalArgs};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Policy spec [default: [policy] spec, else p5]
    #[arg(long, value_name = "SPEC")]
    pub policy: Option<String>,
    /// Also print the two values at this state.
    #[arg(long, value_name = "i,j,k,l")]
    pub state: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Shift one stored value before checking (test hook).
    #[arg(long, hide = true, value_name = "i,j,k,l=DELTA")]
    pub inject_fault: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of episodes [default: 10000]
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Base seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial state [default: 10,2,0,0]
    #[arg(long, value_name = "i,j,k,l")]
    pub start: Option<String>,
    /// Policy spec [default: optimal]
    #[arg(long, value_name = "SPEC")]
    pub policy: Option<String>,
    /// Also write per-episode costs to episodes.csv.
    #[arg(long)]
    pub episodes_csv: bool,
}

/// Merged view of flags and config file.
pub struct Context {
    file: FileConfig,
    params_flag: Option<[f64; 6]>,
    n_max_flag: Option<usize>,
    tie_break_flag: Option<u8>,
    out: PathBuf,
    quiet: bool,
}

impl Context {
    pub fn new(g: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &g.config {
            Some(p) => config::load(p)?,
            None => FileConfig::default(),
        };
        let params_flag = g.params.as_deref().map(config::parse_params).transpose()?;
        let out = g.out.clone().or_else(|| file.output.dir.clone()).unwrap_or_else(|| config::DEFAULT_OUT.into());
        Ok(Context { file, params_flag, n_max_flag: g.n_max, tie_break_flag: g.tie_break, out, quiet: g.quiet })
    }

    fn params(&self) -> Result<ModelParams, CliError> {
        self.file.model.params(self.params_flag)
    }

    fn options(&self) -> Result<SolveOptions, CliError> {
        self.file.model.options(self.tie_break_flag)
    }

    fn n_max(&self) -> usize {
        self.n_max_flag.or(self.file.model.n_max).unwrap_or(config::DEFAULT_N_MAX)
    }

    fn solve(&self) -> Result<SolveResult, CliError> {
        let p = self.params()?;
        Ok(solve_with(&p, self.n_max(), self.options()?)?)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.say(format!("wrote {}", path.display()));
        Ok(path)
    }
}

fn state_cols(x: SystemState) -> String {
    format!("{},{},{},{}", x.i, x.j, x.k, x.l)
}

pub fn values_csv(r: &SolveResult) -> Result<String, CliError> {
    let mut s = String::from("i,j,k,l,value\n");
    for (x, v) in enumerate_states(r.n_max())?.into_iter().zip(r.values()) {
        writeln!(s, "{},{}", state_cols(x), fmt_sig(*v)).unwrap();
    }
    Ok(s)
}

pub fn actions_csv(r: &SolveResult) -> String {
    let mut s = String::from("i,j,k,l,action,decision_diff,tie\n");
    for (x, d) in r.decisions() {
        writeln!(s, "{},{},{},{}", state_cols(x), d.action.code(), fmt_sig(d.diff), u8::from(d.tie)).unwrap();
    }
    s
}

pub fn solve(ctx: &Context) -> Result<(), CliError> {
    let r = ctx.solve()?;
    ctx.write("values.csv", &values_csv(&r)?)?;
    ctx.write("actions.csv", &actions_csv(&r))?;
    Ok(())
}

pub fn evaluate(ctx: &Context, a: &EvaluateArgs) -> Result<(), CliError> {
    let spec = a.policy.clone().or_else(|| ctx.file.policy.spec.clone()).unwrap_or_else(|| "p5".into());
    let state = a.state.as_deref().or(ctx.file.policy.state.as_deref()).map(config::parse_state).transpose()?;
    let solved = Arc::new(ctx.solve()?);
    let policy = PolicyRegistry::builtin().build_str(&spec, &PolicyContext::with_solution(solved.clone()))?;
    let eval = evaluate_policy(solved.params(), policy.as_ref(), solved.n_max())?;
    let mut s = String::from("i,j,k,l,v_opt,v_policy,rel_err\n");
    for (x, (&vo, &vp)) in enumerate_states(solved.n_max())?.into_iter().zip(solved.values().iter().zip(eval.values())) {
        let err = if x.is_terminal() { String::new() } else { fmt_sig(relative_error(vp, vo)?) };
        writeln!(s, "{},{},{},{err}", state_cols(x), fmt_sig(vo), fmt_sig(vp)).unwrap();
    }
    ctx.write("eval.csv", &s)?;
    if let Some(x) = state {
        let (vo, vp) = (solved.try_value(x)?, eval.try_value(x)?);
        let err = if x.is_terminal() { 0.0 } else { relative_error(vp, vo)? };
        ctx.say(format!(
            "{} at {x}: v_opt={} v_policy={} rel_err={:.4}%",
            policy.spec(),
            fmt_sig(vo),
            fmt_sig(vp),
            100.0 * err
        ));
    }
    Ok(())
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.file.sweep.spec(ctx.n_max_flag, ctx.options()?)?;
    let report = run_sweep(&spec)?;
    ctx.write("rows.csv", &report.rows_csv())?;
    ctx.write("aggregates.csv", &report.aggregates_csv())?;
    ctx.write("worstcases.txt", &report.worstcases_text())?;
    ctx.say(report.summary_text());
    ctx.say(report.worstcases_text().trim_end());
    Ok(())
}

pub fn structure(ctx: &Context) -> Result<(), CliError> {
    let r = ctx.solve()?;
    let report = analyze(&r);
    ctx.write("structure.txt", &report.to_text())?;
    if report.any_violated() {
        let bad: Vec<String> = report
            .certificates
            .iter()
            .filter(|c| c.is_violated())
            .map(|c| match c.witness {
                Some(w) => format!("{} at {w}", c.id),
                None => c.id.to_string(),
            })
            .collect();
        return Err(CliError::Failure(format!("certificate violated: {}", bad.join("; "))));
    }
    Ok(())
}

fn parse_fault(s: &str) -> Result<(SystemState, f64), CliError> {
    let bad = || CliError::Usage(format!("--inject-fault expects i,j,k,l=DELTA, got '{s}'"));
    let (x, d) = s.split_once('=').ok_or_else(bad)?;
    let delta: f64 = d.trim().parse().map_err(|_| bad())?;
    Ok((config::parse_state(x.trim())?, delta))
}

pub fn verify(ctx: &Context, a: &VerifyArgs) -> Result<(), CliError> {
    let mut r = ctx.solve()?;
    if let Some(f) = &a.inject_fault {
        let (x, delta) = parse_fault(f)?;
        r = r.perturbed(x, delta)?;
    }
    let checks = verify_all(&r);
    let report = analyze(&r);
    let (residual, residual_at) = r.worst_residual();

    let mut text = String::new();
    writeln!(text, "params: {}", r.params()).unwrap();
    writeln!(text, "n_max: {}", r.n_max()).unwrap();
    writeln!(text, "max relative residual: {:e}", residual).unwrap();
    if let Some(x) = residual_at {
        writeln!(text, "residual attained at: {x}").unwrap();
    }
    writeln!(text, "\n[inequality checks]").unwrap();
    for c in &checks {
        let margin = if c.worst_margin.is_nan() { "-".to_string() } else { fmt_sig(c.worst_margin) };
        let witness = c.witness.map(|w| w.to_string()).unwrap_or_else(|| "-".into());
        writeln!(text, "{:<24} {:<22} margin={margin} witness={witness} {}", c.id, c.status.label(), c.range_label())
            .unwrap();
    }
    writeln!(text).unwrap();
    text.push_str(&report.to_text());
    ctx.write("verify.txt", &text)?;
    ctx.write("bounds.csv", &checks_csv(&checks))?;

    let mut failures = Vec::new();
    if residual.is_nan() || residual > CHECK_TOL {
        let at = residual_at.map(|x| format!(" at {x}")).unwrap_or_default();
        failures.push(format!("residual {residual:e}{at}"));
    }
    for c in checks.iter().filter(|c| c.failed()) {
        let at = c.witness.map(|x| format!(" at {x}")).unwrap_or_default();
        failures.push(format!("{} fails{at}", c.id));
    }
    for c in report.certificates.iter().filter(|c| c.is_violated()) {
        let at = c.witness.map(|x| format!(" at {x}")).unwrap_or_default();
        failures.push(format!("{} violated{at}", c.id));
    }
    if failures.is_empty() {
        ctx.say(format!("verify: all applicable checks pass (residual {residual:.1e})"));
        Ok(())
    } else {
        Err(CliError::Failure(format!("verification failed: {}", failures.join("; "))))
    }
}

pub fn simulate(ctx: &Context, a: &SimulateArgs) -> Result<(), CliError> {
    let sec = &ctx.file.simulate;
    let params = ctx.params()?;
    let episodes = a.episodes.or(sec.episodes).unwrap_or(config::DEFAULT_EPISODES);
    let seed = a.seed.or(sec.seed).unwrap_or(0);
    let start = config::parse_state(a.start.as_deref().or(sec.start.as_deref()).unwrap_or(config::DEFAULT_START))?;
    let spec = a.policy.clone().or_else(|| sec.policy.clone()).unwrap_or_else(|| "optimal".into());

    let registry = PolicyRegistry::builtin();
    let needs_table = spec.split(':').next() == Some("optimal");
    let pctx = if needs_table {
        let n_max = ctx.n_max().max(start.total_jobs() as usize).max(1);
        PolicyContext::with_solution(Arc::new(solve_with(&params, n_max, ctx.options()?)?))
    } else {
        PolicyContext::default()
    };
    let policy = registry.build_str(&spec, &pctx)?;
    let run = run_with_policy(&params, policy.as_ref(), start, episodes, seed)?;
    let e = run.estimate;
    ctx.say(format!(
        "simulate policy={} start={start} episodes={} seed={} mean={} sd={} se={} rng={RNG_NAME}",
        policy.spec(),
        e.episodes,
        e.seed,
        fmt_sig(e.mean),
        fmt_sig(e.sd),
        fmt_sig(e.se)
    ));
    if a.episodes_csv {
        ctx.write("episodes.csv", &episodes_csv(&run))?;
    }
    Ok(())
}
