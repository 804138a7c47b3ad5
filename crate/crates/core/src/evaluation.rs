//! Exact cost of fixed policies and the heuristic-versus-optimal sweep.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Action, ModelParams, SystemState};
use crate::policy::{extract_thresholds, PolicyContext, PolicyRegistry, RoutingPolicy, StructureKind, HEURISTIC_SUITE};
use crate::solver::{solve_with, sweep, SolveOptions, SolveResult};
use crate::space::{enumerate_states, index_of};

/// Cost-to-clear of every state under one fixed policy.
#[derive(Debug, Clone)]
pub struct EvalResult {
    params: ModelParams,
    policy: String,
    n_max: usize,
    values: Vec<f64>,
}

impl EvalResult {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn policy(&self) -> &str {
        &self.policy
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Values in rank order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: SystemState) -> Option<f64> {
        index_of(x, self.n_max).map(|idx| self.values[idx])
    }

    pub fn try_value(&self, x: SystemState) -> Result<f64> {
        if !x.in_space() {
            return Err(Error::NotInStateSpace(x));
        }
        self.value(x).ok_or(Error::OutOfRange { state: x, n_max: self.n_max })
    }
}

/// Same sweep as the optimal solver, but each Phase I completion follows
/// the policy instead of taking the minimum.
pub fn evaluate_policy(params: &ModelParams, policy: &dyn RoutingPolicy, n_max: usize) -> Result<EvalResult> {
    let values = sweep::<f64, _>(params, n_max, |x, &v1, &v2| {
        Ok(match policy.action_of(x)? {
            Action::Station1 => v1,
            Action::Station2 => v2,
        })
    })?;
    Ok(EvalResult { params: *params, policy: policy.spec(), n_max, values })
}

pub fn relative_error(v_policy: f64, v_opt: f64) -> Result<f64> {
    if v_opt.is_nan() || v_opt <= 0.0 {
        return Err(Error::ZeroOptimalValue(v_opt));
    }
    Ok((v_policy - v_opt) / v_opt)
}

/// Rounds to 12 significant digits, the precision of every emitted CSV.
pub fn quantize(x: f64) -> f64 {
    fmt_sig(x).parse().expect("formatted float parses")
}

/// Shortest decimal that round-trips the 12-significant-digit value.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if rounded != 0.0 && !(1e-6..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

/// Which of the two relative-speed regimes a configuration falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpeedRegime {
    /// Station 1 at least as fast on average (`m1 <= m2`).
    M1LeM2,
    M1GtM2,
}

impl SpeedRegime {
    pub const ALL: [SpeedRegime; 2] = [SpeedRegime::M1LeM2, SpeedRegime::M1GtM2];

    pub fn of(p: &ModelParams) -> Self {
        if p.mu1 >= p.mu2 {
            SpeedRegime::M1LeM2
        } else {
            SpeedRegime::M1GtM2
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SpeedRegime::M1LeM2 => "m1<=m2",
            SpeedRegime::M1GtM2 => "m1>m2",
        }
    }
}

impl fmt::Display for SpeedRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Cartesian parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

/// Outcome of the strict `h1/mu1 > h2/mu2` filter over a grid.
#[derive(Debug, Clone, Default)]
pub struct GridSelection {
    pub included: Vec<ModelParams>,
    pub dropped_equality: usize,
    pub dropped_violated: usize,
}

impl SweepGrid {
    /// The published study grid.
    pub fn standard() -> Self {
        SweepGrid {
            mu0: vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0],
            mu1: vec![10.0],
            mu2: vec![4.0, 6.0, 8.0, 12.0, 15.0, 25.0],
            h0: vec![0.01, 0.05, 0.1, 0.5, 1.0],
            h1: vec![1.0],
            h2: vec![0.2, 0.5, 1.0, 1.5, 2.0],
        }
    }

    pub fn len(&self) -> usize {
        self.mu0.len() * self.mu1.len() * self.mu2.len() * self.h0.len() * self.h1.len() * self.h2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Configurations in nested order (`mu0` outermost, `h2` innermost).
    pub fn select(&self) -> Result<GridSelection> {
        let mut out = GridSelection::default();
        for &mu0 in &self.mu0 {
            for &mu1 in &self.mu1 {
                for &mu2 in &self.mu2 {
                    for &h0 in &self.h0 {
                        for &h1 in &self.h1 {
                            for &h2 in &self.h2 {
                                let p = ModelParams::new(mu0, mu1, mu2, h0, h1, h2)?;
                                let (lhs, rhs) = (h1 * mu2, h2 * mu1);
                                if lhs > rhs {
                                    out.included.push(p);
                                } else if lhs == rhs {
                                    out.dropped_equality += 1;
                                } else {
                                    out.dropped_violated += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Labelled policy column of a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyColumn {
    pub label: String,
    pub spec: String,
}

impl PolicyColumn {
    pub fn new(label: &str, spec: &str) -> Self {
        PolicyColumn { label: label.to_string(), spec: spec.to_string() }
    }

    /// `p1..p5` over the five heuristics.
    pub fn heuristic_suite() -> Vec<PolicyColumn> {
        HEURISTIC_SUITE.iter().map(|(label, spec)| PolicyColumn::new(label, spec)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    pub states: Vec<SystemState>,
    pub policies: Vec<PolicyColumn>,
    pub n_max: usize,
    pub options: SolveOptions,
    pub parallel: bool,
}

impl SweepSpec {
    pub fn standard() -> Self {
        SweepSpec {
            grid: SweepGrid::standard(),
            states: vec![
                SystemState::new(20, 2, 0, 0),
                SystemState::new(20, 1, 1, 0),
                SystemState::new(20, 1, 0, 1),
            ],
            policies: PolicyColumn::heuristic_suite(),
            n_max: 22,
            options: SolveOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config: usize,
    pub params: ModelParams,
    pub state: SystemState,
    pub v_opt: f64,
    pub v_policy: Vec<f64>,
    /// Relative errors, quantized to the emitted precision.
    pub err: Vec<f64>,
}

impl SweepRow {
    pub fn regime(&self) -> SpeedRegime {
        SpeedRegime::of(&self.params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregationMode {
    /// Every (configuration, state) row counts once.
    Rows,
    /// Each configuration contributes its worst state.
    ConfigMax,
}

impl AggregationMode {
    pub const ALL: [AggregationMode; 2] = [AggregationMode::Rows, AggregationMode::ConfigMax];

    pub fn label(self) -> &'static str {
        match self {
            AggregationMode::Rows => "rows",
            AggregationMode::ConfigMax => "config-max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    /// `n - 1` denominator.
    pub std_sample: f64,
    pub std_population: f64,
}

impl Stats {
    /// Summation in slice order, so recomputation from the same sequence is
    /// bit-identical.
    pub fn of(xs: &[f64]) -> Stats {
        let n = xs.len();
        if n == 0 {
            return Stats { count: 0, max: f64::NAN, mean: f64::NAN, std_sample: f64::NAN, std_population: f64::NAN };
        }
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        let std_sample = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
        Stats { count: n, max, mean, std_sample, std_population: (ss / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub regime: SpeedRegime,
    pub policy: String,
    pub mode: AggregationMode,
    pub stats: Stats,
}

/// Row achieving the largest error for one policy within one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub regime: SpeedRegime,
    pub policy: String,
    pub row: usize,
    pub err: f64,
}

/// Row where the all-Station-1 heuristic loses to another heuristic even
/// though the optimal policy sends every both-busy decision to Station 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceException {
    pub row: usize,
    pub policy: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub n_max: usize,
    pub policies: Vec<PolicyColumn>,
    pub rows: Vec<SweepRow>,
    pub configs: usize,
    pub dropped_equality: usize,
    pub dropped_violated: usize,
    /// Decision states solved within tolerance of a tie, over all configs.
    pub tie_decisions: usize,
    pub dominance_exceptions: Vec<DominanceException>,
}

struct ConfigOutcome {
    rows: Vec<SweepRow>,
    ties: usize,
    all_station1: bool,
}

fn run_config(spec: &SweepSpec, config: usize, params: &ModelParams) -> Result<ConfigOutcome> {
    let solved = Arc::new(solve_with(params, spec.n_max, spec.options)?);
    let ctx = PolicyContext::with_solution(solved.clone());
    let registry = PolicyRegistry::builtin();
    let evals = spec
        .policies
        .iter()
        .map(|c| {
            let policy = registry.build_str(&c.spec, &ctx)?;
            evaluate_policy(params, policy.as_ref(), spec.n_max)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(spec.states.len());
    for &state in &spec.states {
        let v_opt = solved.try_value(state)?;
        let v_policy = evals.iter().map(|e| e.try_value(state)).collect::<Result<Vec<_>>>()?;
        let err = v_policy
            .iter()
            .map(|&v| relative_error(v, v_opt).map(quantize))
            .collect::<Result<Vec<_>>>()?;
        rows.push(SweepRow { config, params: *params, state, v_opt, v_policy, err });
    }
    let ties = solved.decisions().filter(|(_, d)| d.tie).count();
    let all_station1 = extract_thresholds(&solved).iter().all(|c| c.kind == StructureKind::Threshold(0));
    Ok(ConfigOutcome { rows, ties, all_station1 })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    if spec.policies.is_empty() {
        return Err(Error::Sweep("no policies".into()));
    }
    for s in &spec.states {
        if !s.in_space() {
            return Err(Error::NotInStateSpace(*s));
        }
        if s.total_jobs() as usize > spec.n_max {
            return Err(Error::OutOfRange { state: *s, n_max: spec.n_max });
        }
    }
    let selection = spec.grid.select()?;
    let work: Vec<(usize, &ModelParams)> = selection.included.iter().enumerate().collect();
    let outcomes: Vec<ConfigOutcome> = if spec.parallel {
        work.par_iter().map(|&(c, p)| run_config(spec, c, p)).collect::<Result<_>>()?
    } else {
        work.iter().map(|&(c, p)| run_config(spec, c, p)).collect::<Result<_>>()?
    };

    let p1 = spec.policies.iter().position(|c| c.spec == "always1");
    let mut rows = Vec::new();
    let mut tie_decisions = 0;
    let mut dominance_exceptions = Vec::new();
    for outcome in outcomes {
        tie_decisions += outcome.ties;
        for row in outcome.rows {
            let idx = rows.len();
            if let (Some(p1), true, true) = (p1, outcome.all_station1, row.state.i >= 1) {
                for (col, c) in spec.policies.iter().enumerate() {
                    if col != p1 && c.spec != "optimal" && row.err[p1] > row.err[col] {
                        dominance_exceptions.push(DominanceException { row: idx, policy: c.label.clone() });
                    }
                }
            }
            rows.push(row);
        }
    }
    Ok(SweepReport {
        n_max: spec.n_max,
        policies: spec.policies.clone(),
        rows,
        configs: selection.included.len(),
        dropped_equality: selection.dropped_equality,
        dropped_violated: selection.dropped_violated,
        tie_decisions,
        dominance_exceptions,
    })
}

impl SweepReport {
    pub fn policy_index(&self, label: &str) -> Option<usize> {
        self.policies.iter().position(|c| c.label == label)
    }

    /// Errors feeding one aggregate, in row order.
    pub fn samples(&self, regime: SpeedRegime, policy: usize, mode: AggregationMode) -> Vec<f64> {
        let rows = self.rows.iter().filter(|r| r.regime() == regime);
        match mode {
            AggregationMode::Rows => rows.map(|r| r.err[policy]).collect(),
            AggregationMode::ConfigMax => {
                let mut out: Vec<f64> = Vec::new();
                let mut last = None;
                for r in rows {
                    if last == Some(r.config) {
                        let m = out.last_mut().expect("config started");
                        *m = m.max(r.err[policy]);
                    } else {
                        out.push(r.err[policy]);
                        last = Some(r.config);
                    }
                }
                out
            }
        }
    }

    pub fn stats(&self, regime: SpeedRegime, label: &str, mode: AggregationMode) -> Option<Stats> {
        let p = self.policy_index(label)?;
        Some(Stats::of(&self.samples(regime, p, mode)))
    }

    /// Regime-major, then mode, then policy.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut out = Vec::new();
        for regime in SpeedRegime::ALL {
            for mode in AggregationMode::ALL {
                for (p, c) in self.policies.iter().enumerate() {
                    out.push(Aggregate {
                        regime,
                        policy: c.label.clone(),
                        mode,
                        stats: Stats::of(&self.samples(regime, p, mode)),
                    });
                }
            }
        }
        out
    }

    /// First row attaining the maximum, per regime and policy.
    pub fn worst_cases(&self) -> Vec<WorstCase> {
        let mut out = Vec::new();
        for regime in SpeedRegime::ALL {
            for (p, c) in self.policies.iter().enumerate() {
                let best = self
                    .rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.regime() == regime)
                    .fold(None::<(usize, f64)>, |acc, (idx, r)| match acc {
                        Some((_, e)) if e >= r.err[p] => acc,
                        _ => Some((idx, r.err[p])),
                    });
                if let Some((row, err)) = best {
                    out.push(WorstCase { regime, policy: c.label.clone(), row, err });
                }
            }
        }
        out
    }

    pub fn rows_csv(&self) -> String {
        let mut s = String::from("mu0,mu1,mu2,h0,h1,h2,i,j,k,l,v_opt");
        for c in &self.policies {
            write!(s, ",v_{}", c.label).unwrap();
        }
        for c in &self.policies {
            write!(s, ",err_{}", c.label).unwrap();
        }
        s.push('\n');
        for r in &self.rows {
            let p = &r.params;
            let x = r.state;
            let mut fields: Vec<String> =
                [p.mu0, p.mu1, p.mu2, p.h0, p.h1, p.h2].iter().map(|&v| fmt_sig(v)).collect();
            fields.extend([x.i, x.j, x.k, x.l].iter().map(u32::to_string));
            fields.push(fmt_sig(r.v_opt));
            fields.extend(r.v_policy.iter().map(|&v| fmt_sig(v)));
            fields.extend(r.err.iter().map(|&v| fmt_sig(v)));
            s.push_str(&fields.join(","));
            s.push('\n');
        }
        s
    }

    /// `std` is the sample deviation.
    pub fn aggregates_csv(&self) -> String {
        let mut s = String::from("regime,policy,max,mean,std,mode\n");
        for a in self.aggregates() {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                a.regime,
                a.policy,
                fmt_sig(a.stats.max),
                fmt_sig(a.stats.mean),
                fmt_sig(a.stats.std_sample),
                a.mode.label()
            )
            .unwrap();
        }
        s
    }

    pub fn worstcases_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# worst (config, state) per regime and policy; n_max = {}", self.n_max).unwrap();
        writeln!(
            s,
            "# {} configs kept, {} dropped at equality, {} dropped as violating; {} tied decisions",
            self.configs, self.dropped_equality, self.dropped_violated, self.tie_decisions
        )
        .unwrap();
        for w in self.worst_cases() {
            let r = &self.rows[w.row];
            writeln!(s, "{} {} err={:.4}% params[{}] state={}", w.regime, w.policy, 100.0 * w.err, r.params, r.state)
                .unwrap();
        }
        s
    }

    /// Human-readable tables in percent, sample and population deviation.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for regime in SpeedRegime::ALL {
            for mode in AggregationMode::ALL {
                writeln!(s, "{regime} [{}]", mode.label()).unwrap();
                writeln!(s, "{:>8} {:>9} {:>9} {:>9} {:>9}", "policy", "max%", "mean%", "std%", "pstd%").unwrap();
                for c in &self.policies {
                    let st = self.stats(regime, &c.label, mode).expect("label present");
                    writeln!(
                        s,
                        "{:>8} {:>9.1} {:>9.1} {:>9.1} {:>9.1}",
                        c.label,
                        100.0 * st.max,
                        100.0 * st.mean,
                        100.0 * st.std_sample,
                        100.0 * st.std_population
                    )
                    .unwrap();
                }
            }
        }
        s
    }
}

/// Values of a solved table and a fixed policy over all states, for
/// callers that want the whole function rather than sweep rows.
pub fn compare_all(solved: &SolveResult, eval: &EvalResult) -> Result<Vec<(SystemState, f64, f64)>> {
    if solved.n_max() != eval.n_max() {
        return Err(Error::Sweep("mismatched budgets".into()));
    }
    Ok(enumerate_states(solved.n_max())?
        .into_iter()
        .zip(solved.values().iter().zip(eval.values()))
        .map(|(x, (&a, &b))| (x, a, b))
        .collect())
}
