//! Routing policies.
//!
//! Every policy implements [`RoutingPolicy`] and is constructed by name
//! through a [`PolicyRegistry`], so the evaluator, simulator and CLI never
//! match on concrete policy types. Specs are strings of the form
//! `name[:arg]`, e.g. `threshold:10`, `custom:inf,inf,0`, `optimal`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Action, SystemState};
use crate::solver::SolveResult;
use crate::space::DECISION_CONFIGS;

/// A stationary routing rule over decision states.
pub trait RoutingPolicy: Send + Sync + fmt::Debug {
    /// Canonical spec string; parsing it yields an equivalent policy.
    fn spec(&self) -> String;

    /// Destination chosen at decision state `x`.
    fn route(&self, x: SystemState) -> Result<Action>;

    /// Same as [`route`](Self::route) but rejects non-decision states.
    fn action_of(&self, x: SystemState) -> Result<Action> {
        if !x.in_space() || !x.is_decision_state() {
            return Err(Error::NotDecisionState(x));
        }
        self.route(x)
    }
}

/// Queue-length cutoff; `Infinite` never switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Threshold {
    Finite(u32),
    Infinite,
}

impl Threshold {
    /// Station 1 iff `i >= threshold`.
    pub fn action_at(self, i: u32) -> Action {
        match self {
            Threshold::Finite(t) if i >= t => Action::Station1,
            _ => Action::Station2,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Finite(t) => write!(f, "{t}"),
            Threshold::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Threshold::Infinite),
            t => t.parse().map(Threshold::Finite).map_err(|e| format!("bad threshold '{t}': {e}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlwaysStation1;

impl RoutingPolicy for AlwaysStation1 {
    fn spec(&self) -> String {
        "always1".into()
    }
    fn route(&self, _: SystemState) -> Result<Action> {
        Ok(Action::Station1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlwaysStation2;

impl RoutingPolicy for AlwaysStation2 {
    fn spec(&self) -> String {
        "always2".into()
    }
    fn route(&self, _: SystemState) -> Result<Action> {
        Ok(Action::Station2)
    }
}

/// Station 1 once the Phase I queue reaches a fixed length, whatever the
/// downstream configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdOnQueue(pub Threshold);

impl RoutingPolicy for ThresholdOnQueue {
    fn spec(&self) -> String {
        format!("threshold:{}", self.0)
    }
    fn route(&self, x: SystemState) -> Result<Action> {
        Ok(self.0.action_at(x.i))
    }
}

/// Station 2 exactly when its server is free, so a routed job never waits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockingAware;

impl RoutingPolicy for BlockingAware {
    fn spec(&self) -> String {
        "blocking".into()
    }
    fn route(&self, x: SystemState) -> Result<Action> {
        Ok(if x.l == 0 { Action::Station2 } else { Action::Station1 })
    }
}

/// Separate queue thresholds for the three both-busy decision
/// configurations `(2,0,0)`, `(1,1,0)`, `(1,0,1)`. The single-job state
/// `(0,1,0,0)` uses the `(2,0,0)` threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CustomThresholds {
    pub n200: Threshold,
    pub n110: Threshold,
    pub n101: Threshold,
}

impl RoutingPolicy for CustomThresholds {
    fn spec(&self) -> String {
        format!("custom:{},{},{}", self.n200, self.n110, self.n101)
    }
    fn route(&self, x: SystemState) -> Result<Action> {
        let t = match (x.j, x.k, x.l) {
            (1, 1, 0) => self.n110,
            (1, 0, 1) => self.n101,
            _ => self.n200,
        };
        Ok(t.action_at(x.i))
    }
}

/// Reads the argmin table of a solved instance.
#[derive(Debug, Clone)]
pub struct OptimalPolicy {
    solved: Arc<SolveResult>,
}

impl OptimalPolicy {
    pub fn new(solved: Arc<SolveResult>) -> Self {
        OptimalPolicy { solved }
    }
}

impl RoutingPolicy for OptimalPolicy {
    fn spec(&self) -> String {
        "optimal".into()
    }
    fn route(&self, x: SystemState) -> Result<Action> {
        self.solved
            .action(x)
            .ok_or(Error::OutOfRange { state: x, n_max: self.solved.n_max() })
    }
}

/// Parsed `name[:arg]` policy description.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolicySpec {
    pub name: String,
    pub arg: Option<String>,
}

impl PolicySpec {
    pub fn new(name: &str, arg: Option<&str>) -> Self {
        PolicySpec { name: name.to_string(), arg: arg.map(str::to_string) }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::BadPolicySpec { spec: s.into(), reason: "empty".into() });
        }
        Ok(match s.split_once(':') {
            Some((name, arg)) => PolicySpec::new(name.trim(), Some(arg.trim())),
            None => PolicySpec::new(s, None),
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.arg {
            Some(a) => write!(f, "{}:{}", self.name, a),
            None => write!(f, "{}", self.name),
        }
    }
}

/// What a factory may draw on when building a policy.
#[derive(Debug, Clone, Default)]
pub struct PolicyContext {
    pub solved: Option<Arc<SolveResult>>,
}

impl PolicyContext {
    pub fn with_solution(solved: Arc<SolveResult>) -> Self {
        PolicyContext { solved: Some(solved) }
    }
}

pub type PolicyFactory = fn(&PolicySpec, &PolicyContext) -> Result<Box<dyn RoutingPolicy>>;

struct Entry {
    name: &'static str,
    usage: &'static str,
    factory: PolicyFactory,
}

/// Name-keyed table of policy constructors.
pub struct PolicyRegistry {
    entries: Vec<Entry>,
}

fn bad(spec: &PolicySpec, reason: impl Into<String>) -> Error {
    Error::BadPolicySpec { spec: spec.to_string(), reason: reason.into() }
}

fn no_arg(spec: &PolicySpec) -> Result<()> {
    match &spec.arg {
        None => Ok(()),
        Some(_) => Err(bad(spec, "takes no argument")),
    }
}

fn threshold_arg(spec: &PolicySpec) -> Result<Threshold> {
    let arg = spec.arg.as_deref().ok_or_else(|| bad(spec, "missing threshold"))?;
    arg.parse().map_err(|e: String| bad(spec, e))
}

fn build_optimal(spec: &PolicySpec, ctx: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
    no_arg(spec)?;
    let solved = ctx.solved.clone().ok_or_else(|| Error::MissingSolution(spec.to_string()))?;
    Ok(Box::new(OptimalPolicy::new(solved)))
}

fn build_always1(spec: &PolicySpec, _: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
    no_arg(spec)?;
    Ok(Box::new(AlwaysStation1))
}

fn build_always2(spec: &PolicySpec, _: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
    no_arg(spec)?;
    Ok(Box::new(AlwaysStation2))
}

fn build_threshold(spec: &PolicySpec, _: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
    Ok(Box::new(ThresholdOnQueue(threshold_arg(spec)?)))
}

fn build_blocking(spec: &PolicySpec, _: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
    no_arg(spec)?;
    Ok(Box::new(BlockingAware))
}

fn build_custom(spec: &PolicySpec, _: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
    let arg = spec.arg.as_deref().ok_or_else(|| bad(spec, "expected three thresholds"))?;
    let parts: Vec<&str> = arg.split(',').collect();
    if parts.len() != 3 {
        return Err(bad(spec, "expected N200,N110,N101"));
    }
    let mut t = [Threshold::Infinite; 3];
    for (slot, part) in t.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|e: String| bad(spec, e))?;
    }
    Ok(Box::new(CustomThresholds { n200: t[0], n110: t[1], n101: t[2] }))
}

/// The five heuristics compared against the optimum in the numerical
/// study, in their conventional order.
pub const HEURISTIC_SUITE: [(&str, &str); 5] = [
    ("p1", "always1"),
    ("p2", "threshold:10"),
    ("p3", "threshold:15"),
    ("p4", "always2"),
    ("p5", "blocking"),
];

fn build_suite_member(spec: &PolicySpec, ctx: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
    no_arg(spec)?;
    let (_, target) = HEURISTIC_SUITE
        .iter()
        .find(|(alias, _)| *alias == spec.name)
        .ok_or_else(|| Error::UnknownPolicy(spec.name.clone()))?;
    PolicyRegistry::builtin().build(&target.parse()?, ctx)
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        PolicyRegistry { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = PolicyRegistry::empty();
        r.register("optimal", "optimal  argmin table of the solved instance", build_optimal);
        r.register("always1", "always1  always route to Station 1", build_always1);
        r.register("always2", "always2  always route to Station 2", build_always2);
        r.register("threshold", "threshold:T  Station 1 iff queue >= T (T may be inf)", build_threshold);
        r.register("blocking", "blocking  Station 2 iff its server is free", build_blocking);
        r.register(
            "custom",
            "custom:N200,N110,N101  per-configuration queue thresholds",
            build_custom,
        );
        for (alias, _) in HEURISTIC_SUITE {
            r.register(alias, "p1..p5  heuristic suite aliases", build_suite_member);
        }
        r
    }

    /// Adds or replaces a named constructor.
    pub fn register(&mut self, name: &'static str, usage: &'static str, factory: PolicyFactory) {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry { name, usage, factory });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|e| e.name)
    }

    pub fn usage(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = self.entries.iter().map(|e| e.usage).collect();
        out.dedup();
        out
    }

    pub fn build(&self, spec: &PolicySpec, ctx: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
        let entry = self
            .entries
            .iter()
            .find(|e| e.name == spec.name)
            .ok_or_else(|| Error::UnknownPolicy(spec.name.clone()))?;
        (entry.factory)(spec, ctx)
    }

    pub fn build_str(&self, spec: &str, ctx: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
        self.build(&spec.parse()?, ctx)
    }
}

impl Default for PolicyRegistry {
    fn default() -> Self {
        PolicyRegistry::builtin()
    }
}

/// Maximal block of consecutive queue lengths sharing an optimal action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub action: Action,
    pub from: u32,
    /// Inclusive.
    pub to: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    /// Station 2 below the cutoff, Station 1 from it on (0 = always 1).
    Threshold(u32),
    /// Station 2 throughout the solved range.
    NoSwitchInRange,
    NonThreshold,
}

/// Optimal actions along `(i, j, k, l)` for one downstream configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigStructure {
    pub config: (u32, u32, u32),
    pub runs: Vec<Run>,
    pub kind: StructureKind,
    pub ties: usize,
}

impl ConfigStructure {
    pub fn action_at(&self, i: u32) -> Option<Action> {
        self.runs.iter().find(|r| r.from <= i && i <= r.to).map(|r| r.action)
    }

    pub fn rle_string(&self) -> String {
        self.runs
            .iter()
            .map(|r| format!("{} on [{},{}]", r.action, r.from, r.to))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl fmt::Display for ConfigStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (j, k, l) = self.config;
        let kind = match self.kind {
            StructureKind::Threshold(n) => format!("threshold N={n}"),
            StructureKind::NoSwitchInRange => "station 2 throughout".to_string(),
            StructureKind::NonThreshold => "non-threshold".to_string(),
        };
        write!(f, "(i,{j},{k},{l}): {kind}; {}", self.rle_string())
    }
}

/// Run-length encodes the optimal action over `i = 0..=n_max-2` for each
/// both-busy decision configuration. Observed structure only.
pub fn extract_thresholds(result: &SolveResult) -> Vec<ConfigStructure> {
    let top = (result.n_max() as u32).saturating_sub(2);
    DECISION_CONFIGS
        .iter()
        .map(|&(j, k, l)| {
            let mut runs: Vec<Run> = Vec::new();
            let mut ties = 0;
            if result.n_max() >= 2 {
                for i in 0..=top {
                    let d = result.decision(SystemState::new(i, j, k, l)).expect("decision state in range");
                    ties += usize::from(d.tie);
                    match runs.last_mut() {
                        Some(r) if r.action == d.action => r.to = i,
                        _ => runs.push(Run { action: d.action, from: i, to: i }),
                    }
                }
            }
            let kind = match runs.as_slice() {
                [only] if only.action == Action::Station1 => StructureKind::Threshold(0),
                [only] if only.action == Action::Station2 => StructureKind::NoSwitchInRange,
                [first, second] if first.action == Action::Station2 && second.action == Action::Station1 => {
                    StructureKind::Threshold(second.from)
                }
                _ => StructureKind::NonThreshold,
            };
            ConfigStructure { config: (j, k, l), runs, kind, ties }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::solver::solve;
    use crate::space::enumerate_states;

    fn build(spec: &str) -> Box<dyn RoutingPolicy> {
        PolicyRegistry::builtin().build_str(spec, &PolicyContext::default()).unwrap()
    }

    fn decision_states(n: usize) -> Vec<SystemState> {
        enumerate_states(n).unwrap().into_iter().filter(|x| x.is_decision_state()).collect()
    }

    #[test]
    fn threshold_examples() {
        let p2 = build("p2");
        assert_eq!(p2.action_of(SystemState::new(9, 2, 0, 0)).unwrap(), Action::Station2);
        assert_eq!(p2.action_of(SystemState::new(10, 2, 0, 0)).unwrap(), Action::Station1);
        let p5 = build("p5");
        assert_eq!(p5.action_of(SystemState::new(5, 1, 0, 1)).unwrap(), Action::Station1);
        assert_eq!(p5.action_of(SystemState::new(5, 1, 1, 0)).unwrap(), Action::Station2);
        let p1 = build("p1");
        assert!(decision_states(30).iter().all(|&x| p1.action_of(x).unwrap() == Action::Station1));
    }

    #[test]
    fn equivalences_hold_pointwise() {
        let pairs = [
            ("always1", "threshold:0"),
            ("always2", "threshold:inf"),
            ("blocking", "custom:inf,inf,0"),
            ("threshold:7", "custom:7,7,7"),
        ];
        for (a, b) in pairs {
            let (a, b) = (build(a), build(b));
            for x in decision_states(40) {
                assert_eq!(a.action_of(x).unwrap(), b.action_of(x).unwrap(), "{x}");
            }
        }
    }

    #[test]
    fn boundary_state_conventions() {
        let x = SystemState::new(0, 1, 0, 0);
        assert_eq!(build("threshold:0").action_of(x).unwrap(), Action::Station1);
        assert_eq!(build("threshold:10").action_of(x).unwrap(), Action::Station2);
        assert_eq!(build("blocking").action_of(x).unwrap(), Action::Station2);
        assert_eq!(build("custom:0,inf,inf").action_of(x).unwrap(), Action::Station1);
    }

    #[test]
    fn rejects_non_decision_states() {
        let p = build("always1");
        assert!(p.action_of(SystemState::new(3, 0, 1, 1)).is_err());
        assert!(p.action_of(SystemState::new(0, 0, 1, 0)).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let reg = PolicyRegistry::builtin();
        for s in ["always1", "always2", "threshold:12", "threshold:inf", "blocking", "custom:3,inf,0"] {
            let p = build(s);
            assert_eq!(p.spec(), s);
            let again = reg.build_str(&p.spec(), &PolicyContext::default()).unwrap();
            assert_eq!(again.spec(), s);
        }
        assert_eq!(build("p3").spec(), "threshold:15");
    }

    #[test]
    fn parse_errors() {
        let reg = PolicyRegistry::builtin();
        let ctx = PolicyContext::default();
        assert!(matches!(reg.build_str("nope", &ctx), Err(Error::UnknownPolicy(_))));
        assert!(matches!(reg.build_str("threshold", &ctx), Err(Error::BadPolicySpec { .. })));
        assert!(matches!(reg.build_str("threshold:x", &ctx), Err(Error::BadPolicySpec { .. })));
        assert!(matches!(reg.build_str("custom:1,2", &ctx), Err(Error::BadPolicySpec { .. })));
        assert!(matches!(reg.build_str("always1:3", &ctx), Err(Error::BadPolicySpec { .. })));
        assert!(matches!(reg.build_str("optimal", &ctx), Err(Error::MissingSolution(_))));
        assert!(reg.build_str("", &ctx).is_err());
    }

    #[test]
    fn custom_registration() {
        fn build_never_blocks(_: &PolicySpec, _: &PolicyContext) -> Result<Box<dyn RoutingPolicy>> {
            Ok(Box::new(BlockingAware))
        }
        let mut reg = PolicyRegistry::builtin();
        reg.register("noblock", "noblock", build_never_blocks);
        assert!(reg.names().any(|n| n == "noblock"));
        let p = reg.build_str("noblock", &PolicyContext::default()).unwrap();
        assert_eq!(p.spec(), "blocking");
    }

    #[test]
    fn optimal_reads_table_and_range() {
        let p = ModelParams::new(5.0, 10.0, 8.0, 0.01, 1.0, 0.2).unwrap();
        let solved = Arc::new(solve(&p, 12).unwrap());
        let ctx = PolicyContext::with_solution(solved.clone());
        let opt = PolicyRegistry::builtin().build_str("optimal", &ctx).unwrap();
        for (x, d) in solved.decisions() {
            assert_eq!(opt.action_of(x).unwrap(), d.action);
            if !d.tie {
                assert_eq!(d.action == Action::Station1, d.diff < 0.0);
            }
        }
        assert!(matches!(
            opt.action_of(SystemState::new(11, 2, 0, 0)),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn switch_point_examples() {
        let cases = [
            (12.0, 3.64),
            (9.0, 1.43),
            (6.6, 0.71),
        ];
        let mut kinds = Vec::new();
        for (mu2, h2) in cases {
            let p = ModelParams::new(5.0, 3.0, mu2, 0.1, 1.0, h2).unwrap();
            let s = extract_thresholds(&solve(&p, 120).unwrap());
            kinds.push(s[2].clone());
        }
        assert_eq!(kinds[0].config, (1, 0, 1));
        let rle = |c: &ConfigStructure| c.runs.iter().map(|r| (r.action.code(), r.from)).collect::<Vec<_>>();
        assert_eq!(rle(&kinds[0]), vec![(1, 0), (2, 67)]);
        assert_eq!(kinds[0].kind, StructureKind::NonThreshold);
        assert_eq!(rle(&kinds[1]), vec![(2, 0), (1, 1), (2, 26)]);
        assert_eq!(rle(&kinds[2]), vec![(2, 0), (1, 26)]);
        assert_eq!(kinds[2].kind, StructureKind::Threshold(26));
    }

    #[test]
    fn faster_cheaper_parallel_station_is_all_station1() {
        // m1 <= m2 and m1*h1 <= m2*h2
        let p = ModelParams::new(4.0, 10.0, 8.0, 0.2, 1.0, 1.5).unwrap();
        let s = extract_thresholds(&solve(&p, 40).unwrap());
        for c in s {
            assert_eq!(c.kind, StructureKind::Threshold(0), "{c}");
        }
    }
}
