//! Seeded Monte Carlo simulation of the clearing process.
//!
//! Episode `e` draws from ChaCha8 keyed by the seed, on stream `e`, so the
//! set of episodes does not depend on how they are scheduled.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::fmt_sig;
use crate::model::{Action, ModelParams, SystemState};
use crate::policy::{PolicyContext, PolicyRegistry, RoutingPolicy};
use crate::solver::solve;

/// Recorded alongside every estimate.
pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64(seed)), stream = episode index";

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    pub policy: String,
    pub start: SystemState,
    pub episodes: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.episodes == 0 {
            return Err(Error::NoEpisodes);
        }
        if !self.start.in_space() {
            return Err(Error::NotInStateSpace(self.start));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    /// `n - 1` denominator.
    pub sd: f64,
    pub se: f64,
    pub episodes: usize,
    pub seed: u64,
}

impl SimEstimate {
    pub fn z_score(&self, exact: f64) -> f64 {
        (self.mean - exact) / self.se
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Episode {
    pub cost: f64,
    pub events: u32,
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub estimate: SimEstimate,
    pub episodes: Vec<Episode>,
}

fn exponential(rng: &mut impl Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// One trajectory from `start` to the empty system.
pub fn simulate_episode(
    params: &ModelParams,
    policy: &dyn RoutingPolicy,
    start: SystemState,
    rng: &mut impl Rng,
) -> Result<Episode> {
    let mut x = start;
    let mut cost = 0.0;
    let mut events = 0;
    while !x.is_terminal() {
        let rate = x.total_rate(params)?;
        cost += x.cost_rate(params) * exponential(rng, rate);
        let d = x.dynamics();
        let mut u = rng.random::<f64>() * rate;
        x = 'next: {
            if let Some(r) = d.phase1 {
                let w = f64::from(r.servers) * params.mu0;
                if u < w {
                    break 'next match policy.action_of(x)? {
                        Action::Station1 => r.station1,
                        Action::Station2 => r.station2,
                    };
                }
                u -= w;
            }
            if let Some((servers, next)) = d.station1 {
                let w = f64::from(servers) * params.mu1;
                if u < w || d.station2.is_none() {
                    break 'next next;
                }
            }
            d.station2.expect("some server is active")
        };
        events += 1;
    }
    Ok(Episode { cost, events })
}

fn summarize(episodes: &[Episode], seed: u64) -> SimEstimate {
    let n = episodes.len();
    let mean = episodes.iter().map(|e| e.cost).sum::<f64>() / n as f64;
    let ss: f64 = episodes.iter().map(|e| (e.cost - mean) * (e.cost - mean)).sum();
    let sd = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
    SimEstimate { mean, sd, se: sd / (n as f64).sqrt(), episodes: n, seed }
}

/// Runs all episodes against an already built policy.
pub fn run_with_policy(
    params: &ModelParams,
    policy: &dyn RoutingPolicy,
    start: SystemState,
    episodes: usize,
    seed: u64,
) -> Result<SimRun> {
    if episodes == 0 {
        return Err(Error::NoEpisodes);
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let eps = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = base.clone();
            rng.set_stream(e as u64);
            simulate_episode(params, policy, start, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimRun { estimate: summarize(&eps, seed), episodes: eps })
}

/// Builds the policy from its spec, solving first if it needs the optimal
/// table, then simulates.
pub fn run(config: &SimConfig) -> Result<SimRun> {
    config.validate()?;
    let registry = PolicyRegistry::builtin();
    let spec = config.policy.parse()?;
    let policy = match registry.build(&spec, &PolicyContext::default()) {
        Err(Error::MissingSolution(_)) => {
            let n_max = (config.start.total_jobs() as usize).max(1);
            let solved = Arc::new(solve(&config.params, n_max)?);
            registry.build(&spec, &PolicyContext::with_solution(solved))?
        }
        other => other?,
    };
    run_with_policy(&config.params, policy.as_ref(), config.start, config.episodes, config.seed)
}

pub fn estimate(config: &SimConfig) -> Result<SimEstimate> {
    run(config).map(|r| r.estimate)
}

pub fn episodes_csv(run: &SimRun) -> String {
    let mut s = String::from("episode,cost,events\n");
    for (e, ep) in run.episodes.iter().enumerate() {
        writeln!(s, "{e},{},{}", fmt_sig(ep.cost), ep.events).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::evaluate_policy;
    use crate::policy::{AlwaysStation1, BlockingAware};

    fn params() -> ModelParams {
        ModelParams::new(3.0, 4.0, 6.0, 0.3, 1.0, 0.5).unwrap()
    }

    fn config(policy: &str, start: SystemState, episodes: usize, seed: u64) -> SimConfig {
        SimConfig { params: params(), policy: policy.into(), start, episodes, seed }
    }

    #[test]
    fn terminal_start_costs_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ep = simulate_episode(&params(), &AlwaysStation1, crate::model::TERMINAL, &mut rng).unwrap();
        assert_eq!(ep, Episode { cost: 0.0, events: 0 });
    }

    #[test]
    fn single_station1_job_is_one_exponential() {
        let p = params();
        let x = SystemState::new(0, 0, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ep = simulate_episode(&p, &AlwaysStation1, x, &mut rng).unwrap();
        let mut replay = ChaCha8Rng::seed_from_u64(9);
        let u: f64 = replay.random();
        assert_eq!(ep.cost, p.h1 * (-(1.0 - u).ln() / p.mu1));
        assert_eq!(ep.events, 1);
        let est = estimate(&config("always1", x, 40_000, 3)).unwrap();
        assert!(est.z_score(p.h1 / p.mu1).abs() < 4.0);
    }

    #[test]
    fn event_count_is_jobs_plus_phase1_work() {
        let start = SystemState::new(6, 1, 0, 1);
        let run = run(&config("blocking", start, 200, 5)).unwrap();
        for ep in &run.episodes {
            assert_eq!(ep.events, start.total_jobs() + start.i + start.j);
            assert!(ep.cost > 0.0);
        }
    }

    #[test]
    fn deterministic_and_order_independent() {
        let c = config("optimal", SystemState::new(5, 2, 0, 0), 500, 42);
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.estimate, b.estimate);
        // serial replay of a single episode matches the parallel batch
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        rng.set_stream(17);
        let solved = Arc::new(solve(&params(), 7).unwrap());
        let opt = crate::policy::OptimalPolicy::new(solved);
        let ep = simulate_episode(&params(), &opt, c.start, &mut rng).unwrap();
        assert_eq!(ep, a.episodes[17]);
    }

    #[test]
    fn agrees_with_exact_value() {
        let start = SystemState::new(10, 2, 0, 0);
        let exact = evaluate_policy(&params(), &BlockingAware, 12).unwrap().try_value(start).unwrap();
        let est = estimate(&config("blocking", start, 20_000, 11)).unwrap();
        assert!(est.z_score(exact).abs() < 4.0, "{est:?} vs {exact}");
        assert!((est.se - est.sd / (20_000f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(run(&config("always1", SystemState::new(1, 1, 0, 0), 10, 0)), Err(Error::NotInStateSpace(_))));
        assert!(matches!(run(&config("always1", SystemState::new(1, 2, 0, 0), 0, 0)), Err(Error::NoEpisodes)));
        assert!(run(&config("bogus", SystemState::new(1, 2, 0, 0), 10, 0)).is_err());
    }
}
