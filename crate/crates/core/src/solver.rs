//! Exact solution of the optimality equations.
//!
//! The recursion is acyclic under the rank order of [`crate::space`], so a
//! single forward sweep over the dense state table yields the value
//! function with no fixed-point iteration. The same sweep, with the minimum
//! replaced by a fixed routing rule, evaluates any stationary policy.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Action, ModelParams, SystemState};
use crate::space::{self, check_budget, index_of, state_at, state_count};

pub const DEFAULT_TIE_TOL: f64 = 1e-9;
pub const DEFAULT_TIE_BREAK: Action = Action::Station2;

/// Largest budget accepted by the exact rational solver.
pub const EXACT_MAX_JOBS: usize = 30;

/// Numeric field the sweep runs over.
pub trait Scalar:
    Clone
    + PartialOrd
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_param(x: f64) -> Self;
    fn from_count(n: u32) -> Self;
}

impl Scalar for f64 {
    fn from_param(x: f64) -> Self {
        x
    }
    fn from_count(n: u32) -> Self {
        f64::from(n)
    }
}

impl Scalar for BigRational {
    /// Exact binary value of the float.
    fn from_param(x: f64) -> Self {
        BigRational::from_f64(x).expect("validated parameters are finite")
    }
    fn from_count(n: u32) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}

struct Rates<T> {
    mu: [T; 3],
    h: [T; 3],
}

impl<T: Scalar> Rates<T> {
    fn new(p: &ModelParams) -> Self {
        Rates {
            mu: [T::from_param(p.mu0), T::from_param(p.mu1), T::from_param(p.mu2)],
            h: [T::from_param(p.h0), T::from_param(p.h1), T::from_param(p.h2)],
        }
    }
}

// Successors always rank earlier, so their slot is already filled.
fn lookup<T>(values: &[T], s: SystemState, n_max: usize) -> &T {
    &values[index_of(s, n_max).expect("successor within budget")]
}

/// Forward sweep over all states with at most `n_max` jobs.
///
/// `route(x, v_station1, v_station2)` supplies the continuation value after
/// a Phase I completion in `x`; the minimum of the two gives the optimal
/// value function, a fixed choice gives a policy's cost.
pub(crate) fn sweep<T, F>(params: &ModelParams, n_max: usize, mut route: F) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(SystemState, &T, &T) -> Result<T>,
{
    params.validate()?;
    check_budget(n_max)?;
    let r = Rates::<T>::new(params);
    let count = state_count(n_max);
    let mut values: Vec<T> = Vec::with_capacity(count);
    values.push(T::zero());
    for idx in 1..count {
        let x = state_at(idx);
        let at = |s: SystemState| lookup(&values, s, n_max);
        let d = x.dynamics();
        let queue_and_phase1 = T::from_count(x.i + x.j);
        let mut numer = queue_and_phase1 * r.h[0].clone()
            + T::from_count(x.k) * r.h[1].clone()
            + T::from_count(x.l) * r.h[2].clone();
        let mut rate = T::zero();
        if let Some((servers, next)) = d.station1 {
            let w = T::from_count(servers) * r.mu[1].clone();
            numer = numer + w.clone() * at(next).clone();
            rate = rate + w;
        }
        if let Some(next) = d.station2 {
            numer = numer + r.mu[2].clone() * at(next).clone();
            rate = rate + r.mu[2].clone();
        }
        if let Some(routing) = d.phase1 {
            let w = T::from_count(routing.servers) * r.mu[0].clone();
            let cont = route(x, at(routing.station1), at(routing.station2))?;
            numer = numer + w.clone() * cont;
            rate = rate + w;
        }
        values.push(numer / rate);
    }
    Ok(values)
}

/// Routing outcome recorded at a decision state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: Action,
    /// `v(route to Station 1) - v(route to Station 2)`.
    pub diff: f64,
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tie_tol: f64,
    pub tie_break: Action,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tie_tol: DEFAULT_TIE_TOL, tie_break: DEFAULT_TIE_BREAK }
    }
}

/// Optimal value function and routing table up to a job budget. Immutable
/// once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    params: ModelParams,
    n_max: usize,
    options: SolveOptions,
    values: Vec<f64>,
    decisions: Vec<Option<Decision>>,
}

fn is_tie(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol * (1.0 + a.abs().max(b.abs()))
}

pub fn solve(params: &ModelParams, n_max: usize) -> Result<SolveResult> {
    solve_with(params, n_max, SolveOptions::default())
}

pub fn solve_with(params: &ModelParams, n_max: usize, options: SolveOptions) -> Result<SolveResult> {
    if !(options.tie_tol.is_finite() && options.tie_tol >= 0.0) {
        return Err(Error::InvalidTieTolerance(options.tie_tol));
    }
    let mut decisions = vec![None; state_count(n_max.clamp(1, space::MAX_JOBS))];
    let values = sweep::<f64, _>(params, n_max, |x, &v1, &v2| {
        let tie = is_tie(v1, v2, options.tie_tol);
        let action = if tie {
            options.tie_break
        } else if v1 < v2 {
            Action::Station1
        } else {
            Action::Station2
        };
        let idx = index_of(x, n_max).expect("decision state within budget");
        decisions[idx] = Some(Decision { action, diff: v1 - v2, tie });
        Ok(v1.min(v2))
    })?;
    Ok(SolveResult { params: *params, n_max, options, values, decisions })
}

impl SolveResult {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn options(&self) -> SolveOptions {
        self.options
    }

    /// Values in rank order, aligned with [`space::enumerate_states`].
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

    /// Shorthand for tests and checkers that know `x` is in range.
    pub fn v(&self, i: u32, j: u32, k: u32, l: u32) -> f64 {
        let x = SystemState::new(i, j, k, l);
        self.value(x).unwrap_or_else(|| panic!("{x} outside solved range n_max={}", self.n_max))
    }

    pub fn decision(&self, x: SystemState) -> Option<Decision> {
        index_of(x, self.n_max).and_then(|idx| self.decisions[idx])
    }

    pub fn action(&self, x: SystemState) -> Option<Action> {
        self.decision(x).map(|d| d.action)
    }

    pub fn tie_flag(&self, x: SystemState) -> Option<bool> {
        self.decision(x).map(|d| d.tie)
    }

    /// Decision states within budget, in rank order.
    pub fn decisions(&self) -> impl Iterator<Item = (SystemState, Decision)> + '_ {
        self.decisions.iter().enumerate().filter_map(|(idx, d)| d.map(|d| (state_at(idx), d)))
    }

    /// `v(i,j-1,k+1,l) - v(i,j-1,k,l+1)` for a decision state with both
    /// servers busy. Negative favours Station 1.
    pub fn decision_diff(&self, x: SystemState) -> Result<f64> {
        if !x.in_space() || !x.is_hat_decision_state() {
            return Err(Error::NotDecisionState(x));
        }
        self.routing_diff(x)
    }

    /// Same difference for any state with a Phase I job in service,
    /// including the single-job state `(0,1,0,0)`.
    pub fn routing_diff(&self, x: SystemState) -> Result<f64> {
        if !x.in_space() || x.j == 0 {
            return Err(Error::NotDecisionState(x));
        }
        let a = self.try_value(x.routed(Action::Station1))?;
        let b = self.try_value(x.routed(Action::Station2))?;
        Ok(a - b)
    }

    /// Copy with one stored value shifted by `delta`; decisions are left as
    /// solved. Used for fault injection.
    pub fn perturbed(&self, x: SystemState, delta: f64) -> Result<SolveResult> {
        let idx = index_of(x, self.n_max).ok_or(Error::OutOfRange { state: x, n_max: self.n_max })?;
        let mut out = self.clone();
        out.values[idx] += delta;
        Ok(out)
    }

    /// Largest relative gap between a stored value and the right-hand side
    /// of the optimality equation evaluated on the stored table.
    pub fn check_residuals(&self) -> f64 {
        self.worst_residual().0
    }

    /// Largest relative residual together with the state attaining it.
    pub fn worst_residual(&self) -> (f64, Option<SystemState>) {
        if self.values[0] != 0.0 {
            return (f64::INFINITY, Some(state_at(0)));
        }
        let p = &self.params;
        let mut worst = 0.0f64;
        let mut at = None;
        for (idx, &stored) in self.values.iter().enumerate().skip(1) {
            let x = state_at(idx);
            let d = x.dynamics();
            let mut numer = x.cost_rate(p);
            let mut rate = 0.0;
            if let Some((servers, next)) = d.station1 {
                let w = f64::from(servers) * p.mu1;
                numer += w * self.values[index_of(next, self.n_max).unwrap()];
                rate += w;
            }
            if let Some(next) = d.station2 {
                numer += p.mu2 * self.values[index_of(next, self.n_max).unwrap()];
                rate += p.mu2;
            }
            if let Some(r) = d.phase1 {
                let w = f64::from(r.servers) * p.mu0;
                let a = self.values[index_of(r.station1, self.n_max).unwrap()];
                let b = self.values[index_of(r.station2, self.n_max).unwrap()];
                numer += w * a.min(b);
                rate += w;
            }
            let rhs = numer / rate;
            let scale = stored.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
            let gap = (stored - rhs).abs() / scale;
            if gap > worst {
                worst = gap;
                at = Some(x);
            }
        }
        (worst, at)
    }
}

/// Exact rational value function, used to arbitrate near-ties.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    n_max: usize,
    values: Vec<BigRational>,
}

pub fn solve_exact(params: &ModelParams, n_max: usize) -> Result<ExactSolution> {
    if n_max > EXACT_MAX_JOBS || n_max == 0 {
        return Err(Error::InvalidBudget { got: n_max, max: EXACT_MAX_JOBS });
    }
    let values = sweep::<BigRational, _>(params, n_max, |_, a, b| {
        Ok(if a <= b { a.clone() } else { b.clone() })
    })?;
    Ok(ExactSolution { n_max, values })
}

impl ExactSolution {
    pub fn value(&self, x: SystemState) -> Option<&BigRational> {
        index_of(x, self.n_max).map(|idx| &self.values[idx])
    }

    pub fn value_f64(&self, x: SystemState) -> Option<f64> {
        use num_traits::ToPrimitive;
        self.value(x).and_then(|v| v.to_f64())
    }

    /// Exact sign of `v(route to Station 1) - v(route to Station 2)`.
    pub fn routing_order(&self, x: SystemState) -> Option<Ordering> {
        if x.j == 0 {
            return None;
        }
        let a = self.value(x.routed(Action::Station1))?;
        let b = self.value(x.routed(Action::Station2))?;
        let diff = a - b;
        Some(if diff.is_zero() {
            Ordering::Equal
        } else if diff.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        })
    }
}
