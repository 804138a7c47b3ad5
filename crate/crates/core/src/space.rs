//! Enumeration and dense indexing of the state space truncated at a job
//! budget.
//!
//! States are ranked by total jobs `N = i+j+k+l`, then by `i+j`, then
//! lexicographically. Every transition either removes a job (Phase II
//! completion) or moves one job out of Phase I (`i+j` drops by one), so each
//! successor ranks strictly before its source and one forward sweep in rank
//! order evaluates the recursion exactly.

use crate::error::{Error, Result};
use crate::model::{SystemState, TERMINAL};

/// Upper bound on the job budget.
pub const MAX_JOBS: usize = 100_000;

/// Downstream configurations `(j, k, l)` with one busy server, in rank order.
pub const ONE_BUSY: [(u32, u32, u32); 3] = [(0, 0, 1), (0, 1, 0), (1, 0, 0)];

/// Downstream configurations with both servers busy, in rank order.
pub const TWO_BUSY: [(u32, u32, u32); 6] =
    [(0, 0, 2), (0, 1, 1), (0, 2, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0)];

/// Both-busy configurations in which a Phase I completion can occur.
pub const DECISION_CONFIGS: [(u32, u32, u32); 3] = [(2, 0, 0), (1, 1, 0), (1, 0, 1)];

pub fn check_budget(n_max: usize) -> Result<()> {
    if (1..=MAX_JOBS).contains(&n_max) {
        Ok(())
    } else {
        Err(Error::InvalidBudget { got: n_max, max: MAX_JOBS })
    }
}

/// Number of states with at most `n_max` jobs (`n_max >= 1`).
pub fn state_count(n_max: usize) -> usize {
    4 + 6 * (n_max - 1)
}

/// Position of `x` in rank order, if it is in the space and within budget.
pub fn index_of(x: SystemState, n_max: usize) -> Option<usize> {
    if !x.in_space() || x.total_jobs() as usize > n_max {
        return None;
    }
    let triple = (x.j, x.k, x.l);
    match x.busy() {
        0 => Some(0),
        1 => ONE_BUSY.iter().position(|t| *t == triple).map(|p| 1 + p),
        _ => TWO_BUSY.iter().position(|t| *t == triple).map(|p| 4 + 6 * x.i as usize + p),
    }
}

/// Inverse of [`index_of`].
pub fn state_at(index: usize) -> SystemState {
    match index {
        0 => TERMINAL,
        1..=3 => {
            let (j, k, l) = ONE_BUSY[index - 1];
            SystemState::new(0, j, k, l)
        }
        _ => {
            let offset = index - 4;
            let (j, k, l) = TWO_BUSY[offset % 6];
            SystemState::new((offset / 6) as u32, j, k, l)
        }
    }
}

/// Sort key realising the rank order.
pub fn rank_key(x: &SystemState) -> (u32, u32, SystemState) {
    (x.total_jobs(), x.i + x.j, *x)
}

/// All states with at most `n_max` jobs, in rank order.
pub fn enumerate_states(n_max: usize) -> Result<Vec<SystemState>> {
    check_budget(n_max)?;
    Ok((0..state_count(n_max)).map(state_at).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force filter over a box of candidate tuples.
    fn brute_force(n_max: u32) -> Vec<SystemState> {
        let mut out = Vec::new();
        for i in 0..=n_max {
            for j in 0..=3 {
                for k in 0..=3 {
                    for l in 0..=3 {
                        let x = SystemState::new(i, j, k, l);
                        if x.in_space() && x.total_jobs() <= n_max {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out.sort_by_key(rank_key);
        out
    }

    #[test]
    fn matches_brute_force() {
        for n in 1..=9 {
            assert_eq!(enumerate_states(n as usize).unwrap(), brute_force(n));
        }
    }

    #[test]
    fn one_job_budget() {
        let states = enumerate_states(1).unwrap();
        assert_eq!(states.len(), 4);
        for s in ["0,0,0,0", "0,1,0,0", "0,0,1,0", "0,0,0,1"] {
            assert!(states.contains(&s.parse().unwrap()));
        }
        assert!(states.iter().all(|x| x.i == 0));
    }

    #[test]
    fn two_job_budget() {
        let states = enumerate_states(2).unwrap();
        assert!(states.contains(&SystemState::new(0, 0, 0, 2)));
        assert!(states.contains(&SystemState::new(0, 2, 0, 0)));
        assert!(!states.contains(&SystemState::new(1, 1, 0, 0)));
    }

    #[test]
    fn six_states_per_level() {
        let states = enumerate_states(12).unwrap();
        for n in 2..=12 {
            let level: Vec<_> = states.iter().filter(|x| x.total_jobs() == n).collect();
            assert_eq!(level.len(), 6);
            assert!(level.iter().all(|x| x.i == n - 2));
        }
    }

    #[test]
    fn successors_rank_earlier() {
        let states = enumerate_states(10).unwrap();
        for (idx, x) in states.iter().enumerate() {
            let d = x.dynamics();
            let mut succ = Vec::new();
            if let Some(r) = d.phase1 {
                succ.push(r.station1);
                succ.push(r.station2);
            }
            if let Some((_, s)) = d.station1 {
                succ.push(s);
            }
            if let Some(s) = d.station2 {
                succ.push(s);
            }
            for s in succ {
                let sidx = index_of(s, 10).expect("successor in space");
                assert!(sidx < idx, "{s} should precede {x}");
            }
        }
    }

    #[test]
    fn index_round_trip() {
        for idx in 0..state_count(50) {
            assert_eq!(index_of(state_at(idx), 50), Some(idx));
        }
        assert_eq!(index_of(SystemState::new(49, 2, 0, 0), 50), None);
        assert_eq!(index_of(SystemState::new(1, 1, 0, 0), 50), None);
    }

    #[test]
    fn budget_bounds() {
        assert!(enumerate_states(0).is_err());
        assert!(check_budget(MAX_JOBS + 1).is_err());
    }
}
