//! Model primitives: rates and holding costs, the state tuple, routing
//! actions, and the one-step dynamics of the clearing system.
//!
//! A state `(i, j, k, l)` counts jobs waiting for Phase I (`i`), jobs in
//! Phase I service (`j`), jobs in parallel Phase II service at Station 1
//! (`k`) and jobs at the single-server Station 2 including a blocked pair
//! (`l`). Two servers exist, so `j + k + l` is 2 whenever `i > 0`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Service rates and holding-cost rates of the three stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
}

impl ModelParams {
    pub fn new(mu0: f64, mu1: f64, mu2: f64, h0: f64, h1: f64, h2: f64) -> Result<Self> {
        let p = ModelParams { mu0, mu1, mu2, h0, h1, h2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("mu0", self.mu0),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("h0", self.h0),
            ("h1", self.h1),
            ("h2", self.h2),
        ]
    }

    /// Mean Phase I service time.
    pub fn m0(&self) -> f64 {
        1.0 / self.mu0
    }

    pub fn m1(&self) -> f64 {
        1.0 / self.mu1
    }

    pub fn m2(&self) -> f64 {
        1.0 / self.mu2
    }

    /// `h1/mu1 >= h2/mu2`, compared as `h1*mu2 >= h2*mu1`.
    pub fn assumption2_holds(&self) -> bool {
        self.h1 * self.mu2 >= self.h2 * self.mu1
    }

    /// Expected cost of serving one lone job at Station 1.
    pub fn cost_to_serve1(&self) -> f64 {
        self.h1 / self.mu1
    }

    pub fn cost_to_serve2(&self) -> f64 {
        self.h2 / self.mu2
    }

    pub fn min_cost_to_serve(&self) -> f64 {
        self.cost_to_serve1().min(self.cost_to_serve2())
    }

    /// Multiply every holding cost by `c`.
    pub fn scale_costs(&self, c: f64) -> Self {
        ModelParams { h0: self.h0 * c, h1: self.h1 * c, h2: self.h2 * c, ..*self }
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mu0={} mu1={} mu2={} h0={} h1={} h2={}",
            self.mu0, self.mu1, self.mu2, self.h0, self.h1, self.h2
        )
    }
}

/// Phase II destination chosen by a server after a Phase I completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Station1,
    Station2,
}

impl Action {
    pub fn code(self) -> u8 {
        match self {
            Action::Station1 => 1,
            Action::Station2 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Action::Station1),
            2 => Some(Action::Station2),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub l: u32,
}

pub const TERMINAL: SystemState = SystemState { i: 0, j: 0, k: 0, l: 0 };

impl SystemState {
    pub const fn new(i: u32, j: u32, k: u32, l: u32) -> Self {
        SystemState { i, j, k, l }
    }

    /// Jobs downstream of the Phase I queue; equals the number of busy
    /// servers.
    pub fn busy(&self) -> u32 {
        self.j + self.k + self.l
    }

    pub fn total_jobs(&self) -> u32 {
        self.i + self.busy()
    }

    pub fn is_terminal(&self) -> bool {
        *self == TERMINAL
    }

    pub fn in_space(&self) -> bool {
        if self.j > 2 || self.k > 2 || self.l > 2 {
            return false;
        }
        match self.busy() {
            0 | 1 => self.i == 0,
            2 => true,
            _ => false,
        }
    }

    pub fn is_decision_state(&self) -> bool {
        (self.i == 0 && self.j == 1 && self.k == 0 && self.l == 0) || self.is_hat_decision_state()
    }

    /// Decision states with both servers busy.
    pub fn is_hat_decision_state(&self) -> bool {
        matches!((self.j, self.k, self.l), (2, 0, 0) | (1, 1, 0) | (1, 0, 1))
    }

    /// State reached when the finishing Phase I job is routed by `action`.
    /// Requires `j >= 1`.
    pub fn routed(&self, action: Action) -> SystemState {
        debug_assert!(self.j >= 1);
        match action {
            Action::Station1 => SystemState::new(self.i, self.j - 1, self.k + 1, self.l),
            Action::Station2 => SystemState::new(self.i, self.j - 1, self.k, self.l + 1),
        }
    }

    pub fn with_queue(&self, i: u32) -> SystemState {
        SystemState { i, ..*self }
    }

    /// Holding cost accrued per unit time.
    pub fn cost_rate(&self, p: &ModelParams) -> f64 {
        f64::from(self.i + self.j) * p.h0 + f64::from(self.k) * p.h1 + f64::from(self.l) * p.h2
    }

    /// Total active service rate `j*mu0 + k*mu1 + min(l,1)*mu2`.
    pub fn total_rate(&self, p: &ModelParams) -> Result<f64> {
        if self.is_terminal() {
            return Err(Error::NoActiveServers(*self));
        }
        Ok(f64::from(self.j) * p.mu0 + f64::from(self.k) * p.mu1 + f64::from(self.l.min(1)) * p.mu2)
    }

    /// Competing exponential clocks out of this state and where each leads.
    pub fn dynamics(&self) -> Dynamics {
        let SystemState { i, j, k, l } = *self;
        // A Phase II completion frees a server, which picks up the next
        // queued job if there is one and idles otherwise.
        let after_downstream = |x: SystemState| {
            if i > 0 {
                SystemState::new(x.i - 1, x.j + 1, x.k, x.l)
            } else {
                x
            }
        };
        Dynamics {
            phase1: (j > 0).then(|| Routing {
                servers: j,
                station1: self.routed(Action::Station1),
                station2: self.routed(Action::Station2),
            }),
            station1: (k > 0).then(|| (k, after_downstream(SystemState::new(i, j, k - 1, l)))),
            station2: (l > 0).then(|| after_downstream(SystemState::new(i, j, k, l - 1))),
        }
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.i, self.j, self.k, self.l)
    }
}

impl FromStr for SystemState {
    type Err = String;

    /// Accepts `i,j,k,l`, optionally wrapped in parentheses.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(format!("expected four comma-separated counts, got '{s}'"));
        }
        let mut v = [0u32; 4];
        for (slot, part) in v.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|e| format!("bad count '{part}': {e}"))?;
        }
        Ok(SystemState::new(v[0], v[1], v[2], v[3]))
    }
}

/// Phase I completion: `servers` busy Phase I servers race, and the winner
/// routes its job to one of two successor states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Routing {
    pub servers: u32,
    pub station1: SystemState,
    pub station2: SystemState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dynamics {
    pub phase1: Option<Routing>,
    /// `(busy Station 1 servers, successor)`.
    pub station1: Option<(u32, SystemState)>,
    /// Successor of a Station 2 completion; Station 2 serves one at a time.
    pub station2: Option<SystemState>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(2.0, 10.0, 4.0, 0.1, 1.0, 0.2).unwrap()
    }

    #[test]
    fn total_rate_examples() {
        let p = params();
        assert_eq!(SystemState::new(0, 0, 1, 0).total_rate(&p).unwrap(), 10.0);
        assert_eq!(SystemState::new(5, 1, 0, 1).total_rate(&p).unwrap(), 6.0);
        assert_eq!(SystemState::new(0, 0, 0, 2).total_rate(&p).unwrap(), 4.0);
        assert_eq!(TERMINAL.total_rate(&p), Err(Error::NoActiveServers(TERMINAL)));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, f64::NAN, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::INFINITY, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn membership() {
        assert!(TERMINAL.in_space());
        assert!(SystemState::new(0, 1, 0, 0).in_space());
        assert!(SystemState::new(7, 0, 0, 2).in_space());
        assert!(!SystemState::new(1, 1, 0, 0).in_space());
        assert!(!SystemState::new(0, 3, 0, 0).in_space());
        assert!(!SystemState::new(0, 1, 1, 1).in_space());
    }

    #[test]
    fn decision_sets() {
        assert!(SystemState::new(0, 1, 0, 0).is_decision_state());
        assert!(!SystemState::new(0, 1, 0, 0).is_hat_decision_state());
        for i in 0..3 {
            for (j, k, l) in [(2, 0, 0), (1, 1, 0), (1, 0, 1)] {
                assert!(SystemState::new(i, j, k, l).is_hat_decision_state());
            }
            for (j, k, l) in [(0, 2, 0), (0, 1, 1), (0, 0, 2)] {
                assert!(!SystemState::new(i, j, k, l).is_decision_state());
            }
        }
    }

    #[test]
    fn dynamics_with_queue() {
        let d = SystemState::new(3, 0, 1, 1).dynamics();
        assert!(d.phase1.is_none());
        assert_eq!(d.station1, Some((1, SystemState::new(2, 1, 0, 1))));
        assert_eq!(d.station2, Some(SystemState::new(2, 1, 1, 0)));

        let blocked = SystemState::new(2, 0, 0, 2).dynamics();
        assert_eq!(blocked.station2, Some(SystemState::new(1, 1, 0, 1)));

        let empty_queue = SystemState::new(0, 1, 0, 1).dynamics();
        assert_eq!(empty_queue.station2, Some(SystemState::new(0, 1, 0, 0)));
        let r = empty_queue.phase1.unwrap();
        assert_eq!(r.station1, SystemState::new(0, 0, 1, 1));
        assert_eq!(r.station2, SystemState::new(0, 0, 0, 2));
    }

    #[test]
    fn parse_state() {
        assert_eq!("20,2,0,0".parse::<SystemState>().unwrap(), SystemState::new(20, 2, 0, 0));
        assert_eq!("(1, 1, 0, 1)".parse::<SystemState>().unwrap(), SystemState::new(1, 1, 0, 1));
        assert!("1,2,3".parse::<SystemState>().is_err());
    }
}
