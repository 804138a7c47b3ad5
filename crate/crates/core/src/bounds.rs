//! Numerical verification of the value-difference inequalities on a solved
//! table.
//!
//! Each inequality is stored as a margin oriented so that `margin >= 0`
//! means it holds. "For all i" quantifiers are truncated to the states the
//! table covers, and the range actually checked is reported.

use std::fmt::{self, Write as _};

use crate::evaluation::fmt_sig;
use crate::model::{ModelParams, SystemState};
use crate::solver::SolveResult;
use crate::space::{DECISION_CONFIGS, ONE_BUSY, TWO_BUSY};

/// A margin at or above `-CHECK_TOL` passes.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Hypothesis of the inequality not met by the parameters.
    Skipped,
    /// Hypothesis met but the table is too small to contain any instance.
    Empty,
}

impl CheckStatus {
    pub fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped (hypothesis)",
            CheckStatus::Empty => "empty range",
        }
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck {
    pub id: &'static str,
    pub hypothesis: &'static str,
    /// Queue lengths covered, inclusive.
    pub range: Option<(u32, u32)>,
    pub worst_margin: f64,
    pub witness: Option<SystemState>,
    pub evaluated: usize,
    pub status: CheckStatus,
}

impl InequalityCheck {
    pub fn passed(&self) -> bool {
        matches!(self.status, CheckStatus::Pass)
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, CheckStatus::Fail)
    }

    pub fn range_label(&self) -> String {
        match self.range {
            Some((a, b)) if a == b => format!("i={a}"),
            Some((a, b)) => format!("i={a}..{b}"),
            None => "-".into(),
        }
    }
}

/// Accumulates the smallest margin over a family of instances.
#[derive(Debug)]
pub(crate) struct Scan {
    id: &'static str,
    hypothesis: &'static str,
    worst: f64,
    witness: Option<SystemState>,
    lo: u32,
    hi: u32,
    evaluated: usize,
}

impl Scan {
    pub(crate) fn new(id: &'static str, hypothesis: &'static str) -> Self {
        Scan { id, hypothesis, worst: f64::INFINITY, witness: None, lo: u32::MAX, hi: 0, evaluated: 0 }
    }

    pub(crate) fn add(&mut self, x: SystemState, margin: f64) {
        self.evaluated += 1;
        self.lo = self.lo.min(x.i);
        self.hi = self.hi.max(x.i);
        // A NaN margin sticks as the worst case and fails the check.
        let worse = !self.worst.is_nan() && (margin.is_nan() || margin < self.worst);
        if self.witness.is_none() || worse {
            self.worst = margin;
            self.witness = Some(x);
        }
    }

    pub(crate) fn finish(self) -> InequalityCheck {
        let status = if self.evaluated == 0 {
            CheckStatus::Empty
        } else if self.worst >= -CHECK_TOL {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        InequalityCheck {
            id: self.id,
            hypothesis: self.hypothesis,
            range: (self.evaluated > 0).then_some((self.lo, self.hi)),
            worst_margin: if self.evaluated == 0 { f64::NAN } else { self.worst },
            witness: self.witness,
            evaluated: self.evaluated,
            status,
        }
    }

    pub(crate) fn skip(self) -> InequalityCheck {
        InequalityCheck {
            id: self.id,
            hypothesis: self.hypothesis,
            range: None,
            worst_margin: f64::NAN,
            witness: None,
            evaluated: 0,
            status: CheckStatus::Skipped,
        }
    }
}

/// Ids emitted by [`verify_lemma1`], in order.
pub const LEMMA1_IDS: [&str; 10] = [
    "eq:empty-queue-bound1",
    "eq:empty-queue-bound2",
    "eq:mono_bdry",
    "eq:mono",
    "eq:onemore1",
    "eq:onemore2",
    "eq:decision_bd1",
    "eq:decision_bd1_inte",
    "eq:decision_bd2",
    "eq:decision_bd2_inte",
];

/// Ids emitted by [`verify_lemma2`], in order.
pub const LEMMA2_IDS: [&str; 2] = ["eq:equal_rate_bdry", "eq:equal_rates_inte"];

/// Largest queue length whose both-busy states fit in the table.
fn top(r: &SolveResult) -> Option<u32> {
    (r.n_max() >= 2).then(|| r.n_max() as u32 - 2)
}

fn min_serve(p: &ModelParams) -> f64 {
    p.min_cost_to_serve()
}

pub fn verify_lemma1(r: &SolveResult) -> Vec<InequalityCheck> {
    let p = *r.params();
    let v = |x: SystemState| r.value(x).expect("state within budget");
    let top = top(r);
    // States with i + 1 still in the table.
    let shifted_top = top.and_then(|t| t.checked_sub(1));
    let mut out = Vec::with_capacity(LEMMA1_IDS.len());

    let two_busy_ok = r.n_max() >= 2;
    let mut s = Scan::new(LEMMA1_IDS[0], "j+k+l = 1, i = 0");
    let mut s2 = Scan::new(LEMMA1_IDS[1], "j+k+l = 1, i = 0");
    let mut s3 = Scan::new(LEMMA1_IDS[2], "j+k+l = 1, i = 0");
    if two_busy_ok {
        for (j, k, l) in ONE_BUSY {
            let x = SystemState::new(0, j, k, l);
            s.add(x, v(SystemState::new(0, j, k + 1, l)) - v(x) - p.cost_to_serve1());
            s2.add(x, v(SystemState::new(0, j, k, l + 1)) - v(x) - p.cost_to_serve2());
            s3.add(x, v(SystemState::new(0, j + 1, k, l)) - v(x) - p.h0 / p.mu0 - min_serve(&p));
        }
    }
    out.extend([s.finish(), s2.finish(), s3.finish()]);

    let mut mono = Scan::new(LEMMA1_IDS[3], "j+k+l = 2, i >= 0");
    let mut one1 = Scan::new(LEMMA1_IDS[4], "j+k+l = 2, j >= 1, i >= 0");
    let mut one2 = Scan::new(LEMMA1_IDS[5], "j+k+l = 2, j >= 1, i >= 0");
    if let Some(t) = shifted_top {
        for i in 0..=t {
            for (j, k, l) in TWO_BUSY {
                let x = SystemState::new(i, j, k, l);
                mono.add(x, v(x.with_queue(i + 1)) - v(x) - p.h0 / p.mu0 - min_serve(&p));
                if j >= 1 {
                    one1.add(x, v(SystemState::new(i + 1, j - 1, k + 1, l)) - v(x) - min_serve(&p));
                    one2.add(x, v(SystemState::new(i + 1, j - 1, k, l + 1)) - v(x) - min_serve(&p));
                }
            }
        }
    }
    out.extend([mono.finish(), one1.finish(), one2.finish()]);

    let hat_states = || {
        top.into_iter()
            .flat_map(|t| (0..=t).flat_map(|i| DECISION_CONFIGS.iter().map(move |&(j, k, l)| SystemState::new(i, j, k, l))))
    };

    let bd1 = Scan::new(LEMMA1_IDS[6], "mu1 >= mu2, both-busy decision states");
    let bd1i = Scan::new(LEMMA1_IDS[7], "mu1 >= mu2, both-busy decision states");
    if p.mu1 >= p.mu2 {
        let (mut bd1, mut bd1i) = (bd1, bd1i);
        let cap = p.cost_to_serve1() - p.cost_to_serve2();
        for x in hat_states() {
            bd1.add(x, cap - r.routing_diff(x).expect("decision state"));
        }
        if let Some(t) = shifted_top {
            for i in 0..=t {
                for (j, k, l) in DECISION_CONFIGS {
                    let x = SystemState::new(i, j, k, l);
                    bd1i.add(x, v(SystemState::new(i + 1, j - 1, k, l + 1)) - v(x) - p.cost_to_serve2());
                }
            }
        }
        out.extend([bd1.finish(), bd1i.finish()]);
    } else {
        out.extend([bd1.skip(), bd1i.skip()]);
    }

    let bd2 = Scan::new(LEMMA1_IDS[8], "mu2 > mu1 and h1/mu1 >= h2/mu2, both-busy decision states");
    let bd2i = Scan::new(LEMMA1_IDS[9], "mu2 > mu1 and h1/mu1 >= h2/mu2, states (i,2,0,0)");
    if p.mu2 > p.mu1 && p.assumption2_holds() {
        let (mut bd2, mut bd2i) = (bd2, bd2i);
        for x in hat_states() {
            let l1 = f64::from(x.l + 1);
            let bound = p.h1 / p.mu1 - l1 * p.h2 / p.mu2
                + f64::from(x.i + x.j - 1) * p.h0 / 2.0 * (1.0 / p.mu1 - l1 / p.mu2);
            bd2.add(x, bound - r.routing_diff(x).expect("decision state"));
        }
        if let Some(t) = shifted_top {
            for i in 0..=t {
                let x = SystemState::new(i, 2, 0, 0);
                let bound = p.h1 / p.mu1 + f64::from(i + 2) * p.h0 / 2.0 * (1.0 / p.mu1 - 1.0 / p.mu0);
                bd2i.add(x, bound - (v(SystemState::new(i + 1, 0, 1, 1)) - v(x)));
            }
        }
        out.extend([bd2.finish(), bd2i.finish()]);
    } else {
        out.extend([bd2.skip(), bd2i.skip()]);
    }
    out
}

pub fn verify_lemma2(r: &SolveResult) -> Vec<InequalityCheck> {
    let p = *r.params();
    let v = |i, j, k, l| r.v(i, j, k, l);
    let bdry = Scan::new(LEMMA2_IDS[0], "mu1 = mu2");
    let inte = Scan::new(LEMMA2_IDS[1], "mu1 = mu2 and h1 >= h2, i >= 0");
    if p.mu1 != p.mu2 {
        return vec![bdry.skip(), inte.skip()];
    }
    let mut bdry = bdry;
    if r.n_max() >= 2 {
        bdry.add(SystemState::new(0, 1, 1, 0), v(0, 0, 1, 0) - v(0, 0, 0, 1) - v(0, 1, 1, 0) + v(0, 1, 0, 1));
    }
    let inte = if p.assumption2_holds() {
        let mut inte = inte;
        if let Some(t) = top(r) {
            for i in 0..=t {
                let lhs = v(i, 1, 1, 0) - v(i, 1, 0, 1) - v(i, 0, 1, 1) + v(i, 0, 0, 2)
                    - (2.0 * p.h2 + f64::from(i) * p.h0) / p.mu1;
                inte.add(SystemState::new(i, 1, 1, 0), -lhs);
            }
        }
        inte.finish()
    } else {
        inte.skip()
    };
    vec![bdry.finish(), inte]
}

/// Both lemmas in catalogue order.
pub fn verify_all(r: &SolveResult) -> Vec<InequalityCheck> {
    let mut out = verify_lemma1(r);
    out.extend(verify_lemma2(r));
    out
}

pub fn checks_csv(checks: &[InequalityCheck]) -> String {
    let mut s = String::from("check_id,status,worst_margin,witness_i,witness_j,witness_k,witness_l,range\n");
    for c in checks {
        let (wi, wj, wk, wl) = match c.witness {
            Some(x) => (x.i.to_string(), x.j.to_string(), x.k.to_string(), x.l.to_string()),
            None => Default::default(),
        };
        let margin = if c.worst_margin.is_nan() { String::new() } else { fmt_sig(c.worst_margin) };
        writeln!(s, "{},{},{},{},{},{},{},{}", c.id, c.status, margin, wi, wj, wk, wl, c.range_label()).unwrap();
    }
    s
}
