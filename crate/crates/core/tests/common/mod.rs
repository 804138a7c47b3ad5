//! Seeded parameter draws shared by the integration targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tandem_clearing::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateOrder {
    Mu1Faster,
    Equal,
    Mu2Faster,
}

impl RateOrder {
    pub const ALL: [RateOrder; 3] = [RateOrder::Mu1Faster, RateOrder::Equal, RateOrder::Mu2Faster];

    pub fn label(self) -> &'static str {
        match self {
            RateOrder::Mu1Faster => "mu1>mu2",
            RateOrder::Equal => "mu1=mu2",
            RateOrder::Mu2Faster => "mu1<mu2",
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rate(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.5..20.0)
}

fn cost(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.05..3.0)
}

/// Unconstrained positive parameters.
pub fn any_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams::new(rate(rng), rate(rng), rate(rng), cost(rng), cost(rng), cost(rng)).unwrap()
}

/// Rates in the requested order. With `cost_ordering`, `h1/mu1 >= h2/mu2`
/// is enforced by drawing `h1` above the break-even point.
pub fn draw(rng: &mut ChaCha8Rng, order: RateOrder, cost_ordering: bool) -> ModelParams {
    let mu0 = rate(rng);
    let (a, b) = loop {
        let (a, b) = (rate(rng), rate(rng));
        if a != b {
            break (a.max(b), a.min(b));
        }
    };
    let (mu1, mu2) = match order {
        RateOrder::Mu1Faster => (a, b),
        RateOrder::Equal => (a, a),
        RateOrder::Mu2Faster => (b, a),
    };
    let h0 = cost(rng);
    let h2 = cost(rng);
    let h1 = if cost_ordering {
        h2 * mu1 / mu2 * rng.random_range(1.0..3.0)
    } else {
        cost(rng)
    };
    ModelParams::new(mu0, mu1, mu2, h0, h1, h2).unwrap()
}
