//! Closed-form quantities of the balancing-time analysis, plus the two
//! deterministic counting facts it relies on.

use crate::balance::{nearest_int, TokenConfig};
use crate::error::{Error, Result};

/// Parameter-asymmetry factor `max{p / (1-q), (1-q) / p}`, at least 1.
pub fn r_factor(p: f64, q: f64) -> f64 {
    let stay = 1.0 - q;
    (p / stay).max(stay / p)
}

/// `c*(θ) = (1 - e^{-θ/3})^2 / (2 + 1/θ)`, increasing from 0 to 1/2.
pub fn c_star(theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    if theta.is_infinite() {
        return Ok(0.5);
    }
    let a = -(-theta / 3.0).exp_m1();
    Ok(a * a / (2.0 + 1.0 / theta))
}

/// Default `θ`: the largest value not above 1 that the edge-Markov
/// parameters admit, `min(1, n max{p, 1-q})`.
pub fn default_theta(n: usize, p: f64, q: f64) -> f64 {
    (n as f64 * p.max(1.0 - q)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub delta: u64,
    pub eps: f64,
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    pub fairness: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        // the closing inequality (1 - eps^2)^2 >= 1 - eps still holds at eps = 1/4
        if !(self.eps > 0.0 && self.eps <= 0.25) {
            return bad(format!("eps must lie in (0, 1/4], got {}", self.eps));
        }
        crate::graph::EdgeMarkovParams::new(self.p, self.q)?;
        if !(self.theta > 0.0) || self.theta > self.n as f64 * self.p.max(1.0 - self.q) * (1.0 + 1e-12) {
            return bad(format!(
                "theta = {} must be positive and at most n max{{p, 1-q}} = {}",
                self.theta,
                self.n as f64 * self.p.max(1.0 - self.q)
            ));
        }
        if !(self.fairness > 0.0 && self.fairness <= 1.0) {
            return bad(format!("fairness constant must lie in (0, 1], got {}", self.fairness));
        }
        if self.delta < 2 {
            return bad(format!("the bound needs discrepancy >= 2, got {}", self.delta));
        }
        Ok(())
    }
}

/// Step counts sufficient for balance with probability at least `1 - eps`.
///
/// With `L = r ln(Δn/ε) / (c* F)`: the first phase needs `36 L` steps, the
/// second `54 L`, and rounding both up costs at most 2, so `90 L + 2` steps
/// suffice in total.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BalanceBound {
    /// `r ln(Δn/ε) / (c* F)`.
    pub unit: f64,
    /// `36 L`.
    pub phase_one: f64,
    /// `54 L`.
    pub phase_two: f64,
    /// `90 L + 2`.
    pub total: f64,
    /// `ceil(36 L)`.
    pub phase_one_steps: u64,
    /// `ceil(54 L)`.
    pub phase_two_steps: u64,
    /// `ceil(90 L) + 2`.
    pub steps: u64,
}

pub fn theorem_bound(inputs: &BoundInputs) -> Result<BalanceBound> {
    inputs.validate()?;
    let r = r_factor(inputs.p, inputs.q);
    let c = c_star(inputs.theta)?;
    let log = (inputs.delta as f64 * inputs.n as f64 / inputs.eps).ln();
    let unit = r * log / (c * inputs.fairness);
    let phase_one = 36.0 * unit;
    let phase_two = 54.0 * unit;
    Ok(BalanceBound {
        unit,
        phase_one,
        phase_two,
        total: phase_one + phase_two + 2.0,
        phase_one_steps: phase_one.ceil() as u64,
        phase_two_steps: phase_two.ceil() as u64,
        steps: (90.0 * unit).ceil() as u64 + 2,
    })
}

/// Outcome of [`low_side_count_ok`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowSideCount {
    Holds,
    Fails,
    /// The minimum load is below `mu - 1`, so the claim says nothing.
    HypothesisNotMet,
}

/// Whether at least `n/3` vertices carry at most the rounded mean, given
/// that no load is below `mu - 1`.
pub fn low_side_count_ok(config: &TokenConfig) -> LowSideCount {
    let n = config.n() as i128;
    let k = config.total() as i128;
    if n * (config.min_load() as i128) < k - n {
        return LowSideCount::HypothesisNotMet;
    }
    let r = nearest_int(k, n);
    let low = config.loads().iter().filter(|&&l| l as i128 <= r).count() as i128;
    if 3 * low >= n {
        LowSideCount::Holds
    } else {
        LowSideCount::Fails
    }
}

/// `φ1 ∨ φ2` for one vertex, where `φ1 = [mu - 1 <= load <= ⌈mu⌋ + 1]` and
/// `φ2` is the same window for the complementary load `K - load` around
/// `mū = K (n-1) / n`.
pub fn near_balanced(load: u64, total: u64, n: usize) -> bool {
    let (l, k, n) = (load as i128, total as i128, n as i128);
    let phi1 = n * (l + 1) >= k && l <= nearest_int(k, n) + 1;
    let c = k - l;
    let phi2 = n * (c + 1) >= k * (n - 1) && c <= nearest_int(k * (n - 1), n) + 1;
    phi1 || phi2
}
