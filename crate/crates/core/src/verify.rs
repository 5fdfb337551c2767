//! Exhaustive checks of the deterministic lemmas over small domains.

use crate::balance::{RoundingCase, TokenConfig};
use crate::ledger::{verify_halved_bound, HalfInteger, TokenLedger};
use crate::matching::Matching;
use crate::theory::{low_side_count_ok, near_balanced, LowSideCount};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub name: &'static str,
    pub cases: u64,
    pub failures: Vec<String>,
}

impl OracleReport {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures.is_empty()
    }

    fn fail(&mut self, msg: String) {
        // keep reports readable when something is badly wrong
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }
}

/// Nearest integer to `k / n` with halves rounded down, found by scanning.
fn rounded_mean_by_scan(k: i64, n: i64) -> i64 {
    // minimise |n z - k|, preferring the smaller z on ties
    let mut best = 0i64;
    for z in 0..=k {
        if (n * z - k).abs() < (n * best - k).abs() {
            best = z;
        }
    }
    best
}

/// Token half of the height-halving lemma. A token at height `h` on a
/// vertex with load `top >= h` is averaged with a partner of load
/// `gamma <= x <= h`; both rounding cases and both index orders are run
/// through [`TokenLedger::advance`] and the resulting height is checked.
pub fn lemma_halving_tokens(max_height: u64, max_x: u64) -> OracleReport {
    let mut report = OracleReport::new("height halving (tokens)");
    for x2 in 0..=(2 * max_x) as i64 {
        let x = HalfInteger(x2);
        let h_min = ((x2 + 1) / 2).max(1) as u64;
        for h in h_min..=max_height {
            for gamma in 0..=(x2 / 2) as u64 {
                for top in [h, h + 1] {
                    for token_first in [true, false] {
                        for case in [RoundingCase::I, RoundingCase::II] {
                            let (pv, pu) = if token_first { (0, 1) } else { (1, 0) };
                            let mut loads = vec![0u64; 2];
                            loads[pv] = top;
                            loads[pu] = gamma;
                            let config = TokenConfig::new(loads).expect("two vertices");
                            let mut ledger = TokenLedger::new(&config);
                            let tok = (0..ledger.token_count() as u32)
                                .find(|&a| ledger.token(a) == (pv, h))
                                .expect("token at height h");
                            let m = Matching::from_edges([(0, 1)]);
                            ledger.advance(&config, &m, &[case]).expect("consistent ledger");
                            let h_next = ledger.token(tok).1;
                            report.cases += 1;
                            if !verify_halved_bound(h, x, gamma, h_next) {
                                report.fail(format!(
                                    "h={h} x={} partner={gamma} top={top} {case:?}: next height {h_next}",
                                    x.value()
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    report
}

/// Complementary half: a complementary token at inverted height `h` on a
/// vertex holding `top >= h` complementary tokens, partner holding
/// `gamma <= x` of them. A third, empty vertex makes the totals consistent.
pub fn lemma_halving_complementary(max_height: u64, max_x: u64) -> OracleReport {
    let mut report = OracleReport::new("height halving (complementary tokens)");
    for x2 in 0..=(2 * max_x) as i64 {
        let x = HalfInteger(x2);
        let h_min = ((x2 + 1) / 2).max(1) as u64;
        for h in h_min..=max_height {
            for gamma in 0..=(x2 / 2) as u64 {
                for top in [h, h + 1] {
                    for token_first in [true, false] {
                        for case in [RoundingCase::I, RoundingCase::II] {
                            let (pv, pu) = if token_first { (0, 1) } else { (1, 0) };
                            // K = top + gamma, so the loads are (gamma, top) and w is empty
                            let mut loads = vec![0u64; 3];
                            loads[pv] = gamma;
                            loads[pu] = top;
                            let config = TokenConfig::new(loads).expect("three vertices");
                            let mut ledger = TokenLedger::new(&config);
                            let tok = (0..ledger.complementary_count() as u32)
                                .find(|&b| ledger.complementary(b) == (pv, h))
                                .expect("complementary token at inverted height h");
                            let m = Matching::from_edges([(0, 1)]);
                            ledger.advance(&config, &m, &[case]).expect("consistent ledger");
                            let h_next = ledger.complementary(tok).1;
                            report.cases += 1;
                            if !verify_halved_bound(h, x, gamma, h_next) {
                                report.fail(format!(
                                    "inverted h={h} x={} partner={gamma} top={top} {case:?}: next {h_next}",
                                    x.value()
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    report
}

/// Calls `f` on every load vector of length `n` summing to `k`.
fn for_each_composition(n: usize, k: u64, f: &mut impl FnMut(&[u64])) {
    fn rec(buf: &mut Vec<u64>, n: usize, left: u64, f: &mut impl FnMut(&[u64])) {
        if buf.len() + 1 == n {
            buf.push(left);
            f(buf);
            buf.pop();
            return;
        }
        for x in 0..=left {
            buf.push(x);
            rec(buf, n, left - x, f);
            buf.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), n, k, f);
}

/// At least a third of the vertices sit at or below the rounded mean
/// whenever no load is below `mu - 1`; every configuration with
/// `n <= max_n`, `K <= max_k` is enumerated.
pub fn lemma_low_side(max_n: usize, max_k: u64) -> OracleReport {
    let mut report = OracleReport::new("low-side count >= n/3");
    for n in 1..=max_n {
        for k in 0..=max_k {
            let r = rounded_mean_by_scan(k as i64, n as i64);
            for_each_composition(n, k, &mut |loads| {
                let config = TokenConfig::new(loads.to_vec()).expect("n >= 1");
                let hypothesis = loads.iter().all(|&l| (n as i64) * (l as i64 + 1) >= k as i64);
                let low = loads.iter().filter(|&&l| (l as i64) <= r).count();
                let outcome = low_side_count_ok(&config);
                report.cases += 1;
                let expected = match (hypothesis, 3 * low >= n) {
                    (false, _) => LowSideCount::HypothesisNotMet,
                    (true, true) => LowSideCount::Holds,
                    (true, false) => LowSideCount::Fails,
                };
                if outcome != expected || outcome == LowSideCount::Fails {
                    report.fail(format!("{loads:?}: got {outcome:?}, direct count says {expected:?}"));
                }
            });
        }
    }
    report
}

/// `φ1 ∨ φ2` forces the load into `{⌈mu⌋ - 1, ⌈mu⌋, ⌈mu⌋ + 1}`.
pub fn lemma_window_logic(max_n: usize, max_k: u64) -> OracleReport {
    let mut report = OracleReport::new("phi1 or phi2 implies balanced window");
    for n in 1..=max_n {
        for k in 0..=max_k {
            let r = rounded_mean_by_scan(k as i64, n as i64);
            for load in 0..=k {
                report.cases += 1;
                let l = load as i64;
                if near_balanced(load, k, n) && !(r - 1..=r + 1).contains(&l) {
                    report.fail(format!("n={n} K={k} load={load}: window holds but load is outside {}..={}", r - 1, r + 1));
                }
            }
        }
    }
    report
}

/// Every exhaustive oracle at its standard domain.
pub fn all_lemma_oracles() -> Vec<OracleReport> {
    vec![
        lemma_halving_tokens(50, 25),
        lemma_halving_complementary(50, 25),
        lemma_low_side(6, 18),
        lemma_window_logic(6, 24),
    ]
}
