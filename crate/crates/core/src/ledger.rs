//! Token-level instrumentation of the averaging step.
//!
//! Every one of the `K` tokens carries a place and a height in its vertex's
//! pile; in addition each vertex `v` holds `K - Γ(v)` complementary tokens
//! with *inverted* heights. When a matched pair `{v, u}` with `Γ(v) >= Γ(u)`
//! is averaged, tokens above height `Γ(u)` on `v` are dealt alternately
//! between `v` and `u`: the token at offset `d = H - Γ(u)` lands at height
//! `Γ(u) + ceil(d/2)`, on `v` for odd `d` in case I and even `d` in case II.
//! Complementary tokens above inverted height `K - Γ(v)` on `u` are dealt the
//! mirrored way. Heights therefore never increase, and a token starting at
//! offset `d` ends at offset `ceil(d/2)`.
//!
//! The ledger keeps `O(K n)` state and is meant for verification runs.

use std::io::Write;

use crate::balance::{ceil_div, orient, RoundingCase, TokenConfig};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::matching::Matching;

pub type TokenId = u32;

/// Place and (inverted) height of every token and complementary token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenLedger {
    total: u64,
    loads: Vec<u64>,
    /// `piles[v][h - 1]` is the token at height `h` on `v`.
    piles: Vec<Vec<TokenId>>,
    /// `comp_piles[v][h - 1]` is the complementary token at inverted height `h` on `v`.
    comp_piles: Vec<Vec<TokenId>>,
    place: Vec<u32>,
    height: Vec<u32>,
    comp_place: Vec<u32>,
    comp_height: Vec<u32>,
}

impl TokenLedger {
    /// Stacks tokens in label order: vertex 0 first, bottom to top.
    pub fn new(config: &TokenConfig) -> Self {
        let n = config.n();
        let k = config.total();
        let mut ledger = TokenLedger {
            total: k,
            loads: config.loads().to_vec(),
            piles: Vec::with_capacity(n),
            comp_piles: Vec::with_capacity(n),
            place: Vec::with_capacity(k as usize),
            height: Vec::with_capacity(k as usize),
            comp_place: Vec::new(),
            comp_height: Vec::new(),
        };
        for v in 0..n {
            let pile: Vec<TokenId> = (0..config.load(v)).map(|h| {
                ledger.place.push(v as u32);
                ledger.height.push(h as u32 + 1);
                (ledger.place.len() - 1) as TokenId
            }).collect();
            ledger.piles.push(pile);
            let comp: Vec<TokenId> = (0..k - config.load(v)).map(|h| {
                ledger.comp_place.push(v as u32);
                ledger.comp_height.push(h as u32 + 1);
                (ledger.comp_place.len() - 1) as TokenId
            }).collect();
            ledger.comp_piles.push(comp);
        }
        ledger
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn token_count(&self) -> usize {
        self.place.len()
    }

    pub fn complementary_count(&self) -> usize {
        self.comp_place.len()
    }

    /// `(place, height)` of token `a`.
    pub fn token(&self, a: TokenId) -> (Vertex, u64) {
        (self.place[a as usize] as Vertex, self.height[a as usize] as u64)
    }

    /// `(place, inverted height)` of complementary token `b`.
    pub fn complementary(&self, b: TokenId) -> (Vertex, u64) {
        (self.comp_place[b as usize] as Vertex, self.comp_height[b as usize] as u64)
    }

    /// Height of complementary token `b` measured from the bottom: `K + 1 - inverted height`.
    pub fn complementary_height(&self, b: TokenId) -> u64 {
        self.total + 1 - self.comp_height[b as usize] as u64
    }

    pub fn heights(&self) -> &[u32] {
        &self.height
    }

    pub fn inverted_heights(&self) -> &[u32] {
        &self.comp_height
    }

    /// Per-vertex token counts implied by the piles.
    pub fn loads(&self) -> &[u64] {
        &self.loads
    }

    /// Moves tokens for one averaging step. `before` is the configuration
    /// the matching was applied to and `choices` the rounding cases it used.
    pub fn advance(&mut self, before: &TokenConfig, m: &Matching, choices: &[RoundingCase]) -> Result<()> {
        if before.loads() != self.loads.as_slice() {
            return Err(Error::LedgerMismatch("configuration differs from the ledger's loads".into()));
        }
        if m.len() != choices.len() {
            return Err(Error::LedgerMismatch(format!(
                "{} rounding cases for {} matched edges",
                choices.len(),
                m.len()
            )));
        }
        for (&(a, b), &case) in m.edges().iter().zip(choices) {
            let (v, u) = orient(&self.loads, a, b);
            self.deal_tokens(v, u, case);
            self.deal_complementary(v, u, case);
            let s = self.loads[v] + self.loads[u];
            let (hv, hu) = match case {
                RoundingCase::I => (s.div_ceil(2), s / 2),
                RoundingCase::II => (s / 2, s.div_ceil(2)),
            };
            self.loads[v] = hv;
            self.loads[u] = hu;
        }
        Ok(())
    }

    fn deal_tokens(&mut self, v: Vertex, u: Vertex, case: RoundingCase) {
        let gu = self.loads[u] as usize;
        let moving = self.piles[v].split_off(gu);
        for (i, tok) in moving.into_iter().enumerate() {
            let d = i + 1;
            let stays = (d % 2 == 1) == (case == RoundingCase::I);
            let dest = if stays { v } else { u };
            self.piles[dest].push(tok);
            self.place[tok as usize] = dest as u32;
            self.height[tok as usize] = self.piles[dest].len() as u32;
        }
    }

    fn deal_complementary(&mut self, v: Vertex, u: Vertex, case: RoundingCase) {
        let cv = (self.total - self.loads[v]) as usize;
        let moving = self.comp_piles[u].split_off(cv);
        for (i, tok) in moving.into_iter().enumerate() {
            let d = i + 1;
            let to_v = (d % 2 == 0) == (case == RoundingCase::I);
            let dest = if to_v { v } else { u };
            self.comp_piles[dest].push(tok);
            self.comp_place[tok as usize] = dest as u32;
            self.comp_height[tok as usize] = self.comp_piles[dest].len() as u32;
        }
    }

    /// Checks the ledger against `config` by rebuilding every pile from the
    /// per-token places and heights.
    pub fn check(&self, config: &TokenConfig) -> Result<(), String> {
        let n = config.n();
        let k = self.total;
        if config.total() != k {
            return Err(format!("token total {} but configuration holds {}", k, config.total()));
        }
        if config.loads() != self.loads.as_slice() {
            return Err("ledger loads differ from configuration".into());
        }
        let mut seen: Vec<Vec<bool>> = (0..n).map(|v| vec![false; config.load(v) as usize]).collect();
        for a in 0..self.place.len() {
            let (v, h) = self.token(a as TokenId);
            let slot = seen[v].get_mut((h as usize).wrapping_sub(1));
            match slot {
                Some(s) if !*s => *s = true,
                _ => return Err(format!("token {a} at ({v}, {h}) is out of range or doubled")),
            }
        }
        if let Some(v) = seen.iter().position(|s| s.iter().any(|x| !x)) {
            return Err(format!("heights on vertex {v} are not 1..={}", config.load(v)));
        }
        let mut seen: Vec<Vec<bool>> = (0..n).map(|v| vec![false; (k - config.load(v)) as usize]).collect();
        for b in 0..self.comp_place.len() {
            let (v, hbar) = self.complementary(b as TokenId);
            let h = self.complementary_height(b as TokenId);
            if h != k + 1 - hbar || h < config.load(v) + 1 || h > k {
                return Err(format!("complementary token {b} on {v} has height {h} outside {}..={k}", config.load(v) + 1));
            }
            let slot = seen[v].get_mut((hbar as usize).wrapping_sub(1));
            match slot {
                Some(s) if !*s => *s = true,
                _ => return Err(format!("complementary token {b} at ({v}, {hbar}) is out of range or doubled")),
            }
        }
        if let Some(v) = seen.iter().position(|s| s.iter().any(|x| !x)) {
            return Err(format!("inverted heights on vertex {v} are not 1..={}", k - config.load(v)));
        }
        Ok(())
    }

    /// Appends one `step,token,place,height` CSV line per token.
    pub fn write_trace<W: Write + ?Sized>(&self, step: u64, out: &mut W) -> std::io::Result<()> {
        for (a, (&p, &h)) in self.place.iter().zip(&self.height).enumerate() {
            writeln!(out, "{step},{a},{p},{h}")?;
        }
        Ok(())
    }
}

/// Checks monotonicity and the halving identity for the step that turned
/// `prev` into `next` under `m` applied to `before`. Returns one message per
/// violated property.
pub fn audit_step(prev: &TokenLedger, next: &TokenLedger, before: &TokenConfig, m: &Matching) -> Vec<String> {
    let mut violations = Vec::new();
    for a in 0..prev.token_count() {
        let (h0, h1) = (prev.height[a], next.height[a]);
        if h1 > h0 {
            violations.push(format!("token {a}: height rose from {h0} to {h1}"));
        }
    }
    for b in 0..prev.complementary_count() {
        let (h0, h1) = (prev.comp_height[b], next.comp_height[b]);
        if h1 > h0 {
            violations.push(format!("complementary token {b}: inverted height rose from {h0} to {h1}"));
        }
    }
    let k = before.total();
    for &(a, b) in m.edges() {
        let (v, u) = orient(before.loads(), a, b);
        let gu = before.load(u) as i128;
        for &tok in &prev.piles[v][(gu.max(1) - 1) as usize..] {
            let (h0, h1) = (prev.height[tok as usize] as i128, next.height[tok as usize] as i128);
            if h1 - gu != ceil_div(h0 - gu, 2) {
                violations.push(format!("token {tok}: {h0} -> {h1} breaks halving above {gu}"));
            }
        }
        let cv = (k - before.load(v)) as i128;
        for &tok in &prev.comp_piles[u][(cv.max(1) - 1) as usize..] {
            let (h0, h1) = (prev.comp_height[tok as usize] as i128, next.comp_height[tok as usize] as i128);
            if h1 - cv != ceil_div(h0 - cv, 2) {
                violations.push(format!("complementary token {tok}: {h0} -> {h1} breaks halving above {cv}"));
            }
        }
    }
    violations
}

/// A real number on the half-integer grid, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct HalfInteger(pub i64);

impl HalfInteger {
    pub fn from_int(x: i64) -> Self {
        HalfInteger(2 * x)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// `h_next - x <= ceil((h - x) / 2)` evaluated exactly.
pub fn verify_halved_bound(h: u64, x: HalfInteger, gamma_partner: u64, h_next: u64) -> bool {
    debug_assert!(2 * h as i64 >= x.0 && 2 * gamma_partner as i64 <= x.0);
    let lhs = 2 * h_next as i128 - x.0 as i128;
    let bound = ceil_div(2 * h as i128 - x.0 as i128, 4);
    lhs <= 2 * bound
}
