//! Token configurations and the random-rounding averaging step.
//!
//! All comparisons against the mean `mu = K / n` are done in exact integer
//! arithmetic.

use std::path::Path;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::matching::Matching;

/// `ceil(x - 1/2)` for `x = num / den`, `den > 0`, i.e. the nearest integer
/// with halves rounded down.
pub fn nearest_int(num: i128, den: i128) -> i128 {
    assert!(den > 0, "nearest_int needs a positive denominator");
    ceil_div(2 * num - den, 2 * den)
}

pub(crate) fn ceil_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    let q = a.div_euclid(b);
    if a.rem_euclid(b) == 0 {
        q
    } else {
        q + 1
    }
}

/// Which side of a matched pair receives the larger half.
///
/// The pair is oriented so that `heavy` is the endpoint with the larger load
/// (the lower index on ties). Case I hands `ceil(s/2)` to `heavy`, case II
/// hands it `floor(s/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundingCase {
    I,
    II,
}

/// One rounding case per edge of the applied matching, in matching order.
pub type RoundingChoices = Vec<RoundingCase>;

/// Orientation of a matched pair: `(heavy, light)`.
pub fn orient(loads: &[u64], a: Vertex, b: Vertex) -> (Vertex, Vertex) {
    let (lo, hi) = (a.min(b), a.max(b));
    if loads[hi] > loads[lo] {
        (hi, lo)
    } else {
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct TokenConfig {
    loads: Vec<u64>,
    total: u64,
}

impl TokenConfig {
    pub fn new(loads: Vec<u64>) -> Result<Self> {
        if loads.is_empty() {
            return Err(Error::EmptyVertexSet);
        }
        let total = loads.iter().sum();
        Ok(Self { loads, total })
    }

    pub fn loads(&self) -> &[u64] {
        &self.loads
    }

    pub fn load(&self, v: Vertex) -> u64 {
        self.loads[v]
    }

    pub fn n(&self) -> usize {
        self.loads.len()
    }

    /// Total token count `K`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn min_load(&self) -> u64 {
        *self.loads.iter().min().expect("non-empty")
    }

    pub fn max_load(&self) -> u64 {
        *self.loads.iter().max().expect("non-empty")
    }

    pub fn discrepancy(&self) -> u64 {
        self.max_load() - self.min_load()
    }

    /// Mean load `K / n` as a float, for reporting only.
    pub fn mean(&self) -> f64 {
        self.total as f64 / self.n() as f64
    }

    /// `ceil(mu)` rounded per [`nearest_int`].
    pub fn rounded_mean(&self) -> i128 {
        nearest_int(self.total as i128, self.n() as i128)
    }

    /// Every load lies in `{r - 1, r, r + 1}` where `r` is the rounded mean.
    pub fn is_balanced(&self) -> bool {
        let r = self.rounded_mean();
        let (lo, hi) = (self.min_load() as i128, self.max_load() as i128);
        lo >= r - 1 && hi <= r + 1
    }

    /// Averages every matched pair, drawing one fair coin per edge in
    /// matching order.
    pub fn apply_matching<R: RngCore + ?Sized>(&self, m: &Matching, rng: &mut R) -> (TokenConfig, RoundingChoices) {
        let mut next = self.clone();
        let choices = next.apply_in_place(m, rng);
        (next, choices)
    }

    pub fn apply_in_place<R: RngCore + ?Sized>(&mut self, m: &Matching, rng: &mut R) -> RoundingChoices {
        let choices: RoundingChoices = m
            .edges()
            .iter()
            .map(|_| if rng.next_u32() & 1 == 0 { RoundingCase::I } else { RoundingCase::II })
            .collect();
        self.apply_choices(m, &choices);
        choices
    }

    /// Averages every matched pair with predetermined rounding cases.
    pub fn apply_choices(&mut self, m: &Matching, choices: &[RoundingCase]) {
        assert_eq!(m.len(), choices.len(), "one rounding case per matched edge");
        for (&(a, b), &case) in m.edges().iter().zip(choices) {
            let (heavy, light) = orient(&self.loads, a, b);
            let s = self.loads[heavy] + self.loads[light];
            let (up, down) = (s.div_ceil(2), s / 2);
            let (h, l) = match case {
                RoundingCase::I => (up, down),
                RoundingCase::II => (down, up),
            };
            self.loads[heavy] = h;
            self.loads[light] = l;
        }
    }
}

/// Initial load specifications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialLoad {
    /// All `K` tokens on vertex 0.
    PointMass(u64),
    /// `count_high` vertices (starting at 0) hold `high`, the rest `low`.
    TwoLevel { low: u64, high: u64, count_high: usize },
    /// `K` tokens, each placed on an independent uniform vertex.
    UniformRandom(u64),
    Explicit(Vec<u64>),
}

impl InitialLoad {
    pub fn build<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Result<TokenConfig> {
        if n == 0 {
            return Err(Error::EmptyVertexSet);
        }
        let loads = match self {
            InitialLoad::PointMass(k) => {
                let mut l = vec![0; n];
                l[0] = *k;
                l
            }
            &InitialLoad::TwoLevel { low, high, count_high } => {
                if count_high > n {
                    return Err(Error::InvalidArgument(format!(
                        "two-level load asks for {count_high} high vertices but n = {n}"
                    )));
                }
                (0..n).map(|v| if v < count_high { high } else { low }).collect()
            }
            InitialLoad::UniformRandom(k) => {
                let mut l = vec![0; n];
                for _ in 0..*k {
                    l[crate::rng::below(rng, n)] += 1;
                }
                l
            }
            InitialLoad::Explicit(loads) => {
                if loads.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "load file lists {} vertices but n = {n}",
                        loads.len()
                    )));
                }
                loads.clone()
            }
        };
        TokenConfig::new(loads)
    }

    /// Parses `point:K`, `two-level:LO,HI,COUNT`, `uniform:K` or `file:PATH`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad initial load `{s}`"));
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "point" => Ok(InitialLoad::PointMass(arg.trim().parse().map_err(|_| bad())?)),
            "uniform" => Ok(InitialLoad::UniformRandom(arg.trim().parse().map_err(|_| bad())?)),
            "two-level" => {
                let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                Ok(InitialLoad::TwoLevel {
                    low: parts[0].parse().map_err(|_| bad())?,
                    high: parts[1].parse().map_err(|_| bad())?,
                    count_high: parts[2].parse().map_err(|_| bad())?,
                })
            }
            "file" => Ok(InitialLoad::Explicit(read_loads(arg)?)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for InitialLoad {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialLoad::PointMass(k) => write!(f, "point:{k}"),
            InitialLoad::TwoLevel { low, high, count_high } => write!(f, "two-level:{low},{high},{count_high}"),
            InitialLoad::UniformRandom(k) => write!(f, "uniform:{k}"),
            InitialLoad::Explicit(l) => write!(f, "explicit({} vertices)", l.len()),
        }
    }
}

/// One integer load per line in vertex order; blank lines and `#` comments ignored.
pub fn parse_loads(text: &str, origin: &str) -> Result<Vec<u64>> {
    let mut loads = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let value: i64 = line.parse().map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: i + 1,
            msg: format!("bad load `{line}`: {e}"),
        })?;
        if value < 0 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("negative load {value}"),
            });
        }
        loads.push(value as u64);
    }
    Ok(loads)
}

pub fn read_loads(path: impl AsRef<Path>) -> Result<Vec<u64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_loads(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn cfg(l: &[u64]) -> TokenConfig {
        TokenConfig::new(l.to_vec()).unwrap()
    }

    #[test]
    fn nearest_int_examples() {
        assert_eq!(nearest_int(5, 2), 2);
        assert_eq!(nearest_int(26, 10), 3);
        assert_eq!(nearest_int(3, 1), 3);
        assert_eq!(nearest_int(-5, 2), -3);
        assert_eq!(nearest_int(-1, 4), 0);
    }

    #[test]
    fn nearest_int_matches_scaled_brute_force() {
        // x = k / (2n); ceil(x - 1/2) is the least integer z with 2n*z >= k - n
        for n in 1..=6i128 {
            // the answer is nondecreasing in k, so the scan resumes where it stopped
            let mut z = -10_000;
            for k in -10_000..=10_000i128 {
                while 2 * n * z < k - n {
                    z += 1;
                }
                assert_eq!(nearest_int(k, 2 * n), z, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn initial_configs() {
        let mut rng = stream(0, 0);
        let c = InitialLoad::PointMass(64).build(8, &mut rng).unwrap();
        assert_eq!(c.loads(), &[64, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(c.discrepancy(), 64);

        let c = InitialLoad::TwoLevel { low: 1, high: 6, count_high: 1 }.build(3, &mut rng).unwrap();
        assert_eq!(c.loads(), &[6, 1, 1]);
        assert_eq!((c.total(), c.discrepancy()), (8, 5));

        let c = InitialLoad::UniformRandom(0).build(5, &mut rng).unwrap();
        assert_eq!(c.loads(), &[0; 5]);
        let c = InitialLoad::UniformRandom(100).build(5, &mut rng).unwrap();
        assert_eq!(c.total(), 100);
    }

    #[test]
    fn load_file_parsing() {
        assert_eq!(parse_loads("3\n# c\n\n4\n", "t").unwrap(), vec![3, 4]);
        assert!(matches!(parse_loads("3\n-1\n", "t"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_loads("x\n", "t").is_err());
    }

    #[test]
    fn load_spec_parsing() {
        assert_eq!(InitialLoad::parse("point:64").unwrap(), InitialLoad::PointMass(64));
        assert_eq!(
            InitialLoad::parse("two-level:1,6,1").unwrap(),
            InitialLoad::TwoLevel { low: 1, high: 6, count_high: 1 }
        );
        assert!(InitialLoad::parse("two-level:1,6").is_err());
        assert!(InitialLoad::parse("spread:5").is_err());
    }

    #[test]
    fn discrepancy_examples() {
        assert_eq!(cfg(&[6, 1, 1]).discrepancy(), 5);
        assert_eq!(cfg(&[3, 3, 3]).discrepancy(), 0);
        assert_eq!(cfg(&[0, 64]).discrepancy(), 64);
    }

    #[test]
    fn balanced_examples() {
        assert!(cfg(&[1, 2, 3]).is_balanced());
        assert!(!cfg(&[0, 4]).is_balanced());
        assert!(cfg(&[2, 3]).is_balanced());
        assert_eq!(cfg(&[2, 3]).rounded_mean(), 2);
    }

    #[test]
    fn averaging_step() {
        let m = Matching::from_edges([(0, 1)]);
        let mut c = cfg(&[6, 1]);
        c.apply_choices(&m, &[RoundingCase::I]);
        assert_eq!(c.loads(), &[4, 3]);
        let mut c = cfg(&[6, 1]);
        c.apply_choices(&m, &[RoundingCase::II]);
        assert_eq!(c.loads(), &[3, 4]);

        let mut rng = stream(1, 0);
        let mut seen = [false; 2];
        for _ in 0..64 {
            let (next, choices) = cfg(&[6, 1]).apply_matching(&m, &mut rng);
            assert_eq!(choices.len(), 1);
            let expect: &[u64] = if choices[0] == RoundingCase::I { &[4, 3] } else { &[3, 4] };
            assert_eq!(next.loads(), expect);
            seen[(choices[0] == RoundingCase::II) as usize] = true;
        }
        assert_eq!(seen, [true, true]);

        let (next, _) = cfg(&[5, 5]).apply_matching(&m, &mut rng);
        assert_eq!(next.loads(), &[5, 5]);
        let (next, choices) = cfg(&[9, 0, 2]).apply_matching(&Matching::empty(), &mut rng);
        assert_eq!(next.loads(), &[9, 0, 2]);
        assert!(choices.is_empty());
    }

    #[test]
    fn orientation_prefers_lower_index_on_ties() {
        assert_eq!(orient(&[2, 2], 1, 0), (0, 1));
        assert_eq!(orient(&[1, 2], 0, 1), (1, 0));
    }
}
