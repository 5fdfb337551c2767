use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matching::MatcherKind;

use super::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format `{s}` (csv, json)"))),
        }
    }
}

/// One line of the per-trial CSV. `t_bal` is empty for censored trials.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CsvRow {
    pub trial: u64,
    pub seed: u64,
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub matcher: MatcherKind,
    pub delta0: u64,
    pub t_bal: Option<u64>,
    pub censored: bool,
    pub wall_ms: u64,
}

const HEADER: [&str; 10] = ["trial", "seed", "n", "p", "q", "matcher", "delta0", "t_bal", "censored", "wall_ms"];

fn rows(summary: &Summary) -> impl Iterator<Item = CsvRow> + '_ {
    let c = &summary.config;
    summary.trials.iter().map(move |t| CsvRow {
        trial: t.trial,
        seed: t.seed,
        n: c.n,
        p: c.p,
        q: c.q,
        matcher: c.matcher,
        delta0: t.delta0,
        t_bal: t.t_bal,
        censored: t.censored,
        wall_ms: t.wall_ms,
    })
}

/// Writes the header followed by every trial of every summary.
pub fn write_csv<W: Write>(summaries: &[Summary], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for s in summaries {
        for row in rows(s) {
            w.serialize(row)?;
        }
    }
    w.flush().map_err(|e| Error::io("csv output", e))?;
    Ok(())
}

/// A single summary as a JSON object, several as an array.
pub fn write_json<W: Write>(summaries: &[Summary], out: W) -> Result<()> {
    match summaries {
        [one] => serde_json::to_writer_pretty(out, one)?,
        many => serde_json::to_writer_pretty(out, many)?,
    }
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn emit(summaries: &[Summary], format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(summaries, &mut out)?,
        OutputFormat::Json => {
            write_json(summaries, &mut out)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::InitialLoad;
    use crate::graph::EdgeMarkovParams;
    use crate::harness::{run_experiment, summarize, ExperimentConfig};

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(
            8,
            EdgeMarkovParams::new(0.5, 0.5).unwrap(),
            MatcherKind::Lr,
            InitialLoad::PointMass(40),
        );
        c.trials = 3;
        c
    }

    #[test]
    fn empty_summary_is_header_only() {
        let s = summarize(&cfg(), Vec::new());
        let mut buf = Vec::new();
        write_csv(&[s], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trial,seed,n,p,q,matcher,delta0,t_bal,censored,wall_ms\n");
    }

    #[test]
    fn single_trial_two_lines() {
        let mut c = cfg();
        c.trials = 1;
        let s = run_experiment(&c).unwrap();
        let mut buf = Vec::new();
        write_csv(&[s], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let mut c = cfg();
        c.cap = Some(2);
        c.init_load = InitialLoad::PointMass(1 << 16);
        let censored = run_experiment(&c).unwrap();
        let s = run_experiment(&cfg()).unwrap();
        let summaries = [s, censored];
        let mut buf = Vec::new();
        write_csv(&summaries, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        let expected: Vec<CsvRow> = summaries.iter().flat_map(rows).collect();
        assert_eq!(back, expected);
        assert!(back[3].censored && back[3].t_bal.is_none());
    }

    #[test]
    fn json_mirrors_schema() {
        let s = run_experiment(&cfg()).unwrap();
        let mut buf = Vec::new();
        write_json(&[s.clone()], &mut buf).unwrap();
        let back: Summary = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unwritable_path_errors() {
        let s = run_experiment(&cfg()).unwrap();
        let err = emit(&[s], OutputFormat::Csv, Path::new("/nonexistent-dir/out.csv"));
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
