use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use markov_balance::harness::{
    emit, fairness_report, mixing_report, run_experiment, run_sweep, run_trial_observed, summarize, write_csv,
    write_json, ExperimentConfig, OutputFormat, Summary, Sweep,
};
use markov_balance::verify::all_lemma_oracles;
use markov_balance::{EdgeMarkovParams, Error, InitialGraph, InitialLoad, MatcherKind, Result};

#[derive(Parser)]
#[command(name = "markov-balance", version, about = "Random-matching load balancing on edge-Markovian graphs")]
struct Cli {
    /// Worker threads for trial-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Simulate {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Write the ledger trace (step,token,place,height) of trial 0 here; implies --ledger.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the cross product of comma-separated --n, --delta, --matcher and --pq lists.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Point-mass discrepancies, e.g. 16,256,4096.
        #[arg(long)]
        delta: Option<String>,
        /// Parameter pairs p:q, e.g. 0.5:0.5,0.1:0.6.
        #[arg(long)]
        pq: Option<String>,
    },
    /// Estimate per-edge matching probabilities over the small-graph corpus.
    Fairness {
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated matcher kinds (default: all).
        #[arg(long)]
        matcher: Option<String>,
        /// CSV destination for the per-edge table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check edge density after the mixing time from empty and complete starts.
    Mixing {
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Parameter pairs p:q.
        #[arg(long, default_value = "0.5:0.5,0.1:0.1,0.8:0.1")]
        pq: String,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the exhaustive lemma oracles.
    Verify,
}

/// Experiment flags. Any of them may also come from `--config FILE`
/// (`key=value` lines using the flag names); flags given on the command
/// line win.
#[derive(Args, Default, Clone)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// simple, uniform-edge, lr or ds.
    #[arg(long)]
    matcher: Option<String>,
    /// empty, complete, stationary or file:PATH.
    #[arg(long = "init-graph")]
    init_graph: Option<String>,
    /// point:K, two-level:LO,HI,COUNT, uniform:K or file:PATH.
    #[arg(long = "init-load")]
    init_load: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Step cap per trial (default: ten times the balancing-time bound).
    #[arg(long)]
    cap: Option<String>,
    /// Co-advance the token ledger and check its invariants every step.
    #[arg(long)]
    ledger: bool,
    /// Failure probability used for the reported bound.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Record wall-clock milliseconds per trial (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

struct Resolved {
    values: BTreeMap<String, String>,
}

impl Resolved {
    fn new(args: &ExperimentArgs) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = &args.config {
            values = read_config_file(path)?;
        }
        let flags = [
            ("n", &args.n),
            ("p", &args.p),
            ("q", &args.q),
            ("matcher", &args.matcher),
            ("init-graph", &args.init_graph),
            ("init-load", &args.init_load),
            ("trials", &args.trials),
            ("seed", &args.seed),
            ("cap", &args.cap),
            ("eps", &args.eps),
            ("theta", &args.theta),
            ("format", &args.format),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                values.insert(key.to_string(), v.clone());
            }
        }
        if args.ledger {
            values.insert("ledger".into(), "true".into());
        }
        if args.timing {
            values.insert("timing".into(), "true".into());
        }
        if let Some(out) = &args.out {
            values.insert("out".into(), out.display().to_string());
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str, default: &str) -> String {
        self.values.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: &str) -> Result<T> {
        let raw = self.raw(key, default);
        raw.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad value `{raw}` for {key}")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>> {
        self.raw(key, default)
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad list item `{s}` for {key}"))))
            .collect()
    }

    fn flag(&self, key: &str) -> Result<bool> {
        self.get(key, "false")
    }

    fn experiment(&self, n: usize, matcher: MatcherKind) -> Result<ExperimentConfig> {
        let params = EdgeMarkovParams::new(self.get("p", "0.5")?, self.get("q", "0.5")?)?;
        let mut cfg = ExperimentConfig::new(n, params, matcher, InitialLoad::parse(&self.raw("init-load", "point:1024"))?);
        cfg.init_graph = InitialGraph::parse(&self.raw("init-graph", "stationary"), params)?;
        cfg.trials = self.get("trials", "10")?;
        cfg.seed = self.get("seed", "0")?;
        cfg.cap = self.values.get("cap").map(|c| c.trim().parse()).transpose().map_err(|_| bad("cap"))?;
        cfg.ledger = self.flag("ledger")?;
        cfg.timing = self.flag("timing")?;
        cfg.eps = self.get("eps", "0.25")?;
        cfg.theta = self.values.get("theta").map(|t| t.trim().parse()).transpose().map_err(|_| bad("theta"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn output(&self) -> Result<(Option<PathBuf>, OutputFormat)> {
        Ok((self.values.get("out").map(PathBuf::from), self.get("format", "csv")?))
    }
}

fn bad(key: &str) -> Error {
    Error::InvalidArgument(format!("bad value for {key}"))
}

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: "expected key=value".into(),
        })?;
        values.insert(k.trim().trim_start_matches("--").to_string(), v.trim().to_string());
    }
    Ok(values)
}

fn write_summaries(summaries: &[Summary], out: Option<&Path>, format: OutputFormat) -> Result<()> {
    match out {
        Some(path) => emit(summaries, format, path),
        None => {
            let stdout = io::stdout();
            let lock = stdout.lock();
            match format {
                OutputFormat::Csv => write_csv(summaries, lock),
                OutputFormat::Json => {
                    write_json(summaries, lock)?;
                    println!();
                    Ok(())
                }
            }
        }
    }
}

fn report(summary: &Summary) {
    let c = &summary.config;
    let s = &summary.stats;
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.1}"));
    eprintln!(
        "n={} p={} q={} matcher={} load={} trials={} censored={} median={} mean={} q10={} q90={} max={}",
        c.n,
        c.p,
        c.q,
        c.matcher,
        c.init_load,
        s.trials,
        s.censored,
        fmt(s.median),
        fmt(s.mean),
        fmt(s.q10),
        fmt(s.q90),
        s.max.map_or("-".into(), |m| m.to_string())
    );
    if let Some(b) = &summary.bound {
        eprintln!(
            "  bound (eps={}, theta={:.3}): 36L = {:.0} + 54L = {:.0} + 2 -> {} steps",
            c.eps, c.theta, b.phase_one, b.phase_two, b.steps
        );
    }
}

fn simulate(exp: &ExperimentArgs, trace: Option<&Path>) -> Result<()> {
    let r = Resolved::new(exp)?;
    let mut cfg = r.experiment(r.get("n", "64")?, r.get("matcher", "lr")?)?;
    let summary = match trace {
        Some(path) => {
            cfg.ledger = true;
            let file = File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
            let mut out = BufWriter::new(file);
            writeln!(out, "step,token,place,height").map_err(|e| Error::Io { path: path.into(), source: e })?;
            let first = run_trial_observed(&cfg, 0, |_| {}, Some(&mut out))?;
            out.flush().map_err(|e| Error::Io { path: path.into(), source: e })?;
            let mut rest = cfg.clone();
            rest.trials = cfg.trials;
            let mut all = run_experiment(&rest)?.trials;
            all[0] = first;
            summarize(&cfg, all)
        }
        None => run_experiment(&cfg)?,
    };
    report(&summary);
    let (out, format) = r.output()?;
    write_summaries(std::slice::from_ref(&summary), out.as_deref(), format)
}

fn sweep(exp: &ExperimentArgs, delta: Option<&str>, pq: Option<&str>) -> Result<()> {
    let r = Resolved::new(exp)?;
    let ns: Vec<usize> = r.list("n", "64")?;
    let matchers: Vec<MatcherKind> = r.list("matcher", "lr")?;
    let base = r.experiment(ns[0], matchers[0])?;
    let deltas = match delta {
        Some(d) => d.split(',').map(|s| s.trim().parse().map_err(|_| bad("delta"))).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let pqs = match pq {
        Some(list) => parse_pairs(list)?,
        None => Vec::new(),
    };
    let summaries = run_sweep(&Sweep { ns, deltas, matchers, pqs }, &base)?;
    summaries.iter().for_each(report);
    let (out, format) = r.output()?;
    write_summaries(&summaries, out.as_deref(), format)
}

fn parse_pairs(list: &str) -> Result<Vec<EdgeMarkovParams>> {
    list.split(',')
        .map(|item| {
            let (p, q) = item.split_once(':').ok_or_else(|| bad("pq"))?;
            EdgeMarkovParams::new(p.trim().parse().map_err(|_| bad("pq"))?, q.trim().parse().map_err(|_| bad("pq"))?)
        })
        .collect()
}

fn fairness(samples: u64, seed: u64, matcher: Option<&str>, out: Option<&Path>) -> Result<bool> {
    let kinds: Vec<MatcherKind> = match matcher {
        Some(list) => list.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?,
        None => MatcherKind::ALL.to_vec(),
    };
    let rows = fairness_report(&kinds, samples, seed);
    let mut all_ok = true;
    for kind in &kinds {
        let mine: Vec<_> = rows.iter().filter(|r| r.matcher == *kind).collect();
        let floor_fail = mine.iter().filter(|r| !r.floor_ok).count();
        let exact_fail = mine.iter().filter(|r| r.exact_ok == Some(false)).count();
        let worst = mine
            .iter()
            .map(|r| (r.estimate - 3.0 * r.std_err) / r.floor)
            .fold(f64::INFINITY, f64::min);
        println!(
            "{kind:>12}: {} edges, floor violations {floor_fail}, closed-form misses {exact_fail}, min (est-3se)/floor = {worst:.3}",
            mine.len()
        );
        all_ok &= floor_fail == 0 && exact_fail == 0;
    }
    if let Some(path) = out {
        let mut w = csv::Writer::from_path(path)?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::Io { path: path.into(), source: e })?;
    }
    Ok(all_ok)
}

fn mixing(n: usize, pq: &str, eps: f64, seed: u64) -> Result<bool> {
    let mut all_ok = true;
    for params in parse_pairs(pq)? {
        for row in mixing_report(n, params, eps, seed)? {
            println!(
                "p={} q={} start={:<8} steps={:>3} density={:.5} target={:.5} tol={:.5} {}",
                row.p,
                row.q,
                row.start,
                row.steps,
                row.density,
                row.stationary,
                eps + 3.0 * row.sigma,
                if row.ok { "ok" } else { "FAIL" }
            );
            all_ok &= row.ok;
        }
    }
    Ok(all_ok)
}

fn verify() -> bool {
    let mut all_ok = true;
    for r in all_lemma_oracles() {
        println!("{:<45} {:>9} cases  {}", r.name, r.cases, if r.passed() { "ok" } else { "FAIL" });
        for f in &r.failures {
            println!("    {f}");
        }
        all_ok &= r.passed();
    }
    all_ok
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { exp, trace } => simulate(&exp, trace.as_deref()).map(|_| true),
        Command::Sweep { exp, delta, pq } => sweep(&exp, delta.as_deref(), pq.as_deref()).map(|_| true),
        Command::Fairness { samples, seed, matcher, out } => fairness(samples, seed, matcher.as_deref(), out.as_deref()),
        Command::Mixing { n, pq, eps, seed } => mixing(n, &pq, eps, seed),
        Command::Verify => Ok(verify()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
