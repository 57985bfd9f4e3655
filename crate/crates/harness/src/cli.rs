//! `abo` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use abo::benchmarks::{CaseName, CurrinVariant};
use abo::optimizers::{Algorithm, RunConfig};
use abo::ObjectiveCase;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::demo::{demo_datasets, posterior_dump};
use crate::error::{HarnessError, Result};
use crate::experiment::run_experiment;
use crate::output::{read_records, stats_path, write_dump_csv, write_outputs, write_stats_csv};
use crate::spec::ExperimentSpec;
use crate::stats::{aggregate_all, paired_final_regrets, sign_test, AggregateStats};

#[derive(Debug, Parser)]
#[command(name = "abo", version, about = "Multi-fidelity Bayesian optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Run a seeded Monte-Carlo experiment and write records, stats and a manifest.
    Run(RunArgs),
    /// Dump HF, LF and regularized posteriors of a 1D case on a grid as CSV.
    Demo(DemoArgs),
    /// List the benchmark cases.
    ListCases,
    /// Recompute the stats CSVs from stored run records.
    Regret(RegretArgs),
    /// Paired sign test on final simple regret between two algorithms.
    SignTest(SignTestArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON experiment spec, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any spec field, e.g. `--set run.abo.alpha=0.8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub case: Option<String>,
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',')]
    pub algs: Option<Vec<String>>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Master seed; run `i` uses `seed + i`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub n_init: Option<usize>,
    /// LF dataset size.
    #[arg(long)]
    pub lf_count: Option<usize>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub sqrt_beta: Option<f64>,
    #[arg(long)]
    pub w_lf_init: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Freeze the ABO weight at its initial value.
    #[arg(long)]
    pub no_adapt: bool,
    #[arg(long)]
    pub refit_every: Option<usize>,
    #[arg(long)]
    pub acq_budget: Option<usize>,
    #[arg(long)]
    pub currin_variant: Option<String>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Keep per-iteration wall times in the records.
    #[arg(long)]
    pub timings: bool,
    /// Output directory [default: $ABO_OUTPUT_DIR, else ./abo-output].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value = "case1")]
    pub case: String,
    #[arg(long, default_value_t = 3)]
    pub hf: usize,
    #[arg(long, default_value_t = 3)]
    pub lf: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 301)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.5)]
    pub w_lf: f64,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegretArgs {
    /// Experiment directory holding `records/`.
    #[arg(long)]
    pub dir: PathBuf,
    /// Where to write the CSVs; defaults to `--dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "printed")]
    pub currin_variant: String,
}

#[derive(Debug, Args)]
pub struct SignTestArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value = "abo")]
    pub a: String,
    #[arg(long, default_value = "gp_ucb")]
    pub b: String,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[arg(long, default_value = "printed")]
    pub currin_variant: String,
}

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

fn parse_case(s: &str) -> Result<CaseName> {
    s.parse().map_err(|_| {
        let valid: Vec<&str> = CaseName::ALL.iter().map(|c| c.as_str()).collect();
        usage(format!("unknown case `{s}` (valid: {})", valid.join(", ")))
    })
}

fn parse_alg(s: &str) -> Result<Algorithm> {
    s.parse().map_err(|e: abo::Error| usage(e.to_string()))
}

fn parse_variant(s: &str) -> Result<CurrinVariant> {
    serde_json::from_value(Value::String(s.into()))
        .map_err(|_| usage(format!("unknown currin variant `{s}` (valid: printed, corrected)")))
}

impl RunArgs {
    /// Explicit flags as a JSON layer over the config file.
    fn flag_layer(&self) -> Result<Value> {
        let mut top = Map::new();
        let mut run = Map::new();
        let mut abo = Map::new();
        if let Some(c) = &self.case {
            top.insert("case".into(), json!(parse_case(c)?));
        }
        if let Some(a) = &self.algs {
            let algs = a.iter().map(|s| parse_alg(s.trim())).collect::<Result<Vec<_>>>()?;
            top.insert("algorithms".into(), json!(algs));
        }
        if let Some(v) = self.runs {
            top.insert("n_runs".into(), json!(v));
        }
        if let Some(v) = self.seed {
            top.insert("seed_master".into(), json!(v));
        }
        if let Some(v) = self.lf_count {
            top.insert("lf_count".into(), json!(v));
        }
        if let Some(v) = self.noise_sd {
            top.insert("noise_sd".into(), json!(v));
        }
        if let Some(v) = &self.currin_variant {
            top.insert("currin_variant".into(), json!(parse_variant(v)?));
        }
        if let Some(v) = self.jobs {
            top.insert("jobs".into(), json!(v));
        }
        if self.timings {
            top.insert("record_timings".into(), json!(true));
        }
        if let Some(v) = &self.out {
            top.insert("output_dir".into(), json!(v));
        }
        if let Some(v) = self.budget {
            run.insert("budget".into(), json!(v));
        }
        if let Some(v) = self.n_init {
            run.insert("n_init".into(), json!(v));
        }
        if let Some(v) = self.sqrt_beta {
            run.insert("beta".into(), json!({"kind": "constant", "sqrt_beta": v}));
        }
        if let Some(v) = self.refit_every {
            run.insert("refit_every".into(), json!(v));
        }
        if let Some(v) = self.acq_budget {
            run.insert("acquisition_budget".into(), json!(v));
        }
        if let Some(v) = self.w_lf_init {
            abo.insert("w_lf_init".into(), json!(v));
        }
        if let Some(v) = self.alpha {
            abo.insert("alpha".into(), json!(v));
        }
        if self.no_adapt {
            abo.insert("adapt_weight".into(), json!(false));
        }
        if !abo.is_empty() {
            run.insert("abo".into(), Value::Object(abo));
        }
        if !run.is_empty() {
            top.insert("run".into(), Value::Object(run));
        }
        Ok(Value::Object(top))
    }
}

fn print_stats(out: &mut dyn Write, stats: &[AggregateStats]) -> std::io::Result<()> {
    writeln!(out, "{:<8} {:>4} {:>14} {:>12} {:>10}", "alg", "n", "final_regret", "sd", "hf_weight")?;
    for s in stats {
        let r = s.final_row();
        let w = r.mean_hf_weight.map_or("-".to_string(), |w| format!("{w:.4}"));
        writeln!(
            out,
            "{:<8} {:>4} {:>14.6e} {:>12.4e} {:>10}",
            s.algorithm.as_str(),
            s.n_effective,
            r.mean_regret,
            r.sd_regret,
            w
        )?;
    }
    Ok(())
}

fn io_stdout(e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let spec = ExperimentSpec::resolve(args.config.as_deref(), &args.set, args.flag_layer()?)?;
    let dir = spec.resolved_output_dir();
    let outcome = run_experiment(&spec)?;
    let manifest = write_outputs(&dir, &outcome)?;
    print_stats(out, &outcome.stats).map_err(io_stdout)?;
    if !manifest.failures.is_empty() {
        writeln!(out, "{} run(s) failed; see manifest.json", manifest.failures.len()).map_err(io_stdout)?;
    }
    writeln!(out, "wrote {}", dir.display()).map_err(io_stdout)
}

fn cmd_demo(args: &DemoArgs, out: &mut dyn Write) -> Result<()> {
    let case = ObjectiveCase::new(parse_case(&args.case)?, CurrinVariant::Printed);
    if case.dim() != 1 {
        return Err(usage(format!("demo needs a 1D case; {} has dimension {}", case.name, case.dim())));
    }
    let config = RunConfig {
        seed: args.seed,
        ..RunConfig::default()
    };
    let (hf, lf) = demo_datasets(&case, args.hf, args.lf, args.seed)?;
    let rows = posterior_dump(&case, &hf, &lf, args.grid, args.w_lf, &config)?;
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(HarnessError::io(path))?;
            write_dump_csv(file, &rows)
        }
        None => write_dump_csv(out, &rows),
    }
}

fn cmd_list_cases(out: &mut dyn Write) -> Result<()> {
    for name in CaseName::ALL {
        let c = ObjectiveCase::new(name, CurrinVariant::Printed);
        let bounds: Vec<String> = c
            .domain
            .lower()
            .iter()
            .zip(c.domain.upper())
            .map(|(l, u)| format!("[{l}, {u}]"))
            .collect();
        writeln!(out, "{}  dim={}  domain={}  f*={}", name, c.dim(), bounds.join("x"), c.f_star).map_err(io_stdout)?;
    }
    Ok(())
}

fn objective_for(records: &[abo::RunRecord], variant: &str) -> Result<ObjectiveCase> {
    let name = &records[0].case;
    if let Some(r) = records.iter().find(|r| &r.case != name) {
        return Err(HarnessError::Runtime(format!("records mix cases `{name}` and `{}`", r.case)));
    }
    Ok(ObjectiveCase::new(parse_case(name)?, parse_variant(variant)?))
}

fn cmd_regret(args: &RegretArgs, out: &mut dyn Write) -> Result<()> {
    let records = read_records(&args.dir)?;
    let case = objective_for(&records, &args.currin_variant)?;
    let stats = aggregate_all(&records, case.f_star)?;
    let dest = args.out.clone().unwrap_or_else(|| args.dir.clone());
    fs::create_dir_all(&dest).map_err(HarnessError::io(&dest))?;
    for s in &stats {
        write_stats_csv(&stats_path(&dest, s.algorithm), s)?;
    }
    print_stats(out, &stats).map_err(io_stdout)
}

fn cmd_sign_test(args: &SignTestArgs, out: &mut dyn Write) -> Result<()> {
    let a = parse_alg(&args.a)?;
    let b = parse_alg(&args.b)?;
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(usage(format!("level must lie in (0, 1), got {}", args.level)));
    }
    let records = read_records(&args.dir)?;
    let case = objective_for(&records, &args.currin_variant)?;
    let (seeds, ra, rb) = paired_final_regrets(&records, a, b, case.f_star);
    if seeds.is_empty() {
        return Err(HarnessError::Runtime(format!("no seeds shared by {a} and {b}")));
    }
    let t = sign_test(&ra, &rb)?;
    let verdict = if t.favors_first(args.level) {
        format!("{a} better at level {}", args.level)
    } else if t.losses > t.wins && t.p_value < args.level {
        format!("{b} better at level {}", args.level)
    } else {
        "no significant difference".to_string()
    };
    writeln!(
        out,
        "pairs={} {a}_better={} {b}_better={} ties={} mean_diff={:.6e} p={:.6} => {verdict}",
        seeds.len(),
        t.wins,
        t.losses,
        t.ties,
        t.mean_diff,
        t.p_value
    )
    .map_err(io_stdout)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Demo(a) => cmd_demo(a, out),
        Command::ListCases => cmd_list_cases(out),
        Command::Regret(a) => cmd_regret(a, out),
        Command::SignTest(a) => cmd_sign_test(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 success, 1 usage error, 2 runtime failure.
pub fn main_with_args<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
