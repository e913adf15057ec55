use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use chowlab::chow::{chow_distance, chow_estimate, chow_of_table, dist_l1, EstimatorConfig};
use chowlab::exact::{recover_weights, solve_exact_chow};
use chowlab::func::{enumeration_cap, lbf_to_ltf, tabulate, FunctionSource, Lbf, Ltf, TruthTable};
use chowlab::learners::{learn_agnostic, learn_rfa, ExampleOracle, LearnResult, RfaOracle};
use chowlab::pipeline::{
    approx_weights, norm_i64, probe_pairs, random_ltf, PipelineError, RunReport, WeightModel,
};
use chowlab::reconstruct::{chow_reconstruct, ChowMode, ReconstructError, ReconstructParams};
use chowlab::rng::derive_seed;
use chowlab::ChowVector;

#[derive(Parser)]
#[command(
    name = "chowlab",
    version,
    about = "Chow-parameter reconstruction of halfspaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Estimated,
}

impl From<Mode> for ChowMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => ChowMode::Exact,
            Mode::Estimated => ChowMode::Estimated,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Gaussian,
    Integer,
}

#[derive(Subcommand)]
enum Command {
    /// Chow vector of a function file (exact, or estimated with --estimate).
    Chow {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        estimate: bool,
        #[arg(long, default_value_t = 0.05)]
        acc: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct an LBF from a Chow vector.
    Reconstruct {
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_iters: Option<u64>,
        /// Function whose potential is recorded in the trace (exact mode).
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Recover a truth table from an exact Chow vector by LP.
    Exact {
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover separating weights for a Boolean truth table by LP.
    Weights {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Low integer-weight approximation of an LTF.
    Approx {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn from one-coordinate (1-RFA) queries.
    LearnRfa {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        acc: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn from uniform examples with label noise.
    LearnAgnostic {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        acc: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit (dchow, dist) rows for random LTF / perturbed-table pairs.
    Probe {
        #[arg(long)]
        pairs: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random LTF.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Model::Gaussian)]
        model: Model,
        /// Total weight for the integer model.
        #[arg(long)]
        weight: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Pipeline(PipelineError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Pipeline(e) => e.exit_code() as u8,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(s) => f.write_str(s),
            CliError::Pipeline(e) => write!(f, "{e}"),
        }
    }
}

impl<E: Into<PipelineError>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Pipeline(e.into())
    }
}

/// Any function file: LTF, LBF or truth table.
#[derive(Deserialize)]
#[serde(untagged)]
enum FunctionFile {
    Ltf(Ltf),
    Lbf(Lbf),
    Table(TruthTable),
}

impl From<FunctionFile> for FunctionSource {
    fn from(f: FunctionFile) -> Self {
        match f {
            FunctionFile::Ltf(f) => f.into(),
            FunctionFile::Lbf(g) => g.into(),
            FunctionFile::Table(t) => t.into(),
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_function(path: &Path) -> Result<FunctionSource, CliError> {
    let f: FunctionFile = read_json(path).map_err(|_| {
        CliError::Input(format!(
            "{}: not a valid LTF, LBF or truth-table file",
            path.display()
        ))
    })?;
    Ok(f.into())
}

fn write_json<T: Serialize>(
    path: &Option<PathBuf>,
    value: &T,
    report: &mut RunReport,
) -> Result<(), CliError> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(value).expect("plain data serializes");
        fs::write(p, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        report.outputs.push(p.display().to_string());
    }
    Ok(())
}

fn learn_summary(
    report: &mut RunReport,
    r: &LearnResult,
    target: &FunctionSource,
) -> Result<(), CliError> {
    let s = &mut report.summary;
    s.iterations = Some(r.trace.iterations);
    s.v_norm = Some(norm_i64(r.lbf.v()));
    s.extra
        .insert("samples_consumed".into(), r.samples_consumed as f64);
    if let Some(d) = r.dchow_alpha_lbf {
        s.extra.insert("dchow_alpha_lbf".into(), d);
    }
    if let Some(d) = r.dchow_alpha_hypothesis {
        s.extra.insert("dchow_alpha_hypothesis".into(), d);
    }
    if target.n() <= enumeration_cap() {
        let t = tabulate(target)?;
        let h = r.hypothesis.tabulate()?;
        s.dist_final = Some(dist_l1(&t, &h)?);
        s.dchow_final = Some(chow_distance(
            &chow_of_table(&t),
            &chow_of_table(&r.lbf.tabulate()?),
        )?);
    }
    report.result = Some(r.to_json());
    Ok(())
}

fn run(cli: Cli) -> Result<RunReport, CliError> {
    match cli.command {
        Command::Chow {
            function,
            estimate,
            acc,
            delta,
            samples,
            seed,
            out,
        } => {
            let f = read_function(&function)?;
            let n = f.n();
            let mut report = RunReport::new(
                "chow",
                serde_json::json!({ "n": n, "estimate": estimate, "acc": acc, "delta": delta, "samples": samples }),
                seed,
            );
            let chi = if estimate {
                let mut cfg = EstimatorConfig::new(acc, delta, seed);
                cfg.samples = samples;
                report
                    .summary
                    .extra
                    .insert("samples".into(), cfg.chow_sample_count(n) as f64);
                report.time("chow", || chow_estimate(&f, n, &cfg))?
            } else {
                report.time("chow", || chowlab::chow_exact(&f))?
            };
            report.summary.extra.insert("norm".into(), chi.norm());
            write_json(&out, &chi, &mut report)?;
            report.result = Some(serde_json::to_value(&chi).expect("serializes"));
            Ok(report)
        }
        Command::Reconstruct {
            alpha,
            eps,
            delta,
            mode,
            seed,
            max_iters,
            target,
            out,
            trace,
        } => {
            let alpha: ChowVector = read_json(&alpha)?;
            let target = match target {
                Some(p) => Some(tabulate(&read_function(&p)?)?),
                None => None,
            };
            let params = ReconstructParams {
                eps,
                delta,
                mode: mode.into(),
                max_iters,
                seed,
            };
            let mut report = RunReport::new(
                "reconstruct",
                serde_json::to_value(&params).expect("serializes"),
                seed,
            );
            let result = report.time("reconstruct", || {
                chow_reconstruct(&alpha, &params, target.as_ref())
            });
            let (rec, failure) = match result {
                Ok(r) => (r, None),
                Err(ReconstructError::CapExceeded(r)) => {
                    let r = *r;
                    (r.clone(), Some(ReconstructError::CapExceeded(Box::new(r))))
                }
                Err(e) => return Err(e.into()),
            };
            let s = &mut report.summary;
            s.iterations = Some(rec.trace.iterations);
            s.v_norm = Some(norm_i64(rec.lbf.v()));
            if let Some(rho) = rec.trace.rho_history().last() {
                s.extra.insert("rho_final".into(), *rho);
            }
            if alpha.n() <= enumeration_cap() {
                let chi_g = chow_of_table(&rec.lbf.tabulate()?);
                s.dchow_final = Some(chow_distance(&alpha, &chi_g)?);
            }
            write_json(&out, &rec.lbf, &mut report)?;
            write_json(&trace, &rec.trace.to_json(), &mut report)?;
            match failure {
                Some(e) => {
                    print_report(&report);
                    Err(e.into())
                }
                None => Ok(report),
            }
        }
        Command::Exact { alpha, out } => {
            let alpha: ChowVector = read_json(&alpha)?;
            let mut report = RunReport::new("exact", serde_json::json!({ "n": alpha.n() }), 0);
            let table = report.time("lp", || solve_exact_chow(&alpha))?;
            write_json(&out, &table, &mut report)?;
            report.result = Some(serde_json::to_value(&table).expect("serializes"));
            Ok(report)
        }
        Command::Weights { table, out } => {
            let table: TruthTable = read_json(&table)?;
            let mut report = RunReport::new("weights", serde_json::json!({ "n": table.n() }), 0);
            let ltf = report.time("lp", || recover_weights(&table))?;
            write_json(&out, &ltf, &mut report)?;
            report.result = Some(serde_json::to_value(&ltf).expect("serializes"));
            Ok(report)
        }
        Command::Approx {
            function,
            eps,
            mode,
            seed,
            out,
        } => {
            let f = match read_function(&function)? {
                FunctionSource::Ltf(f) => f,
                FunctionSource::Lbf(g) => lbf_to_ltf(&g).ltf,
                _ => return Err(CliError::Input("approx expects an LTF or LBF file".into())),
            };
            let a = approx_weights(&f, eps, mode.into(), seed)?;
            let mut report = a.report;
            write_json(&out, &a.ltf, &mut report)?;
            report.result = Some(serde_json::json!({ "ltf": a.ltf, "lbf": a.lbf }));
            Ok(report)
        }
        Command::LearnRfa {
            target,
            n,
            acc,
            delta,
            seed,
            out,
        } => {
            let f = read_function(&target)?;
            let mut report = RunReport::new(
                "learn-rfa",
                serde_json::json!({ "n": n, "acc": acc, "delta": delta }),
                seed,
            );
            let mut oracle = RfaOracle::new(f.clone(), derive_seed(seed, 0))?;
            let r = report.time("learn", || learn_rfa(&mut oracle, n, acc, delta, seed))?;
            learn_summary(&mut report, &r, &f)?;
            write_json(&out, &r.hypothesis, &mut report)?;
            Ok(report)
        }
        Command::LearnAgnostic {
            target,
            noise,
            eps,
            acc,
            delta,
            seed,
            out,
        } => {
            let f = read_function(&target)?;
            let n = f.n();
            let mut report = RunReport::new(
                "learn-agnostic",
                serde_json::json!({ "n": n, "noise": noise, "eps": eps, "acc": acc, "delta": delta }),
                seed,
            );
            let mut oracle = ExampleOracle::new(f.clone(), noise, derive_seed(seed, 0))?;
            let r = report.time("learn", || {
                learn_agnostic(&mut oracle, n, eps, delta, acc, seed)
            })?;
            learn_summary(&mut report, &r, &f)?;
            write_json(&out, &r.hypothesis, &mut report)?;
            Ok(report)
        }
        Command::Probe {
            pairs,
            n,
            seed,
            out,
        } => {
            let mut report =
                RunReport::new("probe", serde_json::json!({ "pairs": pairs, "n": n }), seed);
            let rows = report.time("probe", || probe_pairs(pairs, n, seed))?;
            let violations = rows.iter().filter(|r| !r.envelope_ok).count();
            report
                .summary
                .extra
                .insert("pairs".into(), rows.len() as f64);
            report
                .summary
                .extra
                .insert("envelope_violations".into(), violations as f64);
            if let Some(p) = &out {
                let mut w = csv::Writer::from_path(p)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                for row in &rows {
                    w.serialize(row)
                        .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                }
                w.flush()
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                report.outputs.push(p.display().to_string());
            }
            Ok(report)
        }
        Command::Random {
            n,
            model,
            weight,
            seed,
            out,
        } => {
            let model = match (model, weight) {
                (Model::Gaussian, _) => WeightModel::Gaussian,
                (Model::Integer, Some(w)) => WeightModel::Integer { w },
                (Model::Integer, None) => WeightModel::Integer { w: n as u64 },
            };
            let mut report = RunReport::new(
                "random",
                serde_json::json!({ "n": n, "weight_model": model }),
                seed,
            );
            let f = random_ltf(n, model, seed)?;
            write_json(&out, &f, &mut report)?;
            report.result = Some(serde_json::to_value(&f).expect("serializes"));
            Ok(report)
        }
    }
}

fn print_report(report: &RunReport) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    // A closed pipe downstream is not an error worth panicking over.
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            print_report(&report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
