use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nclab::algebra::FamilyKind;
use nclab::functionals::{hardy_norm, lipschitz_norm, lp_norm, HardyKind, NormReport};
use nclab::harness::sweep::{sweep, write_sweep_csv, SweepConfig, SweepKind};
use nclab::harness::{replay, verify, write_rows_csv, ReplayOutcome, Row, SuiteReport, SUITES};
use nclab::io::{decompose_instance, read_instance, write_json, DecomposeOptions, DecompositionJson};
use nclab::{NclabError, Result};

#[derive(Parser)]
#[command(name = "nclab", version, about = "Atomic decompositions and Hardy space inequalities on matrix algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites; exits 0 iff every row passes.
    Verify(VerifyArgs),
    /// Re-execute serialized rows; exits 0 iff every row reproduces.
    Replay(ReplayArgs),
    /// Decompose an instance.
    Decompose(DecomposeArgs),
    /// Sweep fractional, regular-Hardy or zeta quantities to CSV.
    Sweep(SweepArgs),
    /// Hardy, L_p and Lipschitz norms of an instance to CSV.
    Norms(NormsArgs),
    /// List the registered suites.
    Suites,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name or `all`; repeatable.
    #[arg(long = "suite", default_value = "all")]
    suites: Vec<String>,
    /// Family name or `all`; repeatable.
    #[arg(long = "family", default_value = "all")]
    families: Vec<String>,
    /// Cases per family; defaults to each suite's own count.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; `.csv` writes rows only, anything else JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// A row JSON, a list of rows, or a report whose failing rows are replayed.
    #[arg(long)]
    row: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    input: PathBuf,
    /// crude, algebraic, weak or pinfty.
    #[arg(long)]
    method: String,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1.5)]
    beta: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// fractional, reghardy or zeta.
    #[arg(long)]
    suite: String,
    #[arg(long = "family", default_value = "all")]
    families: Vec<String>,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long = "p", value_delimiter = ',', default_values_t = [0.5, 1.0])]
    ps: Vec<f64>,
    #[arg(long = "q", value_delimiter = ',', default_values_t = [1.5])]
    qs: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Hardy kinds (h_c, h_r, h_d, H_c, H_r) and `Lp`; defaults to all.
    #[arg(long = "kind", value_delimiter = ',')]
    kinds: Vec<String>,
    #[arg(long = "p", value_delimiter = ',', default_values_t = [1.0])]
    ps: Vec<f64>,
    /// With `--gamma`, also reports the column Lipschitz norm.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_families(names: &[String]) -> Result<Vec<FamilyKind>> {
    if names.iter().any(|n| n == "all") {
        return Ok(FamilyKind::ALL.to_vec());
    }
    names.iter().map(|n| FamilyKind::parse(n)).collect()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn print_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let families = parse_families(&args.families)?;
    let report = verify(&args.suites, &families, args.trials, args.seed)?;
    match &args.out {
        Some(p) if is_csv(p) => write_rows_csv(&report.rows, BufWriter::new(File::create(p)?))?,
        Some(p) => write_json(p, &report)?,
        None => {}
    }
    summarize(&report);
    Ok(report.all_passed())
}

fn summarize(report: &SuiteReport) {
    let mut err = io::stderr().lock();
    for (name, agg) in &report.per_suite {
        let status = if agg.failed == 0 { "ok" } else { "FAIL" };
        let _ = writeln!(
            err,
            "{status:4} {name:20} rows {:6} failed {:5} min_margin {:+.3e} max_ratio {:.6}",
            agg.rows, agg.failed, agg.min_margin, agg.max_ratio
        );
    }
    let a = &report.aggregate;
    let _ = writeln!(err, "total rows {} passed {} failed {}", a.rows, a.passed, a.failed);
}

fn load_rows(path: &Path) -> Result<Vec<Row>> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if value.get("rows").is_some() {
        let report: SuiteReport = serde_json::from_value(value)?;
        return Ok(report.rows.into_iter().filter(|r| !r.pass).collect());
    }
    if value.is_array() {
        return Ok(serde_json::from_value(value)?);
    }
    Ok(vec![serde_json::from_value(value)?])
}

fn run_replay(args: &ReplayArgs) -> Result<bool> {
    let rows = load_rows(&args.row)?;
    let outcomes = rows.iter().map(replay).collect::<Result<Vec<ReplayOutcome>>>()?;
    for o in &outcomes {
        let r = &o.original;
        let status = if o.identical { "identical" } else { "DIFFERENT" };
        let now = o.replayed.as_ref().map_or("missing".to_string(), |x| format!("lhs {:e} rhs {:e} pass {}", x.lhs, x.rhs, x.pass));
        println!("{status} {} {} {}: recorded lhs {:e} rhs {:e} pass {}; replayed {now}", r.suite, r.instance_id, r.param_json, r.lhs, r.rhs, r.pass);
    }
    Ok(outcomes.iter().all(|o| o.identical))
}

fn run_decompose(args: &DecomposeArgs) -> Result<bool> {
    let inst = read_instance(&args.input)?;
    let options = DecomposeOptions {
        method: args.method.parse()?,
        p: args.p,
        beta: args.beta,
        lambda: args.lambda,
        depth: args.depth,
        tol: args.tol,
    };
    let (dec, input) = decompose_instance(&inst, &options)?;
    let json = DecompositionJson::new(&dec, &input)?;
    print_json(args.out.as_deref(), &json)?;
    eprintln!(
        "{} p={} atoms {} bound {:e} <= {:e} residual_lp {:e} certificates valid {}",
        args.method,
        args.p,
        json.atoms.len(),
        json.bound_lhs,
        json.bound_rhs,
        json.residual_lp,
        json.all_certificates_valid
    );
    Ok(true)
}

fn run_sweep(args: &SweepArgs) -> Result<bool> {
    let config = SweepConfig {
        kind: SweepKind::parse(&args.suite)?,
        families: parse_families(&args.families)?,
        levels: args.levels,
        ps: args.ps.clone(),
        qs: args.qs.clone(),
        trials: args.trials,
        seed: args.seed,
    };
    let rows = sweep(&config)?;
    write_sweep_csv(&rows, output(args.out.as_deref())?)?;
    Ok(true)
}

#[derive(Serialize)]
struct NormRow<'a> {
    instance_id: &'a str,
    kind: &'a str,
    p: Option<f64>,
    value: f64,
    method: nclab::functionals::Method,
}

fn run_norms(args: &NormsArgs) -> Result<bool> {
    let inst = read_instance(&args.input)?;
    let m = inst.to_martingale()?;
    let id = inst.id.clone().unwrap_or_else(|| args.input.display().to_string());
    let kinds: Vec<String> = if args.kinds.is_empty() {
        HardyKind::ALL.iter().map(|k| k.id().to_string()).chain(["Lp".to_string()]).collect()
    } else {
        args.kinds.clone()
    };
    let mut reports: Vec<NormReport> = Vec::new();
    for kind in &kinds {
        for &p in &args.ps {
            let value = if kind == "Lp" { lp_norm(&m.terminal(), p)? } else { hardy_norm(&m, HardyKind::parse(kind)?, p)? };
            reports.push(NormReport::exact(kind, p, value));
        }
    }
    match (args.beta, args.gamma) {
        (Some(beta), Some(gamma)) => reports.push(lipschitz_norm(&m.terminal(), m.filtration(), beta, gamma)?),
        (None, None) => {}
        _ => return Err(NclabError::InvalidParameter("--beta and --gamma go together".into())),
    }
    let mut out = csv::Writer::from_writer(output(args.out.as_deref())?);
    for r in &reports {
        out.serialize(NormRow { instance_id: &id, kind: &r.kind, p: r.p, value: r.value, method: r.method })?;
    }
    out.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => run_verify(a),
        Command::Replay(a) => run_replay(a),
        Command::Decompose(a) => run_decompose(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Norms(a) => run_norms(a),
        Command::Suites => {
            for s in SUITES {
                println!("{:20} {}", s.name, s.summary);
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
