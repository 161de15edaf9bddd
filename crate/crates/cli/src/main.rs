use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hinf_core::experiment::{
    parse_config, run, selftest, ExperimentError, ExperimentResult, Report, RunOptions, SelftestOptions, Table,
};

#[derive(Parser)]
#[command(name = "hinf", version, about = "Batch experiments for the H∞ calculus of sectorial matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Report path; the CSV table, if any, goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated refinement levels (maxreg: grid sizes, gt: nodes per decade).
    #[arg(long, value_delimiter = ',')]
    refine: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate f(A) by one of the calculus routes.
    Fcalc(RunArgs),
    /// R-, WR- and U-bounds of an operator family.
    Rbound(RunArgs),
    /// Sectoriality constants and R-sectorial angle curves.
    Angles(RunArgs),
    /// H∞ criterion, constant and dyadic bounds.
    Hinf(RunArgs),
    /// Sums of commuting sectorial operators.
    Sum(RunArgs),
    /// Maximal regularity constants under grid refinement.
    Maxreg(RunArgs),
    /// The ℓ1 absolute resolvent integral.
    Gt(RunArgs),
    /// Built-in example and oracle checks.
    Selftest {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Relative perturbation of the quadrature weights (fault injection).
        #[arg(long, default_value_t = 0.0, hide = true)]
        jitter: f64,
    },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io(format!("{}: {e}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> ExperimentResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

fn csv_bytes(table: &Table) -> ExperimentResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_io = |e: csv::Error| ExperimentError::Io(e.to_string());
    w.write_record(&table.header).map_err(to_io)?;
    for row in &table.rows {
        w.write_record(row).map_err(to_io)?;
    }
    w.into_inner().map_err(|e| ExperimentError::Io(e.to_string()))
}

fn emit(report: &Report, json: Option<PathBuf>, csv: Option<PathBuf>) -> ExperimentResult<()> {
    let text = report.to_json() + "\n";
    match &json {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    if let Some(table) = &report.table {
        let csv = csv.or_else(|| json.map(|p| p.with_extension("csv")));
        if let Some(p) = csv {
            write_atomic(&p, &csv_bytes(table)?)?;
        }
    }
    Ok(())
}

fn run_command(name: &str, args: RunArgs) -> ExperimentResult<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| io_err(&args.config, e))?;
    let cfg = parse_config(&text, Some(name))?;
    let json = args.out.or_else(|| cfg.output.json.as_ref().map(PathBuf::from));
    let csv = cfg.output.csv.as_ref().map(PathBuf::from);
    let report = run(cfg, &RunOptions { seed: args.seed, refine: args.refine })?;
    emit(&report, json, csv)
}

fn print_table(table: &Table) {
    let widths: Vec<usize> = (0..table.header.len())
        .map(|c| table.rows.iter().map(|r| r[c].len()).chain([table.header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        println!("{}", padded.join("  ").trim_end());
    };
    line(&table.header);
    for row in &table.rows {
        line(row);
    }
}

fn run_selftest(seed: u64, out: Option<PathBuf>, jitter: f64) -> ExperimentResult<()> {
    let (report, failed) = selftest(&SelftestOptions { seed, jitter });
    if let Some(t) = &report.table {
        print_table(t);
    }
    if let Some(p) = out {
        write_atomic(&p, (report.to_json() + "\n").as_bytes())?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(ExperimentError::SelfTest(failed))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fcalc(a) => run_command("fcalc", a),
        Command::Rbound(a) => run_command("rbound", a),
        Command::Angles(a) => run_command("angles", a),
        Command::Hinf(a) => run_command("hinf", a),
        Command::Sum(a) => run_command("sum", a),
        Command::Maxreg(a) => run_command("maxreg", a),
        Command::Gt(a) => run_command("gt", a),
        Command::Selftest { seed, out, jitter } => run_selftest(seed, out, jitter),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
