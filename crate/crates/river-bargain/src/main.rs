use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use river_bargain::chart;
use river_bargain::config::{parse_config, example_config, RunConfig};
use river_bargain::model::Problem;
use river_bargain::solver::{self, Agreement, TuBounds};
use river_bargain::sweep;
use river_bargain::verify;

#[derive(Parser)]
#[command(
    name = "river-bargain",
    version,
    about = "Two-agent river-sharing bargaining solver with pollution penalties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and print the agreement report
    Solve {
        /// Configuration file (key tree or JSON)
        config: PathBuf,
        /// Exit with status 3 when the outcome is infeasible
        #[arg(long)]
        strict: bool,
    },
    /// Print the acceptable-price band and participation flags
    Bounds {
        /// Configuration file (key tree or JSON)
        config: PathBuf,
    },
    /// Solve over the configured endowment grid; write CSV/JSON tables and an SVG chart
    Sweep {
        /// Configuration file with a sweep block
        config: PathBuf,
        /// CSV destination (default: output.csv from the config, else stdout)
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON destination (default: output.json from the config)
        #[arg(long)]
        json: Option<PathBuf>,
        /// SVG chart destination (default: output.svg from the config)
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Endowment ratio to chart (default: output.delta, or the only ratio)
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Cross-check every closed form against the numeric routines
    Verify {
        /// Configuration file (key tree or JSON)
        config: PathBuf,
    },
    /// Print a commented configuration template
    ExampleConfig,
}

enum CliError {
    Usage(String),
    Numeric(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let failed = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if failed { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Numeric(message)) => {
            eprintln!("numerical failure: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Solve { config, strict } => {
            let cfg = load(&config)?;
            let agreement = solver::solve_with(&cfg.problem, &cfg.oracle);
            print_out(&render_solve_report(&cfg.problem, &agreement));
            if strict && !agreement.feasible {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds { config } => {
            let cfg = load(&config)?;
            let bounds = solver::tu_bounds(&cfg.problem);
            print_out(&format!("{}{}", render_problem(&cfg.problem), render_bounds(&bounds)));
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, csv, json, svg, delta } => {
            let cfg = load(&config)?;
            run_sweep_command(&cfg, csv, json, svg, delta)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { config } => {
            let cfg = load(&config)?;
            let report = verify::run_verify(&cfg).map_err(|e| CliError::Numeric(e.to_string()))?;
            print_out(&report.render());
            if report.has_failures() {
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::ExampleConfig => {
            print_out(example_config());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Writes to stdout, treating a closed pipe as a normal early exit the
/// way standard line tools do.
fn print_out(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(1);
    }
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Usage(e.to_string()))
}

fn run_sweep_command(
    cfg: &RunConfig,
    csv: Option<PathBuf>,
    json: Option<PathBuf>,
    svg: Option<PathBuf>,
    delta: Option<f64>,
) -> Result<(), CliError> {
    let Some(spec) = &cfg.sweep else {
        return Err(CliError::Usage(
            "the sweep subcommand needs a sweep block: set sweep.delta and sweep.e2.{start,stop,step}"
                .into(),
        ));
    };
    let rows = sweep::run_sweep(spec).map_err(|e| CliError::Usage(e.to_string()))?;

    let csv_path = csv.or_else(|| cfg.output.csv.as_ref().map(PathBuf::from));
    let table = sweep::rows_to_csv(&rows, spec.columns.as_deref());
    match &csv_path {
        Some(path) => write_file(path, &table)?,
        None => print_out(&table),
    }

    if let Some(path) = json.or_else(|| cfg.output.json.as_ref().map(PathBuf::from)) {
        write_file(&path, &sweep::rows_to_json(&rows))?;
    }

    if let Some(path) = svg.or_else(|| cfg.output.svg.as_ref().map(PathBuf::from)) {
        let selected = delta
            .or(cfg.output.delta)
            .or_else(|| (spec.delta_values.len() == 1).then(|| spec.delta_values[0]))
            .ok_or_else(|| {
                CliError::Usage(
                    "charting needs an endowment ratio: pass --delta or set output.delta".into(),
                )
            })?;
        let document = chart::render_chart(&rows, selected)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        write_file(&path, &document)?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Report numbers rounded to 12 significant digits so closed-form results
/// read as the decimals they are; tables keep full shortest-round-trip
/// precision, this is display only.
fn num(v: f64) -> String {
    if !v.is_finite() || v == 0.0 {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        let s = format!("{v:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("scientific format has an exponent");
        let trimmed = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{trimmed}e{exp}");
    }
    let decimals = (12 - magnitude - 1).clamp(0, 17) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn render_problem(problem: &Problem) -> String {
    let up = problem.upstream();
    let down = problem.downstream();
    let mut out = String::new();
    let _ = writeln!(out, "problem:");
    let _ = writeln!(
        out,
        "  upstream    a = {}, b = {}, beta = {}",
        num(up.a),
        num(up.b),
        num(up.beta)
    );
    let _ = writeln!(
        out,
        "  downstream  a = {}, b = {}, beta = {}",
        num(down.a),
        num(down.b),
        num(down.beta)
    );
    let _ = writeln!(out, "  endowments  e1 = {}, e2 = {}", num(problem.e1()), num(problem.e2()));
    let _ = writeln!(out, "  penalty     c1w = {}", num(problem.c1w()));
    out
}

fn render_bounds(bounds: &TuBounds) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "price band:");
    let _ = writeln!(out, "  alpha_lower = {}", num(bounds.alpha_lower));
    let _ = writeln!(out, "  alpha_upper = {}", num(bounds.alpha_upper));
    let _ = writeln!(out, "  upstream participates   = {}", bounds.upstream_participates);
    let _ = writeln!(out, "  downstream participates = {}", bounds.downstream_participates);
    out
}

fn render_solve_report(problem: &Problem, agreement: &Agreement) -> String {
    let mut out = render_problem(problem);
    out.push_str(&render_bounds(&agreement.bounds));
    let _ = writeln!(out, "agreement:");
    let _ = writeln!(out, "  alpha_star = {}", num(agreement.alpha_star));
    let _ = writeln!(out, "  regime     = {}", agreement.regime);
    let _ = writeln!(out, "  feasible   = {}", agreement.feasible);
    let _ = writeln!(
        out,
        "  allocation x1 = {}, x2 = {}, transfer t1 = {}",
        num(agreement.allocation.x1),
        num(agreement.allocation.x2),
        num(agreement.allocation.t1)
    );
    let _ = writeln!(
        out,
        "  utilities  z1 = {}, z2 = {}",
        num(agreement.utilities.0),
        num(agreement.utilities.1)
    );
    let _ = writeln!(
        out,
        "  no-trade   d1 = {}, d2 = {}  (x1 = {}, x2 = {})",
        num(agreement.disagreement.d1),
        num(agreement.disagreement.d2),
        num(agreement.disagreement.x1_ats),
        num(agreement.disagreement.x2_ats)
    );
    let _ = writeln!(
        out,
        "  gains      z1 - d1 = {}, z2 - d2 = {}",
        num(agreement.gains.0),
        num(agreement.gains.1)
    );
    out
}
