mod sweep;

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pa_econ_api::ServerConfig;
use pa_econ_core::report::{fmt_money, fmt_ratio};
use pa_econ_core::{
    evaluate, load_catalog, render_report, validate_scenario, Catalog, EvaluationResult,
    FarmScenario, ReportFormat,
};

use crate::sweep::SweepParam;

/// Economic evaluation of precision-agriculture technologies.
#[derive(Debug, Parser)]
#[command(name = "pa-econ", version)]
struct Cli {
    /// Catalog file; the built-in seed catalog is used when unset.
    #[arg(long, global = true, env = "PA_ECON_CATALOG")]
    catalog: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a scenario file and print or write the report.
    Evaluate {
        #[arg(long)]
        scenario: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Structured)]
        format: OutputFormat,
    },
    /// Evaluate a scenario over a grid of one parameter.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// discount-rate, crops.<index|name>.<area|yield|price> or
        /// options.<index>.<input-reduction|yield-increase|fuel-reduction|labour-reduction>
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, allow_negative_numbers = true)]
        step: f64,
        #[arg(long, value_enum, default_value_t = SweepFormat::Table)]
        format: SweepFormat,
    },
    /// Catalog maintenance.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "PA_ECON_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Directory holding saved scenarios and runs.
        #[arg(long, env = "PA_ECON_DATA_DIR", default_value = "pa-econ-data")]
        data_dir: PathBuf,
        /// Origin allowed by CORS, or `*`.
        #[arg(long, env = "PA_ECON_ALLOWED_ORIGIN")]
        allowed_origin: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    /// Check a catalog file and print a summary.
    Validate { file: PathBuf },
    /// Print the built-in seed catalog.
    Export,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Structured,
    Printable,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepFormat {
    Table,
    Json,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn catalog(path: Option<&Path>) -> Result<Catalog, Failure> {
    match path {
        None => Ok(Catalog::seed()),
        Some(path) => load_catalog(&read(path)?)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
    }
}

fn scenario(path: &Path) -> Result<FarmScenario, Failure> {
    let s: FarmScenario = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let violations = validate_scenario(&s);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Failure::Invalid(lines.join("\n")));
    }
    Ok(s)
}

fn table(result: &EvaluationResult) -> String {
    let mut rows = vec![[
        "option".to_owned(),
        "I′ (€)".to_owned(),
        "NPV (€)".to_owned(),
        "IRR".to_owned(),
        "BCR".to_owned(),
    ]];
    for (i, o) in result.options.iter().enumerate() {
        rows.push([
            format!(
                "{}. {} ({})",
                i + 1,
                o.option.display_name(),
                o.option.operation
            ),
            fmt_money(o.scaled_investment),
            fmt_money(o.npv),
            fmt_ratio(o.irr),
            fmt_ratio(o.bcr),
        ]);
    }
    let p = &result.portfolio;
    rows.push([
        "portfolio".to_owned(),
        fmt_money(p.scaled_investment),
        fmt_money(p.npv),
        fmt_ratio(p.irr),
        fmt_ratio(p.bcr),
    ]);
    render_columns(&rows)
}

fn render_columns<const N: usize>(rows: &[[String; N]]) -> String {
    let mut widths = [0usize; N];
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, (cell, w)) in row.iter().zip(widths).enumerate() {
            let pad = w - cell.chars().count();
            if i == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str("  ");
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn run_evaluate(
    catalog: &Catalog,
    scenario_path: &Path,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<(), Failure> {
    let s = scenario(scenario_path)?;
    let result = evaluate(&s, catalog).map_err(|e| Failure::Invalid(e.to_string()))?;
    let text = match format {
        OutputFormat::Structured => render_report(&result, ReportFormat::Structured),
        OutputFormat::Printable => render_report(&result, ReportFormat::Printable),
        OutputFormat::Table => table(&result),
    };
    write_output(out, &text)
}

fn run_sweep(
    catalog: &Catalog,
    scenario_path: &Path,
    param: &str,
    (from, to, step): (f64, f64, f64),
    format: SweepFormat,
) -> Result<(), Failure> {
    let param: SweepParam = param.parse().map_err(Failure::Invalid)?;
    let points = sweep::grid(from, to, step).map_err(Failure::Invalid)?;
    let s = scenario(scenario_path)?;
    let result =
        sweep::run(&s, catalog, &param, &points).map_err(|e| Failure::Invalid(e.to_string()))?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let text = match format {
        SweepFormat::Json => {
            let mut t = serde_json::to_string_pretty(&result).expect("sweep serializes");
            t.push('\n');
            t
        }
        SweepFormat::Table => {
            let mut out = String::new();
            if param == SweepParam::DiscountRate {
                // IRR does not depend on the discount rate
                let irr = result.rows.first().and_then(|r| r.irr);
                out.push_str(&format!("IRR: {}\n", fmt_ratio(irr)));
                let mut rows = vec![[param.to_string(), "NPV (€)".to_owned(), "BCR".to_owned()]];
                rows.extend(
                    result
                        .rows
                        .iter()
                        .map(|r| [r.value.to_string(), fmt_money(r.npv), fmt_ratio(r.bcr)]),
                );
                out.push_str(&render_columns(&rows));
            } else {
                let mut rows = vec![[
                    param.to_string(),
                    "NPV (€)".to_owned(),
                    "IRR".to_owned(),
                    "BCR".to_owned(),
                ]];
                rows.extend(result.rows.iter().map(|r| {
                    [
                        r.value.to_string(),
                        fmt_money(r.npv),
                        fmt_ratio(r.irr),
                        fmt_ratio(r.bcr),
                    ]
                }));
                out.push_str(&render_columns(&rows));
            }
            out
        }
    };
    write_output(None, &text)
}

fn run_validate(file: &Path) -> Result<(), Failure> {
    match load_catalog(&read(file)?) {
        Ok(c) => write_output(None, &c.summary()),
        Err(e) => {
            let lines = match e {
                pa_econ_core::CatalogError::Integrity(problems) => problems,
                other => vec![other.to_string()],
            };
            Err(Failure::Invalid(lines.join("\n")))
        }
    }
}

fn run_serve(catalog: Catalog, config: ServerConfig) -> Result<(), Failure> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    eprintln!("listening on http://{}", config.listen);
    runtime
        .block_on(pa_econ_api::serve(catalog, config))
        .map_err(|e| Failure::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let catalog_path = cli.catalog.as_deref();
    match cli.command {
        Command::Evaluate {
            scenario,
            out,
            format,
        } => run_evaluate(&catalog(catalog_path)?, &scenario, out.as_deref(), format),
        Command::Sweep {
            scenario,
            param,
            from,
            to,
            step,
            format,
        } => run_sweep(
            &catalog(catalog_path)?,
            &scenario,
            &param,
            (from, to, step),
            format,
        ),
        Command::Catalog {
            command: CatalogCommand::Validate { file },
        } => run_validate(&file),
        Command::Catalog {
            command: CatalogCommand::Export,
        } => write_output(None, &Catalog::seed().to_json()),
        Command::Serve {
            listen,
            data_dir,
            allowed_origin,
        } => run_serve(
            catalog(catalog_path)?,
            ServerConfig {
                listen,
                data_dir,
                allowed_origin,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
