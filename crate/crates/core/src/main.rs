use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};

use swipt_cr::report::{emit_csv, ReportError};
use swipt_cr::sim::{alpha_range, run_simulation, sweep, SimError, ThroughputReport};
use swipt_cr::validation::run_validate;
use swipt_cr::{parse_config, ConfigError, SchemeId, SimConfig, CONFIG_KEYS};

const DEFAULT_ALPHA_GRID: &str = "0.05:0.95:0.1";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("validation failed")]
    ChecksFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::ChecksFailed => 1,
            CliError::Io { .. } => 2,
            CliError::Report(ReportError::Empty) => 1,
            CliError::Report(_) => 2,
            CliError::Sim(SimError::Relay(_)) => 3,
            CliError::Sim(_) => 1,
        }
    }
}

fn common_args(cmd: Command) -> Command {
    let cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help("Configuration file of `key = value` lines"),
        )
        .arg(
            Arg::new("output")
                .long("output")
                .short('o')
                .value_name("PATH")
                .default_value("-")
                .help("Output path, `-` for standard output"),
        );
    CONFIG_KEYS.iter().fold(cmd, |cmd, &key| {
        cmd.arg(
            Arg::new(key)
                .long(key)
                .value_name("VALUE")
                .help_heading("Configuration overrides"),
        )
    })
}

fn cli() -> Command {
    Command::new("swipt-sim")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Cooperative SWIPT cognitive radio simulator")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(common_args(
            Command::new("simulate").about("Run one configuration and write a one-row CSV report"),
        ))
        .subcommand(common_args(
            Command::new("sweep")
                .about("Sweep alpha for a set of schemes and write a CSV report")
                .arg(
                    Arg::new("alpha-grid")
                        .long("alpha-grid")
                        .value_name("START:END:STEP")
                        .default_value(DEFAULT_ALPHA_GRID),
                )
                .arg(
                    Arg::new("schemes")
                        .long("schemes")
                        .value_name("LIST")
                        .default_value("first,second,third,fourth,fifth"),
                ),
        ))
        .subcommand(common_args(
            Command::new("validate").about("Run the reduced-scale self-check suite"),
        ))
}

fn load_config(m: &ArgMatches) -> Result<SimConfig, CliError> {
    let bytes = match m.get_one::<String>("config") {
        Some(path) => std::fs::read(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => Vec::new(),
    };
    let overrides: Vec<(String, String)> = CONFIG_KEYS
        .iter()
        .filter_map(|&key| {
            m.get_one::<String>(key)
                .map(|v| (key.to_string(), v.clone()))
        })
        .collect();
    Ok(parse_config(&bytes, &overrides)?)
}

fn parse_alpha_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--alpha-grid expects START:END:STEP, got {spec:?}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    let grid = alpha_range(start, end, step);
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

fn parse_schemes(list: &str) -> Result<Vec<SchemeId>, CliError> {
    list.split(',')
        .map(|s| s.trim().parse::<SchemeId>().map_err(CliError::Usage))
        .collect()
}

fn write_report(report: &ThroughputReport, path: &str) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_string(),
        source,
    };
    if path == "-" {
        let stdout = io::stdout();
        emit_csv(report, stdout.lock())?;
    } else {
        let file = File::create(path).map_err(io_err)?;
        let mut sink = BufWriter::new(file);
        emit_csv(report, &mut sink)?;
        sink.flush().map_err(io_err)?;
    }
    Ok(())
}

fn run(matches: &ArgMatches) -> Result<(), CliError> {
    let (name, m) = matches.subcommand().expect("subcommand is required");
    let cfg = load_config(m)?;
    let output = m
        .get_one::<String>("output")
        .map(String::as_str)
        .unwrap_or("-");
    match name {
        "simulate" => {
            let run = run_simulation(&cfg)?;
            write_report(&ThroughputReport::single(&run), output)
        }
        "sweep" => {
            let grid = parse_alpha_grid(m.get_one::<String>("alpha-grid").expect("has default"))?;
            let schemes = parse_schemes(m.get_one::<String>("schemes").expect("has default"))?;
            let report = sweep(&cfg, &grid, &schemes)?;
            write_report(&report, output)
        }
        "validate" => {
            let report = run_validate(&cfg)?;
            let text = format!("{report}\n");
            if output == "-" {
                print!("{text}");
            } else {
                std::fs::write(output, &text).map_err(|source| CliError::Io {
                    path: output.to_string(),
                    source,
                })?;
            }
            if report.passed() {
                Ok(())
            } else {
                for c in report.failures() {
                    eprintln!("failed: {}", c.name);
                }
                Err(CliError::ChecksFailed)
            }
        }
        _ => unreachable!("unknown subcommand"),
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
