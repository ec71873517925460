use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use metacont::runner::{self, error_json, RunConfig};
use metacont::verify::{self, Level, Tamper};
use metacont::Error;

#[derive(Parser)]
#[command(name = "metacont", version, about = "Pseudo-spectral runs, sweeps and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `outputs.out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite.
    Verify {
        #[arg(long, default_value = "quick")]
        level: String,
        /// Also write the suite report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Inject an operator fault (curl_sign, grad_scale, skip_projection).
        #[arg(long, hide = true)]
        tamper: Option<String>,
    },
    /// Vary one parameter of a configuration over a list of values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Validation and setup errors exit with 2, failed runs and checks with 1.
fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", error_json(e));
    let validation = matches!(
        e,
        Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::InvalidControl(_)
            | Error::InvalidScenario(_)
            | Error::InvalidConfig(_)
            | Error::Json(_)
            | Error::Io { .. }
    );
    ExitCode::from(if validation { 2 } else { 1 })
}

fn load(path: &Path) -> Result<(RunConfig, Vec<u8>), Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let config = RunConfig::from_json(&bytes)?;
    Ok((config, bytes))
}

fn parse_values(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("`{t}` is not a number")))
        })
        .collect()
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("METACONT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("METACONT_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn run(config: &Path, out: Option<&Path>) -> ExitCode {
    let (cfg, bytes) = match load(config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match runner::run(&cfg, &bytes, out) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).expect("summary serializes")
            );
            match &outcome.summary.error {
                Some(err) => {
                    eprintln!("{err}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => fail(&e),
    }
}

fn verify_cmd(level: &str, report: Option<&Path>, tamper: Option<&str>) -> ExitCode {
    let level: Level = match level.parse() {
        Ok(l) => l,
        Err(e) => return fail(&e),
    };
    let tamper: Option<Tamper> = match tamper.map(str::parse).transpose() {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let suite = verify::verify_with(level, tamper, |c| {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{status} {:<28} measured {:<24e} want {:<20} {:6.2}s",
            c.name, c.measured, c.criterion, c.seconds
        );
        if let Some(e) = &c.error {
            line.push_str(&format!("  error: {e}"));
        }
        println!("{line}");
    });
    let failed = suite.checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed in {:.1}s",
        suite.checks.len() - failed,
        suite.checks.len(),
        suite.seconds
    );
    if let Some(path) = report {
        let text = serde_json::to_string_pretty(&suite).expect("report serializes");
        if let Err(e) = metacont::io::write_atomic(path, text.as_bytes()) {
            return fail(&e);
        }
    }
    if suite.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn sweep(config: &Path, axis: &str, values: &str, jobs: Option<usize>, out: Option<&Path>) -> ExitCode {
    let (cfg, bytes) = match load(config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let values = match parse_values(values) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match runner::sweep(&cfg, &bytes, axis, &values, jobs, out) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            if summary.partial {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        return fail(&e);
    }
    match &cli.command {
        Command::Run { config, out } => run(config, out.as_deref()),
        Command::Verify { level, report, tamper } => verify_cmd(level, report.as_deref(), tamper.as_deref()),
        Command::Sweep {
            config,
            axis,
            values,
            jobs,
            out,
        } => sweep(config, axis, values, *jobs, out.as_deref()),
    }
}
