use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use radtrap::cli::{parse_config_with, run, Mode};
use radtrap::Error;

#[derive(Parser, Debug)]
#[command(name = "radtrap", version, about = "Radiation trapping and coherence decay in coherent Rb-87 vapor")]
struct Cli {
    /// simulate-analytic | simulate-multilevel | scan-density | fit | threshold-report
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(Mode::ALL.map(Mode::as_str)))]
    mode: String,
    /// Configuration file (`section.key = value unit` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `io.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one key, e.g. `--set "medium.length=2 cm"`.
    #[arg(long = "set", value_name = "KEY=VALUE UNIT")]
    overrides: Vec<String>,
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("RADTRAP_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("RADTRAP_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn execute(cli: &Cli) -> Result<(), Error> {
    configure_threads()?;
    let text = fs::read_to_string(&cli.config).map_err(|source| Error::Io { path: cli.config.clone(), source })?;
    let mode: Mode = cli.mode.parse()?;
    let cfg = parse_config_with(&text, Some(mode), &cli.overrides)?;
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(cfg.text("io.output_dir")));
    let output = run(&cfg, &out_dir)?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    for f in &output.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // A missing config file is a configuration problem, not a data one.
            let class = match &e {
                Error::Io { path, .. } if *path == cli.config => radtrap::ErrorClass::Config,
                _ => e.class(),
            };
            let record = serde_json::json!({
                "error": class.as_str(),
                "exit_code": class.exit_code(),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            ExitCode::from(class.exit_code() as u8)
        }
    }
}
