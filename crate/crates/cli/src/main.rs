//! `ffwb`: run one analysis of a frustration-free system from a JSON config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ffwb::error::{Error, Result};
use ffwb::models::ModelSpec;
use ffwb::runner::{exit_code, list_fixtures, run_with_jobs, Analysis, RunConfig, RunOptions, RunOutcome};

const AFTER_HELP: &str = "\
CSV columns per analysis:
  verify-ff   inner,outer,residual
  spectra     window,epsilon,min,gap,corank
  ltqo        window,window_size,observable_id,norm,corank
  boundary    n,gamma_size,boundary_dim,stabilized,trace_estimate,lower_bound,
              lto4_injective,consistent,invariant_dim,softest_constraint,
              commutant_dim,commutant_expected
  trace       window,n,trace_estimate,lower_bound
  hereditary  depth,window,unit_rank,system_distance,property_f_residual

Exit status: 0 ok, 1 verification failed, 2 bad input or runtime error.";

#[derive(Parser, Debug)]
#[command(name = "ffwb", version, about = "Frustration-free systems workbench", after_help = AFTER_HELP)]
struct Cli {
    /// JSON run config.
    #[arg(long, value_name = "PATH", conflicts_with = "fixture")]
    config: Option<PathBuf>,
    /// Run a bundled fixture with default settings instead of a config.
    #[arg(long, value_name = "NAME")]
    fixture: Option<String>,
    /// verify-ff, spectra, ltqo, boundary, trace or hereditary.
    #[arg(long, value_name = "NAME")]
    analysis: Option<String>,
    /// Output directory (default: the config's `output`, else ./ffwb-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Overrides the config tolerance.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Leave out the generation header of the CSV.
    #[arg(long)]
    no_timestamp: bool,
    /// Print the bundled fixtures and exit.
    #[arg(long)]
    list_fixtures: bool,
}

fn execute(cli: &Cli) -> Result<RunOutcome> {
    let config = match (&cli.config, &cli.fixture) {
        (Some(path), _) => RunConfig::from_path(path)?,
        (None, Some(name)) => RunConfig::for_model(ModelSpec::Fixture { name: name.clone() }),
        (None, None) => return Err(Error::Config("give --config PATH or --fixture NAME".into())),
    };
    let analysis = cli.analysis.as_deref().map(str::parse::<Analysis>).transpose()?;
    let options = RunOptions { analysis, out: cli.out.clone(), tol: cli.tol, no_timestamp: cli.no_timestamp };
    run_with_jobs(&config, &options, cli.jobs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_fixtures {
        print!("{}", list_fixtures());
        return ExitCode::SUCCESS;
    }
    let result = execute(&cli);
    match &result {
        Ok(outcome) => {
            let s = &outcome.summary;
            eprintln!("{}: {}", s.analysis, if s.ok { "ok" } else { "FAILED" });
            for (k, v) in &s.headline {
                eprintln!("  {k} = {v}");
            }
            eprintln!("wrote {} and {}", outcome.csv_path.display(), outcome.json_path.display());
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
