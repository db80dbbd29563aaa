use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use zhpipe_cli::config::PipelineConfig;
use zhpipe_cli::pipeline::Pipeline;
use zhpipe_cli::{CliError, Stage};

/// Build a Chinese pretraining corpus: ingest, clean, filter,
/// deduplicate, evaluate and mix raw text sources.
#[derive(Debug, Parser)]
#[command(name = "zhpipe", version, about)]
struct Args {
    /// Stage to run; `all` executes ingest through mix plus stats.
    #[arg(value_enum)]
    stage: Stage,

    /// Pipeline configuration file (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Override the configured output directory.
    #[arg(long)]
    stage_dir: Option<PathBuf>,

    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the configured worker count.
    #[arg(long)]
    workers: Option<usize>,

    /// Write the run report (JSON) here instead of <output_dir>/report.json.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(args: Args) -> Result<(), CliError> {
    let (mut config, base) = PipelineConfig::load(&args.config)?;
    if let Some(dir) = args.stage_dir {
        config.io.output_dir = dir;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }

    let pipeline = Pipeline::new(config, base);
    let report = pipeline.run(args.stage)?;

    print!("{}", report.render_text());
    if let Some(eval) = &report.eval {
        println!("[eval] {eval}");
    }
    if let Some(mix) = &report.mix {
        if let Some(weights) = mix.get("realized_weights") {
            println!("[mix] realized_weights={weights}");
        }
        if let Some(warnings) = mix.get("warnings").and_then(|w| w.as_array()) {
            for warning in warnings {
                println!("[mix] warning: {warning}");
            }
        }
    }

    let report_path = args
        .report
        .unwrap_or_else(|| pipeline.out_dir.join("report.json"));
    if let Some(parent) = report_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&report_path, json).map_err(|e| CliError::io(&report_path, e))?;
    Ok(())
}
