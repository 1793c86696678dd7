use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nocmap::experiments::{
    emit_csv, emit_records, emit_totals_csv, run_scenario, run_sweep, sibling_path, ExecOptions, ModelReport,
    ScenarioConfig,
};

/// Mesh NoC accelerator simulator and mapping experiment runner.
#[derive(Debug, Parser)]
#[command(name = "nocmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every layer of a scenario under each configured strategy.
    Run(CommonArgs),
    /// Run the scenario at every point of its sweep axis.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Metrics CSV path, overriding the one in the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write per-task travel-time records, one CSV per scenario and strategy.
    #[arg(long)]
    dump_records: bool,
    /// Also write per-flit traces, one file per layer and strategy.
    #[arg(long)]
    trace: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<nocmap::Error>()
                .map(nocmap::Error::exit_code)
                .unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let (args, sweep) = match cli.command {
        Command::Run(a) => (a, false),
        Command::Sweep(a) => (a, true),
    };
    let config = ScenarioConfig::load(&args.config)?;
    let output = args.output.clone().unwrap_or_else(|| config.output_path());
    let opts = ExecOptions {
        trace_dir: args.trace.then(|| sibling_path(&output, "trace")),
    };
    let reports = if sweep {
        run_sweep(&config, &opts)?
    } else {
        vec![run_scenario(&config, &opts)?]
    };
    write_outputs(&reports, &output, args.dump_records)?;
    for r in &reports {
        for t in &r.totals {
            println!(
                "{}\t{}\t{} cycles\t{:+.2}%",
                r.scenario, t.strategy, t.total_cycles, t.improvement_pct
            );
        }
    }
    Ok(())
}

fn write_outputs(reports: &[ModelReport], output: &Path, dump_records: bool) -> anyhow::Result<()> {
    emit_csv(reports, output)?;
    emit_totals_csv(reports, &sibling_path(output, "model.csv"))?;
    log::info!("wrote {}", output.display());
    if dump_records {
        let dir = sibling_path(output, "records");
        for r in reports {
            emit_records(r, &dir)?;
        }
        log::info!("wrote records under {}", dir.display());
    }
    Ok(())
}
