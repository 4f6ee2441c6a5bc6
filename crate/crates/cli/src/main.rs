use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skelnav_cli::{
    cmd_eval, cmd_plot, cmd_robustness, cmd_run, demo, format_robustness, write_atomic, CliError,
    CliResult, DegreeArg, Mode, Protocol, RunManifest,
};

#[derive(Parser)]
#[command(name = "skelnav", version, about = "Skeleton-waypoint navigation in a synthetic 2D world")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Map bundle directory (world.pgm + world.json).
    #[arg(long)]
    map: PathBuf,
    /// Episode ids, comma separated. Default: all.
    #[arg(long, value_delimiter = ',')]
    episodes: Vec<String>,
    #[arg(long, value_enum, default_value = "oracle")]
    mode: Mode,
    #[arg(long, default_value_t = 12)]
    views: usize,
    /// Displace the agent once mid-episode by this many metres.
    #[arg(long)]
    perturb_magnitude: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "deg1")]
    degree_config: DegreeArg,
    #[arg(long, default_value_t = 6)]
    min_steps: usize,
    /// Parallel episodes; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Oracle mode only: chance of a random waypoint choice per step.
    #[arg(long, default_value_t = 0.0)]
    choice_noise: f64,
    /// JSON RemoteConfig for remote mode.
    #[arg(long)]
    remote_config: Option<PathBuf>,
    /// Tape directory for replay mode.
    #[arg(long)]
    tapes: Option<PathBuf>,
}

impl From<RunArgs> for RunManifest {
    fn from(a: RunArgs) -> Self {
        RunManifest {
            map: a.map,
            episodes: a.episodes,
            mode: a.mode,
            views: a.views,
            perturb_magnitude: a.perturb_magnitude,
            seed: a.seed,
            out: a.out,
            degree_config: a.degree_config,
            min_steps: a.min_steps,
            workers: a.workers,
            choice_noise: a.choice_noise,
            remote_config: a.remote_config,
            tapes: a.tapes,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write one JSONL record per episode.
    Run(RunArgs),
    /// Compute a metric report from records.
    Eval {
        #[arg(long)]
        map: PathBuf,
        /// Record files or directories of records.
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a baseline and a degraded condition and compare them.
    Robustness {
        #[arg(long, value_enum)]
        protocol: Protocol,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Draw one record as SVG.
    Plot {
        #[arg(long)]
        map: PathBuf,
        record: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the demo office bundle.
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn emit(out: Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(&p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let summary = cmd_run(&args.into())?;
            for p in &summary.paths {
                println!("{}", p.display());
            }
            let failed = summary.failed();
            if !failed.is_empty() {
                let detail: Vec<String> = summary
                    .records
                    .iter()
                    .filter_map(|r| r.header.failed.as_ref().map(|f| format!("{}: {f}", r.header.episode_id)))
                    .collect();
                return Err(CliError::Backend(format!(
                    "{} episode(s) did not complete\n{}",
                    failed.len(),
                    detail.join("\n")
                )));
            }
            Ok(())
        }
        Command::Eval { map, records, out } => {
            let report = cmd_eval(&records, &map)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(out, &(json + "\n"))
        }
        Command::Robustness { protocol, run } => {
            let report = cmd_robustness(&run.into(), protocol)?;
            print!("{}", format_robustness(&report));
            Ok(())
        }
        Command::Plot { map, record, out } => emit(out, &cmd_plot(&record, &map)?),
        Command::Demo { out, episodes, seed } => {
            demo::office_bundle(episodes, seed)
                .save(&out)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            println!("{}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
