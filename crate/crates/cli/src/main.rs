use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bptree_cli::compare::{compare, CompareConfig};
use bptree_cli::heaviness::{heaviness, HeavinessConfig};
use bptree_cli::run::{run, RunConfig, Source};
use bptree_cli::track_error::{track_error, TrackErrorConfig};
use bptree_cli::{CliError, Emit};
use bptree_core::{BpTreeMode, StreamKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Heavy hitter sketches: experiments and stream queries.
#[derive(Debug, Parser)]
#[command(name = "bptree", version)]
struct Cli {
    /// Master seed; every random choice is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Standard,
    Fast,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximum F2 tracking error over a grid of tracker sizes.
    TrackError {
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value = "random", value_parser = parse_kind)]
        kind: StreamKind,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
        buckets: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        rows: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// HH2 success rate for each heaviness multiplier and stream kind.
    Heaviness {
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "start,end,random,blocks", value_parser = parse_kind)]
        kinds: Vec<StreamKind>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Update rate and state size of HH2 and the CountSketch baseline.
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "100000,1000000,10000000")]
        ns: Vec<u64>,
        #[arg(long, default_value_t = 64.0)]
        alpha: f64,
        #[arg(long, default_value = "random", value_parser = parse_kind)]
        kind: StreamKind,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Run BPTree over one stream and list the heavy hitters.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Generate a stream: `n,alpha,kind`.
    #[arg(long, value_parser = parse_gen, conflicts_with = "file", required_unless_present = "file")]
    gen: Option<(u64, f64, StreamKind)>,
    /// Read a stream of little-endian u64 records.
    #[arg(long)]
    file: Option<PathBuf>,
    /// The file holds one decimal item per line.
    #[arg(long, requires = "file")]
    text: bool,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = Mode::Standard)]
    mode: Mode,
    /// Compare the output with exact frequencies.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    save_state: Option<PathBuf>,
    /// Continue from a saved sketch; its parameters override --epsilon, --delta and --mode.
    #[arg(long)]
    load_state: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<StreamKind, String> {
    s.parse()
        .map_err(|e: bptree_core::SketchError| e.to_string())
}

fn parse_gen(s: &str) -> Result<(u64, f64, StreamKind), String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [n, alpha, kind] = parts[..] else {
        return Err(format!("expected n,alpha,kind, got {s:?}"));
    };
    let n = n.trim().parse().map_err(|e| format!("n: {e}"))?;
    let alpha = alpha.trim().parse().map_err(|e| format!("alpha: {e}"))?;
    Ok((n, alpha, parse_kind(kind)?))
}

fn emit<R: Emit>(report: R, format: Format, out: Option<&PathBuf>) -> Result<(), CliError> {
    let body = match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv()?,
    };
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}")))?,
    }
    eprint!("{}", report.summary());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (seed, format, out) = (cli.seed, cli.format, cli.out.as_ref());
    let result = match cli.command {
        Command::TrackError {
            n,
            alpha,
            kind,
            buckets,
            rows,
            trials,
        } => track_error(
            &TrackErrorConfig {
                n,
                alpha,
                kind,
                buckets,
                rows,
                trials,
            },
            seed,
        )
        .and_then(|r| emit(r, format, out)),
        Command::Heaviness {
            n,
            alphas,
            kinds,
            trials,
        } => heaviness(
            &HeavinessConfig {
                n,
                alphas,
                kinds,
                trials,
            },
            seed,
        )
        .and_then(|r| emit(r, format, out)),
        Command::Compare {
            ns,
            alpha,
            kind,
            trials,
        } => compare(
            &CompareConfig {
                ns,
                alpha,
                kind,
                trials,
            },
            seed,
        )
        .and_then(|r| emit(r, format, out)),
        Command::Run(args) => {
            let source = match (args.gen, args.file) {
                (Some((n, alpha, kind)), _) => Source::Gen { n, alpha, kind },
                (None, Some(path)) => Source::File {
                    path,
                    text: args.text,
                },
                (None, None) => unreachable!("clap requires one source"),
            };
            let config = RunConfig {
                source,
                epsilon: args.epsilon,
                delta: args.delta,
                mode: match args.mode {
                    Mode::Standard => BpTreeMode::Standard,
                    Mode::Fast => BpTreeMode::Fast,
                },
                oracle: args.oracle,
                save_state: args.save_state,
                load_state: args.load_state,
            };
            run(&config, seed).and_then(|r| emit(r, format, out))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
