use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use decoherence_cli::{emit, parse_config, run, CliError, Format, EXIT_TRUNCATION};

const COLUMNS_HELP: &str = "\
CSV columns by task:
  golden-rule     from,to,energy_change,rate,reason
  weak-coupling   from,to,released,rate,reason
  minimal-scan    splitting,rate
  floquet         from,to,n,frequency,weight
  bangbang        from,to,rate,reason
  dfs             generators,hilbert_dim,N,dimension,expected,max_residual
  subsystems      block,multiplicity,dimension,decoherence_free
  zeno-limit      projection,steps,error
  zeno-threshold  from,to,threshold_gap,threshold,rate,reason
  three-level     pump_scale,pump_term,epsilon_minus,threshold_gap,threshold,rate,reason

A rate cell holds a nonnegative number or the word `forbidden`; the reason
column then says why (matrix_element_zero or energy_conservation). Reals are
written with 17 significant digits. Lines starting with `#` carry the task,
version, config digest, warnings and notes.

Exit codes: 0 success, 2 config error, 3 numerical-structure error,
4 truncation not converged (the table is still written).";

#[derive(Parser)]
#[command(name = "decoherence", version, about = "Decoherence rates, decoherence-free subspaces and Zeno suppression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis described by a TOML config.
    #[command(after_long_help = COLUMNS_HELP)]
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long, action = clap::ArgAction::Count)]
        verbose: u8,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Text,
}

fn execute(
    config: &PathBuf,
    format: OutputFormat,
    out: Option<&PathBuf>,
    seed: Option<u64>,
) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::Parse(format!("{}: {e}", config.display())))?;
    let mut parsed = parse_config(&text)?;
    if let Some(seed) = seed {
        parsed.config.seed = seed;
    }
    let table = run(&parsed)?;
    if let Some(meta) = &table.metadata {
        log::info!("config sha256 {}", meta.config_digest);
        if let Some(t) = meta.elapsed {
            log::info!("{} finished in {:.3} s", meta.task, t.as_secs_f64());
        }
    }
    let format = match format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Text => Format::Text,
    };
    let document = emit(&table, format);
    match out {
        Some(path) => std::fs::write(path, document)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?,
        None => print!("{document}"),
    }
    Ok(!table.truncation_unconverged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, format, out, seed, verbose } = cli.command;
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match execute(&config, format, out.as_ref(), seed) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: results changed under a larger Fock truncation");
            ExitCode::from(EXIT_TRUNCATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
