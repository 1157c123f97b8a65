use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use phimod_core::cli::{self, OutputFormat, Overrides};
use phimod_core::Error;

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Kv,
}

/// Runs a command on a problem file and prints a deterministic report.
#[derive(Parser)]
#[command(name = "phimod", version)]
struct Args {
    /// check-height, dual, prolong, tangent, absorb-demo, classify, fiber, fiber-graph, breuil or lift
    command: String,
    /// Problem file.
    file: PathBuf,
    /// u-adic precision M, replacing the file's value.
    #[arg(long)]
    precision: Option<i64>,
    /// Torsion level N, replacing the file's value.
    #[arg(long)]
    torsion: Option<u32>,
    /// Search bound, replacing the file's `bound`.
    #[arg(long)]
    bound: Option<i64>,
    /// File holding an integer seed (or the integer itself).
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Where fiber-graph writes its node/edge list (default: appended to the report).
    #[arg(long)]
    graph: Option<PathBuf>,
}

fn read_seed(s: &str) -> Result<u64, Error> {
    let text = match std::fs::read_to_string(s) {
        Ok(t) => t,
        Err(_) => s.to_string(),
    };
    text.trim().parse().map_err(|_| Error::pre(format!("seed `{}` is not an unsigned integer", text.trim())))
}

fn execute(args: &Args) -> Result<String, Error> {
    let text = std::fs::read_to_string(&args.file).map_err(|e| Error::pre(format!("cannot read {}: {e}", args.file.display())))?;
    let mut pf = cli::parse_with(&text, &Overrides { precision: args.precision, torsion: args.torsion })?;
    if let Some(b) = args.bound {
        pf.options.bound = Some(b);
    }
    if let Some(s) = &args.seed {
        pf.options.seed = Some(read_seed(s)?);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.parallel.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let report = pool.install(|| cli::run(&args.command, &pf))?;
    let fmt = match args.format {
        Format::Text => OutputFormat::Text,
        Format::Kv => OutputFormat::Kv,
    };
    let mut out = report.render(fmt);
    if let Some(g) = &report.graph {
        match &args.graph {
            Some(path) => std::fs::write(path, g).map_err(|e| Error::pre(format!("cannot write {}: {e}", path.display())))?,
            None => out.push_str(g),
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
