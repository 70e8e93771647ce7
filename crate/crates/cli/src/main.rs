use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use adeptlab::harness::{
    run_game, sweep, write_rows, write_table, write_transcript, ExperimentConfig, Format, Summary,
    SweepConfig,
};
use adeptlab::reductions::NumericMode;
use adeptlab::verify::{run_suite, Scale, Suite};
use adeptlab::Error;

/// Default directory for output files when no path is given.
const OUT_DIR_VAR: &str = "ADEPTLAB_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "adeptlab", version, about = "Online classification with offline oracles: simulations and checks")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play the games described by an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed; replicates use seed, seed+1, ...
        #[arg(long)]
        seed: Option<u64>,
        /// Transcript path. Defaults to the config's output, then $ADEPTLAB_OUT_DIR.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Transcript format; inferred from the extension when absent.
        #[arg(long, value_parser = parse_format)]
        format: Option<Format>,
        #[arg(long, value_parser = parse_numeric)]
        numeric: Option<NumericMode>,
    },
    /// Run every cell of a grid and write one aggregate row per cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Aggregate table path; per-replicate rows go next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<Format>,
        #[arg(long, value_parser = parse_numeric)]
        numeric: Option<NumericMode>,
    },
    /// Run a verification suite, or `all`.
    Verify {
        suite: String,
        /// Reduced grids and seed counts.
        #[arg(long)]
        quick: bool,
    },
    /// Print VC and Littlestone dimensions of a class, or the reference table.
    Dims {
        /// Experiment config or bare class spec.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_numeric(s: &str) -> Result<NumericMode, String> {
    match s {
        "log" => Ok(NumericMode::Log),
        "exact" => Ok(NumericMode::Exact),
        other => Err(format!("unknown numeric mode {other:?} (log or exact)")),
    }
}

fn default_out(name: &str) -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_VAR).map(|dir| PathBuf::from(dir).join(name))
}

/// `dir/stem.csv` -> `dir/stem<suffix>.<ext>`.
fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn print_summary(s: &Summary) {
    println!(
        "seed {}: loss {} vs comparator {} -> regret {} (expected {:.3}); queries {} over {} rounds; max active {}; {:.1} ms",
        s.seed,
        s.learner_loss,
        s.comparator_loss,
        s.regret,
        s.expected_regret,
        s.raw_queries,
        s.query_rounds,
        s.max_active,
        s.wall_ms
    );
}

fn run(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    numeric: Option<NumericMode>,
    quiet: bool,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = numeric {
        cfg.numeric = n;
    }
    cfg.resolve()?;
    let out = out
        .or_else(|| cfg.output.clone())
        .or_else(|| default_out(&format!("run-{}.{}", cfg.seed, format.unwrap_or_default().extension())));
    let format = format.unwrap_or_else(|| out.as_deref().map_or(Format::Csv, Format::from_path));
    let mut summaries = Vec::with_capacity(cfg.replicates);
    for r in 0..cfg.replicates as u64 {
        let seed = cfg.seed.wrapping_add(r);
        let output = run_game(&cfg, seed)?;
        if let Some(path) = &out {
            let path = if cfg.replicates == 1 {
                path.clone()
            } else {
                sibling(path, &format!("-seed{seed}"), format.extension())
            };
            write_transcript(&path, &output.transcript, format)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        if !quiet {
            print_summary(&output.summary);
        }
        summaries.push(output.summary);
    }
    if let Some(path) = &out {
        write_table(&sibling(path, ".summary", "csv"), &summaries, Format::Csv)?;
    }
    Ok(())
}

fn run_sweep(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    numeric: Option<NumericMode>,
    quiet: bool,
) -> Result<()> {
    let mut cfg = SweepConfig::load(config)?;
    if let Some(s) = seed {
        cfg.base.seed = s;
    }
    if let Some(n) = numeric {
        cfg.base.numeric = n;
    }
    let bad: Vec<String> = cfg
        .cells()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.resolve().err().map(|e| format!("cell {i} ({}): {e}", c.learner.label())))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Config(bad.join("; ")).into());
    }
    let result = sweep(&cfg);
    let out = out.or_else(|| default_out("sweep.csv"));
    let format = format.unwrap_or_else(|| out.as_deref().map_or(Format::Csv, Format::from_path));
    match &out {
        Some(path) => {
            write_table(path, &result.cells, format)?;
            let runs: Vec<Summary> = result.runs.iter().map(|(_, s)| s.clone()).collect();
            write_table(&sibling(path, ".runs", format.extension()), &runs, format)?;
        }
        None => write_rows(&result.cells, std::io::stdout().lock(), format)?,
    }
    if !quiet && out.is_some() {
        for c in &result.cells {
            println!(
                "T={} {}: regret {:.2} +/- {:.2}, queries {:.0}, max active {}, ensemble size {}",
                c.horizon, c.learner, c.mean_expected_regret, c.se_expected_regret, c.mean_raw_queries, c.max_active, c.bdpss_experts
            );
        }
    }
    let failed = result.failed_cells();
    if failed > 0 {
        return Err(Error::Invariant(format!("{failed} sweep cell(s) failed")).into());
    }
    Ok(())
}

fn verify(name: &str, quick: bool, quiet: bool) -> Result<()> {
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![name.parse()?]
    };
    let scale = if quick { Scale::Quick } else { Scale::Full };
    let mut failed = Vec::new();
    for suite in suites {
        let report = run_suite(suite, scale);
        if !report.passed() {
            failed.push(report.name.clone());
        }
        if quiet && report.passed() {
            continue;
        }
        println!("{report}");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verify(failed.join(", ")).into())
    }
}

fn dims(config: Option<&Path>) -> Result<()> {
    let Some(path) = config else {
        let report = run_suite(Suite::Dims, Scale::Full);
        println!("{report}");
        return if report.passed() {
            Ok(())
        } else {
            Err(Error::Verify("dims".into()).into())
        };
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let class = ExperimentConfig::class_from_json(&text)?.build()?;
    println!("VC {}", class.vc_dimension()?);
    println!("Littlestone {}", class.littlestone_dimension()?);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.downcast_ref::<Error>().map_or(2, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet { "error" } else { "warn" }))
        .init();
    let outcome = match cli.command {
        Command::Run { config, seed, out, format, numeric } => run(&config, seed, out, format, numeric, cli.quiet),
        Command::Sweep { config, seed, out, format, numeric } => run_sweep(&config, seed, out, format, numeric, cli.quiet),
        Command::Verify { suite, quick } => verify(&suite, quick, cli.quiet),
        Command::Dims { config } => dims(config.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
