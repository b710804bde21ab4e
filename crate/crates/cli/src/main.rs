use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lastgen_cli::{execute, parse_config, summary_table, Overrides, SCHEMA_VERSION};

/// Run tie-breaking experiments and write gamma.csv and bounds.csv.
#[derive(Debug, Parser)]
#[command(name = "lastgen", version)]
struct Args {
    /// TOML experiment file; defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; cell i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Fork-choice rule to sweep (proposed, random, first_seen). Repeatable.
    #[arg(long = "rule")]
    rules: Vec<String>,
    /// Honest clock offset standard deviations, comma separated.
    #[arg(long, value_delimiter = ',')]
    offset_std: Option<Vec<f64>>,
    /// Offset bounds delta_O_i, comma separated.
    #[arg(long, value_delimiter = ',')]
    delta_o: Option<Vec<f64>>,
    /// Propagation bound delta_B_i.
    #[arg(long)]
    delta_b: Option<f64>,
    /// Attacker clock offsets, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a_t: Option<Vec<f64>>,
    /// Tie episodes per cell.
    #[arg(long)]
    ties: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
        rules: args.rules,
        offset_std: args.offset_std,
        delta_o: args.delta_o,
        delta_b: args.delta_b,
        a_t: args.a_t,
        ties: args.ties,
        jobs: args.jobs,
    };
    let result = parse_config(args.config.as_deref(), &overrides).and_then(|plan| {
        eprintln!("{} cells, schema v{SCHEMA_VERSION}, output {}", plan.n_cells(), plan.out_dir.display());
        execute(&plan)
    });
    match result {
        Ok(outcome) => {
            print!("{}", summary_table(&outcome.rows));
            println!("wrote {} and {}", outcome.gamma_csv.display(), outcome.bounds_csv.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lastgen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
