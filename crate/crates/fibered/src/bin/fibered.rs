//! Batch front door: `fibered list` shows the scenario registry,
//! `fibered run` executes scenarios and writes reports. Exit status is 0
//! only when no verdict failed; configuration problems exit with 2.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fibered::cli::{registry, run_with_config, RunConfig, RunDoc};

#[derive(Parser)]
#[command(
    name = "fibered",
    about = "Solve and audit quasilinear elliptic systems in fibered media"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List known scenarios.
    List {
        /// Only scenarios carrying this tag.
        #[arg(long)]
        tag: Option<String>,
    },
    /// Run scenarios and write reports.
    Run {
        /// JSON run configuration; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario id; may be repeated. All scenarios when omitted.
        #[arg(long)]
        scenario: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed fixing every randomized audit.
        #[arg(long)]
        seed: Option<u64>,
        /// Concurrent scenario workers.
        #[arg(long)]
        threads: Option<usize>,
        /// Uniform grid refinement multiplier.
        #[arg(long)]
        grid_scale: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::List { tag } => {
            for s in registry() {
                if let Some(t) = &tag {
                    if !s.tags.contains(&t.as_str()) {
                        continue;
                    }
                }
                println!("{:<24} {} [{}]", s.id, s.description, s.source);
            }
            ExitCode::SUCCESS
        }
        Cmd::Run {
            config,
            scenario,
            out,
            seed,
            threads,
            grid_scale,
        } => {
            let base = match config {
                Some(path) => {
                    let text = match std::fs::read_to_string(&path) {
                        Ok(t) => t,
                        Err(e) => {
                            eprintln!("error: cannot read {}: {e}", path.display());
                            return ExitCode::from(2);
                        }
                    };
                    let doc: RunDoc = match serde_json::from_str(&text) {
                        Ok(d) => d,
                        Err(e) => {
                            eprintln!("error: malformed configuration: {e}");
                            return ExitCode::from(2);
                        }
                    };
                    match RunConfig::from_doc(&doc) {
                        Ok(c) => c,
                        Err(e) => {
                            eprintln!("error: {e}");
                            return ExitCode::from(2);
                        }
                    }
                }
                None => RunConfig::default(),
            };
            let mut cfg = base;
            if !scenario.is_empty() {
                cfg.scenarios = scenario;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = threads {
                if t == 0 {
                    eprintln!("error: --threads must be at least 1");
                    return ExitCode::from(2);
                }
                cfg.threads = t;
            }
            if let Some(g) = grid_scale {
                if g.is_nan() || g <= 0.0 {
                    eprintln!("error: --grid-scale must be positive");
                    return ExitCode::from(2);
                }
                cfg.grid_scale = g;
            }
            if let Err(e) = cfg.validate() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            match run_with_config(&cfg) {
                Ok(report) => {
                    for (id, sc) in &report.scenarios {
                        for (name, entry) in &sc.verdicts {
                            println!("{id}/{name}: {:?} ({})", entry.verdict, entry.detail);
                        }
                    }
                    println!("report: {}", cfg.out.join("report.json").display());
                    println!("digest: {}", report.digest);
                    if report.has_failures() {
                        ExitCode::from(1)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
