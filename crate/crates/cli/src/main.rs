use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jetlag::spaces::{fixtures, BUILTINS};
use jetlag_cli::config::DumpFamily;
use jetlag_cli::{load_config, report, run_report, Overrides, Status};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "jetlag", version, about = "Geometry and field-identity checks on multi-time jet bundles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured checks and write a JSON report.
    Run {
        config: PathBuf,
        /// Report path; defaults to the config's `output`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override `points.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Extra component families to dump, comma separated.
        #[arg(long, value_delimiter = ',')]
        dump: Vec<DumpFamily>,
    },
    /// Load and validate a configuration without running checks.
    Validate { config: PathBuf },
    /// List the built-in spaces, their parameters and the named fixtures.
    Spaces,
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { config, out, seed, jobs, dump } => {
            let cfg = match load_config(&config, &Overrides { seed, dump }) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let rep = run_report(&cfg, jobs);
            for c in &rep.checks {
                eprintln!("{:<13} {:<7} max_abs {:.3e}  max_rel {:.3e}", c.name.to_string(), format!("{:?}", c.status).to_lowercase(), c.max_abs, c.max_rel);
            }
            let text = match report::to_json(&rep) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot serialize report: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match out.or_else(|| cfg.raw.output.clone()) {
                Some(path) => {
                    if let Err(e) = report::write_atomic(&path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(EXIT_CONFIG);
                    }
                }
                None => print!("{text}"),
            }
            if rep.summary.status == Status::Fail {
                ExitCode::from(EXIT_FAIL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Cmd::Validate { config } => match load_config(&config, &Overrides::default()) {
            Ok(c) => {
                let checks: Vec<String> = c.checks.iter().map(|(k, t)| format!("{k} ({t:e})")).collect();
                println!(
                    "ok: space {} at p = {}, n = {}; {} points; checks: {}",
                    c.space_name,
                    c.dims.p,
                    c.dims.n,
                    c.points.len(),
                    if checks.is_empty() { "none".into() } else { checks.join(", ") }
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Cmd::Spaces => {
            for b in BUILTINS {
                println!("{}: {}", b.name, b.summary);
                for (k, v) in b.params {
                    println!("    {k:<11} {v}");
                }
            }
            let names: Vec<&str> = fixtures::all(2, 2).iter().map(|(n, _)| *n).collect();
            println!("\nfixtures (\"space\": \"<name>\", any p, n): flat, {}", names.join(", "));
            ExitCode::SUCCESS
        }
    }
}
