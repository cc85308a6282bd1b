use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use symgame::config::{parse_config, parse_real, DiagnosticsLevel, RunConfig};
use symgame::output::{execute, report, sweep, sweep_table, write_solution_csv, RunArtifacts};
use symgame::solver::SolverVariant;

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Fppi,
    Howard,
}

#[derive(Clone, Copy, ValueEnum)]
enum Diagnostics {
    Off,
    Basic,
    Full,
}

/// Compute symmetric Nash equilibria of two-player impulse games.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV and report files (overrides [output] dir).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run a refinement sweep. Uses the [sweep] section unless a
    /// comma-separated list of steps is given.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    sweep: Option<String>,
    #[arg(long, value_enum)]
    solver: Option<Solver>,
    #[arg(long, value_enum)]
    diagnostics: Option<Diagnostics>,
    /// Seed for sampled matrix checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn write_run(dir: &Path, stem: &str, art: &RunArtifacts, precision: usize) -> symgame::Result<()> {
    let csv = BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?);
    write_solution_csv(csv, &art.disc, &art.outcome, precision)?;
    fs::write(dir.join(format!("{stem}_report.txt")), report(&art.summary))?;
    Ok(())
}

fn sweep_steps(arg: &str, cfg: &RunConfig) -> Result<Vec<f64>, String> {
    if arg.is_empty() {
        return cfg
            .sweep
            .clone()
            .ok_or_else(|| "--sweep needs a list of steps or a [sweep] section".to_string());
    }
    arg.split(',').map(parse_real).collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", cli.config.display())),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(s) = cli.solver {
        cfg.solver.variant = match s {
            Solver::Fppi => SolverVariant::Fppi,
            Solver::Howard => SolverVariant::Howard,
        };
    }
    if let Some(d) = cli.diagnostics {
        cfg.output.diagnostics = match d {
            Diagnostics::Off => DiagnosticsLevel::Off,
            Diagnostics::Basic => DiagnosticsLevel::Basic,
            Diagnostics::Full => DiagnosticsLevel::Full,
        };
    }
    let dir = cli.output.or(cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = fs::create_dir_all(&dir) {
        return fail(format!("{}: {e}", dir.display()));
    }
    let precision = cfg.output.precision;

    let Some(arg) = cli.sweep else {
        let art = match execute(&cfg, cfg.grid.h, cli.seed) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        if let Err(e) = write_run(&dir, "solution", &art, precision) {
            return fail(e);
        }
        print!("{}", report(&art.summary));
        return ExitCode::from(art.outcome.kind.exit_code() as u8);
    };

    let hs = match sweep_steps(&arg, &cfg) {
        Ok(hs) => hs,
        Err(e) => return fail(e),
    };
    let mut rows = Vec::new();
    let mut code = 0;
    for (k, res) in sweep(&cfg, &hs, cli.seed).into_iter().enumerate() {
        let art = match res {
            Ok(a) => a,
            Err(e) => return fail(format!("h = {}: {e}", hs[k])),
        };
        if let Err(e) = write_run(&dir, &format!("solution_{k}"), &art, precision) {
            return fail(e);
        }
        if code == 0 {
            code = art.outcome.kind.exit_code();
        }
        rows.push(art.summary);
    }
    let table = sweep_table(&rows);
    if let Err(e) = fs::write(dir.join("sweep.csv"), &table) {
        return fail(e);
    }
    print!("{table}");
    ExitCode::from(code as u8)
}
