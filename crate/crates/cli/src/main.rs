//! `tht`: command-line front end for the truncated Hilbert transform toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tht_core::report::{self, RunConfig, ToolError};

#[derive(Parser)]
#[command(name = "tht", version, about = "Spectral analysis of the truncated Hilbert transform with overlap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-integral constants K-, K+ and the interval identity.
    Kvalues(Common),
    /// Singular values of the discretized operator.
    Svd(Common),
    /// Numerical tails against the asymptotic laws.
    CompareValues(Common),
    /// Numerical singular vector against the asymptotic singular function.
    CompareFunction(Common),
    /// Run every check and summarize.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Index for compare-function.
    #[arg(long)]
    n: Option<usize>,
    /// Grid sizes as T,S.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// SVD strategy ("golub-kahan" or "refined").
    #[arg(long)]
    svd: Option<String>,
    /// Kernel scheme ("midpoint" or "flipped-sign").
    #[arg(long)]
    kernel: Option<String>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (t, r) = s.split_once(',').ok_or_else(|| format!("expected T,S, got '{s}'"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok((p(t)?, p(r)?))
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, ToolError> {
        let mut run = report::load_or_default(self.config.as_deref())?;
        if let Some(o) = &self.out {
            run.output_dir = o.clone();
        }
        if let Some(n) = self.n {
            run.n = n;
        }
        if let Some((t, s)) = self.grid {
            run.n_target = t;
            run.n_source = s;
        }
        if let Some(t) = self.tol {
            run.quad_tol = t;
        }
        if let Some(s) = self.seed {
            run.seed = s;
        }
        if let Some(s) = &self.svd {
            run.svd_solver = s.clone();
        }
        if let Some(k) = &self.kernel {
            run.kernel = k.clone();
        }
        run.validate()?;
        if !run.grid_is_aligned() {
            eprintln!(
                "warning: grid {}x{} does not put target points half way between source points; \
                 the discretization is inaccurate",
                run.n_target, run.n_source
            );
        }
        Ok(run)
    }
}

fn execute(cmd: &Command) -> Result<bool, ToolError> {
    match cmd {
        Command::Kvalues(c) => {
            let run = c.run_config()?;
            println!("{}", report::to_json(&run, &report::cmd_kvalues(&run)?));
            Ok(true)
        }
        Command::Svd(c) => {
            let run = c.run_config()?;
            let svd = report::cmd_svd(&run)?;
            let trusted = svd.trusted.iter().filter(|t| **t).count();
            println!(
                "{} singular values ({} trusted, solver {}) written to {}",
                svd.len(),
                trusted,
                svd.solver,
                run.output_dir.join("singular_values.csv").display()
            );
            Ok(true)
        }
        Command::CompareValues(c) => {
            let run = c.run_config()?;
            println!("{}", report::to_json(&run, &report::cmd_compare_values(&run)?));
            Ok(true)
        }
        Command::CompareFunction(c) => {
            let run = c.run_config()?;
            let cmp = report::cmd_compare_function(&run)?;
            println!("cosine similarity {:.6}", cmp.cosine_g);
            println!("{}", report::to_json(&run, &cmp));
            Ok(true)
        }
        Command::Verify(c) => {
            let run = c.run_config()?;
            let rep = report::cmd_verify(&run)?;
            for ch in &rep.checks {
                eprintln!("{:<24} {}", ch.name, if ch.pass { "pass" } else { "FAIL" });
            }
            println!("{}", report::to_json(&run, &rep));
            Ok(rep.all_pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        // a completed verify run with failing checks
        Ok(false) => ExitCode::from(5),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
