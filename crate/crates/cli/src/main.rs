use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ualign_cli::{
    cmd_certify, cmd_reproduce, cmd_solve, cmd_sweep, resolve_engine, ExperimentConfig, HarnessError, Report,
    Result, Target,
};
use ualign_core::{Algorithm, InstanceSpec, StepSize};

#[derive(Parser)]
#[command(name = "ualign", version, about = "Certify k-sample alignment of self-play policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver on every (prompt, k) and certify it at every l.
    Solve(GridArgs),
    /// Certify a base policy read from a JSON file.
    Certify {
        #[command(flatten)]
        grid: GridArgs,
        /// JSON array of probabilities, or {"probs": [...]}.
        #[arg(long)]
        policy: PathBuf,
    },
    /// Re-derive one of the analytic claims numerically.
    Reproduce {
        /// prop-2.2, prop-3.2, prop-3.3, prop-4.1, thm-4.3, prop-4.3 or thm-4.4
        target: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Certified rate across k and iteration counts.
    Sweep(GridArgs),
}

#[derive(Args)]
struct GridArgs {
    /// JSON experiment document; flags given alongside it override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// uniform-pl:K, uniform-rankings:M, majority:EPS, condorcet-cycle or custom:PATH
    #[arg(long)]
    instance: Option<String>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    l: Vec<usize>,
    /// mwu, pga or lp-nlhf
    #[arg(long)]
    algo: Option<String>,
    /// Iteration count; a comma-separated list for sweep.
    #[arg(long, value_delimiter = ',')]
    iters: Vec<usize>,
    /// "auto" or a positive step size.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Enumeration cap in multiset-pair terms (default from UALIGN_CAP, else 1e7).
    #[arg(long)]
    cap: Option<u64>,
}

impl GridArgs {
    fn into_config(self, sweep: bool) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => {
                let instance = self
                    .instance
                    .as_deref()
                    .ok_or_else(|| HarnessError::usage("instance", "--instance or --config is required"))?;
                ExperimentConfig::new(parse_field("instance", instance)?, Vec::new())
            }
        };
        if let (Some(s), Some(_)) = (&self.instance, &self.config) {
            cfg.instance = parse_field::<InstanceSpec>("instance", s)?;
        }
        if !self.k.is_empty() {
            cfg.k = self.k;
        }
        if !self.l.is_empty() {
            cfg.l = self.l;
        }
        if let Some(a) = &self.algo {
            cfg.solver.algorithm = parse_field::<Algorithm>("algo", a)?;
        }
        if let Some(e) = &self.eta {
            cfg.solver.step_size = parse_field::<StepSize>("eta", e)?;
        }
        if let Some(s) = self.seed {
            cfg.solver.seed = s;
        }
        match (sweep, self.iters.as_slice()) {
            (_, []) => {}
            (true, grid) => cfg.iterations_grid = grid.to_vec(),
            (false, [t]) => cfg.solver.iterations = *t,
            (false, _) => return Err(HarnessError::usage("iters", "solve takes a single iteration count")),
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if self.cap.is_some() {
            cfg.cap = self.cap;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| HarnessError::usage(field, e.to_string()))
}

fn emit(report: &Report, out: Option<&PathBuf>, stem: &str) -> Result<()> {
    match out {
        Some(dir) => {
            report.write_to(dir, stem)?;
            for c in &report.checks {
                let mark = if c.pass { "ok  " } else { "FAIL" };
                eprintln!("{mark} {} {} k={} l={}: {} vs {}", c.instance, c.case, c.k, c.l, c.value, c.threshold);
            }
            eprintln!("wrote {}/{stem}.json and {stem}.csv", dir.display());
        }
        None => println!("{}", report.to_json()?),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    let report = match cli.command {
        Command::Solve(args) => {
            let cfg = args.into_config(false)?;
            let r = cmd_solve(&cfg)?;
            emit(&r, cfg.out.as_ref(), "solve")?;
            r
        }
        Command::Certify { grid, policy } => {
            let cfg = grid.into_config(false)?;
            let r = cmd_certify(&cfg, &policy)?;
            emit(&r, cfg.out.as_ref(), "certify")?;
            r
        }
        Command::Sweep(args) => {
            let cfg = args.into_config(true)?;
            let r = cmd_sweep(&cfg)?;
            emit(&r, cfg.out.as_ref(), "sweep")?;
            r
        }
        Command::Reproduce { target, seed, out, cap } => {
            let target: Target = target.parse()?;
            let r = cmd_reproduce(target, &resolve_engine(cap)?, seed)?;
            emit(&r, out.as_ref(), target.name())?;
            r
        }
    };
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
