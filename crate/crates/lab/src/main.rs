use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dqrom::commands;
use dqrom::config::{Abscissa, ExperimentConfig, Framework, Ranks};
use dqrom::verify::{Suite, VerifyOptions};
use dqrom::LabError;

#[derive(Parser, Debug)]
#[command(name = "dqrom", version, about = "POD reduced-order modeling lab for 1D Burgers")]
struct Cli {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accepted for documentation: no command draws random numbers.
    #[arg(long, global = true)]
    seedless: bool,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    n_cells: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    t_final: Option<f64>,
    /// Comma-separated framework names.
    #[arg(long, global = true, value_delimiter = ',')]
    frameworks: Option<Vec<Framework>>,
    /// Comma-separated ROM dimensions (overrides --r-min/--r-max).
    #[arg(long, global = true, value_delimiter = ',')]
    r_list: Option<Vec<usize>>,
    #[arg(long, global = true)]
    r_min: Option<usize>,
    #[arg(long, global = true)]
    r_max: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    i_u: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pod_cutoff: Option<f64>,
    /// Regression abscissa: tail or rhs.
    #[arg(long, global = true)]
    abscissa: Option<Abscissa>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the full-order model and write the snapshot matrix.
    Fom,
    /// Build POD bases from the snapshot file.
    Pod,
    /// Run ROMs over the rank range and write error and regression CSVs.
    Sweep,
    /// Write FOM and ROM profiles at selected ranks and times.
    Solutions {
        /// Comma-separated ranks (defaults to the configuration).
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        /// Comma-separated output times.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
    },
    /// Run a verification suite on small self-contained problems.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Scale eigenvalues by 1 + REL before the identity checks.
        #[arg(long, value_name = "REL", hide = true)]
        perturb_eigenvalues: Option<f64>,
    },
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.n_cells {
        cfg.n_cells = v;
    }
    if let Some(v) = o.nu {
        cfg.nu = v;
    }
    if let Some(v) = o.dt {
        cfg.dt = v;
    }
    if let Some(v) = o.t_final {
        cfg.t_final = v;
        if cli.config.is_none() {
            cfg.solutions.times = vec![v];
        }
    }
    if let Some(v) = &o.frameworks {
        cfg.frameworks = v.clone();
    }
    if let Some(v) = &o.r_list {
        cfg.ranks = Ranks::List(v.clone());
    } else if o.r_min.is_some() || o.r_max.is_some() {
        let (min, max) = match &cfg.ranks {
            Ranks::Range { min, max } => (*min, *max),
            Ranks::List(l) => (*l.iter().min().unwrap_or(&1), *l.iter().max().unwrap_or(&1)),
        };
        cfg.ranks = Ranks::Range {
            min: o.r_min.unwrap_or(min),
            max: o.r_max.unwrap_or(max),
        };
    }
    if let Some(v) = o.i_u {
        cfg.i_u_constant = v;
    }
    if let Some(v) = o.pod_cutoff {
        cfg.pod_cutoff = v;
    }
    if let Some(v) = o.abscissa {
        cfg.regression.abscissa = v;
    }
    if let Command::Solutions { ranks, times } = &cli.command {
        if let Some(r) = ranks {
            cfg.solutions.ranks = r.clone();
        }
        if let Some(t) = times {
            cfg.solutions.times = t.clone();
        }
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), LabError> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Fom => {
            commands::cmd_fom(&cfg)?;
        }
        Command::Pod => {
            for (fw, basis) in commands::cmd_pod(&cfg)? {
                println!("{fw}: d = {}", basis.d());
            }
        }
        Command::Sweep => {
            for s in commands::cmd_sweep(&cfg)? {
                let slope = |q| s.regression(q).map_or(f64::NAN, |f| f.slope);
                println!(
                    "{}: {} ranks, d = {}, slopes linf_l2 {:.3} natural {:.3}",
                    s.framework,
                    s.reports.len(),
                    s.d,
                    slope("err_linf_l2"),
                    slope("err_natural")
                );
            }
        }
        Command::Solutions { .. } => {
            for run in commands::cmd_solutions(&cfg)? {
                for p in &run.profiles {
                    println!("{} r = {} step {}: L2 error {:.3e}", run.framework, run.r, p.step, p.l2_error);
                }
            }
        }
        Command::Verify {
            suite,
            perturb_eigenvalues,
        } => {
            let opts = VerifyOptions {
                perturb_eigenvalues: *perturb_eigenvalues,
            };
            let report = commands::cmd_verify(&cfg, *suite, opts);
            let path = dqrom::formats::Layout::new(&cfg.output_dir).verify_json(suite.name());
            println!("{}", path.display());
            report?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
