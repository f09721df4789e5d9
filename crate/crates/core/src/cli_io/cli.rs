//! `hapto-fv` subcommands.
//!
//! Exit codes: 0 on success with every hard monitor check passing, 2 when a
//! hard monitor check failed, 1 on usage, configuration and runtime errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{build_initial_state, parse_config_with, RunConfig};
use super::files::{read_checkpoint, write_checkpoint, write_series, write_snapshot, Checkpoint};
use crate::analysis::{
    epsilon_sweep, manufactured_convergence, weak_terms, Defeq4Sign, Equation, TestFunction, Trajectory,
};
use crate::error::{Error, Result};
use crate::stepper::Simulation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_HARD_FAILURE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hapto-fv", version, about = "Regularized double-haptotaxis finite-volume simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Configuration file; omitted keys take their defaults.
    config: Option<PathBuf>,
    /// Override one key after the file is read, e.g. `--set step.t_end=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory with monitoring.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Series CSV path (overrides `output.series`).
        #[arg(long)]
        series: Option<PathBuf>,
        /// Final state path, `.csv` for text (overrides `output.snapshot`).
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Time at which to write a checkpoint; a report time keeps the run
        /// identical to one without checkpointing.
        #[arg(long, requires = "checkpoint")]
        checkpoint_at: Option<f64>,
        #[arg(long, requires = "checkpoint_at")]
        checkpoint: Option<PathBuf>,
        /// Continue from a checkpoint written with the same configuration.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run the ε-sweep and write pairwise differences and weak residuals.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output prefix (overrides `output.sweep`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Manufactured-solution convergence study.
    Convergence {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Weak-form residuals of one trajectory at the configured ε.
    Weakcheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Flip the sign of the production term in the weak τ identity.
        #[arg(long)]
        strict_defeq4: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parse and validate a configuration, then print its hash.
    ValidateConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Print every key with its resolved value.
        #[arg(long)]
        dump: bool,
    },
}

/// Parse `args` (program name first) and run the selected subcommand.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            EXIT_ERROR
        }
    }
}

fn report_error(e: &Error) {
    let mut msg = format!("error: {e}");
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        let _ = write!(msg, "\n  caused by: {s}");
        source = s.source();
    }
    eprintln!("{msg}");
}

fn load(args: &ConfigArgs) -> Result<RunConfig> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        None => String::new(),
    };
    let overrides = args
        .overrides
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Format(format!("--set expects KEY=VALUE, got {kv:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    parse_config_with(&text, &overrides)
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate {
            cfg,
            series,
            snapshot,
            checkpoint_at,
            checkpoint,
            resume,
        } => {
            let cfg = load(&cfg)?;
            let series = series.unwrap_or_else(|| cfg.out_series.clone().into());
            let snapshot = snapshot.unwrap_or_else(|| cfg.out_snapshot.clone().into());
            let ckpt = checkpoint_at.zip(checkpoint);
            simulate(&cfg, &series, &snapshot, ckpt, resume.as_deref())
        }
        Command::Sweep { cfg, output } => {
            let cfg = load(&cfg)?;
            let prefix = output.unwrap_or_else(|| cfg.out_sweep.clone().into());
            sweep(&cfg, &prefix)
        }
        Command::Convergence { cfg, output } => {
            let cfg = load(&cfg)?;
            let path = output.unwrap_or_else(|| cfg.out_convergence.clone().into());
            convergence(&cfg, &path)
        }
        Command::Weakcheck {
            cfg,
            strict_defeq4,
            output,
        } => {
            let cfg = load(&cfg)?;
            let path = output.unwrap_or_else(|| cfg.out_weakcheck.clone().into());
            let sign = if strict_defeq4 { Defeq4Sign::AsPrinted } else { cfg.defeq4 };
            weakcheck(&cfg, sign, &path)
        }
        Command::ValidateConfig { cfg, dump } => {
            let cfg = load(&cfg)?;
            if dump {
                print!("{}", cfg.to_text());
            }
            println!("configuration valid; hash {}", cfg.hash());
            Ok(EXIT_OK)
        }
    }
}

fn simulate(
    cfg: &RunConfig,
    series: &Path,
    snapshot: &Path,
    ckpt: Option<(f64, PathBuf)>,
    resume: Option<&Path>,
) -> Result<i32> {
    let reg = cfg.regularization()?;
    let mut sim = match resume {
        Some(path) => {
            let c = read_checkpoint(path)?;
            if c.config_hash != cfg.hash() {
                return Err(Error::validation(
                    format!("checkpoint {}", path.display()),
                    "checkpoint was written with a different configuration",
                ));
            }
            Simulation::resume(cfg.params, reg, c.state, cfg.step, cfg.monitor_config(), c.monitor)?
        }
        None => Simulation::new(cfg.params, reg, build_initial_state(cfg)?, cfg.step, cfg.monitor_config())?,
    };

    let mut outcome = Ok(());
    if let Some((t_ckpt, path)) = &ckpt {
        outcome = sim.advance_to(*t_ckpt);
        if outcome.is_ok() {
            let c = Checkpoint {
                config_hash: cfg.hash(),
                state: sim.state().clone(),
                monitor: sim.monitor_state(),
            };
            write_checkpoint(&c, path)?;
        }
    }
    if outcome.is_ok() {
        outcome = sim.advance_to(cfg.step.t_end);
    }
    let aborted = match outcome {
        Ok(()) => false,
        Err(Error::MonitorHardFailure { .. }) => true,
        Err(e) => return Err(e),
    };

    if !sim.reports().is_empty() {
        write_series(sim.reports(), series)?;
    }
    write_snapshot(sim.state(), snapshot)?;
    for f in sim.hard_failures() {
        eprintln!("hard monitor failure at t={}: {}", f.t, f.checks.join(","));
    }
    println!(
        "t={} after {} steps, {} reports{}",
        sim.state().t,
        sim.steps(),
        sim.reports().len(),
        if aborted { " (aborted)" } else { "" }
    );
    Ok(if sim.hard_failures().is_empty() { EXIT_OK } else { EXIT_HARD_FAILURE })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn sweep(cfg: &RunConfig, prefix: &Path) -> Result<i32> {
    let sc = cfg.sweep_config()?;
    let s0 = build_initial_state(cfg)?;
    let res = epsilon_sweep(&cfg.params, &s0, &cfg.step, &sc)?;

    let mut pairwise = String::from("eps_a,eps_b,c1,c2,h,tau\n");
    for (j, d) in res.pairwise_l2.iter().enumerate() {
        let _ = writeln!(
            pairwise,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            res.eps_list[j], res.eps_list[j + 1], d[0], d[1], d[2], d[3]
        );
    }
    let mut residuals = String::from("eps,test_function,equation,residual\n");
    for (eps, per_phi) in res.eps_list.iter().zip(&res.weak_residuals) {
        for (k, row) in per_phi.iter().enumerate() {
            for (eq, r) in Equation::ALL.iter().zip(row) {
                let _ = writeln!(residuals, "{eps:.16e},{k},{},{r:.16e}", eq.name());
            }
        }
    }
    write_text(&with_suffix(prefix, "_pairwise.csv"), &pairwise)?;
    write_text(&with_suffix(prefix, "_residuals.csv"), &residuals)?;
    for (j, d) in res.pairwise_l2.iter().enumerate() {
        println!("eps {} -> {}: |dc1| = {:.3e}", res.eps_list[j], res.eps_list[j + 1], d[0]);
    }
    Ok(EXIT_OK)
}

fn convergence(cfg: &RunConfig, path: &Path) -> Result<i32> {
    let rep = manufactured_convergence(cfg.convergence_case, &cfg.convergence_levels)?;
    let mut text = String::from("level,error,order\n");
    for (i, (level, err)) in rep.levels.iter().zip(&rep.errors).enumerate() {
        let order = if i == 0 { String::new() } else { format!("{:.16e}", rep.orders[i - 1]) };
        let _ = writeln!(text, "{level},{err:.16e},{order}");
    }
    write_text(path, &text)?;
    println!("{}: orders {:?}", rep.case.name(), rep.orders);
    Ok(EXIT_OK)
}

fn weakcheck(cfg: &RunConfig, sign: Defeq4Sign, path: &Path) -> Result<i32> {
    let reg = cfg.regularization()?;
    let s0 = build_initial_state(cfg)?;
    let traj = Trajectory::record(&cfg.params, &reg, &s0, &cfg.step, cfg.saves)?;
    let family = TestFunction::standard_family(cfg.step.t_end, cfg.dim())?;
    let mut text = String::from("test_function,equation,time_derivative,initial,rhs,residual,relative_residual\n");
    for (k, phi) in family.iter().enumerate() {
        for eq in Equation::ALL {
            let w = weak_terms(&traj, &cfg.params, &reg, phi, eq, sign)?;
            let rel = if w.scale() > 0.0 { w.residual().abs() / w.scale() } else { 0.0 };
            let _ = writeln!(
                text,
                "{k},{},{:.16e},{:.16e},{:.16e},{:.16e},{rel:.16e}",
                eq.name(),
                w.time_derivative,
                w.initial,
                w.rhs,
                w.residual()
            );
        }
    }
    write_text(path, &text)?;
    Ok(EXIT_OK)
}
