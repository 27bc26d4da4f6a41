//! `mediator`: capacity queries, simulations, sweeps and lower-bound
//! instances from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mediator_core::capacity::{chi_capacity_with, kl_capacity, DEFAULT_CHI_BUDGET, DEFAULT_CHI_TOL, DEFAULT_KL_MAX_ITER, DEFAULT_KL_TOL};
use mediator_core::env::{lb_epsilon_greedy, lb_linear_gaussian, lb_multitask, lb_two_policy, LowerBoundInstance};
use mediator_core::harness::{run_sweep, simulate, ExperimentConfig, PolicySource, SweepGrid};
use mediator_core::matrix_io::{fmt_f64, format_matrix};
use mediator_core::par::Execution;
use mediator_core::{Error, OutcomeDistribution, Result};

#[derive(Parser, Debug)]
#[command(name = "mediator", version, about = "Bandits with mediator feedback")]
struct Cli {
    /// Run replicates and optimizer restarts on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    /// Log progress (repeat for more detail). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chi-squared capacity bracket and KL capacity of a policy set.
    Capacity {
        /// Matrix file, or `eps:N:EPS`, `cyclic:K:M`, `multitask:M:Q`.
        #[arg(long)]
        policies: String,
        #[arg(long, default_value_t = DEFAULT_CHI_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_CHI_BUDGET)]
        budget: usize,
    },
    /// Run one experiment config and write its trace and summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every cell of a sweep file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build and print a lower-bound instance.
    Lowerbound {
        #[arg(long, value_enum)]
        family: LbFamily,
        #[arg(long)]
        horizon: usize,
        /// First distribution (two): comma-separated probabilities.
        #[arg(long)]
        p: Option<String>,
        /// Second distribution (two), or choices per section (multitask).
        #[arg(long)]
        q: Option<String>,
        /// Number of policies (eps, linear).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Number of sections (multitask).
        #[arg(long)]
        m: Option<usize>,
        /// Largest number of policies to materialize (multitask).
        #[arg(long, default_value_t = 4096)]
        cap: usize,
        /// Skip clipping (linear).
        #[arg(long)]
        unclipped: bool,
        /// Noise level for the unclipped linear instance.
        #[arg(long)]
        sigma: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LbFamily {
    Two,
    Eps,
    Multitask,
    Linear,
}

fn base_dir(config: &Path) -> &Path {
    config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("--{flag} is required for --family {family}")))
}

fn parse_distribution(text: &str) -> Result<OutcomeDistribution> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad probability `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    OutcomeDistribution::new(values)
}

fn capacity(policies: &str, tol: f64, budget: usize, exec: Execution) -> Result<String> {
    let theta = PolicySource::parse_descriptor(policies)?.build(Path::new("."))?;
    let chi = chi_capacity_with(&theta, tol, budget, exec);
    let kl = kl_capacity(&theta, DEFAULT_KL_TOL, DEFAULT_KL_MAX_ITER);
    Ok(format!(
        "chi_lower chi_upper certified kl_value\n{} {} {} {}\n",
        fmt_f64(chi.lower),
        fmt_f64(chi.upper),
        chi.certified_exact,
        fmt_f64(kl.value)
    ))
}

fn describe(family: &str, horizon: usize, inst: &LowerBoundInstance) -> String {
    let mut out = format!(
        "family {family}\nhorizon {horizon}\ngap {}\nconstant_c {}\n",
        fmt_f64(inst.gap),
        fmt_f64(inst.constant_c)
    );
    if let Some(s) = inst.sigma {
        out.push_str(&format!("sigma {}\n", fmt_f64(s)));
    }
    out.push_str(&format!("feedback {}\n# policies\n", inst.feedback.name()));
    out.push_str(&inst.policy_set.to_matrix_string());
    out.push_str("# environments (first row is the reference)\n");
    out.push_str(&format_matrix(&inst.environments));
    out
}

#[allow(clippy::too_many_arguments)]
fn lowerbound(
    family: LbFamily,
    horizon: usize,
    p: Option<String>,
    q: Option<String>,
    n: Option<usize>,
    epsilon: Option<f64>,
    m: Option<usize>,
    cap: usize,
    unclipped: bool,
    sigma: Option<f64>,
) -> Result<String> {
    match family {
        LbFamily::Two => {
            let p = parse_distribution(&need(p, "p", "two")?)?;
            let q = parse_distribution(&need(q, "q", "two")?)?;
            Ok(describe("two", horizon, &lb_two_policy(&p, &q, horizon)?))
        }
        LbFamily::Eps => {
            let inst = lb_epsilon_greedy(need(n, "n", "eps")?, need(epsilon, "epsilon", "eps")?, horizon)?;
            Ok(describe("eps", horizon, &inst))
        }
        LbFamily::Linear => {
            let inst = lb_linear_gaussian(
                need(n, "n", "linear")?,
                need(epsilon, "epsilon", "linear")?,
                horizon,
                !unclipped,
                sigma,
            )?;
            Ok(describe("linear", horizon, &inst))
        }
        LbFamily::Multitask => {
            let m = need(m, "m", "multitask")?;
            let q: usize = need(q, "q", "multitask")?
                .parse()
                .map_err(|_| Error::Config("--q must be an integer for --family multitask".into()))?;
            let inst = lb_multitask(m, q, horizon, cap)?;
            let mut out = format!(
                "family multitask\nhorizon {horizon}\ngap {}\nconstant_c {}\nfeedback mediator\n# policies\n",
                fmt_f64(inst.gap),
                fmt_f64(inst.constant_c)
            );
            out.push_str(&inst.policy_set()?.to_matrix_string());
            let mut envs = vec![vec![0.5; inst.num_outcomes()]];
            for i in 0..inst.num_policies() {
                envs.push(inst.mean(i)?);
            }
            out.push_str("# environments (first row is the reference)\n");
            out.push_str(&format_matrix(&envs));
            Ok(out)
        }
    }
}

fn run(cli: Cli) -> Result<String> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Capacity { policies, tol, budget } => capacity(&policies, tol, budget, exec),
        Command::Simulate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (summary, files) = simulate(cfg, base_dir(&config), exec)?;
            let csv = std::fs::read_to_string(&files.summary)?;
            log::info!("mean final regret {}", summary.mean_final_regret);
            Ok(format!("{csv}# trace: {}\n", files.trace.display()))
        }
        Command::Sweep { config } => {
            let grid = SweepGrid::load(&config)?;
            let outcome = run_sweep(&grid, base_dir(&config), exec)?;
            let csv = std::fs::read_to_string(&outcome.combined)?;
            Ok(format!("{csv}# combined: {}\n", outcome.combined.display()))
        }
        Command::Lowerbound { family, horizon, p, q, n, epsilon, m, cap, unclipped, sigma } => {
            lowerbound(family, horizon, p, q, n, epsilon, m, cap, unclipped, sigma)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
