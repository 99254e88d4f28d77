//! Command-line interface. Global flags fall back to `EP_ALOHA_*`
//! environment variables, which fall back to the experiment file.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ep_aloha::analytic::{
    access_probability, avg_preamble_collision_prob, conventional_throughput, ep_throughput_exact,
    ep_throughput_upper_bound, exploration_gain, feedback_bits, no_preamble_collision_prob, overhead_factor,
    required_pool_size, single_channel_throughput_blind, single_channel_throughput_known_k, Mode, TimingProfile,
};
use ep_aloha::mc_engine::{brute_force_conventional, brute_force_ep};
use ep_aloha::preamble_phys::gen_alltop;

use crate::config::{ExperimentSpec, FidelityKind, Overrides};
use crate::error::{CliError, Result};
use crate::experiments::run_spec;
use crate::figures;
use crate::gnuplot;

#[derive(Debug, Parser)]
#[command(
    name = "ep-aloha",
    version,
    about = "Multichannel slotted ALOHA with an exploration phase"
)]
pub struct Cli {
    /// Master seed, overriding the experiment file.
    #[arg(long, global = true, env = "EP_ALOHA_SEED")]
    pub seed: Option<u64>,
    /// Monte Carlo trials per grid point, overriding the experiment file.
    #[arg(long, global = true, env = "EP_ALOHA_TRIALS")]
    pub trials: Option<u64>,
    /// Worker threads; 0 or unset uses every available core.
    #[arg(long, global = true, env = "EP_ALOHA_THREADS")]
    pub threads: Option<usize>,
    /// Fidelity of the exploration phase, overriding the experiment file.
    #[arg(long, global = true, value_enum, env = "EP_ALOHA_FIDELITY")]
    pub fidelity: Option<FidelityKind>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv, env = "EP_ALOHA_FORMAT")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one closed-form expression.
    Analytic {
        #[command(subcommand)]
        formula: Formula,
    },
    /// Run an experiment file; CSV goes to stdout unless --out is given.
    Run {
        spec: PathBuf,
        /// Directory for <name>.csv, <name>.gp and the resolved <name>.toml.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the built-in figure set.
    Figures {
        /// `all` or the name of one built-in figure.
        which: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact expectations by exhaustive enumeration.
    Oracle { k: u64, m: u64 },
    /// Write an Alltop preamble pool in the text pool format.
    PoolExport {
        #[arg(long, default_value_t = 11)]
        t_p: usize,
        /// Keep only the first SIZE sequences.
        #[arg(long)]
        size: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Formula {
    /// Expected successes without exploration for K users on M channels.
    Conventional {
        k: u64,
        m: u64,
        #[arg(long)]
        approx: bool,
    },
    /// Large-system upper bound on the exploration throughput.
    EpBound { k: u64, m: u64 },
    /// Exact exploration throughput with ideal feedback.
    EpExact { k: u64, m: u64 },
    /// Maximum-throughput ratio 2 - 1/e.
    Gain,
    /// Single channel, K known.
    SaKnown { k: u64 },
    /// Single channel, access probability P under Poisson load LAMBDA.
    SaBlind { p: f64, lambda: f64 },
    /// Exploration overhead factor.
    Overhead { t_p: u32, t_d: u32, t_f: u32 },
    /// Probability that K users on one channel pick distinct preambles.
    CollisionFree {
        k: u64,
        pool: u64,
        #[arg(long)]
        approx: bool,
    },
    /// First-order average preamble collision probability.
    CollisionAvg { lambda: f64, m: u64, pool: u64 },
    /// Smallest pool keeping the average collision probability at DELTA.
    PoolSize { lambda: f64, m: u64, delta: f64 },
    /// Feedback lengths in bits, full and reduced formats.
    FeedbackBits { m: u64, max_k: u64, max_w: u64 },
    /// Group II access probability.
    AccessProbability { l_free: u64, w: u64 },
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            fidelity: self.fidelity,
        }
    }
}

/// Executes a parsed command line, writing primary output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("threads: {e}")))?;
    let mut buf = Vec::new();
    pool.install(|| dispatch(cli, &mut buf))?;
    stdout.write_all(&buf).map_err(|e| CliError::io("<stdout>", e))
}

fn dispatch(cli: &Cli, stdout: &mut Vec<u8>) -> Result<()> {
    let out_err = |e| CliError::io("<stdout>", e);
    match &cli.command {
        Command::Analytic { formula } => {
            let text = analytic_csv(formula)?;
            stdout.write_all(text.as_bytes()).map_err(out_err)
        }
        Command::Run { spec, out } => {
            let mut spec = ExperimentSpec::from_file(spec)?;
            spec.apply(&cli.overrides())?;
            match out {
                Some(dir) => {
                    write_experiment(&spec, dir, spec.experiment.label())?;
                    Ok(())
                }
                None => {
                    let csv = run_spec(&spec)?.to_csv()?;
                    stdout.write_all(csv.as_bytes()).map_err(out_err)
                }
            }
        }
        Command::Figures { which, out } => {
            let specs = figures::builtin(
                cli.seed.unwrap_or(figures::DEFAULT_SEED),
                cli.trials.unwrap_or(figures::DEFAULT_TRIALS),
            );
            let selected: Vec<_> = specs
                .into_iter()
                .filter(|(s, _)| which == "all" || s.name == *which)
                .collect();
            if selected.is_empty() {
                return Err(CliError::config(format!("figures: unknown figure {which:?}")));
            }
            for (mut spec, title) in selected {
                if let Some(f) = cli.fidelity {
                    spec.fidelity = f;
                }
                let path = write_experiment(&spec, out, title)?;
                writeln!(stdout, "{}", path.display()).map_err(out_err)?;
            }
            Ok(())
        }
        Command::Oracle { k, m } => {
            let text = oracle_csv(*k, *m)?;
            stdout.write_all(text.as_bytes()).map_err(out_err)
        }
        Command::PoolExport { t_p, size, out } => {
            let full = gen_alltop(*t_p)?;
            let pool = match size {
                Some(l) => full.truncated(*l)?,
                None => full,
            };
            match out {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
                    pool.write_text(std::io::BufWriter::new(file))
                        .map_err(|e| CliError::io(path, e))
                }
                None => pool.write_text(stdout).map_err(out_err),
            }
        }
    }
}

/// Runs `spec` and writes `<name>.csv`, `<name>.gp` and `<name>.toml` into
/// `dir`, returning the CSV path.
pub fn write_experiment(spec: &ExperimentSpec, dir: &Path, title: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let report = run_spec(spec)?;
    let write = |ext: &str, text: &str| {
        let path = dir.join(format!("{}.{ext}", spec.name));
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok::<_, CliError>(path)
    };
    let csv = write("csv", &report.to_csv()?)?;
    write("gp", &gnuplot::script(&report, &spec.name, title))?;
    write("toml", &spec.to_toml_string())?;
    log::info!("wrote {}", csv.display());
    Ok(csv)
}

pub fn oracle_csv(k: u64, m: u64) -> Result<String> {
    let conv = brute_force_conventional(k, m)?;
    let ep = brute_force_ep(k, m)?;
    Ok(format!(
        "K,M,conventional,exploration,conventional_closed_form,exploration_dp\n{k},{m},{conv},{ep},{},{}\n",
        conventional_throughput(k, m, Mode::Exact)?,
        ep_throughput_exact(k, m)?
    ))
}

fn mode(approx: bool) -> (Mode, &'static str) {
    if approx {
        (Mode::Approx, "approx")
    } else {
        (Mode::Exact, "exact")
    }
}

pub fn analytic_csv(formula: &Formula) -> Result<String> {
    let (header, row) = match *formula {
        Formula::Conventional { k, m, approx } => {
            let (md, label) = mode(approx);
            (
                "K,M,mode,value",
                format!("{k},{m},{label},{}", conventional_throughput(k, m, md)?),
            )
        }
        Formula::EpBound { k, m } => ("K,M,value", format!("{k},{m},{}", ep_throughput_upper_bound(k, m)?)),
        Formula::EpExact { k, m } => ("K,M,value", format!("{k},{m},{}", ep_throughput_exact(k, m)?)),
        Formula::Gain => ("value", exploration_gain().to_string()),
        Formula::SaKnown { k } => ("K,value", format!("{k},{}", single_channel_throughput_known_k(k)?)),
        Formula::SaBlind { p, lambda } => (
            "p,lambda,value",
            format!("{p},{lambda},{}", single_channel_throughput_blind(p, lambda)?),
        ),
        Formula::Overhead { t_p, t_d, t_f } => {
            let t = TimingProfile::new(t_p, t_d, t_f)?;
            (
                "t_p,t_d,t_f,value",
                format!("{t_p},{t_d},{t_f},{}", overhead_factor(&t)),
            )
        }
        Formula::CollisionFree { k, pool, approx } => {
            let (md, label) = mode(approx);
            (
                "k,L,mode,value",
                format!("{k},{pool},{label},{}", no_preamble_collision_prob(k, pool, md)?),
            )
        }
        Formula::CollisionAvg { lambda, m, pool } => {
            let v = avg_preamble_collision_prob(lambda, m, pool)?;
            (
                "lambda,M,L,value,in_regime",
                format!("{lambda},{m},{pool},{},{}", v.value, v.in_regime),
            )
        }
        Formula::PoolSize { lambda, m, delta } => (
            "lambda,M,delta,value",
            format!("{lambda},{m},{delta},{}", required_pool_size(lambda, m, delta)?),
        ),
        Formula::FeedbackBits { m, max_k, max_w } => {
            let b = feedback_bits(m, max_k, max_w)?;
            (
                "M,max_k,max_W,full,reduced",
                format!("{m},{max_k},{max_w},{},{}", b.full, b.reduced),
            )
        }
        Formula::AccessProbability { l_free, w } => (
            "L_free,W,value",
            format!("{l_free},{w},{}", access_probability(l_free, w)),
        ),
    };
    Ok(format!("{header}\n{row}\n"))
}
