//! Experiment runners. Each returns typed rows; [`Report::to_csv`] renders
//! them with a fixed column order per kind.

use ep_aloha::analytic::{
    avg_preamble_collision_prob, conventional_throughput, conventional_throughput_poisson, ep_throughput_upper_bound,
    ep_throughput_upper_bound_poisson, required_pool_size, single_channel_throughput_known_k, Mode, TimingProfile,
    INV_E,
};
use ep_aloha::mc_engine::{run_experiment, Arrival, FeedbackPath, Fidelity, Protocol, SlotConfig, ThroughputEstimate};
use ep_aloha::preamble_phys::empirical_collision_rate;
use ep_aloha::rng::derive_seed;
use serde::Serialize;

use crate::config::{ArrivalKind, ExperimentKind, ExperimentSpec};
use crate::error::{CliError, Result};

/// Shared Monte Carlo settings.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub seed: u64,
    pub trials: u64,
    pub fidelity: Fidelity,
    pub feedback: FeedbackPath,
    pub timing: Option<TimingProfile>,
}

impl RunContext {
    pub fn ideal(seed: u64, trials: u64) -> Self {
        Self {
            seed,
            trials,
            fidelity: Fidelity::Ideal,
            feedback: FeedbackPath::Direct,
            timing: None,
        }
    }

    fn slot_config(&self, channels: u64, arrival: Arrival, seed: u64) -> Result<SlotConfig> {
        Ok(SlotConfig::new(channels as usize, arrival, seed)?
            .with_fidelity(self.fidelity.clone())
            .with_feedback(self.feedback))
    }

    /// Runs both protocols at one grid point, each on its own derived seed.
    fn both(&self, point: u64, channels: u64, arrival: Arrival) -> Result<(ThroughputEstimate, ThroughputEstimate)> {
        let conv_cfg = self.slot_config(channels, arrival, derive_seed(self.seed, 2 * point))?;
        let ep_cfg = self.slot_config(channels, arrival, derive_seed(self.seed, 2 * point + 1))?;
        let conv = run_experiment(&conv_cfg, Protocol::Conventional, self.trials, None)?;
        let ep = run_experiment(&ep_cfg, Protocol::Exploration, self.trials, self.timing.as_ref())?;
        Ok((conv, ep))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Row {
    #[serde(rename = "K")]
    pub k: u64,
    pub eta_sa: f64,
    pub e_inv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoolSizingRow {
    pub alpha: f64,
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "L_required")]
    pub l_required: u64,
    pub collision_rate: f64,
    pub collision_stderr: f64,
    /// `λ² / (2 L M²)` at the chosen `L`.
    pub first_order: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputRow {
    #[serde(rename = "M")]
    pub m: u64,
    /// `λ` for Poisson arrivals, `K` for fixed ones.
    pub load: f64,
    pub conv_mean: f64,
    pub conv_stderr: f64,
    pub ep_mean: f64,
    pub ep_stderr: f64,
    /// `load · e^{-load/M}`.
    pub conv_approx: f64,
    /// Large-system bound on the exploration throughput at this load.
    pub ep_upper_bound: f64,
    /// `ep_mean · κ` when a timing profile is given.
    pub ep_effective: Option<f64>,
}

impl ThroughputRow {
    pub fn gap(&self) -> f64 {
        self.ep_mean - self.conv_mean
    }

    pub fn gap_stderr(&self) -> f64 {
        self.ep_stderr.hypot(self.conv_stderr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainRow {
    #[serde(rename = "K")]
    pub k: u64,
    pub conv_mean: f64,
    pub conv_stderr: f64,
    pub ep_mean: f64,
    pub ep_stderr: f64,
}

/// Maxima over the K grid and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSummary {
    pub k_conv_max: u64,
    pub conv_max: f64,
    pub conv_max_stderr: f64,
    pub k_ep_max: u64,
    pub ep_max: f64,
    pub ep_max_stderr: f64,
    pub ratio: f64,
    /// Delta-method standard error of the ratio with the argmaxes held fixed.
    pub ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSweep {
    pub m: u64,
    pub rows: Vec<GainRow>,
    pub summary: GainSummary,
}

pub fn run_fig_gap_sa(ks: &[u64]) -> Result<Vec<Fig1Row>> {
    ks.iter()
        .map(|&k| {
            if k > 1_000_000 {
                return Err(CliError::config("k: values must lie in [1, 1000000]"));
            }
            Ok(Fig1Row {
                k,
                eta_sa: single_channel_throughput_known_k(k)?,
                e_inv: INV_E,
            })
        })
        .collect()
}

pub fn run_pool_sizing(alphas: &[f64], delta: f64, m: u64, trials: u64, seed: u64) -> Result<Vec<PoolSizingRow>> {
    alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let lambda = alpha * m as f64;
            let l = required_pool_size(lambda, m, delta)?;
            let est = empirical_collision_rate(
                &Arrival::poisson(lambda)?,
                m as usize,
                l as usize,
                trials,
                derive_seed(seed, i as u64),
            )?;
            log::info!("pool sizing alpha={alpha}: L={l} rate={:.6}", est.rate);
            Ok(PoolSizingRow {
                alpha,
                lambda,
                m,
                l_required: l,
                collision_rate: est.rate,
                collision_stderr: est.stderr,
                first_order: avg_preamble_collision_prob(lambda, m, l)?.value,
            })
        })
        .collect()
}

/// Runs both protocols at every `(M, load)` point.
pub fn run_throughput_vs_m(
    points: &[(u64, f64)],
    arrival: ArrivalKind,
    ctx: &RunContext,
) -> Result<Vec<ThroughputRow>> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(m, load))| {
            let (model, conv_approx, bound) = match arrival {
                ArrivalKind::Poisson => (
                    Arrival::poisson(load)?,
                    conventional_throughput_poisson(load, m)?,
                    ep_throughput_upper_bound_poisson(load, m)?,
                ),
                ArrivalKind::Fixed => {
                    let k = load as u64;
                    (
                        Arrival::Fixed(k),
                        conventional_throughput(k, m, Mode::Approx)?,
                        ep_throughput_upper_bound(k, m)?,
                    )
                }
            };
            let (conv, ep) = ctx.both(i as u64, m, model)?;
            log::info!("M={m} load={load}: conv={:.4} ep={:.4}", conv.mean, ep.mean);
            Ok(ThroughputRow {
                m,
                load,
                conv_mean: conv.mean,
                conv_stderr: conv.stderr,
                ep_mean: ep.mean,
                ep_stderr: ep.stderr,
                conv_approx,
                ep_upper_bound: bound,
                ep_effective: ep.effective_mean,
            })
        })
        .collect()
}

pub fn run_gain_sweep(m: u64, ks: &[u64], ctx: &RunContext) -> Result<GainSweep> {
    if ks.is_empty() {
        return Err(CliError::config("k: grid is empty"));
    }
    let rows = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (conv, ep) = ctx.both(i as u64, m, Arrival::Fixed(k))?;
            log::info!("gain sweep M={m} K={k}: conv={:.4} ep={:.4}", conv.mean, ep.mean);
            Ok(GainRow {
                k,
                conv_mean: conv.mean,
                conv_stderr: conv.stderr,
                ep_mean: ep.mean,
                ep_stderr: ep.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // First maximum wins ties, so the summary does not depend on float noise
    // in the ordering of equal means.
    let argmax = |f: fn(&GainRow) -> f64| {
        rows.iter()
            .fold(None::<&GainRow>, |best, r| match best {
                Some(b) if f(b) >= f(r) => Some(b),
                _ => Some(r),
            })
            .expect("rows are nonempty")
    };
    let c = argmax(|r| r.conv_mean);
    let e = argmax(|r| r.ep_mean);
    let ratio = e.ep_mean / c.conv_mean;
    let ratio_stderr = ratio * (e.ep_stderr / e.ep_mean).hypot(c.conv_stderr / c.conv_mean);
    let summary = GainSummary {
        k_conv_max: c.k,
        conv_max: c.conv_mean,
        conv_max_stderr: c.conv_stderr,
        k_ep_max: e.k,
        ep_max: e.ep_mean,
        ep_max_stderr: e.ep_stderr,
        ratio,
        ratio_stderr,
    };
    Ok(GainSweep { m, rows, summary })
}

/// Result of running one experiment description.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Fig1(Vec<Fig1Row>),
    PoolSizing(Vec<PoolSizingRow>),
    Throughput(Vec<ThroughputRow>),
    Gain(GainSweep),
}

pub fn run_spec(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let ctx = RunContext {
        seed: spec.seed,
        trials: spec.trials,
        fidelity: spec.build_fidelity()?,
        feedback: spec.feedback_path(),
        timing: spec.timing()?,
    };
    Ok(match &spec.experiment {
        ExperimentKind::Fig1 { k } => Report::Fig1(run_fig_gap_sa(&k.values("k")?)?),
        ExperimentKind::PoolSizing { alpha, delta, m } => Report::PoolSizing(run_pool_sizing(
            &alpha.values("alpha")?,
            *delta,
            *m,
            spec.trials,
            spec.seed,
        )?),
        ExperimentKind::ThroughputVsMFixedLambda { lambda, m, arrival } => {
            let points: Vec<_> = m.values("m")?.into_iter().map(|m| (m, *lambda)).collect();
            Report::Throughput(run_throughput_vs_m(&points, *arrival, &ctx)?)
        }
        ExperimentKind::ThroughputVsMFixedAlpha { alpha, m, arrival } => {
            let points: Vec<_> = m.values("m")?.into_iter().map(|m| (m, alpha * m as f64)).collect();
            Report::Throughput(run_throughput_vs_m(&points, *arrival, &ctx)?)
        }
        ExperimentKind::GainSweep { m, k } => Report::Gain(run_gain_sweep(*m, &k.values("k")?, &ctx)?),
        ExperimentKind::Custom { m, load, arrival } => {
            let loads = load.values("load")?;
            let points: Vec<_> = m
                .values("m")?
                .into_iter()
                .flat_map(|m| loads.iter().map(move |&l| (m, l)))
                .collect();
            Report::Throughput(run_throughput_vs_m(&points, *arrival, &ctx)?)
        }
    })
}

pub const GAIN_HEADER: [&str; 7] = [
    "K",
    "conv_mean",
    "conv_stderr",
    "ep_mean",
    "ep_stderr",
    "ratio",
    "ratio_stderr",
];

impl Report {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match self {
            Report::Fig1(rows) => serialize_all(&mut w, rows)?,
            Report::PoolSizing(rows) => serialize_all(&mut w, rows)?,
            Report::Throughput(rows) => serialize_all(&mut w, rows)?,
            Report::Gain(sweep) => {
                // Extra ratio columns stay empty except on the closing `max` row.
                w.write_record(GAIN_HEADER)?;
                for r in &sweep.rows {
                    w.write_record([
                        r.k.to_string(),
                        r.conv_mean.to_string(),
                        r.conv_stderr.to_string(),
                        r.ep_mean.to_string(),
                        r.ep_stderr.to_string(),
                        String::new(),
                        String::new(),
                    ])?;
                }
                let s = &sweep.summary;
                w.write_record([
                    "max".to_owned(),
                    s.conv_max.to_string(),
                    s.conv_max_stderr.to_string(),
                    s.ep_max.to_string(),
                    s.ep_max_stderr.to_string(),
                    s.ratio.to_string(),
                    s.ratio_stderr.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
    }
}

fn serialize_all<T: Serialize>(w: &mut csv::Writer<Vec<u8>>, rows: &[T]) -> Result<()> {
    for r in rows {
        w.serialize(r)?;
    }
    Ok(())
}
