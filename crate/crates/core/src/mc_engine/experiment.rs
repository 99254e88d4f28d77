use std::io::Write;

use rayon::prelude::*;

use super::{simulate_slot_conventional, simulate_slot_ep, Moments, Protocol, SlotConfig};
use crate::analytic::{overhead_factor, TimingProfile};
use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Monte Carlo throughput in collision-free packets per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trials: u64,
    /// `mean · κ` for exploration runs given a timing profile.
    pub effective_mean: Option<f64>,
}

/// Per-trial record.
///
/// CSV columns, in order: `trial,k,successes,singletons,contending,
/// free_channels,transmitters,group1_success,group2_success`. Conventional
/// trials report `singletons = group1_success = successes` and zero
/// transmitters and Group II successes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u64,
    pub k: u64,
    pub successes: u64,
    pub singletons: u64,
    pub contending: u64,
    pub free_channels: u64,
    pub transmitters: u64,
    pub group1_success: u64,
    pub group2_success: u64,
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str =
        "trial,k,successes,singletons,contending,free_channels,transmitters,group1_success,group2_success";
}

fn run_trial(cfg: &SlotConfig, protocol: Protocol, sampler: &super::ArrivalSampler, trial: u64) -> TrialRecord {
    let mut rng = trial_rng(cfg.seed, trial);
    let k = sampler.sample(&mut rng);
    match protocol {
        Protocol::Conventional => {
            let s = simulate_slot_conventional(cfg.channels, k, &mut rng);
            TrialRecord {
                trial,
                k,
                successes: s,
                singletons: s,
                contending: k - s,
                free_channels: cfg.channels as u64 - s,
                transmitters: 0,
                group1_success: s,
                group2_success: 0,
            }
        }
        Protocol::Exploration => {
            let out = simulate_slot_ep(cfg, k, &mut rng);
            TrialRecord {
                trial,
                k,
                successes: out.successes(),
                singletons: out.singletons,
                contending: out.contending,
                free_channels: out.free_channels,
                transmitters: out.transmitters,
                group1_success: out.group1_success,
                group2_success: out.group2_success,
            }
        }
    }
}

fn estimate(acc: Moments, protocol: Protocol, timing: Option<&TimingProfile>) -> ThroughputEstimate {
    let mean = acc.mean();
    ThroughputEstimate {
        mean,
        stderr: acc.stderr(),
        n_trials: acc.n,
        effective_mean: match (protocol, timing) {
            (Protocol::Exploration, Some(t)) => Some(mean * overhead_factor(t)),
            _ => None,
        },
    }
}

/// Runs `n_trials` independent slots on the current rayon pool.
pub fn run_experiment(
    cfg: &SlotConfig,
    protocol: Protocol,
    n_trials: u64,
    timing: Option<&TimingProfile>,
) -> Result<ThroughputEstimate> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "at least one trial is required"));
    }
    let sampler = cfg.arrival.sampler()?;
    let acc = (0..n_trials)
        .into_par_iter()
        .map(|i| Moments::one(run_trial(cfg, protocol, &sampler, i).successes))
        .reduce(Moments::default, Moments::merge);
    Ok(estimate(acc, protocol, timing))
}

/// Like [`run_experiment`], also returning every trial in order.
pub fn run_experiment_traced(
    cfg: &SlotConfig,
    protocol: Protocol,
    n_trials: u64,
    timing: Option<&TimingProfile>,
) -> Result<(ThroughputEstimate, Vec<TrialRecord>)> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "at least one trial is required"));
    }
    let sampler = cfg.arrival.sampler()?;
    let records: Vec<TrialRecord> = (0..n_trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, protocol, &sampler, i))
        .collect();
    let acc = records
        .iter()
        .fold(Moments::default(), |a, r| a.merge(Moments::one(r.successes)));
    Ok((estimate(acc, protocol, timing), records))
}

pub fn write_trace_csv<W: Write>(records: &[TrialRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", TrialRecord::CSV_HEADER)?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.k,
            r.successes,
            r.singletons,
            r.contending,
            r.free_channels,
            r.transmitters,
            r.group1_success,
            r.group2_success
        )?;
    }
    Ok(())
}
