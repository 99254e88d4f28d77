//! The built-in figure set written by `figures all`.

use crate::config::{ArrivalKind, ExperimentKind, ExperimentSpec, FeedbackKind, FidelityKind, Grid, RangeSpec};

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_TRIALS: u64 = 100_000;

/// `(spec, plot title)` for every figure.
pub fn builtin(seed: u64, trials: u64) -> Vec<(ExperimentSpec, &'static str)> {
    let spec = |name: &str, experiment| ExperimentSpec {
        name: name.to_owned(),
        seed,
        trials,
        fidelity: FidelityKind::Ideal,
        feedback: FeedbackKind::Direct,
        timing: None,
        physical: None,
        experiment,
    };
    let mut fig1_k: Vec<u64> = (1..=20).collect();
    fig1_k.extend([50, 100, 1_000, 10_000, 100_000, 1_000_000]);
    vec![
        (
            spec("fig1_gap_sa", ExperimentKind::Fig1 { k: Grid::List(fig1_k) }),
            "Single channel: known K vs e^{-1}",
        ),
        (
            spec(
                "fig3_pool_sizing",
                ExperimentKind::PoolSizing {
                    alpha: Grid::Range(RangeSpec {
                        start: 0.1,
                        end: 1.0,
                        step: 0.1,
                    }),
                    delta: 0.01,
                    m: 10,
                },
            ),
            "Preamble pool size and collision probability, delta = 0.01",
        ),
        (
            spec(
                "fig4_fixed_lambda",
                ExperimentKind::ThroughputVsMFixedLambda {
                    lambda: 20.0,
                    m: Grid::range(20, 100, 5),
                    arrival: ArrivalKind::Poisson,
                },
            ),
            "Throughput vs M, lambda = 20",
        ),
        (
            spec(
                "fig5_fixed_alpha",
                ExperimentKind::ThroughputVsMFixedAlpha {
                    alpha: 0.8,
                    m: Grid::range(10, 100, 10),
                    arrival: ArrivalKind::Poisson,
                },
            ),
            "Throughput vs M, alpha = 0.8",
        ),
        (
            spec(
                "gain_m50",
                ExperimentKind::GainSweep {
                    m: 50,
                    k: Grid::range(25, 100, 1),
                },
            ),
            "Throughput vs K, M = 50",
        ),
    ]
}
