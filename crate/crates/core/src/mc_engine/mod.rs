//! Slot-synchronous Monte Carlo simulation.
//!
//! Slots are i.i.d.: every trial draws its own number of active users, runs one
//! slot of the chosen protocol and reports the number of collision-free
//! packets. Users that withhold or collide are dropped; no backlog is carried.
//!
//! Trial `i` always uses the random stream `(seed, i)` (see [`crate::rng`]) and
//! moments are accumulated in integers, so an estimate is bit-identical for
//! any rayon pool size.

mod experiment;
mod oracle;
mod slot;

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

pub use experiment::{run_experiment, run_experiment_traced, write_trace_csv, ThroughputEstimate, TrialRecord};
pub use oracle::{brute_force_conventional, brute_force_ep, MAX_CONVENTIONAL_ORACLE, MAX_EP_ORACLE};
pub use slot::{simulate_slot_conventional, simulate_slot_ep, SlotOutcome};

use crate::error::{Error, Result};
use crate::preamble_phys::{db_to_linear, DetectorConfig, PreamblePool};

/// How many users are active in a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arrival {
    Fixed(u64),
    /// Poisson with mean `lambda`, truncated at `k_cap`.
    Poisson {
        lambda: f64,
        k_cap: u64,
    },
}

impl Arrival {
    /// Poisson arrivals with the default cap `⌈20 λ⌉` (at least 1).
    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::poisson_capped(lambda, ((20.0 * lambda).ceil() as u64).max(1))
    }

    pub fn poisson_capped(lambda: f64, k_cap: u64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be > 0, got {lambda}")));
        }
        if k_cap == 0 {
            return Err(Error::invalid("k_cap", "must be at least 1"));
        }
        Ok(Arrival::Poisson { lambda, k_cap })
    }

    /// Largest K this model can produce.
    pub fn max_k(&self) -> u64 {
        match *self {
            Arrival::Fixed(k) => k,
            Arrival::Poisson { k_cap, .. } => k_cap,
        }
    }

    pub fn sampler(&self) -> Result<ArrivalSampler> {
        Ok(match *self {
            Arrival::Fixed(k) => ArrivalSampler::Fixed(k),
            Arrival::Poisson { lambda, k_cap } => ArrivalSampler::Poisson {
                dist: Poisson::new(lambda).map_err(|e| Error::invalid("lambda", e.to_string()))?,
                k_cap,
            },
        })
    }
}

/// Prepared form of [`Arrival`] for repeated draws.
#[derive(Debug, Clone)]
pub enum ArrivalSampler {
    Fixed(u64),
    Poisson { dist: Poisson<f64>, k_cap: u64 },
}

impl ArrivalSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            ArrivalSampler::Fixed(k) => *k,
            ArrivalSampler::Poisson { dist, k_cap } => (dist.sample(rng) as u64).min(*k_cap),
        }
    }
}

/// Preamble detection through synthesized signals and sparse recovery.
#[derive(Debug, Clone)]
pub struct PhysicalLayer {
    pub pool: Arc<PreamblePool>,
    /// Target receive SNR `Γ` in dB; every user hits it exactly.
    pub snr_db: f64,
    pub detector: DetectorConfig,
}

impl PhysicalLayer {
    pub fn new(pool: Arc<PreamblePool>, snr_db: f64, detector: DetectorConfig) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::invalid("snr_db", "must be finite"));
        }
        if !(detector.n0 > 0.0) {
            return Err(Error::invalid("n0", "noise level must be positive"));
        }
        Ok(Self { pool, snr_db, detector })
    }

    pub fn snr(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    /// Largest per-channel count the detector can report.
    pub fn max_count(&self) -> u64 {
        self.detector.support_cap(self.pool.sequence_len()) as u64
    }
}

/// Where the users' view of the preamble counts comes from.
#[derive(Debug, Clone, Default)]
pub enum Fidelity {
    /// The base station reports the true counts.
    #[default]
    Ideal,
    /// The base station reports counts estimated from synthesized signals.
    Physical(PhysicalLayer),
}

/// How the feedback reaches the users.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FeedbackPath {
    /// Users read the broadcast counts directly.
    #[default]
    Direct,
    /// Counts go through the full-format encoder and decoder.
    FullCodec,
    /// Counts go through the reduced-format encoder and decoder.
    ReducedCodec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Plain multichannel slotted ALOHA.
    Conventional,
    /// Preamble phase, feedback, then the data phase.
    Exploration,
}

#[derive(Debug, Clone)]
pub struct SlotConfig {
    pub channels: usize,
    pub arrival: Arrival,
    pub fidelity: Fidelity,
    pub feedback: FeedbackPath,
    pub seed: u64,
}

impl SlotConfig {
    pub fn new(channels: usize, arrival: Arrival, seed: u64) -> Result<Self> {
        if channels == 0 {
            return Err(Error::invalid("M", "at least one channel is required"));
        }
        Ok(Self {
            channels,
            arrival,
            fidelity: Fidelity::Ideal,
            feedback: FeedbackPath::Direct,
            seed,
        })
    }

    pub fn with_fidelity(mut self, fidelity: Fidelity) -> Self {
        self.fidelity = fidelity;
        self
    }

    pub fn with_feedback(mut self, feedback: FeedbackPath) -> Self {
        self.feedback = feedback;
        self
    }
}

/// Integer moment accumulator; merging is exact and order-independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Moments {
    pub n: u64,
    pub sum: u128,
    pub sum_sq: u128,
}

impl Moments {
    pub fn one(x: u64) -> Self {
        Self {
            n: 1,
            sum: u128::from(x),
            sum_sq: u128::from(x) * u128::from(x),
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            n: self.n + other.n,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum as f64 / self.n as f64
        }
    }

    /// Standard error of the mean using the unbiased sample variance.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = u128::from(self.n);
        let numer = n * self.sum_sq - self.sum * self.sum;
        let var = numer as f64 / (n * (n - 1)) as f64;
        (var / self.n as f64).sqrt()
    }
}
