use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::pool::{PreamblePool, C64};
use crate::error::{Error, Result};

/// One user's preamble transmission as seen at the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub index: usize,
    pub gain: C64,
    pub power: f64,
}

impl Transmission {
    /// Rayleigh-faded user whose power is set so that `|h|² P / n0 = snr`.
    pub fn power_controlled<R: Rng + ?Sized>(index: usize, snr: f64, n0: f64, rng: &mut R) -> Self {
        let gain = complex_gaussian(rng, 1.0);
        let power = snr * n0 / gain.norm_sqr().max(f64::MIN_POSITIVE);
        Self { index, gain, power }
    }
}

/// Received preamble-phase signal on one channel plus ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservation {
    pub y: Vec<C64>,
    pub true_support: BTreeSet<usize>,
    pub true_multiplicity: BTreeMap<usize, u32>,
}

/// Circularly-symmetric complex Gaussian with total variance `var`.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let sd = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(sd * re, sd * im)
}

/// `y = Σ h √P c_index + n` with `n ~ CN(0, n0 I)`.
pub fn synthesize_observation<R: Rng + ?Sized>(
    pool: &PreamblePool,
    choices: &[Transmission],
    n0: f64,
    rng: &mut R,
) -> Result<ChannelObservation> {
    if !(n0 >= 0.0) {
        return Err(Error::invalid("n0", format!("must be >= 0, got {n0}")));
    }
    let t_p = pool.sequence_len();
    let mut y = vec![C64::new(0.0, 0.0); t_p];
    let mut true_multiplicity = BTreeMap::new();
    for tx in choices {
        if tx.index >= pool.len() {
            return Err(Error::IndexOutOfRange {
                index: tx.index,
                len: pool.len(),
            });
        }
        let amp = tx.gain * tx.power.sqrt();
        for (acc, c) in y.iter_mut().zip(pool.sequence(tx.index)) {
            *acc += amp * c;
        }
        *true_multiplicity.entry(tx.index).or_insert(0) += 1;
    }
    if n0 > 0.0 {
        for acc in &mut y {
            *acc += complex_gaussian(rng, n0);
        }
    }
    Ok(ChannelObservation {
        y,
        true_support: true_multiplicity.keys().copied().collect(),
        true_multiplicity,
    })
}

/// Output of [`estimate_sparse`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    /// Selected preamble indices, in selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficient for each support entry.
    pub coefficients: Vec<C64>,
    pub residual_energy: f64,
    /// Residual energy before the first pick and after every pick.
    pub residual_trace: Vec<f64>,
}

/// Orthogonal matching pursuit over the pool.
///
/// Each iteration picks the unused sequence with the largest
/// `|⟨c_l, r⟩|`, refits all coefficients by least squares on the support and
/// recomputes the residual. Stops once the residual energy is at most `tau`
/// or the support holds `k_max` entries.
pub fn estimate_sparse(pool: &PreamblePool, y: &[C64], tau: f64, k_max: usize) -> Result<SparseEstimate> {
    let t_p = pool.sequence_len();
    if y.len() != t_p {
        return Err(Error::LengthMismatch {
            expected: t_p,
            actual: y.len(),
        });
    }
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", format!("must be > 0, got {tau}")));
    }
    if k_max >= t_p {
        return Err(Error::invalid(
            "k_max",
            format!("must be below t_p = {t_p}, got {k_max}"),
        ));
    }

    let energy = |r: &[C64]| r.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mut residual = y.to_vec();
    let mut residual_energy = energy(&residual);
    let mut trace = vec![residual_energy];
    let mut support: Vec<usize> = Vec::new();
    let mut coefficients: Vec<C64> = Vec::new();

    while residual_energy > tau && support.len() < k_max {
        let best = (0..pool.len())
            .filter(|l| !support.contains(l))
            .map(|l| (l, pool.correlate(l, &residual).norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((pick, corr)) = best else { break };
        if corr == 0.0 {
            break;
        }
        support.push(pick);

        let k = support.len();
        let basis = DMatrix::from_fn(t_p, k, |n, j| pool.sequence(support[j])[n]);
        let gram = basis.adjoint() * &basis;
        let rhs = basis.adjoint() * DVector::from_column_slice(y);
        let Some(chol) = gram.cholesky() else {
            support.pop();
            break;
        };
        let x = chol.solve(&rhs);
        let fitted = &basis * &x;
        for (r, (yv, fv)) in residual.iter_mut().zip(y.iter().zip(fitted.iter())) {
            *r = yv - fv;
        }
        coefficients = x.iter().copied().collect();
        residual_energy = energy(&residual);
        trace.push(residual_energy);
    }

    Ok(SparseEstimate {
        support,
        coefficients,
        residual_energy,
        residual_trace: trace,
    })
}

/// Number of distinct preambles detected. Two users sharing one preamble
/// count once.
pub fn estimate_active_count(est: &SparseEstimate) -> usize {
    est.support.len()
}

/// Stopping rule for [`estimate_sparse`] in terms of the noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Noise spectral level.
    pub n0: f64,
    /// `tau = threshold_factor · t_p · n0`.
    pub threshold_factor: f64,
    /// Support cap; `None` means `⌊t_p / 2⌋`.
    pub max_support: Option<usize>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            n0: 1.0,
            threshold_factor: 2.0,
            max_support: None,
        }
    }
}

impl DetectorConfig {
    pub fn threshold(&self, t_p: usize) -> f64 {
        self.threshold_factor * t_p as f64 * self.n0
    }

    pub fn support_cap(&self, t_p: usize) -> usize {
        self.max_support.unwrap_or(t_p / 2).min(t_p.saturating_sub(1))
    }

    /// Synthesizes one channel's preamble phase for users sending
    /// `preambles` at `snr` (linear) and returns the estimated active count.
    pub fn detect_count<R: Rng + ?Sized>(
        &self,
        pool: &PreamblePool,
        preambles: &[usize],
        snr: f64,
        rng: &mut R,
    ) -> Result<usize> {
        let choices: Vec<Transmission> = preambles
            .iter()
            .map(|&index| Transmission::power_controlled(index, snr, self.n0, rng))
            .collect();
        let obs = synthesize_observation(pool, &choices, self.n0, rng)?;
        let t_p = pool.sequence_len();
        let est = estimate_sparse(pool, &obs.y, self.threshold(t_p), self.support_cap(t_p))?;
        Ok(estimate_active_count(&est))
    }
}

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
