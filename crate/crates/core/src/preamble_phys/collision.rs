use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mc_engine::Arrival;
use crate::rng::trial_rng;

/// Fraction of `(trial, channel)` pairs with a preamble collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    /// Standard error over per-trial collision fractions.
    pub stderr: f64,
    pub n_trials: u64,
}

/// Simulates preamble choices only: every active user picks a channel out of
/// `channels` and a preamble out of `pool_size`, and a channel collides when
/// two of its users share a preamble.
pub fn empirical_collision_rate(
    arrival: &Arrival,
    channels: usize,
    pool_size: usize,
    n_trials: u64,
    seed: u64,
) -> Result<RateEstimate> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "at least one trial is required"));
    }
    if channels == 0 {
        return Err(Error::invalid("M", "at least one channel is required"));
    }
    if pool_size == 0 {
        return Err(Error::invalid("L_pool", "pool must hold at least one preamble"));
    }
    let sampler = arrival.sampler()?;
    let (sum, sum_sq) = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let k = sampler.sample(&mut rng);
            let mut picks: Vec<(usize, usize)> = (0..k)
                .map(|_| (rng.random_range(0..channels), rng.random_range(0..pool_size)))
                .collect();
            picks.sort_unstable();
            let mut collided = 0u64;
            let mut last_marked = None;
            for pair in picks.windows(2) {
                if pair[0] == pair[1] && last_marked != Some(pair[0].0) {
                    collided += 1;
                    last_marked = Some(pair[0].0);
                }
            }
            (u128::from(collided), u128::from(collided) * u128::from(collided))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let n = u128::from(n_trials);
    let m = channels as f64;
    let rate = sum as f64 / (n_trials as f64 * m);
    let stderr = if n_trials < 2 {
        0.0
    } else {
        let var = (n * sum_sq - sum * sum) as f64 / (n * (n - 1)) as f64 / (m * m);
        (var / n_trials as f64).sqrt()
    };
    Ok(RateEstimate { rate, stderr, n_trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{avg_preamble_collision_prob, no_preamble_collision_prob, Mode};

    #[test]
    fn single_preamble_always_collides() {
        let est = empirical_collision_rate(&Arrival::Fixed(3), 1, 1, 100, 0).unwrap();
        assert_eq!(est.rate, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn two_users_birthday_rate() {
        let est = empirical_collision_rate(&Arrival::Fixed(2), 1, 10, 200_000, 4).unwrap();
        assert!((est.rate - 0.1).abs() <= 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn fixed_counts_match_product_formula() {
        for (i, k) in [2u64, 3, 4].into_iter().enumerate() {
            for (j, l) in [16usize, 32, 64].into_iter().enumerate() {
                let est = empirical_collision_rate(&Arrival::Fixed(k), 1, l, 100_000, (i * 3 + j) as u64).unwrap();
                let want = 1.0 - no_preamble_collision_prob(k, l as u64, Mode::Exact).unwrap();
                assert!(
                    (est.rate - want).abs() <= 3.0 * est.stderr,
                    "k={k} L={l}: {est:?} vs {want}"
                );
            }
        }
    }

    #[test]
    fn poisson_load_matches_average_formula() {
        let arrival = Arrival::poisson(8.0).unwrap();
        let est = empirical_collision_rate(&arrival, 10, 32, 1_000_000, 17).unwrap();
        // Per-channel counts are Poisson(0.8); sum_k P(k) (1 - prod_{j<k} (1 - j/32)),
        // evaluated in double precision outside this crate.
        let exact_mixture = 0.009_788_177_984_404_215;
        assert!((est.rate - exact_mixture).abs() <= 3.0 * est.stderr, "{est:?}");
        // The first-order average formula sits about 2% above the mixture.
        let first_order = avg_preamble_collision_prob(8.0, 10, 32).unwrap().value;
        assert!((first_order - 0.01).abs() < 1e-12);
        assert!((first_order - exact_mixture) / exact_mixture < 0.025);
        assert!(est.rate <= first_order + 3.0 * est.stderr);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(empirical_collision_rate(&Arrival::Fixed(2), 1, 10, 0, 0).is_err());
        assert!(empirical_collision_rate(&Arrival::Fixed(2), 0, 10, 1, 0).is_err());
        assert!(empirical_collision_rate(&Arrival::Fixed(2), 1, 0, 1, 0).is_err());
    }
}
