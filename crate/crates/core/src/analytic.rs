//! Closed-form throughput model.
//!
//! Every function here is pure and allocation-free (apart from
//! [`ep_throughput_exact`], which runs a small dynamic program), so callers may
//! evaluate them from any number of threads.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// `e^{-1}`, the maximum per-channel throughput of slotted ALOHA.
pub const INV_E: f64 = 1.0 / E;

/// Poisson load on a multichannel system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadModel {
    lambda: f64,
    channels: u64,
}

impl LoadModel {
    pub fn new(lambda: f64, channels: u64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be > 0, got {lambda}")));
        }
        if channels == 0 {
            return Err(Error::invalid("M", "at least one channel is required"));
        }
        Ok(Self { lambda, channels })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn channels(&self) -> u64 {
        self.channels
    }

    /// Load per channel, `lambda / M`.
    pub fn alpha(&self) -> f64 {
        self.lambda / self.channels as f64
    }

    /// Above one arrival per channel most channels carry several preambles.
    pub fn is_overloaded(&self) -> bool {
        self.lambda > self.channels as f64
    }
}

/// Slot component durations, in symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingProfile {
    pub t_p: u32,
    pub t_d: u32,
    pub t_f: u32,
}

impl TimingProfile {
    pub fn new(t_p: u32, t_d: u32, t_f: u32) -> Result<Self> {
        if t_p == 0 || t_d == 0 || t_f == 0 {
            return Err(Error::invalid("timing", "all durations must be positive"));
        }
        if t_p >= t_d {
            return Err(Error::invalid(
                "timing",
                format!("preamble ({t_p}) must be shorter than the data packet ({t_d})"),
            ));
        }
        Ok(Self { t_p, t_d, t_f })
    }

    /// Relative airtime spent on exploration, `(t_p + t_f) / (t_d + t_f)`.
    pub fn exploration_overhead(&self) -> f64 {
        f64::from(self.t_p + self.t_f) / f64::from(self.t_d + self.t_f)
    }
}

/// Target collision probability and the resulting common-pool size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolSizing {
    pub delta: f64,
    pub pool_size: u64,
}

impl PoolSizing {
    pub fn new(delta: f64, pool_size: u64) -> Result<Self> {
        check_delta(delta)?;
        if pool_size == 0 {
            return Err(Error::invalid("L_pool", "pool must hold at least one preamble"));
        }
        Ok(Self { delta, pool_size })
    }

    /// Smallest pool meeting `delta` under the given load.
    pub fn for_load(load: &LoadModel, delta: f64) -> Result<Self> {
        let pool_size = required_pool_size(load.lambda(), load.channels(), delta)?;
        Self::new(delta, pool_size)
    }
}

/// Whether a formula is evaluated exactly or through its exponential form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Approx,
}

/// `(1 - q)^n` with `0^0 = 1`.
pub(crate) fn pow_complement(q: f64, n: u64) -> f64 {
    if n == 0 {
        1.0
    } else {
        (n as f64 * (-q).ln_1p()).exp()
    }
}

/// Single-channel success probability when all `k` contenders know `k` and
/// each transmits with probability `1/k`.
pub fn single_channel_throughput_known_k(k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("K", "at least one active user is required"));
    }
    Ok(pow_complement(1.0 / k as f64, k - 1))
}

/// Single-channel throughput `p λ e^{-pλ}` when `p` is chosen without knowing K.
pub fn single_channel_throughput_blind(p: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", format!("must be > 0, got {lambda}")));
    }
    let g = p * lambda;
    Ok(g * (-g).exp())
}

/// Expected collision-free packets for `k` users on `m` channels without
/// exploration.
pub fn conventional_throughput(k: u64, m: u64, mode: Mode) -> Result<f64> {
    check_channels(m)?;
    let kf = k as f64;
    Ok(match mode {
        Mode::Exact if k == 0 => 0.0,
        Mode::Exact => kf * pow_complement(1.0 / m as f64, k - 1),
        Mode::Approx => kf * (-kf / m as f64).exp(),
    })
}

/// Expected number of singleton channels after the preamble phase, which is
/// also the expected Group I size. Numerically identical to
/// [`conventional_throughput`] in exact mode.
pub fn expected_group1(k: u64, m: u64) -> Result<f64> {
    conventional_throughput(k, m, Mode::Exact)
}

/// Large-system upper bound `M e^{-1} + S̄(K)(1 - e^{-1})` on the exploration
/// throughput.
///
/// The bound treats the Group II term as `L e^{-1}`. For finite `W = L` the
/// exact Group II term `W (1 - 1/W)^{W-1}` exceeds it by roughly `e^{-1}/2`,
/// so near `K = M` the exact throughput sits slightly above this value.
pub fn ep_throughput_upper_bound(k: u64, m: u64) -> Result<f64> {
    let s_bar = expected_group1(k, m)?;
    Ok(m as f64 * INV_E + s_bar * (1.0 - INV_E))
}

/// Conventional throughput averaged over `K ~ Poisson(λ)`: `λ e^{-λ/M}`.
pub fn conventional_throughput_poisson(lambda: f64, m: u64) -> Result<f64> {
    check_channels(m)?;
    check_lambda(lambda)?;
    Ok(lambda * (-lambda / m as f64).exp())
}

/// [`ep_throughput_upper_bound`] averaged over `K ~ Poisson(λ)`.
pub fn ep_throughput_upper_bound_poisson(lambda: f64, m: u64) -> Result<f64> {
    let s_bar = conventional_throughput_poisson(lambda, m)?;
    Ok(m as f64 * INV_E + s_bar * (1.0 - INV_E))
}

/// Ratio of maximum throughput with exploration to without, `2 - e^{-1}`.
pub fn exploration_gain() -> f64 {
    2.0 - INV_E
}

/// Group II access probability `min(1, L_free / W)`.
///
/// No free channel gives 0. `W = 0` gives 1, though nobody applies it.
pub fn access_probability(l_free: u64, w: u64) -> f64 {
    if l_free == 0 {
        0.0
    } else if w == 0 || l_free >= w {
        1.0
    } else {
        l_free as f64 / w as f64
    }
}

/// Expected collision-free Group II packets given `W` contenders and
/// `L_free` channels: `p W (1 - p/L)^{W-1}` with `p` from
/// [`access_probability`].
pub fn group2_expected_success(l_free: u64, w: u64) -> f64 {
    if l_free == 0 || w == 0 {
        return 0.0;
    }
    let p = access_probability(l_free, w);
    p * w as f64 * pow_complement(p / l_free as f64, w - 1)
}

/// Exact `E[N_ep | K]` for the exploration protocol with ideal feedback.
///
/// Runs a dynamic program over the (empty, singleton) channel counts as users
/// are placed one at a time, then averages `S + group2_expected_success`. Cost
/// is `O(K M^2)`.
pub fn ep_throughput_exact(k: u64, m: u64) -> Result<f64> {
    let dist = singleton_distribution(k, m)?;
    Ok(dist
        .iter()
        .enumerate()
        .map(|(s, &prob)| {
            let s = s as u64;
            if prob == 0.0 {
                0.0
            } else {
                prob * (s as f64 + group2_expected_success(m - s, k - s))
            }
        })
        .sum())
}

/// Distribution of the number of singleton channels when `k` users pick one of
/// `m` channels uniformly. Index `s` holds `P(S = s)`.
pub fn singleton_distribution(k: u64, m: u64) -> Result<Vec<f64>> {
    check_channels(m)?;
    let m_us = usize::try_from(m).map_err(|_| Error::invalid("M", "too large"))?;
    let inv_m = 1.0 / m as f64;
    // state[e][s]: e empty channels, s singleton channels.
    let width = m_us + 1;
    let mut state = vec![0.0; width * width];
    state[m_us * width] = 1.0;
    for _ in 0..k {
        let mut next = vec![0.0; width * width];
        for e in 0..=m_us {
            for s in 0..=(m_us - e) {
                let prob = state[e * width + s];
                if prob == 0.0 {
                    continue;
                }
                if e > 0 {
                    next[(e - 1) * width + s + 1] += prob * e as f64 * inv_m;
                }
                if s > 0 {
                    next[e * width + s - 1] += prob * s as f64 * inv_m;
                }
                let crowded = m_us - e - s;
                if crowded > 0 {
                    next[e * width + s] += prob * crowded as f64 * inv_m;
                }
            }
        }
        state = next;
    }
    let mut dist = vec![0.0; width];
    for e in 0..=m_us {
        for s in 0..=(m_us - e) {
            dist[s] += state[e * width + s];
        }
    }
    Ok(dist)
}

/// Slot-length discount `(t_d + t_f) / (t_p + t_d + 2 t_f)` applied to the
/// exploration throughput.
pub fn overhead_factor(t: &TimingProfile) -> f64 {
    f64::from(t.t_d + t.t_f) / f64::from(t.t_p + t.t_d + 2 * t.t_f)
}

/// Probability that `k_m` users drawing from a pool of `pool_size` preambles
/// all pick distinct ones.
///
/// The approximate form is `e^{-k(k-1)/2L}`. Since `1 - x <= e^{-x}`, it is an
/// upper bound on the exact product, so `1 - e^{-k(k-1)/2L}` under-estimates
/// the collision probability.
pub fn no_preamble_collision_prob(k_m: u64, pool_size: u64, mode: Mode) -> Result<f64> {
    if pool_size == 0 {
        return Err(Error::invalid("L_pool", "pool must hold at least one preamble"));
    }
    if k_m <= 1 {
        return Ok(1.0);
    }
    let l = pool_size as f64;
    Ok(match mode {
        Mode::Exact if k_m > pool_size => 0.0,
        Mode::Exact => (1..k_m).map(|j| 1.0 - j as f64 / l).product(),
        Mode::Approx => (-((k_m * (k_m - 1)) as f64) / (2.0 * l)).exp(),
    })
}

/// A probability that is only meaningful inside a validity regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeValue {
    pub value: f64,
    pub in_regime: bool,
}

/// Average per-channel preamble-collision probability `λ² / (2 L M²)`.
///
/// The expression is derived for `λ/M < 1`. Outside that range the value is
/// still returned, flagged and logged, so sweeps can cross the boundary.
pub fn avg_preamble_collision_prob(lambda: f64, m: u64, pool_size: u64) -> Result<RegimeValue> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", format!("must be >= 0, got {lambda}")));
    }
    check_channels(m)?;
    if pool_size == 0 {
        return Err(Error::invalid("L_pool", "pool must hold at least one preamble"));
    }
    let mf = m as f64;
    let in_regime = lambda < mf;
    if !in_regime {
        log::warn!("collision model evaluated outside lambda/M < 1 (lambda={lambda}, M={m})");
    }
    Ok(RegimeValue {
        value: lambda * lambda / (2.0 * pool_size as f64 * mf * mf),
        in_regime,
    })
}

/// Smallest pool size keeping the average collision probability at or below
/// `delta`: `⌈λ² / (2 δ M²)⌉`, at least 1.
pub fn required_pool_size(lambda: f64, m: u64, delta: f64) -> Result<u64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", format!("must be > 0, got {lambda}")));
    }
    check_channels(m)?;
    check_delta(delta)?;
    let mf = m as f64;
    let raw = lambda * lambda / (2.0 * delta * mf * mf);
    // Guard against 0.64/0.02 = 32.000000000000004 style round-up.
    let rounded = raw.round();
    let size = if (raw - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded
    } else {
        raw.ceil()
    };
    Ok((size as u64).max(1))
}

/// Bits needed to carry values in `0..=max`.
pub fn field_width(max: u64) -> u32 {
    u64::BITS - max.leading_zeros()
}

/// Downlink feedback sizes for the two formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackBits {
    pub full: u64,
    pub reduced: u64,
}

/// Full format: one `⌈log₂(max_k+1)⌉`-bit count per channel. Reduced format:
/// one singleton bit per channel plus a `⌈log₂(max_w+1)⌉`-bit W field.
pub fn feedback_bits(m: u64, max_k: u64, max_w: u64) -> Result<FeedbackBits> {
    check_channels(m)?;
    if max_k == 0 || max_w == 0 {
        return Err(Error::invalid("max", "field maxima must be at least 1"));
    }
    Ok(FeedbackBits {
        full: m * u64::from(field_width(max_k)),
        reduced: m + u64::from(field_width(max_w)),
    })
}

fn check_channels(m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("M", "at least one channel is required"));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", format!("must be > 0, got {lambda}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn known_k_examples() {
        assert_eq!(single_channel_throughput_known_k(1).unwrap(), 1.0);
        assert!(close(single_channel_throughput_known_k(2).unwrap(), 0.5, 1e-12));
        let big = single_channel_throughput_known_k(1_000_000).unwrap();
        assert!((big - INV_E).abs() < 1e-4);
        assert!(single_channel_throughput_known_k(0).is_err());
    }

    #[test]
    fn known_k_decreases_toward_inv_e() {
        let mut prev = f64::INFINITY;
        let mut k = 1u64;
        while k <= 1_000_000 {
            let v = single_channel_throughput_known_k(k).unwrap();
            assert!(v >= INV_E, "K={k}: {v}");
            assert!(v <= prev, "not monotone at K={k}");
            prev = v;
            k = (k as f64 * 1.5).ceil() as u64;
        }
    }

    #[test]
    fn blind_examples() {
        assert_eq!(single_channel_throughput_blind(0.0, 5.0).unwrap(), 0.0);
        assert!(close(single_channel_throughput_blind(0.25, 4.0).unwrap(), INV_E, 1e-12));
        // 0.5 * exp(-0.5), evaluated independently with mpmath to 20 digits.
        assert!(close(
            single_channel_throughput_blind(0.5, 1.0).unwrap(),
            0.303_265_329_856_316_7,
            1e-12
        ));
        assert!(single_channel_throughput_blind(1.5, 1.0).is_err());
        assert!(single_channel_throughput_blind(-0.1, 1.0).is_err());
    }

    #[test]
    fn blind_grid_maximum_is_inv_e_at_inverse_load() {
        for lambda in [1.0, 2.0, 5.0, 20.0, 100.0] {
            let (mut best_p, mut best) = (0.0, f64::MIN);
            for i in 0..=10_000 {
                let p = i as f64 * 1e-4;
                let v = single_channel_throughput_blind(p, lambda).unwrap();
                if v > best {
                    best = v;
                    best_p = p;
                }
            }
            assert!(best <= INV_E + 1e-6);
            assert!(
                (best_p - 1.0 / lambda).abs() <= 1e-4 + 1e-12,
                "lambda={lambda} p*={best_p}"
            );
        }
    }

    #[test]
    fn conventional_examples() {
        assert_eq!(conventional_throughput(0, 5, Mode::Exact).unwrap(), 0.0);
        let m = 10_000;
        assert!(close(
            conventional_throughput(m, m, Mode::Approx).unwrap(),
            m as f64 * INV_E,
            1e-12
        ));
        assert!(close(
            conventional_throughput(10, 10, Mode::Exact).unwrap(),
            10.0 * 0.9f64.powi(9),
            1e-12
        ));
        assert!(close(
            conventional_throughput(10, 10, Mode::Exact).unwrap(),
            3.874_204_89,
            1e-9
        ));
        assert!(conventional_throughput(3, 0, Mode::Exact).is_err());
    }

    #[test]
    fn conventional_approx_error_is_order_one_over_m() {
        // Relative error is about e^{1/M} - 1, worst at K = 1, and drops
        // below 1% once M >= 100.
        for m in [50u64, 80, 100, 200] {
            for k in 1..=2 * m {
                let exact = conventional_throughput(k, m, Mode::Exact).unwrap();
                let approx = conventional_throughput(k, m, Mode::Approx).unwrap();
                let rel = (exact - approx).abs() / exact;
                assert!(rel <= (1.0 / m as f64).exp_m1() + 1e-12, "K={k} M={m}");
                if m >= 100 {
                    assert!(rel < 0.01, "K={k} M={m}");
                }
            }
        }
    }

    #[test]
    fn group1_examples() {
        for m in 1..6 {
            assert_eq!(expected_group1(1, m).unwrap(), 1.0);
        }
        assert!(close(expected_group1(3, 4).unwrap(), 1.6875, 1e-12));
        assert_eq!(expected_group1(2, 1).unwrap(), 0.0);
    }

    #[test]
    fn upper_bound_examples() {
        assert!(close(ep_throughput_upper_bound(0, 10).unwrap(), 10.0 * INV_E, 1e-12));
        let expected = 50.0 * INV_E + 50.0 * 0.98f64.powi(49) * (1.0 - INV_E);
        assert!(close(ep_throughput_upper_bound(50, 50).unwrap(), expected, 1e-12));
        let m = 1_000_000;
        let per_channel = ep_throughput_upper_bound(m, m).unwrap() / m as f64;
        assert!((per_channel - exploration_gain() * INV_E).abs() < 1e-6);
    }

    #[test]
    fn gain_is_constant() {
        assert!(close(exploration_gain(), 2.0 - (-1.0f64).exp(), 1e-15));
        assert!((exploration_gain() - 1.632).abs() < 5e-4);
        let ratio = |m: u64| ep_throughput_upper_bound(m, m).unwrap() / (m as f64 * INV_E);
        assert!((ratio(10_000_000) - exploration_gain()).abs() < 1e-6);
    }

    #[test]
    fn access_probability_cases() {
        assert_eq!(access_probability(3, 6), 0.5);
        assert_eq!(access_probability(5, 2), 1.0);
        assert_eq!(access_probability(0, 4), 0.0);
        assert_eq!(access_probability(4, 0), 1.0);
        assert_eq!(access_probability(0, 0), 0.0);
    }

    #[test]
    fn overhead_examples() {
        let t = TimingProfile::new(10, 100, 5).unwrap();
        assert!(close(overhead_factor(&t), 0.875, 1e-12));
        assert!((overhead_factor(&t) * (1.0 + t.exploration_overhead()) - 1.0).abs() < 1e-12);
        let thin = TimingProfile::new(1, 1_000_000, 1).unwrap();
        assert!(overhead_factor(&thin) > 0.99999);
        assert!(TimingProfile::new(100, 100, 5).is_err());
        assert!(TimingProfile::new(0, 100, 5).is_err());
    }

    #[test]
    fn overhead_in_unit_interval_and_increasing_in_data_length() {
        for t_p in 1..8 {
            for t_f in 1..8 {
                let mut prev = 0.0;
                for t_d in (t_p + 1)..60 {
                    let k = overhead_factor(&TimingProfile::new(t_p, t_d, t_f).unwrap());
                    assert!(k > 0.0 && k < 1.0);
                    assert!(k > prev);
                    prev = k;
                }
            }
        }
    }

    #[test]
    fn no_collision_examples() {
        for l in [1, 7, 100] {
            assert_eq!(no_preamble_collision_prob(1, l, Mode::Exact).unwrap(), 1.0);
        }
        assert!(close(
            no_preamble_collision_prob(3, 10, Mode::Exact).unwrap(),
            0.72,
            1e-12
        ));
        assert_eq!(no_preamble_collision_prob(5, 4, Mode::Exact).unwrap(), 0.0);
    }

    #[test]
    fn exponential_form_bounds_exact_product_from_above() {
        for l in 1..=256u64 {
            for k in 0..=l {
                let exact = no_preamble_collision_prob(k, l, Mode::Exact).unwrap();
                let approx = no_preamble_collision_prob(k, l, Mode::Approx).unwrap();
                assert!(exact <= approx + 1e-15, "k={k} L={l}: {exact} > {approx}");
            }
        }
        assert_eq!(no_preamble_collision_prob(2, 2, Mode::Exact).unwrap(), 0.5);
        assert!((no_preamble_collision_prob(2, 2, Mode::Approx).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn avg_collision_examples() {
        assert_eq!(avg_preamble_collision_prob(0.0, 10, 32).unwrap().value, 0.0);
        let v = avg_preamble_collision_prob(8.0, 10, 32).unwrap();
        assert!(close(v.value, 0.01, 1e-12));
        assert!(v.in_regime);
        let over = avg_preamble_collision_prob(12.0, 10, 32).unwrap();
        assert!(!over.in_regime);
        assert!(over.value > 0.0);
    }

    #[test]
    fn pool_size_examples() {
        assert_eq!(required_pool_size(8.0, 10, 0.01).unwrap(), 32);
        assert_eq!(required_pool_size(80.0, 100, 0.01).unwrap(), 32);
        assert_eq!(required_pool_size(10.0, 10, 0.01).unwrap(), 50);
        assert_eq!(required_pool_size(0.1, 10, 0.5).unwrap(), 1);
        assert!(required_pool_size(1.0, 10, 1.0).is_err());
    }

    #[test]
    fn pool_size_meets_target_and_is_monotone() {
        let m = 10;
        for delta in [0.001, 0.01, 0.05, 0.2] {
            let mut prev = 0;
            for i in 1..=100 {
                let lambda = i as f64 * 0.1;
                let l = required_pool_size(lambda, m, delta).unwrap();
                assert!(l >= prev);
                prev = l;
                let p = avg_preamble_collision_prob(lambda, m, l).unwrap().value;
                assert!(p <= delta * (1.0 + 1e-12), "lambda={lambda} delta={delta}");
            }
        }
        for lambda in [2.0, 5.0, 9.0] {
            let mut prev = u64::MAX;
            for delta in [0.001, 0.005, 0.01, 0.05, 0.1, 0.5] {
                let l = required_pool_size(lambda, m, delta).unwrap();
                assert!(l <= prev);
                prev = l;
            }
        }
    }

    #[test]
    fn feedback_bit_examples() {
        assert_eq!(feedback_bits(4, 3, 8).unwrap(), FeedbackBits { full: 8, reduced: 8 });
        assert_eq!(
            feedback_bits(64, 15, 63).unwrap(),
            FeedbackBits { full: 256, reduced: 70 }
        );
        assert_eq!(field_width(1), 1);
        assert_eq!(field_width(4), 3);
        assert_eq!(field_width(255), 8);
        assert_eq!(field_width(256), 9);
    }

    #[test]
    fn reduced_smaller_when_algebra_says_so() {
        for m in 1..40u64 {
            for max_k in 1..40u64 {
                for max_w in [1u64, 7, 8, 63, 1000] {
                    let b = feedback_bits(m, max_k, max_w).unwrap();
                    let lhs = m * (u64::from(field_width(max_k)) - 1);
                    let rhs = u64::from(field_width(max_w));
                    assert_eq!(b.reduced < b.full, lhs > rhs);
                }
            }
        }
    }

    #[test]
    fn singleton_distribution_sums_to_one_and_matches_mean() {
        for (k, m) in [(0, 3), (1, 1), (5, 3), (20, 20), (60, 50)] {
            let d = singleton_distribution(k, m).unwrap();
            let total: f64 = d.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mean: f64 = d.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
            assert!(close(mean, expected_group1(k, m).unwrap().max(1e-300), 1e-10) || k == 0);
        }
    }

    #[test]
    fn exact_ep_two_users_two_channels() {
        assert!(close(ep_throughput_exact(2, 2).unwrap(), 1.5, 1e-12));
        assert_eq!(ep_throughput_exact(0, 4).unwrap(), 0.0);
        assert_eq!(ep_throughput_exact(1, 4).unwrap(), 1.0);
    }

    #[test]
    fn poisson_averages_match_pmf_sums() {
        for (lambda, m) in [(20.0, 20u64), (20.0, 55), (8.0, 10), (0.5, 1)] {
            let mut pmf = f64::exp(-lambda);
            let (mut conv, mut bound) = (0.0, 0.0);
            for k in 0..400u64 {
                if k > 0 {
                    pmf *= lambda / k as f64;
                }
                conv += pmf * conventional_throughput(k, m, Mode::Exact).unwrap();
                bound += pmf * ep_throughput_upper_bound(k, m).unwrap();
            }
            assert!(close(conventional_throughput_poisson(lambda, m).unwrap(), conv, 1e-12));
            assert!(close(
                ep_throughput_upper_bound_poisson(lambda, m).unwrap(),
                bound,
                1e-12
            ));
        }
        assert!(conventional_throughput_poisson(0.0, 3).is_err());
        assert!(ep_throughput_upper_bound_poisson(1.0, 0).is_err());
    }
}
