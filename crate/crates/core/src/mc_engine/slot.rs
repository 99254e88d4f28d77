use rand::Rng;

use super::{FeedbackPath, Fidelity, SlotConfig};
use crate::analytic::access_probability;
use crate::feedback_codec::{decode_full, decode_reduced, encode_full, encode_reduced, ReducedFeedback};

/// Ground-truth record of one exploration slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    /// True preamble count per channel.
    pub k_vec: Vec<u32>,
    /// Counts broadcast by the base station under physical fidelity.
    pub estimated_counts: Option<Vec<u32>>,
    /// `S`: channels with exactly one preamble.
    pub singletons: u64,
    /// `W = K - S`.
    pub contending: u64,
    /// `L_free = M - S`.
    pub free_channels: u64,
    /// `U`: users acting as Group II that sent a data packet.
    pub transmitters: u64,
    /// Access probability applied by Group II, from the feedback users saw.
    pub p_dtp: f64,
    pub group1_success: u64,
    pub group2_success: u64,
}

impl SlotOutcome {
    pub fn active_users(&self) -> u64 {
        self.k_vec.iter().map(|&k| u64::from(k)).sum()
    }

    pub fn successes(&self) -> u64 {
        self.group1_success + self.group2_success
    }
}

/// One slot of plain multichannel ALOHA: the number of channels picked by
/// exactly one of `k` users.
pub fn simulate_slot_conventional<R: Rng + ?Sized>(channels: usize, k: u64, rng: &mut R) -> u64 {
    let mut load = vec![0u32; channels];
    for _ in 0..k {
        load[rng.random_range(0..channels)] += 1;
    }
    load.iter().filter(|&&n| n == 1).count() as u64
}

/// One slot with an exploration phase.
///
/// 1. Every user sends a preamble on a uniformly chosen channel.
/// 2. The base station broadcasts per-channel counts: the truth under ideal
///    fidelity, sparse-recovery estimates under physical fidelity. The counts
///    optionally pass through a feedback encoder/decoder.
/// 3. Users on a channel reported as a singleton transmit there (Group I).
///    Everyone else transmits with probability `min(1, L_free / W)`, computed
///    from the reported counts, on a uniform channel among those not reported
///    as singletons (Group II).
///
/// A data packet succeeds when its channel carries no other packet. Outcome
/// fields other than `p_dtp` and `estimated_counts` are ground truth.
pub fn simulate_slot_ep<R: Rng + ?Sized>(cfg: &SlotConfig, k: u64, rng: &mut R) -> SlotOutcome {
    let m = cfg.channels;
    let user_channel: Vec<usize> = (0..k).map(|_| rng.random_range(0..m)).collect();
    let mut k_vec = vec![0u32; m];
    for &ch in &user_channel {
        k_vec[ch] += 1;
    }

    let (broadcast, limit) = match &cfg.fidelity {
        Fidelity::Ideal => (k_vec.clone(), k),
        Fidelity::Physical(phy) => {
            let pool_len = phy.pool.len();
            let mut per_channel: Vec<Vec<usize>> = vec![Vec::new(); m];
            for &ch in &user_channel {
                per_channel[ch].push(rng.random_range(0..pool_len));
            }
            let snr = phy.snr();
            let estimated = per_channel
                .iter()
                .map(|preambles| {
                    phy.detector
                        .detect_count(&phy.pool, preambles, snr, rng)
                        .expect("preamble indices are drawn inside the pool") as u32
                })
                .collect();
            (estimated, k.max(m as u64 * phy.max_count()))
        }
    };
    let view = deliver_feedback(&broadcast, cfg.feedback, limit.max(1));

    let contended = view.contended_channels();
    let p_dtp = access_probability(view.free_channels() as u64, view.contending);
    let mut dtp_load = vec![0u32; m];
    let mut transmitters = 0u64;
    for &ch in &user_channel {
        if view.bitmap[ch] {
            dtp_load[ch] += 1;
        } else {
            let transmit = rng.random::<f64>() < p_dtp;
            if transmit {
                transmitters += 1;
                dtp_load[contended[rng.random_range(0..contended.len())]] += 1;
            }
        }
    }

    let mut group1_success = 0;
    let mut group2_success = 0;
    for (ch, &n) in dtp_load.iter().enumerate() {
        if n == 1 {
            if view.bitmap[ch] {
                group1_success += 1;
            } else {
                group2_success += 1;
            }
        }
    }

    let singletons = k_vec.iter().filter(|&&n| n == 1).count() as u64;
    let estimated_counts = match cfg.fidelity {
        Fidelity::Ideal => None,
        Fidelity::Physical(_) => Some(broadcast),
    };
    SlotOutcome {
        k_vec,
        estimated_counts,
        singletons,
        contending: k - singletons,
        free_channels: m as u64 - singletons,
        transmitters,
        p_dtp,
        group1_success,
        group2_success,
    }
}

fn deliver_feedback(counts: &[u32], path: FeedbackPath, limit: u64) -> ReducedFeedback {
    const MSG: &str = "feedback values are bounded by the slot's limit";
    match path {
        FeedbackPath::Direct => ReducedFeedback::from_counts(counts),
        FeedbackPath::FullCodec => {
            let bits = encode_full(counts, limit).expect(MSG);
            decode_full(&bits, counts.len(), limit).expect(MSG).reduce()
        }
        FeedbackPath::ReducedCodec => {
            let bits = encode_reduced(&ReducedFeedback::from_counts(counts), limit).expect(MSG);
            decode_reduced(&bits, counts.len(), limit).expect(MSG)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::conventional_throughput;
    use crate::analytic::Mode;
    use crate::mc_engine::{Arrival, Moments};
    use crate::rng::trial_rng;
    use rand::RngCore;

    struct ZeroRng;

    impl RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0);
        }
    }

    fn ideal(m: usize) -> SlotConfig {
        SlotConfig::new(m, Arrival::Fixed(0), 1).unwrap()
    }

    #[test]
    fn conventional_trivial_cases() {
        let mut rng = trial_rng(0, 0);
        assert_eq!(simulate_slot_conventional(5, 0, &mut rng), 0);
        for _ in 0..100 {
            assert_eq!(simulate_slot_conventional(5, 1, &mut rng), 1);
        }
    }

    #[test]
    fn conventional_mean_matches_closed_form() {
        let n = 200_000;
        let acc = (0..n).fold(Moments::default(), |a, i| {
            a.merge(Moments::one(simulate_slot_conventional(10, 10, &mut trial_rng(3, i))))
        });
        let exact = conventional_throughput(10, 10, Mode::Exact).unwrap();
        assert!(
            (acc.mean() - exact).abs() <= 3.0 * acc.stderr(),
            "{} vs {exact}",
            acc.mean()
        );
    }

    #[test]
    fn lone_user_is_group_one() {
        let out = simulate_slot_ep(&ideal(4), 1, &mut trial_rng(0, 0));
        assert_eq!(out.singletons, 1);
        assert_eq!(out.contending, 0);
        assert_eq!(out.group1_success, 1);
        assert_eq!(out.group2_success, 0);
    }

    #[test]
    fn scenario_channel_picks() {
        // Search for a stream whose first three channel draws are {2, 3, 3}.
        let cfg = ideal(4);
        let found = (0..10_000u64).find_map(|i| {
            let mut probe = trial_rng(5, i);
            let picks: Vec<usize> = (0..3).map(|_| probe.random_range(0..4)).collect();
            (picks == [2, 3, 3]).then(|| simulate_slot_ep(&cfg, 3, &mut trial_rng(5, i)))
        });
        let out = found.expect("some stream starts with 2,3,3");
        assert_eq!(out.k_vec, vec![0, 0, 1, 2]);
        assert_eq!(out.singletons, 1);
        assert_eq!(out.contending, 2);
        assert_eq!(out.free_channels, 3);
        assert_eq!(out.group1_success, 1);
        assert_eq!(out.p_dtp, 1.0);
    }

    #[test]
    fn slot_invariants_hold() {
        for m in [1usize, 2, 3, 7, 20] {
            let cfg = ideal(m);
            for i in 0..2000u64 {
                let mut rng = trial_rng(9, i);
                let k = rng.random_range(0..(3 * m as u64 + 2));
                let out = simulate_slot_ep(&cfg, k, &mut rng);
                assert_eq!(out.active_users(), k);
                assert_eq!(out.singletons + out.contending, k);
                assert_eq!(out.singletons + out.free_channels, m as u64);
                assert_eq!(out.group1_success, out.singletons);
                assert!(out.transmitters <= out.contending);
                assert!(out.group2_success <= out.transmitters.min(out.free_channels));
                assert_eq!(out.p_dtp, access_probability(out.free_channels, out.contending));
            }
        }
    }

    #[test]
    fn codec_paths_are_transparent() {
        for path in [FeedbackPath::FullCodec, FeedbackPath::ReducedCodec] {
            let direct = ideal(6);
            let coded = ideal(6).with_feedback(path);
            for i in 0..3000u64 {
                let k = i % 15;
                let a = simulate_slot_ep(&direct, k, &mut trial_rng(4, i));
                let b = simulate_slot_ep(&coded, k, &mut trial_rng(4, i));
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn shared_single_channel_collides() {
        // One channel, two users: both contend, L_free = 1 and p = 1/2.
        // A mock RNG pinned at zero picks channel 0 and always transmits.
        let cfg = ideal(1);
        let out = simulate_slot_ep(&cfg, 2, &mut ZeroRng);
        assert_eq!(out.p_dtp, 0.5);
        assert_eq!(out.transmitters, 2);
        assert_eq!(out.group2_success, 0);
    }
}
