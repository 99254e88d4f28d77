//! Exact expectations by exhaustive enumeration, for checking the simulator
//! and the closed forms on small instances.

use std::collections::HashMap;

use crate::analytic::access_probability;
use crate::error::{Error, Result};

/// Size limits `(max K, max M)` for [`brute_force_ep`].
pub const MAX_EP_ORACLE: (u64, u64) = (6, 4);
/// Size limits `(max K, max M)` for [`brute_force_conventional`].
pub const MAX_CONVENTIONAL_ORACLE: (u64, u64) = (8, 4);

fn check_size(k: u64, m: u64, (max_k, max_m): (u64, u64)) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("M", "at least one channel is required"));
    }
    if k > max_k || m > max_m {
        return Err(Error::OracleTooLarge { k, m, max_k, max_m });
    }
    Ok(())
}

/// Calls `f` with every assignment of `k` users to `m` channels.
fn for_each_assignment(k: usize, m: usize, mut f: impl FnMut(&[usize])) {
    let mut choice = vec![0usize; k];
    loop {
        f(&choice);
        let mut pos = 0;
        loop {
            if pos == k {
                return;
            }
            choice[pos] += 1;
            if choice[pos] < m {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

fn channel_counts(choice: &[usize], m: usize) -> Vec<u32> {
    let mut counts = vec![0u32; m];
    for &c in choice {
        counts[c] += 1;
    }
    counts
}

/// Exact expected collision-free packets of plain multichannel ALOHA.
pub fn brute_force_conventional(k: u64, m: u64) -> Result<f64> {
    check_size(k, m, MAX_CONVENTIONAL_ORACLE)?;
    let (k, m) = (k as usize, m as usize);
    let mut total = 0u64;
    let mut cases = 0u64;
    for_each_assignment(k, m, |choice| {
        total += channel_counts(choice, m).iter().filter(|&&n| n == 1).count() as u64;
        cases += 1;
    });
    Ok(total as f64 / cases as f64)
}

/// Expected Group II successes for `w` contenders over `l` free channels,
/// by enumerating every user's action: stay silent with probability `1 - p`,
/// or transmit on each free channel with probability `p / l`.
fn group2_by_enumeration(w: usize, l: usize) -> f64 {
    if w == 0 || l == 0 {
        return 0.0;
    }
    let p = access_probability(l as u64, w as u64);
    let silent = 1.0 - p;
    let on_channel = p / l as f64;
    let mut expectation = 0.0;
    // Action l means silent; actions 0..l pick a channel.
    for_each_assignment(w, l + 1, |actions| {
        let mut weight = 1.0;
        let mut load = vec![0u32; l];
        for &a in actions {
            if a == l {
                weight *= silent;
            } else {
                weight *= on_channel;
                load[a] += 1;
            }
        }
        if weight > 0.0 {
            expectation += weight * load.iter().filter(|&&n| n == 1).count() as f64;
        }
    });
    expectation
}

/// Exact expected collision-free packets with exploration and ideal feedback.
///
/// Enumerates all `M^K` preamble-channel assignments. For each, Group I
/// contributes `S`, and Group II's expectation is obtained by enumerating all
/// `(L_free + 1)^W` transmit/channel decisions (memoized by `(W, L_free)`).
pub fn brute_force_ep(k: u64, m: u64) -> Result<f64> {
    check_size(k, m, MAX_EP_ORACLE)?;
    let (k, m) = (k as usize, m as usize);
    let mut memo: HashMap<(usize, usize), f64> = HashMap::new();
    let mut total = 0.0;
    let mut cases = 0u64;
    for_each_assignment(k, m, |choice| {
        let counts = channel_counts(choice, m);
        let s = counts.iter().filter(|&&n| n == 1).count();
        let (w, l) = (k - s, m - s);
        let g2 = *memo.entry((w, l)).or_insert_with(|| group2_by_enumeration(w, l));
        total += s as f64 + g2;
        cases += 1;
    });
    Ok(total / cases as f64)
}
