//! Exact enumeration over the responder subsets of a small absorber set.

/// Channel-detection probabilities conditional on at least one confirmation,
/// enumerated over every subset of responding absorbers.
///
/// `absorbers[i]` is the channel index of absorber `i`; `weights[k]` is
/// `|a_k|^2`. When `responders_only` is false the winner is drawn over all
/// absorbers (channel by weight, then uniformly inside the channel); when
/// true it is drawn only among the absorbers that responded.
pub fn conditional_channel_probs(
    absorbers: &[usize],
    weights: &[f64],
    alpha: f64,
    responders_only: bool,
) -> Vec<f64> {
    let n = absorbers.len();
    assert!(n < 20, "enumeration is exponential");
    let mut probs = vec![0.0; weights.len()];
    let mut gate = 0.0;
    for mask in 1u32..(1 << n) {
        let k = mask.count_ones() as i32;
        let p_subset = alpha.powi(k) * (1.0 - alpha).powi(n as i32 - k);
        gate += p_subset;
        let pool: Vec<usize> = if responders_only {
            (0..n).filter(|i| mask & (1 << i) != 0).collect()
        } else {
            (0..n).collect()
        };
        let mut per_channel = vec![0usize; weights.len()];
        for &i in &pool {
            per_channel[absorbers[i]] += 1;
        }
        let norm: f64 = (0..weights.len())
            .filter(|&c| per_channel[c] > 0)
            .map(|c| weights[c])
            .sum();
        for c in 0..weights.len() {
            if per_channel[c] > 0 {
                probs[c] += p_subset * weights[c] / norm;
            }
        }
    }
    probs.iter().map(|p| p / gate).collect()
}

/// Smallest `n` with `1 - (1-alpha)^n >= target`, by linear scan.
pub fn threshold_scan(alpha: f64, target: f64) -> u64 {
    let mut survive = 1.0f64;
    let mut n = 0u64;
    while 1.0 - survive < target {
        survive *= 1.0 - alpha;
        n += 1;
    }
    n
}
