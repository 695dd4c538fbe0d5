//! Binomial confidence helpers for Monte Carlo assertions.

/// Standard deviation of a sample proportion.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `|observed - p| <= k sigma`, with a floor of one count so that
/// degenerate probabilities (0 or 1) still compare sensibly.
pub fn within_sigma(observed: f64, p: f64, trials: u64, k: f64) -> bool {
    let sigma = binomial_sigma(p, trials).max(1.0 / trials as f64);
    (observed - p).abs() <= k * sigma
}
