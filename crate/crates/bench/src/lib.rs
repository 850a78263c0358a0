//! Shared input builders for the benchmark targets.

use cpd_core::rng::rep_rng;
use cpd_core::TimeSeries;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

/// Standard normal noise of length `t_len`, deterministic in `seed`.
pub fn noise_series(t_len: usize, seed: u64) -> TimeSeries {
    let mut rng = rep_rng(seed, 0);
    let values: Vec<f64> = (0..t_len)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    TimeSeries::new(values).unwrap()
}

/// Noisy staircase with a jump of `gap` every `period` points.
pub fn staircase_series(t_len: usize, period: usize, gap: f64, seed: u64) -> TimeSeries {
    let mut rng = rep_rng(seed, 1);
    let values: Vec<f64> = (0..t_len)
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (t / period) as f64 * gap + z
        })
        .collect();
    TimeSeries::new(values).unwrap()
}

/// A fresh detector seed per call site, kept away from the data seeds.
pub fn detector_seed(tag: u64) -> u64 {
    rep_rng(0xBE2C, tag).gen()
}
