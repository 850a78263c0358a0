//! Noise-scale estimation and Monte-Carlo threshold calibration.
//!
//! The detectors need sigma only through the threshold
//! zeta = C * sigma * sqrt(2 log T).  Robust scale estimators based on
//! scaled first differences are immune to the mean level but not to the
//! jumps themselves: when change-points are very frequent, a fifth of the
//! differences carry a jump and the estimate inflates by roughly 25%.
//! That bias is a feature under test elsewhere, not something this module
//! tries to correct.

use crate::error::{Error, Result};
use crate::rng::{mix_seed, rep_rng};
use crate::series::TimeSeries;
use crate::wbs2::{wbs2_solution_path, Wbs2Config};
use rand::distributions::Distribution;
use rand::RngCore;
use rayon::prelude::*;
use std::sync::OnceLock;

/// Gaussian consistency factor for the median absolute deviation.
const MAD_GAUSS: f64 = 1.4826;
/// Gaussian consistency factor for the inter-quartile range.
const IQR_GAUSS: f64 = 1.349;

fn median_in_place(v: &mut [f64]) -> f64 {
    debug_assert!(!v.is_empty());
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Quantile with linear interpolation between order statistics.
fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    debug_assert!(!v.is_empty() && (0.0..=1.0).contains(&p));
    let h = (v.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] + (h - i as f64) * (v[i + 1] - v[i])
}

fn scaled_differences(x: &TimeSeries) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::pre("scale estimation needs at least two points"));
    }
    let v = x.values();
    Ok(v.windows(2)
        .map(|w| (w[1] - w[0]) * std::f64::consts::FRAC_1_SQRT_2)
        .collect())
}

/// Median-absolute-deviation estimate of the noise standard deviation,
/// computed from {(x_{t+1} - x_t) / sqrt(2)}. Requires T >= 2.
pub fn mad(x: &TimeSeries) -> Result<f64> {
    let mut d = scaled_differences(x)?;
    let m = median_in_place(&mut d);
    for v in &mut d {
        *v = (*v - m).abs();
    }
    Ok(MAD_GAUSS * median_in_place(&mut d))
}

/// Inter-quartile-range estimate of the noise standard deviation, from the
/// same scaled differences as [`mad`]. Requires T >= 2.
pub fn iqr_estimator(x: &TimeSeries) -> Result<f64> {
    let mut d = scaled_differences(x)?;
    d.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok((quantile_sorted(&d, 0.75) - quantile_sorted(&d, 0.25)) / IQR_GAUSS)
}

/// Floors a noise-scale estimate so thresholds stay strictly positive on
/// degenerate data. A scale below the rounding floor of the data (noiseless
/// signals, constants) is replaced by eps * max(1, max|x|): large enough to
/// dominate accumulated rounding in the contrast statistics, small enough
/// that any genuine jump still towers above the threshold.
pub fn effective_sigma(sigma_hat: f64, max_abs_x: f64) -> f64 {
    if sigma_hat <= f64::EPSILON * max_abs_x {
        f64::EPSILON * max_abs_x.max(1.0)
    } else {
        sigma_hat
    }
}

/// The two calibration levels with shipped constant tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    P90,
    P95,
}

impl Level {
    pub fn value(self) -> f64 {
        match self {
            Level::P90 => 0.90,
            Level::P95 => 0.95,
        }
    }
}

/// Threshold constants calibrated at a set of anchor lengths, interpolated
/// log-linearly in T between anchors and clamped outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTable {
    pub level: f64,
    /// (T, C) pairs, strictly increasing in T.
    pub anchors: Vec<(usize, f64)>,
}

impl ConstantTable {
    pub fn new(level: f64, anchors: Vec<(usize, f64)>) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::input("level must lie strictly between 0 and 1"));
        }
        if anchors.is_empty() {
            return Err(Error::input("constant table needs at least one anchor"));
        }
        for (i, &(t, c)) in anchors.iter().enumerate() {
            if t < 1 || !(c > 0.0 && c.is_finite()) {
                return Err(Error::input(format!("bad anchor ({t}, {c})")));
            }
            if i > 0 && anchors[i - 1].0 >= t {
                return Err(Error::input("anchor lengths must be strictly increasing"));
            }
        }
        Ok(ConstantTable { level, anchors })
    }

    /// Parses the two-column `T constant` format with a `# level=<p>`
    /// header line; other `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut level: Option<f64> = None;
        let mut anchors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if level.is_none() {
                    if let Some(rest) = comment.trim().strip_prefix("level=") {
                        level = Some(rest.trim().parse::<f64>().map_err(|e| Error::Parse {
                            line: lineno,
                            msg: format!("bad level: {e}"),
                        })?);
                    }
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let (a, b) = (it.next(), it.next());
            if it.next().is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected exactly two columns: T constant".into(),
                });
            }
            match (a, b) {
                (Some(t), Some(c)) => {
                    let t: usize = t.parse().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("bad length: {e}"),
                    })?;
                    let c: f64 = c.parse().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("bad constant: {e}"),
                    })?;
                    anchors.push((t, c));
                }
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "expected two columns: T constant".into(),
                    })
                }
            }
        }
        let level = level.ok_or(Error::Parse {
            line: 1,
            msg: "missing `# level=<p>` header".into(),
        })?;
        ConstantTable::new(level, anchors)
    }

    /// Renders the format accepted by [`ConstantTable::parse`].
    pub fn format(&self) -> String {
        let mut out = format!("# level={}\n", self.level);
        for &(t, c) in &self.anchors {
            out.push_str(&format!("{t} {c}\n"));
        }
        out
    }

    /// The constant for a series of length `t_len`: piecewise linear in
    /// log T between anchors, constant beyond the first and last.
    pub fn interpolate(&self, t_len: usize) -> f64 {
        let t = t_len.max(1);
        let first = self.anchors[0];
        let last = *self.anchors.last().unwrap();
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        let i = self.anchors.partition_point(|&(at, _)| at < t);
        let (t0, c0) = self.anchors[i - 1];
        let (t1, c1) = self.anchors[i];
        if t == t1 {
            return c1;
        }
        let w = ((t as f64).ln() - (t0 as f64).ln()) / ((t1 as f64).ln() - (t0 as f64).ln());
        c0 + w * (c1 - c0)
    }
}

/// Calibrates the threshold constant on a grid of series lengths.
///
/// For each T, `reps` standard-normal null series are simulated and their
/// full solution paths computed; since the simulated noise scale is 1 by
/// construction, a run reports zero change-points exactly when its top path
/// statistic falls below C * sqrt(2 ln T).  Bisection (to width 0.005)
/// finds the smallest C whose zero-report fraction reaches `level`.
///
/// Precision grows with `reps`; values under ~1000 are fine for smoke
/// tests but too coarse to ship.
pub fn calibrate_constant(
    t_grid: &[usize],
    level: f64,
    reps: usize,
    seed: u64,
) -> Result<ConstantTable> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::pre("level must lie strictly between 0 and 1"));
    }
    if reps < 1 {
        return Err(Error::pre("calibration needs at least one replication"));
    }
    let mut grid: Vec<usize> = t_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::pre("calibration grid is empty"));
    }
    if grid[0] < 2 {
        return Err(Error::pre("calibration lengths must be at least 2"));
    }
    let mut anchors = Vec::with_capacity(grid.len());
    for &t_len in &grid {
        let ratios = null_top_stat_ratios(t_len, reps, seed)?;
        anchors.push((t_len, bisect_smallest_feasible(&ratios, level)?));
    }
    ConstantTable::new(level, anchors)
}

/// Top path statistic over sqrt(2 ln T) for `reps` null series.
fn null_top_stat_ratios(t_len: usize, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let scale = (2.0 * (t_len as f64).ln()).sqrt();
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(mix_seed(seed, t_len as u64), rep as u64);
            let noise: Vec<f64> = (0..t_len)
                .map(|_| rand_distr::StandardNormal.sample(&mut rng))
                .collect();
            let x = TimeSeries::new(noise)?;
            let cfg = Wbs2Config {
                seed: rng.next_u64(),
                ..Wbs2Config::default()
            };
            let path = wbs2_solution_path(&x, &cfg)?;
            Ok(path.entries[0].stat / scale)
        })
        .collect()
}

/// Smallest c (within 0.005) such that at least `level` of the ratios lie
/// strictly below c.
fn bisect_smallest_feasible(ratios: &[f64], level: f64) -> Result<f64> {
    let feasible = |c: f64| {
        let hit = ratios.iter().filter(|r| **r < c).count();
        hit as f64 / ratios.len() as f64 >= level
    };
    let mut iters = 0;
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while !feasible(hi) {
        lo = hi;
        hi *= 2.0;
        iters += 1;
        if iters > 40 {
            return Err(Error::Calibration(format!(
                "no feasible constant below {hi:.3e}; top-stat ratios look unbounded"
            )));
        }
    }
    while hi - lo > 0.005 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iters += 1;
        if iters > 40 {
            return Err(Error::Calibration(format!(
                "bisection failed to narrow [{lo}, {hi}] within 40 iterations"
            )));
        }
    }
    Ok(hi)
}

static TABLE_90: OnceLock<ConstantTable> = OnceLock::new();
static TABLE_95: OnceLock<ConstantTable> = OnceLock::new();

/// The shipped calibration table for a level. Regenerate with the CLI's
/// `calibrate` command; the sources embed the output verbatim.
pub fn default_table(level: Level) -> &'static ConstantTable {
    let (slot, text) = match level {
        Level::P90 => (&TABLE_90, include_str!("tables/level90.txt")),
        Level::P95 => (&TABLE_95, include_str!("tables/level95.txt")),
    };
    slot.get_or_init(|| ConstantTable::parse(text).expect("shipped table parses"))
}

/// Shipped threshold constant for a series of length `t_len`.
pub fn constant_for(level: Level, t_len: usize) -> f64 {
    default_table(level).interpolate(t_len)
}
