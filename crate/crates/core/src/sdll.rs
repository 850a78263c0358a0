//! Model selection by the steepest drop to low levels.
//!
//! Given a solution path sorted by decreasing contrast magnitude, the
//! selector looks for the largest log-drop between consecutive magnitudes
//! among positions whose lower side has already fallen below a threshold
//! zeta = C * sigma * sqrt(2 log T); everything before the drop is kept.
//! Unlike plain thresholding, this reads the global shape of the path, so
//! one undersized spike in a frequent-change-point signal does not
//! truncate the model.

use crate::error::{Error, Result};
use crate::estimation::{effective_sigma, mad};
use crate::series::{fit_piecewise_mean, ChangePointModel, SolutionPath, TimeSeries};
use crate::wbs2::{wbs2_solution_path, Wbs2Config};

/// Selector configuration.
#[derive(Debug, Clone)]
pub struct SdllConfig {
    /// Threshold constant C.
    pub threshold_constant: f64,
    /// Gate excluding drops whose lower side is below beta * zeta; keeps
    /// every logarithm in the drop search away from zero.
    pub beta: f64,
    /// Noise scale. `None` lets `detect` estimate it from the data.
    pub sigma_hat: Option<f64>,
}

impl Default for SdllConfig {
    fn default() -> Self {
        SdllConfig {
            threshold_constant: 1.0,
            beta: 0.3,
            sigma_hat: None,
        }
    }
}

impl SdllConfig {
    pub fn with_constant(threshold_constant: f64) -> Self {
        SdllConfig {
            threshold_constant,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.threshold_constant > 0.0 && self.threshold_constant.is_finite()) {
            return Err(Error::pre("threshold constant must be positive"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::pre("beta must lie strictly between 0 and 1"));
        }
        if let Some(s) = self.sigma_hat {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::pre("sigma_hat must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// Number of leading path entries kept at threshold `zeta`, operating on
/// the sorted stat sequence alone.
///
/// Walkthrough: nothing survives when the top stat is under zeta; K bounds
/// the search to stats still above beta * zeta; among k <= K whose next
/// stat has dropped to zeta or below, the largest log-drop
/// log stat_k - log stat_{k+1} wins (smallest k on ties); if no next stat
/// is that low yet, all K+1 leading entries are kept.
fn sdll_count(stats: &[f64], zeta: f64, beta: f64) -> usize {
    debug_assert!(zeta > 0.0);
    if stats.is_empty() || stats[0] < zeta {
        return 0;
    }
    let gate = beta * zeta;
    // Sorted non-increasing, so the gated region is a prefix.
    let k_max = stats[1..].iter().take_while(|s| **s >= gate).count();
    if k_max == 0 {
        return 1;
    }
    let mut best_k = 0usize;
    let mut best_drop = f64::NEG_INFINITY;
    for k in 1..=k_max {
        if stats[k] <= zeta {
            debug_assert!(stats[k] > 0.0, "beta gate admitted a zero stat");
            let drop = stats[k - 1].ln() - stats[k].ln();
            if drop > best_drop {
                best_drop = drop;
                best_k = k;
            }
        }
    }
    if best_k == 0 {
        k_max + 1
    } else {
        best_k
    }
}

/// Selects change-point locations from a sorted solution path: the split
/// positions of the first N̂ entries, sorted increasingly.
///
/// Preconditions: `path` sorted by non-increasing stat, `t_len` >= 2, and a
/// strictly positive threshold; pass a degenerate noise scale through
/// [`effective_sigma`] before calling.
pub fn sdll_select(path: &SolutionPath, t_len: usize, cfg: &SdllConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let sigma = cfg
        .sigma_hat
        .ok_or_else(|| Error::pre("sigma_hat must be resolved before selection"))?;
    if t_len < 2 {
        return Err(Error::pre("selection needs t_len >= 2"));
    }
    if !path.is_sorted_non_increasing() {
        return Err(Error::pre("path stats must be sorted non-increasing"));
    }
    let zeta = cfg.threshold_constant * sigma * (2.0 * (t_len as f64).ln()).sqrt();
    if !(zeta > 0.0) {
        return Err(Error::pre(
            "threshold is not positive; resolve a zero noise scale via effective_sigma",
        ));
    }
    let stats: Vec<f64> = path.entries.iter().map(|en| en.stat).collect();
    let n_hat = sdll_count(&stats, zeta, cfg.beta);
    Ok(path.sorted_b_prefix(n_hat))
}

/// Full pipeline: solution path, noise scale, selection, piecewise fit.
///
/// When `sdll.sigma_hat` is `None` the scale is estimated from scaled first
/// differences; either way it is floored by [`effective_sigma`] so that
/// noiseless and constant inputs behave exactly (full recovery and zero
/// detections respectively). A series with T < 2 yields no change-points.
pub fn detect(x: &TimeSeries, wbs2: &Wbs2Config, sdll: &SdllConfig) -> Result<ChangePointModel> {
    sdll.validate()?;
    if x.len() < 2 {
        return fit_piecewise_mean(x, &[]);
    }
    let path = wbs2_solution_path(x, wbs2)?;
    let sigma_raw = match sdll.sigma_hat {
        Some(s) => s,
        None => mad(x)?,
    };
    let resolved = SdllConfig {
        sigma_hat: Some(effective_sigma(sigma_raw, x.max_abs())),
        ..sdll.clone()
    };
    let locations = sdll_select(&path, x.len(), &resolved)?;
    fit_piecewise_mean(x, &locations)
}
