//! Domain types and the CUSUM primitives every detector is built from.
//!
//! Indices are 1-based in all public signatures: a series has positions
//! 1..=T and a change-point at b means the mean level differs between
//! positions b and b+1.

use crate::dd::Dd;
use crate::error::{Error, Result};

/// An observed series together with extended-precision prefix sums,
/// enabling O(1) evaluation of any segment sum.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    values: Vec<f64>,
    prefix: Vec<Dd>,
}

impl TimeSeries {
    /// Validates and wraps a series. Requires T >= 1 and finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("series must contain at least one value"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite value {} at position {}",
                values[i],
                i + 1
            )));
        }
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(Dd::ZERO);
        let mut acc = Dd::ZERO;
        for &v in &values {
            acc = acc.add_f64(v);
            prefix.push(acc);
        }
        Ok(TimeSeries { values, prefix })
    }

    /// Number of observations T.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // construction requires T >= 1
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sum of the first `t` values (t in 0..=T), rounded to f64.
    #[inline]
    pub fn prefix_sum(&self, t: usize) -> f64 {
        self.prefix[t].to_f64()
    }

    /// Largest |x_t|; used to scale degenerate-noise guards.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Extended-precision sum over positions s..=e (1-based, inclusive).
    #[inline]
    pub(crate) fn sum_dd(&self, s: usize, e: usize) -> Dd {
        self.prefix[e].sub(self.prefix[s - 1])
    }

    /// Mean over positions s..=e (1-based, inclusive).
    pub fn segment_mean(&self, s: usize, e: usize) -> f64 {
        if s == e {
            return self.values[s - 1]; // exact for singletons
        }
        self.sum_dd(s, e).to_f64() / (e - s + 1) as f64
    }
}

/// A candidate interval [s, e], 1-based inclusive, holding >= 2 positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub s: usize,
    pub e: usize,
}

impl Interval {
    pub fn new(s: usize, e: usize) -> Result<Self> {
        if s < 1 || e <= s {
            return Err(Error::pre(format!(
                "interval [{s}, {e}] must satisfy 1 <= s < e"
            )));
        }
        Ok(Interval { s, e })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.e - self.s + 1
    }
}

/// One solution-path record: the contrast magnitude `stat` observed at
/// split b of interval [s, e].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEntry {
    pub s: usize,
    pub e: usize,
    pub b: usize,
    pub stat: f64,
}

/// An ordered sequence of candidate change-points; after the sort stage the
/// stats are non-increasing. A complete path on T points has T-1 entries
/// whose b values exhaust {1, ..., T-1}.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolutionPath {
    pub entries: Vec<PathEntry>,
}

impl SolutionPath {
    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_sorted_non_increasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].stat >= w[1].stat)
    }

    /// Whether the path covers every possible split of a length-T series.
    pub fn is_complete(&self, t_len: usize) -> bool {
        if t_len == 0 || self.entries.len() != t_len - 1 {
            return t_len <= 1 && self.entries.is_empty();
        }
        let mut seen = vec![false; t_len]; // index b in 1..=T-1
        for en in &self.entries {
            if en.b < 1 || en.b >= t_len || seen[en.b] {
                return false;
            }
            seen[en.b] = true;
        }
        true
    }

    /// The first `n` split locations in path order, sorted increasingly.
    pub fn sorted_b_prefix(&self, n: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.entries.iter().take(n).map(|en| en.b).collect();
        out.sort_unstable();
        out
    }
}

/// A fitted segmentation: N̂ change-points, their sorted locations, and the
/// piecewise-mean fit of the same length as the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointModel {
    pub n_hat: usize,
    pub locations: Vec<usize>,
    pub fit: Vec<f64>,
}

/// The contrast statistic at split b of [s, e]:
///
///   sqrt(nr / (n*nl)) * sum(s..=b)  -  sqrt(nl / (n*nr)) * sum(b+1..=e)
///
/// with n = e-s+1, nl = b-s+1, nr = e-b.  Evaluated in O(1) from prefix
/// sums as (n*L - nl*S) / sqrt(n*nl*nr), which cancels exactly when the
/// segment is flat.
pub fn cusum_at(x: &TimeSeries, s: usize, e: usize, b: usize) -> Result<f64> {
    if s < 1 || e > x.len() || s > b || b >= e {
        return Err(Error::pre(format!(
            "cusum requires 1 <= s <= b < e <= T, got s={s} b={b} e={e} T={}",
            x.len()
        )));
    }
    Ok(cusum_at_unchecked(x, s, e, b))
}

#[inline]
pub(crate) fn cusum_at_unchecked(x: &TimeSeries, s: usize, e: usize, b: usize) -> f64 {
    debug_assert!(s >= 1 && s <= b && b < e && e <= x.len());
    let total = x.sum_dd(s, e);
    cusum_from_sums(x, s, e, b, total)
}

/// Shared kernel: `total` must equal sum_dd(s, e).
#[inline]
fn cusum_from_sums(x: &TimeSeries, s: usize, e: usize, b: usize, total: Dd) -> f64 {
    let n = (e - s + 1) as f64;
    let nl = (b - s + 1) as f64;
    let nr = (e - b) as f64;
    let left = x.sum_dd(s, b);
    let d = left.mul_f64(n).sub(total.mul_f64(nl)).to_f64();
    d / (n * nl * nr).sqrt()
}

/// The split maximizing |cusum| over b in {s, ..., e-1}, with ties broken
/// toward the smallest b. Returns (b, |stat|).
pub fn cusum_argmax(x: &TimeSeries, s: usize, e: usize) -> Result<(usize, f64)> {
    if s < 1 || e > x.len() || e - s < 1 {
        return Err(Error::pre(format!(
            "argmax requires 1 <= s < e <= T, got s={s} e={e} T={}",
            x.len()
        )));
    }
    Ok(cusum_argmax_unchecked(x, s, e))
}

#[inline]
pub(crate) fn cusum_argmax_unchecked(x: &TimeSeries, s: usize, e: usize) -> (usize, f64) {
    let total = x.sum_dd(s, e);
    let mut best_b = s;
    let mut best = -1.0;
    for b in s..e {
        let a = cusum_from_sums(x, s, e, b, total).abs();
        if a > best {
            best = a;
            best_b = b;
        }
    }
    (best_b, best)
}

/// Fits segment means for the given split locations. Locations must be
/// strictly increasing and lie in {1, ..., T-1}; empty is allowed.
pub fn fit_piecewise_mean(x: &TimeSeries, locations: &[usize]) -> Result<ChangePointModel> {
    let t_len = x.len();
    for (i, &loc) in locations.iter().enumerate() {
        if loc < 1 || loc >= t_len {
            return Err(Error::pre(format!(
                "location {loc} outside 1..{}",
                t_len - 1
            )));
        }
        if i > 0 && locations[i - 1] >= loc {
            return Err(Error::pre(format!(
                "locations must be strictly increasing, got {} then {}",
                locations[i - 1],
                loc
            )));
        }
    }
    let mut fit = vec![0.0; t_len];
    let mut lo = 0; // segment is (lo, hi], 1-based positions lo+1..=hi
    for seg in 0..=locations.len() {
        let hi = if seg < locations.len() {
            locations[seg]
        } else {
            t_len
        };
        let mean = x.segment_mean(lo + 1, hi);
        for f in &mut fit[lo..hi] {
            *f = mean;
        }
        lo = hi;
    }
    Ok(ChangePointModel {
        n_hat: locations.len(),
        locations: locations.to_vec(),
        fit,
    })
}
