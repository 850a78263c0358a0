//! Complete solution paths by adaptive recursive interval sampling.
//!
//! On every current domain [s, e] a fresh batch of candidate intervals is
//! drawn (all subintervals when the domain is small enough, a random sample
//! otherwise), the strongest contrast across all candidates picks the next
//! split, and the recursion continues on both sides until single points
//! remain.  This always yields T-1 candidates, one per possible split, in
//! O(T log^2 T) expected time for balanced splits.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::series::{
    cusum_argmax_unchecked, fit_piecewise_mean, ChangePointModel, Interval, PathEntry,
    SolutionPath, TimeSeries,
};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_chacha::rand_core::SeedableRng;

/// Tuning knobs for the solution-path recursion.
#[derive(Debug, Clone)]
pub struct Wbs2Config {
    /// Number of intervals drawn per domain before falling back to full
    /// enumeration on small domains.
    pub m_tilde: usize,
    pub seed: u64,
    /// In the sampling branch, also evaluate the current domain itself as
    /// one extra candidate. Costs nothing and guarantees the recursion
    /// dominates plain top-down splitting; disable to reproduce the pure
    /// sampling scheme.
    pub include_domain: bool,
}

impl Default for Wbs2Config {
    fn default() -> Self {
        Wbs2Config {
            m_tilde: 100,
            seed: 0,
            include_domain: true,
        }
    }
}

impl Wbs2Config {
    pub fn with_seed(seed: u64) -> Self {
        Wbs2Config {
            seed,
            ..Self::default()
        }
    }
}

/// Number of subintervals of [s, e] holding at least two points.
#[inline]
fn pair_count(s: usize, e: usize) -> usize {
    let len = e - s + 1;
    len * (len - 1) / 2
}

/// Fills `out` with candidate intervals for domain [s, e]: every
/// subinterval when `m_tilde` covers their count, otherwise `m_tilde`
/// intervals with endpoints drawn uniformly with replacement from
/// {s, ..., e}, redrawn until they span at least two points.
/// Returns true when the enumeration branch was taken.
fn draw_intervals_into(
    s: usize,
    e: usize,
    m_tilde: usize,
    rng: &mut Rng,
    out: &mut Vec<Interval>,
) -> bool {
    out.clear();
    if m_tilde >= pair_count(s, e) {
        for a in s..e {
            for b in a + 1..=e {
                out.push(Interval { s: a, e: b });
            }
        }
        true
    } else {
        while out.len() < m_tilde {
            let u = rng.gen_range(s..=e);
            let v = rng.gen_range(s..=e);
            if u != v {
                out.push(Interval {
                    s: u.min(v),
                    e: u.max(v),
                });
            }
        }
        false
    }
}

/// Candidate intervals for one domain, as drawn by the recursion.
pub fn draw_intervals(s: usize, e: usize, m_tilde: usize, rng: &mut Rng) -> Result<Vec<Interval>> {
    if s < 1 || e <= s {
        return Err(Error::pre(format!(
            "domain [{s}, {e}] must hold at least two points"
        )));
    }
    if m_tilde < 1 {
        return Err(Error::pre("m_tilde must be at least 1"));
    }
    let mut out = Vec::new();
    draw_intervals_into(s, e, m_tilde, rng, &mut out);
    Ok(out)
}

/// After a descending sort, permutes each run of equal stats randomly so
/// that ordering among exact ties carries no positional bias.
fn shuffle_equal_runs(entries: &mut [PathEntry], rng: &mut Rng) {
    let mut i = 0;
    while i < entries.len() {
        let mut j = i + 1;
        while j < entries.len() && entries[j].stat == entries[i].stat {
            j += 1;
        }
        if j - i > 1 {
            entries[i..j].shuffle(rng);
        }
        i = j;
    }
}

/// Computes the full solution path of `x`.
///
/// Every domain contributes exactly one entry (the globally strongest
/// contrast among its candidates), and the recursion partitions [1, T],
/// so the result has exactly T-1 entries whose split positions are a
/// permutation of {1, ..., T-1}.  Entries are returned sorted by stat,
/// non-increasing, ties shuffled under the same seed.
///
/// A series with T < 2 yields an empty path.
pub fn wbs2_solution_path(x: &TimeSeries, cfg: &Wbs2Config) -> Result<SolutionPath> {
    if cfg.m_tilde < 1 {
        return Err(Error::pre("m_tilde must be at least 1"));
    }
    let t_len = x.len();
    let mut entries: Vec<PathEntry> = Vec::with_capacity(t_len.saturating_sub(1));
    if t_len < 2 {
        return Ok(SolutionPath { entries });
    }
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut cands: Vec<Interval> = Vec::new();
    // Explicit work stack: depth can reach T on adversarial inputs, which
    // would overflow the call stack at T = 10^6.
    let mut stack: Vec<(usize, usize)> = vec![(1, t_len)];
    while let Some((s, e)) = stack.pop() {
        if e - s < 1 {
            continue;
        }
        let exhaustive = draw_intervals_into(s, e, cfg.m_tilde, &mut rng, &mut cands);
        if !exhaustive && cfg.include_domain {
            cands.push(Interval { s, e });
        }
        let mut best = PathEntry {
            s: 0,
            e: 0,
            b: 0,
            stat: -1.0,
        };
        for iv in &cands {
            let (b, stat) = cusum_argmax_unchecked(x, iv.s, iv.e);
            if stat > best.stat {
                best = PathEntry {
                    s: iv.s,
                    e: iv.e,
                    b,
                    stat,
                };
            }
        }
        debug_assert!(best.stat >= 0.0 && best.stat.is_finite());
        entries.push(best);
        stack.push((best.b + 1, e));
        stack.push((s, best.b)); // popped first: left-to-right traversal
    }
    debug_assert_eq!(entries.len(), t_len - 1);
    entries.sort_by(|a, b| b.stat.partial_cmp(&a.stat).expect("stats are finite"));
    shuffle_equal_runs(&mut entries, &mut rng);
    Ok(SolutionPath { entries })
}

/// Runs the path + selection pipeline `runs` times under seeds
/// seed, seed+1, ... and keeps the run whose change-point count is the
/// median (lower median for even `runs`, so the result is always a run
/// that actually happened). Also returns the pooled multiset of locations
/// across all runs, sorted, for histogram summaries.
pub fn median_run_ensemble<F>(
    x: &TimeSeries,
    cfg: &Wbs2Config,
    runs: usize,
    mut select: F,
) -> Result<(ChangePointModel, Vec<usize>)>
where
    F: FnMut(&SolutionPath, &TimeSeries) -> Result<Vec<usize>>,
{
    if runs < 1 {
        return Err(Error::pre("ensemble needs at least one run"));
    }
    let mut per_run: Vec<Vec<usize>> = Vec::with_capacity(runs);
    for r in 0..runs {
        let run_cfg = Wbs2Config {
            seed: cfg.seed.wrapping_add(r as u64),
            ..cfg.clone()
        };
        let path = wbs2_solution_path(x, &run_cfg)?;
        per_run.push(select(&path, x)?);
    }
    let mut order: Vec<usize> = (0..runs).collect();
    order.sort_by_key(|&r| per_run[r].len()); // stable: equal counts keep run order
    let chosen = order[(runs - 1) / 2];
    let model = fit_piecewise_mean(x, &per_run[chosen])?;
    let mut pooled: Vec<usize> = per_run.into_iter().flatten().collect();
    pooled.sort_unstable();
    Ok((model, pooled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn draw_enumerates_small_domains() {
        let mut rng = Rng::seed_from_u64(1);
        let ivs = draw_intervals(1, 3, 100, &mut rng).unwrap();
        assert_eq!(
            ivs,
            vec![
                Interval { s: 1, e: 2 },
                Interval { s: 1, e: 3 },
                Interval { s: 2, e: 3 }
            ]
        );
        let ivs = draw_intervals(1, 2, 5, &mut rng).unwrap();
        assert_eq!(ivs, vec![Interval { s: 1, e: 2 }]);
    }

    #[test]
    fn draw_samples_valid_intervals() {
        let mut rng = Rng::seed_from_u64(42);
        let ivs = draw_intervals(1, 1000, 100, &mut rng).unwrap();
        assert_eq!(ivs.len(), 100);
        assert!(ivs.iter().all(|iv| iv.s >= 1 && iv.s < iv.e && iv.e <= 1000));
    }

    #[test]
    fn draw_rejects_degenerate_domains() {
        let mut rng = Rng::seed_from_u64(0);
        assert!(draw_intervals(3, 3, 10, &mut rng).is_err());
        assert!(draw_intervals(1, 4, 0, &mut rng).is_err());
    }

    #[test]
    fn path_base_cases() {
        let cfg = Wbs2Config::default();
        let p = wbs2_solution_path(&ts(&[1.0]), &cfg).unwrap();
        assert!(p.is_empty());
        assert!(p.is_complete(1));

        let p = wbs2_solution_path(&ts(&[0.0, 1.0]), &cfg).unwrap();
        assert_eq!(p.len(), 1);
        let en = p.entries[0];
        assert_eq!((en.s, en.e, en.b), (1, 2, 1));
        assert!((en.stat - 1.0 / 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn path_is_complete_and_sorted() {
        use rand::distributions::Distribution;
        let mut rng = crate::rng::rep_rng(9, 0);
        let v: Vec<f64> = (0..257)
            .map(|t| {
                let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
                if t > 140 {
                    1.0 + z
                } else {
                    z
                }
            })
            .collect();
        let x = ts(&v);
        for seed in 0..4 {
            let p = wbs2_solution_path(&x, &Wbs2Config::with_seed(seed)).unwrap();
            assert!(p.is_complete(257));
            assert!(p.is_sorted_non_increasing());
        }
    }

    #[test]
    fn path_is_seed_deterministic() {
        let v: Vec<f64> = (0..100).map(|t| ((t * 37) % 11) as f64).collect();
        let x = ts(&v);
        let cfg = Wbs2Config::with_seed(5);
        let a = wbs2_solution_path(&x, &cfg).unwrap();
        let b = wbs2_solution_path(&x, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ensemble_single_run_matches_direct() {
        let v: Vec<f64> = (0..60).map(|t| if t < 30 { 0.0 } else { 4.0 }).collect();
        let x = ts(&v);
        let cfg = Wbs2Config::with_seed(3);
        let sel = |p: &SolutionPath, _x: &TimeSeries| Ok(p.sorted_b_prefix(1));
        let (model, pooled) = median_run_ensemble(&x, &cfg, 1, sel).unwrap();
        assert_eq!(model.locations, vec![30]);
        assert_eq!(pooled, vec![30]);
    }

    #[test]
    fn ensemble_pools_across_runs() {
        let v: Vec<f64> = (0..40).map(|t| if t < 20 { 0.0 } else { 3.0 }).collect();
        let x = ts(&v);
        let cfg = Wbs2Config::with_seed(11);
        let sel = |p: &SolutionPath, _x: &TimeSeries| Ok(p.sorted_b_prefix(1));
        let (model, pooled) = median_run_ensemble(&x, &cfg, 4, sel).unwrap();
        assert_eq!(model.locations, vec![20]);
        assert_eq!(pooled, vec![20, 20, 20, 20]);
    }
}
