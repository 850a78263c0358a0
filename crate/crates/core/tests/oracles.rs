//! Cross-checks of the optimized kernels against independent, deliberately
//! naive re-implementations. Zero tolerance beyond stated float slack.

use cpd_core::baselines::{draw_fixed_intervals, wbs_detect_threshold, wbs_solution_path_from_intervals, WbsConfig};
use cpd_core::estimation::{effective_sigma, mad};
use cpd_core::rng::{rep_rng, Rng};
use cpd_core::sdll::sdll_select;
use cpd_core::{cusum_at, SdllConfig, SolutionPath, TimeSeries};
use cpd_core::{Interval, PathEntry};
use rand::distributions::Distribution;
use rand::Rng as _;
use rand_chacha::rand_core::SeedableRng;

/// Direct two-loop transcription of the contrast
/// sqrt(nr/(n*nl)) * sum(s..=b) - sqrt(nl/(n*nr)) * sum(b+1..=e).
fn cusum_naive(x: &[f64], s: usize, e: usize, b: usize) -> f64 {
    let n = (e - s + 1) as f64;
    let nl = (b - s + 1) as f64;
    let nr = (e - b) as f64;
    let mut left = 0.0;
    for t in s..=b {
        left += x[t - 1];
    }
    let mut right = 0.0;
    for t in b + 1..=e {
        right += x[t - 1];
    }
    (nr / (n * nl)).sqrt() * left - (nl / (n * nr)).sqrt() * right
}

fn random_series(rng: &mut Rng, t_len: usize) -> Vec<f64> {
    // mix of regimes: pure noise, noisy steps, constants, wild scales
    let style = rng.gen_range(0..4u8);
    let scale = 10f64.powi(rng.gen_range(-2..3));
    (0..t_len)
        .map(|t| {
            let z: f64 = rand_distr::StandardNormal.sample(rng);
            match style {
                0 => scale * z,
                1 => scale * (z + if t % 7 < 3 { 2.0 } else { -1.0 }),
                2 => scale * 4.25,
                _ => scale * (z * 0.1 + (t / 13) as f64),
            }
        })
        .collect()
}

#[test]
fn cusum_matches_naive_oracle() {
    let mut rng = rep_rng(0xC05, 0);
    let mut checked = 0usize;
    while checked < 10_000 {
        let t_len = rng.gen_range(2..400usize);
        let v = random_series(&mut rng, t_len);
        let x = TimeSeries::new(v.clone()).unwrap();
        // several tuples per series keeps generation cheap
        for _ in 0..10 {
            let s = rng.gen_range(1..t_len);
            let e = rng.gen_range(s + 1..=t_len);
            let b = rng.gen_range(s..e);
            let got = cusum_at(&x, s, e, b).unwrap();
            let want = cusum_naive(&v, s, e, b);
            // the naive sum itself carries O(eps * n * max|x|) rounding,
            // so the comparison floors the relative scale at 1
            let tol = 1e-9 * got.abs().max(want.abs()).max(1.0);
            assert!(
                (got - want).abs() <= tol,
                "cusum mismatch at (s={s}, e={e}, b={b}, T={t_len}): {got} vs {want}"
            );
            checked += 1;
        }
    }
}

/// Literal transcription of the selection rule, written collect-then-scan
/// instead of streaming: gate the sorted stats at beta * zeta, list every
/// drop that lands at or below zeta, take the steepest (earliest on ties),
/// and keep everything above the gate when no drop lands low enough.
fn sdll_naive(stats: &[f64], zeta: f64, beta: f64) -> usize {
    if stats.is_empty() {
        return 0;
    }
    if stats[0] < zeta {
        return 0;
    }
    let mut gated = 0usize;
    for i in 1..stats.len() {
        if stats[i] >= beta * zeta {
            gated += 1;
        } else {
            break;
        }
    }
    if gated == 0 {
        return 1;
    }
    let mut drops: Vec<(usize, f64)> = Vec::new();
    for k in 1..=gated {
        if stats[k] <= zeta {
            drops.push((k, stats[k - 1].ln() - stats[k].ln()));
        }
    }
    if drops.is_empty() {
        return gated + 1;
    }
    let mut best = drops[0];
    for &(k, d) in &drops[1..] {
        if d > best.1 {
            best = (k, d);
        }
    }
    best.0
}

fn path_with_stats(stats: &[f64]) -> SolutionPath {
    let t = stats.len() + 1;
    SolutionPath {
        entries: stats
            .iter()
            .enumerate()
            .map(|(i, &stat)| PathEntry {
                s: 1,
                e: t,
                b: i + 1,
                stat,
            })
            .collect(),
    }
}

#[test]
fn sdll_matches_naive_oracle() {
    let mut rng = rep_rng(0x5D11, 0);
    for case in 0..1000 {
        let len = rng.gen_range(1..=50usize);
        let mut stats: Vec<f64> = (0..len)
            .map(|_| {
                let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
                (z * 0.8).exp() * 2.0
            })
            .collect();
        stats.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // duplicated stats exercise tie handling
        if len > 3 && rng.gen_bool(0.3) {
            stats[2] = stats[1];
        }
        let zeta = stats[0] * rng.gen_range(0.15..1.4);
        let beta = if rng.gen_bool(0.7) {
            0.3
        } else {
            rng.gen_range(0.05..0.9)
        };
        let want = sdll_naive(&stats, zeta, beta);

        // express zeta through the config's constant * sigma * sqrt(2 log T)
        let t_len = len + 1;
        let denom = (2.0 * (t_len as f64).ln()).sqrt();
        let cfg = SdllConfig {
            threshold_constant: zeta / denom,
            beta,
            sigma_hat: Some(1.0),
        };
        let path = path_with_stats(&stats);
        let got = sdll_select(&path, t_len, &cfg).unwrap();
        assert_eq!(
            got.len(),
            want,
            "case {case}: count mismatch (zeta={zeta}, beta={beta}, stats={stats:?})"
        );
        // locations are the first N-hat split positions, sorted
        let mut expect: Vec<usize> = (1..=want).collect();
        expect.sort_unstable();
        assert_eq!(got, expect, "case {case}: location mismatch");
    }
}

#[test]
fn threshold_recursion_equals_sorted_prefix() {
    let mut rng = rep_rng(0xE07, 0);
    for case in 0..100 {
        let t_len = rng.gen_range(20..200usize);
        let v = random_series(&mut rng, t_len);
        let x = TimeSeries::new(v).unwrap();
        let m = rng.gen_range(50..300usize);
        let seed = rng.gen_range(0..u64::MAX);
        let c = rng.gen_range(0.8..1.6);
        let cfg = WbsConfig {
            m,
            threshold_constant: c,
            seed,
            domain_fallback: false,
        };

        // same pool the detector will draw internally
        let mut pool_rng = Rng::seed_from_u64(seed);
        let intervals: Vec<Interval> = draw_fixed_intervals(t_len, m, &mut pool_rng).unwrap();
        let path = wbs_solution_path_from_intervals(&x, &intervals).unwrap();
        let zeta = c * effective_sigma(mad(&x).unwrap(), x.max_abs())
            * (2.0 * (t_len as f64).ln()).sqrt();
        let mut prefix: Vec<usize> = path
            .entries
            .iter()
            .take_while(|en| en.stat >= zeta)
            .map(|en| en.b)
            .collect();
        prefix.sort_unstable();

        let model = wbs_detect_threshold(&x, &cfg).unwrap();
        assert_eq!(
            model.locations, prefix,
            "case {case}: recursion/prefix mismatch (T={t_len}, m={m}, c={c})"
        );
    }
}
