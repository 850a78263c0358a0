//! Randomized invariant checks over the public API.

use cpd_core::estimation::{mad, ConstantTable};
use cpd_core::simlab::{parse_signal_text, SignalSpec};
use cpd_core::{
    cusum_argmax, cusum_at, fit_piecewise_mean, wbs2_solution_path, TimeSeries, Wbs2Config,
};
use proptest::prelude::*;

fn small_series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 2..100)
}

fn any_series() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        small_series(),
        // constants and near-constants
        (2..100usize, -10.0..10.0f64).prop_map(|(n, c)| vec![c; n]),
        // steps
        (2..100usize, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(n, a, b)| {
            (0..n).map(|t| if t < n / 2 { a } else { b }).collect()
        }),
    ]
}

proptest! {
    #[test]
    fn path_is_complete_permutation_sorted(v in any_series(), seed in 0..1000u64, m in 1..200usize) {
        let t_len = v.len();
        let x = TimeSeries::new(v).unwrap();
        let cfg = Wbs2Config { m_tilde: m, seed, ..Default::default() };
        let path = wbs2_solution_path(&x, &cfg).unwrap();
        prop_assert_eq!(path.len(), t_len - 1);
        prop_assert!(path.is_complete(t_len));
        prop_assert!(path.is_sorted_non_increasing());
        for en in &path.entries {
            prop_assert!(1 <= en.s && en.s <= en.b && en.b < en.e && en.e <= t_len);
            prop_assert!(en.stat >= 0.0);
        }
    }

    #[test]
    fn cusum_is_shift_invariant_and_scale_linear(
        v in small_series(),
        shift in -100.0..100.0f64,
        scale in prop_oneof![(-8.0..8.0f64), Just(0.0)],
    ) {
        let t_len = v.len();
        let x = TimeSeries::new(v.clone()).unwrap();
        let shifted = TimeSeries::new(v.iter().map(|a| a + shift).collect()).unwrap();
        let scaled = TimeSeries::new(v.iter().map(|a| a * scale).collect()).unwrap();
        let (s, e, b) = (1, t_len, t_len / 2);
        let base = cusum_at(&x, s, e, b).unwrap();
        let sh = cusum_at(&shifted, s, e, b).unwrap();
        let sc = cusum_at(&scaled, s, e, b).unwrap();
        // adding a constant moves both segment means identically
        prop_assert!((sh - base).abs() <= 1e-9 * (1.0 + base.abs() + shift.abs()));
        prop_assert!((sc - scale * base).abs() <= 1e-9 * (1.0 + (scale * base).abs()));
    }

    #[test]
    fn argmax_is_exact_on_noiseless_steps(
        n_left in 1..30usize,
        n_right in 1..30usize,
        a in -5.0..5.0f64,
        d in prop_oneof![(0.5..5.0f64), (-5.0..-0.5f64)],
    ) {
        let t_len = n_left + n_right;
        let v: Vec<f64> = (0..t_len).map(|t| if t < n_left { a } else { a + d }).collect();
        let x = TimeSeries::new(v).unwrap();
        let (b, stat) = cusum_argmax(&x, 1, t_len).unwrap();
        prop_assert_eq!(b, n_left);
        prop_assert!(stat > 0.0);
    }

    #[test]
    fn saturated_fit_reproduces_input(v in small_series()) {
        let t_len = v.len();
        let x = TimeSeries::new(v.clone()).unwrap();
        let all: Vec<usize> = (1..t_len).collect();
        let model = fit_piecewise_mean(&x, &all).unwrap();
        prop_assert_eq!(model.n_hat, t_len - 1);
        for (f, orig) in model.fit.iter().zip(&v) {
            prop_assert!((f - orig).abs() <= 1e-12 * (1.0 + orig.abs()));
        }
    }

    #[test]
    fn mad_is_affine_equivariant(
        v in prop::collection::vec(-20.0..20.0f64, 3..80),
        scale in prop_oneof![(0.01..20.0f64), (-20.0..-0.01f64)],
        shift in -50.0..50.0f64,
    ) {
        let x = TimeSeries::new(v.clone()).unwrap();
        let y = TimeSeries::new(v.iter().map(|a| scale * a + shift).collect()).unwrap();
        let mx = mad(&x).unwrap();
        let my = mad(&y).unwrap();
        prop_assert!((my - scale.abs() * mx).abs() <= 1e-9 * (1.0 + my.abs()));
    }

    #[test]
    fn table_interpolation_clamps_and_stays_bounded(
        t_query in 1..200_000usize,
        c_lo in 1.0..1.3f64,
        spread in 0.01..0.4f64,
    ) {
        // two-anchor table with the larger constant at the smaller length,
        // matching how calibrated tables behave
        let t = ConstantTable::new(0.9, vec![(10, c_lo + spread), (10_000, c_lo)]).unwrap();
        let c = t.interpolate(t_query);
        prop_assert!(c <= c_lo + spread + 1e-12);
        prop_assert!(c >= c_lo - 1e-12);
        if t_query <= 10 {
            prop_assert!((c - (c_lo + spread)).abs() < 1e-12);
        }
        if t_query >= 10_000 {
            prop_assert!((c - c_lo).abs() < 1e-12);
        }
    }

    #[test]
    fn signal_jump_scan_is_consistent(v in prop::collection::vec(-3..3i32, 1..60)) {
        let vals: Vec<f64> = v.iter().map(|&a| a as f64).collect();
        let s = SignalSpec::from_values("p", vals.clone()).unwrap();
        for (i, w) in vals.windows(2).enumerate() {
            let listed = s.change_points.binary_search(&(i + 1)).is_ok();
            prop_assert_eq!(listed, w[0] != w[1]);
        }
        prop_assert_eq!(s.n_true, s.change_points.len());
    }

    #[test]
    fn signal_text_round_trips(v in prop::collection::vec(-1000.0..1000.0f64, 1..50)) {
        let text: String = v.iter().map(|a| format!("{a}\n")).collect();
        let parsed = parse_signal_text(&text).unwrap();
        prop_assert_eq!(parsed, v);
    }

    #[test]
    fn run_length_signal_text_expands(runs in prop::collection::vec((1..6usize, -5..5i32), 1..10)) {
        let text: String = runs.iter().map(|(n, val)| format!("{n} {val}\n")).collect();
        let parsed = parse_signal_text(&text).unwrap();
        let expect: Vec<f64> = runs
            .iter()
            .flat_map(|&(n, val)| std::iter::repeat(val as f64).take(n))
            .collect();
        prop_assert_eq!(parsed, expect);
    }
}
