//! Test-bench plumbing: reference signals, noise generators, and a small
//! benchmark runner that scores detectors over seeded replicates.

use crate::baselines::{binseg_detect, wbs_bic_select, wbs_detect_threshold, wbs_solution_path, WbsConfig};
use crate::error::{Error, Result};
use crate::estimation::{constant_for, Level};
use crate::rng::{rep_rng, Rng};
use crate::sdll::{detect, SdllConfig};
use crate::series::{ChangePointModel, TimeSeries};
use crate::wbs2::Wbs2Config;
use rand::distributions::Distribution;
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

/// A noiseless target signal together with its true split positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub name: String,
    pub values: Vec<f64>,
    /// Last index of each constant stretch except the final one, 1-based.
    pub change_points: Vec<usize>,
    pub n_true: usize,
}

impl SignalSpec {
    /// Builds a spec from raw values, recovering the split positions by
    /// scanning for exact jumps.
    pub fn from_values(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("signal must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("signal values must be finite"));
        }
        let change_points: Vec<usize> = values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != w[1])
            .map(|(i, _)| i + 1)
            .collect();
        Ok(SignalSpec {
            name: name.into(),
            n_true: change_points.len(),
            values,
            change_points,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Alternating five-zeros / five-ones blocks; the densest standard test
/// case, with a split every five points.
pub fn gen_extreme_teeth(t_len: usize) -> Result<SignalSpec> {
    if t_len < 10 {
        return Err(Error::pre("teeth signal needs t_len >= 10"));
    }
    let values: Vec<f64> = (1..=t_len)
        .map(|t| {
            let r = t % 10;
            if (1..=5).contains(&r) {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    SignalSpec::from_values(format!("extreme.teeth.{t_len}"), values)
}

/// [0,0,0,0,1,1,1] tiled 100 times: 700 points with splits every 3 or 4.
pub fn gen_extreme_extreme_teeth() -> SignalSpec {
    let mut values = Vec::with_capacity(700);
    for _ in 0..100 {
        values.extend_from_slice(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }
    SignalSpec::from_values("extreme.extreme.teeth", values).expect("static signal is valid")
}

/// Additive noise shapes for the benchmark runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    /// Student-t rescaled to standard deviation `sigma`; needs df > 2.
    StudentT { sigma: f64, df: f64 },
}

impl NoiseSpec {
    pub fn gen_noise(&self, t_len: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        match *self {
            NoiseSpec::Gaussian { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::pre("sigma must be finite and >= 0"));
                }
                if sigma == 0.0 {
                    return Ok(vec![0.0; t_len]);
                }
                Ok((0..t_len)
                    .map(|_| {
                        let z: f64 = rand_distr::StandardNormal.sample(rng);
                        sigma * z
                    })
                    .collect())
            }
            NoiseSpec::StudentT { sigma, df } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::pre("sigma must be finite and >= 0"));
                }
                if !(df > 2.0 && df.is_finite()) {
                    return Err(Error::pre("student-t noise needs df > 2"));
                }
                if sigma == 0.0 {
                    return Ok(vec![0.0; t_len]);
                }
                // raw t_df has variance df / (df - 2); rescale so the
                // requested sigma is the true standard deviation
                let scale = sigma * ((df - 2.0) / df).sqrt();
                let dist = rand_distr::StudentT::new(df)
                    .map_err(|e| Error::pre(format!("student-t setup: {e}")))?;
                Ok((0..t_len).map(|_| scale * dist.sample(rng)).collect())
            }
        }
    }
}

/// Per-replicate scores for one detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepRecord {
    /// Estimated minus true split count.
    pub err_n: f64,
    pub abs_err_n: f64,
    pub sq_err_n: f64,
    /// Mean squared error of the fitted step function against the target.
    pub mse_f: f64,
    pub seconds: f64,
}

/// Scores a fitted model against the noiseless target.
pub fn evaluate(model: &ChangePointModel, signal: &SignalSpec) -> Result<RepRecord> {
    if model.fit.len() != signal.len() {
        return Err(Error::input(format!(
            "fit length {} does not match signal length {}",
            model.fit.len(),
            signal.len()
        )));
    }
    let err = model.n_hat as f64 - signal.n_true as f64;
    let mse_f = model
        .fit
        .iter()
        .zip(&signal.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / signal.len() as f64;
    Ok(RepRecord {
        err_n: err,
        abs_err_n: err.abs(),
        sq_err_n: err * err,
        mse_f,
        seconds: 0.0,
    })
}

/// Detectors the benchmark runner knows how to drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Wbs2Sdll90,
    Wbs2Sdll95,
    WbsC10,
    WbsC13,
    WbsBic,
    BinsegC10,
    BinsegC13,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Wbs2Sdll90 => "wbs2-sdll-90",
            Method::Wbs2Sdll95 => "wbs2-sdll-95",
            Method::WbsC10 => "wbs-c1.0",
            Method::WbsC13 => "wbs-c1.3",
            Method::WbsBic => "wbs-bic",
            Method::BinsegC10 => "binseg-c1.0",
            Method::BinsegC13 => "binseg-c1.3",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        Method::all()
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::input(format!(
                    "unknown method '{}'; known: {}",
                    s,
                    Method::all()
                        .iter()
                        .map(|m| m.name())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }

    pub fn all() -> &'static [Method] {
        &[
            Method::Wbs2Sdll90,
            Method::Wbs2Sdll95,
            Method::WbsC10,
            Method::WbsC13,
            Method::WbsBic,
            Method::BinsegC10,
            Method::BinsegC13,
        ]
    }

    fn run(&self, x: &TimeSeries, det_seed: u64) -> Result<ChangePointModel> {
        match self {
            Method::Wbs2Sdll90 | Method::Wbs2Sdll95 => {
                let level = if *self == Method::Wbs2Sdll90 {
                    Level::P90
                } else {
                    Level::P95
                };
                let wbs2 = Wbs2Config {
                    seed: det_seed,
                    ..Default::default()
                };
                let sdll = SdllConfig {
                    threshold_constant: constant_for(level, x.len()),
                    ..Default::default()
                };
                detect(x, &wbs2, &sdll)
            }
            Method::WbsC10 | Method::WbsC13 => {
                let c = if *self == Method::WbsC10 { 1.0 } else { 1.3 };
                let cfg = WbsConfig {
                    threshold_constant: c,
                    seed: det_seed,
                    ..Default::default()
                };
                wbs_detect_threshold(x, &cfg)
            }
            Method::WbsBic => {
                let cfg = WbsConfig {
                    seed: det_seed,
                    ..Default::default()
                };
                let path = wbs_solution_path(x, &cfg)?;
                wbs_bic_select(&path, x)
            }
            Method::BinsegC10 => binseg_detect(x, 1.0),
            Method::BinsegC13 => binseg_detect(x, 1.3),
        }
    }
}

/// Aggregated scores for one detector over all completed replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub method: Method,
    pub bias_n: f64,
    pub mae_n: f64,
    pub mse_n: f64,
    pub mse_f: f64,
    pub mean_time_sec: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub reports: Vec<BenchReport>,
    /// Human-readable notes for replicates where a detector errored.
    pub failures: Vec<String>,
}

/// Runs every requested detector on `reps` noisy copies of the signal.
/// Replicate r always sees the same data regardless of thread count or
/// method list; detector randomness is re-seeded per replicate.
pub fn run_bench(
    signal: &SignalSpec,
    noise: &NoiseSpec,
    methods: &[Method],
    reps: usize,
    seed: u64,
) -> Result<BenchOutcome> {
    if reps < 1 {
        return Err(Error::pre("benchmark needs reps >= 1"));
    }
    if methods.is_empty() {
        return Err(Error::pre("benchmark needs at least one method"));
    }

    let per_rep: Vec<(Vec<Option<RepRecord>>, Vec<String>)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep as u64);
            let noise_vec = match noise.gen_noise(signal.len(), &mut rng) {
                Ok(v) => v,
                Err(e) => {
                    return (
                        vec![None; methods.len()],
                        vec![format!("rep {rep}: noise generation failed: {e}")],
                    )
                }
            };
            let det_seed = rng.next_u64();
            let data: Vec<f64> = signal
                .values
                .iter()
                .zip(&noise_vec)
                .map(|(a, b)| a + b)
                .collect();
            let x = match TimeSeries::new(data) {
                Ok(x) => x,
                Err(e) => {
                    return (
                        vec![None; methods.len()],
                        vec![format!("rep {rep}: series construction failed: {e}")],
                    )
                }
            };
            let mut records = Vec::with_capacity(methods.len());
            let mut failures = Vec::new();
            for m in methods {
                let started = Instant::now();
                match m.run(&x, det_seed) {
                    Ok(model) => {
                        let seconds = started.elapsed().as_secs_f64();
                        match evaluate(&model, signal) {
                            Ok(mut rec) => {
                                rec.seconds = seconds;
                                records.push(Some(rec));
                            }
                            Err(e) => {
                                failures.push(format!("rep {rep} {}: {e}", m.name()));
                                records.push(None);
                            }
                        }
                    }
                    Err(e) => {
                        failures.push(format!("rep {rep} {}: {e}", m.name()));
                        records.push(None);
                    }
                }
            }
            (records, failures)
        })
        .collect();

    let mut reports = Vec::with_capacity(methods.len());
    let mut failures = Vec::new();
    for (rep_out, rep_fail) in &per_rep {
        failures.extend(rep_fail.iter().cloned());
        let _ = rep_out;
    }
    for (mi, m) in methods.iter().enumerate() {
        let mut n = 0usize;
        let (mut bias, mut mae, mut mse, mut msef, mut secs) = (0.0, 0.0, 0.0, 0.0, 0.0);
        // aggregate in replicate order so thread count cannot change sums
        for (rep_out, _) in &per_rep {
            if let Some(rec) = rep_out[mi] {
                n += 1;
                bias += rec.err_n;
                mae += rec.abs_err_n;
                mse += rec.sq_err_n;
                msef += rec.mse_f;
                secs += rec.seconds;
            }
        }
        if n == 0 {
            failures.push(format!("{}: no replicate completed", m.name()));
            continue;
        }
        let d = n as f64;
        reports.push(BenchReport {
            method: *m,
            bias_n: bias / d,
            mae_n: mae / d,
            mse_n: mse / d,
            mse_f: msef / d,
            mean_time_sec: secs / d,
            reps: n,
        });
    }
    Ok(BenchOutcome { reports, failures })
}

/// Parses a signal description: one value per line, or `count value`
/// run-length pairs; `#` starts a comment; blank lines are skipped.
pub fn parse_signal_text(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse {
            line: i + 1,
            msg,
        };
        match parts.as_slice() {
            [v] => {
                let v: f64 = v
                    .parse()
                    .map_err(|e| parse_err(format!("bad value '{v}': {e}")))?;
                values.push(v);
            }
            [n, v] => {
                let n: usize = n
                    .parse()
                    .map_err(|e| parse_err(format!("bad count '{n}': {e}")))?;
                let v: f64 = v
                    .parse()
                    .map_err(|e| parse_err(format!("bad value '{v}': {e}")))?;
                if n == 0 {
                    return Err(parse_err("count must be >= 1".into()));
                }
                values.extend(std::iter::repeat(v).take(n));
            }
            _ => return Err(parse_err(format!("expected 1 or 2 fields, got {}", parts.len()))),
        }
    }
    if values.is_empty() {
        return Err(Error::input("signal file holds no values"));
    }
    Ok(values)
}

pub fn load_signal_spec(path: &Path, name: impl Into<String>) -> Result<SignalSpec> {
    let text = std::fs::read_to_string(path)?;
    SignalSpec::from_values(name, parse_signal_text(&text)?)
}

/// Writes values one per line with full round-trip precision.
pub fn write_signal_values(path: &Path, values: &[f64]) -> Result<()> {
    use std::io::Write as _;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}
