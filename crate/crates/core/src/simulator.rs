//! Trajectories, product norms, Monte Carlo runs and the exhaustive
//! certificate check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certifier::Certificate;
use crate::error::{Error, Result};
use crate::family::SwitchedFamily;
use crate::linalg::Matrix;
use crate::switching::{
    enumerate_signals, random_signal_with, Segment, SignalClass, SwitchingSignal,
};

/// A run is divergent once `‖x(t)‖ / ‖x0‖` exceeds this.
pub const DIVERGENCE_RATIO: f64 = 1e3;

/// Minimum number of positive samples for [`fit_decay`].
pub const MIN_FIT_SAMPLES: usize = 10;

/// Relative slack before an oracle comparison counts as a violation.
const ORACLE_SLACK: f64 = 1e-12;

fn euclidean(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `states[t] = x(t)` for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn check_horizon(sig: &SwitchingSignal, t_max: usize) -> Result<()> {
    if t_max > sig.horizon() {
        return Err(Error::InvalidArgument(format!(
            "requested {t_max} steps but the signal covers only {}",
            sig.horizon()
        )));
    }
    Ok(())
}

fn check_indices(fam: &SwitchedFamily, sig: &SwitchingSignal) -> Result<()> {
    match sig.segments.iter().find(|s| s.index >= fam.len()) {
        Some(s) => Err(Error::InvalidSignal(format!(
            "subsystem {} does not exist (family has {})",
            s.index + 1,
            fam.len()
        ))),
        None => Ok(()),
    }
}

/// Iterates `x(t+1) = A_{σ(t)} x(t)` for `t_max` steps.
pub fn simulate(
    fam: &SwitchedFamily,
    sig: &SwitchingSignal,
    x0: &[f64],
    t_max: usize,
) -> Result<Trajectory> {
    if x0.len() != fam.dim() {
        return Err(Error::DimensionMismatch {
            left: fam.dim(),
            right: x0.len(),
        });
    }
    check_horizon(sig, t_max)?;
    check_indices(fam, sig)?;
    let mut states = Vec::with_capacity(t_max + 1);
    let mut norms = Vec::with_capacity(t_max + 1);
    let mut x = x0.to_vec();
    norms.push(euclidean(&x));
    states.push(x.clone());
    for i in sig.steps().take(t_max) {
        x = fam.matrix(i).mul_vec(&x)?;
        norms.push(euclidean(&x));
        states.push(x.clone());
    }
    Ok(Trajectory { states, norms })
}

/// `‖A_{σ(t-1)} ⋯ A_{σ(0)}‖` for `t = 1..=t_max`.
pub fn product_norms(
    fam: &SwitchedFamily,
    sig: &SwitchingSignal,
    t_max: usize,
) -> Result<Vec<f64>> {
    check_horizon(sig, t_max)?;
    check_indices(fam, sig)?;
    let mut product = Matrix::identity(fam.dim());
    sig.steps()
        .take(t_max)
        .map(|i| {
            product = fam.matrix(i).mul(&product)?;
            product.spectral_norm()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Slope of `ln ‖x(t)‖` against `t`.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(t, ln norms[t])`, skipping zero samples.
/// Sample `k` is taken at `t = k`.
pub fn fit_decay(norms: &[f64]) -> Result<DecayFit> {
    let points: Vec<(f64, f64)> = norms
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(t, &v)| (t as f64, v.ln()))
        .collect();
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least {MIN_FIT_SAMPLES} positive samples, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &points {
        let (dt, dy) = (t - mean_t, y - mean_y);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let rate = sty / stt;
    let intercept = mean_y - rate * mean_t;
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        (sty * sty) / (stt * syy)
    };
    Ok(DecayFit {
        rate,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloParams {
    pub num_signals: usize,
    pub horizon: usize,
    /// Initial states are uniform on `[-x0_box, x0_box]^d`.
    pub x0_box: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub run: usize,
    pub x0: Vec<f64>,
    pub signal: SwitchingSignal,
    /// `‖x(t)‖` for `t = 0..=horizon`.
    #[serde(skip)]
    pub norms: Vec<f64>,
    /// `max_t ‖x(t)‖ / ‖x0‖`.
    pub max_ratio: f64,
    pub decay_rate: Option<f64>,
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub num_runs: usize,
    pub divergent_runs: usize,
    pub divergence_ratio: f64,
    pub min_rate: Option<f64>,
    pub max_rate: Option<f64>,
    pub mean_rate: Option<f64>,
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub params: MonteCarloParams,
    pub summary: MonteCarloSummary,
    pub runs: Vec<RunOutcome>,
}

/// Generator for run `run`: the base seed selects the key, the run index the
/// stream, so runs are independent of scheduling.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Uniform point of `[-x0_box, x0_box]^dim`.
pub fn random_x0<R: Rng + ?Sized>(rng: &mut R, dim: usize, x0_box: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-x0_box..=x0_box)).collect()
}

/// Simulates one trajectory and scores it.
pub fn score_run(
    fam: &SwitchedFamily,
    run: usize,
    signal: SwitchingSignal,
    x0: Vec<f64>,
    horizon: usize,
) -> Result<RunOutcome> {
    let traj = simulate(fam, &signal, &x0, horizon)?;
    let start = traj.norms[0];
    let max_ratio = if start > 0.0 {
        traj.norms.iter().fold(0.0f64, |m, &v| m.max(v / start))
    } else {
        0.0
    };
    let decay_rate = traj
        .norms
        .get(1..)
        .and_then(|s| fit_decay(s).ok())
        .map(|f| f.rate);
    Ok(RunOutcome {
        run,
        x0,
        signal,
        norms: traj.norms,
        max_ratio,
        decay_rate,
        divergent: max_ratio > DIVERGENCE_RATIO,
    })
}

/// Random signals from `class` with random initial states.
pub fn monte_carlo(
    fam: &SwitchedFamily,
    class: &SignalClass,
    params: MonteCarloParams,
) -> Result<MonteCarloReport> {
    let runs = (0..params.num_signals)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(params.seed, run);
            let signal = random_signal_with(class, params.horizon, &mut rng)?;
            let x0 = random_x0(&mut rng, fam.dim(), params.x0_box);
            score_run(fam, run, signal, x0, params.horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloReport {
        params,
        summary: summarize(&runs),
        runs,
    })
}

/// Order-independent aggregate over runs.
pub fn summarize(runs: &[RunOutcome]) -> MonteCarloSummary {
    let mut rates: Vec<f64> = runs.iter().filter_map(|r| r.decay_rate).collect();
    rates.sort_by(f64::total_cmp);
    let mean_rate = (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
    MonteCarloSummary {
        num_runs: runs.len(),
        divergent_runs: runs.iter().filter(|r| r.divergent).count(),
        divergence_ratio: DIVERGENCE_RATIO,
        min_rate: rates.first().copied(),
        max_rate: rates.last().copied(),
        mean_rate,
        max_ratio: runs.iter().map(|r| r.max_ratio).max_by(f64::total_cmp),
    }
}

/// Product with the smallest slack `c e^{-λ|W|} - ‖W‖` seen by the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstProduct {
    pub signal: SwitchingSignal,
    pub length: usize,
    pub norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub max_len: usize,
    pub c: f64,
    pub lambda: f64,
    pub signals: usize,
    /// Distinct admissible products of length `1..=max_len` checked.
    pub products_checked: usize,
    pub violations: usize,
    /// `min (c e^{-λ|W|} - ‖W‖)`; negative when a violation exists.
    pub worst_margin: f64,
    pub worst: Option<WorstProduct>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn run_length(steps: &[usize]) -> SwitchingSignal {
    let mut segments: Vec<Segment> = Vec::new();
    for &i in steps {
        match segments.last_mut() {
            Some(s) if s.index == i => s.dwell += 1,
            _ => segments.push(Segment::new(i, 1)),
        }
    }
    SwitchingSignal::new(segments)
}

/// Checks `‖W‖ <= c e^{-λ|W|}` for every product `W` generated by a prefix of
/// a member of `class` with horizon `max_len`. Consecutive signals in the
/// enumeration share prefixes, so each distinct product is formed once.
pub fn oracle_check(
    fam: &SwitchedFamily,
    class: &SignalClass,
    c: f64,
    lambda: f64,
    max_len: usize,
) -> Result<OracleReport> {
    let mut report = OracleReport {
        max_len,
        c,
        lambda,
        signals: 0,
        products_checked: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        worst: None,
    };
    let mut steps: Vec<usize> = Vec::with_capacity(max_len);
    // products[t] = A_{σ(t)} ⋯ A_{σ(0)}
    let mut products: Vec<Matrix> = Vec::with_capacity(max_len);
    for sig in enumerate_signals(class, max_len)? {
        report.signals += 1;
        let next: Vec<usize> = sig.steps().collect();
        let shared = steps.iter().zip(&next).take_while(|(a, b)| a == b).count();
        products.truncate(shared);
        steps = next;
        for t in shared..steps.len() {
            let a = fam.matrix(steps[t]);
            let product = match products.last() {
                Some(prev) => a.mul(prev)?,
                None => a.clone(),
            };
            let length = t + 1;
            let norm = product.spectral_norm()?;
            let bound = c * (-lambda * length as f64).exp();
            let margin = bound - norm;
            report.products_checked += 1;
            if norm > bound * (1.0 + ORACLE_SLACK) {
                report.violations += 1;
            }
            if margin < report.worst_margin {
                report.worst_margin = margin;
                report.worst = Some(WorstProduct {
                    signal: run_length(&steps[..length]),
                    length,
                    norm,
                    bound,
                });
            }
            products.push(product);
        }
    }
    Ok(report)
}

/// [`oracle_check`] with the constants of a certificate.
pub fn oracle_check_certificate(
    fam: &SwitchedFamily,
    class: &SignalClass,
    cert: &Certificate,
    max_len: usize,
) -> Result<OracleReport> {
    if !cert.is_certified() {
        return Err(Error::NotCertified(cert.verdict.as_str().to_string()));
    }
    oracle_check(fam, class, cert.c, cert.lambda, max_len)
}
