//! End-to-end acceptance checks. Each test prints one line per check and a
//! final `PASS`/`FAIL` line, then fails if any check failed.
//!
//! Run with `cargo test -p dwellcert-cli --test acceptance -- --nocapture`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dwellcert::builtin;
use dwellcert::certifier::{check_theorem1, check_theorem2, default_zero_tolerance, lambda_max};
use dwellcert::family::{classify, commutator_norms, zeta_table};
use dwellcert::simulator::{
    monte_carlo, oracle_check_certificate, score_run, simulate, MonteCarloParams,
};
use dwellcert::switching::{periodic_signal, random_signal, validate};
use dwellcert::{
    certify, Config, DerivedParams, IndexPartition, Matrix, Segment, SignalClass, SwitchedFamily,
    Verdict,
};

const NORM_TOL: f64 = 0.005;
const ZERO_COMMUTATOR_TOL: f64 = 1e-12;
const COMMUTATOR_TOL: f64 = 1e-3;
const ZETA_TOL: f64 = 0.02;
const LHS_TOL: f64 = 0.01;
const GROWTH_FACTOR: f64 = 1e3;
const ORACLE_LEN: usize = 20;
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
const LAMBDA: f64 = 0.001;

struct Report {
    name: &'static str,
    failures: usize,
}

impl Report {
    fn new(name: &'static str) -> Self {
        Report { name, failures: 0 }
    }

    fn check(&mut self, label: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "  [{}] {label}: {detail}",
            if pass { "pass" } else { "FAIL" }
        );
    }

    fn near(&mut self, label: &str, computed: f64, target: f64, tol: f64) {
        let pass = (computed - target).abs() <= tol;
        self.check(
            label,
            pass,
            format!("{computed:.6} (target {target} ± {tol})"),
        );
    }

    fn info(&self, label: &str, detail: String) {
        println!("  [info] {label}: {detail}");
    }

    fn finish(self) {
        let verdict = if self.failures == 0 { "PASS" } else { "FAIL" };
        println!(
            "ACCEPTANCE {}: {verdict} ({} failed checks)",
            self.name, self.failures
        );
        assert_eq!(self.failures, 0, "{} failed", self.name);
    }
}

fn setup(config: &Config) -> (SwitchedFamily, IndexPartition, DerivedParams) {
    let fam = config.family().unwrap();
    let part = classify(&fam).unwrap();
    let dp = DerivedParams::derive(&fam, &part).unwrap();
    (fam, part, dp)
}

fn mc_params(config: &Config) -> MonteCarloParams {
    MonteCarloParams {
        num_signals: config.num_signals,
        horizon: config.horizon,
        x0_box: config.x0_box,
        seed: config.seed,
    }
}

fn monte_carlo_checks(r: &mut Report, config: &Config, require_decay: bool) {
    let (fam, part, dp) = setup(config);
    let class = SignalClass::restricted(&fam, &part, &dp);
    let params = mc_params(config);
    let mc = monte_carlo(&fam, &class, params).unwrap();
    let s = &mc.summary;
    r.check(
        "no divergent runs",
        s.divergent_runs == 0,
        format!(
            "{} of {} runs exceed {}·‖x0‖ within {} steps",
            s.divergent_runs, s.num_runs, GROWTH_FACTOR, params.horizon
        ),
    );
    let decaying = mc
        .runs
        .iter()
        .filter(|run| run.decay_rate.is_some_and(|v| v < 0.0))
        .count();
    if require_decay {
        r.check(
            "negative fitted decay rate in every run",
            decaying == s.num_runs,
            format!("{decaying} of {} runs decay", s.num_runs),
        );
    }
    r.info(
        "fitted decay rates",
        format!(
            "min {:?}, mean {:?}, max {:?}",
            s.min_rate, s.mean_rate, s.max_rate
        ),
    );
}

#[test]
fn unstable_pair_norms_and_divergence() {
    let mut r = Report::new("unstable pair: power norms, m, divergence under dwell-3 alternation");
    let config = builtin::unstable_pair();
    let fam = config.family().unwrap();
    let part = classify(&fam).unwrap();
    let a1 = fam.matrix(0);
    r.near("‖A1^2‖", a1.pow(2).spectral_norm().unwrap(), 1.18, NORM_TOL);
    r.near("‖A1^3‖", a1.pow(3).spectral_norm().unwrap(), 0.95, NORM_TOL);
    let m = DerivedParams::derive(&fam, &part).map(|dp| dp.m);
    r.check("m", m == Ok(3), format!("{m:?} (target 3)"));

    let signal = periodic_signal(&[Segment::new(0, 3), Segment::new(1, 3)], 34).unwrap();
    let traj = simulate(&fam, &signal, &[-1.0, 1.0], 200).unwrap();
    let start = traj.norms[0];
    let first = traj.norms.iter().position(|&n| n > GROWTH_FACTOR * start);
    r.check(
        "‖x(t)‖ exceeds 1e3·‖x0‖ by t = 200",
        first.is_some(),
        format!(
            "first crossing at t = {first:?}, final ratio {:.4e}",
            traj.norms[200] / start
        ),
    );
    r.finish();
}

#[test]
fn commuting_pair_certificate_and_simulation() {
    let mut r = Report::new(
        "commuting pair: m, rho, zero commutators, exact-commutation certificate, Monte Carlo",
    );
    let config = builtin::commuting_pair();
    let (fam, part, dp) = setup(&config);
    r.check("m", dp.m == 2, format!("{} (target 2)", dp.m));
    r.near("rho", dp.rho, 0.85, NORM_TOL);
    let worst = commutator_norms(&fam, &part)
        .unwrap()
        .iter()
        .map(|c| c.norm)
        .fold(0.0f64, f64::max);
    r.check(
        "all four commutator norms vanish",
        worst <= ZERO_COMMUTATOR_TOL,
        format!("max {worst:e} (tolerance {ZERO_COMMUTATOR_TOL:e})"),
    );
    let tol = default_zero_tolerance(dp.max_norm, fam.min_dwell());
    let cert = check_theorem1(&fam, &part, &dp, LAMBDA, tol).unwrap();
    r.check(
        "exact-commutation test certifies at lambda = 0.001",
        cert.verdict == Verdict::CertifiedTheorem1,
        format!(
            "{} (lhs {:.6}, c {:.4})",
            cert.verdict.as_str(),
            cert.lhs_value,
            cert.c
        ),
    );
    monte_carlo_checks(&mut r, &config, true);
    r.finish();
}

#[test]
fn perturbed_pair_certificate_and_simulation() {
    let mut r = Report::new("perturbed pair: commutators, K1/K2, zeta, lhs, approximate-commutation certificate, Monte Carlo");
    let config = builtin::perturbed_pair();
    let (fam, part, dp) = setup(&config);
    let labels = ["E^{δ,δ}", "E^{1,δ}", "E^{δ,1}", "E^{1,1}"];
    for ((label, eps), target) in labels
        .iter()
        .zip(dp.eps.entries())
        .zip([0.0272, 0.0127, 0.1811, 0.0850])
    {
        r.near(&format!("‖{label}‖"), eps, target, COMMUTATOR_TOL);
    }
    r.check("K1", dp.k1 == 1, format!("{} (target 1)", dp.k1));
    r.check("K2", dp.k2 == 1, format!("{} (target 1)", dp.k2));

    // The published weights are evaluated at M rounded to 1.24.
    let rounded = zeta_table(1.24, fam.len(), dp.m, fam.min_dwell(), fam.max_dwell()).unwrap();
    let zlabels = ["zeta_{δ,δ}", "zeta_{1,δ}", "zeta_{δ,1}", "zeta_{1,1}"];
    for ((label, z), target) in zlabels
        .iter()
        .zip(rounded.entries())
        .zip([2.93, 3.64, 0.0, 0.0])
    {
        r.near(&format!("{label} at M = 1.24"), z, target, ZETA_TOL);
    }
    r.info(
        "zeta at computed M",
        format!("M = {:.6}, zeta = {:?}", dp.max_norm, dp.zeta.entries()),
    );

    let cert = check_theorem2(&fam, &part, &dp, LAMBDA).unwrap();
    r.near("lhs at lambda = 0.001", cert.lhs_value, 0.98, LHS_TOL);
    let full = certify(&fam, &part, &dp, Some(LAMBDA)).unwrap();
    r.check(
        "certifier verdict",
        full.verdict == Verdict::CertifiedTheorem2,
        format!("{} (target CertifiedTheorem2)", full.verdict.as_str()),
    );
    monte_carlo_checks(&mut r, &config, false);
    r.finish();
}

#[test]
fn exhaustive_oracle_agrees_with_certificates() {
    let mut r = Report::new(
        "exhaustive oracle: no admissible product up to length 20 exceeds c e^{-lambda t}",
    );
    let start = Instant::now();
    for (name, config) in [
        ("commuting pair", builtin::commuting_pair()),
        ("perturbed pair", builtin::perturbed_pair()),
    ] {
        let (fam, part, dp) = setup(&config);
        let cert = certify(&fam, &part, &dp, config.lambda).unwrap();
        let class = SignalClass::restricted(&fam, &part, &dp);
        match oracle_check_certificate(&fam, &class, &cert, ORACLE_LEN) {
            Ok(report) => {
                let detail = match &report.worst {
                    Some(w) => format!(
                        "{} violations over {} products; worst ‖W‖ = {:.4} vs bound {:.4} at length {}, signal {}",
                        report.violations,
                        report.products_checked,
                        w.norm,
                        w.bound,
                        w.length,
                        serde_json::to_string(&w.signal).unwrap()
                    ),
                    None => "no products".into(),
                };
                r.check(name, report.passed(), detail);
            }
            Err(e) => r.check(name, false, e.to_string()),
        }
    }
    let elapsed = start.elapsed();
    r.check(
        "runtime",
        elapsed < ORACLE_BUDGET,
        format!("{elapsed:.2?} (budget {ORACLE_BUDGET:?})"),
    );
    r.finish();
}

fn random_matrix(dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::new(
        dim,
        (0..dim * dim)
            .map(|_| rng.gen_range(-scale..scale))
            .collect(),
    )
    .unwrap()
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_diagonal_family(rng: &mut ChaCha8Rng) -> SwitchedFamily {
    let dim = rng.gen_range(1..=3);
    let n_stable = rng.gen_range(1..=2);
    let n_unstable = rng.gen_range(0..=2);
    let mats = (0..n_stable + n_unstable)
        .map(|k| {
            let mut diag: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.95..0.95)).collect();
            if k >= n_stable {
                diag[0] = rng.gen_range(1.01..1.5);
            }
            Matrix::diagonal(&diag).unwrap()
        })
        .collect();
    let delta = rng.gen_range(1..=3);
    SwitchedFamily::new(mats, delta, delta + rng.gen_range(1..=3)).unwrap()
}

#[test]
fn property_suites() {
    let mut r = Report::new(
        "property suites: norms, signal generation, exact-commutation reduction, linearity",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(20);

    let mut bad = 0;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=4);
        let (a, b) = (
            random_matrix(d, 2.0, &mut rng),
            random_matrix(d, 2.0, &mut rng),
        );
        let ab = a.mul(&b).unwrap().spectral_norm().unwrap();
        let (na, nb) = (a.spectral_norm().unwrap(), b.spectral_norm().unwrap());
        if ab > na * nb * (1.0 + 1e-12) + 1e-12 {
            bad += 1;
        }
    }
    r.check(
        "‖AB‖ <= ‖A‖‖B‖",
        bad == 0,
        format!("{bad} violations in 1000 pairs"),
    );

    let mut worst_gap: f64 = 0.0;
    let mut above = 0;
    for _ in 0..60 {
        let d = rng.gen_range(1..=3);
        let a = random_matrix(d, 2.0, &mut rng);
        let norm = a.spectral_norm().unwrap();
        let mut sampled: f64 = 0.0;
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = euclid(&x);
            if n > 1e-12 {
                sampled = sampled.max(euclid(&a.mul_vec(&x).unwrap()) / n);
            }
        }
        if sampled > norm + 1e-8 {
            above += 1;
        }
        worst_gap = worst_gap.max((norm - sampled) / norm.max(1.0));
    }
    r.check(
        "random unit vectors never beat the spectral norm",
        above == 0,
        format!("{above} of 60 matrices"),
    );
    r.check(
        "random unit vectors come within 1e-3 of the spectral norm",
        worst_gap <= 1e-3,
        format!("largest relative gap {worst_gap:.2e}"),
    );

    let mut violations = 0;
    let configs = [
        builtin::unstable_pair(),
        builtin::commuting_pair(),
        builtin::perturbed_pair(),
    ];
    for k in 0..10_000u64 {
        let (fam, part, dp) = setup(&configs[(k % 3) as usize]);
        let class = SignalClass::new(&fam, &part, &dp, k % 2 == 0);
        let horizon = rng.gen_range(1..=200);
        let s = random_signal(&class, horizon, k).unwrap();
        if s.horizon() != horizon || !validate(&s, &class).is_valid() {
            violations += 1;
        }
    }
    r.check(
        "generated signals are admissible",
        violations == 0,
        format!("{violations} of 10000"),
    );

    let mut disagreements = 0;
    for _ in 0..100 {
        let fam = random_diagonal_family(&mut rng);
        let part = classify(&fam).unwrap();
        let dp = DerivedParams::derive(&fam, &part).unwrap();
        let upper = lambda_max(dp.rho, dp.m).unwrap();
        for frac in [0.01, 0.5, 0.999, 1.2] {
            let t1 = check_theorem1(&fam, &part, &dp, frac * upper, 0.0).unwrap();
            let t2 = check_theorem2(&fam, &part, &dp, frac * upper).unwrap();
            if dp.eps.max() != 0.0 || t1.is_certified() != t2.is_certified() {
                disagreements += 1;
            }
        }
    }
    r.check(
        "approximate test matches exact test when all commutators vanish",
        disagreements == 0,
        format!("{disagreements} disagreements over 100 diagonal families"),
    );

    let (fam, part, dp) = setup(&builtin::unstable_pair());
    let class = SignalClass::restricted(&fam, &part, &dp);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let s = random_signal(&class, 60, k).unwrap();
        let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let a = rng.gen_range(-5.0..5.0);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let tx = simulate(&fam, &s, &x, 60).unwrap();
        let ty = simulate(&fam, &s, &y, 60).unwrap();
        let tc = simulate(&fam, &s, &combo, 60).unwrap();
        for t in 0..=60 {
            let expected: Vec<f64> = tx.states[t]
                .iter()
                .zip(&ty.states[t])
                .map(|(u, v)| a * u + v)
                .collect();
            let err: Vec<f64> = expected
                .iter()
                .zip(&tc.states[t])
                .map(|(e, c)| e - c)
                .collect();
            let scale = euclid(&tx.states[t]) * a.abs() + euclid(&ty.states[t]);
            if scale > 0.0 {
                worst = worst.max(euclid(&err) / scale);
            }
        }
    }
    r.check(
        "trajectories are linear in x0",
        worst <= 1e-12,
        format!("largest relative deviation {worst:.2e}"),
    );
    let run = score_run(
        &fam,
        0,
        random_signal(&class, 60, 1).unwrap(),
        vec![0.0, 0.0],
        60,
    )
    .unwrap();
    r.check(
        "zero state stays at zero",
        run.norms.iter().all(|&n| n == 0.0),
        "x0 = 0".into(),
    );
    r.finish();
}

fn run_simulate(config: &Path, out: &Path, threads: &str, extra: &[&str]) -> Vec<u8> {
    let output = Command::new(env!("CARGO_BIN_EXE_dwellcert"))
        .arg("simulate")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--json")
        .args(extra)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    output.stdout
}

fn directory_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_output_is_byte_identical() {
    let mut r = Report::new("determinism: repeated simulate runs write identical bytes");
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&str, Config, &[&str]); 2] = [
        (
            "random signals",
            builtin::perturbed_pair(),
            &["--seed", "7"],
        ),
        (
            "periodic signal",
            builtin::unstable_pair(),
            &["--periodic", "1:3,2:3", "--x0", "-1,1"],
        ),
    ];
    for (name, config, extra) in cases {
        let path = tmp.path().join(format!("{}.json", name.replace(' ', "_")));
        fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
        let (a, b) = (
            tmp.path().join(format!("{name}-a")),
            tmp.path().join(format!("{name}-b")),
        );
        let out_a = run_simulate(&path, &a, "1", extra);
        let out_b = run_simulate(&path, &b, "4", extra);
        let (fa, fb) = (directory_bytes(&a), directory_bytes(&b));
        r.check(
            &format!("{name}: CSV and summary.json"),
            fa == fb && !fa.is_empty(),
            format!("{} files compared across 1 and 4 worker threads", fa.len()),
        );
        r.check(
            &format!("{name}: stdout"),
            out_a == out_b,
            format!("{} bytes", out_a.len()),
        );
    }
    r.finish();
}
