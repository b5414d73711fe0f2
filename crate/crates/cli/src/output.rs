//! On-disk formats for `simulate` and `reproduce`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use dwellcert::simulator::{random_x0, run_rng, summarize, MonteCarloParams, RunOutcome};

use crate::Failure;

/// `t,norm_x,log_norm_x`, one row per time step, LF endings, 17 significant
/// digits.
pub fn trajectory_csv(norms: &[f64]) -> String {
    let mut out = String::with_capacity(48 * (norms.len() + 1));
    out.push_str("t,norm_x,log_norm_x\n");
    for (t, n) in norms.iter().enumerate() {
        writeln!(out, "{t},{n:.16e},{:.16e}", n.ln()).expect("writing to a String");
    }
    out
}

pub fn run_file_name(run: usize) -> String {
    format!("run_{run:05}.csv")
}

/// Initial state from the run-0 stream of `seed`.
pub fn draw_x0(seed: u64, dim: usize, x0_box: f64) -> Vec<f64> {
    random_x0(&mut run_rng(seed, 0), dim, x0_box)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

/// Writes every run's CSV and `summary.json` under `dir`; returns the summary.
pub fn write_simulation(
    dir: &Path,
    mode: &str,
    class: &str,
    params: &MonteCarloParams,
    runs: &[RunOutcome],
) -> Result<Value, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let mut listed = Vec::with_capacity(runs.len());
    for r in runs {
        let name = run_file_name(r.run);
        write(&dir.join(&name), &trajectory_csv(&r.norms))?;
        let mut entry = serde_json::to_value(r).expect("runs serialize");
        entry["file"] = json!(name);
        listed.push(entry);
    }
    let summary = json!({
        "mode": mode,
        "class": class,
        "seed": params.seed,
        "horizon": params.horizon,
        "num_signals": runs.len(),
        "x0_box": params.x0_box,
        "summary": serde_json::to_value(summarize(runs)).expect("summaries serialize"),
        "runs": listed,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("JSON values always serialize");
    text.push('\n');
    write(&dir.join("summary.json"), &text)?;
    Ok(summary)
}
