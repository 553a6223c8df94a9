use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

/// Rebuilds `curves/<metric>.csv` (columns `iteration,value`) from
/// `metrics.jsonl`. Vector metrics get one file per entry, suffixed with
/// the index. Returns the files written.
pub fn export_curves(run_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !run_dir.join("metrics.jsonl").is_file() {
        return Err(CliError::Config(format!("{} has no metrics.jsonl", run_dir.display())));
    }
    write_curves(run_dir)
}

pub(crate) fn write_curves(run_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = fs::read_to_string(run_dir.join("metrics.jsonl"))?;
    let mut series: BTreeMap<String, String> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Value = serde_json::from_str(line)
            .map_err(|e| CliError::Io(format!("metrics.jsonl line {}: {e}", n + 1)))?;
        let Some(obj) = rec.as_object() else { continue };
        let it = obj.get("iteration").and_then(Value::as_u64).unwrap_or(n as u64);
        for (key, v) in obj {
            if key == "iteration" {
                continue;
            }
            match v {
                Value::Number(x) => push(&mut series, key, it, x.as_f64()),
                Value::Array(xs) => {
                    for (i, x) in xs.iter().enumerate() {
                        push(&mut series, &format!("{key}_{i}"), it, x.as_f64());
                    }
                }
                _ => {}
            }
        }
    }
    let dir = run_dir.join("curves");
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for (key, body) in series {
        let path = dir.join(format!("{key}.csv"));
        fs::write(&path, format!("iteration,value\n{body}"))?;
        written.push(path);
    }
    Ok(written)
}

fn push(series: &mut BTreeMap<String, String>, key: &str, it: u64, v: Option<f64>) {
    if let Some(v) = v {
        let _ = writeln!(series.entry(key.to_string()).or_default(), "{it},{v}");
    }
}

/// `curves/input_gradients.csv`: one row per sample, `x` then one column
/// per logged step.
pub(crate) fn write_input_gradients(run_dir: &Path, xs: &[f64], grads: &[(usize, Vec<f64>)]) -> Result<(), CliError> {
    if grads.is_empty() {
        return Ok(());
    }
    let mut out = String::from("x");
    for (step, _) in grads {
        let _ = write!(out, ",step_{step}");
    }
    out.push('\n');
    for (i, x) in xs.iter().enumerate() {
        let _ = write!(out, "{x}");
        for (_, g) in grads {
            let _ = write!(out, ",{}", g[i]);
        }
        out.push('\n');
    }
    fs::create_dir_all(run_dir.join("curves"))?;
    fs::write(run_dir.join("curves").join("input_gradients.csv"), out)?;
    Ok(())
}
