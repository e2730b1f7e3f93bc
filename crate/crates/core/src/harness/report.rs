//! Result files: `ber.csv`, `manifest.json`, learning curves and optional
//! gnuplot data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::sweep::{BerRecord, SweepResult};
use crate::error::Result;

/// Writes the report of `result` into `out_dir` (created if needed) and
/// returns the paths written.
pub fn emit_report(result: &SweepResult, out_dir: &Path, gnuplot: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let ber_path = out_dir.join("ber.csv");
    let mut w = csv::Writer::from_path(&ber_path)?;
    for r in &result.records {
        w.serialize(r)?;
    }
    w.flush()?;
    written.push(ber_path);

    let manifest_path = out_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&result.manifest)?)?;
    written.push(manifest_path);

    for (id, trace) in &result.learning_curves {
        let path = out_dir.join(format!("learning_curve_{id}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["iteration", "objective"])?;
        for (i, v) in trace.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        w.flush()?;
        written.push(path);
    }

    if gnuplot {
        written.extend(write_gnuplot(&result.records, out_dir)?);
    }
    Ok(written)
}

fn write_gnuplot(records: &[BerRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut detectors: Vec<&str> = Vec::new();
    for r in records {
        if !detectors.contains(&r.detector.as_str()) {
            detectors.push(&r.detector);
        }
    }
    let mut written = Vec::new();
    for det in &detectors {
        let mut body = format!("# {} ber\n", records[0].sweep_variable);
        for r in records.iter().filter(|r| r.detector == *det) {
            writeln!(body, "{} {}", r.sweep_value, r.ber).unwrap();
        }
        let path = out_dir.join(format!("ber_{det}.dat"));
        fs::write(&path, body)?;
        written.push(path);
    }
    let xlabel = records.first().map_or("", |r| r.sweep_variable.as_str());
    let mut script = format!("set logscale y\nset xlabel '{xlabel}'\nset ylabel 'BER'\nset grid\nplot ");
    let plots: Vec<String> =
        detectors.iter().map(|d| format!("'ber_{d}.dat' using 1:2 with linespoints title '{d}'")).collect();
    script.push_str(&plots.join(", \\\n     "));
    script.push('\n');
    let path = out_dir.join("ber.gp");
    fs::write(&path, script)?;
    written.push(path);
    Ok(written)
}

/// Parses a `ber.csv` written by [`emit_report`].
pub fn read_ber_csv(path: &Path) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Parses a `learning_curve_<id>.csv` into its objective column.
pub fn read_learning_curve(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize::<(usize, f64)>() {
        out.push(rec?.1);
    }
    Ok(out)
}
