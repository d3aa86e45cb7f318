//! CSV emission. Numbers use fixed formats so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, SimError};
use crate::scenario::{SweepRow, Trajectory};

pub const TRAJECTORY_HEADER: &str = "t_omega_m,n_osc,tls_excited,trace_err,min_eig,purity";

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn time(t: f64) -> String {
    format!("{t:.6}")
}

fn comment_block(out: &mut String, pairs: &[(String, String)]) {
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k} = {v}");
    }
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    comment_block(&mut out, &traj.metadata());
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            time(s.t),
            num(s.n_osc),
            num(s.tls_excited),
            num(s.trace_err),
            num(s.min_eig),
            num(s.purity)
        );
    }
    out
}

/// One row per grid point with end-time values and quality flags.
pub fn summary_csv(scenario: &str, rows: &[SweepRow], extra_meta: &[(String, String)]) -> String {
    let mut out = String::new();
    let mut meta = vec![
        ("scenario".to_string(), scenario.to_string()),
        ("code_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    if let Some(t) = rows.iter().find_map(|r| r.outcome.as_ref().ok()) {
        meta.extend(
            t.metadata()
                .into_iter()
                .filter(|(k, _)| !k.starts_with("quality.") && k != "label" && k != "integrator.steps"),
        );
    }
    meta.extend(extra_meta.iter().cloned());
    comment_block(&mut out, &meta);
    let coord_keys: Vec<&str> = rows
        .first()
        .map(|r| r.coords.iter().map(|c| c.key()).collect())
        .unwrap_or_default();
    let mut header: Vec<&str> = vec!["label"];
    header.extend(&coord_keys);
    header.extend([
        "end_t_omega_m",
        "end_n_osc",
        "end_tls_excited",
        "max_trace_err",
        "min_eig",
        "initial_tail",
        "max_top_level",
        "quality_ok",
        "error",
    ]);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let mut fields = vec![row.label()];
        fields.extend(row.coords.iter().map(|c| c.value()));
        match &row.outcome {
            Ok(t) => {
                let e = t.end();
                let q = &t.quality;
                fields.extend([
                    time(e.t),
                    num(e.n_osc),
                    num(e.tls_excited),
                    num(q.max_trace_err),
                    num(q.min_eig),
                    num(q.initial_tail),
                    num(q.max_top_level),
                    q.passed().to_string(),
                    String::new(),
                ]);
            }
            Err(err) => {
                fields.extend(std::iter::repeat_n(String::new(), 7));
                fields.push("false".to_string());
                fields.push(format!("\"{}\"", err.to_string().replace('"', "'")));
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Wide table: time column plus one `n_osc` column per successful run.
pub fn plot_csv(scenario: &str, rows: &[SweepRow]) -> String {
    let runs: Vec<&Trajectory> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "# scenario = {scenario}");
    let _ = writeln!(out, "# columns = t_omega_m then n_osc for each run label");
    let mut header = vec!["t_omega_m".to_string()];
    header.extend(runs.iter().map(|t| format!("n_osc[{}]", t.label)));
    out.push_str(&header.join(","));
    out.push('\n');
    let len = runs.iter().map(|t| t.samples.len()).min().unwrap_or(0);
    for k in 0..len {
        let mut fields = vec![time(runs[0].samples[k].t)];
        fields.extend(runs.iter().map(|t| num(t.samples[k].n_osc)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| SimError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes every trajectory, the summary and the plot table under `out_dir`.
pub fn emit(scenario: &str, rows: &[SweepRow], extra_meta: &[(String, String)], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| SimError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for row in rows {
        if let Ok(t) = &row.outcome {
            written.push(write_file(
                out_dir.join(format!("{scenario}_{}.csv", t.label)),
                &trajectory_csv(t),
            )?);
        }
    }
    written.push(write_file(
        out_dir.join(format!("{scenario}_summary.csv")),
        &summary_csv(scenario, rows, extra_meta),
    )?);
    written.push(write_file(out_dir.join(format!("{scenario}_plot.csv")), &plot_csv(scenario, rows))?);
    Ok(written)
}
