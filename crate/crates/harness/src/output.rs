//! CSV files and plot scripts for one experiment.
//!
//! Every CSV starts with `#`-prefixed metadata lines, the last of which lists
//! the columns. Bodies depend only on config and seeds; wall-clock times go to
//! a separate `_timing.csv` so reruns reproduce the main files byte for byte.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{Context, Result};
use ristap_core::driver::Scheme;
use statrs::statistics::{Data, OrderStatistics};

use crate::config::{ExperimentKind, ExperimentSpec};
use crate::experiment::RunRecord;

pub const RUN_COLUMNS: [&str; 14] = [
    "point",
    "scheme",
    "seed",
    "status",
    "scnr_db",
    "scnr",
    "ci_min_margin",
    "modulus_deviation",
    "phi_max",
    "a_max",
    "ber",
    "outer_iterations",
    "waveform_rejected",
    "ris_rejected",
];

#[derive(Debug, Clone)]
pub struct Metadata {
    pub experiment: String,
    pub kind: ExperimentKind,
    pub profile: String,
    pub seeds: Vec<u64>,
}

/// `git describe` of the working tree, or `unknown` outside a repository.
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

fn num(v: f64) -> String {
    format!("{v:.9e}")
}

fn header(meta: &Metadata, columns: &[&str]) -> String {
    let seeds: Vec<String> = meta.seeds.iter().map(|s| s.to_string()).collect();
    format!(
        "# experiment: {}\n# kind: {}\n# git: {}\n# profile: {}\n# seeds: {}\n# columns: {}\n",
        meta.experiment,
        meta.kind.name(),
        git_describe(),
        meta.profile,
        seeds.join(","),
        columns.join(",")
    )
}

fn write_table(path: &Path, meta: &Metadata, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(header(meta, columns).as_bytes())?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_row(r: &RunRecord) -> Vec<String> {
    vec![
        num(r.point),
        r.scheme.name().into(),
        r.seed.to_string(),
        r.status.name().into(),
        num(r.scnr_db()),
        num(r.scnr),
        num(r.ci_min_margin),
        num(r.modulus_deviation),
        num(r.phi_max),
        num(r.a_max),
        num(r.ber),
        r.outer_iterations.to_string(),
        r.waveform_rejected.to_string(),
        r.ris_rejected.to_string(),
    ]
}

pub fn median(values: &[f64]) -> f64 {
    Data::new(values.to_vec()).median()
}

pub struct Written {
    pub files: Vec<PathBuf>,
}

pub fn write_outputs(dir: &Path, spec: &ExperimentSpec, meta: &Metadata, rows: &[RunRecord]) -> Result<Written> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = &spec.name;
    let mut files = Vec::new();
    let mut path = |suffix: &str| {
        let p = dir.join(format!("{stem}{suffix}"));
        files.push(p.clone());
        p
    };

    write_table(&path(".csv"), meta, &RUN_COLUMNS, &rows.iter().map(run_row).collect::<Vec<_>>())?;

    let timing: Vec<Vec<String>> =
        rows.iter().map(|r| vec![num(r.point), r.scheme.name().into(), r.seed.to_string(), format!("{:.6}", r.runtime_s)]).collect();
    write_table(&path("_timing.csv"), meta, &["point", "scheme", "seed", "runtime_s"], &timing)?;

    let mut trace = Vec::new();
    for r in rows {
        for (i, v) in r.scnr_trace.iter().enumerate() {
            trace.push(vec![num(r.point), r.scheme.name().into(), r.seed.to_string(), i.to_string(), num(10.0 * v.log10())]);
        }
    }
    write_table(&path("_trace.csv"), meta, &["point", "scheme", "seed", "iteration", "scnr_db"], &trace)?;

    let summary: Vec<Vec<String>> = summary_by_scheme(rows)
        .into_iter()
        .map(|(p, s, m, b)| vec![num(p), s.name().into(), num(m), num(b)])
        .collect();
    write_table(&path("_summary.csv"), meta, &["point", "scheme", "median_scnr_db", "median_ber"], &summary)?;

    if spec.kind == ExperimentKind::Roc {
        let mut roc = Vec::new();
        for r in rows {
            for (p, d) in spec.p_fa.iter().zip(&r.p_d) {
                roc.push(vec![num(r.point), r.scheme.name().into(), r.seed.to_string(), num(*p), num(*d)]);
            }
        }
        write_table(&path("_roc.csv"), meta, &["point", "scheme", "seed", "p_fa", "p_d"], &roc)?;
    }

    let script = path(".gp");
    std::fs::write(&script, crate::plot::gnuplot_script(spec))?;
    Ok(Written { files })
}

/// Median SCNR (dB) and BER over seeds per (point, scheme), sorted.
pub fn summary_by_scheme(rows: &[RunRecord]) -> Vec<(f64, Scheme, f64, f64)> {
    let mut groups: Vec<(f64, Scheme, Vec<f64>, Vec<f64>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.point && g.1 == r.scheme) {
            Some(g) => {
                g.2.push(r.scnr_db());
                g.3.push(r.ber);
            }
            None => groups.push((r.point, r.scheme, vec![r.scnr_db()], vec![r.ber])),
        }
    }
    let mut out: Vec<_> = groups.into_iter().map(|(p, s, v, b)| (p, s, median(&v), median(&b))).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}
