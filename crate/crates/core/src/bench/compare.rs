use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{run_case, MeshSignature, RunSummary};
use super::spec::{Case, RunSpec};
use crate::solvers::Scheme;
use crate::{Error, Result};

/// One column of a comparison, with ratios against the first run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub scheme: Scheme,
    pub increments: usize,
    pub cum_iterations: usize,
    pub wall_seconds: f64,
    pub peak_reaction_n: f64,
    pub critical_displacement_mm: Option<f64>,
    pub final_crack_length_mm: f64,
    pub completed: bool,
    /// `cum_iterations / baseline cum_iterations`.
    pub iteration_ratio: f64,
    /// `wall_seconds / baseline wall_seconds`.
    pub wall_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub case: Case,
    pub mesh: MeshSignature,
    pub rows: Vec<ComparisonRow>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        f64::NAN
    }
}

/// Tabulates runs of one case on one mesh. The first run is the baseline.
pub fn compare_summaries(runs: &[(String, RunSummary)]) -> Result<ComparisonReport> {
    let [(first_label, first), ..] = runs else {
        return Err(Error::Comparison("at least two runs are needed".into()));
    };
    if runs.len() < 2 {
        return Err(Error::Comparison("at least two runs are needed".into()));
    }
    for (label, s) in &runs[1..] {
        if s.case != first.case {
            return Err(Error::Comparison(format!(
                "`{label}` is a {} run but `{first_label}` is {}",
                s.case, first.case
            )));
        }
        if s.mesh != first.mesh {
            return Err(Error::Comparison(format!(
                "`{label}` used a different mesh ({} nodes, {}) than `{first_label}` ({} nodes, {})",
                s.mesh.nodes, s.mesh.fingerprint, first.mesh.nodes, first.mesh.fingerprint
            )));
        }
    }
    let rows = runs
        .iter()
        .map(|(label, s)| ComparisonRow {
            label: label.clone(),
            scheme: s.scheme,
            increments: s.increments,
            cum_iterations: s.cum_iterations,
            wall_seconds: s.wall_seconds,
            peak_reaction_n: s.peak_reaction_n,
            critical_displacement_mm: s.critical_displacement_mm,
            final_crack_length_mm: s.final_crack_length_mm,
            completed: s.completed,
            iteration_ratio: ratio(s.cum_iterations as f64, first.cum_iterations as f64),
            wall_ratio: ratio(s.wall_seconds, first.wall_seconds),
        })
        .collect();
    Ok(ComparisonReport {
        case: first.case,
        mesh: first.mesh.clone(),
        rows,
    })
}

/// Reads `summary.json` from each output directory.
pub fn compare_runs(dirs: &[PathBuf]) -> Result<ComparisonReport> {
    let runs = dirs
        .iter()
        .map(|d| {
            let label = d.file_name().map_or_else(
                || d.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            );
            RunSummary::load(&d.join("summary.json")).map(|s| (label, s))
        })
        .collect::<Result<Vec<_>>>()?;
    compare_summaries(&runs)
}

/// Runs every spec and compares the results. Specs must share the case; the
/// mesh check happens on the built models.
pub fn compare_schemes(specs: &[RunSpec]) -> Result<ComparisonReport> {
    if specs.len() < 2 {
        return Err(Error::Comparison("at least two runs are needed".into()));
    }
    if let Some(s) = specs.iter().find(|s| s.case != specs[0].case) {
        return Err(Error::Comparison(format!(
            "cannot compare {} with {}",
            specs[0].case, s.case
        )));
    }
    let runs = specs
        .iter()
        .map(|s| {
            let label = format!("{}-{}", s.scheme, s.increments);
            run_case(s).map(|o| (label, o.summary))
        })
        .collect::<Result<Vec<_>>>()?;
    compare_summaries(&runs)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4e}"))
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "case {}  mesh {} nodes / {} elements / {} unknowns  (fingerprint {})",
            self.case,
            self.mesh.nodes,
            self.mesh.elements,
            self.mesh.unknowns,
            self.mesh.fingerprint
        );
        let _ = writeln!(
            s,
            "{:<24} {:<18} {:>6} {:>9} {:>10} {:>11} {:>11} {:>10} {:>8} {:>8}",
            "run",
            "scheme",
            "incs",
            "cum_it",
            "wall_s",
            "peak_N",
            "u_crit_mm",
            "a_mm",
            "it/base",
            "t/base"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<24} {:<18} {:>6} {:>9} {:>10.2} {:>11.4e} {:>11} {:>10.4e} {:>8.3} {:>8.3}{}",
                r.label,
                r.scheme.name(),
                r.increments,
                r.cum_iterations,
                r.wall_seconds,
                r.peak_reaction_n,
                opt(r.critical_displacement_mm),
                r.final_crack_length_mm,
                r.iteration_ratio,
                r.wall_ratio,
                if r.completed { "" } else { "  (aborted)" }
            );
        }
        s
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r).map_err(|e| Error::Format {
                line: 0,
                message: e.to_string(),
            })?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("comparison.txt"), self.to_text())?;
        self.write_csv(std::fs::File::create(dir.join("comparison.csv"))?)
    }
}
