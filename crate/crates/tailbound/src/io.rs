//! File formats: the single-column CSV sample reader, CSV table writers,
//! atomic output, and the JSON report shapes printed by the binary.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use tailbound_core::BoundResult;

use crate::applications::{CoverageRow, HeatmapCell};
use crate::estimation::Sample;
use crate::{Error, Result};

/// Reads a sample from a CSV file holding one numeric column.
///
/// Lines starting with `#` and blank lines are skipped. A single leading
/// non-numeric line is treated as a header. Numbers must not carry commas:
/// a comma anywhere is rejected so multi-column files fail loudly instead
/// of being misread.
pub fn read_sample_csv(path: &Path) -> Result<Sample> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.contains(',') {
            return Err(Error::InvalidInput(format!(
                "{}:{}: expected a single numeric column, found a comma",
                path.display(),
                idx + 1
            )));
        }
        match line.parse::<f64>() {
            Ok(v) => {
                values.push(v);
                seen_data = true;
            }
            Err(_) if !seen_data => continue, // header row
            Err(_) => {
                return Err(Error::InvalidInput(format!(
                    "{}:{}: could not parse {line:?} as a number",
                    path.display(),
                    idx + 1
                )));
            }
        }
    }
    Sample::new(values)
}

/// Writes `contents` to `path` atomically: the data lands in a temporary
/// file in the same directory and is renamed over the target, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Coverage table in the fixed `c,d,truth,mean_upper_bound,coverage,failures`
/// layout.
pub fn coverage_csv(rows: &[CoverageRow]) -> String {
    let mut out = String::from("c,d,truth,mean_upper_bound,coverage,failures\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.c, r.d, r.truth, r.mean_upper_bound, r.coverage, r.failures
        ));
    }
    out
}

/// Heatmap table: percentile cell, its value range, exact probability,
/// bound, and conservatism ratio.
pub fn heatmap_csv(cells: &[HeatmapCell]) -> String {
    let mut out = String::from("c_pct,d_pct,c,d,truth,bound,ratio\n");
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell.c_pct, cell.d_pct, cell.c, cell.d, cell.truth, cell.bound, cell.ratio
        ));
    }
    out
}

/// Plot-ready two-column table.
pub fn xy_csv(x_name: &str, y_name: &str, rows: &[(f64, f64)]) -> String {
    let mut out = format!("{x_name},{y_name}\n");
    for (x, y) in rows {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

/// Density payload inside a bound report.
#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub a: f64,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub limiting: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub grid_points: usize,
    pub outer_grid_points: Option<usize>,
    pub refine_iterations: usize,
    pub achieved_tolerance: f64,
    pub warnings: Vec<String>,
}

/// JSON shape printed for `bound` and `bound-ci`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub value: Option<f64>,
    pub tail_class: String,
    pub x1_star: Option<f64>,
    pub omega_star: Option<f64>,
    pub rho_star: Option<f64>,
    pub density: Option<DensityReport>,
    pub params_used: serde_json::Value,
    pub diagnostics: DiagnosticsReport,
    pub version: String,
}

/// Packages a solver result for printing; `params_used` carries whatever
/// parameterization produced it (exact, interval box, or calibrated).
pub fn bound_report(res: &BoundResult, params_used: serde_json::Value) -> BoundReport {
    BoundReport {
        value: res.value,
        tail_class: res.tail_class.as_str().to_string(),
        x1_star: res.maximizer.as_ref().map(|m| m.x1),
        omega_star: res.maximizer.as_ref().and_then(|m| m.omega),
        rho_star: res.maximizer.as_ref().and_then(|m| m.rho),
        density: res.density.as_ref().map(|d| DensityReport {
            a: d.a(),
            knots: d.knots().to_vec(),
            values: d.values().to_vec(),
            limiting: d.limiting(),
        }),
        params_used,
        diagnostics: DiagnosticsReport {
            grid_points: res.diagnostics.grid_points,
            outer_grid_points: res.diagnostics.outer_grid_points,
            refine_iterations: res.diagnostics.refine_iterations,
            achieved_tolerance: res.diagnostics.achieved_tolerance,
            warnings: res.diagnostics.warnings.clone(),
        },
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_reader_handles_headers_comments_and_blanks() {
        let f = write_temp("# a comment\nvalue\n1.5\n\n2.5\n# trailing\n3.5\n");
        let s = read_sample_csv(f.path()).unwrap();
        assert_eq!(s.values(), &[1.5, 2.5, 3.5]);
    }

    #[test]
    fn csv_reader_rejects_multiple_columns() {
        let f = write_temp("x,y\n1.0,2.0\n");
        let err = read_sample_csv(f.path()).unwrap_err();
        assert!(err.to_string().contains("comma"), "got {err}");
    }

    #[test]
    fn csv_reader_rejects_garbage_after_data_started() {
        let f = write_temp("1.0\ntwo\n");
        assert!(read_sample_csv(f.path()).is_err());
    }

    #[test]
    fn atomic_write_replaces_the_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "first\n").unwrap();
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second\n");
    }

    #[test]
    fn tables_have_fixed_headers() {
        assert!(coverage_csv(&[]).starts_with("c,d,truth,mean_upper_bound,coverage,failures\n"));
        assert!(heatmap_csv(&[]).starts_with("c_pct,d_pct,c,d,truth,bound,ratio\n"));
        assert_eq!(xy_csv("theta", "value", &[(1.0, 2.0)]), "theta,value\n1,2\n");
    }
}
