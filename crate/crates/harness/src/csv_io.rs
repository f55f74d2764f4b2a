//! CSV files: convergence reports and rational-system coefficients.
//!
//! Report files start with `#`-prefixed `key=value` metadata lines followed by
//! the header `h,error,evals,time_ns` and one row per rung. Floats carry 17
//! significant digits; a diverged rung has `error = NaN`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::study::{Coefficients, ConvergenceReport, RowStatus};
use crate::HarnessError;

pub const REPORT_HEADER: [&str; 4] = ["h", "error", "evals", "time_ns"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Metadata lines in file order.
pub fn report_metadata(report: &ConvergenceReport) -> Vec<(String, String)> {
    let excluded: Vec<String> = report.excluded_rows().map(|(i, _)| i.to_string()).collect();
    let fitted: Vec<String> = report
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.status == RowStatus::Fitted)
        .map(|(i, _)| i.to_string())
        .collect();
    vec![
        ("problem".into(), report.problem.clone()),
        ("method".into(), report.method.as_str().into()),
        ("label".into(), report.method.display_label().into()),
        ("R".into(), report.order.to_string()),
        ("seed".into(), report.seed.to_string()),
        ("slope".into(), report.slope().map_or("NaN".into(), float)),
        ("floor".into(), float(report.floor)),
        ("fitted".into(), fitted.join(";")),
        ("excluded".into(), excluded.join(";")),
    ]
}

/// Writes `report` to `path`.
pub fn emit_csv(report: &ConvergenceReport, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for (k, v) in report_metadata(report) {
        writeln!(out, "# {k}={v}").map_err(io_err(path))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER).map_err(csv_err(path))?;
    for row in &report.rows {
        w.write_record([
            float(row.h),
            float(row.error),
            row.evals.to_string(),
            row.time_ns.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub h: f64,
    pub error: f64,
    pub evals: u64,
    pub time_ns: u128,
}

/// A report file read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvReport {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<CsvRow>,
}

pub fn read_report_csv(path: &Path) -> Result<CsvReport, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut metadata = BTreeMap::new();
    let mut body = String::new();
    let mut header_line = 0u64;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if let Some(meta) = line.strip_prefix('#') {
            let (k, v) = meta.trim().split_once('=').ok_or_else(|| HarnessError::Format {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                message: format!("metadata line without `=`: {line}"),
            })?;
            metadata.insert(k.trim().to_string(), v.trim().to_string());
        } else {
            if body.is_empty() {
                header_line = i as u64 + 1;
            }
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != REPORT_HEADER {
        return Err(HarnessError::Format {
            path: path.to_path_buf(),
            line: header_line,
            message: format!("expected header {}", REPORT_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let line = header_line + 1 + i as u64;
        let bad = |message: String| HarnessError::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = |j: usize| record.get(j).ok_or_else(|| bad(format!("missing column {}", REPORT_HEADER[j])));
        rows.push(CsvRow {
            h: field(0)?.parse().map_err(|e| bad(format!("h: {e}")))?,
            error: field(1)?.parse().map_err(|e| bad(format!("error: {e}")))?,
            evals: field(2)?.parse().map_err(|e| bad(format!("evals: {e}")))?,
            time_ns: field(3)?.parse().map_err(|e| bad(format!("time_ns: {e}")))?,
        });
    }
    Ok(CsvReport { metadata, rows })
}

/// Writes `(α, β)` as `matrix,row,col,value` records.
pub fn write_coefficients(coeffs: &Coefficients, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["matrix", "row", "col", "value"]).map_err(csv_err(path))?;
    for (name, matrix) in [("alpha", &coeffs.0), ("beta", &coeffs.1)] {
        for (i, row) in matrix.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                w.write_record([name.to_string(), i.to_string(), j.to_string(), float(v)])
                    .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads coefficients written by [`write_coefficients`]; every entry of both
/// `m × m` matrices must be present exactly once.
pub fn read_coefficients(path: &Path) -> Result<Coefficients, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut entries: Vec<(bool, usize, usize, f64, u64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let line = i as u64 + 2;
        let bad = |message: String| HarnessError::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() != 4 {
            return Err(bad(format!("expected 4 columns, got {}", record.len())));
        }
        let is_alpha = match &record[0] {
            "alpha" => true,
            "beta" => false,
            other => return Err(bad(format!("unknown matrix `{other}`"))),
        };
        let i: usize = record[1].parse().map_err(|e| bad(format!("row: {e}")))?;
        let j: usize = record[2].parse().map_err(|e| bad(format!("col: {e}")))?;
        let v: f64 = record[3].parse().map_err(|e| bad(format!("value: {e}")))?;
        entries.push((is_alpha, i, j, v, line));
    }
    let m = entries.iter().map(|e| e.1.max(e.2) + 1).max().unwrap_or(0);
    let mut alpha = vec![vec![None; m]; m];
    let mut beta = vec![vec![None; m]; m];
    for (is_alpha, i, j, v, line) in entries {
        let slot = if is_alpha { &mut alpha[i][j] } else { &mut beta[i][j] };
        if slot.replace(v).is_some() {
            return Err(HarnessError::Format {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate entry ({i}, {j})"),
            });
        }
    }
    let finish = |mat: Vec<Vec<Option<f64>>>| -> Result<Vec<Vec<f64>>, HarnessError> {
        mat.into_iter()
            .map(|row| row.into_iter().collect::<Option<Vec<f64>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| HarnessError::Format {
                path: path.to_path_buf(),
                line: 0,
                message: format!("incomplete {m}x{m} coefficient matrices"),
            })
    };
    Ok((finish(alpha)?, finish(beta)?))
}
