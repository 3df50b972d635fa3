//! CSV loading and writing.
//!
//! Input files are rectangular UTF-8 CSVs, numeric except for one optional
//! label column. Output floats use the shortest decimal representation that
//! round-trips, so files diff cleanly and reload exactly.

use std::path::Path;

use ispca_core::{Dataset, Target};
use ndarray::{Array2, ArrayView2};

use crate::{CliError, Result};

/// Shortest round-trip decimal form of a float.
pub fn fmt_f64(v: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(v).to_string()
}

/// How to interpret the label column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetOverride {
    /// Numeric labels with more than 20 distinct values become regression
    /// targets; everything else becomes classification.
    #[default]
    Auto,
    Regression,
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Label column, by header name or 0-based index. `None` loads a pure
    /// feature matrix (used by `transform`).
    pub label_col: Option<String>,
    pub has_header: bool,
    pub target: TargetOverride,
}

#[derive(Debug)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
}

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

/// Loads a labeled CSV into a dataset. Labels are mapped to classes in order
/// of first appearance; the mapping is kept on the dataset and emitted into
/// model files.
pub fn load_csv(path: &Path, opts: &LoadOptions) -> Result<LoadedCsv> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e))?;

    let mut records = reader.records();
    let header: Option<Vec<String>> = if opts.has_header {
        match records.next() {
            Some(rec) => {
                let rec = rec.map_err(|e| data_err(path, e))?;
                Some(rec.iter().map(|s| s.to_string()).collect())
            }
            None => return Err(data_err(path, "file is empty")),
        }
    } else {
        None
    };

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| data_err(path, format!("ragged or malformed row: {e}")))?;
        rows.push(rec);
    }
    if rows.is_empty() {
        return Err(data_err(path, "no data rows"));
    }
    let ncols = rows[0].len();
    if let Some(h) = &header {
        if h.len() != ncols {
            return Err(data_err(
                path,
                format!("header has {} fields but data rows have {ncols}", h.len()),
            ));
        }
    }

    let label_idx: Option<usize> = match &opts.label_col {
        None => None,
        Some(spec) => {
            let by_name = header
                .as_ref()
                .and_then(|h| h.iter().position(|name| name == spec));
            let idx = match by_name {
                Some(i) => i,
                None => match spec.parse::<usize>() {
                    Ok(i) if i < ncols => i,
                    Ok(i) => {
                        return Err(data_err(
                            path,
                            format!("label column index {i} out of range (file has {ncols} columns)"),
                        ))
                    }
                    Err(_) => {
                        return Err(data_err(path, format!("label column '{spec}' not found")))
                    }
                },
            };
            Some(idx)
        }
    };

    let d = ncols - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(data_err(path, "no feature columns"));
    }
    let n = rows.len();
    let mut features = Array2::zeros((n, d));
    let mut labels: Vec<String> = Vec::with_capacity(if label_idx.is_some() { n } else { 0 });
    for (r, rec) in rows.iter().enumerate() {
        let mut fj = 0;
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                data_err(
                    path,
                    format!(
                        "row {} column {}: '{}' is not numeric",
                        r + 1 + usize::from(opts.has_header),
                        c + 1,
                        cell
                    ),
                )
            })?;
            features[[r, fj]] = v;
            fj += 1;
        }
    }

    let feature_names: Vec<String> = match &header {
        Some(h) => h
            .iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != label_idx)
            .map(|(_, name)| name.clone())
            .collect(),
        None => (1..=d).map(|j| format!("x{j}")).collect(),
    };

    let dataset = match label_idx {
        None => {
            // feature-only load: attach a placeholder regression target
            let target = Target::Regression(ndarray::Array1::zeros(n));
            Dataset::new(features, target).map_err(|e| data_err(path, e))?
        }
        Some(_) => build_target(path, features, &labels, opts.target)?,
    };
    Ok(LoadedCsv { dataset, feature_names })
}

fn build_target(
    path: &Path,
    features: Array2<f64>,
    labels: &[String],
    over: TargetOverride,
) -> Result<Dataset> {
    let numeric: Option<Vec<f64>> = labels
        .iter()
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    let mut distinct: Vec<&str> = Vec::new();
    for l in labels {
        if !distinct.contains(&l.as_str()) {
            distinct.push(l);
        }
    }
    let classification = match over {
        TargetOverride::Regression => {
            if numeric.is_none() {
                return Err(data_err(path, "regression target requested but labels are not numeric"));
            }
            false
        }
        TargetOverride::Binary => {
            if distinct.len() != 2 {
                return Err(data_err(
                    path,
                    format!("binary target requested but found {} distinct labels", distinct.len()),
                ));
            }
            true
        }
        TargetOverride::Multiclass => {
            if distinct.len() < 2 {
                return Err(data_err(path, "multiclass target requested but found a single label"));
            }
            true
        }
        TargetOverride::Auto => match &numeric {
            Some(_) => distinct.len() <= 20,
            None => {
                if distinct.len() > 20 {
                    return Err(data_err(
                        path,
                        format!(
                            "{} distinct non-numeric labels; pass an explicit target kind if this is intended",
                            distinct.len()
                        ),
                    ));
                }
                true
            }
        },
    };

    if !classification {
        let y = ndarray::Array1::from_vec(numeric.expect("checked numeric"));
        return Dataset::new(features, Target::Regression(y)).map_err(|e| data_err(path, e));
    }

    if distinct.len() < 2 {
        return Err(data_err(path, "classification target has a single distinct label"));
    }
    let class_of = |l: &str| distinct.iter().position(|d| *d == l).expect("label seen") + 1;
    let names: Vec<String> = distinct.iter().map(|s| s.to_string()).collect();
    let target = if distinct.len() == 2 {
        Target::Binary(labels.iter().map(|l| (class_of(l) - 1) as u8).collect())
    } else {
        Target::Multiclass {
            labels: labels.iter().map(|l| class_of(l)).collect(),
            n_classes: distinct.len(),
        }
    };
    let dataset = Dataset::new(features, target).map_err(|e| data_err(path, e))?;
    Ok(dataset.with_label_names(names))
}

/// Writes a numeric matrix as CSV with the given column headers, optionally
/// preceded by a `#` provenance comment line.
pub fn write_matrix_csv(
    path: &Path,
    headers: &[String],
    matrix: &ArrayView2<f64>,
    provenance: Option<&str>,
) -> Result<()> {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(p);
        out.push('\n');
    }
    out.push_str(&headers.join(","));
    out.push('\n');
    for row in matrix.rows() {
        let mut first = true;
        for &v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt_f64(v));
            first = false;
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}


#[cfg(test)]
mod loader_error_tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn unknown_label_column_is_reported() {
        let f = write_tmp("a,b\n1,2\n3,4\n");
        let opts = LoadOptions {
            label_col: Some("missing".into()),
            has_header: true,
            target: TargetOverride::Auto,
        };
        let msg = load_csv(f.path(), &opts).unwrap_err().to_string();
        assert!(msg.contains("'missing' not found"), "{msg}");
    }

    #[test]
    fn label_index_out_of_range_is_reported() {
        let f = write_tmp("1,2\n3,4\n");
        let opts = LoadOptions {
            label_col: Some("5".into()),
            has_header: false,
            target: TargetOverride::Auto,
        };
        let msg = load_csv(f.path(), &opts).unwrap_err().to_string();
        assert!(msg.contains("index 5 out of range"), "{msg}");
    }

    #[test]
    fn single_distinct_label_is_rejected() {
        let f = write_tmp("a,y\n1,x\n2,x\n3,x\n");
        let opts = LoadOptions {
            label_col: Some("y".into()),
            has_header: true,
            target: TargetOverride::Auto,
        };
        assert!(load_csv(f.path(), &opts).is_err());
    }

    #[test]
    fn binary_override_on_three_classes_is_rejected() {
        let f = write_tmp("a,y\n1,p\n2,q\n3,r\n");
        let opts = LoadOptions {
            label_col: Some("y".into()),
            has_header: true,
            target: TargetOverride::Binary,
        };
        let msg = load_csv(f.path(), &opts).unwrap_err().to_string();
        assert!(msg.contains("3 distinct"), "{msg}");
    }
}
