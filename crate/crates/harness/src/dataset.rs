//! CSV dataset files.
//!
//! Header columns are `f0..f{m-1}` followed by `d0..d{c-1}` (label distributions) and/or
//! `y0..y{c-1}` (logical labels), one sample per line, comma separated, dot decimals.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dldl::{Distributions, Features, LabelDistributionMatrix, LogicalLabelMatrix};
use ndarray::Array2;

use crate::error::{HarnessError, Result};

/// Tolerance on the row sums of distributions read from disk.
pub const LOAD_ROW_SUM_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// Requires `d*` columns.
    CsvLd,
    /// Requires `y*` columns.
    CsvLogical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdlDataset {
    pub name: String,
    pub x: Features,
    pub d_true: Option<Distributions>,
    pub y: Option<LogicalLabelMatrix>,
}

impl LdlDataset {
    pub fn n_samples(&self) -> usize {
        self.x.n_samples()
    }

    pub fn require_truth(&self) -> Result<&Distributions> {
        self.d_true.as_ref().ok_or_else(|| HarnessError::MissingGroundTruth(self.name.clone()))
    }

    pub fn require_labels(&self) -> Result<&LogicalLabelMatrix> {
        self.y.as_ref().ok_or_else(|| HarnessError::MissingLabels(self.name.clone()))
    }

    pub fn select(&self, indices: &[usize], name: impl Into<String>) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            x: self.x.select_rows(indices)?,
            d_true: self.d_true.as_ref().map(|d| d.select_rows(indices)),
            y: self.y.as_ref().map(|y| y.select_rows(indices)).transpose()?,
        })
    }
}

struct Layout {
    m: usize,
    d_cols: Option<(usize, usize)>,
    y_cols: Option<(usize, usize)>,
}

fn block_len(header: &[&str], start: usize, prefix: char) -> Result<usize> {
    let mut len = 0;
    while let Some(name) = header.get(start + len) {
        match name.strip_prefix(prefix) {
            Some(idx) if idx.parse::<usize>().ok() == Some(len) => len += 1,
            Some(_) => {
                return Err(HarnessError::HeaderMismatch(format!(
                    "expected column `{prefix}{len}`, found `{name}`"
                )))
            }
            None => break,
        }
    }
    Ok(len)
}

fn parse_layout(header: &[&str]) -> Result<Layout> {
    let m = block_len(header, 0, 'f')?;
    if m == 0 {
        return Err(HarnessError::HeaderMismatch("no feature columns `f0..`".into()));
    }
    let mut pos = m;
    let mut d_cols = None;
    let mut y_cols = None;
    let d = block_len(header, pos, 'd')?;
    if d > 0 {
        d_cols = Some((pos, d));
        pos += d;
    }
    let y = block_len(header, pos, 'y')?;
    if y > 0 {
        y_cols = Some((pos, y));
        pos += y;
    }
    if pos != header.len() {
        return Err(HarnessError::HeaderMismatch(format!("unexpected column `{}`", header[pos])));
    }
    if let (Some((_, a)), Some((_, b))) = (d_cols, y_cols) {
        if a != b {
            return Err(HarnessError::HeaderMismatch(format!("{a} distribution vs {b} label columns")));
        }
    }
    Ok(Layout { m, d_cols, y_cols })
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into())
}

fn read_records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| HarnessError::Parse { line: 1, msg: e.to_string() })?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        records.push(rec.map_err(|e| HarnessError::Parse { line: i + 2, msg: e.to_string() })?);
    }
    Ok((header, records))
}

fn parse_f64(rec: &csv::StringRecord, col: usize, line: usize) -> Result<f64> {
    let raw = rec.get(col).unwrap_or("");
    let v: f64 = raw
        .parse()
        .map_err(|_| HarnessError::Parse { line, msg: format!("`{raw}` is not a number") })?;
    if !v.is_finite() {
        return Err(HarnessError::Parse { line, msg: format!("`{raw}` is not finite") });
    }
    Ok(v)
}

/// Loads a dataset, requiring the column block named by `format`.
///
/// Distribution rows must sum to one within [`LOAD_ROW_SUM_TOL`] and are then renormalized.
pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<LdlDataset> {
    let path = path.as_ref();
    let (header, records) = read_records(path)?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let layout = parse_layout(&header)?;
    match format {
        DatasetFormat::CsvLd if layout.d_cols.is_none() => {
            return Err(HarnessError::HeaderMismatch("csv-ld needs columns `d0..`".into()))
        }
        DatasetFormat::CsvLogical if layout.y_cols.is_none() => {
            return Err(HarnessError::HeaderMismatch("csv-logical needs columns `y0..`".into()))
        }
        _ => {}
    }

    let n = records.len();
    let mut x = Array2::zeros((n, layout.m));
    let mut d = layout.d_cols.map(|(_, c)| Array2::<f64>::zeros((n, c)));
    let mut y = layout.y_cols.map(|(_, c)| Array2::<u8>::zeros((n, c)));
    for (i, rec) in records.iter().enumerate() {
        let line = i + 2;
        if rec.len() != header.len() {
            return Err(HarnessError::Parse {
                line,
                msg: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for j in 0..layout.m {
            x[[i, j]] = parse_f64(rec, j, line)?;
        }
        if let (Some((start, c)), Some(d)) = (layout.d_cols, d.as_mut()) {
            let mut sum = 0.0;
            for j in 0..c {
                let v = parse_f64(rec, start + j, line)?;
                if v < 0.0 {
                    return Err(HarnessError::Parse { line, msg: format!("negative degree {v}") });
                }
                d[[i, j]] = v;
                sum += v;
            }
            if (sum - 1.0).abs() > LOAD_ROW_SUM_TOL {
                return Err(HarnessError::RowSumViolation { line, sum });
            }
            d.row_mut(i).mapv_inplace(|v| v / sum);
        }
        if let (Some((start, c)), Some(y)) = (layout.y_cols, y.as_mut()) {
            for j in 0..c {
                y[[i, j]] = match rec.get(start + j).unwrap_or("") {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(HarnessError::Parse {
                            line,
                            msg: format!("logical label `{other}` is not 0 or 1"),
                        })
                    }
                };
            }
            if y.row(i).iter().all(|&v| v == 0) {
                return Err(HarnessError::AllZeroLabelRow { line });
            }
        }
    }

    Ok(LdlDataset {
        name: dataset_name(path),
        x: Features::new(x)?,
        d_true: d.map(LabelDistributionMatrix::new).transpose()?,
        y: y.map(LogicalLabelMatrix::new).transpose()?,
    })
}

/// Loads only the `f*` columns of any dataset file.
pub fn load_features(path: impl AsRef<Path>) -> Result<Features> {
    let path = path.as_ref();
    let (header, records) = read_records(path)?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let m = block_len(&header, 0, 'f')?;
    if m == 0 {
        return Err(HarnessError::HeaderMismatch("no feature columns `f0..`".into()));
    }
    let mut x = Array2::zeros((records.len(), m));
    for (i, rec) in records.iter().enumerate() {
        for j in 0..m {
            x[[i, j]] = parse_f64(rec, j, i + 2)?;
        }
    }
    Ok(Features::new(x)?)
}

/// Writes `f*` columns followed by `d*` and `y*` when present.
pub fn write_dataset(ds: &LdlDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| HarnessError::io(path, e);

    let x = ds.x.values();
    let d = ds.d_true.as_ref().map(|d| d.values());
    let y = ds.y.as_ref().map(|y| y.values());
    let mut header: Vec<String> = (0..x.ncols()).map(|j| format!("f{j}")).collect();
    if let Some(d) = d {
        header.extend((0..d.ncols()).map(|j| format!("d{j}")));
    }
    if let Some(y) = y {
        header.extend((0..y.ncols()).map(|j| format!("y{j}")));
    }
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for i in 0..x.nrows() {
        let mut fields: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(d) = d {
            fields.extend(d.row(i).iter().map(|v| v.to_string()));
        }
        if let Some(y) = y {
            fields.extend(y.row(i).iter().map(|v| v.to_string()));
        }
        writeln!(out, "{}", fields.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_two_sample_ld_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "tiny.csv", "f0,f1,d0,d1\n0.5,1.0,0.25,0.75\n-1,2,1,0\n");
        let ds = load_dataset(&p, DatasetFormat::CsvLd).unwrap();
        assert_eq!(ds.name, "tiny");
        assert_eq!(ds.n_samples(), 2);
        let d = ds.d_true.unwrap();
        assert_eq!(d.values()[[0, 1]], 0.75);
        assert!(ds.y.is_none());
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "f0,d0,d1\n0,0.50004,0.5\n1,0.2,0.8\n");
        let ds = load_dataset(&p, DatasetFormat::CsvLd).unwrap();
        let row = ds.d_true.unwrap().values().row(0).to_owned();
        assert!((row.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_row_sum() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "f0,d0,d1\n0,0.5,0.5\n1,0.5,0.4\n");
        assert!(matches!(
            load_dataset(&p, DatasetFormat::CsvLd),
            Err(HarnessError::RowSumViolation { line: 3, .. })
        ));
    }

    #[test]
    fn rejects_all_zero_logical_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "f0,f1,y0,y1,y2\n0,1,1,0,0\n1,2,0,0,0\n");
        assert!(matches!(
            load_dataset(&p, DatasetFormat::CsvLogical),
            Err(HarnessError::AllZeroLabelRow { line: 3 })
        ));
    }

    #[test]
    fn header_and_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "f0,d1\n0,1\n1,1\n");
        assert!(matches!(load_dataset(&p, DatasetFormat::CsvLd), Err(HarnessError::HeaderMismatch(_))));
        let p = write(&dir, "b.csv", "f0,y0,y1\n0,1,0\n1,0,1\n");
        assert!(matches!(load_dataset(&p, DatasetFormat::CsvLd), Err(HarnessError::HeaderMismatch(_))));
        let p = write(&dir, "c.csv", "f0,d0,d1\n0,x,1\n1,0,1\n");
        assert!(matches!(load_dataset(&p, DatasetFormat::CsvLd), Err(HarnessError::Parse { line: 2, .. })));
        let p = write(&dir, "d.csv", "f0,y0,y1\n0,2,0\n1,0,1\n");
        assert!(matches!(
            load_dataset(&p, DatasetFormat::CsvLogical),
            Err(HarnessError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn write_then_load_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "src.csv", "f0,f1,d0,d1,y0,y1\n0.1,0.30000000000000004,0.3,0.7,1,1\n2,3,1,0,1,0\n");
        let ds = load_dataset(&p, DatasetFormat::CsvLd).unwrap();
        let out = dir.path().join("out.csv");
        write_dataset(&ds, &out).unwrap();
        let back = load_dataset(&out, DatasetFormat::CsvLogical).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.d_true, ds.d_true);
        assert_eq!(back.y, ds.y);
        assert_eq!(load_features(&out).unwrap(), ds.x);
    }
}
