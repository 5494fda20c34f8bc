//! Report serialization: a nested JSON document, or per-table CSV files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dldl::metrics::{Metric, Ranking};
use dldl::MetricReport;

use crate::error::{HarnessError, Result};
use crate::experiment::{ExperimentReport, BASELINE_NAME, METHOD_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    /// Pretty-printed JSON holding every report field.
    #[default]
    Text,
    /// A directory with `recovery.csv` and `predictive.csv`, methods by metrics.
    Csv,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            other => Err(HarnessError::InvalidArgument(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn report_to_string(report: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn report_from_str(s: &str) -> Result<ExperimentReport> {
    serde_json::from_str(s).map_err(|e| HarnessError::Format(e.to_string()))
}

/// One metric table: a row per method with each metric's value and rank, then the average rank.
pub fn table_csv(rows: &[(&str, &MetricReport)], ranking: &Ranking) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["method".to_string()];
    for m in Metric::ALL {
        header.push(m.name().to_string());
        header.push(format!("{}_rank", m.name()));
    }
    header.push("avg_rank".to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (i, (name, rep)) in rows.iter().enumerate() {
        let mut rec = vec![name.to_string()];
        for m in Metric::ALL {
            rec.push(rep.get(m).to_string());
            rec.push(ranking.get(m)[i].to_string());
        }
        rec.push(ranking.average[i].to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Format(e.to_string()))
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Format(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| HarnessError::io(path, e))
}

/// Writes the report and returns the files created.
pub fn write_report(report: &ExperimentReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    if path.as_os_str().is_empty() {
        return Err(HarnessError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "empty path")));
    }
    match format {
        ReportFormat::Text => {
            write_file(path, &report_to_string(report)?)?;
            Ok(vec![path.to_path_buf()])
        }
        ReportFormat::Csv => {
            fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))?;
            let tables = [
                ("recovery.csv", &report.recovery, &report.baselines.recovery, &report.rankings.recovery),
                ("predictive.csv", &report.predictive, &report.baselines.predictive, &report.rankings.predictive),
            ];
            let mut out = Vec::new();
            for (file, ours, base, ranking) in tables {
                let p = path.join(file);
                write_file(&p, &table_csv(&[(METHOD_NAME, ours), (BASELINE_NAME, base)], ranking)?)?;
                out.push(p);
            }
            Ok(out)
        }
    }
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let s = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    report_from_str(&s)
}
