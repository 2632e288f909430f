//! Tabular exports. Every table is written either as CSV with a header line
//! or as JSON lines, one object per row.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::ModelParams;
use crate::error::{Error, Result};
use crate::estimators::SurvivalPoint;
use crate::infection::FrontPath;
use crate::oracle::ExactPmf;
use crate::regeneration::RecordSequence;
use crate::walker::LatticePath;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::config(format!("unknown format {other:?} (expected csv or jsonl)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: i64,
    pub x: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontRow {
    pub t: u64,
    pub front: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordRow {
    pub k: u64,
    pub r_k: u64,
    pub x: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub x: i64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfHeader {
    pub n: usize,
    pub params: ModelParams,
    pub mass_defect: f64,
}

pub fn path_rows(path: &LatticePath) -> Vec<PathRow> {
    (0..=path.steps())
        .map(|k| PathRow {
            t: path.start.t + k as i64,
            x: path.at(k),
        })
        .collect()
}

pub fn front_rows(front: &FrontPath) -> Vec<FrontRow> {
    front
        .positions
        .iter()
        .enumerate()
        .map(|(t, &front)| FrontRow { t: t as u64, front })
        .collect()
}

pub fn record_rows(records: &RecordSequence, path: &LatticePath) -> Vec<RecordRow> {
    records
        .records
        .iter()
        .map(|&(k, r_k)| RecordRow {
            k,
            r_k,
            x: path.at(r_k as usize),
        })
        .collect()
}

pub fn pmf_rows(pmf: &ExactPmf) -> Vec<PmfRow> {
    pmf.support
        .iter()
        .zip(&pmf.probabilities)
        .map(|(&x, &probability)| PmfRow { x, probability })
        .collect()
}

/// Serializes `rows` to `out`.
pub fn write_rows<T: Serialize>(out: impl Write, rows: &[T], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let mut out = std::io::BufWriter::new(out);
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Like [`write_rows`] but always emits the CSV header, even with no rows.
pub fn rows_to_bytes<T: Serialize>(rows: &[T], header: &[&str], format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    if rows.is_empty() && format == Format::Csv {
        buf.extend_from_slice(header.join(",").as_bytes());
        buf.push(b'\n');
        return Ok(buf);
    }
    write_rows(&mut buf, rows, format)?;
    Ok(buf)
}

pub fn write_table<T: Serialize>(path: &Path, rows: &[T], header: &[&str], format: Format) -> Result<()> {
    fs::write(path, rows_to_bytes(rows, header, format)?)?;
    Ok(())
}

pub const PATH_HEADER: [&str; 2] = ["t", "x"];
pub const FRONT_HEADER: [&str; 2] = ["t", "front"];
pub const RECORD_HEADER: [&str; 3] = ["k", "r_k", "x"];
pub const PMF_HEADER: [&str; 2] = ["x", "probability"];
pub const SURVIVAL_HEADER: [&str; 2] = ["t", "survival"];

pub fn write_path(path: &Path, walk: &LatticePath, format: Format) -> Result<()> {
    write_table(path, &path_rows(walk), &PATH_HEADER, format)
}

pub fn write_front(path: &Path, front: &FrontPath, format: Format) -> Result<()> {
    write_table(path, &front_rows(front), &FRONT_HEADER, format)
}

pub fn write_records(path: &Path, records: &RecordSequence, walk: &LatticePath, format: Format) -> Result<()> {
    write_table(path, &record_rows(records, walk), &RECORD_HEADER, format)
}

pub fn write_survival(path: &Path, survival: &[SurvivalPoint], format: Format) -> Result<()> {
    write_table(path, survival, &SURVIVAL_HEADER, format)
}

/// The pmf table at `path` and its header as JSON at `path.json`.
pub fn write_pmf(path: &Path, pmf: &ExactPmf, params: &ModelParams, format: Format) -> Result<()> {
    write_table(path, &pmf_rows(pmf), &PMF_HEADER, format)?;
    let header = PmfHeader {
        n: pmf.n,
        params: *params,
        mass_defect: pmf.mass_defect,
    };
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    fs::write(s, serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SpaceTimePoint;

    fn walk() -> LatticePath {
        LatticePath {
            start: SpaceTimePoint::new(2, 5),
            positions: vec![2, 3, 2, 3],
        }
    }

    #[test]
    fn path_csv_layout() {
        let bytes = rows_to_bytes(&path_rows(&walk()), &PATH_HEADER, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "t,x\n5,2\n6,3\n7,2\n8,3\n");
    }

    #[test]
    fn jsonl_layout() {
        let bytes = rows_to_bytes(&path_rows(&walk())[..2], &PATH_HEADER, Format::Jsonl).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "{\"t\":5,\"x\":2}\n{\"t\":6,\"x\":3}\n");
    }

    #[test]
    fn empty_csv_keeps_header() {
        let rows: Vec<SurvivalPoint> = vec![];
        let bytes = rows_to_bytes(&rows, &SURVIVAL_HEADER, Format::Csv).unwrap();
        assert_eq!(bytes, b"t,survival\n");
    }

    #[test]
    fn survival_header_matches_field_names() {
        let rows = [SurvivalPoint { t: 1, survival: 0.5 }];
        let bytes = rows_to_bytes(&rows, &SURVIVAL_HEADER, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "t,survival\n1,0.5\n");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("jsonl".parse::<Format>().unwrap(), Format::Jsonl);
        assert!("xml".parse::<Format>().unwrap_err().is_config());
    }

    #[test]
    fn pmf_with_sidecar_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pmf.csv");
        let params = ModelParams::new(0.0, 0.75, 0.75, 0.0, 1).unwrap();
        let pmf = crate::oracle::exact_pmf_poisson(&params, 2, 1e-12).unwrap();
        write_pmf(&p, &pmf, &params, Format::Csv).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next(), Some("x,probability"));
        assert_eq!(text.lines().count(), 4);
        let header: PmfHeader = serde_json::from_str(&fs::read_to_string(dir.path().join("pmf.csv.json")).unwrap()).unwrap();
        assert_eq!(header.n, 2);
        assert_eq!(header.mass_defect, 0.0);
    }
}
