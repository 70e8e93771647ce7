use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::game::RoundRecord;
use crate::concepts::{ConceptClass, LabeledSequence};
use crate::error::{Error, Result};

/// Column order of transcript files.
pub const TRANSCRIPT_COLUMNS: [&str; 12] = [
    "round",
    "x",
    "p1",
    "y_hat",
    "y",
    "active",
    "wc_queries",
    "pruning_queries",
    "cum_raw",
    "cum_dedup",
    "expected_loss",
    "realized_loss",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }

    /// Guesses from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

/// Writes serializable rows as CSV (with header) or JSON lines.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let mut w = BufWriter::new(out);
            for row in rows {
                serde_json::to_writer(&mut w, row)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn read_rows<T: DeserializeOwned, R: std::io::Read>(input: R, format: Format) -> Result<Vec<T>> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(input);
            r.deserialize().map(|row| row.map_err(Error::from)).collect()
        }
        Format::Jsonl => BufReader::new(input)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect(),
    }
}

/// Writes rows to `path`, creating missing parent directories.
pub fn write_table<T: Serialize>(path: &Path, rows: &[T], format: Format) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_rows(rows, File::create(path)?, format)
}

pub fn write_transcript(path: &Path, rows: &[RoundRecord], format: Format) -> Result<()> {
    write_table(path, rows, format)
}

pub fn read_transcript(path: &Path, format: Format) -> Result<Vec<RoundRecord>> {
    read_rows(File::open(path)?, format)
}

/// Realized and expected regret recomputed from a transcript alone.
pub fn recompute_regret(rows: &[RoundRecord], class: &ConceptClass) -> (i64, f64) {
    let seq: LabeledSequence = rows.iter().map(|r| (r.x, r.y)).collect();
    let (_, comparator) = class.erm(&seq);
    let realized: u64 = rows.iter().map(|r| u64::from(r.realized_loss)).sum();
    let expected: f64 = rows.iter().map(|r| r.expected_loss).sum();
    (realized as i64 - comparator as i64, expected - comparator as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{BlockUnionClass, Instance, Label};

    fn rows() -> Vec<RoundRecord> {
        vec![
            RoundRecord {
                round: 1,
                x: Instance::block(1, 0),
                p1: 0.25,
                y_hat: Label::ZERO,
                y: Label::ONE,
                active: 2,
                wc_queries: 3,
                pruning_queries: 2,
                cum_raw: 3,
                cum_dedup: None,
                expected_loss: 0.75,
                realized_loss: 1,
            },
            RoundRecord {
                round: 2,
                x: Instance::block(1, 1),
                p1: 1.0 / 3.0,
                y_hat: Label::ONE,
                y: Label::ONE,
                active: 2,
                wc_queries: 6,
                pruning_queries: 4,
                cum_raw: 9,
                cum_dedup: Some(7),
                expected_loss: 2.0 / 3.0,
                realized_loss: 0,
            },
        ]
    }

    #[test]
    fn round_trip_both_formats() {
        for format in [Format::Csv, Format::Jsonl] {
            let mut buf = Vec::new();
            write_rows(&rows(), &mut buf, format).unwrap();
            let back: Vec<RoundRecord> = read_rows(buf.as_slice(), format).unwrap();
            assert_eq!(back, rows());
        }
    }

    #[test]
    fn csv_header_matches_documented_order() {
        let mut buf = Vec::new();
        write_rows(&rows(), &mut buf, Format::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRANSCRIPT_COLUMNS.join(","));
        assert!(text.lines().nth(1).unwrap().starts_with("1,1:0,0.25,0,1,"));
    }

    #[test]
    fn regret_from_rows() {
        let class = ConceptClass::BlockUnion(BlockUnionClass::new(1));
        let (r, e) = recompute_regret(&rows(), &class);
        assert_eq!(r, 1);
        assert!((e - (0.75 + 2.0 / 3.0)).abs() < 1e-12);
    }
}
