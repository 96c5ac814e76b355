//! CSV ingestion of daily market records.
//!
//! The file contract is a fixed 57-column header: a calendar date, daily
//! trading volume, five emotion shares (raw counts or proportions, closed at
//! ingest), 49 five-minute intraday returns, and the next day's open return.

use crate::{CliError, Result};
use chrono::NaiveDate;
use mixpredict::simplex::{closure, Composition};
use std::path::Path;

pub const EMOTIONS: [&str; 5] = ["anger", "disgust", "joy", "sadness", "fear"];
pub const INTRADAY_POINTS: usize = 49;

/// One trading day: predictors for the day plus the response observed at the
/// next opening, pre-aligned by whoever produced the file.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketRecord {
    pub date: NaiveDate,
    pub volume: f64,
    pub emotions: Composition,
    pub intraday: Vec<f64>,
    pub open_return: f64,
}

/// The exact header the contract requires, in order.
pub fn expected_header() -> Vec<String> {
    let mut cols = vec!["date".to_string(), "volume".to_string()];
    cols.extend(EMOTIONS.iter().map(|e| e.to_string()));
    cols.extend((1..=INTRADAY_POINTS).map(|i| format!("r{i:02}")));
    cols.push("open_return".to_string());
    cols
}

fn parse_real(field: &str, row: usize, column: &str) -> Result<f64> {
    let value: f64 = field.trim().parse().map_err(|_| CliError::Parse {
        row,
        column: column.to_string(),
        message: format!("expected a number, got {field:?}"),
    })?;
    if !value.is_finite() {
        return Err(CliError::Parse {
            row,
            column: column.to_string(),
            message: format!("{value} is not finite"),
        });
    }
    Ok(value)
}

/// Reads, validates, and date-sorts the records in `path`.
pub fn ingest(path: &Path) -> Result<Vec<MarketRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let expected = expected_header();
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != expected {
        let missing: Vec<&String> = expected.iter().filter(|c| !header.contains(c)).collect();
        let unexpected: Vec<&String> = header.iter().filter(|c| !expected.contains(c)).collect();
        return Err(CliError::Schema(format!(
            "header does not match the {}-column contract; missing {missing:?}, unexpected {unexpected:?}",
            expected.len()
        )));
    }

    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row = row?;
        // Row numbers in errors count from 1 and skip the header line.
        let rownum = idx + 1;
        if row.len() != expected.len() {
            return Err(CliError::Parse {
                row: rownum,
                column: "-".to_string(),
                message: format!("expected {} fields, got {}", expected.len(), row.len()),
            });
        }
        let date =
            NaiveDate::parse_from_str(row[0].trim(), "%Y-%m-%d").map_err(|e| CliError::Parse {
                row: rownum,
                column: "date".to_string(),
                message: format!("{:?}: {e}", &row[0]),
            })?;
        let volume = parse_real(&row[1], rownum, "volume")?;
        if volume <= 0.0 {
            return Err(CliError::Parse {
                row: rownum,
                column: "volume".to_string(),
                message: format!("volume must be positive, got {volume}"),
            });
        }
        let mut raw_emotions = [0.0; 5];
        for (k, name) in EMOTIONS.iter().enumerate() {
            let v = parse_real(&row[2 + k], rownum, name)?;
            if v < 0.0 {
                return Err(CliError::Parse {
                    row: rownum,
                    column: name.to_string(),
                    message: format!("emotion shares cannot be negative, got {v}"),
                });
            }
            if v == 0.0 {
                return Err(CliError::ZeroEmotion {
                    row: rownum,
                    emotion: name.to_string(),
                });
            }
            raw_emotions[k] = v;
        }
        let emotions = closure(&raw_emotions).map_err(CliError::Model)?;
        let mut intraday = Vec::with_capacity(INTRADAY_POINTS);
        for i in 0..INTRADAY_POINTS {
            intraday.push(parse_real(&row[7 + i], rownum, &format!("r{:02}", i + 1))?);
        }
        let open_return = parse_real(&row[7 + INTRADAY_POINTS], rownum, "open_return")?;
        records.push(MarketRecord {
            date,
            volume,
            emotions,
            intraday,
            open_return,
        });
    }

    if records.is_empty() {
        return Err(CliError::Schema("the file has no data rows".to_string()));
    }
    records.sort_by_key(|r| r.date);
    for pair in records.windows(2) {
        if pair[0].date == pair[1].date {
            return Err(CliError::DuplicateDate(pair[0].date));
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn header_line() -> String {
        expected_header().join(",")
    }

    fn sample_row(date: &str, scale: f64) -> String {
        let intraday: Vec<String> = (0..INTRADAY_POINTS)
            .map(|i| format!("{:.6}", 0.001 * ((i as f64) * 0.7).sin() * scale))
            .collect();
        format!(
            "{date},1500000000,120,30,400,55,95,{},0.0042",
            intraday.join(",")
        )
    }

    fn write_csv(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "{}", header_line()).unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        f
    }

    #[test]
    fn parses_and_sorts_valid_rows() {
        let f = write_csv(&[
            sample_row("2015-01-07", 1.0),
            sample_row("2015-01-05", 2.0),
            sample_row("2015-01-06", 3.0),
        ]);
        let records = ingest(f.path()).unwrap();
        assert_eq!(records.len(), 3);
        let dates: Vec<String> = records.iter().map(|r| r.date.to_string()).collect();
        assert_eq!(dates, ["2015-01-05", "2015-01-06", "2015-01-07"]);
        assert_eq!(records[0].intraday.len(), INTRADAY_POINTS);
        // Emotion counts 120,30,400,55,95 sum to 700.
        assert!((records[0].emotions.parts()[2] - 400.0 / 700.0).abs() < 1e-15);
        assert!((records[0].open_return - 0.0042).abs() < 1e-15);
    }

    #[test]
    fn header_mismatch_is_a_schema_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "date,volume,anger,disgust,joy").unwrap();
        writeln!(f, "2015-01-05,1,1,1,1").unwrap();
        match ingest(f.path()) {
            Err(CliError::Schema(msg)) => assert!(msg.contains("r01"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn short_row_names_the_row() {
        let good = sample_row("2015-01-05", 1.0);
        let truncated = good.rsplit_once(',').unwrap().0.to_string();
        let f = write_csv(&[truncated]);
        // The csv crate itself flags the length mismatch against the header.
        match ingest(f.path()) {
            Err(CliError::Csv(e)) => assert!(e.to_string().contains("line: 2"), "{e}"),
            Err(CliError::Parse { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected a parse failure, got {other:?}"),
        }
    }

    #[test]
    fn zero_emotion_is_rejected_by_name() {
        let row = sample_row("2015-01-05", 1.0).replace(",30,", ",0,");
        let f = write_csv(&[row]);
        match ingest(f.path()) {
            Err(CliError::ZeroEmotion { row, emotion }) => {
                assert_eq!(row, 1);
                assert_eq!(emotion, "disgust");
            }
            other => panic!("expected zero-emotion rejection, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_dates_are_rejected() {
        let f = write_csv(&[sample_row("2015-01-05", 1.0), sample_row("2015-01-05", 2.0)]);
        match ingest(f.path()) {
            Err(CliError::DuplicateDate(d)) => assert_eq!(d.to_string(), "2015-01-05"),
            other => panic!("expected duplicate-date rejection, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_volume_is_rejected() {
        let row = sample_row("2015-01-05", 1.0).replace(",1500000000,", ",0,");
        let f = write_csv(&[row]);
        match ingest(f.path()) {
            Err(CliError::Parse { column, .. }) => assert_eq!(column, "volume"),
            other => panic!("expected volume rejection, got {other:?}"),
        }
    }

    #[test]
    fn garbage_number_names_row_and_column() {
        let row = sample_row("2015-01-06", 1.0).replace("0.0042", "up");
        let f = write_csv(&[sample_row("2015-01-05", 1.0), row]);
        match ingest(f.path()) {
            Err(CliError::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "open_return");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_rejected() {
        let f = write_csv(&[]);
        match ingest(f.path()) {
            Err(CliError::Schema(msg)) => assert!(msg.contains("no data rows")),
            other => panic!("expected empty rejection, got {other:?}"),
        }
    }
}
