//! Regularly sampled wind-speed series and CSV ingestion.
//!
//! A [`WindSeries`] never stores per-sample timestamps: sample `k` sits at
//! `start_epoch + k * interval_s`. Ingestion maps the rows of a CSV file onto
//! that grid, rejecting rows that go backwards in time and linearly filling
//! short runs of missing samples.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default longest run of missing samples that ingestion will interpolate
/// (one hour at a 10-minute cadence).
pub const DEFAULT_MAX_GAP: usize = 6;

/// Default sampling interval in seconds (10 minutes).
pub const DEFAULT_INTERVAL_S: i64 = 600;

#[derive(Debug, Clone, PartialEq)]
pub struct WindSeries {
    start_epoch: i64,
    interval_s: i64,
    values: Vec<f64>,
}

impl WindSeries {
    pub fn new(start_epoch: i64, interval_s: i64, values: Vec<f64>) -> Result<Self> {
        if interval_s <= 0 {
            return Err(Error::invalid(format!(
                "interval_s must be positive, got {interval_s}"
            )));
        }
        if values.is_empty() {
            return Err(Error::invalid("series must hold at least one sample"));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(format!(
                "sample {k} has invalid wind speed {v}"
            )));
        }
        Ok(Self {
            start_epoch,
            interval_s,
            values,
        })
    }

    /// Convenience constructor for tests and generators: epoch 0, 10-minute cadence.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(0, DEFAULT_INTERVAL_S, values)
    }

    pub fn start_epoch(&self) -> i64 {
        self.start_epoch
    }

    pub fn interval_s(&self) -> i64 {
        self.interval_s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, k: usize) -> i64 {
        self.start_epoch + k as i64 * self.interval_s
    }

    /// Contiguous sub-series of `length` samples beginning at `start_index`.
    pub fn slice(&self, start_index: usize, length: usize) -> Result<WindSeries> {
        let end = start_index
            .checked_add(length)
            .filter(|&end| end <= self.len() && length > 0);
        let Some(end) = end else {
            return Err(Error::invalid(format!(
                "slice [{start_index}, +{length}) out of range for series of length {}",
                self.len()
            )));
        };
        Ok(WindSeries {
            start_epoch: self.timestamp(start_index),
            interval_s: self.interval_s,
            values: self.values[start_index..end].to_vec(),
        })
    }

    /// Writes `epoch_s,speed_ms` rows. Speeds use Rust's shortest round-trip
    /// formatting, so re-ingesting the file reproduces the series bit-for-bit.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch_s,speed_ms")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.timestamp(k), v)?;
        }
        out.flush()
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimestampFormat {
    /// Integer seconds since the Unix epoch.
    #[default]
    Epoch,
    /// RFC 3339 / ISO-8601 date-time; values without an offset are read as UTC.
    Iso8601,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub timestamp_format: TimestampFormat,
    pub timestamp_column: String,
    pub speed_column: String,
    pub interval_s: i64,
    pub max_gap: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            timestamp_format: TimestampFormat::Epoch,
            timestamp_column: "timestamp".into(),
            speed_column: "speed_ms".into(),
            interval_s: DEFAULT_INTERVAL_S,
            max_gap: DEFAULT_MAX_GAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub gaps_filled: usize,
    pub rows_rejected: Vec<RejectedRow>,
}

pub fn parse_csv(path: impl AsRef<Path>, config: &IngestConfig) -> Result<(WindSeries, IngestReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reader(file, config)
}

/// Same as [`parse_csv`] over any byte source.
pub fn parse_reader<R: Read>(source: R, config: &IngestConfig) -> Result<(WindSeries, IngestReport)> {
    if config.interval_s <= 0 {
        return Err(Error::invalid("interval_s must be positive"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    // Files written by `WindSeries::write_csv` carry `epoch_s` instead of `timestamp`.
    let (ts_col, ts_format) = match column(&config.timestamp_column) {
        Some(c) => (c, config.timestamp_format),
        None => match column("epoch_s") {
            Some(c) => (c, TimestampFormat::Epoch),
            None => {
                return Err(Error::invalid(format!(
                    "missing timestamp column `{}`",
                    config.timestamp_column
                )))
            }
        },
    };
    let speed_col = column(&config.speed_column)
        .ok_or_else(|| Error::invalid(format!("missing speed column `{}`", config.speed_column)))?;

    let mut report = IngestReport::default();
    let mut values: Vec<f64> = Vec::new();
    let mut start: Option<i64> = None;
    let mut last_t = 0i64;

    for record in reader.records() {
        let record = record?;
        report.rows_read += 1;
        let line = record.position().map_or(0, |p| p.line());
        let row = line as usize;
        let field = |c: usize| {
            record.get(c).ok_or_else(|| Error::BadRow {
                row,
                reason: format!("missing column {}", c + 1),
            })
        };

        let t = parse_timestamp(field(ts_col)?, ts_format).map_err(|reason| Error::BadRow { row, reason })?;
        let raw = field(speed_col)?;
        let speed: f64 = raw.parse().map_err(|_| Error::BadRow {
            row,
            reason: format!("unparseable speed `{raw}`"),
        })?;
        if !speed.is_finite() {
            return Err(Error::BadRow {
                row,
                reason: format!("non-finite speed `{raw}`"),
            });
        }
        if speed < 0.0 {
            return Err(Error::BadRow {
                row,
                reason: format!("negative speed {speed}"),
            });
        }

        let Some(_) = start else {
            start = Some(t);
            last_t = t;
            values.push(speed);
            continue;
        };

        if t <= last_t {
            let reason = if t == last_t { "duplicate timestamp" } else { "out-of-order timestamp" };
            report.rows_rejected.push(RejectedRow {
                line,
                reason: format!("{reason} {t}"),
            });
            continue;
        }
        let delta = t - last_t;
        if delta % config.interval_s != 0 {
            report.rows_rejected.push(RejectedRow {
                line,
                reason: format!("timestamp {t} is off the {}s grid", config.interval_s),
            });
            continue;
        }
        let missing = (delta / config.interval_s - 1) as u64;
        if missing > config.max_gap as u64 {
            return Err(Error::GapTooLong {
                row,
                missing,
                max_gap: config.max_gap,
            });
        }
        if missing > 0 {
            let a = *values.last().expect("nonempty after first row");
            let steps = (missing + 1) as f64;
            for k in 1..=missing {
                values.push(a + (speed - a) * (k as f64 / steps));
            }
            report.gaps_filled += missing as usize;
        }
        values.push(speed);
        last_t = t;
    }

    let start = start.ok_or(Error::NoValidRows)?;
    let series = WindSeries::new(start, config.interval_s, values)?;
    Ok((series, report))
}

fn parse_timestamp(raw: &str, format: TimestampFormat) -> std::result::Result<i64, String> {
    match format {
        TimestampFormat::Epoch => raw
            .parse::<i64>()
            .map_err(|_| format!("unparseable epoch timestamp `{raw}`")),
        TimestampFormat::Iso8601 => {
            if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
                return Ok(dt.timestamp());
            }
            const NAIVE: [&str; 4] = [
                "%Y-%m-%dT%H:%M:%S%.f",
                "%Y-%m-%d %H:%M:%S%.f",
                "%Y-%m-%dT%H:%M",
                "%Y-%m-%d %H:%M",
            ];
            NAIVE
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
                .map(|dt| dt.and_utc().timestamp())
                .ok_or_else(|| format!("unparseable ISO-8601 timestamp `{raw}`"))
        }
    }
}
