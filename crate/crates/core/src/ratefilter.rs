//! First-exit rate filter over tick data, duration extraction, synthetic
//! tick generation and the tick/duration file formats.
//!
//! The published rate is re-set to the market price whenever the market has
//! moved by at least ε from the last published rate. The first tick sets the
//! initial published rate.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, IngestErrorKind, Result};
use crate::simulate::stream_rng;

/// One market observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tick {
    /// Seconds.
    pub timestamp: f64,
    pub price: f64,
}

/// Ticks with strictly increasing timestamps and positive prices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickSeries {
    ticks: Vec<Tick>,
}

impl TickSeries {
    pub fn new(ticks: Vec<Tick>) -> Result<Self> {
        for (i, t) in ticks.iter().enumerate() {
            if !(t.price > 0.0) || !t.price.is_finite() {
                return Err(Error::Ingest {
                    row: i + 1,
                    kind: IngestErrorKind::NonPositivePrice(t.price),
                });
            }
            if !t.timestamp.is_finite() {
                return Err(Error::Ingest {
                    row: i + 1,
                    kind: IngestErrorKind::Malformed(format!("timestamp {}", t.timestamp)),
                });
            }
            if i > 0 && !(t.timestamp > ticks[i - 1].timestamp) {
                return Err(Error::Ingest {
                    row: i + 1,
                    kind: IngestErrorKind::NonIncreasingTimestamp {
                        previous: ticks[i - 1].timestamp,
                        current: t.timestamp,
                    },
                });
            }
        }
        Ok(Self { ticks })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(timestamp, price)| Tick { timestamp, price }).collect())
    }

    pub fn ticks(&self) -> &[Tick] {
        &self.ticks
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    /// Mean gap between consecutive ticks; `None` for fewer than two ticks.
    pub fn mean_spacing(&self) -> Option<f64> {
        let n = self.ticks.len();
        (n >= 2).then(|| (self.ticks[n - 1].timestamp - self.ticks[0].timestamp) / (n - 1) as f64)
    }
}

/// Output of [`first_exit_filter`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilteredSeries {
    pub updates: Vec<Tick>,
    pub epsilon: f64,
    pub durations: Vec<f64>,
}

impl FilteredSeries {
    pub fn mean_duration(&self) -> Option<f64> {
        (!self.durations.is_empty())
            .then(|| crate::fit::compensated_sum(self.durations.iter().copied()) / self.durations.len() as f64)
    }

    /// The updates as a tick series.
    pub fn as_ticks(&self) -> TickSeries {
        TickSeries {
            ticks: self.updates.clone(),
        }
    }
}

/// `|p - reference| ≥ ε`, allowing for the rounding of the subtraction so
/// that decimal prices exactly ε apart trigger.
fn crosses(price: f64, reference: f64, epsilon: f64) -> bool {
    let slack = 4.0 * f64::EPSILON * price.abs().max(reference.abs());
    (price - reference).abs() >= epsilon - slack
}

pub fn first_exit_filter(ticks: &TickSeries, epsilon: f64) -> Result<FilteredSeries> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be finite and > 0, got {epsilon}")));
    }
    let first = *ticks.ticks.first().ok_or(Error::Empty)?;
    let mut updates = vec![first];
    let mut reference = first.price;
    for &tick in &ticks.ticks[1..] {
        if crosses(tick.price, reference, epsilon) {
            reference = tick.price;
            updates.push(tick);
        }
    }
    let durations = updates.windows(2).map(|w| w[1].timestamp - w[0].timestamp).collect();
    Ok(FilteredSeries {
        updates,
        epsilon,
        durations,
    })
}

/// Consecutive update-time differences.
pub fn durations_of(filtered: &FilteredSeries) -> Result<Vec<f64>> {
    if filtered.updates.len() < 2 {
        return Err(Error::InsufficientData {
            got: filtered.updates.len(),
            need: 2,
        });
    }
    Ok(filtered.updates.windows(2).map(|w| w[1].timestamp - w[0].timestamp).collect())
}

/// Equally spaced ticks whose price is an additive Gaussian walk. A step
/// that would make the price non-positive is reflected about zero.
pub fn synth_ticks(step_std: f64, tick_interval: f64, count: usize, seed: u64, start_price: f64) -> Result<TickSeries> {
    if !(step_std >= 0.0) || !step_std.is_finite() {
        return Err(Error::InvalidParameter(format!("step std must be finite and >= 0, got {step_std}")));
    }
    if !(tick_interval > 0.0) || !tick_interval.is_finite() {
        return Err(Error::InvalidParameter(format!("tick interval must be > 0, got {tick_interval}")));
    }
    if !(start_price > 0.0) || !start_price.is_finite() {
        return Err(Error::InvalidParameter(format!("start price must be > 0, got {start_price}")));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("tick count must be >= 1".into()));
    }
    let normal = Normal::new(0.0, step_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = stream_rng(seed, 0);
    let mut price = start_price;
    let mut ticks = Vec::with_capacity(count);
    for i in 0..count {
        if i > 0 {
            let next = (price + normal.sample(&mut rng)).abs();
            if next > 0.0 {
                price = next;
            }
        }
        ticks.push(Tick {
            timestamp: i as f64 * tick_interval,
            price,
        });
    }
    Ok(TickSeries { ticks })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TimeFormat {
    Seconds,
    Iso8601,
}

fn parse_iso(s: &str) -> Option<f64> {
    let to_secs = |d: DateTime<chrono::Utc>| d.timestamp() as f64 + f64::from(d.timestamp_subsec_nanos()) * 1e-9;
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(to_secs(d.to_utc()));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|d| to_secs(d.and_utc()))
}

fn malformed(row: usize, msg: String) -> Error {
    Error::Ingest {
        row,
        kind: IngestErrorKind::Malformed(msg),
    }
}

/// Reads `timestamp,price` rows. A header row is allowed; lines starting with
/// `#` are skipped. Timestamps are decimal seconds (≥ 0) or ISO-8601, decided
/// by the first data row. Errors name the 1-based line.
pub fn ingest_csv<R: Read>(reader: R) -> Result<TickSeries> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut format = None;
    let mut ticks: Vec<Tick> = Vec::new();
    for (index, record) in csv.records().enumerate() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(index + 1, |p| p.line() as usize);
            malformed(row, e.to_string())
        })?;
        let row = record.position().map_or(index + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(malformed(row, format!("expected 2 fields, found {}", record.len())));
        }
        let (ts, px) = (&record[0], &record[1]);
        let price: f64 = match px.parse() {
            Ok(p) => p,
            Err(_) if format.is_none() && ticks.is_empty() && ts.parse::<f64>().is_err() && parse_iso(ts).is_none() => {
                continue; // header
            }
            Err(_) => return Err(malformed(row, format!("price '{px}' is not a number"))),
        };
        let fmt = *format.get_or_insert(if ts.parse::<f64>().is_ok() { TimeFormat::Seconds } else { TimeFormat::Iso8601 });
        let timestamp = match fmt {
            TimeFormat::Seconds => match ts.parse::<f64>() {
                Ok(t) if t >= 0.0 && t.is_finite() => t,
                Ok(t) => return Err(malformed(row, format!("timestamp {t} must be finite and >= 0"))),
                Err(_) => return Err(malformed(row, format!("timestamp '{ts}' is not in decimal seconds like earlier rows"))),
            },
            TimeFormat::Iso8601 => parse_iso(ts)
                .ok_or_else(|| malformed(row, format!("timestamp '{ts}' is not ISO-8601 like earlier rows")))?,
        };
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::Ingest {
                row,
                kind: IngestErrorKind::NonPositivePrice(price),
            });
        }
        if let Some(prev) = ticks.last() {
            if !(timestamp > prev.timestamp) {
                return Err(Error::Ingest {
                    row,
                    kind: IngestErrorKind::NonIncreasingTimestamp {
                        previous: prev.timestamp,
                        current: timestamp,
                    },
                });
            }
        }
        ticks.push(Tick { timestamp, price });
    }
    if ticks.is_empty() {
        return Err(Error::Empty);
    }
    Ok(TickSeries { ticks })
}

pub fn ingest_csv_path(path: &Path) -> Result<TickSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_csv(BufReader::new(file))
}

/// One value per line; blank lines, `#` comments and a non-numeric first
/// line are skipped. Values must be `> 0`, or `≥ 0` with `allow_zero`.
fn read_column<R: BufRead>(reader: R, allow_zero: bool, path: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_line = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let row = i + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let first = !seen_line;
        seen_line = true;
        let v: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) if first => continue,
            Err(_) => return Err(malformed(row, format!("'{text}' is not a number"))),
        };
        let ok = if allow_zero { v >= 0.0 } else { v > 0.0 };
        if !ok || !v.is_finite() {
            return Err(Error::Ingest {
                row,
                kind: IngestErrorKind::NonPositiveDuration(v),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Empty);
    }
    Ok(values)
}

pub fn read_durations<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    read_column(reader, false, Path::new("<input>"))
}

/// Durations file: one positive duration in seconds per line.
pub fn read_durations_path(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_column(BufReader::new(file), false, path)
}

/// Observation offsets file: one non-negative offset in seconds per line.
pub fn read_offsets_path(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_column(BufReader::new(file), true, path)
}

pub fn write_ticks_csv<W: Write>(mut w: W, ticks: &TickSeries) -> std::io::Result<()> {
    writeln!(w, "# timestamp in seconds, price in currency units")?;
    writeln!(w, "timestamp,price")?;
    for t in &ticks.ticks {
        writeln!(w, "{},{}", t.timestamp, t.price)?;
    }
    Ok(())
}

pub fn write_filtered_csv<W: Write>(mut w: W, filtered: &FilteredSeries) -> std::io::Result<()> {
    writeln!(w, "# timestamp in seconds, rate in currency units, epsilon {}", filtered.epsilon)?;
    writeln!(w, "timestamp,rate")?;
    for t in &filtered.updates {
        writeln!(w, "{},{}", t.timestamp, t.price)?;
    }
    Ok(())
}

pub fn write_durations<W: Write>(mut w: W, durations: &[f64]) -> std::io::Result<()> {
    writeln!(w, "# duration in seconds")?;
    for d in durations {
        writeln!(w, "{d}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prices(ps: &[f64]) -> TickSeries {
        TickSeries::from_pairs(&ps.iter().enumerate().map(|(i, &p)| (i as f64, p)).collect::<Vec<_>>()).unwrap()
    }

    fn update_prices(f: &FilteredSeries) -> Vec<f64> {
        f.updates.iter().map(|t| t.price).collect()
    }

    #[test]
    fn filter_examples() {
        let f = first_exit_filter(&prices(&[100.00, 100.04, 100.09, 100.12]), 0.1).unwrap();
        assert_eq!(update_prices(&f), vec![100.00, 100.12]);
        assert_eq!(f.durations, vec![3.0]);
        let f = first_exit_filter(&prices(&[100.00, 100.10]), 0.1).unwrap();
        assert_eq!(update_prices(&f), vec![100.00, 100.10]);
        let f = first_exit_filter(&prices(&[100.00, 100.05, 100.01, 100.06]), 0.1).unwrap();
        assert_eq!(update_prices(&f), vec![100.00]);
        let f = first_exit_filter(&prices(&[100.00, 99.90, 100.00]), 0.1).unwrap();
        assert_eq!(update_prices(&f), vec![100.00, 99.90, 100.00]);
    }

    #[test]
    fn filter_errors() {
        assert!(matches!(first_exit_filter(&TickSeries::new(vec![]).unwrap(), 0.1), Err(Error::Empty)));
        assert!(first_exit_filter(&prices(&[1.0]), 0.0).is_err());
        assert!(first_exit_filter(&prices(&[1.0]), f64::NAN).is_err());
    }

    #[test]
    fn durations_examples() {
        let ticks = TickSeries::from_pairs(&[(0.0, 1.0), (5.0, 2.0), (20.0, 3.0)]).unwrap();
        let f = first_exit_filter(&ticks, 0.5).unwrap();
        assert_eq!(durations_of(&f).unwrap(), vec![5.0, 15.0]);
        let ticks = TickSeries::from_pairs(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(durations_of(&first_exit_filter(&ticks, 0.5).unwrap()).unwrap(), vec![1.0]);
        let one = first_exit_filter(&prices(&[1.0]), 0.5).unwrap();
        assert!(matches!(durations_of(&one), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn synthetic_walks() {
        let flat = synth_ticks(0.0, 1.0, 1000, 1, 100.0).unwrap();
        assert!(flat.ticks().iter().all(|t| t.price == 100.0));
        assert_eq!(first_exit_filter(&flat, 0.1).unwrap().updates.len(), 1);
        assert_eq!(synth_ticks(0.03, 1.0, 500, 9, 100.0).unwrap(), synth_ticks(0.03, 1.0, 500, 9, 100.0).unwrap());
        assert_ne!(synth_ticks(0.03, 1.0, 500, 9, 100.0).unwrap(), synth_ticks(0.03, 1.0, 500, 10, 100.0).unwrap());
        let walk = synth_ticks(0.03, 1.0, 100_000, 3, 100.0).unwrap();
        let f = first_exit_filter(&walk, 0.1).unwrap();
        let mean = f.mean_duration().unwrap();
        assert!((5.0..=30.0).contains(&mean), "{mean}");
        assert!(synth_ticks(-1.0, 1.0, 10, 1, 100.0).is_err());
        assert!(synth_ticks(0.1, 0.0, 10, 1, 100.0).is_err());
    }

    #[test]
    fn reflection_keeps_prices_positive() {
        let walk = synth_ticks(1.0, 1.0, 10_000, 2, 0.5).unwrap();
        assert!(walk.ticks().iter().all(|t| t.price > 0.0));
    }

    #[test]
    fn ingest_examples() {
        let t = ingest_csv("0,100.00\n5,100.12".as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.ticks()[1], Tick { timestamp: 5.0, price: 100.12 });
        match ingest_csv("5,100.0\n4,100.1".as_bytes()) {
            Err(Error::Ingest {
                row: 2,
                kind: IngestErrorKind::NonIncreasingTimestamp { .. },
            }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(ingest_csv("".as_bytes()), Err(Error::Empty)));
        assert!(matches!(ingest_csv("timestamp,price\n".as_bytes()), Err(Error::Empty)));
    }

    #[test]
    fn ingest_header_comments_and_errors() {
        let t = ingest_csv("# units\ntimestamp,price\n0,1.5\n\n2.5,1.6\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        match ingest_csv("0,1\n1,abc".as_bytes()) {
            Err(Error::Ingest { row: 2, kind: IngestErrorKind::Malformed(_) }) => {}
            other => panic!("{other:?}"),
        }
        match ingest_csv("0,1\n1,-2".as_bytes()) {
            Err(Error::Ingest { row: 2, kind: IngestErrorKind::NonPositivePrice(_) }) => {}
            other => panic!("{other:?}"),
        }
        match ingest_csv("0,1\n1,1\n1,2".as_bytes()) {
            Err(Error::Ingest { row: 3, kind: IngestErrorKind::NonIncreasingTimestamp { .. } }) => {}
            other => panic!("{other:?}"),
        }
        assert!(ingest_csv("0,1,2".as_bytes()).is_err());
        assert!(ingest_csv("-1,1".as_bytes()).is_err());
    }

    #[test]
    fn ingest_iso_timestamps() {
        let t = ingest_csv("2024-01-02T00:00:00Z,150.1\n2024-01-02T00:00:01.5Z,150.2\n2024-01-02 00:01:00,150.3\n".as_bytes()).unwrap();
        let ts: Vec<f64> = t.ticks().iter().map(|x| x.timestamp - t.ticks()[0].timestamp).collect();
        assert_eq!(ts, vec![0.0, 1.5, 60.0]);
        // formats never mix
        assert!(ingest_csv("2024-01-02T00:00:00Z,1\n5,1".as_bytes()).is_err());
        assert!(ingest_csv("0,1\n2024-01-02T00:00:00Z,1".as_bytes()).is_err());
    }

    #[test]
    fn round_trip_through_writers() {
        let walk = synth_ticks(0.05, 0.5, 200, 4, 100.0).unwrap();
        let mut buf = Vec::new();
        write_ticks_csv(&mut buf, &walk).unwrap();
        assert_eq!(ingest_csv(buf.as_slice()).unwrap(), walk);
        let f = first_exit_filter(&walk, 0.1).unwrap();
        let mut buf = Vec::new();
        write_filtered_csv(&mut buf, &f).unwrap();
        assert_eq!(ingest_csv(buf.as_slice()).unwrap(), f.as_ticks());
        let mut buf = Vec::new();
        write_durations(&mut buf, &f.durations).unwrap();
        assert_eq!(read_durations(buf.as_slice()).unwrap(), f.durations);
    }

    #[test]
    fn duration_files() {
        assert_eq!(read_durations("duration\n1\n2.5\n".as_bytes()).unwrap(), vec![1.0, 2.5]);
        match read_durations("1\n0\n".as_bytes()) {
            Err(Error::Ingest { row: 2, kind: IngestErrorKind::NonPositiveDuration(_) }) => {}
            other => panic!("{other:?}"),
        }
        assert!(read_durations("1\nx\n".as_bytes()).is_err());
        assert!(matches!(read_durations("# nothing\n".as_bytes()), Err(Error::Empty)));
        assert_eq!(read_column("0\n1\n".as_bytes(), true, Path::new("-")).unwrap(), vec![0.0, 1.0]);
    }
}
