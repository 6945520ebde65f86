//! CSV ingestion and export.
//!
//! Expected header: `timestamp,turbine_id,ambient_temp,rotor_speed,power,bearing_temp`
//! with RFC 3339 timestamps. Any row with a non-parseable or out-of-range
//! field fails the parse with its line number.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, Utc};

use crate::num::{real, Real};

use super::{DataError, PlantDataset, ScadaRecord, TurbineSeries, GRID_SECONDS};

const HEADER: &str = "timestamp,turbine_id,ambient_temp,rotor_speed,power,bearing_temp";

/// Parses one plant's CSV. Records are grouped per turbine and sorted by
/// timestamp; the nominal power is inferred as the maximum observed power
/// (the format carries no rating column).
pub fn parse_scada_csv<S: Real, R: Read>(
    reader: R,
    plant_id: &str,
) -> Result<PlantDataset<S>, DataError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers().map_err(|_| DataError::MissingHeader { expected: HEADER })?;
    let expected: Vec<&str> = HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(DataError::MissingHeader { expected: HEADER });
    }

    let mut turbines: BTreeMap<String, Vec<ScadaRecord<S>>> = BTreeMap::new();
    let mut max_power = S::zero();
    let mut record = csv::StringRecord::new();
    loop {
        let line = csv.position().line();
        match csv.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(DataError::MalformedRow { line, reason: e.to_string() }),
        }
        if record.len() != 6 {
            return Err(DataError::MalformedRow {
                line,
                reason: format!("expected 6 fields, got {}", record.len()),
            });
        }
        let field = |i: usize| record.get(i).unwrap_or("");
        let timestamp = parse_timestamp(field(0))
            .ok_or_else(|| DataError::MalformedRow { line, reason: format!("bad timestamp `{}`", field(0)) })?;
        let turbine_id = field(1).to_string();
        if turbine_id.is_empty() {
            return Err(DataError::MalformedRow { line, reason: "empty turbine_id".into() });
        }
        let ambient_temp = parse_value::<S>(field(2))
            .ok_or_else(|| DataError::MalformedRow { line, reason: format!("bad ambient_temp `{}`", field(2)) })?;
        let rotor_speed = parse_value::<S>(field(3))
            .ok_or_else(|| DataError::MalformedRow { line, reason: format!("bad rotor_speed `{}`", field(3)) })?;
        if rotor_speed < S::zero() {
            return Err(DataError::MalformedRow {
                line,
                reason: format!("negative rotor_speed `{}`", field(3)),
            });
        }
        let mut power = parse_value::<S>(field(4))
            .ok_or_else(|| DataError::MalformedRow { line, reason: format!("bad power `{}`", field(4)) })?;
        // Idle/curtailed turbines report 0; tolerate sensor noise down to -1 kW.
        if power < S::zero() {
            if power < real(-1.0) {
                return Err(DataError::MalformedRow {
                    line,
                    reason: format!("power `{}` below the -1 kW sensor tolerance", field(4)),
                });
            }
            power = S::zero();
        }
        let bearing_temp = parse_value::<S>(field(5))
            .ok_or_else(|| DataError::MalformedRow { line, reason: format!("bad bearing_temp `{}`", field(5)) })?;

        if timestamp.timestamp() % GRID_SECONDS != 0 {
            return Err(DataError::OffGridTimestamp { turbine: turbine_id, timestamp });
        }
        max_power = max_power.max(power);
        turbines.entry(turbine_id).or_default().push(ScadaRecord {
            timestamp,
            ambient_temp,
            rotor_speed,
            power,
            bearing_temp,
        });
    }

    let mut dataset = PlantDataset::new(plant_id, max_power.max(S::one()));
    for (id, mut records) in turbines {
        records.sort_by_key(|r| r.timestamp);
        for pair in records.windows(2) {
            if pair[0].timestamp == pair[1].timestamp {
                return Err(DataError::DuplicateTimestamp {
                    turbine: id,
                    timestamp: pair[0].timestamp,
                });
            }
        }
        dataset.turbines.insert(id.clone(), TurbineSeries { turbine_id: id, records });
    }
    Ok(dataset)
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s).ok().map(|t| t.with_timezone(&Utc))
}

fn parse_value<S: Real>(s: &str) -> Option<S> {
    let v: f64 = s.parse().ok()?;
    if !v.is_finite() {
        return None;
    }
    S::from_f64(v)
}

/// Writes a dataset in the same format, rows ordered by turbine then time.
/// Output is byte-deterministic: floats use the shortest round-trip form.
pub fn write_scada_csv<S: Real, W: Write>(
    dataset: &PlantDataset<S>,
    writer: W,
) -> Result<(), DataError> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(writer);
    csv.write_record(HEADER.split(','))
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))?;
    for series in dataset.turbines.values() {
        for r in &series.records {
            csv.write_record(&[
                r.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                series.turbine_id.clone(),
                format!("{}", r.ambient_temp),
                format!("{}", r.rotor_speed),
                format!("{}", r.power),
                format!("{}", r.bearing_temp),
            ])
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))?;
        }
    }
    csv.flush()?;
    Ok(())
}
