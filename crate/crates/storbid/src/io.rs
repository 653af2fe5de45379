//! CSV schemas: hourly price series, observed dispatch windows, and the
//! tidy per-interval scenario output.
//!
//! All numbers are written with Rust's shortest-round-trip float formatting,
//! so emit-then-parse is exact and repeated runs are byte-identical.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDateTime;
use storbid_core::model::{DispatchProfile, PriceKind, PriceSeries, StorageSpec};
use storbid_core::sim::ScenarioResult;

pub const PRICE_HEADER: [&str; 2] = ["timestamp", "price_usd_per_mwh"];
pub const OBSERVATION_HEADER: [&str; 4] = ["interval", "p_mwh", "b_mwh", "price"];

const TIMESTAMP_FORMATS: [&str; 3] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S"];

fn parse_timestamp(raw: &str, line: usize) -> Result<NaiveDateTime> {
    for format in TIMESTAMP_FORMATS {
        if let Ok(ts) = NaiveDateTime::parse_from_str(raw, format) {
            return Ok(ts);
        }
    }
    bail!("line {line}: unparseable timestamp {raw:?} (expected ISO-8601, e.g. 2018-01-15T00:00:00)")
}

fn parse_number(raw: &str, what: &str, line: usize) -> Result<f64> {
    let value: f64 = raw
        .trim()
        .parse()
        .with_context(|| format!("line {line}: {what} {raw:?} is not a number"))?;
    if !value.is_finite() {
        bail!("line {line}: {what} {raw:?} is not finite");
    }
    Ok(value)
}

fn check_header(record: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = record.iter().map(str::trim).collect();
    if got != expected {
        bail!(
            "line 1: expected header {:?}, found {:?}",
            expected.join(","),
            got.join(",")
        );
    }
    Ok(())
}

/// Parses `timestamp,price_usd_per_mwh` rows: strictly increasing uniformly
/// spaced timestamps, finite prices (negative allowed). The interval length
/// is inferred from the timestamp spacing.
pub fn parse_price_reader<R: Read>(reader: R, kind: PriceKind) -> Result<PriceSeries> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(csv.headers().context("missing header row")?, &PRICE_HEADER)?;

    let mut values = Vec::new();
    let mut stamps: Vec<NaiveDateTime> = Vec::new();
    for (idx, record) in csv.records().enumerate() {
        let line = idx + 2;
        let record = record.with_context(|| format!("line {line}: malformed CSV row"))?;
        if record.len() != 2 {
            bail!("line {line}: expected 2 fields, found {}", record.len());
        }
        let stamp = parse_timestamp(&record[0], line)?;
        if let Some(prev) = stamps.last() {
            if stamp <= *prev {
                bail!("line {line}: timestamp {stamp} does not increase past {prev}");
            }
        }
        values.push(parse_number(&record[1], "price", line)?);
        stamps.push(stamp);
    }
    if values.is_empty() {
        bail!("price file has a header but no rows");
    }

    let interval_hours = if stamps.len() < 2 {
        1.0
    } else {
        let first = (stamps[1] - stamps[0]).num_seconds() as f64 / 3600.0;
        for (i, pair) in stamps.windows(2).enumerate() {
            let gap = (pair[1] - pair[0]).num_seconds() as f64 / 3600.0;
            if (gap - first).abs() > 1e-9 {
                bail!(
                    "line {}: interval of {gap} h breaks the {first} h spacing",
                    i + 3
                );
            }
        }
        first
    };
    Ok(PriceSeries::new(values, kind, interval_hours)?)
}

pub fn parse_price_csv(path: &Path, kind: PriceKind) -> Result<PriceSeries> {
    let file =
        File::open(path).with_context(|| format!("cannot open price file {}", path.display()))?;
    parse_price_reader(file, kind)
        .with_context(|| format!("parsing price file {}", path.display()))
}

/// An observed dispatch window read back from disk: what the unit did and
/// what the market paid, interval by interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecords {
    pub discharge: Vec<f64>,
    pub charge: Vec<f64>,
    pub prices: Vec<f64>,
}

/// Parses `interval,p_mwh,b_mwh,price` rows with consecutive interval
/// indices counting up from zero.
pub fn parse_observation_reader<R: Read>(reader: R) -> Result<ObservationRecords> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(csv.headers().context("missing header row")?, &OBSERVATION_HEADER)?;

    let mut records = ObservationRecords {
        discharge: Vec::new(),
        charge: Vec::new(),
        prices: Vec::new(),
    };
    for (idx, record) in csv.records().enumerate() {
        let line = idx + 2;
        let record = record.with_context(|| format!("line {line}: malformed CSV row"))?;
        if record.len() != 4 {
            bail!("line {line}: expected 4 fields, found {}", record.len());
        }
        let interval: usize = record[0]
            .parse()
            .with_context(|| format!("line {line}: interval {:?} is not an index", &record[0]))?;
        if interval != idx {
            bail!("line {line}: interval {interval} out of order (expected {idx})");
        }
        records.discharge.push(parse_number(&record[1], "p_mwh", line)?);
        records.charge.push(parse_number(&record[2], "b_mwh", line)?);
        records.prices.push(parse_number(&record[3], "price", line)?);
    }
    if records.prices.is_empty() {
        bail!("observation file has a header but no rows");
    }
    Ok(records)
}

pub fn parse_observation_csv(path: &Path) -> Result<ObservationRecords> {
    let file = File::open(path)
        .with_context(|| format!("cannot open observation file {}", path.display()))?;
    parse_observation_reader(file)
        .with_context(|| format!("parsing observation file {}", path.display()))
}

pub fn write_observation_csv<W: Write>(
    writer: W,
    profile: &DispatchProfile,
    prices: &PriceSeries,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(OBSERVATION_HEADER)?;
    for t in 0..profile.len() {
        csv.write_record(&[
            t.to_string(),
            profile.discharge[t].to_string(),
            profile.charge[t].to_string(),
            prices.values()[t].to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Solved schedule as rows of `interval,p_mwh,b_mwh,soc_mwh,price`.
pub fn write_profile_csv<W: Write>(
    writer: W,
    profile: &DispatchProfile,
    prices: &PriceSeries,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["interval", "p_mwh", "b_mwh", "soc_mwh", "price"])?;
    for t in 0..profile.len() {
        csv.write_record(&[
            t.to_string(),
            profile.discharge[t].to_string(),
            profile.charge[t].to_string(),
            profile.soc[t].to_string(),
            prices.values()[t].to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Per-interval scenario outcome for plotting: price trajectories side by
/// side with both units' dispatch. Maker columns only exist when the
/// scenario has market power.
pub fn write_tidy_csv<W: Write>(writer: W, result: &ScenarioResult) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec![
        "interval",
        "competitive",
        "nominal",
        "realized",
        "p_taker",
        "b_taker",
    ];
    if result.maker.is_some() {
        header.extend(["p_maker", "b_maker"]);
    }
    header.push("withheld");
    csv.write_record(&header)?;

    for t in 0..result.competitive.len() {
        let mut row = vec![
            t.to_string(),
            result.competitive.values()[t].to_string(),
            result.nominal.values()[t].to_string(),
            result.realized.values()[t].to_string(),
            result.taker.discharge[t].to_string(),
            result.taker.charge[t].to_string(),
        ];
        if let Some(maker) = &result.maker {
            row.push(maker.discharge[t].to_string());
            row.push(maker.charge[t].to_string());
        }
        row.push(result.withheld[t].to_string());
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Emits a price series with synthetic hourly timestamps starting at
/// `start`, the inverse of [`parse_price_reader`] up to timestamp labels.
pub fn write_price_csv<W: Write>(writer: W, prices: &PriceSeries, start: NaiveDateTime) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(PRICE_HEADER)?;
    let step = chrono::Duration::seconds((prices.interval_hours() * 3600.0).round() as i64);
    let mut stamp = start;
    for value in prices.values() {
        csv.write_record(&[
            stamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            value.to_string(),
        ])?;
        stamp += step;
    }
    csv.flush()?;
    Ok(())
}

/// The storage spec fields used by fixture manifests and audit inputs.
pub fn spec_summary(spec: &StorageSpec) -> serde_json::Value {
    serde_json::json!({
        "power_cap_mw": spec.power_cap,
        "energy_cap_mwh": spec.energy_cap,
        "efficiency": spec.efficiency,
        "soc_init_mwh": spec.soc_init,
        "soc_terminal_mwh": spec.soc_terminal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_csv_round_trips_exactly() {
        let series = PriceSeries::hourly(
            vec![32.5, -5.0, 0.1 + 0.2, 75.25],
            PriceKind::Forecast,
        )
        .unwrap();
        let mut buf = Vec::new();
        let start = NaiveDateTime::parse_from_str("2018-01-15T00:00:00", "%Y-%m-%dT%H:%M:%S")
            .unwrap();
        write_price_csv(&mut buf, &series, start).unwrap();
        let back = parse_price_reader(buf.as_slice(), PriceKind::Forecast).unwrap();
        assert_eq!(back.values(), series.values());
        assert_eq!(back.interval_hours(), 1.0);
    }

    #[test]
    fn price_csv_errors_carry_line_numbers() {
        let text = "timestamp,price_usd_per_mwh\n2018-01-15T00:00:00,30\n2018-01-15T01:00:00,abc\n";
        let err = parse_price_reader(text.as_bytes(), PriceKind::Forecast).unwrap_err();
        assert!(format!("{err:#}").contains("line 3"), "{err:#}");

        let text = "timestamp,price_usd_per_mwh\n2018-01-15T01:00:00,30\n2018-01-15T01:00:00,31\n";
        let err = parse_price_reader(text.as_bytes(), PriceKind::Forecast).unwrap_err();
        assert!(format!("{err:#}").contains("line 3"), "{err:#}");

        let err = parse_price_reader("time,price\n".as_bytes(), PriceKind::Forecast).unwrap_err();
        assert!(format!("{err:#}").contains("line 1"), "{err:#}");
    }

    #[test]
    fn observation_csv_round_trips() {
        let spec = StorageSpec::new(2.5, 10.0, 0.9, 5.0, None).unwrap();
        let profile = DispatchProfile::from_dispatch(
            vec![2.025, 0.0],
            vec![0.0, 2.5],
            &spec,
            1.0,
        )
        .unwrap();
        let prices = PriceSeries::hourly(vec![50.0, 20.0], PriceKind::Realized).unwrap();
        let mut buf = Vec::new();
        write_observation_csv(&mut buf, &profile, &prices).unwrap();
        let back = parse_observation_reader(buf.as_slice()).unwrap();
        assert_eq!(back.discharge, profile.discharge);
        assert_eq!(back.charge, profile.charge);
        assert_eq!(back.prices, prices.values());
    }

    #[test]
    fn observation_rows_must_be_in_order() {
        let text = "interval,p_mwh,b_mwh,price\n0,1,0,30\n2,0,1,20\n";
        let err = parse_observation_reader(text.as_bytes()).unwrap_err();
        assert!(format!("{err:#}").contains("line 3"), "{err:#}");
    }
}
