use std::fs::File;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use indexmap::IndexMap;

use super::{HorizonData, TimeseriesError};
use crate::TechId;

const STAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

fn parse_stamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, STAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.naive_utc()))
}

/// Read `timestamp,load,<resource>...` with one row per hour.
pub fn load_csv(path: impl AsRef<Path>) -> Result<HorizonData, TimeseriesError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TimeseriesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = ::csv::ReaderBuilder::new().trim(::csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(TimeseriesError::DuplicateColumn(name.to_string()));
        }
    }
    let position = |name: &str| {
        names
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| TimeseriesError::MissingColumn(name.into()))
    };
    let ts_col = position("timestamp")?;
    let load_col = position("load")?;
    let mut resources: Vec<(usize, TechId)> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        if i != ts_col && i != load_col {
            resources.push((i, TechId::new(*name)?));
        }
    }

    let mut start = None;
    let mut previous: Option<NaiveDateTime> = None;
    let mut load = Vec::new();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); resources.len()];
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: usize| record.get(col).unwrap_or("");
        let stamp_text = field(ts_col);
        let stamp = parse_stamp(stamp_text).ok_or_else(|| TimeseriesError::Parse {
            line,
            column: "timestamp".into(),
            value: stamp_text.into(),
        })?;
        if let Some(prev) = previous {
            if stamp - prev != chrono::Duration::hours(1) {
                return Err(TimeseriesError::Gap {
                    line,
                    previous: prev,
                    found: stamp,
                });
            }
        }
        start.get_or_insert(stamp);
        previous = Some(stamp);

        let number = |col: usize, name: &str| -> Result<f64, TimeseriesError> {
            let text = field(col);
            text.parse::<f64>().map_err(|_| TimeseriesError::Parse {
                line,
                column: name.into(),
                value: text.into(),
            })
        };
        let l = number(load_col, "load")?;
        if !(l.is_finite() && l >= 0.0) {
            return Err(TimeseriesError::OutOfRange {
                line,
                column: "load".into(),
                value: l,
            });
        }
        load.push(l);
        for ((col, id), s) in resources.iter().zip(&mut series) {
            let a = number(*col, id.as_str())?;
            if !(0.0..=1.0).contains(&a) {
                return Err(TimeseriesError::OutOfRange {
                    line,
                    column: id.to_string(),
                    value: a,
                });
            }
            s.push(a);
        }
    }
    let start = start.ok_or(TimeseriesError::Empty)?;
    let profiles: IndexMap<TechId, Vec<f64>> = resources
        .into_iter()
        .map(|(_, id)| id)
        .zip(series)
        .collect();
    HorizonData::new(start, load, profiles)
}

/// Write the CSV layout read by [`load_csv`]; values round-trip exactly.
pub fn write_csv(data: &HorizonData, path: impl AsRef<Path>) -> Result<(), TimeseriesError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| TimeseriesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = ::csv::Writer::from_writer(file);
    let mut header = vec!["timestamp".to_string(), "load".to_string()];
    header.extend(data.profiles().keys().map(|id| id.to_string()));
    writer.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for t in 0..data.hours() {
        row.clear();
        let stamp = data.start() + chrono::Duration::hours(t as i64);
        row.push(stamp.format(STAMP_FORMAT).to_string());
        row.push(format!("{:?}", data.load()[t]));
        for series in data.profiles().values() {
            row.push(format!("{:?}", series[t]));
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|source| TimeseriesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_three_rows() {
        let f = write(
            "timestamp,load,wind\n2020-01-01T00:00:00,10,0.1\n2020-01-01T01:00:00,20,0.5\n2020-01-01T02:00:00,30,0.9\n",
        );
        let d = load_csv(f.path()).unwrap();
        assert_eq!(d.hours(), 3);
        assert_eq!(d.load(), &[10.0, 20.0, 30.0]);
        assert_eq!(d.profile(&TechId::new("wind").unwrap()).unwrap(), &[0.1, 0.5, 0.9]);
    }

    #[test]
    fn reports_offending_line() {
        let f = write("timestamp,load,wind\n2020-01-01T00:00:00,10,0.1\n2020-01-01T01:00:00,20,1.2\n");
        match load_csv(f.path()).unwrap_err() {
            TimeseriesError::OutOfRange { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "wind");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn schema_and_gap_errors() {
        let f = write("timestamp,wind\n2020-01-01T00:00:00,0.1\n");
        assert!(matches!(
            load_csv(f.path()),
            Err(TimeseriesError::MissingColumn(c)) if c == "load"
        ));
        let f = write("timestamp,load\n2020-01-01T00:00:00,1\n2020-01-01T02:00:00,1\n");
        assert!(matches!(load_csv(f.path()), Err(TimeseriesError::Gap { line: 3, .. })));
        let f = write("timestamp,load\n2020-01-01T00:00:00,-1\n");
        assert!(matches!(load_csv(f.path()), Err(TimeseriesError::OutOfRange { .. })));
        let f = write("timestamp,load\n");
        assert!(matches!(load_csv(f.path()), Err(TimeseriesError::Empty)));
    }

    #[test]
    fn write_then_read_is_exact() {
        let f = write(
            "timestamp,load,solar,wind\n2020-03-01T00:00:00,10.125,0,0.3333333333333333\n2020-03-01T01:00:00,0.1,0.7,1\n",
        );
        let d = load_csv(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&d, out.path()).unwrap();
        assert_eq!(load_csv(out.path()).unwrap(), d);
    }
}
