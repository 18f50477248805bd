//! Hourly load and capacity-factor series, their CSV form, a seeded generator, and slicing.

mod csv;
mod synth;

use std::path::PathBuf;

use chrono::NaiveDateTime;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use self::csv::{load_csv, write_csv};
pub use self::synth::{synthesize, SynthConfig, SynthHorizon};
use crate::TechId;

/// Hours in one week, the default slice length.
pub const WEEK_HOURS: usize = 168;
pub const YEAR_HOURS: usize = 8760;

#[derive(Debug, thiserror::Error)]
pub enum TimeseriesError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("CSV header is missing the `{0}` column")]
    MissingColumn(String),
    #[error("CSV header repeats the `{0}` column")]
    DuplicateColumn(String),
    #[error(transparent)]
    InvalidId(#[from] crate::InvalidId),
    #[error("line {line}: cannot read {column} value `{value}`")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: {column} = {value} is outside its valid range")]
    OutOfRange {
        line: u64,
        column: String,
        value: f64,
    },
    #[error("line {line}: timestamp {found} does not follow {previous} by exactly one hour")]
    Gap {
        line: u64,
        previous: NaiveDateTime,
        found: NaiveDateTime,
    },
    #[error("series `{column}` has {found} entries, expected {expected}")]
    Length {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("the horizon is empty")]
    Empty,
    #[error("slice length must be at least one hour")]
    ZeroSliceLength,
    #[error("slice length {slice_length} h exceeds the {hours} h horizon")]
    SliceTooLong { slice_length: usize, hours: usize },
    #[error("invalid generator config: {0}")]
    Config(String),
}

/// Hourly demand and per-resource capacity factors over a planning horizon.
///
/// Immutable once built; every constructor checks the value ranges and series lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHorizon")]
pub struct HorizonData {
    start: NaiveDateTime,
    load: Vec<f64>,
    profiles: IndexMap<TechId, Vec<f64>>,
}

#[derive(Deserialize)]
struct RawHorizon {
    start: NaiveDateTime,
    load: Vec<f64>,
    profiles: IndexMap<TechId, Vec<f64>>,
}

impl TryFrom<RawHorizon> for HorizonData {
    type Error = TimeseriesError;

    fn try_from(raw: RawHorizon) -> Result<Self, Self::Error> {
        HorizonData::new(raw.start, raw.load, raw.profiles)
    }
}

impl HorizonData {
    pub fn new(
        start: NaiveDateTime,
        load: Vec<f64>,
        profiles: IndexMap<TechId, Vec<f64>>,
    ) -> Result<Self, TimeseriesError> {
        if load.is_empty() {
            return Err(TimeseriesError::Empty);
        }
        for (t, &l) in load.iter().enumerate() {
            if !(l.is_finite() && l >= 0.0) {
                return Err(TimeseriesError::OutOfRange {
                    line: t as u64 + 2,
                    column: "load".into(),
                    value: l,
                });
            }
        }
        for (id, series) in &profiles {
            if series.len() != load.len() {
                return Err(TimeseriesError::Length {
                    column: id.to_string(),
                    expected: load.len(),
                    found: series.len(),
                });
            }
            if let Some(t) = series.iter().position(|a| !(0.0..=1.0).contains(a)) {
                return Err(TimeseriesError::OutOfRange {
                    line: t as u64 + 2,
                    column: id.to_string(),
                    value: series[t],
                });
            }
        }
        Ok(HorizonData {
            start,
            load,
            profiles,
        })
    }

    pub fn hours(&self) -> usize {
        self.load.len()
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn profiles(&self) -> &IndexMap<TechId, Vec<f64>> {
        &self.profiles
    }

    pub fn profile(&self, id: &TechId) -> Option<&[f64]> {
        self.profiles.get(id).map(Vec::as_slice)
    }

    /// Copy of the hours `[offset, offset + length)`.
    pub fn window(&self, offset: usize, length: usize) -> HorizonData {
        assert!(offset + length <= self.hours(), "window outside the horizon");
        HorizonData {
            start: self.start + chrono::Duration::hours(offset as i64),
            load: self.load[offset..offset + length].to_vec(),
            profiles: self
                .profiles
                .iter()
                .map(|(id, s)| (id.clone(), s[offset..offset + length].to_vec()))
                .collect(),
        }
    }

    /// SHA-256 over the start stamp and every value, hex encoded. Used as a cache key.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.start.to_string().as_bytes());
        for v in &self.load {
            hasher.update(v.to_le_bytes());
        }
        for (id, series) in &self.profiles {
            hasher.update(id.as_str().as_bytes());
            hasher.update([0u8]);
            for v in series {
                hasher.update(v.to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

/// A contiguous block of hours standing in for one clustering sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeSlice {
    pub index: usize,
    pub offset: usize,
    pub length: usize,
}

impl TimeSlice {
    pub fn hours(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.length
    }
}

/// Result of [`slice`]: the whole slices and how many trailing hours were left out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slicing {
    pub slices: Vec<TimeSlice>,
    pub dropped_hours: usize,
}

/// Split the horizon into consecutive slices of `slice_length` hours, dropping a short tail.
pub fn slice(data: &HorizonData, slice_length: usize) -> Result<Slicing, TimeseriesError> {
    if slice_length == 0 {
        return Err(TimeseriesError::ZeroSliceLength);
    }
    let hours = data.hours();
    if slice_length > hours {
        return Err(TimeseriesError::SliceTooLong {
            slice_length,
            hours,
        });
    }
    let count = hours / slice_length;
    let dropped_hours = hours - count * slice_length;
    if dropped_hours > 0 {
        log::warn!("dropping the last {dropped_hours} h, shorter than one {slice_length} h slice");
    }
    let slices = (0..count)
        .map(|index| TimeSlice {
            index,
            offset: index * slice_length,
            length: slice_length,
        })
        .collect();
    Ok(Slicing {
        slices,
        dropped_hours,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2020, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn flat(hours: usize) -> HorizonData {
        let mut profiles = IndexMap::new();
        profiles.insert(TechId::new("wind").unwrap(), vec![0.5; hours]);
        HorizonData::new(start(), vec![1.0; hours], profiles).unwrap()
    }

    #[test]
    fn rejects_out_of_range_values() {
        let mut profiles = IndexMap::new();
        profiles.insert(TechId::new("wind").unwrap(), vec![0.1, 1.2]);
        let err = HorizonData::new(start(), vec![1.0, 1.0], profiles).unwrap_err();
        assert!(matches!(err, TimeseriesError::OutOfRange { line: 3, .. }));
        assert!(HorizonData::new(start(), vec![-1.0], IndexMap::new()).is_err());
    }

    #[test]
    fn slicing_counts() {
        let s = slice(&flat(61320), WEEK_HOURS).unwrap();
        assert_eq!(s.slices.len(), 365);
        let s = slice(&flat(170), WEEK_HOURS).unwrap();
        assert_eq!((s.slices.len(), s.dropped_hours), (1, 2));
        let s = slice(&flat(168), WEEK_HOURS).unwrap();
        assert_eq!(s.slices[0].hours(), 0..168);
        assert!(matches!(
            slice(&flat(100), WEEK_HOURS),
            Err(TimeseriesError::SliceTooLong { .. })
        ));
        assert!(slice(&flat(10), 0).is_err());
    }

    #[test]
    fn window_shifts_start() {
        let w = flat(48).window(24, 12);
        assert_eq!(w.hours(), 12);
        assert_eq!(w.start(), start() + chrono::Duration::hours(24));
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let d = flat(5);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<HorizonData>(&json).unwrap(), d);
        let bad = json.replace("0.5", "1.5");
        assert!(serde_json::from_str::<HorizonData>(&bad).is_err());
    }

    proptest! {
        #[test]
        fn slices_partition_a_prefix(hours in 1usize..2000, length in 1usize..400) {
            prop_assume!(length <= hours);
            let s = slice(&flat(hours), length).unwrap();
            prop_assert_eq!(s.slices.len(), hours / length);
            let mut next = 0;
            for (i, sl) in s.slices.iter().enumerate() {
                prop_assert_eq!(sl.index, i);
                prop_assert_eq!(sl.offset, next);
                next += sl.length;
            }
            prop_assert_eq!(next + s.dropped_hours, hours);
            prop_assert!(s.dropped_hours < length);
        }
    }
}
