use std::f64::consts::PI;

use chrono::{NaiveDate, NaiveDateTime};
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{HorizonData, TimeseriesError, WEEK_HOURS, YEAR_HOURS};
use crate::TechId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthHorizon {
    Years(u32),
    Weeks(u32),
    Hours(u32),
}

impl SynthHorizon {
    pub fn hours(self) -> usize {
        match self {
            SynthHorizon::Years(y) => y as usize * YEAR_HOURS,
            SynthHorizon::Weeks(w) => w as usize * WEEK_HOURS,
            SynthHorizon::Hours(h) => h as usize,
        }
    }
}

/// Shape parameters of the synthetic load, solar and wind series.
///
/// Amplitudes are relative to the mean level. `noise` scales every stochastic component below
/// one year (cloud cover, wind weather, load noise); `yearly_amplitude` scales per-year resource
/// deviations, which are drawn from the same seeded stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub horizon: SynthHorizon,
    pub start: NaiveDateTime,
    pub base_load_mw: f64,
    pub load_diurnal_amplitude: f64,
    pub load_weekend_dip: f64,
    pub load_seasonal_amplitude: f64,
    pub solar_peak: f64,
    pub solar_seasonal_amplitude: f64,
    pub wind_mean: f64,
    pub wind_seasonal_amplitude: f64,
    pub wind_diurnal_amplitude: f64,
    /// Decorrelation time of weather systems driving the wind series.
    pub wind_persistence_hours: f64,
    pub yearly_amplitude: f64,
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            horizon: SynthHorizon::Years(1),
            start: NaiveDate::from_ymd_opt(2019, 1, 1)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid date"),
            base_load_mw: 1000.0,
            load_diurnal_amplitude: 0.2,
            load_weekend_dip: 0.08,
            load_seasonal_amplitude: 0.12,
            solar_peak: 0.85,
            solar_seasonal_amplitude: 0.35,
            wind_mean: 0.35,
            wind_seasonal_amplitude: 0.25,
            wind_diurnal_amplitude: 0.08,
            wind_persistence_hours: 60.0,
            yearly_amplitude: 0.08,
            noise: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), TimeseriesError> {
        let bad = |m: &str| Err(TimeseriesError::Config(m.into()));
        if self.horizon.hours() == 0 {
            return bad("horizon must be positive");
        }
        let nonneg = [
            ("base_load_mw", self.base_load_mw),
            ("load_diurnal_amplitude", self.load_diurnal_amplitude),
            ("load_weekend_dip", self.load_weekend_dip),
            ("load_seasonal_amplitude", self.load_seasonal_amplitude),
            ("solar_peak", self.solar_peak),
            ("solar_seasonal_amplitude", self.solar_seasonal_amplitude),
            ("wind_mean", self.wind_mean),
            ("wind_seasonal_amplitude", self.wind_seasonal_amplitude),
            ("wind_diurnal_amplitude", self.wind_diurnal_amplitude),
            ("yearly_amplitude", self.yearly_amplitude),
            ("noise", self.noise),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(TimeseriesError::Config(format!(
                    "{name} must be a non-negative number, got {v}"
                )));
            }
        }
        if !(self.wind_persistence_hours.is_finite() && self.wind_persistence_hours > 0.0) {
            return bad("wind_persistence_hours must be positive");
        }
        Ok(())
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-1.7 * z).exp())
}

/// Deterministic synthetic horizon with `load`, `solar` and `wind` series.
pub fn synthesize(config: &SynthConfig, seed: u64) -> Result<HorizonData, TimeseriesError> {
    config.validate()?;
    let hours = config.horizon.hours();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };

    let years = hours.div_ceil(YEAR_HOURS);
    let solar_year: Vec<f64> = (0..years)
        .map(|_| 1.0 + config.yearly_amplitude * normal())
        .collect();
    let wind_year: Vec<f64> = (0..years)
        .map(|_| 1.0 + config.yearly_amplitude * normal())
        .collect();

    let noise = config.noise;
    let phi = (-1.0 / config.wind_persistence_hours).exp();
    let innovation = (1.0 - phi * phi).sqrt();
    let mut weather = normal();
    let mut cloud = normal();
    let mut load_noise = 0.0;

    let mut load = Vec::with_capacity(hours);
    let mut solar = Vec::with_capacity(hours);
    let mut wind = Vec::with_capacity(hours);
    for t in 0..hours {
        let hour_of_day = (t % 24) as f64;
        let day = t / 24;
        let season = (t % YEAR_HOURS) as f64 / YEAR_HOURS as f64;
        let year = t / YEAR_HOURS;

        if t % 24 == 0 && t > 0 {
            cloud = 0.6 * cloud + 0.8 * normal();
        }
        let clear_sky = 1.0 - noise.min(1.0) * 0.6 * logistic(cloud);
        let bell = (PI * (hour_of_day + 0.5 - 6.0) / 12.0).sin().max(0.0);
        let daylight = if (6.0..18.0).contains(&hour_of_day) { bell } else { 0.0 };
        let solar_season = 1.0 + config.solar_seasonal_amplitude * (2.0 * PI * (season - 0.47)).cos();
        let jitter = 1.0 + noise * 0.05 * normal();
        let s = config.solar_peak * daylight * solar_season * solar_year[year] * clear_sky * jitter;
        solar.push(if daylight > 0.0 { s.clamp(0.0, 1.0) } else { 0.0 });

        weather = phi * weather + innovation * normal();
        let wind_season = 1.0 + config.wind_seasonal_amplitude * (2.0 * PI * (season - 0.04)).cos();
        let wind_daily =
            1.0 + config.wind_diurnal_amplitude * (2.0 * PI * (hour_of_day - 3.0) / 24.0).cos();
        let sigma = 0.75 * noise;
        let gust = (sigma * weather - 0.5 * sigma * sigma).exp();
        let w = config.wind_mean * wind_season * wind_daily * wind_year[year] * gust;
        wind.push(w.clamp(0.0, 1.0));

        load_noise = 0.9 * load_noise + noise * 0.015 * normal();
        let diurnal = config.load_diurnal_amplitude * (2.0 * PI * (hour_of_day - 8.0) / 24.0).sin();
        let seasonal = config.load_seasonal_amplitude * (2.0 * PI * (season - 0.55)).cos();
        let weekend = if day % 7 >= 5 { -config.load_weekend_dip } else { 0.0 };
        let l = config.base_load_mw * (1.0 + diurnal + seasonal + weekend + load_noise);
        load.push(l.max(0.0));
    }

    let mut profiles = IndexMap::new();
    profiles.insert(TechId::new("solar").expect("valid id"), solar);
    profiles.insert(TechId::new("wind").expect("valid id"), wind);
    HorizonData::new(config.start, load, profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solar_of(d: &HorizonData) -> &[f64] {
        d.profile(&TechId::new("solar").unwrap()).unwrap()
    }

    #[test]
    fn same_seed_same_bits() {
        let cfg = SynthConfig {
            horizon: SynthHorizon::Weeks(3),
            ..Default::default()
        };
        assert_eq!(synthesize(&cfg, 42).unwrap(), synthesize(&cfg, 42).unwrap());
        assert_ne!(synthesize(&cfg, 42).unwrap(), synthesize(&cfg, 43).unwrap());
    }

    #[test]
    fn noiseless_solar_repeats_daily() {
        let cfg = SynthConfig {
            horizon: SynthHorizon::Weeks(2),
            noise: 0.0,
            solar_seasonal_amplitude: 0.0,
            yearly_amplitude: 0.0,
            ..Default::default()
        };
        let d = synthesize(&cfg, 7).unwrap();
        let s = solar_of(&d);
        for t in 24..s.len() {
            assert_eq!(s[t], s[t - 24]);
        }
        assert_eq!(s[0], 0.0);
        assert!(s[12] > 0.5);
    }

    #[test]
    fn solar_is_dark_at_night() {
        let d = synthesize(&SynthConfig::default(), 1).unwrap();
        for (t, &s) in solar_of(&d).iter().enumerate() {
            let h = t % 24;
            if !(6..18).contains(&h) {
                assert_eq!(s, 0.0);
            }
        }
    }

    #[test]
    fn one_year_solar_mean_regression() {
        let d = synthesize(&SynthConfig::default(), 42).unwrap();
        let s = solar_of(&d);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert_eq!(d.hours(), 8760);
        assert!((0.1..=0.35).contains(&mean), "mean solar CF {mean}");
    }

    #[test]
    fn rejects_bad_configs() {
        let cfg = SynthConfig {
            horizon: SynthHorizon::Years(0),
            ..Default::default()
        };
        assert!(synthesize(&cfg, 1).is_err());
        let cfg = SynthConfig {
            load_diurnal_amplitude: -0.1,
            ..Default::default()
        };
        assert!(synthesize(&cfg, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn any_seed_respects_ranges(seed in any::<u64>(), noise in 0.0f64..3.0) {
            let cfg = SynthConfig { horizon: SynthHorizon::Weeks(2), noise, ..Default::default() };
            // Construction re-validates, so success is the property.
            let d = synthesize(&cfg, seed).unwrap();
            prop_assert_eq!(d.hours(), 336);
        }
    }
}
