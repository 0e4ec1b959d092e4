//! Seeded synthetic demand with a configurable daily arrival-rate profile.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DemandSet, Direction, PassengerRecord};
use crate::{Error, Result};

/// One Gaussian bump of the arrival-rate curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Peak {
    /// Minute of day of the bump's centre.
    pub center: f64,
    /// Standard deviation in minutes.
    pub width: f64,
    /// Height relative to the base rate.
    pub weight: f64,
}

/// Relative popularity of stations as origins (stations `1..K`) and as
/// destinations (stations `2..=K`). Empty vectors mean uniform.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdProfile {
    #[serde(default)]
    pub origin: Vec<f64>,
    #[serde(default)]
    pub destination: Vec<f64>,
}

/// Synthetic demand description, read from the `[synthetic]` table of a config file.
///
/// The arrival rate at minute `t` is `base(t) + Σ peak_i(t)`, where `base` is the
/// piecewise-constant `rate_curve` (each `[minute, rate]` breakpoint holds until
/// the next) or the constant `baseline` when no curve is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub stations: u32,
    pub passengers: usize,
    pub window_start: f64,
    pub window_end: f64,
    #[serde(default)]
    pub rate_curve: Vec<(f64, f64)>,
    #[serde(default = "default_baseline")]
    pub baseline: f64,
    #[serde(default)]
    pub peaks: Vec<Peak>,
    #[serde(default)]
    pub od_profile: OdProfile,
    #[serde(default)]
    pub line_id: String,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default = "default_day_label")]
    pub day_label: String,
}

fn default_baseline() -> f64 {
    1.0
}

fn default_day_label() -> String {
    "synthetic".into()
}

impl SyntheticSpec {
    /// Uniform arrivals, uniform OD.
    pub fn uniform(stations: u32, passengers: usize, window_start: f64, window_end: f64) -> Self {
        Self {
            stations,
            passengers,
            window_start,
            window_end,
            rate_curve: Vec::new(),
            baseline: 1.0,
            peaks: Vec::new(),
            od_profile: OdProfile::default(),
            line_id: String::new(),
            direction: Direction::Up,
            day_label: default_day_label(),
        }
    }

    /// Relative arrival rate at minute `t`.
    pub fn rate_at(&self, t: f64) -> f64 {
        let base = if self.rate_curve.is_empty() {
            self.baseline
        } else {
            self.rate_curve
                .iter()
                .take_while(|(m, _)| *m <= t)
                .last()
                .map_or(self.rate_curve[0].1, |&(_, r)| r)
        };
        let bumps: f64 = self
            .peaks
            .iter()
            .map(|p| p.weight * (-0.5 * ((t - p.center) / p.width).powi(2)).exp())
            .sum();
        base + bumps
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("synthetic demand: {m}")));
        if self.stations < 2 {
            return bad(format!("stations must be >= 2, got {}", self.stations));
        }
        if !(self.window_start >= 0.0 && self.window_end <= super::DAY_MINUTES) {
            return bad("window must lie inside [0, 1440]".into());
        }
        if self.window_start >= self.window_end {
            return bad(format!(
                "empty service window [{}, {})",
                self.window_start, self.window_end
            ));
        }
        if self.baseline < 0.0 || self.rate_curve.iter().any(|&(_, r)| r.is_nan() || r < 0.0) {
            return bad("negative rates".into());
        }
        if self.rate_curve.windows(2).any(|w| w[0].0 >= w[1].0) {
            return bad("rate_curve breakpoints must be strictly increasing".into());
        }
        for p in &self.peaks {
            if p.width.is_nan() || p.width <= 0.0 || p.weight < 0.0 {
                return bad(format!(
                    "peak at {} needs width > 0 and weight >= 0",
                    p.center
                ));
            }
        }
        let k = self.stations as usize;
        for (name, w) in [
            ("origin", &self.od_profile.origin),
            ("destination", &self.od_profile.destination),
        ] {
            if !w.is_empty() && w.len() != k - 1 {
                return bad(format!(
                    "od_profile.{name} needs {} weights, got {}",
                    k - 1,
                    w.len()
                ));
            }
            if w.iter().any(|&x| x.is_nan() || x < 0.0) {
                return bad(format!("od_profile.{name} has a negative weight"));
            }
        }
        let origins = self.origin_weights();
        if origins.iter().all(|&w| w == 0.0) {
            return bad("od_profile.origin has no positive weight".into());
        }
        for (o, &w) in origins.iter().enumerate() {
            if w > 0.0
                && self
                    .destination_weights(o as u32 + 1)
                    .iter()
                    .all(|&x| x == 0.0)
            {
                return bad(format!("origin {} has no reachable destination", o + 1));
            }
        }
        Ok(())
    }

    fn origin_weights(&self) -> Vec<f64> {
        if self.od_profile.origin.is_empty() {
            vec![1.0; self.stations as usize - 1]
        } else {
            self.od_profile.origin.clone()
        }
    }

    /// Weights for destinations `origin+1..=K`.
    fn destination_weights(&self, origin: u32) -> Vec<f64> {
        (origin + 1..=self.stations)
            .map(|d| {
                if self.od_profile.destination.is_empty() {
                    1.0
                } else {
                    self.od_profile.destination[d as usize - 2]
                }
            })
            .collect()
    }

    /// Integrated rate over each whole minute of the window (Simpson's rule).
    fn minute_masses(&self) -> Vec<f64> {
        let start = self.window_start;
        let n = (self.window_end - start).ceil() as usize;
        (0..n)
            .map(|i| {
                let a = start + i as f64;
                let b = (a + 1.0).min(self.window_end);
                let mid = 0.5 * (a + b);
                (b - a) / 6.0 * (self.rate_at(a) + 4.0 * self.rate_at(mid) + self.rate_at(b - 1e-9))
            })
            .collect()
    }
}

/// Draws `spec.passengers` records. Arrival minutes are rounded to 1/1000 minute
/// so the CSV text is short and round-trips exactly.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<DemandSet> {
    spec.validate()?;
    let masses = spec.minute_masses();
    if masses.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Config(
            "synthetic demand: rate curve integrates to zero".into(),
        ));
    }
    let minute_dist =
        WeightedIndex::new(&masses).map_err(|e| Error::Config(format!("synthetic demand: {e}")))?;
    let origin_dist = WeightedIndex::new(spec.origin_weights())
        .map_err(|e| Error::Config(format!("synthetic demand: {e}")))?;
    let dest_dists: Vec<Option<WeightedIndex<f64>>> = (1..spec.stations)
        .map(|o| WeightedIndex::new(spec.destination_weights(o)).ok())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (spec.passengers.max(1) - 1).to_string().len().max(4);
    let mut records = Vec::with_capacity(spec.passengers);
    for i in 0..spec.passengers {
        let cell = minute_dist.sample(&mut rng);
        let lo = spec.window_start + cell as f64;
        let hi = (lo + 1.0).min(spec.window_end);
        let raw = lo + rng.random::<f64>() * (hi - lo);
        let mut arrival = (raw * 1000.0).round() / 1000.0;
        if arrival >= spec.window_end {
            arrival = lo;
        }
        let origin = origin_dist.sample(&mut rng) as u32 + 1;
        let dest_dist = dest_dists[origin as usize - 1]
            .as_ref()
            .expect("validated origins have destinations");
        let destination = origin + 1 + dest_dist.sample(&mut rng) as u32;
        records.push(PassengerRecord::new(
            format!("s{i:0width$}"),
            arrival,
            origin,
            destination,
        ));
    }
    Ok(DemandSet::new(records)?.with_meta(
        spec.line_id.clone(),
        spec.direction,
        spec.day_label.clone(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_arrivals_stay_in_window() {
        let spec = SyntheticSpec::uniform(10, 1000, 360.0, 1320.0);
        let d = generate_synthetic(&spec, 7).unwrap();
        assert_eq!(d.len(), 1000);
        for r in d.records() {
            assert!(r.arrival_minute >= 360.0 && r.arrival_minute < 1320.0);
            assert!(r.origin >= 1 && r.destination > r.origin && r.destination <= 10);
        }
    }

    #[test]
    fn same_seed_same_records() {
        let spec = SyntheticSpec::uniform(10, 1000, 360.0, 1320.0);
        assert_eq!(
            generate_synthetic(&spec, 7).unwrap(),
            generate_synthetic(&spec, 7).unwrap()
        );
        assert_ne!(
            generate_synthetic(&spec, 7).unwrap(),
            generate_synthetic(&spec, 8).unwrap()
        );
    }

    #[test]
    fn two_peak_profile_has_maxima_near_peaks() {
        let mut spec = SyntheticSpec::uniform(10, 20_000, 360.0, 1320.0);
        spec.baseline = 0.2;
        spec.peaks = vec![
            Peak {
                center: 450.0,
                width: 40.0,
                weight: 1.0,
            },
            Peak {
                center: 1050.0,
                width: 50.0,
                weight: 0.8,
            },
        ];
        let d = generate_synthetic(&spec, 3).unwrap();
        let hist = d.histogram(360.0, 1320.0, 30.0);
        let centre = |i: usize| 360.0 + 30.0 * i as f64 + 15.0;
        let argmax = |lo: usize, hi: usize| (lo..hi).max_by_key(|&i| hist[i]).unwrap();
        let (am, pm) = (argmax(0, 13), argmax(13, hist.len()));
        assert!((centre(am) - 450.0).abs() <= 30.0, "{hist:?}");
        assert!((centre(pm) - 1050.0).abs() <= 30.0, "{hist:?}");
        // both peaks stand well above the midday plateau
        let plateau = hist[8..18].iter().copied().max().unwrap();
        assert!(hist[am] > 3 * plateau && hist[pm] > 3 * plateau, "{hist:?}");
    }

    #[test]
    fn half_hour_counts_track_piecewise_rate() {
        let mut spec = SyntheticSpec::uniform(5, 30_000, 0.0, 120.0);
        spec.rate_curve = vec![(0.0, 1.0), (60.0, 3.0)];
        let d = generate_synthetic(&spec, 1).unwrap();
        let hist = d.histogram(0.0, 120.0, 30.0);
        // expected shares 1:1:3:3 of 8
        for (i, &c) in hist.iter().enumerate() {
            let p = if i < 2 { 1.0 / 8.0 } else { 3.0 / 8.0 };
            let mean = 30_000.0 * p;
            let sd = (30_000.0_f64 * p * (1.0 - p)).sqrt();
            assert!(
                (c as f64 - mean).abs() < 4.0 * sd,
                "bucket {i}: {c} vs {mean}"
            );
        }
    }

    #[test]
    fn od_profile_restricts_destinations() {
        let mut spec = SyntheticSpec::uniform(4, 500, 0.0, 60.0);
        spec.od_profile.origin = vec![1.0, 0.0, 0.0];
        spec.od_profile.destination = vec![0.0, 0.0, 1.0];
        let d = generate_synthetic(&spec, 2).unwrap();
        assert!(d
            .records()
            .iter()
            .all(|r| r.origin == 1 && r.destination == 4));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let ok = SyntheticSpec::uniform(10, 10, 360.0, 1320.0);
        let mut s = ok.clone();
        s.stations = 1;
        assert!(generate_synthetic(&s, 0).is_err());
        let mut s = ok.clone();
        s.window_end = 360.0;
        assert!(generate_synthetic(&s, 0).is_err());
        let mut s = ok.clone();
        s.rate_curve = vec![(360.0, -1.0)];
        assert!(generate_synthetic(&s, 0).is_err());
        let mut s = ok;
        s.od_profile.destination = vec![0.0; 9];
        assert!(generate_synthetic(&s, 0).is_err());
    }
}
