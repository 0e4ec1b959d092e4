//! Static description of one direction of a bus line.

use serde::{Deserialize, Serialize};

use crate::od_data::Direction;
use crate::{Error, Result};

/// Departure decisions are taken on whole minutes of the day.
pub type Minute = u32;

/// Default seats per bus.
pub const DEFAULT_SEATS: u32 = 30;
/// Default on-board limit (`1.5 × 30`).
pub const DEFAULT_CAPACITY: u32 = 45;
/// Default comfort coefficient.
pub const DEFAULT_ALPHA: f64 = 1.5;
/// Default minimum headway, minutes.
pub const DEFAULT_MIN_INTERVAL: Minute = 2;
/// Default maximum headway, minutes.
pub const DEFAULT_MAX_INTERVAL: Minute = 15;

/// One direction of a line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    #[serde(default)]
    pub line_id: String,
    #[serde(default)]
    pub direction: Direction,
    /// Number of stations `K`, terminus included.
    pub stations: u32,
    #[serde(default = "default_seats")]
    pub seats: u32,
    /// Maximum passengers on board.
    #[serde(default = "default_capacity")]
    pub capacity: u32,
    #[serde(default = "default_alpha")]
    pub comfort_coefficient: f64,
    pub service_start: Minute,
    pub service_end: Minute,
    #[serde(default = "default_min_interval")]
    pub min_interval: Minute,
    #[serde(default = "default_max_interval")]
    pub max_interval: Minute,
}

fn default_seats() -> u32 {
    DEFAULT_SEATS
}
fn default_capacity() -> u32 {
    DEFAULT_CAPACITY
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_min_interval() -> Minute {
    DEFAULT_MIN_INTERVAL
}
fn default_max_interval() -> Minute {
    DEFAULT_MAX_INTERVAL
}

impl LineConfig {
    /// A line with default seats, capacity, α and interval bounds.
    pub fn new(stations: u32, service_start: Minute, service_end: Minute) -> Self {
        Self {
            line_id: String::new(),
            direction: Direction::Up,
            stations,
            seats: DEFAULT_SEATS,
            capacity: DEFAULT_CAPACITY,
            comfort_coefficient: DEFAULT_ALPHA,
            service_start,
            service_end,
            min_interval: DEFAULT_MIN_INTERVAL,
            max_interval: DEFAULT_MAX_INTERVAL,
        }
    }

    pub fn with_intervals(mut self, min_interval: Minute, max_interval: Minute) -> Self {
        self.min_interval = min_interval;
        self.max_interval = max_interval;
        self
    }

    pub fn with_capacity(mut self, seats: u32, capacity: u32) -> Self {
        self.seats = seats;
        self.capacity = capacity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("line {}: {m}", self.line_id)));
        if self.stations < 2 {
            return bad(format!("stations must be >= 2, got {}", self.stations));
        }
        if self.seats == 0 || self.capacity < self.seats {
            return bad(format!(
                "need 0 < seats <= capacity, got seats {} capacity {}",
                self.seats, self.capacity
            ));
        }
        if !(self.comfort_coefficient > 0.0 && self.comfort_coefficient.is_finite()) {
            return bad("comfort_coefficient must be > 0".into());
        }
        if self.service_start >= self.service_end || self.service_end > 1440 {
            return bad(format!(
                "service window [{}, {}] is empty or leaves the day",
                self.service_start, self.service_end
            ));
        }
        if self.min_interval < 1
            || self.min_interval > self.max_interval
            || self.max_interval > self.window()
        {
            return bad(format!(
                "need 1 <= min_interval <= max_interval <= {}, got {}..{}",
                self.window(),
                self.min_interval,
                self.max_interval
            ));
        }
        Ok(())
    }

    /// Length of the service window in minutes.
    #[inline]
    pub fn window(&self) -> Minute {
        self.service_end.saturating_sub(self.service_start)
    }

    /// Number of segments `K − 1`.
    #[inline]
    pub fn segments(&self) -> usize {
        self.stations as usize - 1
    }

    /// Capacity-units `e_m` offered by one departure at minute `_m`.
    ///
    /// Constant under the static comfort model; kept per-minute so that
    /// provided-capacity series sum it over departures.
    #[inline]
    pub fn capacity_at(&self, _m: Minute) -> f64 {
        trip_capacity(self)
    }
}

/// `α × C × (K − 1)`: capacity-units offered by one departure.
pub fn trip_capacity(config: &LineConfig) -> f64 {
    config.comfort_coefficient * f64::from(config.seats) * (f64::from(config.stations) - 1.0)
}

/// Per-segment travel times for departures from `start` until the next band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelBand {
    pub start: Minute,
    /// `K − 1` segment times, or a single value applied to every segment.
    pub segments: Vec<f64>,
}

/// Piecewise-constant travel times `t_m^k` keyed by terminus departure minute.
///
/// Dwell time is folded into the segment times.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeTable {
    starts: Vec<Minute>,
    /// Prefix sums per band; `offsets[b][k-1]` is the time from station 1 to station k.
    offsets: Vec<Vec<f64>>,
}

impl TravelTimeTable {
    /// Same time on every segment at every minute.
    pub fn constant(stations: u32, minutes: f64) -> Result<Self> {
        Self::from_bands(
            stations,
            &[TravelBand {
                start: 0,
                segments: vec![minutes],
            }],
        )
    }

    pub fn from_bands(stations: u32, bands: &[TravelBand]) -> Result<Self> {
        if stations < 2 {
            return Err(Error::Config(format!(
                "stations must be >= 2, got {stations}"
            )));
        }
        if bands.is_empty() {
            return Err(Error::Config(
                "travel time table needs at least one band".into(),
            ));
        }
        let segs = stations as usize - 1;
        let mut sorted: Vec<&TravelBand> = bands.iter().collect();
        sorted.sort_by_key(|b| b.start);
        if sorted.windows(2).any(|w| w[0].start == w[1].start) {
            return Err(Error::Config("travel bands share a start minute".into()));
        }
        let mut starts = Vec::with_capacity(bands.len());
        let mut offsets = Vec::with_capacity(bands.len());
        for band in sorted {
            let times: Vec<f64> = match band.segments.len() {
                1 => vec![band.segments[0]; segs],
                n if n == segs => band.segments.clone(),
                n => {
                    return Err(Error::Config(format!(
                        "band at {} has {n} segment times, expected 1 or {segs}",
                        band.start
                    )))
                }
            };
            if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(Error::Config(format!(
                    "band at {} has a negative or non-finite travel time",
                    band.start
                )));
            }
            let mut acc = 0.0;
            let mut prefix = Vec::with_capacity(segs + 1);
            prefix.push(0.0);
            for t in times {
                acc += t;
                prefix.push(acc);
            }
            starts.push(band.start);
            offsets.push(prefix);
        }
        Ok(Self { starts, offsets })
    }

    /// Number of stations the table was built for.
    pub fn stations(&self) -> u32 {
        self.offsets[0].len() as u32
    }

    #[inline]
    fn band(&self, m: Minute) -> &[f64] {
        let i = self.starts.partition_point(|&s| s <= m).saturating_sub(1);
        &self.offsets[i]
    }

    /// `t_m^k`: time from station `k` to `k + 1` for a bus leaving the terminus at `m`.
    pub fn travel_time(&self, m: Minute, k: u32) -> Result<f64> {
        let off = self.band(m);
        if k < 1 || k as usize >= off.len() {
            return Err(Error::Simulation(format!(
                "segment {k} out of range 1..{}",
                off.len()
            )));
        }
        Ok(off[k as usize] - off[k as usize - 1])
    }

    /// Offsets from departure to each station (index 0 is station 1, always 0).
    #[inline]
    pub fn offsets(&self, m: Minute) -> &[f64] {
        self.band(m)
    }

    /// Fails if some bus leaving in `[start, end)` would be overtaken by the next minute's bus.
    pub fn check_no_overtaking(&self, start: Minute, end: Minute) -> Result<()> {
        for m in start..end {
            let (a, b) = (self.band(m), self.band(m + 1));
            if let Some(k) = (0..a.len()).find(|&k| f64::from(m) + a[k] > f64::from(m + 1) + b[k]) {
                return Err(Error::Config(format!(
                    "travel times let the bus leaving at {} overtake the one leaving at {m} before station {}",
                    m + 1,
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

/// Arrival minute at station `k` of a bus leaving the terminus at `depart_m`.
pub fn arrival_minute(tt: &TravelTimeTable, depart_m: Minute, k: u32) -> Result<f64> {
    let off = tt.offsets(depart_m);
    if k < 1 || k as usize > off.len() {
        return Err(Error::Simulation(format!(
            "station {k} out of range 1..={}",
            off.len()
        )));
    }
    Ok(f64::from(depart_m) + off[k as usize - 1])
}

/// The `[line]` table of a config file: line fields plus travel-time bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    #[serde(flatten)]
    pub config: LineConfig,
    pub travel_bands: Vec<TravelBand>,
}

impl LineSpec {
    /// Validates the line and builds a travel-time table that respects FIFO order.
    pub fn build(&self) -> Result<(LineConfig, TravelTimeTable)> {
        self.config.validate()?;
        let tt = TravelTimeTable::from_bands(self.config.stations, &self.travel_bands)?;
        tt.check_no_overtaking(self.config.service_start, self.config.service_end)?;
        Ok((self.config.clone(), tt))
    }
}
