//! Origin-destination passenger demand for one direction of one line.
//!
//! A [`DemandSet`] is the simulator's only demand input. Each record carries
//! the minute a passenger appears at their origin stop and the stop they
//! travel to; alighting times are produced by the trip engine, not stored.

mod synthetic;

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use synthetic::{generate_synthetic, OdProfile, Peak, SyntheticSpec};

/// Minutes in a service day.
pub const DAY_MINUTES: f64 = 1440.0;

/// Half-width of the uniform jitter applied to upsampled duplicates.
pub const DUPLICATE_JITTER: f64 = 2.0;

/// Line direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Up,
    Down,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Up => f.write_str("up"),
            Direction::Down => f.write_str("down"),
        }
    }
}

/// One trip request: a passenger appearing at `origin` at `arrival_minute`,
/// bound for `destination`. Stations are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassengerRecord {
    pub id: String,
    pub arrival_minute: f64,
    pub origin: u32,
    pub destination: u32,
}

impl PassengerRecord {
    pub fn new(id: impl Into<String>, arrival_minute: f64, origin: u32, destination: u32) -> Self {
        Self {
            id: id.into(),
            arrival_minute,
            origin,
            destination,
        }
    }

    /// Checks the per-record invariants, returning a human-readable reason on failure.
    pub fn check(&self) -> std::result::Result<(), String> {
        if !self.arrival_minute.is_finite()
            || self.arrival_minute < 0.0
            || self.arrival_minute >= DAY_MINUTES
        {
            return Err(format!(
                "arrival_minute {} outside [0, 1440)",
                self.arrival_minute
            ));
        }
        if self.origin < 1 {
            return Err(format!("origin_station {} out of range", self.origin));
        }
        if self.destination < self.origin {
            return Err(format!(
                "destination before origin (origin {}, destination {})",
                self.origin, self.destination
            ));
        }
        if self.destination == self.origin {
            return Err(format!(
                "destination equals origin (station {})",
                self.origin
            ));
        }
        Ok(())
    }

    /// Number of segments ridden.
    #[inline]
    pub fn segments(&self) -> u32 {
        self.destination - self.origin
    }
}

/// Demand for one direction of one line, sorted by `(origin, arrival_minute, id)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DemandSet {
    records: Vec<PassengerRecord>,
    pub line_id: String,
    pub direction: Direction,
    pub day_label: String,
}

impl DemandSet {
    /// Validates and sorts `records`. Fails on an invariant violation or a duplicate id.
    pub fn new(mut records: Vec<PassengerRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            r.check()
                .map_err(|m| Error::Config(format!("record {}: {m}", r.id)))?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Config(format!("duplicate record id {}", r.id)));
            }
        }
        sort_records(&mut records);
        Ok(Self {
            records,
            ..Self::default()
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Copies line metadata from `other`.
    pub fn with_meta_of(mut self, other: &DemandSet) -> Self {
        self.line_id.clone_from(&other.line_id);
        self.direction = other.direction;
        self.day_label.clone_from(&other.day_label);
        self
    }

    pub fn with_meta(
        mut self,
        line_id: impl Into<String>,
        direction: Direction,
        day_label: impl Into<String>,
    ) -> Self {
        self.line_id = line_id.into();
        self.direction = direction;
        self.day_label = day_label.into();
        self
    }

    #[inline]
    pub fn records(&self) -> &[PassengerRecord] {
        &self.records
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.records.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Largest station index referenced, or 0 when empty.
    pub fn max_station(&self) -> u32 {
        self.records
            .iter()
            .map(|r| r.destination)
            .max()
            .unwrap_or(0)
    }

    /// Fails if any record references a station above `stations`.
    pub fn check_stations(&self, stations: u32) -> Result<()> {
        match self.records.iter().find(|r| r.destination > stations) {
            Some(r) => Err(Error::Config(format!(
                "record {}: destination_station {} exceeds station count {stations}",
                r.id, r.destination
            ))),
            None => Ok(()),
        }
    }

    /// Arrival counts per `bucket`-minute bin, starting at minute `start`.
    pub fn histogram(&self, start: f64, end: f64, bucket: f64) -> Vec<usize> {
        let n = ((end - start) / bucket).ceil().max(0.0) as usize;
        let mut counts = vec![0; n];
        for r in &self.records {
            if r.arrival_minute >= start && r.arrival_minute < end {
                let i = ((r.arrival_minute - start) / bucket) as usize;
                counts[i.min(n - 1)] += 1;
            }
        }
        counts
    }

    /// Writes the demand CSV (`id,arrival_minute,origin_station,destination_station`).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.id.as_str(),
                &r.arrival_minute.to_string(),
                &r.origin.to_string(),
                &r.destination.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sort_records(records: &mut [PassengerRecord]) {
    records.sort_by(|a, b| {
        a.origin
            .cmp(&b.origin)
            .then(a.arrival_minute.total_cmp(&b.arrival_minute))
            .then_with(|| a.id.cmp(&b.id))
    });
}

/// Column names of the demand CSV, in order.
pub const CSV_HEADER: [&str; 4] = [
    "id",
    "arrival_minute",
    "origin_station",
    "destination_station",
];

/// Loads a demand CSV. When `stations` is given, destinations above it are rejected.
pub fn load_demand(path: impl AsRef<Path>, stations: Option<u32>) -> Result<DemandSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_demand(file, path, stations)
}

/// Parses demand CSV from a reader; `path` is used only in error messages.
pub fn read_demand<R: Read>(reader: R, path: &Path, stations: Option<u32>) -> Result<DemandSet> {
    let row_err = |row: usize, message: String| Error::Row {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();

    let header = match rows.next() {
        None => return Ok(DemandSet::empty()),
        Some(h) => h?,
    };
    let header: Vec<&str> = header.iter().collect();
    if header != CSV_HEADER {
        return Err(row_err(
            1,
            format!(
                "expected header {:?}, found {:?}",
                CSV_HEADER.join(","),
                header.join(",")
            ),
        ));
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rows.enumerate() {
        let line = i + 2;
        let row = row?;
        if row.len() != 4 {
            return Err(row_err(
                line,
                format!("expected 4 fields, found {}", row.len()),
            ));
        }
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(row_err(line, "field id: empty".into()));
        }
        let arrival: f64 = row[1].parse().map_err(|_| {
            row_err(
                line,
                format!("field arrival_minute: cannot parse {:?}", &row[1]),
            )
        })?;
        let origin: u32 = row[2].parse().map_err(|_| {
            row_err(
                line,
                format!("field origin_station: cannot parse {:?}", &row[2]),
            )
        })?;
        let destination: u32 = row[3].parse().map_err(|_| {
            row_err(
                line,
                format!("field destination_station: cannot parse {:?}", &row[3]),
            )
        })?;
        let rec = PassengerRecord::new(id, arrival, origin, destination);
        rec.check().map_err(|m| row_err(line, m))?;
        if let Some(k) = stations {
            if destination > k {
                return Err(row_err(
                    line,
                    format!("field destination_station: {destination} out of range 2..={k}"),
                ));
            }
        }
        if !seen.insert(rec.id.clone()) {
            return Err(row_err(line, format!("field id: duplicate {:?}", rec.id)));
        }
        records.push(rec);
    }
    sort_records(&mut records);
    Ok(DemandSet {
        records,
        ..DemandSet::default()
    })
}

/// Moves every arrival in `[window.0, window.1)` by `shift` minutes.
pub fn shift_peak(demand: &DemandSet, window: (f64, f64), shift: f64) -> Result<DemandSet> {
    let (start, end) = window;
    if !(0.0..=DAY_MINUTES).contains(&start) || !(0.0..=DAY_MINUTES).contains(&end) || start > end {
        return Err(Error::Transform(format!(
            "shift window [{start}, {end}) must lie inside the day"
        )));
    }
    let mut records = demand.records.clone();
    for r in &mut records {
        if r.arrival_minute >= start && r.arrival_minute < end {
            let moved = r.arrival_minute + shift;
            if !(0.0..DAY_MINUTES).contains(&moved) {
                return Err(Error::Transform(format!(
                    "shift {shift} moves record {} from {} outside the day",
                    r.id, r.arrival_minute
                )));
            }
            r.arrival_minute = moved;
        }
    }
    sort_records(&mut records);
    Ok(DemandSet {
        records,
        ..DemandSet::default()
    }
    .with_meta_of(demand))
}

/// Thins (`rate < 1`) or inflates (`rate > 1`) demand.
///
/// Below one each record survives independently with probability `rate`. Above
/// one every record is kept and receives `floor(rate - 1)` duplicates plus one
/// more with probability `frac(rate - 1)`; duplicates get fresh ids and a
/// uniform ±2 minute arrival jitter, clamped to the day.
pub fn resample(demand: &DemandSet, rate: f64, seed: u64) -> Result<DemandSet> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Transform(format!(
            "sampling rate must be > 0, got {rate}"
        )));
    }
    if rate == 1.0 {
        return Ok(demand.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity((demand.len() as f64 * rate).ceil() as usize);
    if rate < 1.0 {
        for r in &demand.records {
            if rng.random::<f64>() < rate {
                records.push(r.clone());
            }
        }
    } else {
        let extra = rate - 1.0;
        let whole = extra.floor() as usize;
        let frac = extra - extra.floor();
        let mut ids: HashSet<String> = demand.records.iter().map(|r| r.id.clone()).collect();
        for r in &demand.records {
            records.push(r.clone());
            let copies = whole + usize::from(rng.random::<f64>() < frac);
            for c in 0..copies {
                let jitter = rng.random_range(-DUPLICATE_JITTER..=DUPLICATE_JITTER);
                let arrival = (r.arrival_minute + jitter).clamp(0.0, DAY_MINUTES - 1e-6);
                let mut id = format!("{}~{}", r.id, c + 1);
                while ids.contains(&id) {
                    id.push('~');
                }
                ids.insert(id.clone());
                records.push(PassengerRecord::new(id, arrival, r.origin, r.destination));
            }
        }
    }
    sort_records(&mut records);
    Ok(DemandSet {
        records,
        ..DemandSet::default()
    }
    .with_meta_of(demand))
}
