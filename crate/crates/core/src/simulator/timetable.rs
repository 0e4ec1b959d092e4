use std::io::{Read, Write};
use std::path::Path;

use crate::line_model::{LineConfig, Minute};
use crate::{Error, Result};

/// Strictly increasing departure minutes from the terminus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Timetable {
    departures: Vec<Minute>,
}

/// A headway outside `[T_min, T_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapViolation {
    /// Departure that closes the offending gap.
    pub at: Minute,
    pub gap: Minute,
}

impl Timetable {
    pub fn new(departures: Vec<Minute>) -> Result<Self> {
        if let Some(w) = departures.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Timetable(format!(
                "departures must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { departures })
    }

    #[inline]
    pub fn departures(&self) -> &[Minute] {
        &self.departures
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.departures.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.departures.is_empty()
    }

    /// Headways outside the line's bounds. The final gap is exempt from the lower bound.
    pub fn gap_violations(&self, line: &LineConfig) -> Vec<GapViolation> {
        let n = self.departures.len();
        self.departures
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| {
                let gap = w[1] - w[0];
                let last = i + 2 == n;
                let too_short = gap < line.min_interval && !last;
                (too_short || gap > line.max_interval).then_some(GapViolation { at: w[1], gap })
            })
            .collect()
    }

    /// Checks fixed endpoints and headway bounds.
    pub fn validate_for(&self, line: &LineConfig) -> Result<()> {
        if self.departures.first() != Some(&line.service_start)
            || self.departures.last() != Some(&line.service_end)
        {
            return Err(Error::Timetable(format!(
                "timetable must start at {} and end at {}",
                line.service_start, line.service_end
            )));
        }
        if let Some(v) = self.gap_violations(line).first() {
            return Err(Error::Timetable(format!(
                "gap of {} minutes before departure {} is outside [{}, {}]",
                v.gap, v.at, line.min_interval, line.max_interval
            )));
        }
        Ok(())
    }

    /// Reads a timetable CSV with header `depart_minute`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["depart_minute"] {
            return Err(Error::Timetable(format!(
                "expected header depart_minute, found {:?}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut departures = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let m = row[0].parse::<Minute>().map_err(|_| {
                Error::Timetable(format!(
                    "row {}: cannot parse depart_minute {:?}",
                    i + 2,
                    &row[0]
                ))
            })?;
            departures.push(m);
        }
        Self::new(departures)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["depart_minute"])?;
        for m in &self.departures {
            w.write_record([m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
