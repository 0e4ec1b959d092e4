use std::ops::Range;

use crate::line_model::Minute;
use crate::od_data::DemandSet;
use crate::{Error, Result};

/// Per-station FIFO queues over a borrowed [`DemandSet`].
///
/// Because demand is sorted by `(origin, arrival)` and boarding is FIFO, the
/// passengers of one station occupy a contiguous slice of the demand and the
/// boarded ones are always a prefix of it. A queue is therefore a `head`
/// index: records before it have boarded; records from it onward whose
/// arrival is not after the current time are waiting; later ones have not
/// materialised yet.
#[derive(Debug, Clone)]
pub struct StationQueues<'a> {
    demand: &'a DemandSet,
    ranges: Vec<Range<usize>>,
    heads: Vec<usize>,
    boarded_at: Vec<f64>,
    last_commit: Option<Minute>,
}

impl<'a> StationQueues<'a> {
    /// Builds empty queues for a line of `stations` stops.
    pub fn new(demand: &'a DemandSet, stations: u32) -> Result<Self> {
        demand.check_stations(stations)?;
        let records = demand.records();
        let mut ranges = Vec::with_capacity(stations as usize);
        let mut start = 0;
        for k in 1..=stations {
            let end = start + records[start..].partition_point(|r| r.origin <= k);
            ranges.push(start..end);
            start = end;
        }
        let heads = ranges.iter().map(|r| r.start).collect();
        Ok(Self {
            demand,
            ranges,
            heads,
            boarded_at: vec![f64::NAN; records.len()],
            last_commit: None,
        })
    }

    #[inline]
    pub fn demand(&self) -> &'a DemandSet {
        self.demand
    }

    #[inline]
    pub fn stations(&self) -> u32 {
        self.ranges.len() as u32
    }

    /// Demand indices of passengers originating at station `k` (1-based).
    #[inline]
    pub fn station_range(&self, k: u32) -> Range<usize> {
        self.ranges[k as usize - 1].clone()
    }

    /// Index of the first passenger at station `k` who has not boarded.
    #[inline]
    pub fn head(&self, k: u32) -> usize {
        self.heads[k as usize - 1]
    }

    /// One past the last passenger at station `k` who has arrived by minute `t`.
    #[inline]
    pub fn arrived_end(&self, k: u32, t: f64) -> usize {
        let r = &self.ranges[k as usize - 1];
        let head = self.heads[k as usize - 1];
        head + self.demand.records()[head..r.end].partition_point(|p| p.arrival_minute <= t)
    }

    /// Passengers waiting at station `k` at minute `t` given every committed trip.
    ///
    /// Counts arrivals up to `t` minus boardings that happen by `t`, so buses
    /// already committed but not yet at the station do not remove anyone early.
    pub fn waiting_at(&self, k: u32, t: f64) -> usize {
        let r = self.ranges[k as usize - 1].clone();
        let records = &self.demand.records()[r.clone()];
        let arrived = records.partition_point(|p| p.arrival_minute <= t);
        let head = self.heads[k as usize - 1] - r.start;
        let boarded = self.boarded_at[r.start..r.start + head].partition_point(|&b| b <= t);
        arrived - boarded
    }

    /// Passengers at station `k` arriving in `(t, t + horizon]`.
    pub fn arrivals_between(&self, k: u32, t: f64, horizon: f64) -> usize {
        let records = &self.demand.records()[self.ranges[k as usize - 1].clone()];
        let lo = records.partition_point(|p| p.arrival_minute <= t);
        let hi = records.partition_point(|p| p.arrival_minute <= t + horizon);
        hi - lo
    }

    /// Passengers never boarded.
    pub fn unserved(&self) -> usize {
        self.ranges
            .iter()
            .zip(&self.heads)
            .map(|(r, &h)| r.end - h)
            .sum()
    }

    /// Passengers boarded so far.
    pub fn served(&self) -> usize {
        self.demand.len() - self.unserved()
    }

    /// Last committed departure, if any.
    #[inline]
    pub fn last_commit(&self) -> Option<Minute> {
        self.last_commit
    }

    pub(crate) fn commit(&mut self, trip: &super::TripResult) -> Result<()> {
        if let Some(prev) = self.last_commit {
            if trip.depart_minute < prev {
                return Err(Error::Simulation(format!(
                    "trip at {} committed after trip at {prev}",
                    trip.depart_minute
                )));
            }
        }
        for b in &trip.served {
            let k = b.origin as usize - 1;
            if b.record != self.heads[k] {
                return Err(Error::Simulation(format!(
                    "inconsistent queue state at station {}: expected record {}, trip boards {}",
                    b.origin, self.heads[k], b.record
                )));
            }
            self.boarded_at[b.record] = b.boarded;
            self.heads[k] += 1;
        }
        self.last_commit = Some(trip.depart_minute);
        Ok(())
    }
}
