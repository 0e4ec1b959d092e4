//! Deterministic trip engine.
//!
//! A trip leaves the terminus at a whole minute and visits stations `1..=K` at
//! the times given by the travel-time table. At every station passengers bound
//! there alight first; then waiting passengers who arrived no later than the
//! bus board in FIFO order until the bus holds `capacity` people. Whoever is
//! still eligible but left behind is counted as stranded by that trip.

mod queues;
mod timetable;

use serde::{Deserialize, Serialize};

use crate::line_model::{LineConfig, Minute, TravelTimeTable};
use crate::od_data::DemandSet;
use crate::{Error, Result};

pub use queues::StationQueues;
pub use timetable::{GapViolation, Timetable};

/// Width of the capacity-series buckets, minutes.
pub const BUCKET_MINUTES: Minute = 30;

/// One passenger carried by a trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boarding {
    /// Index into [`DemandSet::records`].
    pub record: usize,
    /// Arrival at the origin station (`t_a`).
    pub arrival: f64,
    /// Boarding time (`t_b`), the bus's arrival at the origin.
    pub boarded: f64,
    pub origin: u32,
    pub destination: u32,
}

/// Outcome of one departure. Per-station vectors are indexed by `station - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripResult {
    pub depart_minute: Minute,
    /// Bus arrival time at each station (length `K`).
    pub station_times: Vec<f64>,
    /// `l_m^k`, length `K`.
    pub boardings: Vec<u32>,
    /// `h_m^k`, length `K`.
    pub alightings: Vec<u32>,
    /// `ds_mk` for `k = 1..K-1`.
    pub stranded: Vec<u32>,
    /// Load on segment `k → k+1`, length `K − 1`.
    pub onboard: Vec<u32>,
    /// `C_max^m`.
    pub max_onboard: u32,
    /// `W_m`, minutes.
    pub waiting_total: f64,
    /// `o_m`, passenger-segments.
    pub capacity_used: u64,
    pub served: Vec<Boarding>,
}

impl TripResult {
    /// `ds_m`.
    #[inline]
    pub fn stranding_total(&self) -> u64 {
        stranding_total(self)
    }

    #[inline]
    pub fn boarded_count(&self) -> usize {
        self.served.len()
    }
}

/// `ds_m = Σ_k ds_mk`.
pub fn stranding_total(trip: &TripResult) -> u64 {
    trip.stranded.iter().map(|&s| u64::from(s)).sum()
}

fn check_trip_inputs(
    queues: &StationQueues<'_>,
    line: &LineConfig,
    tt: &TravelTimeTable,
    m: Minute,
) -> Result<()> {
    if m < line.service_start || m > line.service_end {
        return Err(Error::Simulation(format!(
            "departure {m} outside service window [{}, {}]",
            line.service_start, line.service_end
        )));
    }
    if queues.stations() != line.stations || tt.stations() != line.stations {
        return Err(Error::Simulation(format!(
            "inconsistent queue state: queues have {} stations, travel table {}, line {}",
            queues.stations(),
            tt.stations(),
            line.stations
        )));
    }
    Ok(())
}

/// Runs a trip against `queues` without touching them, with an explicit on-board limit.
///
/// Performs no window or shape checks.
pub fn run_trip(
    queues: &StationQueues<'_>,
    tt: &TravelTimeTable,
    depart_m: Minute,
    capacity: u32,
) -> TripResult {
    let stations = queues.stations() as usize;
    let offsets = tt.offsets(depart_m);
    let records = queues.demand().records();

    let mut trip = TripResult {
        depart_minute: depart_m,
        station_times: offsets.iter().map(|o| f64::from(depart_m) + o).collect(),
        boardings: vec![0; stations],
        alightings: vec![0; stations],
        stranded: vec![0; stations - 1],
        onboard: vec![0; stations - 1],
        max_onboard: 0,
        waiting_total: 0.0,
        capacity_used: 0,
        served: Vec::new(),
    };
    let mut bound_for = vec![0u32; stations + 1];
    let mut load = 0u32;
    for k in 1..=stations as u32 {
        let i = k as usize - 1;
        let t = trip.station_times[i];
        let off = bound_for[k as usize];
        trip.alightings[i] = off;
        load -= off;
        if i + 1 == stations {
            break;
        }
        let head = queues.head(k);
        let end = queues.arrived_end(k, t);
        let eligible = (end - head) as u32;
        let boarded = eligible.min(capacity.saturating_sub(load));
        for (j, p) in records[head..head + boarded as usize].iter().enumerate() {
            trip.waiting_total += t - p.arrival_minute;
            bound_for[p.destination as usize] += 1;
            trip.served.push(Boarding {
                record: head + j,
                arrival: p.arrival_minute,
                boarded: t,
                origin: p.origin,
                destination: p.destination,
            });
        }
        load += boarded;
        trip.boardings[i] = boarded;
        trip.stranded[i] = eligible - boarded;
        trip.onboard[i] = load;
        trip.max_onboard = trip.max_onboard.max(load);
        trip.capacity_used += u64::from(load);
    }
    trip
}

/// Simulates the trip leaving at `depart_m`. With `commit` the boarders leave
/// their queues; without it the call is a pure lookahead.
pub fn simulate_trip(
    queues: &mut StationQueues<'_>,
    line: &LineConfig,
    tt: &TravelTimeTable,
    depart_m: Minute,
    commit: bool,
) -> Result<TripResult> {
    let trip = lookahead(queues, line, tt, depart_m)?;
    if commit {
        queues.commit(&trip)?;
    }
    Ok(trip)
}

/// Read-only variant of [`simulate_trip`].
pub fn lookahead(
    queues: &StationQueues<'_>,
    line: &LineConfig,
    tt: &TravelTimeTable,
    depart_m: Minute,
) -> Result<TripResult> {
    check_trip_inputs(queues, line, tt, depart_m)?;
    if let Some(prev) = queues.last_commit() {
        if depart_m < prev {
            return Err(Error::Simulation(format!(
                "inconsistent queue state: trip at {depart_m} precedes committed trip at {prev}"
            )));
        }
    }
    Ok(run_trip(queues, tt, depart_m, line.capacity))
}

/// ND / AWT / NSP plus the unserved count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub nd: usize,
    /// Mean minutes from arrival to boarding over served passengers.
    pub awt: f64,
    /// Stranding events summed over trips and stations.
    pub nsp: u64,
    pub unserved: usize,
    pub served: usize,
    pub total_wait: f64,
}

/// Provided and consumed capacity-units for departures in one bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityBucket {
    pub minute_bucket: Minute,
    pub provided: f64,
    pub consumed: f64,
}

/// Everything [`evaluate_timetable`] produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub trips: Vec<TripResult>,
    pub capacity_series: Vec<CapacityBucket>,
}

/// Aggregates committed trips into metrics.
pub fn metrics_from_trips(trips: &[TripResult], unserved: usize) -> Metrics {
    let served: usize = trips.iter().map(TripResult::boarded_count).sum();
    let total_wait: f64 = trips.iter().map(|t| t.waiting_total).sum();
    Metrics {
        nd: trips.len(),
        awt: if served == 0 {
            0.0
        } else {
            total_wait / served as f64
        },
        nsp: trips.iter().map(stranding_total).sum(),
        unserved,
        served,
        total_wait,
    }
}

/// Half-hour series of `Σ e_m` and `Σ o_m` over the service window.
pub fn capacity_series(line: &LineConfig, trips: &[TripResult]) -> Vec<CapacityBucket> {
    let first = line.service_start / BUCKET_MINUTES;
    let last = line.service_end / BUCKET_MINUTES;
    let mut series: Vec<CapacityBucket> = (first..=last)
        .map(|b| CapacityBucket {
            minute_bucket: b * BUCKET_MINUTES,
            provided: 0.0,
            consumed: 0.0,
        })
        .collect();
    for t in trips {
        let b = (t.depart_minute / BUCKET_MINUTES - first) as usize;
        series[b].provided += line.capacity_at(t.depart_minute);
        series[b].consumed += t.capacity_used as f64;
    }
    series
}

/// Simulates every departure in order against one evolving set of queues.
pub fn evaluate_timetable(
    demand: &DemandSet,
    line: &LineConfig,
    tt: &TravelTimeTable,
    timetable: &Timetable,
) -> Result<Evaluation> {
    let mut queues = StationQueues::new(demand, line.stations)?;
    let mut trips = Vec::with_capacity(timetable.len());
    for &m in timetable.departures() {
        trips.push(simulate_trip(&mut queues, line, tt, m, true)?);
    }
    let metrics = metrics_from_trips(&trips, queues.unserved());
    let capacity_series = capacity_series(line, &trips);
    Ok(Evaluation {
        metrics,
        trips,
        capacity_series,
    })
}
